//! Seeded random test instances: connected subcritical graph operators with a
//! signed potential.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::operator::{DiscreteOperator, Edge, Graph};

pub struct Instance {
    pub op: DiscreteOperator,
    /// Signed potential in `[-1, 1]`, zero on the boundary.
    pub v: Vec<f64>,
}

/// Random connected graph on `n` interior nodes `0..n` with boundary nodes
/// `n`, `n+1`. Conductances and measures lie in `[0.5, 2]`, the potential in
/// `[0, 0.5]`. With `drift`, gradient-form drift in `[0, 0.3]` is added on
/// random interior edges; row sums stay nonnegative so the form matrix is a
/// nonsingular M-matrix.
pub fn random_subcritical(seed: u64, n: usize, drift: bool) -> Instance {
    assert!(n >= 1, "need an interior node");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = BTreeSet::new();
    for i in 1..n {
        pairs.insert((i - 1, i));
    }
    for _ in 0..n / 2 {
        let (x, y) = (rng.random_range(0..n), rng.random_range(0..n));
        if x != y {
            pairs.insert((x.min(y), x.max(y)));
        }
    }
    let interior_pairs: Vec<(usize, usize)> = pairs.iter().copied().collect();
    pairs.insert((0, n));
    pairs.insert((n - 1, n + 1));
    let extra = rng.random_range(0..n);
    pairs.insert((extra, n + 1));
    let edges = pairs.iter().map(|&(x, y)| Edge { x, y, conductance: rng.random_range(0.5..2.0) }).collect();
    let measure = (0..n + 2).map(|_| rng.random_range(0.5..2.0)).collect();
    let graph = Arc::new(Graph::new(n + 2, edges, measure, &[n, n + 1]).expect("valid random graph"));
    let potential: Vec<f64> = (0..n + 2).map(|x| if x < n { rng.random_range(0.0..0.5) } else { 0.0 }).collect();
    let mut drift_triples = Vec::new();
    if drift {
        for &(x, y) in &interior_pairs {
            if rng.random_bool(0.5) {
                let (a, b) = if rng.random_bool(0.5) { (x, y) } else { (y, x) };
                drift_triples.push((a, b, rng.random_range(0.0..0.3)));
            }
        }
    }
    let op = DiscreteOperator::new(graph, potential, &drift_triples, &[]).expect("valid random operator");
    let v = (0..n + 2).map(|x| if x < n { rng.random_range(-1.0..1.0) } else { 0.0 }).collect();
    Instance { op, v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::dirichlet_green;
    use crate::operator::Domain;

    #[test]
    fn instances_are_subcritical() {
        for seed in 0..20 {
            let inst = random_subcritical(seed, 12, seed % 2 == 0);
            assert!(dirichlet_green(&inst.op, &Domain::interior(inst.op.graph())).is_ok());
        }
    }
}
