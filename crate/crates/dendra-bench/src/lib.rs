//! Helpers for benchmarking the clustering engine on synthetic inputs.

use dendra::{Kind, ProximityMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic random distance matrix with labels `o1..oN`, entries
/// drawn uniformly from (0, 100).
pub fn random_distance_matrix(n: usize, seed: u64) -> ProximityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<String> = (1..=n).map(|i| format!("o{i}")).collect();
    let mut values = Vec::with_capacity(n * (n - 1) / 2);
    for _ in 0..n * (n - 1) / 2 {
        values.push(rng.gen_range(0.01..100.0));
    }
    ProximityMatrix::from_lower(labels, values, Kind::Distance)
        .expect("generated matrix is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use dendra::{cluster, GroupMode, Method, MethodSpec, Weighting};

    #[test]
    fn generator_is_deterministic_and_clusterable() {
        let a = random_distance_matrix(32, 7);
        let b = random_distance_matrix(32, 7);
        assert_eq!(a.lower_triangle(), b.lower_triangle());
        let spec = MethodSpec::new(Method::Arithmetic, Weighting::Unweighted).unwrap();
        let d = cluster(&a, &spec, GroupMode::Variable, None).unwrap();
        assert_eq!(d.n, 32);
        assert_eq!(d.root.leaf_count, 32);
    }
}
