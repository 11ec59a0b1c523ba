use std::collections::BTreeSet;

use rand::Rng;
use thiserror::Error;

use crate::ids::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot sample {requested} challengers from a pool of {pool}")]
pub struct SampleError {
    pub requested: usize,
    pub pool: usize,
}

/// Uniform sample of `k` distinct pool members.
pub fn sample_challengers<R: Rng + ?Sized>(
    pool: &[NodeId],
    k: usize,
    rng: &mut R,
) -> Result<BTreeSet<NodeId>, SampleError> {
    if k > pool.len() {
        return Err(SampleError {
            requested: k,
            pool: pool.len(),
        });
    }
    Ok(rand::seq::index::sample(rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect())
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn pool(n: u32) -> Vec<NodeId> {
        (0..n).map(NodeId).collect()
    }

    #[test]
    fn whole_pool() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_challengers(&pool(100), 100, &mut rng).unwrap();
        assert_eq!(s, pool(100).into_iter().collect());
    }

    #[test]
    fn empty_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_challengers(&pool(10), 0, &mut rng).unwrap().is_empty());
        assert!(sample_challengers(&[], 0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = sample_challengers(&pool(50), 7, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_challengers(&pool(50), 7, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 7);
    }

    #[test]
    fn oversized_request() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            sample_challengers(&pool(3), 4, &mut rng),
            Err(SampleError { requested: 4, pool: 3 })
        );
    }

    #[test]
    fn roughly_uniform() {
        // each of 10 members should be picked ~ 3/10 of the time
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = pool(10);
        let mut hits = [0u32; 10];
        for _ in 0..10_000 {
            for n in sample_challengers(&p, 3, &mut rng).unwrap() {
                hits[n.0 as usize] += 1;
            }
        }
        for h in hits {
            assert!((2_800..3_200).contains(&h), "{hits:?}");
        }
    }
}
