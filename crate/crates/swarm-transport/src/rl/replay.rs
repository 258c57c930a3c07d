//! Shared experience replay.

use rand::Rng;

use super::action::Action;
use crate::error::{Error, Result};

/// One robot's experience tuple. `obs`/`next_obs` carry the (possibly
/// augmented) observation vector the policy actually saw.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity ring; the oldest entry is overwritten first once full.
/// Sampling is uniform with replacement.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    storage: Vec<T>,
    write_cursor: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "capacity must be >= 1");
        Self {
            capacity,
            storage: Vec::new(),
            write_cursor: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn push(&mut self, item: T) {
        if self.storage.len() < self.capacity {
            self.storage.push(item);
        } else {
            self.storage[self.write_cursor] = item;
        }
        self.write_cursor = (self.write_cursor + 1) % self.capacity;
    }

    /// Uniform sample with replacement; fails while the buffer holds fewer
    /// than `batch` items (callers treat that as "skip learning").
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&T>> {
        if self.storage.len() < batch {
            return Err(Error::contract(format!(
                "replay holds {} of {batch} items needed",
                self.storage.len()
            )));
        }
        Ok((0..batch)
            .map(|_| &self.storage[rng.gen_range(0..self.storage.len())])
            .collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.storage.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn ring_overwrites_oldest_first() {
        let mut buffer = ReplayBuffer::new(3);
        for v in 0..4 {
            buffer.push(v);
        }
        assert_eq!(buffer.len(), 3);
        let contents: Vec<i32> = buffer.iter().copied().collect();
        assert!(!contents.contains(&0));
        for v in [1, 2, 3] {
            assert!(contents.contains(&v));
        }
    }

    #[test]
    fn sample_before_warmup_signals_insufficient_data() {
        let mut buffer = ReplayBuffer::new(10);
        buffer.push(1);
        assert!(buffer.sample(2, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn sample_distribution_is_uniform() {
        // Chi-square over 1e5 draws from a 10-element buffer, alpha = 0.01
        // (critical value 21.67 at 9 degrees of freedom).
        let mut buffer = ReplayBuffer::new(10);
        for v in 0..10usize {
            buffer.push(v);
        }
        let mut rng = rng_from_seed(1234);
        let mut counts = [0usize; 10];
        let draws = 100_000;
        for _ in 0..draws / 10 {
            for &v in buffer.sample(10, &mut rng).unwrap() {
                counts[v] += 1;
            }
        }
        let expected = draws as f64 / 10.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 21.67, "chi2 = {chi2}");
    }
}
