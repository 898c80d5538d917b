use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    /// Normalized action in [-1, 1]^2.
    pub action: [f64; 2],
    pub reward: f64,
    pub next_obs: Vec<f64>,
    /// True for Collision and GoalReached only.
    pub done: bool,
}

/// Fixed-capacity FIFO ring of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    data: Vec<Transition>,
    /// Slot the next push overwrites once the ring is full.
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidInput("buffer capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            data: Vec::with_capacity(capacity.min(1 << 16)),
            head: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let (newer, older) = self.data.split_at(self.head);
        older.iter().chain(newer)
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.data[i]
    }

    /// `n` indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.data.len() < n || n == 0 {
            return Err(Error::BufferTooSmall {
                size: self.data.len(),
                needed: n.max(1),
            });
        }
        Ok((0..n).map(|_| rng.random_range(0..self.data.len())).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn t(r: f64) -> Transition {
        Transition {
            obs: vec![r],
            action: [0.0, 0.0],
            reward: r,
            next_obs: vec![r],
            done: false,
        }
    }

    #[test]
    fn sampling_needs_enough_data() {
        let mut b = ReplayBuffer::new(4).unwrap();
        b.push(t(1.0));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            b.sample_indices(2, &mut rng).unwrap_err(),
            Error::BufferTooSmall { size: 1, needed: 2 }
        );
        assert!(ReplayBuffer::new(0).is_err());
    }

    proptest! {
        #[test]
        fn fifo_keeps_newest(cap in 1usize..20, extra in 0usize..40) {
            let mut b = ReplayBuffer::new(cap).unwrap();
            let n = cap + extra;
            for i in 0..n {
                b.push(t(i as f64));
            }
            prop_assert_eq!(b.len(), cap);
            let kept: Vec<f64> = b.iter().map(|x| x.reward).collect();
            let want: Vec<f64> = (extra..n).map(|i| i as f64).collect();
            prop_assert_eq!(kept, want);
        }
    }
}
