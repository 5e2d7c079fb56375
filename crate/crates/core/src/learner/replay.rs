use rand::Rng;
use serde::{Deserialize, Serialize};

/// Actions are stored in the unit box `[-1, 1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity ring buffer; once full, the oldest transition is replaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// `n` transitions drawn uniformly with replacement, or `None` while the
    /// buffer holds fewer than `n`.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Option<Vec<&Transition>> {
        if n == 0 || self.items.len() < n {
            return None;
        }
        Some(
            (0..n)
                .map(|_| &self.items[rng.random_range(0..self.items.len())])
                .collect(),
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn t(k: usize) -> Transition {
        Transition {
            obs: vec![k as f64],
            action: vec![0.0],
            reward: k as f64,
            next_obs: vec![k as f64 + 1.0],
            done: false,
        }
    }

    #[test]
    fn ring_never_exceeds_capacity() {
        let mut b = ReplayBuffer::new(5);
        for k in 0..12 {
            b.push(t(k));
            assert!(b.len() <= 5);
        }
        let kept: Vec<f64> = b.iter().map(|x| x.reward).collect();
        assert_eq!(kept, vec![10.0, 11.0, 7.0, 8.0, 9.0]);
    }

    #[test]
    fn samples_only_stored_transitions() {
        let mut b = ReplayBuffer::new(50);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(b.sample(4, &mut rng).is_none());
        let mut stored = HashSet::new();
        for k in 0..80 {
            b.push(t(k));
        }
        for x in b.iter() {
            stored.insert(serde_json::to_string(x).unwrap());
        }
        for _ in 0..100 {
            for x in b.sample(16, &mut rng).unwrap() {
                assert!(stored.contains(&serde_json::to_string(x).unwrap()));
            }
        }
    }
}
