use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::spaces::Action;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

impl Transition {
    pub fn is_finite(&self) -> bool {
        self.reward.is_finite()
            && self.obs.iter().chain(&self.next_obs).all(|v| v.is_finite())
            && self.action.to_array().iter().all(|v| v.is_finite())
    }
}

/// Fixed-capacity ring of transitions with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: Vec<Transition>,
    next: usize,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, seed: u64) -> Self {
        assert!(capacity > 0, "replay capacity must be > 0");
        Self {
            capacity,
            storage: Vec::new(),
            next: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
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

    /// Inserts a transition, overwriting the oldest once full.
    pub fn push(&mut self, t: Transition) {
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Distinct storage indices, uniformly without replacement.
    pub fn sample_indices(&mut self, batch: usize) -> Vec<usize> {
        let n = batch.min(self.storage.len());
        sample(&mut self.rng, self.storage.len(), n).into_vec()
    }

    pub fn sample(&mut self, batch: usize) -> Vec<&Transition> {
        let idx = self.sample_indices(batch);
        idx.into_iter().map(|i| &self.storage[i]).collect()
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.storage.get(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(r: f64) -> Transition {
        Transition {
            obs: vec![r],
            action: Action::midpoint(),
            reward: r,
            next_obs: vec![r],
            done: false,
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut b = ReplayBuffer::new(3, 0);
        for i in 0..5 {
            b.push(t(i as f64));
        }
        assert_eq!(b.len(), 3);
        let mut rewards: Vec<f64> = (0..3).map(|i| b.get(i).unwrap().reward).collect();
        rewards.sort_by(f64::total_cmp);
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn batch_has_no_repeats() {
        let mut b = ReplayBuffer::new(100, 1);
        for i in 0..50 {
            b.push(t(i as f64));
        }
        let mut idx = b.sample_indices(40);
        idx.sort();
        idx.dedup();
        assert_eq!(idx.len(), 40);
        assert_eq!(b.sample_indices(80).len(), 50);
    }
}
