use rand::Rng;

use crate::env::State;

/// One stored experience `(s, a, r, s')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: State,
    pub action: usize,
    pub reward: f64,
    pub next: State,
}

/// Fixed-capacity ring buffer; once full, the oldest entry is overwritten.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    entries: Vec<Transition>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            entries: Vec::with_capacity(capacity),
            capacity,
            cursor: 0,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.entries.len() < self.capacity {
            self.entries.push(t);
        } else {
            self.entries[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.entries[i]
    }

    /// Uniform draw with replacement over stored entries.
    pub fn sample<'a, R: Rng + ?Sized>(
        &'a self,
        count: usize,
        rng: &'a mut R,
    ) -> impl Iterator<Item = &'a Transition> + 'a {
        let n = self.entries.len();
        (0..count).map(move |_| &self.entries[rng.random_range(0..n)])
    }

    /// Stored transitions from oldest to newest.
    pub fn chronological(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.entries.len() < self.capacity {
            0
        } else {
            self.cursor
        };
        self.entries[split..].iter().chain(&self.entries[..split])
    }
}
