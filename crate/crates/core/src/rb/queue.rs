use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy)]
struct Entry {
    time: f64,
    id: u64,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.id.cmp(&other.id))
    }
}

/// Min-queue of pending events keyed by `(time, id)`. Equal times pop in
/// increasing id order, so runs are deterministic even when finite-precision
/// times collide.
#[derive(Debug, Clone, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Entry>>,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        EventQueue {
            heap: BinaryHeap::with_capacity(n),
        }
    }

    pub fn push(&mut self, time: f64, id: u64) {
        debug_assert!(!time.is_nan());
        self.heap.push(Reverse(Entry { time, id }));
    }

    pub fn pop(&mut self) -> Option<(f64, u64)> {
        self.heap.pop().map(|Reverse(e)| (e.time, e.id))
    }

    pub fn peek(&self) -> Option<(f64, u64)> {
        self.heap.peek().map(|Reverse(e)| (e.time, e.id))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
