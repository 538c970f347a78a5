use std::collections::VecDeque;
use std::sync::Mutex;

/// Per-worker task queue. The owner pushes and pops at the back (LIFO);
/// thieves take from the front, i.e. the oldest entry. Any thread may push,
/// which is how affinity-hinted spawns land on another worker.
#[derive(Debug)]
pub struct WorkQueue<T> {
    items: Mutex<VecDeque<T>>,
}

impl<T> Default for WorkQueue<T> {
    fn default() -> Self {
        Self {
            items: Mutex::new(VecDeque::new()),
        }
    }
}

impl<T> WorkQueue<T> {
    pub fn push(&self, item: T) {
        self.items.lock().unwrap_or_else(|e| e.into_inner()).push_back(item);
    }

    pub fn pop_local(&self) -> Option<T> {
        self.items.lock().unwrap_or_else(|e| e.into_inner()).pop_back()
    }

    pub fn steal(&self) -> Option<T> {
        self.items.lock().unwrap_or_else(|e| e.into_inner()).pop_front()
    }

    pub fn len(&self) -> usize {
        self.items.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
