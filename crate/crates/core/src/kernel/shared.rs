use std::sync::atomic::{AtomicU64, Ordering};

/// How a solved angular flux is folded into the scalar-flux arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccumulateMode {
    /// Plain read-add-write; the caller guarantees a single writer per entry.
    Exclusive,
    /// Compare-and-swap read-modify-write.
    Atomic,
}

/// `f64` array that many workers may read and write through `&self`.
///
/// Values are stored as bit patterns in `AtomicU64` with relaxed ordering;
/// cross-thread visibility comes from the schedulers' own synchronization
/// (bucket joins, dependency counters, queue locks).
pub struct SharedBuf {
    cells: Box<[AtomicU64]>,
}

impl SharedBuf {
    pub fn zeros(len: usize) -> Self {
        Self {
            cells: (0..len).map(|_| AtomicU64::new(0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        f64::from_bits(self.cells[i].load(Ordering::Relaxed))
    }

    #[inline]
    pub fn set(&self, i: usize, value: f64) {
        self.cells[i].store(value.to_bits(), Ordering::Relaxed);
    }

    #[inline]
    pub fn add(&self, i: usize, value: f64, mode: AccumulateMode) {
        match mode {
            AccumulateMode::Exclusive => self.set(i, self.get(i) + value),
            AccumulateMode::Atomic => {
                let cell = &self.cells[i];
                let mut current = cell.load(Ordering::Relaxed);
                loop {
                    let next = (f64::from_bits(current) + value).to_bits();
                    match cell.compare_exchange_weak(current, next, Ordering::Relaxed, Ordering::Relaxed) {
                        Ok(_) => break,
                        Err(seen) => current = seen,
                    }
                }
            }
        }
    }

    pub fn read_into(&self, start: usize, out: &mut [f64]) {
        for (k, v) in out.iter_mut().enumerate() {
            *v = self.get(start + k);
        }
    }

    pub fn write_from(&self, start: usize, values: &[f64]) {
        for (k, v) in values.iter().enumerate() {
            self.set(start + k, *v);
        }
    }

    pub fn fill(&mut self, value: f64) {
        let bits = value.to_bits();
        for c in self.cells.iter_mut() {
            *c.get_mut() = bits;
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }
}

impl std::fmt::Debug for SharedBuf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SharedBuf").field("len", &self.len()).finish()
    }
}
