use std::sync::{Arc, Mutex};

use num_complex::Complex64;

/// Small LRU map from an exact shift to a factorization.
#[derive(Debug)]
pub(crate) struct FactorCache<F> {
    capacity: usize,
    entries: Mutex<Vec<((u64, u64), Arc<F>)>>,
}

impl<F> FactorCache<F> {
    pub(crate) fn new(capacity: usize) -> Self {
        Self { capacity, entries: Mutex::new(Vec::new()) }
    }

    fn key(sigma: Complex64) -> (u64, u64) {
        (sigma.re.to_bits(), sigma.im.to_bits())
    }

    pub(crate) fn get(&self, sigma: Complex64) -> Option<Arc<F>> {
        let mut e = self.entries.lock().expect("cache lock");
        let k = Self::key(sigma);
        let pos = e.iter().position(|(key, _)| *key == k)?;
        let item = e.remove(pos);
        let f = item.1.clone();
        e.push(item);
        Some(f)
    }

    pub(crate) fn insert(&self, sigma: Complex64, f: Arc<F>) {
        let mut e = self.entries.lock().expect("cache lock");
        let k = Self::key(sigma);
        e.retain(|(key, _)| *key != k);
        if e.len() >= self.capacity {
            e.remove(0);
        }
        e.push((k, f));
    }
}
