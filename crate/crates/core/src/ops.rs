use std::cell::Cell;

/// Floating-point operation tally for a single solve.
///
/// Each multiply or add performed by smoothing, transfers, residuals and
/// the coarse solve is counted once. Not `Sync`: every solve owns its own.
#[derive(Debug, Default)]
pub struct OpCounter {
    count: Cell<u64>,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&self, n: u64) {
        self.count.set(self.count.get() + n);
    }

    pub fn get(&self) -> u64 {
        self.count.get()
    }

    pub fn reset(&self) {
        self.count.set(0);
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64], ops: &OpCounter) -> f64 {
    ops.add(2 * a.len() as u64);
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64], ops: &OpCounter) {
    ops.add(2 * x.len() as u64);
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
