//! Unnormalized DFT of arbitrary length, `X[p] = Σ_q x[q] e^{-j2πpq/n}`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// A forward transform planned for one length, reusable across calls.
#[derive(Clone)]
pub struct DftPlan {
    fft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for DftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DftPlan").field("len", &self.len()).finish()
    }
}

impl DftPlan {
    pub fn new(len: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(len);
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        DftPlan { fft, scratch }
    }

    pub fn len(&self) -> usize {
        self.fft.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Transforms `buf` in place. Panics if the length differs from the plan.
    pub fn process(&mut self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len(), "DFT length mismatch");
        if buf.is_empty() {
            return;
        }
        self.fft.process_with_scratch(buf, &mut self.scratch);
    }
}

/// One-shot DFT; plan once with [`DftPlan`] in hot loops.
pub fn dft(input: &[Complex64]) -> Vec<Complex64> {
    let mut out = input.to_vec();
    if !out.is_empty() {
        DftPlan::new(out.len()).process(&mut out);
    }
    out
}
