//! Multi-dimensional complex FFT over a periodic lattice, built from
//! rustfft 1-D transforms applied axis by axis.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::lattice::LatticeSpec;

/// Unnormalized transforms: forward uses `e^{-i k x}`, inverse `e^{+i k x}`.
#[derive(Clone)]
pub struct LatticeFft {
    dim: usize,
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for LatticeFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LatticeFft")
            .field("dim", &self.dim)
            .field("len", &self.len)
            .finish()
    }
}

impl LatticeFft {
    pub fn new(spec: &LatticeSpec) -> Self {
        let mut planner = FftPlanner::new();
        let len = spec.sites_per_axis();
        Self {
            dim: spec.dim(),
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.process(data, &self.forward);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.process(data, &self.inverse);
    }

    fn process(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.len;
        let total = n.pow(self.dim as u32);
        assert_eq!(data.len(), total, "buffer does not match lattice volume");
        if n == 1 {
            return;
        }
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let mut lines = vec![Complex64::default(); total];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            // Gather every line along `axis` into a contiguous buffer.
            let block = stride * n;
            let mut line = 0;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    let dst = &mut lines[line * n..(line + 1) * n];
                    for (k, slot) in dst.iter_mut().enumerate() {
                        *slot = data[base + k * stride];
                    }
                    line += 1;
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            let mut line = 0;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    let src = &lines[line * n..(line + 1) * n];
                    for (k, v) in src.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                    line += 1;
                }
            }
        }
    }
}
