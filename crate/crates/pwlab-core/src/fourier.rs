//! FFT helpers on the 2pi-periodic grid z_j = 2 pi j / n.
//!
//! Coefficients are normalized so that u(z) = sum_m c_m e^{imz} with the
//! signed mode convention m in (-n/2, n/2]; the discrete H^1 pairing uses
//! the multiplier (1 + m^2) matching the continuum space H^1_per.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Cached forward/inverse plans for one grid size.
pub struct SpectralGrid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl SpectralGrid {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Signed mode of FFT bin `bin`.
    #[inline]
    pub fn mode(&self, bin: usize) -> i64 {
        if bin <= self.n / 2 {
            bin as i64
        } else {
            bin as i64 - self.n as i64
        }
    }

    /// Fourier coefficients c_m (bin-ordered), normalized by 1/n.
    pub fn coefficients(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut buf = samples.to_vec();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
        buf
    }

    /// Samples from bin-ordered coefficients.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = coeffs.to_vec();
        self.inverse.process(&mut buf);
        buf
    }

    /// Spectral derivative of given order, returned as samples.  The Nyquist
    /// bin is zeroed for odd orders, as usual for even grids.
    pub fn derivative(&self, samples: &[Complex64], order: u32) -> Vec<Complex64> {
        let mut coeffs = self.coefficients(samples);
        for (bin, c) in coeffs.iter_mut().enumerate() {
            let m = self.mode(bin);
            if order % 2 == 1 && self.n % 2 == 0 && bin == self.n / 2 {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            let im = Complex64::new(0.0, m as f64);
            *c *= im.powu(order);
        }
        self.synthesize(&coeffs)
    }

    /// Discrete L^2 norm squared: 2 pi sum |c_m|^2.
    pub fn l2_norm_sq(&self, samples: &[Complex64]) -> f64 {
        let h = 2.0 * std::f64::consts::PI / self.n as f64;
        samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * h
    }

    /// Discrete H^1 norm squared: 2 pi sum (1 + m^2) |c_m|^2.
    pub fn h1_norm_sq(&self, samples: &[Complex64]) -> f64 {
        let coeffs = self.coefficients(samples);
        2.0 * std::f64::consts::PI
            * coeffs
                .iter()
                .enumerate()
                .map(|(bin, c)| {
                    let m = self.mode(bin) as f64;
                    (1.0 + m * m) * c.norm_sqr()
                })
                .sum::<f64>()
    }
}

/// Trapezoid (= spectrally accurate) integral of periodic samples over
/// [0, 2pi].
pub fn integral(samples: &[Complex64]) -> Complex64 {
    let h = 2.0 * std::f64::consts::PI / samples.len() as f64;
    samples.iter().sum::<Complex64>() * h
}

pub fn integral_re(samples: impl Iterator<Item = f64>, n: usize) -> f64 {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    samples.sum::<f64>() * h
}
