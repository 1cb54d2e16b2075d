//! Wave profiles by high-accuracy shooting and their 2pi-periodic
//! representation Q(z) = e^{-ipx} W(x), z = 2kx.
//!
//! The orbit starts at the modulus extremum, W(0) = r2 = sqrt(y2) and
//! W'(0) = i J / r2, which makes W'(0) purely imaginary and pins the
//! representative of the (translation x phase) orbit.  Periodic closure
//! e^{-ipT} W(T) = W(0) is asserted, never enforced: a failure here means
//! the wave numbers and the orbit disagree, which must surface.

use num_complex::Complex64;
use serde::Serialize;
use std::io::{self, Write};

use crate::case::{Invariants, ModelCase};
use crate::error::{Error, Result};
use crate::fourier::{self, SpectralGrid};
use crate::ode;
use crate::waves::{wave_numbers, QuadratureFrame, WaveNumbers};

/// Default integrator tolerance (absolute and relative).
pub const DEFAULT_TOL: f64 = 1e-12;

/// Relative bound on the periodic-closure defect.
pub const PERIODICITY_TOL: f64 = 1e-8;

/// A sampled wave profile.
#[derive(Debug, Clone)]
pub struct WaveProfile {
    pub case: ModelCase,
    pub inv: Invariants,
    pub wn: WaveNumbers,
    /// Number of z-samples (power of two).
    pub grid_n: usize,
    /// Q on z_j = 2 pi j / grid_n.
    pub q: Vec<Complex64>,
    /// W on x_j = z_j / (2k) (same sample count).
    pub w: Vec<Complex64>,
    /// W' on the same grid.
    pub dw: Vec<Complex64>,
    /// Initial data record (r2, iJ/r2).
    pub w0: Complex64,
    pub dw0: Complex64,
    /// |e^{-ipT} W(T) - W(0)|, the periodic-closure defect.
    pub periodicity_defect: f64,
    /// Integrator tolerance actually used.
    pub tol: f64,
}

/// Charge, momentum and case energy of a 2pi-periodic field.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Functionals {
    pub n: f64,
    pub m: f64,
    pub e: f64,
}

/// Shoot the profile at the default tolerance, escalating the grid until the
/// spectral tail is resolved.
pub fn shoot_profile(case: ModelCase, inv: Invariants, grid_n: usize) -> Result<WaveProfile> {
    shoot_profile_with_tol(case, inv, grid_n, DEFAULT_TOL)
}

pub fn shoot_profile_with_tol(
    case: ModelCase,
    inv: Invariants,
    grid_n: usize,
    tol: f64,
) -> Result<WaveProfile> {
    if grid_n < 64 || !grid_n.is_power_of_two() {
        return Err(Error::Config(format!(
            "grid_n must be a power of two >= 64, got {grid_n}"
        )));
    }
    let frame = QuadratureFrame::new(case, inv)?;
    let wn = wave_numbers(&frame)?;

    let mut n = grid_n;
    loop {
        let profile = shoot_once(case, inv, &frame, wn, n, tol)?;
        // Spectral decay guard: the tail beyond grid_n/4 must be negligible,
        // otherwise operator assembly and stationarity checks alias.
        let grid = SpectralGrid::new(n);
        let coeffs = grid.coefficients(&profile.q);
        let peak = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        let tail = coeffs
            .iter()
            .enumerate()
            .filter(|(bin, _)| grid.mode(*bin).unsigned_abs() as usize >= n / 4)
            .map(|(_, c)| c.norm())
            .fold(0.0f64, f64::max);
        if tail <= 1e-12 * peak.max(1e-300) || n >= 2048 {
            return Ok(profile);
        }
        n *= 2;
    }
}

fn shoot_once(
    case: ModelCase,
    inv: Invariants,
    frame: &QuadratureFrame,
    wn: WaveNumbers,
    grid_n: usize,
    tol: f64,
) -> Result<WaveProfile> {
    let r2 = frame.roots.r2();
    let w0 = Complex64::new(r2, 0.0);
    let dw0 = Complex64::new(0.0, inv.j / r2);
    let y0 = [w0.re, w0.im, dw0.re, dw0.im];
    let dx = wn.t / grid_n as f64;

    let mut tol_now = tol;
    for attempt in 0..2 {
        let (xs, ys) = ode::integrate_orbit(case, y0, wn.t, dx, tol_now)?;
        let mut w = Vec::with_capacity(grid_n);
        let mut dw = Vec::with_capacity(grid_n);
        let mut q = Vec::with_capacity(grid_n);
        let mut max_w: f64 = 0.0;
        for j in 0..grid_n {
            let y = ys[j];
            let wj = Complex64::new(y[0], y[1]);
            max_w = max_w.max(wj.norm());
            w.push(wj);
            dw.push(Complex64::new(y[2], y[3]));
            q.push(Complex64::from_polar(1.0, -wn.p * xs[j]) * wj);
        }
        let yt = ys[grid_n];
        let wt = Complex64::new(yt[0], yt[1]);
        let defect =
            (Complex64::from_polar(1.0, -wn.p * xs[grid_n]) * wt - w0).norm();
        if defect <= PERIODICITY_TOL * max_w.max(1e-300) {
            return Ok(WaveProfile {
                case,
                inv,
                wn,
                grid_n,
                q,
                w,
                dw,
                w0,
                dw0,
                periodicity_defect: defect,
                tol: tol_now,
            });
        }
        if attempt == 1 {
            return Err(Error::PeriodMismatch { defect });
        }
        tol_now = (tol_now / 100.0).max(1e-14);
    }
    unreachable!()
}

impl WaveProfile {
    /// mu coefficient of this wave's reduced evolution equation.
    pub fn mu(&self) -> f64 {
        self.case.mu(self.wn.p)
    }

    /// Kernel non-degeneracy margin: J^2 < omega y2^2 + gamma y2^3, which is
    /// the reformulation of "the non-periodic kernel solutions never close".
    pub fn kernel_nondegeneracy_margin(&self) -> f64 {
        let y2 = self.w0.re * self.w0.re;
        let bound = self.case.omega() * y2 * y2 + self.case.gamma() * y2 * y2 * y2;
        bound - self.inv.j * self.inv.j
    }

    /// Max-norm residual of the stationary reduced equation
    /// 4k^2 Q'' + 4ipk Q' + mu Q + gamma |Q|^2 Q, by spectral differentiation.
    pub fn stationarity_residual(&self) -> f64 {
        stationarity_residual_of(
            &self.q,
            self.wn.k,
            self.wn.p,
            self.mu(),
            self.case.gamma(),
        )
    }

    /// Charge, momentum and the case energy of the sampled profile.
    pub fn functionals(&self) -> Functionals {
        functionals_of(&self.q, self.wn.k, self.case.gamma())
    }

    /// Modified energy E_{J,E}(Q) = E(Q) - mu N(Q) - 4pk M(Q), the quantity
    /// whose critical point this profile is.
    pub fn modified_energy(&self) -> f64 {
        let f = self.functionals();
        f.e - self.mu() * f.n - 4.0 * self.wn.p * self.wn.k * f.m
    }

    /// Conserved-quantity drift of the shot orbit samples against (J, E).
    pub fn orbit_invariant_drift(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (w, dw) in self.w.iter().zip(&self.dw) {
            let state = [w.re, w.im, dw.re, dw.im];
            let (j, e) = ode::state_invariants(self.case, &state);
            worst = worst.max((j - self.inv.j).abs() + (e - self.inv.e).abs());
        }
        worst
    }

    /// Export as CSV with a JSON header comment; floats carry 17 significant
    /// digits so the file round-trips bit-exactly.
    pub fn write_csv<W: Write>(&self, out: &mut W, comment: &str) -> io::Result<()> {
        let header = serde_json::json!({
            "case": self.case.label(),
            "J": self.inv.j,
            "E": self.inv.e,
            "T": self.wn.t,
            "Phi": self.wn.phi,
            "Psi": self.wn.psi,
            "k": self.wn.k,
            "ell": self.wn.ell,
            "p": self.wn.p,
            "gridN": self.grid_n,
        });
        writeln!(out, "# {header}")?;
        if !comment.is_empty() {
            writeln!(out, "# {comment}")?;
        }
        writeln!(out, "z,re_q,im_q,abs_q")?;
        for (j, q) in self.q.iter().enumerate() {
            let z = 2.0 * std::f64::consts::PI * j as f64 / self.grid_n as f64;
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                z,
                q.re,
                q.im,
                q.norm()
            )?;
        }
        Ok(())
    }
}

/// Stationarity residual of arbitrary samples under the (k, p, mu, gamma)
/// equation; exposed separately so tests can probe plane waves and
/// perturbed fields.
pub fn stationarity_residual_of(q: &[Complex64], k: f64, p: f64, mu: f64, gamma: f64) -> f64 {
    let grid = SpectralGrid::new(q.len());
    let dq = grid.derivative(q, 1);
    let ddq = grid.derivative(q, 2);
    let mut worst: f64 = 0.0;
    for j in 0..q.len() {
        let res = 4.0 * k * k * ddq[j]
            + Complex64::new(0.0, 4.0 * p * k) * dq[j]
            + mu * q[j]
            + gamma * q[j].norm_sqr() * q[j];
        worst = worst.max(res.norm());
    }
    worst
}

/// N, M, E of arbitrary 2pi-periodic samples.
pub fn functionals_of(q: &[Complex64], k: f64, gamma: f64) -> Functionals {
    let n_samples = q.len();
    let grid = SpectralGrid::new(n_samples);
    let dq = grid.derivative(q, 1);
    let n = 0.5 * fourier::integral_re(q.iter().map(|v| v.norm_sqr()), n_samples);
    // M = (i/2) int conj(Q) Q_z; the real part of conj(Q) Q_z integrates to
    // zero, so M = -(1/2) int Im(conj(Q) Q_z).
    let m = -0.5
        * fourier::integral_re(
            q.iter().zip(&dq).map(|(v, d)| (v.conj() * d).im),
            n_samples,
        );
    let e = fourier::integral_re(
        q.iter()
            .zip(&dq)
            .map(|(v, d)| 2.0 * k * k * d.norm_sqr() - 0.25 * gamma * v.norm_sqr().powi(2)),
        n_samples,
    );
    Functionals { n, m, e }
}
