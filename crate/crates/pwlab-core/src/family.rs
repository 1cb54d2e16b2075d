//! The two-parameter family of travelling and rotating waves around a given
//! profile, the matrices M and K, and the Hessian H of the structure
//! function d.
//!
//! Each wave Q_{J,E} embeds into the family
//! Q(z, t) = e^{-i omega t} Q^{omega,c}(z + ct) with
//! Q^{omega,c} = lambda Q_{J',E'}, obtained from a neighbouring wave by a
//! dilation of factor lambda = k/k' and a Galilean boost of speed
//! v = 2(lambda p' - p).  The chart (J', E') -> (omega, c) reads
//!
//! ```text
//!     omega = k^2/pi^2 (T'^2 - (pi+Psi')^2) - (1 - p^2)      (omega = +1)
//!     omega = (1 + p^2) - k^2/pi^2 (T'^2 + (pi+Psi')^2)      (omega = -1)
//!     c     = 4k^2/pi (pi + Psi') - 4kp ,
//! ```
//!
//! its Jacobian at the base point is M, the Jacobian of the scaled charge
//! and momentum is K, and H = -M^(-1) K.  det H < 0 together with the
//! single negative eigenvalue of the second variation is the orbital
//! stability certificate.

use serde::Serialize;
use std::f64::consts::PI;

use crate::case::{self, domain_contains, Invariants, ModelCase};
use crate::error::{Error, Result};
use crate::par;
use crate::profile::shoot_profile_with_tol;
use crate::waves::{
    charge_with_period, derivatives, period, phase_increment, renorm_psi, wave_numbers,
    PhaseBranch, QuadratureFrame, WaveNumbers,
};

type Mat2 = [[f64; 2]; 2];

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn mat2_inv(m: &Mat2) -> Option<Mat2> {
    let d = det2(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Total phase p T = pi + Psi on the branch fixed by the caller; the Phi
/// branch continues the corotating family smoothly through Gamma_minus.
fn phase_total(frame: &QuadratureFrame, branch: PhaseBranch) -> Result<f64> {
    match branch {
        PhaseBranch::Psi => Ok(PI + renorm_psi(frame)?),
        PhaseBranch::Phi => {
            if frame.inv.j == 0.0 {
                Ok(0.0)
            } else {
                phase_increment(frame)
            }
        }
    }
}

/// One member of the two-parameter family.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FamilyMap {
    pub omega: f64,
    pub c: f64,
    /// Source invariants (J', E').
    pub jp: f64,
    pub ep: f64,
    /// Dilation factor k / k'.
    pub lambda: f64,
    /// Galilean speed 2 (lambda p' - p).
    pub v: f64,
    pub kp: f64,
    pub pp: f64,
    pub tp: f64,
    pub psip: f64,
}

/// Forward family chart: (J', E') -> (omega, c) relative to the base wave.
pub fn omega_c_of(
    case: ModelCase,
    base: &WaveNumbers,
    inv_prime: Invariants,
    branch: PhaseBranch,
) -> Result<(f64, f64)> {
    let frame = QuadratureFrame::new(case, inv_prime)?;
    let tp = period(&frame)?;
    let ptp = phase_total(&frame, branch)?;
    let (k, p) = (base.k, base.p);
    let kk = k * k / (PI * PI);
    let omega = if case.omega() > 0.0 {
        kk * (tp * tp - ptp * ptp) - (1.0 - p * p)
    } else {
        (1.0 + p * p) - kk * (tp * tp + ptp * ptp)
    };
    let c = 4.0 * k * k / PI * ptp - 4.0 * k * p;
    Ok((omega, c))
}

/// Solve the family chart for (J', E') at given small (omega, c) by Newton
/// iteration with the analytic Jacobian.
pub fn family_map(case: ModelCase, inv: Invariants, omega: f64, c: f64) -> Result<FamilyMap> {
    let base_frame = QuadratureFrame::new(case, inv)?;
    let base = wave_numbers(&base_frame)?;
    let branch = base.branch;
    let (k, p) = (base.k, base.p);

    let mut jp = inv.j;
    let mut ep = inv.e;
    let mut residual = f64::INFINITY;
    for _ in 0..50 {
        let frame = QuadratureFrame::new(case, Invariants::new(jp, ep))?;
        let (om_cur, c_cur) = omega_c_of(case, &base, Invariants::new(jp, ep), branch)?;
        let (rw, rc) = (om_cur - omega, c_cur - c);
        residual = rw.abs() + rc.abs();
        if residual <= 1e-12 * (1.0 + omega.abs() + c.abs()) {
            let tp = period(&frame)?;
            let ptp = phase_total(&frame, branch)?;
            let kp = PI / tp;
            let pp = ptp / tp;
            let lambda = k / kp;
            return Ok(FamilyMap {
                omega,
                c,
                jp,
                ep,
                lambda,
                v: 2.0 * (lambda * pp - p),
                kp,
                pp,
                tp,
                psip: ptp - PI,
            });
        }

        // Analytic Jacobian of (omega, c) with respect to (E', J').
        let d = derivatives(&frame)?;
        let tp = period(&frame)?;
        let ptp = phase_total(&frame, branch)?;
        let kk = k * k / (PI * PI);
        let sign = if case.omega() > 0.0 { 1.0 } else { -1.0 };
        let dw_de = sign * 2.0 * kk * (tp * d.t_e - sign * ptp * d.psi_e);
        let dw_dj = sign * 2.0 * kk * (tp * d.t_j - sign * ptp * d.psi_j);
        let dc_de = 4.0 * k * k / PI * d.psi_e;
        let dc_dj = 4.0 * k * k / PI * d.psi_j;

        // Solve [dw_dj dw_de; dc_dj dc_de] (dj, de) = -(rw, rc).
        let det = dw_dj * dc_de - dw_de * dc_dj;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::SingularM { det });
        }
        let dj = (-rw * dc_de + rc * dw_de) / det;
        let de = (-dw_dj * rc + dc_dj * rw) / det;
        let mut lambda_step = 1.0;
        let mut stepped = false;
        for _ in 0..30 {
            let cand = Invariants::new(jp + lambda_step * dj, ep + lambda_step * de);
            if domain_contains(case, cand).is_interior() {
                jp = cand.j;
                ep = cand.e;
                stepped = true;
                break;
            }
            lambda_step *= 0.5;
        }
        if !stepped {
            return Err(Error::LeftDomain);
        }
    }
    Err(Error::NoConvergence { iters: 50, residual })
}

/// Verify the corotating sign in the family chart Jacobian: for omega = -1
/// the omega-row flips, so the determinant relation picks up a minus sign.
fn det_m_delta_sign(case: ModelCase) -> f64 {
    if case.omega() > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// The family matrix M = d(omega, c)/d(E', J') at the base point.
pub fn matrix_m(case: ModelCase, inv: Invariants) -> Result<Mat2> {
    let frame = QuadratureFrame::new(case, inv)?;
    let wn = wave_numbers(&frame)?;
    let d = derivatives(&frame)?;
    let (k, p) = (wn.k, wn.p);
    let sign = det_m_delta_sign(case);
    Ok([
        [
            sign * 2.0 * k / PI * (d.t_e - sign * p * d.psi_e),
            4.0 * k * k / PI * d.psi_e,
        ],
        [
            sign * 2.0 * k / PI * (d.t_j - sign * p * d.psi_j),
            4.0 * k * k / PI * d.psi_j,
        ],
    ])
}

/// Scaled charge and momentum (k/k')^2 (N, M)(Q_{J',E'}) of a neighbouring
/// wave, evaluated through the closed quadrature forms.
fn scaled_nm(
    case: ModelCase,
    inv_prime: Invariants,
    k_base: f64,
    branch: PhaseBranch,
) -> Result<(f64, f64)> {
    let frame = QuadratureFrame::new(case, inv_prime)?;
    let tp = period(&frame)?;
    let n = charge_with_period(&frame, tp)?;
    let ptp = phase_total(&frame, branch)?;
    let kp = PI / tp;
    let pp = ptp / tp;
    let m = pp / (2.0 * kp) * n - 0.5 * inv_prime.j * tp;
    let lam2 = (k_base / kp).powi(2);
    Ok((lam2 * n, lam2 * m))
}

/// Central differences of the scaled (N, M) with one Richardson sweep.
fn matrix_k_fd_with_steps(case: ModelCase, inv: Invariants, h: f64) -> Result<Mat2> {
    let frame = QuadratureFrame::new(case, inv)?;
    let wn = wave_numbers(&frame)?;
    let branch = wn.branch;
    let k = wn.k;

    let diff = |h: f64| -> Result<Mat2> {
        let ep = scaled_nm(case, Invariants::new(inv.j, inv.e + h), k, branch)?;
        let em = scaled_nm(case, Invariants::new(inv.j, inv.e - h), k, branch)?;
        let jp = scaled_nm(case, Invariants::new(inv.j + h, inv.e), k, branch)?;
        let jm = scaled_nm(case, Invariants::new(inv.j - h, inv.e), k, branch)?;
        Ok([
            [(ep.0 - em.0) / (2.0 * h), (ep.1 - em.1) / (2.0 * h)],
            [(jp.0 - jm.0) / (2.0 * h), (jp.1 - jm.1) / (2.0 * h)],
        ])
    };
    let coarse = diff(h)?;
    let fine = diff(h / 2.0)?;
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = (4.0 * fine[i][j] - coarse[i][j]) / 3.0;
        }
    }
    Ok(out)
}

/// Finite-difference K with the default step 1e-5.
pub fn matrix_k_fd(case: ModelCase, inv: Invariants) -> Result<Mat2> {
    matrix_k_fd_with_steps(case, inv, 1e-5)
}

/// Defocusing K assembled from the closed charge kernels C1, C2, C3.
pub fn matrix_k_analytic(case: ModelCase, inv: Invariants) -> Result<Mat2> {
    if case != ModelCase::Defocusing {
        return Err(Error::Config(
            "closed charge kernels exist only in the defocusing case".into(),
        ));
    }
    let frame = QuadratureFrame::new(case, inv)?;
    let wn = wave_numbers(&frame)?;
    let d = derivatives(&frame)?;
    let (c1, c2, c3) = d.coeffs.c.expect("defocusing kernels");
    let t = wn.t;
    let n = charge_with_period(&frame, t)?;
    let (k, p, j) = (wn.k, wn.p, inv.j);

    let dn_de = c1 * d.coeffs.dy_de[0] + c2 * d.coeffs.dy_de[1] + c3 * d.t_e;
    let dn_dj = c1 * d.coeffs.dy_dj[0] + c2 * d.coeffs.dy_dj[1] + c3 * d.t_j;
    let dm_de = p / (2.0 * k) * dn_de + n / (2.0 * PI) * d.psi_e - 1.5 * j * d.t_e;
    let dm_dj = p / (2.0 * k) * dn_dj + n / (2.0 * PI) * d.psi_j - 1.5 * j * d.t_j - 0.5 * t;
    Ok([[dn_de, dm_de], [dn_dj, dm_dj]])
}

/// K by the preferred route per case: closed kernels for the defocusing
/// family, Richardson finite differences for both focusing families.
pub fn matrix_k(case: ModelCase, inv: Invariants) -> Result<Mat2> {
    match case {
        ModelCase::Defocusing => matrix_k_analytic(case, inv),
        _ => matrix_k_fd(case, inv),
    }
}

/// The matrices M, K, H = -M^(-1) K and their determinants.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub case: ModelCase,
    pub inv: Invariants,
    pub wn: WaveNumbers,
    pub delta: f64,
    pub m: Mat2,
    pub k: Mat2,
    pub h: Mat2,
    pub det_m: f64,
    pub det_k: f64,
    pub det_h: f64,
}

/// Assemble the full stability report at one interior point.
pub fn hessian_h(case: ModelCase, inv: Invariants) -> Result<StabilityReport> {
    let frame = QuadratureFrame::new(case, inv)?;
    let wn = wave_numbers(&frame)?;
    let delta = derivatives(&frame)?.delta();
    let m = matrix_m(case, inv)?;
    let det_m = det2(&m);
    if det_m.abs() < 1e-12 {
        return Err(Error::SingularM { det: det_m });
    }
    let k = matrix_k(case, inv)?;
    let m_inv = mat2_inv(&m).ok_or(Error::SingularM { det: det_m })?;
    let mut h = mat2_mul(&m_inv, &k);
    for row in h.iter_mut() {
        for v in row.iter_mut() {
            *v = -*v;
        }
    }
    Ok(StabilityReport {
        case,
        inv,
        wn,
        delta,
        m,
        k,
        h,
        det_m,
        det_k: det2(&k),
        det_h: det2(&h),
    })
}

/// Structure function d(omega, c) = lambda^4 E_{J',E'}(Q_{J',E'}).
///
/// Profiles at the perturbed invariants are shot at a tightened tolerance
/// because second differences of d amplify noise by h^-2.
pub fn d_function(case: ModelCase, inv: Invariants, omega: f64, c: f64) -> Result<f64> {
    let fm = family_map(case, inv, omega, c)?;
    let p = shoot_profile_with_tol(case, Invariants::new(fm.jp, fm.ep), 256, 1e-12)?;
    Ok(fm.lambda.powi(4) * p.modified_energy())
}

/// One row of a det-H scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub j: f64,
    pub e: f64,
    pub t: f64,
    pub phi: Option<f64>,
    pub psi: f64,
    pub delta: f64,
    pub det_m: f64,
    pub det_k: f64,
    pub det_h: f64,
    /// Failure description; failed rows are flagged, never dropped.
    pub flag: Option<String>,
}

/// Where an energy sweep starts.
#[derive(Debug, Clone, Copy)]
pub enum EnergyStart {
    /// E_-(J) + 0.05.
    Auto,
    Fixed(f64),
}

fn scan_row(case: ModelCase, j: f64, e: f64) -> ScanRow {
    match hessian_h(case, Invariants::new(j, e)) {
        Ok(rep) => ScanRow {
            j,
            e,
            t: rep.wn.t,
            phi: rep.wn.phi,
            psi: rep.wn.psi,
            delta: rep.delta,
            det_m: rep.det_m,
            det_k: rep.det_k,
            det_h: rep.det_h,
            flag: None,
        },
        Err(err) => ScanRow {
            j,
            e,
            t: f64::NAN,
            phi: None,
            psi: f64::NAN,
            delta: f64::NAN,
            det_m: f64::NAN,
            det_k: f64::NAN,
            det_h: f64::NAN,
            flag: Some(err.to_string()),
        },
    }
}

/// Scan det H (with Delta, det M, det K) over a (J, E) grid.  Rows are
/// independent and run in parallel; output order is the grid order.
pub fn scan_det_hessian(
    case: ModelCase,
    j_values: &[f64],
    e_start: EnergyStart,
    e_max: f64,
    n_points: usize,
) -> Vec<ScanRow> {
    let mut grid = Vec::new();
    for &j in j_values {
        let lo = match e_start {
            EnergyStart::Auto => match case::e_minus(case, j) {
                Ok(lo) => lo + 0.05,
                Err(_) => continue,
            },
            EnergyStart::Fixed(e0) => e0,
        };
        for idx in 0..n_points {
            let frac = if n_points == 1 {
                0.0
            } else {
                idx as f64 / (n_points - 1) as f64
            };
            grid.push((j, lo + frac * (e_max - lo)));
        }
    }
    par::maybe_par_map(grid, |(j, e)| scan_row(case, j, e))
}

/// Sequential twin of [`scan_det_hessian`]; benchmark baseline.
pub fn scan_det_hessian_seq(
    case: ModelCase,
    j_values: &[f64],
    e_start: EnergyStart,
    e_max: f64,
    n_points: usize,
) -> Vec<ScanRow> {
    let mut grid = Vec::new();
    for &j in j_values {
        let lo = match e_start {
            EnergyStart::Auto => match case::e_minus(case, j) {
                Ok(lo) => lo + 0.05,
                Err(_) => continue,
            },
            EnergyStart::Fixed(e0) => e0,
        };
        for idx in 0..n_points {
            let frac = if n_points == 1 {
                0.0
            } else {
                idx as f64 / (n_points - 1) as f64
            };
            grid.push((j, lo + frac * (e_max - lo)));
        }
    }
    par::seq_map(grid, |(j, e)| scan_row(case, j, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::e_minus;

    fn defoc_e(j: f64, u: f64) -> f64 {
        let lo = e_minus(ModelCase::Defocusing, j).unwrap();
        let hi = case::e_plus(j).unwrap();
        lo + u * (hi - lo)
    }

    #[test]
    fn family_map_identity_at_origin() {
        let inv = Invariants::new(0.1, defoc_e(0.1, 0.4));
        let fm = family_map(ModelCase::Defocusing, inv, 0.0, 0.0).unwrap();
        assert!((fm.jp - inv.j).abs() < 1e-12);
        assert!((fm.ep - inv.e).abs() < 1e-12);
        assert!((fm.lambda - 1.0).abs() < 1e-12);
        assert!(fm.v.abs() < 1e-10);
    }

    #[test]
    fn matrix_m_matches_family_chart_differences() {
        let h = 1e-6;
        for (case, inv) in [
            (ModelCase::Defocusing, Invariants::new(0.15, defoc_e(0.15, 0.5))),
            (ModelCase::FocusingCounter, Invariants::new(0.8, 2.0)),
            (ModelCase::FocusingCoro, Invariants::new(0.5, 1.2)),
        ] {
            let frame = QuadratureFrame::new(case, inv).unwrap();
            let base = wave_numbers(&frame).unwrap();
            let m = matrix_m(case, inv).unwrap();
            let probe = |j: f64, e: f64| {
                omega_c_of(case, &base, Invariants::new(j, e), base.branch).unwrap()
            };
            let (wp, cp) = probe(inv.j, inv.e + h);
            let (wm, cm) = probe(inv.j, inv.e - h);
            let fd_e = [(wp - wm) / (2.0 * h), (cp - cm) / (2.0 * h)];
            let (wp, cp) = probe(inv.j + h, inv.e);
            let (wm, cm) = probe(inv.j - h, inv.e);
            let fd_j = [(wp - wm) / (2.0 * h), (cp - cm) / (2.0 * h)];
            for (got, want) in [
                (m[0][0], fd_e[0]),
                (m[0][1], fd_e[1]),
                (m[1][0], fd_j[0]),
                (m[1][1], fd_j[1]),
            ] {
                assert!(
                    (got - want).abs() <= 1e-4 * want.abs().max(1e-4),
                    "M entry mismatch at {case}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn det_m_equals_delta_relation() {
        for (case, inv) in [
            (ModelCase::Defocusing, Invariants::new(0.2, defoc_e(0.2, 0.4))),
            (ModelCase::FocusingCounter, Invariants::new(1.0, 3.0)),
            (ModelCase::FocusingCoro, Invariants::new(0.4, 0.9)),
        ] {
            let frame = QuadratureFrame::new(case, inv).unwrap();
            let wn = wave_numbers(&frame).unwrap();
            let delta = derivatives(&frame).unwrap().delta();
            let det_m = det2(&matrix_m(case, inv).unwrap());
            let expected = det_m_delta_sign(case) * 8.0 * wn.k.powi(3) / (PI * PI) * delta;
            assert!(
                (det_m - expected).abs() <= 1e-6 * expected.abs(),
                "det M relation at {case}: {det_m} vs {expected}"
            );
            assert!(det_m.abs() > 0.0);
        }
    }

    #[test]
    fn det_m_finite_limit_toward_origin() {
        let mut dets = Vec::new();
        for &e in &[1e-2, 1e-3, 1e-4] {
            let det = det2(&matrix_m(ModelCase::Defocusing, Invariants::new(0.0, e)).unwrap());
            assert!(det > 0.0);
            dets.push(det);
        }
        assert!(
            (dets[1] / dets[2] - 1.0).abs() < 0.05,
            "det M not settling: {dets:?}"
        );
    }

    #[test]
    fn defocusing_k_two_routes_agree() {
        for &(j, u) in &[(0.0, 0.4), (0.15, 0.3), (0.3, 0.6), (-0.2, 0.5)] {
            let inv = Invariants::new(j, defoc_e(j, u));
            let ka = matrix_k_analytic(ModelCase::Defocusing, inv).unwrap();
            let kf = matrix_k_fd(ModelCase::Defocusing, inv).unwrap();
            for i in 0..2 {
                for l in 0..2 {
                    assert!(
                        (ka[i][l] - kf[i][l]).abs() <= 1e-4 * ka[i][l].abs().max(1e-2),
                        "K mismatch at ({j}, {u}) entry ({i},{l}): {} vs {}",
                        ka[i][l],
                        kf[i][l]
                    );
                }
            }
        }
    }

    #[test]
    fn defocusing_k_signs() {
        // dN'/dE' > 0 and det K < 0 across the domain.
        for &(j, u) in &[(0.0, 0.2), (0.1, 0.5), (0.25, 0.8), (-0.3, 0.4)] {
            let inv = Invariants::new(j, defoc_e(j, u));
            let k = matrix_k_analytic(ModelCase::Defocusing, inv).unwrap();
            assert!(k[0][0] > 0.0, "dN/dE at ({j}, {u})");
            assert!(det2(&k) < 0.0, "det K at ({j}, {u})");
        }
    }

    #[test]
    fn hessian_small_amplitude_limits() {
        // H -> (pi/3) [[-2, -1], [-1, 1]] (defocusing)
        // and (pi/3) [[2, 1], [1, -1]] (counter) as (J, E) -> 0.
        let rep = hessian_h(ModelCase::Defocusing, Invariants::new(0.0, 1e-3)).unwrap();
        let scale = PI / 3.0;
        let want = [[-2.0 * scale, -scale], [-scale, scale]];
        for i in 0..2 {
            for l in 0..2 {
                assert!(
                    (rep.h[i][l] - want[i][l]).abs() <= 2e-2 * want[i][l].abs(),
                    "defocusing H entry ({i},{l}): {} vs {}",
                    rep.h[i][l],
                    want[i][l]
                );
            }
        }
        let rep = hessian_h(ModelCase::FocusingCounter, Invariants::new(0.0, 1e-3)).unwrap();
        let want = [[2.0 * scale, scale], [scale, -scale]];
        for i in 0..2 {
            for l in 0..2 {
                assert!(
                    (rep.h[i][l] - want[i][l]).abs() <= 2e-2 * want[i][l].abs(),
                    "counter H entry ({i},{l}): {} vs {}",
                    rep.h[i][l],
                    want[i][l]
                );
            }
        }
    }

    #[test]
    fn hessian_identities_and_symmetry() {
        for (case, inv) in [
            (ModelCase::Defocusing, Invariants::new(0.12, defoc_e(0.12, 0.5))),
            (ModelCase::FocusingCounter, Invariants::new(0.9, 2.4)),
            (ModelCase::FocusingCoro, Invariants::new(0.6, 1.5)),
            (ModelCase::FocusingCoro, Invariants::new(0.0, -0.12)),
            (ModelCase::FocusingCoro, Invariants::new(0.0, 0.8)),
        ] {
            let rep = hessian_h(case, inv).unwrap();
            assert!(
                (rep.det_h * rep.det_m - rep.det_k).abs() <= 1e-6 * rep.det_k.abs(),
                "det identity at {case} {inv:?}"
            );
            let norm = rep
                .h
                .iter()
                .flatten()
                .map(|v| v.abs())
                .fold(0.0f64, f64::max);
            assert!(
                (rep.h[0][1] - rep.h[1][0]).abs() <= 1e-4 * norm,
                "H symmetry at {case} {inv:?}: {} vs {}",
                rep.h[0][1],
                rep.h[1][0]
            );
            assert!(rep.det_h < 0.0, "det H sign at {case} {inv:?}");
            // Symmetric 2x2 with negative determinant: one negative
            // eigenvalue, checked via trace and determinant.
            let tr = rep.h[0][0] + rep.h[1][1];
            let disc = (tr * tr - 4.0 * rep.det_h).sqrt();
            let eig_lo = 0.5 * (tr - disc);
            let eig_hi = 0.5 * (tr + disc);
            assert!(eig_lo < 0.0 && eig_hi > 0.0);
        }
    }

    #[test]
    fn d_function_gradient_is_minus_charge_momentum() {
        let case = ModelCase::Defocusing;
        let inv = Invariants::new(0.1, defoc_e(0.1, 0.4));
        let p = shoot_profile_with_tol(case, inv, 256, 1e-12).unwrap();
        let f = p.functionals();
        let h = 1e-5;
        let dw = (d_function(case, inv, h, 0.0).unwrap() - d_function(case, inv, -h, 0.0).unwrap())
            / (2.0 * h);
        assert!(
            (dw + f.n).abs() <= 1e-4 * f.n.abs(),
            "d_omega = {dw} vs -N = {}",
            -f.n
        );
        let dc = (d_function(case, inv, 0.0, h).unwrap() - d_function(case, inv, 0.0, -h).unwrap())
            / (2.0 * h);
        assert!(
            (dc + f.m).abs() <= 1e-4 * f.m.abs().max(1e-3),
            "d_c = {dc} vs -M = {}",
            -f.m
        );
    }

    #[test]
    fn scaling_identity_on_sampled_field() {
        use num_complex::Complex64;
        let case = ModelCase::FocusingCounter;
        let inv = Invariants::new(0.5, 1.5);
        let (omega, c) = (3e-3, -2e-3);
        let fm = family_map(case, inv, omega, c).unwrap();
        let base_frame = QuadratureFrame::new(case, inv).unwrap();
        let base = wave_numbers(&base_frame).unwrap();
        // Any sampled field works; use a smooth two-mode test function.
        let n = 128;
        let q: Vec<Complex64> = (0..n)
            .map(|j| {
                let z = 2.0 * PI * j as f64 / n as f64;
                Complex64::new(0.7 + 0.2 * z.cos(), 0.1 * (2.0 * z).sin())
            })
            .collect();
        let lam_q: Vec<Complex64> = q.iter().map(|v| fm.lambda * v).collect();
        let gamma = case.gamma();
        let lhs = {
            let f = crate::profile::functionals_of(&lam_q, base.k, gamma);
            f.e - case.mu(base.p) * f.n - 4.0 * base.p * base.k * f.m - omega * f.n - c * f.m
        };
        let rhs = {
            let f = crate::profile::functionals_of(&q, fm.kp, gamma);
            fm.lambda.powi(4)
                * (f.e - case.mu(fm.pp) * f.n - 4.0 * fm.pp * fm.kp * f.m)
        };
        assert!(
            (lhs - rhs).abs() <= 1e-8 * lhs.abs().max(1.0),
            "scaling identity: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn hessian_matches_second_differences_of_d() {
        let case = ModelCase::Defocusing;
        let inv = Invariants::new(0.1, defoc_e(0.1, 0.45));
        let rep = hessian_h(case, inv).unwrap();
        let d00 = d_function(case, inv, 0.0, 0.0).unwrap();
        let second = |h: f64| -> Mat2 {
            let dpp = d_function(case, inv, h, 0.0).unwrap();
            let dmm = d_function(case, inv, -h, 0.0).unwrap();
            let h_ww = (dpp - 2.0 * d00 + dmm) / (h * h);
            let dpp_c = d_function(case, inv, 0.0, h).unwrap();
            let dmm_c = d_function(case, inv, 0.0, -h).unwrap();
            let h_cc = (dpp_c - 2.0 * d00 + dmm_c) / (h * h);
            let dpq = d_function(case, inv, h, h).unwrap();
            let dpm = d_function(case, inv, h, -h).unwrap();
            let dmp = d_function(case, inv, -h, h).unwrap();
            let dmq = d_function(case, inv, -h, -h).unwrap();
            let h_wc = (dpq - dpm - dmp + dmq) / (4.0 * h * h);
            [[h_ww, h_wc], [h_wc, h_cc]]
        };
        let h0 = 2e-3;
        let coarse = second(h0);
        let fine = second(h0 / 2.0);
        for i in 0..2 {
            for l in 0..2 {
                let rich = (4.0 * fine[i][l] - coarse[i][l]) / 3.0;
                assert!(
                    (rich - rep.h[i][l]).abs() <= 1e-3 * rep.h[i][l].abs().max(1e-2),
                    "Hessian entry ({i},{l}): differences {rich} vs -M^-1 K {}",
                    rep.h[i][l]
                );
            }
        }
    }

    #[test]
    fn scan_flags_instead_of_failing() {
        let rows = scan_det_hessian(
            ModelCase::FocusingCounter,
            &[0.0, 1.0],
            EnergyStart::Auto,
            5.0,
            4,
        );
        assert_eq!(rows.len(), 8);
        for row in &rows {
            assert!(row.flag.is_none(), "unexpected flag: {:?}", row.flag);
            assert!(-row.det_h > 0.0);
        }
        // Sequential twin produces identical values.
        let seq = scan_det_hessian_seq(
            ModelCase::FocusingCounter,
            &[0.0, 1.0],
            EnergyStart::Auto,
            5.0,
            4,
        );
        for (a, b) in rows.iter().zip(&seq) {
            assert_eq!(a.det_h.to_bits(), b.det_h.to_bits());
        }
    }
}
