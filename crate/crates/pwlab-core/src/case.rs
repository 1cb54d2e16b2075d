//! Model cases, effective potentials, existence domains and cubic roots.
//!
//! The stationary profile equation W'' + omega W + gamma |W|^2 W = 0 is an
//! integrable two-degree-of-freedom Hamiltonian system.  Its bounded orbits
//! are classified by the pair (J, E) of conserved quantities, and the modulus
//! r = |W| moves in the effective potential
//!
//! ```text
//!     V_J(r) = J^2 / (2 r^2) + omega r^2 / 2 + gamma r^4 / 4 .
//! ```
//!
//! Substituting y = r^2 turns the turning-point condition E = V_J(r) into a
//! cubic P(y) = 0 whose three real roots drive every quadrature downstream.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use crate::error::{Error, Result};

/// Margin used when deciding whether a point sits on the domain boundary.
/// Quadrature integrands lose integrability exactly on the boundary, so
/// interior classification requires this much clearance.
pub const BOUNDARY_MARGIN: f64 = 1e-9;

/// Gap below which two cubic roots are treated as collapsed.
pub const ROOT_GAP_MIN: f64 = 1e-10;

/// The three sign regimes of the cubic NLS travelling-wave families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelCase {
    /// gamma = -1, omega = +1.
    Defocusing,
    /// gamma = +1, omega = +1 (counter-rotating).
    FocusingCounter,
    /// gamma = +1, omega = -1 (corotating).
    FocusingCoro,
}

impl ModelCase {
    /// Build a case from the raw signs, rejecting the empty combination.
    pub fn from_signs(gamma: i32, omega: i32) -> Result<Self> {
        match (gamma, omega) {
            (-1, 1) => Ok(Self::Defocusing),
            (1, 1) => Ok(Self::FocusingCounter),
            (1, -1) => Ok(Self::FocusingCoro),
            (-1, -1) => Err(Error::OutOfRange(
                "gamma = -1, omega = -1 has no nontrivial bounded solutions".into(),
            )),
            _ => Err(Error::OutOfRange(format!(
                "signs must be +/-1, got gamma = {gamma}, omega = {omega}"
            ))),
        }
    }

    /// Sign of the cubic nonlinearity.
    pub fn gamma(self) -> f64 {
        match self {
            Self::Defocusing => -1.0,
            Self::FocusingCounter | Self::FocusingCoro => 1.0,
        }
    }

    /// Sign of the rotation frequency in the stationary equation.
    pub fn omega(self) -> f64 {
        match self {
            Self::Defocusing | Self::FocusingCounter => 1.0,
            Self::FocusingCoro => -1.0,
        }
    }

    /// Linear coefficient mu of the reduced evolution equation
    /// i Q_t + 4ipk Q_z + 4k^2 Q_zz + mu Q + gamma |Q|^2 Q = 0.
    pub fn mu(self, p: f64) -> f64 {
        if self.omega() > 0.0 {
            1.0 - p * p
        } else {
            -(1.0 + p * p)
        }
    }

    /// Sign with which the |Q|^2-type potentials enter the second variation.
    pub fn potential_sign(self) -> f64 {
        -self.gamma()
    }

    /// Stable identifier used by the CLI and file headers.
    pub fn label(self) -> &'static str {
        match self {
            Self::Defocusing => "defocusing",
            Self::FocusingCounter => "focusing-counter",
            Self::FocusingCoro => "focusing-coro",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "defocusing" => Ok(Self::Defocusing),
            "focusing-counter" => Ok(Self::FocusingCounter),
            "focusing-coro" => Ok(Self::FocusingCoro),
            _ => Err(Error::Config(format!(
                "unknown case '{s}' (expected defocusing | focusing-counter | focusing-coro)"
            ))),
        }
    }

    pub const ALL: [ModelCase; 3] = [
        ModelCase::Defocusing,
        ModelCase::FocusingCounter,
        ModelCase::FocusingCoro,
    ];
}

impl fmt::Display for ModelCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Conserved quantities of the stationary profile ODE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    /// Angular momentum J = Im(conj(W) W_x).
    pub j: f64,
    /// Energy E = |W_x|^2/2 + omega |W|^2/2 + gamma |W|^4/4.
    pub e: f64,
}

impl Invariants {
    pub fn new(j: f64, e: f64) -> Self {
        Self { j, e }
    }
}

/// Effective potential V_J(r) for r > 0.
pub fn effective_potential(case: ModelCase, j: f64, r: f64) -> f64 {
    let r2 = r * r;
    j * j / (2.0 * r2) + case.omega() * r2 / 2.0 + case.gamma() * r2 * r2 / 4.0
}

/// The cubic in y = r^2 whose roots are the turning points, normalized so
/// that P(r^2) = 4 r^2 (E - V_J(r)).
pub fn cubic_p(case: ModelCase, inv: Invariants, y: f64) -> f64 {
    let jj2 = 2.0 * inv.j * inv.j;
    match case {
        ModelCase::Defocusing => ((y - 2.0) * y + 4.0 * inv.e) * y - jj2,
        ModelCase::FocusingCounter => ((-y - 2.0) * y + 4.0 * inv.e) * y - jj2,
        ModelCase::FocusingCoro => ((-y + 2.0) * y + 4.0 * inv.e) * y - jj2,
    }
}

/// Derivative of `cubic_p` with respect to y.
pub fn cubic_p_prime(case: ModelCase, inv: Invariants, y: f64) -> f64 {
    match case {
        ModelCase::Defocusing => (3.0 * y - 4.0) * y + 4.0 * inv.e,
        ModelCase::FocusingCounter => (-3.0 * y - 4.0) * y + 4.0 * inv.e,
        ModelCase::FocusingCoro => (-3.0 * y + 4.0) * y + 4.0 * inv.e,
    }
}

/// Real roots of the case cubic, ordered by the convention
///
/// * defocusing:        0 <= y1 < y2 < y3,
/// * focusing-counter:  y3 < 0 <= y1 < y2,
/// * focusing-coro:     y3 <= 0 <= y1 < y2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicRoots {
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
}

impl CubicRoots {
    /// Turning radii r_i = sqrt(y_i) where defined (y_i >= 0).
    pub fn r1(&self) -> f64 {
        self.y1.max(0.0).sqrt()
    }
    pub fn r2(&self) -> f64 {
        self.y2.max(0.0).sqrt()
    }
    pub fn r3(&self) -> f64 {
        self.y3.max(0.0).sqrt()
    }

    /// Smallest distance between the third root and the oscillation band
    /// [y1, y2]; this is the quantity that controls integrability of every
    /// quadrature kernel.
    pub fn band_gap(&self, case: ModelCase) -> f64 {
        match case {
            ModelCase::Defocusing => self.y3 - self.y2,
            ModelCase::FocusingCounter | ModelCase::FocusingCoro => self.y1 - self.y3,
        }
    }
}

/// Roots of the monic cubic y^3 + b y^2 + c y + d, assuming three real roots.
/// Trigonometric solution followed by two Newton polish sweeps.
fn solve_monic_cubic(b: f64, c: f64, d: f64) -> [f64; 3] {
    // Depressed form t^3 + p t + q with y = t - b/3.
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = d - b * c / 3.0 + 2.0 * b * b * b / 27.0;

    let mut roots = if p >= -1e-300 {
        // Triple or near-triple root; fall back to the shift.
        [-shift, -shift, -shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let tau = 2.0 * std::f64::consts::PI / 3.0;
        [
            m * theta.cos() - shift,
            m * (theta - tau).cos() - shift,
            m * (theta + tau).cos() - shift,
        ]
    };

    for y in roots.iter_mut() {
        for _ in 0..2 {
            let f = ((*y + b) * *y + c) * *y + d;
            let df = (3.0 * *y + 2.0 * b) * *y + c;
            if df != 0.0 {
                *y -= f / df;
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// Roots of the case cubic at an interior point, in the case ordering.
pub fn cubic_roots(case: ModelCase, inv: Invariants) -> Result<CubicRoots> {
    let jj2 = 2.0 * inv.j * inv.j;
    // Monic coefficients of the cubic with the same roots as P.
    let (b, c, d) = match case {
        ModelCase::Defocusing => (-2.0, 4.0 * inv.e, -jj2),
        ModelCase::FocusingCounter => (2.0, -4.0 * inv.e, jj2),
        ModelCase::FocusingCoro => (-2.0, -4.0 * inv.e, jj2),
    };
    let sorted = solve_monic_cubic(b, c, d);
    let roots = match case {
        ModelCase::Defocusing => CubicRoots {
            y1: sorted[0],
            y2: sorted[1],
            y3: sorted[2],
        },
        // Focusing orderings put the non-positive root last.
        ModelCase::FocusingCounter | ModelCase::FocusingCoro => CubicRoots {
            y1: sorted[1],
            y2: sorted[2],
            y3: sorted[0],
        },
    };
    let gap = (roots.y2 - roots.y1).min(roots.band_gap(case));
    if !gap.is_finite() || gap < ROOT_GAP_MIN {
        return Err(Error::DegenerateRoots { gap });
    }
    Ok(roots)
}

/// Boundary flavours of the existence domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryKind {
    /// E = E_-(J): the orbit collapses onto a plane wave of constant modulus.
    PlaneWave,
    /// E = E_+(J) (defocusing): the orbit is homoclinic to the modulus maximum.
    Homoclinic,
}

/// Reason a point lies outside the open domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OutsideKind {
    Generic,
    /// Corotating (0,0): the NLS ground state sqrt(2)/cosh(x).
    Soliton,
}

/// Classification of a parameter point against the existence domain D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DomainClass {
    Interior,
    Boundary(BoundaryKind),
    Outside(OutsideKind),
}

impl DomainClass {
    pub fn is_interior(&self) -> bool {
        matches!(self, DomainClass::Interior)
    }
}

/// Maximal |J| for the defocusing family: J^2 < 4/27.
pub fn defocusing_j_max() -> f64 {
    2.0 / 27f64.sqrt()
}

fn solve_increasing_bracket<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    // Bisection until the bracket is tight, then Newton-free polish by
    // continued bisection; the callers' functions are cheap polynomials.
    let flo = f(lo);
    if flo > 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Parametrization roots of J and the critical radii of V_J (Fig. 2 data).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialFrame {
    /// Inner parametrization root (|q| small branch).
    pub q: f64,
    /// Outer root Q of J = Q(1-Q^2); defocusing only.
    pub cap_q: Option<f64>,
    /// Radius of the V_J critical point attached to q.
    pub r_q: f64,
    /// Radius of the V_J local minimum attached to Q; defocusing only.
    pub r_cap_q: Option<f64>,
}

/// Solve the case parametrization of J on its guaranteed bracket.
pub fn parametrize_j(case: ModelCase, j: f64) -> Result<PotentialFrame> {
    let s = j.signum();
    let a = j.abs();
    match case {
        ModelCase::Defocusing => {
            let jmax = defocusing_j_max();
            if a > jmax + 1e-15 {
                return Err(Error::OutOfRange(format!(
                    "defocusing requires J^2 <= 4/27, got J = {j}"
                )));
            }
            let a = a.min(jmax);
            // q - q^3 = a is increasing on [0, 1/sqrt(3)].
            let q = s * solve_increasing_bracket(|q| q - q * q * q - a, 0.0, 1.0 / 3f64.sqrt());
            // Q - Q^3 = a is decreasing on [1/sqrt(3), 1].
            let cap_q =
                s * solve_increasing_bracket(|t| a - (t - t * t * t), 1.0 / 3f64.sqrt(), 1.0);
            Ok(PotentialFrame {
                q,
                cap_q: Some(cap_q),
                r_q: (1.0 - q * q).max(0.0).sqrt(),
                r_cap_q: Some((1.0 - cap_q * cap_q).max(0.0).sqrt()),
            })
        }
        ModelCase::FocusingCounter => {
            // q^3 - q = a is increasing on [1, inf).
            let mut hi = 2.0;
            while hi * hi * hi - hi < a {
                hi *= 2.0;
            }
            let q = s * solve_increasing_bracket(|q| q * q * q - q - a, 1.0, hi);
            Ok(PotentialFrame {
                q,
                cap_q: None,
                r_q: (q * q - 1.0).max(0.0).sqrt(),
                r_cap_q: None,
            })
        }
        ModelCase::FocusingCoro => {
            // q + q^3 = a is increasing on [0, inf).
            let mut hi = 1.0;
            while hi + hi * hi * hi < a {
                hi *= 2.0;
            }
            let q = s * solve_increasing_bracket(|q| q + q * q * q - a, 0.0, hi);
            Ok(PotentialFrame {
                q,
                cap_q: None,
                r_q: (1.0 + q * q).sqrt(),
                r_cap_q: None,
            })
        }
    }
}

/// Lower envelope E_-(J) of the existence domain.
pub fn e_minus(case: ModelCase, j: f64) -> Result<f64> {
    let frame = parametrize_j(case, j)?;
    let q2 = frame.q * frame.q;
    Ok(match case {
        ModelCase::Defocusing => {
            let cq2 = frame.cap_q.unwrap().powi(2);
            0.25 * (1.0 - cq2) * (1.0 + 3.0 * cq2)
        }
        ModelCase::FocusingCounter => 0.25 * (q2 - 1.0) * (3.0 * q2 + 1.0),
        ModelCase::FocusingCoro => 0.25 * (q2 + 1.0) * (3.0 * q2 - 1.0),
    })
}

/// Upper envelope E_+(J); only the defocusing domain is bounded above.
pub fn e_plus(j: f64) -> Result<f64> {
    let frame = parametrize_j(ModelCase::Defocusing, j)?;
    let q2 = frame.q * frame.q;
    Ok(0.25 * (1.0 - q2) * (1.0 + 3.0 * q2))
}

/// Classify (J, E) against the case existence domain.
pub fn domain_contains(case: ModelCase, inv: Invariants) -> DomainClass {
    match case {
        ModelCase::Defocusing => {
            let jmax2 = 4.0 / 27.0;
            let j2 = inv.j * inv.j;
            if j2 > jmax2 - BOUNDARY_MARGIN * BOUNDARY_MARGIN {
                // On the fold J^2 = 4/27 the two envelopes meet in a plane wave.
                if (j2 - jmax2).abs() <= 1e-12 && (inv.e - 1.0 / 3.0).abs() <= BOUNDARY_MARGIN {
                    return DomainClass::Boundary(BoundaryKind::PlaneWave);
                }
                return DomainClass::Outside(OutsideKind::Generic);
            }
            let lo = e_minus(case, inv.j).expect("J inside range");
            let hi = e_plus(inv.j).expect("J inside range");
            if inv.e - lo > BOUNDARY_MARGIN && hi - inv.e > BOUNDARY_MARGIN {
                DomainClass::Interior
            } else if (inv.e - lo).abs() <= BOUNDARY_MARGIN {
                DomainClass::Boundary(BoundaryKind::PlaneWave)
            } else if (inv.e - hi).abs() <= BOUNDARY_MARGIN {
                DomainClass::Boundary(BoundaryKind::Homoclinic)
            } else {
                DomainClass::Outside(OutsideKind::Generic)
            }
        }
        ModelCase::FocusingCounter => {
            let lo = e_minus(case, inv.j).expect("all J admissible");
            if inv.e - lo > BOUNDARY_MARGIN {
                DomainClass::Interior
            } else if (inv.e - lo).abs() <= BOUNDARY_MARGIN {
                DomainClass::Boundary(BoundaryKind::PlaneWave)
            } else {
                DomainClass::Outside(OutsideKind::Generic)
            }
        }
        ModelCase::FocusingCoro => {
            if inv.j.abs() <= BOUNDARY_MARGIN && inv.e.abs() <= BOUNDARY_MARGIN {
                return DomainClass::Outside(OutsideKind::Soliton);
            }
            let lo = e_minus(case, inv.j).expect("all J admissible");
            if inv.e - lo > BOUNDARY_MARGIN {
                DomainClass::Interior
            } else if (inv.e - lo).abs() <= BOUNDARY_MARGIN {
                DomainClass::Boundary(BoundaryKind::PlaneWave)
            } else {
                DomainClass::Outside(OutsideKind::Generic)
            }
        }
    }
}

/// Require an interior point, converting the classification into an error.
pub fn require_interior(case: ModelCase, inv: Invariants) -> Result<()> {
    match domain_contains(case, inv) {
        DomainClass::Interior => Ok(()),
        other => Err(Error::OutOfRange(format!(
            "(J, E) = ({}, {}) is not interior to the {case} domain: {other:?}",
            inv.j, inv.e
        ))),
    }
}

/// Explicit homoclinic orbit on the defocusing upper boundary E = E_+(J),
/// connecting the plane waves of wavenumber q as x -> -inf / +inf.
///
/// Requires q^2 < 1/3.  At q = 0 the phase factor degenerates and the orbit
/// is the real front tanh(x / sqrt(2)).
pub fn homoclinic_reference(q: f64, x: f64) -> num_complex::Complex64 {
    use num_complex::Complex64;
    if q == 0.0 {
        return Complex64::new((x * FRAC_1_SQRT_2).tanh(), 0.0);
    }
    let c = ((1.0 - 3.0 * q * q) / 2.0).sqrt();
    let th = (c * x).tanh();
    let modulus = (2.0 * (q * q + c * c * th * th)).sqrt();
    let phase = q * x + (c / q * th).atan();
    Complex64::from_polar(modulus, phase)
}
