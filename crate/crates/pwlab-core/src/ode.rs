//! Shooting integrator for the stationary profile equation.
//!
//! The complex second-order equation W'' + omega W + gamma |W|^2 W = 0 is
//! integrated as a four-dimensional real first-order system with an
//! explicit embedded Runge-Kutta pair of order 8(5,3) and seventh-order
//! dense output (Hairer's DOP853, via the `ode_solvers` crate), which keeps
//! the resampled trajectory at the accuracy of the step tolerance.

use ode_solvers::{Dop853, System, Vector4};

use crate::case::ModelCase;
use crate::error::{Error, Result};

/// One dense-output sample of the orbit: W and W'.
pub type OrbitState = [f64; 4];

struct StationaryEq {
    omega: f64,
    gamma: f64,
}

impl System<f64, Vector4<f64>> for StationaryEq {
    fn system(&self, _x: f64, y: &Vector4<f64>, dy: &mut Vector4<f64>) {
        let modulus2 = y[0] * y[0] + y[1] * y[1];
        let factor = -(self.omega + self.gamma * modulus2);
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = factor * y[0];
        dy[3] = factor * y[1];
    }
}

/// Integrate the stationary equation over [0, x_end] with dense output every
/// `dx`.  Returns the sample abscissae and states, including the sample at
/// (or within one rounding unit of) `x_end` itself.
pub fn integrate_orbit(
    case: ModelCase,
    y0: OrbitState,
    x_end: f64,
    dx: f64,
    tol: f64,
) -> Result<(Vec<f64>, Vec<OrbitState>)> {
    let eq = StationaryEq {
        omega: case.omega(),
        gamma: case.gamma(),
    };
    // Pad the upper limit by half a sample so the accumulated dense-output
    // abscissa cannot drop the final sample to rounding.
    let mut stepper = Dop853::new(
        eq,
        0.0,
        x_end + 0.5 * dx,
        dx,
        Vector4::from(y0),
        tol,
        tol,
    );
    stepper
        .integrate()
        .map_err(|e| Error::ToleranceNotMet(e.to_string()))?;
    let xs: Vec<f64> = stepper.x_out().clone();
    let ys: Vec<OrbitState> = stepper
        .y_out()
        .iter()
        .map(|v| [v[0], v[1], v[2], v[3]])
        .collect();
    let wanted = (x_end / dx).round() as usize + 1;
    if xs.len() < wanted {
        return Err(Error::ToleranceNotMet(format!(
            "dense output produced {} of {} samples",
            xs.len(),
            wanted
        )));
    }
    Ok((xs, ys))
}

/// Conserved quantities (J, E) of one orbit state.
pub fn state_invariants(case: ModelCase, y: &OrbitState) -> (f64, f64) {
    let m2 = y[0] * y[0] + y[1] * y[1];
    let v2 = y[2] * y[2] + y[3] * y[3];
    let j = y[0] * y[3] - y[1] * y[2];
    let e = 0.5 * v2 + 0.5 * case.omega() * m2 + 0.25 * case.gamma() * m2 * m2;
    (j, e)
}
