//! Quasi-periodic travelling waves of the cubic nonlinear Schroedinger
//! equation: existence domains, wave numbers and their derivatives, the KAM
//! determinant, wave profiles by shooting, stability matrices and spectra of
//! the second variation, and split-step time evolution.
//!
//! The library is organized bottom-up:
//!
//! * [`case`]     - model cases, effective potentials, cubic roots, domains;
//! * [`quad`]     - adaptive Gauss-Legendre quadrature;
//! * [`waves`]    - T, Phi, Psi, action, charge and their (J, E)-derivatives,
//!   the KAM determinant and the (T, Psi) chart inversion;
//! * [`profile`]  - high-accuracy wave profiles by ODE shooting;
//! * [`family`]   - the two-parameter wave family, the matrices M, K and the
//!   Hessian H of the structure function, plus grid scans;
//! * [`spectral`] - the second-variation operator in a real Fourier basis,
//!   eigenvalue counts and kernel checks;
//! * [`dynamics`] - split-step Fourier evolution, the orbital semi-distance
//!   and stability experiments.
//!
//! Grid scans and ensembles are data-parallel; the `parallel` feature
//! (enabled by default) runs them on rayon, and disabling it falls back to
//! sequential loops with identical output.

pub mod case;
pub mod error;
pub mod family;
pub mod par;
pub mod fourier;
pub mod ode;
pub mod profile;
pub mod quad;
pub mod spectral;
pub mod waves;

pub use case::{
    cubic_roots, domain_contains, e_minus, e_plus, homoclinic_reference, parametrize_j,
    BoundaryKind, CubicRoots, DomainClass, Invariants, ModelCase, OutsideKind, PotentialFrame,
};
pub use error::{Error, Result};
pub use family::{
    d_function, family_map, hessian_h, matrix_k, matrix_m, scan_det_hessian, EnergyStart,
    FamilyMap, ScanRow, StabilityReport,
};
pub use profile::{shoot_profile, shoot_profile_with_tol, Functionals, WaveProfile};
pub use spectral::{
    assemble_h, constrained_positivity, kernel_ode_solutions, spectrum_low, OperatorMatrix,
    SpectralReport,
};
pub use waves::{
    charge, derivatives, invert_t_psi, kam_delta, map_to_t_psi, momentum, wave_numbers_at,
    Derivatives, PhaseBranch, QuadratureFrame, WaveNumbers,
};
