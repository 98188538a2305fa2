//! 2D quantum scattering on a periodic grid and the tomographic inverse
//! problem built on top of it.
//!
//! The crate has three layers:
//!
//! * spectral machinery: [`grid`] (wave packets, unitary Fourier transform),
//!   [`kinematics`] (dispersion relations), [`potentials`] (analytic potential
//!   catalog with line-integral quadrature oracles);
//! * time evolution and scattering: [`propagators`] (free / split-step /
//!   Dollard engines), [`scattering`] (finite-time scattering operators,
//!   high-energy limit scans, phase-profile extraction);
//! * inversion: [`recon`] (sinogram assembly, filtered back-projection) and
//!   [`io`] (QF2D1 field dumps, CSV emitters).
//!
//! All numerical hot loops go through [`exec`], which uses rayon when the
//! `parallel` feature is enabled (the default) and plain iterators otherwise.
//! Parallel and serial runs produce bit-identical results.

pub mod error;
pub mod exec;
pub mod fft;
pub mod grid;
pub mod io;
pub mod kinematics;
pub mod potentials;
pub mod propagators;
pub mod quad;
pub mod recon;
pub mod scattering;

pub use error::HescError;
pub type Result<T> = std::result::Result<T, HescError>;
