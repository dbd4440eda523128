//! Compatible (mimetic) finite element kernels for the periodic 1D wave
//! equation and the linear and nonlinear rotating shallow water equations
//! on doubly periodic quadrilateral meshes.
//!
//! The building blocks are layered bottom-up:
//!
//! * [`mesh`]: periodic interval and structured quadrilateral meshes;
//! * [`space`]: `CG(p)`, `DG(p)` and quadrilateral `RT(k)` spaces, DoF maps,
//!   interpolation and point evaluation;
//! * [`assembly`]: every bilinear form the discretisations need, as CSR
//!   matrices ([`sparse::SparseMatrix`]);
//! * [`linalg`]: Jacobi-preconditioned CG and dense generalised eigensolves;
//! * [`models`]: implicit-midpoint steppers for the wave and shallow water
//!   systems, including potential vorticity diagnosis and APVM;
//! * [`diagnostics`]: conserved quantities, inf-sup constants, dispersion
//!   spectra, balance residuals and DoF-ratio audits;
//! * [`scenario`]: configuration files, presets, runs and convergence studies
//!   used by the command-line driver.

pub mod assembly;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod models;
pub mod poly;
pub mod quadrature;
pub mod scenario;
pub mod space;
pub mod sparse;

pub use error::{Error, Result};
pub use mesh::{Mesh, Mesh1D, Mesh2D};
pub use space::{Family, FeFunction, FunctionSpace};
pub use sparse::SparseMatrix;
