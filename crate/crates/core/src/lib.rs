//! Neural tangent kernel toolkit for hard-constraint physics-informed networks.
//!
//! A trial function `u = A + B * N` satisfies Dirichlet data exactly through the
//! boundary pair `(A, B)`; this crate assembles the tangent kernels of the bare
//! network (`K_n`), the trial function (`K_t = B K_n B`) and the PDE residual
//! (`K_r`), analyses their spectra, predicts lazy-regime training behaviour and
//! trains the networks with SGD, Adam and L-BFGS.
//!
//! Module map:
//!
//! - [`linalg`]: symmetric matrices, eigendecomposition, CKA, ensemble and rank statistics
//! - [`net`]: MLP parameters with exact parameter Jacobians of `N`, `grad N`, `lap N`
//! - [`boundary`]: boundary-function families, geometric features and grids
//! - [`pde`]: linear operators, benchmark problems and residual coefficient fields
//! - [`kernels`]: `K_n`, `K_t`, `K_r` assembly along two independent routes
//! - [`dynamics`]: frozen-kernel residual dynamics and convergence predictions
//! - [`train`]: loss, optimizers and the phased training driver

pub mod boundary;
pub mod dynamics;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod net;
pub mod pde;
pub mod train;

pub use error::{Error, Result};
