//! Residue norms on explicit simple-normal-crossing models of projective space.
//!
//! The crate is organised bottom-up:
//!
//! * [`expr`]: a small symbolic expression engine in radial variables, used
//!   for the smooth factors that appear in local chart data.
//! * [`model`]: standard-cover charts of `P^n`, the weights `psi` and `phi_L`,
//!   sections, and their torus-reduced local presentation.
//! * [`quad`]: tanh-sinh based iterated quadrature and a Monte-Carlo
//!   cross-check.
//! * [`residue`]: the residue function `R(eps)[sigma]`, its integration by
//!   parts recursion, analytic continuation and the lc-measure norm at zero.
//! * [`extend`]: Gram matrices, the orthogonal decomposition `H = H[sigma] + E`,
//!   minimal extensions and the search for the minimal normalisation.
//! * [`report`]: CSV tables and SVG charts.

pub mod expr;
pub mod extend;
pub mod fixtures;
pub mod model;
pub mod quad;
pub mod report;
pub mod residue;

pub use expr::{Expr, ExprError};
pub use model::{ProjectiveModel, Section};
pub use quad::{QuadOptions, QuadResult};
pub use residue::{ResidueEngine, ResidueError};
