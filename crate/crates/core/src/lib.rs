//! Open-system dynamics and quantum Fisher information of a two-level
//! Unruh-DeWitt detector coupled to a massless scalar field.
//!
//! The crate is organised bottom-up:
//!
//! - [`trajectory`]: worldlines and the Wightman function along them.
//! - [`rates`]: Lindblad rate coefficients, closed forms and a numerical
//!   Fourier-transform route.
//! - [`dynamics`]: Bloch-vector evolution, closed form and ODE integration.
//! - [`qfi`]: quantum Fisher information by closed forms, the Bloch-vector
//!   formula and the symmetric-logarithmic-derivative spectral formula.
//! - [`sweep`]: parameter grids and figure presets with CSV/JSON output.
//! - [`verify`]: the property suites run by `udw-qfi verify`.
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod qfi;
pub mod quadrature;
pub mod rates;
pub mod special;
pub mod sweep;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
