//! Fourier-coefficient partial sums of level-1 holomorphic cusp forms.
//!
//! The crate generates q-expansions of the one-dimensional level-1 cusp
//! spaces, forms the partial sums `S_f(n) = a(1) + ... + a(n)`, and evaluates
//! the Dirichlet series built from them:
//!
//! * [`dirichlet`]: the Rankin-Selberg series, shifted convolution sums, the
//!   diagonal/off-diagonal combination `W(s; f, g)`, and `D(s, S_f x S_g)`,
//!   each with a truncation bound;
//! * [`mellin`]: vertical-line quadrature used to check the Barnes integral,
//!   the decomposition of `D` into `W` plus a Mellin-Barnes contour integral,
//!   and the exponential-smoothing transform;
//! * [`moments`]: the smoothed second moment against its `C X^{1/2}` main
//!   term, with a log-log fit of the residual.
//!
//! Inner loops (quadrature nodes, moment grids, chunked reductions) run on
//! rayon when the `parallel` feature is enabled (the default). All parallel
//! reductions merge fixed-size chunks in a fixed order, so results are
//! bit-identical with and without the feature.

pub mod cache;
pub mod complexfn;
pub mod dirichlet;
pub mod envelope;
mod error;
pub mod mellin;
pub mod moments;
pub mod par;
pub mod qseries;
pub mod summation;
pub mod sums;

pub use error::{Error, Result};
pub use num_complex::Complex64;
