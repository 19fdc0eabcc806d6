//! Bar and cyclic complexes over a sigma-extended form algebra, Chern
//! characters of finite-dimensional Fredholm models, Clifford symbol calculus,
//! Mehler kernels with twisted convolution, and desk-scale checks of the
//! small-time localization limit.

pub mod scalar;
pub mod multiform;
pub mod barcx;
pub mod clifford;
pub mod fredholm;
pub mod mehler;
pub mod localize;
pub mod torus;
