//! Derivative-free Lyapunov exponents for continuous maps of the plane, the
//! flat torus and the closed disc.
//!
//! The exponents are defined through the growth of distance ratios over
//! shrinking dynamical balls, so they make sense for maps with no derivative.
//! For differentiable maps they agree with the classical exponents, which
//! are provided alongside for comparison.

#[cfg(feature = "cli")]
pub mod cli;
pub mod dynball;
pub mod error;
pub mod experiments;
pub mod exponents;
pub mod geometry;
pub mod maps;

pub use error::{Error, Result};

/// Evaluate `f(0..len)` in parallel when the `parallel` feature is on.
/// Output order is index order either way, so reductions over the result
/// are bit-identical regardless of thread count.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}
