//! Numerical companion to a constructive treatment of Brownian motion:
//! exact set-function extension on finite universes, Gaussian measures via
//! characteristic functions, the min-kernel projective family, covering and
//! chaining machinery with explicit regularity constants, and statistical
//! verification of the invariance properties of sampled Brownian paths.

pub mod brownian;
pub mod chaining;
pub mod exact;
pub mod gaussian;
pub mod kc_bounds;
pub mod metric_cover;
pub mod projective;
pub mod report;
pub mod rng;
pub mod setsystems;
pub mod stats;
pub mod tol;
