//! Regular curves whose initial and terminal cluster sets are prescribed
//! continua of the Riemann sphere, built at finite scale and checked
//! numerically.
//!
//! The construction runs in stages, one module each:
//!
//! 1. [`continuum`]: nets and ε-chains for the two target continua.
//! 2. [`sequence`]: a double sequence of nodes whose two tails approach the
//!    continua, with horizontal and vertical marker segments.
//! 3. [`curve`]: the polygonal curve through those nodes.
//! 4. [`smoothing`]: a C¹ curve obtained by blending every corner.
//! 5. [`approx`]: a single polynomial tracking the C¹ curve and its derivative
//!    under a weighted error schedule.
//!
//! [`analysis`] holds the verification surface, [`gallery`] the closed-form
//! example curves and the strip transfer, and [`pipeline`] the end-to-end
//! driver used by the command-line tool.

// `!(a < b)` is used on purpose so that NaN fails every bound check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod approx;
pub mod continuum;
pub mod curve;
pub mod export;
pub mod gallery;
pub mod pipeline;
pub mod sequence;
pub mod smoothing;
pub mod sphere;

pub use num_complex::Complex64;
