//! Robustness certification for support vector machine classifiers.
//!
//! An input region (an L∞ ball or an image border frame) is abstracted as a
//! box of intervals and as a vector of reduced affine forms. The classifier is
//! then evaluated in those abstract domains; every non-`⊤` answer is
//! guaranteed to hold for all points of the region, including under
//! floating-point rounding.

pub mod abstract_svm;
pub mod interval;
pub mod multiclass;
pub mod perturb;
pub mod raf;
pub mod rounding;
pub mod svm;
pub mod verify;

pub use abstract_svm::{Domain, Verdict};
pub use interval::{Interval, IntervalBox};
pub use raf::{BilinearMode, Raf};
