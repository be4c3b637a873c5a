//! Grasp-detection mathematics for parallel-plate grippers.
//!
//! The crate covers the numeric parts of a rotated-rectangle grasp pipeline
//! that do not require a CNN: exact oriented-rectangle geometry and IoU,
//! regression-target codecs between proposals and grasp candidates, training
//! losses with analytic gradients, a small trainable refinement MLP driven by
//! segmentation probability maps, and the Jaccard-index evaluation protocol
//! with threshold sweeps.
//!
//! Coordinate convention throughout: image coordinates, `x` rightward and `y`
//! downward, angles in radians measured from the +x axis toward +y. A grasp
//! rectangle's `theta` is the direction of its opening (`w`) axis and is kept
//! in `[0, pi)` since a parallel-plate grasp is invariant under rotation by pi.
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std` feature
//! only switches the float math backend and error-trait plumbing.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod codec;
pub mod eval;
pub mod geometry;
pub mod losses;
pub mod refine;

mod fp;

pub use codec::{
    CorrectionFactors4, CorrectionFactors5, GraspCandidate, OrientationBins, RegionProposal,
};
pub use eval::{EvalReport, MetricConfig};
pub use geometry::{ConvexPolygon, OrientedRect, Point2};
pub use losses::{LossWeights, OrientationScores, ProposalBatch, SegmentationMask};
pub use refine::{MlpParams, ProbabilityMap, RefineInput, SyntheticScene};
