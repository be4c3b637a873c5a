//! IO companion for `graspkit-core`: dataset parsers, the canonical
//! annotation format, refinement parameter files and report writers.

pub mod canonical;
pub mod datasets;
pub mod params;
pub mod report;
