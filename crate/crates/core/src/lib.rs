//! Equivariant test maps for fan partitions of measures on the 2-sphere.
//!
//! The exact side builds the `Q4n`-equivariant map `S³ → W` for 2-fans and
//! 3-fans, traces its singular set against the subspace arrangement and reads
//! off the bordism class in `Ω₁(Q4n)`. The numerical side partitions weighted
//! point clouds by spherical fans.

pub mod arrangement;
pub mod bordism;
pub mod eqmap;
pub mod exactlin;
pub mod fanmeasure;
pub mod joinsphere;
pub mod pipeline;
pub mod qgroup;
pub mod solver;

pub use arrangement::{AlphaVector, InvArrangement, RepSpec};
pub use bordism::BordismClass;
pub use eqmap::{Crossing, SingularSet, VertexMap};
pub use exactlin::{RMatrix, Rational, Subspace};
pub use fanmeasure::{Fan, MeasureCloud, MeasureError};
pub use joinsphere::{Convention, JoinComplex};
pub use pipeline::{Check, PipelineError, Report};
pub use qgroup::{AbelianStructure, DElement, GroupSpec, QElement};
pub use solver::{ExploreReport, ExploreRequest, SolveError, SolveRequest, SolveResult};
