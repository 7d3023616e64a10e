//! Random generation and loop statistics of rooted quartic planar maps with
//! two legs, seen as plane curves ("doodles") whose self-crossings are the
//! map vertices.

pub mod asymptotics;
pub mod enumeration;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod map;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod strands;

pub use asymptotics::{FitResult, ModelId};
pub use error::{Error, Result};
pub use map::{Dart, MapDiagnostics, QuadMap, Rule, Violation};
pub use rng::Rng;
pub use sampler::{sample_map, BlossomTree, CompleteBinaryTree, PartialMap, Sampler};
pub use stats::{Estimate, Observation};
pub use strands::{count_loops, StrandDecomposition};
