//! Construction and analysis of finite-length irregular spatially-coupled
//! LDPC codes built from circulant-based block codes.
//!
//! The pipeline: split a block code's circulants between a dummy component
//! and the coupled components ([`cb`]), count protograph cycles-6 through
//! overlap parameters ([`overlap`], [`cycles`]), search for partitionings
//! that minimize that count ([`optimizer`]), tune circulant powers ([`cpo`]),
//! and measure frame error rates under min-sum decoding ([`sim`]).

pub mod cb;
pub mod cpo;
pub mod cycles;
pub mod error;
pub mod grid;
pub mod optimizer;
pub mod overlap;
pub mod sim;
pub mod sparse;

pub use cb::{
    assemble_sc, build_sc, degree_distributions, make_ab_powers, partition, protograph_of,
    CbMatrix, Circulant, DegreeDistribution, Label, PartitioningMatrix, Protograph, ScCode,
};
pub use cycles::{
    brute_force_proto_cycles, girth, lifted_cycle_count, theorem1_count, CycleCensus, Scope,
};
pub use error::{Error, Result};
pub use overlap::{build_pi, enumerate_ndi, expand_dependent, OverlapTable, RowSet};
pub use sparse::SparseMatrix;
