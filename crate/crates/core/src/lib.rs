// SPDX-License-Identifier: Apache-2.0

//! Delay-oriented cut-based technology mapping with learned cut-delay classes.
//!
//! The pipeline: an [`aig::Aig`] is cut-enumerated ([`cuts`]), cuts are
//! Boolean-matched against a genlib [`library::Library`], and a dynamic program
//! ([`mapper`]) selects a cover using a pluggable cost model. The realized
//! netlist is timed ([`timing`]), its critical path is traced back to AIG cuts
//! to label training data ([`dataset`]), and the [`neural`] model learns to
//! predict cut-delay classes that can then drive the mapper.

pub mod aig;
pub mod aiger;
pub mod cuts;
pub mod dataset;
pub mod error;
pub mod library;
pub mod mapper;
pub mod neural;
pub mod timing;
pub mod verilog;

pub use aig::{Aig, AigBuilder, Edge, NodeId, NodeKind};
pub use error::{AigError, AigerError, DatasetError, LibraryError, MapError, ModelError, TimingError};
