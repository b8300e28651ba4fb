// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::aig::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum AigError {
    #[error("invalid AIG: {0}")]
    Invalid(String),
    #[error("simulation pattern mismatch: {0}")]
    PatternMismatch(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("AIGER parse error at byte {offset}: {message}")]
pub struct AigerError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum LibraryError {
    #[error("genlib line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cell {cell}: fanin {fanin} exceeds the supported maximum of {max}")]
    FaninTooLarge { cell: String, fanin: usize, max: usize },
    #[error("library has no inverter cell")]
    MissingInverter,
    #[error("library has no two-input cell in the AND2 NPN class")]
    MissingAnd2Class,
}

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("mapping infeasible: node {node} has no matched cut")]
    Infeasible { node: NodeId },
    #[error("mapping infeasible: output {index} is driven by a constant and the library has no constant cell")]
    ConstantOutput { index: usize },
    #[error("cut prediction failed: {0}")]
    Prediction(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum TimingError {
    #[error("combinational cycle through instance {instance}")]
    Cycle { instance: usize },
    #[error("negative delay {0} ps cannot be binned")]
    NegativeDelay(f64),
    #[error("instance {instance} refers to unknown cell {cell}")]
    UnknownCell { instance: usize, cell: usize },
    #[error("invalid binning: {0}")]
    InvalidBinning(String),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("critical-path instance {instance} has no cover provenance")]
    MissingProvenance { instance: usize },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter file: {0}")]
    Format(String),
    #[error("parameter file version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("model configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("non-finite loss at epoch {epoch}: {detail}")]
    NonFiniteLoss { epoch: usize, detail: String },
    #[error("training split is empty")]
    EmptyTrainingSet,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cut has no leaves")]
    EmptyCut,
    #[error("training record: {0}")]
    BadRecord(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
