//! Detection and classification of history alterations in Git repositories.

pub mod analyze;
pub mod categorize;
pub mod corpus;
pub mod dataset;
pub mod db;
pub mod detect;
pub mod error;
pub mod gitcli;
pub mod hooks;
pub mod model;
pub mod odb;
pub mod origin;
pub mod report;
pub mod snapshot;

pub use error::{Error, Result};
