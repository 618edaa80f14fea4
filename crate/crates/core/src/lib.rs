//! Joint-SNV (SNP-set) association testing.
//!
//! Six tests over a shared genotype model (Hotelling T^2, sumstat, SKAT,
//! SKAT-O, Fisher's combination, and the statistic-space boundary based test),
//! PLINK I/O, quality control, a case-control simulator and a power harness.

pub mod data;
pub mod error;
pub mod io;
pub mod perm;
pub mod pipeline;
pub mod plot;
pub mod qc;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
