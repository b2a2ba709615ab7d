//! Streaming Slepian-Wolf coding with truncated-memory encoders.
//!
//! The crate covers the analytic side (information measures, Gallager-form
//! exponents, moderate-deviations constants, union bounds) and an executable
//! codec with a Monte Carlo driver for small block lengths.

pub mod codec;
pub mod error;
pub mod error_bounds;
pub mod exponents;
pub mod info_measures;
pub mod md_analysis;
pub mod optimize;
pub mod simulator;
pub mod source_model;
pub mod stream_schedule;

pub use codec::{BinningCode, DecodeOutcome, DecodeTrace, Side, StageTrace, SuffixScore};
pub use error::{Error, Result};
pub use error_bounds::{BoundBreakdown, BoundInputs, FamilyTerm};
pub use exponents::{GallagerCurves, GammaMin};
pub use info_measures::SourceProfile;
pub use md_analysis::{BoundaryTarget, Case, GainVerdict, SourceFamily};
pub use simulator::{RateSpec, SimConfig, SimReport};
pub use source_model::{JointPmf, SourceStream};
pub use stream_schedule::{BinFamily, BlockRange, DecodePlan, Schedule, Stage};
