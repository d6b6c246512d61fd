//! SAT-driven discovery, verification and composition of NP-hardness
//! gadgets for completion problems on pattern-avoiding sign mappings.

pub mod classify;
pub mod encode;
pub mod error;
pub mod gadgets;
pub mod mapping;
pub mod oracle;
pub mod parallel;
pub mod patterns;
pub mod reduce;
pub mod sat;
pub mod search;

pub use error::{Error, Result};
pub use mapping::{PartialSignMapping, RSubset, Sign, SignState, Word};
pub use patterns::{Family, Pattern};
