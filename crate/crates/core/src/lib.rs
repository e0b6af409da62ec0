//! Synthesis, cause analysis and staged verification of first-order rules
//! for a rule-governed knowledge base.

pub mod fol;
pub mod analysis;
pub mod consolidation;
pub mod kb;
pub mod oracle;
pub mod pipeline;
pub mod verification;
