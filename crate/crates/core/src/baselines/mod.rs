//! Comparison systems: MF-AVG, ATT-AVG and user-based CF with AVG, least
//! misery and relevance-disagreement aggregation.

pub mod cf;
pub mod neural;

pub use cf::{cf_aggregate, Aggregation, CfModel};
pub use neural::{att_avg_forward, att_avg_group_rep, mf_avg_forward, mf_avg_group_rep};
