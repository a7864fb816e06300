//! Causal information flow through finite channels.
//!
//! A [`Model`] couples an input distribution μ on a finite product space
//! `X_N` with a channel ν to a finite output and an output partition γ.
//! [`PartitionFamily`] values assign a partition of `X_M` to every subset
//! `M ⊆ N`; the channel-adapted extension and reduction families are
//! projective, which makes [`information_flow`] satisfy an exact chain rule.
//!
//! ```
//! use infoflow::{build_copy, projective_extension, chain_decomposition, Subset};
//!
//! let model = build_copy(1.0).unwrap();
//! let family = projective_extension(&model).unwrap();
//! let order = [Subset::singleton(0), Subset::singleton(1)];
//! let report = chain_decomposition(&model, &family, &order).unwrap();
//! assert!(report.terms[0].value.abs() < 1e-12);
//! assert!((report.terms[1].value - std::f64::consts::LN_2).abs() < 1e-9);
//! ```

pub mod channel;
pub mod cli;
pub mod error;
pub mod measures;
pub mod model_file;
pub mod partition;
pub mod random;
pub mod scenarios;
pub mod sigma;

pub use channel::{
    classical_marginal, hat_marginal, input_marginal, pushforward, pushforward_gamma, Channel,
    HatKernel, InputDistribution, Model,
};
pub use error::{Error, Result};
pub use measures::{
    chain_decomposition, chain_rule_audit, classical_cmi, classical_mi, conditional_entropy,
    entropy, full_audit, information_flow, mutual_information, natural_properties_audit,
    AuditReport, Check, FlowContext, FlowReport, FlowTerm, Property, Tolerances, Units,
};
pub use partition::{
    all_partitions, hyperedge_components, lift, FiniteSet, Partition, ProductSpace, Subset,
};
pub use scenarios::{analytic_copy, build_copy, build_sum, build_transfer, transfer_report};
pub use sigma::{
    build_family, channel_partition, check_projectivity, classical_family, context_trace, m_trace,
    projective_extension, projective_reduction, raw_trace_family, FamilyKind, PartitionFamily,
};
