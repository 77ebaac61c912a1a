//! Binary-response regression downstream of the prior: predictive tables,
//! bias, prior-data conflict, marginal inference and the joint estimate.

pub mod bias;
pub mod cache;
pub mod conflict;
pub mod data;
pub mod inference;
pub mod mle;
pub mod sampler;
pub mod table;

pub use bias::{
    bias_against_from_tables, bias_in_favor_from_tables, cell_ratios, BiasAgainst, BiasInFavor,
    BiasInFavorPoint, BiasStudy, CellRatios,
};
pub use cache::TableCache;
pub use conflict::{prior_data_conflict, ConflictReport};
pub use data::{BinaryRegressionData, Experiment};
pub use inference::{
    marginal_rb_inference, ExtendPolicy, GridSpec, HypothesisAssessment, Interval,
    MarginalInferenceReport,
};
pub use mle::{joint_rb_estimate, EstimateStatus, JointEstimate};
pub use sampler::{CoefficientSampler, DiscretePrior};
pub use table::{build_predictive_table, exact_predictive_table, PredictiveTable};
