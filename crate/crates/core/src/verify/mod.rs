//! Monte Carlo and analytic property checks for random fields.

mod ecf;
mod experiments;
mod monotone;
mod report;

pub use ecf::{empirical_cf, empirical_cf_with_se, mc_tolerance};
pub use experiments::{
    test_association, test_id, test_independence, test_negative_association, test_stoch_continuity,
    ContinuityOptions, McOptions, ANALYTIC_ID_TOL, ANALYTIC_INDEPENDENCE_TOL,
};
pub use monotone::{make_monotone_function, MonotoneKind, MonotoneTestFunction};
pub use report::{ExperimentReport, Statistic, Verdict};
