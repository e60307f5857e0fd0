//! Bayesian persuasion of a receiver who ranks actions by a convex,
//! piecewise-linear risk functional of the posterior, with CVaR as the
//! leading case.
//!
//! * [`model`]: instances, schemes, plausibility, value, regret and margin.
//! * [`cvar`]: CVaR and its affine pieces, the risk dispatcher and the
//!   two-state toolkit.
//! * [`lp`]: the simplex solver every optimization routine uses.
//! * [`exact`]: the active-facet LP and the expected-utility baseline.
//! * [`approx`]: grid discretization with statistic cells.
//! * [`hardness`]: clique-indexed risk instances.
//! * [`oracle`]: brute-force reference computations.
//! * [`experiments`]: scenario builders and parameter sweeps.

pub mod approx;
pub mod cvar;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod hardness;
pub mod lp;
pub mod model;
pub mod oracle;

pub use approx::{
    solve_discretized, solve_discretized_local, DiscretizeParams, DiscretizedSolution,
    LocalSolution,
};
pub use cvar::{
    concavify_2x2, cvar_facets, cvar_value, rho, thresholds_2x2, FacetSet, ThresholdCase,
    Thresholds,
};
pub use error::{Error, Result};
pub use exact::{evaluate_under_cvar, risk_neutral_solve, solve_exact, ExactSolution};
pub use lp::{solve_lp, LinearRow, LpProblem, LpSolution, LpStatus};
pub use model::{
    ic_margin, ic_regret, scheme_entropy, sender_value, validate_instance, JointMass,
    PersuasionInstance, Posterior, RiskSpec, Signal, SignalingScheme,
};
pub use oracle::{audit_scheme, grid_opt, AuditReport};
