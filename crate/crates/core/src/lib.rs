//! Numerical toolkit for local graph representations of immersed manifolds.
//!
//! An immersion `f: Mᵐ → ℝⁿ` is represented through charts ([`immersion`]).
//! Around a base point `q`, an admissible isometry moves `f(q)` to the origin
//! and the tangent plane onto ℝᵐ × {0}; the connected piece of `M` projecting
//! into the ball `B_r` is then tested for being the graph of a function
//! `u: B_r → ℝᵏ` ([`extract`]). On top of that sit radius searches for the
//! largest `r` with `‖Du‖ ≤ λ` or `‖u‖ ≤ rλ` ([`radius`]) and numerical checks
//! of the C⁰-to-C¹ embedding statement and its supporting lemmas ([`lab`]).

pub mod error;
pub mod extract;
pub mod geometry;
pub mod immersion;
pub mod lab;
pub mod radius;
pub mod report;
pub mod zoo;

pub use error::{Error, Result};
pub use extract::{
    component, extract, norms, solve_height, ComponentRegion, ExtractOptions, FrameContext,
    GraphNode, GraphSample, NodeStatus, NormEstimates, Peaks, RegionCell,
};
pub use geometry::{
    graph_matrix_from_probes, graph_matrix_of_columns, is_admissible, make_admissible_isometry, matrix_norm,
    project_to_first_m, subspace_graph_matrix, GraphMatrix, Isometry, Matrix, Subspace, Vector,
};
pub use immersion::{tangent_space, Chart, ParamBox, ParamImmersion, ParamPoint, SampleSpec};
pub use lab::{
    analyze_counterexample, certify_du_bound, check_distance_bound, check_enlargement,
    check_inclusion, iteration_constant_check, lambda_cap, verify_main_theorem,
    CertifiedDuBound, CounterexampleReport, DistanceCheck, EnlargementVerdict, InclusionCheck,
    TheoremVerdict,
};
pub use radius::{
    check_property, is_c0_r_lambda, is_r_lambda, max_radius, PropertyKind, PropertyVerdict,
    RadiusOptions, RadiusOutcome, RadiusReport, VerdictStatus, Witness,
};
pub use zoo::{zoo_build, zoo_entries, ZooEntry};

/// Version string embedded in serialized reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
