//! Convex and nonconvex reformulations of binary quadratic programs.
//!
//! An instance `min ½ xᵀQx + cᵀx, x ∈ {0,1}ⁿ` is relaxed to a lifted
//! semidefinite program, tightened with McCormick and triangle cuts, and the
//! dual certificate is turned into a reformulation whose McCormick relaxation
//! bound equals the relaxation value. A best-first branch-and-bound then
//! searches the reformulation.
//!
//! Indices are 0-based throughout.

pub mod bench;
pub mod bnb;
pub mod cli;
pub mod cuts;
pub mod error;
pub mod generate;
pub mod instance;
pub mod io;
pub mod mccormick;
pub mod pipeline;
pub mod quadform;
pub mod reformulate;
pub mod relax;

pub use bench::{
    gap_or_absolute, read_csv, render_tables, report_gaps, run_bench, write_csv, BenchConfig,
    BenchRow, GapBudgets, GapReport,
};
pub use bnb::{
    branch_and_bound, branch_select, incumbent_heuristic, solve_bnb, solve_with, BnbOptions,
    BnbResult, BnbStatus, SolveReport,
};
pub use cuts::{
    all_cuts, mccormick_family, separate, triangle_family, Cut, CutFamily, CutKey, CutPool,
};
pub use error::{Error, Result};
pub use generate::generate_pardalos;
pub use instance::{
    binary_points, brute_force, brute_force_with_limit, relative_gap, BqpInstance, Enumerated,
    InstanceMeta, Sense, BRUTE_FORCE_LIMIT,
};
pub use io::{parse_instance, parse_named, read_instance, write_instance};
pub use mccormick::{bound, bound_with, build_relaxation, Fixings, McCormickOptions, RelaxedModel};
pub use pipeline::{prepare, BnbMethod, PipelineOptions, Prepared};
pub use quadform::{QuadForm, Var};
pub use reformulate::{
    build_qcr, build_qcre, build_qnr, build_qnre, build_qnre_agg, check_equivalence,
    classify_convexity, qcr_params, qcre_params, qnre_params, CheckMode, ConstraintSense,
    Convexity, GammaFilter, Method, ReformParams, ReformulatedProblem,
};
pub use relax::{
    build_base_sdp, cutting_plane, cutting_plane_from, CuttingPlaneRun, DualCertificate,
    RelaxOptions, RelaxSolution, SdpRelaxation,
};

pub use bqp_numerics as numerics;
