//! Adjoint-state reconstruction of a wave-speed coefficient on a hybrid
//! FE/FD discretization of the 2D acoustic wave equation.
//!
//! The pipeline: [`geometry`] and [`mesh`] describe the domain, [`refine`]
//! adapts the mesh inside the design region, [`wave`] and [`adjoint`] march
//! the state and adjoint problems with the shared [`hybrid`] step,
//! [`objective`] turns both into the functional and its gradient, and
//! [`optimizer`] runs the conjugate-gradient loop over refinement levels.

// Negated comparisons are how the validators reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod adjoint;
pub mod coefficient;
pub mod error;
pub mod experiment;
pub mod fdgrid;
pub mod geometry;
pub mod hybrid;
pub mod io;
pub mod mesh;
pub mod objective;
pub mod optimizer;
pub mod refine;
pub mod wave;

pub use adjoint::{adjoint_solve, adjoint_step, adjoint_sweep, compatibility_weight, ResidualSource};
pub use coefficient::{interpolate_coefficient, CoefficientField};
pub use error::{Error, Result};
pub use experiment::{
    build_geometry, fourier_snapshot, generate_target, reflection_metric, reflection_of, ExperimentConfig,
    FourierAccumulator, FourierSnapshot, GeometryConfig, Mode,
};
pub use fdgrid::{FdGrid, InterfaceMap};
pub use geometry::{BoundaryTag, DomainGeometry, LatticeRect, Rect, Region};
pub use hybrid::{Damping, HybridOperator, HybridState, Load};
pub use mesh::{BoundaryEdge, TriMesh};
pub use objective::{
    assemble_gradient, evaluate_functional, functional_and_gradient, Evaluation, GradientField, TikhonovConfig,
};
pub use optimizer::{
    cg_direction, run_agcm, run_inner_loop, step_size, update_coefficient, AgcmConfig, AgcmProblem, IterationRecord,
    LevelProblem, LevelResult, OptimizerState, StopReason, Workflow,
};
pub use refine::refine_symmetric;
pub use wave::{
    discrete_energy, forward_solve, forward_step, plane_wave_source, simulate, ObservationTrace, SourceSpec, TimeGrid, TimeSeriesField,
};
