//! Evolution of the vacuum Einstein equations in the time-harmonic, zero-shift
//! gauge on a periodic grid, with breakdown monitors and slice geometry
//! diagnostics.
//!
//! The crate is `no_std` with `alloc`. Enable `parallel` to spread pointwise
//! work over a rayon pool; reductions stay sequential so results do not
//! depend on the thread count.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

mod math;

pub mod calculus;
pub mod causal;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod oracles;
pub mod radius;
pub mod state;
pub mod tensor;

pub use calculus::{
    christoffel, covariant_hessian, metric_pointwise, norms, ricci, scalar_curvature, Christoffel,
    Norms, SliceGeometry, TensorRef,
};
pub use causal::{
    causal_ball_check, extent_lower_bound, rescale_state, scaling_law_check, shrink_domain,
    temporal_extent, CausalCheck, DomainSpec, ScalingCheck,
};
pub use diagnostics::{
    breakdown_monitors, curvature_l2, electric_magnetic, hamiltonian_residual, momentum_residual,
    quasi_isometry_bound, spectrum_monitor, wave_energy, BreakdownAccumulators, BreakdownSample,
    MonitorKind, ThresholdConfig,
};
pub use error::{Error, Result};
pub use evolution::{
    cfl_dt, evolve, rhs, step_rk4, Direction, EvolutionConfig, Evolver, MonitorConfig, Progress,
    Rhs, RunOutcome, Termination,
};
pub use grid::{fd_derivative, CovectorField, GridSpec, ScalarField, SymTensorField};
pub use oracles::{flat_state, kasner_state, perturbed_flat, KasnerParams};
pub use radius::{
    chart_radius, geodesic_distances, radius_report, volume_radius, RadiusReport, ScaleSample,
};
pub use state::{
    deformation_norm, gauge_residual, init_gauge, p_variable, MonitorReport, SliceState,
};
pub use tensor::Sym3;
