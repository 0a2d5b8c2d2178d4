//! Retrieval of stored light in a Λ-type ensemble under two counter-propagating
//! control fields.
//!
//! The coherences are expanded in spatial harmonics of the control standing
//! wave and the resulting hierarchy is truncated at order `ℓ`:
//!
//! * [`hierarchy`] integrates the truncated equations in time and extracts
//!   group velocities, light strength and splitting behaviour,
//! * [`dispersion`] evaluates the complex momentum `k(ω)` from the continued
//!   fraction of the same hierarchy,
//! * [`analytic`] holds the closed-form adiabatic solution,
//! * [`io`] reads run configurations and writes CSV and heatmap output.
//!
//! Units: time in `1/Γ`, length in the absorption length `l_abs`.

pub mod analytic;
pub mod dispersion;
pub mod error;
pub mod hierarchy;
pub mod io;
pub mod model;

pub use analytic::{c0_exact, c0_slowlight, AnalyticVelocity};
pub use dispersion::{DispersionPoint, EffectiveDecays};
pub use error::{Error, Result};
pub use hierarchy::{
    simulate, Behavior, BehaviorClass, GroupVelocityEstimate, Integrator, Trajectory,
};
pub use model::{
    decay_rate, gaussian_initial_state, vg_to_paper_units, DecayModel, FieldState, Grid,
    PhysicalParams, SimulationConfig,
};
