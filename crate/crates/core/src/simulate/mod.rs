//! Point-process simulators and the growth-interaction mark model.

mod growth;
mod points;
mod rng;

pub use growth::{simulate_growth_marks, GrowthMode, GrowthParams, InitialValues};
pub use points::{sim_poisson, sim_strauss, sim_thomas, simulate_pattern, Process, SimulationSpec, StraussSize, STRAUSS_STEPS};
pub use rng::stream_rng;
pub(crate) use points::poisson_in;
