//! Fixtures shared by the benchmarks in `benches/`.

use slowlight::{DecayModel, Grid, PhysicalParams, SimulationConfig};

/// Paper parameters, cold-atom decay `a`, `L0 = 5` on `[-z_max, z_max]` at
/// the default resolution.
pub fn retrieval_config(ell: usize, a: f64, z_max: f64, total_time: f64) -> SimulationConfig {
    let params = PhysicalParams::paper();
    let grid = Grid::resolve(&params, z_max, 0.05, 1.0, total_time, 1)
        .expect("benchmark grid is valid");
    SimulationConfig::new(params, DecayModel::ColdLinear { a }, 5.0, ell, grid)
        .expect("benchmark configuration is valid")
}
