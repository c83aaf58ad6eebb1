//! Shared fixtures for the criterion benchmarks.

use filmflow::{Anisotropy, BulkModel, EnergyModel, FlowParams, LameParams, Profile};

pub const PERIOD: f64 = std::f64::consts::TAU;

/// Two-mode perturbation of a unit-thickness film.
pub fn wavy(m: usize, n: usize) -> Profile {
    Profile::from_fn(m, PERIOD, n, |x, y| 1.0 + 0.02 * x.cos() + 0.01 * (3.0 * x + 2.0 * y).sin()).unwrap()
}

pub fn lame() -> LameParams {
    LameParams::new(1.0, 1.0, 0.5).unwrap()
}

/// Elastic curve model at the default time step for `PERIOD`.
pub fn elastic_model(h0: &Profile, ny: usize) -> EnergyModel {
    let params = FlowParams::for_initial(1e-3, 2.0, PERIOD * PERIOD / 1024.0, h0).unwrap();
    EnergyModel::new(params, Anisotropy::isotropic(2), BulkModel::PlaneStrain { lame: lame(), ny }).unwrap()
}

/// Surface-only model (no bulk term).
pub fn surface_model(h0: &Profile, p: f64) -> EnergyModel {
    let params = FlowParams::for_initial(1e-3, p, PERIOD * PERIOD / 1024.0, h0).unwrap();
    EnergyModel::new(params, Anisotropy::isotropic(h0.m() + 1), BulkModel::None).unwrap()
}
