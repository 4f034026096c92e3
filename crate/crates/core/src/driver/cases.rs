//! Initial conditions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::femspaces::{flux_form, SpaceComplex};
use crate::mesh::Point;
use crate::swe_primal::{balance_depth, random_state, ModelParams, State};

use super::config::{RunConfig, TestCase};

/// Relative amplitude of the gravity-wave depth perturbation.
pub const WAVE_AMPLITUDE: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct Setup {
    pub state: State,
    pub params: ModelParams,
    /// Relative residual of the balance solve, for the balanced cases.
    pub balance_residual: Option<f64>,
}

fn jet(space: &SpaceComplex, cfg: &RunConfig) -> Result<Vec<f64>> {
    let (u0, ly) = (cfg.u0, cfg.ly);
    Ok(space
        .project_one_form(|p| flux_form([u0 * (2.0 * std::f64::consts::PI * p[1] / ly).sin(), 0.0]))?
        .values)
}

/// Conical ridge of height `0.4 D₀` and radius `Lx/9` at the domain centre.
pub fn ridge_height(cfg: &RunConfig, p: Point) -> f64 {
    let mut dx = (p[0] - 0.5 * cfg.lx).abs() % cfg.lx;
    let mut dy = (p[1] - 0.5 * cfg.ly).abs() % cfg.ly;
    dx = dx.min(cfg.lx - dx);
    dy = dy.min(cfg.ly - dy);
    let r = dx.hypot(dy);
    0.4 * cfg.d0 * (1.0 - 9.0 * r / cfg.lx).max(0.0)
}

pub fn setup_test_case(space: &SpaceComplex, cfg: &RunConfig) -> Result<Setup> {
    let mut params = ModelParams::f_plane(space, cfg.g, cfg.f0);
    let mut balance_residual = None;
    let state = match cfg.test_case {
        TestCase::Rest => State::rest(space, cfg.d0),
        TestCase::GravityWave => {
            let k = 2.0 * std::f64::consts::PI / cfg.lx;
            let d = space.project_scalar(2, |p| cfg.d0 * (1.0 + WAVE_AMPLITUDE * (k * p[0]).cos()))?.values;
            State { u: vec![0.0; space.dim(1)], d }
        }
        TestCase::GeostrophicBalance | TestCase::Ridge => {
            if cfg.test_case == TestCase::Ridge {
                params.b = space.project_scalar(2, |p| ridge_height(cfg, p))?.values;
            }
            let u = jet(space, cfg)?;
            let (d, res) = balance_depth(space, &params, &u, cfg.d0, 60)?;
            balance_residual = Some(res);
            State { u, d }
        }
        TestCase::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            random_state(space, &mut rng, cfg.g, cfg.d0)?
        }
    };
    state.validate(space)?;
    Ok(Setup { state, params, balance_residual })
}

/// Exact solution of the linearised f-plane equations for the gravity-wave
/// case: `(η, u, v)` with `D = D₀ + η`.
pub fn gravity_wave_exact(cfg: &RunConfig, p: Point, t: f64) -> (f64, f64, f64) {
    let k = 2.0 * std::f64::consts::PI / cfg.lx;
    let eps = WAVE_AMPLITUDE * cfg.d0;
    let (f, gd) = (cfg.f0, cfg.g * cfg.d0);
    let w2 = f * f + gd * k * k;
    let w = w2.sqrt();
    let (s, c) = (k * p[0]).sin_cos();
    let (swt, cwt) = (w * t).sin_cos();
    let eta = eps * c * (f * f / w2 + gd * k * k / w2 * cwt);
    let u = eps * cfg.g * k / w * s * swt;
    let v = eps * cfg.g * f * k / w2 * s * (cwt - 1.0);
    (eta, u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femspaces::{build_space_complex, Family};
    use crate::mesh::{build_periodic_mesh, CellKind};

    #[test]
    fn exact_wave_satisfies_linear_equations() {
        let cfg = RunConfig::default();
        let (x, t, h) = ([0.3e6, 0.1e6], 1234.0, 1e-3);
        let at = |x: f64, t: f64| gravity_wave_exact(&cfg, [x, 0.0], t);
        let (_, u0, v0) = at(x[0], t);
        let dt = |i: usize| {
            let (a, b) = (at(x[0], t + h), at(x[0], t - h));
            [a.0 - b.0, a.1 - b.1, a.2 - b.2][i] / (2.0 * h)
        };
        let dx = |i: usize| {
            let (a, b) = (at(x[0] + 1.0, t), at(x[0] - 1.0, t));
            [a.0 - b.0, a.1 - b.1, a.2 - b.2][i] / 2.0
        };
        let scale = WAVE_AMPLITUDE * cfg.d0 * 1e-3;
        assert!((dt(0) + cfg.d0 * dx(1)).abs() < 1e-6 * scale);
        assert!((dt(1) - cfg.f0 * v0 + cfg.g * dx(0)).abs() < 1e-6 * scale);
        assert!((dt(2) + cfg.f0 * u0).abs() < 1e-6 * scale);
        let (e, _, _) = gravity_wave_exact(&cfg, x, 0.0);
        assert!((e - WAVE_AMPLITUDE * cfg.d0 * (2.0 * std::f64::consts::PI * 0.3).cos()).abs() < 1e-12);
    }

    #[test]
    fn balanced_cases_report_small_residual_and_positive_depth() {
        let mesh = build_periodic_mesh(CellKind::Quadrilateral, 8, 8, 1e6, 1e6).unwrap();
        let sp = build_space_complex(&mesh, Family::P1Rt0P0).unwrap();
        for tc in [TestCase::GeostrophicBalance, TestCase::Ridge] {
            let cfg = RunConfig { test_case: tc.clone(), ..RunConfig::default() };
            let s = setup_test_case(&sp, &cfg).unwrap();
            if tc == TestCase::GeostrophicBalance {
                assert!(s.balance_residual.unwrap() < 1e-10, "{:?}", s.balance_residual);
            }
            assert!(s.state.d.iter().all(|&d| d > 0.5 * cfg.d0));
        }
        assert!(matches!(TestCase::from_name("vortex"), Err(crate::Error::UnknownTestCase(_))));
    }
}
