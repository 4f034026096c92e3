//! Test cases, time integration, run orchestration and output.

mod cases;
mod checks;
mod config;
mod output;
mod stepping;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

pub use cases::{gravity_wave_exact, ridge_height, setup_test_case, Setup, WAVE_AMPLITUDE};
pub use checks::{
    betti_numbers, check_conservation, check_mimetic, commuting_errors, constant_dual_pv_coriolis, constant_pv_coriolis,
    harmonic_dimension, hodge_ratio, CheckLine, CheckReport,
};
pub use config::{DepthScheme, Equations, Formulation, Integrator, RunConfig, TestCase};
pub use output::{csv_row, write_vtk, Drifts, RunSummary, SolverTotals, CSV_HEADER};
pub use stepping::{cell_velocities, ssprk3_with, step_ssprk3, Discretisation, Model, SemiImplicit, StepStats};

use crate::error::{Error, Result};
use crate::femspaces::build_space_complex;
use crate::linalg::{dot, sub};
use crate::mesh::build_periodic_mesh;
use crate::swe_dual::PrimalDual;
use crate::swe_primal::{diagnostics, State};

/// Mesh, spaces, model and initial state for a configuration.
pub fn build_model(cfg: &RunConfig) -> Result<(Model, Setup)> {
    let mesh = build_periodic_mesh(cfg.mesh, cfg.nx, cfg.ny, cfg.lx, cfg.ly)?;
    let disc = match cfg.formulation {
        Formulation::Primal => Discretisation::Primal(build_space_complex(&mesh, cfg.family)?),
        Formulation::PrimalDual => Discretisation::PrimalDual(Box::new(PrimalDual::new(&mesh, cfg.family)?)),
    };
    let setup = match &disc {
        Discretisation::Primal(s) => setup_test_case(s, cfg)?,
        Discretisation::PrimalDual(pd) => setup_test_case(&pd.primal, cfg)?,
    };
    let model = Model::new(disc, setup.params.clone(), cfg);
    Ok((model, setup))
}

/// Effective `(dt, n_steps)`; a `final_time` overrides `n_steps` and shrinks
/// `dt` to land on it exactly.
pub fn time_grid(cfg: &RunConfig) -> (f64, usize) {
    match cfg.final_time {
        Some(t) => {
            let n = (t / cfg.dt).ceil().max(1.0) as usize;
            (t / n as f64, n)
        }
        None => (cfg.dt, cfg.n_steps),
    }
}

pub struct RunOutput {
    pub summary: RunSummary,
    pub initial: State,
    pub final_state: State,
    pub model: Model,
}

fn m1_norm(model: &Model, v: &[f64]) -> f64 {
    dot(&model.space().m1.mul_vec(v), v).max(0.0).sqrt()
}

fn dump_state(dir: &Path, state: &State) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(dir.join("failed_state.txt"))?);
    writeln!(w, "# u")?;
    for v in &state.u {
        writeln!(w, "{v:.16e}")?;
    }
    writeln!(w, "# d")?;
    for v in &state.d {
        writeln!(w, "{v:.16e}")?;
    }
    Ok(())
}

/// Runs a configuration. With `out` set, writes `diagnostics.csv`,
/// snapshots and `summary.json` there.
pub fn simulate(cfg: &RunConfig, out: Option<&Path>) -> Result<RunOutput> {
    let t_setup = Instant::now();
    let (model, setup) = build_model(cfg)?;
    let (dt, n_steps) = time_grid(cfg);
    let initial = setup.state.clone();
    let cfl = model.cfl(&initial, dt);
    if cfg.integrator == Integrator::Ssprk3 && cfl > cfg.cfl_max {
        return Err(Error::Config(format!("CFL {cfl:.3} exceeds cfl_max {} for the explicit integrator", cfg.cfl_max)));
    }
    if cfl > 2.0 {
        log::warn!("CFL estimate {cfl:.3} exceeds 2");
    }
    let semi = (cfg.integrator == Integrator::SemiImplicit)
        .then(|| SemiImplicit::new(&model, dt, cfg.picard_iters, cfg.picard_tol, cfg.linear_rtol));
    let setup_seconds = t_setup.elapsed().as_secs_f64();

    let mut csv = match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let mut w = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
            writeln!(w, "{CSV_HEADER}")?;
            Some(w)
        }
        None => None,
    };
    let space = model.space();
    let snapshot = |step: usize, time: f64, st: &State| -> Result<()> {
        if let Some(dir) = out {
            if cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0 {
                let f = BufWriter::new(File::create(dir.join(format!("snapshot_{step:06}.vtk")))?);
                write_vtk(f, space, st, &model.params, &format!("feec-swe step {step} time {time:.16e}"))?;
            }
        }
        Ok(())
    };

    let d0 = diagnostics(space, &initial, &model.params)?;
    if let Some(w) = csv.as_mut() {
        writeln!(w, "{}", csv_row(0, 0.0, &d0))?;
    }
    snapshot(0, 0.0, &initial)?;

    let t_run = Instant::now();
    let supg = model.uses_supg();
    let mut prev_qd: Option<Vec<f64>> = None;
    let mut totals = SolverTotals::default();
    let mut state = initial.clone();
    for step in 1..=n_steps {
        let time = step as f64 * dt;
        let advance = |state: &State, prev_qd: &mut Option<Vec<f64>>| -> Result<(State, StepStats)> {
            let ctx = if supg {
                let qd = model.pv_density(state)?;
                let c = prev_qd.as_ref().map(|p| qd.iter().zip(p).map(|(a, b)| (a - b) / dt).collect::<Vec<f64>>());
                *prev_qd = Some(qd);
                c
            } else {
                None
            };
            let (next, stats) = match &semi {
                Some(si) => si.step(&model, state, ctx.as_deref())?,
                None => (step_ssprk3(&model, state, dt, ctx.as_deref())?, StepStats::default()),
            };
            next.validate(model.space())?;
            Ok((next, stats))
        };
        match advance(&state, &mut prev_qd) {
            Ok((next, stats)) => {
                totals.add(&stats);
                state = next;
            }
            Err(e) => {
                if let Some(dir) = out {
                    let _ = dump_state(dir, &state);
                }
                return Err(Error::AtStep { step, time, source: Box::new(e) });
            }
        }
        if step % cfg.output_every == 0 || step == n_steps {
            if let Some(w) = csv.as_mut() {
                let d = diagnostics(space, &state, &model.params).map_err(|e| Error::AtStep { step, time, source: Box::new(e) })?;
                writeln!(w, "{}", csv_row(step, time, &d))?;
            }
        }
        snapshot(step, time, &state)?;
    }
    let run_seconds = t_run.elapsed().as_secs_f64();
    if let Some(mut w) = csv {
        w.flush()?;
    }

    let d1 = diagnostics(space, &state, &model.params)?;
    let un = m1_norm(&model, &initial.u);
    let du = m1_norm(&model, &sub(&state.u, &initial.u));
    let velocity = if un > 0.0 { du / un } else { du };
    let summary = RunSummary {
        test_case: cfg.test_case.name().into(),
        formulation: format!("{:?}", cfg.formulation),
        mesh: cfg.mesh.name().into(),
        nx: cfg.nx,
        ny: cfg.ny,
        family: cfg.family.name().into(),
        integrator: format!("{:?}", cfg.integrator),
        dt,
        steps: n_steps,
        final_time: n_steps as f64 * dt,
        cfl,
        balance_residual: setup.balance_residual,
        drift: Drifts::between(&d0, &d1, velocity),
        initial: d0,
        final_diagnostics: d1,
        solver: totals,
        setup_seconds,
        run_seconds,
    };
    if let Some(dir) = out {
        let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(dir.join("summary.json"), text + "\n")?;
    }
    Ok(RunOutput { summary, initial, final_state: state, model })
}

pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    Ok(simulate(cfg, Some(&cfg.output_dir))?.summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Pairwise slopes of `log error` against `log h`.
    pub slopes: Vec<f64>,
}

impl ConvergenceReport {
    /// Least-squares slope over all levels.
    pub fn fitted_slope(&self) -> f64 {
        let xs: Vec<f64> = self.rows.iter().map(|r| r.h.ln()).collect();
        let ys: Vec<f64> = self.rows.iter().map(|r| r.error.ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    }

    pub fn to_table(&self) -> String {
        let mut s = String::from("n,h,error\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:.16e},{:.16e}\n", r.n, r.h, r.error));
        }
        s
    }
}

/// Gravity-wave refinement sweep over `cfg.levels`, with `dt` scaled with
/// the mesh size. The error is the L² distance between the discrete depth
/// and the L² projection of the exact linear solution at the final time.
pub fn convergence(cfg: &RunConfig) -> Result<ConvergenceReport> {
    let horizon = cfg.final_time.unwrap_or(cfg.dt * cfg.n_steps as f64);
    let mut rows = Vec::new();
    for &n in &cfg.levels {
        let c = RunConfig {
            nx: n,
            ny: n,
            test_case: TestCase::GravityWave,
            dt: cfg.dt * cfg.levels[0] as f64 / n as f64,
            final_time: Some(horizon),
            snapshot_every: 0,
            ..cfg.clone()
        };
        let res = simulate(&c, None)?;
        let sp = res.model.space();
        let t = res.summary.final_time;
        let exact = sp.project_scalar(2, |p| c.d0 + gravity_wave_exact(&c, p, t).0)?.values;
        let diff = sp.eval2(&sub(&res.final_state.d, &exact));
        let error = sp.integrate(&diff.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
        rows.push(ConvergenceRow { n, h: cfg.lx / n as f64, error });
    }
    let slopes = rows.windows(2).map(|w| (w[0].error / w[1].error).ln() / (w[0].h / w[1].h).ln()).collect();
    Ok(ConvergenceReport { rows, slopes })
}
