//! Diagnostics CSV, VTK snapshots and the run summary.

use std::io::Write;

use serde::Serialize;

use crate::advect_dg::cell_means;
use crate::error::Result;
use crate::femspaces::SpaceComplex;
use crate::swe_primal::{diagnose_pv, diagnose_vorticity, Diagnostics, ModelParams, State};

use super::stepping::{cell_velocities, StepStats};

pub const CSV_HEADER: &str = "step,time,mass,energy,enstrophy,total_vorticity,q_min,q_max,d_min";

fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_row(step: usize, time: f64, d: &Diagnostics) -> String {
    let vals = [time, d.mass, d.energy, d.enstrophy, d.total_vorticity, d.q_min, d.q_max, d.d_min];
    let mut s = step.to_string();
    for v in vals {
        s.push(',');
        s.push_str(&g17(v));
    }
    s
}

/// Legacy ASCII unstructured grid with cell data `depth`, `pv` and a
/// cell-centred `velocity`. Cells are written with their own (unwrapped)
/// corner points so that periodic seams do not fold.
pub fn write_vtk<W: Write>(mut w: W, space: &SpaceComplex, state: &State, params: &ModelParams, title: &str) -> Result<()> {
    let m = space.mesh();
    let nc = m.n_cells();
    let zeta = diagnose_vorticity(space, &state.u)?;
    let q = diagnose_pv(space, state, params, &zeta)?;
    let qcell: Vec<f64> = space.integrate_cells(&space.eval0(&q)).iter().enumerate().map(|(c, v)| v / m.cell_area(c)).collect();
    let dcell = cell_means(space, &state.d);
    let vel = cell_velocities(space, &state.u);
    let npts: usize = (0..nc).map(|c| m.cell_positions(c).len()).sum();

    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {npts} double")?;
    for c in 0..nc {
        for p in m.cell_positions(c) {
            writeln!(w, "{} {} {}", g17(p[0]), g17(p[1]), g17(0.0))?;
        }
    }
    writeln!(w, "CELLS {nc} {}", npts + nc)?;
    let mut next = 0;
    for c in 0..nc {
        let k = m.cell_positions(c).len();
        let ids: Vec<String> = (next..next + k).map(|i| i.to_string()).collect();
        writeln!(w, "{k} {}", ids.join(" "))?;
        next += k;
    }
    writeln!(w, "CELL_TYPES {nc}")?;
    for _ in 0..nc {
        writeln!(w, "7")?;
    }
    writeln!(w, "CELL_DATA {nc}")?;
    for (name, data) in [("depth", &dcell), ("pv", &qcell)] {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in data.iter() {
            writeln!(w, "{}", g17(*v))?;
        }
    }
    writeln!(w, "VECTORS velocity double")?;
    for v in &vel {
        writeln!(w, "{} {} {}", g17(v[0]), g17(v[1]), g17(0.0))?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Drifts {
    pub mass: f64,
    pub energy: f64,
    pub enstrophy: f64,
    /// Absolute, since the total vorticity vanishes on the torus.
    pub total_vorticity: f64,
    /// `‖u(T) − u(0)‖ / ‖u(0)‖` in the `M₁` norm (absolute if `u(0) = 0`).
    pub velocity: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        (b - a).abs()
    } else {
        ((b - a) / a).abs()
    }
}

impl Drifts {
    pub fn between(a: &Diagnostics, b: &Diagnostics, velocity: f64) -> Self {
        Drifts {
            mass: rel(a.mass, b.mass),
            energy: rel(a.energy, b.energy),
            enstrophy: rel(a.enstrophy, b.enstrophy),
            total_vorticity: (b.total_vorticity - a.total_vorticity).abs(),
            velocity,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SolverTotals {
    pub picard_iterations: usize,
    pub max_picard_residual: f64,
    pub linear_iterations: usize,
}

impl SolverTotals {
    pub fn add(&mut self, s: &StepStats) {
        self.picard_iterations += s.picard_iterations;
        self.max_picard_residual = self.max_picard_residual.max(s.picard_residual);
        self.linear_iterations += s.linear_iterations;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub test_case: String,
    pub formulation: String,
    pub mesh: String,
    pub nx: usize,
    pub ny: usize,
    pub family: String,
    pub integrator: String,
    pub dt: f64,
    pub steps: usize,
    pub final_time: f64,
    pub cfl: f64,
    pub balance_residual: Option<f64>,
    pub initial: Diagnostics,
    #[serde(rename = "final")]
    pub final_diagnostics: Diagnostics,
    pub drift: Drifts,
    pub solver: SolverTotals,
    pub setup_seconds: f64,
    pub run_seconds: f64,
}
