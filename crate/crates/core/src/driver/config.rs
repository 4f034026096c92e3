//! Flat `key = value` run configuration.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::femspaces::Family;
use crate::mesh::CellKind;
use crate::swe_primal::{PvScheme, StabilizationConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Formulation {
    Primal,
    PrimalDual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DepthScheme {
    Projection,
    UpwindDg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    Ssprk3,
    SemiImplicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equations {
    Nonlinear,
    /// Linearised about rest with depth `d0` and constant `f0`.
    Linear,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TestCase {
    Rest,
    GeostrophicBalance,
    GravityWave,
    Ridge,
    Random,
}

impl TestCase {
    pub fn from_name(s: &str) -> Result<Self> {
        Ok(match s {
            "rest" => TestCase::Rest,
            "geostrophic_balance" => TestCase::GeostrophicBalance,
            "gravity_wave" => TestCase::GravityWave,
            "ridge" => TestCase::Ridge,
            "random" | "random_property_state" => TestCase::Random,
            other => return Err(Error::UnknownTestCase(other.into())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestCase::Rest => "rest",
            TestCase::GeostrophicBalance => "geostrophic_balance",
            TestCase::GravityWave => "gravity_wave",
            TestCase::Ridge => "ridge",
            TestCase::Random => "random",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub formulation: Formulation,
    pub mesh: CellKind,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub family: Family,
    pub stabilization: StabilizationConfig,
    pub depth_scheme: DepthScheme,
    pub limiter: bool,
    pub integrator: Integrator,
    pub equations: Equations,
    pub dt: f64,
    pub n_steps: usize,
    pub picard_iters: usize,
    pub picard_tol: f64,
    pub linear_rtol: f64,
    pub cfl_max: f64,
    pub test_case: TestCase,
    pub g: f64,
    pub d0: f64,
    pub f0: f64,
    /// Jet speed for the balanced cases.
    pub u0: f64,
    pub seed: u64,
    pub output_every: usize,
    /// 0 disables snapshots.
    pub snapshot_every: usize,
    pub output_dir: PathBuf,
    /// Mesh sizes for the convergence sweep.
    pub levels: Vec<usize>,
    pub final_time: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            formulation: Formulation::Primal,
            mesh: CellKind::Quadrilateral,
            nx: 16,
            ny: 16,
            lx: 1.0e6,
            ly: 1.0e6,
            family: Family::P1Rt0P0,
            stabilization: StabilizationConfig { alpha_supg: 0.5, ..StabilizationConfig::default() },
            depth_scheme: DepthScheme::Projection,
            limiter: false,
            integrator: Integrator::SemiImplicit,
            equations: Equations::Nonlinear,
            dt: 600.0,
            n_steps: 100,
            picard_iters: 4,
            picard_tol: 1e-13,
            linear_rtol: 1e-10,
            cfl_max: 1.0,
            test_case: TestCase::Rest,
            g: 9.80616,
            d0: 1000.0,
            f0: 1e-4,
            u0: 5.0,
            seed: 0,
            output_every: 1,
            snapshot_every: 0,
            output_dir: PathBuf::from("output"),
            levels: vec![8, 16, 32, 64],
            final_time: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("invalid value '{v}' for '{key}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean '{v}' for '{key}'"))),
    }
}

impl RunConfig {
    /// Parse `key = value` lines; `#` starts a comment. Unknown keys are
    /// errors. Missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        let mut apvm_tau_set = false;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", ln + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "formulation" => {
                    c.formulation = match v {
                        "primal" => Formulation::Primal,
                        "primal_dual" | "dual" => Formulation::PrimalDual,
                        _ => return Err(Error::Config(format!("unknown formulation '{v}'"))),
                    }
                }
                "mesh" => c.mesh = CellKind::from_name(v).ok_or_else(|| Error::Config(format!("unknown mesh kind '{v}'")))?,
                "nx" => c.nx = parse_num(k, v)?,
                "ny" => c.ny = parse_num(k, v)?,
                "lx" => c.lx = parse_num(k, v)?,
                "ly" => c.ly = parse_num(k, v)?,
                "family" => c.family = Family::from_name(v).ok_or_else(|| Error::Config(format!("unknown family '{v}'")))?,
                "scheme" => {
                    c.stabilization.scheme = PvScheme::from_name(v).ok_or_else(|| Error::Config(format!("unknown PV scheme '{v}'")))?
                }
                "tau_apvm" => {
                    c.stabilization.tau_apvm = parse_num(k, v)?;
                    apvm_tau_set = true;
                }
                "alpha_supg" => c.stabilization.alpha_supg = parse_num(k, v)?,
                "depth_scheme" => {
                    c.depth_scheme = match v {
                        "projection" => DepthScheme::Projection,
                        "upwind_dg" | "upwind" => DepthScheme::UpwindDg,
                        _ => return Err(Error::Config(format!("unknown depth scheme '{v}'"))),
                    }
                }
                "limiter" => c.limiter = parse_bool(k, v)?,
                "integrator" => {
                    c.integrator = match v {
                        "ssprk3" => Integrator::Ssprk3,
                        "semi_implicit" | "centred_semi_implicit" => Integrator::SemiImplicit,
                        _ => return Err(Error::Config(format!("unknown integrator '{v}'"))),
                    }
                }
                "equations" => {
                    c.equations = match v {
                        "nonlinear" => Equations::Nonlinear,
                        "linear" => Equations::Linear,
                        _ => return Err(Error::Config(format!("unknown equations '{v}'"))),
                    }
                }
                "dt" => c.dt = parse_num(k, v)?,
                "n_steps" => c.n_steps = parse_num(k, v)?,
                "picard_iters" => c.picard_iters = parse_num(k, v)?,
                "picard_tol" => c.picard_tol = parse_num(k, v)?,
                "linear_rtol" => c.linear_rtol = parse_num(k, v)?,
                "cfl_max" => c.cfl_max = parse_num(k, v)?,
                "test_case" => c.test_case = TestCase::from_name(v)?,
                "g" => c.g = parse_num(k, v)?,
                "d0" => c.d0 = parse_num(k, v)?,
                "f0" => c.f0 = parse_num(k, v)?,
                "u0" => c.u0 = parse_num(k, v)?,
                "seed" => c.seed = parse_num(k, v)?,
                "output_every" => c.output_every = parse_num(k, v)?,
                "snapshot_every" => c.snapshot_every = parse_num(k, v)?,
                "output_dir" => c.output_dir = PathBuf::from(v),
                "levels" => {
                    c.levels = v.split(',').map(|s| parse_num(k, s.trim())).collect::<Result<_>>()?;
                }
                "final_time" => c.final_time = Some(parse_num(k, v)?),
                _ => return Err(Error::Config(format!("unknown key '{k}'"))),
            }
        }
        if !apvm_tau_set {
            c.stabilization.tau_apvm = 0.5 * c.dt;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config("dt must be positive".into()));
        }
        if !(self.lx > 0.0 && self.ly > 0.0 && self.d0 > 0.0 && self.g > 0.0) {
            return Err(Error::Config("lx, ly, d0 and g must be positive".into()));
        }
        if self.output_every == 0 {
            return Err(Error::Config("output_every must be at least 1".into()));
        }
        if self.levels.len() < 2 {
            return Err(Error::Config("levels needs at least two mesh sizes".into()));
        }
        if self.limiter && self.depth_scheme != DepthScheme::UpwindDg {
            return Err(Error::Config("the limiter requires depth_scheme = upwind_dg".into()));
        }
        self.stabilization.validate()
    }
}
