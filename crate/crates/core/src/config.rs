//! Run configuration and its INI-style text form.
//!
//! ```text
//! # comment lines start with '#' or ';'
//! [case]
//! name = uniform_low_mach
//! mach = 0.05
//! [solver]
//! name = fleischmann
//! ```
//!
//! Sections: `case`, `grid`, `gas`, `solver`, `scheme`, `time`, `output`
//! and the free-form `params`. Keys are case-sensitive; unknown sections or
//! keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use ini::{Ini, ParseOption};

use crate::error::{Error, Result};
use crate::integrators::{Integrator, StepController};
use crate::riemann::{BetaSource, WaveSpeedStrategy, DEFAULT_DELTA_REL, DEFAULT_PHI};
use crate::scheme::{Limiter, SchemeConfig};
use crate::state::GasModel;

/// Grid extents; Cartesian cases use the x/y ranges, annular ones the
/// radius and angle ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct GridParams {
    pub ni: usize,
    pub nj: usize,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    pub r_range: Option<(f64, f64)>,
    pub theta_range: Option<(f64, f64)>,
}

impl GridParams {
    pub fn cartesian(ni: usize, nj: usize, x: (f64, f64), y: (f64, f64)) -> Self {
        Self {
            ni,
            nj,
            x_range: Some(x),
            y_range: Some(y),
            r_range: None,
            theta_range: None,
        }
    }

    pub fn annulus(ni: usize, nj: usize, r: (f64, f64), theta: (f64, f64)) -> Self {
        Self {
            ni,
            nj,
            x_range: None,
            y_range: None,
            r_range: Some(r),
            theta_range: Some(theta),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub name: String,
    pub phi: f64,
    pub delta_rel: f64,
    /// `sensor` or `constant`.
    pub beta_source: String,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            name: "fleischmann".into(),
            phi: DEFAULT_PHI,
            delta_rel: DEFAULT_DELTA_REL,
            beta_source: "sensor".into(),
            beta: 0.5,
            kappa: 0.5,
        }
    }
}

impl SolverParams {
    pub fn strategy(&self) -> Result<WaveSpeedStrategy> {
        let beta = match self.beta_source.as_str() {
            "sensor" => BetaSource::PressureSensor { kappa: self.kappa },
            "constant" => BetaSource::Constant(self.beta),
            other => {
                return Err(Error::Config(format!(
                    "unknown beta_source '{other}' (expected sensor, constant)"
                )))
            }
        };
        let s = WaveSpeedStrategy::from_name(&self.name, self.phi, self.delta_rel, beta)?;
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeParams {
    pub integrator: String,
    pub cfl: f64,
    pub t_end: f64,
    /// Stop early once the largest relative density change rate drops
    /// below this value.
    pub steady_tol: Option<f64>,
    pub max_steps: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputParams {
    pub dir: PathBuf,
    /// Time between snapshots; the final state is always written.
    pub cadence: f64,
    pub vtk: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    pub case: String,
    pub mach: f64,
    pub noise_amplitude: f64,
    pub noise_seed: u64,
    pub grid: GridParams,
    pub gas: GasModel,
    pub solver: SolverParams,
    pub scheme: SchemeConfig,
    pub time: TimeParams,
    pub output: OutputParams,
    /// Case-specific numbers.
    pub params: BTreeMap<String, f64>,
}

impl CaseConfig {
    pub fn integrator(&self) -> Result<Integrator> {
        Integrator::from_name(&self.time.integrator)
    }

    pub fn strategy(&self) -> Result<WaveSpeedStrategy> {
        self.solver.strategy()
    }

    /// Spatial scheme actually used; `muscl-hancock` forces second order
    /// with the predictor.
    pub fn effective_scheme(&self) -> Result<SchemeConfig> {
        let mut s = self.scheme;
        if self.integrator()? == Integrator::MusclHancock {
            s.order = 2;
            s.hancock = true;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn controller(&self) -> Result<StepController> {
        StepController::new(self.time.cfl, self.integrator()?)
    }

    pub fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    /// Checks that do not need the case registry.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{what} must be positive and finite, got {v}"
                )))
            }
        };
        positive(self.time.t_end, "t_end")?;
        positive(self.output.cadence, "cadence")?;
        positive(self.time.cfl, "cfl")?;
        if !(self.mach >= 0.0) {
            return Err(Error::Config(format!(
                "mach must be non-negative, got {}",
                self.mach
            )));
        }
        if !(self.noise_amplitude >= 0.0) {
            return Err(Error::Config("noise_amplitude must be non-negative".into()));
        }
        if self.grid.ni == 0 || self.grid.nj == 0 {
            return Err(Error::Config("grid needs at least one cell per direction".into()));
        }
        if GasModel::new(self.gas.gamma).is_none() {
            return Err(Error::Config(format!(
                "gamma must exceed 1, got {}",
                self.gas.gamma
            )));
        }
        if let Some(tol) = self.time.steady_tol {
            positive(tol, "steady_tol")?;
        }
        self.strategy()?;
        self.effective_scheme()?;
        Ok(())
    }

    pub fn to_ini_string(&self) -> String {
        let mut s = String::new();
        let mut w = |line: String| {
            s.push_str(&line);
            s.push('\n');
        };
        w("[case]".into());
        w(format!("name = {}", self.case));
        w(format!("mach = {:?}", self.mach));
        w(format!("noise_amplitude = {:?}", self.noise_amplitude));
        w(format!("noise_seed = {}", self.noise_seed));
        w(String::new());
        w("[grid]".into());
        w(format!("ni = {}", self.grid.ni));
        w(format!("nj = {}", self.grid.nj));
        let ranges = [
            ("x", self.grid.x_range),
            ("y", self.grid.y_range),
            ("r", self.grid.r_range),
            ("theta", self.grid.theta_range),
        ];
        for (key, range) in ranges {
            if let Some((a, b)) = range {
                w(format!("{key}_min = {a:?}"));
                w(format!("{key}_max = {b:?}"));
            }
        }
        w(String::new());
        w("[gas]".into());
        w(format!("gamma = {:?}", self.gas.gamma));
        w(String::new());
        w("[solver]".into());
        w(format!("name = {}", self.solver.name));
        w(format!("phi = {:?}", self.solver.phi));
        w(format!("delta_rel = {:?}", self.solver.delta_rel));
        w(format!("beta_source = {}", self.solver.beta_source));
        w(format!("beta = {:?}", self.solver.beta));
        w(format!("kappa = {:?}", self.solver.kappa));
        w(String::new());
        w("[scheme]".into());
        w(format!("order = {}", self.scheme.order));
        w(format!("limiter = {}", self.scheme.limiter.name()));
        w(format!("hancock = {}", self.scheme.hancock));
        w(String::new());
        w("[time]".into());
        w(format!("integrator = {}", self.time.integrator));
        w(format!("cfl = {:?}", self.time.cfl));
        w(format!("t_end = {:?}", self.time.t_end));
        if let Some(tol) = self.time.steady_tol {
            w(format!("steady_tol = {tol:?}"));
        }
        if let Some(n) = self.time.max_steps {
            w(format!("max_steps = {n}"));
        }
        w(String::new());
        w("[output]".into());
        w(format!("dir = {}", self.output.dir.display()));
        w(format!("cadence = {:?}", self.output.cadence));
        w(format!("vtk = {}", self.output.vtk));
        if !self.params.is_empty() {
            w(String::new());
            w("[params]".into());
            for (k, v) in &self.params {
                w(format!("{k} = {v:?}"));
            }
        }
        s
    }

    /// Apply the sections of `text` on top of `self`.
    pub fn apply_ini_str(&mut self, text: &str) -> Result<()> {
        let opt = ParseOption {
            enabled_quote: false,
            enabled_escape: false,
            ..ParseOption::default()
        };
        let ini = Ini::load_from_str_opt(text, opt).map_err(|e| Error::Config(e.to_string()))?;
        for (section, props) in ini.iter() {
            let section = match section {
                Some(s) => s,
                None if props.is_empty() => continue,
                None => return Err(Error::Config("keys outside of a section".into())),
            };
            for (key, value) in props.iter() {
                self.set(section, key, value)?;
            }
        }
        Ok(())
    }

    /// Set one `section.key` from its text form.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = || Error::Config(format!("invalid value '{value}' for {section}.{key}"));
        let f = || value.parse::<f64>().map_err(|_| bad());
        let u = || value.parse::<usize>().map_err(|_| bad());
        let b = || value.parse::<bool>().map_err(|_| bad());
        let unknown = || Error::Config(format!("unknown key {section}.{key}"));
        match section {
            "case" => match key {
                "name" => self.case = value.to_string(),
                "mach" => self.mach = f()?,
                "noise_amplitude" => self.noise_amplitude = f()?,
                "noise_seed" => self.noise_seed = value.parse().map_err(|_| bad())?,
                _ => return Err(unknown()),
            },
            "grid" => {
                let g = &mut self.grid;
                let slot = |r: &mut Option<(f64, f64)>, lower: bool, v: f64| {
                    let cur = r.unwrap_or((0.0, 0.0));
                    *r = Some(if lower { (v, cur.1) } else { (cur.0, v) });
                };
                match key {
                    "ni" => g.ni = u()?,
                    "nj" => g.nj = u()?,
                    "x_min" => slot(&mut g.x_range, true, f()?),
                    "x_max" => slot(&mut g.x_range, false, f()?),
                    "y_min" => slot(&mut g.y_range, true, f()?),
                    "y_max" => slot(&mut g.y_range, false, f()?),
                    "r_min" => slot(&mut g.r_range, true, f()?),
                    "r_max" => slot(&mut g.r_range, false, f()?),
                    "theta_min" => slot(&mut g.theta_range, true, f()?),
                    "theta_max" => slot(&mut g.theta_range, false, f()?),
                    _ => return Err(unknown()),
                }
            }
            "gas" => match key {
                "gamma" => self.gas = GasModel { gamma: f()? },
                _ => return Err(unknown()),
            },
            "solver" => match key {
                "name" => self.solver.name = value.to_string(),
                "phi" => self.solver.phi = f()?,
                "delta_rel" => self.solver.delta_rel = f()?,
                "beta_source" => self.solver.beta_source = value.to_string(),
                "beta" => self.solver.beta = f()?,
                "kappa" => self.solver.kappa = f()?,
                _ => return Err(unknown()),
            },
            "scheme" => match key {
                "order" => self.scheme.order = value.parse().map_err(|_| bad())?,
                "limiter" => self.scheme.limiter = Limiter::from_name(value)?,
                "hancock" => self.scheme.hancock = b()?,
                _ => return Err(unknown()),
            },
            "time" => match key {
                "integrator" => self.time.integrator = value.to_string(),
                "cfl" => self.time.cfl = f()?,
                "t_end" => self.time.t_end = f()?,
                "steady_tol" => self.time.steady_tol = Some(f()?),
                "max_steps" => self.time.max_steps = Some(value.parse().map_err(|_| bad())?),
                _ => return Err(unknown()),
            },
            "output" => match key {
                "dir" => self.output.dir = PathBuf::from(value),
                "cadence" => self.output.cadence = f()?,
                "vtk" => self.output.vtk = b()?,
                _ => return Err(unknown()),
            },
            "params" => {
                self.params.insert(key.to_string(), f()?);
            }
            other => return Err(Error::Config(format!("unknown section [{other}]"))),
        }
        Ok(())
    }

    /// Apply `section.key=value`.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (path, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected section.key=value, got '{assignment}'")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("expected section.key, got '{path}'")))?;
        self.set(section, key, value)
    }

    /// Peek at the `[case] name` of a config text.
    pub fn case_name_in(text: &str) -> Result<Option<String>> {
        let opt = ParseOption {
            enabled_quote: false,
            enabled_escape: false,
            ..ParseOption::default()
        };
        let ini = Ini::load_from_str_opt(text, opt).map_err(|e| Error::Config(e.to_string()))?;
        Ok(ini
            .section(Some("case"))
            .and_then(|s| s.get("name"))
            .map(|s| s.trim().to_string()))
    }
}

/// Human-readable one-line summary.
pub fn describe(cfg: &CaseConfig) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{} {}x{} solver={} integrator={} order={} cfl={} t_end={}",
        cfg.case,
        cfg.grid.ni,
        cfg.grid.nj,
        cfg.solver.name,
        cfg.time.integrator,
        cfg.scheme.order,
        cfg.time.cfl,
        cfg.time.t_end
    );
    s
}
