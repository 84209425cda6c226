//! Built-in flow cases and the case registry.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{CaseConfig, GridParams, OutputParams, SolverParams, TimeParams};
use crate::error::{Error, Result};
use crate::grid::{build_annulus, build_cartesian, Boundaries, BoundaryKind, StructuredGrid};
use crate::scheme::{Limiter, SchemeConfig};
use crate::state::{GasModel, PrimitiveState};

/// Grid plus initial cell values.
#[derive(Debug, Clone)]
pub struct CaseSetup {
    pub grid: StructuredGrid,
    pub initial: Vec<PrimitiveState>,
}

pub trait CaseBuilder: Send + Sync {
    fn name(&self) -> &str;
    fn description(&self) -> &str;
    fn default_config(&self) -> CaseConfig;
    fn build(&self, cfg: &CaseConfig) -> Result<CaseSetup>;
}

pub struct CaseRegistry {
    cases: BTreeMap<String, Box<dyn CaseBuilder>>,
}

impl Default for CaseRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl CaseRegistry {
    pub fn empty() -> Self {
        Self {
            cases: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(UniformLowMach));
        r.register(Box::new(Cylinder));
        r.register(Box::new(BluntBody));
        r.register(Box::new(RichtmyerMeshkov));
        r.register(Box::new(KelvinHelmholtz));
        r.register(Box::new(ShockTube));
        r
    }

    /// Add or replace a case.
    pub fn register(&mut self, case: Box<dyn CaseBuilder>) {
        self.cases.insert(case.name().to_string(), case);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.cases.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Result<&dyn CaseBuilder> {
        self.cases.get(name).map(|b| b.as_ref()).ok_or_else(|| {
            let known: Vec<&str> = self.names().collect();
            Error::Config(format!("unknown case '{name}' (known: {})", known.join(", ")))
        })
    }

    pub fn default_config(&self, name: &str) -> Result<CaseConfig> {
        Ok(self.get(name)?.default_config())
    }

    /// Default config of the case named in `text`, overlaid with `text`.
    pub fn config_from_str(&self, text: &str) -> Result<CaseConfig> {
        let name =
            CaseConfig::case_name_in(text)?.ok_or_else(|| Error::Config("missing [case] name".into()))?;
        let mut cfg = self.default_config(&name)?;
        cfg.apply_ini_str(text)?;
        Ok(cfg)
    }

    /// Validate `cfg` and build its grid and initial data.
    pub fn build(&self, cfg: &CaseConfig) -> Result<CaseSetup> {
        cfg.validate()?;
        let setup = self.get(&cfg.case)?.build(cfg).map_err(|e| match e {
            Error::InvalidDimensions(m) | Error::InvalidBoundary(m) => Error::Config(m),
            other => other,
        })?;
        if setup.initial.len() != setup.grid.n_cells() {
            return Err(Error::Config("initial data does not match the grid".into()));
        }
        if let Some(k) = setup.initial.iter().position(|q| !q.is_valid()) {
            return Err(Error::Config(format!(
                "invalid initial state in cell ({}, {})",
                k % setup.grid.ni,
                k / setup.grid.ni
            )));
        }
        Ok(setup)
    }
}

fn base_config(case: &str, grid: GridParams, t_end: f64) -> CaseConfig {
    CaseConfig {
        case: case.to_string(),
        mach: 0.0,
        noise_amplitude: 0.0,
        noise_seed: 0,
        grid,
        gas: GasModel::default(),
        solver: SolverParams::default(),
        scheme: SchemeConfig::first_order(),
        time: TimeParams {
            integrator: "ab3".into(),
            cfl: 0.5,
            t_end,
            steady_tol: None,
            max_steps: None,
        },
        output: OutputParams {
            dir: format!("out/{case}").into(),
            cadence: t_end,
            vtk: false,
        },
        params: BTreeMap::new(),
    }
}

fn cartesian_grid(cfg: &CaseConfig) -> Result<StructuredGrid> {
    let g = &cfg.grid;
    let need = |r: Option<(f64, f64)>, what: &str| {
        r.ok_or_else(|| Error::Config(format!("case {} needs grid {what}_min/{what}_max", cfg.case)))
    };
    build_cartesian(g.ni, g.nj, need(g.x_range, "x")?, need(g.y_range, "y")?)
}

fn annulus_grid(cfg: &CaseConfig) -> Result<StructuredGrid> {
    let g = &cfg.grid;
    let need = |r: Option<(f64, f64)>, what: &str| {
        r.ok_or_else(|| Error::Config(format!("case {} needs grid {what}_min/{what}_max", cfg.case)))
    };
    build_annulus(
        need(g.r_range, "r")?.0,
        need(g.r_range, "r")?.1,
        g.ni,
        g.nj,
        need(g.theta_range, "theta")?,
    )
}

/// Add independent uniform noise in `[-a, a]` to every primitive variable
/// of every cell, visiting cells with `i` fastest.
pub fn add_noise(field: &mut [PrimitiveState], amplitude: f64, seed: u64) {
    if amplitude == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for q in field.iter_mut() {
        q.rho += rng.random_range(-amplitude..=amplitude);
        q.u += rng.random_range(-amplitude..=amplitude);
        q.v += rng.random_range(-amplitude..=amplitude);
        q.p += rng.random_range(-amplitude..=amplitude);
    }
}

/// Nearly incompressible uniform flow with seeded noise.
pub struct UniformLowMach;

impl CaseBuilder for UniformLowMach {
    fn name(&self) -> &str {
        "uniform_low_mach"
    }

    fn description(&self) -> &str {
        "uniform flow at low Mach number with random noise on the primitive variables"
    }

    fn default_config(&self) -> CaseConfig {
        let mut cfg = base_config(
            self.name(),
            GridParams::cartesian(128, 32, (0.0, 4.0), (0.0, 1.0)),
            5.0,
        );
        cfg.mach = 1.0 / 20.0;
        cfg.noise_amplitude = 1e-6;
        cfg.noise_seed = 1;
        cfg.scheme = SchemeConfig::muscl(Limiter::Minmod);
        cfg.output.cadence = 1.0;
        cfg.params.insert("rho".into(), 1.0);
        cfg.params.insert("u".into(), 1.0);
        cfg
    }

    fn build(&self, cfg: &CaseConfig) -> Result<CaseSetup> {
        if !(cfg.mach > 0.0) {
            return Err(Error::Config("uniform_low_mach needs mach > 0".into()));
        }
        let rho = cfg.param("rho", 1.0);
        let u = cfg.param("u", 1.0);
        let p = rho * (u / cfg.mach).powi(2) / cfg.gas.gamma;
        let grid = cartesian_grid(cfg)?.with_boundaries(Boundaries {
            west: BoundaryKind::Extrapolation,
            east: BoundaryKind::Extrapolation,
            south: BoundaryKind::Periodic,
            north: BoundaryKind::Periodic,
        })?;
        let mut initial = vec![PrimitiveState::new(rho, u, 0.0, p); grid.n_cells()];
        add_noise(&mut initial, cfg.noise_amplitude, cfg.noise_seed);
        Ok(CaseSetup { grid, initial })
    }
}

/// Flow around a cylinder on a full annulus.
pub struct Cylinder;

impl CaseBuilder for Cylinder {
    fn name(&self) -> &str {
        "cylinder"
    }

    fn description(&self) -> &str {
        "low Mach flow around a cylinder, wall inside and free stream outside"
    }

    fn default_config(&self) -> CaseConfig {
        let mut cfg = base_config(
            self.name(),
            GridParams::annulus(100, 160, (1.0, 5.0), (0.0, TAU)),
            50.0,
        );
        cfg.mach = 0.1;
        cfg.output.cadence = 10.0;
        cfg.params.insert("rho".into(), 1.0);
        cfg.params.insert("p".into(), 1.0);
        cfg
    }

    fn build(&self, cfg: &CaseConfig) -> Result<CaseSetup> {
        let rho = cfg.param("rho", 1.0);
        let p = cfg.param("p", 1.0);
        let speed = cfg.mach * (cfg.gas.gamma * p / rho).sqrt();
        let free = PrimitiveState::new(rho, speed, 0.0, p);
        let grid = annulus_grid(cfg)?;
        let angular = grid.bc.south;
        let grid = grid.with_boundaries(Boundaries {
            west: BoundaryKind::Wall,
            east: BoundaryKind::DirichletState(free),
            south: angular,
            north: angular,
        })?;
        let initial = vec![free; grid.n_cells()];
        Ok(CaseSetup { grid, initial })
    }
}

/// Hypersonic flow onto the front of a cylinder.
pub struct BluntBody;

impl CaseBuilder for BluntBody {
    fn name(&self) -> &str {
        "blunt_body"
    }

    fn description(&self) -> &str {
        "hypersonic flow onto a cylinder front, bow shock and carbuncle"
    }

    fn default_config(&self) -> CaseConfig {
        let mut cfg = base_config(
            self.name(),
            GridParams::annulus(150, 800, (1.0, 2.0), (2.0 * PI / 3.0, 4.0 * PI / 3.0)),
            2.0,
        );
        cfg.mach = 20.0;
        cfg.output.cadence = 0.5;
        cfg.params.insert("rho".into(), 1.0);
        cfg.params.insert("p".into(), 1.0);
        cfg
    }

    fn build(&self, cfg: &CaseConfig) -> Result<CaseSetup> {
        let rho = cfg.param("rho", 1.0);
        let p = cfg.param("p", 1.0);
        // the sector faces -x, so the stream moves in +x toward the body
        let speed = cfg.mach * (cfg.gas.gamma * p / rho).sqrt();
        let free = PrimitiveState::new(rho, speed, 0.0, p);
        let grid = annulus_grid(cfg)?.with_boundaries(Boundaries {
            west: BoundaryKind::Wall,
            east: BoundaryKind::Extrapolation,
            south: BoundaryKind::Extrapolation,
            north: BoundaryKind::Extrapolation,
        })?;
        let initial = vec![free; grid.n_cells()];
        Ok(CaseSetup { grid, initial })
    }
}

/// One-dimensional Riemann problem along `x`.
pub struct ShockTube;

impl CaseBuilder for ShockTube {
    fn name(&self) -> &str {
        "riemann"
    }

    fn description(&self) -> &str {
        "Riemann problem along x, left and right states from params (Sod by default)"
    }

    fn default_config(&self) -> CaseConfig {
        let mut cfg = base_config(
            self.name(),
            GridParams::cartesian(200, 1, (0.0, 1.0), (0.0, 0.01)),
            0.2,
        );
        cfg.time.integrator = "euler".into();
        cfg.solver.name = "roe".into();
        for (k, v) in [
            ("x0", 0.5),
            ("rho_l", 1.0),
            ("u_l", 0.0),
            ("p_l", 1.0),
            ("rho_r", 0.125),
            ("u_r", 0.0),
            ("p_r", 0.1),
        ] {
            cfg.params.insert(k.into(), v);
        }
        cfg
    }

    fn build(&self, cfg: &CaseConfig) -> Result<CaseSetup> {
        let left = PrimitiveState::new(
            cfg.param("rho_l", 1.0),
            cfg.param("u_l", 0.0),
            0.0,
            cfg.param("p_l", 1.0),
        );
        let right = PrimitiveState::new(
            cfg.param("rho_r", 0.125),
            cfg.param("u_r", 0.0),
            0.0,
            cfg.param("p_r", 0.1),
        );
        let x0 = cfg.param("x0", 0.5);
        let grid = cartesian_grid(cfg)?.with_boundaries(Boundaries {
            west: BoundaryKind::Extrapolation,
            east: BoundaryKind::Extrapolation,
            south: BoundaryKind::Periodic,
            north: BoundaryKind::Periodic,
        })?;
        let initial = grid
            .cell_centers
            .iter()
            .map(|c| if c[0] < x0 { left } else { right })
            .collect();
        Ok(CaseSetup { grid, initial })
    }
}

/// Shock-driven instability of a perturbed density interface.
pub struct RichtmyerMeshkov;

impl CaseBuilder for RichtmyerMeshkov {
    fn name(&self) -> &str {
        "rmi"
    }

    fn description(&self) -> &str {
        "Richtmyer-Meshkov instability: high-pressure strip driving a shock into a sinusoidal interface"
    }

    fn default_config(&self) -> CaseConfig {
        let mut cfg = base_config(
            self.name(),
            GridParams::cartesian(600, 396, (0.0, 30.0), (0.0, 19.8)),
            85.0,
        );
        cfg.scheme = SchemeConfig::muscl(Limiter::Minmod);
        cfg.time.integrator = "rk3".into();
        cfg.output.cadence = 5.0;
        for (k, v) in [
            ("x0", 12.0),
            ("amplitude", 1.0),
            ("wavelength", 19.8),
            ("strip_x_min", 2.0),
            ("strip_x_max", 6.0),
            ("strip_rho", 4.22),
            ("strip_p", 4.9),
            ("rho_left", 1.0),
            ("rho_right", 0.25),
            ("p", 1.0),
        ] {
            cfg.params.insert(k.into(), v);
        }
        cfg
    }

    fn build(&self, cfg: &CaseConfig) -> Result<CaseSetup> {
        let grid = cartesian_grid(cfg)?.with_boundaries(Boundaries {
            west: BoundaryKind::Extrapolation,
            east: BoundaryKind::Extrapolation,
            south: BoundaryKind::Wall,
            north: BoundaryKind::Wall,
        })?;
        let x0 = cfg.param("x0", 12.0);
        let a = cfg.param("amplitude", 1.0);
        let wavelength = cfg.param("wavelength", 19.8);
        let strip = (cfg.param("strip_x_min", 2.0), cfg.param("strip_x_max", 6.0));
        let strip_state =
            PrimitiveState::new(cfg.param("strip_rho", 4.22), 0.0, 0.0, cfg.param("strip_p", 4.9));
        let p = cfg.param("p", 1.0);
        let left = PrimitiveState::new(cfg.param("rho_left", 1.0), 0.0, 0.0, p);
        let right = PrimitiveState::new(cfg.param("rho_right", 0.25), 0.0, 0.0, p);
        let initial = grid
            .cell_centers
            .iter()
            .map(|&[x, y]| {
                if x >= strip.0 && x <= strip.1 {
                    strip_state
                } else if x < x0 + a * (TAU * y / wavelength).sin() {
                    left
                } else {
                    right
                }
            })
            .collect();
        Ok(CaseSetup { grid, initial })
    }
}

/// Periodic double shear layer.
pub struct KelvinHelmholtz;

impl CaseBuilder for KelvinHelmholtz {
    fn name(&self) -> &str {
        "khi"
    }

    fn description(&self) -> &str {
        "Kelvin-Helmholtz instability of a periodic double shear layer"
    }

    fn default_config(&self) -> CaseConfig {
        let mut cfg = base_config(
            self.name(),
            GridParams::cartesian(256, 256, (0.0, 1.0), (0.0, 1.0)),
            4.0,
        );
        cfg.scheme = SchemeConfig::muscl(Limiter::Minmod);
        cfg.time.integrator = "rk3".into();
        cfg.output.cadence = 1.0;
        for (k, v) in [
            ("rho_inner", 2.0),
            ("rho_outer", 1.0),
            ("u_inner", 0.5),
            ("u_outer", -0.5),
            ("p", 2.5),
            ("layer_width", 0.025),
            ("amplitude", 0.01),
            ("sigma", 0.05),
            ("modes", 2.0),
        ] {
            cfg.params.insert(k.into(), v);
        }
        cfg
    }

    fn build(&self, cfg: &CaseConfig) -> Result<CaseSetup> {
        let grid = cartesian_grid(cfg)?.with_boundaries(Boundaries::uniform(BoundaryKind::Periodic))?;
        let (y_lo, y_hi) = cfg.grid.y_range.unwrap_or((0.0, 1.0));
        let (x_lo, x_hi) = cfg.grid.x_range.unwrap_or((0.0, 1.0));
        let (ly, lx) = (y_hi - y_lo, x_hi - x_lo);
        let rho = (cfg.param("rho_inner", 2.0), cfg.param("rho_outer", 1.0));
        let u = (cfg.param("u_inner", 0.5), cfg.param("u_outer", -0.5));
        let p = cfg.param("p", 2.5);
        let w = cfg.param("layer_width", 0.025);
        let amp = cfg.param("amplitude", 0.01);
        let sigma = cfg.param("sigma", 0.05);
        let modes = cfg.param("modes", 2.0);
        let initial = grid
            .cell_centers
            .iter()
            .map(|&[x, y]| {
                let s = (y - y_lo) / ly;
                let band = 0.5 * (((s - 0.25) / w).tanh() - ((s - 0.75) / w).tanh());
                let bump = (-(s - 0.25).powi(2) / (2.0 * sigma * sigma)).exp()
                    + (-(s - 0.75).powi(2) / (2.0 * sigma * sigma)).exp();
                let v = amp * (TAU * modes * (x - x_lo) / lx).sin() * bump;
                PrimitiveState::new(rho.1 + (rho.0 - rho.1) * band, u.1 + (u.0 - u.1) * band, v, p)
            })
            .collect();
        Ok(CaseSetup { grid, initial })
    }
}
