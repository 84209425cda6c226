//! Time loop, run driver and output files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::cases::{CaseRegistry, CaseSetup};
use crate::config::CaseConfig;
use crate::error::{Error, Result};
use crate::grid::StructuredGrid;
use crate::integrators::{cfl_dt, Integrator, StepController, TimeStepper};
use crate::scheme::{primitives_from_conserved, SpatialOperator};
use crate::state::{primitive_to_conserved, GasModel, PrimitiveState, Vec4};

/// Per-step diagnostics, one run-log row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub t: f64,
    pub dt: f64,
    pub min_p: f64,
    pub max_speed: f64,
    pub fallback_count: usize,
}

/// Where and why a run broke down.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakdown {
    pub step: u64,
    pub t: f64,
    pub cell: Option<(usize, usize)>,
    pub reason: String,
}

/// In-memory solver state for one case.
pub struct Simulation {
    op: SpatialOperator,
    stepper: TimeStepper<Vec<Vec4>>,
    controller: StepController,
    integrator: Integrator,
    gas: GasModel,
    cons: Vec<Vec4>,
    prims: Vec<PrimitiveState>,
    t: f64,
    step: u64,
}

impl Simulation {
    pub fn new(cfg: &CaseConfig, registry: &CaseRegistry) -> Result<Self> {
        let setup = registry.build(cfg)?;
        Self::from_setup(cfg, setup)
    }

    pub fn from_setup(cfg: &CaseConfig, setup: CaseSetup) -> Result<Self> {
        cfg.validate()?;
        let integrator = cfg.integrator()?;
        let op = SpatialOperator::new(setup.grid, cfg.effective_scheme()?, cfg.strategy()?, cfg.gas)?;
        let cons = setup
            .initial
            .iter()
            .map(|q| primitive_to_conserved(*q, cfg.gas).to_array())
            .collect();
        Ok(Self {
            op,
            stepper: TimeStepper::new(integrator),
            controller: cfg.controller()?,
            integrator,
            gas: cfg.gas,
            cons,
            prims: setup.initial,
            t: 0.0,
            step: 0,
        })
    }

    pub fn grid(&self) -> &StructuredGrid {
        &self.op.grid
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn primitives(&self) -> &[PrimitiveState] {
        &self.prims
    }

    pub fn conserved(&self) -> &[Vec4] {
        &self.cons
    }

    /// Domain integrals of the conserved variables.
    pub fn totals(&self) -> Vec4 {
        let mut total = [0.0; 4];
        for (q, a) in self.cons.iter().zip(&self.op.grid.cell_areas) {
            for m in 0..4 {
                total[m] += q[m] * a;
            }
        }
        total
    }

    /// CFL-limited step for the current state.
    pub fn stable_dt(&self) -> f64 {
        cfl_dt(&self.prims, &self.op.grid, &self.controller, self.gas)
    }

    /// Advance by `dt`.
    pub fn step(&mut self, dt: f64) -> Result<StepRecord> {
        let hancock_dt = (self.integrator == Integrator::MusclHancock).then_some(dt);
        let (op, gas) = (&mut self.op, self.gas);
        let ni = op.grid.ni;
        let mut scratch = Vec::with_capacity(self.prims.len());
        let mut fallbacks = 0;
        let rhs = |_t: f64, y: &Vec<Vec4>| -> Result<Vec<Vec4>> {
            primitives_from_conserved(y, ni, gas, &mut scratch)?;
            let mut out = vec![[0.0; 4]; y.len()];
            fallbacks += op.residual(&scratch, hancock_dt, &mut out);
            Ok(out)
        };
        let next = self.stepper.step(rhs, self.t, &self.cons, dt)?;
        let mut prims = Vec::with_capacity(next.len());
        primitives_from_conserved(&next, ni, gas, &mut prims)?;
        self.cons = next;
        self.prims = prims;
        self.t += dt;
        self.step += 1;
        let (min_p, max_speed) = self.prims.iter().fold((f64::INFINITY, 0.0f64), |(p, s), q| {
            (p.min(q.p), s.max(q.speed()))
        });
        Ok(StepRecord {
            step: self.step,
            t: self.t,
            dt,
            min_p,
            max_speed,
            fallback_count: fallbacks,
        })
    }

    /// Largest relative density change rate over the last `dt`.
    fn density_rate(before: &[Vec4], after: &[Vec4], dt: f64) -> f64 {
        before
            .iter()
            .zip(after)
            .map(|(a, b)| (b[0] - a[0]).abs() / (a[0] * dt))
            .fold(0.0, f64::max)
    }

    /// Step with CFL-controlled `dt` until `t_end`, calling `observe` after
    /// every step; `observe` returning `true` stops the loop.
    pub fn advance_to(
        &mut self,
        t_end: f64,
        steady_tol: Option<f64>,
        mut observe: impl FnMut(&Self, &StepRecord) -> Result<bool>,
    ) -> Result<Stop> {
        while self.t < t_end * (1.0 - 1e-14) {
            let dt = self.stable_dt().min(t_end - self.t);
            let before = steady_tol.map(|_| self.cons.clone());
            let rec = self.step(dt)?;
            if observe(self, &rec)? {
                return Ok(Stop::Requested);
            }
            if let (Some(tol), Some(before)) = (steady_tol, before) {
                if Self::density_rate(&before, &self.cons, dt) < tol {
                    return Ok(Stop::Steady);
                }
            }
        }
        Ok(Stop::Reached)
    }
}

/// Why [`Simulation::advance_to`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Reached,
    Steady,
    Requested,
}

/// Result of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Completed { steps: u64, t: f64, steady: bool },
    Breakdown(Breakdown),
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunOutcome::Completed { .. } => 0,
            RunOutcome::Breakdown(_) => 2,
        }
    }
}

pub fn snapshot_name(case: &str, t: f64) -> String {
    format!("snap_{case}_{t:.6}.csv")
}

/// Cell-centred CSV `x,y,rho,u,v,p`, `i` fastest.
pub fn write_snapshot(path: &Path, grid: &StructuredGrid, field: &[PrimitiveState]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y,rho,u,v,p")?;
    for (c, q) in grid.cell_centers.iter().zip(field) {
        writeln!(
            w,
            "{:.12e},{:.12e},{:.15e},{:.15e},{:.15e},{:.15e}",
            c[0], c[1], q.rho, q.u, q.v, q.p
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Legacy-VTK ASCII structured grid with cell data.
pub fn write_vtk(path: &Path, grid: &StructuredGrid, field: &[PrimitiveState], t: f64) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "flow field t={t}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_GRID")?;
    writeln!(w, "DIMENSIONS {} {} 1", grid.ni + 1, grid.nj + 1)?;
    writeln!(w, "POINTS {} double", grid.vertices.len())?;
    for v in &grid.vertices {
        writeln!(w, "{} {} 0", v[0], v[1])?;
    }
    writeln!(w, "CELL_DATA {}", field.len())?;
    for (name, get) in [
        ("rho", (|q: &PrimitiveState| q.rho) as fn(&PrimitiveState) -> f64),
        ("p", |q| q.p),
    ] {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for q in field {
            writeln!(w, "{}", get(q))?;
        }
    }
    writeln!(w, "VECTORS velocity double")?;
    for q in field {
        writeln!(w, "{} {} 0", q.u, q.v)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a snapshot CSV back as `(x, y, [rho, u, v, p])` rows.
pub fn read_snapshot(path: &Path) -> Result<Vec<([f64; 2], PrimitiveState)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some("x,y,rho,u,v,p") {
        return Err(Error::Config(format!(
            "{} is not a snapshot file",
            path.display()
        )));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let v: Vec<f64> = l
                .split(',')
                .map(|x| {
                    x.parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad number in '{l}'")))
                })
                .collect::<Result<_>>()?;
            if v.len() != 6 {
                return Err(Error::Config(format!("expected 6 columns in '{l}'")));
            }
            Ok(([v[0], v[1]], PrimitiveState::new(v[2], v[3], v[4], v[5])))
        })
        .collect()
}

/// Run a case to completion, writing snapshots, `run_log.csv` and on
/// breakdown `failure.csv` into the output directory. Configuration
/// problems are reported before anything is written.
pub fn run(cfg: &CaseConfig, registry: &CaseRegistry) -> Result<RunOutcome> {
    let mut sim = Simulation::new(cfg, registry)?;
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.ini"), cfg.to_ini_string())?;
    let mut log = BufWriter::new(File::create(dir.join("run_log.csv"))?);
    writeln!(log, "step,t,dt,min_p,max_speed,fallback_count")?;

    let write_all = |sim: &Simulation| -> Result<()> {
        write_snapshot(
            &dir.join(snapshot_name(&cfg.case, sim.time())),
            sim.grid(),
            sim.primitives(),
        )?;
        if cfg.output.vtk {
            let name = format!("snap_{}_{:.6}.vtk", cfg.case, sim.time());
            write_vtk(&dir.join(name), sim.grid(), sim.primitives(), sim.time())?;
        }
        Ok(())
    };
    write_all(&sim)?;

    let t_end = cfg.time.t_end;
    let cadence = cfg.output.cadence;
    let mut steady = false;
    let mut k = 1u64;
    let result = loop {
        let target = (k as f64 * cadence).min(t_end);
        let res = sim.advance_to(target, cfg.time.steady_tol, |s, rec| {
            writeln!(
                log,
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                rec.step, rec.t, rec.dt, rec.min_p, rec.max_speed, rec.fallback_count
            )?;
            Ok(cfg.time.max_steps.is_some_and(|n| s.steps() >= n))
        });
        match res {
            Ok(stop) => {
                write_all(&sim)?;
                steady = stop == Stop::Steady;
                if stop != Stop::Reached || target >= t_end {
                    break Ok(());
                }
                k += 1;
            }
            Err(e) => break Err(e),
        }
    };
    log.flush()?;

    match result {
        Ok(()) => Ok(RunOutcome::Completed {
            steps: sim.steps(),
            t: sim.time(),
            steady,
        }),
        Err(e) if e.is_breakdown() => {
            let b = Breakdown {
                step: sim.steps() + 1,
                t: sim.time(),
                cell: e.breakdown_cell(),
                reason: e.to_string(),
            };
            write_failure(&dir.join("failure.csv"), &b)?;
            Ok(RunOutcome::Breakdown(b))
        }
        Err(e) => Err(e),
    }
}

pub fn write_failure(path: &Path, b: &Breakdown) -> Result<()> {
    let (i, j) = match b.cell {
        Some((i, j)) => (i.to_string(), j.to_string()),
        None => (String::new(), String::new()),
    };
    let reason = b.reason.replace(',', ";");
    fs::write(
        path,
        format!("step,t,i,j,reason\n{},{:.12e},{i},{j},{reason}\n", b.step, b.t),
    )?;
    Ok(())
}

/// `(x, value)` rows over every `j` slice of a cell field, `i` fastest.
pub fn slice_scatter(
    grid: &StructuredGrid,
    field: &[PrimitiveState],
    value: impl Fn(&PrimitiveState) -> f64,
) -> Vec<(f64, f64)> {
    grid.cell_centers
        .iter()
        .zip(field)
        .map(|(c, q)| (c[0], value(q)))
        .collect()
}

/// Largest density difference between cells mirrored `j ↔ nj-1-j`,
/// relative to `rho_ref`.
pub fn asymmetry_metric(grid: &StructuredGrid, field: &[PrimitiveState], rho_ref: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..grid.nj / 2 {
        for i in 0..grid.ni {
            let a = field[grid.cell(i, j)].rho;
            let b = field[grid.cell(i, grid.nj - 1 - j)].rho;
            worst = worst.max((a - b).abs());
        }
    }
    worst / rho_ref
}
