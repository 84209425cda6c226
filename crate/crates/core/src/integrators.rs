//! Explicit time stepping: Runge-Kutta methods given by Butcher tableaus,
//! variable-step Adams-Bashforth with lower-order startup, and CFL control.

use std::collections::VecDeque;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::StructuredGrid;
use crate::state::{GasModel, PrimitiveState, Vec4};

/// Vector-space operations needed by the steppers.
pub trait OdeState: Clone {
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);
}

impl OdeState for f64 {
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
}

impl OdeState for Complex64 {
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
}

impl OdeState for Vec<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            *s += a * v;
        }
    }
}

impl OdeState for Vec<Vec4> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            for m in 0..4 {
                s[m] += a * v[m];
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    pub name: &'static str,
    /// Row-major `s × s`, strictly lower triangular.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ButcherTableau {
    pub fn new(name: &'static str, a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let t = Self { name, a, b, c };
        t.validate()?;
        Ok(t)
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.b.len();
        if s == 0 || self.c.len() != s || self.a.len() != s || self.a.iter().any(|r| r.len() != s) {
            return Err(Error::InvalidTableau("inconsistent dimensions".into()));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row[i..].iter().any(|&x| x != 0.0) {
                return Err(Error::InvalidTableau(format!(
                    "row {i} is not strictly lower triangular"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - self.c[i]).abs() > 1e-14 {
                return Err(Error::InvalidTableau(format!(
                    "c[{i}] differs from the row sum of A"
                )));
            }
            if !(0.0..=1.0).contains(&self.c[i]) {
                return Err(Error::InvalidTableau(format!("c[{i}] outside [0, 1]")));
            }
        }
        if (self.b.iter().sum::<f64>() - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidTableau("weights do not sum to one".into()));
        }
        Ok(())
    }
}

pub fn euler_tableau() -> ButcherTableau {
    ButcherTableau {
        name: "euler",
        a: vec![vec![0.0]],
        b: vec![1.0],
        c: vec![0.0],
    }
}

pub fn heun2_tableau() -> ButcherTableau {
    ButcherTableau {
        name: "heun2",
        a: vec![vec![0.0, 0.0], vec![1.0, 0.0]],
        b: vec![0.5, 0.5],
        c: vec![0.0, 1.0],
    }
}

pub fn heun3_tableau() -> ButcherTableau {
    ButcherTableau {
        name: "heun3",
        a: vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0 / 3.0, 0.0, 0.0],
            vec![0.0, 2.0 / 3.0, 0.0],
        ],
        b: vec![0.25, 0.0, 0.75],
        c: vec![0.0, 1.0 / 3.0, 2.0 / 3.0],
    }
}

pub fn rk4_tableau() -> ButcherTableau {
    ButcherTableau {
        name: "rk4",
        a: vec![
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.5, 0.0, 0.0, 0.0],
            vec![0.0, 0.5, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ],
        b: vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
        c: vec![0.0, 0.5, 0.5, 1.0],
    }
}

/// One Runge-Kutta step. RHS failures are reported with the stage index.
pub fn rk_step<Y, F>(tab: &ButcherTableau, mut rhs: F, t: f64, y: &Y, dt: f64) -> Result<Y>
where
    Y: OdeState,
    F: FnMut(f64, &Y) -> Result<Y>,
{
    let s = tab.stages();
    let mut k: Vec<Y> = Vec::with_capacity(s);
    for i in 0..s {
        let mut yi = y.clone();
        for (j, kj) in k.iter().enumerate() {
            let a = tab.a[i][j];
            if a != 0.0 {
                yi.axpy(dt * a, kj);
            }
        }
        let ki = rhs(t + tab.c[i] * dt, &yi).map_err(|e| Error::Stage {
            stage: i + 1,
            source: Box::new(e),
        })?;
        k.push(ki);
    }
    let mut out = y.clone();
    for (bi, ki) in tab.b.iter().zip(&k) {
        if *bi != 0.0 {
            out.axpy(dt * bi, ki);
        }
    }
    Ok(out)
}

/// Weights `β_j` (including the step length) for the RHS values at `times`
/// (newest first) so that `y_{n+1} = y_n + Σ β_j f_j` integrates the
/// interpolating polynomial of the history over `[times[0], t_next]`.
pub fn ab_coefficients(times: &[f64], t_next: f64) -> Result<Vec<f64>> {
    if times.is_empty() {
        return Err(Error::DegenerateHistory);
    }
    let t0 = times[0];
    let h = t_next - t0;
    if !(h > 0.0) || times.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::DegenerateHistory);
    }
    // nodes in units of the new step, relative to the newest time
    let s: Vec<f64> = times.iter().map(|&t| (t - t0) / h).collect();
    let mut weights = Vec::with_capacity(s.len());
    for j in 0..s.len() {
        // ascending coefficients of the j-th Lagrange basis polynomial
        let mut poly = vec![1.0];
        let mut denom = 1.0;
        for (m, &sm) in s.iter().enumerate() {
            if m == j {
                continue;
            }
            let mut next = vec![0.0; poly.len() + 1];
            for (d, &c) in poly.iter().enumerate() {
                next[d + 1] += c;
                next[d] -= sm * c;
            }
            poly = next;
            denom *= s[j] - sm;
        }
        let integral: f64 = poly.iter().enumerate().map(|(d, c)| c / (d + 1) as f64).sum();
        weights.push(h * integral / denom);
    }
    Ok(weights)
}

/// RHS history of an Adams-Bashforth method, newest first.
#[derive(Debug, Clone)]
pub struct AdamsHistory<Y> {
    pub order_target: usize,
    entries: VecDeque<(f64, Y)>,
}

impl<Y: OdeState> AdamsHistory<Y> {
    pub fn new(order_target: usize) -> Result<Self> {
        if !(1..=5).contains(&order_target) {
            return Err(Error::Config(format!(
                "Adams-Bashforth order must be in 1..=5, got {order_target}"
            )));
        }
        Ok(Self {
            order_target,
            entries: VecDeque::with_capacity(order_target),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn times(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn push(&mut self, t: f64, f: Y) -> Result<()> {
        if let Some((newest, _)) = self.entries.front() {
            if !(t > *newest) {
                return Err(Error::DegenerateHistory);
            }
        }
        self.entries.push_front((t, f));
        self.entries.truncate(self.order_target);
        Ok(())
    }
}

/// Advance `y` from the newest history time to `t_next` using every stored
/// RHS value: one entry gives explicit Euler, two AB2, three AB3.
pub fn ab_step<Y: OdeState>(history: &AdamsHistory<Y>, y: &Y, t_next: f64) -> Result<Y> {
    let beta = ab_coefficients(&history.times(), t_next)?;
    let mut out = y.clone();
    for (b, (_, f)) in beta.iter().zip(&history.entries) {
        out.axpy(*b, f);
    }
    Ok(out)
}

/// Time integrators available to the flow solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Rk2,
    Rk3,
    Ab2,
    Ab3,
    /// Second-order space with the Hancock predictor and one Euler update.
    MusclHancock,
}

pub const INTEGRATOR_NAMES: [&str; 6] = ["euler", "rk2", "rk3", "ab2", "ab3", "muscl-hancock"];

impl Integrator {
    pub fn name(&self) -> &'static str {
        match self {
            Integrator::Euler => "euler",
            Integrator::Rk2 => "rk2",
            Integrator::Rk3 => "rk3",
            Integrator::Ab2 => "ab2",
            Integrator::Ab3 => "ab3",
            Integrator::MusclHancock => "muscl-hancock",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "euler" => Integrator::Euler,
            "rk2" => Integrator::Rk2,
            "rk3" => Integrator::Rk3,
            "ab2" => Integrator::Ab2,
            "ab3" => Integrator::Ab3,
            "muscl-hancock" => Integrator::MusclHancock,
            other => {
                return Err(Error::Config(format!(
                    "unknown integrator '{other}' (expected one of {})",
                    INTEGRATOR_NAMES.join(", ")
                )))
            }
        })
    }

    /// Multiplier applied to the configured CFL number.
    pub fn default_factor(&self) -> f64 {
        match self {
            Integrator::Euler | Integrator::Rk2 | Integrator::MusclHancock => 1.0,
            Integrator::Rk3 => 1.2,
            Integrator::Ab2 => 0.4,
            Integrator::Ab3 => 0.15,
        }
    }

    pub fn tableau(&self) -> Option<ButcherTableau> {
        match self {
            Integrator::Euler | Integrator::MusclHancock => Some(euler_tableau()),
            Integrator::Rk2 => Some(heun2_tableau()),
            Integrator::Rk3 => Some(heun3_tableau()),
            Integrator::Ab2 | Integrator::Ab3 => None,
        }
    }

    pub fn ab_order(&self) -> Option<usize> {
        match self {
            Integrator::Ab2 => Some(2),
            Integrator::Ab3 => Some(3),
            _ => None,
        }
    }
}

/// Stateful stepper; holds the multistep history when there is one.
#[derive(Debug, Clone)]
pub struct TimeStepper<Y> {
    pub integrator: Integrator,
    tableau: Option<ButcherTableau>,
    history: Option<AdamsHistory<Y>>,
}

impl<Y: OdeState> TimeStepper<Y> {
    pub fn new(integrator: Integrator) -> Self {
        let history = integrator
            .ab_order()
            .map(|k| AdamsHistory::new(k).expect("orders 2 and 3 are valid"));
        Self {
            integrator,
            tableau: integrator.tableau(),
            history,
        }
    }

    /// Entries currently in the multistep history.
    pub fn history_len(&self) -> usize {
        self.history.as_ref().map_or(0, |h| h.len())
    }

    pub fn step<F>(&mut self, mut rhs: F, t: f64, y: &Y, dt: f64) -> Result<Y>
    where
        F: FnMut(f64, &Y) -> Result<Y>,
    {
        match (&self.tableau, &mut self.history) {
            (Some(tab), _) => rk_step(tab, rhs, t, y, dt),
            (None, Some(hist)) => {
                let f = rhs(t, y).map_err(|e| Error::Stage {
                    stage: 1,
                    source: Box::new(e),
                })?;
                hist.push(t, f)?;
                ab_step(hist, y, t + dt)
            }
            (None, None) => unreachable!("every integrator has a tableau or a history"),
        }
    }
}

/// Methods for [`integrate`].
#[derive(Debug, Clone)]
pub enum OdeMethod {
    Rk(ButcherTableau),
    /// Adams-Bashforth of the given order.
    Ab(usize),
}

/// Integrate from `t0` to `t1` with `n` nominal steps. Adams-Bashforth
/// startup steps of order `k < p` have length `dt^((p+1)/(k+1))`.
pub fn integrate<Y, F>(method: &OdeMethod, mut rhs: F, t0: f64, y0: &Y, t1: f64, n: usize) -> Result<Y>
where
    Y: OdeState,
    F: FnMut(f64, &Y) -> Result<Y>,
{
    let dt = (t1 - t0) / n as f64;
    let mut y = y0.clone();
    match method {
        OdeMethod::Rk(tab) => {
            for step in 0..n {
                let t = t0 + step as f64 * dt;
                y = rk_step(tab, &mut rhs, t, &y, dt)?;
            }
        }
        OdeMethod::Ab(p) => {
            let p = *p;
            let mut hist = AdamsHistory::new(p)?;
            let mut t = t0;
            for k in 1..p {
                let h = dt.powf((p + 1) as f64 / (k + 1) as f64).min(dt);
                hist.push(t, rhs(t, &y)?)?;
                y = ab_step(&hist, &y, t + h)?;
                t += h;
            }
            let remaining = ((t1 - t) / dt).ceil().max(1.0) as usize;
            let h = (t1 - t) / remaining as f64;
            for step in 0..remaining {
                hist.push(t, rhs(t, &y)?)?;
                let t_next = if step + 1 == remaining { t1 } else { t + h };
                y = ab_step(&hist, &y, t_next)?;
                t = t_next;
            }
        }
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepController {
    pub cfl: f64,
    pub method_factor: f64,
}

impl StepController {
    pub fn new(cfl: f64, integrator: Integrator) -> Result<Self> {
        if !(cfl > 0.0) {
            return Err(Error::Config(format!("cfl must be positive, got {cfl}")));
        }
        Ok(Self {
            cfl,
            method_factor: integrator.default_factor(),
        })
    }

    pub fn effective_cfl(&self) -> f64 {
        self.cfl * self.method_factor
    }
}

/// `cfl · factor · min(d_min / (|v| + c))` over all cells.
pub fn cfl_dt(
    field: &[PrimitiveState],
    grid: &StructuredGrid,
    controller: &StepController,
    gas: GasModel,
) -> f64 {
    let mut best = f64::INFINITY;
    for j in 0..grid.nj {
        for i in 0..grid.ni {
            let q = &field[grid.cell(i, j)];
            let speed = q.speed() + q.sound_speed(gas);
            best = best.min(grid.min_width(i, j) / speed);
        }
    }
    controller.effective_cfl() * best
}
