//! Finite-volume residual assembly.
//!
//! Fluxes are evaluated face by face (all i-faces, then all j-faces) into
//! separate buffers and only afterwards summed per cell in a fixed order,
//! so the result does not depend on how the face loops are scheduled.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{fill_ghosts, GhostField, StructuredGrid, GHOSTS};
use crate::riemann::{numerical_flux, WaveSpeedStrategy};
use crate::state::{
    conserved_to_primitive, physical_flux_normal, primitive_to_conserved, ConservedState, GasModel,
    PrimitiveState, Vec4,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Limiter {
    #[default]
    Minmod,
    Mc,
    VanLeer,
}

impl Limiter {
    pub fn name(&self) -> &'static str {
        match self {
            Limiter::Minmod => "minmod",
            Limiter::Mc => "mc",
            Limiter::VanLeer => "vanleer",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "minmod" => Ok(Limiter::Minmod),
            "mc" => Ok(Limiter::Mc),
            "vanleer" => Ok(Limiter::VanLeer),
            other => Err(Error::Config(format!(
                "unknown limiter '{other}' (expected minmod, mc, vanleer)"
            ))),
        }
    }

    /// Limited slope from backward and forward differences.
    #[inline]
    pub fn slope(&self, back: f64, fwd: f64) -> f64 {
        if back * fwd <= 0.0 {
            return 0.0;
        }
        match self {
            Limiter::Minmod => {
                if back.abs() < fwd.abs() {
                    back
                } else {
                    fwd
                }
            }
            Limiter::Mc => {
                let m = (2.0 * back.abs())
                    .min(2.0 * fwd.abs())
                    .min(0.5 * (back + fwd).abs());
                m.copysign(back)
            }
            Limiter::VanLeer => 2.0 * back * fwd / (back + fwd),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeConfig {
    pub order: u8,
    pub limiter: Limiter,
    pub hancock: bool,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self::first_order()
    }
}

impl SchemeConfig {
    pub fn first_order() -> Self {
        Self {
            order: 1,
            limiter: Limiter::Minmod,
            hancock: false,
        }
    }

    pub fn muscl(limiter: Limiter) -> Self {
        Self {
            order: 2,
            limiter,
            hancock: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.order, 1 | 2) {
            return Err(Error::Config(format!(
                "spatial order must be 1 or 2, got {}",
                self.order
            )));
        }
        if self.hancock && self.order != 2 {
            return Err(Error::Config(
                "the Hancock predictor requires second order in space".into(),
            ));
        }
        Ok(())
    }
}

/// Left/right states at every face of the grid, boundary faces included.
#[derive(Debug, Clone, Default)]
pub struct FaceStates {
    /// Index as [`StructuredGrid::i_face`].
    pub i_faces: Vec<(PrimitiveState, PrimitiveState)>,
    /// Index as [`StructuredGrid::j_face`].
    pub j_faces: Vec<(PrimitiveState, PrimitiveState)>,
    /// Faces or cells that reverted to first order to stay positive.
    pub fallbacks: usize,
}

/// Reconstructed values at the west, east, south and north face of a cell.
type CellFaces = [PrimitiveState; 4];
const W: usize = 0;
const E: usize = 1;
const S: usize = 2;
const N: usize = 3;

fn limited(q: &PrimitiveState, back: &PrimitiveState, fwd: &PrimitiveState, lim: Limiter) -> Vec4 {
    let (a, b, c) = (back.to_array(), q.to_array(), fwd.to_array());
    [0, 1, 2, 3].map(|m| lim.slope(b[m] - a[m], c[m] - b[m]))
}

fn offset(q: &PrimitiveState, s: &Vec4, k: f64) -> PrimitiveState {
    PrimitiveState::new(q.rho + k * s[0], q.u + k * s[1], q.v + k * s[2], q.p + k * s[3])
}

/// Limited linear reconstruction of one cell, in primitive variables along
/// the grid index directions.
fn reconstruct_cell(field: &GhostField, i: isize, j: isize, lim: Limiter) -> CellFaces {
    let q = field.at(i, j);
    let si = limited(q, field.at(i - 1, j), field.at(i + 1, j), lim);
    let sj = limited(q, field.at(i, j - 1), field.at(i, j + 1), lim);
    [
        offset(q, &si, -0.5),
        offset(q, &si, 0.5),
        offset(q, &sj, -0.5),
        offset(q, &sj, 0.5),
    ]
}

/// Half-step evolution of a cell's reconstructed face values with the
/// conservative cell-local update built from the cell's own physical fluxes.
/// Returns `None` if an evolved state is not admissible.
fn evolve_cell(
    grid: &StructuredGrid,
    i: isize,
    j: isize,
    faces: &CellFaces,
    dt: f64,
    gas: GasModel,
) -> Option<CellFaces> {
    // ghost cells borrow the metrics of the nearest interior cell
    let ic = i.clamp(0, grid.ni as isize - 1) as usize;
    let jc = j.clamp(0, grid.nj as isize - 1) as usize;
    let fw = grid.i_face(ic, jc);
    let fe = grid.i_face(ic + 1, jc);
    let fs = grid.j_face(ic, jc);
    let fnn = grid.j_face(ic, jc + 1);
    let area = grid.cell_areas[grid.cell(ic, jc)];

    let net = |q: &PrimitiveState, f: &crate::grid::Face, sign: f64| {
        physical_flux_normal(*q, f.normal, gas).map(|x| sign * f.length * x)
    };
    let parts = [
        net(&faces[W], fw, -1.0),
        net(&faces[E], fe, 1.0),
        net(&faces[S], fs, -1.0),
        net(&faces[N], fnn, 1.0),
    ];
    let k = -0.5 * dt / area;
    let du: Vec4 = [0, 1, 2, 3].map(|m| k * (parts[0][m] + parts[1][m] + parts[2][m] + parts[3][m]));

    let mut out = *faces;
    for q in out.iter_mut() {
        let u = primitive_to_conserved(*q, gas).to_array();
        let evolved = ConservedState::from_array([0, 1, 2, 3].map(|m| u[m] + du[m]));
        *q = conserved_to_primitive(evolved, gas).ok()?;
    }
    Some(out)
}

/// Per-cell reconstructed face values on the interior plus one ghost ring,
/// stored with the ghost-field layout.
fn cell_faces(
    field: &GhostField,
    grid: &StructuredGrid,
    lim: Limiter,
    hancock: Option<(f64, GasModel)>,
    out: &mut Vec<CellFaces>,
) -> usize {
    let stride = field.stride();
    let rows = grid.nj + 2 * GHOSTS;
    let filler = *field.at(0, 0);
    out.clear();
    out.resize(stride * rows, [filler; 4]);
    let (ni, nj) = (grid.ni as isize, grid.nj as isize);

    let fallbacks: usize = out
        .par_chunks_mut(stride)
        .enumerate()
        .map(|(row, chunk)| {
            let j = row as isize - GHOSTS as isize;
            if j < -1 || j > nj {
                return 0;
            }
            let mut count = 0;
            for i in -1..=ni {
                let q = *field.at(i, j);
                let rec = reconstruct_cell(field, i, j, lim);
                let faces = if rec.iter().all(PrimitiveState::is_valid) {
                    match hancock {
                        Some((dt, gas)) => evolve_cell(grid, i, j, &rec, dt, gas).unwrap_or_else(|| {
                            count += 1;
                            rec
                        }),
                        None => rec,
                    }
                } else {
                    count += 1;
                    [q; 4]
                };
                chunk[(i + GHOSTS as isize) as usize] = faces;
            }
            count
        })
        .sum();
    fallbacks
}

fn pair_faces(field: &GhostField, grid: &StructuredGrid, faces: &[CellFaces], states: &mut FaceStates) {
    let stride = field.stride();
    let at =
        |i: isize, j: isize| &faces[(i + GHOSTS as isize) as usize + (j + GHOSTS as isize) as usize * stride];
    let (ni, nj) = (grid.ni, grid.nj);
    let mut fallbacks = 0;
    let mut choose = |l: PrimitiveState, r: PrimitiveState, cl: PrimitiveState, cr: PrimitiveState| {
        if l.is_valid() && r.is_valid() {
            (l, r)
        } else {
            fallbacks += 1;
            (cl, cr)
        }
    };
    states.i_faces.clear();
    for j in 0..nj as isize {
        for i in 0..=ni as isize {
            let pair = choose(at(i - 1, j)[E], at(i, j)[W], *field.at(i - 1, j), *field.at(i, j));
            states.i_faces.push(pair);
        }
    }
    states.j_faces.clear();
    for j in 0..=nj as isize {
        for i in 0..ni as isize {
            let pair = choose(at(i, j - 1)[N], at(i, j)[S], *field.at(i, j - 1), *field.at(i, j));
            states.j_faces.push(pair);
        }
    }
    states.fallbacks += fallbacks;
}

/// Limited MUSCL face states. `field` must have its ghost layers filled.
pub fn muscl_faces(field: &GhostField, grid: &StructuredGrid, limiter: Limiter) -> FaceStates {
    let mut buf = Vec::new();
    let mut states = FaceStates {
        fallbacks: cell_faces(field, grid, limiter, None, &mut buf),
        ..Default::default()
    };
    pair_faces(field, grid, &buf, &mut states);
    states
}

/// MUSCL face states advanced by `dt/2` with the Hancock predictor.
pub fn hancock_predictor(
    field: &GhostField,
    grid: &StructuredGrid,
    limiter: Limiter,
    dt: f64,
    gas: GasModel,
) -> FaceStates {
    let mut buf = Vec::new();
    let mut states = FaceStates {
        fallbacks: cell_faces(field, grid, limiter, Some((dt, gas)), &mut buf),
        ..Default::default()
    };
    pair_faces(field, grid, &buf, &mut states);
    states
}

/// Face-flux residual operator with reusable work buffers.
#[derive(Debug, Clone)]
pub struct SpatialOperator {
    pub grid: StructuredGrid,
    pub scheme: SchemeConfig,
    pub strategy: WaveSpeedStrategy,
    pub gas: GasModel,
    ghost: GhostField,
    cell_faces: Vec<CellFaces>,
    i_flux: Vec<Vec4>,
    j_flux: Vec<Vec4>,
}

impl SpatialOperator {
    pub fn new(
        grid: StructuredGrid,
        scheme: SchemeConfig,
        strategy: WaveSpeedStrategy,
        gas: GasModel,
    ) -> Result<Self> {
        scheme.validate()?;
        strategy.validate()?;
        let ghost = GhostField::new(grid.ni, grid.nj);
        let i_flux = vec![[0.0; 4]; grid.i_faces.len()];
        let j_flux = vec![[0.0; 4]; grid.j_faces.len()];
        Ok(Self {
            grid,
            scheme,
            strategy,
            gas,
            ghost,
            cell_faces: Vec::new(),
            i_flux,
            j_flux,
        })
    }

    /// The padded field of the last evaluation.
    pub fn ghost_field(&self) -> &GhostField {
        &self.ghost
    }

    /// `dq/dt` per cell in conserved components. Uses the Hancock predictor
    /// with step `hancock_dt` when the scheme asks for it and a step is
    /// given. Returns the number of positivity fallbacks.
    pub fn residual(&mut self, prims: &[PrimitiveState], hancock_dt: Option<f64>, out: &mut [Vec4]) -> usize {
        assert_eq!(prims.len(), self.grid.n_cells());
        assert_eq!(out.len(), self.grid.n_cells());
        self.ghost.load_interior(prims);
        fill_ghosts(&mut self.ghost, &self.grid);

        let fallbacks = if self.scheme.order == 1 {
            self.first_order_fluxes();
            0
        } else {
            let hancock = match (self.scheme.hancock, hancock_dt) {
                (true, Some(dt)) => Some((dt, self.gas)),
                _ => None,
            };
            let n = cell_faces(
                &self.ghost,
                &self.grid,
                self.scheme.limiter,
                hancock,
                &mut self.cell_faces,
            );
            n + self.reconstructed_fluxes()
        };
        self.accumulate(out);
        fallbacks
    }

    fn first_order_fluxes(&mut self) {
        let (grid, ghost, strategy, gas) = (&self.grid, &self.ghost, &self.strategy, self.gas);
        let ni = grid.ni;
        self.i_flux
            .par_chunks_mut(ni + 1)
            .enumerate()
            .for_each(|(j, row)| {
                let j = j as isize;
                for (i, slot) in row.iter_mut().enumerate() {
                    let f = grid.i_face(i, j as usize);
                    let ii = i as isize;
                    let g = numerical_flux(ghost.at(ii - 1, j), ghost.at(ii, j), f.normal, strategy, gas);
                    *slot = g.map(|x| x * f.length);
                }
            });
        self.j_flux.par_chunks_mut(ni).enumerate().for_each(|(j, row)| {
            let jj = j as isize;
            for (i, slot) in row.iter_mut().enumerate() {
                let f = grid.j_face(i, j);
                let ii = i as isize;
                let g = numerical_flux(ghost.at(ii, jj - 1), ghost.at(ii, jj), f.normal, strategy, gas);
                *slot = g.map(|x| x * f.length);
            }
        });
    }

    fn reconstructed_fluxes(&mut self) -> usize {
        let (grid, ghost, strategy, gas) = (&self.grid, &self.ghost, &self.strategy, self.gas);
        let faces = &self.cell_faces;
        let stride = ghost.stride();
        let at = |i: isize, j: isize| {
            &faces[(i + GHOSTS as isize) as usize + (j + GHOSTS as isize) as usize * stride]
        };
        let pick = |l: PrimitiveState, r: PrimitiveState, cl: &PrimitiveState, cr: &PrimitiveState| {
            if l.is_valid() && r.is_valid() {
                (l, r, 0)
            } else {
                (*cl, *cr, 1)
            }
        };
        let ni = grid.ni;
        let fi: usize = self
            .i_flux
            .par_chunks_mut(ni + 1)
            .enumerate()
            .map(|(j, row)| {
                let jj = j as isize;
                let mut count = 0;
                for (i, slot) in row.iter_mut().enumerate() {
                    let ii = i as isize;
                    let (l, r, c) = pick(
                        at(ii - 1, jj)[E],
                        at(ii, jj)[W],
                        ghost.at(ii - 1, jj),
                        ghost.at(ii, jj),
                    );
                    count += c;
                    let f = grid.i_face(i, j);
                    *slot = numerical_flux(&l, &r, f.normal, strategy, gas).map(|x| x * f.length);
                }
                count
            })
            .sum();
        let fj: usize = self
            .j_flux
            .par_chunks_mut(ni)
            .enumerate()
            .map(|(j, row)| {
                let jj = j as isize;
                let mut count = 0;
                for (i, slot) in row.iter_mut().enumerate() {
                    let ii = i as isize;
                    let (l, r, c) = pick(
                        at(ii, jj - 1)[N],
                        at(ii, jj)[S],
                        ghost.at(ii, jj - 1),
                        ghost.at(ii, jj),
                    );
                    count += c;
                    let f = grid.j_face(i, j);
                    *slot = numerical_flux(&l, &r, f.normal, strategy, gas).map(|x| x * f.length);
                }
                count
            })
            .sum();
        fi + fj
    }

    fn accumulate(&self, out: &mut [Vec4]) {
        let grid = &self.grid;
        let ni = grid.ni;
        let (i_flux, j_flux) = (&self.i_flux, &self.j_flux);
        out.par_chunks_mut(ni).enumerate().for_each(|(j, row)| {
            for (i, r) in row.iter_mut().enumerate() {
                let w = &i_flux[i + j * (ni + 1)];
                let e = &i_flux[i + 1 + j * (ni + 1)];
                let s = &j_flux[i + j * ni];
                let n = &j_flux[i + (j + 1) * ni];
                let inv = 1.0 / grid.cell_areas[i + j * ni];
                for m in 0..4 {
                    r[m] = -((e[m] - w[m]) + (n[m] - s[m])) * inv;
                }
            }
        });
    }

    /// Net flux through the domain boundary, `Σ length·G` over outward
    /// boundary faces.
    pub fn boundary_outflow(&self) -> Vec4 {
        let g = &self.grid;
        let mut total = [0.0; 4];
        for j in 0..g.nj {
            let w = &self.i_flux[j * (g.ni + 1)];
            let e = &self.i_flux[g.ni + j * (g.ni + 1)];
            for m in 0..4 {
                total[m] += e[m] - w[m];
            }
        }
        for i in 0..g.ni {
            let s = &self.j_flux[i];
            let n = &self.j_flux[i + g.nj * g.ni];
            for m in 0..4 {
                total[m] += n[m] - s[m];
            }
        }
        total
    }
}

/// Convert conserved cell values, reporting the first inadmissible cell.
pub fn primitives_from_conserved(
    cons: &[Vec4],
    ni: usize,
    gas: GasModel,
    out: &mut Vec<PrimitiveState>,
) -> Result<()> {
    out.clear();
    out.reserve(cons.len());
    for (k, q) in cons.iter().enumerate() {
        match conserved_to_primitive(ConservedState::from_array(*q), gas) {
            Ok(p) => out.push(p),
            Err(source) => {
                return Err(Error::Cell {
                    i: k % ni,
                    j: k / ni,
                    source,
                })
            }
        }
    }
    Ok(())
}

/// Allocating convenience wrapper around [`SpatialOperator::residual`].
pub fn compute_residual(
    field: &[PrimitiveState],
    grid: &StructuredGrid,
    scheme: SchemeConfig,
    strategy: WaveSpeedStrategy,
    gas: GasModel,
) -> Result<Vec<Vec4>> {
    let mut op = SpatialOperator::new(grid.clone(), scheme, strategy, gas)?;
    let mut out = vec![[0.0; 4]; grid.n_cells()];
    op.residual(field, None, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_annulus, build_cartesian, Boundaries, BoundaryKind};
    use crate::riemann::BetaSource;
    use std::f64::consts::TAU;

    const GAS: GasModel = GasModel { gamma: 1.4 };

    fn strategies() -> Vec<WaveSpeedStrategy> {
        vec![
            WaveSpeedStrategy::RoeStandard,
            WaveSpeedStrategy::RoeHarten { delta_rel: 0.1 },
            WaveSpeedStrategy::RoeHlleSpeeds,
            WaveSpeedStrategy::Fleischmann { phi: 5.0 },
            WaveSpeedStrategy::FleischmannLinear { phi: 5.0 },
            WaveSpeedStrategy::GeomBlend {
                phi: 5.0,
                beta: BetaSource::default(),
            },
            WaveSpeedStrategy::ArithBlend {
                phi: 5.0,
                beta: BetaSource::Constant(0.4),
            },
        ]
    }

    fn max_abs(r: &[Vec4]) -> f64 {
        r.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    #[test]
    fn limiter_definitions() {
        for lim in [Limiter::Minmod, Limiter::Mc, Limiter::VanLeer] {
            assert_eq!(lim.slope(1.0, -1.0), 0.0);
            assert_eq!(lim.slope(0.0, 2.0), 0.0);
            assert_eq!(lim.slope(0.5, 0.5), 0.5);
        }
        assert_eq!(Limiter::Minmod.slope(1.0, 3.0), 1.0);
        assert_eq!(Limiter::Mc.slope(1.0, 3.0), 2.0);
        assert_eq!(Limiter::VanLeer.slope(1.0, 3.0), 1.5);
    }

    #[test]
    fn scheme_validation() {
        assert!(SchemeConfig {
            order: 1,
            limiter: Limiter::Minmod,
            hancock: true
        }
        .validate()
        .is_err());
        assert!(SchemeConfig {
            order: 3,
            ..SchemeConfig::first_order()
        }
        .validate()
        .is_err());
        assert!(SchemeConfig {
            order: 2,
            limiter: Limiter::Mc,
            hancock: true
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn uniform_flow_is_residual_free_on_cartesian() {
        let q = PrimitiveState::new(1.3, 0.4, -0.7, 2.0);
        let grid = build_cartesian(12, 9, (0.0, 1.5), (-1.0, 1.0))
            .unwrap()
            .with_boundaries(Boundaries {
                west: BoundaryKind::DirichletState(q),
                east: BoundaryKind::Extrapolation,
                south: BoundaryKind::Periodic,
                north: BoundaryKind::Periodic,
            })
            .unwrap();
        let field = vec![q; grid.n_cells()];
        for strat in strategies() {
            for scheme in [SchemeConfig::first_order(), SchemeConfig::muscl(Limiter::Mc)] {
                let r = compute_residual(&field, &grid, scheme, strat, GAS).unwrap();
                assert!(max_abs(&r) <= 1e-13, "{strat:?}: {}", max_abs(&r));
            }
        }
    }

    #[test]
    fn uniform_flow_is_residual_free_on_annulus() {
        let q = PrimitiveState::new(1.0, 0.3, 0.1, 1.0);
        let grid = build_annulus(1.0, 5.0, 30, 48, (0.0, TAU))
            .unwrap()
            .with_boundaries(Boundaries {
                west: BoundaryKind::DirichletState(q),
                east: BoundaryKind::DirichletState(q),
                south: BoundaryKind::Periodic,
                north: BoundaryKind::Periodic,
            })
            .unwrap();
        let field = vec![q; grid.n_cells()];
        for strat in strategies() {
            let r = compute_residual(&field, &grid, SchemeConfig::first_order(), strat, GAS).unwrap();
            assert!(max_abs(&r) <= 1e-12, "{strat:?}: {}", max_abs(&r));
        }
    }

    #[test]
    fn periodic_residual_sums_to_zero() {
        let grid = build_cartesian(16, 12, (0.0, 1.0), (0.0, 1.0))
            .unwrap()
            .with_boundaries(Boundaries::uniform(BoundaryKind::Periodic))
            .unwrap();
        let field: Vec<_> = (0..grid.n_cells())
            .map(|k| {
                let [x, y] = grid.cell_centers[k];
                PrimitiveState::new(
                    1.0 + 0.3 * (TAU * x).sin(),
                    0.5 * (TAU * y).cos(),
                    0.2,
                    1.0 + 0.2 * (TAU * (x + y)).cos(),
                )
            })
            .collect();
        for scheme in [SchemeConfig::first_order(), SchemeConfig::muscl(Limiter::VanLeer)] {
            let r = compute_residual(
                &field,
                &grid,
                scheme,
                WaveSpeedStrategy::Fleischmann { phi: 5.0 },
                GAS,
            )
            .unwrap();
            for m in 0..4 {
                let total: f64 = r.iter().zip(&grid.cell_areas).map(|(q, a)| q[m] * a).sum();
                let scale: f64 = r
                    .iter()
                    .zip(&grid.cell_areas)
                    .map(|(q, a)| (q[m] * a).abs())
                    .sum();
                assert!(total.abs() <= 1e-12 * scale.max(1.0), "component {m}: {total}");
            }
        }
    }

    #[test]
    fn sod_step_conserves_mass_up_to_boundary_flux() {
        let grid = build_cartesian(100, 1, (0.0, 1.0), (0.0, 0.01)).unwrap();
        let field: Vec<_> = (0..100)
            .map(|i| {
                if i < 50 {
                    PrimitiveState::new(1.0, 0.0, 0.0, 1.0)
                } else {
                    PrimitiveState::new(0.125, 0.0, 0.0, 0.1)
                }
            })
            .collect();
        let mut op = SpatialOperator::new(
            grid.clone(),
            SchemeConfig::first_order(),
            WaveSpeedStrategy::RoeStandard,
            GAS,
        )
        .unwrap();
        let mut r = vec![[0.0; 4]; 100];
        op.residual(&field, None, &mut r);
        let dt = 0.9 * 0.01 / 1.4f64.sqrt();
        let cons: Vec<Vec4> = field
            .iter()
            .map(|q| primitive_to_conserved(*q, GAS).to_array())
            .collect();
        let mass = |c: &[Vec4]| c.iter().zip(&grid.cell_areas).map(|(q, a)| q[0] * a).sum::<f64>();
        let next: Vec<Vec4> = cons
            .iter()
            .zip(&r)
            .map(|(q, d)| [0, 1, 2, 3].map(|m| q[m] + dt * d[m]))
            .collect();
        let change = mass(&next) - mass(&cons);
        let expected = -dt * op.boundary_outflow()[0];
        assert!((change - expected).abs() <= 1e-12, "{change} vs {expected}");
    }

    fn ghosted(grid: &StructuredGrid, field: &[PrimitiveState]) -> GhostField {
        let mut g = GhostField::new(grid.ni, grid.nj);
        g.load_interior(field);
        fill_ghosts(&mut g, grid);
        g
    }

    #[test]
    fn muscl_reproduces_linear_profiles() {
        let grid = build_cartesian(10, 3, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let rho = |x: f64| 1.0 + 0.5 * x;
        let field: Vec<_> = (0..grid.n_cells())
            .map(|k| PrimitiveState::new(rho(grid.cell_centers[k][0]), 0.1, 0.0, 1.0))
            .collect();
        let states = muscl_faces(&ghosted(&grid, &field), &grid, Limiter::Minmod);
        assert_eq!(states.fallbacks, 0);
        // interior faces away from the constant-extrapolation boundary
        for j in 0..3 {
            for i in 2..=8 {
                let (l, r) = states.i_faces[i + j * 11];
                let x = i as f64 * 0.1;
                assert!((l.rho - rho(x)).abs() < 1e-14 && (r.rho - rho(x)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn muscl_flattens_extrema_and_constants() {
        let grid = build_cartesian(5, 1, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let mut field = vec![PrimitiveState::new(1.0, 0.0, 0.0, 1.0); 5];
        let states = muscl_faces(&ghosted(&grid, &field), &grid, Limiter::Minmod);
        for (l, r) in states.i_faces.iter().chain(&states.j_faces) {
            assert_eq!(*l, field[0]);
            assert_eq!(*r, field[0]);
        }
        field[2].rho = 2.0;
        let states = muscl_faces(&ghosted(&grid, &field), &grid, Limiter::Minmod);
        // both faces of the peak cell carry the cell value
        assert_eq!(states.i_faces[2].1.rho, 2.0);
        assert_eq!(states.i_faces[3].0.rho, 2.0);
    }

    #[test]
    fn muscl_falls_back_near_vacuum() {
        let grid = build_cartesian(6, 1, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let field: Vec<_> = [1.0, 1.0, 1e-3, 1e-6, 1.0, 1.0]
            .iter()
            .map(|&p| PrimitiveState::new(1.0, 0.0, 0.0, p))
            .collect();
        let states = muscl_faces(&ghosted(&grid, &field), &grid, Limiter::Mc);
        for (l, r) in states.i_faces.iter() {
            assert!(l.is_valid() && r.is_valid());
        }
    }

    #[test]
    fn hancock_predictor_identities() {
        let grid = build_annulus(1.0, 2.0, 6, 16, (0.0, TAU)).unwrap();
        let q = PrimitiveState::new(1.0, 0.2, -0.1, 1.0);
        let constant = ghosted(&grid, &vec![q; grid.n_cells()]);
        let pred = hancock_predictor(&constant, &grid, Limiter::Minmod, 0.01, GAS);
        for (l, r) in pred.i_faces.iter().chain(&pred.j_faces) {
            for (a, b) in l
                .to_array()
                .iter()
                .chain(&r.to_array())
                .zip(q.to_array().iter().chain(&q.to_array()))
            {
                assert!((a - b).abs() < 1e-13);
            }
        }

        let field: Vec<_> = (0..grid.n_cells())
            .map(|k| {
                let [x, y] = grid.cell_centers[k];
                PrimitiveState::new(1.0 + 0.2 * x, 0.1 * y, 0.3, 1.0 + 0.1 * x * y)
            })
            .collect();
        let g = ghosted(&grid, &field);
        let plain = muscl_faces(&g, &grid, Limiter::Minmod);
        let zero = hancock_predictor(&g, &grid, Limiter::Minmod, 0.0, GAS);
        for (a, b) in plain
            .i_faces
            .iter()
            .chain(&plain.j_faces)
            .zip(zero.i_faces.iter().chain(&zero.j_faces))
        {
            for (x, y) in a.0.to_array().iter().zip(b.0.to_array()) {
                assert!((x - y).abs() <= 1e-14 * x.abs().max(1.0));
            }
            for (x, y) in a.1.to_array().iter().zip(b.1.to_array()) {
                assert!((x - y).abs() <= 1e-14 * x.abs().max(1.0));
            }
        }
    }

    /// Density advection with constant u and p; returns the L1 error after
    /// one period.
    fn advection_error(n: usize) -> f64 {
        let grid = build_cartesian(n, 1, (0.0, 1.0), (0.0, 1.0 / n as f64))
            .unwrap()
            .with_boundaries(Boundaries::uniform(BoundaryKind::Periodic))
            .unwrap();
        // cell averages
        let avg = |i: usize| {
            let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            1.0 - 0.2 * ((TAU * b).cos() - (TAU * a).cos()) / (TAU * (b - a))
        };
        let scheme = SchemeConfig {
            order: 2,
            limiter: Limiter::VanLeer,
            hancock: true,
        };
        let mut op = SpatialOperator::new(grid.clone(), scheme, WaveSpeedStrategy::RoeStandard, GAS).unwrap();
        let mut cons: Vec<Vec4> = (0..n)
            .map(|i| primitive_to_conserved(PrimitiveState::new(avg(i), 1.0, 0.0, 1.0), GAS).to_array())
            .collect();
        let c_max = 1.0 + (1.4f64 / 0.8).sqrt();
        let steps = (n as f64 * c_max / 0.4).ceil() as usize;
        let dt = 1.0 / steps as f64;
        let mut prims = Vec::new();
        let mut r = vec![[0.0; 4]; n];
        for _ in 0..steps {
            primitives_from_conserved(&cons, n, GAS, &mut prims).unwrap();
            op.residual(&prims, Some(dt), &mut r);
            for (q, d) in cons.iter_mut().zip(&r) {
                for m in 0..4 {
                    q[m] += dt * d[m];
                }
            }
        }
        (0..n).map(|i| (cons[i][0] - avg(i)).abs()).sum::<f64>() / n as f64
    }

    #[test]
    fn hancock_converges_at_second_order() {
        let (e1, e2) = (advection_error(100), advection_error(200));
        let order = (e1 / e2).log2();
        assert!(order >= 1.8, "observed order {order} ({e1}, {e2})");
    }
}
