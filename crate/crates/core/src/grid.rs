//! Logically rectangular quad grids, metrics and ghost-cell boundary
//! conditions.
//!
//! Index conventions: cell `(i, j)` with `0 <= i < ni`, `0 <= j < nj`,
//! stored at `i + j * ni`. The i-face `(i, j)` separates cells `(i-1, j)`
//! and `(i, j)`, its normal points towards increasing `i`; likewise for
//! j-faces. On an annulus `i` runs radially and `j` counter-clockwise.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::state::PrimitiveState;

/// Ghost layers on every side.
pub const GHOSTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind {
    Periodic,
    /// Zeroth-order copy of the adjacent interior cell.
    Extrapolation,
    /// Linear extrapolation from the two adjacent cells, falling back to
    /// a constant copy when that would produce an invalid state.
    ExtrapolationLinear,
    DirichletState(PrimitiveState),
    Wall,
    Inflow(PrimitiveState),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `i = 0`
    West,
    /// `i = ni`
    East,
    /// `j = 0`
    South,
    /// `j = nj`
    North,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundaries {
    pub west: BoundaryKind,
    pub east: BoundaryKind,
    pub south: BoundaryKind,
    pub north: BoundaryKind,
}

impl Boundaries {
    pub fn uniform(kind: BoundaryKind) -> Self {
        Self {
            west: kind,
            east: kind,
            south: kind,
            north: kind,
        }
    }

    pub fn get(&self, side: Side) -> BoundaryKind {
        match side {
            Side::West => self.west,
            Side::East => self.east,
            Side::South => self.south,
            Side::North => self.north,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let periodic = |k: BoundaryKind| k == BoundaryKind::Periodic;
        if periodic(self.west) != periodic(self.east) {
            return Err(Error::InvalidBoundary(
                "periodic boundary on west/east must be paired".into(),
            ));
        }
        if periodic(self.south) != periodic(self.north) {
            return Err(Error::InvalidBoundary(
                "periodic boundary on south/north must be paired".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub normal: [f64; 2],
    pub length: f64,
}

impl Face {
    fn from_scaled(nx: f64, ny: f64) -> Self {
        let length = nx.hypot(ny);
        Face {
            normal: [nx / length, ny / length],
            length,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StructuredGrid {
    pub ni: usize,
    pub nj: usize,
    /// `(ni+1) × (nj+1)` vertices, index `i + j * (ni+1)`.
    pub vertices: Vec<[f64; 2]>,
    /// `(ni+1) × nj` faces, index `i + j * (ni+1)`.
    pub i_faces: Vec<Face>,
    /// `ni × (nj+1)` faces, index `i + j * ni`.
    pub j_faces: Vec<Face>,
    pub cell_areas: Vec<f64>,
    pub cell_centers: Vec<[f64; 2]>,
    pub bc: Boundaries,
}

impl StructuredGrid {
    /// Assemble metrics from vertex coordinates.
    pub fn from_vertices(ni: usize, nj: usize, vertices: Vec<[f64; 2]>, bc: Boundaries) -> Result<Self> {
        if ni == 0 || nj == 0 {
            return Err(Error::InvalidDimensions(format!("{ni} x {nj} cells")));
        }
        if vertices.len() != (ni + 1) * (nj + 1) {
            return Err(Error::InvalidDimensions(format!(
                "expected {} vertices, got {}",
                (ni + 1) * (nj + 1),
                vertices.len()
            )));
        }
        bc.validate()?;
        let vx = |i: usize, j: usize| vertices[i + j * (ni + 1)];

        let mut i_faces = Vec::with_capacity((ni + 1) * nj);
        for j in 0..nj {
            for i in 0..=ni {
                let (a, b) = (vx(i, j), vx(i, j + 1));
                i_faces.push(Face::from_scaled(b[1] - a[1], -(b[0] - a[0])));
            }
        }
        let mut j_faces = Vec::with_capacity(ni * (nj + 1));
        for j in 0..=nj {
            for i in 0..ni {
                let (a, b) = (vx(i, j), vx(i + 1, j));
                j_faces.push(Face::from_scaled(-(b[1] - a[1]), b[0] - a[0]));
            }
        }

        let mut cell_areas = Vec::with_capacity(ni * nj);
        let mut cell_centers = Vec::with_capacity(ni * nj);
        for j in 0..nj {
            for i in 0..ni {
                let (p00, p10, p11, p01) = (vx(i, j), vx(i + 1, j), vx(i + 1, j + 1), vx(i, j + 1));
                let d1 = [p11[0] - p00[0], p11[1] - p00[1]];
                let d2 = [p01[0] - p10[0], p01[1] - p10[1]];
                let area = 0.5 * (d1[0] * d2[1] - d1[1] * d2[0]);
                if !(area > 0.0) {
                    return Err(Error::InvalidDimensions(format!(
                        "cell ({i}, {j}) has non-positive area {area}"
                    )));
                }
                cell_areas.push(area);
                cell_centers.push([
                    0.25 * (p00[0] + p10[0] + p11[0] + p01[0]),
                    0.25 * (p00[1] + p10[1] + p11[1] + p01[1]),
                ]);
            }
        }

        Ok(Self {
            ni,
            nj,
            vertices,
            i_faces,
            j_faces,
            cell_areas,
            cell_centers,
            bc,
        })
    }

    pub fn with_boundaries(mut self, bc: Boundaries) -> Result<Self> {
        bc.validate()?;
        self.bc = bc;
        Ok(self)
    }

    pub fn n_cells(&self) -> usize {
        self.ni * self.nj
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        i + j * self.ni
    }

    #[inline]
    pub fn i_face(&self, i: usize, j: usize) -> &Face {
        &self.i_faces[i + j * (self.ni + 1)]
    }

    #[inline]
    pub fn j_face(&self, i: usize, j: usize) -> &Face {
        &self.j_faces[i + j * self.ni]
    }

    pub fn vertex(&self, i: usize, j: usize) -> [f64; 2] {
        self.vertices[i + j * (self.ni + 1)]
    }

    /// Area over the longest face length: the cell width used for CFL.
    pub fn min_width(&self, i: usize, j: usize) -> f64 {
        let longest = [
            self.i_face(i, j).length,
            self.i_face(i + 1, j).length,
            self.j_face(i, j).length,
            self.j_face(i, j + 1).length,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        self.cell_areas[self.cell(i, j)] / longest
    }

    /// `Σ length·normal` over the outward faces of cell `(i, j)`.
    pub fn closure_defect(&self, i: usize, j: usize) -> [f64; 2] {
        let ln = |f: &Face| [f.length * f.normal[0], f.length * f.normal[1]];
        let (e, w) = (ln(self.i_face(i + 1, j)), ln(self.i_face(i, j)));
        let (n, s) = (ln(self.j_face(i, j + 1)), ln(self.j_face(i, j)));
        [e[0] - w[0] + n[0] - s[0], e[1] - w[1] + n[1] - s[1]]
    }
}

pub fn build_cartesian(
    nx: usize,
    ny: usize,
    x_range: (f64, f64),
    y_range: (f64, f64),
) -> Result<StructuredGrid> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidDimensions(format!("{nx} x {ny} cells")));
    }
    if !(x_range.1 > x_range.0) || !(y_range.1 > y_range.0) {
        return Err(Error::InvalidDimensions(format!(
            "empty domain {x_range:?} x {y_range:?}"
        )));
    }
    let dx = (x_range.1 - x_range.0) / nx as f64;
    let dy = (y_range.1 - y_range.0) / ny as f64;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([x_range.0 + i as f64 * dx, y_range.0 + j as f64 * dy]);
        }
    }
    StructuredGrid::from_vertices(nx, ny, vertices, Boundaries::uniform(BoundaryKind::Extrapolation))
}

/// True when the angular range closes the circle.
pub fn is_full_circle(theta_range: (f64, f64)) -> bool {
    ((theta_range.1 - theta_range.0) - TAU).abs() < 1e-12
}

/// Annular grid with `i` radial and `j` angular. A full circle gets
/// periodic angular boundaries and shares the seam vertices exactly.
pub fn build_annulus(
    r_inner: f64,
    r_outer: f64,
    n_radial: usize,
    n_angular: usize,
    theta_range: (f64, f64),
) -> Result<StructuredGrid> {
    if n_radial == 0 || n_angular == 0 {
        return Err(Error::InvalidDimensions(format!(
            "{n_radial} x {n_angular} cells"
        )));
    }
    if !(r_inner > 0.0 && r_outer > r_inner) {
        return Err(Error::InvalidDimensions(format!(
            "radii must satisfy 0 < r_inner < r_outer, got {r_inner}, {r_outer}"
        )));
    }
    let span = theta_range.1 - theta_range.0;
    if !(span > 0.0) || span > TAU + 1e-12 {
        return Err(Error::InvalidDimensions(format!(
            "angular range {theta_range:?} must lie within one turn"
        )));
    }
    let full = is_full_circle(theta_range);
    if full && n_angular < 3 {
        return Err(Error::InvalidDimensions(
            "a full annulus needs at least 3 angular cells".into(),
        ));
    }
    let dr = (r_outer - r_inner) / n_radial as f64;
    let dtheta = span / n_angular as f64;
    let mut vertices = Vec::with_capacity((n_radial + 1) * (n_angular + 1));
    for j in 0..=n_angular {
        let jj = if full && j == n_angular { 0 } else { j };
        let theta = theta_range.0 + jj as f64 * dtheta;
        let (s, c) = theta.sin_cos();
        for i in 0..=n_radial {
            let r = if i == n_radial {
                r_outer
            } else {
                r_inner + i as f64 * dr
            };
            vertices.push([r * c, r * s]);
        }
    }
    let angular = if full {
        BoundaryKind::Periodic
    } else {
        BoundaryKind::Extrapolation
    };
    StructuredGrid::from_vertices(
        n_radial,
        n_angular,
        vertices,
        Boundaries {
            west: BoundaryKind::Extrapolation,
            east: BoundaryKind::Extrapolation,
            south: angular,
            north: angular,
        },
    )
}

/// Cell states padded with [`GHOSTS`] layers on every side.
#[derive(Debug, Clone)]
pub struct GhostField {
    pub ni: usize,
    pub nj: usize,
    pub data: Vec<PrimitiveState>,
}

impl GhostField {
    pub fn new(ni: usize, nj: usize) -> Self {
        let fill = PrimitiveState::new(1.0, 0.0, 0.0, 1.0);
        Self {
            ni,
            nj,
            data: vec![fill; (ni + 2 * GHOSTS) * (nj + 2 * GHOSTS)],
        }
    }

    pub fn stride(&self) -> usize {
        self.ni + 2 * GHOSTS
    }

    /// Storage index of cell `(i, j)`; `-2..ni+2` and `-2..nj+2` are valid.
    #[inline]
    pub fn idx(&self, i: isize, j: isize) -> usize {
        (i + GHOSTS as isize) as usize + (j + GHOSTS as isize) as usize * self.stride()
    }

    #[inline]
    pub fn at(&self, i: isize, j: isize) -> &PrimitiveState {
        &self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: isize, j: isize, q: PrimitiveState) {
        let k = self.idx(i, j);
        self.data[k] = q;
    }

    pub fn load_interior(&mut self, interior: &[PrimitiveState]) {
        debug_assert_eq!(interior.len(), self.ni * self.nj);
        for j in 0..self.nj {
            let dst = self.idx(0, j as isize);
            self.data[dst..dst + self.ni].copy_from_slice(&interior[j * self.ni..(j + 1) * self.ni]);
        }
    }

    pub fn interior(&self) -> Vec<PrimitiveState> {
        let mut out = Vec::with_capacity(self.ni * self.nj);
        for j in 0..self.nj {
            let src = self.idx(0, j as isize);
            out.extend_from_slice(&self.data[src..src + self.ni]);
        }
        out
    }
}

fn reflect(q: PrimitiveState, n: [f64; 2]) -> PrimitiveState {
    let un = q.u * n[0] + q.v * n[1];
    PrimitiveState {
        u: q.u - 2.0 * un * n[0],
        v: q.v - 2.0 * un * n[1],
        ..q
    }
}

fn linear(near: PrimitiveState, next: PrimitiveState, k: f64) -> PrimitiveState {
    let a = near.to_array();
    let b = next.to_array();
    let q = PrimitiveState::from_array([0, 1, 2, 3].map(|m| a[m] + k * (a[m] - b[m])));
    if q.is_valid() {
        q
    } else {
        near
    }
}

/// Write ghost cells of `field` from its interior according to the grid's
/// boundary conditions. Interior cells are left untouched.
// maps a ghost or inward offset and the cell count to an index
type IndexMap = fn(isize, isize) -> isize;

pub fn fill_ghosts(field: &mut GhostField, grid: &StructuredGrid) {
    let (ni, nj) = (grid.ni as isize, grid.nj as isize);
    debug_assert_eq!((field.ni, field.nj), (grid.ni, grid.nj));

    for j in 0..nj {
        for (side, kind) in [(Side::West, grid.bc.west), (Side::East, grid.bc.east)] {
            // `inward(k)` is the k-th interior cell counted from the boundary
            let (ghost, inward): (IndexMap, IndexMap) = match side {
                Side::West => (|g, _| -g, |k, _| k),
                _ => (|g, n| n - 1 + g, |k, n| n - 1 - k),
            };
            let face_i = if side == Side::West { 0 } else { grid.ni };
            for g in 1..=GHOSTS as isize {
                let src = inward((g - 1).min(ni - 1), ni);
                let q = match kind {
                    BoundaryKind::Periodic => {
                        let wrap = match side {
                            Side::West => (-g).rem_euclid(ni),
                            _ => (ni - 1 + g).rem_euclid(ni),
                        };
                        *field.at(wrap, j)
                    }
                    BoundaryKind::Extrapolation => *field.at(inward(0, ni), j),
                    BoundaryKind::ExtrapolationLinear => {
                        if ni < 2 {
                            *field.at(inward(0, ni), j)
                        } else {
                            linear(*field.at(inward(0, ni), j), *field.at(inward(1, ni), j), g as f64)
                        }
                    }
                    BoundaryKind::DirichletState(s) | BoundaryKind::Inflow(s) => s,
                    BoundaryKind::Wall => reflect(*field.at(src, j), grid.i_face(face_i, j as usize).normal),
                };
                field.set(ghost(g, ni), j, q);
            }
        }
    }

    // the i-ghost columns are filled, so sweeping them too sets the corners
    let width = GHOSTS as isize;
    for i in -width..ni + width {
        let face_col = i.clamp(0, ni - 1) as usize;
        for (side, kind) in [(Side::South, grid.bc.south), (Side::North, grid.bc.north)] {
            let (ghost, inward): (IndexMap, IndexMap) = match side {
                Side::South => (|g, _| -g, |k, _| k),
                _ => (|g, n| n - 1 + g, |k, n| n - 1 - k),
            };
            let face_j = if side == Side::South { 0 } else { grid.nj };
            for g in 1..=GHOSTS as isize {
                let src = inward((g - 1).min(nj - 1), nj);
                let q = match kind {
                    BoundaryKind::Periodic => {
                        let wrap = match side {
                            Side::South => (-g).rem_euclid(nj),
                            _ => (nj - 1 + g).rem_euclid(nj),
                        };
                        *field.at(i, wrap)
                    }
                    BoundaryKind::Extrapolation => *field.at(i, inward(0, nj)),
                    BoundaryKind::ExtrapolationLinear => {
                        if nj < 2 {
                            *field.at(i, inward(0, nj))
                        } else {
                            linear(*field.at(i, inward(0, nj)), *field.at(i, inward(1, nj)), g as f64)
                        }
                    }
                    BoundaryKind::DirichletState(s) | BoundaryKind::Inflow(s) => s,
                    BoundaryKind::Wall => reflect(*field.at(i, src), grid.j_face(face_col, face_j).normal),
                };
                field.set(i, ghost(g, nj), q);
            }
        }
    }
}
