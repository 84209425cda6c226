//! Ideal-gas state vectors for the 2D Euler equations.

use crate::error::StateError;

/// A 4-component vector in conserved ordering (mass, x-momentum, y-momentum, energy).
pub type Vec4 = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasModel {
    pub gamma: f64,
}

impl Default for GasModel {
    fn default() -> Self {
        Self { gamma: 1.4 }
    }
}

impl GasModel {
    pub fn new(gamma: f64) -> Option<Self> {
        (gamma > 1.0).then_some(Self { gamma })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveState {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedState {
    pub rho: f64,
    pub mx: f64,
    pub my: f64,
    pub e: f64,
}

/// Roe-averaged state at a face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoeState {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub h: f64,
    pub c: f64,
}

impl PrimitiveState {
    pub const fn new(rho: f64, u: f64, v: f64, p: f64) -> Self {
        Self { rho, u, v, p }
    }

    pub fn is_valid(&self) -> bool {
        self.rho > 0.0 && self.p > 0.0 && self.u.is_finite() && self.v.is_finite()
    }

    pub fn to_conserved(&self, gas: GasModel) -> ConservedState {
        primitive_to_conserved(*self, gas)
    }

    pub fn sound_speed(&self, gas: GasModel) -> f64 {
        sound_speed(*self, gas)
    }

    pub fn total_enthalpy(&self, gas: GasModel) -> f64 {
        total_enthalpy(*self, gas)
    }

    pub fn speed(&self) -> f64 {
        self.u.hypot(self.v)
    }

    pub fn to_array(self) -> Vec4 {
        [self.rho, self.u, self.v, self.p]
    }

    pub fn from_array(a: Vec4) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    /// Velocities expressed in the frame (normal, tangent) of the unit normal `n`.
    pub fn rotate_to(&self, n: [f64; 2]) -> Self {
        Self {
            rho: self.rho,
            u: self.u * n[0] + self.v * n[1],
            v: -self.u * n[1] + self.v * n[0],
            p: self.p,
        }
    }
}

impl ConservedState {
    pub const fn new(rho: f64, mx: f64, my: f64, e: f64) -> Self {
        Self { rho, mx, my, e }
    }

    pub fn to_array(self) -> Vec4 {
        [self.rho, self.mx, self.my, self.e]
    }

    pub fn from_array(a: Vec4) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_primitive(&self, gas: GasModel) -> Result<PrimitiveState, StateError> {
        conserved_to_primitive(*self, gas)
    }
}

pub fn primitive_to_conserved(prim: PrimitiveState, gas: GasModel) -> ConservedState {
    debug_assert!(prim.rho > 0.0 && prim.p > 0.0, "invalid primitive state {prim:?}");
    let kinetic = 0.5 * prim.rho * (prim.u * prim.u + prim.v * prim.v);
    ConservedState {
        rho: prim.rho,
        mx: prim.rho * prim.u,
        my: prim.rho * prim.v,
        e: prim.p / (gas.gamma - 1.0) + kinetic,
    }
}

/// Inverse of [`primitive_to_conserved`]. This is where a breaking-down
/// solution surfaces, so NaN input is rejected as well.
pub fn conserved_to_primitive(cons: ConservedState, gas: GasModel) -> Result<PrimitiveState, StateError> {
    // `!(x > 0)` also catches NaN
    if !(cons.rho > 0.0) || !cons.rho.is_finite() {
        return Err(StateError::NegativeDensity(cons.rho));
    }
    let u = cons.mx / cons.rho;
    let v = cons.my / cons.rho;
    let p = (gas.gamma - 1.0) * (cons.e - 0.5 * (cons.mx * u + cons.my * v));
    if !(p > 0.0) || !p.is_finite() {
        return Err(StateError::NegativePressure(p));
    }
    Ok(PrimitiveState {
        rho: cons.rho,
        u,
        v,
        p,
    })
}

pub fn sound_speed(prim: PrimitiveState, gas: GasModel) -> f64 {
    (gas.gamma * prim.p / prim.rho).sqrt()
}

pub fn total_enthalpy(prim: PrimitiveState, gas: GasModel) -> f64 {
    let e = primitive_to_conserved(prim, gas).e;
    (e + prim.p) / prim.rho
}

/// Physical flux in x-direction in conserved ordering.
pub fn physical_flux_x(prim: PrimitiveState, gas: GasModel) -> Vec4 {
    let PrimitiveState { rho, u, v, p } = prim;
    let e = p / (gas.gamma - 1.0) + 0.5 * rho * (u * u + v * v);
    let mass = rho * u;
    [mass, mass * u + p, mass * v, (e + p) * u]
}

/// Physical flux through a face with unit normal `n`, i.e. `f·n_x + g·n_y`.
pub fn physical_flux_normal(prim: PrimitiveState, n: [f64; 2], gas: GasModel) -> Vec4 {
    let PrimitiveState { rho, u, v, p } = prim;
    let e = p / (gas.gamma - 1.0) + 0.5 * rho * (u * u + v * v);
    let un = u * n[0] + v * n[1];
    let mass = rho * un;
    [mass, mass * u + p * n[0], mass * v + p * n[1], (e + p) * un]
}

/// Square-root-density weighted averages of Roe's linearization.
pub fn roe_average(left: PrimitiveState, right: PrimitiveState, gas: GasModel) -> RoeState {
    let sl = left.rho.sqrt();
    let sr = right.rho.sqrt();
    let inv = 1.0 / (sl + sr);
    let u = (sl * left.u + sr * right.u) * inv;
    let v = (sl * left.v + sr * right.v) * inv;
    let h = (sl * total_enthalpy(left, gas) + sr * total_enthalpy(right, gas)) * inv;
    let c2 = (gas.gamma - 1.0) * (h - 0.5 * (u * u + v * v));
    RoeState {
        rho: sl * sr,
        u,
        v,
        h,
        c: c2.sqrt(),
    }
}
