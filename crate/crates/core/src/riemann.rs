//! Roe-type numerical fluxes with exchangeable numerical viscosities.
//!
//! All strategies share one Roe linearization. They differ only in the
//! signal speeds whose magnitudes weight the wave-wise dissipation
//! `½ Σ |λ̃_k| α_k r_k`:
//!
//! | strategy             | acoustic `λ̃_{1,4}`                     | linear `λ̃_{2,3}`                   |
//! |----------------------|----------------------------------------|------------------------------------|
//! | `RoeStandard`        | `ũ ∓ c̃`                                | `ũ`                                |
//! | `RoeHarten`          | Harten-smoothed `ũ ∓ c̃`                | `ũ`                                |
//! | `RoeHlleSpeeds`      | Einfeldt bounds                        | `ũ`                                |
//! | `Fleischmann`        | `ũ ∓ min(φ|ũ|, c̃)`                     | `ũ`                                |
//! | `FleischmannLinear`  | `ũ ∓ c̃`                                | `sgn(ũ) max(c̃/φ, |ũ|)`             |
//! | `GeomBlend`          | weighted geometric mean of the two     | weighted geometric mean            |
//! | `ArithBlend`         | weighted arithmetic mean of the two    | weighted arithmetic mean           |
//!
//! The blends use a weight `β ∈ [0,1]`: `β = 0` gives `Fleischmann`,
//! `β = 1` gives `FleischmannLinear`.

use crate::error::{Error, Result};
use crate::state::{physical_flux_x, roe_average, GasModel, PrimitiveState, RoeState, Vec4};

pub type Mat4 = [[f64; 4]; 4];

/// Where a blended solver takes its weight from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaSource {
    Constant(f64),
    /// `β = min(1, |p_r − p_l| / (κ min(p_l, p_r)))`
    PressureSensor {
        kappa: f64,
    },
}

impl Default for BetaSource {
    fn default() -> Self {
        BetaSource::PressureSensor { kappa: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaveSpeedStrategy {
    RoeStandard,
    RoeHarten { delta_rel: f64 },
    RoeHlleSpeeds,
    Fleischmann { phi: f64 },
    FleischmannLinear { phi: f64 },
    GeomBlend { phi: f64, beta: BetaSource },
    ArithBlend { phi: f64, beta: BetaSource },
}

pub const DEFAULT_PHI: f64 = 5.0;
pub const DEFAULT_DELTA_REL: f64 = 0.1;

/// Solver names accepted by the configuration layer.
pub const STRATEGY_NAMES: [&str; 7] = [
    "roe",
    "roe-harten",
    "roe-hlle",
    "fleischmann",
    "fleischmann-linear",
    "blend-geom",
    "blend-arith",
];

impl WaveSpeedStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            Self::RoeStandard => "roe",
            Self::RoeHarten { .. } => "roe-harten",
            Self::RoeHlleSpeeds => "roe-hlle",
            Self::Fleischmann { .. } => "fleischmann",
            Self::FleischmannLinear { .. } => "fleischmann-linear",
            Self::GeomBlend { .. } => "blend-geom",
            Self::ArithBlend { .. } => "blend-arith",
        }
    }

    /// Build a strategy from its configuration name. Parameters irrelevant
    /// to the chosen strategy are ignored.
    pub fn from_name(name: &str, phi: f64, delta_rel: f64, beta: BetaSource) -> Result<Self> {
        let s = match name {
            "roe" => Self::RoeStandard,
            "roe-harten" => Self::RoeHarten { delta_rel },
            "roe-hlle" => Self::RoeHlleSpeeds,
            "fleischmann" => Self::Fleischmann { phi },
            "fleischmann-linear" => Self::FleischmannLinear { phi },
            "blend-geom" => Self::GeomBlend { phi, beta },
            "blend-arith" => Self::ArithBlend { phi, beta },
            other => {
                return Err(Error::Config(format!(
                    "unknown solver '{other}' (expected one of {})",
                    STRATEGY_NAMES.join(", ")
                )))
            }
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match *self {
            Self::RoeHarten { delta_rel } if !(delta_rel > 0.0) => {
                bad(format!("delta_rel must be positive, got {delta_rel}"))
            }
            Self::Fleischmann { phi } | Self::FleischmannLinear { phi } if !(phi > 0.0) => {
                bad(format!("phi must be positive, got {phi}"))
            }
            Self::GeomBlend { phi, beta } | Self::ArithBlend { phi, beta } => {
                if !(phi > 0.0) {
                    return bad(format!("phi must be positive, got {phi}"));
                }
                match beta {
                    BetaSource::Constant(b) if !(0.0..=1.0).contains(&b) => {
                        bad(format!("constant beta must lie in [0,1], got {b}"))
                    }
                    BetaSource::PressureSensor { kappa } if !(kappa > 0.0) => {
                        bad(format!("kappa must be positive, got {kappa}"))
                    }
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }
}

/// Eigenvalues and eigenvectors of the Roe matrix in the face-normal frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveBasis {
    pub lambdas: [f64; 4],
    /// Columns are the right eigenvectors.
    pub right: Mat4,
    /// Rows are the left eigenvectors.
    pub left: Mat4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveDecomposition {
    pub lambdas: [f64; 4],
    pub right_vectors: Mat4,
    pub wave_strengths: [f64; 4],
}

/// Ordering `λ = (u−c, u, u, u+c)`: acoustic, entropy, shear, acoustic.
pub fn eigensystem(roe: &RoeState, gas: GasModel) -> WaveBasis {
    let RoeState { u, v, h, c, .. } = *roe;
    let b = gas.gamma - 1.0;
    let q2 = u * u + v * v;
    let c2 = c * c;
    let right = [
        [1.0, 1.0, 0.0, 1.0],
        [u - c, u, 0.0, u + c],
        [v, v, 1.0, v],
        [h - u * c, 0.5 * q2, v, h + u * c],
    ];
    let inv2c2 = 0.5 / c2;
    let left = [
        [
            (0.5 * b * q2 + u * c) * inv2c2,
            -(b * u + c) * inv2c2,
            -b * v * inv2c2,
            b * inv2c2,
        ],
        [1.0 - 0.5 * b * q2 / c2, b * u / c2, b * v / c2, -b / c2],
        [-v, 0.0, 1.0, 0.0],
        [
            (0.5 * b * q2 - u * c) * inv2c2,
            -(b * u - c) * inv2c2,
            -b * v * inv2c2,
            b * inv2c2,
        ],
    ];
    WaveBasis {
        lambdas: [u - c, u, u, u + c],
        right,
        left,
    }
}

/// Wave decomposition of the conserved jump between two states, both
/// already expressed in the face-normal frame.
pub fn decompose(left: PrimitiveState, right: PrimitiveState, gas: GasModel) -> WaveDecomposition {
    let roe = roe_average(left, right, gas);
    let basis = eigensystem(&roe, gas);
    let dq = conserved_jump(left, right, gas);
    let mut alpha = [0.0; 4];
    for (k, a) in alpha.iter_mut().enumerate() {
        *a = (0..4).map(|m| basis.left[k][m] * dq[m]).sum();
    }
    WaveDecomposition {
        lambdas: basis.lambdas,
        right_vectors: basis.right,
        wave_strengths: alpha,
    }
}

fn conserved_jump(left: PrimitiveState, right: PrimitiveState, gas: GasModel) -> Vec4 {
    let ql = left.to_conserved(gas).to_array();
    let qr = right.to_conserved(gas).to_array();
    [qr[0] - ql[0], qr[1] - ql[1], qr[2] - ql[2], qr[3] - ql[3]]
}

/// Harten's entropy fix: `|λ|` away from zero, a parabola of height `δ/2`
/// at `λ = 0`, joined C¹ at `|λ| = δ`.
pub fn harten(lambda: f64, delta: f64) -> f64 {
    let a = lambda.abs();
    if a >= delta {
        a
    } else {
        (lambda * lambda + delta * delta) / (2.0 * delta)
    }
}

pub fn shock_beta(left: &PrimitiveState, right: &PrimitiveState, source: BetaSource) -> f64 {
    match source {
        BetaSource::Constant(b) => b,
        BetaSource::PressureSensor { kappa } => {
            let jump = (right.p - left.p).abs();
            (jump / (kappa * left.p.min(right.p))).min(1.0)
        }
    }
}

// sign with sgn(0) = 1, so that the linear-wave lower bound survives at ũ = 0
fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Modified signal speeds `λ̃_k`; the dissipation uses `|λ̃_k|`.
///
/// `left` and `right` must be in the same face-normal frame as `roe`.
pub fn effective_speeds(
    roe: &RoeState,
    strategy: &WaveSpeedStrategy,
    left: &PrimitiveState,
    right: &PrimitiveState,
    gas: GasModel,
) -> [f64; 4] {
    let (u, c) = (roe.u, roe.c);
    match *strategy {
        WaveSpeedStrategy::RoeStandard => [u - c, u, u, u + c],
        WaveSpeedStrategy::RoeHarten { delta_rel } => {
            let delta = delta_rel * c;
            let fix = |l: f64| harten(l, delta).copysign(l);
            [fix(u - c), u, u, fix(u + c)]
        }
        WaveSpeedStrategy::RoeHlleSpeeds => {
            let cl = left.sound_speed(gas);
            let cr = right.sound_speed(gas);
            [(u - c).min(left.u - cl), u, u, (u + c).max(right.u + cr)]
        }
        WaveSpeedStrategy::Fleischmann { phi } => {
            let a = (phi * u.abs()).min(c);
            [u - a, u, u, u + a]
        }
        WaveSpeedStrategy::FleischmannLinear { phi } => {
            let l = sgn(u) * (c / phi).max(u.abs());
            [u - c, l, l, u + c]
        }
        WaveSpeedStrategy::GeomBlend { phi, beta } => {
            let beta = shock_beta(left, right, beta);
            let a = c.powf(beta) * (phi * u.abs()).min(c).powf(1.0 - beta);
            let l = sgn(u) * (c / phi).max(u.abs()).powf(beta) * u.abs().powf(1.0 - beta);
            [u - a, l, l, u + a]
        }
        WaveSpeedStrategy::ArithBlend { phi, beta } => {
            let beta = shock_beta(left, right, beta);
            let a = beta * c + (1.0 - beta) * (phi * u.abs()).min(c);
            let l = beta * sgn(u) * (c / phi).max(u.abs()) + (1.0 - beta) * u;
            [u - a, l, l, u + a]
        }
    }
}

/// Roe-type flux through a face with unit normal `normal`, in global
/// conserved components.
pub fn numerical_flux(
    left: &PrimitiveState,
    right: &PrimitiveState,
    normal: [f64; 2],
    strategy: &WaveSpeedStrategy,
    gas: GasModel,
) -> Vec4 {
    let l = left.rotate_to(normal);
    let r = right.rotate_to(normal);
    let g = flux_normal_frame(&l, &r, strategy, gas);
    let [nx, ny] = normal;
    [g[0], g[1] * nx - g[2] * ny, g[1] * ny + g[2] * nx, g[3]]
}

/// One-dimensional Roe-type flux; states are in the face-normal frame and
/// the result is in that frame too.
pub fn flux_normal_frame(
    l: &PrimitiveState,
    r: &PrimitiveState,
    strategy: &WaveSpeedStrategy,
    gas: GasModel,
) -> Vec4 {
    let fl = physical_flux_x(*l, gas);
    let fr = physical_flux_x(*r, gas);
    let roe = roe_average(*l, *r, gas);
    let speeds = effective_speeds(&roe, strategy, l, r, gas);

    let RoeState { u, v, h, c, .. } = roe;
    let b = gas.gamma - 1.0;
    let q2 = u * u + v * v;
    let c2 = c * c;
    let d = conserved_jump(*l, *r, gas);

    // α = L·Δq, rows as in `eigensystem`
    let common = 0.5 * b * q2 * d[0] - b * u * d[1] - b * v * d[2] + b * d[3];
    let a1 = (common + c * (u * d[0] - d[1])) / (2.0 * c2);
    let a4 = (common - c * (u * d[0] - d[1])) / (2.0 * c2);
    let a2 = d[0] - common / c2;
    let a3 = d[2] - v * d[0];

    let w1 = speeds[0].abs() * a1;
    let w2 = speeds[1].abs() * a2;
    let w3 = speeds[2].abs() * a3;
    let w4 = speeds[3].abs() * a4;

    let diss = [
        w1 + w2 + w4,
        w1 * (u - c) + w2 * u + w4 * (u + c),
        (w1 + w2 + w4) * v + w3,
        w1 * (h - u * c) + w2 * 0.5 * q2 + w3 * v + w4 * (h + u * c),
    ];
    [
        0.5 * (fl[0] + fr[0]) - 0.5 * diss[0],
        0.5 * (fl[1] + fr[1]) - 0.5 * diss[1],
        0.5 * (fl[2] + fr[2]) - 0.5 * diss[2],
        0.5 * (fl[3] + fr[3]) - 0.5 * diss[3],
    ]
}
