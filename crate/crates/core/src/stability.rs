//! Linear stability analysis of the time integrators: stability functions,
//! region boundaries, multistep boundary loci, semidiscrete advection
//! spectra and the largest stable step for a given spectrum.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrators::{ab_coefficients, ButcherTableau};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    RkBoundary,
    AbRootLocus,
    Spectrum,
}

impl CurveKind {
    pub fn name(&self) -> &'static str {
        match self {
            CurveKind::RkBoundary => "rk_boundary",
            CurveKind::AbRootLocus => "ab_root_locus",
            CurveKind::Spectrum => "spectrum",
        }
    }
}

/// Sampled curve in the complex plane, possibly made of several closed
/// branches.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCurve {
    pub kind: CurveKind,
    pub label: String,
    pub branches: Vec<Vec<Complex64>>,
}

impl StabilityCurve {
    pub fn points(&self) -> impl Iterator<Item = &Complex64> {
        self.branches.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.branches.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One `kind,method,re,im` row per point.
    pub fn write_rows(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        for p in self.points() {
            writeln!(
                out,
                "{},{},{:.17e},{:.17e}",
                self.kind.name(),
                self.label,
                p.re,
                p.im
            )?;
        }
        Ok(())
    }
}

/// `R(z) = 1 + z b (I - zA)^{-1} 1` by forward substitution.
pub fn rk_stability_function(tab: &ButcherTableau, z: Complex64) -> Complex64 {
    let s = tab.stages();
    let mut k: Vec<Complex64> = Vec::with_capacity(s);
    for i in 0..s {
        let sum: Complex64 = (0..i).map(|j| tab.a[i][j] * k[j]).sum();
        k.push(Complex64::new(1.0, 0.0) + z * sum);
    }
    Complex64::new(1.0, 0.0) + z * tab.b.iter().zip(&k).map(|(b, k)| b * k).sum::<Complex64>()
}

/// Ascending coefficients of the stability polynomial, `1 + Σ z^k b A^{k-1} 1`.
pub fn rk_stability_polynomial(tab: &ButcherTableau) -> Vec<f64> {
    let s = tab.stages();
    let mut coeffs = vec![1.0];
    let mut v = vec![1.0; s];
    for _ in 0..s {
        coeffs.push(tab.b.iter().zip(&v).map(|(b, x)| b * x).sum());
        v = (0..s).map(|i| (0..s).map(|j| tab.a[i][j] * v[j]).sum()).collect();
    }
    while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    coeffs
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

fn real_horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// Roots of a polynomial with ascending complex coefficients, from the
/// eigenvalues of its companion matrix, refined by Newton steps.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let mut m = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -c[i] / lead;
    }
    let eig = m
        .clone()
        .schur()
        .eigenvalues()
        .expect("complex Schur form is triangular");
    let deriv: Vec<Complex64> = (1..=deg).map(|k| c[k] * k as f64).collect();
    eig.iter()
        .map(|&z0| {
            let mut z = z0;
            for _ in 0..3 {
                let d = horner(&deriv, z);
                if d.norm() == 0.0 {
                    break;
                }
                let step = horner(&c, z) / d;
                if !step.is_finite() {
                    break;
                }
                z -= step;
            }
            if z.is_finite() {
                z
            } else {
                z0
            }
        })
        .collect()
}

/// Order `next` so that `next[b]` continues `prev[b]`, greedily by distance.
fn match_roots(prev: &[Complex64], mut next: Vec<Complex64>) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); prev.len()];
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (a, p) in prev.iter().enumerate() {
        for (b, q) in next.iter().enumerate() {
            pairs.push(((p - q).norm(), a, b));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut used_a = vec![false; prev.len()];
    let mut used_b = vec![false; next.len()];
    for (_, a, b) in pairs {
        if !used_a[a] && !used_b[b] {
            used_a[a] = true;
            used_b[b] = true;
            out[a] = next[b];
        }
    }
    next.clear();
    out
}

/// The set `|R(z)| = 1`: every root of `R(z) = e^{iθ}` over `n_samples`
/// values of θ, continued in θ and joined into closed curves.
pub fn rk_region_boundary(tab: &ButcherTableau, n_samples: usize) -> StabilityCurve {
    let n = n_samples.max(16);
    let poly: Vec<Complex64> = rk_stability_polynomial(tab).iter().map(|&x| x.into()).collect();
    let roots_at = |theta: f64| {
        let mut c = poly.clone();
        c[0] -= Complex64::from_polar(1.0, theta);
        polynomial_roots(&c)
    };
    let mut tracks: Vec<Vec<Complex64>> = Vec::new();
    let mut prev = roots_at(0.0);
    for r in &prev {
        tracks.push(vec![*r]);
    }
    for m in 1..=n {
        let next = match_roots(&prev, roots_at(TAU * m as f64 / n as f64));
        for (t, r) in tracks.iter_mut().zip(&next) {
            t.push(*r);
        }
        prev = next;
    }
    // after a full turn the tracks end on a permutation of their starts
    let starts: Vec<Complex64> = tracks.iter().map(|t| t[0]).collect();
    let successor: Vec<usize> = tracks
        .iter()
        .map(|t| {
            let end = *t.last().unwrap();
            (0..starts.len())
                .min_by(|&a, &b| (starts[a] - end).norm().total_cmp(&(starts[b] - end).norm()))
                .unwrap()
        })
        .collect();
    let mut visited = vec![false; tracks.len()];
    let mut branches = Vec::new();
    for first in 0..tracks.len() {
        if visited[first] {
            continue;
        }
        let mut curve = Vec::new();
        let mut b = first;
        while !visited[b] {
            visited[b] = true;
            curve.extend_from_slice(&tracks[b][..n]);
            b = successor[b];
        }
        branches.push(curve);
    }
    StabilityCurve {
        kind: CurveKind::RkBoundary,
        label: tab.name.to_string(),
        branches,
    }
}

/// Characteristic polynomials `ρ`, `σ` of a linear multistep method, with
/// ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MultistepPolys {
    pub label: String,
    pub rho_coeffs: Vec<f64>,
    pub sigma_coeffs: Vec<f64>,
}

impl MultistepPolys {
    pub fn steps(&self) -> usize {
        self.rho_coeffs.len() - 1
    }

    pub fn rho(&self, zeta: Complex64) -> Complex64 {
        real_horner(&self.rho_coeffs, zeta)
    }

    pub fn sigma(&self, zeta: Complex64) -> Complex64 {
        real_horner(&self.sigma_coeffs, zeta)
    }

    /// Roots of `ρ(ζ) - z σ(ζ)`.
    pub fn characteristic_roots(&self, z: Complex64) -> Vec<Complex64> {
        let n = self.rho_coeffs.len().max(self.sigma_coeffs.len());
        let coeffs: Vec<Complex64> = (0..n)
            .map(|k| {
                let r = self.rho_coeffs.get(k).copied().unwrap_or(0.0);
                let s = self.sigma_coeffs.get(k).copied().unwrap_or(0.0);
                Complex64::new(r, 0.0) - z * s
            })
            .collect();
        polynomial_roots(&coeffs)
    }
}

/// Adams-Bashforth with `steps` old values: `ρ = ζ^k - ζ^{k-1}` and `σ`
/// from the fixed-step coefficients.
pub fn ab_polys(steps: usize) -> Result<MultistepPolys> {
    if !(1..=5).contains(&steps) {
        return Err(Error::Config(format!(
            "Adams-Bashforth steps must be in 1..=5, got {steps}"
        )));
    }
    let times: Vec<f64> = (0..steps).map(|j| -(j as f64)).collect();
    let beta = ab_coefficients(&times, 1.0)?;
    let mut rho = vec![0.0; steps + 1];
    rho[steps] = 1.0;
    rho[steps - 1] = -1.0;
    let mut sigma = vec![0.0; steps];
    for (j, b) in beta.iter().enumerate() {
        sigma[steps - 1 - j] = *b;
    }
    Ok(MultistepPolys {
        label: format!("ab{steps}"),
        rho_coeffs: rho,
        sigma_coeffs: sigma,
    })
}

/// Boundary locus `z(θ) = ρ(e^{iθ}) / σ(e^{iθ})`.
pub fn ab_root_locus(polys: &MultistepPolys, n_samples: usize) -> StabilityCurve {
    let points = (0..n_samples)
        .map(|m| {
            let zeta = Complex64::from_polar(1.0, TAU * m as f64 / n_samples as f64);
            polys.rho(zeta) / polys.sigma(zeta)
        })
        .collect();
    StabilityCurve {
        kind: CurveKind::AbRootLocus,
        label: polys.label.clone(),
        branches: vec![points],
    }
}

/// Eigenvalues of periodic unit-speed advection on `n` unit cells with the
/// blend `ε·upwind + (1-ε)·central`.
pub fn advection_spectrum(n: usize, epsilon: f64) -> StabilityCurve {
    let points = (0..n)
        .map(|j| {
            let w = TAU * j as f64 / n as f64;
            Complex64::new(-epsilon * (1.0 - w.cos()), -w.sin())
        })
        .collect();
    StabilityCurve {
        kind: CurveKind::Spectrum,
        label: format!("eps={epsilon}"),
        branches: vec![points],
    }
}

/// Convex hull in counter-clockwise order (monotone chain); collinear
/// points are dropped.
pub fn convex_hull(points: &[Complex64]) -> Vec<Complex64> {
    let mut p: Vec<Complex64> = points.to_vec();
    p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: Complex64, a: Complex64, b: Complex64| (a - o).re * (b - o).im - (a - o).im * (b - o).re;
    let mut hull: Vec<Complex64> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Complex64>> = if pass == 0 {
            Box::new(p.iter())
        } else {
            Box::new(p.iter().rev())
        };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

/// Method whose linear stability is tested.
#[derive(Debug, Clone, Copy)]
pub enum StabilityMethod<'a> {
    RungeKutta(&'a ButcherTableau),
    Multistep(&'a MultistepPolys),
}

impl StabilityMethod<'_> {
    pub fn label(&self) -> &str {
        match self {
            StabilityMethod::RungeKutta(t) => t.name,
            StabilityMethod::Multistep(p) => &p.label,
        }
    }

    /// Linear stability at `z = dt·λ`.
    pub fn is_stable_at(&self, z: Complex64) -> bool {
        match self {
            StabilityMethod::RungeKutta(t) => rk_stability_function(t, z).norm() <= 1.0 + 1e-12,
            StabilityMethod::Multistep(p) => {
                p.characteristic_roots(z).iter().all(|r| r.norm() <= 1.0 + 1e-10)
            }
        }
    }
}

/// Test points: hull vertices plus edge midpoints.
fn hull_probes(spectrum: &StabilityCurve) -> Vec<Complex64> {
    let pts: Vec<Complex64> = spectrum.points().copied().collect();
    let hull = convex_hull(&pts);
    let mut probes = hull.clone();
    for k in 0..hull.len() {
        probes.push(0.5 * (hull[k] + hull[(k + 1) % hull.len()]));
    }
    probes
}

fn stable_with_probes(method: &StabilityMethod, probes: &[Complex64], dt: f64) -> bool {
    probes.iter().all(|&p| method.is_stable_at(dt * p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullVerdict {
    pub stable: bool,
    /// Largest step for which the hull stays inside the region.
    pub max_cfl: f64,
}

/// Stability of `dt` times the convex hull of `spectrum`, together with
/// the largest stable step.
pub fn stable_on_hull(method: StabilityMethod, spectrum: &StabilityCurve, dt: f64) -> HullVerdict {
    let probes = hull_probes(spectrum);
    HullVerdict {
        stable: stable_with_probes(&method, &probes, dt),
        max_cfl: max_stable_step(&method, &probes),
    }
}

/// Largest stable step: geometric scan from 1e-4, then bisection. Steps
/// below 1e-4 are not resolved by the modulus tolerances.
pub fn max_cfl(method: StabilityMethod, spectrum: &StabilityCurve) -> f64 {
    max_stable_step(&method, &hull_probes(spectrum))
}

fn max_stable_step(method: &StabilityMethod, probes: &[Complex64]) -> f64 {
    let mut lo = 1e-4;
    if !stable_with_probes(method, probes, lo) {
        return 0.0;
    }
    let mut hi = lo * 1.05;
    while stable_with_probes(method, probes, hi) {
        lo = hi;
        hi *= 1.05;
        if hi > 1e3 {
            return f64::INFINITY;
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if stable_with_probes(method, probes, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    lo
}
