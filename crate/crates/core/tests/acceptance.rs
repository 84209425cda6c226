//! Acceptance criteria A1-A10. Each test writes one `A<n> PASS|FAIL|SKIP`
//! line to stderr. A7-A9 run full flow simulations and only execute when
//! `LOWMACH_ACCEPTANCE_FULL=1` is set; build with `--release` for those.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::process::Command;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lowmach::cases::CaseRegistry;
use lowmach::config::CaseConfig;
use lowmach::grid::{build_annulus, build_cartesian, Boundaries, BoundaryKind};
use lowmach::integrators::{
    ab_coefficients, euler_tableau, heun2_tableau, heun3_tableau, integrate, rk4_tableau, OdeMethod,
    INTEGRATOR_NAMES,
};
use lowmach::riemann::{decompose, numerical_flux, BetaSource, WaveSpeedStrategy};
use lowmach::run::{asymmetry_metric, Simulation};
use lowmach::scheme::{compute_residual, Limiter, SchemeConfig};
use lowmach::stability::{
    ab_polys, advection_spectrum, rk_region_boundary, rk_stability_function, stable_on_hull, StabilityMethod,
};
use lowmach::state::{GasModel, PrimitiveState, Vec4};

const GAMMA: f64 = 1.4;

// Written through the raw handle so the line shows even when the harness
// captures test output.
fn report(id: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "{id} {verdict}: {detail}");
    assert!(pass, "{id} failed: {detail}");
}

fn full_run_enabled(id: &str) -> bool {
    let on = std::env::var("LOWMACH_ACCEPTANCE_FULL").is_ok_and(|v| v == "1");
    if !on {
        let _ = writeln!(
            std::io::stderr(),
            "{id} SKIP: long simulation, set LOWMACH_ACCEPTANCE_FULL=1 and use --release"
        );
    }
    on
}

fn gas() -> GasModel {
    GasModel::new(GAMMA).unwrap()
}

fn all_strategies() -> Vec<WaveSpeedStrategy> {
    let sensor = BetaSource::PressureSensor { kappa: 0.5 };
    vec![
        WaveSpeedStrategy::RoeStandard,
        WaveSpeedStrategy::RoeHarten { delta_rel: 0.1 },
        WaveSpeedStrategy::RoeHlleSpeeds,
        WaveSpeedStrategy::Fleischmann { phi: 5.0 },
        WaveSpeedStrategy::FleischmannLinear { phi: 5.0 },
        WaveSpeedStrategy::GeomBlend {
            phi: 5.0,
            beta: sensor,
        },
        WaveSpeedStrategy::ArithBlend {
            phi: 5.0,
            beta: BetaSource::Constant(0.3),
        },
    ]
}

fn random_state(rng: &mut ChaCha8Rng) -> PrimitiveState {
    PrimitiveState::new(
        rng.random_range(0.1..10.0),
        rng.random_range(-3.0..3.0),
        rng.random_range(-3.0..3.0),
        rng.random_range(0.1..10.0),
    )
}

// Euler flux through a face with unit normal n, written out from the
// conservation law.
fn oracle_flux(q: &PrimitiveState, n: [f64; 2]) -> Vec4 {
    let un = q.u * n[0] + q.v * n[1];
    let e = q.p / (GAMMA - 1.0) + 0.5 * q.rho * (q.u * q.u + q.v * q.v);
    [
        q.rho * un,
        q.rho * q.u * un + q.p * n[0],
        q.rho * q.v * un + q.p * n[1],
        (e + q.p) * un,
    ]
}

fn oracle_conserved(q: &PrimitiveState) -> Vec4 {
    [
        q.rho,
        q.rho * q.u,
        q.rho * q.v,
        q.p / (GAMMA - 1.0) + 0.5 * q.rho * (q.u * q.u + q.v * q.v),
    ]
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff(a: &Vec4, b: &Vec4) -> Vec4 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

#[test]
fn a1_flux_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let normals: Vec<[f64; 2]> = (0..8)
        .map(|k| {
            let a = 0.3 + k as f64 * PI / 4.0;
            [a.cos(), a.sin()]
        })
        .collect();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let q = random_state(&mut rng);
        for &n in &normals {
            let exact = oracle_flux(&q, n);
            for s in all_strategies() {
                let g = numerical_flux(&q, &q, n, &s, gas());
                worst = worst.max(norm(&diff(&g, &exact)) / norm(&exact));
            }
        }
    }
    report(
        "A1",
        worst <= 1e-12,
        &format!("max relative defect {worst:.2e} (tol 1e-12), 100 states x 8 normals x 7 strategies"),
    );
}

// x-direction flux Jacobian of the 2D Euler equations at a Roe-averaged
// state, built from the textbook expressions.
fn oracle_roe_matrix(l: &PrimitiveState, r: &PrimitiveState) -> [[f64; 4]; 4] {
    let (sl, sr) = (l.rho.sqrt(), r.rho.sqrt());
    let avg = |a: f64, b: f64| (sl * a + sr * b) / (sl + sr);
    let enthalpy = |q: &PrimitiveState| (GAMMA / (GAMMA - 1.0)) * q.p / q.rho + 0.5 * (q.u * q.u + q.v * q.v);
    let (u, v, h) = (avg(l.u, r.u), avg(l.v, r.v), avg(enthalpy(l), enthalpy(r)));
    let g1 = GAMMA - 1.0;
    let k = 0.5 * (u * u + v * v);
    [
        [0.0, 1.0, 0.0, 0.0],
        [g1 * k - u * u, (3.0 - GAMMA) * u, -g1 * v, g1],
        [-u * v, v, u, 0.0],
        [u * (g1 * k - h), h - g1 * u * u, -g1 * u * v, GAMMA * u],
    ]
}

#[test]
fn a2_roe_property() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst_waves: f64 = 0.0;
    let mut worst_matrix: f64 = 0.0;
    for _ in 0..100 {
        let l = random_state(&mut rng);
        let r = random_state(&mut rng);
        let df = diff(&oracle_flux(&r, [1.0, 0.0]), &oracle_flux(&l, [1.0, 0.0]));
        let dq = diff(&oracle_conserved(&r), &oracle_conserved(&l));
        let scale = norm(&df);

        let d = decompose(l, r, gas());
        let mut waves = [0.0; 4];
        for k in 0..4 {
            for m in 0..4 {
                waves[m] += d.lambdas[k] * d.wave_strengths[k] * d.right_vectors[m][k];
            }
        }
        worst_waves = worst_waves.max(norm(&diff(&waves, &df)) / scale);

        let a = oracle_roe_matrix(&l, &r);
        let adq: Vec4 = std::array::from_fn(|m| (0..4).map(|k| a[m][k] * dq[k]).sum());
        worst_matrix = worst_matrix.max(norm(&diff(&adq, &df)) / scale);
    }
    let worst = worst_waves.max(worst_matrix);
    report(
        "A2",
        worst <= 1e-10,
        &format!(
            "wave sum {worst_waves:.2e}, Jacobian at Roe average {worst_matrix:.2e} (tol 1e-10), 100 pairs"
        ),
    );
}

#[test]
fn a3_free_stream_preservation() {
    let free = PrimitiveState::new(1.0, 0.1 * GAMMA.sqrt() * 0.8, 0.1 * GAMMA.sqrt() * 0.6, 1.0);
    let base = build_annulus(1.0, 5.0, 100, 160, (0.0, TAU)).unwrap();
    let angular = base.bc.south;
    let grid = base
        .with_boundaries(Boundaries {
            west: BoundaryKind::DirichletState(free),
            east: BoundaryKind::DirichletState(free),
            south: angular,
            north: angular,
        })
        .unwrap();
    let field = vec![free; grid.n_cells()];
    let schemes = [
        SchemeConfig::first_order(),
        SchemeConfig::muscl(Limiter::Minmod),
        SchemeConfig::muscl(Limiter::Mc),
        SchemeConfig::muscl(Limiter::VanLeer),
    ];
    let mut worst: f64 = 0.0;
    for s in all_strategies() {
        for scheme in schemes {
            let res = compute_residual(&field, &grid, scheme, s, gas()).unwrap();
            worst = res.iter().flatten().fold(worst, |w, x| w.max(x.abs()));
        }
    }
    report(
        "A3",
        worst <= 1e-12,
        &format!("max |residual| {worst:.2e} (tol 1e-12), 100x160 annulus, 7 strategies, orders 1 and 2"),
    );
}

#[test]
fn a4_conservation() {
    let registry = CaseRegistry::builtin();
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for name in INTEGRATOR_NAMES {
        let mut cfg = registry.default_config("khi").unwrap();
        cfg.grid.ni = 32;
        cfg.grid.nj = 32;
        cfg.time.integrator = name.to_string();
        let mut sim = Simulation::new(&cfg, &registry).unwrap();
        let start = sim.totals();
        let scale: Vec4 = std::array::from_fn(|m| {
            sim.conserved()
                .iter()
                .zip(&sim.grid().cell_areas)
                .map(|(q, a)| q[m].abs() * a)
                .sum()
        });
        for _ in 0..100 {
            let dt = sim.stable_dt();
            sim.step(dt).unwrap();
        }
        let end = sim.totals();
        let drift = (0..4)
            .map(|m| (end[m] - start[m]).abs() / scale[m])
            .fold(0.0, f64::max);
        detail.push(format!("{name} {drift:.1e}"));
        worst = worst.max(drift);
    }
    report(
        "A4",
        worst <= 1e-11,
        &format!(
            "max relative drift after 100 steps on periodic 32x32: {} (tol 1e-11)",
            detail.join(", ")
        ),
    );
}

fn decay_error(method: &OdeMethod, n: usize) -> f64 {
    let y = integrate(method, |_t, y: &f64| Ok(-*y), 0.0, &1.0, 1.0, n).unwrap();
    (y - (-1.0f64).exp()).abs()
}

#[test]
fn a5_ode_orders() {
    let methods = [
        ("euler", OdeMethod::Rk(euler_tableau()), 1.0),
        ("heun2", OdeMethod::Rk(heun2_tableau()), 2.0),
        ("heun3", OdeMethod::Rk(heun3_tableau()), 3.0),
        ("ab2", OdeMethod::Ab(2), 2.0),
        ("ab3", OdeMethod::Ab(3), 3.0),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, method, expected) in &methods {
        let coarse = decay_error(method, 100);
        let fine = decay_error(method, 200);
        let order = (coarse / fine).log2();
        pass &= (order - expected).abs() <= 0.2;
        detail.push(format!("{name} {order:.3}"));
    }

    // classical equal-step coefficients, from the backward-difference form
    let gamma = [1.0, 0.5, 5.0 / 12.0, 3.0 / 8.0, 251.0 / 720.0];
    let mut coeff_err: f64 = 0.0;
    for k in 1..=5 {
        let mut classical = vec![0.0; k];
        for (m, g) in gamma.iter().enumerate().take(k) {
            let mut binom = 1.0;
            for j in 0..=m {
                classical[j] += g * if j % 2 == 0 { binom } else { -binom };
                binom = binom * (m - j) as f64 / (j + 1) as f64;
            }
        }
        let dt = 0.25;
        let times: Vec<f64> = (0..k).map(|j| 2.0 - j as f64 * dt).collect();
        let beta = ab_coefficients(&times, 2.0 + dt).unwrap();
        for (b, c) in beta.iter().zip(&classical) {
            coeff_err = coeff_err.max((b / dt - c).abs());
        }
    }
    pass &= coeff_err <= 1e-14;
    report(
        "A5",
        pass,
        &format!(
            "orders {} (tol 0.2); equal-step AB coefficient error {coeff_err:.1e} (tol 1e-14)",
            detail.join(", ")
        ),
    );
}

fn real_axis_limit(r: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if r(mid).abs() > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[test]
fn a6_stability_analytics() {
    let mut parts = Vec::new();
    let mut pass = true;

    let euler = rk_region_boundary(&euler_tableau(), 512);
    let circle = euler
        .points()
        .map(|z| ((z + 1.0).norm() - 1.0).abs())
        .fold(0.0, f64::max);
    pass &= circle <= 1e-10;
    parts.push(format!("euler circle {circle:.1e}"));

    let rk4 = rk4_tableau();
    let from_tableau = real_axis_limit(
        |x| rk_stability_function(&rk4, Complex64::new(x, 0.0)).norm(),
        -3.0,
        -2.0,
    );
    let taylor = real_axis_limit(
        |x| 1.0 + x + x * x / 2.0 + x.powi(3) / 6.0 + x.powi(4) / 24.0,
        -3.0,
        -2.0,
    );
    let ok = (from_tableau + 2.7853).abs() <= 1e-3 && (from_tableau - taylor).abs() <= 1e-12;
    pass &= ok;
    parts.push(format!("rk4 real limit {from_tableau:.5}"));

    let minus_one = Complex64::new(-1.0, 0.0);
    for (k, expected) in [(2usize, -1.0), (3, -6.0 / 11.0)] {
        let p = ab_polys(k).unwrap();
        let z = p.rho(minus_one) / p.sigma(minus_one);
        let ok = (z.re - expected).abs() <= 1e-10 && z.im.abs() <= 1e-10;
        pass &= ok;
        parts.push(format!("ab{k} crossing {:.12}", z.re));
    }

    let n = 16;
    let mut spectrum_err: f64 = 0.0;
    for eps in [0.0, 0.5, 1.0] {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            m[(j, (j + 1) % n)] += -0.5 + 0.5 * eps;
            m[(j, (j + n - 1) % n)] += 0.5 + 0.5 * eps;
            m[(j, j)] -= eps;
        }
        let dense = m.complex_eigenvalues();
        let formula: Vec<Complex64> = advection_spectrum(n, eps).points().copied().collect();
        for e in dense.iter() {
            let d = formula
                .iter()
                .map(|z| (z - e).norm())
                .fold(f64::INFINITY, f64::min);
            spectrum_err = spectrum_err.max(d);
        }
        for z in &formula {
            let d = dense.iter().map(|e| (z - e).norm()).fold(f64::INFINITY, f64::min);
            spectrum_err = spectrum_err.max(d);
        }
    }
    pass &= spectrum_err <= 1e-10;
    parts.push(format!("spectrum vs circulant {spectrum_err:.1e}"));

    let central = advection_spectrum(64, 0.0);
    let et = euler_tableau();
    let euler_never = (0..100).all(|k| {
        let dt = 1e-4 * 1.15f64.powi(k);
        !stable_on_hull(StabilityMethod::RungeKutta(&et), &central, dt).stable
    });
    pass &= euler_never;
    parts.push(format!("euler unstable on central: {euler_never}"));

    let h3 = heun3_tableau();
    let v = stable_on_hull(StabilityMethod::RungeKutta(&h3), &central, 1.7);
    let ok = v.stable && (v.max_cfl - 3f64.sqrt()).abs() <= 1e-3;
    pass &= ok;
    parts.push(format!("heun3 central limit {:.5}", v.max_cfl));

    report("A6", pass, &parts.join("; "));
}

fn max_density_deviation(sim: &Simulation) -> f64 {
    sim.primitives()
        .iter()
        .map(|q| (q.rho - 1.0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn a7_uniform_low_mach_directionality() {
    if !full_run_enabled("A7") {
        return;
    }
    let registry = CaseRegistry::builtin();
    let run = |integrator: &str| {
        let mut cfg = registry.default_config("uniform_low_mach").unwrap();
        cfg.time.integrator = integrator.into();
        let mut sim = Simulation::new(&cfg, &registry).unwrap();
        let initial = max_density_deviation(&sim);
        match sim.advance_to(cfg.time.t_end, None, |_, _| Ok(false)) {
            Ok(_) => (initial, Some(max_density_deviation(&sim))),
            Err(_) => (initial, None),
        }
    };
    let (init, ab3) = run("ab3");
    let (_, rk3) = run("rk3");
    let ab3 = ab3.unwrap_or(f64::INFINITY);
    // a breakdown counts as unbounded growth
    let rk3 = rk3.unwrap_or(f64::INFINITY);
    let pass = ab3 <= 5.0 * init && rk3 >= 10.0 * ab3;
    report(
        "A7",
        pass,
        &format!(
            "initial {init:.3e}; AB3 {ab3:.3e} (need <= {:.3e}); RK3 {rk3:.3e} (need >= {:.3e})",
            5.0 * init,
            10.0 * ab3
        ),
    );
}

fn cylinder_pressure_deviation(registry: &CaseRegistry, solver: &str, mach: f64) -> f64 {
    let mut cfg = registry.default_config("cylinder").unwrap();
    cfg.grid.ni = 50;
    cfg.grid.nj = 80;
    cfg.mach = mach;
    cfg.solver.name = solver.into();
    cfg.time.integrator = "ab3".into();
    let p_inf = cfg.param("p", 1.0);
    let mut sim = Simulation::new(&cfg, registry).unwrap();
    sim.advance_to(100.0, Some(1e-8), |_, _| Ok(false)).unwrap();
    sim.primitives()
        .iter()
        .map(|q| (q.p - p_inf).abs() / p_inf)
        .fold(0.0, f64::max)
}

#[test]
fn a8_mach_scaling() {
    if !full_run_enabled("A8") {
        return;
    }
    let registry = CaseRegistry::builtin();
    let ratio = |solver: &str| {
        let hi = cylinder_pressure_deviation(&registry, solver, 1e-1);
        let lo = cylinder_pressure_deviation(&registry, solver, 1e-2);
        (hi, lo, hi / lo)
    };
    let (fh, fl, fr) = ratio("fleischmann");
    let (rh, rl, rr) = ratio("roe");
    report(
        "A8",
        fr >= 25.0 && rr <= 25.0,
        &format!(
            "fleischmann {fh:.3e}/{fl:.3e} = {fr:.1} (need >= 25); roe {rh:.3e}/{rl:.3e} = {rr:.1} (need <= 25)"
        ),
    );
}

fn blunt_body_asymmetry(
    registry: &CaseRegistry,
    solver: &str,
    integrator: &str,
    t_end: f64,
) -> Result<f64, String> {
    let mut cfg: CaseConfig = registry.default_config("blunt_body").unwrap();
    cfg.grid.ni = 64;
    cfg.grid.nj = 192;
    cfg.solver.name = solver.into();
    cfg.time.integrator = integrator.into();
    let rho_inf = cfg.param("rho", 1.0);
    let mut sim = Simulation::new(&cfg, registry).unwrap();
    match sim.advance_to(t_end, None, |_, _| Ok(false)) {
        Ok(_) => Ok(asymmetry_metric(sim.grid(), sim.primitives(), rho_inf)),
        Err(e) => Err(format!("breakdown at t = {:.3}: {e}", sim.time())),
    }
}

#[test]
fn a9_carbuncle_directionality() {
    if !full_run_enabled("A9") {
        return;
    }
    let registry = CaseRegistry::builtin();
    let show = |r: &Result<f64, String>| match r {
        Ok(v) => format!("{v:.3e}"),
        Err(e) => e.clone(),
    };
    let euler = blunt_body_asymmetry(&registry, "fleischmann", "euler", 0.5);
    let ab3 = blunt_body_asymmetry(&registry, "fleischmann", "ab3", 0.5);
    let geom = blunt_body_asymmetry(&registry, "blend-geom", "ab3", 2.0);
    let arith = blunt_body_asymmetry(&registry, "blend-arith", "ab3", 2.0);
    let directional = matches!((&euler, &ab3), (Ok(e), Ok(a)) if *e >= 5.0 * a);
    let blends = [&geom, &arith].iter().all(|r| matches!(r, Ok(v) if *v < 0.05));
    report(
        "A9",
        directional && blends,
        &format!(
            "t=0.5 fleischmann+euler {}, fleischmann+ab3 {}; t=2 blend-geom {}, blend-arith {} (need < 0.05)",
            show(&euler),
            show(&ab3),
            show(&geom),
            show(&arith)
        ),
    );
}

#[test]
fn a10_breakdown_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("vacuum");
    let status = Command::new(env!("CARGO_BIN_EXE_lowmach"))
        .args([
            "run",
            "--case",
            "riemann",
            "--solver",
            "roe",
            "--integrator",
            "euler",
            "--order",
            "1",
        ])
        .args([
            "--set",
            "params.rho_l=1",
            "--set",
            "params.u_l=-5",
            "--set",
            "params.p_l=0.4",
        ])
        .args([
            "--set",
            "params.rho_r=1",
            "--set",
            "params.u_r=5",
            "--set",
            "params.p_r=0.4",
        ])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    let code = status.status.code();
    let failure = std::fs::read_to_string(out.join("failure.csv")).unwrap_or_default();
    let row: Vec<&str> = failure.lines().nth(1).unwrap_or("").split(',').collect();
    let names_cell = row.len() == 5
        && row[1].parse::<f64>().is_ok()
        && row[2].parse::<usize>().is_ok()
        && row[3].parse::<usize>().is_ok();
    let mut nan_free = true;
    for entry in std::fs::read_dir(&out).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        nan_free &= !text.to_ascii_lowercase().contains("nan");
    }
    report(
        "A10",
        code == Some(2) && names_cell && nan_free,
        &format!(
            "exit code {code:?}, failure record {:?}, output NaN-free: {nan_free}",
            failure.lines().nth(1).unwrap_or("")
        ),
    );
}

#[test]
fn a10_library_reports_breakdown_cell() {
    let registry = CaseRegistry::builtin();
    let mut cfg = registry.default_config("riemann").unwrap();
    for (k, v) in [
        ("u_l", -5.0),
        ("u_r", 5.0),
        ("rho_r", 1.0),
        ("p_l", 0.4),
        ("p_r", 0.4),
    ] {
        cfg.params.insert(k.into(), v);
    }
    let mut sim = Simulation::new(&cfg, &registry).unwrap();
    let err = sim.advance_to(0.2, None, |_, _| Ok(false)).unwrap_err();
    assert!(err.is_breakdown());
    let (i, j) = err.breakdown_cell().unwrap();
    assert!((95..105).contains(&i) && j == 0, "({i}, {j})");
    assert!(sim.primitives().iter().all(|q| q.is_valid()));
}

#[test]
fn periodic_residual_sums_to_zero() {
    let grid = build_cartesian(8, 8, (0.0, 1.0), (0.0, 1.0))
        .unwrap()
        .with_boundaries(Boundaries::uniform(BoundaryKind::Periodic))
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let field: Vec<PrimitiveState> = (0..grid.n_cells()).map(|_| random_state(&mut rng)).collect();
    for s in all_strategies() {
        let res = compute_residual(&field, &grid, SchemeConfig::muscl(Limiter::Mc), s, gas()).unwrap();
        for m in 0..4 {
            let total: f64 = res.iter().zip(&grid.cell_areas).map(|(r, a)| r[m] * a).sum();
            let scale: f64 = res
                .iter()
                .zip(&grid.cell_areas)
                .map(|(r, a)| (r[m] * a).abs())
                .sum();
            assert!(total.abs() <= 1e-12 * scale.max(1.0), "{}: {total}", s.name());
        }
    }
}
