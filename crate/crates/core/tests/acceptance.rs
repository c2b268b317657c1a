//! One PASS/FAIL line per primary acceptance criterion. Runs without the
//! libtest harness so the lines always print; exits nonzero if any fails.

use std::f64::consts::{LN_2, PI};
use std::sync::Arc;
use std::time::{Duration, Instant};

use spherevortex_core::desingularize::{solve_scales, Ansatz};
use spherevortex_core::elliptic::{antisymmetry_defect, extract_profile, fixed_point_solve, Nonlinearity, SolveParams};
use spherevortex_core::ground_state::GroundState;
use spherevortex_core::kernel::{green_g, regular_h, H_DIAGONAL};
use spherevortex_core::ode::Tolerance;
use spherevortex_core::spectral::SpectralPlan;
use spherevortex_core::sphere::{laplace_beltrami, LatLonGrid, SphericalField};
use spherevortex_core::vortex::{find_critical, integrate, rotating_frame_transfer, Frame, Pins, DRIFT_SIGN};
use spherevortex_core::{SpherePoint, VortexSystem};

type Outcome = (bool, String);
type Criterion = (&'static str, u64, fn() -> Outcome);

fn pt(t: f64, p: f64) -> SpherePoint {
    SpherePoint::new(t, p).unwrap()
}

fn cart(t: f64, p: f64) -> [f64; 3] {
    [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
}

/// H from the Cartesian chord and the flat chart metric.
fn h_oracle(t1: f64, p1: f64, t2: f64, p2: f64) -> f64 {
    let (x, y) = (cart(t1, p1), cart(t2, p2));
    let c: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / 2.0;
    let flat = (t1 - t2).powi(2) + t1.sin().powi(2) * (p1 - p2).powi(2);
    -(c / flat).ln() / (4.0 * PI) + LN_2 / (4.0 * PI)
}

fn neville(h: &[f64], v: &[f64]) -> f64 {
    let mut p = v.to_vec();
    let n = h.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i]);
        }
    }
    p[0]
}

fn bessel_j0(x: f64) -> f64 {
    let q = -(x * x) / 4.0;
    let (mut term, mut sum, mut k) = (1.0f64, 1.0f64, 1.0f64);
    while term.abs() > 1e-20 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn kernel_identities() -> Outcome {
    let pts: Vec<SpherePoint> = (0..40)
        .map(|k| pt(0.1 + 2.9 * ((k * 37 % 40) as f64) / 40.0, 0.157 * k as f64))
        .collect();
    let mut symmetric = true;
    for a in &pts {
        for b in &pts {
            if a.geodesic(b) > 1e-6 {
                symmetric &= green_g(a, b).unwrap() == green_g(b, a).unwrap();
            }
        }
    }
    let anti = green_g(&pt(PI / 2.0, 0.0), &pt(PI / 2.0, PI)).unwrap().abs();
    let mut diag = 0.0f64;
    for theta in [0.3, 1.0, PI / 2.0, 2.5] {
        let hs: Vec<f64> = (3..=7).map(|k| 10f64.powi(-k)).collect();
        for dir in [(1.0, 0.0), (0.0, 1.0), (0.6, 0.8)] {
            let vs: Vec<f64> = hs
                .iter()
                .map(|&h| h_oracle(theta + h * dir.0, 1.0 + h * dir.1, theta, 1.0))
                .collect();
            diag = diag.max((neville(&hs, &vs) - LN_2 / (2.0 * PI)).abs());
        }
        let z = pt(theta, 1.0);
        diag = diag.max((regular_h(&z, &z).unwrap() - H_DIAGONAL).abs());
    }
    (
        symmetric && anti < 1e-14 && diag < 1e-8,
        format!("symmetric={symmetric} antipodal={anti:.1e} diagonal_err={diag:.1e}"),
    )
}

fn discrete_operators() -> Outcome {
    let g = Arc::new(LatLonGrid::new(128, 256).unwrap());
    let f = SphericalField::from_fn(g.clone(), |t, _| t.cos());
    let lap = laplace_beltrami(&f).unwrap();
    let err = lap.zip_with(&f, |a, b| -a - 2.0 * b).max_abs() / 2.0;
    let one = SphericalField::from_fn(g, |_, _| 1.0).integrate();
    let q = (one - 4.0 * PI).abs();
    (err < 1e-6 && q < 1e-12, format!("laplacian_rel_err={err:.1e} area_err={q:.1e}"))
}

fn ground_states() -> Outcome {
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if bessel_j0(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let tau = GroundState::new(1.0).unwrap().r_support;
    let tau_err = (tau - 0.5 * (lo + hi)).abs().max((tau - 2.4048255577).abs());
    let (mut div, mut selfc) = (0.0f64, 0.0f64);
    for g in [1.0, 1.5, 2.0, 3.0, 5.0] {
        let gs = GroundState::new(g).unwrap();
        let flux = 2.0 * PI * gs.r_support * gs.d_boundary;
        div = div.max((gs.mass_quadrature - flux).abs() / flux);
        let a = GroundState::with_tolerance(g, Tolerance { rtol: 1e-12, atol: 1e-14 }).unwrap();
        let b = GroundState::with_tolerance(g, Tolerance { rtol: 5e-13, atol: 5e-15 }).unwrap();
        selfc = selfc
            .max((a.d_boundary - b.d_boundary).abs() / a.d_boundary)
            .max((a.mass_kappa - b.mass_kappa).abs() / a.mass_kappa);
    }
    (
        tau_err < 1e-9 && div < 1e-8 && selfc < 1e-9,
        format!("tau_err={tau_err:.1e} divergence_identity={div:.1e} self_convergence={selfc:.1e}"),
    )
}

fn scale_law() -> Outcome {
    let g2 = GroundState::new(2.0).unwrap();
    let limit = (2.0 * PI * g2.d_boundary).sqrt();
    let mut resid = 0.0f64;
    for eps in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10] {
        let sc = solve_scales(eps, 1.0, &g2).unwrap();
        let (a, b) = sc.identity_residuals(&g2);
        resid = resid.max(a).max(b);
    }
    let dev = |eps: f64| (solve_scales(eps, 1.0, &g2).unwrap().s / eps / limit - 1.0).abs();
    let (d6, d10) = (dev(1e-6), dev(1e-10));
    let g1 = GroundState::new(1.0).unwrap();
    let exact = solve_scales(1e-3, 1.0, &g1).unwrap().s == g1.r_support * 1e-3;
    (
        resid < 1e-12 && d6 < 0.02 && d10 < 0.005 && exact,
        format!("identity_residual={resid:.1e} dev(1e-6)={d6:.4} (<0.02) dev(1e-10)={d10:.4} (<0.005) gamma1_exact={exact}"),
    )
}

fn critical_point_and_dynamics() -> Outcome {
    let seed = VortexSystem::dipole(1.0, PI / 3.0, 0.0).unwrap().with_w(0.0);
    let rep = find_critical(&seed, &Pins::traveling(2), 1e-11, 100).unwrap();
    let min_eig = rep.reduced_spectrum.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
    let sys = rep.config;
    let tr = integrate(&sys, Frame::Inertial, 10.0, 1e-3, 100).unwrap();
    let drift = tr.rigid_drift_deviation(DRIFT_SIGN * sys.w);
    (
        rep.grad_norm < 1e-11
            && min_eig > 1e-3
            && tr.aborted.is_none()
            && drift < 1e-6
            && tr.energy_drift < 1e-8
            && tr.moment_drift < 1e-8,
        format!(
            "grad_norm={:.1e} min_reduced_eig={min_eig:.3e} drift_dev={drift:.1e} energy_drift={:.1e} moment_drift={:.1e}",
            rep.grad_norm, tr.energy_drift, tr.moment_drift
        ),
    )
}

fn dipole() -> VortexSystem {
    VortexSystem::dipole(1.0, PI / 3.0, 0.0).unwrap()
}

fn sci(v: &[f64]) -> String {
    let s: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", s.join(", "))
}

fn measure_convergence() -> Outcome {
    let gs = Arc::new(GroundState::new(2.0).unwrap());
    let sweep = [1e-2, 1e-4, 1e-6];
    let mut closed = 0.0f64;
    let (mut deficit, mut wcos, mut wsc) = (Vec::new(), Vec::new(), Vec::new());
    for eps in sweep {
        let a = Ansatz::construct(&dipole(), eps, gs.clone()).unwrap();
        let q = a.core_circulation(0);
        let s = a.cores[0].scale().s;
        closed = closed.max((q - eps.ln().abs() / s.ln().abs()).abs());
        deficit.push((q - 1.0).abs());
        wcos.push(a.weak_convergence_error(|t, _| t.cos()));
        wsc.push(a.weak_convergence_error(|t, p| t.sin() * p.cos()));
    }
    let mut ratios_ok = true;
    let mut ratios = Vec::new();
    for k in 0..2 {
        let got = deficit[k + 1] / deficit[k];
        let want = sweep[k].ln() / sweep[k + 1].ln();
        ratios_ok &= (got / want - 1.0).abs() < 0.2;
        ratios.push(format!("{got:.3}/{want:.3}"));
    }
    let monotone = deficit.windows(2).all(|w| w[1] < w[0]);
    // errors at the roundoff floor count as non-increasing
    let floor = 1e-12;
    let dec = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0] || w[1].max(w[0]) < floor);
    (
        closed < 1e-8 && monotone && ratios_ok && dec(&wcos) && dec(&wsc),
        format!(
            "closed_form_err={closed:.1e} deficits={deficit:.3?} ratios(got/pred)={ratios:?} weak_cos={} weak_sincos={}",
            sci(&wcos),
            sci(&wsc)
        ),
    )
}

fn boundary_asymptotics() -> Outcome {
    let eps = 1e-3;
    let mut parts = Vec::new();
    let mut ok = true;
    for (g, tol) in [(1.0, 0.03), (2.0, 0.05)] {
        let gs = Arc::new(GroundState::new(g).unwrap());
        let constant = if g == 1.0 { gs.r_support } else { (2.0 * PI * gs.d_boundary).sqrt() };
        let a = Ansatz::construct(&dipole(), eps, gs).unwrap();
        let mut worst = 0.0f64;
        let mut convex = true;
        for c in a.boundary_curves().unwrap() {
            worst = worst.max(c.r_measured.iter().fold(0.0f64, |m, r| m.max((r / eps / constant - 1.0).abs())));
            convex &= c.r_measured.len() == 256 && c.is_convex();
        }
        ok &= worst < tol && convex;
        parts.push(format!("gamma={g}: radius_dev={worst:.4} (<{tol}) convex={convex}"));
    }
    (ok, parts.join(" "))
}

fn pde_solve() -> Outcome {
    let sys = VortexSystem::dipole(2.0 * PI, PI / 3.0, 0.0).unwrap();
    let a = Ansatz::construct(&sys, 0.05, Arc::new(GroundState::new(2.0).unwrap())).unwrap();
    let plan = SpectralPlan::new(Arc::new(LatLonGrid::new(512, 1024).unwrap())).unwrap();
    let params = SolveParams::from_ansatz(&a);
    let nl = Nonlinearity::from_ansatz(plan.grid.clone(), &a, &params).unwrap();
    let seed = a.psi_field(plan.grid.clone());
    let rep = fixed_point_solve(&seed, &plan, &nl, &params).unwrap();
    let anti = antisymmetry_defect(&rep.psi);
    let (mut stream, mut vort) = (0.0f64, 0.0f64);
    for l in 0..2 {
        let p = extract_profile(&plan, &rep.psi, l, &a, &nl).unwrap();
        stream = stream.max(p.stream_deviation);
        vort = vort.max(p.vorticity_deviation);
    }
    let reduction = rep.seed_residual / rep.final_residual;
    (
        rep.converged
            && rep.final_increment() < 1e-9
            && reduction >= 100.0
            && stream < 0.05
            && vort < 0.08
            && anti < 1e-8,
        format!(
            "iterations={} increment={:.1e} residual {:.2e}->{:.2e} (x{reduction:.1e}) stream_dev={stream:.4} vorticity_dev={vort:.4} antisymmetry={anti:.1e}",
            rep.iterations,
            rep.final_increment(),
            rep.seed_residual,
            rep.final_residual
        ),
    )
}

fn rotating_frame() -> Outcome {
    let w = 0.0459;
    let id = rotating_frame_transfer(w, 0.0);
    let still = rotating_frame_transfer(w, w);
    let twice = rotating_frame_transfer(w, 0.25).transfer(0.125);
    let once = rotating_frame_transfer(w, 0.375);
    let ok = id.w == w
        && id.background_cos_coefficient == 0.0
        && still.w == 0.0
        && still.background_cos_coefficient == 2.0 * w
        && twice == once;
    (ok, format!("W_new={} additivity={}", still.w, twice == once))
}

fn main() {
    let checks: [Criterion; 9] = [
        ("kernel identities", 1, kernel_identities),
        ("discrete operators", 5, discrete_operators),
        ("ground states", 10, ground_states),
        ("scale law", 1, scale_law),
        ("critical point and dynamics", 30, critical_point_and_dynamics),
        ("measure convergence", 30, measure_convergence),
        ("boundary asymptotics", 30, boundary_asymptotics),
        ("pde solve", 600, pde_solve),
        ("rotating-frame transfer", 1, rotating_frame),
    ];
    let mut failed = 0;
    for (name, budget, f) in checks {
        let start = Instant::now();
        let (ok, detail) = f();
        let el = start.elapsed();
        let in_time = el <= Duration::from_secs(budget);
        let pass = ok && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {name}: {detail} [{:.2}s / {budget}s]",
            if pass { "PASS" } else { "FAIL" },
            el.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
