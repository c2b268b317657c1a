//! Self-checks grouped into suites, each returning named pass/fail records.

use std::f64::consts::{LN_2, PI};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::desingularize::{solve_scales, Ansatz};
use crate::elliptic::{antisymmetry_defect, extract_profile, fixed_point_solve, Nonlinearity, SolveParams};
use crate::error::{Error, Result};
use crate::ground_state::GroundState;
use crate::kernel::{green_g, regular_h, H_DIAGONAL};
use crate::sphere::{laplace_beltrami, LatLonGrid, SphericalField, SpherePoint};
use crate::spectral::SpectralPlan;
use crate::vortex::{find_critical, integrate, rotating_frame_transfer, Frame, Pins, VortexSystem, DRIFT_SIGN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Kernels,
    Dynamics,
    Asymptotics,
    Pde,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kernels" => Ok(Suite::Kernels),
            "dynamics" => Ok(Suite::Dynamics),
            "asymptotics" => Ok(Suite::Asymptotics),
            "pde" => Ok(Suite::Pde),
            _ => Err(Error::Config(format!("unknown suite {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Grid for the PDE suite.
#[derive(Debug, Clone, Copy)]
pub struct PdeGrid {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for PdeGrid {
    fn default() -> Self {
        Self {
            n_theta: 512,
            n_phi: 1024,
        }
    }
}

fn timed(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, e.to_string()),
    };
    Check {
        name: name.to_string(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_suite(suite: Suite, grid: PdeGrid) -> Vec<Check> {
    match suite {
        Suite::Kernels => vec![
            timed("green symmetry", green_symmetry),
            timed("antipodal equatorial green", || {
                let v = green_g(&SpherePoint::new(PI / 2.0, 0.0)?, &SpherePoint::new(PI / 2.0, PI)?)?;
                Ok((v.abs() < 1e-14, format!("{v:.1e}")))
            }),
            timed("regular part diagonal", h_diagonal),
            timed("laplacian of cos", laplacian_cos),
            timed("quadrature area", || {
                let g = Arc::new(LatLonGrid::new(128, 256)?);
                let e = (SphericalField::from_fn(g, |_, _| 1.0).integrate() - 4.0 * PI).abs();
                Ok((e < 1e-12, format!("{e:.1e}")))
            }),
        ],
        Suite::Dynamics => vec![timed("critical point and drift", dynamics), timed("rotating frame", rotating)],
        Suite::Asymptotics => vec![
            timed("ground states", ground_states),
            timed("scale law", scale_law),
            timed("measure convergence", measure_convergence),
            timed("boundary asymptotics", boundary),
        ],
        Suite::Pde => vec![timed("pde solve", || pde(grid))],
    }
}

fn green_symmetry() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for k in 0..40 {
        let a = SpherePoint::new(0.1 + 2.9 * ((k * 37 % 40) as f64) / 40.0, 0.157 * k as f64)?;
        for j in 0..40 {
            let b = SpherePoint::new(0.1 + 2.9 * ((j * 13 % 40) as f64) / 40.0, 0.311 * j as f64)?;
            if a.geodesic(&b) > 1e-6 {
                worst = worst.max((green_g(&a, &b)? - green_g(&b, &a)?).abs());
            }
        }
    }
    Ok((worst == 0.0, format!("max asymmetry {worst:.1e}")))
}

/// Richardson–Neville limit of G − Γ evaluated through the Cartesian chord.
fn h_diagonal() -> Result<(bool, String)> {
    let cart = |t: f64, p: f64| [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
    let h_chord = |t1: f64, p1: f64, t2: f64, p2: f64| {
        let (x, y) = (cart(t1, p1), cart(t2, p2));
        let c: f64 = (0..3).map(|i| (x[i] - y[i]).powi(2)).sum::<f64>() / 2.0;
        let flat = (t1 - t2).powi(2) + t1.sin().powi(2) * (p1 - p2).powi(2);
        -(c / flat).ln() / (4.0 * PI) + LN_2 / (4.0 * PI)
    };
    let hs: Vec<f64> = (3..=7).map(|k| 10f64.powi(-k)).collect();
    let mut worst = 0.0f64;
    for theta in [0.3, 1.0, PI / 2.0, 2.5] {
        let mut p: Vec<f64> = hs.iter().map(|&h| h_chord(theta + 0.6 * h, 1.0 + 0.8 * h, theta, 1.0)).collect();
        for m in 1..hs.len() {
            for i in 0..hs.len() - m {
                p[i] = (hs[i + m] * p[i] - hs[i] * p[i + 1]) / (hs[i + m] - hs[i]);
            }
        }
        let z = SpherePoint::new(theta, 1.0)?;
        worst = worst
            .max((p[0] - LN_2 / (2.0 * PI)).abs())
            .max((regular_h(&z, &z)? - H_DIAGONAL).abs());
    }
    Ok((worst < 1e-8, format!("max error {worst:.1e}")))
}

fn laplacian_cos() -> Result<(bool, String)> {
    let g = Arc::new(LatLonGrid::new(128, 256)?);
    let f = SphericalField::from_fn(g, |t, _| t.cos());
    let e = laplace_beltrami(&f)?.zip_with(&f, |a, b| -a - 2.0 * b).max_abs() / 2.0;
    Ok((e < 1e-6, format!("relative error {e:.1e}")))
}

fn dynamics() -> Result<(bool, String)> {
    let seed = VortexSystem::dipole(1.0, PI / 3.0, 0.0)?.with_w(0.0);
    let rep = find_critical(&seed, &Pins::traveling(2), 1e-11, 100)?;
    let min_eig = rep.reduced_spectrum.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
    let tr = integrate(&rep.config, Frame::Inertial, 10.0, 1e-3, 100)?;
    let drift = tr.rigid_drift_deviation(DRIFT_SIGN * rep.config.w);
    let ok = rep.grad_norm < 1e-11
        && min_eig > 1e-3
        && tr.aborted.is_none()
        && drift < 1e-6
        && tr.energy_drift < 1e-8
        && tr.moment_drift < 1e-8;
    Ok((
        ok,
        format!(
            "grad {:.1e}, min eigenvalue {min_eig:.2e}, drift {drift:.1e}, energy {:.1e}, moment {:.1e}",
            rep.grad_norm, tr.energy_drift, tr.moment_drift
        ),
    ))
}

fn rotating() -> Result<(bool, String)> {
    let w = 0.25;
    let still = rotating_frame_transfer(w, w);
    let additive = rotating_frame_transfer(w, 0.5).transfer(0.125) == rotating_frame_transfer(w, 0.625);
    Ok((still.w == 0.0 && additive, format!("stationary W {}, additive {additive}", still.w)))
}

fn ground_states() -> Result<(bool, String)> {
    let tau = GroundState::new(1.0)?.r_support;
    let tau_err = (tau - 2.404_825_557_695_773).abs();
    let mut div = 0.0f64;
    for g in [1.0, 1.5, 2.0, 3.0, 5.0] {
        let gs = GroundState::new(g)?;
        let flux = 2.0 * PI * gs.r_support * gs.d_boundary;
        div = div.max((gs.mass_quadrature - flux).abs() / flux);
    }
    Ok((
        tau_err < 1e-9 && div < 1e-8,
        format!("tau error {tau_err:.1e}, divergence identity {div:.1e}"),
    ))
}

fn scale_law() -> Result<(bool, String)> {
    let gs = GroundState::new(2.0)?;
    let limit = (2.0 * PI * gs.d_boundary).sqrt();
    let mut resid = 0.0f64;
    let mut dev = Vec::new();
    for eps in [1e-6, 1e-10] {
        let sc = solve_scales(eps, 1.0, &gs)?;
        let (a, b) = sc.identity_residuals(&gs);
        resid = resid.max(a).max(b);
        dev.push((sc.s / eps / limit - 1.0).abs());
    }
    let g1 = GroundState::new(1.0)?;
    let exact = solve_scales(1e-3, 1.0, &g1)?.s == g1.r_support * 1e-3;
    Ok((
        resid < 1e-12 && dev[0] < 0.02 && dev[1] < 0.005 && exact,
        format!(
            "identity {resid:.1e}, deviation {:.4} at 1e-6, {:.4} at 1e-10, gamma=1 exact {exact}",
            dev[0], dev[1]
        ),
    ))
}

fn measure_convergence() -> Result<(bool, String)> {
    let gs = Arc::new(GroundState::new(2.0)?);
    let sys = VortexSystem::dipole(1.0, PI / 3.0, 0.0)?;
    let sweep = [1e-2, 1e-4, 1e-6];
    let mut deficit = Vec::new();
    let mut weak = Vec::new();
    for eps in sweep {
        let a = Ansatz::construct(&sys, eps, gs.clone())?;
        deficit.push((a.core_circulation(0) / sys.vortices[0].kappa - 1.0).abs());
        weak.push(a.weak_convergence_error(|t, _| t.cos()));
    }
    let ratios_ok = (0..2).all(|k| {
        let want = sweep[k].ln() / sweep[k + 1].ln();
        (deficit[k + 1] / deficit[k] / want - 1.0).abs() < 0.2
    });
    let monotone = deficit.windows(2).all(|w| w[1] < w[0]) && weak.windows(2).all(|w| w[1] < w[0]);
    Ok((ratios_ok && monotone, format!("deficits {deficit:.3?}")))
}

fn boundary() -> Result<(bool, String)> {
    let eps = 1e-3;
    let sys = VortexSystem::dipole(1.0, PI / 3.0, 0.0)?;
    let mut ok = true;
    let mut out = Vec::new();
    for (g, tol) in [(1.0, 0.03), (2.0, 0.05)] {
        let gs = Arc::new(GroundState::new(g)?);
        let c = if g == 1.0 { gs.r_support } else { (2.0 * PI * gs.d_boundary).sqrt() };
        let a = Ansatz::construct(&sys, eps, gs)?;
        let mut worst = 0.0f64;
        for curve in a.boundary_curves()? {
            ok &= curve.is_convex();
            for r in &curve.r_measured {
                worst = worst.max((r / eps / c - 1.0).abs());
            }
        }
        ok &= worst < tol;
        out.push(format!("gamma {g}: {worst:.4}"));
    }
    Ok((ok, out.join(", ")))
}

fn pde(grid: PdeGrid) -> Result<(bool, String)> {
    let sys = VortexSystem::dipole(2.0 * PI, PI / 3.0, 0.0)?;
    let a = Ansatz::construct(&sys, 0.05, Arc::new(GroundState::new(2.0)?))?;
    let plan = SpectralPlan::new(Arc::new(LatLonGrid::new(grid.n_theta, grid.n_phi)?))?;
    let params = SolveParams::from_ansatz(&a);
    let nl = Nonlinearity::from_ansatz(plan.grid.clone(), &a, &params)?;
    let rep = fixed_point_solve(&a.psi_field(plan.grid.clone()), &plan, &nl, &params)?;
    let (mut stream, mut vort) = (0.0f64, 0.0f64);
    for l in 0..a.cores.len() {
        let p = extract_profile(&plan, &rep.psi, l, &a, &nl)?;
        stream = stream.max(p.stream_deviation);
        vort = vort.max(p.vorticity_deviation);
    }
    let anti = antisymmetry_defect(&rep.psi);
    let ok = rep.converged
        && rep.seed_residual >= 100.0 * rep.final_residual
        && stream < 0.05
        && vort < 0.08
        && anti < 1e-8;
    Ok((
        ok,
        format!(
            "{} iterations, residual {:.1e} -> {:.1e}, stream {stream:.4}, vorticity {vort:.4}, antisymmetry {anti:.1e}",
            rep.iterations, rep.seed_residual, rep.final_residual
        ),
    ))
}
