//! Numerical solution of the semilinear problem
//!
//! −Δψ = (1/ε²)Σ⁺ 1_{B_δ(z_l)}(ψ + W cosθ − μ_l)₊^γ − (1/ε²)Σ⁻ 1_{B_δ(z_l)}(−ψ − W cosθ − μ_l)₊^γ
//!
//! on a lat-lon grid, seeded by the desingularized ansatz, with μ and W held
//! fixed.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::desingularize::Ansatz;
use crate::error::{Error, Result};
use crate::gmres::{gmres, GmresParams};
use crate::sphere::{LatLonGrid, SphericalField, SpherePoint};
use crate::spectral::SpectralPlan;
use crate::vortex::Sign;

/// Radius of the indicator caps around each vortex.
pub const DEFAULT_MASK_RADIUS: f64 = 0.25;
/// Iterations before the residual history is required to be monotone.
pub const BURN_IN: usize = 10;
/// Consecutive residual increases that abort a solve.
pub const DIVERGENCE_WINDOW: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Damped Newton on ψ − (−Δ)⁻¹rhs(ψ) = 0 with GMRES inner solves; the
    /// damping is the initial step length.
    NewtonKrylov,
    /// ψ ← (1−α)ψ + α(−Δ)⁻¹rhs(ψ).
    Picard,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub mu: Vec<f64>,
    /// Speed W in the level function.
    pub level_speed: f64,
    pub mask_radius: f64,
    pub method: Method,
}

impl SolveParams {
    /// Parameters taken from an ansatz: ε, γ, μ and W̃, with defaults for the
    /// iteration.
    pub fn from_ansatz(a: &Ansatz) -> Self {
        Self {
            damping: 0.5,
            tol: 1e-9,
            max_iter: 200,
            epsilon: a.epsilon,
            gamma: a.gamma,
            mu: a.mu.clone(),
            level_speed: a.level_speed,
            mask_radius: DEFAULT_MASK_RADIUS,
            method: Method::NewtonKrylov,
        }
    }
}

/// Masked nonlinearity on a fixed grid.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    pub grid: Arc<LatLonGrid>,
    pub epsilon: f64,
    pub gamma: f64,
    pub mu: Vec<f64>,
    pub level_speed: f64,
    pub signs: Vec<f64>,
    pub centers: Vec<SpherePoint>,
    /// Flat grid indices inside each vortex cap.
    pub masks: Vec<Vec<usize>>,
}

impl Nonlinearity {
    pub fn new(grid: Arc<LatLonGrid>, centers: &[SpherePoint], signs: &[Sign], params: &SolveParams) -> Result<Self> {
        let n = centers.len();
        if signs.len() != n || params.mu.len() != n {
            return Err(Error::Config(format!(
                "{n} centers, {} signs and {} flux constants",
                signs.len(),
                params.mu.len()
            )));
        }
        if !(params.epsilon > 0.0) || params.gamma < 1.0 {
            return Err(Error::Config(format!(
                "need epsilon > 0 and gamma >= 1, got {} and {}",
                params.epsilon, params.gamma
            )));
        }
        let d = params.mask_radius;
        for l in 0..n {
            for m in l + 1..n {
                if centers[l].geodesic(&centers[m]) <= 2.0 * d {
                    return Err(Error::Config(format!(
                        "masks of vortices {l} and {m} overlap at radius {d}"
                    )));
                }
            }
        }
        let np = grid.n_phi;
        let masks = centers
            .iter()
            .map(|c| {
                (0..grid.len())
                    .filter(|&k| grid.point(k / np, k % np).geodesic(c) <= d)
                    .collect()
            })
            .collect();
        Ok(Self {
            grid,
            epsilon: params.epsilon,
            gamma: params.gamma,
            mu: params.mu.clone(),
            level_speed: params.level_speed,
            signs: signs.iter().map(|s| s.value()).collect(),
            centers: centers.to_vec(),
            masks,
        })
    }

    pub fn from_ansatz(grid: Arc<LatLonGrid>, a: &Ansatz, params: &SolveParams) -> Result<Self> {
        let centers: Vec<SpherePoint> = a.cores.iter().map(|c| c.center).collect();
        let signs: Vec<Sign> = a.cores.iter().map(|c| c.sign).collect();
        Self::new(grid, &centers, &signs, params)
    }

    /// ±(ψ + W cosθ) − μ_l.
    #[inline]
    pub fn level(&self, l: usize, psi: f64, cos_theta: f64) -> f64 {
        self.signs[l] * (psi + self.level_speed * cos_theta) - self.mu[l]
    }

    fn cos_at(&self, k: usize) -> f64 {
        self.grid.cos_theta[k / self.grid.n_phi]
    }

    pub fn rhs(&self, psi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; psi.len()];
        let e2 = self.epsilon * self.epsilon;
        for (l, mask) in self.masks.iter().enumerate() {
            for &k in mask {
                let v = self.level(l, psi[k], self.cos_at(k));
                if v > 0.0 {
                    out[k] += self.signs[l] * v.powf(self.gamma) / e2;
                }
            }
        }
        out
    }

    /// d rhs / dψ, nonnegative.
    pub fn rhs_derivative(&self, psi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; psi.len()];
        let e2 = self.epsilon * self.epsilon;
        for (l, mask) in self.masks.iter().enumerate() {
            for &k in mask {
                let v = self.level(l, psi[k], self.cos_at(k));
                if v > 0.0 {
                    out[k] += self.gamma * v.powf(self.gamma - 1.0) / e2;
                }
            }
        }
        out
    }

    pub fn rhs_field(&self, psi: &SphericalField) -> SphericalField {
        SphericalField {
            grid: self.grid.clone(),
            values: self.rhs(&psi.values),
        }
    }
}

/// Right-hand side of the semilinear equation at ψ.
pub fn rhs_eval(psi: &SphericalField, nl: &Nonlinearity) -> SphericalField {
    nl.rhs_field(psi)
}

/// sup|−Δψ − P(rhs(ψ) − mean)| with both terms taken spectrally.
pub fn pde_residual(plan: &SpectralPlan, nl: &Nonlinearity, psi: &SphericalField) -> f64 {
    let lap = plan.minus_laplacian(psi);
    let mut a = plan.analysis(&nl.rhs_field(psi));
    a.set(0, 0, Default::default());
    let f = plan.synthesis(&a);
    lap.zip_with(&f, |x, y| x - y).max_abs()
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub psi: SphericalField,
    /// PDE residual after each iteration.
    pub residual_history: Vec<f64>,
    /// sup|ψ_{k+1} − ψ_k| per iteration.
    pub increment_history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub seed_residual: f64,
    pub final_residual: f64,
    /// ∫ rhs dσ removed by the last Poisson inverse.
    pub projected_mean: f64,
    pub linear_iterations: usize,
    pub aborted: Option<String>,
}

impl SolveReport {
    pub fn final_increment(&self) -> f64 {
        self.increment_history.last().copied().unwrap_or(f64::INFINITY)
    }

    /// Writes `iter,increment,residual`.
    pub fn write_history_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["iter", "increment", "residual"])?;
        for (k, (inc, res)) in self.increment_history.iter().zip(&self.residual_history).enumerate() {
            w.write_record(&[(k + 1).to_string(), format!("{inc:.17e}"), format!("{res:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Max norm; NaN anywhere gives NaN.
fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if m.is_nan() || x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Fixed-point map P(rhs(ψ)) and its removed mean.
fn fixed_point_map(plan: &SpectralPlan, nl: &Nonlinearity, psi: &[f64]) -> (Vec<f64>, f64) {
    let f = SphericalField {
        grid: nl.grid.clone(),
        values: nl.rhs(psi),
    };
    let (u, mean) = plan.poisson_inverse(&f);
    (u.values, mean)
}

/// Whether the history is non-increasing after the burn-in, ignoring
/// fluctuations below `floor`.
fn monotone_after_burn_in(h: &[f64], floor: f64) -> bool {
    h.windows(2)
        .skip(BURN_IN)
        .all(|w| w[1] <= w[0] || w[1] <= floor)
}

/// Solves the semilinear problem from `seed`. Stops when the increment drops
/// below `params.tol`; a run that exhausts `max_iter`, stalls in the line
/// search or shows DIVERGENCE_WINDOW consecutive residual increases returns
/// with `converged = false`.
pub fn fixed_point_solve(
    seed: &SphericalField,
    plan: &SpectralPlan,
    nl: &Nonlinearity,
    params: &SolveParams,
) -> Result<SolveReport> {
    if !(params.damping > 0.0 && params.damping <= 1.0) {
        return Err(Error::Config(format!("damping must lie in (0, 1], got {}", params.damping)));
    }
    if !Arc::ptr_eq(&seed.grid, &plan.grid) && *seed.grid != *plan.grid {
        return Err(Error::Config("seed and plan live on different grids".into()));
    }
    let seed_residual = pde_residual(plan, nl, seed);
    let floor = 10.0 * params.tol / (params.epsilon * params.epsilon);
    let mut psi = seed.values.clone();
    let mut residuals = Vec::new();
    let mut increments = Vec::new();
    let mut converged = false;
    let mut aborted = None;
    let mut linear = 0;
    let mut rises = 0;

    let (mut tpsi, mut mean) = fixed_point_map(plan, nl, &psi);
    let mut fres: Vec<f64> = psi.iter().zip(&tpsi).map(|(a, b)| a - b).collect();
    let mut fnorm = sup(&fres);
    let mut step = params.damping;

    for _k in 0..params.max_iter {
        let increment;
        match params.method {
            Method::Picard => {
                let a = params.damping;
                let mut inc = 0.0f64;
                for (p, t) in psi.iter_mut().zip(&tpsi) {
                    let next = (1.0 - a) * *p + a * t;
                    inc = inc.max((next - *p).abs());
                    *p = next;
                }
                increment = inc;
                (tpsi, mean) = fixed_point_map(plan, nl, &psi);
            }
            Method::NewtonKrylov => {
                let d = nl.rhs_derivative(&psi);
                let grid = nl.grid.clone();
                let apply = |v: &[f64]| -> Vec<f64> {
                    let f = SphericalField {
                        grid: grid.clone(),
                        values: v.iter().zip(&d).map(|(x, y)| x * y).collect(),
                    };
                    let (pu, _) = plan.poisson_inverse(&f);
                    v.iter().zip(&pu.values).map(|(x, y)| x - y).collect()
                };
                let b: Vec<f64> = fres.iter().map(|x| -x).collect();
                let scale = sup(&psi).max(1.0);
                let rtol = (fnorm / scale).clamp(1e-12, 1e-3);
                let out = match gmres(
                    apply,
                    &b,
                    GmresParams {
                        rtol,
                        restart: 40,
                        max_iter: 400,
                    },
                ) {
                    Ok(o) => o,
                    Err(e) => {
                        aborted = Some(format!("linear solve: {e}"));
                        break;
                    }
                };
                linear += out.iterations;
                let dsup = sup(&out.x);
                let mut lam = step;
                let accepted = loop {
                    let cand: Vec<f64> = psi.iter().zip(&out.x).map(|(p, x)| p + lam * x).collect();
                    let (tc, mc) = fixed_point_map(plan, nl, &cand);
                    let fc: Vec<f64> = cand.iter().zip(&tc).map(|(a, b)| a - b).collect();
                    let fcn = sup(&fc);
                    if fcn <= (1.0 - 1e-4 * lam) * fnorm || fcn <= 1e-14 * scale || dsup * lam < params.tol {
                        psi = cand;
                        tpsi = tc;
                        mean = mc;
                        break true;
                    }
                    lam *= 0.5;
                    if lam < 1e-6 {
                        break false;
                    }
                };
                if !accepted {
                    aborted = Some("line search stalled".into());
                    break;
                }
                increment = lam * dsup;
                step = (2.0 * lam).min(1.0);
            }
        }
        fres = psi.iter().zip(&tpsi).map(|(a, b)| a - b).collect();
        fnorm = sup(&fres);
        let field = SphericalField {
            grid: nl.grid.clone(),
            values: psi.clone(),
        };
        let res = pde_residual(plan, nl, &field);
        if let Some(&prev) = residuals.last() {
            if res > prev && res > floor {
                rises += 1;
            } else {
                rises = 0;
            }
        }
        residuals.push(res);
        increments.push(increment);
        if !increment.is_finite() || !res.is_finite() {
            aborted = Some("non-finite iterate".into());
            break;
        }
        if rises >= DIVERGENCE_WINDOW {
            aborted = Some(format!("residual grew over {DIVERGENCE_WINDOW} consecutive iterations"));
            break;
        }
        if increment < params.tol {
            converged = true;
            break;
        }
    }
    let converged = converged && monotone_after_burn_in(&residuals, floor);
    let final_residual = residuals.last().copied().unwrap_or(seed_residual);
    Ok(SolveReport {
        psi: SphericalField {
            grid: nl.grid.clone(),
            values: psi,
        },
        iterations: increments.len(),
        residual_history: residuals,
        increment_history: increments,
        converged,
        seed_residual,
        final_residual,
        projected_mean: mean,
        linear_iterations: linear,
        aborted,
    })
}

/// max |ψ(θ,φ) + ψ(π−θ,φ)| over the grid.
pub fn antisymmetry_defect(psi: &SphericalField) -> f64 {
    let g = &psi.grid;
    let nt = g.n_theta;
    (0..nt / 2)
        .map(|i| {
            psi.row(i)
                .iter()
                .zip(psi.row(nt - 1 - i))
                .fold(0.0f64, |m, (a, b)| m.max((a + b).abs()))
        })
        .fold(0.0, f64::max)
}

pub const PROFILE_ANGLES: usize = 32;
pub const PROFILE_RADII: usize = 64;
pub const PROFILE_EXTENT: f64 = 1.5;

#[derive(Debug, Clone, Serialize)]
pub struct ProfileSample {
    pub vortex: usize,
    pub xi: f64,
    pub r_over_s: f64,
    pub scaled_psi: f64,
    pub w_gamma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileComparison {
    pub vortex: usize,
    #[serde(skip)]
    pub samples: Vec<ProfileSample>,
    /// max over r ≤ s of |scaled ψ − w|, relative to w(0).
    pub stream_deviation: f64,
    /// max over r ≤ s of |(scaled ψ)₊^γ − w^γ|, relative to w(0)^γ.
    pub vorticity_deviation: f64,
}

/// Samples ±(ψ + W cosθ) − μ_l on tangent rays about vortex l, rescales it
/// to profile units and compares with the ground state. The vorticity form
/// ε²(s/ε)^{2γ/(γ−1)}ω equals (scaled ψ)₊^γ because ω is the right-hand side.
pub fn extract_profile(
    plan: &SpectralPlan,
    psi: &SphericalField,
    l: usize,
    ansatz: &Ansatz,
    nl: &Nonlinearity,
) -> Result<ProfileComparison> {
    let core = ansatz
        .cores
        .get(l)
        .ok_or_else(|| Error::Config(format!("no vortex with index {l}")))?;
    let sc = core.scale();
    let gs = &ansatz.ground_state;
    let gamma = gs.gamma;
    let (factor, stretch) = if gamma > 1.0 {
        ((sc.s / sc.epsilon).powf(2.0 / (gamma - 1.0)), sc.s)
    } else {
        (gs.mass_kappa / sc.kappa, sc.epsilon)
    };
    let coef = plan.analysis(psi);
    let c = core.center;
    let pts: Vec<(usize, usize)> = (0..PROFILE_ANGLES)
        .flat_map(|a| (0..PROFILE_RADII).map(move |k| (a, k)))
        .collect();
    let samples: Vec<ProfileSample> = pts
        .par_iter()
        .map(|&(a, k)| {
            let xi = 2.0 * std::f64::consts::PI * a as f64 / PROFILE_ANGLES as f64;
            let r = PROFILE_EXTENT * sc.s * k as f64 / (PROFILE_RADII - 1) as f64;
            let t = c.theta + r * xi.cos();
            let p = c.phi + r * xi.sin() / t.sin();
            let v = plan.eval_point(&coef, t, p);
            ProfileSample {
                vortex: l,
                xi,
                r_over_s: r / sc.s,
                scaled_psi: factor * nl.level(l, v, t.cos()),
                w_gamma: gs.eval(r / stretch),
            }
        })
        .collect();
    let w0 = gs.eval(0.0);
    let (mut ds, mut dv) = (0.0f64, 0.0f64);
    for s in samples.iter().filter(|s| s.r_over_s <= 1.0) {
        ds = ds.max((s.scaled_psi - s.w_gamma).abs() / w0);
        let om = s.scaled_psi.max(0.0).powf(gamma);
        dv = dv.max((om - s.w_gamma.max(0.0).powf(gamma)).abs() / w0.powf(gamma));
    }
    Ok(ProfileComparison {
        vortex: l,
        samples,
        stream_deviation: ds,
        vorticity_deviation: dv,
    })
}

/// Writes `vortex,r_over_s,scaled_psi,w_gamma`.
pub fn write_profile_csv(profiles: &[ProfileComparison], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["vortex", "r_over_s", "scaled_psi", "w_gamma"])?;
    for p in profiles {
        for s in &p.samples {
            w.write_record(&[
                s.vortex.to_string(),
                format!("{:.17e}", s.r_over_s),
                format!("{:.17e}", s.scaled_psi),
                format!("{:.17e}", s.w_gamma),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
