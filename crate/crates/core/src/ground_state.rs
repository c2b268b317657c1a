//! Radial ground states: −Δw = w₊^γ on the unit disk (γ > 1) and the first
//! Dirichlet eigenfunction with w(0) = 1 on B_τ (γ = 1).
//!
//! Both come from the parameter-free problem u″ + u′/r + u₊^γ = 0, u(0) = 1,
//! u′(0) = 0, integrated up to its first zero r₀.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{dopri5, Tolerance};
use crate::quadrature::gauss_legendre;

/// Start radius for the integration; below it the series is used.
pub const R_START: f64 = 1e-4;
/// Number of sample intervals on [0, r_support].
pub const SAMPLE_INTERVALS: usize = 4096;
const SCAN_STEP: f64 = 0.05;

/// u(r) = 1 − r²/4 + γr⁴/64 + O(r⁶) and its derivative.
fn series(gamma: f64, r: f64) -> [f64; 2] {
    let r2 = r * r;
    [1.0 - r2 / 4.0 + gamma * r2 * r2 / 64.0, -r / 2.0 + gamma * r2 * r / 16.0]
}

fn rhs(gamma: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    move |r, y| [y[1], -y[1] / r - y[0].max(0.0).powf(gamma)]
}

/// Unnormalized profile u sampled at `r0·k/N`, plus r₀.
#[derive(Debug, Clone)]
pub struct UnitProfile {
    pub gamma: f64,
    pub r0: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

/// Integrates the unnormalized problem and locates its first zero r₀ by
/// bisection to 1e−12.
pub fn solve_unit_profile(gamma: f64, tol: Tolerance) -> Result<UnitProfile> {
    if !(1.0..=10.0).contains(&gamma) {
        return Err(Error::Config(format!("gamma must lie in [1, 10], got {gamma}")));
    }
    let f = rhs(gamma);
    let mut h = 1e-3;
    let mut ra = R_START;
    let mut ya = series(gamma, R_START);
    let (mut rb, mut yb);
    loop {
        rb = ra + SCAN_STEP;
        yb = dopri5(&f, ra, ya, rb, tol, &mut h)?;
        if yb[0] <= 0.0 {
            break;
        }
        ra = rb;
        ya = yb;
        if ra > 100.0 {
            return Err(Error::Tolerance("no zero of the radial profile below r = 100".into()));
        }
    }
    // bisection, each probe integrated from the left end of the bracket
    let (mut lo, mut hi, mut ylo) = (ra, rb, ya);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let mut hm = h;
        let ym = dopri5(&f, lo, ylo, mid, tol, &mut hm)?;
        if ym[0] > 0.0 {
            lo = mid;
            ylo = ym;
        } else {
            hi = mid;
        }
    }
    let r0 = 0.5 * (lo + hi);

    let n = SAMPLE_INTERVALS;
    let mut r = Vec::with_capacity(n + 1);
    let mut u = Vec::with_capacity(n + 1);
    let mut du = Vec::with_capacity(n + 1);
    let mut cur_r = R_START;
    let mut cur = series(gamma, R_START);
    let mut h = 1e-3;
    for k in 0..=n {
        let rk = r0 * k as f64 / n as f64;
        let y = if rk <= R_START {
            series(gamma, rk)
        } else {
            cur = dopri5(&f, cur_r, cur, rk, tol, &mut h)?;
            cur_r = rk;
            cur
        };
        r.push(rk);
        u.push(y[0]);
        du.push(y[1]);
    }
    u[n] = 0.0;
    Ok(UnitProfile {
        gamma,
        r0,
        r,
        u,
        du,
    })
}

/// Radial profile on its support with boundary and mass data.
#[derive(Debug, Clone, Serialize)]
pub struct GroundState {
    pub gamma: f64,
    /// 1 for γ > 1, τ for γ = 1.
    pub r_support: f64,
    /// |w′(r_support)|.
    pub d_boundary: f64,
    /// ∫ w₊^γ dy over the plane; for γ = 1 the constant κ = ∫ (w₁)₊ dy.
    pub mass_kappa: f64,
    /// Same mass by Gauss–Legendre quadrature of the interpolant.
    pub mass_quadrature: f64,
    /// First zero of the unnormalized profile.
    pub unit_zero: f64,
    #[serde(skip)]
    pub r: Vec<f64>,
    #[serde(skip)]
    pub w: Vec<f64>,
    #[serde(skip)]
    pub dw: Vec<f64>,
}

impl GroundState {
    pub fn new(gamma: f64) -> Result<Self> {
        Self::with_tolerance(gamma, Tolerance::default())
    }

    pub fn with_tolerance(gamma: f64, tol: Tolerance) -> Result<Self> {
        let up = solve_unit_profile(gamma, tol)?;
        let n = up.r.len() - 1;
        let (r_support, a, b) = if gamma > 1.0 {
            // w(y) = r₀^{2/(γ−1)} u(r₀|y|)
            let a = up.r0.powf(2.0 / (gamma - 1.0));
            (1.0, a, a * up.r0)
        } else {
            (up.r0, 1.0, 1.0)
        };
        let r: Vec<f64> = (0..=n).map(|k| r_support * k as f64 / n as f64).collect();
        let w: Vec<f64> = up.u.iter().map(|v| a * v).collect();
        let dw: Vec<f64> = up.du.iter().map(|v| b * v).collect();
        let d_boundary = dw[n].abs();
        let mut gs = Self {
            gamma,
            r_support,
            d_boundary,
            mass_kappa: 2.0 * PI * r_support * d_boundary,
            mass_quadrature: 0.0,
            unit_zero: up.r0,
            r,
            w,
            dw,
        };
        gs.mass_quadrature = gs.quadrature_mass();
        let rel = (gs.mass_quadrature - gs.mass_kappa).abs() / gs.mass_kappa;
        if rel > 1e-7 {
            return Err(Error::Tolerance(format!(
                "mass by quadrature {} and by boundary flux {} differ by {rel:e}",
                gs.mass_quadrature, gs.mass_kappa
            )));
        }
        Ok(gs)
    }

    /// w(r), cubic Hermite between samples, 0 beyond the support.
    pub fn eval(&self, r: f64) -> f64 {
        self.hermite(r).0
    }

    /// w′(r), derivative of the same interpolant.
    pub fn eval_deriv(&self, r: f64) -> f64 {
        self.hermite(r).1
    }

    fn hermite(&self, r: f64) -> (f64, f64) {
        let r = r.abs();
        if r >= self.r_support {
            return (0.0, 0.0);
        }
        let n = self.r.len() - 1;
        let h = self.r_support / n as f64;
        let x = r / h;
        let k = (x.floor() as usize).min(n - 1);
        let t = x - k as f64;
        let (y0, y1) = (self.w[k], self.w[k + 1]);
        let (d0, d1) = (self.dw[k] * h, self.dw[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1;
        let dv = (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * d1;
        (v, dv / h)
    }

    /// 2π ∫₀^{r_s} w₊^γ r dr, 4-point Gauss on each sample interval.
    fn quadrature_mass(&self) -> f64 {
        let (x, wt) = gauss_legendre(4);
        let n = self.r.len() - 1;
        let h = self.r_support / n as f64;
        let mut sum = 0.0;
        for k in 0..n {
            let mut s = 0.0;
            for (xi, wi) in x.iter().zip(&wt) {
                let r = (k as f64 + 0.5 * (xi + 1.0)) * h;
                s += wi * self.eval(r).max(0.0).powf(self.gamma) * r;
            }
            sum += 0.5 * h * s;
        }
        2.0 * PI * sum
    }

    /// Writes `r,w`.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["r", "w"])?;
        for (r, w) in self.r.iter().zip(&self.w) {
            wtr.write_record(&[format!("{r:.17e}"), format!("{w:.17e}")])?;
        }
        wtr.flush()?;
        Ok(())
    }
}
