//! ε-dependent construction around a critical point of K: core scales,
//! flux constants, the smoothed singular part V, the regular part R, the
//! assembled stream function Ψ, level-set boundaries and measure diagnostics.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ground_state::GroundState;
use crate::kernel::{g_raw, grad_g_raw, h_raw, DEFAULT_CAP, H_DIAGONAL};
use crate::quadrature::gauss_legendre_interval;
use crate::sphere::{wrap_angle, LatLonGrid, SphericalField, SpherePoint};
use crate::vortex::{kr_gradient, norm, Sign, VortexSystem};

/// Polar nodes per direction for core integrals.
pub const CORE_NODES: usize = 64;
/// Coarser rule used for ∫ G ω outside the H cap.
pub const FAR_NODES: usize = 16;
/// Number of boundary samples per vortex.
pub const BOUNDARY_SAMPLES: usize = 256;

/// Core radius s and boundary slope β for one vortex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleSolution {
    pub epsilon: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub s: f64,
    pub beta: f64,
    /// Core circulation over κ: |lnε|/|ln s| for γ > 1, exactly 1 for γ = 1.
    pub circulation_factor: f64,
}

impl ScaleSolution {
    /// (ε/s)^{2/(γ−1)} for γ > 1, κ/κ_mass for γ = 1: the factor in front of
    /// the profile inside the core.
    pub fn amplitude(&self, gs: &GroundState) -> f64 {
        if self.gamma > 1.0 {
            (self.epsilon / self.s).powf(2.0 / (self.gamma - 1.0))
        } else {
            self.kappa / gs.mass_kappa
        }
    }

    /// Relative residuals of s·β = (ε/s)^p d and (ε/s)^p d = (κ/2π)|lnε|/|ln s|
    /// (γ > 1); zero for γ = 1 where s = τε by definition.
    pub fn identity_residuals(&self, gs: &GroundState) -> (f64, f64) {
        if self.gamma == 1.0 {
            return (0.0, 0.0);
        }
        let lhs = self.amplitude(gs) * gs.d_boundary;
        let rhs = self.kappa / (2.0 * PI) * self.epsilon.ln().abs() / self.s.ln().abs();
        (
            (self.s * self.beta - lhs).abs() / lhs,
            (lhs - rhs).abs() / rhs,
        )
    }
}

/// Solves (ε/s)^{2/(γ−1)}·d = (κ/2π)|lnε|/|ln s| for s ∈ [ε^{3/2}, ε^{1/2}]
/// (γ > 1), or s = τε (γ = 1).
pub fn solve_scales(epsilon: f64, kappa: f64, gs: &GroundState) -> Result<ScaleSolution> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::Config(format!("epsilon must lie in (0, 0.5], got {epsilon}")));
    }
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::Config(format!("kappa must be positive, got {kappa}")));
    }
    let gamma = gs.gamma;
    if gamma == 1.0 {
        let s = gs.r_support * epsilon;
        return Ok(ScaleSolution {
            epsilon,
            kappa,
            gamma,
            s,
            beta: kappa / gs.mass_kappa * gs.d_boundary / epsilon,
            circulation_factor: 1.0,
        });
    }
    let p = 2.0 / (gamma - 1.0);
    let le = epsilon.ln().abs();
    let f = |s: f64| (epsilon / s).powf(p) * gs.d_boundary - kappa / (2.0 * PI) * le / s.ln().abs();
    let (mut lo, mut hi) = (epsilon.powf(1.5), epsilon.sqrt());
    if hi >= 1.0 {
        hi = 1.0 - 1e-12;
    }
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::Bracket(format!(
            "scale relation has no root in [{lo:e}, {hi:e}] for epsilon={epsilon}, kappa={kappa}: \
             epsilon is outside the asymptotic regime"
        )));
    }
    // F decreases in s
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let s = 0.5 * (lo + hi);
    let amp = (epsilon / s).powf(p);
    Ok(ScaleSolution {
        epsilon,
        kappa,
        gamma,
        s,
        beta: amp * gs.d_boundary / s,
        circulation_factor: le / s.ln().abs(),
    })
}

/// |A(z − z₀)| = √(Δθ² + sin²θ_z·Δφ²), the chart radius from a center.
#[inline]
pub fn chart_radius(center: &SpherePoint, t: f64, p: f64) -> f64 {
    let a = t - center.theta;
    let b = wrap_angle(p - center.phi);
    let s = t.sin();
    (a * a + s * s * b * b).sqrt()
}

/// Smoothed singular part of one vortex as a function of chart radius.
#[derive(Debug, Clone)]
pub struct CoreProfile {
    pub scale: ScaleSolution,
    gs: Arc<GroundState>,
    amp: f64,
}

impl CoreProfile {
    pub fn new(scale: ScaleSolution, gs: Arc<GroundState>) -> Self {
        let amp = scale.amplitude(&gs);
        Self { scale, gs, amp }
    }

    fn offset(&self) -> f64 {
        self.scale.kappa / (2.0 * PI) * (1.0 / self.scale.epsilon).ln()
    }

    /// Argument of the ground-state profile at radius r.
    fn profile_arg(&self, r: f64) -> f64 {
        if self.scale.gamma > 1.0 {
            r / self.scale.s
        } else {
            r / self.scale.epsilon
        }
    }

    /// V(r): inner core branch for r ≤ s, logarithmic tail beyond.
    pub fn value(&self, r: f64) -> f64 {
        let sc = &self.scale;
        if r <= sc.s {
            return self.offset() + self.amp * self.gs.eval(self.profile_arg(r));
        }
        let r = r.max(f64::MIN_POSITIVE);
        if sc.gamma > 1.0 {
            sc.kappa / (2.0 * PI) * sc.circulation_factor * (1.0 / r).ln()
        } else {
            sc.kappa / (2.0 * PI) * (self.gs.r_support / r).ln()
        }
    }

    /// dV/dr.
    pub fn derivative(&self, r: f64) -> f64 {
        let sc = &self.scale;
        if r <= sc.s {
            let stretch = if sc.gamma > 1.0 { sc.s } else { sc.epsilon };
            return self.amp * self.gs.eval_deriv(self.profile_arg(r)) / stretch;
        }
        -sc.kappa / (2.0 * PI) * sc.circulation_factor / r
    }

    /// ω at radius r: (1/ε²)(V − (κ/2π)ln(1/ε))₊^γ.
    pub fn vorticity(&self, r: f64) -> f64 {
        if r >= self.scale.s {
            return 0.0;
        }
        let e2 = self.scale.epsilon * self.scale.epsilon;
        (self.amp * self.gs.eval(self.profile_arg(r))).max(0.0).powf(self.scale.gamma) / e2
    }
}

/// Tangent-polar nodes on the chart disk of radius `radius` about `center`:
/// Δθ = ρcosξ, Δφ = ρ sinξ / sin(θ₀ + ρcosξ), for which dσ = ρ dρ dξ
/// exactly and the chart radius of each node is ρ.
pub fn polar_nodes(center: &SpherePoint, radius: f64, n_rho: usize, n_xi: usize) -> Vec<PolarNode> {
    let (rho, wr) = gauss_legendre_interval(n_rho, 0.0, radius);
    let dxi = 2.0 * PI / n_xi as f64;
    let mut out = Vec::with_capacity(n_rho * n_xi);
    for (r, w) in rho.iter().zip(&wr) {
        for j in 0..n_xi {
            let (sx, cx) = ((j as f64 + 0.5) * dxi).sin_cos();
            let t = center.theta + r * cx;
            out.push(PolarNode {
                theta: t,
                phi: center.phi + r * sx / t.sin(),
                rho: *r,
                area: r * w * dxi,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct PolarNode {
    pub theta: f64,
    pub phi: f64,
    pub rho: f64,
    pub area: f64,
}

/// Node with its vorticity mass ω·dσ folded in.
#[derive(Debug, Clone, Copy)]
struct MassNode {
    theta: f64,
    phi: f64,
    mass: f64,
}

fn mass_nodes(center: &SpherePoint, profile: &CoreProfile, n: usize) -> Vec<MassNode> {
    polar_nodes(center, profile.scale.s, n, n)
        .into_iter()
        .map(|q| MassNode {
            theta: q.theta,
            phi: q.phi,
            mass: profile.vorticity(q.rho) * q.area,
        })
        .collect()
}

/// One desingularized vortex.
#[derive(Debug, Clone)]
pub struct Core {
    pub center: SpherePoint,
    pub sign: Sign,
    pub profile: CoreProfile,
    nodes: Vec<MassNode>,
    far_nodes: Vec<MassNode>,
    /// Gauss–Legendre rule on [0, 1] for rays cast from interior points.
    ray_rule: (Vec<f64>, Vec<f64>),
}

impl Core {
    pub fn sign_value(&self) -> f64 {
        self.sign.value()
    }

    pub fn scale(&self) -> &ScaleSolution {
        &self.profile.scale
    }

    /// V at a point.
    pub fn v(&self, t: f64, p: f64) -> f64 {
        self.profile.value(chart_radius(&self.center, t, p))
    }

    /// R(z) = ∫ H(z, z′) ω(z′) dσ′ over the core, without the cap check.
    fn r_unchecked(&self, t: f64, p: f64) -> f64 {
        if chart_radius(&self.center, t, p) < self.profile.scale.s {
            return self.r_interior(t, p);
        }
        self.nodes.iter().map(|q| q.mass * h_raw(t, p, q.theta, q.phi)).sum()
    }

    /// R at a point inside the core. H(z, ·) has a conical kink at z, so the
    /// rule is polar about z itself, with each ray cut at the core edge.
    fn r_interior(&self, t: f64, p: f64) -> f64 {
        let s = self.profile.scale.s;
        let (x, w) = &self.ray_rule;
        let n_xi = x.len();
        let dxi = 2.0 * PI / n_xi as f64;
        let node = |rho: f64, sx: f64, cx: f64| {
            let tt = t + rho * cx;
            (tt, p + rho * sx / tt.sin())
        };
        let mut total = 0.0;
        for j in 0..n_xi {
            let (sx, cx) = ((j as f64 + 0.5) * dxi).sin_cos();
            // edge of the core: (d_t + ρcosξ)² + (S d_φ + ρ sinξ)² = s² with
            // S = sin(t + ρcosξ), iterated on S
            let (dt, dp) = (t - self.center.theta, wrap_angle(p - self.center.phi));
            let mut rmax = 0.0;
            for _ in 0..8 {
                let sn = (t + rmax * cx).sin();
                let b = dt * cx + sn * dp * sx;
                let c = dt * dt + sn * sn * dp * dp - s * s;
                rmax = -b + (b * b - c).max(0.0).sqrt();
            }
            for (xk, wk) in x.iter().zip(w) {
                let rho = rmax * xk;
                let (a, b) = node(rho, sx, cx);
                let om = self.profile.vorticity(chart_radius(&self.center, a, b));
                total += om * rho * rmax * wk * dxi * h_raw(t, p, a, b);
            }
        }
        total
    }

    /// ∫ G(z, z′) ω(z′) dσ′ with the coarse rule.
    fn far(&self, t: f64, p: f64) -> f64 {
        self.far_nodes.iter().map(|q| q.mass * g_raw(t, p, q.theta, q.phi)).sum()
    }

    fn in_cap(&self, t: f64, p: f64) -> bool {
        SpherePoint { theta: t, phi: p }.geodesic(&self.center) <= DEFAULT_CAP
    }

    /// Unsigned contribution V + R inside the cap, ∫Gω outside.
    fn unsigned_psi(&self, t: f64, p: f64) -> f64 {
        if self.in_cap(t, p) {
            self.v(t, p) + self.r_unchecked(t, p)
        } else {
            self.far(t, p)
        }
    }
}

/// The ansatz at a critical point of K for a fixed ε.
#[derive(Debug, Clone)]
pub struct Ansatz {
    pub system: VortexSystem,
    pub epsilon: f64,
    pub gamma: f64,
    pub ground_state: Arc<GroundState>,
    pub cores: Vec<Core>,
    /// Flux constants μ_l, one per vortex.
    pub mu: Vec<f64>,
    /// W̃ in the level function ±(ψ + W̃ cosθ) − μ.
    pub level_speed: f64,
    /// Largest stagnation residual left by the single-speed fit.
    pub stagnation_residual: f64,
}

/// Speed W̃ for which each core center is a stagnation point of ψ + W̃cosθ,
/// with ψ carrying the effective circulations κ_l·f_l. Least squares over
/// the θ components; returns (W̃, max residual over all components).
pub fn level_speed(sys: &VortexSystem, factors: &[f64]) -> (f64, f64) {
    let n = sys.len();
    let mut a = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut b = vec![0.0; n];
    for (l, v) in sys.vortices.iter().enumerate() {
        for (m, u) in sys.vortices.iter().enumerate() {
            if m == l {
                continue;
            }
            let (dt, dp) = grad_g_raw(v.pos.theta, v.pos.phi, u.pos.theta, u.pos.phi);
            let gm = u.strength() * factors[m];
            a[l] += gm * dt;
            c[l] += gm * dp;
        }
        b[l] = v.pos.theta.sin();
    }
    let we = -a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / b.iter().map(|y| y * y).sum::<f64>();
    let mut res = 0.0f64;
    for l in 0..n {
        res = res.max((a[l] + we * b[l]).abs()).max(c[l].abs());
    }
    (-we, res)
}

/// μ_l = (κ_l/2π)ln(1/ε) + Σ_{n≠l} (±)κ_n f_n G(z_l, z_n) + κ_l f_l H(z_l, z_l)
/// ± W̃ cosθ_l, where (±) is + for like signs and − for opposite ones and the
/// last sign is that of vortex l. This is the value of ±(Ψ + W̃cosθ) on the
/// boundary of core l to leading order.
pub fn flux_constants(sys: &VortexSystem, scales: &[ScaleSolution], w_level: f64) -> Vec<f64> {
    let mut mu = Vec::with_capacity(sys.len());
    for (l, v) in sys.vortices.iter().enumerate() {
        let sl = v.sign.value();
        let sc = &scales[l];
        let mut m = v.kappa / (2.0 * PI) * (1.0 / sc.epsilon).ln();
        for (n, u) in sys.vortices.iter().enumerate() {
            if n == l {
                continue;
            }
            let like = sl * u.sign.value();
            m += like * u.kappa * scales[n].circulation_factor
                * g_raw(v.pos.theta, v.pos.phi, u.pos.theta, u.pos.phi);
        }
        m += v.kappa * sc.circulation_factor * H_DIAGONAL;
        m += sl * w_level * v.pos.theta.cos();
        mu.push(m);
    }
    mu
}

impl Ansatz {
    pub fn construct(sys: &VortexSystem, epsilon: f64, gs: Arc<GroundState>) -> Result<Self> {
        Self::with_nodes(sys, epsilon, gs, CORE_NODES)
    }

    /// As [`construct`](Self::construct) with an n×n polar rule per core.
    pub fn with_nodes(sys: &VortexSystem, epsilon: f64, gs: Arc<GroundState>, n: usize) -> Result<Self> {
        let gn = norm(&kr_gradient(sys)?);
        if gn >= 1e-8 {
            return Err(Error::Precondition(format!(
                "ansatz needs a critical point of K, gradient norm is {gn:e}"
            )));
        }
        let scales = sys
            .vortices
            .iter()
            .map(|v| solve_scales(epsilon, v.kappa, &gs))
            .collect::<Result<Vec<_>>>()?;
        for (l, v) in sys.vortices.iter().enumerate() {
            for (m, u) in sys.vortices.iter().enumerate().skip(l + 1) {
                let d = v.pos.geodesic(&u.pos);
                if d <= 2.0 * (scales[l].s + scales[m].s) {
                    return Err(Error::Inconsistent(format!(
                        "cores {l} and {m} overlap at epsilon={epsilon}"
                    )));
                }
            }
        }
        let factors: Vec<f64> = scales.iter().map(|s| s.circulation_factor).collect();
        let (w_level, stag) = level_speed(sys, &factors);
        let mu = flux_constants(sys, &scales, w_level);
        let cores = sys
            .vortices
            .iter()
            .zip(&scales)
            .map(|(v, sc)| {
                let profile = CoreProfile::new(*sc, gs.clone());
                Core {
                    center: v.pos,
                    sign: v.sign,
                    nodes: mass_nodes(&v.pos, &profile, n),
                    far_nodes: mass_nodes(&v.pos, &profile, FAR_NODES),
                    ray_rule: gauss_legendre_interval(n, 0.0, 1.0),
                    profile,
                }
            })
            .collect();
        Ok(Self {
            system: sys.clone(),
            epsilon,
            gamma: gs.gamma,
            ground_state: gs,
            cores,
            mu,
            level_speed: w_level,
            stagnation_residual: stag,
        })
    }

    /// Regular part R_l(z); errors outside the H cap of vortex l.
    pub fn regular_part(&self, l: usize, z: &SpherePoint) -> Result<f64> {
        let c = &self.cores[l];
        let d = z.geodesic(&c.center);
        if d > DEFAULT_CAP {
            return Err(Error::OutOfCap {
                separation: d,
                cap: DEFAULT_CAP,
            });
        }
        Ok(c.r_unchecked(z.theta, z.phi))
    }

    pub fn singular_part(&self, l: usize, z: &SpherePoint) -> f64 {
        self.cores[l].v(z.theta, z.phi)
    }

    /// Ψ(z) = Σ ±(V_l + R_l), each term replaced by ∫Gω_l outside its cap.
    pub fn psi_at(&self, t: f64, p: f64) -> f64 {
        self.cores.iter().map(|c| c.sign_value() * c.unsigned_psi(t, p)).sum()
    }

    pub fn psi(&self, z: &SpherePoint) -> f64 {
        self.psi_at(z.theta, z.phi)
    }

    /// ±(Ψ + W̃cosθ) − μ_l, positive inside core l.
    pub fn level(&self, l: usize, t: f64, p: f64) -> f64 {
        let c = &self.cores[l];
        c.sign_value() * (self.psi_at(t, p) + self.level_speed * t.cos()) - self.mu[l]
    }

    /// Ansatz vorticity Σ ±(1/ε²)(V_l − (κ_l/2π)ln(1/ε))₊^γ.
    pub fn vorticity_at(&self, t: f64, p: f64) -> f64 {
        self.cores
            .iter()
            .map(|c| c.sign_value() * c.profile.vorticity(chart_radius(&c.center, t, p)))
            .sum()
    }

    pub fn psi_field(&self, grid: Arc<LatLonGrid>) -> SphericalField {
        SphericalField::from_fn(grid, |t, p| self.psi_at(t, p))
    }

    pub fn vorticity_field(&self, grid: Arc<LatLonGrid>) -> SphericalField {
        SphericalField::from_fn(grid, |t, p| self.vorticity_at(t, p))
    }

    /// ∫ ω_l dσ by the core quadrature.
    pub fn core_circulation(&self, l: usize) -> f64 {
        self.cores[l].nodes.iter().map(|q| q.mass).sum()
    }

    /// κ_l|lnε|/|ln s_l| (γ > 1) or κ_l (γ = 1).
    pub fn core_circulation_exact(&self, l: usize) -> f64 {
        let sc = self.cores[l].scale();
        sc.kappa * sc.circulation_factor
    }

    /// |∫ω f dσ − Σ ±κ_l f(z_l)|.
    pub fn weak_convergence_error<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let mut total = 0.0;
        for c in &self.cores {
            let integral: f64 = c.nodes.iter().map(|q| q.mass * f(q.theta, q.phi)).sum();
            total += c.sign_value() * (integral - c.scale().kappa * f(c.center.theta, c.center.phi));
        }
        total.abs()
    }

    /// Level-set boundary of every core on [`BOUNDARY_SAMPLES`] rays.
    pub fn boundary_curves(&self) -> Result<Vec<BoundaryCurve>> {
        (0..self.cores.len()).map(|l| self.boundary_curve(l, BOUNDARY_SAMPLES)).collect()
    }

    /// Boundary of core l: along each tangent ray (cosξ, sinξ) from the
    /// center, the first radius where the level function changes sign.
    pub fn boundary_curve(&self, l: usize, samples: usize) -> Result<BoundaryCurve> {
        let c = &self.cores[l];
        let s = c.scale().s;
        let st = c.center.theta.sin();
        let xi: Vec<f64> = (0..samples).map(|k| 2.0 * PI * k as f64 / samples as f64).collect();
        let radii: Vec<Result<f64>> = xi
            .par_iter()
            .map(|&x| {
                let (sx, cx) = x.sin_cos();
                let g = |r: f64| self.level(l, c.center.theta + r * cx, c.center.phi + r * sx / st);
                if g(0.0) <= 0.0 {
                    return Err(Error::Inconsistent(format!("vortex {l}: center is outside its own level set")));
                }
                let mut lo = 0.0;
                let mut glo = g(0.0);
                let steps = 48;
                for k in 1..=steps {
                    let hi = 3.0 * s * k as f64 / steps as f64;
                    let ghi = g(hi);
                    if ghi <= 0.0 {
                        return Ok(illinois(&g, lo, glo, hi, ghi, 1e-13 * s));
                    }
                    lo = hi;
                    glo = ghi;
                }
                Err(Error::Inconsistent(format!(
                    "vortex {l}: level set not found within 3s along xi={x}"
                )))
            })
            .collect();
        let r_measured = radii.into_iter().collect::<Result<Vec<_>>>()?;
        let curvature = polar_curvature(&r_measured);
        let max_deviation = r_measured.iter().fold(0.0f64, |m, r| m.max((r - s).abs()));
        Ok(BoundaryCurve {
            vortex: l,
            center: c.center,
            xi,
            r_measured,
            r_predicted: s,
            curvature,
            max_deviation,
        })
    }

    /// Largest level-set radius over all cores, in units of s.
    pub fn max_boundary_radius_over_s(&self, curves: &[BoundaryCurve]) -> f64 {
        curves
            .iter()
            .map(|c| c.r_measured.iter().fold(0.0f64, |m, r| m.max(*r)) / c.r_predicted)
            .fold(0.0, f64::max)
    }
}

/// Regula falsi with the Illinois modification on a bracket g(lo) > 0 ≥ g(hi).
fn illinois<G: Fn(f64) -> f64>(g: &G, mut lo: f64, mut glo: f64, mut hi: f64, mut ghi: f64, tol: f64) -> f64 {
    let mut side = 0;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mut x = (lo * ghi - hi * glo) / (ghi - glo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let gx = g(x);
        if gx > 0.0 {
            lo = x;
            glo = gx;
            if side == 1 {
                ghi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            ghi = gx;
            if side == -1 {
                glo *= 0.5;
            }
            side = -1;
        }
        if gx == 0.0 {
            return x;
        }
    }
    0.5 * (lo + hi)
}

/// Curvature of the polar curve r(ξ) from spectral derivatives:
/// (r² + 2r′² − r r″)/(r² + r′²)^{3/2}.
pub fn polar_curvature(r: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut spec: Vec<Complex64> = r.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut spec);
    let wave = |m: usize| -> f64 {
        if 2 * m == n {
            0.0
        } else if m < n / 2 + 1 {
            m as f64
        } else {
            m as f64 - n as f64
        }
    };
    let mut d1: Vec<Complex64> = spec
        .iter()
        .enumerate()
        .map(|(m, c)| c * Complex64::new(0.0, wave(m)))
        .collect();
    let mut d2: Vec<Complex64> = spec
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let k = if 2 * m == n { (n / 2) as f64 } else { wave(m) };
            c * (-k * k)
        })
        .collect();
    inv.process(&mut d1);
    inv.process(&mut d2);
    (0..n)
        .map(|k| {
            let (r0, r1, r2) = (r[k], d1[k].re / n as f64, d2[k].re / n as f64);
            (r0 * r0 + 2.0 * r1 * r1 - r0 * r2) / (r0 * r0 + r1 * r1).powf(1.5)
        })
        .collect()
}

/// Measured boundary of one core in tangent coordinates about its center.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryCurve {
    pub vortex: usize,
    pub center: SpherePoint,
    pub xi: Vec<f64>,
    /// Radius along (cosξ, sinξ) in (Δθ, sinθ₀Δφ) coordinates.
    pub r_measured: Vec<f64>,
    /// Leading-order radius s.
    pub r_predicted: f64,
    pub curvature: Vec<f64>,
    pub max_deviation: f64,
}

impl BoundaryCurve {
    pub fn mean_radius(&self) -> f64 {
        self.r_measured.iter().sum::<f64>() / self.r_measured.len() as f64
    }

    pub fn is_convex(&self) -> bool {
        self.curvature.iter().all(|&k| k > 0.0)
    }
}

/// Writes `vortex,xi,r_measured,r_predicted`.
pub fn write_boundary_csv(curves: &[BoundaryCurve], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["vortex", "xi", "r_measured", "r_predicted"])?;
    for c in curves {
        for (x, r) in c.xi.iter().zip(&c.r_measured) {
            w.write_record(&[
                c.vortex.to_string(),
                format!("{x:.17e}"),
                format!("{r:.17e}"),
                format!("{:.17e}", c.r_predicted),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
