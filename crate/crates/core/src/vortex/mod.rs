//! Signed point vortices, the Kirchhoff–Routh function and its gradient.

mod critical;
mod dynamics;

pub use critical::{find_critical, reduced_hessian, CriticalPointReport, Pins, ReducedHessian};
pub use dynamics::{
    eom_rhs, integrate, interaction_energy, moment, rotating_frame_transfer, Frame,
    RotatingFrame, Trajectory, TrajectorySample, DRIFT_SIGN,
};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{grad_g_raw, grad_h_raw, h_raw, g_raw};
use crate::sphere::{chord_argument_raw, SpherePoint};

/// Minimum chart separation for energy evaluation.
pub const MIN_SEPARATION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedVortex {
    pub kappa: f64,
    pub sign: Sign,
    pub pos: SpherePoint,
}

impl SignedVortex {
    pub fn new(kappa: f64, sign: Sign, pos: SpherePoint) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::Config(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self { kappa, sign, pos })
    }

    /// Signed strength Γ = ±κ.
    pub fn strength(&self) -> f64 {
        self.sign.value() * self.kappa
    }
}

/// Signed vortices, positives first, with traveling speed `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct VortexSystem {
    pub vortices: Vec<SignedVortex>,
    pub w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VortexJson {
    kappa: f64,
    sign: Sign,
    theta: f64,
    phi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SystemJson {
    vortices: Vec<VortexJson>,
    #[serde(rename = "W")]
    w: f64,
}

impl VortexSystem {
    /// Validated constructor: positives before negatives, Gauss constraint
    /// Σκ⁺ = Σκ⁻ to 1e−12 (relative to the total).
    pub fn new(vortices: Vec<SignedVortex>, w: f64) -> Result<Self> {
        let sys = Self::unconstrained(vortices, w)?;
        let first_neg = sys
            .vortices
            .iter()
            .position(|v| v.sign == Sign::Negative)
            .unwrap_or(sys.vortices.len());
        if sys.vortices[first_neg..].iter().any(|v| v.sign == Sign::Positive) {
            return Err(Error::Config("positive vortices must precede negative ones".into()));
        }
        let d = sys.gauss_defect();
        let scale: f64 = sys.vortices.iter().map(|v| v.kappa).sum();
        if d.abs() > 1e-12 * scale.max(1.0) {
            return Err(Error::Config(format!("Gauss constraint violated by {d:e}")));
        }
        Ok(sys)
    }

    /// Constructor without the ordering and Gauss checks, for free dynamics.
    pub fn unconstrained(vortices: Vec<SignedVortex>, w: f64) -> Result<Self> {
        if vortices.is_empty() {
            return Err(Error::Config("empty vortex system".into()));
        }
        if !w.is_finite() {
            return Err(Error::Config("W must be finite".into()));
        }
        for v in &vortices {
            SignedVortex::new(v.kappa, v.sign, v.pos)?;
        }
        Ok(Self { vortices, w })
    }

    /// The mirror-symmetric traveling dipole ±κ at (θ₀, φ₀), (π−θ₀, φ₀)
    /// with the speed that makes it critical.
    pub fn dipole(kappa: f64, theta0: f64, phi0: f64) -> Result<Self> {
        let w = kappa / (4.0 * std::f64::consts::PI * theta0.cos());
        Self::new(
            vec![
                SignedVortex::new(kappa, Sign::Positive, SpherePoint::new(theta0, phi0)?)?,
                SignedVortex::new(
                    kappa,
                    Sign::Negative,
                    SpherePoint::new(std::f64::consts::PI - theta0, phi0)?,
                )?,
            ],
            w,
        )
    }

    pub fn len(&self) -> usize {
        self.vortices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vortices.is_empty()
    }

    /// Σκ⁺ − Σκ⁻.
    pub fn gauss_defect(&self) -> f64 {
        self.vortices.iter().map(|v| v.strength()).sum()
    }

    pub fn strengths(&self) -> Vec<f64> {
        self.vortices.iter().map(|v| v.strength()).collect()
    }

    /// Coordinates (θ₀, φ₀, θ₁, φ₁, …).
    pub fn coords(&self) -> Vec<f64> {
        self.vortices
            .iter()
            .flat_map(|v| [v.pos.theta, v.pos.phi])
            .collect()
    }

    /// Same strengths and W, new coordinates. φ is reduced, θ validated.
    pub fn with_coords(&self, x: &[f64]) -> Result<Self> {
        let mut out = self.clone();
        for (l, v) in out.vortices.iter_mut().enumerate() {
            v.pos = SpherePoint::new(x[2 * l], x[2 * l + 1])?;
        }
        Ok(out)
    }

    pub fn with_w(&self, w: f64) -> Self {
        Self {
            vortices: self.vortices.clone(),
            w,
        }
    }

    /// Smallest pairwise chart separation, measured by √(2·chord argument).
    pub fn min_separation(&self) -> f64 {
        let mut m = f64::INFINITY;
        for (i, a) in self.vortices.iter().enumerate() {
            for b in &self.vortices[i + 1..] {
                let c = chord_argument_raw(a.pos.theta, a.pos.phi, b.pos.theta, b.pos.phi);
                m = m.min((2.0 * c).sqrt());
            }
        }
        m
    }

    pub(crate) fn check_separation(&self) -> Result<()> {
        let m = self.min_separation();
        if m <= MIN_SEPARATION {
            return Err(Error::Singular(m));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: SystemJson =
            serde_json::from_str(s).map_err(|e| Error::Config(format!("vortex system JSON: {e}")))?;
        let mut vs = Vec::with_capacity(raw.vortices.len());
        for v in raw.vortices {
            vs.push(SignedVortex::new(v.kappa, v.sign, SpherePoint::new(v.theta, v.phi)?)?);
        }
        Self::new(vs, raw.w)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let raw = SystemJson {
            vortices: self
                .vortices
                .iter()
                .map(|v| VortexJson {
                    kappa: v.kappa,
                    sign: v.sign,
                    theta: v.pos.theta,
                    phi: v.pos.phi,
                })
                .collect(),
            w: self.w,
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }
}

/// K = ½Σ_{l≠n}Γ_lΓ_n G(z_l,z_n) + ½ΣΓ_l² H(z_l,z_l) − WΣΓ_l cosθ_l.
pub fn kr_energy(sys: &VortexSystem) -> Result<f64> {
    sys.check_separation()?;
    let mut pair = 0.0;
    let mut selfh = 0.0;
    let mut wterm = 0.0;
    for (l, a) in sys.vortices.iter().enumerate() {
        let ga = a.strength();
        for b in &sys.vortices[l + 1..] {
            pair += ga * b.strength() * g_raw(a.pos.theta, a.pos.phi, b.pos.theta, b.pos.phi);
        }
        selfh += 0.5 * ga * ga * h_raw(a.pos.theta, a.pos.phi, a.pos.theta, a.pos.phi);
        wterm += ga * a.pos.theta.cos();
    }
    Ok(pair + selfh - sys.w * wterm)
}

/// Analytic (∂K/∂θ_l, ∂K/∂φ_l) flattened as (θ₀, φ₀, θ₁, φ₁, …).
pub fn kr_gradient(sys: &VortexSystem) -> Result<Vec<f64>> {
    sys.check_separation()?;
    Ok(gradient_terms(sys, true, true))
}

/// Gradient of the pair sum, optionally with the self-H and W terms.
pub(crate) fn gradient_terms(sys: &VortexSystem, with_self: bool, with_w: bool) -> Vec<f64> {
    let n = sys.len();
    let mut g = vec![0.0; 2 * n];
    for (l, a) in sys.vortices.iter().enumerate() {
        let ga = a.strength();
        let (t, p) = (a.pos.theta, a.pos.phi);
        let (mut st, mut sp) = (0.0, 0.0);
        for (m, b) in sys.vortices.iter().enumerate() {
            if m == l {
                continue;
            }
            let (dt, dp) = grad_g_raw(t, p, b.pos.theta, b.pos.phi);
            st += b.strength() * dt;
            sp += b.strength() * dp;
        }
        if with_self {
            let (dt, dp) = grad_h_raw(t, p, t, p);
            st += ga * dt;
            sp += ga * dp;
        }
        if with_w {
            st += sys.w * t.sin();
        }
        g[2 * l] = ga * st;
        g[2 * l + 1] = ga * sp;
    }
    g
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
