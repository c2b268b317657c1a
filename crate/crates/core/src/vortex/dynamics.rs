//! Hamiltonian point-vortex dynamics in the conjugate pairs (cosθ_l, φ_l).
//!
//! Γ_l d(cosθ_l)/dt = ∂K/∂φ_l and Γ_l dφ_l/dt = −∂K/∂(cosθ_l), so
//! θ̇_l = −∂_φK/(Γ_l sinθ_l) and φ̇_l = ∂_θK/(Γ_l sinθ_l).
//!
//! With this convention a critical point of K with speed W drifts rigidly as
//! φ_l(t) = φ_l(0) − W t in the inertial frame, i.e. σ = −1.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{gradient_terms, VortexSystem};
use crate::error::{Error, Result};
use crate::kernel::g_raw;
use crate::ode::rk4_step;
use crate::sphere::to_cartesian;

/// Sign σ in φ_l(t) = φ_l(0) + σWt for a traveling critical point.
pub const DRIFT_SIGN: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    /// Pair interactions only: self terms and W dropped.
    Inertial,
    /// Full K with the given speed, so fixed points are exactly ∇K = 0.
    CoRotating(f64),
}

/// Time derivatives (θ̇₀, φ̇₀, θ̇₁, φ̇₁, …).
pub fn eom_rhs(sys: &VortexSystem, frame: Frame) -> Result<Vec<f64>> {
    sys.check_separation()?;
    let g = match frame {
        Frame::Inertial => gradient_terms(sys, false, false),
        Frame::CoRotating(w) => gradient_terms(&sys.with_w(w), true, true),
    };
    let mut out = vec![0.0; g.len()];
    for (l, v) in sys.vortices.iter().enumerate() {
        let d = v.strength() * v.pos.theta.sin();
        out[2 * l] = -g[2 * l + 1] / d;
        out[2 * l + 1] = g[2 * l] / d;
    }
    Ok(out)
}

/// ½Σ_{l≠n} Γ_lΓ_n G(z_l, z_n).
pub fn interaction_energy(sys: &VortexSystem) -> Result<f64> {
    sys.check_separation()?;
    let mut e = 0.0;
    for (l, a) in sys.vortices.iter().enumerate() {
        for b in &sys.vortices[l + 1..] {
            e += a.strength() * b.strength() * g_raw(a.pos.theta, a.pos.phi, b.pos.theta, b.pos.phi);
        }
    }
    Ok(e)
}

/// M = Σ Γ_l x(z_l).
pub fn moment(sys: &VortexSystem) -> [f64; 3] {
    let mut m = [0.0; 3];
    for v in &sys.vortices {
        let x = to_cartesian(&v.pos);
        for i in 0..3 {
            m[i] += v.strength() * x[i];
        }
    }
    m
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    /// (θ₀, φ₀, θ₁, φ₁, …) with φ unwrapped.
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    /// max_t |E(t) − E(0)| of the interaction energy.
    pub energy_drift: f64,
    /// max_t ‖M(t) − M(0)‖.
    pub moment_drift: f64,
    pub steps: usize,
    /// Set when integration stopped early (collision or chart exit).
    pub aborted: Option<String>,
}

impl Trajectory {
    /// Max over samples and vortices of |θ_l(t) − θ_l(0)| and
    /// |φ_l(t) − φ_l(0) − rate·t|.
    pub fn rigid_drift_deviation(&self, rate: f64) -> f64 {
        let first = &self.samples[0];
        let mut dev = 0.0f64;
        for s in &self.samples {
            for (k, (&x, &x0)) in s.coords.iter().zip(&first.coords).enumerate() {
                let expect = if k % 2 == 1 { x0 + rate * (s.t - first.t) } else { x0 };
                dev = dev.max((x - expect).abs());
            }
        }
        dev
    }

    /// Writes `t,index,theta,phi`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "index", "theta", "phi"])?;
        for s in &self.samples {
            for l in 0..s.coords.len() / 2 {
                w.write_record(&[
                    format!("{:.17e}", s.t),
                    l.to_string(),
                    format!("{:.17e}", s.coords[2 * l]),
                    format!("{:.17e}", s.coords[2 * l + 1]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Classical RK4 from t = 0 to `t_end` with step `dt`, sampling every
/// `sample_every` steps (and at the end).
pub fn integrate(
    sys: &VortexSystem,
    frame: Frame,
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::Config(format!("need dt > 0 and T >= 0, got dt={dt}, T={t_end}")));
    }
    let every = sample_every.max(1);
    let nsteps = (t_end / dt).round() as usize;
    let e0 = interaction_energy(sys)?;
    let m0 = moment(sys);
    let rhs = |_t: f64, y: &[f64]| -> Result<Vec<f64>> { eom_rhs(&sys.with_coords(y)?, frame) };
    let mut y = sys.coords();
    let mut samples = vec![TrajectorySample {
        t: 0.0,
        coords: y.clone(),
    }];
    let (mut de, mut dm) = (0.0f64, 0.0f64);
    let mut aborted = None;
    let mut steps = 0;
    for k in 0..nsteps {
        let t = k as f64 * dt;
        let next = rk4_step(&rhs, t, &y, dt).and_then(|ny| {
            let s = sys.with_coords(&ny)?;
            let e = interaction_energy(&s)?;
            Ok((ny, s, e))
        });
        match next {
            Ok((ny, s, e)) => {
                y = ny;
                steps += 1;
                de = de.max((e - e0).abs());
                let m = moment(&s);
                let d = ((m[0] - m0[0]).powi(2) + (m[1] - m0[1]).powi(2) + (m[2] - m0[2]).powi(2)).sqrt();
                dm = dm.max(d);
                if (k + 1) % every == 0 || k + 1 == nsteps {
                    samples.push(TrajectorySample {
                        t: (k + 1) as f64 * dt,
                        coords: y.clone(),
                    });
                }
            }
            Err(e) => {
                aborted = Some(format!("t={t}: {e}"));
                break;
            }
        }
    }
    Ok(Trajectory {
        samples,
        energy_drift: de,
        moment_drift: dm,
        steps,
        aborted,
    })
}

/// Traveling speed in a frame rotating with the sphere, and the solid-body
/// background vorticity coefficient c in ω̃ = ω + c·cosθ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatingFrame {
    pub w: f64,
    pub background_cos_coefficient: f64,
}

impl RotatingFrame {
    pub fn transfer(self, gamma_rot: f64) -> Self {
        Self {
            w: self.w - gamma_rot,
            background_cos_coefficient: self.background_cos_coefficient + 2.0 * gamma_rot,
        }
    }
}

/// W ↦ W − γ_rot, with 2γ_rot·cosθ added to exported vorticity.
pub fn rotating_frame_transfer(w: f64, gamma_rot: f64) -> RotatingFrame {
    RotatingFrame {
        w,
        background_cos_coefficient: 0.0,
    }
    .transfer(gamma_rot)
}
