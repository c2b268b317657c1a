//! The sphere Green's function G, its flat-log approximation Γ, the regular
//! remainder H = G − Γ, and first-slot chart gradients.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sphere::{chord_argument_raw, wrap_angle, SpherePoint};

const FOUR_PI: f64 = 4.0 * PI;

/// H(z, z) for every z in the chart.
pub const H_DIAGONAL: f64 = LN_2 / (2.0 * PI);

/// Below this chart separation H is evaluated by its diagonal series.
pub const RHO_SWITCH: f64 = 1e-4;

/// Default cap radius on which H is evaluated.
pub const DEFAULT_CAP: f64 = 0.5;

/// A kernel value with its gradient in (θ, φ) at the first argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    pub value: f64,
    pub grad_first_slot: (f64, f64),
}

/// G(z, z′) = −(1/4π) ln(chord argument) + ln2/(4π).
pub fn green_g(z: &SpherePoint, zp: &SpherePoint) -> Result<f64> {
    let c = chord_argument_raw(z.theta, z.phi, zp.theta, zp.phi);
    if c == 0.0 {
        return Err(Error::Singular(0.0));
    }
    Ok(g_from_chord(c))
}

#[inline]
fn g_from_chord(c: f64) -> f64 {
    -(c.ln()) / FOUR_PI + LN_2 / FOUR_PI
}

#[inline]
pub(crate) fn g_raw(t1: f64, p1: f64, t2: f64, p2: f64) -> f64 {
    g_from_chord(chord_argument_raw(t1, p1, t2, p2))
}

/// (∂θ, ∂φ) of G at the first slot.
pub fn grad_g(z: &SpherePoint, zp: &SpherePoint) -> Result<(f64, f64)> {
    let c = chord_argument_raw(z.theta, z.phi, zp.theta, zp.phi);
    if c == 0.0 {
        return Err(Error::Singular(0.0));
    }
    Ok(grad_g_raw(z.theta, z.phi, zp.theta, zp.phi))
}

#[inline]
pub(crate) fn grad_g_raw(t1: f64, p1: f64, t2: f64, p2: f64) -> (f64, f64) {
    let c = chord_argument_raw(t1, p1, t2, p2);
    let b = p1 - p2;
    let sb2 = (0.5 * b).sin();
    let (s1, c1) = t1.sin_cos();
    let s2 = t2.sin();
    let dct = (t1 - t2).sin() + 2.0 * c1 * s2 * sb2 * sb2;
    let dcp = s1 * s2 * b.sin();
    (-dct / (FOUR_PI * c), -dcp / (FOUR_PI * c))
}

pub fn green(z: &SpherePoint, zp: &SpherePoint) -> Result<KernelValue> {
    Ok(KernelValue {
        value: green_g(z, zp)?,
        grad_first_slot: grad_g(z, zp)?,
    })
}

/// Chart offset (θ−θ′, wrapped φ−φ′) and the flat metric quantity
/// P = Δθ² + Δφ² sin²θ with θ the first argument.
#[inline]
fn flat_offset(t1: f64, p1: f64, t2: f64, p2: f64) -> (f64, f64, f64) {
    let a = t1 - t2;
    let b = wrap_angle(p1 - p2);
    let s = t1.sin();
    (a, b, a * a + s * s * b * b)
}

/// Γ(z, z′) = −(1/4π) ln[(θ−θ′)² + (φ−φ′)² sin²θ].
pub fn gamma_singular(z: &SpherePoint, zp: &SpherePoint) -> Result<f64> {
    let (_, _, p) = flat_offset(z.theta, z.phi, zp.theta, zp.phi);
    if p == 0.0 {
        return Err(Error::Singular(0.0));
    }
    Ok(-p.ln() / FOUR_PI)
}

pub fn grad_gamma(z: &SpherePoint, zp: &SpherePoint) -> Result<(f64, f64)> {
    let (a, b, p) = flat_offset(z.theta, z.phi, zp.theta, zp.phi);
    if p == 0.0 {
        return Err(Error::Singular(0.0));
    }
    let (s, k) = z.theta.sin_cos();
    let dpt = 2.0 * a + 2.0 * s * k * b * b;
    let dpp = 2.0 * s * s * b;
    Ok((-dpt / (FOUR_PI * p), -dpp / (FOUR_PI * p)))
}

/// H = G − Γ on a cap of radius [`DEFAULT_CAP`].
pub fn regular_h(z: &SpherePoint, zp: &SpherePoint) -> Result<f64> {
    regular_h_capped(z, zp, DEFAULT_CAP)
}

pub fn regular_h_capped(z: &SpherePoint, zp: &SpherePoint, cap: f64) -> Result<f64> {
    check_cap(z, zp, cap)?;
    Ok(h_raw(z.theta, z.phi, zp.theta, zp.phi))
}

pub fn grad_h(z: &SpherePoint, zp: &SpherePoint) -> Result<(f64, f64)> {
    grad_h_capped(z, zp, DEFAULT_CAP)
}

pub fn grad_h_capped(z: &SpherePoint, zp: &SpherePoint, cap: f64) -> Result<(f64, f64)> {
    check_cap(z, zp, cap)?;
    Ok(grad_h_raw(z.theta, z.phi, zp.theta, zp.phi))
}

pub fn regular(z: &SpherePoint, zp: &SpherePoint) -> Result<KernelValue> {
    Ok(KernelValue {
        value: regular_h(z, zp)?,
        grad_first_slot: grad_h(z, zp)?,
    })
}

fn check_cap(z: &SpherePoint, zp: &SpherePoint, cap: f64) -> Result<()> {
    let d = z.geodesic(zp);
    if d > cap {
        return Err(Error::OutOfCap {
            separation: d,
            cap,
        });
    }
    Ok(())
}

/// Series ingredients: P and the ratios X1 = N1/P, X2 = N2/P with
/// 2c = P + N1 + N2 + O(ρ⁵).
struct Series {
    a: f64,
    b: f64,
    s: f64,
    k: f64,
    p: f64,
    x1: f64,
    x2: f64,
}

fn series(t1: f64, p1: f64, t2: f64, p2: f64) -> Series {
    let (a, b, p) = flat_offset(t1, p1, t2, p2);
    let (s, k) = t1.sin_cos();
    let (a2, b2) = (a * a, b * b);
    let n1 = -s * k * a * b2;
    let n2 = -a2 * a2 / 12.0 - s * s * a2 * b2 / 2.0 - s * s * b2 * b2 / 12.0;
    Series {
        a,
        b,
        s,
        k,
        p,
        x1: n1 / p,
        x2: n2 / p,
    }
}

/// H without the cap check. Uses the diagonal series below [`RHO_SWITCH`].
#[inline]
pub(crate) fn h_raw(t1: f64, p1: f64, t2: f64, p2: f64) -> f64 {
    let (_, _, p) = flat_offset(t1, p1, t2, p2);
    if p == 0.0 {
        return H_DIAGONAL;
    }
    if p < RHO_SWITCH * RHO_SWITCH {
        let sr = series(t1, p1, t2, p2);
        // ln(1+X) ≈ X1 + X2 − X1²/2
        return H_DIAGONAL - (sr.x1 + sr.x2 - 0.5 * sr.x1 * sr.x1) / FOUR_PI;
    }
    let c = chord_argument_raw(t1, p1, t2, p2);
    LN_2 / FOUR_PI - (c / p).ln() / FOUR_PI
}

/// First-slot gradient of H without the cap check.
///
/// At exact coincidence the one-sided limits depend on direction, so the
/// value there is taken as (0, 0), half the gradient of the constant z ↦ H(z, z).
pub(crate) fn grad_h_raw(t1: f64, p1: f64, t2: f64, p2: f64) -> (f64, f64) {
    let (_, _, p) = flat_offset(t1, p1, t2, p2);
    if p == 0.0 {
        return (0.0, 0.0);
    }
    if p < RHO_SWITCH * RHO_SWITCH {
        let Series {
            a,
            b,
            s,
            k,
            p,
            x1,
            x2,
        } = series(t1, p1, t2, p2);
        let (a2, b2) = (a * a, b * b);
        let dn1t = -(k * k - s * s) * a * b2 - s * k * b2;
        let dn1p = -2.0 * s * k * a * b;
        let dn2t = -a2 * a / 3.0 - s * k * a2 * b2 - s * s * a * b2 - s * k * b2 * b2 / 6.0;
        let dn2p = -s * s * a2 * b - s * s * b2 * b / 3.0;
        let dpt = 2.0 * a + 2.0 * s * k * b2;
        let dpp = 2.0 * s * s * b;
        let dx1t = (dn1t - x1 * dpt) / p;
        let dx1p = (dn1p - x1 * dpp) / p;
        let dx2t = (dn2t - x2 * dpt) / p;
        let dx2p = (dn2p - x2 * dpp) / p;
        return (
            -(dx1t + dx2t - x1 * dx1t) / FOUR_PI,
            -(dx1p + dx2p - x1 * dx1p) / FOUR_PI,
        );
    }
    let (gt, gp) = grad_g_raw(t1, p1, t2, p2);
    let (a, b, p) = flat_offset(t1, p1, t2, p2);
    let (s, k) = t1.sin_cos();
    let dpt = 2.0 * a + 2.0 * s * k * b * b;
    let dpp = 2.0 * s * s * b;
    (gt + dpt / (FOUR_PI * p), gp + dpp / (FOUR_PI * p))
}
