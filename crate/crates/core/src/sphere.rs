//! Chart geometry on the unit sphere, lat-lon quadrature grids, and a
//! finite-difference Laplace–Beltrami operator.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

const TWO_PI: f64 = 2.0 * PI;

/// Reduces an angle into [0, 2π).
pub fn reduce_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(TWO_PI);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}

/// Wraps an angle difference into (−π, π].
pub fn wrap_angle(d: f64) -> f64 {
    let r = (d + PI).rem_euclid(TWO_PI) - PI;
    if r <= -PI {
        r + TWO_PI
    } else {
        r
    }
}

/// A point of the pole-free chart: colatitude θ ∈ (0, π), longitude φ ∈ [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub theta: f64,
    pub phi: f64,
}

impl SpherePoint {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < PI) || !phi.is_finite() {
            return Err(Error::PoleExcluded(theta));
        }
        Ok(Self {
            theta,
            phi: reduce_angle(phi),
        })
    }

    pub fn to_cartesian(&self) -> [f64; 3] {
        to_cartesian(self)
    }

    /// Great-circle distance to `q`.
    pub fn geodesic(&self, q: &SpherePoint) -> f64 {
        // chord length c = 2 sin(d/2), with c² = 2·chord_argument
        let c = (2.0 * chord_argument(self, q)).sqrt();
        2.0 * (0.5 * c).min(1.0).asin()
    }
}

pub fn to_cartesian(p: &SpherePoint) -> [f64; 3] {
    let (st, ct) = p.theta.sin_cos();
    let (sp, cp) = p.phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// 1 − cosθcosθ′ − sinθsinθ′cos(φ−φ′), evaluated in half-angle form.
pub fn chord_argument(p: &SpherePoint, q: &SpherePoint) -> f64 {
    chord_argument_raw(p.theta, p.phi, q.theta, q.phi)
}

#[inline]
pub(crate) fn chord_argument_raw(t1: f64, p1: f64, t2: f64, p2: f64) -> f64 {
    let a = (0.5 * (t1 - t2)).sin();
    let b = (0.5 * (p1 - p2)).sin();
    // symmetric in the two points by construction of the products
    let v = 2.0 * (a * a + t1.sin() * t2.sin() * b * b);
    v.clamp(0.0, 2.0)
}

/// Chart linearization at `base`: (Δθ, Δφ) ↦ (Δθ, sinθ_base·Δφ)/scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentMap {
    pub base: SpherePoint,
    pub scale: f64,
}

impl TangentMap {
    pub fn new(base: SpherePoint, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Config(format!("tangent map scale must be positive, got {scale}")));
        }
        Ok(Self { base, scale })
    }

    pub fn apply(&self, offset: (f64, f64)) -> (f64, f64) {
        let s = self.base.theta.sin();
        (offset.0 / self.scale, s * offset.1 / self.scale)
    }

    /// Inverse of [`apply`](Self::apply) on chart offsets.
    pub fn invert(&self, y: (f64, f64)) -> Result<(f64, f64)> {
        let s = self.base.theta.sin();
        let off = (y.0 * self.scale, y.1 * self.scale / s);
        let th = self.base.theta + off.0;
        if !(th > 0.0 && th < PI) {
            return Err(Error::OutOfChart(format!(
                "tangent point maps to colatitude {th}"
            )));
        }
        Ok(off)
    }

    /// The sphere point whose tangent coordinates are `y`.
    pub fn point(&self, y: (f64, f64)) -> Result<SpherePoint> {
        let off = self.invert(y)?;
        SpherePoint::new(self.base.theta + off.0, self.base.phi + off.1)
    }

    /// Tangent coordinates of a sphere point, using the wrapped φ difference.
    pub fn coords_of(&self, p: &SpherePoint) -> (f64, f64) {
        self.apply((p.theta - self.base.theta, wrap_angle(p.phi - self.base.phi)))
    }
}

/// Gauss–Legendre in cosθ × equispaced in φ.
///
/// Rows are ordered by increasing θ (north to south).
#[derive(Debug, Clone, PartialEq)]
pub struct LatLonGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub theta_nodes: Vec<f64>,
    pub phi_nodes: Vec<f64>,
    /// cosθ at each row.
    pub cos_theta: Vec<f64>,
    /// Gauss weight of each row in cosθ (sums to 2).
    pub gauss_weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridShape {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl LatLonGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 || n_phi < 4 || !n_phi.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "grid {n_theta}x{n_phi}: need n_theta >= 2 and even n_phi >= 4"
            )));
        }
        let (x, w) = gauss_legendre(n_theta);
        // x ascending means θ descending; flip so θ ascends
        let cos_theta: Vec<f64> = x.iter().rev().copied().collect();
        let gauss_weights: Vec<f64> = w.iter().rev().copied().collect();
        let theta_nodes = cos_theta.iter().map(|c| c.acos()).collect();
        let phi_nodes = (0..n_phi).map(|j| TWO_PI * j as f64 / n_phi as f64).collect();
        Ok(Self {
            n_theta,
            n_phi,
            theta_nodes,
            phi_nodes,
            cos_theta,
            gauss_weights,
        })
    }

    pub fn shape(&self) -> GridShape {
        GridShape {
            n_theta: self.n_theta,
            n_phi: self.n_phi,
        }
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of node (i, j); independent of j.
    pub fn weight(&self, i: usize) -> f64 {
        self.gauss_weights[i] * TWO_PI / self.n_phi as f64
    }

    pub fn point(&self, i: usize, j: usize) -> SpherePoint {
        SpherePoint {
            theta: self.theta_nodes[i],
            phi: self.phi_nodes[j],
        }
    }

    pub fn total_weight(&self) -> f64 {
        (0..self.n_theta).map(|i| self.weight(i)).sum::<f64>() * self.n_phi as f64
    }
}

/// Scalar samples on a [`LatLonGrid`], row-major over (θ row, φ column).
#[derive(Debug, Clone)]
pub struct SphericalField {
    pub grid: Arc<LatLonGrid>,
    pub values: Vec<f64>,
}

impl SphericalField {
    pub fn new(grid: Arc<LatLonGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "field has {} values for a {}x{} grid",
                values.len(),
                grid.n_theta,
                grid.n_phi
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<LatLonGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn<F>(grid: Arc<LatLonGrid>, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let np = grid.n_phi;
        let mut values = vec![0.0; grid.len()];
        values.par_chunks_mut(np).enumerate().for_each(|(i, row)| {
            let th = grid.theta_nodes[i];
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(th, grid.phi_nodes[j]);
            }
        });
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_phi + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let np = self.grid.n_phi;
        &self.values[i * np..(i + 1) * np]
    }

    /// Σ weights·values ≈ ∫ f dσ. Row sums first, then rows in order.
    pub fn integrate(&self) -> f64 {
        (0..self.grid.n_theta)
            .map(|i| self.grid.weight(i) * self.row(i).iter().sum::<f64>())
            .sum()
    }

    /// Max norm; NaN anywhere gives NaN.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0f64, |m, v| if m.is_nan() || v.is_nan() { f64::NAN } else { m.max(v.abs()) })
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Self, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Writes `theta,phi,value` rows and a sidecar `<path>.grid.json`.
    pub fn write_csv(&self, path: &Path) -> Result<std::path::PathBuf> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["theta", "phi", "value"])?;
        for i in 0..self.grid.n_theta {
            for j in 0..self.grid.n_phi {
                w.write_record(&[
                    format!("{:.17e}", self.grid.theta_nodes[i]),
                    format!("{:.17e}", self.grid.phi_nodes[j]),
                    format!("{:.17e}", self.at(i, j)),
                ])?;
            }
        }
        w.flush()?;
        let side = sidecar_path(path);
        std::fs::write(&side, serde_json::to_string_pretty(&self.grid.shape())?)?;
        Ok(side)
    }

    /// Reads a field written by [`write_csv`](Self::write_csv).
    pub fn read_csv(path: &Path) -> Result<Self> {
        let shape: GridShape = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
        let grid = Arc::new(LatLonGrid::new(shape.n_theta, shape.n_phi)?);
        let mut r = csv::Reader::from_path(path)?;
        let mut values = Vec::with_capacity(grid.len());
        for rec in r.records() {
            let rec = rec?;
            let v: f64 = rec
                .get(2)
                .ok_or_else(|| Error::Io("missing value column".into()))?
                .parse()
                .map_err(|e| Error::Io(format!("bad value: {e}")))?;
            values.push(v);
        }
        Self::new(grid, values)
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".grid.json");
    s.into()
}

/// Fornberg weights for derivatives 0..=m at `z` from nodes `x`.
/// Returns `c[k][j]`, weight of node j for the k-th derivative.
pub(crate) fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Half-width of the θ stencil (5 points: fourth order).
const HALF: usize = 2;

/// Discrete Laplace–Beltrami operator.
///
/// θ: 5-point Lagrange stencils on the Gauss nodes, with ghost rows
/// mirrored across each pole (θ ↦ −θ, φ ↦ φ+π). φ: spectral.
pub fn laplace_beltrami(f: &SphericalField) -> Result<SphericalField> {
    let g = &f.grid;
    let (nt, np) = (g.n_theta, g.n_phi);
    if nt < 16 || np < 16 {
        return Err(Error::Config(format!(
            "laplace_beltrami needs at least 16x16 nodes, got {nt}x{np}"
        )));
    }
    let half = np / 2;
    // extended row r ∈ [−HALF, nt+HALF): (θ, source row, shifted?)
    let ext = |r: isize| -> (f64, usize, bool) {
        if r < 0 {
            let k = (-r - 1) as usize;
            (-g.theta_nodes[k], k, true)
        } else if r >= nt as isize {
            let k = 2 * nt - 1 - r as usize;
            (TWO_PI - g.theta_nodes[k], k, true)
        } else {
            (g.theta_nodes[r as usize], r as usize, false)
        }
    };

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(np);
    let inv = planner.plan_fft_inverse(np);

    let mut out = vec![0.0; nt * np];
    out.par_chunks_mut(np).enumerate().for_each(|(i, orow)| {
        let th = g.theta_nodes[i];
        let rows: Vec<isize> = (i as isize - HALF as isize..=i as isize + HALF as isize).collect();
        let xs: Vec<f64> = rows.iter().map(|&r| ext(r).0).collect();
        let c = fornberg(th, &xs, 2);
        let (s, co) = th.sin_cos();
        let cot = co / s;
        for (k, &r) in rows.iter().enumerate() {
            let (_, src, shifted) = ext(r);
            let srow = f.row(src);
            let w = c[2][k] + cot * c[1][k];
            if shifted {
                for j in 0..np {
                    orow[j] += w * srow[(j + half) % np];
                }
            } else {
                for j in 0..np {
                    orow[j] += w * srow[j];
                }
            }
        }
        // spectral ∂²_φ
        let mut buf: Vec<Complex64> = f.row(i).iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fwd.process(&mut buf);
        for (m, b) in buf.iter_mut().enumerate() {
            let k = if m <= np / 2 { m as f64 } else { m as f64 - np as f64 };
            *b *= -k * k;
        }
        inv.process(&mut buf);
        let inv_s2 = 1.0 / (s * s * np as f64);
        for j in 0..np {
            orow[j] += buf[j].re * inv_s2;
        }
    });
    SphericalField::new(g.clone(), out)
}
