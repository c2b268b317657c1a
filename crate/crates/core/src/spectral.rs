//! Spherical-harmonic transforms on a [`LatLonGrid`] and the inverse of −Δ.
//!
//! Orthonormal associated Legendre functions P̄_l^m are generated by the
//! standard three-term recurrence for each transform; a real function is
//! f = Σ_l a_l0 P̄_l0 + 2 Re Σ_{m≥1} Σ_l a_lm P̄_lm e^{imφ}.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::sphere::{LatLonGrid, SphericalField};

/// Coefficients a_lm for 0 ≤ m ≤ l ≤ l_max, stored by m then l.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub l_max: usize,
    pub data: Vec<Vec<Complex64>>,
}

impl Coefficients {
    pub fn zeros(l_max: usize) -> Self {
        Self {
            l_max,
            data: (0..=l_max).map(|m| vec![Complex64::new(0.0, 0.0); l_max + 1 - m]).collect(),
        }
    }

    pub fn get(&self, l: usize, m: usize) -> Complex64 {
        self.data[m][l - m]
    }

    pub fn set(&mut self, l: usize, m: usize, v: Complex64) {
        self.data[m][l - m] = v;
    }

    /// Multiplies a_lm by g(l).
    pub fn scale_by_degree<F: Fn(usize) -> f64>(&mut self, g: F) {
        for (m, row) in self.data.iter_mut().enumerate() {
            for (k, c) in row.iter_mut().enumerate() {
                *c *= g(m + k);
            }
        }
    }
}

/// Transform tables for one grid.
pub struct SpectralPlan {
    pub grid: Arc<LatLonGrid>,
    pub l_max: usize,
    /// P̄_mm at the northern rows (and the equator row when n_theta is odd).
    pmm: Vec<Vec<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan")
            .field("n_theta", &self.grid.n_theta)
            .field("n_phi", &self.grid.n_phi)
            .field("l_max", &self.l_max)
            .finish()
    }
}

fn a_coef(l: usize, m: usize) -> f64 {
    let (l, m) = (l as f64, m as f64);
    ((4.0 * l * l - 1.0) / (l * l - m * m)).sqrt()
}

fn b_coef(l: usize, m: usize) -> f64 {
    let (l1, m) = ((l - 1) as f64, m as f64);
    ((l1 * l1 - m * m) / (4.0 * l1 * l1 - 1.0)).sqrt()
}

/// Runs the l-recurrence at fixed m and x, calling `visit(l, P̄_lm)`.
#[inline]
fn legendre_column<F: FnMut(usize, f64)>(l_max: usize, m: usize, x: f64, pmm: f64, mut visit: F) {
    visit(m, pmm);
    if m == l_max {
        return;
    }
    let mut p2 = pmm;
    let mut p1 = (2.0 * m as f64 + 3.0).sqrt() * x * pmm;
    visit(m + 1, p1);
    for l in m + 2..=l_max {
        let p = a_coef(l, m) * (x * p1 - b_coef(l, m) * p2);
        visit(l, p);
        p2 = p1;
        p1 = p;
    }
}

impl SpectralPlan {
    /// Plan with l_max = n_theta − 1.
    pub fn new(grid: Arc<LatLonGrid>) -> Result<Self> {
        let l = grid.n_theta - 1;
        Self::with_l_max(grid, l)
    }

    pub fn with_l_max(grid: Arc<LatLonGrid>, l_max: usize) -> Result<Self> {
        if l_max >= grid.n_phi / 2 || l_max >= grid.n_theta {
            return Err(Error::Config(format!(
                "l_max {l_max} too large for a {}x{} grid",
                grid.n_theta, grid.n_phi
            )));
        }
        let half = grid.n_theta.div_ceil(2);
        let mut pmm = vec![vec![0.0; half]; l_max + 1];
        for j in 0..half {
            let s = grid.theta_nodes[j].sin();
            let mut p = 1.0 / (4.0 * PI).sqrt();
            pmm[0][j] = p;
            for (m, row) in pmm.iter_mut().enumerate().skip(1) {
                p *= ((2.0 * m as f64 + 1.0) / (2.0 * m as f64)).sqrt() * s;
                row[j] = p;
            }
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.n_phi);
        let inv = planner.plan_fft_inverse(grid.n_phi);
        Ok(Self {
            grid,
            l_max,
            pmm,
            fwd,
            inv,
        })
    }

    /// Row Fourier coefficients F_j(m) = (1/n_φ)Σ_k f_jk e^{−imφ_k}, m ≤ l_max.
    fn row_fourier(&self, f: &SphericalField) -> Vec<Vec<Complex64>> {
        let np = self.grid.n_phi;
        (0..self.grid.n_theta)
            .into_par_iter()
            .map(|i| {
                let mut buf: Vec<Complex64> = f.row(i).iter().map(|&v| Complex64::new(v, 0.0)).collect();
                self.fwd.process(&mut buf);
                buf.truncate(self.l_max + 1);
                for c in buf.iter_mut() {
                    *c /= np as f64;
                }
                buf
            })
            .collect()
    }

    pub fn analysis(&self, f: &SphericalField) -> Coefficients {
        let g = &self.grid;
        let nt = g.n_theta;
        let four = self.row_fourier(f);
        let half = nt.div_ceil(2);
        let lm = self.l_max;
        let data: Vec<Vec<Complex64>> = (0..=lm)
            .into_par_iter()
            .map(|m| {
                let mut acc = vec![Complex64::new(0.0, 0.0); lm + 1 - m];
                for j in 0..half {
                    let js = nt - 1 - j;
                    let x = g.cos_theta[j];
                    let w = 2.0 * PI * g.gauss_weights[j];
                    let (sum, dif) = if js == j {
                        (four[j][m] * w, four[j][m] * w)
                    } else {
                        ((four[j][m] + four[js][m]) * w, (four[j][m] - four[js][m]) * w)
                    };
                    legendre_column(lm, m, x, self.pmm[m][j], |l, p| {
                        acc[l - m] += if (l + m) % 2 == 0 { sum * p } else { dif * p };
                    });
                }
                acc
            })
            .collect();
        Coefficients { l_max: lm, data }
    }

    pub fn synthesis(&self, a: &Coefficients) -> SphericalField {
        let g = &self.grid;
        let (nt, np) = (g.n_theta, g.n_phi);
        let half = nt.div_ceil(2);
        let lm = self.l_max.min(a.l_max);
        // per m: (north, south) values at each paired row
        let cols: Vec<Vec<(Complex64, Complex64)>> = (0..=lm)
            .into_par_iter()
            .map(|m| {
                let mut out = Vec::with_capacity(half);
                for j in 0..half {
                    let mut even = Complex64::new(0.0, 0.0);
                    let mut odd = Complex64::new(0.0, 0.0);
                    legendre_column(lm, m, g.cos_theta[j], self.pmm[m][j], |l, p| {
                        if (l + m) % 2 == 0 {
                            even += a.data[m][l - m] * p;
                        } else {
                            odd += a.data[m][l - m] * p;
                        }
                    });
                    out.push((even + odd, even - odd));
                }
                out
            })
            .collect();
        let mut values = vec![0.0; nt * np];
        values.par_chunks_mut(np).enumerate().for_each(|(i, row)| {
            let (j, south) = if i < half { (i, false) } else { (nt - 1 - i, true) };
            let mut buf = vec![Complex64::new(0.0, 0.0); np];
            for (m, col) in cols.iter().enumerate() {
                let c = if south { col[j].1 } else { col[j].0 };
                if m == 0 {
                    buf[0] = Complex64::new(c.re, 0.0);
                } else {
                    buf[m] = c;
                    buf[np - m] = c.conj();
                }
            }
            self.inv.process(&mut buf);
            for (v, b) in row.iter_mut().zip(&buf) {
                *v = b.re;
            }
        });
        SphericalField {
            grid: g.clone(),
            values,
        }
    }

    /// Band-limited projection of f onto degrees ≤ l_max.
    pub fn project(&self, f: &SphericalField) -> SphericalField {
        self.synthesis(&self.analysis(f))
    }

    /// Spectral −Δ.
    pub fn minus_laplacian(&self, f: &SphericalField) -> SphericalField {
        let mut a = self.analysis(f);
        a.scale_by_degree(|l| (l * (l + 1)) as f64);
        self.synthesis(&a)
    }

    /// Solves −Δu = f − mean(f) with ∫u = 0. Returns u and ∫f dσ, the part
    /// that was projected out.
    pub fn poisson_inverse(&self, f: &SphericalField) -> (SphericalField, f64) {
        let mut a = self.analysis(f);
        let integral = a.get(0, 0).re * (4.0 * PI).sqrt();
        a.set(0, 0, Complex64::new(0.0, 0.0));
        a.scale_by_degree(|l| if l == 0 { 0.0 } else { 1.0 / (l * (l + 1)) as f64 });
        (self.synthesis(&a), integral)
    }

    /// Evaluates the expansion at an arbitrary point.
    pub fn eval_point(&self, a: &Coefficients, theta: f64, phi: f64) -> f64 {
        let (s, x) = theta.sin_cos();
        let lm = self.l_max.min(a.l_max);
        let mut pmm = 1.0 / (4.0 * PI).sqrt();
        let mut total = 0.0;
        for m in 0..=lm {
            if m > 0 {
                pmm *= ((2.0 * m as f64 + 1.0) / (2.0 * m as f64)).sqrt() * s;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            legendre_column(lm, m, x, pmm, |l, p| acc += a.data[m][l - m] * p);
            if m == 0 {
                total += acc.re;
            } else {
                let e = Complex64::from_polar(1.0, m as f64 * phi);
                total += 2.0 * (acc * e).re;
            }
        }
        total
    }
}
