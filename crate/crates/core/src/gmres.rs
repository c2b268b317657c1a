//! Restarted GMRES for matrix-free operators.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct GmresParams {
    /// Stop when ‖b − Ax‖₂ ≤ rtol·‖b‖₂.
    pub rtol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresParams {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            restart: 40,
            max_iter: 400,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves A x = b from x = 0. Returns `NoConvergence` if the tolerance is not
/// met within `max_iter` inner iterations.
pub fn gmres<A>(apply: A, b: &[f64], p: GmresParams) -> Result<GmresOutcome>
where
    A: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let m = p.restart.max(1);
    let mut total = 0;
    let mut r = b.to_vec();
    loop {
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= p.rtol {
            return Ok(GmresOutcome {
                x,
                iterations: total,
                relative_residual: rel,
            });
        }
        if total >= p.max_iter {
            return Err(Error::NoConvergence {
                iterations: total,
                residual: rel,
            });
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        // Hessenberg columns after rotation, stored as upper triangle
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![beta];
        let mut k = 0;
        while k < m && total < p.max_iter {
            let mut w = apply(&basis[k]);
            let mut col = vec![0.0; k + 2];
            for (i, v) in basis.iter().enumerate() {
                let c = dot(&w, v);
                col[i] = c;
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= c * vj;
                }
            }
            let wn = norm(&w);
            col[k + 1] = wn;
            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let d = col[k].hypot(col[k + 1]);
            let (c, s) = if d == 0.0 { (1.0, 0.0) } else { (col[k] / d, col[k + 1] / d) };
            cs.push(c);
            sn.push(s);
            col[k] = d;
            col.pop();
            g.push(-s * g[k]);
            g[k] *= c;
            h.push(col);
            total += 1;
            k += 1;
            if g[k].abs() / bnorm <= p.rtol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
        let ax = apply(&x);
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 30;
        let apply = |v: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let mut s = 3.0 * v[i];
                    if i > 0 {
                        s -= v[i - 1];
                    }
                    if i + 1 < n {
                        s += 0.5 * v[i + 1];
                    }
                    s
                })
                .collect()
        };
        let xe: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = apply(&xe);
        let out = gmres(
            apply,
            &b,
            GmresParams {
                rtol: 1e-12,
                restart: 7,
                max_iter: 500,
            },
        )
        .unwrap();
        let err = out.x.iter().zip(&xe).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn zero_rhs() {
        let out = gmres(|v: &[f64]| v.to_vec(), &[0.0; 4], GmresParams::default()).unwrap();
        assert_eq!(out.iterations, 0);
    }
}
