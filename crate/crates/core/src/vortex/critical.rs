//! Gauge-fixed Newton search for critical points of K and the
//! symmetry-reduced Hessian.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::{kr_gradient, norm, VortexSystem};
use crate::error::{Error, Result};

/// Central-difference step for the Newton Jacobian.
const JAC_STEP: f64 = 1e-6;
/// Central-difference step for the Hessian.
const HESS_STEP: f64 = 1e-5;

/// Which unknowns are held fixed during [`find_critical`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Pins {
    pub theta: Vec<bool>,
    pub phi: Vec<bool>,
    pub w: bool,
}

impl Pins {
    /// Everything free except φ of the first vortex and W.
    pub fn gauge(n: usize) -> Self {
        let mut phi = vec![false; n];
        phi[0] = true;
        Self {
            theta: vec![false; n],
            phi,
            w: true,
        }
    }

    /// Pins all φ and θ of the first vortex; solves for the other θ and W.
    pub fn traveling(n: usize) -> Self {
        let mut theta = vec![false; n];
        theta[0] = true;
        Self {
            theta,
            phi: vec![true; n],
            w: false,
        }
    }

    fn free_coords(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for l in 0..self.theta.len() {
            if !self.theta[l] {
                out.push(2 * l);
            }
            if !self.phi[l] {
                out.push(2 * l + 1);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducedHessian {
    /// Full FD Hessian in (θ₀, φ₀, θ₁, φ₁, …).
    #[serde(skip)]
    pub full: DMatrix<f64>,
    /// ‖A − Aᵀ‖∞ before symmetrization.
    pub asymmetry: f64,
    /// ‖A e‖∞ for the unit φ-shift direction e.
    pub zero_mode_residual: f64,
    /// Eigenvalues of the symmetrized Hessian restricted to e⊥, ascending.
    pub spectrum: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalPointReport {
    #[serde(skip)]
    pub config: VortexSystem,
    pub grad_norm: f64,
    pub reduced_spectrum: Vec<f64>,
    pub nondegenerate: bool,
    pub iterations: usize,
}

/// FD Hessian of K (central differences of the analytic gradient),
/// projected off the φ-shift direction.
pub fn reduced_hessian(sys: &VortexSystem) -> Result<ReducedHessian> {
    let g0 = kr_gradient(sys)?;
    let gn = norm(&g0);
    if gn >= 1e-8 {
        return Err(Error::Precondition(format!(
            "reduced Hessian needs a critical point, gradient norm is {gn:e}"
        )));
    }
    let x0 = sys.coords();
    let dim = x0.len();
    let mut a = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[k] += HESS_STEP;
        xm[k] -= HESS_STEP;
        let gp = kr_gradient(&sys.with_coords(&xp)?)?;
        let gm = kr_gradient(&sys.with_coords(&xm)?)?;
        for i in 0..dim {
            a[(i, k)] = (gp[i] - gm[i]) / (2.0 * HESS_STEP);
        }
    }
    let asymmetry = (&a - a.transpose()).amax();
    let n = sys.len();
    let mut e = DVector::zeros(dim);
    for l in 0..n {
        e[2 * l + 1] = 1.0 / (n as f64).sqrt();
    }
    let zero_mode_residual = (&a * &e).amax();

    // orthonormal basis of e⊥ by Gram–Schmidt on the unit vectors, skipping φ₀
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(dim - 1);
    for k in (0..dim).filter(|&k| k != 1) {
        let mut v = DVector::zeros(dim);
        v[k] = 1.0;
        for _ in 0..2 {
            let c = v.dot(&e);
            v -= &e * c;
            for b in &basis {
                let c = v.dot(b);
                v -= b * c;
            }
        }
        let nv = v.norm();
        basis.push(v / nv);
    }
    let q = DMatrix::from_columns(&basis);
    let sym = (&a + a.transpose()) * 0.5;
    let red = q.transpose() * sym * &q;
    let mut spectrum: Vec<f64> = SymmetricEigen::new(red).eigenvalues.iter().copied().collect();
    spectrum.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(ReducedHessian {
        full: a,
        asymmetry,
        zero_mode_residual,
        spectrum,
    })
}

fn is_nondegenerate(spectrum: &[f64]) -> bool {
    let max = spectrum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = spectrum.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    max > 0.0 && min > 1e-8 * max
}

/// Damped Gauss–Newton on the full gradient of K over the unpinned
/// coordinates (and W when free). Stops once ‖∇K‖ < `tol`.
pub fn find_critical(seed: &VortexSystem, pins: &Pins, tol: f64, max_iter: usize) -> Result<CriticalPointReport> {
    let n = seed.len();
    if pins.theta.len() != n || pins.phi.len() != n {
        return Err(Error::Config("pin vectors must match the vortex count".into()));
    }
    if !pins.phi.iter().any(|&p| p) {
        return Err(Error::Precondition(
            "at least one longitude must be pinned to fix the rotation gauge".into(),
        ));
    }
    let free = pins.free_coords();
    let mut sys = seed.clone();
    let mut r = kr_gradient(&sys)?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("seed gradient is not finite".into()));
    }
    let mut rn = norm(&r);
    let mut iterations = 0;
    while rn >= tol {
        if iterations >= max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: rn,
            });
        }
        iterations += 1;
        let ncol = free.len() + usize::from(!pins.w);
        let mut jac = DMatrix::zeros(2 * n, ncol);
        let x0 = sys.coords();
        for (c, &k) in free.iter().enumerate() {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[k] += JAC_STEP;
            xm[k] -= JAC_STEP;
            let gp = kr_gradient(&sys.with_coords(&xp)?)?;
            let gm = kr_gradient(&sys.with_coords(&xm)?)?;
            for i in 0..2 * n {
                jac[(i, c)] = (gp[i] - gm[i]) / (2.0 * JAC_STEP);
            }
        }
        if !pins.w {
            // ∂(∂K/∂θ_l)/∂W = Γ_l sinθ_l
            for (l, v) in sys.vortices.iter().enumerate() {
                jac[(2 * l, ncol - 1)] = v.strength() * v.pos.theta.sin();
            }
        }
        let rhs = DVector::from_iterator(2 * n, r.iter().map(|v| -v));
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        let step = svd
            .solve(&rhs, 1e-13 * smax.max(f64::MIN_POSITIVE))
            .map_err(|e| Error::Precondition(e.to_string()))?;

        let mut lam = 1.0;
        loop {
            let mut x = x0.clone();
            for (c, &k) in free.iter().enumerate() {
                x[k] += lam * step[c];
            }
            let w = if pins.w { sys.w } else { sys.w + lam * step[ncol - 1] };
            let cand = sys.with_coords(&x)?.with_w(w);
            let rc = kr_gradient(&cand)?;
            let rcn = norm(&rc);
            if rcn < rn || lam < 1e-6 {
                sys = cand;
                r = rc;
                rn = rcn;
                break;
            }
            lam *= 0.5;
        }
    }
    let (spectrum, nondegenerate) = match reduced_hessian(&sys) {
        Ok(h) => {
            let nd = is_nondegenerate(&h.spectrum);
            (h.spectrum, nd)
        }
        Err(_) => (Vec::new(), false),
    };
    Ok(CriticalPointReport {
        config: sys,
        grad_norm: rn,
        reduced_spectrum: spectrum,
        nondegenerate,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vortex::{Sign, SignedVortex};
    use crate::SpherePoint;
    use std::f64::consts::PI;

    #[test]
    fn dipole_from_perturbed_seed() {
        let mut seed = VortexSystem::dipole(1.0, PI / 3.0, 0.0).unwrap();
        seed.vortices[1].pos.theta += 0.05;
        seed.w *= 1.1;
        let rep = find_critical(&seed, &Pins::traveling(2), 1e-11, 100).unwrap();
        assert!(rep.grad_norm < 1e-11);
        let c = &rep.config;
        assert!((c.vortices[1].pos.theta - (PI - PI / 3.0)).abs() < 1e-9);
        assert!((c.w - 1.0 / (2.0 * PI)).abs() < 1e-9);
        assert!(rep.nondegenerate);
    }

    #[test]
    fn critical_seed_needs_no_steps() {
        let sys = VortexSystem::new(
            vec![
                SignedVortex::new(1.0, Sign::Positive, SpherePoint::new(1.0, 0.0).unwrap()).unwrap(),
                SignedVortex::new(1.0, Sign::Negative, SpherePoint::new(PI - 1.0, PI).unwrap())
                    .unwrap(),
            ],
            0.0,
        )
        .unwrap();
        let mut pins = Pins::gauge(2);
        pins.theta = vec![true, true];
        let rep = find_critical(&sys, &pins, 1e-11, 100).unwrap();
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn gauge_must_be_fixed() {
        let sys = VortexSystem::dipole(1.0, 1.0, 0.0).unwrap();
        let mut pins = Pins::gauge(2);
        pins.phi = vec![false, false];
        assert!(matches!(
            find_critical(&sys, &pins, 1e-11, 10),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn hessian_rejects_noncritical() {
        let mut sys = VortexSystem::dipole(1.0, 1.0, 0.0).unwrap();
        sys.w *= 2.0;
        assert!(matches!(reduced_hessian(&sys), Err(Error::Precondition(_))));
    }
}
