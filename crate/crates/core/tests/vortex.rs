use std::f64::consts::{LN_2, PI};

use proptest::prelude::*;
use spherevortex_core::vortex::{
    eom_rhs, find_critical, integrate, kr_energy, kr_gradient, moment, norm, reduced_hessian, Frame, Pins,
    DRIFT_SIGN,
};
use spherevortex_core::{Sign, SignedVortex, SpherePoint, VortexSystem};

fn v(kappa: f64, sign: Sign, t: f64, p: f64) -> SignedVortex {
    SignedVortex::new(kappa, sign, SpherePoint::new(t, p).unwrap()).unwrap()
}

fn cart(t: f64, p: f64) -> [f64; 3] {
    [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
}

/// K re-summed from Cartesian chords with the diagonal value of H taken as
/// ln2/(2π).
fn energy_oracle(sys: &VortexSystem) -> f64 {
    let vs = &sys.vortices;
    let mut terms = Vec::new();
    for (l, a) in vs.iter().enumerate() {
        let ga = a.strength();
        terms.push(0.5 * ga * ga * LN_2 / (2.0 * PI));
        terms.push(-sys.w * ga * a.pos.theta.cos());
        for (m, b) in vs.iter().enumerate() {
            if m == l {
                continue;
            }
            let (x, y) = (cart(a.pos.theta, a.pos.phi), cart(b.pos.theta, b.pos.phi));
            let c: f64 = x.iter().zip(&y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / 2.0;
            let g = -c.ln() / (4.0 * PI) + LN_2 / (4.0 * PI);
            terms.push(0.5 * ga * b.strength() * g);
        }
    }
    // sum smallest magnitudes first
    terms.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
    terms.iter().sum()
}

fn fd_gradient(sys: &VortexSystem, h: f64) -> Vec<f64> {
    let x = sys.coords();
    (0..x.len())
        .map(|k| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let ep = kr_energy(&sys.with_coords(&xp).unwrap()).unwrap();
            let em = kr_energy(&sys.with_coords(&xm).unwrap()).unwrap();
            (ep - em) / (2.0 * h)
        })
        .collect()
}

fn converged_dipole() -> VortexSystem {
    let seed = VortexSystem::dipole(1.0, PI / 3.0, 0.0).unwrap().with_w(0.0);
    find_critical(&seed, &Pins::traveling(2), 1e-11, 100).unwrap().config
}

#[test]
fn antipodal_pair_energy_and_gradient() {
    let sys = VortexSystem::new(
        vec![v(1.0, Sign::Positive, PI / 3.0, 0.0), v(1.0, Sign::Negative, 2.0 * PI / 3.0, PI)],
        0.0,
    )
    .unwrap();
    assert!((kr_energy(&sys).unwrap() - LN_2 / (2.0 * PI)).abs() < 1e-14);
    assert!(norm(&kr_gradient(&sys).unwrap()) < 1e-14);
}

#[test]
fn energy_matches_cartesian_resummation() {
    let sys = VortexSystem::new(
        vec![
            v(0.7, Sign::Positive, 0.9, 0.3),
            v(1.1, Sign::Positive, 1.7, 2.5),
            v(1.3, Sign::Negative, 2.2, 4.1),
            v(0.5, Sign::Negative, 0.6, 5.5),
        ],
        0.37,
    )
    .unwrap();
    let e = kr_energy(&sys).unwrap();
    assert!((e - energy_oracle(&sys)).abs() < 1e-12, "{e} vs {}", energy_oracle(&sys));
}

#[test]
fn gauss_constraint_enforced() {
    let r = VortexSystem::new(
        vec![v(1.0, Sign::Positive, 1.0, 0.0), v(2.0, Sign::Negative, 2.0, 0.0)],
        0.0,
    );
    assert!(r.is_err());
}

#[test]
fn json_round_trip_and_errors() {
    let sys = VortexSystem::dipole(1.0, PI / 3.0, 0.2).unwrap();
    let back = VortexSystem::from_json_str(&sys.to_json_string().unwrap()).unwrap();
    assert_eq!(back.coords(), sys.coords());
    assert_eq!(back.w, sys.w);
    let raw = r#"{"vortices":[{"kappa":1,"sign":"+","theta":1.0,"phi":0},{"kappa":1,"sign":"-","theta":2.0,"phi":0}],"W":0.5}"#;
    let s = VortexSystem::from_json_str(raw).unwrap();
    assert_eq!(s.w, 0.5);
    assert!(VortexSystem::from_json_str("{not json").is_err());
}

#[test]
fn dipole_critical_point() {
    let rep = find_critical(
        &VortexSystem::dipole(1.0, PI / 3.0, 0.0).unwrap().with_w(0.0),
        &Pins::traveling(2),
        1e-11,
        100,
    )
    .unwrap();
    let sys = &rep.config;
    assert!(rep.grad_norm < 1e-11);
    let (tp, tm) = (sys.vortices[0].pos.theta, sys.vortices[1].pos.theta);
    assert!((tp + tm - PI).abs() < 1e-10, "mirror symmetry: {tp} {tm}");
    // closed form for the symmetric dipole
    assert!((sys.w - 1.0 / (4.0 * PI * (PI / 3.0).cos())).abs() < 1e-10);
    // independent check of ∇K = 0 by finite differences of the energy
    assert!(fd_gradient(sys, 1e-5).iter().all(|g| g.abs() < 1e-8));
    assert!(rep.nondegenerate);
    assert!(rep.reduced_spectrum.iter().all(|e| e.abs() > 1e-3));
}

#[test]
fn perturbed_seed_reaches_same_point() {
    let base = converged_dipole();
    let mut x = base.coords();
    x[2] += 1e-2;
    let seed = base.with_coords(&x).unwrap().with_w(0.2);
    let rep = find_critical(&seed, &Pins::traveling(2), 1e-11, 100).unwrap();
    let d: f64 = rep
        .config
        .coords()
        .iter()
        .zip(base.coords())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(d < 1e-10);
    assert!((rep.config.w - base.w).abs() < 1e-10);
}

#[test]
fn critical_seed_returns_immediately() {
    let sys = VortexSystem::new(
        vec![v(1.0, Sign::Positive, PI / 3.0, 0.0), v(1.0, Sign::Negative, 2.0 * PI / 3.0, PI)],
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
    let sys = converged_dipole();
    let mut pins = Pins::gauge(2);
    pins.phi = vec![false, false];
    assert!(find_critical(&sys, &pins, 1e-11, 10).is_err());
}

#[test]
fn reduced_hessian_properties() {
    let sys = converged_dipole();
    let h = reduced_hessian(&sys).unwrap();
    assert!(h.asymmetry < 1e-6);
    assert!(h.zero_mode_residual < 1e-6);
    assert_eq!(h.spectrum.len(), 3);
    assert!(h.spectrum.iter().all(|e| e.abs() > 1e-3), "{:?}", h.spectrum);
    assert!(reduced_hessian(&sys.with_w(0.0)).is_err());
}

#[test]
fn dynamics_at_the_critical_point() {
    let sys = converged_dipole();
    let c = eom_rhs(&sys, Frame::CoRotating(sys.w)).unwrap();
    assert!(c.iter().all(|x| x.abs() < 1e-10));
    let i = eom_rhs(&sys, Frame::Inertial).unwrap();
    assert!(i[0].abs() < 1e-10 && i[2].abs() < 1e-10);
    assert!((i[1] - i[3]).abs() < 1e-8);
    assert!((i[1].abs() - sys.w.abs()).abs() < 1e-8);
    assert!((i[1] - DRIFT_SIGN * sys.w).abs() < 1e-8);
}

#[test]
fn rigid_drift_over_long_run() {
    let sys = converged_dipole();
    let tr = integrate(&sys, Frame::Inertial, 10.0, 1e-3, 100).unwrap();
    assert!(tr.aborted.is_none());
    assert!(tr.rigid_drift_deviation(DRIFT_SIGN * sys.w) < 1e-6);
    assert!(tr.energy_drift < 1e-8);
    assert!(tr.moment_drift < 1e-8);
}

#[test]
fn invariants_converge_at_fourth_order() {
    // a generic non-equilibrium configuration
    let sys = VortexSystem::unconstrained(
        vec![
            v(1.0, Sign::Positive, 1.0, 0.0),
            v(0.8, Sign::Positive, 1.4, 0.9),
            v(1.2, Sign::Negative, 2.0, 2.0),
        ],
        0.0,
    )
    .unwrap();
    let a = integrate(&sys, Frame::Inertial, 2.0, 0.04, 1).unwrap();
    let b = integrate(&sys, Frame::Inertial, 2.0, 0.02, 1).unwrap();
    let ratio = a.energy_drift / b.energy_drift;
    assert!(ratio > 10.0, "energy drift ratio {ratio}");
    // final positions: Richardson estimate of the order
    let c = integrate(&sys, Frame::Inertial, 2.0, 0.01, 1).unwrap();
    let last = |t: &spherevortex_core::vortex::Trajectory| t.samples.last().unwrap().coords.clone();
    let (xa, xb, xc) = (last(&a), last(&b), last(&c));
    let e1: f64 = xa.iter().zip(&xb).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let e2: f64 = xb.iter().zip(&xc).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    assert!(e1 / e2 > 12.0 && e1 / e2 < 20.0, "order ratio {}", e1 / e2);
}

#[test]
fn like_signed_pair_rotates_rigidly() {
    let sys = VortexSystem::unconstrained(
        vec![v(1.0, Sign::Positive, 1.2, 0.0), v(1.0, Sign::Positive, 1.9, 1.0)],
        0.0,
    )
    .unwrap();
    let tr = integrate(&sys, Frame::Inertial, 5.0, 1e-3, 500).unwrap();
    let chord = |c: &[f64]| {
        let (x, y) = (cart(c[0], c[1]), cart(c[2], c[3]));
        x.iter().zip(&y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>()
    };
    let d0 = chord(&tr.samples[0].coords);
    let m0 = moment(&sys);
    for s in &tr.samples {
        assert!((chord(&s.coords) - d0).abs() < 1e-10);
        // each vortex keeps its angle to the moment axis
        for l in 0..2 {
            let x = cart(s.coords[2 * l], s.coords[2 * l + 1]);
            let x0 = cart(tr.samples[0].coords[2 * l], tr.samples[0].coords[2 * l + 1]);
            let dot = |a: [f64; 3]| a.iter().zip(&m0).map(|(p, q)| p * q).sum::<f64>();
            assert!((dot(x) - dot(x0)).abs() < 1e-10);
        }
    }
    // and it does move
    let last = &tr.samples.last().unwrap().coords;
    assert!((last[1] - tr.samples[0].coords[1]).abs() > 1e-3);
}

#[test]
fn scaling_strengths_and_speed() {
    let sys = converged_dipole();
    for lam in [0.5, 2.0, 3.7] {
        let scaled = VortexSystem::new(
            sys.vortices
                .iter()
                .map(|u| SignedVortex::new(lam * u.kappa, u.sign, u.pos).unwrap())
                .collect(),
            lam * sys.w,
        )
        .unwrap();
        let e = kr_energy(&sys).unwrap();
        assert!((kr_energy(&scaled).unwrap() - lam * lam * e).abs() < 1e-12 * lam * lam);
        assert!(norm(&kr_gradient(&scaled).unwrap()) < 1e-12 * lam * lam);
    }
}

fn system() -> impl Strategy<Value = VortexSystem> {
    (
        prop::collection::vec((0.3f64..PI - 0.3, 0.0f64..2.0 * PI), 4),
        0.3f64..2.0,
        0.3f64..2.0,
        0.3f64..2.0,
        -1.0f64..1.0,
    )
        .prop_filter_map("separated", |(pos, k1, k2, k3, w)| {
            let k4 = k1 + k2 - k3;
            if k4 <= 0.1 {
                return None;
            }
            let s = VortexSystem::new(
                vec![
                    v(k1, Sign::Positive, pos[0].0, pos[0].1),
                    v(k2, Sign::Positive, pos[1].0, pos[1].1),
                    v(k3, Sign::Negative, pos[2].0, pos[2].1),
                    v(k4, Sign::Negative, pos[3].0, pos[3].1),
                ],
                w,
            )
            .ok()?;
            (s.min_separation() > 0.2).then_some(s)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_finite_differences(sys in system()) {
        let g = kr_gradient(&sys).unwrap();
        let f = fd_gradient(&sys, 1e-6);
        for (a, b) in g.iter().zip(&f) {
            prop_assert!((a - b).abs() < 1e-7, "{} vs {}", a, b);
        }
    }

    #[test]
    fn energy_matches_oracle(sys in system()) {
        prop_assert!((kr_energy(&sys).unwrap() - energy_oracle(&sys)).abs() < 1e-12);
    }

    #[test]
    fn longitude_shift_invariance(sys in system(), shift in -3.0f64..3.0) {
        let mut x = sys.coords();
        for k in (1..x.len()).step_by(2) {
            x[k] += shift;
        }
        let e0 = kr_energy(&sys).unwrap();
        let e1 = kr_energy(&sys.with_coords(&x).unwrap()).unwrap();
        prop_assert!((e0 - e1).abs() < 1e-13);
    }

    #[test]
    fn longitude_components_sum_to_zero(sys in system()) {
        let g = kr_gradient(&sys).unwrap();
        let s: f64 = g.iter().skip(1).step_by(2).sum();
        prop_assert!(s.abs() < 1e-12);
    }
}
