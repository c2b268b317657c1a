//! Solves the dipole problem on one grid and prints the solver report.
//!
//! Usage: pde_run [n_theta] [epsilon] [damping]

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use spherevortex_core::desingularize::Ansatz;
use spherevortex_core::elliptic::{antisymmetry_defect, extract_profile, fixed_point_solve, Nonlinearity, SolveParams};
use spherevortex_core::spectral::SpectralPlan;
use spherevortex_core::{GroundState, LatLonGrid, VortexSystem};

fn main() -> spherevortex_core::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let nt: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(128);
    let eps: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.05);
    let damping: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let t0 = Instant::now();
    let sys = VortexSystem::dipole(2.0 * PI, PI / 3.0, 0.0)?;
    let gs = Arc::new(GroundState::new(2.0)?);
    let ans = Ansatz::construct(&sys, eps, gs)?;
    let grid = Arc::new(LatLonGrid::new(nt, 2 * nt)?);
    let plan = SpectralPlan::new(grid.clone())?;
    let mut params = SolveParams::from_ansatz(&ans);
    params.damping = damping;
    let nl = Nonlinearity::from_ansatz(grid.clone(), &ans, &params)?;
    let seed = ans.psi_field(grid);
    println!("setup {:.1}s, s = {:.5}, mu = {:?}, W = {:.5}", t0.elapsed().as_secs_f64(), ans.cores[0].scale().s, ans.mu, ans.level_speed);
    let rep = fixed_point_solve(&seed, &plan, &nl, &params)?;
    println!("solve {:.1}s", t0.elapsed().as_secs_f64());
    for (k, (i, r)) in rep.increment_history.iter().zip(&rep.residual_history).enumerate() {
        println!("{k:3} inc {i:.3e} res {r:.3e}");
    }
    println!(
        "converged {} iters {} linear {} seed {:.3e} final {:.3e} mean {:.2e} aborted {:?}",
        rep.converged, rep.iterations, rep.linear_iterations, rep.seed_residual, rep.final_residual, rep.projected_mean, rep.aborted
    );
    println!("antisymmetry {:.3e}", antisymmetry_defect(&rep.psi));
    for l in 0..2 {
        let p = extract_profile(&plan, &rep.psi, l, &ans, &nl)?;
        println!("profile {l}: stream {:.4} vort {:.4}", p.stream_deviation, p.vorticity_deviation);
    }
    let p0 = extract_profile(&plan, &seed, 0, &ans, &nl)?;
    println!("seed profile: stream {:.4} vort {:.4}", p0.stream_deviation, p0.vorticity_deviation);
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
    Ok(())
}
