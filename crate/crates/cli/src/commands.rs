use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use spherevortex_core::desingularize::{solve_scales, write_boundary_csv, Ansatz};
use spherevortex_core::elliptic::{
    antisymmetry_defect, extract_profile, fixed_point_solve, write_profile_csv, Nonlinearity, SolveParams,
};
use spherevortex_core::kernel::{gamma_singular, green, regular, DEFAULT_CAP};
use spherevortex_core::spectral::SpectralPlan;
use spherevortex_core::verify::{run_suite, PdeGrid, Suite};
use spherevortex_core::vortex::{
    find_critical, integrate, kr_energy, kr_gradient, norm, rotating_frame_transfer, Frame, Pins, DRIFT_SIGN,
};
use spherevortex_core::{GroundState, LatLonGrid, SpherePoint, VortexSystem};

use crate::config::{Refine, RunConfig};
use crate::CliError;

/// Output directory plus the files written so far for one manifest.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Registers `name` and returns its full path.
    fn file(&mut self, name: String) -> PathBuf {
        let p = self.dir.join(&name);
        self.files.push(name);
        p
    }

    fn manifest(self, command: &str, seed_tag: &str, inputs: Value, results: Value) -> Result<Value, CliError> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            version: &'a str,
            seed_tag: &'a str,
            inputs: Value,
            outputs: Vec<String>,
            results: Value,
        }
        let m = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed_tag,
            inputs,
            outputs: self.files,
            results,
        };
        let text = serde_json::to_string_pretty(&m).map_err(|e| CliError::Numerical(e.to_string()))?;
        let name = format!("{}.json", command.replace(' ', "-"));
        std::fs::write(self.dir.join(name), text + "\n")
            .map_err(|e| CliError::Config(format!("{}: {e}", self.dir.display())))?;
        Ok(serde_json::to_value(&m).unwrap_or(Value::Null))
    }
}

fn point(s: &str) -> Result<SpherePoint, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    let parse = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("expected THETA,PHI, got {s:?}")))
    };
    if parts.len() != 2 {
        return Err(CliError::Config(format!("expected THETA,PHI, got {s:?}")));
    }
    SpherePoint::new(parse(parts[0])?, parse(parts[1])?).map_err(|e| CliError::Config(e.to_string()))
}

pub fn system_from(path: Option<&Path>, cfg: &RunConfig) -> Result<VortexSystem, CliError> {
    match path {
        Some(p) => VortexSystem::read_json(p).map_err(|e| CliError::Config(e.to_string())),
        None => cfg.vortex_system(),
    }
}

pub fn kernel_eval(cfg: &RunConfig, out: Outputs, z: &str, zps: &[String]) -> Result<(), CliError> {
    let z = point(z)?;
    let mut rows = Vec::new();
    for s in zps {
        let zp = point(s)?;
        let g = green(&z, &zp)?;
        let h = if z.geodesic(&zp) <= DEFAULT_CAP {
            let r = regular(&z, &zp)?;
            json!({"value": r.value, "grad": [r.grad_first_slot.0, r.grad_first_slot.1]})
        } else {
            Value::Null
        };
        let row = json!({
            "z": [z.theta, z.phi],
            "zp": [zp.theta, zp.phi],
            "G": g.value,
            "grad_G": [g.grad_first_slot.0, g.grad_first_slot.1],
            "Gamma": gamma_singular(&z, &zp)?,
            "H": h,
        });
        println!("{row}");
        rows.push(row);
    }
    out.manifest("kernel eval", &cfg.seed_tag, json!({"z": [z.theta, z.phi], "zp": zps}), json!(rows))?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub enum KrOp {
    Energy,
    Grad,
    Critical(Refine),
}

fn pins(refine: Refine, n: usize) -> Option<Pins> {
    match refine {
        Refine::Traveling => Some(Pins::traveling(n)),
        Refine::Gauge => Some(Pins::gauge(n)),
        Refine::None => None,
    }
}

pub fn kr(cfg: &RunConfig, mut out: Outputs, sys: &VortexSystem, op: KrOp) -> Result<(), CliError> {
    let inputs = json!({"system": serde_json::from_str::<Value>(&sys.to_json_string()?).unwrap_or(Value::Null)});
    let (cmd, results) = match op {
        KrOp::Energy => ("kr energy", json!({"energy": kr_energy(sys)?})),
        KrOp::Grad => {
            let g = kr_gradient(sys)?;
            ("kr grad", json!({"gradient": g, "norm": norm(&g)}))
        }
        KrOp::Critical(refine) => {
            let p = pins(refine, sys.len()).ok_or_else(|| CliError::Config("critical needs pins".into()))?;
            let rep = find_critical(sys, &p, 1e-11, 100)?;
            let path = out.file("critical_system.json".into());
            std::fs::write(&path, rep.config.to_json_string()? + "\n")
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            ("kr critical", json!({"report": rep, "W": rep.config.w}))
        }
    };
    println!("{}", serde_json::to_string(&results).unwrap_or_default());
    out.manifest(cmd, &cfg.seed_tag, inputs, results)?;
    Ok(())
}

pub struct DynamicsArgs {
    pub t_end: f64,
    pub dt: f64,
    pub sample_every: usize,
    pub co_rotating: bool,
}

pub fn dynamics(cfg: &RunConfig, mut out: Outputs, sys: &VortexSystem, a: &DynamicsArgs) -> Result<(), CliError> {
    let frame = if a.co_rotating { Frame::CoRotating(sys.w) } else { Frame::Inertial };
    let tr = integrate(sys, frame, a.t_end, a.dt, a.sample_every)?;
    tr.write_csv(&out.file("trajectory.csv".into()))?;
    let rate = if a.co_rotating { 0.0 } else { DRIFT_SIGN * sys.w };
    let results = json!({
        "steps": tr.steps,
        "energy_drift": tr.energy_drift,
        "moment_drift": tr.moment_drift,
        "drift_sign": DRIFT_SIGN,
        "rigid_drift_deviation": tr.rigid_drift_deviation(rate),
        "aborted": tr.aborted,
    });
    println!("{results}");
    let inputs = json!({"t_end": a.t_end, "dt": a.dt, "sample_every": a.sample_every, "co_rotating": a.co_rotating, "W": sys.w});
    out.manifest("dynamics run", &cfg.seed_tag, inputs, results)?;
    if let Some(msg) = tr.aborted {
        return Err(CliError::Numerical(format!("integration aborted: {msg}")));
    }
    Ok(())
}

pub fn ground_state(cfg: &RunConfig, mut out: Outputs, gamma: f64) -> Result<(), CliError> {
    let gs = GroundState::new(gamma)?;
    gs.write_csv(&out.file("ground_state.csv".into()))?;
    let results = json!({
        "gamma": gs.gamma,
        "r_support": gs.r_support,
        "d_boundary": gs.d_boundary,
        "mass_kappa": gs.mass_kappa,
    });
    println!("{results}");
    out.manifest("ground-state solve", &cfg.seed_tag, json!({"gamma": gamma}), results)?;
    Ok(())
}

pub fn scale(cfg: &RunConfig, out: Outputs, gamma: f64, epsilon: f64, kappa: f64) -> Result<(), CliError> {
    let gs = GroundState::new(gamma)?;
    let sc = solve_scales(epsilon, kappa, &gs)?;
    let (r1, r2) = sc.identity_residuals(&gs);
    let results = json!({
        "gamma": sc.gamma,
        "epsilon": sc.epsilon,
        "kappa": sc.kappa,
        "s": sc.s,
        "beta": sc.beta,
        "s_over_epsilon": sc.s / sc.epsilon,
        "circulation_factor": sc.circulation_factor,
        "identity_residual": r1.max(r2),
    });
    println!("{results}");
    let inputs = json!({"gamma": gamma, "epsilon": epsilon, "kappa": kappa});
    out.manifest("scale solve", &cfg.seed_tag, inputs, results)?;
    Ok(())
}

fn refined(sys: &VortexSystem, refine: Refine) -> Result<VortexSystem, CliError> {
    match pins(refine, sys.len()) {
        Some(p) => Ok(find_critical(sys, &p, 1e-11, 100)?.config),
        None => Ok(sys.clone()),
    }
}

fn grid(cfg: &RunConfig) -> Result<Arc<LatLonGrid>, CliError> {
    Ok(Arc::new(LatLonGrid::new(cfg.grid.n_theta, cfg.grid.n_phi).map_err(|e| CliError::Config(e.to_string()))?))
}

pub fn construct(cfg: &RunConfig, mut out: Outputs, sys: &VortexSystem, fields: bool) -> Result<(), CliError> {
    let sys = refined(sys, cfg.refine)?;
    let gs = Arc::new(GroundState::new(cfg.gamma)?);
    let frame = rotating_frame_transfer(sys.w, cfg.rotation);
    let mut per_eps = Vec::new();
    for (k, &eps) in cfg.epsilon.iter().enumerate() {
        let a = Ansatz::construct(&sys, eps, gs.clone())?;
        let curves = a.boundary_curves()?;
        write_boundary_csv(&curves, &out.file(format!("construct_e{k}_boundary.csv")))?;
        if fields {
            let g = grid(cfg)?;
            let psi = out.file(format!("construct_e{k}_psi.csv"));
            let side = a.psi_field(g.clone()).write_csv(&psi)?;
            out.files.push(file_name(&side));
            let c = frame.background_cos_coefficient;
            let w = a.vorticity_field(g).zip_with(&cos_field(cfg)?, |v, ct| v + c * ct);
            let vp = out.file(format!("construct_e{k}_vorticity.csv"));
            let side = w.write_csv(&vp)?;
            out.files.push(file_name(&side));
        }
        let scales: Vec<Value> = a
            .cores
            .iter()
            .map(|c| {
                let s = c.scale();
                json!({"s": s.s, "beta": s.beta, "circulation_factor": s.circulation_factor})
            })
            .collect();
        let circ: Vec<f64> = (0..a.cores.len()).map(|l| a.core_circulation(l)).collect();
        per_eps.push(json!({
            "epsilon": eps,
            "scales": scales,
            "mu": a.mu,
            "level_speed": a.level_speed,
            "stagnation_residual": a.stagnation_residual,
            "core_circulation": circ,
            "max_boundary_radius_over_s": a.max_boundary_radius_over_s(&curves),
            "boundary_max_deviation": curves.iter().map(|c| c.max_deviation).fold(0.0, f64::max),
            "convex": curves.iter().all(|c| c.is_convex()),
        }));
    }
    let results = json!({"W": sys.w, "rotating_frame": frame, "sweep": per_eps});
    println!("{}", serde_json::to_string(&results).unwrap_or_default());
    out.manifest("construct", &cfg.seed_tag, inputs_of(cfg, &sys)?, results)?;
    Ok(())
}

fn cos_field(cfg: &RunConfig) -> Result<spherevortex_core::SphericalField, CliError> {
    Ok(spherevortex_core::SphericalField::from_fn(grid(cfg)?, |t, _| t.cos()))
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn inputs_of(cfg: &RunConfig, sys: &VortexSystem) -> Result<Value, CliError> {
    let mut v = serde_json::to_value(cfg).map_err(|e| CliError::Numerical(e.to_string()))?;
    v["refined_system"] = serde_json::from_str(&sys.to_json_string()?).unwrap_or(Value::Null);
    Ok(v)
}

pub fn solve(cfg: &RunConfig, mut out: Outputs, sys: &VortexSystem) -> Result<(), CliError> {
    let sys = refined(sys, cfg.refine)?;
    let gs = Arc::new(GroundState::new(cfg.gamma)?);
    let plan = SpectralPlan::new(grid(cfg)?).map_err(|e| CliError::Config(e.to_string()))?;
    let mut per_eps = Vec::new();
    let mut all_converged = true;
    for (k, &eps) in cfg.epsilon.iter().enumerate() {
        let a = Ansatz::construct(&sys, eps, gs.clone())?;
        let mut params = SolveParams::from_ansatz(&a);
        params.damping = cfg.solver.damping;
        params.tol = cfg.solver.tol;
        params.max_iter = cfg.solver.max_iter;
        params.mask_radius = cfg.solver.mask_radius;
        params.method = cfg.solver.method;
        let nl = Nonlinearity::from_ansatz(plan.grid.clone(), &a, &params)?;
        let rep = fixed_point_solve(&a.psi_field(plan.grid.clone()), &plan, &nl, &params)?;
        let psi_path = out.file(format!("solve_e{k}_psi.csv"));
        let side = rep.psi.write_csv(&psi_path)?;
        out.files.push(file_name(&side));
        rep.write_history_csv(&out.file(format!("solve_e{k}_history.csv")))?;
        let profiles = (0..a.cores.len())
            .map(|l| extract_profile(&plan, &rep.psi, l, &a, &nl))
            .collect::<Result<Vec<_>, _>>()?;
        write_profile_csv(&profiles, &out.file(format!("solve_e{k}_profile.csv")))?;
        all_converged &= rep.converged;
        per_eps.push(json!({
            "epsilon": eps,
            "report": rep,
            "final_increment": rep.final_increment(),
            "antisymmetry_defect": antisymmetry_defect(&rep.psi),
            "profiles": profiles,
            "mu": params.mu,
            "level_speed": params.level_speed,
        }));
    }
    let results = json!({"W": sys.w, "sweep": per_eps});
    println!("{}", serde_json::to_string(&results).unwrap_or_default());
    out.manifest("solve", &cfg.seed_tag, inputs_of(cfg, &sys)?, results)?;
    if !all_converged {
        return Err(CliError::Numerical("fixed-point iteration did not converge".into()));
    }
    Ok(())
}

pub fn verify(cfg: &RunConfig, out: Outputs, suite: Suite) -> Result<(), CliError> {
    let grid = PdeGrid {
        n_theta: cfg.grid.n_theta,
        n_phi: cfg.grid.n_phi,
    };
    let checks = run_suite(suite, grid);
    for c in &checks {
        println!(
            "{} {}: {} [{:.2}s]",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail,
            c.seconds
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let name = format!("verify {}", serde_json::to_value(suite).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default());
    out.manifest(&name, &cfg.seed_tag, json!({"suite": suite, "grid": cfg.grid}), json!(checks))?;
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}
