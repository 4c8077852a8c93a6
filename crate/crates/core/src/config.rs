//! Scenario configuration, run orchestration, and result persistence.
//!
//! One JSON config file describes a scenario end to end; one run directory
//! collects every artifact it produces. Traces stream to disk as JSON
//! lines so partial runs stay inspectable, and the plot CSV is emitted
//! from the same records that are serialized as JSON.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::crack::{check_admissible, CrackComponent, CrackSet, OriginKind};
use crate::domain::DomainSpec;
use crate::errate::{
    err_vector, extension_independence_check, finite_difference_err, ErrReport,
};
use crate::evolution::{
    check_discrete_griffith, run_discrete_evolution, viscous_energy_balance, EvalContext,
    EvolutionTrace, SearchConfig, TimeGrid,
};
use crate::fem::{energies, solve_equilibrium, SolverKind, SolverOptions};
use crate::geom::Pt;
use crate::material::{LoadTrajectory, MaterialModel};
use crate::mesh::{build_mesh, MeshParams};
use crate::viscosity::{
    detect_jumps, extract_limit, parametrized_csv, parametrized_griffith_check, reparametrize,
    run_family, sample_jump_transitions, viscous_griffith_check, ViscousFamily,
};
use crate::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// Mesh the scenario and solve the equilibrium at the final time.
    SolveOnce,
    /// Solve once and evaluate the release-rate vector with breakdown.
    ErrOnly,
    /// One viscous evolution at the first rung of the ladder.
    EvolveViscous,
    /// Full ladder, limit extraction, and parametrized checks.
    EvolveVv,
    /// Finest-rung evolution plus reparametrization only.
    Parametrize,
}

impl std::str::FromStr for RunMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "solve-once" => Ok(RunMode::SolveOnce),
            "err-only" => Ok(RunMode::ErrOnly),
            "evolve-viscous" => Ok(RunMode::EvolveViscous),
            "evolve-vv" => Ok(RunMode::EvolveVv),
            "parametrize" => Ok(RunMode::Parametrize),
            other => Err(format!(
                "unknown mode `{other}` (solve-once, err-only, evolve-viscous, evolve-vv, parametrize)"
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrackComponentConfig {
    pub vertices: Vec<Pt>,
    pub origin_kind: OriginKind,
    /// Defaults to the full polyline length (the whole component is
    /// initial crack).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen_prefix_len: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshConfig {
    pub h: f64,
    #[serde(default = "default_grading")]
    pub tip_grading: f64,
}

fn default_grading() -> f64 {
    8.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(default = "default_solver_kind")]
    pub kind: SolverKind,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
}

fn default_solver_kind() -> SolverKind {
    SolverKind::Auto
}
fn default_rtol() -> f64 {
    1e-10
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kind: SolverKind::Auto,
            rtol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeGridConfig {
    pub k: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViscosityConfig {
    /// First rung; when absent it is sized so a maximal step's penalty is
    /// comparable to the surface energy it buys.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps0: Option<f64>,
    #[serde(default = "default_ladder")]
    pub ladder: usize,
}

fn default_ladder() -> usize {
    4
}

impl Default for ViscosityConfig {
    fn default() -> Self {
        ViscosityConfig {
            eps0: None,
            ladder: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckConfig {
    #[serde(default = "default_griffith_tol")]
    pub griffith_tol: f64,
    #[serde(default = "default_hausdorff_tol")]
    pub hausdorff_tol: f64,
    #[serde(default = "default_slope_floor")]
    pub slope_floor: f64,
    #[serde(default = "default_jump_subsamples")]
    pub jump_subsamples: usize,
    #[serde(default = "default_param_tol")]
    pub param_tol: f64,
}

fn default_griffith_tol() -> f64 {
    1e-3
}
fn default_hausdorff_tol() -> f64 {
    5e-3
}
fn default_slope_floor() -> f64 {
    1e-6
}
fn default_jump_subsamples() -> usize {
    6
}
fn default_param_tol() -> f64 {
    0.02
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            griffith_tol: default_griffith_tol(),
            hausdorff_tol: default_hausdorff_tol(),
            slope_floor: default_slope_floor(),
            jump_subsamples: default_jump_subsamples(),
            param_tol: default_param_tol(),
        }
    }
}

/// A full scenario: geometry, material, loading, discretization, search,
/// ladder, checks, and the run mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Declared unit system, echoed into outputs.
    #[serde(default = "default_units")]
    pub units: String,
    pub domain: DomainSpec,
    pub material: MaterialModel,
    pub eta: f64,
    #[serde(default)]
    pub initial_crack: Vec<CrackComponentConfig>,
    pub loads: LoadTrajectory,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    #[serde(default = "default_time_grid")]
    pub time_grid: TimeGridConfig,
    #[serde(default)]
    pub viscosity: ViscosityConfig,
    #[serde(default)]
    pub checks: CheckConfig,
    pub mode: RunMode,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub with_oracle: bool,
}

fn default_units() -> String {
    "nondimensional".into()
}
fn default_time_grid() -> TimeGridConfig {
    TimeGridConfig { k: 16 }
}
fn default_output_dir() -> String {
    "out".into()
}
fn default_workers() -> usize {
    1
}

impl ScenarioConfig {
    /// Assemble the crack set from the config.
    pub fn crack(&self) -> Result<CrackSet> {
        let mut comps = Vec::new();
        for c in &self.initial_crack {
            let comp = match c.frozen_prefix_len {
                Some(f) => CrackComponent::with_frozen_len(c.vertices.clone(), c.origin_kind, f)?,
                None => CrackComponent::new(c.vertices.clone(), c.origin_kind)?,
            };
            comps.push(comp);
        }
        CrackSet::new(comps, self.eta)
    }

    pub fn search_config(&self) -> SearchConfig {
        self.search
            .clone()
            .unwrap_or_else(|| SearchConfig::for_mesh(self.mesh.h))
    }

    pub fn mesh_params(&self) -> MeshParams {
        MeshParams {
            h: self.mesh.h,
            tip_grading: self.mesh.tip_grading,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            kind: self.solver.kind,
            rtol: self.solver.rtol,
        }
    }

    pub fn eps0(&self) -> f64 {
        self.viscosity.eps0.unwrap_or_else(|| {
            let dt = self.loads.horizon / self.time_grid.k as f64;
            let dl_max = self.search_config().delta_l_max;
            crate::viscosity::default_eps0(self.material.kappa_bounds[1], dt, dl_max)
        })
    }

    /// Validate everything that can be checked without running, collecting
    /// all violations rather than stopping at the first.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !(self.eta > 0.0) {
            problems.push(format!("eta = {} must be positive", self.eta));
        }
        problems.extend(self.material.validate(&self.domain, 24));
        problems.extend(self.loads.validate(&self.domain, self.eta));
        if !(self.mesh.h > 0.0) {
            problems.push(format!("mesh.h = {} must be positive", self.mesh.h));
        }
        if self.mesh.tip_grading < 1.0 {
            problems.push(format!(
                "mesh.tip_grading = {} must be at least 1",
                self.mesh.tip_grading
            ));
        }
        if !(self.solver.rtol > 0.0) {
            problems.push("solver.rtol must be positive".into());
        }
        if self.time_grid.k == 0 {
            problems.push("time_grid.k must be at least 1".into());
        }
        if self.viscosity.ladder == 0 {
            problems.push("viscosity.ladder must be at least 1".into());
        }
        if let Some(e) = self.viscosity.eps0 {
            if !(e > 0.0) {
                problems.push(format!("viscosity.eps0 = {e} must be positive"));
            }
        }
        match self.crack() {
            Err(e) => problems.push(format!("initial crack: {e}")),
            Ok(crack) => {
                if !crack.components.is_empty() {
                    match check_admissible(&crack, &self.domain) {
                        Err(e) => problems.push(format!("initial crack: {e}")),
                        Ok(rep) if !rep.pass => {
                            let v = rep.first_violation().unwrap();
                            problems.push(format!(
                                "initial crack fails admissibility {}: {}",
                                v.name, v.detail
                            ));
                        }
                        Ok(_) => {}
                    }
                } else if self.mode != RunMode::SolveOnce {
                    problems
                        .push("an initial crack is required for every mode but solve-once".into());
                }
            }
        }
        if self.workers == 0 {
            problems.push("workers must be at least 1".into());
        }
        problems
    }
}

/// Parse and validate a config file. Returns every schema violation at
/// once, not just the first.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let bytes = std::fs::read(path)?;
    let cfg: ScenarioConfig = serde_json::from_slice(&bytes).map_err(|e| {
        Error::Config(vec![format!("{}: {e}", path.display())])
    })?;
    let problems = cfg.validate();
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(problems))
    }
}

// ---------------------------------------------------------------------------
// Run orchestration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct StageStatus {
    pub name: String,
    pub status: String,
    pub seconds: f64,
}

/// Index of a finished run: provenance, stage log, emitted files.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub units: String,
    pub mode: RunMode,
    pub stages: Vec<StageStatus>,
    pub files: Vec<String>,
    /// False when an acceptance-grade check failed during the run.
    pub checks_passed: bool,
}

struct Emitter {
    dir: PathBuf,
    files: Vec<String>,
}

impl Emitter {
    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let mut f = std::fs::File::create(&path)?;
        serde_json::to_writer_pretty(&mut f, value)?;
        f.write_all(b"\n")?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn jsonl<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.dir.join(name);
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
        for row in rows {
            serde_json::to_writer(&mut f, row)?;
            f.write_all(b"\n")?;
        }
        self.files.push(name.to_string());
        Ok(())
    }

    fn text(&mut self, name: &str, content: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), content)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn trace_filename(j: usize) -> String {
    format!("trace_eps{j}.jsonl")
}

/// Execute the configured run end to end, writing all artifacts into the
/// output directory and returning the manifest (also written there).
pub fn run(cfg: &ScenarioConfig, config_bytes: &[u8]) -> Result<RunManifest> {
    let dir = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&dir)?;
    let mut em = Emitter {
        dir: dir.clone(),
        files: Vec::new(),
    };
    let mut stages: Vec<StageStatus> = Vec::new();
    let mut checks_passed = true;

    let mut stage = |name: &str, start: Instant, stages: &mut Vec<StageStatus>| {
        stages.push(StageStatus {
            name: name.to_string(),
            status: "ok".into(),
            seconds: start.elapsed().as_secs_f64(),
        });
    };

    let crack = cfg.crack()?;
    let ctx = EvalContext {
        domain: &cfg.domain,
        material: &cfg.material,
        loads: &cfg.loads,
        mesh_params: cfg.mesh_params(),
        solver: cfg.solver_options(),
        workers: cfg.workers,
    };
    let t_final = cfg.loads.horizon;

    match cfg.mode {
        RunMode::SolveOnce => {
            let t0 = Instant::now();
            let mesh = build_mesh(&cfg.domain, &crack, ctx.mesh_params)?;
            mesh.export_triangle(&dir.join("mesh"))?;
            em.files.push("mesh.node".into());
            em.files.push("mesh.ele".into());
            let u = solve_equilibrium(&mesh, &cfg.material, &cfg.loads, t_final, ctx.solver)?;
            let e = energies(&mesh, &u, &cfg.material, &cfg.loads, t_final, &crack)?;
            em.json(
                "displacement.json",
                &serde_json::json!({ "0": { "t": t_final, "u": u.u, "residual_norm": u.residual_norm } }),
            )?;
            em.json("energy.json", &serde_json::json!({ "0": e }))?;
            stage("solve-once", t0, &mut stages);
        }
        RunMode::ErrOnly => {
            let t0 = Instant::now();
            let mesh = build_mesh(&cfg.domain, &crack, ctx.mesh_params)?;
            let u = solve_equilibrium(&mesh, &cfg.material, &cfg.loads, t_final, ctx.solver)?;
            let report: ErrReport =
                err_vector(&mesh, &u, &cfg.material, &cfg.loads, t_final, &crack)?;
            em.json("err_report.json", &report)?;
            if cfg.with_oracle {
                let mut rows = Vec::new();
                for (m, tip) in report.tips.iter().enumerate() {
                    if let Some(g) = tip.value() {
                        let fd = finite_difference_err(
                            &cfg.domain,
                            &crack,
                            m,
                            &cfg.material,
                            &cfg.loads,
                            t_final,
                            ctx.mesh_params,
                            1e-3,
                            ctx.solver,
                        )?;
                        let rel = (g - fd).abs() / fd.abs().max(1e-300);
                        if rel > 0.02 {
                            checks_passed = false;
                        }
                        rows.push(serde_json::json!({
                            "tip": m, "g": g, "finite_difference": fd, "relative_error": rel
                        }));
                    }
                }
                em.json("err_oracle.json", &rows)?;
                // Cutoff sensitivity at two radii when feasible.
                if let Some(r) = report.tips.first().and_then(|t| match t {
                    crate::errate::TipErr::Ok(e) => Some(e.cutoff_radius),
                    _ => None,
                }) {
                    if let Ok(sens) = extension_independence_check(
                        &mesh,
                        &u,
                        &cfg.material,
                        &cfg.loads,
                        t_final,
                        &crack,
                        0,
                        &[0.6 * r, r],
                    ) {
                        em.json("err_sensitivity.json", &sens)?;
                    }
                }
            }
            stage("err-only", t0, &mut stages);
        }
        RunMode::EvolveViscous => {
            let t0 = Instant::now();
            let grid = TimeGrid::uniform(cfg.loads.horizon, cfg.time_grid.k);
            let search = cfg.search_config();
            let trace = run_discrete_evolution(&crack, &grid, cfg.eps0(), &search, &ctx)?;
            em.jsonl(&trace_filename(0), &trace.steps)?;
            let grep = check_discrete_griffith(&trace, cfg.checks.griffith_tol);
            checks_passed &= grep.all_ok;
            em.json("griffith_report.json", &grep)?;
            em.json("balance.json", &viscous_energy_balance(&trace))?;
            stage("evolve-viscous", t0, &mut stages);
        }
        RunMode::EvolveVv => {
            let t0 = Instant::now();
            let grid = TimeGrid::uniform(cfg.loads.horizon, cfg.time_grid.k);
            let search = cfg.search_config();
            let family: ViscousFamily = run_family(
                &crack,
                &grid,
                cfg.eps0(),
                cfg.viscosity.ladder,
                &search,
                &ctx,
            )?;
            for (j, member) in family.members.iter().enumerate() {
                em.jsonl(&trace_filename(j), &member.steps)?;
            }
            stage("family", t0, &mut stages);

            let t1 = Instant::now();
            let fam_rep = viscous_griffith_check(&family, cfg.checks.griffith_tol);
            checks_passed &= fam_rep.all_ok;
            em.json("family_griffith.json", &fam_rep)?;
            let (limit, extraction) = extract_limit(
                &family,
                cfg.checks.hausdorff_tol,
                search.delta_l_min,
                cfg.domain.diameter(),
            )?;
            checks_passed &= extraction.converged;
            em.json("limit_certificate.json", &extraction)?;
            stage("limit", t1, &mut stages);

            let t2 = Instant::now();
            let p0 = reparametrize(&limit);
            let jumps = detect_jumps(&limit, search.delta_l_min);
            let p = sample_jump_transitions(&p0, &limit, &jumps, cfg.checks.jump_subsamples, &ctx)?;
            // Parametrization identity at every sample.
            for s in &p.samples {
                let defect = (s.tt_prime + s.l_prime.iter().sum::<f64>() - 1.0).abs();
                if defect > 1e-12 {
                    checks_passed = false;
                }
            }
            em.json("parametrized.json", &p)?;
            let pg = parametrized_griffith_check(
                &p,
                cfg.checks.param_tol,
                cfg.checks.slope_floor,
                cfg.material.kappa_bounds[1],
            );
            checks_passed &= pg.all_ok;
            em.json("param_griffith.json", &pg)?;
            em.text("plot_data.csv", &parametrized_csv(&p))?;
            stage("parametrize", t2, &mut stages);
        }
        RunMode::Parametrize => {
            let t0 = Instant::now();
            let grid = TimeGrid::uniform(cfg.loads.horizon, cfg.time_grid.k);
            let search = cfg.search_config();
            let eps_fine = cfg.eps0() / 2f64.powi(cfg.viscosity.ladder as i32 - 1);
            let trace = run_discrete_evolution(&crack, &grid, eps_fine, &search, &ctx)?;
            em.jsonl(&trace_filename(cfg.viscosity.ladder - 1), &trace.steps)?;
            let p0 = reparametrize(&trace);
            let jumps = detect_jumps(&trace, search.delta_l_min);
            let p = sample_jump_transitions(&p0, &trace, &jumps, cfg.checks.jump_subsamples, &ctx)?;
            for s in &p.samples {
                let defect = (s.tt_prime + s.l_prime.iter().sum::<f64>() - 1.0).abs();
                if defect > 1e-12 {
                    checks_passed = false;
                }
            }
            em.json("parametrized.json", &p)?;
            let pg = parametrized_griffith_check(
                &p,
                cfg.checks.param_tol,
                cfg.checks.slope_floor,
                cfg.material.kappa_bounds[1],
            );
            checks_passed &= pg.all_ok;
            em.json("param_griffith.json", &pg)?;
            em.text("plot_data.csv", &parametrized_csv(&p))?;
            stage("parametrize", t0, &mut stages);
        }
    }

    let mut hasher = Sha256::new();
    hasher.update(config_bytes);
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        config_sha256: format!("{:x}", hasher.finalize()),
        units: cfg.units.clone(),
        mode: cfg.mode,
        stages,
        files: em.files.clone(),
        checks_passed,
    };
    let mut f = std::fs::File::create(dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_config_json(mode: &str, out: &str) -> String {
        format!(
            r#"{{
  "domain": {{ "polygon": [[0,0],[1,0],[1,1],[0,1]], "dirichlet_edges": [0, 2] }},
  "material": {{ "lambda": 1.0, "mu": 1.0, "kappa": 1.0, "kappa_bounds": [1.0, 1.0] }},
  "eta": 0.05,
  "initial_crack": [ {{ "vertices": [[0, 0.5], [0.3, 0.5]], "origin_kind": "boundary_anchored" }} ],
  "loads": {{
    "horizon": 1.0,
    "w_profile": [ "0", {{ "expr": "max(0, (y - 0.95)/0.05) - max(0, (0.05 - y)/0.05)" }} ],
    "f_profile": [0.0, 0.0],
    "g_profile": [0.0, 0.0],
    "samples": [ {{ "t": 0.0, "w": 0.0 }}, {{ "t": 1.0, "w": 1.0 }} ]
  }},
  "mesh": {{ "h": 0.08, "tip_grading": 6.0 }},
  "mode": "{mode}",
  "output_dir": "{out}"
}}"#
        )
    }

    #[test]
    fn minimal_config_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, minimal_config_json("solve-once", "unused")).unwrap();
        let cfg = parse_config(&path).unwrap();
        assert_eq!(cfg.mode, RunMode::SolveOnce);
        assert_eq!(cfg.mesh.tip_grading, 6.0);
        assert!(cfg.validate().is_empty());
    }

    #[test]
    fn kappa_bounds_violation_reported_with_h4() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        let bad = minimal_config_json("solve-once", "unused")
            .replace("\"kappa_bounds\": [1.0, 1.0]", "\"kappa_bounds\": [2.0, 1.0]");
        std::fs::write(&path, bad).unwrap();
        match parse_config(&path) {
            Err(Error::Config(problems)) => {
                assert!(problems.iter().any(|p| p.contains("(H4)")), "{problems:?}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn negative_mu_reported_with_h3() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        let bad = minimal_config_json("solve-once", "unused")
            .replace("\"mu\": 1.0", "\"mu\": {\"expr\": \"x - 0.5\"}");
        std::fs::write(&path, bad).unwrap();
        match parse_config(&path) {
            Err(Error::Config(problems)) => {
                assert!(problems.iter().any(|p| p.contains("(H3)")), "{problems:?}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn gap_in_load_samples_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        let bad = minimal_config_json("solve-once", "unused").replace(
            "{ \"t\": 1.0, \"w\": 1.0 }",
            "{ \"t\": 0.5, \"w\": 1.0 }",
        );
        std::fs::write(&path, bad).unwrap();
        match parse_config(&path) {
            Err(Error::Config(problems)) => {
                assert!(
                    problems.iter().any(|p| p.contains("cover")),
                    "{problems:?}"
                );
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn solve_once_writes_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let path = dir.path().join("config.json");
        std::fs::write(
            &path,
            minimal_config_json("solve-once", out.to_str().unwrap()),
        )
        .unwrap();
        let cfg = parse_config(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let manifest = run(&cfg, &bytes).unwrap();
        assert!(manifest.checks_passed);
        for f in ["mesh.node", "mesh.ele", "displacement.json", "energy.json"] {
            assert!(out.join(f).exists(), "{f} missing");
            assert!(manifest.files.contains(&f.to_string()));
        }
        assert!(out.join("manifest.json").exists());
    }

    #[test]
    fn manifests_are_reproducible_modulo_timing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        let out1 = dir.path().join("a");
        let out2 = dir.path().join("b");
        std::fs::write(&path, minimal_config_json("solve-once", out1.to_str().unwrap())).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let cfg1 = parse_config(&path).unwrap();
        let m1 = run(&cfg1, &bytes).unwrap();
        std::fs::write(&path, minimal_config_json("solve-once", out2.to_str().unwrap())).unwrap();
        let bytes2 = std::fs::read(&path).unwrap();
        let cfg2 = parse_config(&path).unwrap();
        let m2 = run(&cfg2, &bytes2).unwrap();
        // Same artifacts, byte for byte (output dirs differ, timing aside).
        for f in ["displacement.json", "energy.json"] {
            let a = std::fs::read(out1.join(f)).unwrap();
            let b = std::fs::read(out2.join(f)).unwrap();
            assert_eq!(a, b, "{f} differs between reruns");
        }
        assert_eq!(m1.files, m2.files);
    }
}
