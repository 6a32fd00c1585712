//! Batch driver: run experiments from configs, certify designs, check rate
//! bounds on traces, and reduce design supports.
//!
//! Exit codes: 0 success (for `run`: ε-optimal termination), 1 errors,
//! 2 iteration cap reached, 3 rate-bound violations.

use crate::adaptive::{self, RunStatus, RunTrace};
use crate::config::{find_point, AlgorithmKind, ConfigError, ExperimentConfig};
use crate::criteria;
use crate::design_space::{caratheodory_reduce, info_matrix, Design, DesignSpace};
use crate::rates::{
    diameter, estimate_constants, linear_bound_curve, linear_rate_pwidth, pwidth_bruteforce,
    sublinear_bound_curve, RateReport,
};
use crate::weight_solver::{solve_weights, vertex_direction, SolveSettings};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_ITERATION_CAP: i32 = 2;
pub const EXIT_RATE_VIOLATION: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Run(String),
}

impl From<adaptive::AdaptiveError> for CliError {
    fn from(e: adaptive::AdaptiveError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<crate::weight_solver::SolveError> for CliError {
    fn from(e: crate::weight_solver::SolveError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<crate::criteria::CriterionError> for CliError {
    fn from(e: crate::criteria::CriterionError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<crate::rates::RateError> for CliError {
    fn from(e: crate::rates::RateError) -> Self {
        CliError::Run(e.to_string())
    }
}

/// On-disk design: support points with full-precision weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignFile {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub psi: f64,
    pub final_psi_min: f64,
    pub status: String,
    pub iterations: usize,
}

fn status_str(s: RunStatus) -> &'static str {
    match s {
        RunStatus::TerminatedEpsOptimal => "terminated_eps_optimal",
        RunStatus::IterationCap => "iteration_cap",
        RunStatus::Infeasible => "infeasible",
    }
}

fn design_file(
    space: &DesignSpace,
    xi: &Design,
    psi: f64,
    trace: &RunTrace,
) -> DesignFile {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for &(i, w) in xi.entries() {
        points.push(space.point(i).to_vec());
        weights.push(w);
    }
    DesignFile {
        points,
        weights,
        psi,
        final_psi_min: trace.final_psi_min,
        status: status_str(trace.status).to_string(),
        iterations: trace.iterations(),
    }
}

/// Design CSV in support-points/weights table shape; weights rounded to six
/// decimals at presentation only.
fn design_csv(file: &DesignFile) -> String {
    let d_x = file.points.first().map_or(0, |p| p.len());
    let mut out = String::new();
    for j in 0..d_x {
        out.push_str(&format!("x_{},", j + 1));
    }
    out.push_str("weight\n");
    for (p, w) in file.points.iter().zip(&file.weights) {
        for c in p {
            out.push_str(&format!("{c},"));
        }
        out.push_str(&format!("{w:.6}\n"));
    }
    out
}

/// Trace CSV. Wall-clock times are intentionally excluded so identical
/// configs and seeds produce byte-identical files.
fn trace_csv(trace: &RunTrace) -> String {
    let mut out = String::from("k,psi,cert_gap,violator,violator_psi,n_active,n_support\n");
    for r in &trace.records {
        let violator = r.violator.map_or(String::new(), |v| v.to_string());
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.k, r.psi, r.cert_gap, violator, r.violator_psi, r.n_active, r.n_support
        ));
    }
    out
}

fn write(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, content)?;
    Ok(())
}

/// Runs the configured algorithm; writes design.json/.csv, trace.csv, and
/// effective-config.json into the output directory.
pub fn cmd_run(config_path: &Path, out_dir: Option<&Path>) -> Result<i32, CliError> {
    cmd_run_seeded(config_path, out_dir, None)
}

/// `cmd_run` with an optional seed override (the `--seed` flag).
pub fn cmd_run_seeded(
    config_path: &Path,
    out_dir: Option<&Path>,
    seed: Option<u64>,
) -> Result<i32, CliError> {
    let mut cfg = ExperimentConfig::from_path(config_path)?;
    if let Some(s) = seed {
        cfg.algorithm.seed = s;
    }
    let out = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| Path::new(&cfg.output.directory).to_path_buf());
    let space = cfg.build_space()?;
    let spec = cfg.criterion_spec()?;
    let sched = cfg.schedule()?;
    let x0 = cfg.x0_indices(&space)?;

    let (xi, trace) = match cfg.algorithm_kind()? {
        AlgorithmKind::Adaptive(variant) => {
            adaptive::run(&space, &spec, &x0, &sched, &cfg.run_options(variant))?
        }
        AlgorithmKind::VertexDirection => {
            let init = Design::uniform(&x0)
                .map_err(|e| CliError::Run(format!("invalid X0: {e}")))?;
            vertex_direction(&space, &spec, sched.eps, cfg.algorithm.max_outer, &init)?
        }
    };
    if trace.status == RunStatus::Infeasible {
        eprintln!("run infeasible: no positive-definite design over X0");
        return Ok(EXIT_ERROR);
    }
    let psi = criteria::eval(&spec, &info_matrix(&space, &xi))?.as_f64();
    let file = design_file(&space, &xi, psi, &trace);

    write(&out.join("effective-config.json"), &cfg.effective_json())?;
    if cfg.output.formats.iter().any(|f| f == "json") {
        write(
            &out.join("design.json"),
            &serde_json::to_string_pretty(&file).expect("design serializes"),
        )?;
    }
    if cfg.output.formats.iter().any(|f| f == "csv") {
        write(&out.join("design.csv"), &design_csv(&file))?;
    }
    write(&out.join("trace.csv"), &trace_csv(&trace))?;

    println!(
        "status: {}  iterations: {}  psi: {}  min sensitivity: {}",
        file.status, file.iterations, file.psi, file.final_psi_min
    );
    Ok(match trace.status {
        RunStatus::TerminatedEpsOptimal => EXIT_OK,
        RunStatus::IterationCap => EXIT_ITERATION_CAP,
        RunStatus::Infeasible => EXIT_ERROR,
    })
}

fn load_design(path: &Path) -> Result<DesignFile, CliError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Run(format!("invalid design file {}: {e}", path.display())))
}

fn design_on_space(
    file: &DesignFile,
    space: &DesignSpace,
) -> Result<Design, CliError> {
    let mut entries = Vec::new();
    for (p, &w) in file.points.iter().zip(&file.weights) {
        let i = find_point(space, p)?;
        entries.push((i, w));
    }
    Design::new(entries).map_err(|e| CliError::Run(format!("invalid design: {e}")))
}

/// Evaluates Ψ, the full-space minimum sensitivity, and the smallest ε for
/// which the design is certified ε-optimal.
pub fn cmd_certify(design_path: &Path, config_path: &Path) -> Result<i32, CliError> {
    let cfg = ExperimentConfig::from_path(config_path)?;
    let space = cfg.build_space()?;
    let spec = cfg.criterion_spec()?;
    let file = load_design(design_path)?;
    let xi = design_on_space(&file, &space)?;
    let m = info_matrix(&space, &xi);
    let psi = criteria::eval(&spec, &m)?.as_f64();
    let (_, psi_min) = adaptive::worst_violator(&space, &spec, &m, 0.0)?;
    let eps = (-psi_min).max(0.0);
    println!("psi: {psi}");
    println!("min sensitivity: {psi_min}");
    println!("certified eps: {eps}");
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct RateOutput {
    hypotheses_satisfied: bool,
    reason: String,
    psi_star: Option<f64>,
    report: Option<RateReport>,
}

fn parse_trace_psi(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Run("empty trace file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let psi_col = cols
        .iter()
        .position(|c| *c == "psi")
        .ok_or_else(|| CliError::Run("trace file has no `psi` column".into()))?;
    let mut psi = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(CliError::Run(format!("trace line {} malformed", i + 2)));
        }
        psi.push(fields[psi_col].parse::<f64>().map_err(|e| {
            CliError::Run(format!("trace line {}: bad psi value: {e}", i + 2))
        })?);
    }
    if psi.is_empty() {
        return Err(CliError::Run("trace has no iterations".into()));
    }
    Ok(psi)
}

/// Checks the sublinear (and, with δ = 0 schedules on brute-force-scale
/// instances, linear) rate bounds against a run trace. Exit 0 when no bound
/// is violated or the theorems' hypotheses do not apply; exit 3 otherwise.
pub fn cmd_rates(
    trace_path: &Path,
    config_path: &Path,
    out_dir: Option<&Path>,
) -> Result<i32, CliError> {
    let cfg = ExperimentConfig::from_path(config_path)?;
    let out = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| Path::new(&cfg.output.directory).to_path_buf());
    let space = cfg.build_space()?;
    let spec = cfg.criterion_spec()?;
    let psi_trace = parse_trace_psi(trace_path)?;

    let report_path = out.join("rate_report.json");
    if !spec.is_smooth() || cfg.criterion.two_stage.is_none() {
        let reason = if !spec.is_smooth() {
            "criterion is not smooth (rate theorems do not apply)"
        } else {
            "criterion is not two-stage regularized (sublinear theorem hypotheses unmet)"
        };
        let out_json = RateOutput {
            hypotheses_satisfied: false,
            reason: reason.to_string(),
            psi_star: None,
            report: None,
        };
        write(&report_path, &serde_json::to_string_pretty(&out_json).unwrap())?;
        println!("hypotheses not satisfied: {reason}");
        return Ok(EXIT_OK);
    }

    // Reference optimum from a high-precision full-space solve.
    let all: Vec<usize> = (0..space.len()).collect();
    let settings = SolveSettings { delta_bar: 1e-12, ..Default::default() };
    let (xi_star, _) = solve_weights(&space, &all, &spec, &settings, None)?;
    let psi_star = criteria::eval(&spec, &info_matrix(&space, &xi_star))?.as_f64();
    let h: Vec<f64> = psi_trace.iter().map(|p| p - psi_star).collect();

    let est = estimate_constants(&spec, space.atoms(), 200, cfg.algorithm.seed)?;
    let diam = diameter(space.atoms())?;
    let (c_bar, c_under) = (cfg.algorithm.delta_bar.c, cfg.algorithm.delta_under.c);

    let mut report = RateReport {
        l_est: est.l_est,
        mu_est: est.mu_est,
        mu_psi_m_est: est.mu_psi_m_est,
        c_psi_m_est: est.c_psi_m_est,
        diam,
        pwidth: None,
        r: None,
        per_iteration: Vec::new(),
        violations: Vec::new(),
        tol: 1e-8,
        sample_based: true,
    };

    // Sublinear bound for k >= 2 against h_k.
    let mut actual = Vec::new();
    let mut bounds = Vec::new();
    if h.len() > 2 {
        let h1 = h[1];
        let curve = sublinear_bound_curve(h1.max(0.0), est.l_est, diam, c_bar, c_under, h.len() - 1)?;
        for (k, b) in (2..h.len()).zip(curve) {
            actual.push(h[k]);
            bounds.push(b);
        }
    }

    // Linear bound with exact (δ = 0) subproblem schedules.
    let delta_zero = cfg.algorithm.delta_bar.rule == "zero" && cfg.algorithm.delta_under.rule == "zero";
    if delta_zero && est.c_psi_m_est > 0.0 {
        let mu_ratio = (est.mu_psi_m_est / est.c_psi_m_est).max(1e-12);
        let (r, curve) = linear_bound_curve(h[0].max(0.0), mu_ratio, h.len() - 1)?;
        report.r = Some(r);
        if space.len() <= 8 && space.matrix_dim() <= 6 {
            if let Ok(pw) = pwidth_bruteforce(space.atoms()) {
                report.pwidth = Some(pw);
                let r_pw = linear_rate_pwidth(est.mu_est.max(1e-12), est.l_est, pw, diam)?;
                println!("pwidth-based rate: {r_pw}");
            }
        }
        for (k, b) in curve.iter().enumerate().skip(1) {
            actual.push(h[k]);
            bounds.push(b + 0.0);
        }
    }

    report = report.with_curves(&actual, &bounds, 1e-8);

    let mut csv = String::from("index,h_actual,bound\n");
    for (i, (a, b)) in report.per_iteration.iter().enumerate() {
        csv.push_str(&format!("{i},{a},{b}\n"));
    }
    write(&out.join("rate_bounds.csv"), &csv)?;
    let violations = report.violations.clone();
    let out_json = RateOutput {
        hypotheses_satisfied: true,
        reason: String::new(),
        psi_star: Some(psi_star),
        report: Some(report),
    };
    write(&report_path, &serde_json::to_string_pretty(&out_json).unwrap())?;

    if violations.is_empty() {
        println!("all rate bounds hold ({} comparisons)", actual.len());
        Ok(EXIT_OK)
    } else {
        println!("rate bound violations at comparison indices: {violations:?}");
        Ok(EXIT_RATE_VIOLATION)
    }
}

/// Carathéodory-reduces a design's support; prints sizes and the information
/// matrix deviation, and writes the reduced design.
pub fn cmd_reduce(
    design_path: &Path,
    config_path: &Path,
    out_dir: Option<&Path>,
) -> Result<i32, CliError> {
    let cfg = ExperimentConfig::from_path(config_path)?;
    let out = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| Path::new(&cfg.output.directory).to_path_buf());
    let space = cfg.build_space()?;
    let spec = cfg.criterion_spec()?;
    let file = load_design(design_path)?;
    let xi = design_on_space(&file, &space)?;
    let reduced = caratheodory_reduce(&space, &xi);
    let m_before = info_matrix(&space, &xi);
    let m_after = info_matrix(&space, &reduced);
    let deviation = m_before.add_scaled(&m_after, -1.0).frobenius_norm();
    let psi = criteria::eval(&spec, &m_after)?.as_f64();

    let mut points = Vec::new();
    let mut weights = Vec::new();
    for &(i, w) in reduced.entries() {
        points.push(space.point(i).to_vec());
        weights.push(w);
    }
    let reduced_file = DesignFile {
        points,
        weights,
        psi,
        final_psi_min: file.final_psi_min,
        status: file.status.clone(),
        iterations: file.iterations,
    };
    write(
        &out.join("design-reduced.json"),
        &serde_json::to_string_pretty(&reduced_file).unwrap(),
    )?;
    write(&out.join("design-reduced.csv"), &design_csv(&reduced_file))?;
    println!(
        "support: {} -> {}  |dM|_F: {deviation}",
        xi.support_size(),
        reduced.support_size()
    );
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn write_file(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, content).unwrap();
        p
    }

    fn simplex_config(dir: &Path, eps: &str) -> std::path::PathBuf {
        write_file(
            dir,
            "config.json",
            &format!(
                r#"{{
            "schema_version": 1,
            "model": {{"name": "linear", "theta_bar": [0.0, 0.0, 0.0]}},
            "grid": {{"points": [[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,1.0]]}},
            "criterion": {{"name": "D"}},
            "algorithm": {{
                "variant": "no_exchange_strict",
                "x0": [[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,1.0]],
                "eps": {eps}
            }},
            "output": {{"directory": "{}"}}
        }}"#,
                dir.join("out").display()
            ),
        )
    }

    #[test]
    fn run_simplex_d_uniform_weights() {
        let tmp = TempDir::new().unwrap();
        let cfg = simplex_config(tmp.path(), "1e-9");
        let code = cmd_run(&cfg, None).unwrap();
        assert_eq!(code, EXIT_OK);
        let out = tmp.path().join("out");
        let design: DesignFile =
            serde_json::from_str(&std::fs::read_to_string(out.join("design.json")).unwrap())
                .unwrap();
        assert_eq!(design.weights.len(), 3);
        for w in &design.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-7);
        }
        assert!((design.psi - 3.0 * 3f64.ln()).abs() < 1e-8);
        // CSV weights are presentation-rounded.
        let csv = std::fs::read_to_string(out.join("design.csv")).unwrap();
        assert!(csv.starts_with("x_1,x_2,x_3,weight\n"));
        assert!(csv.contains("0.333333"));
        assert!(out.join("effective-config.json").exists());
        assert!(out.join("trace.csv").exists());
    }

    #[test]
    fn run_byte_identical_outputs() {
        let tmp = TempDir::new().unwrap();
        let cfg = simplex_config(tmp.path(), "1e-9");
        cmd_run(&cfg, Some(&tmp.path().join("a"))).unwrap();
        cmd_run(&cfg, Some(&tmp.path().join("b"))).unwrap();
        for f in ["design.json", "design.csv", "trace.csv", "effective-config.json"] {
            let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
            let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
            assert_eq!(a, b, "{f} differs between identical runs");
        }
    }

    #[test]
    fn run_malformed_grid_exits_with_field_name() {
        let tmp = TempDir::new().unwrap();
        let cfg = write_file(
            tmp.path(),
            "bad.json",
            r#"{
            "schema_version": 1,
            "model": {"name": "linear", "theta_bar": [0.0]},
            "grid": {"dimensions": [{"min": 0.0, "max": 1.0, "count": 0}]},
            "criterion": {"name": "D"},
            "algorithm": {"variant": "no_exchange_strict", "eps": 1e-4}
        }"#,
        );
        let err = cmd_run(&cfg, None).unwrap_err();
        assert!(err.to_string().contains("count"), "{err}");
    }

    #[test]
    fn certify_round_trip_and_off_grid() {
        let tmp = TempDir::new().unwrap();
        let cfg = simplex_config(tmp.path(), "1e-9");
        cmd_run(&cfg, None).unwrap();
        let design = tmp.path().join("out/design.json");
        assert_eq!(cmd_certify(&design, &cfg).unwrap(), EXIT_OK);
        // Perturb a point off the grid.
        let mut file: DesignFile =
            serde_json::from_str(&std::fs::read_to_string(&design).unwrap()).unwrap();
        file.points[0][0] = 0.5;
        let bad = write_file(tmp.path(), "bad-design.json", &serde_json::to_string(&file).unwrap());
        assert!(cmd_certify(&bad, &cfg).is_err());
    }

    #[test]
    fn reduce_shrinks_support() {
        // 10 support points in d = 2: reduction to at most 4.
        let tmp = TempDir::new().unwrap();
        let points: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let t = i as f64 / 10.0 * std::f64::consts::PI;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let cfg = write_file(
            tmp.path(),
            "config.json",
            &format!(
                r#"{{
            "schema_version": 1,
            "model": {{"name": "linear", "theta_bar": [0.0, 0.0]}},
            "grid": {{"points": {}}},
            "criterion": {{"name": "D"}},
            "algorithm": {{"variant": "no_exchange_strict", "x0": "corners", "eps": 1e-6}},
            "output": {{"directory": "{}"}}
        }}"#,
                serde_json::to_string(&points).unwrap(),
                tmp.path().join("out").display()
            ),
        );
        let file = DesignFile {
            points,
            weights: vec![0.1; 10],
            psi: 0.0,
            final_psi_min: 0.0,
            status: "external".to_string(),
            iterations: 0,
        };
        let design =
            write_file(tmp.path(), "design.json", &serde_json::to_string(&file).unwrap());
        assert_eq!(cmd_reduce(&design, &cfg, None).unwrap(), EXIT_OK);
        let reduced: DesignFile = serde_json::from_str(
            &std::fs::read_to_string(tmp.path().join("out/design-reduced.json")).unwrap(),
        )
        .unwrap();
        assert!(reduced.weights.len() <= 4, "support {}", reduced.weights.len());
    }

    #[test]
    fn rates_non_smooth_hypotheses_unmet() {
        let tmp = TempDir::new().unwrap();
        let cfg = write_file(
            tmp.path(),
            "config.json",
            &format!(
                r#"{{
            "schema_version": 1,
            "model": {{"name": "linear", "theta_bar": [0.0, 0.0]}},
            "grid": {{"points": [[1.0,0.0],[0.0,1.0]]}},
            "criterion": {{"name": "E"}},
            "algorithm": {{"variant": "no_exchange_strict", "x0": [[1.0,0.0]], "eps": 1e-4}},
            "output": {{"directory": "{}"}}
        }}"#,
                tmp.path().join("out").display()
            ),
        );
        let trace = write_file(tmp.path(), "trace.csv", "k,psi\n0,1.0\n1,0.9\n");
        assert_eq!(cmd_rates(&trace, &cfg, None).unwrap(), EXIT_OK);
        let report = std::fs::read_to_string(tmp.path().join("out/rate_report.json")).unwrap();
        assert!(report.contains("\"hypotheses_satisfied\": false"));
    }

    fn two_stage_simplex_config(dir: &Path) -> std::path::PathBuf {
        write_file(
            dir,
            "ts-config.json",
            &format!(
                r#"{{
            "schema_version": 1,
            "model": {{"name": "linear", "theta_bar": [0.0, 0.0]}},
            "grid": {{"points": [[1.0,0.0],[0.0,1.0],[0.8,0.6]]}},
            "criterion": {{"name": "TildeP:1", "two_stage": {{"alpha": 0.1, "m0": [[1.0,0.0],[0.0,1.0]]}}}},
            "algorithm": {{"variant": "no_exchange_strict", "x0": [[1.0,0.0]], "eps": 1e-7}},
            "output": {{"directory": "{}"}}
        }}"#,
                dir.join("out").display()
            ),
        )
    }

    #[test]
    fn rates_strongly_convex_toy_passes_and_corruption_fails() {
        let tmp = TempDir::new().unwrap();
        let cfg = two_stage_simplex_config(tmp.path());
        assert_eq!(cmd_run(&cfg, None).unwrap(), EXIT_OK);
        let trace = tmp.path().join("out/trace.csv");
        assert_eq!(cmd_rates(&trace, &cfg, None).unwrap(), EXIT_OK);
        let report = std::fs::read_to_string(tmp.path().join("out/rate_report.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&report).unwrap();
        if let Some(r) = v["report"]["r"].as_f64() {
            assert!((0.5..1.0).contains(&r), "r = {r}");
        }
        // Hand-corrupt an h_k and re-check.
        let text = std::fs::read_to_string(&trace).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        if lines.len() > 2 {
            let last = lines.len() - 1;
            let mut fields: Vec<String> =
                lines[last].split(',').map(String::from).collect();
            fields[1] = "1e6".to_string();
            lines[last] = fields.join(",");
            let corrupted = write_file(tmp.path(), "corrupt.csv", &(lines.join("\n") + "\n"));
            assert_eq!(cmd_rates(&corrupted, &cfg, None).unwrap(), EXIT_RATE_VIOLATION);
        }
    }

    #[test]
    fn rates_rejects_mismatched_trace() {
        let tmp = TempDir::new().unwrap();
        let cfg = two_stage_simplex_config(tmp.path());
        let bad = write_file(tmp.path(), "bad.csv", "a,b\n1,2\n");
        assert!(cmd_rates(&bad, &cfg, None).is_err());
    }
}
