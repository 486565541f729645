//! Experiment configuration, dispatch and result bundles.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::constructions::{build_barrier, collar_data, radial_bump, smooth_cutoff_h, Omega};
use crate::diagnostics::{detect_loss_set, profile_fit, steepest_boundary_point};
use crate::eigen::{analytic_eigenpair, numeric_eigenpair, summarize};
use crate::error::{Error, Result};
use crate::geometry::{Domain, Field, Grid};
use crate::hamiltonian::{profile_constant, HamiltonianParams};
use crate::selftest::{structure_suite, SuiteParams};
use crate::solver::{
    default_j_schedule, fmt_f64, solve_regularized, SolverParams, ViscosityParams,
};
use crate::threshold::{bisect_threshold, ThresholdParams};

pub const SCHEMA: &str = "gbu-bundle/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    #[default]
    Run,
    Threshold,
    Lossmap,
    Profile,
    Barrier,
    Eigen,
    Selftest,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Run => "run",
            Kind::Threshold => "threshold",
            Kind::Lossmap => "lossmap",
            Kind::Profile => "profile",
            Kind::Barrier => "barrier",
            Kind::Eigen => "eigen",
            Kind::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    /// `interval`, `disk`, `ball` or `rectangle`.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ly: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub n_interior: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n_interior: 201 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianConfig {
    pub p: f64,
    #[serde(default = "default_j_schedule")]
    pub j_schedule: Vec<u64>,
    /// Truncation level of a `run`; absent means the untruncated scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CapPolicy {
    /// `"default"`: `0.5 h^{-1/(p-1)}`.
    Named(String),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub t_max: f64,
    pub cfl_safety: f64,
    pub gradient_cap: CapPolicy,
    pub snapshot_times: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            t_max: 1.0,
            cfl_safety: 0.9,
            gradient_cap: CapPolicy::Named("default".into()),
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialConfig {
    /// `zero`, `quartic`, `eigen`, `bump` or `collar`.
    pub profile: String,
    pub amplitude: f64,
    /// Collar width for `collar`.
    pub rho: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            profile: "quartic".into(),
            amplitude: 1.0,
            rho: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdConfig {
    pub rel_tol: f64,
    pub start_lambda: f64,
    pub max_retries: u32,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            rel_tol: 1e-3,
            start_lambda: 1.0,
            max_retries: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossmapConfig {
    pub sample_count: usize,
    pub snapshot_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_tol: Option<f64>,
}

impl Default for LossmapConfig {
    fn default() -> Self {
        LossmapConfig {
            sample_count: 64,
            snapshot_count: 50,
            loss_tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ProfileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BarrierConfig {
    /// `none` (h = 0), `box` or `ball`.
    pub omega: String,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub eps: f64,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        BarrierConfig {
            omega: "none".into(),
            x0: 0.0,
            x1: 0.0,
            y0: 0.0,
            y1: 0.0,
            cx: 0.0,
            cy: 0.0,
            radius: 0.0,
            eps: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelftestConfig {
    pub cases: usize,
    pub n_interior: usize,
    pub t_max: f64,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        let d = SuiteParams::default();
        SelftestConfig {
            cases: d.cases,
            n_interior: d.n_interior,
            t_max: d.t_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub allow_subcritical: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub domain: DomainConfig,
    #[serde(default)]
    pub grid: GridConfig,
    pub hamiltonian: HamiltonianConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub threshold: ThresholdConfig,
    #[serde(default)]
    pub lossmap: LossmapConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub barrier: BarrierConfig,
    #[serde(default)]
    pub selftest: SelftestConfig,
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses config text, rejecting unknown keys by their full path.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut unknown = Vec::new();
        let de = toml::Deserializer::new(text);
        let parsed: std::result::Result<ExperimentConfig, _> =
            serde_ignored::deserialize(de, |path| unknown.push(path.to_string()));
        if let Some(key) = unknown.first() {
            return Err(config_err(&first_leaf(text, key), "unknown key"));
        }
        let cfg = parsed.map_err(|e| {
            let msg = e.message().to_string();
            let key = msg
                .strip_prefix("missing field `")
                .and_then(|s| s.split('`').next())
                .unwrap_or("")
                .to_string();
            config_err(&key, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.hamiltonian.p;
        if !p.is_finite() || p <= 1.0 {
            return Err(config_err(
                "hamiltonian.p",
                format!("p must exceed 1, got {p}"),
            ));
        }
        if p <= 2.0 && !self.allow_subcritical {
            return Err(config_err(
                "hamiltonian.p",
                format!("p must be > 2, got {p} (set allow_subcritical = true to override)"),
            ));
        }
        self.build_domain()?;
        if self.grid.n_interior < 3 {
            return Err(config_err(
                "grid.n_interior",
                "need at least 3 interior nodes",
            ));
        }
        if !(self.solver.t_max > 0.0 && self.solver.t_max.is_finite()) {
            return Err(config_err("solver.t_max", "must be positive"));
        }
        if !(self.solver.cfl_safety > 0.0 && self.solver.cfl_safety <= 1.0) {
            return Err(config_err("solver.cfl_safety", "must lie in (0, 1]"));
        }
        match &self.solver.gradient_cap {
            CapPolicy::Named(s) if s != "default" => {
                return Err(config_err(
                    "solver.gradient_cap",
                    format!("expected \"default\" or a number, got {s:?}"),
                ))
            }
            CapPolicy::Value(v) if !(*v > 0.0) => {
                return Err(config_err("solver.gradient_cap", "must be positive"))
            }
            _ => {}
        }
        if self.hamiltonian.j_schedule.is_empty() || self.hamiltonian.j_schedule.contains(&0) {
            return Err(config_err(
                "hamiltonian.j_schedule",
                "needs positive entries",
            ));
        }
        if !["zero", "quartic", "eigen", "bump", "collar"].contains(&self.initial.profile.as_str())
        {
            return Err(config_err(
                "initial.profile",
                format!("unknown profile {:?}", self.initial.profile),
            ));
        }
        if !(self.initial.amplitude >= 0.0) {
            return Err(config_err("initial.amplitude", "must be >= 0"));
        }
        if !(self.threshold.rel_tol > 0.0 && self.threshold.rel_tol < 1.0) {
            return Err(config_err("threshold.rel_tol", "must lie in (0, 1)"));
        }
        if !["none", "box", "ball"].contains(&self.barrier.omega.as_str()) {
            return Err(config_err(
                "barrier.omega",
                format!("unknown set {:?}", self.barrier.omega),
            ));
        }
        if self.lossmap.snapshot_count == 0 {
            return Err(config_err("lossmap.snapshot_count", "must be positive"));
        }
        Ok(())
    }

    pub fn build_domain(&self) -> Result<Domain> {
        let d = &self.domain;
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| config_err(&format!("domain.{key}"), "missing"))
        };
        let wrap = |r: Result<Domain>, key: &str| {
            r.map_err(|e| config_err(&format!("domain.{key}"), e.to_string()))
        };
        match d.kind.as_str() {
            "interval" => wrap(
                Domain::interval(d.a.unwrap_or(-1.0), d.b.unwrap_or(1.0)),
                "b",
            ),
            "disk" => wrap(Domain::disk(d.radius.unwrap_or(1.0)), "radius"),
            "ball" => wrap(
                Domain::ball(d.radius.unwrap_or(1.0), d.dim.unwrap_or(3)),
                "dim",
            ),
            "rectangle" => wrap(
                Domain::rectangle(need(d.lx, "lx")?, need(d.ly, "ly")?),
                "lx",
            ),
            other => Err(config_err(
                "domain.kind",
                format!("unknown domain {other:?}"),
            )),
        }
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::build(
            self.build_domain()?,
            self.grid.n_interior,
        )?))
    }

    fn cap(&self, grid: &Grid) -> f64 {
        match self.solver.gradient_cap {
            CapPolicy::Value(v) => v,
            CapPolicy::Named(_) => {
                crate::solver::default_gradient_cap(grid.h(), self.hamiltonian.p)
            }
        }
    }

    /// The validated config with every default written out.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the echo.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Extends the path of an ignored table down to its first key.
fn first_leaf(text: &str, path: &str) -> String {
    let Ok(root) = text.parse::<toml::Table>() else {
        return path.to_string();
    };
    let mut node = toml::Value::Table(root);
    for part in path.split('.') {
        match node.get(part) {
            Some(v) => node = v.clone(),
            None => return path.to_string(),
        }
    }
    let mut full = path.to_string();
    while let toml::Value::Table(t) = node {
        let Some((k, v)) = t.into_iter().next() else {
            break;
        };
        full.push('.');
        full.push_str(&k);
        node = v;
    }
    full
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&text)
}

/// Initial data named by `initial.profile`, scaled by `amplitude`.
pub fn initial_field(cfg: &ExperimentConfig, grid: &Arc<Grid>, amplitude: f64) -> Result<Field> {
    let quartic = |s: f64| (1.0 - s * s).max(0.0).powi(2);
    let f = match cfg.initial.profile.as_str() {
        "zero" => Field::zeros(grid),
        "quartic" => match grid.domain {
            Domain::Interval { a, b } => {
                Field::from_fn(grid, |q| amplitude * quartic((2.0 * q.x - a - b) / (b - a)))
            }
            Domain::Disk { radius, .. } => {
                Field::from_fn(grid, |q| amplitude * quartic(q.norm() / radius))
            }
            Domain::Rectangle { lx, ly } => Field::from_fn(grid, |q| {
                amplitude * quartic(2.0 * q.x / lx - 1.0) * quartic(2.0 * q.y / ly - 1.0)
            }),
        },
        "eigen" => {
            let ep = analytic_eigenpair(grid);
            ep.phi1.scaled(amplitude / ep.phi1.sup_norm())
        }
        "bump" => {
            radial_bump(grid, amplitude)
                .map_err(|e| config_err("initial.profile", e.to_string()))?
                .0
        }
        "collar" => collar_data(grid, cfg.initial.rho, amplitude, cfg.hamiltonian.p)
            .map_err(|e| config_err("initial.rho", e.to_string()))?,
        other => {
            return Err(config_err(
                "initial.profile",
                format!("unknown profile {other:?}"),
            ))
        }
    };
    Ok(f.with_zero_boundary())
}

/// Files produced by one experiment, before they are written.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: BTreeMap<String, String>,
    pub result: Value,
}

#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub dir: PathBuf,
    pub config_hash: String,
    pub files: Vec<String>,
    pub summary: Value,
    pub warnings: Vec<String>,
}

fn solver_params(cfg: &ExperimentConfig, grid: &Grid) -> Result<SolverParams> {
    let hp = HamiltonianParams::subcritical(cfg.hamiltonian.p, cfg.hamiltonian.j)?;
    let mut sp = SolverParams::new(hp, cfg.solver.t_max, grid)
        .with_snapshots(cfg.solver.snapshot_times.clone());
    sp.cfl_safety = cfg.solver.cfl_safety;
    sp.gradient_cap = cfg.cap(grid);
    Ok(sp)
}

fn json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn field_csv(f: &Field, name: &str) -> String {
    let one_d = !matches!(f.grid.domain, Domain::Rectangle { .. });
    let mut s = format!("x,y,{name}\n");
    for (q, v) in f.grid.points().iter().zip(&f.values) {
        let y = if one_d { String::new() } else { fmt_f64(q.y) };
        let _ = writeln!(s, "{},{},{}", fmt_f64(q.x), y, fmt_f64(*v));
    }
    s
}

/// Runs the experiment named by `cfg.kind` without touching the file system.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut files = BTreeMap::new();
    let p = cfg.hamiltonian.p;
    let result = match cfg.kind {
        Kind::Run => {
            let grid = cfg.build_grid()?;
            let u0 = initial_field(cfg, &grid, cfg.initial.amplitude)?;
            let sp = solver_params(cfg, &grid)?;
            let trace = solve_regularized(&u0, &sp)?;
            files.insert("trace.csv".into(), trace.to_csv());
            serde_json::to_value(trace.summary(&sp)).expect("summary serializes")
        }
        Kind::Threshold => {
            let grid = cfg.build_grid()?;
            let phi = initial_field(cfg, &grid, 1.0)?;
            let mut tp = ThresholdParams::new(p, cfg.solver.t_max);
            tp.cfl_safety = cfg.solver.cfl_safety;
            tp.gradient_cap = Some(cfg.cap(&grid));
            tp.start_lambda = cfg.threshold.start_lambda;
            tp.max_retries = cfg.threshold.max_retries;
            let r = bisect_threshold(&phi, &tp, cfg.threshold.rel_tol)?;
            serde_json::to_value(&r).expect("threshold serializes")
        }
        Kind::Lossmap => {
            let grid = cfg.build_grid()?;
            let u0 = initial_field(cfg, &grid, cfg.initial.amplitude)?;
            let k = cfg.lossmap.snapshot_count;
            let times = (1..=k)
                .map(|i| cfg.solver.t_max * i as f64 / k as f64)
                .collect();
            let mut vp = ViscosityParams::new(p, cfg.solver.t_max, &grid).with_snapshots(times);
            vp.j_schedule = cfg.hamiltonian.j_schedule.clone();
            vp.cfl_safety = cfg.solver.cfl_safety;
            vp.gradient_cap = cfg.cap(&grid);
            let (report, limit) =
                detect_loss_set(&u0, &vp, cfg.lossmap.sample_count, cfg.lossmap.loss_tol)?;
            let one_d = matches!(grid.domain, Domain::Interval { .. });
            files.insert("lossmap.csv".into(), report.to_csv(one_d));
            files.insert("trace.csv".into(), limit.trace.to_csv());
            json!({
                "loss_set": report.loss_set,
                "loss_tol": report.loss_tol,
                "j_values": report.j_values,
                "saturated_at": report.saturated_at,
                "cauchy_gap": report.cauchy_gap,
                "exact_from": limit.exact_from,
                "blowup_time": limit.trace.blowup_time,
            })
        }
        Kind::Profile => {
            let grid = cfg.build_grid()?;
            let u0 = initial_field(cfg, &grid, cfg.initial.amplitude)?;
            let sp = solver_params(cfg, &grid)?.with_j(None);
            let trace = solve_regularized(&u0, &sp)?;
            files.insert("trace.csv".into(), trace.to_csv());
            let Some(pre) = trace.pre_blowup.as_ref() else {
                return Err(Error::NoBlowup(format!(
                    "no cap crossing before t_max = {}",
                    cfg.solver.t_max
                )));
            };
            let x0 = steepest_boundary_point(pre, 64);
            let window = match (cfg.profile.window_lo, cfg.profile.window_hi) {
                (Some(lo), Some(hi)) => Some((lo, hi)),
                _ => None,
            };
            let fit = profile_fit(pre, &x0, p, window)?;
            let at_cross = profile_fit(&trace.final_state, &x0, p, window)?;
            json!({
                "blowup_time": trace.blowup_time,
                "c_p": profile_constant(p),
                "fit_before_crossing": fit,
                "fit_at_crossing": at_cross,
            })
        }
        Kind::Barrier => {
            let grid = cfg.build_grid()?;
            let b = &cfg.barrier;
            let h = match b.omega.as_str() {
                "box" => smooth_cutoff_h(
                    &grid,
                    &Omega::Box {
                        x0: b.x0,
                        x1: b.x1,
                        y0: b.y0,
                        y1: b.y1,
                    },
                    b.eps,
                )?,
                "ball" => smooth_cutoff_h(
                    &grid,
                    &Omega::Ball {
                        cx: b.cx,
                        cy: b.cy,
                        radius: b.radius,
                    },
                    b.eps,
                )?,
                _ => Field::zeros(&grid),
            };
            let barrier = build_barrier(&grid, &h, p)?;
            files.insert("psi.csv".into(), field_csv(&barrier.psi, "psi"));
            serde_json::to_value(&barrier).expect("barrier serializes")
        }
        Kind::Eigen => {
            let grid = cfg.build_grid()?;
            let ep = analytic_eigenpair(&grid);
            let numeric = numeric_eigenpair(&grid, 1e-10)?;
            files.insert("phi1.csv".into(), field_csv(&ep.phi1, "phi1"));
            json!({
                "analytic": summarize(&ep),
                "numeric_lambda1": numeric.lambda1,
            })
        }
        Kind::Selftest => {
            let params = SuiteParams {
                seed: cfg.seed,
                cases: cfg.selftest.cases,
                n_interior: cfg.selftest.n_interior,
                p,
                t_max: cfg.selftest.t_max,
            };
            let report = structure_suite(&params)?;
            let value = serde_json::to_value(&report).expect("report serializes");
            if !report.passed() {
                return Err(Error::InvalidParameter(format!(
                    "structure suite failed: {}",
                    json_string(&value)
                )));
            }
            value
        }
    };
    Ok(Outcome { files, result })
}

/// Runs the experiment and writes its bundle under `out_root` (or the
/// config's own output directory). Existing bundles are never overwritten:
/// a numeric suffix is appended and a warning recorded.
pub fn run_experiment(cfg: &ExperimentConfig, out_root: Option<&Path>) -> Result<ResultBundle> {
    let outcome = execute(cfg)?;
    let root = out_root
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("gbu-out"));
    let hash = cfg.hash();
    let base = format!("{}-{}", cfg.kind.name(), &hash[..16]);
    let mut warnings = Vec::new();
    let mut dir = root.join(&base);
    let mut k = 1;
    while dir.exists() {
        dir = root.join(format!("{base}-{k}"));
        k += 1;
    }
    if k > 1 {
        warnings.push(format!(
            "bundle {} exists; writing to {}",
            root.join(&base).display(),
            dir.display()
        ));
    }
    fs::create_dir_all(&dir)?;
    let summary = json!({
        "schema": SCHEMA,
        "config_hash": hash,
        "kind": cfg.kind.name(),
        "seed": cfg.seed,
        "result": outcome.result,
    });
    let mut names = vec!["config.toml".to_string(), "summary.json".to_string()];
    fs::write(dir.join("config.toml"), cfg.echo())?;
    fs::write(dir.join("summary.json"), json_string(&summary))?;
    for (name, body) in &outcome.files {
        fs::write(dir.join(name), body)?;
        names.push(name.clone());
    }
    Ok(ResultBundle {
        dir,
        config_hash: hash,
        files: names,
        summary,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[domain]\nkind = \"interval\"\n\n[hamiltonian]\np = 3.0\n";

    #[test]
    fn defaults_filled() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.kind, Kind::Run);
        assert_eq!(c.solver.cfl_safety, 0.9);
        assert_eq!(
            c.hamiltonian.j_schedule,
            (1..=10).map(|k| 1u64 << k).collect::<Vec<_>>()
        );
        assert_eq!(*c.hamiltonian.j_schedule.last().unwrap(), 1024);
        let echo = c.echo();
        assert!(echo.contains("cfl_safety = 0.9"));
        assert_eq!(ExperimentConfig::parse(&echo).unwrap(), c);
    }

    #[test]
    fn rejections_name_the_key() {
        let sub = MINIMAL.replace("p = 3.0", "p = 1.5");
        match ExperimentConfig::parse(&sub) {
            Err(Error::Config { key, message }) => {
                assert_eq!(key, "hamiltonian.p");
                assert!(message.contains("p must be > 2"));
            }
            other => panic!("{other:?}"),
        }
        let ok = format!("allow_subcritical = true\n{sub}");
        assert!(ExperimentConfig::parse(&ok).is_ok());
        let typo = format!("{MINIMAL}\n[gird]\nn_interior = 5\n");
        match ExperimentConfig::parse(&typo) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "gird.n_interior"),
            other => panic!("{other:?}"),
        }
        let inner = MINIMAL.replace("p = 3.0", "p = 3.0\nq = 2");
        assert!(
            matches!(ExperimentConfig::parse(&inner), Err(Error::Config { key, .. }) if key == "hamiltonian.q")
        );
        assert!(matches!(
            ExperimentConfig::parse("[hamiltonian]\np = 3.0\n"),
            Err(Error::Config { key, .. }) if key == "domain"
        ));
    }

    #[test]
    fn eigen_and_zero_run() {
        let c = ExperimentConfig::parse(&format!("kind = \"eigen\"\n{MINIMAL}")).unwrap();
        let out = execute(&c).unwrap();
        let l = out.result["analytic"]["lambda1"].as_f64().unwrap();
        assert!((l - std::f64::consts::PI.powi(2) / 4.0).abs() < 1e-8);

        let c = ExperimentConfig::parse(&format!(
            "{MINIMAL}\n[initial]\nprofile = \"zero\"\n\n[solver]\nt_max = 0.01\n"
        ))
        .unwrap();
        let out = execute(&c).unwrap();
        let csv = &out.files["trace.csv"];
        for line in csv.lines().skip(1) {
            let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert!(cols[1..].iter().all(|v| *v == 0.0), "{line}");
        }
    }

    #[test]
    fn bundles_never_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let c = ExperimentConfig::parse(&format!(
            "kind = \"eigen\"\n{MINIMAL}[grid]\nn_interior = 21\n"
        ))
        .unwrap();
        let a = run_experiment(&c, Some(dir.path())).unwrap();
        let b = run_experiment(&c, Some(dir.path())).unwrap();
        assert_ne!(a.dir, b.dir);
        assert!(a.warnings.is_empty());
        assert_eq!(b.warnings.len(), 1);
        for f in &a.files {
            assert_eq!(
                fs::read(a.dir.join(f)).unwrap(),
                fs::read(b.dir.join(f)).unwrap()
            );
        }
        assert!(a
            .dir
            .file_name()
            .unwrap()
            .to_str()
            .unwrap()
            .starts_with("eigen-"));
        let s: Value =
            serde_json::from_slice(&fs::read(a.dir.join("summary.json")).unwrap()).unwrap();
        assert_eq!(s["schema"], SCHEMA);
        assert_eq!(s["config_hash"], c.hash());
    }
}
