//! Experiment driver: single runs with error measurement, convergence
//! studies, residual order studies and the randomized property suite.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{
    delta_h, inner_product_0h, norm_0h, norm_1h, norm_inf, real_norm_0h, real_norm_1h,
    seminorm_1h, GridFunction, SpaceMesh, TimeMesh,
};
use crate::mollifier::Mollifier;
use crate::ops::{apply_laplacian, HalfStepOperators};
use crate::problems::{default_delta_star, residual_mid, residual_node, residual_quarter, ProblemId};
use crate::scheme::{charge, energy, Problem, SchemeVariant, Solver};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "RFD_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantName {
    #[default]
    SecondOrderInit,
    FirstOrderInit,
    Mollified,
}

impl std::str::FromStr for VariantName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "second-order-init" => Ok(Self::SecondOrderInit),
            "first-order-init" => Ok(Self::FirstOrderInit),
            "mollified" => Ok(Self::Mollified),
            _ => Err(Error::Config(format!(
                "unknown variant `{s}` (expected second-order-init, first-order-init or mollified)"
            ))),
        }
    }
}

fn default_levels() -> usize {
    4
}

fn default_mesh_constant() -> f64 {
    1.0
}

/// One run, or the coarsest level of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemId,
    #[serde(default)]
    pub variant: VariantName,
    /// Number of interior nodes.
    #[serde(rename = "J")]
    pub interior: usize,
    /// Number of time steps.
    #[serde(rename = "N")]
    pub steps: usize,
    /// Final time; the problem's default when absent.
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub final_time: Option<f64>,
    /// Mollifier cutoff; `2 max(u_max, g_max)` from the exact solution when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    /// Constant `C` in the mesh-condition indicator `sqrt(L) C (τ² + h²) ≤ δ⋆/2`.
    #[serde(default = "default_mesh_constant")]
    pub mesh_constant: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshot_times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub execution: Execution,
}

impl RunConfig {
    pub fn new(problem: ProblemId, interior: usize, steps: usize) -> Self {
        Self {
            problem,
            variant: VariantName::default(),
            interior,
            steps,
            final_time: None,
            delta_star: None,
            tolerance: None,
            max_iterations: None,
            mesh_constant: default_mesh_constant(),
            snapshot_times: Vec::new(),
            output_dir: None,
            seed: 0,
            levels: default_levels(),
            execution: Execution::default(),
        }
    }

    pub fn with_variant(mut self, variant: VariantName) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_final_time(mut self, t: f64) -> Self {
        self.final_time = Some(t);
        self
    }

    pub fn final_time(&self) -> f64 {
        self.final_time.unwrap_or_else(|| self.problem.default_final_time())
    }

    pub fn validate(&self) -> Result<()> {
        if self.interior < 1 {
            return Err(Error::Config("J must be at least 1".into()));
        }
        if self.steps < 1 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        let t = self.final_time();
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Config(format!("T must be positive, got {t}")));
        }
        if let Some(d) = self.delta_star {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("delta_star must be positive, got {d}")));
            }
        }
        if !(self.mesh_constant >= 0.0 && self.mesh_constant.is_finite()) {
            return Err(Error::Config(format!("mesh_constant must be non-negative, got {}", self.mesh_constant)));
        }
        if let Some(s) = self.snapshot_times.iter().find(|s| !(**s >= 0.0 && **s <= t)) {
            return Err(Error::Config(format!("snapshot time {s} outside [0, {t}]")));
        }
        if self.levels < 1 {
            return Err(Error::Config("levels must be at least 1".into()));
        }
        Ok(())
    }

    /// The scheme variant, resolving a default `δ⋆` from the exact solution.
    pub fn scheme_variant(&self, problem: &Problem) -> Result<SchemeVariant> {
        Ok(match self.variant {
            VariantName::SecondOrderInit => SchemeVariant::SecondOrderInit,
            VariantName::FirstOrderInit => SchemeVariant::FirstOrderInit,
            VariantName::Mollified => {
                let delta_star = match self.delta_star {
                    Some(d) => d,
                    None => default_delta_star(problem, self.final_time())?,
                };
                let SchemeVariant::Mollified {
                    tolerance,
                    max_iterations,
                    ..
                } = SchemeVariant::mollified(delta_star)
                else {
                    unreachable!()
                };
                SchemeVariant::Mollified {
                    delta_star,
                    tolerance: self.tolerance.unwrap_or(tolerance),
                    max_iterations: self.max_iterations.unwrap_or(max_iterations),
                }
            }
        })
    }

    /// Level `l` of a study: `J_l = (J + 1) 2^l - 1`, `N_l = N 2^l`.
    pub fn level(&self, l: usize) -> Self {
        let mut c = self.clone();
        c.interior = (self.interior + 1) * (1 << l) - 1;
        c.steps = self.steps * (1 << l);
        c
    }

    /// Directory for outputs: the config value, then `$RFD_OUTPUT_DIR`, then `.`.
    pub fn resolve_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Writes `report` as pretty JSON via a temporary file and a rename.
pub fn emit_report<T: Serialize>(report: &T, path: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = dir.join(tmp_name);
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))?;
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(json.as_bytes()).map_err(io)?;
        f.write_all(b"\n").map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

/// `sqrt(L) C (τ² + h²)` against `δ⋆/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshCondition {
    pub indicator: f64,
    pub threshold: f64,
    pub satisfied: bool,
}

impl MeshCondition {
    pub fn evaluate(length: f64, constant: f64, tau: f64, h: f64, delta_star: f64) -> Self {
        let indicator = length.sqrt() * constant * (tau * tau + h * h);
        let threshold = 0.5 * delta_star;
        Self {
            indicator,
            threshold,
            satisfied: indicator <= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub n: usize,
    pub t: f64,
    /// `(Re, Im)` at every node.
    pub values: Vec<(f64, f64)>,
}

fn snapshot(n: usize, t: f64, w: &GridFunction) -> Snapshot {
    Snapshot {
        n,
        t,
        values: w.values().iter().map(|z| (z.re, z.im)).collect(),
    }
}

/// Errors and diagnostics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub problem: ProblemId,
    pub variant: SchemeVariant,
    #[serde(rename = "J")]
    pub interior: usize,
    #[serde(rename = "N")]
    pub steps: usize,
    pub h: f64,
    pub tau: f64,
    pub final_time: f64,
    /// `max_m ‖u^m - W^m‖_{1,h}`.
    pub err_node_h1: Option<f64>,
    /// `‖u^{1/2} - W^{1/2}‖_{1,h}`.
    pub err_half_h1: Option<f64>,
    /// `max_m ‖g(|u^{m+1/2}|²) - Φ^{m+1/2}‖_{1,h}`.
    pub err_relax_h1: Option<f64>,
    /// `max_n |Q(W^n) - Q(W⁰)| / Q(W⁰)` (absolute when `Q(W⁰) = 0`).
    pub charge_drift: f64,
    /// `max_n |E(W^n) - E(W⁰)| / |E(W⁰)|`, when `g` has a primitive.
    pub energy_drift: Option<f64>,
    pub conforming_init: bool,
    pub mesh_condition: Option<MeshCondition>,
    pub max_fixed_point_iterations: Option<usize>,
    pub snapshots: Vec<Snapshot>,
    pub wall_ms: f64,
}

impl ErrorReport {
    /// The report with timing zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_ms: 0.0,
            ..self.clone()
        }
    }
}

fn relative_drift(value: f64, reference: f64) -> f64 {
    let d = (value - reference).abs();
    if reference == 0.0 {
        d
    } else {
        d / reference.abs()
    }
}

/// Full time march with errors in the discrete `H¹` norm.
pub fn run_single(cfg: &RunConfig) -> Result<ErrorReport> {
    cfg.validate()?;
    let clock = Instant::now();
    let problem = cfg.problem.build();
    problem.validate()?;
    let variant = cfg.scheme_variant(&problem)?;
    let space = problem.space_mesh(cfg.interior)?;
    let time = TimeMesh::new(cfg.final_time(), cfg.steps)?;
    let solver = Solver::new(problem.clone(), space, time, variant)?;
    let exact = problem.exact.as_ref();
    let g = &problem.g;

    let mut wanted: Vec<usize> = cfg
        .snapshot_times
        .iter()
        .map(|t| ((t / time.tau()).round() as usize).min(time.steps()))
        .collect();
    wanted.push(time.steps());
    wanted.sort_unstable();
    wanted.dedup();
    let mut snapshots = Vec::new();

    let start = solver.start()?;
    let mut state = start.state;
    let node_err = |n: usize, w: &GridFunction| exact.map(|e| norm_1h(&e.sample(time.t(n), &space).sub(w).unwrap(), &space));
    let mut err_node = node_err(0, &state.w);
    let err_half = exact.map(|e| norm_1h(&e.sample(time.t_half(0), &space).sub(&start.w_half).unwrap(), &space));
    let mut err_relax: Option<f64> = None;

    let q0 = charge(&state.w, &space);
    let e0 = energy(&state.w, g, &space);
    let mut charge_drift: f64 = 0.0;
    let mut energy_drift = e0.map(|_| 0.0f64);
    let mut max_iterations = None;
    if wanted.first() == Some(&0) {
        snapshots.push(snapshot(0, 0.0, &state.w));
    }

    while state.n < time.steps() {
        let (next, stats) = solver.step(&state)?;
        let n = next.n;
        if let Some(st) = stats {
            max_iterations = Some(max_iterations.unwrap_or(0).max(st.iterations));
        }
        if let (Some(e), Some(phi)) = (exact, next.phi_previous()) {
            let target = g.of_modulus(&e.sample(time.t_half(n - 1), &space));
            let err = real_norm_1h(&target.sub(phi)?, &space);
            err_relax = Some(err_relax.unwrap_or(0.0).max(err));
        }
        if let Some(err) = node_err(n, &next.w) {
            err_node = Some(err_node.unwrap_or(0.0).max(err));
        }
        charge_drift = charge_drift.max(relative_drift(charge(&next.w, &space), q0));
        if let (Some(e0), Some(drift)) = (e0, energy_drift.as_mut()) {
            let e = energy(&next.w, g, &space).expect("primitive available");
            *drift = drift.max(relative_drift(e, e0));
        }
        if wanted.binary_search(&n).is_ok() {
            snapshots.push(snapshot(n, time.t(n), &next.w));
        }
        state = next;
    }

    let mesh_condition = match variant {
        SchemeVariant::Mollified { delta_star, .. } => Some(MeshCondition::evaluate(
            space.length(),
            cfg.mesh_constant,
            time.tau(),
            space.h(),
            delta_star,
        )),
        _ => None,
    };

    Ok(ErrorReport {
        problem: cfg.problem,
        variant,
        interior: cfg.interior,
        steps: cfg.steps,
        h: space.h(),
        tau: time.tau(),
        final_time: time.final_time(),
        err_node_h1: err_node,
        err_half_h1: err_half,
        err_relax_h1: err_relax,
        charge_drift,
        energy_drift,
        conforming_init: start.conforming,
        mesh_condition,
        max_fixed_point_iterations: max_iterations,
        snapshots,
        wall_ms: clock.elapsed().as_secs_f64() * 1e3,
    })
}

/// One row of an EOC table, in CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EocRow {
    pub level: usize,
    #[serde(rename = "J")]
    pub interior: usize,
    #[serde(rename = "N")]
    pub steps: usize,
    pub h: f64,
    pub tau: f64,
    pub err_node_h1: Option<f64>,
    pub eoc_node: Option<f64>,
    pub err_half_h1: Option<f64>,
    pub err_relax_h1: Option<f64>,
    pub eoc_relax: Option<f64>,
    pub charge_drift: f64,
    pub energy_drift: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EocTable {
    pub problem: ProblemId,
    pub variant: SchemeVariant,
    pub rows: Vec<EocRow>,
    /// Least-squares slopes of `log e` against `log h`.
    pub slope_node: Option<f64>,
    pub slope_half: Option<f64>,
    pub slope_relax: Option<f64>,
}

/// `log₂(e_prev / e_curr)`.
pub fn eoc(prev: Option<f64>, curr: Option<f64>) -> Option<f64> {
    match (prev, curr) {
        (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).log2()),
        _ => None,
    }
}

/// Least-squares slope of `log y` against `log x`; `None` unless every `y > 0`.
pub fn fitted_slope(xs: &[f64], ys: &[Option<f64>]) -> Option<f64> {
    let pts: Option<Vec<(f64, f64)>> = xs
        .iter()
        .zip(ys)
        .map(|(&x, y)| y.filter(|&y| y > 0.0).map(|y| (x.ln(), y.ln())))
        .collect();
    let pts = pts?;
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Runs `cfg.levels` levels, halving `h` and `τ` together.
pub fn convergence_study(cfg: &RunConfig) -> Result<EocTable> {
    cfg.validate()?;
    if cfg.levels < 3 {
        return Err(Error::Config(format!(
            "a convergence study needs at least 3 levels, got {}",
            cfg.levels
        )));
    }
    let levels: Vec<usize> = (0..cfg.levels).collect();
    let reports: Vec<ErrorReport> = cfg
        .execution
        .map(&levels, |&l| {
            let mut c = cfg.level(l);
            c.snapshot_times.clear();
            run_single(&c)
        })
        .into_iter()
        .collect::<Result<_>>()?;

    let mut rows: Vec<EocRow> = Vec::with_capacity(reports.len());
    for (l, r) in reports.iter().enumerate() {
        let prev = l.checked_sub(1).map(|p| &reports[p]);
        rows.push(EocRow {
            level: l,
            interior: r.interior,
            steps: r.steps,
            h: r.h,
            tau: r.tau,
            err_node_h1: r.err_node_h1,
            eoc_node: prev.and_then(|p| eoc(p.err_node_h1, r.err_node_h1)),
            err_half_h1: r.err_half_h1,
            err_relax_h1: r.err_relax_h1,
            eoc_relax: prev.and_then(|p| eoc(p.err_relax_h1, r.err_relax_h1)),
            charge_drift: r.charge_drift,
            energy_drift: r.energy_drift,
            wall_ms: r.wall_ms,
        });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let col = |f: fn(&EocRow) -> Option<f64>| rows.iter().map(f).collect::<Vec<_>>();
    Ok(EocTable {
        problem: cfg.problem,
        variant: reports[0].variant,
        slope_node: fitted_slope(&hs, &col(|r| r.err_node_h1)),
        slope_half: fitted_slope(&hs, &col(|r| r.err_half_h1)),
        slope_relax: fitted_slope(&hs, &col(|r| r.err_relax_h1)),
        rows,
    })
}

impl EocTable {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Maximum residual norms for one time step size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    #[serde(rename = "N")]
    pub steps: usize,
    pub tau: f64,
    /// `max_n ‖r^{n+1/2}‖_{0,h}`.
    pub mid_l2: f64,
    /// `max_n |r^{n+1/2}|_{1,h}`.
    pub mid_h1: f64,
    /// `‖r^{1/4}‖_{0,h}` and `|r^{1/4}|_{1,h}`.
    pub quarter_l2: f64,
    pub quarter_h1: f64,
    /// `max_n ‖r^n‖_{0,h}`.
    pub node_l2: f64,
    /// `max_n ‖r^n - r^{n-1}‖_{0,h}`.
    pub node_diff_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStudy {
    pub rows: Vec<ResidualRow>,
    pub slope_mid_l2: f64,
    pub slope_mid_h1: f64,
    pub slope_quarter_l2: f64,
    pub slope_quarter_h1: f64,
    pub slope_node_l2: f64,
    pub slope_node_diff_l2: f64,
}

/// Residual norms on a fixed space mesh with `τ` halved between levels.
pub fn residual_study(
    problem: &Problem,
    interior: usize,
    final_time: f64,
    steps: &[usize],
    execution: Execution,
) -> Result<ResidualStudy> {
    if steps.len() < 2 || steps.iter().any(|&n| n < 3) {
        return Err(Error::Config("a residual study needs at least 2 levels with N >= 3".into()));
    }
    let mesh = problem.space_mesh(interior)?;
    let rows: Vec<ResidualRow> = execution
        .map(steps, |&n| -> Result<ResidualRow> {
            let time = TimeMesh::new(final_time, n)?;
            let (mut mid_l2, mut mid_h1, mut node_l2, mut node_diff_l2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
            for k in 0..n {
                let r = residual_mid(problem, k, &time, &mesh)?;
                mid_l2 = mid_l2.max(norm_0h(&r, &mesh));
                mid_h1 = mid_h1.max(seminorm_1h(&r, &mesh));
            }
            let mut prev = residual_node(problem, 1, &time, &mesh)?;
            node_l2 = node_l2.max(real_norm_0h(&prev, &mesh));
            for k in 2..n {
                let r = residual_node(problem, k, &time, &mesh)?;
                node_l2 = node_l2.max(real_norm_0h(&r, &mesh));
                node_diff_l2 = node_diff_l2.max(real_norm_0h(&r.sub(&prev)?, &mesh));
                prev = r;
            }
            let q = residual_quarter(problem, &time, &mesh)?;
            Ok(ResidualRow {
                steps: n,
                tau: time.tau(),
                mid_l2,
                mid_h1,
                quarter_l2: norm_0h(&q, &mesh),
                quarter_h1: seminorm_1h(&q, &mesh),
                node_l2,
                node_diff_l2,
            })
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let taus: Vec<f64> = rows.iter().map(|r| r.tau).collect();
    let slope = |f: fn(&ResidualRow) -> f64| {
        fitted_slope(&taus, &rows.iter().map(|r| Some(f(r))).collect::<Vec<_>>()).unwrap_or(f64::NAN)
    };
    Ok(ResidualStudy {
        slope_mid_l2: slope(|r| r.mid_l2),
        slope_mid_h1: slope(|r| r.mid_h1),
        slope_quarter_l2: slope(|r| r.quarter_l2),
        slope_quarter_h1: slope(|r| r.quarter_h1),
        slope_node_l2: slope(|r| r.node_l2),
        slope_node_diff_l2: slope(|r| r.node_diff_l2),
        rows,
    })
}

/// Outcome of one property over all sampled inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyEntry {
    pub name: String,
    pub passed: bool,
    pub worst_defect: f64,
    pub tolerance: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub seed: u64,
    pub sizes: Vec<usize>,
    pub entries: Vec<PropertyEntry>,
    pub all_passed: bool,
}

impl PropertyReport {
    pub fn entry(&self, name: &str) -> Option<&PropertyEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

struct Tally {
    name: String,
    tolerance: f64,
    worst: f64,
    samples: usize,
}

impl Tally {
    fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            tolerance,
            worst: 0.0,
            samples: 0,
        }
    }

    fn record(&mut self, defect: f64) {
        self.samples += 1;
        // NaN never passes
        if defect.is_nan() || defect > self.worst {
            self.worst = if defect.is_nan() { f64::INFINITY } else { defect };
        }
    }

    fn finish(self) -> PropertyEntry {
        PropertyEntry {
            passed: self.worst <= self.tolerance,
            name: self.name,
            worst_defect: self.worst,
            tolerance: self.tolerance,
            samples: self.samples,
        }
    }
}

/// Number of random boundary-zero functions drawn per mesh size.
pub const RANDOM_SAMPLES: usize = 100;

fn random_boundary_zero(rng: &mut ChaCha8Rng, j: usize) -> GridFunction {
    let v: Vec<Complex64> = (0..j)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    GridFunction::from_interior(&v)
}

/// Unit spikes at the first, middle and last interior node.
fn spikes(j: usize) -> Vec<GridFunction> {
    let mut out = Vec::new();
    for k in [0, j / 2, j - 1] {
        let mut v = vec![Complex64::new(0.0, 0.0); j];
        v[k] = Complex64::new(1.0, -1.0);
        out.push(GridFunction::from_interior(&v));
    }
    out
}

fn operator_properties(seed: u64, j: usize) -> Result<Vec<PropertyEntry>> {
    let mesh = SpaceMesh::new(0.0, 1.0 + 0.25 * (j % 4) as f64, j)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let ops = HalfStepOperators::new(0.37, mesh)?;
    let l = mesh.length();

    let mut sbp = Tally::new(format!("summation-by-parts J={j}"), 1e-13);
    let mut iso0 = Tally::new(format!("B_h isometry L2 J={j}"), 1e-12);
    let mut iso1 = Tally::new(format!("B_h isometry H1 J={j}"), 1e-12);
    let mut half = Tally::new(format!("half-identity J={j}"), 1e-11);
    let mut linf = Tally::new(format!("max-norm inequality J={j}"), 0.0);
    let mut poinc = Tally::new(format!("discrete Poincare J={j}"), 0.0);
    let mut inv = Tally::new(format!("inverse inequality J={j}"), 0.0);

    let mut inputs: Vec<(GridFunction, GridFunction)> = (0..RANDOM_SAMPLES)
        .map(|_| (random_boundary_zero(&mut rng, j), random_boundary_zero(&mut rng, j)))
        .collect();
    for s in spikes(j) {
        inputs.push((s.clone(), s));
    }

    // An inequality a ≤ b passes when (a - b)/b ≤ 0 up to rounding.
    let ineq = |a: f64, b: f64| ((a - b) / b - 4.0 * f64::EPSILON).max(0.0);
    for (v, z) in &inputs {
        let lhs = inner_product_0h(&apply_laplacian(v, &mesh)?, z, &mesh)?;
        let rhs = -delta_h(v, &mesh)?.inner_product(&delta_h(z, &mesh)?, &mesh)?;
        let scale = seminorm_1h(v, &mesh) * seminorm_1h(z, &mesh);
        sbp.record((lhs - rhs).norm() / scale);

        let b = ops.apply_b_h(v)?;
        let (n0, n1) = (norm_0h(v, &mesh), seminorm_1h(v, &mesh));
        iso0.record((norm_0h(&b, &mesh) - n0).abs() / n0);
        iso1.record((seminorm_1h(&b, &mesh) - n1).abs() / n1);

        let x = ops.solve_one_plus_b(&ops.apply_a_inverse(v)?)?;
        let d = x.sub(&v.scale(Complex64::new(0.5, 0.0)))?;
        half.record(norm_0h(&d, &mesh) / n0);

        linf.record(ineq(norm_inf(v), l.sqrt() * n1));
        poinc.record(ineq(n0, l * n1));
        inv.record(ineq(n1, 2.0 / mesh.h() * n0));
    }
    Ok([sbp, iso0, iso1, half, linf, poinc, inv].into_iter().map(Tally::finish).collect())
}

/// Second-order one-sided stencils for the third derivative.
fn third_derivative_backward(f: &dyn Fn(f64) -> f64, x: f64, s: f64) -> f64 {
    (5.0 * f(x) - 18.0 * f(x - s) + 24.0 * f(x - 2.0 * s) - 14.0 * f(x - 3.0 * s) + 3.0 * f(x - 4.0 * s))
        / (2.0 * s * s * s)
}

fn third_derivative_forward(f: &dyn Fn(f64) -> f64, x: f64, s: f64) -> f64 {
    (-5.0 * f(x) + 18.0 * f(x + s) - 24.0 * f(x + 2.0 * s) + 14.0 * f(x + 3.0 * s) - 3.0 * f(x + 4.0 * s))
        / (2.0 * s * s * s)
}

/// Largest gap between one-sided finite-difference third derivatives of `n_δ`
/// at `δ` and `2δ`, divided by its admissible size `C s² + rounding`.
pub fn mollifier_join_defect(m: &Mollifier, step_fraction: f64) -> f64 {
    let d = m.delta();
    let s = step_fraction * d;
    let n = |x: f64| m.n(x);
    // sup |p⁽⁵⁾| on the polynomial piece bounds the stencil truncation error
    let m5 = (0..=1000)
        .map(|i| m.p(d * (1.0 + i as f64 / 1000.0), 5).abs())
        .fold(0.0, f64::max);
    let allowed = 2.0 * 1.75 * m5 * s * s + 1e3 * f64::EPSILON * 2.0 * d / (s * s * s);
    let mut worst: f64 = 0.0;
    for x in [d, 2.0 * d] {
        let gap = (third_derivative_backward(&n, x, s) - third_derivative_forward(&n, x, s)).abs();
        worst = worst.max(gap / allowed);
    }
    worst
}

fn mollifier_properties(seed: u64, delta: f64) -> Result<Vec<PropertyEntry>> {
    let m = Mollifier::new(delta)?;
    let mut hermite = Tally::new(format!("Hermite conditions delta={delta}"), 1e-10);
    for (_, defect) in m.condition_defects() {
        hermite.record(defect);
    }
    let mut identity = Tally::new(format!("identity region delta={delta}"), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ delta.to_bits());
    for _ in 0..1000 {
        let r = delta * rng.gen_range(0.0..=1.0f64).sqrt();
        let z = Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
        identity.record((m.gamma(z) - z).norm());
    }
    let mut joins = Tally::new(format!("C3 joins delta={delta}"), 1.0);
    for frac in [1e-2, 5e-3] {
        joins.record(mollifier_join_defect(&m, frac));
    }
    let mut bound = Tally::new(format!("gamma bound delta={delta}"), 0.0);
    for _ in 0..1000 {
        let z = Complex64::new(rng.gen_range(-10.0..10.0) * delta, rng.gen_range(-10.0..10.0) * delta);
        bound.record((m.gamma(z).norm() - 2.0f64.sqrt() * m.sup()).max(0.0));
    }
    Ok([hermite, identity, joins, bound].into_iter().map(Tally::finish).collect())
}

pub const DEFAULT_SIZES: [usize; 3] = [3, 10, 100];
pub const MOLLIFIER_CUTOFFS: [f64; 3] = [0.5, 1.0, 2.0];

/// Runs the operator and mollifier property suites; deterministic in `seed`.
pub fn verify_properties(seed: u64, sizes: &[usize], execution: Execution) -> Result<PropertyReport> {
    if sizes.iter().any(|&j| j < 1) {
        return Err(Error::Config("property sizes must be at least 1".into()));
    }
    let mut entries = Vec::new();
    for block in execution.map(sizes, |&j| operator_properties(seed, j)) {
        entries.extend(block?);
    }
    for block in execution.map(&MOLLIFIER_CUTOFFS, |&d| mollifier_properties(seed, d)) {
        entries.extend(block?);
    }
    Ok(PropertyReport {
        seed,
        sizes: sizes.to_vec(),
        all_passed: entries.iter().all(|e| e.passed),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_sizes() {
        let c = RunConfig::new(ProblemId::CubicSine, 31, 32);
        assert_eq!(c.level(0).interior, 31);
        assert_eq!(c.level(2).interior, 127);
        assert_eq!(c.level(2).steps, 128);
    }

    #[test]
    fn eoc_and_slope() {
        assert_eq!(eoc(Some(4.0), Some(1.0)), Some(2.0));
        assert_eq!(eoc(Some(0.0), Some(1.0)), None);
        let hs = [0.1, 0.05, 0.025];
        let ys: Vec<_> = hs.iter().map(|h: &f64| Some(3.0 * h.powi(2))).collect();
        assert!((fitted_slope(&hs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fitted_slope(&hs, &[Some(1.0), None, Some(1.0)]), None);
    }

    #[test]
    fn mesh_condition_is_monotone() {
        let a = MeshCondition::evaluate(1.0, 10.0, 0.1, 0.1, 0.12);
        let b = MeshCondition::evaluate(1.0, 10.0, 0.05, 0.05, 0.12);
        assert!(b.indicator < a.indicator);
        assert!(!a.satisfied && b.satisfied);
    }

    #[test]
    fn validation_rejects_bad_ranges() {
        let mut c = RunConfig::new(ProblemId::Zero, 0, 4);
        assert!(c.validate().is_err());
        c.interior = 3;
        c.steps = 0;
        assert!(c.validate().is_err());
        c.steps = 2;
        c.final_time = Some(-1.0);
        assert!(c.validate().is_err());
        c.final_time = Some(1.0);
        c.snapshot_times = vec![2.0];
        assert!(c.validate().is_err());
        c.snapshot_times = vec![0.5];
        c.validate().unwrap();
    }

    #[test]
    fn variant_names_parse() {
        assert_eq!("mollified".parse::<VariantName>().unwrap(), VariantName::Mollified);
        assert!("rk4".parse::<VariantName>().is_err());
    }
}
