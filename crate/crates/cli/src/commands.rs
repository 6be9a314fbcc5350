//! The four subcommands. Each returns a [`Status`] on completion; errors
//! carry enough type information for [`crate::exit_code`] to classify them.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};
use viscotherm_core::audit::{self, AuditReport, RunOutcome, Verdict, ROUNDTRIP_TOL};
use viscotherm_core::constitutive::{validate_assumptions, SampleSpec, ValidationReport};
use viscotherm_core::regularization::{clamp_b, CutoffSpec};
use viscotherm_core::solver::{Problem, SimState, SimulationConfig, SweepAxis, SweepSpec};
use viscotherm_core::{RegularizedModel, Result as CoreResult};

use crate::output::{self, write_atomic};
use crate::{InputError, Status};

pub const MANIFEST: &str = "manifest.json";
pub const BUDGETS: &str = "budgets.csv";
pub const DIAGNOSTICS: &str = "diagnostics.csv";
pub const AUDIT_REPORT: &str = "audit_report.json";
pub const VALIDATION_REPORT: &str = "validation_report.json";
pub const SWEEP_SUMMARY: &str = "sweep_summary.csv";

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub strict: bool,
    pub snapshots: Option<Vec<f64>>,
    pub plot_grid: Option<[usize; 2]>,
    pub threads: Option<usize>,
}

impl RunOptions {
    fn apply(&self, cfg: &mut SimulationConfig) {
        cfg.strict |= self.strict;
        if let Some(s) = &self.snapshots {
            cfg.output.snapshots = s.clone();
        }
        if let Some(g) = self.plot_grid {
            cfg.output.plot_grid = g;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunState {
    Running,
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub index: usize,
    pub t: f64,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisInfo {
    pub velocity_modes: [usize; 2],
    pub scalar_modes: [usize; 2],
    pub n_velocity: usize,
    pub n_scalar: usize,
    pub quadrature_nodes: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCounts {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub rhs_failures: usize,
}

/// Written before a run starts and finalized after it ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub state: RunState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: SimulationConfig,
    pub basis: BasisInfo,
    pub started_unix: f64,
    #[serde(default)]
    pub finished_unix: Option<f64>,
    #[serde(default)]
    pub steps: Option<StepCounts>,
    #[serde(default)]
    pub passed: Option<bool>,
    #[serde(default)]
    pub verdicts: Vec<Verdict>,
    #[serde(default)]
    pub snapshots: Vec<SnapshotEntry>,
    #[serde(default)]
    pub files: Vec<FileEntry>,
}

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Reads and validates a configuration file; every failure is an input error.
pub fn load_config(path: &Path) -> Result<SimulationConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
    let cfg = SimulationConfig::from_json(&text)
        .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    cfg.validate()
        .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

fn input<T>(r: CoreResult<T>) -> Result<T> {
    r.map_err(|e| InputError(e.to_string()).into())
}

/// Runs `f` on a dedicated pool when a thread count is given.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("building worker pool")?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Checks the model assumptions and writes `validation_report.json`.
pub fn cmd_validate(config: &Path, out: &Path) -> Result<(Status, ValidationReport)> {
    let cfg = load_config(config)?;
    let (model, coeffs) = input(cfg.model.build())?;
    let report = validate_assumptions(&model, &coeffs, &SampleSpec::default());
    let json = serde_json::to_string_pretty(&report)?;
    write_atomic(&out.join(VALIDATION_REPORT), json.as_bytes())?;
    let status = if report.passed() {
        Status::Pass
    } else {
        Status::CheckFailure
    };
    Ok((status, report))
}

fn manifest_for(problem: &Problem, started: f64) -> RunManifest {
    let disc = problem.discretization();
    let q = disc.quadrature();
    let cfg = problem.config();
    RunManifest {
        artifact: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        state: RunState::Running,
        error: None,
        config: cfg.clone(),
        basis: BasisInfo {
            velocity_modes: cfg.velocity_modes,
            scalar_modes: cfg.scalar_modes,
            n_velocity: disc.n_velocity(),
            n_scalar: disc.n_scalar(),
            quadrature_nodes: [q.nx(), q.ny()],
        },
        started_unix: started,
        finished_unix: None,
        steps: None,
        passed: None,
        verdicts: Vec::new(),
        snapshots: Vec::new(),
        files: Vec::new(),
    }
}

fn write_manifest(dir: &Path, m: &RunManifest) -> Result<()> {
    write_atomic(&dir.join(MANIFEST), serde_json::to_string_pretty(m)?.as_bytes())
}

struct Written {
    files: Vec<FileEntry>,
    snapshots: Vec<SnapshotEntry>,
}

fn record(dir: &Path, rel: &str, bytes: &[u8], files: &mut Vec<FileEntry>) -> Result<()> {
    write_atomic(&dir.join(rel), bytes)?;
    files.push(FileEntry {
        path: rel.to_string(),
        sha256: output::sha256_hex(bytes),
        bytes: bytes.len() as u64,
    });
    Ok(())
}

fn plot_temperature(problem: &Problem, b: &[f64], e: &[f64]) -> CoreResult<Vec<f64>> {
    let cutoff = problem.cutoff();
    b.iter()
        .zip(e)
        .map(|(&b, &e)| problem.node_temperature(e, clamp_b(b, cutoff)))
        .collect()
}

fn write_snapshot(
    dir: &Path,
    problem: &Problem,
    index: usize,
    state: &SimState,
    files: &mut Vec<FileEntry>,
) -> Result<SnapshotEntry> {
    let [px, py] = problem.config().output.plot_grid;
    let sampler = problem.discretization().sampler(px, py)?;
    let points: Vec<(f64, f64)> = (0..sampler.len()).map(|k| sampler.point(k)).collect();
    let b = sampler.scalar(&state.d);
    let e = sampler.scalar(&state.e_c);
    let theta = plot_temperature(problem, &b, &e)?;
    let (vx, vy) = sampler.velocity(&state.c);
    let mut names = Vec::new();
    for (field, text) in [
        ("b", output::scalar_csv(&points, &b)),
        ("e", output::scalar_csv(&points, &e)),
        ("theta", output::scalar_csv(&points, &theta)),
        ("velocity", output::velocity_csv(&points, &vx, &vy)),
    ] {
        let rel = format!("snapshots/{index:03}_{field}.csv");
        record(dir, &rel, text.as_bytes(), files)?;
        names.push(rel);
    }
    Ok(SnapshotEntry {
        index,
        t: state.t,
        files: names,
    })
}

fn write_outputs(dir: &Path, problem: &Problem, outcome: &RunOutcome) -> Result<Written> {
    let mut files = Vec::new();
    record(
        dir,
        BUDGETS,
        output::budgets_csv(&outcome.samples).as_bytes(),
        &mut files,
    )?;
    record(
        dir,
        DIAGNOSTICS,
        output::diagnostics_csv(&outcome.samples).as_bytes(),
        &mut files,
    )?;
    record(
        dir,
        AUDIT_REPORT,
        serde_json::to_string_pretty(&outcome.report)?.as_bytes(),
        &mut files,
    )?;
    let snapshots = outcome
        .snapshots
        .iter()
        .enumerate()
        .map(|(k, s)| write_snapshot(dir, problem, k, s, &mut files))
        .collect::<Result<Vec<_>>>()?;
    files.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(Written { files, snapshots })
}

fn finalize(
    dir: &Path,
    manifest: &mut RunManifest,
    problem: &Problem,
    outcome: &RunOutcome,
) -> Result<Status> {
    let written = write_outputs(dir, problem, outcome)?;
    let st = outcome.stats;
    manifest.state = RunState::Completed;
    manifest.finished_unix = Some(now_unix());
    manifest.steps = Some(StepCounts {
        accepted: st.accepted,
        rejected: st.rejected,
        rhs_evals: st.rhs_evals,
        rhs_failures: st.rhs_failures,
    });
    manifest.passed = Some(outcome.report.passed());
    manifest.verdicts = outcome.report.verdicts.clone();
    manifest.snapshots = written.snapshots;
    manifest.files = written.files;
    write_manifest(dir, manifest)?;
    Ok(if outcome.report.passed() {
        Status::Pass
    } else {
        Status::CheckFailure
    })
}

fn mark_failed(dir: &Path, manifest: &mut RunManifest, err: &viscotherm_core::Error) -> Result<()> {
    manifest.state = RunState::Failed;
    manifest.error = Some(err.to_string());
    manifest.finished_unix = Some(now_unix());
    write_manifest(dir, manifest)
}

/// Runs one simulation into `out`, returning the audit verdict.
pub fn cmd_run(config: &Path, out: &Path, opts: &RunOptions) -> Result<(Status, AuditReport)> {
    let mut cfg = load_config(config)?;
    opts.apply(&mut cfg);
    input(cfg.validate())?;
    let threads = cfg.threads;
    with_threads(threads, || run_into(cfg, out))?
}

/// Runs an already loaded configuration into `dir`.
pub fn run_into(cfg: SimulationConfig, dir: &Path) -> Result<(Status, AuditReport)> {
    let started = now_unix();
    let problem = input(Problem::new(cfg))?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut manifest = manifest_for(&problem, started);
    write_manifest(dir, &manifest)?;
    match audit::run(&problem) {
        Ok(outcome) => {
            let status = finalize(dir, &mut manifest, &problem, &outcome)?;
            Ok((status, outcome.report))
        }
        Err(e) => {
            mark_failed(dir, &mut manifest, &e)?;
            Err(e.into())
        }
    }
}

fn read_file(dir: &Path, rel: &str) -> Result<Vec<u8>> {
    let p = dir.join(rel);
    fs::read(&p).map_err(|e| InputError(format!("cannot read {}: {e}", p.display())).into())
}

fn list_files(root: &Path, dir: &Path, out: &mut BTreeSet<String>) -> Result<()> {
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            list_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root)?.to_string_lossy().replace('\\', "/");
            out.insert(rel);
        }
    }
    Ok(())
}

fn snapshot_roundtrip(
    dir: &Path,
    manifest: &RunManifest,
    reg: &RegularizedModel,
    cutoff: &CutoffSpec,
) -> Result<Verdict> {
    let column = |rel: &str| -> Result<Vec<f64>> {
        let text = String::from_utf8(read_file(dir, rel)?)
            .map_err(|_| InputError(format!("{rel} is not UTF-8")))?;
        let rows = output::parse_csv(&text, output::SCALAR_HEADER, rel)
            .map_err(|e| InputError(e.to_string()))?;
        Ok(rows.into_iter().map(|r| r[2]).collect())
    };
    let mut worst = 0.0f64;
    for snap in &manifest.snapshots {
        let find = |field: &str| {
            snap.files
                .iter()
                .find(|f| f.ends_with(&format!("_{field}.csv")))
                .ok_or_else(|| InputError(format!("snapshot {} lacks {field}", snap.index)))
        };
        let b = column(find("b")?)?;
        let e = column(find("e")?)?;
        let theta = column(find("theta")?)?;
        if b.len() != e.len() || b.len() != theta.len() {
            return Err(InputError(format!("snapshot {} fields differ in length", snap.index)).into());
        }
        for k in 0..b.len() {
            let r = audit::roundtrip_error(reg, theta[k], clamp_b(b[k], cutoff), e[k])
                .unwrap_or(f64::INFINITY);
            worst = if r.is_nan() { f64::INFINITY } else { worst.max(r) };
        }
    }
    Ok(Verdict::new("snapshot_roundtrip", worst, ROUNDTRIP_TOL))
}

/// Re-checks a run directory from its stored files.
pub fn cmd_audit(dir: &Path) -> Result<(Status, AuditReport)> {
    let raw = read_file(dir, MANIFEST)?;
    let manifest: RunManifest = serde_json::from_slice(&raw)
        .map_err(|e| InputError(format!("{MANIFEST}: {e}")))?;
    if manifest.state != RunState::Completed {
        return Err(InputError(format!("run state is {:?}, not completed", manifest.state)).into());
    }
    let mut listed = BTreeSet::new();
    for f in &manifest.files {
        let bytes = read_file(dir, &f.path)?;
        let sum = output::sha256_hex(&bytes);
        if sum != f.sha256 || bytes.len() as u64 != f.bytes {
            return Err(InputError(format!("checksum mismatch for {}", f.path)).into());
        }
        listed.insert(f.path.clone());
    }
    let mut present = BTreeSet::new();
    list_files(dir, dir, &mut present)?;
    present.remove(MANIFEST);
    if let Some(extra) = present.difference(&listed).next() {
        return Err(InputError(format!("{extra} is not listed in the manifest")).into());
    }

    let text = |rel: &str| -> Result<String> {
        String::from_utf8(read_file(dir, rel)?)
            .map_err(|_| InputError(format!("{rel} is not UTF-8")).into())
    };
    let samples = output::samples_from_csv(&text(BUDGETS)?, &text(DIAGNOSTICS)?)
        .map_err(|e| InputError(e.to_string()))?;
    let (model, coeffs) = input(manifest.config.model.build())?;
    let reg = if manifest.config.reg_epsilon > 0.0 {
        input(RegularizedModel::new(model, manifest.config.reg_epsilon))?
    } else {
        RegularizedModel::plain(model)
    };
    let cutoff = CutoffSpec {
        k: manifest.config.cutoff_k.0,
        b_min: coeffs.b_min,
        b_max: coeffs.b_max,
    };
    let mut report = audit::audit_series(&reg, &coeffs, &samples);
    report
        .verdicts
        .push(snapshot_roundtrip(dir, &manifest, &reg, &cutoff)?);
    let status = if report.passed() {
        Status::Pass
    } else {
        Status::CheckFailure
    };
    Ok((status, report))
}

/// One row of `sweep_summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub status: String,
    pub dir: String,
    pub accepted_steps: Option<usize>,
    pub total: Option<f64>,
    pub entropy: Option<f64>,
    pub energy_drift: Option<f64>,
    pub entropy_decrease: Option<f64>,
    pub b_violation: Option<f64>,
    pub positivity_violation: Option<f64>,
    pub roundtrip_residual: Option<f64>,
    pub entropy_identity_residual: Option<f64>,
    /// Largest final-temperature difference to the previous successful run
    /// on the plot grid.
    pub theta_diff_prev: Option<f64>,
    pub error: Option<String>,
}

pub const SWEEP_HEADER: &str = "value,status,dir,accepted_steps,total,entropy,energy_drift,entropy_decrease,b_violation,positivity_violation,roundtrip_residual,entropy_identity_residual,theta_diff_prev,error";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let err = r
            .error
            .as_deref()
            .unwrap_or("")
            .replace([',', '\n'], ";");
        let fields = [
            format!("{:?}", r.value),
            r.status.clone(),
            r.dir.clone(),
            r.accepted_steps.map(|n| n.to_string()).unwrap_or_default(),
            opt(r.total),
            opt(r.entropy),
            opt(r.energy_drift),
            opt(r.entropy_decrease),
            opt(r.b_violation),
            opt(r.positivity_violation),
            opt(r.roundtrip_residual),
            opt(r.entropy_identity_residual),
            opt(r.theta_diff_prev),
            err,
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Runs every value of a sweep and writes one run directory per value plus
/// `sweep_summary.csv`. Failed runs are recorded, not fatal.
pub fn cmd_sweep(
    config: &Path,
    axis: &str,
    values: &[f64],
    out: &Path,
    opts: &RunOptions,
) -> Result<(Status, Vec<SweepRow>)> {
    let mut base = load_config(config)?;
    opts.apply(&mut base);
    let axis: SweepAxis = input(axis.parse())?;
    let spec = input(SweepSpec::new(axis, values.to_vec()))?;
    for &v in &spec.values {
        input(spec.apply(&base, v))?;
    }
    let threads = base.threads;
    let runs = with_threads(threads, || audit::run_sweep(&base, &spec))?;
    let runs = input(runs)?;

    let mut rows = Vec::with_capacity(runs.len());
    let mut prev_theta: Option<Vec<f64>> = None;
    for run in runs {
        let dir: PathBuf = out.join(&run.label);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let problem = input(Problem::new(run.config.clone()))?;
        let mut manifest = manifest_for(&problem, now_unix());
        let mut row = SweepRow {
            value: run.value,
            status: String::new(),
            dir: run.label.clone(),
            accepted_steps: None,
            total: None,
            entropy: None,
            energy_drift: None,
            entropy_decrease: None,
            b_violation: None,
            positivity_violation: None,
            roundtrip_residual: None,
            entropy_identity_residual: None,
            theta_diff_prev: None,
            error: None,
        };
        match &run.outcome {
            Ok(outcome) => {
                let status = finalize(&dir, &mut manifest, &problem, outcome)?;
                let measured = |c: &str| outcome.report.verdict(c).map(|v| v.measured);
                let last = outcome.samples.last().map(|s| s.budget);
                row.status = match status {
                    Status::Pass => "pass".into(),
                    Status::CheckFailure => "check_failure".into(),
                };
                row.accepted_steps = Some(outcome.stats.accepted);
                row.total = last.map(|b| b.total);
                row.entropy = last.map(|b| b.entropy);
                row.energy_drift = measured("energy_conservation");
                row.entropy_decrease = measured("entropy_monotone");
                row.b_violation = measured("b_bounds");
                row.positivity_violation = measured("positivity");
                row.roundtrip_residual = measured("inversion_roundtrip");
                row.entropy_identity_residual = Some(outcome.report.entropy_identity_residual);
                let [px, py] = problem.config().output.plot_grid;
                let sampler = problem.discretization().sampler(px, py)?;
                let fs_ = &outcome.final_state;
                let theta = plot_temperature(
                    &problem,
                    &sampler.scalar(&fs_.d),
                    &sampler.scalar(&fs_.e_c),
                )?;
                if let Some(prev) = &prev_theta {
                    row.theta_diff_prev = Some(
                        prev.iter()
                            .zip(&theta)
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max),
                    );
                }
                prev_theta = Some(theta);
            }
            Err(e) => {
                mark_failed(&dir, &mut manifest, e)?;
                row.status = "failed".into();
                row.error = Some(e.to_string());
            }
        }
        rows.push(row);
    }
    write_atomic(&out.join(SWEEP_SUMMARY), sweep_csv(&rows).as_bytes())?;
    Ok((Status::Pass, rows))
}

/// Parses `PxQ`.
pub fn parse_plot_grid(s: &str) -> Result<[usize; 2]> {
    let (p, q) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| InputError(format!("plot grid `{s}` must look like 128x128")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| InputError(format!("bad plot grid size `{v}`")))
    };
    Ok([parse(p)?, parse(q)?])
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!(InputError(format!("bad number `{v}` in list"))))
        })
        .collect()
}
