//! File formats: budget and diagnostics CSVs, snapshots, checksums and
//! atomic writes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};
use viscotherm_core::audit::{AuditSample, BudgetSample, Diagnostics};
use viscotherm_core::solver::Accumulators;
use viscotherm_core::DissipationBreakdown;

pub const BUDGET_HEADER: &str = "t,kinetic,internal,total,entropy,diss_thermal,diss_viscous,diss_relax,diss_stressdiff,boundary_work,body_power,min_b,max_b,min_e,min_theta";

pub const DIAGNOSTICS_HEADER: &str = "t,acc_boundary_work,acc_body_work,acc_entropy_production,acc_prescribed_work,entropy_rate,entropy_production,mass_rate_solver,mass_rate_audit,energy_rate_solver,energy_rate_audit,inversion_residual,min_dissipation_term";

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path
        .file_name()
        .with_context(|| format!("{} has no file name", path.display()))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn join_row(out: &mut String, values: &[f64]) {
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        // `{:?}` is the shortest representation that round-trips
        let _ = write!(out, "{v:?}");
    }
    out.push('\n');
}

fn budget_values(b: &BudgetSample) -> [f64; 15] {
    let d = &b.dissipation;
    [
        b.t,
        b.kinetic,
        b.internal,
        b.total,
        b.entropy,
        d.thermal,
        d.viscous,
        d.relaxation,
        d.stress_diffusion,
        b.boundary_work,
        b.body_power,
        b.min_b,
        b.max_b,
        b.min_e,
        b.min_theta,
    ]
}

fn diagnostics_values(t: f64, d: &Diagnostics) -> [f64; 13] {
    let a = &d.accumulators;
    [
        t,
        a.boundary_work,
        a.body_work,
        a.entropy_production,
        a.prescribed_work,
        d.entropy_rate,
        d.entropy_production,
        d.mass_rate_solver,
        d.mass_rate_audit,
        d.energy_rate_solver,
        d.energy_rate_audit,
        d.inversion_residual,
        d.min_dissipation_term,
    ]
}

pub fn budgets_csv(samples: &[AuditSample]) -> String {
    let mut out = String::with_capacity(64 * (samples.len() + 1));
    out.push_str(BUDGET_HEADER);
    out.push('\n');
    for s in samples {
        join_row(&mut out, &budget_values(&s.budget));
    }
    out
}

pub fn diagnostics_csv(samples: &[AuditSample]) -> String {
    let mut out = String::new();
    out.push_str(DIAGNOSTICS_HEADER);
    out.push('\n');
    for s in samples {
        join_row(&mut out, &diagnostics_values(s.budget.t, &s.diagnostics));
    }
    out
}

/// Parses a numeric CSV with an exact header and a fixed column count.
pub fn parse_csv(text: &str, header: &str, what: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == header => {}
        Some(h) => bail!("{what}: unexpected header `{h}`"),
        None => bail!("{what}: empty file"),
    }
    let cols = header.split(',').count();
    if !text.ends_with('\n') {
        bail!("{what}: truncated (missing final newline)");
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let row = line
                .split(',')
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .with_context(|| format!("{what}: line {}: bad number", k + 2))?;
            if row.len() != cols {
                bail!(
                    "{what}: line {} has {} columns, expected {cols}",
                    k + 2,
                    row.len()
                );
            }
            Ok(row)
        })
        .collect()
}

/// Rebuilds audit samples from the two CSV tables.
pub fn samples_from_csv(budgets: &str, diagnostics: &str) -> Result<Vec<AuditSample>> {
    let b = parse_csv(budgets, BUDGET_HEADER, "budgets.csv")?;
    let d = parse_csv(diagnostics, DIAGNOSTICS_HEADER, "diagnostics.csv")?;
    if b.len() != d.len() {
        bail!(
            "budgets.csv has {} rows but diagnostics.csv has {}",
            b.len(),
            d.len()
        );
    }
    b.iter()
        .zip(&d)
        .enumerate()
        .map(|(k, (r, q))| {
            if r[0] != q[0] {
                bail!("row {}: time {} does not match {}", k + 1, r[0], q[0]);
            }
            Ok(AuditSample {
                budget: BudgetSample {
                    t: r[0],
                    kinetic: r[1],
                    internal: r[2],
                    total: r[3],
                    entropy: r[4],
                    dissipation: DissipationBreakdown::new(r[5], r[6], r[7], r[8]),
                    boundary_work: r[9],
                    body_power: r[10],
                    min_b: r[11],
                    max_b: r[12],
                    min_e: r[13],
                    min_theta: r[14],
                },
                diagnostics: Diagnostics {
                    accumulators: Accumulators {
                        boundary_work: q[1],
                        body_work: q[2],
                        entropy_production: q[3],
                        prescribed_work: q[4],
                    },
                    entropy_rate: q[5],
                    entropy_production: q[6],
                    mass_rate_solver: q[7],
                    mass_rate_audit: q[8],
                    energy_rate_solver: q[9],
                    energy_rate_audit: q[10],
                    inversion_residual: q[11],
                    min_dissipation_term: q[12],
                },
            })
        })
        .collect()
}

pub const SCALAR_HEADER: &str = "x,y,value";
pub const VELOCITY_HEADER: &str = "x,y,vx,vy";

/// `x,y,value` rows in plot-grid order (row-major, `x` outer).
pub fn scalar_csv(points: &[(f64, f64)], values: &[f64]) -> String {
    let mut out = String::from(SCALAR_HEADER);
    out.push('\n');
    for (&(x, y), &v) in points.iter().zip(values) {
        join_row(&mut out, &[x, y, v]);
    }
    out
}

pub fn velocity_csv(points: &[(f64, f64)], vx: &[f64], vy: &[f64]) -> String {
    let mut out = String::from(VELOCITY_HEADER);
    out.push('\n');
    for ((&(x, y), &a), &b) in points.iter().zip(vx).zip(vy) {
        join_row(&mut out, &[x, y, a, b]);
    }
    out
}
