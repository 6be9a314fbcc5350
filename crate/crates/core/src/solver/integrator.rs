//! Dormand–Prince 5(4) with first-same-as-last stages and standard
//! step-size control.

use super::config::OdeSettings;
use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const FAILURE_SHRINK: f64 = 0.25;

/// State handed to the observer after every accepted step.
#[derive(Debug)]
pub struct StepReport<'a> {
    pub t: f64,
    pub y: &'a [f64],
    /// Right-hand side at `(t, y)`.
    pub dy: &'a [f64],
    pub step: usize,
    /// `true` when `t` is one of the requested checkpoints or the end time.
    pub checkpoint: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub rhs_failures: usize,
}

fn error_norm(y: &[f64], y_new: &[f64], err: &[f64], s: &OdeSettings) -> f64 {
    let n = y.len().max(1) as f64;
    let sum: f64 = y
        .iter()
        .zip(y_new)
        .zip(err)
        .map(|((a, b), e)| {
            let sc = s.abs_tol + s.rel_tol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn rms_scaled(v: &[f64], y: &[f64], s: &OdeSettings) -> f64 {
    let n = v.len().max(1) as f64;
    let sum: f64 = v
        .iter()
        .zip(y)
        .map(|(a, b)| (a / (s.abs_tol + s.rel_tol * b.abs())).powi(2))
        .sum();
    (sum / n).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, landing exactly on every
/// checkpoint in `(t0, t_end)`. The observer sees the initial state and every
/// accepted step; an observer error aborts the integration.
pub fn dopri5<F, O>(
    mut f: F,
    t0: f64,
    y0: Vec<f64>,
    t_end: f64,
    checkpoints: &[f64],
    s: &OdeSettings,
    mut observe: O,
) -> Result<(Vec<f64>, IntegrationStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(&StepReport) -> Result<()>,
{
    s.validate()?;
    let n = y0.len();
    let mut stats = IntegrationStats::default();
    let mut stops: Vec<f64> = checkpoints
        .iter()
        .copied()
        .filter(|&c| c > t0 && c < t_end)
        .collect();
    stops.push(t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut y = y0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    f(t0, &y, &mut k[0])?;
    stats.rhs_evals += 1;
    observe(&StepReport {
        t: t0,
        y: &y,
        dy: &k[0],
        step: 0,
        checkpoint: checkpoints.contains(&t0),
    })?;

    let span = t_end - t0;
    let max_step = s.max_step.unwrap_or(span).min(span);
    let mut h = match s.initial_step {
        Some(h) => h,
        None => {
            let d0 = rms_scaled(&y, &y, s);
            let d1 = rms_scaled(&k[0], &y, s);
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            let h0 = h0.min(max_step);
            let y1: Vec<f64> = y.iter().zip(&k[0]).map(|(a, b)| a + h0 * b).collect();
            let mut f1 = vec![0.0; n];
            stats.rhs_evals += 1;
            match f(t0 + h0, &y1, &mut f1) {
                Ok(()) => {
                    let diff: Vec<f64> = f1.iter().zip(&k[0]).map(|(a, b)| a - b).collect();
                    let d2 = rms_scaled(&diff, &y, s) / h0;
                    let h1 = if d1.max(d2) <= 1e-15 {
                        (h0 * 1e-3).max(1e-6)
                    } else {
                        (0.01 / d1.max(d2)).powf(0.2)
                    };
                    (100.0 * h0).min(h1)
                }
                Err(_) => {
                    stats.rhs_failures += 1;
                    h0 * FAILURE_SHRINK
                }
            }
        }
    }
    .min(max_step);

    let mut t = t0;
    let mut stop_idx = 0;
    let mut y_new = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut last_rejected = false;

    while stop_idx < stops.len() {
        let target = stops[stop_idx];
        if stats.accepted + stats.rejected >= s.max_steps {
            return Err(Error::StepBudget {
                t,
                steps: s.max_steps,
            });
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(span).max(1e-300);
        if h < h_min {
            return Err(Error::StepUnderflow { t, h });
        }
        let lands = t + h >= target - h_min;
        let h_step = if lands { target - t } else { h };
        let t_new = if lands { target } else { t + h_step };

        let mut failed = false;
        for i in 1..7 {
            for (m, st) in stage.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, a) in A[i].iter().enumerate().take(i) {
                    acc += a * k[j][m];
                }
                *st = y[m] + h_step * acc;
            }
            let ti = if i == 6 { t_new } else { t + C[i] * h_step };
            stats.rhs_evals += 1;
            if f(ti, &stage, &mut k[i]).is_err() {
                failed = true;
                break;
            }
            if i == 6 {
                y_new.copy_from_slice(&stage);
            }
        }
        if failed {
            stats.rhs_failures += 1;
            stats.rejected += 1;
            h = h_step * FAILURE_SHRINK;
            last_rejected = true;
            continue;
        }
        for (m, e) in err.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, c) in E.iter().enumerate() {
                acc += c * k[j][m];
            }
            *e = h_step * acc;
        }
        let norm = error_norm(&y, &y_new, &err, s);
        let fac = if norm == 0.0 {
            FAC_MAX
        } else {
            (s.safety * norm.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
        };
        if norm <= 1.0 {
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            stats.accepted += 1;
            let checkpoint = lands;
            if lands {
                stop_idx += 1;
            }
            observe(&StepReport {
                t,
                y: &y,
                dy: &k[0],
                step: stats.accepted,
                checkpoint,
            })?;
            let grow = if last_rejected { fac.min(1.0) } else { fac };
            let proposed = h_step * grow;
            // A step shortened to land on a checkpoint does not shrink the next one.
            h = if lands { proposed.max(h) } else { proposed }.min(max_step);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h = h_step * fac.min(1.0);
            last_rejected = true;
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(rel: f64) -> OdeSettings {
        OdeSettings {
            rel_tol: rel,
            abs_tol: rel * 1e-3,
            ..OdeSettings::default()
        }
    }

    #[test]
    fn exponential_decay_to_tolerance() {
        for &rel in &[1e-6, 1e-9] {
            let (y, stats) = dopri5(
                |_, y, dy| {
                    dy[0] = -2.0 * y[0];
                    dy[1] = y[0];
                    Ok(())
                },
                0.0,
                vec![1.0, 0.0],
                1.5,
                &[],
                &settings(rel),
                |_| Ok(()),
            )
            .unwrap();
            let exact = (-3.0f64).exp();
            assert!((y[0] - exact).abs() < 20.0 * rel * exact, "{rel}: {}", y[0]);
            assert!((y[1] - 0.5 * (1.0 - exact)).abs() < 20.0 * rel);
            assert!(stats.accepted > 3);
        }
    }

    #[test]
    fn lands_on_checkpoints_and_reports_fsal_derivative() {
        let mut seen = Vec::new();
        dopri5(
            |t, _, dy| {
                dy[0] = t.cos();
                Ok(())
            },
            0.0,
            vec![0.0],
            2.0,
            &[0.5, 1.25],
            &settings(1e-8),
            |r| {
                assert!((r.dy[0] - r.t.cos()).abs() < 1e-15);
                if r.checkpoint {
                    seen.push(r.t);
                    assert!((r.y[0] - r.t.sin()).abs() < 1e-7);
                }
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen, vec![0.5, 1.25, 2.0]);
    }

    #[test]
    fn rhs_failure_shrinks_step() {
        let mut calls = 0;
        let (y, stats) = dopri5(
            |_, _, dy| {
                calls += 1;
                if calls == 3 {
                    return Err(Error::Invariant("transient".into()));
                }
                dy[0] = 1.0;
                Ok(())
            },
            0.0,
            vec![0.0],
            1.0,
            &[],
            &OdeSettings {
                initial_step: Some(0.5),
                ..settings(1e-6)
            },
            |_| Ok(()),
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-12);
        assert!(stats.rhs_failures >= 1);
    }

    #[test]
    fn persistent_failure_underflows() {
        let r = dopri5(
            |t, _, dy| {
                if t > 0.5 {
                    return Err(Error::Invariant("wall".into()));
                }
                dy[0] = 1.0;
                Ok(())
            },
            0.0,
            vec![0.0],
            1.0,
            &[],
            &settings(1e-6),
            |_| Ok(()),
        );
        assert!(matches!(r, Err(Error::StepUnderflow { .. })));
    }

    #[test]
    fn step_budget() {
        let r = dopri5(
            |_, y, dy| {
                dy[0] = -1e4 * (y[0] - 1.0);
                Ok(())
            },
            0.0,
            vec![0.0],
            10.0,
            &[],
            &OdeSettings {
                max_steps: 50,
                ..settings(1e-6)
            },
            |_| Ok(()),
        );
        assert!(matches!(r, Err(Error::StepBudget { .. })));
    }
}
