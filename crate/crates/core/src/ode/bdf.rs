//! Implicit BDF integration (orders 1 and 2) of linear systems.
//!
//! Every implicit stage is a single tridiagonal solve since `f(u) = A·u`.
//! Step sizes adapt by step doubling: one step of `h` is compared with two
//! steps of `h/2`, and the two-half-step result is kept. The error is
//! measured in the scaled max norm.

use super::{scaled_max, Integration, IntegratorConfig, SolveStats, Tridiagonal};
use crate::consolidation::{ConsolidationCase, SolutionField};
use crate::error::{Error, Result};

/// One fixed BDF step of size `dt`.
///
/// `history` holds the most recent states, oldest first: `[u_t]` for order 1,
/// `[u_{t-dt}, u_t]` for order 2.
pub fn bdf_step(a: &Tridiagonal, history: &[&[f64]], dt: f64, order: usize) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::validation(format!("dt must be positive, got {dt}")));
    }
    if !(order == 1 || order == 2) {
        return Err(Error::validation(format!("BDF order must be 1 or 2, got {order}")));
    }
    if history.len() != order {
        return Err(Error::Shape {
            what: "BDF history",
            expected: order,
            got: history.len(),
        });
    }
    for h in history {
        if h.len() != a.len() {
            return Err(Error::Shape {
                what: "BDF state",
                expected: a.len(),
                got: h.len(),
            });
        }
    }
    match order {
        1 => backward_euler(a, history[0], dt),
        _ => bdf2_variable(a, history[0], history[1], dt, dt),
    }
}

fn backward_euler(a: &Tridiagonal, y: &[f64], h: f64) -> Result<Vec<f64>> {
    a.identity_minus(h).solve(y)
}

/// Variable-step BDF2 with step ratio `ω = h / h_prev`:
/// `(I - h·(1+ω)/(1+2ω)·A)·y⁺ = ((1+ω)²·y - ω²·y_prev) / (1+2ω)`.
fn bdf2_variable(a: &Tridiagonal, y_prev: &[f64], y: &[f64], h_prev: f64, h: f64) -> Result<Vec<f64>> {
    let w = h / h_prev;
    let denom = 1.0 + 2.0 * w;
    let c = (1.0 + w) / denom;
    let cy = (1.0 + w) * (1.0 + w) / denom;
    let cp = w * w / denom;
    let rhs: Vec<f64> = y.iter().zip(y_prev).map(|(u, p)| cy * u - cp * p).collect();
    a.identity_minus(c * h).solve(&rhs)
}

const MAX_RATIO: f64 = 2.0;
/// Local errors are held to this fraction of `rtol`/`atol` so that the
/// accumulated global error stays near the requested tolerance.
const LOCAL_TOL_FACTOR: f64 = 0.1;

struct Stepper<'a> {
    a: &'a Tridiagonal,
    order: usize,
    solves: usize,
}

impl Stepper<'_> {
    fn step(&mut self, y: &[f64], prev: Option<(&[f64], f64)>, h: f64) -> Result<Vec<f64>> {
        self.solves += 1;
        match (self.order, prev) {
            (2, Some((y_prev, h_prev))) => bdf2_variable(self.a, y_prev, y, h_prev, h),
            _ => backward_euler(self.a, y, h),
        }
    }
}

pub(super) fn integrate(
    a: &Tridiagonal,
    y0: &[f64],
    t_eval: &[f64],
    cfg: &IntegratorConfig,
    observer: &mut dyn FnMut(f64, &[f64]),
) -> Result<Integration> {
    let order = cfg.method.bdf_order().expect("BDF method");
    let mut stepper = Stepper { a, order, solves: 0 };
    let mut stats = SolveStats {
        method: cfg.method.label().to_string(),
        dense_output: "steps clipped to land on output times".to_string(),
        ..Default::default()
    };

    let mut states = Vec::with_capacity(t_eval.len());
    let mut t = 0.0;
    let mut y = y0.to_vec();
    let mut prev: Option<(Vec<f64>, f64)> = None;
    let mut dt = cfg.dt_init;

    for &t_out in t_eval {
        loop {
            let remaining = t_out - t;
            if remaining <= 1e-13 * t_out.abs().max(1.0) {
                break;
            }
            if stats.accepted + stats.rejected >= cfg.max_steps {
                return Err(Error::MaxSteps {
                    max_steps: cfg.max_steps,
                    t,
                });
            }
            // Variable-step BDF2 is zero-stable only for step ratios below
            // 1 + √2; `prev` holds the last half step.
            let mut h = match &prev {
                Some((_, hp)) if order == 2 => dt.min(2.0 * MAX_RATIO * hp),
                _ => dt,
            };
            let clipped = h >= remaining;
            if clipped {
                h = remaining;
            } else if 2.0 * h > remaining {
                h = 0.5 * remaining;
            }

            let prev_ref = prev.as_ref().map(|(v, hp)| (v.as_slice(), *hp));
            let full = stepper.step(&y, prev_ref, h)?;
            let half1 = stepper.step(&y, prev_ref, 0.5 * h)?;
            let half2 = stepper.step(&half1, Some((&y, 0.5 * h)), 0.5 * h)?;

            // First step runs at order 1 regardless, no history yet.
            let p = if prev.is_some() { order } else { 1 };
            let richardson = (1u32 << p) as f64 - 1.0;
            let diff: Vec<f64> = half2.iter().zip(&full).map(|(s, b)| (s - b) / richardson).collect();
            let err = scaled_max(&diff, &y, &half2, LOCAL_TOL_FACTOR * cfg.rtol, LOCAL_TOL_FACTOR * cfg.atol);
            let expo = -1.0 / (p as f64 + 1.0);

            if err <= 1.0 {
                stats.accepted += 1;
                t = if clipped { t_out } else { t + h };
                prev = Some((half1, 0.5 * h));
                y = half2;
                observer(t, &y);
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(expo)).clamp(0.2, 5.0) };
                let proposal = h * factor;
                dt = if clipped { proposal.max(dt) } else { proposal }.min(cfg.dt_max);
            } else {
                stats.rejected += 1;
                dt = h * (0.9 * err.powf(expo)).max(0.2);
                if dt < cfg.dt_min {
                    return Err(Error::StepUnderflow { t, dt });
                }
            }
        }
        states.push(y.clone());
    }
    stats.linear_solves = stepper.solves;
    Ok(Integration { states, stats })
}

/// Adaptive BDF solve of one consolidation case on an `nz`-node grid.
///
/// `cfg.method` must be `BDF1` or `BDF2`. The initial profile is linearly
/// interpolated from the sensor depths onto the grid.
pub fn bdf_solve(case: &ConsolidationCase, nz: usize, t_eval: &[f64], cfg: &IntegratorConfig) -> Result<SolutionField> {
    if cfg.method.bdf_order().is_none() {
        return Err(Error::validation(format!(
            "bdf_solve requires a BDF method, got {}",
            cfg.method.label()
        )));
    }
    super::solve_case(case, nz, t_eval, cfg)
}
