//! Explicit Runge–Kutta integrators: classical RK4 and Dormand–Prince 5(4).

use super::{scaled_rms, Integration, IntegratorConfig, Method, SolveStats, Tridiagonal};
use crate::consolidation::{ConsolidationCase, SolutionField};
use crate::error::{Error, Result};

/// One classical fourth-order Runge–Kutta step for the autonomous system
/// `du/dt = f(u)`. `f_apply(u, out)` writes `f(u)` into `out`.
pub fn rk4_step<F>(f_apply: F, u: &[f64], dt: f64) -> Vec<f64>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = u.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    f_apply(u, &mut k1);
    axpy_into(u, 0.5 * dt, &k1, &mut tmp);
    f_apply(&tmp, &mut k2);
    axpy_into(u, 0.5 * dt, &k2, &mut tmp);
    f_apply(&tmp, &mut k3);
    axpy_into(u, dt, &k3, &mut tmp);
    f_apply(&tmp, &mut k4);

    (0..n)
        .map(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

fn axpy_into(y: &[f64], a: f64, x: &[f64], out: &mut [f64]) {
    for ((o, yi), xi) in out.iter_mut().zip(y).zip(x) {
        *o = yi + a * xi;
    }
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Difference between the 5th- and embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

pub(super) fn integrate_dopri(
    a: &Tridiagonal,
    y0: &[f64],
    t_eval: &[f64],
    cfg: &IntegratorConfig,
    observer: &mut dyn FnMut(f64, &[f64]),
) -> Result<Integration> {
    let n = y0.len();
    let mut stats = SolveStats {
        method: Method::Rk45.label().to_string(),
        dense_output: "steps clipped to land on output times".to_string(),
        ..Default::default()
    };
    let expo = 0.2 - BETA * 0.75;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err_vec = vec![0.0; n];

    let mut states = Vec::with_capacity(t_eval.len());
    let mut t = 0.0;
    let mut y = y0.to_vec();
    let mut dt = cfg.dt_init;
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;

    a.matvec_into(&y, &mut k[0]);
    stats.rhs_evals += 1;

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
            let clipped = dt >= remaining;
            let h = if clipped { remaining } else { dt };

            for s in 1..7 {
                stage.copy_from_slice(&y);
                for (j, kj) in k.iter().enumerate().take(s) {
                    let coef = A[s][j];
                    if coef != 0.0 {
                        for (st, kv) in stage.iter_mut().zip(kj) {
                            *st += h * coef * kv;
                        }
                    }
                }
                if s == 6 {
                    y_new.copy_from_slice(&stage);
                }
                a.matvec_into(&stage, &mut k[s]);
            }
            stats.rhs_evals += 6;

            for i in 0..n {
                err_vec[i] = h * (0..7).map(|s| E[s] * k[s][i]).sum::<f64>();
            }
            let err = scaled_rms(&err_vec, &y, &y_new, cfg.rtol, cfg.atol);

            if err <= 1.0 {
                stats.accepted += 1;
                t = if clipped { t_out } else { t + h };
                y.copy_from_slice(&y_new);
                // FSAL: the last stage is f at the new state.
                let last = k[6].clone();
                k[0] = last;
                observer(t, &y);

                let fac11 = err.max(1e-300).powf(expo);
                let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut proposal = h / fac;
                if last_rejected {
                    proposal = proposal.min(h);
                }
                fac_old = err.max(1e-4);
                last_rejected = false;
                dt = if clipped { proposal.max(dt) } else { proposal }.min(cfg.dt_max);
            } else {
                stats.rejected += 1;
                let fac11 = err.powf(expo);
                dt = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
                last_rejected = true;
                if dt < cfg.dt_min {
                    return Err(Error::StepUnderflow { t, dt });
                }
            }
        }
        states.push(y.clone());
    }
    Ok(Integration { states, stats })
}

pub(super) fn integrate_rk4_fixed(
    a: &Tridiagonal,
    y0: &[f64],
    t_eval: &[f64],
    cfg: &IntegratorConfig,
    observer: &mut dyn FnMut(f64, &[f64]),
) -> Result<Integration> {
    let mut stats = SolveStats {
        method: Method::Rk4Fixed.label().to_string(),
        dense_output: "steps clipped to land on output times".to_string(),
        ..Default::default()
    };
    let f = |u: &[f64], out: &mut [f64]| a.matvec_into(u, out);
    let mut states = Vec::with_capacity(t_eval.len());
    let mut t = 0.0;
    let mut y = y0.to_vec();
    for &t_out in t_eval {
        while t_out - t > 1e-13 * t_out.abs().max(1.0) {
            if stats.accepted >= cfg.max_steps {
                return Err(Error::MaxSteps {
                    max_steps: cfg.max_steps,
                    t,
                });
            }
            let h = cfg.dt_init.min(t_out - t);
            y = rk4_step(f, &y, h);
            stats.rhs_evals += 4;
            stats.accepted += 1;
            t = if h == t_out - t { t_out } else { t + h };
            observer(t, &y);
        }
        states.push(y.clone());
    }
    Ok(Integration { states, stats })
}

/// Adaptive Dormand–Prince solve of one consolidation case.
///
/// `cfg.method` is ignored; tolerances and step bounds are taken from `cfg`.
pub fn rk45_solve(case: &ConsolidationCase, nz: usize, t_eval: &[f64], cfg: &IntegratorConfig) -> Result<SolutionField> {
    let cfg = IntegratorConfig {
        method: Method::Rk45,
        ..*cfg
    };
    super::solve_case(case, nz, t_eval, &cfg)
}
