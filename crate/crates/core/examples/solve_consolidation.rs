//! Solves a uniform-load case with BDF, RK45 and the series solution and
//! compares them on a depth/time grid.

use terzaghi_deeponet::consolidation::{analytical_solution, average_degree_of_consolidation, linspace, ConsolidationCase, SERIES_MAX_TERMS, SERIES_TOL};
use terzaghi_deeponet::ode::{solve_case, solve_case_observed, IntegratorConfig, Method};
use terzaghi_deeponet::Result;

pub struct SolveSummary {
    pub bdf_max_err: f64,
    pub rk45_max_err: f64,
    pub bdf_steps: usize,
}

pub fn run(cv: f64, u0: f64, nz: usize, nt: usize) -> Result<SolveSummary> {
    let case = ConsolidationCase::uniform(cv, u0, 100)?;
    let tv = linspace(0.01, 2.0, nt);
    let times: Vec<f64> = tv.iter().map(|&x| case.time_for(x)).collect();
    let (bdf, stats) = solve_case_observed(&case, nz, &times, &IntegratorConfig::default(), &mut |_, _| {})?;
    let rk = solve_case(&case, nz, &times, &IntegratorConfig::with_method(Method::Rk45))?;
    let (mut eb, mut er) = (0.0f64, 0.0f64);
    for (iz, z) in bdf.depths.iter().enumerate() {
        for (it, &t) in tv.iter().enumerate() {
            let exact = analytical_solution(*z, t, u0, SERIES_TOL, SERIES_MAX_TERMS)?;
            eb = eb.max((bdf.at(iz, it) - exact).abs());
            er = er.max((rk.at(iz, it) - exact).abs());
        }
    }
    Ok(SolveSummary {
        bdf_max_err: eb,
        rk45_max_err: er,
        bdf_steps: stats.accepted,
    })
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let s = run(0.5, 15e3, 100, 200)?;
    println!("BDF   max |u - series| = {:.4} Pa ({} steps)", s.bdf_max_err, s.bdf_steps);
    println!("RK45  max |u - series| = {:.4} Pa", s.rk45_max_err);
    for tv in [0.05, 0.2, 0.5, 1.0, 2.0] {
        println!("U({tv:>4}) = {:.4}", average_degree_of_consolidation(tv, SERIES_TOL, SERIES_MAX_TERMS)?);
    }
    Ok(())
}
