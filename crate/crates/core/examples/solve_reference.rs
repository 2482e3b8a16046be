//! Reference run: n = 5, m = 3/7, λ = 4, c1 = c2 = 1 on [1e-3, 1e3] with
//! 2048 nodes up to t = 10, followed by the per-clause summary.

use std::time::Instant;

use fdlab::solver::verify::{verify_theorem_clauses, Clause, ClauseTolerances};
use fdlab::{solve, FlowParams, RadialGrid, SolverConfig};

fn main() -> fdlab::Result<()> {
    let p = FlowParams::new(5, 3.0 / 7.0, 4.0, 1.0, 1.0)?;
    let grid = RadialGrid::build(1e-3, 1e3, 2048)?.into();
    let started = Instant::now();
    let tr = solve(p, grid, SolverConfig::default())?;
    println!(
        "{} stored times, t_end = {}, {:.2?}",
        tr.len(),
        tr.times.last().unwrap(),
        started.elapsed()
    );

    let rep = verify_theorem_clauses(&tr, &ClauseTolerances::default());
    for clause in Clause::PROPERTIES {
        let worst = rep.worst(clause).unwrap_or(f64::NAN);
        let verdict = if rep.clause_passes(clause) { "ok" } else { "FAIL" };
        println!("clause {clause:>3}: worst {worst:.3e}  {verdict}");
    }

    let probe = [1e-2, 1e-1, 1.0, 10.0, 100.0];
    let last = tr.last();
    for r in probe {
        let i = tr.grid.nodes().partition_point(|&x| x < r);
        println!("u({:.3e}, {}) = {:.6e}", tr.grid.nodes()[i], last.time, last.values[i]);
    }
    Ok(())
}
