//! Long-time approach to `c2` on the window `[0.5, 2]`.
//!
//! The truncated problem settles to the harmonic steady state
//! `w^m = α + β r^{2-n}` fixed by the two pinned ends, whose distance from
//! `c2` on the window shrinks like `r_min^{n-2-mλ}`. Two inner radii are
//! run to a late time and the observed exponent is printed next to the
//! prediction.
//!
//! ```text
//! cargo run --release --example blowdown -- [t_end]
//! ```

use std::sync::Arc;

use fdlab::geometry::{blowdown_diagnostics, BlowdownReport};
use fdlab::{solve, FlowParams, RadialGrid, SolverConfig};

const WINDOW: (f64, f64) = (0.5, 2.0);

fn run(p: FlowParams, r_min: f64, t_end: f64) -> fdlab::Result<(BlowdownReport, f64, f64)> {
    let grid = Arc::new(RadialGrid::build(r_min, 1e3, 2048)?);
    let cfg = SolverConfig {
        t_end,
        ..Default::default()
    };
    let tr = solve(p, grid.clone(), cfg)?;
    let rep = blowdown_diagnostics(&tr, WINDOW.0, WINDOW.1)?;
    let last = tr.last();
    let numeric = grid
        .window(WINDOW.0, WINDOW.1)
        .iter()
        .map(|&i| last.values[i] - p.c2())
        .fold(f64::NEG_INFINITY, f64::max);
    let oracle = rep.steady_excess(&grid, p.c2());
    Ok((rep, numeric, oracle))
}

fn main() -> fdlab::Result<()> {
    let t_end: f64 = std::env::args().nth(1).map_or(Ok(1000.0), |s| s.parse()).expect("t_end");
    let p = FlowParams::new(5, 3.0 / 7.0, 4.0, 1.0, 1.0)?;
    let predicted = p.dim() - 2.0 - p.m() * p.lambda();

    let (coarse, num0, ora0) = run(p, 1e-3, t_end)?;
    let (_, num1, ora1) = run(p, 5e-4, t_end)?;

    let last = coarse.rows.last().unwrap();
    println!("window [{}, {}], t_end = {t_end}", WINDOW.0, WINDOW.1);
    println!("  max |u - c2| increase between stored times: {:.2e}", coarse.max_increase(|r| r.deviation));
    println!("  max |u - c2| at t_end:                      {:.4e}", last.deviation);
    println!("  max |u - w| / w at t_end:                   {:.4e}", last.steady_gap);
    for (label, a, b) in [("numerical", num0, num1), ("oracle", ora0, ora1)] {
        println!(
            "  {label:>9} excess over c2: {a:.4e} -> {b:.4e}, exponent {:.4} (predicted {predicted:.4})",
            (a / b).log2()
        );
    }
    Ok(())
}
