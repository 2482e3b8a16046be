//! Regularized data `u_{0,ε}` on the ball for ε = 0.1, 0.05, 0.025.
//! Shrinking ε raises the core and lowers the far field, so the family is
//! not ordered, but successive differences at fixed probes shrink by about
//! the ε ratio.

use std::sync::Arc;

use fdlab::params::RegularizationConfig;
use fdlab::solver::{solve_from, BcKind, SolverConfig};
use fdlab::{FlowParams, RadialField, RadialGrid};

const PROBES: [f64; 3] = [1.0, 2.0, 4.0];
const TIMES: [f64; 3] = [1.0, 5.0, 10.0];

/// `u_ε` at every probe radius and time, `[time][probe]`.
fn probe_values(p: FlowParams, grid: &Arc<RadialGrid>, eps: f64) -> fdlab::Result<Vec<Vec<f64>>> {
    let rc = RegularizationConfig::new(eps)?;
    let mut field = RadialField::sample(grid.clone(), 0.0, |r| p.regularized_initial(rc, r))?;
    let bc = BcKind::Ball {
        outer: *field.values.last().unwrap(),
    };
    let idx: Vec<usize> = PROBES.iter().map(|&r| grid.nodes().partition_point(|&x| x < r * (1.0 - 1e-12))).collect();
    let mut out = Vec::new();
    for t in TIMES {
        let cfg = SolverConfig {
            t_end: t,
            ..Default::default()
        };
        field = solve_from(p, field, bc, cfg)?.last().clone();
        out.push(idx.iter().map(|&i| field.values[i]).collect());
    }
    Ok(out)
}

fn main() -> fdlab::Result<()> {
    let p = FlowParams::new(5, 3.0 / 7.0, 4.0, 1.0, 1.0)?;
    let grid = Arc::new(RadialGrid::ball(1e-3, 1e3, 2048)?);
    let runs = [0.1, 0.05, 0.025]
        .into_iter()
        .map(|e| probe_values(p, &grid, e))
        .collect::<fdlab::Result<Vec<_>>>()?;

    println!("{:>5} {:>4} {:>14} {:>14} {:>14} {:>7}", "t", "r", "u_0.1", "u_0.05", "u_0.025", "ratio");
    for (k, t) in TIMES.iter().enumerate() {
        for (j, r) in PROBES.iter().enumerate() {
            let (a, b, c) = (runs[0][k][j], runs[1][k][j], runs[2][k][j]);
            println!("{t:>5} {r:>4} {a:>14.8} {b:>14.8} {c:>14.8} {:>7.4}", ((a - b) / (b - c)).abs());
        }
    }
    Ok(())
}
