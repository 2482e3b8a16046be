//! Reference problem on three nested levels `(N, dt)`, `(2N-1, dt/2)`,
//! `(4N-3, dt/4)` with fixed steps. At the coarse nodes the coarse-fine
//! gap is compared with the coarse error against the Richardson value
//! `2 u_2 - u_1`.
//!
//! ```text
//! cargo run --release --example grid_convergence -- [N] [dt]
//! ```

use std::sync::Arc;

use fdlab::solver::{BcKind, SolverConfig, Stepper};
use fdlab::{FlowParams, RadialField, RadialGrid};

const STAMPS: [f64; 3] = [1.0, 5.0, 10.0];

/// Fixed-step run; returns the fields at `STAMPS`.
fn run(p: FlowParams, grid: Arc<RadialGrid>, dt: f64) -> fdlab::Result<Vec<RadialField>> {
    let mut u = RadialField::sample(grid.clone(), 0.0, |r| p.initial_profile(r))?;
    let bc = BcKind::Pinned {
        inner: u.values[0],
        outer: *u.values.last().unwrap(),
    };
    let stepper = Stepper::new(p, grid, SolverConfig::default(), bc)?;
    let mut out = Vec::new();
    let mut step = 0usize;
    for t in STAMPS {
        let target = (t / dt).round() as usize;
        while step < target {
            u = stepper.step(&u, dt)?.field;
            step += 1;
        }
        out.push(u.clone());
    }
    Ok(out)
}

fn main() -> fdlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let nodes: usize = args.next().map_or(2048, |s| s.parse().expect("N"));
    let dt: f64 = args.next().map_or(0.05, |s| s.parse().expect("dt"));
    let p = FlowParams::new(5, 3.0 / 7.0, 4.0, 1.0, 1.0)?;

    let g0 = Arc::new(RadialGrid::build(1e-3, 1e3, nodes)?);
    let g1 = Arc::new(g0.refine());
    let g2 = Arc::new(g1.refine());
    let l0 = run(p, g0.clone(), dt)?;
    let l1 = run(p, g1, dt / 2.0)?;
    let l2 = run(p, g2, dt / 4.0)?;

    println!("N = {nodes}, dt = {dt}");
    for (k, t) in STAMPS.iter().enumerate() {
        let (mut gap, mut err) = (0.0f64, 0.0f64);
        for i in 0..g0.len() {
            let (a, b, c) = (l0[k].values[i], l1[k].values[2 * i], l2[k].values[4 * i]);
            let extrapolated = 2.0 * c - b;
            gap = gap.max((a - b).abs() / b);
            err = err.max((a - extrapolated).abs() / extrapolated);
        }
        println!(
            "t = {t:>4}: coarse-fine gap {gap:.3e}, coarse error {err:.3e}, ratio {:.3}",
            gap / err
        );
    }
    Ok(())
}
