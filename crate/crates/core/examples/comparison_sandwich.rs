//! The reference solution between its comparison functions: the datum
//! above and the three-piece subsolution below. Prints the automatically
//! chosen constants, the worst sandwich margins and the worst residual or
//! interface check of each kind over 64 sample times.

use std::sync::Arc;

use fdlab::comparison::{
    pick_admissible_config, sample_times, subsolution, verify_sandwich, verify_subsolution, CheckKind,
};
use fdlab::solver::verify::Clause;
use fdlab::{solve, FlowParams, RadialGrid, SolverConfig};

fn main() -> fdlab::Result<()> {
    let p = FlowParams::new(5, 3.0 / 7.0, 4.0, 1.0, 1.0)?;
    let grid = Arc::new(RadialGrid::build(1e-3, 1e3, 2048)?);
    let tr = solve(p, grid.clone(), SolverConfig::default())?;

    let cfg = pick_admissible_config(&p, 0.1)?;
    println!(
        "nu = {:.6}, mu = {:.6}, delta = {:.6}, A = {:.6}",
        cfg.nu, cfg.mu, cfg.delta, cfg.amplitude
    );

    let sandwich = verify_sandwich(&tr, &cfg, 1e-6)?;
    for clause in [Clause::SandwichLower, Clause::SandwichUpper] {
        println!("{clause}: worst {:.3e}", sandwich.worst(clause).unwrap_or(f64::NAN));
    }

    let checks = verify_subsolution(&p, &cfg, &grid, &sample_times(10.0, 64))?;
    for kind in [
        CheckKind::ResidualIn,
        CheckKind::ResidualMid,
        CheckKind::ResidualOut,
        CheckKind::MatchRho,
        CheckKind::MatchSigma,
        CheckKind::InitOrder,
    ] {
        match checks.worst(kind) {
            Some(w) => println!(
                "{:>12}: {} checks, worst {:.3e} <= {:.1e} at r = {:.3e}, t = {:.3}",
                kind.label(),
                checks.count(kind),
                w.quantity,
                w.bound,
                w.r,
                w.t
            ),
            None => println!("{:>12}: none", kind.label()),
        }
    }

    let last = tr.last();
    println!("t = {}:", last.time);
    for r in [1e-2, 1e-1, 1.0, 10.0] {
        let i = grid.nodes().partition_point(|&x| x < r);
        let x = grid.nodes()[i];
        println!(
            "  r = {x:.3e}: {:.6e} <= {:.6e} <= {:.6e}",
            subsolution(&p, &cfg, x, last.time)?,
            last.values[i],
            p.initial_profile(x)?
        );
    }
    Ok(())
}
