//! The flow read as a Yamabe flow of `g_t = u^{4/(n+2)} g_E` for n = 6,
//! λ = 6: residual of the discrete flow equation under joint mesh and step
//! refinement, completeness of both ends along the run, volume-form limits
//! and the Yamabe constant of the round sphere.

use std::sync::Arc;

use fdlab::geometry::{
    completeness_indicator, volume_form_limits, yamabe_constant_sphere, yamabe_flow_residual, TimeRescale,
};
use fdlab::solver::{BcKind, SolverConfig, Stepper, Trajectory};
use fdlab::{solve, FlowParams, RadialField, RadialGrid};

/// Fixed-step backward Euler from `u₀`.
fn fixed_step(p: FlowParams, grid: Arc<RadialGrid>, dt: f64, steps: usize) -> fdlab::Result<Trajectory> {
    let u0 = RadialField::sample(grid.clone(), 0.0, |r| p.initial_profile(r))?;
    let bc = BcKind::Pinned {
        inner: u0.values[0],
        outer: *u0.values.last().unwrap(),
    };
    let stepper = Stepper::new(p, grid.clone(), SolverConfig::default(), bc)?;
    let mut fields = vec![u0];
    for _ in 0..steps {
        let next = stepper.step(fields.last().unwrap(), dt)?.field;
        fields.push(next);
    }
    Ok(Trajectory {
        params: p,
        grid,
        times: fields.iter().map(|f| f.time).collect(),
        fields,
        bc,
    })
}

fn main() -> fdlab::Result<()> {
    let p = FlowParams::critical(6, 6.0, 1.0, 1.0)?;
    let clock = TimeRescale::new(p.n())?;

    println!("flow residual at t = 0.5 (s = {:.4}):", clock.yamabe_time(0.5));
    let mut grid = Arc::new(RadialGrid::build(1e-3, 1e3, 512)?);
    let mut prev: Option<f64> = None;
    for level in 0..4 {
        let dt = 0.05 / f64::from(1u32 << level);
        let steps = (1.0 / dt).round() as usize;
        let tr = fixed_step(p, grid.clone(), dt, steps)?;
        let res = yamabe_flow_residual(&tr)?;
        let at = res.iter().find(|r| (r.time - 0.5).abs() < 1e-9).expect("stamp at t = 0.5");
        let order = prev.map_or(String::new(), |q| format!("  order {:.3}", (q / at.max_rel).log2()));
        println!("  N = {:5}, dt = {dt:.5}: max relative residual {:.4e}{order}", grid.len(), at.max_rel);
        prev = Some(at.max_rel);
        grid = Arc::new(grid.refine());
    }

    let grid = Arc::new(RadialGrid::build(1e-3, 1e3, 2048)?);
    let tr = solve(p, grid, SolverConfig::default())?;
    let mut complete = 0;
    for f in &tr.fields {
        if completeness_indicator(f, &p)?.complete() {
            complete += 1;
        }
    }
    println!("both ends complete at {complete} of {} stored times", tr.len());
    let limit = RadialField::new(tr.grid.clone(), vec![p.c2(); tr.grid.len()], f64::INFINITY)?;
    let c = completeness_indicator(&limit, &p)?;
    println!(
        "limit metric u = c2: inner exponent {:.4}, complete: {}",
        c.inner.exponent, c.inner.complete
    );
    for f in [&tr.fields[0], tr.last()] {
        let v = volume_form_limits(f, &p)?;
        println!(
            "volume limits at t = {}: inner {:.6} (target {:.6}), outer {:.6} (target {:.6})",
            f.time, v.inner, v.inner_target, v.outer, v.outer_target
        );
    }
    for n in 3..=6 {
        println!("Y(S^{n}) = {:.4}", yamabe_constant_sphere(n)?);
    }
    Ok(())
}
