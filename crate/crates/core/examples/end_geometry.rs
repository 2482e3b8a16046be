//! End asymptotics of the initial metric for n = 6, λ = 6 at the critical
//! exponent: cone slope and order at the origin, Euclidean order at
//! infinity, and the scalar curvature against its closed form.

use fdlab::geometry::{
    completeness_indicator, fit_end_asymptotics, initial_scalar_curvature, scalar_curvature, EndId,
};
use fdlab::{FlowParams, RadialField, RadialGrid};

fn main() -> fdlab::Result<()> {
    let p = FlowParams::critical(6, 6.0, 1.0, 1.0)?;
    let grid = std::sync::Arc::new(RadialGrid::build(1e-4, 1e3, 2048)?);
    let u0 = RadialField::sample(grid.clone(), 0.0, |r| p.initial_profile(r))?;

    for end in [EndId::Inner, EndId::Outer] {
        let fit = fit_end_asymptotics(&u0, end, &p)?;
        println!(
            "{}: slope {:.6} (ref {:.6}), order {} (ref {:.4}), shift {:.6}, residual {:.2e} over {} nodes",
            end.label(),
            fit.slope,
            fit.ref_slope,
            fit.order.map_or("-".to_string(), |o| format!("{o:.4}")),
            fit.ref_order,
            fit.shift,
            fit.residual,
            fit.nodes
        );
    }

    let c = completeness_indicator(&u0, &p)?;
    println!(
        "density exponents: inner {:.4} (complete: {}), outer {:.4} (complete: {})",
        c.inner.exponent, c.inner.complete, c.outer.exponent, c.outer.complete
    );

    let scal = scalar_curvature(&u0, &p)?;
    let worst = scal
        .iter()
        .zip(&grid.nodes()[1..])
        .filter(|(_, &r)| r <= 100.0)
        .map(|(s, &r)| ((s - initial_scalar_curvature(&p, r).unwrap()) / s).abs())
        .fold(0.0, f64::max);
    println!(
        "scalar curvature: min {:.3e}, max relative deviation from closed form on r <= 100: {worst:.2e}",
        scal.iter().copied().fold(f64::INFINITY, f64::min)
    );
    Ok(())
}
