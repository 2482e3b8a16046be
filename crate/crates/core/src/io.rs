//! CSV artifacts. Floats are written with 17 significant digits so that a
//! value read back is bit-identical to the one written.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use crate::comparison::SubsolutionReport;
use crate::error::{Error, Result};
use crate::geometry::{BlowdownReport, Completeness, EndFit, FlowResidual, GeometryProfile, TimeRescale};
use crate::grid::{RadialField, RadialGrid};
use crate::params::FlowParams;
use crate::solver::verify::ClauseReport;
use crate::solver::{BcKind, Trajectory};

pub const TRAJECTORY_HEADER: [&str; 3] = ["t", "r", "u"];
pub const CLAUSE_HEADER: [&str; 5] = ["t", "clause", "metric", "tolerance", "pass"];
pub const SUBSOLUTION_HEADER: [&str; 6] = ["kind", "r", "t", "quantity", "bound", "pass"];
pub const GEOMETRY_HEADER: [&str; 6] = ["t", "r", "rho", "F", "scal", "vol_density"];
pub const END_FIT_HEADER: [&str; 7] = ["t", "end", "slope", "order", "ref_slope", "ref_order", "residual"];
pub const BLOWDOWN_HEADER: [&str; 5] = ["t", "deviation", "gradient", "curvature", "steady_gap"];
pub const FLOW_RESIDUAL_HEADER: [&str; 4] = ["t", "s", "max_abs", "max_rel"];
pub const COMPLETENESS_HEADER: [&str; 7] = ["t", "end", "exponent", "spread", "complete", "borderline", "length"];

/// Round-trip exact float formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Indices of stored times kept with the given stride; the last time is
/// always kept.
pub fn thinned_indices(len: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut out: Vec<usize> = (0..len).step_by(stride).collect();
    if len > 0 && out.last() != Some(&(len - 1)) {
        out.push(len - 1);
    }
    out
}

pub fn write_trajectory(path: &Path, tr: &Trajectory, stride: usize) -> Result<()> {
    let r = tr.grid.nodes();
    let rows = thinned_indices(tr.len(), stride).into_iter().flat_map(|k| {
        let f = &tr.fields[k];
        r.iter()
            .zip(&f.values)
            .map(move |(&x, &u)| vec![fmt_f64(f.time), fmt_f64(x), fmt_f64(u)])
    });
    write_rows(path, &TRAJECTORY_HEADER, rows)
}

fn parse_f64(s: &str, line: u64, col: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Io(format!("line {line}: column {col} is not a number: {s:?}")))
}

/// Reads a `t,r,u` file. The boundary descriptor is reconstructed from the
/// first stored field: pinned end values on an annulus, the outer value on
/// a ball mesh.
pub fn read_trajectory(path: &Path, params: FlowParams) -> Result<Trajectory> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).ne(TRAJECTORY_HEADER.iter().copied()) {
        return Err(Error::Io(format!(
            "{}: expected header t,r,u, found {}",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut slices: BTreeMap<u64, (f64, Vec<(f64, f64)>)> = BTreeMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k as u64 + 2;
        if rec.len() != 3 {
            return Err(Error::Io(format!("line {line}: expected 3 columns, found {}", rec.len())));
        }
        let t = parse_f64(&rec[0], line, "t")?;
        let r = parse_f64(&rec[1], line, "r")?;
        let u = parse_f64(&rec[2], line, "u")?;
        slices.entry(t.to_bits()).or_insert((t, Vec::new())).1.push((r, u));
    }
    let mut slices: Vec<(f64, Vec<(f64, f64)>)> = slices.into_values().collect();
    slices.sort_by(|a, b| a.0.total_cmp(&b.0));
    let first = slices
        .first()
        .ok_or_else(|| Error::Io(format!("{}: no data rows", path.display())))?;
    let nodes: Vec<f64> = first.1.iter().map(|&(r, _)| r).collect();
    let grid = Arc::new(RadialGrid::from_nodes(nodes.clone())?);

    let mut times = Vec::with_capacity(slices.len());
    let mut fields = Vec::with_capacity(slices.len());
    for (t, rows) in slices {
        if rows.len() != nodes.len() || rows.iter().zip(&nodes).any(|(a, &r)| a.0 != r) {
            return Err(Error::Io(format!("time {t}: radii differ from the first stored time")));
        }
        let values = rows.into_iter().map(|(_, u)| u).collect();
        times.push(t);
        fields.push(RadialField::new(grid.clone(), values, t)?);
    }
    let u0 = &fields[0].values;
    let bc = if grid.has_origin() {
        BcKind::Ball { outer: *u0.last().unwrap() }
    } else {
        BcKind::Pinned {
            inner: u0[0],
            outer: *u0.last().unwrap(),
        }
    };
    Ok(Trajectory {
        params,
        grid,
        times,
        fields,
        bc,
    })
}

pub fn write_clause_report(path: &Path, rep: &ClauseReport) -> Result<()> {
    let rows = rep.rows.iter().map(|r| {
        vec![
            fmt_f64(r.t),
            r.clause.label().to_string(),
            fmt_f64(r.metric),
            fmt_f64(r.tolerance),
            r.pass().to_string(),
        ]
    });
    write_rows(path, &CLAUSE_HEADER, rows)
}

pub fn write_subsolution_report(path: &Path, rep: &SubsolutionReport) -> Result<()> {
    let rows = rep.rows.iter().map(|r| {
        vec![
            r.kind.label().to_string(),
            fmt_f64(r.r),
            fmt_f64(r.t),
            fmt_f64(r.quantity),
            fmt_f64(r.bound),
            r.pass().to_string(),
        ]
    });
    write_rows(path, &SUBSOLUTION_HEADER, rows)
}

pub fn write_geometry(path: &Path, profiles: &[GeometryProfile]) -> Result<()> {
    let rows = profiles.iter().flat_map(|g| {
        (0..g.radii.len()).map(move |i| {
            vec![
                fmt_f64(g.time),
                fmt_f64(g.radii[i]),
                fmt_f64(g.arc_length[i]),
                fmt_f64(g.warping[i]),
                fmt_f64(g.scal_at(i)),
                fmt_f64(g.vol_density[i]),
            ]
        })
    });
    write_rows(path, &GEOMETRY_HEADER, rows)
}

pub fn write_end_fits(path: &Path, fits: &[EndFit]) -> Result<()> {
    let rows = fits.iter().map(|f| {
        vec![
            fmt_f64(f.time),
            f.end.label().to_string(),
            fmt_f64(f.slope),
            fmt_f64(f.order.unwrap_or(f64::NAN)),
            fmt_f64(f.ref_slope),
            fmt_f64(f.ref_order),
            fmt_f64(f.residual),
        ]
    });
    write_rows(path, &END_FIT_HEADER, rows)
}

pub fn write_blowdown(path: &Path, rep: &BlowdownReport) -> Result<()> {
    let rows = rep.rows.iter().map(|r| {
        vec![
            fmt_f64(r.t),
            fmt_f64(r.deviation),
            fmt_f64(r.gradient),
            fmt_f64(r.curvature),
            fmt_f64(r.steady_gap),
        ]
    });
    write_rows(path, &BLOWDOWN_HEADER, rows)
}

/// PDE time `t` and Yamabe time `s` side by side.
pub fn write_flow_residual(path: &Path, res: &[FlowResidual], clock: TimeRescale) -> Result<()> {
    let rows = res.iter().map(|r| {
        vec![
            fmt_f64(r.time),
            fmt_f64(clock.yamabe_time(r.time)),
            fmt_f64(r.max_abs),
            fmt_f64(r.max_rel),
        ]
    });
    write_rows(path, &FLOW_RESIDUAL_HEADER, rows)
}

pub fn write_completeness(path: &Path, rows: &[(f64, Completeness)]) -> Result<()> {
    let rows = rows.iter().flat_map(|(t, c)| {
        [("E2", c.inner), ("E1", c.outer)].into_iter().map(move |(end, e)| {
            vec![
                fmt_f64(*t),
                end.to_string(),
                fmt_f64(e.exponent),
                fmt_f64(e.spread),
                e.complete.to_string(),
                e.borderline.to_string(),
                fmt_f64(e.length),
            ]
        })
    });
    write_rows(path, &COMPLETENESS_HEADER, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, SolverConfig};

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 2.2299669730612045, 1e-300, 6.02e23, 1.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn thinning_keeps_the_ends() {
        assert_eq!(thinned_indices(10, 4), vec![0, 4, 8, 9]);
        assert_eq!(thinned_indices(9, 4), vec![0, 4, 8]);
        assert_eq!(thinned_indices(3, 0), vec![0, 1, 2]);
    }

    #[test]
    fn trajectory_round_trip() {
        let p = FlowParams::new(5, 3.0 / 7.0, 4.0, 1.0, 1.0).unwrap();
        let grid = Arc::new(RadialGrid::build(1e-2, 1e2, 65).unwrap());
        let cfg = SolverConfig {
            t_end: 0.2,
            ..Default::default()
        };
        let tr = solve(p, grid, cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trajectory.csv");
        write_trajectory(&path, &tr, 1).unwrap();
        let back = read_trajectory(&path, p).unwrap();
        assert_eq!(back.times, tr.times);
        assert_eq!(back.grid.nodes(), tr.grid.nodes());
        assert_eq!(back.bc, tr.bc);
        for (a, b) in back.fields.iter().zip(&tr.fields) {
            assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "time,radius,value\n0,1,1\n").unwrap();
        let p = FlowParams::new(5, 3.0 / 7.0, 4.0, 1.0, 1.0).unwrap();
        assert!(matches!(read_trajectory(&path, p), Err(Error::Io(_))));
    }
}
