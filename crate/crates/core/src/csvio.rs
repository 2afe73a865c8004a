//! CSV writers and readers for fields, monitor histories, trajectories, and
//! homogenizer sweeps.
//!
//! Numbers are printed with 17 significant digits so a written file
//! round-trips to the same bits, which is what makes byte-identity a usable
//! determinism check. Every writer produces bytes that depend only on its
//! inputs (no timestamps, locales, or map iteration order).

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::CoreError;
use crate::field::Field;
use crate::grid::Grid;
use crate::homogenize::EffectiveOperators;
use crate::state::{MonitorSeries, Trajectory};

/// Shortest representation that parses back to the identical double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CoreError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// One row per node: coordinates first, then the components in storage
/// order (for rank r the flattened index runs over r nested dimension
/// loops, last index fastest). A `.meta` sidecar records the shape.
pub fn write_field_csv(path: &Path, grid: &Grid, field: &Field) -> Result<(), CoreError> {
    let mut out = String::new();
    out.push_str(if grid.dim == 2 { "x,y" } else { "x" });
    for c in 0..field.ncomp() {
        write!(out, ",c{c}").unwrap();
    }
    out.push('\n');
    for node in 0..grid.num_nodes() {
        let xy = grid.coords(node);
        out.push_str(&fmt_f64(xy[0]));
        if grid.dim == 2 {
            out.push(',');
            out.push_str(&fmt_f64(xy[1]));
        }
        for c in 0..field.ncomp() {
            out.push(',');
            out.push_str(&fmt_f64(field.get(c, node)));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())?;

    let meta = format!(
        "rank = {}\ndim = {}\nnodes = {}\nnx = {}\nny = {}\n",
        field.rank,
        grid.dim,
        grid.num_nodes(),
        grid.n[0],
        grid.n[1],
    );
    write_atomic(&path.with_extension("meta"), meta.as_bytes())
}

/// Read a field written by `write_field_csv` back onto the same grid.
pub fn read_field_csv(path: &Path, grid: &Grid, rank: usize) -> Result<Field, CoreError> {
    let text = fs::read_to_string(path)?;
    let mut field = Field::zeros(grid, rank);
    let ncoord = grid.dim;
    let mut node = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if node >= grid.num_nodes() {
            return Err(CoreError::invalid(format!(
                "{}: more rows than grid nodes",
                path.display()
            )));
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != ncoord + field.ncomp() {
            return Err(CoreError::invalid(format!(
                "{}:{}: expected {} columns, found {}",
                path.display(),
                lineno + 1,
                ncoord + field.ncomp(),
                cells.len()
            )));
        }
        for c in 0..field.ncomp() {
            let v: f64 = cells[ncoord + c].trim().parse().map_err(|_| {
                CoreError::invalid(format!(
                    "{}:{}: column {} is not a number",
                    path.display(),
                    lineno + 1,
                    ncoord + c + 1
                ))
            })?;
            field.set(c, node, v);
        }
        node += 1;
    }
    if node != grid.num_nodes() {
        return Err(CoreError::invalid(format!(
            "{}: {} rows for a grid of {} nodes",
            path.display(),
            node,
            grid.num_nodes()
        )));
    }
    Ok(field)
}

pub fn write_monitor_csv(path: &Path, series: &MonitorSeries) -> Result<(), CoreError> {
    let mut out = String::from("step,time,value\n");
    for &(step, time, value) in &series.samples {
        writeln!(out, "{step},{},{}", fmt_f64(time), fmt_f64(value)).unwrap();
    }
    write_atomic(path, out.as_bytes())
}

/// Displacement snapshots (one file per recorded step) plus one monitor
/// file per active monitor.
pub fn write_trajectory(dir: &Path, grid: &Grid, traj: &Trajectory) -> Result<(), CoreError> {
    for snap in &traj.snaps {
        let name = format!("u_{:08}.csv", snap.step);
        write_field_csv(&dir.join(name), grid, &snap.state.u)?;
    }
    for series in &traj.monitors {
        write_monitor_csv(&dir.join(format!("monitor_{}.csv", series.name)), series)?;
    }
    Ok(())
}

/// One homogenizer sweep row: the Bloch point and its effective operators.
pub struct SweepRow {
    pub omega: f64,
    pub q: f64,
    pub ops: EffectiveOperators,
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), CoreError> {
    let mut out = String::from(
        "omega,q,ceff_re,ceff_im,rhoeff_re,rhoeff_im,seff_re,seff_im,shat_re,shat_im,condition\n",
    );
    for r in rows {
        let o = &r.ops;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.omega),
            fmt_f64(r.q),
            fmt_f64(o.ceff.re),
            fmt_f64(o.ceff.im),
            fmt_f64(o.rhoeff.re),
            fmt_f64(o.rhoeff.im),
            fmt_f64(o.seff.re),
            fmt_f64(o.seff.im),
            fmt_f64(o.shat.re),
            fmt_f64(o.shat.im),
            fmt_f64(o.condition),
        )
        .unwrap();
    }
    write_atomic(path, out.as_bytes())
}

/// Dispersion table: omega, root q, phase velocity, and whether the root
/// converged (gaps are rows with converged = 0).
pub fn write_dispersion_csv(
    path: &Path,
    pts: &[crate::homogenize::DispersionPoint],
) -> Result<(), CoreError> {
    let mut out = String::from("omega,q,phase_velocity,converged\n");
    for p in pts {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(p.omega),
            fmt_f64(p.q),
            fmt_f64(p.phase_velocity),
            u8::from(p.converged),
        )
        .unwrap();
    }
    write_atomic(path, out.as_bytes())
}

/// Run provenance sidecar: the config digest plus tool version, enough to
/// tie an output directory back to the exact inputs.
pub fn write_run_meta(path: &Path, config_hash: &str) -> Result<(), CoreError> {
    let meta = format!(
        "config_sha256 = {config_hash}\ntool_version = {}\n",
        env!("CARGO_PKG_VERSION")
    );
    write_atomic(path, meta.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn float_format_round_trips_to_identical_bits() {
        for &x in &[
            0.1,
            -3.0,
            std::f64::consts::PI,
            1.0 / 3.0,
            7.2e-31,
            -6.02e23,
            f64::MIN_POSITIVE,
        ] {
            let back: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
    }

    #[test]
    fn field_csv_round_trips() {
        let dir = std::env::temp_dir().join("willislab-csvio-test");
        let g = Grid::rect([8, 8], [0.5, 0.25], Boundary::Periodic).unwrap();
        let mut f = Field::zeros(&g, 2);
        for c in 0..f.ncomp() {
            for node in 0..f.nnodes {
                f.set(c, node, ((c + 1) as f64 * 0.37).sin() * (node as f64 + 0.1));
            }
        }
        let path = dir.join("field.csv");
        write_field_csv(&path, &g, &f).unwrap();
        let back = read_field_csv(&path, &g, 2).unwrap();
        assert_eq!(f.as_slice(), back.as_slice());
        let meta = std::fs::read_to_string(path.with_extension("meta")).unwrap();
        assert!(meta.contains("rank = 2"));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn monitor_csv_has_step_time_value_columns() {
        let dir = std::env::temp_dir().join("willislab-csvio-monitor");
        let series = MonitorSeries {
            name: "energy".into(),
            samples: vec![(0, 0.0, 1.5), (10, 0.25, 1.5000001)],
        };
        let path = dir.join("monitor_energy.csv");
        write_monitor_csv(&path, &series).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("step,time,value"));
        assert!(lines.next().unwrap().starts_with("0,"));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn writers_are_byte_deterministic() {
        let dir = std::env::temp_dir().join("willislab-csvio-det");
        let g = Grid::line(8, 0.125, Boundary::Periodic).unwrap();
        let f = Field::from_fn_scalar(&g, |x| (x[0] * 3.1).cos());
        let p1 = dir.join("a.csv");
        let p2 = dir.join("b.csv");
        write_field_csv(&p1, &g, &f).unwrap();
        write_field_csv(&p2, &g, &f).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        std::fs::remove_dir_all(&dir).ok();
    }
}
