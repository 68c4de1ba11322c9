//! CSV and JSON artifacts. Floats are written with 17 significant digits so
//! a file reproduces the exact `f64` values; every file is written to a
//! temporary sibling first and renamed into place.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;
use tiltgait_core::analysis::{CellSign, DeltaLGrid};
use tiltgait_core::Trajectory;

pub const TRAJECTORY_HEADER: [&str; 19] = [
    "t",
    "x",
    "y",
    "vx",
    "vy",
    "ex",
    "ey",
    "exdot",
    "eydot",
    "w1sq_raw",
    "w2sq_raw",
    "w1sq",
    "w2sq",
    "p",
    "q",
    "lyap",
    "angle_des",
    "angle_lo",
    "angle_hi",
];

pub const GRID_HEADER: [&str; 5] = ["e", "edot", "admissible", "delta_L", "sign"];

/// `f64` with 17 significant digits; exact under round trip.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(buf)
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

pub fn trajectory_csv(traj: &Trajectory) -> io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    {
        let mut w = writer(&mut buf);
        w.write_record(TRAJECTORY_HEADER)?;
        for s in &traj.samples {
            w.write_record([
                float(s.t),
                float(s.state.x),
                float(s.state.y),
                float(s.state.vx),
                float(s.state.vy),
                float(s.ex.e),
                float(s.ey.e),
                float(s.ex.edot),
                float(s.ey.edot),
                float(s.raw.sq1),
                float(s.raw.sq2),
                float(s.cmd.w1sq),
                float(s.cmd.w2sq),
                flag(s.switch.p),
                flag(s.switch.q),
                float(s.lyapunov),
                s.angle_des.map(float).unwrap_or_default(),
                float(s.cone.lower),
                float(s.cone.upper),
            ])?;
        }
        w.flush()?;
    }
    Ok(buf)
}

fn sign_label(s: CellSign) -> &'static str {
    match s {
        CellSign::Masked => "masked",
        CellSign::Increasing => "increasing",
        CellSign::NonIncreasing => "nonincreasing",
    }
}

pub fn grid_csv(grid: &DeltaLGrid) -> io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    {
        let mut w = writer(&mut buf);
        w.write_record(GRID_HEADER)?;
        for cell in grid.cells() {
            w.write_record([
                float(cell.state.e),
                float(cell.state.edot),
                flag(cell.delta_l.is_some()),
                cell.delta_l.map(float).unwrap_or_default(),
                sign_label(cell.sign()).to_owned(),
            ])?;
        }
        w.flush()?;
    }
    Ok(buf)
}

pub fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("reports contain no non-string map keys");
    out.push(b'\n');
    out
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tiltgait_core::analysis::{delta_l_grid, GridSpec};
    use tiltgait_core::sim::run;
    use tiltgait_core::{LateralLoop, Sign, SimConfig};

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 0.0] {
            let s = float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            assert_eq!(s.trim_start_matches('-').split('e').next().unwrap().len(), 18);
        }
    }

    #[test]
    fn trajectory_layout() {
        let cfg = SimConfig {
            duration: 0.01,
            ..SimConfig::default()
        };
        let bytes = trajectory_csv(&run(&cfg).unwrap()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(!text.contains('\r'));
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], TRAJECTORY_HEADER.join(","));
        assert_eq!(lines.len(), 12);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 19));
    }

    #[test]
    fn grid_layout() {
        let g = delta_l_grid(&LateralLoop::default(), &GridSpec::square(-1.0, 1.0, 3), Sign::Pos);
        let text = String::from_utf8(grid_csv(&g).unwrap()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 10);
        assert!(lines[1].ends_with(",0,,masked"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("a.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
