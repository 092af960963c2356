//! Plain-text state files: a `#` header echoing the geometry, then one value
//! per line in block order `p, u1, u2, w, v`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{FsiError, Result};
use crate::grid::{Geometry, State};

pub fn format_state(geom: &Geometry, s: &State) -> Result<String> {
    s.check_grid(geom)?;
    let mut out = String::new();
    let _ = writeln!(out, "# fsistab state");
    let _ = writeln!(out, "# L1 = {:.17e}", geom.l1);
    let _ = writeln!(out, "# L2 = {:.17e}", geom.l2);
    let _ = writeln!(out, "# nx = {}", geom.nx);
    let _ = writeln!(out, "# ny = {}", geom.ny);
    for v in s.flatten() {
        let _ = writeln!(out, "{v:.17e}");
    }
    Ok(out)
}

pub fn write_state(path: &Path, geom: &Geometry, s: &State) -> Result<()> {
    std::fs::write(path, format_state(geom, s)?)?;
    Ok(())
}

/// Parses a state and checks that its header matches `geom`.
pub fn parse_state(text: &str, geom: &Geometry) -> Result<State> {
    let (mut l1, mut l2, mut nx, mut ny) = (None, None, None, None);
    let mut values = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                let (k, v) = (k.trim(), v.trim());
                let bad = |msg: &str| FsiError::Parse {
                    line: line_no,
                    key: k.to_string(),
                    msg: msg.to_string(),
                };
                match k {
                    "L1" => l1 = Some(v.parse::<f64>().map_err(|_| bad("not a number"))?),
                    "L2" => l2 = Some(v.parse::<f64>().map_err(|_| bad("not a number"))?),
                    "nx" => nx = Some(v.parse::<usize>().map_err(|_| bad("not an integer"))?),
                    "ny" => ny = Some(v.parse::<usize>().map_err(|_| bad("not an integer"))?),
                    _ => {}
                }
            }
            continue;
        }
        let v: f64 = line.parse().map_err(|_| FsiError::Parse {
            line: line_no,
            key: "value".into(),
            msg: format!("`{line}` is not a number"),
        })?;
        values.push(v);
    }
    match (l1, l2, nx, ny) {
        (Some(l1), Some(l2), Some(nx), Some(ny)) => {
            let file_geom = Geometry::new(l1, l2, nx, ny)?;
            if !file_geom.same_grid(geom) {
                return Err(FsiError::Dimension(format!(
                    "state file grid {nx}x{ny} on [{l1}, {l2}] does not match the run geometry"
                )));
            }
        }
        _ => {
            return Err(FsiError::Config(
                "state file header must give L1, L2, nx and ny".into(),
            ))
        }
    }
    let s = State::unflatten(geom, &values)?;
    if !s.is_finite() {
        return Err(FsiError::Config("state file contains non-finite values".into()));
    }
    Ok(s)
}

pub fn read_state(path: &Path, geom: &Geometry) -> Result<State> {
    parse_state(&std::fs::read_to_string(path)?, geom)
}
