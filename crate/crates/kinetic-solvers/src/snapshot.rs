//! Field snapshots: flat little-endian f64 arrays with a plain-text sidecar
//! describing the grid shape and time; moment series go to CSV.

use crate::grid::KineticField;
use std::io::Write;
use std::path::Path;

pub fn write_snapshot<const D: usize>(
    f: &KineticField<D>,
    time: f64,
    path_base: &Path,
) -> std::io::Result<()> {
    let bin = path_base.with_extension("f64");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&bin)?);
    for v in &f.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    let sidecar = path_base.with_extension("meta");
    let mut s = String::new();
    s.push_str("kinetic-snapshot v1\n");
    s.push_str(&format!("d {D}\n"));
    s.push_str(&format!("x_cells {}\n", f.x_grid.n));
    s.push_str(&format!("v_cells {}\n", f.v_grid.n));
    s.push_str(&format!("v_max {:?}\n", f.v_grid.v_max));
    s.push_str(&format!("alpha {:?}\n", f.alpha));
    s.push_str(&format!("time {time:?}\n"));
    s.push_str("layout velocity-major\n");
    std::fs::write(sidecar, s)
}

pub fn read_snapshot<const D: usize>(path_base: &Path) -> std::io::Result<KineticField<D>> {
    let meta = std::fs::read_to_string(path_base.with_extension("meta"))?;
    let mut x_cells = 0usize;
    let mut v_cells = 0usize;
    let mut v_max = 0.0f64;
    let mut alpha = 1.0f64;
    for line in meta.lines() {
        let mut it = line.split_ascii_whitespace();
        match it.next() {
            Some("x_cells") => x_cells = it.next().unwrap_or("0").parse().unwrap_or(0),
            Some("v_cells") => v_cells = it.next().unwrap_or("0").parse().unwrap_or(0),
            Some("v_max") => v_max = it.next().unwrap_or("0").parse().unwrap_or(0.0),
            Some("alpha") => alpha = it.next().unwrap_or("1").parse().unwrap_or(1.0),
            _ => {}
        }
    }
    let bytes = std::fs::read(path_base.with_extension("f64"))?;
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut f = KineticField::<D>::zeros(
        crate::grid::SpatialGrid::new(x_cells),
        crate::grid::VelocityGrid::new(v_cells, v_max),
        alpha,
    );
    f.values = values;
    Ok(f)
}
