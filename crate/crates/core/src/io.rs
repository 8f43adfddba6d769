//! CSV, PGM and JSON artifacts.
//!
//! CSV files carry a header row, LF line endings, and floats in Rust's
//! shortest round-trip notation (at most 17 significant digits), so reading a
//! file back reproduces every value exactly; negative zero is written as `0`.
//! PGM grids are binary `P5` with 16-bit big-endian samples, frequency row
//! `k = 0` first; the clip level that maps to 65535 is stored in a JSON
//! sidecar next to the image.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::correlations::CorrelationTable;
use crate::diffraction::PeriodogramGrid;
use crate::error::{Error, Result};
use crate::lattice::{Alphabet, LatticeVector, UnitWeight, WeightWindow};

pub const WINDOW_HEADER: &str = "a,b,re,im";
pub const TABLE_HEADER: &str = "za,zb,re,im,pairs";
pub const PGM_MAXVAL: u16 = u16::MAX;

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Shortest round-trip decimal, with `-0` folded into `0`.
fn num(x: f64) -> String {
    format!("{}", x + 0.0)
}

fn finish(mut out: BufWriter<fs::File>, path: &Path) -> Result<()> {
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn window_csv(window: &WeightWindow) -> String {
    let mut s = String::with_capacity(16 * window.len() + 16);
    s.push_str(WINDOW_HEADER);
    s.push('\n');
    let o = window.origin();
    for b in 0..window.height() {
        for a in 0..window.width() {
            let w = window.at(a, b);
            s.push_str(&format!(
                "{},{},{},{}\n",
                o.a + a as i64,
                o.b + b as i64,
                num(w.re()),
                num(w.im())
            ));
        }
    }
    s
}

pub fn table_csv(table: &CorrelationTable) -> String {
    let mut s = String::from(TABLE_HEADER);
    s.push('\n');
    for e in &table.entries {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            e.z.a,
            e.z.b,
            num(e.value.re),
            num(e.value.im),
            e.pairs
        ));
    }
    s
}

pub fn write_window_csv(window: &WeightWindow, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(window_csv(window).as_bytes())
        .map_err(|e| Error::io(path, e))?;
    finish(out, path)
}

pub fn write_table_csv(table: &CorrelationTable, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(table_csv(table).as_bytes())
        .map_err(|e| Error::io(path, e))?;
    finish(out, path)
}

pub fn parse_window_csv(text: &str) -> Result<WeightWindow> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(WINDOW_HEADER) {
        return Err(Error::Parse(format!("window CSV must start with '{WINDOW_HEADER}'")));
    }
    let mut sites = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = || Error::Parse(format!("window CSV line {}: {line:?}", i + 2));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad());
        }
        let a: i64 = f[0].parse().map_err(|_| bad())?;
        let b: i64 = f[1].parse().map_err(|_| bad())?;
        let re: f64 = f[2].parse().map_err(|_| bad())?;
        let im: f64 = f[3].parse().map_err(|_| bad())?;
        sites.push((LatticeVector::new(a, b), UnitWeight::new(re, im)?));
    }
    let Some(&(first, _)) = sites.first() else {
        return Err(Error::Parse("window CSV has no sites".into()));
    };
    let (mut lo, mut hi) = (first, first);
    for (z, _) in &sites {
        lo = LatticeVector::new(lo.a.min(z.a), lo.b.min(z.b));
        hi = LatticeVector::new(hi.a.max(z.a), hi.b.max(z.b));
    }
    let (width, height) = ((hi.a - lo.a + 1) as usize, (hi.b - lo.b + 1) as usize);
    if sites.len() != width * height {
        return Err(Error::Parse(format!(
            "{} sites do not fill the {width}x{height} bounding rectangle",
            sites.len()
        )));
    }
    let mut data = vec![None; width * height];
    for (z, w) in sites {
        let idx = (z.b - lo.b) as usize * width + (z.a - lo.a) as usize;
        if data[idx].replace(w).is_some() {
            return Err(Error::Parse(format!("site {z} listed twice")));
        }
    }
    let data: Vec<UnitWeight> = data.into_iter().map(|w| w.expect("rectangle filled")).collect();
    let alphabet = if data.iter().all(|w| w.im() == 0.0 && w.re().abs() == 1.0) {
        Alphabet::PlusMinusOne
    } else {
        Alphabet::Circle
    };
    WeightWindow::new(lo, width, height, data, alphabet)
}

pub fn read_window_csv(path: &Path) -> Result<WeightWindow> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_window_csv(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgmSidecar {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Ordinate value mapped to `maxval`; larger ordinates saturate.
    pub clip: f64,
}

pub fn sidecar_path(pgm: &Path) -> PathBuf {
    let mut name = pgm.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes the grid as a 16-bit PGM, mapping `[0, clip]` linearly onto `[0, 65535]`.
pub fn write_grid_pgm(grid: &PeriodogramGrid, path: &Path, clip: f64) -> Result<()> {
    if !(clip > 0.0 && clip.is_finite()) {
        return Err(Error::InvalidArgument(format!("clip level {clip} must be positive")));
    }
    let mut out = create(path)?;
    let mut bytes = format!("P5\n{} {}\n{}\n", grid.width, grid.height, PGM_MAXVAL).into_bytes();
    bytes.reserve(2 * grid.values.len());
    for &v in &grid.values {
        let q = (v.clamp(0.0, clip) / clip * PGM_MAXVAL as f64).round() as u16;
        bytes.extend_from_slice(&q.to_be_bytes());
    }
    out.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    finish(out, path)?;
    write_report_json(
        &PgmSidecar {
            width: grid.width,
            height: grid.height,
            maxval: PGM_MAXVAL,
            clip,
        },
        &sidecar_path(path),
    )
}

pub fn read_grid_pgm(path: &Path) -> Result<PeriodogramGrid> {
    let side_path = sidecar_path(path);
    let side: PgmSidecar = serde_json::from_slice(&fs::read(&side_path).map_err(|e| Error::io(&side_path, e))?)
        .map_err(|e| Error::Parse(format!("{}: {e}", side_path.display())))?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let header = format!("P5\n{} {}\n{}\n", side.width, side.height, side.maxval);
    let body = bytes
        .strip_prefix(header.as_bytes())
        .ok_or_else(|| Error::Parse(format!("{}: unexpected PGM header", path.display())))?;
    if body.len() != 2 * side.width * side.height {
        return Err(Error::Parse(format!("{}: truncated PGM body", path.display())));
    }
    let values = body
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / side.maxval as f64 * side.clip)
        .collect();
    Ok(PeriodogramGrid {
        width: side.width,
        height: side.height,
        values,
    })
}

/// Pretty-printed UTF-8 JSON with a trailing newline; field order follows the type.
pub fn report_json<T: Serialize + ?Sized>(report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_report_json<T: Serialize + ?Sized>(report: &T, path: &Path) -> Result<()> {
    let text = report_json(report)?;
    let mut out = create(path)?;
    out.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    finish(out, path)
}
