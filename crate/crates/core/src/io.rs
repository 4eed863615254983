//! File formats: CSV for circle, sphere and ball samples, a little-endian
//! binary format for Cartesian grids, and JSON helpers for reports.
//!
//! CSV files may start with `# key=value` comment lines carrying grid
//! metadata, followed by a column header row and one row per node.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ball::BallFn;
use crate::circle::CircleFn;
use crate::error::{Error, Result};
use crate::field::CartesianGrid;
use crate::report::SCHEMA_VERSION;
use crate::sphere::{LatLonGrid, SphereFn};

/// Magic bytes at the start of a binary grid file.
pub const GRID_MAGIC: &[u8; 8] = b"PSGRID01";

struct CsvTable {
    meta: BTreeMap<String, String>,
    /// `(line number, fields)` for each data row.
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table(path: &Path, columns: &[&str]) -> Result<CsvTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut meta = BTreeMap::new();
    for line in text.lines().map(str::trim).take_while(|l| l.is_empty() || l.starts_with('#')) {
        if let Some((k, v)) = line.trim_start_matches('#').split_once('=') {
            meta.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(path, 0, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != columns {
        return Err(Error::parse(
            path,
            0,
            format!("expected columns {}, found {}", columns.join(","), header.join(",")),
        ));
    }
    let mut rows = vec![];
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(CsvTable { meta, rows })
}

fn meta_value<T: std::str::FromStr>(path: &Path, t: &CsvTable, key: &str) -> Result<T> {
    t.meta
        .get(key)
        .ok_or_else(|| Error::parse(path, 0, format!("missing header field {key}")))?
        .parse()
        .map_err(|_| Error::parse(path, 0, format!("invalid header field {key}")))
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, s: &str, name: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(path, line, format!("invalid {name} '{s}'")))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_writer(meta: &[(&str, String)], columns: &[&str]) -> csv::Writer<Vec<u8>> {
    let mut buf = Vec::new();
    for (k, v) in meta {
        writeln!(buf, "# {k}={v}").expect("writing to memory");
    }
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(columns).expect("writing to memory");
    w
}

fn finish(path: &Path, w: csv::Writer<Vec<u8>>) -> Result<()> {
    let buf = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Reads `theta,value` rows; the angles must be `2πk/n` in order.
pub fn read_circle_csv(path: &Path) -> Result<CircleFn> {
    let t = read_table(path, &["theta", "value"])?;
    let n = t.rows.len();
    if n == 0 {
        return Err(Error::parse(path, 0, "no data rows"));
    }
    let step = TAU / n as f64;
    let mut values = Vec::with_capacity(n);
    for (k, (line, row)) in t.rows.iter().enumerate() {
        let theta: f64 = field(path, *line, &row[0], "theta")?;
        if (theta - k as f64 * step).abs() > 1e-9 * step.max(theta.abs()) {
            return Err(Error::parse(
                path,
                *line,
                format!("theta {theta} breaks the uniform spacing 2π/{n}"),
            ));
        }
        values.push(field(path, *line, &row[1], "value")?);
    }
    CircleFn::new(values)
}

pub fn write_circle_csv(path: &Path, u: &CircleFn) -> Result<()> {
    let n = u.values().len();
    let mut w = csv_writer(&[("n", n.to_string())], &["theta", "value"]);
    for (k, v) in u.values().iter().enumerate() {
        let theta = TAU * k as f64 / n as f64;
        w.write_record([theta.to_string(), v.to_string()]).expect("writing to memory");
    }
    finish(path, w)
}

fn grid_from_meta(path: &Path, t: &CsvTable) -> Result<LatLonGrid> {
    LatLonGrid::new(meta_value(path, t, "n_lat")?, meta_value(path, t, "n_lon")?)
}

fn fill(
    path: &Path,
    slot: &mut [Option<f64>],
    idx: Option<usize>,
    line: usize,
    value: f64,
) -> Result<()> {
    let i = idx
        .filter(|&i| i < slot.len())
        .ok_or_else(|| Error::parse(path, line, "index out of range"))?;
    if slot[i].replace(value).is_some() {
        return Err(Error::parse(path, line, "duplicate node"));
    }
    Ok(())
}

fn complete(path: &Path, slot: Vec<Option<f64>>) -> Result<Vec<f64>> {
    slot.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::parse(path, 0, format!("node {i} missing"))))
        .collect()
}

fn node_index(g: &LatLonGrid, lat: usize, lon: usize) -> Option<usize> {
    if lat >= g.n_lat || lon >= g.n_lon {
        return None;
    }
    // Poles store a single node; every longitude index maps to it.
    Some(g.index(lat, lon))
}

/// Reads `lat_index,lon_index,value` rows. Pole rows use `lon_index = 0`.
pub fn read_sphere_csv(path: &Path) -> Result<SphereFn> {
    let t = read_table(path, &["lat_index", "lon_index", "value"])?;
    let g = grid_from_meta(path, &t)?;
    let mut slot = vec![None; g.len()];
    for (line, row) in &t.rows {
        let lat: usize = field(path, *line, &row[0], "lat_index")?;
        let lon: usize = field(path, *line, &row[1], "lon_index")?;
        let v: f64 = field(path, *line, &row[2], "value")?;
        fill(path, &mut slot, node_index(&g, lat, lon), *line, v)?;
    }
    SphereFn::new(g, complete(path, slot)?)
}

fn node_rows(g: &LatLonGrid) -> Vec<(usize, usize)> {
    (0..g.len()).map(|n| g.lat_lon(n)).collect()
}

pub fn write_sphere_csv(path: &Path, u: &SphereFn) -> Result<()> {
    let g = u.grid();
    let mut w = csv_writer(
        &[("n_lat", g.n_lat.to_string()), ("n_lon", g.n_lon.to_string())],
        &["lat_index", "lon_index", "value"],
    );
    for ((i, j), v) in node_rows(g).into_iter().zip(u.values()) {
        w.write_record([i.to_string(), j.to_string(), v.to_string()])
            .expect("writing to memory");
    }
    finish(path, w)
}

/// Reads `shell_index,lat_index,lon_index,value` rows; shell 0 is the center
/// (one row with zero angular indices) and shells `1..=m` sit at `jR/m`.
pub fn read_ball_csv(path: &Path) -> Result<BallFn> {
    let t = read_table(path, &["shell_index", "lat_index", "lon_index", "value"])?;
    let g = grid_from_meta(path, &t)?;
    let radius: f64 = meta_value(path, &t, "R")?;
    let m: usize = meta_value(path, &t, "m")?;
    let mut center = None;
    let mut shells = vec![vec![None; g.len()]; m];
    for (line, row) in &t.rows {
        let s: usize = field(path, *line, &row[0], "shell_index")?;
        let lat: usize = field(path, *line, &row[1], "lat_index")?;
        let lon: usize = field(path, *line, &row[2], "lon_index")?;
        let v: f64 = field(path, *line, &row[3], "value")?;
        if s == 0 {
            if center.replace(v).is_some() {
                return Err(Error::parse(path, *line, "duplicate center row"));
            }
        } else if s <= m {
            fill(path, &mut shells[s - 1], node_index(&g, lat, lon), *line, v)?;
        } else {
            return Err(Error::parse(path, *line, format!("shell index {s} exceeds m = {m}")));
        }
    }
    let center = center.ok_or_else(|| Error::parse(path, 0, "missing center row (shell_index 0)"))?;
    let shells = shells
        .into_iter()
        .map(|s| complete(path, s))
        .collect::<Result<Vec<_>>>()?;
    BallFn::new(radius, g, shells, center)
}

pub fn write_ball_csv(path: &Path, u: &BallFn) -> Result<()> {
    let g = u.grid();
    let mut w = csv_writer(
        &[
            ("R", u.radius().to_string()),
            ("m", u.n_shells().to_string()),
            ("n_lat", g.n_lat.to_string()),
            ("n_lon", g.n_lon.to_string()),
        ],
        &["shell_index", "lat_index", "lon_index", "value"],
    );
    w.write_record(["0", "0", "0", &u.center_value().to_string()])
        .expect("writing to memory");
    let rows = node_rows(g);
    for (s, shell) in u.shells().iter().enumerate() {
        for ((i, j), v) in rows.iter().zip(shell.values()) {
            w.write_record([(s + 1).to_string(), i.to_string(), j.to_string(), v.to_string()])
                .expect("writing to memory");
        }
    }
    finish(path, w)
}

/// Binary grid layout, all little-endian: the 8 magic bytes, `N` as u64
/// (always 3), `N` dims as u64, `N` spacings and `N` origin coordinates as
/// f64, then the values as f64 in row-major order (last axis fastest).
pub fn write_grid(path: &Path, g: &CartesianGrid) -> Result<()> {
    let mut buf = Vec::with_capacity(8 + 8 * (10 + g.values.len()));
    buf.extend_from_slice(GRID_MAGIC);
    buf.extend_from_slice(&3u64.to_le_bytes());
    for d in g.dims {
        buf.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in g.spacing.iter().chain(&g.origin).chain(&g.values) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_grid(path: &Path) -> Result<CartesianGrid> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::parse(path, 0, msg.to_string());
    if bytes.len() < 16 || &bytes[..8] != GRID_MAGIC {
        return Err(bad("not a grid file (bad magic)"));
    }
    let word = |k: usize| -> Result<[u8; 8]> {
        bytes
            .get(8 * k..8 * k + 8)
            .map(|s| s.try_into().expect("8 bytes"))
            .ok_or_else(|| bad("truncated grid file"))
    };
    let dim = u64::from_le_bytes(word(1)?);
    if dim != 3 {
        return Err(bad(&format!("unsupported dimension {dim}; only 3 is supported")));
    }
    let mut dims = [0usize; 3];
    let mut spacing = [0.0; 3];
    let mut origin = [0.0; 3];
    for a in 0..3 {
        dims[a] = usize::try_from(u64::from_le_bytes(word(2 + a)?)).map_err(|_| bad("dimension overflow"))?;
        spacing[a] = f64::from_le_bytes(word(5 + a)?);
        origin[a] = f64::from_le_bytes(word(8 + a)?);
    }
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| bad("dimension overflow"))?;
    let expected = 8 * (11 + count);
    if bytes.len() != expected {
        return Err(bad(&format!(
            "expected {expected} bytes for dims {dims:?}, found {}",
            bytes.len()
        )));
    }
    let values = (0..count)
        .map(|k| f64::from_le_bytes(word(11 + k).expect("length checked")))
        .collect();
    CartesianGrid::new(dims, spacing, origin, values)
}

/// A report wrapped with the schema version and, optionally, a timestamp.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub report: T,
}

impl<T> Envelope<T> {
    pub fn new(kind: &str, report: T, timestamp: Option<String>) -> Self {
        Envelope {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            timestamp,
            report,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(to_json(value)? + "\n"))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
