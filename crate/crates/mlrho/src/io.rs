//! Field snapshots and tabulated weights on disk.
//!
//! Binary payloads are flat little-endian `f64` arrays; each has a text
//! sidecar (`<file>.hdr`) of `key = value` lines.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::spectral_field::{FieldPair, VectorField};
use crate::weights_norms::WeightTable;

pub const COMPONENTS: [&str; 6] = ["Ex", "Ey", "Ez", "Bx", "By", "Bz"];

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

pub fn partial_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Write through `<path>.partial` and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = partial_path(path);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn encode(values: impl Iterator<Item = f64>, cap: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(cap * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::Format(format!(
            "payload of {} bytes is not a whole number of f64",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn parse_header(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("header line {}: expected key = value", no + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn field<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
    map.get(key)
        .ok_or_else(|| Error::Format(format!("header is missing `{key}`")))?
        .parse()
        .map_err(|_| Error::Format(format!("header value for `{key}` does not parse")))
}

fn triple<T: std::str::FromStr + Copy + Default>(map: &BTreeMap<String, String>, key: &str) -> Result<[T; 3]> {
    let raw = map
        .get(key)
        .ok_or_else(|| Error::Format(format!("header is missing `{key}`")))?;
    let parts: Vec<T> = raw
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| Error::Format(format!("bad entry in `{key}`"))))
        .collect::<Result<_>>()?;
    parts
        .try_into()
        .map_err(|_| Error::Format(format!("`{key}` needs three entries")))
}

/// A field pair read back from disk.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub grid: Grid,
    pub t: f64,
    pub fields: FieldPair,
}

pub fn write_snapshot(path: &Path, grid: &Grid, t: f64, fields: &FieldPair) -> Result<()> {
    if fields.len() != grid.len() {
        return Err(Error::Structure("field does not match grid".into()));
    }
    let arrays = fields.e().components().iter().chain(fields.b().components().iter());
    let bytes = encode(arrays.flat_map(|c| c.iter().copied()), 6 * grid.len());
    write_atomic(path, &bytes)?;
    let header = format!(
        "n = {}\nlength = {:?}\nt = {:?}\ncomponents = {}\n",
        grid.n(),
        grid.length(),
        t,
        COMPONENTS.join(" ")
    );
    write_atomic(&sidecar_path(path), header.as_bytes())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let map = parse_header(&fs::read_to_string(sidecar_path(path))?)?;
    let n: usize = field(&map, "n")?;
    let length: f64 = field(&map, "length")?;
    let t: f64 = field(&map, "t")?;
    let comps: String = field(&map, "components")?;
    if comps.split_whitespace().ne(COMPONENTS.iter().copied()) {
        return Err(Error::Format(format!("unsupported component order `{comps}`")));
    }
    let grid = Grid::new(n, length)?;
    let values = decode(&fs::read(path)?)?;
    if values.len() != 6 * grid.len() {
        return Err(Error::Format(format!(
            "snapshot holds {} values, expected {}",
            values.len(),
            6 * grid.len()
        )));
    }
    let mut chunks = values.chunks_exact(grid.len()).map(|c| c.to_vec());
    let mut next = || chunks.next().unwrap();
    let e = VectorField::from_components([next(), next(), next()]);
    let b = VectorField::from_components([next(), next(), next()]);
    Ok(Snapshot {
        grid,
        t,
        fields: FieldPair::new(e, b),
    })
}

/// Tabulated weight with its claimed class constants.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedWeight {
    pub table: WeightTable,
    pub c_w: f64,
    pub p_w: u32,
}

/// Sidecar keys: `dims`, `origin`, `spacing` (three entries each), `c_w`, `p_w`.
pub fn read_weight_table(path: &Path) -> Result<LoadedWeight> {
    let map = parse_header(&fs::read_to_string(sidecar_path(path))?)?;
    let table = WeightTable {
        dims: triple(&map, "dims")?,
        origin: triple(&map, "origin")?,
        spacing: triple(&map, "spacing")?,
        values: decode(&fs::read(path)?)?,
    };
    table.validate()?;
    Ok(LoadedWeight {
        table,
        c_w: field(&map, "c_w")?,
        p_w: field(&map, "p_w")?,
    })
}

pub fn write_weight_table(path: &Path, w: &LoadedWeight) -> Result<()> {
    w.table.validate()?;
    write_atomic(path, &encode(w.table.values.iter().copied(), w.table.values.len()))?;
    let t = &w.table;
    let header = format!(
        "dims = {} {} {}\norigin = {:?} {:?} {:?}\nspacing = {:?} {:?} {:?}\nc_w = {:?}\np_w = {}\n",
        t.dims[0],
        t.dims[1],
        t.dims[2],
        t.origin[0],
        t.origin[1],
        t.origin[2],
        t.spacing[0],
        t.spacing[1],
        t.spacing[2],
        w.c_w,
        w.p_w
    );
    write_atomic(&sidecar_path(path), header.as_bytes())
}
