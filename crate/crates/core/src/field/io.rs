use std::io::{Read, Write};
use std::path::Path;

use super::{Grid, Grid2D, Grid3D};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"VRGF";
const VERSION: u32 = 1;

/// A grid of either dimensionality, as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyGrid {
    D2(Grid2D),
    D3(Grid3D),
}

impl AnyGrid {
    pub fn into_2d(self) -> Option<Grid2D> {
        match self {
            AnyGrid::D2(g) => Some(g),
            AnyGrid::D3(_) => None,
        }
    }

    pub fn into_3d(self) -> Option<Grid3D> {
        match self {
            AnyGrid::D3(g) => Some(g),
            AnyGrid::D2(_) => None,
        }
    }
}

fn write_header<W: Write, const N: usize>(w: &mut W, g: &Grid<N>) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(N as u32).to_le_bytes())?;
    for d in g.dims() {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for o in g.origin() {
        w.write_all(&o.to_le_bytes())?;
    }
    for h in g.spacing() {
        w.write_all(&h.to_le_bytes())?;
    }
    Ok(())
}

/// Encodes a grid as VRGF bytes: header followed by `per_node` f64 per node.
pub fn encode_vrgf<const N: usize>(g: &Grid<N>, payload: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + N * 20 + payload.len() * 8);
    write_header(&mut out, g).expect("vec write");
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_vrgf<const N: usize>(path: impl AsRef<Path>, g: &Grid<N>) -> Result<()> {
    std::fs::write(path, encode_vrgf(g, g.values()))?;
    Ok(())
}

/// Writes a companion file with the same header and `per_node` values per node.
pub fn write_vrgf_multi<const N: usize>(path: impl AsRef<Path>, g: &Grid<N>, payload: &[f64]) -> Result<()> {
    std::fs::write(path, encode_vrgf(g, payload))?;
    Ok(())
}

fn take<const K: usize>(bytes: &[u8], pos: &mut usize) -> Option<[u8; K]> {
    let slice = bytes.get(*pos..*pos + K)?;
    *pos += K;
    slice.try_into().ok()
}

fn decode_fixed<const N: usize>(bytes: &[u8], pos: &mut usize) -> std::result::Result<Grid<N>, String> {
    let mut dims = [0usize; N];
    for d in dims.iter_mut() {
        *d = u32::from_le_bytes(take(bytes, pos).ok_or("truncated dims")?) as usize;
    }
    let mut origin = [0.0; N];
    for o in origin.iter_mut() {
        *o = f64::from_le_bytes(take(bytes, pos).ok_or("truncated origin")?);
    }
    let mut spacing = [0.0; N];
    for h in spacing.iter_mut() {
        *h = f64::from_le_bytes(take(bytes, pos).ok_or("truncated spacing")?);
    }
    let count: usize = dims.iter().product();
    let rest = &bytes[*pos..];
    if rest.len() != count * 8 {
        return Err(format!("expected {} value bytes, found {}", count * 8, rest.len()));
    }
    let values = rest
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Grid::new(dims, origin, spacing, values).map_err(|e| e.to_string())
}

pub fn decode_vrgf(bytes: &[u8]) -> std::result::Result<AnyGrid, String> {
    let mut pos = 0;
    let magic: [u8; 4] = take(bytes, &mut pos).ok_or("truncated magic")?;
    if &magic != MAGIC {
        return Err("bad magic".into());
    }
    let version = u32::from_le_bytes(take(bytes, &mut pos).ok_or("truncated version")?);
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let ndims = u32::from_le_bytes(take(bytes, &mut pos).ok_or("truncated ndims")?);
    match ndims {
        2 => decode_fixed::<2>(bytes, &mut pos).map(AnyGrid::D2),
        3 => decode_fixed::<3>(bytes, &mut pos).map(AnyGrid::D3),
        n => Err(format!("ndims must be 2 or 3, got {n}")),
    }
}

pub fn read_vrgf(path: impl AsRef<Path>) -> Result<AnyGrid> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_vrgf(&bytes).map_err(|reason| Error::malformed(path, reason))
}

/// Headerless CSV, one row per y, one column per x; unit spacing at the origin.
pub fn read_csv_2d(path: impl AsRef<Path>) -> Result<Grid2D> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::malformed(path, e.to_string()))?;
        rows.push(row);
    }
    let ny = rows.len();
    let nx = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != nx) {
        return Err(Error::malformed(path, "ragged rows"));
    }
    let values = rows.into_iter().flatten().collect();
    Grid::new([nx, ny], [0.0; 2], [1.0; 2], values).map_err(|e| Error::malformed(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let g = Grid2D::new([2, 3], [0.5, -1.0], [0.25, 2.0], (0..6).map(f64::from).collect()).unwrap();
        let bytes = encode_vrgf(&g, g.values());
        assert_eq!(&bytes[..4], b"VRGF");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), 0.5);
        assert_eq!(bytes.len(), 12 + 8 + 16 + 16 + 48);
        assert_eq!(decode_vrgf(&bytes).unwrap(), AnyGrid::D2(g));
    }

    #[test]
    fn rejects_corrupt() {
        assert!(decode_vrgf(b"NOPE").is_err());
        let g = Grid3D::filled([2, 2, 2], [0.0; 3], [1.0; 3], 1.0).unwrap();
        let mut bytes = encode_vrgf(&g, g.values());
        bytes.pop();
        assert!(decode_vrgf(&bytes).is_err());
    }

    #[test]
    fn csv_ingest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        std::fs::write(&p, "1,2,3\n4,5,6\n").unwrap();
        let g = read_csv_2d(&p).unwrap();
        assert_eq!(g.dims(), [3, 2]);
        assert_eq!(g.get([2, 1]), 6.0);
        std::fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_csv_2d(&p).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.vrgf");
        let g = Grid3D::from_fn([3, 2, 4], [0.0; 3], [0.5, 1.0, 2.0], |p| p[0] - p[2]).unwrap();
        write_vrgf(&p, &g).unwrap();
        assert_eq!(read_vrgf(&p).unwrap().into_3d().unwrap(), g);
    }
}
