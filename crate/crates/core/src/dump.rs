//! Binary field dumps.
//!
//! Layout (little-endian): `b"VXMP"`, u32 version, u32 dimension, u32 cell
//! count per axis, f64 dx, f64 origin per axis, u32 field kind, then the
//! row-major f64 payload. Map and Jacobian payloads list every vorticity
//! sample slot by slot, with `d` coordinates or a row-major `d x d` matrix
//! per sample.

use std::io::{Read, Write};

use crate::flowmap::{JacobianField, MapField};
use crate::grid::{Array3, FaceField, GridDesc, VortField};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"VXMP";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Face(usize),
    Vort(usize),
    Cell,
    Map,
    Jacobian,
}

impl FieldKind {
    pub fn tag(self) -> u32 {
        match self {
            FieldKind::Face(a) => a as u32,
            FieldKind::Vort(c) => 3 + c as u32,
            FieldKind::Cell => 6,
            FieldKind::Map => 7,
            FieldKind::Jacobian => 8,
        }
    }

    pub fn from_tag(tag: u32) -> Result<Self> {
        Ok(match tag {
            0..=2 => FieldKind::Face(tag as usize),
            3..=5 => FieldKind::Vort(tag as usize - 3),
            6 => FieldKind::Cell,
            7 => FieldKind::Map,
            8 => FieldKind::Jacobian,
            _ => return Err(Error::Format(format!("unknown field kind {tag}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dump {
    pub grid: GridDesc,
    pub kind: FieldKind,
    pub data: Vec<f64>,
}

impl Dump {
    pub fn face(g: &GridDesc, u: &FaceField, axis: usize) -> Self {
        Self { grid: g.clone(), kind: FieldKind::Face(axis), data: u.comp(axis).data().to_vec() }
    }

    /// In 2D the single out-of-plane component is written with the x tag.
    pub fn vort(g: &GridDesc, w: &VortField, slot: usize) -> Self {
        let tag = if g.dim() == 2 { 0 } else { w.axis(slot) };
        Self { grid: g.clone(), kind: FieldKind::Vort(tag), data: w.comp(slot).data().to_vec() }
    }

    pub fn cell(g: &GridDesc, c: &Array3) -> Self {
        Self { grid: g.clone(), kind: FieldKind::Cell, data: c.data().to_vec() }
    }

    pub fn map(g: &GridDesc, m: &MapField) -> Self {
        let d = g.dim();
        let data = m.points().iter().flat_map(|p| p.iter().take(d).copied().collect::<Vec<_>>()).collect();
        Self { grid: g.clone(), kind: FieldKind::Map, data }
    }

    pub fn jacobian(g: &GridDesc, j: &JacobianField) -> Self {
        let d = g.dim();
        let mut data = Vec::with_capacity(j.matrices().len() * d * d);
        for m in j.matrices() {
            for r in 0..d {
                for c in 0..d {
                    data.push(m[(r, c)]);
                }
            }
        }
        Self { grid: g.clone(), kind: FieldKind::Jacobian, data }
    }

    /// Payload length implied by the header.
    pub fn expected_len(g: &GridDesc, kind: FieldKind) -> Result<usize> {
        let d = g.dim();
        let count = |s: [usize; 3]| s[0] * s[1] * s[2];
        let vort_samples: usize = g.vort_axes().iter().map(|&c| count(g.vort_shape(c))).sum();
        Ok(match kind {
            FieldKind::Face(a) if a < d => count(g.face_shape(a)),
            FieldKind::Vort(c) if d == 2 && c == 0 => count(g.vort_shape(2)),
            FieldKind::Vort(c) if d == 3 => count(g.vort_shape(c)),
            FieldKind::Cell => g.cell_count(),
            FieldKind::Map => vort_samples * d,
            FieldKind::Jacobian => vort_samples * d * d,
            _ => return Err(Error::Format(format!("field kind {kind:?} does not exist on a {d}D grid"))),
        })
    }

    /// Array view for the grid-shaped kinds.
    pub fn to_array(&self) -> Result<Array3> {
        let g = &self.grid;
        let shape = match self.kind {
            FieldKind::Face(a) => g.face_shape(a),
            FieldKind::Vort(c) => g.vort_shape(if g.dim() == 2 { 2 } else { c }),
            FieldKind::Cell => g.dims(),
            _ => return Err(Error::Format("map and jacobian dumps are not grid arrays".into())),
        };
        Array3::from_vec(shape, self.data.clone())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        let d = g.dim();
        if self.data.len() != Self::expected_len(g, self.kind)? {
            return Err(Error::Format(format!(
                "payload of {} values does not match the header",
                self.data.len()
            )));
        }
        let mut buf = Vec::with_capacity(64 + 8 * self.data.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(d as u32).to_le_bytes());
        for &n in &g.dims()[..d] {
            buf.extend_from_slice(&(n as u32).to_le_bytes());
        }
        buf.extend_from_slice(&g.dx().to_le_bytes());
        for &o in &g.origin()[..d] {
            buf.extend_from_slice(&o.to_le_bytes());
        }
        buf.extend_from_slice(&self.kind.tag().to_le_bytes());
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let d = read_u32(&mut r)? as usize;
        if d != 2 && d != 3 {
            return Err(Error::Format(format!("bad dimension {d}")));
        }
        let mut dims = Vec::with_capacity(d);
        for _ in 0..d {
            dims.push(read_u32(&mut r)? as usize);
        }
        let dx = read_f64(&mut r)?;
        let mut origin = Vec::with_capacity(d);
        for _ in 0..d {
            origin.push(read_f64(&mut r)?);
        }
        let kind = FieldKind::from_tag(read_u32(&mut r)?)?;
        let grid = GridDesc::new(&dims, dx, &origin).map_err(|e| Error::Format(e.to_string()))?;
        let n = Self::expected_len(&grid, kind)?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != 8 * n {
            return Err(Error::Format(format!("expected {} payload bytes, found {}", 8 * n, bytes.len())));
        }
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self { grid, kind, data })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        // `write_to` assembles the whole file in memory first.
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
