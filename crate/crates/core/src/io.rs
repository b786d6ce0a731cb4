//! Binary field files with a JSON sidecar.
//!
//! Layout, little-endian:
//!
//! ```text
//! magic    8 bytes  "INFOCAPF"
//! version  u32
//! dim      u32
//! points   u64 × dim
//! extents  (lo f64, hi f64) × dim
//! boundary u8       0 = periodic, 1 = truncated
//! N        u32
//! complex  u8       0 = real, 1 = complex (re, im interleaved)
//! data     f64, component-major, each component row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{MomentumField, PhysicalConstants};
use crate::grid::{Boundary, GridSpec};
use crate::kinematic::AmplitudeField;

pub const MAGIC: &[u8; 8] = b"INFOCAPF";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Real(Vec<Vec<f64>>),
    Complex(Vec<Vec<Complex64>>),
}

impl FieldData {
    fn channels(&self) -> usize {
        match self {
            FieldData::Real(c) => c.len(),
            FieldData::Complex(c) => c.len(),
        }
    }
}

pub fn write_field<W: Write>(mut w: W, grid: &GridSpec, data: &FieldData) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    w.write_u32::<LittleEndian>(grid.dim() as u32)?;
    for &p in grid.points() {
        w.write_u64::<LittleEndian>(p as u64)?;
    }
    for a in 0..grid.dim() {
        w.write_f64::<LittleEndian>(grid.lo()[a])?;
        w.write_f64::<LittleEndian>(grid.hi()[a])?;
    }
    w.write_u8(match grid.boundary() {
        Boundary::Periodic => 0,
        Boundary::Truncated => 1,
    })?;
    w.write_u32::<LittleEndian>(data.channels() as u32)?;
    match data {
        FieldData::Real(comps) => {
            w.write_u8(0)?;
            for c in comps {
                grid.check_field(c)?;
                for v in c {
                    w.write_f64::<LittleEndian>(*v)?;
                }
            }
        }
        FieldData::Complex(comps) => {
            w.write_u8(1)?;
            for c in comps {
                if c.len() != grid.len() {
                    return Err(Error::DimensionMismatch {
                        expected: grid.len(),
                        found: c.len(),
                    });
                }
                for z in c {
                    w.write_f64::<LittleEndian>(z.re)?;
                    w.write_f64::<LittleEndian>(z.im)?;
                }
            }
        }
    }
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<(GridSpec, FieldData)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a field file (bad magic)".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {version}"
        )));
    }
    let dim = r.read_u32::<LittleEndian>()? as usize;
    if dim == 0 || dim > crate::grid::MAX_DIM {
        return Err(Error::Format(format!("bad dimension {dim}")));
    }
    let points = (0..dim)
        .map(|_| Ok(r.read_u64::<LittleEndian>()? as usize))
        .collect::<Result<Vec<_>>>()?;
    let mut lo = Vec::with_capacity(dim);
    let mut hi = Vec::with_capacity(dim);
    for _ in 0..dim {
        lo.push(r.read_f64::<LittleEndian>()?);
        hi.push(r.read_f64::<LittleEndian>()?);
    }
    let boundary = match r.read_u8()? {
        0 => Boundary::Periodic,
        1 => Boundary::Truncated,
        b => return Err(Error::Format(format!("bad boundary tag {b}"))),
    };
    let grid = GridSpec::new(lo, hi, points, boundary)?;
    let n = r.read_u32::<LittleEndian>()? as usize;
    let len = grid.len();
    let data = match r.read_u8()? {
        0 => FieldData::Real(
            (0..n)
                .map(|_| {
                    let mut c = vec![0.0; len];
                    r.read_f64_into::<LittleEndian>(&mut c)?;
                    Ok(c)
                })
                .collect::<Result<_>>()?,
        ),
        1 => FieldData::Complex(
            (0..n)
                .map(|_| {
                    let mut raw = vec![0.0; 2 * len];
                    r.read_f64_into::<LittleEndian>(&mut raw)?;
                    Ok(raw.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect())
                })
                .collect::<Result<_>>()?,
        ),
        b => return Err(Error::Format(format!("bad value-type tag {b}"))),
    };
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after field data".into()));
    }
    Ok((grid, data))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Amplitude,
    Momentum,
}

/// Metadata written next to every binary field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format_version: u32,
    pub kind: FieldKind,
    pub grid: GridSpec,
    pub channels: usize,
    pub complex: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shifts: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<PhysicalConstants>,
    /// Momentum spacing `2πħ/L_a` per axis; bin `m` holds `spacing · s(m)`
    /// with `s` the signed index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum_spacing: Option<Vec<f64>>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<()> {
    let f = File::create(sidecar_path(path))?;
    serde_json::to_writer_pretty(BufWriter::new(f), sidecar)?;
    Ok(())
}

fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let f = File::open(sidecar_path(path))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

pub fn save_amplitude(path: &Path, f: &AmplitudeField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, f.grid(), &FieldData::Real(f.components().to_vec()))?;
    w.flush()?;
    write_sidecar(
        path,
        &Sidecar {
            format_version: FORMAT_VERSION,
            kind: FieldKind::Amplitude,
            grid: f.grid().clone(),
            channels: f.channel_count(),
            complex: false,
            shifts: f.shifts.clone(),
            constants: None,
            momentum_spacing: None,
        },
    )
}

pub fn load_amplitude(path: &Path) -> Result<AmplitudeField> {
    let (grid, data) = read_field(BufReader::new(File::open(path)?))?;
    let FieldData::Real(comps) = data else {
        return Err(Error::Format("expected a real amplitude field".into()));
    };
    let shifts = match read_sidecar(path) {
        Ok(s) => s.shifts,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e),
    };
    Ok(AmplitudeField::new(grid, comps)?.with_shifts(shifts))
}

pub fn save_momentum(path: &Path, f: &MomentumField) -> Result<()> {
    let comps = (0..f.channel_count())
        .map(|n| f.component(n).to_vec())
        .collect();
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, f.grid(), &FieldData::Complex(comps))?;
    w.flush()?;
    write_sidecar(
        path,
        &Sidecar {
            format_version: FORMAT_VERSION,
            kind: FieldKind::Momentum,
            grid: f.grid().clone(),
            channels: f.channel_count(),
            complex: true,
            shifts: Vec::new(),
            constants: Some(f.constants()),
            momentum_spacing: Some((0..f.grid().dim()).map(|a| f.spacing(a)).collect()),
        },
    )
}

/// Needs the sidecar for the physical constants.
pub fn load_momentum(path: &Path) -> Result<MomentumField> {
    let (grid, data) = read_field(BufReader::new(File::open(path)?))?;
    let FieldData::Complex(comps) = data else {
        return Err(Error::Format("expected a complex momentum field".into()));
    };
    let side = read_sidecar(path)?;
    let constants = side
        .constants
        .ok_or_else(|| Error::Format("momentum sidecar lacks physical constants".into()))?;
    MomentumField::new(grid, constants, comps)
}
