//! NIfTI-1 single-file reader and canonical float32 writer.
//!
//! Only little-endian files with datatypes uint8, int16, int32, float32 and
//! float64 are accepted. Orientation fields are decoded and kept on the
//! volume, but the geometry itself is treated as axis-aligned.

use std::fs;
use std::path::Path;

use crate::volume::{Geometry, MaskROI, Orientation, VolumeError, VolumeGrid};
use thiserror::Error;

pub const HEADER_SIZE: usize = 348;
pub const VOX_OFFSET: usize = 352;

#[derive(Debug, Error)]
pub enum NiftiError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("not a NIfTI-1 file: {0}")]
    BadMagic(String),
    #[error("big-endian NIfTI files are not supported")]
    BigEndian,
    #[error("gzip-compressed input is not supported; decompress to .nii first")]
    Compressed,
    #[error("unsupported datatype code {0} (supported: 2, 4, 8, 16, 64)")]
    UnsupportedDatatype(i16),
    #[error("unsupported dimensionality: dim = {0:?}")]
    UnsupportedDimensionality([i16; 8]),
    #[error("payload truncated: need {needed} bytes from offset {offset}, file has {available}")]
    TruncatedData {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("voxel spacing must be positive, got {0:?}")]
    NonPositiveSpacing([f64; 3]),
    #[error(transparent)]
    Volume(#[from] VolumeError),
}

mod offsets {
    pub const SIZEOF_HDR: usize = 0;
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const BITPIX: usize = 72;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const XYZT_UNITS: usize = 123;
    pub const DESCRIP: usize = 148;
    pub const QFORM_CODE: usize = 252;
    pub const SFORM_CODE: usize = 254;
    pub const QUATERN_B: usize = 256;
    pub const QOFFSET_X: usize = 268;
    pub const SROW_X: usize = 280;
    pub const MAGIC: usize = 344;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataType {
    UInt8,
    Int16,
    Int32,
    Float32,
    Float64,
}

impl DataType {
    pub fn from_code(code: i16) -> Result<Self, NiftiError> {
        Ok(match code {
            2 => Self::UInt8,
            4 => Self::Int16,
            8 => Self::Int32,
            16 => Self::Float32,
            64 => Self::Float64,
            other => return Err(NiftiError::UnsupportedDatatype(other)),
        })
    }

    pub fn size(self) -> usize {
        match self {
            Self::UInt8 => 1,
            Self::Int16 => 2,
            Self::Int32 | Self::Float32 => 4,
            Self::Float64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Self::UInt8 => b[0] as f64,
            Self::Int16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::Int32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::Float32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::Float64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

fn i16_at(b: &[u8], off: usize) -> i16 {
    i16::from_le_bytes([b[off], b[off + 1]])
}

fn i32_at(b: &[u8], off: usize) -> i32 {
    i32::from_le_bytes(b[off..off + 4].try_into().unwrap())
}

fn f32_at(b: &[u8], off: usize) -> f32 {
    f32::from_le_bytes(b[off..off + 4].try_into().unwrap())
}

/// Decodes a single-file NIfTI-1 image held in memory.
pub fn parse_nifti(bytes: &[u8]) -> Result<VolumeGrid, NiftiError> {
    if bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b {
        return Err(NiftiError::Compressed);
    }
    if bytes.len() < HEADER_SIZE {
        return Err(NiftiError::BadMagic(format!(
            "only {} bytes, header needs {HEADER_SIZE}",
            bytes.len()
        )));
    }
    let sizeof_hdr = i32_at(bytes, offsets::SIZEOF_HDR);
    if sizeof_hdr != HEADER_SIZE as i32 {
        let swapped = i32::from_be_bytes(bytes[0..4].try_into().unwrap());
        let dim0_be = i16::from_be_bytes([bytes[offsets::DIM], bytes[offsets::DIM + 1]]);
        if swapped == HEADER_SIZE as i32 && (1..=7).contains(&dim0_be) {
            return Err(NiftiError::BigEndian);
        }
        return Err(NiftiError::BadMagic(format!(
            "sizeof_hdr is {sizeof_hdr}, expected 348"
        )));
    }
    let magic = &bytes[offsets::MAGIC..offsets::MAGIC + 4];
    let single_file = match magic {
        b"n+1\0" => true,
        b"ni1\0" => false,
        _ => return Err(NiftiError::BadMagic(format!("magic {magic:?}"))),
    };

    let mut dim = [0i16; 8];
    for (a, d) in dim.iter_mut().enumerate() {
        *d = i16_at(bytes, offsets::DIM + 2 * a);
    }
    if !(1..=7).contains(&dim[0]) {
        let dim0_be = i16::from_be_bytes([bytes[offsets::DIM], bytes[offsets::DIM + 1]]);
        if (1..=7).contains(&dim0_be) {
            return Err(NiftiError::BigEndian);
        }
        return Err(NiftiError::UnsupportedDimensionality(dim));
    }
    let ndim = dim[0] as usize;
    let mut dims = [1usize; 3];
    for a in 0..ndim {
        if dim[a + 1] < 1 {
            return Err(NiftiError::UnsupportedDimensionality(dim));
        }
        if a < 3 {
            dims[a] = dim[a + 1] as usize;
        } else if dim[a + 1] != 1 {
            return Err(NiftiError::UnsupportedDimensionality(dim));
        }
    }

    let datatype = DataType::from_code(i16_at(bytes, offsets::DATATYPE))?;
    let mut spacing = [1.0f64; 3];
    for (a, s) in spacing.iter_mut().enumerate() {
        *s = f32_at(bytes, offsets::PIXDIM + 4 * (a + 1)) as f64;
    }
    if ndim < 3 {
        // axes beyond dim[0] are singleton; their pixdim is frequently left at 0
        for s in spacing.iter_mut().skip(ndim) {
            if !(*s > 0.0) {
                *s = 1.0;
            }
        }
    }
    if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(NiftiError::NonPositiveSpacing(spacing));
    }

    let vox_offset = f32_at(bytes, offsets::VOX_OFFSET);
    let offset = if single_file {
        (vox_offset.max(VOX_OFFSET as f32)) as usize
    } else {
        vox_offset.max(0.0) as usize
    };
    let n = dims[0] * dims[1] * dims[2];
    let needed = n * datatype.size();
    if bytes.len() < offset + needed {
        return Err(NiftiError::TruncatedData {
            offset,
            needed,
            available: bytes.len(),
        });
    }

    let slope = f32_at(bytes, offsets::SCL_SLOPE) as f64;
    let inter = f32_at(bytes, offsets::SCL_INTER) as f64;
    let scale = slope != 0.0 && slope.is_finite() && inter.is_finite();
    let payload = &bytes[offset..offset + needed];
    let data: Vec<f64> = payload
        .chunks_exact(datatype.size())
        .map(|c| {
            let v = datatype.decode(c);
            if scale {
                v * slope + inter
            } else {
                v
            }
        })
        .collect();

    let mut quatern = [0f32; 3];
    let mut qoffset = [0f32; 3];
    for a in 0..3 {
        quatern[a] = f32_at(bytes, offsets::QUATERN_B + 4 * a);
        qoffset[a] = f32_at(bytes, offsets::QOFFSET_X + 4 * a);
    }
    let mut srow = [[0f32; 4]; 3];
    for (r, row) in srow.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = f32_at(bytes, offsets::SROW_X + 16 * r + 4 * c);
        }
    }
    let orientation = Orientation {
        qform_code: i16_at(bytes, offsets::QFORM_CODE),
        sform_code: i16_at(bytes, offsets::SFORM_CODE),
        quatern,
        qoffset,
        qfac: f32_at(bytes, offsets::PIXDIM),
        srow,
    };
    let origin = if orientation.sform_code > 0 {
        [srow[0][3] as f64, srow[1][3] as f64, srow[2][3] as f64]
    } else if orientation.qform_code > 0 {
        [qoffset[0] as f64, qoffset[1] as f64, qoffset[2] as f64]
    } else {
        [0.0; 3]
    };

    let descrip = &bytes[offsets::DESCRIP..offsets::DESCRIP + 80];
    let end = descrip.iter().position(|&c| c == 0).unwrap_or(80);
    let unit = String::from_utf8_lossy(&descrip[..end]).into_owned();

    let geometry = Geometry::new(dims, spacing, origin)?;
    let mut volume = VolumeGrid::new(geometry, data)?.with_unit(unit);
    volume.orientation = Some(orientation);
    Ok(volume)
}

/// Encodes a volume as a canonical single-file NIfTI-1 float32 image.
pub fn write_nifti(v: &VolumeGrid) -> Vec<u8> {
    let mut out = vec![0u8; VOX_OFFSET + 4 * v.data.len()];
    let put_i16 =
        |buf: &mut [u8], off: usize, x: i16| buf[off..off + 2].copy_from_slice(&x.to_le_bytes());
    let put_f32 =
        |buf: &mut [u8], off: usize, x: f32| buf[off..off + 4].copy_from_slice(&x.to_le_bytes());

    out[0..4].copy_from_slice(&(HEADER_SIZE as i32).to_le_bytes());
    let g = &v.geometry;
    put_i16(&mut out, offsets::DIM, 3);
    for a in 0..3 {
        put_i16(&mut out, offsets::DIM + 2 * (a + 1), g.dims[a] as i16);
    }
    for a in 4..8 {
        put_i16(&mut out, offsets::DIM + 2 * a, 1);
    }
    put_i16(&mut out, offsets::DATATYPE, 16);
    put_i16(&mut out, offsets::BITPIX, 32);
    put_f32(&mut out, offsets::PIXDIM, 1.0);
    for a in 0..3 {
        put_f32(&mut out, offsets::PIXDIM + 4 * (a + 1), g.spacing[a] as f32);
    }
    put_f32(&mut out, offsets::VOX_OFFSET, VOX_OFFSET as f32);
    put_f32(&mut out, offsets::SCL_SLOPE, 1.0);
    put_f32(&mut out, offsets::SCL_INTER, 0.0);
    out[offsets::XYZT_UNITS] = 2; // millimetres

    let unit = v.intensity_unit.as_bytes();
    let n = unit.len().min(79);
    out[offsets::DESCRIP..offsets::DESCRIP + n].copy_from_slice(&unit[..n]);

    put_i16(&mut out, offsets::QFORM_CODE, 1);
    put_i16(&mut out, offsets::SFORM_CODE, 1);
    for a in 0..3 {
        put_f32(&mut out, offsets::QOFFSET_X + 4 * a, g.origin[a] as f32);
        put_f32(
            &mut out,
            offsets::SROW_X + 16 * a + 4 * a,
            g.spacing[a] as f32,
        );
        put_f32(&mut out, offsets::SROW_X + 16 * a + 12, g.origin[a] as f32);
    }
    out[offsets::MAGIC..offsets::MAGIC + 4].copy_from_slice(b"n+1\0");

    for (chunk, &x) in out[VOX_OFFSET..].chunks_exact_mut(4).zip(v.data.iter()) {
        chunk.copy_from_slice(&(x as f32).to_le_bytes());
    }
    out
}

pub fn read_nifti(path: &Path) -> Result<VolumeGrid, NiftiError> {
    let io = |source| NiftiError::Io {
        path: path.display().to_string(),
        source,
    };
    let bytes = fs::read(path).map_err(io)?;
    parse_nifti(&bytes)
}

pub fn save_nifti(path: &Path, v: &VolumeGrid) -> Result<(), NiftiError> {
    fs::write(path, write_nifti(v)).map_err(|source| NiftiError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a binary mask; every voxel must be exactly 0 or 1.
pub fn read_mask(path: &Path, label: &str) -> Result<MaskROI, NiftiError> {
    let v = read_nifti(path)?;
    Ok(MaskROI::from_values(v.geometry, &v.data, label)?)
}

pub fn save_mask(path: &Path, m: &MaskROI) -> Result<(), NiftiError> {
    let v = VolumeGrid::new(m.geometry, m.to_values())?.with_unit(m.label.clone());
    save_nifti(path, &v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(dims: [i16; 3], datatype: i16, bitpix: i16) -> Vec<u8> {
        let mut b = vec![0u8; VOX_OFFSET];
        b[0..4].copy_from_slice(&348i32.to_le_bytes());
        b[40..42].copy_from_slice(&3i16.to_le_bytes());
        for a in 0..3 {
            b[42 + 2 * a..44 + 2 * a].copy_from_slice(&dims[a].to_le_bytes());
        }
        b[70..72].copy_from_slice(&datatype.to_le_bytes());
        b[72..74].copy_from_slice(&bitpix.to_le_bytes());
        for a in 0..3 {
            b[80 + 4 * a..84 + 4 * a].copy_from_slice(&1.0f32.to_le_bytes());
        }
        b[108..112].copy_from_slice(&352.0f32.to_le_bytes());
        b[344..348].copy_from_slice(b"n+1\0");
        b
    }

    #[test]
    fn minimal_float32_volume() {
        let mut b = header([2, 2, 2], 16, 32);
        for i in 0..8 {
            b.extend_from_slice(&(i as f32).to_le_bytes());
        }
        let v = parse_nifti(&b).unwrap();
        assert_eq!(v.dims(), [2, 2, 2]);
        assert_eq!(v.data, (0..8).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(v.get(1, 0, 0), 1.0);
        assert_eq!(v.get(0, 1, 0), 2.0);
        assert_eq!(v.get(0, 0, 1), 4.0);
    }

    #[test]
    fn bad_sizeof_hdr() {
        let mut b = header([1, 1, 1], 16, 32);
        b.extend_from_slice(&0f32.to_le_bytes());
        b[0..4].copy_from_slice(&347i32.to_le_bytes());
        assert!(matches!(parse_nifti(&b), Err(NiftiError::BadMagic(_))));
    }

    #[test]
    fn big_endian_is_detected() {
        let mut b = header([1, 1, 1], 16, 32);
        b.extend_from_slice(&0f32.to_le_bytes());
        b[0..4].copy_from_slice(&348i32.to_be_bytes());
        b[40..42].copy_from_slice(&3i16.to_be_bytes());
        assert!(matches!(parse_nifti(&b), Err(NiftiError::BigEndian)));
    }

    #[test]
    fn unsupported_datatype_and_truncation() {
        let mut b = header([2, 1, 1], 512, 16);
        b.extend_from_slice(&[0u8; 4]);
        assert!(matches!(
            parse_nifti(&b),
            Err(NiftiError::UnsupportedDatatype(512))
        ));

        let mut b = header([2, 1, 1], 16, 32);
        b.extend_from_slice(&[0u8; 4]);
        assert!(matches!(
            parse_nifti(&b),
            Err(NiftiError::TruncatedData { .. })
        ));
    }

    #[test]
    fn integer_payload_with_scaling() {
        let mut b = header([3, 1, 1], 4, 16);
        b[112..116].copy_from_slice(&2.0f32.to_le_bytes());
        b[116..120].copy_from_slice(&(-1.0f32).to_le_bytes());
        for x in [-3i16, 0, 7] {
            b.extend_from_slice(&x.to_le_bytes());
        }
        assert_eq!(parse_nifti(&b).unwrap().data, vec![-7.0, -1.0, 13.0]);
    }

    #[test]
    fn zero_spacing_rejected() {
        let mut b = header([1, 1, 1], 2, 8);
        b[84..88].copy_from_slice(&0.0f32.to_le_bytes());
        b.push(5);
        assert!(matches!(
            parse_nifti(&b),
            Err(NiftiError::NonPositiveSpacing(_))
        ));
    }

    #[test]
    fn single_voxel_write_is_352_plus_payload() {
        let g = Geometry::new([1, 1, 1], [1.0; 3], [0.0; 3]).unwrap();
        let v = VolumeGrid::new(g, vec![0.0]).unwrap();
        let bytes = write_nifti(&v);
        assert_eq!(bytes.len(), 356);
        assert_eq!(&bytes[344..348], b"n+1\0");
        assert_eq!(parse_nifti(&bytes).unwrap().data, vec![0.0]);
    }

    #[test]
    fn write_parse_write_is_byte_identical() {
        let g = Geometry::new([3, 2, 2], [1.5, 1.5, 3.0], [-10.0, 4.5, 7.25]).unwrap();
        let data: Vec<f64> = (0..12).map(|i| (i as f32 * 0.37 - 2.0) as f64).collect();
        let v = VolumeGrid::new(g, data).unwrap().with_unit("a.u.");
        let first = write_nifti(&v);
        let back = parse_nifti(&first).unwrap();
        assert_eq!(back.geometry, v.geometry);
        assert_eq!(back.intensity_unit, "a.u.");
        assert_eq!(write_nifti(&back), first);
    }
}
