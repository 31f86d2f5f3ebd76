//! NPY files: little-endian `f8`, C order. Writes version 1.0; reads 1.0-3.0
//! and also accepts `<f4`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

const MAGIC: &[u8] = b"\x93NUMPY";

fn npy_err(msg: impl Into<String>) -> Error {
    Error::Npy(msg.into())
}

pub fn write_npy<T: Scalar, W: Write>(w: &mut W, t: &DenseTensor<T>) -> Result<()> {
    let dims: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
    let shape = if dims.len() == 1 {
        format!("({},)", dims[0])
    } else {
        format!("({})", dims.join(", "))
    };
    let mut header = format!("{{'descr': '<f8', 'fortran_order': False, 'shape': {shape}, }}");
    // Magic (6) + version (2) + length (2) + header + newline, padded to 64.
    let unpadded = 10 + header.len() + 1;
    header.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    header.push('\n');
    let len = u16::try_from(header.len()).map_err(|_| npy_err("header too long for version 1.0"))?;
    w.write_all(MAGIC)?;
    w.write_all(&[1, 0])?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(header.as_bytes())?;
    let mut buf = Vec::with_capacity(t.len() * 8);
    for v in t.data() {
        buf.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn save_npy<T: Scalar>(path: impl AsRef<Path>, t: &DenseTensor<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_npy(&mut w, t)?;
    w.flush()?;
    Ok(())
}

/// Value of `'key': ...` in a Python dict literal header.
fn header_field<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let pat = format!("'{key}':");
    let start = header
        .find(&pat)
        .ok_or_else(|| npy_err(format!("header has no '{key}' field")))?
        + pat.len();
    Ok(header[start..].trim_start())
}

fn parse_shape(rest: &str) -> Result<Vec<usize>> {
    let rest = rest.strip_prefix('(').ok_or_else(|| npy_err("shape is not a tuple"))?;
    let end = rest.find(')').ok_or_else(|| npy_err("unterminated shape tuple"))?;
    rest[..end]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| npy_err(format!("bad shape entry '{s}'"))))
        .collect()
}

pub fn read_npy<T: Scalar, R: Read>(r: &mut R) -> Result<DenseTensor<T>> {
    let mut pre = [0u8; 8];
    r.read_exact(&mut pre).map_err(|_| npy_err("file too short"))?;
    if &pre[..6] != MAGIC {
        return Err(npy_err("missing NPY magic string"));
    }
    let header_len = match pre[6] {
        1 => {
            let mut b = [0u8; 2];
            r.read_exact(&mut b)?;
            u16::from_le_bytes(b) as usize
        }
        2 | 3 => {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            u32::from_le_bytes(b) as usize
        }
        v => return Err(npy_err(format!("unsupported NPY version {v}"))),
    };
    let mut header = vec![0u8; header_len];
    r.read_exact(&mut header).map_err(|_| npy_err("truncated header"))?;
    let header = String::from_utf8(header).map_err(|_| npy_err("header is not text"))?;

    let descr = header_field(&header, "descr")?;
    let width = if descr.starts_with("'<f8'") {
        8
    } else if descr.starts_with("'<f4'") {
        4
    } else {
        return Err(npy_err(format!(
            "unsupported dtype {}; expected '<f8' or '<f4'",
            descr.split(',').next().unwrap_or(descr)
        )));
    };
    if !header_field(&header, "fortran_order")?.starts_with("False") {
        return Err(npy_err("Fortran-ordered arrays are not supported"));
    }
    let shape = parse_shape(header_field(&header, "shape")?)?;
    if shape.is_empty() {
        return Err(npy_err("zero-dimensional arrays are not supported"));
    }
    let len: usize = shape.iter().product();
    let mut bytes = vec![0u8; len * width];
    r.read_exact(&mut bytes).map_err(|_| npy_err("data shorter than the declared shape"))?;
    let data = if width == 8 {
        bytes
            .chunks_exact(8)
            .map(|c| T::real(f64::from_le_bytes(c.try_into().unwrap())))
            .collect()
    } else {
        bytes
            .chunks_exact(4)
            .map(|c| T::real(f32::from_le_bytes(c.try_into().unwrap()) as f64))
            .collect()
    };
    DenseTensor::new(shape, data)
}

pub fn load_npy<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseTensor<T>> {
    read_npy(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let t = DenseTensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        write_npy(&mut buf, &t).unwrap();
        assert_eq!(buf.len(), 128 + 24);
        let header = std::str::from_utf8(&buf[10..128]).unwrap();
        assert!(header.starts_with("{'descr': '<f8', 'fortran_order': False, 'shape': (3,), }"));
        assert!(header.ends_with('\n'));
        assert_eq!(&buf[128..136], &1.0f64.to_le_bytes());
    }

    #[test]
    fn roundtrip_bits() {
        let t = DenseTensor::new(vec![2, 3, 2], (0..12).map(|i| (i as f64).sqrt() - 1e-300).collect()).unwrap();
        let mut buf = Vec::new();
        write_npy(&mut buf, &t).unwrap();
        assert_eq!(buf.len() % 16, 0);
        let back: DenseTensor<f64> = read_npy(&mut buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    fn raw(header: &str, payload: &[u8]) -> Vec<u8> {
        let mut buf = MAGIC.to_vec();
        buf.extend_from_slice(&[1, 0]);
        buf.extend_from_slice(&(header.len() as u16).to_le_bytes());
        buf.extend_from_slice(header.as_bytes());
        buf.extend_from_slice(payload);
        buf
    }

    #[test]
    fn reads_f4_and_rejects_garbage() {
        let payload: Vec<u8> = [1.5f32, -2.0].iter().flat_map(|v| v.to_le_bytes()).collect();
        let buf = raw("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 1), }", &payload);
        let t: DenseTensor<f64> = read_npy(&mut buf.as_slice()).unwrap();
        assert_eq!((t.shape(), t.data()), (&[2usize, 1][..], &[1.5, -2.0][..]));

        assert!(read_npy::<f64, _>(&mut &b"not an npy file"[..]).is_err());
        assert!(read_npy::<f64, _>(&mut &buf[..buf.len() - 2]).is_err());
        let fortran = raw("{'descr': '<f4', 'fortran_order': True, 'shape': (2, 1), }", &payload);
        assert!(read_npy::<f64, _>(&mut fortran.as_slice()).is_err());
        let ints = raw("{'descr': '<i8', 'fortran_order': False, 'shape': (1,), }", &[0; 8]);
        assert!(read_npy::<f64, _>(&mut ints.as_slice()).is_err());
    }
}
