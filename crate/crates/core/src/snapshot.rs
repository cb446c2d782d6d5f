//! `VLF1` binary snapshots.
//!
//! Layout (all little-endian): magic `VLF1`, `u32` axis count, per axis
//! `f64 lower, f64 upper, u32 count, u8 kind`, then `u8 method`,
//! `u8 dg_degree`, then the data as `f64` in canonical order.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Axis, AxisKind, DistributionField, GridSpec, LayoutDescriptor, LayoutStrategy, Method};

pub const MAGIC: &[u8; 4] = b"VLF1";

pub fn write_snapshot<W: Write>(field: &DistributionField, mut w: W) -> Result<()> {
    let grid = &field.grid;
    w.write_all(MAGIC)?;
    w.write_all(&(grid.ndim() as u32).to_le_bytes())?;
    for ax in &grid.axes {
        w.write_all(&ax.lower.to_le_bytes())?;
        w.write_all(&ax.upper.to_le_bytes())?;
        w.write_all(&(ax.count as u32).to_le_bytes())?;
        w.write_all(&[match ax.kind {
            AxisKind::Space => 0,
            AxisKind::Velocity => 1,
        }])?;
    }
    w.write_all(&[grid.method.code(), grid.dg_degree as u8])?;
    let data = field.canonical_data();
    let mut buf = Vec::with_capacity(8 * 4096);
    for chunk in data.chunks(4096) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot into a canonical field with the given strategy.
pub fn read_snapshot<R: Read>(mut r: R, strategy: LayoutStrategy) -> Result<DistributionField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot(format!("bad magic {magic:?}")));
    }
    let ndim = read_u32(&mut r)? as usize;
    if ndim != 2 && ndim != 4 {
        return Err(Error::Snapshot(format!("unsupported axis count {ndim}")));
    }
    let mut axes = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let lower = read_f64(&mut r)?;
        let upper = read_f64(&mut r)?;
        let count = read_u32(&mut r)? as usize;
        let kind = match read_u8(&mut r)? {
            0 => AxisKind::Space,
            1 => AxisKind::Velocity,
            k => return Err(Error::Snapshot(format!("unknown axis kind {k}"))),
        };
        axes.push(Axis::new(lower, upper, count, kind)?);
    }
    let method = match read_u8(&mut r)? {
        0 => Method::Spline,
        1 => Method::Dg,
        m => return Err(Error::Snapshot(format!("unknown method code {m}"))),
    };
    let degree = read_u8(&mut r)? as usize;
    let grid = GridSpec::new(axes, method, degree)?;
    let mut bytes = vec![0u8; grid.total_len() * 8];
    r.read_exact(&mut bytes).map_err(truncated)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Snapshot("trailing bytes after data".into()));
    }
    let data = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    let layout = LayoutDescriptor::canonical(&grid, strategy);
    DistributionField::from_data(grid, layout, data)
}

pub fn save(field: &DistributionField, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_snapshot(field, std::io::BufWriter::new(file))
}

pub fn load(path: impl AsRef<Path>, strategy: LayoutStrategy) -> Result<DistributionField> {
    let file = std::fs::File::open(path)?;
    read_snapshot(std::io::BufReader::new(file), strategy)
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Snapshot("unexpected end of file".into())
    } else {
        Error::Io(e)
    }
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(b[0])
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(method: Method) -> DistributionField {
        let axes = vec![Axis::space(0.0, 4.0, 4).unwrap(), Axis::velocity(-6.0, 6.0, 5).unwrap()];
        let grid = GridSpec::new(axes, method, 1).unwrap();
        let layout = LayoutDescriptor::canonical(&grid, LayoutStrategy::Transpose);
        DistributionField::from_fn(grid, layout, |p| p[0] * 10.0 + p[1]).unwrap()
    }

    #[test]
    fn header_bytes() {
        let f = sample(Method::Spline);
        let mut buf = Vec::new();
        write_snapshot(&f, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"VLF1");
        assert_eq!(&buf[4..8], &[2, 0, 0, 0]);
        assert_eq!(&buf[8..16], &0.0f64.to_le_bytes());
        assert_eq!(&buf[16..24], &4.0f64.to_le_bytes());
        assert_eq!(&buf[24..28], &[4, 0, 0, 0]);
        assert_eq!(buf[28], 0);
        assert_eq!(buf[28 + 21], 1);
        let hdr = 8 + 2 * 21;
        assert_eq!(&buf[hdr..hdr + 2], &[0, 0]);
        assert_eq!(buf.len(), hdr + 2 + 8 * 20);
        // first value is f(x=0, v=-6), second is f(x=1, v=-6)
        assert_eq!(&buf[hdr + 2..hdr + 10], &(-6.0f64).to_le_bytes());
        assert_eq!(&buf[hdr + 10..hdr + 18], &4.0f64.to_le_bytes());
    }

    #[test]
    fn round_trip_from_transposed_layout() {
        for method in [Method::Spline, Method::Dg] {
            let f = sample(method);
            let mut t = f.clone();
            t.transpose_to(&[1, 0]).unwrap();
            let mut buf = Vec::new();
            write_snapshot(&t, &mut buf).unwrap();
            let back = read_snapshot(buf.as_slice(), LayoutStrategy::Transpose).unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn rejects_corrupt_input() {
        let f = sample(Method::Dg);
        let mut buf = Vec::new();
        write_snapshot(&f, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_snapshot(bad.as_slice(), LayoutStrategy::Strided), Err(Error::Snapshot(_))));
        let short = &buf[..buf.len() - 3];
        assert!(matches!(read_snapshot(short, LayoutStrategy::Strided), Err(Error::Snapshot(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(read_snapshot(long.as_slice(), LayoutStrategy::Strided).is_err());
    }
}
