//! CSV and STB1 dataset files.
//!
//! STB1 layout (little-endian):
//!
//! ```text
//! "STB1" | u32 N | u32 frames | u32 F | frames*N*F f64 | u8 has_distances | [N*N f64]
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::RawSeries;
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

const STB_MAGIC: &[u8; 4] = b"STB1";

/// Reads a single-feature CSV: header row of node ids, one row per frame.
pub fn load_csv(path: &Path) -> Result<RawSeries> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(1, e.to_string()))?;
    let num_nodes = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .len();
    if num_nodes == 0 {
        return Err(parse_err(1, "no frames".into()));
    }

    let mut values = Vec::new();
    let mut frames = 0usize;
    for (row, record) in reader.records().enumerate() {
        let row = row + 1;
        let record = record.map_err(|e| parse_err(row + 1, e.to_string()))?;
        let line = record.position().map_or(row + 1, |p| p.line() as usize);
        if record.len() != num_nodes {
            return Err(parse_err(
                line,
                format!("row {row} has {} cells, expected {num_nodes}", record.len()),
            ));
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(
                    line,
                    format!("row {row}, column {}: non-numeric value {cell:?}", col + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(parse_err(
                    line,
                    format!("row {row}, column {}: non-finite value", col + 1),
                ));
            }
            values.push(v);
        }
        frames += 1;
    }
    match frames {
        0 => Err(parse_err(1, "no frames".into())),
        1 => Err(parse_err(2, "need at least 2 frames, found 1".into())),
        _ => RawSeries::new(num_nodes, frames, 1, values),
    }
}

pub fn write_csv(series: &RawSeries, path: &Path) -> Result<()> {
    if series.num_features() != 1 {
        return Err(Error::InvalidArgument(
            "CSV output supports single-feature series only".into(),
        ));
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    let header: Vec<String> = (0..series.num_nodes())
        .map(|n| format!("node{n}"))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for t in 0..series.num_frames() {
        let row: Vec<String> = (0..series.num_nodes())
            .map(|n| series.value(t, n, 0).to_string())
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn encode_stb(series: &RawSeries) -> Vec<u8> {
    let n = series.num_nodes();
    let mut buf = Vec::with_capacity(17 + 8 * (series.values().len() + n * n));
    buf.extend_from_slice(STB_MAGIC);
    for dim in [n, series.num_frames(), series.num_features()] {
        buf.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for v in series.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    match series.distances() {
        Some(d) => {
            buf.push(1);
            for v in d.as_slice() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        None => buf.push(0),
    }
    buf
}

pub fn decode_stb(bytes: &[u8]) -> Result<RawSeries> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != STB_MAGIC {
        return Err(Error::Format("missing STB1 magic".into()));
    }
    let n = cur.u32()? as usize;
    let frames = cur.u32()? as usize;
    let features = cur.u32()? as usize;
    let count = n
        .checked_mul(frames)
        .and_then(|v| v.checked_mul(features))
        .ok_or_else(|| Error::Format("dimension overflow".into()))?;
    let values = cur.f64s(count)?;
    let series = RawSeries::new(n, frames, features, values)?;
    let series = match cur.take(1)?[0] {
        0 => series,
        1 => series.with_distances(DenseMatrix::from_vec(n, n, cur.f64s(n * n)?)?)?,
        flag => return Err(Error::Format(format!("bad distance flag {flag}"))),
    };
    if cur.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes",
            bytes.len() - cur.pos
        )));
    }
    Ok(series)
}

pub fn load_stb(path: &Path) -> Result<RawSeries> {
    decode_stb(&fs::read(path)?).map_err(|e| e.context(format!("reading {}", path.display())))
}

pub fn write_stb(series: &RawSeries, path: &Path) -> Result<()> {
    fs::write(path, encode_stb(series))?;
    Ok(())
}

/// Dispatches on extension: `.csv` or STB1 otherwise.
pub fn load_dataset(path: &Path) -> Result<RawSeries> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => load_csv(path),
        _ => load_stb(path),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let raw = self.take(
            count
                .checked_mul(8)
                .ok_or_else(|| Error::Format("length overflow".into()))?,
        )?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        std::io::Write::write_all(&mut f, content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_constants() {
        let f = write_tmp("a,b\n5.0,5.0\n5.0,5.0\n5.0,5.0\n");
        let s = load_csv(f.path()).unwrap();
        assert_eq!((s.num_nodes(), s.num_frames(), s.num_features()), (2, 3, 1));
        assert!(s.values().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn csv_non_numeric_names_row() {
        let f = write_tmp("a,b\n1,2\nabc,3\n4,5\n");
        let err = load_csv(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2"), "{msg}");
        assert!(msg.contains("abc"), "{msg}");
        assert!(err.is_validation());
    }

    #[test]
    fn csv_ragged_and_empty() {
        let f = write_tmp("a,b\n1,2\n3\n");
        assert!(load_csv(f.path())
            .unwrap_err()
            .to_string()
            .contains("row 2"));
        let f = write_tmp("");
        assert!(load_csv(f.path())
            .unwrap_err()
            .to_string()
            .contains("no frames"));
        let f = write_tmp("a,b\n");
        assert!(load_csv(f.path())
            .unwrap_err()
            .to_string()
            .contains("no frames"));
        let f = write_tmp("a,b\n1,2\n");
        assert!(load_csv(f.path()).is_err());
    }

    #[test]
    fn stb_layout_is_exact() {
        let s = RawSeries::new(1, 2, 1, vec![1.5, -2.0]).unwrap();
        let bytes = encode_stb(&s);
        let mut expect = b"STB1".to_vec();
        expect.extend_from_slice(&1u32.to_le_bytes());
        expect.extend_from_slice(&2u32.to_le_bytes());
        expect.extend_from_slice(&1u32.to_le_bytes());
        expect.extend_from_slice(&1.5f64.to_le_bytes());
        expect.extend_from_slice(&(-2.0f64).to_le_bytes());
        expect.push(0);
        assert_eq!(bytes, expect);
        assert_eq!(decode_stb(&bytes).unwrap(), s);
    }

    #[test]
    fn stb_rejects_corruption() {
        let s = RawSeries::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0])
            .unwrap()
            .with_distances(DenseMatrix::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap())
            .unwrap();
        let bytes = encode_stb(&s);
        assert_eq!(decode_stb(&bytes).unwrap(), s);
        assert!(decode_stb(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_stb(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(decode_stb(&extra).is_err());
    }
}
