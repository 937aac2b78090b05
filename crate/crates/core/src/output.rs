//! Deterministic JSON/CSV emission and atomic writes.
//!
//! Every float is written with 17 significant digits so that it re-parses to
//! the identical bit pattern.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::trap::Point;

struct ExactFloats<'a> {
    inner: PrettyFormatter<'a>,
}

fn write_exact<W: ?Sized + Write>(w: &mut W, v: f64) -> io::Result<()> {
    write!(w, "{v:.16e}")
}

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write_exact(w, v)
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write_exact(w, v as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Pretty JSON with exact floats and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = ExactFloats { inner: PrettyFormatter::with_indent(b"  ") };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Format(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

pub fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

/// `x_tilde,y_tilde` rows.
pub fn positions_csv(points: &[Point]) -> String {
    let mut s = String::from("x_tilde,y_tilde\n");
    for p in points {
        s.push_str(&format!("{:.16e},{:.16e}\n", p.x, p.y));
    }
    s
}

pub fn parse_positions_csv(text: &str) -> Result<Vec<Point>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "x_tilde,y_tilde" => {}
        _ => return Err(Error::Format("missing x_tilde,y_tilde header".into())),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split(',').map(|f| f.trim().parse::<f64>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => Ok(Point::new(x, y)),
                _ => Err(Error::Format(format!("bad CSV row: {l}"))),
            }
        })
        .collect()
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so the target never holds a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_bitwise() {
        let values = vec![0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, f64::MIN_POSITIVE, 1.0869307039017523e1, 5.1406028291678403e-5];
        let text = to_json(&values).unwrap();
        let back: Vec<f64> = from_json(&text).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(text.contains("1.0000000000000001e-1") || text.contains("1.0000000000000000e-1"));
    }

    #[test]
    fn csv_round_trip() {
        let pts = vec![Point::new(0.25, -1.0 / 7.0), Point::new(3.0, 0.0)];
        let text = positions_csv(&pts);
        assert!(text.starts_with("x_tilde,y_tilde\n"));
        assert_eq!(parse_positions_csv(&text).unwrap(), pts);
        assert!(parse_positions_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn atomic_write_replaces_target() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        let entries = std::fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(entries, 1);
        let missing = dir.path().join("no/such/dir/out.json");
        assert!(matches!(write_atomic(&missing, b"x"), Err(Error::Io { .. })));
    }
}
