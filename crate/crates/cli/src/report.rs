//! Report encoding, exit codes and atomic output.

use std::io::{self, Write};
use std::path::Path;

use hvl_core::HvlError;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

pub const SCHEMA: &str = "hvl-report/1";

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;
pub const EXIT_IDENTITY: u8 = 3;
pub const EXIT_REFUSAL: u8 = 4;

/// An error with the exit code it maps to.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub kind: String,
    pub message: String,
    pub exit_code: u8,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            kind: "config".into(),
            message: message.into(),
            exit_code: EXIT_CONFIG,
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Failure {
            kind: "io".into(),
            message: message.into(),
            exit_code: EXIT_CONFIG,
        }
    }

    pub fn from_core(e: HvlError) -> Self {
        let exit_code = match e {
            HvlError::InvalidPotential(_) | HvlError::InvalidProblem(_) => EXIT_CONFIG,
            HvlError::Refusal(_) => EXIT_REFUSAL,
            _ => EXIT_SOLVER,
        };
        Failure {
            kind: e.kind().into(),
            message: e.to_string(),
            exit_code,
        }
    }
}

impl From<HvlError> for Failure {
    fn from(e: HvlError) -> Self {
        Failure::from_core(e)
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Pretty JSON with every float printed by [`fmt17`].
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt17(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, Digits17(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("reports serialize to JSON");
    out.push(b'\n');
    out
}

/// A CSV table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }
}

pub fn cell(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

/// Writes `bytes` to `path` through a temporary file in the same directory, or to stdout.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    let Some(path) = path else {
        let mut out = io::stdout().lock();
        return out
            .write_all(bytes)
            .and_then(|_| out.flush())
            .map_err(|e| Failure::io(format!("stdout: {e}")));
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: io::Error| Failure::io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, -0.5, 1.0 / 3.0, 6.02214076e23, 5e-324, f64::MAX] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt17(-0.5), "-5.0000000000000000e-1");
    }

    #[test]
    fn json_uses_seventeen_digits() {
        #[derive(Serialize)]
        struct R {
            x: f64,
            n: usize,
        }
        let s = String::from_utf8(to_json(&R { x: 0.1, n: 3 })).unwrap();
        assert!(s.contains("\"x\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        assert_eq!(
            Failure::from_core(HvlError::Supercritical { p_squared: -1.0 }).exit_code,
            EXIT_SOLVER
        );
        assert_eq!(
            Failure::from_core(HvlError::Refusal("x".into())).exit_code,
            EXIT_REFUSAL
        );
        assert_eq!(
            Failure::from_core(HvlError::InvalidPotential("x".into())).exit_code,
            EXIT_CONFIG
        );
    }
}
