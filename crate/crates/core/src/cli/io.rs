//! Count-curve CSV files: a `flux,counts` header, then one row per point.

use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::fitter::{CountCurve, CurvePoint, FitError, Regime};
use crate::scanmap::fmt_num;

pub const CURVE_HEADER: &str = "flux,counts";

#[derive(Debug, Error)]
pub enum CurveFileError {
    #[error("data file not found: {0}")]
    NotFound(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Invalid {
        path: String,
        #[source]
        source: FitError,
    },
}

/// Parses curve text. `#` comment lines and blank lines are skipped; line
/// numbers in errors are 1-based and count every line.
pub fn parse_count_curve(
    name: &str,
    text: &str,
    pulse_freq: f64,
    regime: Regime,
) -> Result<CountCurve, CurveFileError> {
    let perr = |line: usize, message: String| CurveFileError::Parse {
        path: name.to_string(),
        line,
        message,
    };
    let mut points = Vec::new();
    let mut saw_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            let cols: Vec<String> = line.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
            if cols != ["flux", "counts"] {
                return Err(perr(i + 1, format!("expected header '{CURVE_HEADER}', got '{line}'")));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(perr(i + 1, format!("expected 2 columns, found {}", fields.len())));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| perr(i + 1, format!("cannot parse {what} '{s}'")))
        };
        points.push(CurvePoint {
            flux: num(fields[0], "flux")?,
            count_rate: num(fields[1], "counts")?,
        });
    }
    if !saw_header {
        return Err(perr(1, format!("missing header '{CURVE_HEADER}'")));
    }
    CountCurve::new(points, pulse_freq, regime, name).map_err(|source| CurveFileError::Invalid {
        path: name.to_string(),
        source,
    })
}

pub fn load_count_curve(path: &Path, pulse_freq: f64, regime: Regime) -> Result<CountCurve, CurveFileError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            CurveFileError::NotFound(shown.clone())
        } else {
            CurveFileError::Io {
                path: shown.clone(),
                source,
            }
        }
    })?;
    parse_count_curve(&shown, &text, pulse_freq, regime)
}

pub fn write_count_curve<W: Write>(curve: &CountCurve, mut w: W) -> io::Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    for p in curve.points() {
        writeln!(w, "{},{}", fmt_num(p.flux), fmt_num(p.count_rate))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_number_reports_line() {
        let err = parse_count_curve("d.csv", "flux,counts\nabc,10\n", 1e6, Regime::SinglePixel).unwrap_err();
        assert_eq!(err.to_string(), "d.csv: line 2: cannot parse flux 'abc'");
    }

    #[test]
    fn missing_header_and_wrong_width() {
        let err = parse_count_curve("d.csv", "1,2\n", 1e6, Regime::SinglePixel).unwrap_err();
        assert!(matches!(err, CurveFileError::Parse { line: 1, .. }), "{err}");
        let err = parse_count_curve("d.csv", "flux,counts\n# c\n1,2,3\n", 1e6, Regime::SinglePixel).unwrap_err();
        assert!(matches!(err, CurveFileError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn non_monotone_flux_is_a_validation_error() {
        let err = parse_count_curve("d.csv", "flux,counts\n2,1\n1,1\n", 1e6, Regime::SinglePixel).unwrap_err();
        assert!(matches!(err, CurveFileError::Invalid { .. }), "{err}");
    }

    #[test]
    fn write_then_read_is_byte_identical() {
        let curve = CountCurve::synthetic(Regime::TwoPixel, 1e6, 1.59e-4, 1e-3, &[10.0, 123.456, 9000.0], "x").unwrap();
        let mut first = Vec::new();
        write_count_curve(&curve, &mut first).unwrap();
        let back = parse_count_curve("x", std::str::from_utf8(&first).unwrap(), 1e6, Regime::TwoPixel).unwrap();
        let mut second = Vec::new();
        write_count_curve(&back, &mut second).unwrap();
        assert_eq!(first, second);
    }
}
