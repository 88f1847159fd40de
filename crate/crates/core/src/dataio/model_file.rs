//! Line-oriented text format for trained models.
//!
//! ```text
//! MFNET 1
//! <s1> <s2> <s3>
//! <lambda>
//! <s1 scaling means>
//! <s1 scaling std-devs>
//! <s2 rows of theta1, s1+1 values each>
//! <s3 rows of theta2, s2+1 values each>
//! ```
//!
//! Reals are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::features::{ScalingParams, FEATURE_DIM};
use crate::network::{Model, OUTPUT_DIM};

pub const MODEL_MAGIC: &str = "MFNET";
pub const MODEL_VERSION: u32 = 1;

fn push_row<'a>(out: &mut String, values: impl IntoIterator<Item = &'a f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

pub fn render_model(model: &Model) -> String {
    let t = model.topology();
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_MAGIC} {MODEL_VERSION}");
    let _ = writeln!(out, "{} {} {}", t.input, t.hidden, t.output);
    push_row(&mut out, [model.lambda()].iter());
    push_row(&mut out, model.scaling().means());
    push_row(&mut out, model.scaling().std_devs());
    for row in model.theta1().rows() {
        push_row(&mut out, row.iter());
    }
    for row in model.theta2().rows() {
        push_row(&mut out, row.iter());
    }
    out
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), render_model(model).as_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, l)) => Ok((i + 1, l)),
            None => Err(Error::ParseError {
                line: 0,
                reason: format!("unexpected end of file, expected {what}"),
            }),
        }
    }

    fn numbers(&mut self, what: &str, expected: usize) -> Result<Vec<f64>> {
        let (line, text) = self.next_line(what)?;
        let values = parse_reals(line, text)?;
        if values.len() != expected {
            return Err(Error::ShapeMismatch {
                what: format!("{what} (line {line})"),
                expected,
                found: values.len(),
            });
        }
        Ok(values)
    }

    /// Reads `rows` lines of `cols` reals; a short block is a shape error.
    fn matrix(&mut self, what: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let Some(&(_, text)) = self.inner.peek() else {
                return Err(Error::ShapeMismatch {
                    what: format!("{what} rows"),
                    expected: rows,
                    found: r,
                });
            };
            if text.trim().is_empty() {
                return Err(Error::ShapeMismatch {
                    what: format!("{what} rows"),
                    expected: rows,
                    found: r,
                });
            }
            data.extend(self.numbers(&format!("{what} row {}", r + 1), cols)?);
        }
        Ok(Array2::from_shape_vec((rows, cols), data).expect("row lengths checked"))
    }
}

fn parse_reals(line: usize, text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::ParseError {
                    line,
                    reason: format!("`{tok}` is not a finite number"),
                })
        })
        .collect()
}

pub fn parse_model(text: &str) -> Result<Model> {
    let mut lines = Lines {
        inner: text.lines().enumerate().peekable(),
    };

    let (_, magic) = lines.next_line("magic").map_err(|_| Error::BadMagic)?;
    let mut tokens = magic.split_whitespace();
    if tokens.next() != Some(MODEL_MAGIC) {
        return Err(Error::BadMagic);
    }
    let version: u32 = tokens
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or(Error::BadMagic)?;
    if version != MODEL_VERSION {
        return Err(Error::VersionUnsupported(version));
    }

    let (line, topo) = lines.next_line("topology")?;
    let sizes = topo
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .ok()
        .filter(|s| s.len() == 3 && s.iter().all(|&n| n > 0))
        .ok_or_else(|| Error::ParseError {
            line,
            reason: format!("expected three positive layer sizes, found `{topo}`"),
        })?;
    let (s1, s2, s3) = (sizes[0], sizes[1], sizes[2]);
    if s1 != FEATURE_DIM {
        return Err(Error::ShapeMismatch {
            what: "model input size".into(),
            expected: FEATURE_DIM,
            found: s1,
        });
    }
    if s3 != OUTPUT_DIM {
        return Err(Error::ShapeMismatch {
            what: "model output size".into(),
            expected: OUTPUT_DIM,
            found: s3,
        });
    }

    let lambda = lines.numbers("lambda", 1)?[0];
    let means = lines.numbers("scaling means", s1)?;
    let std_devs = lines.numbers("scaling std-devs", s1)?;
    let theta1 = lines.matrix("theta1", s2, s1 + 1)?;
    let theta2 = lines.matrix("theta2", s3, s2 + 1)?;

    let extra = lines.inner.filter(|(_, l)| !l.trim().is_empty()).count();
    if extra > 0 {
        return Err(Error::ShapeMismatch {
            what: "theta2 rows".into(),
            expected: s3,
            found: s3 + extra,
        });
    }

    Model::new(theta1, theta2, ScalingParams::new(means, std_devs)?, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Topology;
    use crate::training::{init_weights, InitEpsilon};

    fn sample_model() -> Model {
        let t = Topology::pipeline(4).unwrap();
        let (t1, t2) = init_weights(t, 11, InitEpsilon::Auto).unwrap();
        let means = (0..27).map(|i| i as f64 * 0.1 - 1.3).collect();
        let sds = (0..27).map(|i| 1.0 / (i as f64 + 3.0)).collect();
        Model::new(t1, t2, ScalingParams::new(means, sds).unwrap(), 0.7).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = sample_model();
        let text = render_model(&m);
        assert!(text.starts_with("MFNET 1\n27 4 3\n"));
        let back = parse_model(&text).unwrap();
        assert_eq!(back, m);
        for (a, b) in m.theta1().iter().zip(back.theta1()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn header_errors() {
        let text = render_model(&sample_model());
        assert!(matches!(
            parse_model(&text.replacen("MFNET 1", "MFNET 2", 1)),
            Err(Error::VersionUnsupported(2))
        ));
        assert!(matches!(
            parse_model(&text.replacen("MFNET", "MFNXT", 1)),
            Err(Error::BadMagic)
        ));
        assert!(matches!(parse_model(""), Err(Error::BadMagic)));
        assert!(matches!(
            parse_model(&text.replacen("27 4 3", "26 4 3", 1)),
            Err(Error::ShapeMismatch { expected: 27, found: 26, .. })
        ));
    }

    #[test]
    fn truncated_theta2() {
        let text = render_model(&sample_model());
        let lines: Vec<&str> = text.lines().collect();
        let truncated = lines[..lines.len() - 2].join("\n");
        match parse_model(&truncated) {
            Err(Error::ShapeMismatch { what, expected, found }) => {
                assert_eq!(what, "theta2 rows");
                assert_eq!((expected, found), (3, 1));
            }
            other => panic!("{other:?}"),
        }
        let extended = format!("{text}{}\n", lines.last().unwrap());
        assert!(matches!(
            parse_model(&extended),
            Err(Error::ShapeMismatch { expected: 3, found: 4, .. })
        ));
    }

    #[test]
    fn garbage_number() {
        let text = render_model(&sample_model());
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[2] = "abc".into();
        assert!(matches!(
            parse_model(&lines.join("\n")),
            Err(Error::ParseError { line: 3, .. })
        ));
    }
}
