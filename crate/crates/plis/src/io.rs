//! Delimited-text input and per-hypothesis CSV output.
//!
//! Input files hold one observation per row. Fields may be separated by
//! commas, tabs, semicolons or spaces; `#` starts a comment. An optional
//! second column labels the row `test` or `null`, so one file can carry both
//! the data and a labelled null pool.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use plis_core::hmm::HmmParams;
use serde::{Deserialize, Serialize};

use crate::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq)]
pub struct InputData {
    pub x: Vec<f64>,
    /// Rows labelled `null`, if any.
    pub nulls: Option<Vec<f64>>,
}

fn read_text(path: &Path) -> AppResult<String> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

/// Non-empty, comment-stripped rows with their 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(n, raw)| {
        let line = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> =
            line.split(|c: char| c == ',' || c == ';' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        (!fields.is_empty()).then_some((n + 1, fields))
    })
}

fn number(field: &str, path: &Path, line: usize) -> AppResult<f64> {
    let bad = |message: String| AppError::Input { path: path.to_path_buf(), line, message };
    let v: f64 = field.parse().map_err(|_| bad(format!("`{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(bad(format!("`{field}` is not finite")));
    }
    Ok(v)
}

pub fn parse_observations(text: &str, path: &Path) -> AppResult<InputData> {
    let mut x = Vec::new();
    let mut nulls = Vec::new();
    let mut labelled = false;
    for (line, fields) in records(text) {
        let err = |message: String| AppError::Input { path: path.to_path_buf(), line, message };
        let v = number(fields[0], path, line)?;
        match fields.get(1).map(|l| l.to_ascii_lowercase()) {
            None => x.push(v),
            Some(l) if l == "test" => {
                labelled = true;
                x.push(v)
            }
            Some(l) if l == "null" => {
                labelled = true;
                nulls.push(v)
            }
            Some(l) => return Err(err(format!("unknown label `{l}`; expected `test` or `null`"))),
        }
        if fields.len() > 2 {
            return Err(err(format!("expected at most 2 fields, found {}", fields.len())));
        }
    }
    if x.is_empty() {
        return Err(AppError::Input {
            path: path.to_path_buf(),
            line: text.lines().count(),
            message: "no test observations".into(),
        });
    }
    Ok(InputData { x, nulls: labelled.then_some(nulls) })
}

pub fn read_observations(path: &Path) -> AppResult<InputData> {
    parse_observations(&read_text(path)?, path)
}

/// A single column of values.
pub fn parse_values(text: &str, path: &Path) -> AppResult<Vec<f64>> {
    let mut out = Vec::new();
    for (line, fields) in records(text) {
        if fields.len() != 1 {
            return Err(AppError::Input { path: path.to_path_buf(), line, message: "expected one value per row".into() });
        }
        out.push(number(fields[0], path, line)?);
    }
    if out.is_empty() {
        return Err(AppError::Input { path: path.to_path_buf(), line: 0, message: "file holds no values".into() });
    }
    Ok(out)
}

pub fn read_values(path: &Path) -> AppResult<Vec<f64>> {
    parse_values(&read_text(path)?, path)
}

/// Two columns, `s_x` and `s_y`.
pub fn parse_score_pairs(text: &str, path: &Path) -> AppResult<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (line, fields) in records(text) {
        if fields.len() != 2 {
            return Err(AppError::Input { path: path.to_path_buf(), line, message: "expected `s_x, s_y`".into() });
        }
        out.push((number(fields[0], path, line)?, number(fields[1], path, line)?));
    }
    if out.is_empty() {
        return Err(AppError::Input { path: path.to_path_buf(), line: 0, message: "file holds no score pairs".into() });
    }
    Ok(out)
}

pub fn read_score_pairs(path: &Path) -> AppResult<Vec<(f64, f64)>> {
    parse_score_pairs(&read_text(path)?, path)
}

pub fn read_hmm_params(path: &Path) -> AppResult<HmmParams> {
    HmmParams::from_kv(&read_text(path)?).map_err(|e| AppError::config(format!("{}: {e}", path.display())))
}

/// One line of `plis test` output. Fields a method does not produce are
/// left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRow {
    /// 1-based position in the input.
    pub index: usize,
    pub x: Option<f64>,
    pub s_x: Option<f64>,
    pub s_y: Option<f64>,
    pub q_value: Option<f64>,
    pub e_value: Option<f64>,
    pub rejected: bool,
}

pub fn write_output<W: Write>(out: W, rows: &[OutputRow]) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| AppError::io("<output>", e))?;
    Ok(())
}

pub fn read_output<R: Read>(input: R) -> AppResult<Vec<OutputRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(AppError::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("in.txt")
    }

    #[test]
    fn plain_column_with_comments() {
        let d = parse_observations("# header\n1.5\n\n-2e-1  # trailing\n3\n", p()).unwrap();
        assert_eq!(d.x, vec![1.5, -0.2, 3.0]);
        assert_eq!(d.nulls, None);
    }

    #[test]
    fn label_column_splits_the_pool() {
        let d = parse_observations("1.0,test\n0.1,null\n2.0\t TEST\n-0.3 null\n", p()).unwrap();
        assert_eq!(d.x, vec![1.0, 2.0]);
        assert_eq!(d.nulls, Some(vec![0.1, -0.3]));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let msg = |t: &str| parse_observations(t, p()).unwrap_err().to_string();
        assert_eq!(msg("1\n2\nabc\n"), "in.txt:3: `abc` is not a number");
        assert_eq!(msg("1\n\n2,maybe\n"), "in.txt:3: unknown label `maybe`; expected `test` or `null`");
        assert_eq!(msg("1,test,3\n"), "in.txt:1: expected at most 2 fields, found 3");
        assert_eq!(msg("inf\n"), "in.txt:1: `inf` is not finite");
        assert!(msg("").contains("no test observations"));
        assert!(msg("0.5,null\n").contains("no test observations"));
    }

    #[test]
    fn values_and_pairs() {
        assert_eq!(parse_values("1\n2\n", p()).unwrap(), vec![1.0, 2.0]);
        assert!(parse_values("1 2\n", p()).is_err());
        assert_eq!(parse_score_pairs("0.1,0.9\n0.2 0.8\n", p()).unwrap(), vec![(0.1, 0.9), (0.2, 0.8)]);
        let e = parse_score_pairs("0.1,0.9\n0.2\n", p()).unwrap_err().to_string();
        assert!(e.starts_with("in.txt:2:"), "{e}");
    }

    #[test]
    fn output_round_trip() {
        let rows = vec![
            OutputRow { index: 1, x: Some(0.1 + 0.2), s_x: Some(1e-300), s_y: Some(f64::MAX), q_value: Some(1.0 / 3.0), e_value: Some(4.0), rejected: true },
            OutputRow { index: 2, x: None, s_x: None, s_y: None, q_value: None, e_value: None, rejected: false },
        ];
        let mut buf = Vec::new();
        write_output(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("index,x,s_x,s_y,q_value,e_value,rejected\n"));
        assert!(text.contains("\n2,,,,,,false\n"));
        assert_eq!(read_output(&buf[..]).unwrap(), rows);
    }
}
