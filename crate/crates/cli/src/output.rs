//! Deterministic CSV emission: a `# schema` line, the config echoed as
//! comments, one header row, then data rows with floats at 17 significant
//! digits.

use crate::config::ExperimentConfig;
use std::fmt::Write as _;

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(&'static str),
    Owned(String),
    Float(f64),
    Int(i64),
    UInt(u64),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::UInt(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::UInt(v as u64)
    }
}
impl From<&'static str> for Cell {
    fn from(v: &'static str) -> Self {
        Cell::Str(v)
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Owned(v)
    }
}

pub struct CsvDocument {
    buffer: String,
    columns: usize,
}

impl CsvDocument {
    pub fn new(config: &ExperimentConfig, header: &[&str]) -> Self {
        let mut buffer = String::new();
        writeln!(buffer, "# schema {}", config.experiment.schema()).unwrap();
        for line in config.echo_lines() {
            writeln!(buffer, "{line}").unwrap();
        }
        writeln!(buffer, "{}", header.join(",")).unwrap();
        CsvDocument {
            buffer,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.columns, "row width disagrees with header");
        let mut first = true;
        for c in cells {
            if !first {
                self.buffer.push(',');
            }
            first = false;
            match c {
                Cell::Str(s) => self.buffer.push_str(s),
                Cell::Owned(s) => self.buffer.push_str(s),
                Cell::Float(v) => self.buffer.push_str(&fmt_f64(*v)),
                Cell::Int(v) => {
                    write!(self.buffer, "{v}").unwrap();
                }
                Cell::UInt(v) => {
                    write!(self.buffer, "{v}").unwrap();
                }
                Cell::Empty => {}
            }
        }
        self.buffer.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buffer
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_17_significant_digits() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        let s = fmt_f64(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        let parsed: f64 = s.parse().unwrap();
        assert_eq!(parsed, std::f64::consts::PI);
    }
}
