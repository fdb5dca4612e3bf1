use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// Formats `x` with six significant digits, switching to exponent notation
/// outside `[1e-4, 1e6)`. Trailing zeros are dropped.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// A CSV table held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: &'static str,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &'static str) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.split(',').count());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", self.header);
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_float(0.825811234), "0.825811");
        assert_eq!(fmt_float(60.0), "60");
        assert_eq!(fmt_float(94.2277), "94.2277");
        assert_eq!(fmt_float(53432.4), "53432.4");
        assert_eq!(fmt_float(1234567.0), "1.23457e6");
        assert_eq!(fmt_float(0.0000123456789), "1.23457e-5");
        assert_eq!(fmt_float(0.000123456789), "0.000123457");
        assert_eq!(fmt_float(9.9999996), "10");
        assert_eq!(fmt_float(-0.5), "-0.5");
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(f64::NAN), "nan");
        assert_eq!(fmt_float(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn formatted_values_survive_a_parse_round_trip() {
        let mut x = 1.234_567_891e-9;
        while x < 1e9 {
            for v in [x, -x, x * 7.77] {
                let s = fmt_float(v);
                let back: f64 = s.parse().unwrap();
                assert_eq!(fmt_float(back), s);
                assert!((back - v).abs() <= 5e-6 * v.abs(), "{v} -> {s}");
            }
            x *= 3.3;
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("a,b");
        t.push(vec!["1".into(), "x".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,x\n");
    }
}
