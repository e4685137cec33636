//! Number and table formatting for CSV output.

use std::fmt::Write as _;

/// `x` with 17 significant digits, trailing zeros dropped, switching to
/// exponent notation outside `[1e-4, 1e17)` (the C `%.17g` layout).
pub fn g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("LowerExp always has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let digits = (16 - exp) as usize;
        trim_zeros(&format!("{x:.digits$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A CSV table built in memory; LF line endings, header always present.
#[derive(Debug, Clone)]
pub struct Table {
    width: usize,
    text: String,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut text = header
            .iter()
            .map(|h| h.as_ref())
            .collect::<Vec<_>>()
            .join(",");
        text.push('\n');
        Table {
            width: header.len(),
            text,
        }
    }

    /// Appends a row; `None` cells are left empty.
    pub fn push(&mut self, row: &[Option<f64>]) {
        assert_eq!(row.len(), self.width, "row width must match header");
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            if let Some(v) = cell {
                let _ = write!(self.text, "{}", g17(*v));
            }
        }
        self.text.push('\n');
    }

    pub fn push_values(&mut self, row: &[f64]) {
        let cells: Vec<Option<f64>> = row.iter().copied().map(Some).collect();
        self.push(&cells);
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}
