//! Minimal writer for the structured-text reports (a TOML subset).
//!
//! Floats are always printed in scientific notation with 17 significant
//! digits so that reports are stable under diffing and re-parse to the exact
//! same `f64`.

use std::fmt::Write as _;

/// Formats a float with 17 significant digits in TOML-compatible syntax.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        // normalise -0.0 so reports do not differ by the sign of zero
        let x = if x == 0.0 { 0.0 } else { x };
        format!("{x:.16e}")
    }
}

fn fmt_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Debug, Default, Clone)]
pub struct TextReport {
    buf: String,
}

impl TextReport {
    pub fn new(schema: &str) -> Self {
        let mut r = Self::default();
        r.str("schema", schema);
        r
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        let _ = write!(self.buf, "\n[{name}]\n");
        self
    }

    pub fn array_section(&mut self, name: &str) -> &mut Self {
        let _ = write!(self.buf, "\n[[{name}]]\n");
        self
    }

    pub fn str(&mut self, key: &str, value: &str) -> &mut Self {
        let _ = writeln!(self.buf, "{key} = {}", fmt_str(value));
        self
    }

    pub fn f64(&mut self, key: &str, value: f64) -> &mut Self {
        let _ = writeln!(self.buf, "{key} = {}", fmt_f64(value));
        self
    }

    pub fn int(&mut self, key: &str, value: i64) -> &mut Self {
        let _ = writeln!(self.buf, "{key} = {value}");
        self
    }

    pub fn bool(&mut self, key: &str, value: bool) -> &mut Self {
        let _ = writeln!(self.buf, "{key} = {value}");
        self
    }

    pub fn f64_list(&mut self, key: &str, values: &[f64]) -> &mut Self {
        let items: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(self.buf, "{key} = [{}]", items.join(", "));
        self
    }

    pub fn int_list(&mut self, key: &str, values: &[usize]) -> &mut Self {
        let items: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(self.buf, "{key} = [{}]", items.join(", "));
        self
    }

    pub fn matrix(&mut self, key: &str, rows: &[Vec<f64>]) -> &mut Self {
        let _ = writeln!(self.buf, "{key} = [");
        for row in rows {
            let items: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            let _ = writeln!(self.buf, "  [{}],", items.join(", "));
        }
        let _ = writeln!(self.buf, "]");
        self
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.buf, "# {text}");
        self
    }

    pub fn finish(self) -> String {
        self.buf
    }
}
