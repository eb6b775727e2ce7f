use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

/// Decimal with 17 significant digits; parses back to the same double.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Small CSV builder; fields never contain separators.
#[derive(Default)]
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn with_header<S: AsRef<str>>(fields: &[S]) -> Self {
        let mut c = Self::default();
        c.row(fields);
        c
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            self.buf.push_str(f.as_ref());
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_rows() {
        let mut c = Csv::with_header(&["a", "b"]);
        c.row(&["1", "2"]);
        assert_eq!(c.finish(), "a,b\n1,2\n");
    }
}
