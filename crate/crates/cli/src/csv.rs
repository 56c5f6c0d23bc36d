//! Minimal CSV emission. Reals are written in scientific notation with a
//! fixed number of significant digits; 17 digits round-trip every `f64`.

use std::fmt::Write;

pub enum Field {
    Real(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Real(v)
    }
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::Int(v as u64)
    }
}

impl From<u64> for Field {
    fn from(v: u64) -> Self {
        Field::Int(v)
    }
}

impl From<bool> for Field {
    fn from(v: bool) -> Self {
        Field::Text(v.to_string())
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field::Text(v.to_string())
    }
}

impl From<String> for Field {
    fn from(v: String) -> Self {
        Field::Text(v)
    }
}

pub struct Csv {
    precision: usize,
    text: String,
}

impl Csv {
    pub fn new(precision: usize) -> Self {
        Csv {
            precision: precision.clamp(1, 17),
            text: String::new(),
        }
    }

    pub fn header<S: AsRef<str>>(&mut self, names: impl IntoIterator<Item = S>) {
        let names: Vec<String> = names.into_iter().map(|s| s.as_ref().to_string()).collect();
        self.text.push_str(&names.join(","));
        self.text.push('\n');
    }

    pub fn row(&mut self, fields: impl IntoIterator<Item = Field>) {
        let mut first = true;
        for field in fields {
            if !first {
                self.text.push(',');
            }
            first = false;
            self.push_field(field);
        }
        self.text.push('\n');
    }

    /// A `# key=value,...` line, outside the table proper.
    pub fn comment(&mut self, pairs: &[(&str, f64)]) {
        self.text.push_str("# ");
        for (i, (key, value)) in pairs.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(key);
            self.text.push('=');
            self.push_field(Field::Real(*value));
        }
        self.text.push('\n');
    }

    pub fn real(&self, v: f64) -> String {
        if v.is_finite() {
            format!("{:.*e}", self.precision - 1, v)
        } else {
            v.to_string()
        }
    }

    fn push_field(&mut self, field: Field) {
        match field {
            Field::Real(v) => {
                let s = self.real(v);
                self.text.push_str(&s);
            }
            Field::Int(v) => {
                let _ = write!(self.text, "{v}");
            }
            Field::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    self.text.push('"');
                    self.text.push_str(&s.replace('"', "\"\""));
                    self.text.push('"');
                } else {
                    self.text.push_str(&s);
                }
            }
        }
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        let csv = Csv::new(17);
        for v in [0.1, -0.5, 3.5, 1.0 / 3.0, f64::MIN_POSITIVE, 1e300] {
            let s = csv.real(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(csv.real(-0.5), "-5.0000000000000000e-1");
    }

    #[test]
    fn rows_and_quoting() {
        let mut csv = Csv::new(3);
        csv.header(["a", "b", "c"]);
        csv.row([Field::from(1.0), Field::from(2usize), Field::from("x,y")]);
        csv.comment(&[("slope", 0.5)]);
        assert_eq!(csv.into_string(), "a,b,c\n1.00e0,2,\"x,y\"\n# slope=5.00e-1\n");
    }
}
