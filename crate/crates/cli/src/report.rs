//! Report assembly and emission in human-readable text or TSV.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Tsv,
}

#[derive(Clone, Debug)]
pub struct Section {
    pub title: String,
    pub rows: Vec<(String, Vec<String>)>,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub sections: Vec<Section>,
    pub exit_code: i32,
}

impl Report {
    pub fn new(exit_code: i32) -> Self {
        Report {
            sections: Vec::new(),
            exit_code,
        }
    }

    pub fn section(&mut self, title: &str) -> &mut Section {
        self.sections.push(Section {
            title: title.to_string(),
            rows: Vec::new(),
        });
        self.sections.last_mut().unwrap()
    }

    pub fn emit(&self, format: Format) -> String {
        match format {
            Format::Text => {
                let mut out = String::new();
                for s in &self.sections {
                    out.push_str(&format!("[{}]\n", s.title));
                    let width = s.rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                    for (k, vals) in &s.rows {
                        out.push_str(&format!("{k:width$} = {}\n", vals.join(" "), width = width));
                    }
                    out.push('\n');
                }
                out
            }
            Format::Tsv => {
                let mut out = String::new();
                for s in &self.sections {
                    for (k, vals) in &s.rows {
                        out.push_str(k);
                        for v in vals {
                            out.push('\t');
                            out.push_str(v);
                        }
                        out.push('\n');
                    }
                }
                out
            }
        }
    }
}

impl Section {
    pub fn row(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.rows.push((key.to_string(), vec![value.into()]));
        self
    }

    pub fn row_vals(&mut self, key: &str, values: Vec<String>) -> &mut Self {
        self.rows.push((key.to_string(), values));
        self
    }
}

/// Nine significant digits for human-readable numeric output.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.8e}")
    }
}

/// Full round-trip float formatting for machine-readable output.
pub fn fmt_exact(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

pub fn fmt_vec(v: &[f64], format: Format) -> Vec<String> {
    v.iter()
        .map(|x| match format {
            Format::Text => fmt9(*x),
            Format::Tsv => fmt_exact(*x),
        })
        .collect()
}
