//! Line-oriented problem-file parser and canonical emitter.
//!
//! The format is documented in the README; `#` starts a comment.  Parsing
//! produces line-anchored diagnostics; emission is canonical so that
//! parse-emit-parse is the identity on values.

use std::fmt;

use fullstab::plq::{PlqPiece, UnivariatePlq};
use fullstab::poly::Polynomial;
use fullstab::problem::{GnlpProblem, KktPoint};
use fullstab::Error as CoreError;

#[derive(Clone, Debug)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

/// Parsed problem file: raw sections plus optional experiment defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemFile {
    pub vars: usize,
    pub pdim: usize,
    pub objective: Polynomial,
    pub constraints: Vec<Polynomial>,
    pub outer: Vec<UnivariatePlq>,
    pub point: Vec<f64>,
    pub mult: Vec<f64>,
    pub param_v: Vec<f64>,
    pub param_u: Vec<f64>,
    pub param_p: Vec<f64>,
    pub delta: Option<f64>,
    pub radius: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

impl ProblemFile {
    /// Builds the optimization problem and its candidate KKT pair.
    pub fn to_problem(&self) -> Result<(GnlpProblem, KktPoint), CoreError> {
        if self.pdim > 0 {
            return Err(CoreError::Invalid(
                "file declares a parameter dimension; use the kummer command".into(),
            ));
        }
        let problem = GnlpProblem::new(
            self.vars,
            self.objective.clone(),
            self.constraints.clone(),
            self.outer.clone(),
        )?;
        let kkt = KktPoint::new(
            &problem,
            self.point.clone(),
            self.mult.clone(),
            self.param_v.clone(),
            self.param_u.clone(),
        )?;
        Ok((problem, kkt))
    }

    /// Pieces of the generalized equation `h(p, x) + subdiff g(x) ∋ v`.
    pub fn to_generalized_equation(
        &self,
    ) -> Result<(Vec<Polynomial>, Vec<UnivariatePlq>, Vec<f64>, Vec<f64>, Vec<f64>), CoreError>
    {
        if self.constraints.len() != self.vars {
            return Err(CoreError::DimensionMismatch {
                context: "generalized equation components",
                expected: self.vars,
                actual: self.constraints.len(),
            });
        }
        Ok((
            self.constraints.clone(),
            self.outer.clone(),
            self.param_p.clone(),
            self.point.clone(),
            self.param_v.clone(),
        ))
    }
}

fn parse_f64(tok: &str) -> Option<f64> {
    match tok {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => tok.parse().ok(),
    }
}

fn parse_vector(tokens: &[&str], line: usize) -> Result<Vec<f64>, Diagnostic> {
    tokens
        .iter()
        .map(|t| {
            parse_f64(t).ok_or_else(|| Diagnostic {
                line,
                message: format!("expected a number, found '{t}'"),
            })
        })
        .collect()
}

/// Parses a polynomial over `dim` variables from whitespace tokens.
fn parse_poly(tokens: &[&str], dim: usize, line: usize) -> Result<Polynomial, Vec<Diagnostic>> {
    let mut terms: Vec<(f64, Vec<u32>)> = Vec::new();
    let mut current: Option<(f64, Vec<u32>)> = None;
    let mut errors = Vec::new();
    for tok in tokens {
        if let Some(c) = parse_f64(tok) {
            if let Some(t) = current.take() {
                terms.push(t);
            }
            current = Some((c, vec![0; dim]));
            continue;
        }
        // factor: x<i> or x<i>^<k>
        let Some(rest) = tok.strip_prefix('x') else {
            errors.push(Diagnostic {
                line,
                message: format!("malformed monomial token '{tok}'"),
            });
            continue;
        };
        let (idx_str, exp) = match rest.split_once('^') {
            Some((i, k)) => (i, k.parse::<u32>().ok()),
            None => (rest, Some(1)),
        };
        let (Ok(idx), Some(exp)) = (idx_str.parse::<usize>(), exp) else {
            errors.push(Diagnostic {
                line,
                message: format!("malformed monomial token '{tok}'"),
            });
            continue;
        };
        if idx == 0 || idx > dim {
            errors.push(Diagnostic {
                line,
                message: format!("variable x{idx} out of range 1..={dim}"),
            });
            continue;
        }
        match current.as_mut() {
            None => errors.push(Diagnostic {
                line,
                message: format!("factor '{tok}' before any coefficient"),
            }),
            Some((_, exps)) => {
                if exps[idx - 1] != 0 {
                    errors.push(Diagnostic {
                        line,
                        message: format!(
                            "malformed monomial: repeated variable x{idx} (write x{idx}^k)"
                        ),
                    });
                } else {
                    exps[idx - 1] = exp;
                }
            }
        }
    }
    if let Some(t) = current.take() {
        terms.push(t);
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Polynomial::new(dim, terms).map_err(|e| {
        vec![Diagnostic {
            line,
            message: e.to_string(),
        }]
    })
}

/// Parses `(a,b,q,l,c)` groups.
fn parse_pieces(text: &str, line: usize) -> Result<Vec<PlqPiece>, Vec<Diagnostic>> {
    let mut pieces = Vec::new();
    let mut errors = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let Some(open) = rest.find('(') else {
            errors.push(Diagnostic {
                line,
                message: format!("expected '(' in piece list near '{rest}'"),
            });
            break;
        };
        let Some(close) = rest[open..].find(')') else {
            errors.push(Diagnostic {
                line,
                message: "unclosed piece tuple".into(),
            });
            break;
        };
        let inner = &rest[open + 1..open + close];
        let vals: Vec<Option<f64>> = inner.split(',').map(|t| parse_f64(t.trim())).collect();
        if vals.len() != 5 || vals.iter().any(|v| v.is_none()) {
            errors.push(Diagnostic {
                line,
                message: format!("piece tuple '({inner})' must be (a,b,q,l,c)"),
            });
        } else {
            let v: Vec<f64> = vals.into_iter().map(|v| v.unwrap()).collect();
            pieces.push(PlqPiece::new(v[0], v[1], v[2], v[3], v[4]));
        }
        rest = rest[open + close + 1..].trim();
    }
    if errors.is_empty() {
        Ok(pieces)
    } else {
        Err(errors)
    }
}

/// Parses the full problem file, reporting every diagnostic found.
pub fn parse_problem_file(text: &str) -> Result<ProblemFile, Vec<Diagnostic>> {
    let mut errors: Vec<Diagnostic> = Vec::new();
    let mut vars: Option<usize> = None;
    let mut pdim: usize = 0;
    let mut obj_line: Option<(usize, Vec<String>)> = None;
    let mut con_lines: Vec<(usize, usize, Vec<String>)> = Vec::new();
    let mut g_lines: Vec<(usize, usize, String)> = Vec::new();
    let mut point: Option<(usize, Vec<f64>)> = None;
    let mut mult: Option<(usize, Vec<f64>)> = None;
    let mut param_v: Option<(usize, Vec<f64>)> = None;
    let mut param_u: Option<(usize, Vec<f64>)> = None;
    let mut param_p: Option<(usize, Vec<f64>)> = None;
    let mut delta = None;
    let mut radius = None;
    let mut samples = None;
    let mut seed = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens[0] {
            "vars" => match tokens.get(1).and_then(|t| t.parse::<usize>().ok()) {
                Some(n) if n > 0 => vars = Some(n),
                _ => errors.push(Diagnostic {
                    line,
                    message: "vars needs a positive integer".into(),
                }),
            },
            "pdim" => match tokens.get(1).and_then(|t| t.parse::<usize>().ok()) {
                Some(d) => pdim = d,
                None => errors.push(Diagnostic {
                    line,
                    message: "pdim needs a nonnegative integer".into(),
                }),
            },
            "obj" => {
                obj_line = Some((line, tokens[1..].iter().map(|s| s.to_string()).collect()))
            }
            "con" => {
                // con <i>: <poly>
                let idx_tok = tokens.get(1).map(|t| t.trim_end_matches(':'));
                match idx_tok.and_then(|t| t.parse::<usize>().ok()) {
                    Some(i) if i > 0 => con_lines.push((
                        line,
                        i,
                        tokens[2..].iter().map(|s| s.to_string()).collect(),
                    )),
                    _ => errors.push(Diagnostic {
                        line,
                        message: "con needs a positive index like 'con 1: ...'".into(),
                    }),
                }
            }
            "g" => {
                let idx_tok = tokens.get(1).map(|t| t.trim_end_matches(':'));
                match idx_tok.and_then(|t| t.parse::<usize>().ok()) {
                    Some(i) if i > 0 => {
                        let rest = tokens[2..].join(" ");
                        g_lines.push((line, i, rest));
                    }
                    _ => errors.push(Diagnostic {
                        line,
                        message: "g needs a positive index like 'g 1: ineq'".into(),
                    }),
                }
            }
            "point" => match parse_vector(&tokens[1..], line) {
                Ok(v) => point = Some((line, v)),
                Err(d) => errors.push(d),
            },
            "mult" => match parse_vector(&tokens[1..], line) {
                Ok(v) => mult = Some((line, v)),
                Err(d) => errors.push(d),
            },
            "param" => match tokens.get(1) {
                Some(&"v") => match parse_vector(&tokens[2..], line) {
                    Ok(v) => param_v = Some((line, v)),
                    Err(d) => errors.push(d),
                },
                Some(&"u") => match parse_vector(&tokens[2..], line) {
                    Ok(v) => param_u = Some((line, v)),
                    Err(d) => errors.push(d),
                },
                Some(&"p") => match parse_vector(&tokens[2..], line) {
                    Ok(v) => param_p = Some((line, v)),
                    Err(d) => errors.push(d),
                },
                Some(&"delta") => match tokens.get(2).and_then(|t| parse_f64(t)) {
                    Some(x) => delta = Some(x),
                    None => errors.push(Diagnostic {
                        line,
                        message: "param delta needs a number".into(),
                    }),
                },
                Some(&"radius") => match tokens.get(2).and_then(|t| parse_f64(t)) {
                    Some(x) => radius = Some(x),
                    None => errors.push(Diagnostic {
                        line,
                        message: "param radius needs a number".into(),
                    }),
                },
                Some(&"samples") => match tokens.get(2).and_then(|t| t.parse().ok()) {
                    Some(x) => samples = Some(x),
                    None => errors.push(Diagnostic {
                        line,
                        message: "param samples needs an integer".into(),
                    }),
                },
                Some(&"seed") => match tokens.get(2).and_then(|t| t.parse().ok()) {
                    Some(x) => seed = Some(x),
                    None => errors.push(Diagnostic {
                        line,
                        message: "param seed needs an integer".into(),
                    }),
                },
                other => errors.push(Diagnostic {
                    line,
                    message: format!("unknown parameter '{other:?}'"),
                }),
            },
            other => errors.push(Diagnostic {
                line,
                message: format!("unknown directive '{other}'"),
            }),
        }
    }

    let Some(n) = vars else {
        errors.push(Diagnostic {
            line: 0,
            message: "missing 'vars' line".into(),
        });
        return Err(errors);
    };
    let poly_dim = n + pdim;

    let objective = match &obj_line {
        Some((line, toks)) => {
            let toks: Vec<&str> = toks.iter().map(|s| s.as_str()).collect();
            match parse_poly(&toks, poly_dim, *line) {
                Ok(p) => p,
                Err(mut e) => {
                    errors.append(&mut e);
                    Polynomial::zero(poly_dim)
                }
            }
        }
        None => {
            errors.push(Diagnostic {
                line: 0,
                message: "missing 'obj' line".into(),
            });
            Polynomial::zero(poly_dim)
        }
    };

    let m = con_lines.iter().map(|(_, i, _)| *i).max().unwrap_or(0);
    let mut constraints: Vec<Option<Polynomial>> = vec![None; m];
    for (line, i, toks) in &con_lines {
        let toks: Vec<&str> = toks.iter().map(|s| s.as_str()).collect();
        match parse_poly(&toks, poly_dim, *line) {
            Ok(p) => {
                if constraints[i - 1].replace(p).is_some() {
                    errors.push(Diagnostic {
                        line: *line,
                        message: format!("duplicate constraint index {i}"),
                    });
                }
            }
            Err(mut e) => errors.append(&mut e),
        }
    }
    let mut outer: Vec<Option<UnivariatePlq>> = vec![None; m.max(g_lines.iter().map(|(_, i, _)| *i).max().unwrap_or(0))];
    for (line, i, body) in &g_lines {
        let g = if body.trim() == "ineq" {
            Ok(UnivariatePlq::indicator_le_zero())
        } else if body.trim() == "eq" {
            Ok(UnivariatePlq::indicator_zero())
        } else if let Some(rest) = body.trim().strip_prefix("plq") {
            match parse_pieces(rest, *line) {
                Ok(pieces) => UnivariatePlq::new(pieces).map_err(|e| {
                    vec![Diagnostic {
                        line: *line,
                        message: e.to_string(),
                    }]
                }),
                Err(e) => Err(e),
            }
        } else {
            Err(vec![Diagnostic {
                line: *line,
                message: format!("unknown outer function '{body}'"),
            }])
        };
        match g {
            Ok(g) => {
                if *i <= outer.len() && outer[i - 1].replace(g).is_some() {
                    errors.push(Diagnostic {
                        line: *line,
                        message: format!("duplicate outer function index {i}"),
                    });
                }
            }
            Err(mut e) => errors.append(&mut e),
        }
    }
    for (i, c) in constraints.iter().enumerate() {
        if c.is_none() {
            errors.push(Diagnostic {
                line: 0,
                message: format!("missing 'con {}' line", i + 1),
            });
        }
    }
    for (i, g) in outer.iter().enumerate() {
        if g.is_none() {
            errors.push(Diagnostic {
                line: 0,
                message: format!("missing 'g {}' line", i + 1),
            });
        }
    }
    if outer.len() != m {
        errors.push(Diagnostic {
            line: 0,
            message: format!(
                "{} constraints but {} outer functions",
                m,
                outer.len()
            ),
        });
    }

    let point_v = match &point {
        Some((line, v)) => {
            if v.len() != n {
                errors.push(Diagnostic {
                    line: *line,
                    message: format!("point needs {n} coordinates, found {}", v.len()),
                });
            }
            v.clone()
        }
        None => {
            errors.push(Diagnostic {
                line: 0,
                message: "missing 'point' line".into(),
            });
            vec![0.0; n]
        }
    };
    let mult_v = match &mult {
        Some((line, v)) => {
            if v.len() != m {
                errors.push(Diagnostic {
                    line: *line,
                    message: format!("mult needs {m} coordinates, found {}", v.len()),
                });
            }
            v.clone()
        }
        None => vec![0.0; m],
    };
    let check_len = |opt: &Option<(usize, Vec<f64>)>, want: usize, what: &str, errors: &mut Vec<Diagnostic>| -> Vec<f64> {
        match opt {
            Some((line, v)) => {
                if v.len() != want {
                    errors.push(Diagnostic {
                        line: *line,
                        message: format!("param {what} needs {want} coordinates, found {}", v.len()),
                    });
                }
                v.clone()
            }
            None => vec![0.0; want],
        }
    };
    let v = check_len(&param_v, n, "v", &mut errors);
    let u = check_len(&param_u, m, "u", &mut errors);
    let p = check_len(&param_p, pdim, "p", &mut errors);

    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(ProblemFile {
        vars: n,
        pdim,
        objective,
        constraints: constraints.into_iter().map(|c| c.unwrap()).collect(),
        outer: outer.into_iter().map(|g| g.unwrap()).collect(),
        point: point_v,
        mult: mult_v,
        param_v: v,
        param_u: u,
        param_p: p,
        delta,
        radius,
        samples,
        seed,
    })
}

fn emit_poly(p: &Polynomial) -> String {
    let mut parts = Vec::new();
    for (c, exps) in p.terms() {
        let mut term = format!("{c}");
        for (j, &e) in exps.iter().enumerate() {
            if e == 1 {
                term.push_str(&format!(" x{}", j + 1));
            } else if e > 1 {
                term.push_str(&format!(" x{}^{e}", j + 1));
            }
        }
        parts.push(term);
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join("  ")
    }
}

fn emit_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

fn emit_outer(g: &UnivariatePlq) -> String {
    use fullstab::plq::IndicatorKind;
    match g.indicator_kind() {
        Some(IndicatorKind::HalfLine { bound }) if bound == 0.0 => "ineq".into(),
        Some(IndicatorKind::Point { at }) if at == 0.0 => "eq".into(),
        _ => {
            let pieces: Vec<String> = g
                .pieces()
                .iter()
                .map(|p| {
                    format!(
                        "({},{},{},{},{})",
                        emit_f64(p.lo),
                        emit_f64(p.hi),
                        emit_f64(p.quad),
                        emit_f64(p.lin),
                        emit_f64(p.constant)
                    )
                })
                .collect();
            format!("plq {}", pieces.join(" "))
        }
    }
}

fn emit_vec(v: &[f64]) -> String {
    v.iter()
        .map(|x| emit_f64(*x))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Canonical emission; `parse(emit(parse(text)))` equals `parse(text)`.
pub fn emit_problem_file(f: &ProblemFile) -> String {
    let mut out = String::new();
    out.push_str(&format!("vars {}\n", f.vars));
    if f.pdim > 0 {
        out.push_str(&format!("pdim {}\n", f.pdim));
    }
    out.push_str(&format!("obj {}\n", emit_poly(&f.objective)));
    for (i, c) in f.constraints.iter().enumerate() {
        out.push_str(&format!("con {}: {}\n", i + 1, emit_poly(c)));
    }
    for (i, g) in f.outer.iter().enumerate() {
        out.push_str(&format!("g {}: {}\n", i + 1, emit_outer(g)));
    }
    out.push_str(&format!("point {}\n", emit_vec(&f.point)));
    if !f.mult.is_empty() {
        out.push_str(&format!("mult {}\n", emit_vec(&f.mult)));
    }
    if f.param_v.iter().any(|x| *x != 0.0) {
        out.push_str(&format!("param v {}\n", emit_vec(&f.param_v)));
    }
    if f.param_u.iter().any(|x| *x != 0.0) {
        out.push_str(&format!("param u {}\n", emit_vec(&f.param_u)));
    }
    if f.pdim > 0 {
        out.push_str(&format!("param p {}\n", emit_vec(&f.param_p)));
    }
    if let Some(x) = f.delta {
        out.push_str(&format!("param delta {}\n", emit_f64(x)));
    }
    if let Some(x) = f.radius {
        out.push_str(&format!("param radius {}\n", emit_f64(x)));
    }
    if let Some(x) = f.samples {
        out.push_str(&format!("param samples {x}\n"));
    }
    if let Some(x) = f.seed {
        out.push_str(&format!("param seed {x}\n"));
    }
    out
}
