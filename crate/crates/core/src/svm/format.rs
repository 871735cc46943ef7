//! The line-oriented libsvm model text format.
//!
//! ```text
//! svm_type c_svc
//! kernel_type rbf
//! gamma 0.5
//! nr_class 3
//! total_sv 7
//! rho 0.1 -0.2 0.3
//! label 0 1 2
//! nr_sv 3 2 2
//! SV
//! 0.5 -1 1:0.25 3:1
//! ...
//! ```
//!
//! Each SV line holds `nr_class − 1` dual coefficients followed by sparse
//! 1-based `index:value` features.

use std::fmt::Write as _;
use std::path::Path;

use super::{Kernel, SvmError, SvmModel, SvmType};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("model is inconsistent: {0}")]
    Model(#[from] SvmError),
    #[error("cannot read model file: {0}")]
    Io(#[from] std::io::Error),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        msg: msg.into(),
    }
}

#[derive(Default)]
struct Header {
    svm_type: Option<SvmType>,
    kernel_type: Option<String>,
    degree: Option<u32>,
    gamma: Option<f64>,
    coef0: Option<f64>,
    nr_class: Option<usize>,
    total_sv: Option<usize>,
    rho: Option<Vec<f64>>,
    label: Option<Vec<i64>>,
    nr_sv: Option<Vec<usize>>,
    prob_a: Option<Vec<f64>>,
    prob_b: Option<Vec<f64>>,
    rho_line: usize,
    label_line: usize,
}

fn num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, ParseError> {
    tok.parse()
        .map_err(|_| syntax(line, format!("invalid {what} '{tok}'")))
}

fn finite(tok: &str, line: usize, what: &str) -> Result<f64, ParseError> {
    let v: f64 = num(tok, line, what)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(syntax(line, format!("non-finite {what} '{tok}'")))
    }
}

fn list<T: std::str::FromStr>(
    toks: &[&str],
    line: usize,
    what: &str,
) -> Result<Vec<T>, ParseError> {
    toks.iter().map(|t| num(t, line, what)).collect()
}

/// Parses a model. The input dimension is the largest feature index unless
/// `dim` is given (it must not be smaller).
pub fn parse_model(text: &str, dim: Option<usize>) -> Result<SvmModel, ParseError> {
    let mut h = Header::default();
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let mut sv_start = None;
    for (ln, raw) in lines.by_ref() {
        let toks: Vec<&str> = raw.split_whitespace().collect();
        let Some((&key, rest)) = toks.split_first() else {
            continue;
        };
        let one = || -> Result<&str, ParseError> {
            match rest {
                [v] => Ok(*v),
                _ => Err(syntax(ln, format!("'{key}' takes exactly one value"))),
            }
        };
        match key {
            "svm_type" => {
                h.svm_type = Some(match one()? {
                    "c_svc" => SvmType::CSvc,
                    "nu_svc" => SvmType::NuSvc,
                    other => return Err(syntax(ln, format!("unsupported svm_type '{other}'"))),
                })
            }
            "kernel_type" => h.kernel_type = Some(one()?.to_string()),
            "degree" => h.degree = Some(num(one()?, ln, "degree")?),
            "gamma" => h.gamma = Some(finite(one()?, ln, "gamma")?),
            "coef0" => h.coef0 = Some(finite(one()?, ln, "coef0")?),
            "nr_class" => h.nr_class = Some(num(one()?, ln, "nr_class")?),
            "total_sv" => h.total_sv = Some(num(one()?, ln, "total_sv")?),
            "rho" => {
                h.rho_line = ln;
                h.rho = Some(
                    rest.iter()
                        .map(|t| finite(t, ln, "rho"))
                        .collect::<Result<_, _>>()?,
                )
            }
            "label" => {
                h.label_line = ln;
                h.label = Some(list(rest, ln, "label")?)
            }
            "nr_sv" => h.nr_sv = Some(list(rest, ln, "nr_sv")?),
            "probA" => h.prob_a = Some(list(rest, ln, "probA")?),
            "probB" => h.prob_b = Some(list(rest, ln, "probB")?),
            "SV" => {
                if !rest.is_empty() {
                    return Err(syntax(ln, "unexpected tokens after 'SV'"));
                }
                sv_start = Some(ln);
                break;
            }
            other => return Err(syntax(ln, format!("unknown header key '{other}'"))),
        }
    }
    let sv_line = sv_start.ok_or_else(|| syntax(text.lines().count(), "missing 'SV' section"))?;
    let need = |what: &str| syntax(sv_line, format!("header lacks '{what}'"));

    let svm_type = h.svm_type.ok_or_else(|| need("svm_type"))?;
    let kernel = match h
        .kernel_type
        .as_deref()
        .ok_or_else(|| need("kernel_type"))?
    {
        "linear" => Kernel::Linear,
        "polynomial" => Kernel::Polynomial {
            degree: h.degree.ok_or_else(|| need("degree"))?,
            gamma: h.gamma.ok_or_else(|| need("gamma"))?,
            coef0: h.coef0.unwrap_or(0.0),
        },
        "rbf" => Kernel::Rbf {
            gamma: h.gamma.ok_or_else(|| need("gamma"))?,
        },
        other => {
            return Err(syntax(
                sv_line,
                format!("unsupported kernel_type '{other}'"),
            ))
        }
    };
    let m = h.nr_class.ok_or_else(|| need("nr_class"))?;
    if m < 2 {
        return Err(syntax(sv_line, "nr_class must be at least 2"));
    }
    let total = h.total_sv.ok_or_else(|| need("total_sv"))?;
    let rho = h.rho.ok_or_else(|| need("rho"))?;
    let labels = h.label.ok_or_else(|| need("label"))?;
    let nr_sv = h.nr_sv.ok_or_else(|| need("nr_sv"))?;
    if rho.len() != m * (m - 1) / 2 {
        return Err(syntax(
            h.rho_line,
            format!(
                "nr_class {m} needs {} rho values, found {}",
                m * (m - 1) / 2,
                rho.len()
            ),
        ));
    }
    if labels.len() != m || nr_sv.len() != m {
        return Err(syntax(
            h.label_line,
            format!("label and nr_sv need {m} entries each"),
        ));
    }
    if nr_sv.iter().sum::<usize>() != total {
        return Err(syntax(sv_line, "nr_sv does not sum to total_sv"));
    }

    let mut coeffs = vec![Vec::with_capacity(total); m - 1];
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::with_capacity(total);
    let mut max_index = 0usize;
    for (ln, raw) in lines {
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if sparse.len() == total {
            return Err(syntax(
                ln,
                format!("more than total_sv = {total} support vectors"),
            ));
        }
        if toks.len() < m - 1 {
            return Err(syntax(ln, format!("expected {} dual coefficients", m - 1)));
        }
        for (row, t) in coeffs.iter_mut().zip(&toks[..m - 1]) {
            if t.contains(':') {
                return Err(syntax(ln, format!("expected {} dual coefficients", m - 1)));
            }
            row.push(finite(t, ln, "coefficient")?);
        }
        let mut feats = Vec::with_capacity(toks.len() + 1 - m);
        let mut last = 0usize;
        for t in &toks[m - 1..] {
            let (i, v) = t
                .split_once(':')
                .ok_or_else(|| syntax(ln, format!("expected index:value, got '{t}'")))?;
            let i: usize = num(i, ln, "feature index")?;
            if i == 0 {
                return Err(syntax(ln, "feature indices are 1-based"));
            }
            if i <= last {
                return Err(syntax(ln, "feature indices must increase"));
            }
            last = i;
            feats.push((i, finite(v, ln, "feature value")?));
        }
        max_index = max_index.max(last);
        sparse.push(feats);
    }
    if sparse.len() != total {
        return Err(syntax(
            text.lines().count(),
            format!(
                "found {} support vectors, total_sv is {total}",
                sparse.len()
            ),
        ));
    }
    let n = match dim {
        Some(d) if d < max_index => {
            return Err(syntax(
                sv_line,
                format!("feature index {max_index} exceeds dimension {d}"),
            ));
        }
        Some(d) => d,
        None => max_index,
    };
    let svs = sparse
        .into_iter()
        .map(|f| {
            let mut v = vec![0.0; n];
            for (i, x) in f {
                v[i - 1] = x;
            }
            v
        })
        .collect();
    let mut model = SvmModel::new(svm_type, kernel, labels, nr_sv, svs, coeffs, rho)?;
    if total == 0 {
        model.set_dim(n)?;
    }
    model.prob_a = h.prob_a;
    model.prob_b = h.prob_b;
    Ok(model)
}

impl SvmModel {
    pub fn load(path: impl AsRef<Path>, dim: Option<usize>) -> Result<SvmModel, ParseError> {
        let text = std::fs::read_to_string(path)?;
        parse_model(&text, dim)
    }

    /// Writes the model in the text format; numbers use the shortest
    /// representation that parses back to the same value.
    pub fn to_libsvm_string(&self) -> String {
        let mut s = String::new();
        let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(" ");
        writeln!(s, "svm_type {}", self.svm_type).unwrap();
        match self.kernel {
            Kernel::Linear => writeln!(s, "kernel_type linear").unwrap(),
            Kernel::Polynomial {
                degree,
                gamma,
                coef0,
            } => writeln!(
                s,
                "kernel_type polynomial\ndegree {degree}\ngamma {gamma}\ncoef0 {coef0}"
            )
            .unwrap(),
            Kernel::Rbf { gamma } => writeln!(s, "kernel_type rbf\ngamma {gamma}").unwrap(),
        }
        writeln!(s, "nr_class {}", self.num_classes()).unwrap();
        writeln!(s, "total_sv {}", self.support_vectors.len()).unwrap();
        writeln!(s, "rho {}", join(&mut self.rho.iter().map(f64::to_string))).unwrap();
        writeln!(
            s,
            "label {}",
            join(&mut self.labels.iter().map(i64::to_string))
        )
        .unwrap();
        if let Some(p) = &self.prob_a {
            writeln!(s, "probA {}", join(&mut p.iter().map(f64::to_string))).unwrap();
        }
        if let Some(p) = &self.prob_b {
            writeln!(s, "probB {}", join(&mut p.iter().map(f64::to_string))).unwrap();
        }
        writeln!(
            s,
            "nr_sv {}",
            join(&mut self.nr_sv.iter().map(usize::to_string))
        )
        .unwrap();
        writeln!(s, "SV").unwrap();
        for (k, sv) in self.support_vectors.iter().enumerate() {
            let mut parts: Vec<String> =
                self.dual_coeffs.iter().map(|r| r[k].to_string()).collect();
            parts.extend(
                sv.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, v)| format!("{}:{}", i + 1, v)),
            );
            writeln!(s, "{}", parts.join(" ")).unwrap();
        }
        s
    }
}
