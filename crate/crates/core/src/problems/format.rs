//! Line-oriented text format for problems.
//!
//! ```text
//! problem <name>
//! n <int>
//! m <int>
//! objective
//! term <coef> <e1> ... <en>
//! constraint <k>                   # 1-based
//! term <coef> <e1> ... <en>
//! meta zstar <v1> ... <vn>
//! meta slam_vertex <v1> ... <vm>   # repeatable
//! meta bplus <i> ...               # 1-based
//! meta mfcq <v1> ... <vn>
//! ```
//!
//! `#` starts a comment. Weakly active indices are not stored; they are the
//! constraints active at `zstar` that are not listed in `bplus`.

use std::fmt::Write as _;

use crate::error::ProblemError;
use crate::index_set::IndexSet;
use crate::model::{active_at, GroundTruth, Problem, ACTIVE_TOL};
use crate::poly::{PolyFunction, Term};

pub fn serialize_problem(p: &Problem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "problem {}", p.name());
    let _ = writeln!(out, "n {}", p.n());
    let _ = writeln!(out, "m {}", p.m());
    out.push_str("objective\n");
    write_terms(&mut out, p.objective());
    for (k, c) in p.constraints().iter().enumerate() {
        let _ = writeln!(out, "constraint {}", k + 1);
        write_terms(&mut out, c);
    }
    if let Some(gt) = p.metadata() {
        let _ = writeln!(out, "meta zstar{}", join_floats(&gt.z_star));
        for v in &gt.slam_vertices {
            let _ = writeln!(out, "meta slam_vertex{}", join_floats(v));
        }
        out.push_str("meta bplus");
        for i in gt.b_plus.to_one_based() {
            let _ = write!(out, " {i}");
        }
        out.push('\n');
        if let Some(cert) = &gt.mfcq_certificate {
            let _ = writeln!(out, "meta mfcq{}", join_floats(cert));
        }
    }
    out
}

fn write_terms(out: &mut String, f: &PolyFunction) {
    for t in f.terms() {
        let _ = write!(out, "term {:?}", t.coef);
        for e in &t.exponents {
            let _ = write!(out, " {e}");
        }
        out.push('\n');
    }
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| format!(" {x:?}")).collect()
}

enum Section {
    Header,
    Objective,
    Constraint(usize),
}

#[derive(Default)]
struct Meta {
    zstar: Option<(usize, Vec<f64>)>,
    vertices: Vec<Vec<f64>>,
    bplus: Option<Vec<usize>>,
    mfcq: Option<Vec<f64>>,
    first_line: Option<usize>,
}

pub fn parse_problem(text: &str) -> Result<Problem, ProblemError> {
    let mut name: Option<String> = None;
    let mut n: Option<usize> = None;
    let mut m: Option<usize> = None;
    let mut objective: Vec<Term> = Vec::new();
    let mut constraints: Vec<Vec<Term>> = Vec::new();
    let mut section = Section::Header;
    let mut meta = Meta::default();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| ProblemError::Parse { line, message };
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(keyword) = tokens.next() else {
            continue;
        };
        let rest: Vec<&str> = tokens.collect();
        match keyword {
            "problem" => {
                if rest.len() != 1 {
                    return Err(err("expected `problem <name>`".into()));
                }
                name = Some(rest[0].to_string());
            }
            "n" => {
                let v = single_usize(&rest).map_err(err)?;
                if v == 0 {
                    return Err(err("n must be at least 1".into()));
                }
                n = Some(v);
            }
            "m" => {
                let v = single_usize(&rest).map_err(err)?;
                m = Some(v);
                constraints = vec![Vec::new(); v];
            }
            "objective" => {
                if !rest.is_empty() {
                    return Err(err("unexpected tokens after `objective`".into()));
                }
                section = Section::Objective;
            }
            "constraint" => {
                let m = m.ok_or_else(|| err("`m` must precede constraints".into()))?;
                let k = single_usize(&rest).map_err(err)?;
                if k == 0 || k > m {
                    return Err(err(format!("constraint index {k} outside 1..{m}")));
                }
                section = Section::Constraint(k - 1);
            }
            "term" => {
                let n = n.ok_or_else(|| err("`n` must precede terms".into()))?;
                let term = parse_term(&rest, n).map_err(err)?;
                match section {
                    Section::Header => {
                        return Err(err("term outside an objective or constraint block".into()))
                    }
                    Section::Objective => objective.push(term),
                    Section::Constraint(k) => constraints[k].push(term),
                }
            }
            "meta" => {
                meta.first_line.get_or_insert(line);
                let (&kind, values) = rest
                    .split_first()
                    .ok_or_else(|| err("empty meta line".into()))?;
                match kind {
                    "zstar" => {
                        let n = n.ok_or_else(|| err("`n` must precede meta zstar".into()))?;
                        let v = parse_floats(values, n).map_err(err)?;
                        meta.zstar = Some((line, v));
                    }
                    "slam_vertex" => {
                        let m = m.ok_or_else(|| err("`m` must precede meta slam_vertex".into()))?;
                        meta.vertices.push(parse_floats(values, m).map_err(err)?);
                    }
                    "bplus" => {
                        let m = m.ok_or_else(|| err("`m` must precede meta bplus".into()))?;
                        let mut idx = Vec::with_capacity(values.len());
                        for tok in values {
                            let i: usize = tok
                                .parse()
                                .map_err(|_| err(format!("invalid index `{tok}`")))?;
                            if i == 0 || i > m {
                                return Err(err(format!("index {i} outside 1..{m}")));
                            }
                            idx.push(i);
                        }
                        meta.bplus = Some(idx);
                    }
                    "mfcq" => {
                        let n = n.ok_or_else(|| err("`n` must precede meta mfcq".into()))?;
                        meta.mfcq = Some(parse_floats(values, n).map_err(err)?);
                    }
                    other => return Err(err(format!("unknown meta field `{other}`"))),
                }
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }

    let last = text.lines().count().max(1);
    let missing = |what: &str| ProblemError::Parse {
        line: last,
        message: format!("missing `{what}` line"),
    };
    let name = name.ok_or_else(|| missing("problem"))?;
    let n = n.ok_or_else(|| missing("n"))?;
    m.ok_or_else(|| missing("m"))?;

    let objective = PolyFunction::new(n, objective)?;
    let constraints = constraints
        .into_iter()
        .map(|terms| PolyFunction::new(n, terms))
        .collect::<Result<Vec<_>, _>>()?;
    let problem = Problem::new(name, objective, constraints, None)?;

    let Some(meta_line) = meta.first_line else {
        return Ok(problem);
    };
    let meta_err = |message: String| ProblemError::Parse {
        line: meta_line,
        message,
    };
    let (_, z_star) = meta
        .zstar
        .ok_or_else(|| meta_err("metadata requires `meta zstar`".into()))?;
    if meta.vertices.is_empty() {
        return Err(meta_err("metadata requires at least one `meta slam_vertex`".into()));
    }
    let b_plus = IndexSet::from_one_based(&meta.bplus.unwrap_or_default());
    let g = problem.constraint_values(&z_star)?;
    let b_zero = active_at(&g, ACTIVE_TOL).difference(&b_plus);
    let gt = GroundTruth {
        z_star,
        slam_vertices: meta.vertices,
        b_plus,
        b_zero,
        mfcq_certificate: meta.mfcq,
    };
    problem
        .with_metadata(gt)
        .map_err(|e| meta_err(e.to_string()))
}

fn single_usize(rest: &[&str]) -> Result<usize, String> {
    match rest {
        [tok] => tok
            .parse()
            .map_err(|_| format!("expected a non-negative integer, found `{tok}`")),
        _ => Err("expected exactly one integer".into()),
    }
}

fn parse_term(rest: &[&str], n: usize) -> Result<Term, String> {
    let Some((coef, exps)) = rest.split_first() else {
        return Err("term needs a coefficient".into());
    };
    let coef: f64 = coef
        .parse()
        .map_err(|_| format!("invalid coefficient `{coef}`"))?;
    if exps.len() != n {
        return Err(format!("expected {n} exponents, found {}", exps.len()));
    }
    let exponents = exps
        .iter()
        .map(|tok| {
            let e: i64 = tok
                .parse()
                .map_err(|_| format!("invalid exponent `{tok}`"))?;
            u32::try_from(e).map_err(|_| format!("negative exponent {e}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Term::new(coef, exponents))
}

fn parse_floats(tokens: &[&str], expected: usize) -> Result<Vec<f64>, String> {
    if tokens.len() != expected {
        return Err(format!("expected {expected} values, found {}", tokens.len()));
    }
    tokens
        .iter()
        .map(|t| t.parse().map_err(|_| format!("invalid number `{t}`")))
        .collect()
}
