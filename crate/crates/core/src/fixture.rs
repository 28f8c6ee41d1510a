//! Line-oriented text format for problem instances.
//!
//! ```text
//! robust-bcs-instance v1
//! field complex
//! m 2
//! n 3
//! seed 7                 (optional)
//! meta {"scenario":...}  (optional, rest of line is free text)
//! A                      (m*n lines, row-major, "re im")
//! 1e0 0e0
//! ...
//! y                      (m lines)
//! ...
//! truth                  (optional section)
//! noise_var 0e0
//! support 0 5 9
//! outliers 3 11
//! x                      (n lines)
//! e                      (one line per outlier)
//! clean_y                (m lines)
//! end
//! ```
//!
//! Numbers are written in shortest round-trip form, so a write/read cycle
//! is bit-exact. Real instances still use pairs, with a zero imaginary part.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{BcsError, Result};
use crate::field::{Scalar, ScalarField};
use crate::model::{GroundTruth, ProblemInstance};

const MAGIC: &str = "robust-bcs-instance v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture<T: Scalar> {
    pub problem: ProblemInstance<T>,
    pub truth: Option<GroundTruth<T>>,
    pub seed: Option<u64>,
    pub meta: Option<String>,
}

/// A fixture whose field is only known after reading it.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyFixture {
    Real(Fixture<f64>),
    Complex(Fixture<Complex64>),
}

impl AnyFixture {
    pub fn field(&self) -> ScalarField {
        match self {
            AnyFixture::Real(_) => ScalarField::Real,
            AnyFixture::Complex(_) => ScalarField::Complex,
        }
    }
}

fn push_pair<T: Scalar>(out: &mut String, v: T) {
    let (re, im) = v.parts();
    let _ = writeln!(out, "{re:e} {im:e}");
}

impl<T: Scalar> Fixture<T> {
    pub fn new(problem: ProblemInstance<T>) -> Self {
        Fixture {
            problem,
            truth: None,
            seed: None,
            meta: None,
        }
    }

    pub fn to_text(&self) -> String {
        let p = &self.problem;
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "field {}", T::FIELD);
        let _ = writeln!(out, "m {}", p.m());
        let _ = writeln!(out, "n {}", p.n());
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed {seed}");
        }
        if let Some(meta) = &self.meta {
            let _ = writeln!(out, "meta {}", meta.replace('\n', " "));
        }
        out.push_str("A\n");
        for i in 0..p.m() {
            for j in 0..p.n() {
                push_pair(&mut out, p.a()[(i, j)]);
            }
        }
        out.push_str("y\n");
        p.y().iter().for_each(|&v| push_pair(&mut out, v));
        if let Some(t) = &self.truth {
            out.push_str("truth\n");
            let _ = writeln!(out, "noise_var {:e}", t.noise_var);
            let join = |v: &[usize]| {
                v.iter().map(|i| format!(" {i}")).collect::<String>()
            };
            let _ = writeln!(out, "support{}", join(&t.support));
            let _ = writeln!(out, "outliers{}", join(&t.outlier_idx));
            out.push_str("x\n");
            t.x_true.iter().for_each(|&v| push_pair(&mut out, v));
            out.push_str("e\n");
            t.e_vals.iter().for_each(|&v| push_pair(&mut out, v));
            out.push_str("clean_y\n");
            t.clean_y.iter().for_each(|&v| push_pair(&mut out, v));
        }
        out.push_str("end\n");
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l.trim_end_matches('\r'))
            }
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, reason: impl Into<String>) -> BcsError {
        BcsError::Format {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn expect(&mut self, want: &str) -> Result<()> {
        let l = self.next()?;
        if l.trim() != want {
            return Err(self.err(format!("expected `{want}`, found `{l}`")));
        }
        Ok(())
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next()?;
        match l.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest.trim()),
            _ if l.trim() == key => Ok(""),
            _ => Err(self.err(format!("expected `{key} ...`, found `{l}`"))),
        }
    }

    fn pair<T: Scalar>(&mut self) -> Result<T> {
        let l = self.next()?;
        let mut it = l.split_whitespace();
        let (re, im) = match (it.next(), it.next(), it.next()) {
            (Some(re), Some(im), None) => (re, im),
            _ => return Err(self.err(format!("expected `re im`, found `{l}`"))),
        };
        let re: f64 = re.parse().map_err(|_| self.err(format!("bad number `{re}`")))?;
        let im: f64 = im.parse().map_err(|_| self.err(format!("bad number `{im}`")))?;
        if T::FIELD == ScalarField::Real && im != 0.0 {
            return Err(self.err("non-zero imaginary part in a real instance"));
        }
        Ok(T::from_parts(re, im))
    }

    fn pairs<T: Scalar>(&mut self, count: usize) -> Result<Vec<T>> {
        (0..count).map(|_| self.pair()).collect()
    }

    fn indices(&mut self, key: &str) -> Result<Vec<usize>> {
        let rest = self.keyed(key)?;
        rest.split_whitespace()
            .map(|s| s.parse().map_err(|_| self.err(format!("bad index `{s}`"))))
            .collect()
    }
}

fn parse_body<T: Scalar>(
    lines: &mut Lines<'_>,
    m: usize,
    n: usize,
    seed: Option<u64>,
    meta: Option<String>,
) -> Result<Fixture<T>> {
    lines.expect("A")?;
    let a = DMatrix::from_row_slice(m, n, &lines.pairs::<T>(m * n)?);
    lines.expect("y")?;
    let y = DVector::from_vec(lines.pairs::<T>(m)?);
    let problem = ProblemInstance::new(a, y)?;

    let next = lines.next()?.trim();
    let truth = match next {
        "end" => None,
        "truth" => {
            let nv = lines.keyed("noise_var")?;
            let noise_var: f64 = nv
                .parse()
                .map_err(|_| lines.err(format!("bad noise_var `{nv}`")))?;
            let support = lines.indices("support")?;
            let outlier_idx = lines.indices("outliers")?;
            lines.expect("x")?;
            let x_true = DVector::from_vec(lines.pairs::<T>(n)?);
            lines.expect("e")?;
            let e_vals = lines.pairs::<T>(outlier_idx.len())?;
            lines.expect("clean_y")?;
            let clean_y = DVector::from_vec(lines.pairs::<T>(m)?);
            lines.expect("end")?;
            let t = GroundTruth {
                x_true,
                support,
                outlier_idx,
                e_vals,
                noise_var,
                clean_y,
            };
            t.validate(m, n)?;
            Some(t)
        }
        other => return Err(lines.err(format!("expected `truth` or `end`, found `{other}`"))),
    };
    Ok(Fixture {
        problem,
        truth,
        seed,
        meta,
    })
}

/// Parses a fixture, dispatching on its `field` line.
pub fn parse(text: &str) -> Result<AnyFixture> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    lines.expect(MAGIC)?;
    let field: ScalarField = lines
        .keyed("field")?
        .parse()
        .map_err(|e: String| lines.err(e))?;
    let dim = |lines: &mut Lines<'_>, key: &str| -> Result<usize> {
        let v = lines.keyed(key)?;
        match v.parse::<usize>() {
            Ok(d) if d > 0 => Ok(d),
            _ => Err(lines.err(format!("bad dimension `{key} {v}`"))),
        }
    };
    let m = dim(&mut lines, "m")?;
    let n = dim(&mut lines, "n")?;

    let mut seed = None;
    let mut meta = None;
    // optional header lines, then the `A` marker
    let peek = lines.inner.clone();
    for (_, l) in peek {
        if let Some(v) = l.strip_prefix("seed ") {
            lines.next()?;
            seed = Some(v.trim().parse().map_err(|_| lines.err(format!("bad seed `{v}`")))?);
        } else if let Some(v) = l.strip_prefix("meta ") {
            lines.next()?;
            meta = Some(v.to_string());
        } else {
            break;
        }
    }

    Ok(match field {
        ScalarField::Real => AnyFixture::Real(parse_body(&mut lines, m, n, seed, meta)?),
        ScalarField::Complex => AnyFixture::Complex(parse_body(&mut lines, m, n, seed, meta)?),
    })
}

pub fn read(path: &Path) -> Result<AnyFixture> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BcsError::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}
