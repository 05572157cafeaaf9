//! Catalog of test signals with declared support, boundedness, breakpoints,
//! and continuity metadata, plus CSV ingestion of tabulated data.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone)]
enum Shape {
    /// `1 - |x|/b` on `[-b, b]`.
    Hat { b: f64 },
    /// Indicator of `[0, 1]`.
    Step,
    /// `exp(1 - 1/(1 - (x/b)^2))` on `(-b, b)`, smooth and compactly
    /// supported.
    Bump { b: f64 },
    /// Constant `c` truncated to `[-b, b]`.
    Const { c: f64, b: f64 },
    /// `x` truncated to `[-b, b]`.
    Ramp { b: f64 },
    /// Piecewise-linear interpolant of tabulated data, zero outside.
    Table { xs: Arc<Vec<f64>>, ys: Arc<Vec<f64>> },
    /// Arbitrary closure, for programmatic use (oracles, tests).
    Analytic(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Hat { b } => write!(f, "Hat {{ b: {b} }}"),
            Shape::Step => write!(f, "Step"),
            Shape::Bump { b } => write!(f, "Bump {{ b: {b} }}"),
            Shape::Const { c, b } => write!(f, "Const {{ c: {c}, b: {b} }}"),
            Shape::Ramp { b } => write!(f, "Ramp {{ b: {b} }}"),
            Shape::Table { xs, .. } => write!(f, "Table {{ {} nodes }}", xs.len()),
            Shape::Analytic(_) => write!(f, "Analytic"),
        }
    }
}

/// A real signal with evaluation and the metadata the operators and the
/// convergence experiments rely on.
#[derive(Clone, Debug)]
pub struct Signal {
    id: String,
    shape: Shape,
    /// `B` such that `f(x) = 0` for `|x| > B`; `None` for unbounded support.
    pub support_bound: Option<f64>,
    /// `‖f‖∞` when known.
    pub sup_norm: Option<f64>,
    /// Quadrature split points: every kink or jump.
    pub breakpoints: Vec<f64>,
    /// The subset of breakpoints where the signal actually jumps.
    pub discontinuities: Vec<f64>,
}

impl Signal {
    /// Builds a catalog signal from its spec string: `"hat:B=<real>"`,
    /// `"step"`, `"bump:B=<real>"`, `"const:c=<real>,B=<real>"`,
    /// `"ramp:B=<real>"`.
    pub fn from_spec(spec: &str) -> Result<Signal> {
        let (head, args) = match spec.split_once(':') {
            Some((h, a)) => (h, a),
            None => (spec, ""),
        };
        let params = parse_kv(args)?;
        let get = |key: &str| -> Result<f64> {
            params
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::Config(format!("signal '{spec}': missing parameter '{key}'")))
        };
        match head {
            "hat" => {
                let b = get("B")?;
                if !(b > 0.0) {
                    return Err(Error::Config(format!("signal '{spec}': need B > 0")));
                }
                Ok(Signal {
                    id: format!("hat:B={b}"),
                    shape: Shape::Hat { b },
                    support_bound: Some(b),
                    sup_norm: Some(1.0),
                    breakpoints: vec![-b, 0.0, b],
                    discontinuities: vec![],
                })
            }
            "step" => Ok(Signal {
                id: "step".into(),
                shape: Shape::Step,
                support_bound: Some(1.0),
                sup_norm: Some(1.0),
                breakpoints: vec![0.0, 1.0],
                discontinuities: vec![0.0, 1.0],
            }),
            "bump" => {
                let b = get("B")?;
                if !(b > 0.0) {
                    return Err(Error::Config(format!("signal '{spec}': need B > 0")));
                }
                Ok(Signal {
                    id: format!("bump:B={b}"),
                    shape: Shape::Bump { b },
                    support_bound: Some(b),
                    sup_norm: Some(1.0),
                    breakpoints: vec![-b, b],
                    discontinuities: vec![],
                })
            }
            "const" => {
                let c = get("c")?;
                let b = get("B")?;
                if !(b > 0.0) {
                    return Err(Error::Config(format!("signal '{spec}': need B > 0")));
                }
                Ok(Signal {
                    id: format!("const:c={c},B={b}"),
                    shape: Shape::Const { c, b },
                    support_bound: Some(b),
                    sup_norm: Some(c.abs()),
                    breakpoints: vec![-b, b],
                    discontinuities: if c != 0.0 { vec![-b, b] } else { vec![] },
                })
            }
            "ramp" => {
                let b = get("B")?;
                if !(b > 0.0) {
                    return Err(Error::Config(format!("signal '{spec}': need B > 0")));
                }
                Ok(Signal {
                    id: format!("ramp:B={b}"),
                    shape: Shape::Ramp { b },
                    support_bound: Some(b),
                    sup_norm: Some(b),
                    breakpoints: vec![-b, b],
                    discontinuities: vec![-b, b],
                })
            }
            other => Err(Error::Config(format!("unknown signal '{other}'"))),
        }
    }

    /// Programmatic constructor for analytic signals (used by oracles and
    /// tests; not addressable from configs).
    pub fn from_fn(
        id: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support_bound: Option<f64>,
        sup_norm: Option<f64>,
        breakpoints: Vec<f64>,
    ) -> Signal {
        Signal {
            id: id.into(),
            shape: Shape::Analytic(Arc::new(f)),
            support_bound,
            sup_norm,
            breakpoints,
            discontinuities: vec![],
        }
    }

    /// Loads a tabulated signal from a CSV file with header `x,value` and
    /// strictly increasing `x`; the result is the piecewise-linear
    /// interpolant, zero outside the data range.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Signal> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "x,value" => {}
            Some((_, header)) => {
                return Err(Error::Input(format!(
                    "{}: line 1: expected header 'x,value', got '{header}'",
                    path.display()
                )))
            }
            None => return Err(Error::Input(format!("{}: empty file", path.display()))),
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (xs_str, ys_str) = line.split_once(',').ok_or_else(|| {
                Error::Input(format!("{}: line {lineno}: expected 'x,value'", path.display()))
            })?;
            let x: f64 = xs_str.trim().parse().map_err(|_| {
                Error::Input(format!("{}: line {lineno}: invalid x '{xs_str}'", path.display()))
            })?;
            let y: f64 = ys_str.trim().parse().map_err(|_| {
                Error::Input(format!("{}: line {lineno}: invalid value '{ys_str}'", path.display()))
            })?;
            if let Some(&last) = xs.last() {
                if x <= last {
                    return Err(Error::Input(format!(
                        "{}: line {lineno}: x values must be strictly increasing ({x} after {last})",
                        path.display()
                    )));
                }
            }
            xs.push(x);
            ys.push(y);
        }
        if xs.is_empty() {
            return Err(Error::Input(format!("{}: no data rows", path.display())));
        }
        let bound = xs[0].abs().max(xs[xs.len() - 1].abs());
        let sup = ys.iter().fold(0.0f64, |acc, y| acc.max(y.abs()));
        let breakpoints = xs.clone();
        Ok(Signal {
            id: format!("csv:{}", path.display()),
            shape: Shape::Table { xs: Arc::new(xs), ys: Arc::new(ys) },
            support_bound: Some(bound),
            sup_norm: Some(sup),
            breakpoints,
            discontinuities: vec![],
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// `f(x)`, total on the line and exactly zero outside the declared
    /// support.
    pub fn eval(&self, x: f64) -> f64 {
        if let Some(b) = self.support_bound {
            if x.abs() > b {
                return 0.0;
            }
        }
        match &self.shape {
            Shape::Hat { b } => {
                let v = 1.0 - x.abs() / b;
                v.max(0.0)
            }
            Shape::Step => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Bump { b } => {
                let t = x / b;
                if t.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - t * t)).exp()
                } else {
                    0.0
                }
            }
            Shape::Const { c, b } => {
                if x.abs() <= *b {
                    *c
                } else {
                    0.0
                }
            }
            Shape::Ramp { b } => {
                if x.abs() <= *b {
                    x
                } else {
                    0.0
                }
            }
            Shape::Table { xs, ys } => {
                if x < xs[0] || x > xs[xs.len() - 1] {
                    return 0.0;
                }
                let i = match xs.binary_search_by(|t| t.partial_cmp(&x).unwrap()) {
                    Ok(i) => return ys[i],
                    Err(i) => i,
                };
                let (x0, x1) = (xs[i - 1], xs[i]);
                let (y0, y1) = (ys[i - 1], ys[i]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
            Shape::Analytic(f) => f(x),
        }
    }

    pub fn is_continuous_at(&self, x: f64) -> bool {
        !self.discontinuities.contains(&x)
    }
}

fn parse_kv(args: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for part in args.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (key, val) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got '{part}'")))?;
        let v: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("invalid numeric value '{val}'")))?;
        out.push((key.trim().to_string(), v));
    }
    Ok(out)
}

/// The catalog spec strings used throughout the test and experiment matrix:
/// one concrete representative per function class quantified over in the
/// convergence theorems (smooth compactly supported, continuous piecewise
/// linear, discontinuous, truncated constant, truncated linear).
pub fn catalog_ids() -> Vec<&'static str> {
    vec!["hat:B=1", "step", "bump:B=1", "const:c=0.5,B=1", "ramp:B=1"]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    #[test]
    fn catalog_examples() {
        let hat = Signal::from_spec("hat:B=1").unwrap();
        assert_eq!(hat.eval(0.0), 1.0);
        assert_eq!(hat.eval(1.0), 0.0);
        assert_eq!(hat.eval(-1.0), 0.0);
        assert_abs_diff_eq!(hat.eval(0.5), 0.5, epsilon = 1e-15);

        let step = Signal::from_spec("step").unwrap();
        assert_eq!(step.eval(0.5), 1.0);
        assert_eq!(step.eval(2.0), 0.0);
        assert!(!step.is_continuous_at(0.0));
        assert!(step.is_continuous_at(0.5));

        let bump = Signal::from_spec("bump:B=1").unwrap();
        assert_eq!(bump.eval(0.0), 1.0);
        assert_eq!(bump.eval(1.5), 0.0);
        assert_eq!(bump.sup_norm, Some(1.0));
    }

    #[test]
    fn malformed_specs_are_config_errors() {
        assert!(Signal::from_spec("hat").is_err());
        assert!(Signal::from_spec("hat:B=-1").is_err());
        assert!(Signal::from_spec("wedge:B=1").is_err());
        assert!(Signal::from_spec("const:c=1").is_err());
    }

    #[test]
    fn support_honesty() {
        for id in catalog_ids() {
            let f = Signal::from_spec(id).unwrap();
            let b = f.support_bound.unwrap();
            for i in 0..100 {
                let x = b + (b + 1.0) * (i as f64 + 0.5) / 100.0;
                assert_eq!(f.eval(x), 0.0, "{id} at {x}");
                assert_eq!(f.eval(-x), 0.0, "{id} at {}", -x);
            }
        }
    }

    #[test]
    fn sup_norm_honesty() {
        for id in catalog_ids() {
            let f = Signal::from_spec(id).unwrap();
            let b = f.support_bound.unwrap();
            let sup = f.sup_norm.unwrap();
            for i in 0..=1000 {
                let x = -b - 1.0 + (2.0 * b + 2.0) * i as f64 / 1000.0;
                assert!(f.eval(x).abs() <= sup + 1e-12, "{id} at {x}");
            }
        }
    }

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file
    }

    #[test]
    fn csv_round_trip_of_hat_samples() {
        let mut content = String::from("x,value\n");
        let hat = Signal::from_spec("hat:B=1").unwrap();
        for i in 0..=100 {
            let x = -1.0 + 2.0 * i as f64 / 100.0;
            content.push_str(&format!("{x},{}\n", hat.eval(x)));
        }
        let file = write_csv(&content);
        let table = Signal::from_csv(file.path()).unwrap();
        // Knots coincide with the target's kinks, so midpoint deviation is
        // pure linear-interpolation error of a piecewise-linear function: 0.
        for i in 0..100 {
            let x = -1.0 + 2.0 * (i as f64 + 0.5) / 100.0;
            assert!((table.eval(x) - hat.eval(x)).abs() < 1e-2, "x = {x}");
        }
    }

    #[test]
    fn csv_zero_signal() {
        let file = write_csv("x,value\n0,0\n1,0\n");
        let sig = Signal::from_csv(file.path()).unwrap();
        assert_eq!(sig.eval(0.5), 0.0);
        assert_eq!(sig.eval(2.0), 0.0);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let file = write_csv("x,value\n");
        assert!(matches!(Signal::from_csv(file.path()), Err(Error::Input(_))));

        let file = write_csv("x,value\n0,1\n0,2\n");
        let err = Signal::from_csv(file.path()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");

        let file = write_csv("x,value\n0,abc\n");
        let err = Signal::from_csv(file.path()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");

        let file = write_csv("wrong,header\n0,1\n");
        assert!(matches!(Signal::from_csv(file.path()), Err(Error::Input(_))));
    }
}
