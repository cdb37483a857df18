//! Line-oriented group and measure files.
//!
//! ```text
//! [model]
//! d = 1
//!
//! [generator.0]
//! attracting = 3.4142135623730936
//! repelling = -0.58578643762690519
//! length = 2
//! # rotation = <d*d numbers, row-major>   (default identity)
//! # matrix = <(d+2)^2 numbers, row-major> (instead of the four keys above)
//!
//! [balls.0]
//! plus_center = 35.923368401774887
//! plus_radius = 34.4511504558238
//! minus_center = -0.6934569446091462
//! minus_radius = 0.66503756736200736
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use psfourier::hyperbolic::{GroupElement, ModelParams, DEFAULT_TOL};
use psfourier::measure::AtomicMeasure;
use psfourier::schottky::{build_loxodromic, Ball, SchottkyGenerator, SchottkyGroup};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, msg: msg.into() })
}

#[derive(Debug, Clone, Default)]
struct Section {
    line: usize,
    keys: BTreeMap<String, (usize, Vec<f64>)>,
}

impl Section {
    fn get(&self, key: &str, name: &str) -> Result<&(usize, Vec<f64>), ParseError> {
        self.keys
            .get(key)
            .map_or_else(|| err(self.line, format!("[{name}] is missing `{key}`")), Ok)
    }

    fn vector(&self, key: &str, name: &str, len: usize) -> Result<Vec<f64>, ParseError> {
        let (line, v) = self.get(key, name)?;
        if v.len() != len {
            return err(*line, format!("`{key}` needs {len} numbers, got {}", v.len()));
        }
        Ok(v.clone())
    }

    fn scalar(&self, key: &str, name: &str) -> Result<(usize, f64), ParseError> {
        let (line, v) = self.get(key, name)?;
        if v.len() != 1 {
            return err(*line, format!("`{key}` needs one number, got {}", v.len()));
        }
        Ok((*line, v[0]))
    }
}

/// A generator that fails to build points at its section; pairwise
/// problems (overlapping balls) concern the whole file.
#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    Line(#[from] ParseError),
    #[error(transparent)]
    Group(#[from] psfourier::Error),
}

#[derive(Debug, Clone)]
pub enum GeneratorSpec {
    Matrix(DMatrix<f64>),
    Axis {
        attracting: Vec<f64>,
        repelling: Vec<f64>,
        length: f64,
        rotation: DMatrix<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct GroupSpec {
    pub d: usize,
    pub tol: f64,
    /// `(line of the section header, generator, plus ball, minus ball)`.
    pub generators: Vec<(usize, GeneratorSpec, Ball, Ball)>,
}

const GENERATOR_KEYS: [&str; 5] = ["attracting", "repelling", "length", "rotation", "matrix"];
const BALL_KEYS: [&str; 4] = ["plus_center", "plus_radius", "minus_center", "minus_radius"];

pub fn parse_group(text: &str) -> Result<GroupSpec, ParseError> {
    let mut model: Option<Section> = None;
    let mut gens: BTreeMap<usize, Section> = BTreeMap::new();
    let mut balls: BTreeMap<usize, Section> = BTreeMap::new();
    let mut current: Option<(String, usize)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(h) = s.strip_prefix('[') {
            let Some(h) = h.strip_suffix(']') else {
                return err(line, format!("unterminated section header `{s}`"));
            };
            let h = h.trim();
            let (kind, idx) = match h.split_once('.') {
                None if h == "model" => ("model", 0),
                Some((k @ ("generator" | "balls"), n)) => match n.parse::<usize>() {
                    Ok(n) => (k, n),
                    Err(_) => return err(line, format!("bad section index `{n}`")),
                },
                _ => return err(line, format!("unknown section `[{h}]`")),
            };
            let table = match kind {
                "model" => {
                    if model.is_some() {
                        return err(line, "duplicate [model] section");
                    }
                    model = Some(Section {
                        line,
                        ..Default::default()
                    });
                    None
                }
                "generator" => Some(&mut gens),
                _ => Some(&mut balls),
            };
            if let Some(t) = table {
                if t.insert(
                    idx,
                    Section {
                        line,
                        ..Default::default()
                    },
                )
                .is_some()
                {
                    return err(line, format!("duplicate section [{h}]"));
                }
            }
            current = Some((kind.to_string(), idx));
            continue;
        }
        let Some((key, value)) = s.split_once('=') else {
            return err(line, format!("expected `key = value`, got `{s}`"));
        };
        let key = key.trim();
        let mut nums = Vec::new();
        for tok in value.split_whitespace() {
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => nums.push(v),
                _ => return err(line, format!("`{tok}` is not a finite number")),
            }
        }
        if nums.is_empty() {
            return err(line, format!("`{key}` has no value"));
        }
        let Some((kind, idx)) = &current else {
            return err(line, "key outside of any section");
        };
        let (section, allowed): (&mut Section, &[&str]) = match kind.as_str() {
            "model" => (model.as_mut().expect("model section open"), &["d", "tol"]),
            "generator" => (gens.get_mut(idx).expect("open"), &GENERATOR_KEYS),
            _ => (balls.get_mut(idx).expect("open"), &BALL_KEYS),
        };
        if !allowed.contains(&key) {
            return err(line, format!("unknown key `{key}`"));
        }
        if section.keys.insert(key.to_string(), (line, nums)).is_some() {
            return err(line, format!("duplicate key `{key}`"));
        }
    }
    let Some(model) = model else {
        return err(1, "missing [model] section");
    };
    let (dl, dv) = model.scalar("d", "model")?;
    if dv < 1.0 || dv.fract() != 0.0 {
        return err(dl, format!("d must be a positive integer, got {dv}"));
    }
    let d = dv as usize;
    let tol = match model.keys.get("tol") {
        Some((l, v)) if v.len() != 1 || v[0] <= 0.0 => return err(*l, "tol must be one positive number"),
        Some((_, v)) => v[0],
        None => DEFAULT_TOL,
    };
    if gens.is_empty() {
        return err(model.line, "no [generator.i] sections");
    }
    let mut generators = Vec::new();
    for (expect, (idx, g)) in gens.iter().enumerate() {
        let name = format!("generator.{idx}");
        if *idx != expect {
            return err(g.line, format!("generator indices must be 0, 1, ..; found {idx}"));
        }
        let spec = if g.keys.contains_key("matrix") {
            if let Some(k) = ["attracting", "repelling", "length", "rotation"]
                .iter()
                .find(|k| g.keys.contains_key(**k))
            {
                return err(g.keys[*k].0, format!("`{k}` cannot be combined with `matrix`"));
            }
            let n = d + 2;
            GeneratorSpec::Matrix(DMatrix::from_row_slice(n, n, &g.vector("matrix", &name, n * n)?))
        } else {
            let (_, length) = g.scalar("length", &name)?;
            let rotation = if g.keys.contains_key("rotation") {
                DMatrix::from_row_slice(d, d, &g.vector("rotation", &name, d * d)?)
            } else {
                DMatrix::identity(d, d)
            };
            GeneratorSpec::Axis {
                attracting: g.vector("attracting", &name, d)?,
                repelling: g.vector("repelling", &name, d)?,
                length,
                rotation,
            }
        };
        let bname = format!("balls.{idx}");
        let Some(b) = balls.get(idx) else {
            return err(g.line, format!("[{name}] has no matching [{bname}]"));
        };
        let ball = |c: &str, r: &str| -> Result<Ball, ParseError> {
            let center = b.vector(c, &bname, d)?;
            let (rl, radius) = b.scalar(r, &bname)?;
            Ball::new(center, radius).or_else(|e| err(rl, e.to_string()))
        };
        generators.push((
            g.line,
            spec,
            ball("plus_center", "plus_radius")?,
            ball("minus_center", "minus_radius")?,
        ));
    }
    if let Some((idx, b)) = balls.iter().find(|(i, _)| !gens.contains_key(i)) {
        return err(b.line, format!("[balls.{idx}] has no matching generator"));
    }
    Ok(GroupSpec { d, tol, generators })
}

impl GroupSpec {
    /// Builds the (not yet validated) group. Errors name the generator section.
    pub fn build(&self) -> Result<SchottkyGroup, BuildError> {
        let params = ModelParams::new(self.d, self.tol)?;
        let mut gens = Vec::with_capacity(self.generators.len());
        for (i, (line, spec, plus, minus)) in self.generators.iter().enumerate() {
            let ctx = |e: psfourier::Error| ParseError {
                line: *line,
                msg: format!("generator {i}: {e}"),
            };
            let elem = match spec {
                GeneratorSpec::Matrix(m) => GroupElement::from_matrix(m, self.tol).map_err(ctx)?,
                GeneratorSpec::Axis {
                    attracting,
                    repelling,
                    length,
                    rotation,
                } => {
                    let a = params.chart_to_boundary(attracting).map_err(ctx)?;
                    let r = params.chart_to_boundary(repelling).map_err(ctx)?;
                    build_loxodromic(&params, &a, &r, *length, rotation).map_err(ctx)?
                }
            };
            gens.push(SchottkyGenerator::new(elem, plus.clone(), minus.clone(), self.tol).map_err(ctx)?);
        }
        Ok(SchottkyGroup::new(params, gens)?)
    }
}

fn join(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

/// Serializes a group with raw generator matrices (shortest round-trip
/// decimal form).
pub fn write_group(group: &SchottkyGroup) -> String {
    let p = group.params();
    let mut s = String::new();
    let _ = writeln!(s, "[model]\nd = {}\ntol = {:e}", p.d, p.tol);
    for (i, g) in group.gens().iter().enumerate() {
        let m = g.elem.matrix();
        let n = m.nrows();
        let _ = writeln!(s, "\n[generator.{i}]");
        let _ = writeln!(s, "matrix = {}", join((0..n * n).map(|k| m[(k / n, k % n)])));
        let _ = writeln!(s, "\n[balls.{i}]");
        let _ = writeln!(s, "plus_center = {}", join(g.ball_plus.center.iter().copied()));
        let _ = writeln!(s, "plus_radius = {:e}", g.ball_plus.radius);
        let _ = writeln!(s, "minus_center = {}", join(g.ball_minus.center.iter().copied()));
        let _ = writeln!(s, "minus_radius = {:e}", g.ball_minus.radius);
    }
    s
}

/// `d = N` followed by one atom per line: coordinates then weight.
/// Lines starting with `#` are comments.
pub fn parse_measure(text: &str) -> Result<AtomicMeasure, ParseError> {
    let mut d: Option<usize> = None;
    let mut pts = Vec::new();
    let mut weights = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let Some(dim) = d else {
            match s
                .strip_prefix("d =")
                .or_else(|| s.strip_prefix("d="))
                .map(|v| v.trim().parse::<usize>())
            {
                Some(Ok(v)) if v >= 1 => d = Some(v),
                _ => return err(line, format!("expected `d = <dimension>`, got `{s}`")),
            }
            continue;
        };
        let mut row = Vec::with_capacity(dim + 1);
        for tok in s.split_whitespace() {
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => return err(line, format!("`{tok}` is not a finite number")),
            }
        }
        if row.len() != dim + 1 {
            return err(line, format!("expected {} numbers, got {}", dim + 1, row.len()));
        }
        weights.push(row.pop().expect("nonempty"));
        pts.extend(row);
    }
    let Some(dim) = d else {
        return err(1, "empty measure file");
    };
    AtomicMeasure::new(dim, pts, weights).or_else(|e| err(1, e.to_string()))
}

pub fn write_measure(mu: &AtomicMeasure, header: &str) -> String {
    let mut s = String::from(header);
    let _ = writeln!(s, "d = {}", mu.d());
    for (x, w) in mu.iter() {
        let _ = writeln!(s, "{} {w:e}", join(x.iter().copied()));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[model]\nd = 1\n[generator.0]\nattracting = 3.4142135623730936\nrepelling = -0.58578643762690519\nlength = 2.5\n[balls.0]\nplus_center = 13.220560834022338\nplus_radius = 11.635713811312977\nminus_center = -0.67120701578332942\nminus_radius = 0.59074443526644815\n";

    #[test]
    fn parses_minimal_file() {
        let g = parse_group(MINIMAL).unwrap();
        assert_eq!(g.d, 1);
        assert_eq!(g.generators.len(), 1);
        assert!(g.build().unwrap().validated().is_ok());
    }

    #[test]
    fn reports_line_numbers() {
        let bad = MINIMAL.replace("length = 2.5", "length = two");
        let e = parse_group(&bad).unwrap_err();
        assert_eq!(e.line, 6);
        let bad = MINIMAL.replace("length = 2.5", "lenght = 2.5");
        assert_eq!(parse_group(&bad).unwrap_err().line, 6);
        let bad = MINIMAL.replace("[balls.0]", "[balls.1]");
        assert!(parse_group(&bad).is_err());
        let bad = MINIMAL.replace("plus_radius = 11.635713811312977\n", "");
        let e = parse_group(&bad).unwrap_err();
        assert_eq!(e.line, 7);
        assert!(e.msg.contains("plus_radius"));
    }

    #[test]
    fn matrix_round_trip() {
        let g = parse_group(MINIMAL).unwrap().build().unwrap();
        let text = write_group(&g);
        let h = parse_group(&text).unwrap().build().unwrap();
        assert!(g.gens()[0].elem.max_abs_diff(&h.gens()[0].elem) < 1e-12);
    }

    #[test]
    fn measure_round_trip() {
        let mu = AtomicMeasure::new(2, vec![0.1, 0.2, 1.0 / 3.0, -4.0], vec![0.25, 0.75]).unwrap();
        let text = write_measure(&mu, "# test\n");
        assert_eq!(parse_measure(&text).unwrap(), mu);
        assert_eq!(parse_measure("d = 1\n0.5\n").unwrap_err().line, 2);
    }
}
