use std::fmt::Write as _;
use std::path::Path;

use super::{Domain, GridMeasure, Measure, ParticleMeasure};
use crate::error::{Error, Result};

fn domain_header(domain: &Domain) -> String {
    match *domain {
        Domain::Torus { period } => format!("domain=torus period={period}"),
        Domain::Interval { left, right, truncation_of_line } => {
            format!("domain=interval left={left} right={right} truncation_of_line={truncation_of_line}")
        }
    }
}

/// Serializes a measure as `x,value` rows under a one-line `#` header naming the domain.
pub fn measure_to_csv(mu: &Measure) -> String {
    let mut out = String::new();
    match mu {
        Measure::Grid(g) => {
            let _ = writeln!(out, "# kind=grid {}", domain_header(g.domain()));
            for (x, r) in g.centers().iter().zip(g.density()) {
                let _ = writeln!(out, "{x},{r}");
            }
        }
        Measure::Particles(p) => {
            let _ = writeln!(out, "# kind=particles {}", domain_header(p.domain()));
            for (x, w) in p.positions().iter().zip(p.weights()) {
                let _ = writeln!(out, "{x},{w}");
            }
        }
    }
    out
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_string(), line, message: message.into() }
}

pub fn measure_from_csv(text: &str, origin: &str) -> Result<Measure> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(origin, 1, "empty file"))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| parse_err(origin, 1, "expected a '#' header line"))?;
    let mut fields = std::collections::HashMap::new();
    for token in header.split_whitespace() {
        let (k, v) = token
            .split_once('=')
            .ok_or_else(|| parse_err(origin, 1, format!("malformed header token '{token}'")))?;
        fields.insert(k, v);
    }
    let num = |key: &str| -> Result<f64> {
        fields
            .get(key)
            .ok_or_else(|| parse_err(origin, 1, format!("header is missing '{key}'")))?
            .parse::<f64>()
            .map_err(|e| parse_err(origin, 1, format!("bad '{key}': {e}")))
    };
    let domain = match fields.get("domain").copied() {
        Some("torus") => Domain::torus(num("period")?)?,
        Some("interval") => {
            let trunc = fields.get("truncation_of_line").is_some_and(|v| *v == "true");
            Domain::interval(num("left")?, num("right")?, trunc)?
        }
        other => return Err(parse_err(origin, 1, format!("unknown domain {other:?}"))),
    };
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (x, v) = line
            .split_once(',')
            .ok_or_else(|| parse_err(origin, i + 1, "expected two comma-separated columns"))?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| parse_err(origin, i + 1, e.to_string()));
        xs.push(parse(x)?);
        vs.push(parse(v)?);
    }
    match fields.get("kind").copied() {
        Some("grid") => Ok(GridMeasure::normalized(domain, vs)?.into()),
        Some("particles") => Ok(ParticleMeasure::normalized(domain, xs, vs)?.into()),
        other => Err(parse_err(origin, 1, format!("unknown measure kind {other:?}"))),
    }
}

pub fn write_measure_csv(path: &Path, mu: &Measure) -> Result<()> {
    std::fs::write(path, measure_to_csv(mu)).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_measure_csv(path: &Path) -> Result<Measure> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    measure_from_csv(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let g = GridMeasure::from_fn(Domain::unit_torus(), 16, |x| 1.0 + 0.3 * x.sin()).unwrap();
        let back = measure_from_csv(&measure_to_csv(&g.clone().into()), "mem").unwrap();
        assert_eq!(back.as_grid().unwrap().density(), g.density());
        let d = Domain::interval(-2.0, 2.0, true).unwrap();
        let p = ParticleMeasure::new(d, vec![-0.1, 0.7], vec![0.3, 0.7]).unwrap();
        let back = measure_from_csv(&measure_to_csv(&p.clone().into()), "mem").unwrap();
        assert_eq!(back.as_particles().unwrap(), &p);
    }
}
