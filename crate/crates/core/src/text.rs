//! Plain-text forms of spaces and points, used by the CLI and its config files.
//!
//! Spaces: `euclidean:2`, `hyperboloid:2`, `spd-log-euclidean:2`,
//! `spd-log-cholesky:2`, `spider:3`, and products such as
//! `product(euclidean:1*0.5,spider:3*2)` (factor `*` weight).
//!
//! Points:
//!
//! * Euclidean and hyperboloid: comma-separated coordinates (the hyperboloid
//!   takes all `d + 1` ambient coordinates);
//! * SPD: the matrix entries, row-major, comma-separated;
//! * spider: `leg:radius`;
//! * product: factor points joined by `|` (factors may not be products).
//!
//! A list of points is separated by `;`. Floats are written in Rust's shortest
//! round-trip form, so formatting then parsing gives back the same bits.

use crate::error::{Error, Result};
use crate::space::{Geometry, Point, Space};
use crate::spaces::SpiderPoint;

pub fn parse_space(spec: &str) -> Result<Space> {
    Space::new(parse_geometry(spec.trim())?)
}

fn parse_count(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::input(format!("{what} must be a positive integer, got '{s}'")))
}

fn parse_geometry(spec: &str) -> Result<Geometry> {
    if let Some(inner) = spec.strip_prefix("product(").and_then(|r| r.strip_suffix(')')) {
        let mut factors = Vec::new();
        let mut weights = Vec::new();
        for part in inner.split(',') {
            let (factor, weight) = match part.rsplit_once('*') {
                Some((f, w)) => (f, parse_float(w)?),
                None => (part, 1.0),
            };
            let g = parse_geometry(factor.trim())?;
            if matches!(g, Geometry::Product { .. }) {
                return Err(Error::input("nested products are not supported"));
            }
            factors.push(g);
            weights.push(weight);
        }
        return Ok(Geometry::Product { factors, weights });
    }
    let (kind, size) = spec
        .split_once(':')
        .ok_or_else(|| Error::input(format!("space '{spec}' should look like kind:size")))?;
    let n = parse_count(size, "space size")?;
    match kind.trim() {
        "euclidean" => Ok(Geometry::Euclidean { dim: n }),
        "hyperboloid" => Ok(Geometry::Hyperboloid { dim: n }),
        "spd-log-euclidean" => Ok(Geometry::SpdLogEuclidean { size: n }),
        "spd-log-cholesky" => Ok(Geometry::SpdLogCholesky { size: n }),
        "spider" => Ok(Geometry::Spider { legs: n }),
        other => Err(Error::input(format!("unknown space kind '{other}'"))),
    }
}

fn parse_float(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::input(format!("'{}' is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(Error::input(format!("'{}' is not finite", s.trim())));
    }
    Ok(v)
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_float).collect()
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Parses and validates one point of `space`.
pub fn parse_point(space: &Space, text: &str) -> Result<Point> {
    let p = parse_raw(space.geometry(), text.trim())?;
    space.validate(&p)?;
    Ok(p)
}

fn parse_raw(g: &Geometry, text: &str) -> Result<Point> {
    match g {
        Geometry::Euclidean { .. } => Ok(Point::Euclidean(parse_floats(text)?)),
        Geometry::Hyperboloid { .. } => Ok(Point::Hyperboloid(parse_floats(text)?)),
        Geometry::SpdLogEuclidean { size } | Geometry::SpdLogCholesky { size } => {
            let v = parse_floats(text)?;
            if v.len() != size * size {
                return Err(Error::input(format!(
                    "expected {} matrix entries, got {}",
                    size * size,
                    v.len()
                )));
            }
            Ok(Point::spd_from_row_slice(*size, &v))
        }
        Geometry::Spider { .. } => {
            let (leg, radius) = text
                .split_once(':')
                .ok_or_else(|| Error::input(format!("spider point '{text}' should look like leg:radius")))?;
            let leg = parse_count(leg, "spider leg")?;
            let radius = parse_float(radius)?;
            if radius < 0.0 {
                return Err(Error::point(format!("spider radius {radius} is negative")));
            }
            Ok(Point::Spider(SpiderPoint::new(leg, radius)))
        }
        Geometry::Product { factors, .. } => {
            let parts: Vec<&str> = text.split('|').collect();
            if parts.len() != factors.len() {
                return Err(Error::input(format!(
                    "product point has {} components, expected {}",
                    parts.len(),
                    factors.len()
                )));
            }
            let components = factors
                .iter()
                .zip(parts)
                .map(|(f, part)| parse_raw(f, part.trim()))
                .collect::<Result<Vec<_>>>()?;
            Ok(Point::Product(components))
        }
    }
}

/// Parses a `;`-separated list of points.
pub fn parse_points(space: &Space, text: &str) -> Result<Vec<Point>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_point(space, s))
        .collect()
}

pub fn format_point(p: &Point) -> String {
    match p {
        Point::Euclidean(v) | Point::Hyperboloid(v) => join(v.iter().copied()),
        Point::Spd(m) => {
            let mut out = Vec::with_capacity(m.len());
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    out.push(m[(i, j)]);
                }
            }
            join(out)
        }
        Point::Spider(s) => s.to_string(),
        Point::Product(cs) => cs.iter().map(format_point).collect::<Vec<_>>().join("|"),
    }
}

pub fn format_points(points: &[Point]) -> String {
    points.iter().map(format_point).collect::<Vec<_>>().join(";")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_specs_round_trip() {
        for spec in [
            "euclidean:2",
            "hyperboloid:3",
            "spd-log-euclidean:2",
            "spd-log-cholesky:3",
            "spider:3",
            "product(euclidean:1*0.5,spider:3*2)",
        ] {
            assert_eq!(parse_space(spec).unwrap().to_string(), spec);
        }
        assert!(parse_space("spider:1").is_err());
        assert!(parse_space("torus:2").is_err());
        assert!(parse_space("euclidean").is_err());
        assert!(parse_space("product(product(euclidean:1)*1)").is_err());
    }

    #[test]
    fn points_round_trip() {
        let cases = [
            ("euclidean:2", "0.1,-3"),
            ("hyperboloid:2", "1,0,0"),
            ("spd-log-euclidean:2", "2,0.5,0.5,1"),
            ("spider:3", "2:1.5"),
            ("product(euclidean:1*1,spider:3*2)", "0.25|3:1"),
        ];
        for (spec, text) in cases {
            let space = parse_space(spec).unwrap();
            let p = parse_point(&space, text).unwrap();
            assert_eq!(format_point(&p), text);
        }
    }

    #[test]
    fn spider_hub_is_canonical() {
        let s = parse_space("spider:3").unwrap();
        assert_eq!(parse_point(&s, "3:0").unwrap(), Point::spider(1, 0.0));
    }

    #[test]
    fn invalid_points_are_rejected() {
        let h = parse_space("hyperboloid:2").unwrap();
        assert!(parse_point(&h, "1,1,0").is_err());
        let s = parse_space("spider:3").unwrap();
        assert!(parse_point(&s, "4:1").is_err());
        assert!(parse_point(&s, "1:-1").is_err());
        assert!(parse_point(&s, "1").is_err());
        let e = parse_space("euclidean:2").unwrap();
        assert!(parse_point(&e, "1,x").is_err());
        assert!(parse_point(&e, "1,inf").is_err());
        assert!(parse_point(&e, "1").is_err());
    }

    #[test]
    fn point_lists() {
        let e = parse_space("euclidean:1").unwrap();
        let pts = parse_points(&e, "0; 1.5 ;-2").unwrap();
        assert_eq!(format_points(&pts), "0;1.5;-2");
    }
}
