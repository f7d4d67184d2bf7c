//! Geodesic-space handles and points.
//!
//! A [`Space`] is a tagged description of one of the supported NPC spaces plus
//! an optional bound on the diameter of the working region. A [`Point`] is the
//! matching coordinate payload. All operations are pure; a space and its points
//! can be shared freely across threads.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::measure::WeightedAtoms;
use crate::spaces::{euclidean, hyperboloid, spd, spider, SpiderPoint};

/// Coordinate-wise tolerance used by [`Point::approx_eq`] callers in this crate.
pub const POINT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Euclidean,
    Hyperboloid,
    SpdLogEuclidean,
    SpdLogCholesky,
    Spider,
    Product,
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SpaceKind::Euclidean => "euclidean",
            SpaceKind::Hyperboloid => "hyperboloid",
            SpaceKind::SpdLogEuclidean => "spd-log-euclidean",
            SpaceKind::SpdLogCholesky => "spd-log-cholesky",
            SpaceKind::Spider => "spider",
            SpaceKind::Product => "product",
        };
        f.write_str(name)
    }
}

/// Shape of a space, without the region bound.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// `R^p`.
    Euclidean { dim: usize },
    /// Hyperbolic space `H^d`, stored in `R^{d+1}`.
    Hyperboloid { dim: usize },
    /// `d x d` SPD matrices, Log-Euclidean metric.
    SpdLogEuclidean { size: usize },
    /// `d x d` SPD matrices, Log-Cholesky metric.
    SpdLogCholesky { size: usize },
    /// Star tree with `legs` rays.
    Spider { legs: usize },
    /// Weighted product: `d^2 = sum_i weights[i] * d_i^2`.
    Product { factors: Vec<Geometry>, weights: Vec<f64> },
}

/// Handle on a concrete NPC space.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    geometry: Geometry,
    diameter: Option<f64>,
}

/// Element of a [`Space`].
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Euclidean(Vec<f64>),
    Hyperboloid(Vec<f64>),
    /// Shared by both SPD metrics.
    Spd(DMatrix<f64>),
    Spider(SpiderPoint),
    Product(Vec<Point>),
}

impl Point {
    pub fn spider(leg: usize, radius: f64) -> Self {
        Point::Spider(SpiderPoint::new(leg, radius))
    }

    pub fn spd_from_row_slice(size: usize, entries: &[f64]) -> Self {
        Point::Spd(DMatrix::from_row_slice(size, size, entries))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Point::Euclidean(_) => "euclidean",
            Point::Hyperboloid(_) => "hyperboloid",
            Point::Spd(_) => "spd",
            Point::Spider(_) => "spider",
            Point::Product(_) => "product",
        }
    }

    pub fn as_slice(&self) -> Option<&[f64]> {
        match self {
            Point::Euclidean(v) | Point::Hyperboloid(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_spider(&self) -> Option<&SpiderPoint> {
        match self {
            Point::Spider(p) => Some(p),
            _ => None,
        }
    }

    /// Coordinate-wise comparison; spider points compare by leg and radius,
    /// with every radius within `tol` of zero treated as the hub.
    pub fn approx_eq(&self, other: &Point, tol: f64) -> bool {
        fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
        }
        match (self, other) {
            (Point::Euclidean(a), Point::Euclidean(b)) => close(a, b, tol),
            (Point::Hyperboloid(a), Point::Hyperboloid(b)) => close(a, b, tol),
            (Point::Spd(a), Point::Spd(b)) => a.shape() == b.shape() && close(a.as_slice(), b.as_slice(), tol),
            (Point::Spider(a), Point::Spider(b)) => {
                (a.radius() <= tol && b.radius() <= tol)
                    || (a.leg() == b.leg() && (a.radius() - b.radius()).abs() <= tol)
            }
            (Point::Product(a), Point::Product(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.approx_eq(y, tol))
            }
            _ => false,
        }
    }
}

impl Geometry {
    fn kind(&self) -> SpaceKind {
        match self {
            Geometry::Euclidean { .. } => SpaceKind::Euclidean,
            Geometry::Hyperboloid { .. } => SpaceKind::Hyperboloid,
            Geometry::SpdLogEuclidean { .. } => SpaceKind::SpdLogEuclidean,
            Geometry::SpdLogCholesky { .. } => SpaceKind::SpdLogCholesky,
            Geometry::Spider { .. } => SpaceKind::Spider,
            Geometry::Product { .. } => SpaceKind::Product,
        }
    }

    fn check_parameters(&self) -> Result<()> {
        match self {
            Geometry::Euclidean { dim } | Geometry::Hyperboloid { dim } if *dim == 0 => {
                Err(Error::input("dimension must be at least 1"))
            }
            Geometry::SpdLogEuclidean { size } | Geometry::SpdLogCholesky { size } if *size == 0 => {
                Err(Error::input("matrix size must be at least 1"))
            }
            Geometry::Spider { legs } if *legs < 2 => Err(Error::input("a spider needs at least 2 legs")),
            Geometry::Product { factors, weights } => {
                if factors.is_empty() {
                    return Err(Error::input("a product needs at least one factor"));
                }
                if factors.len() != weights.len() {
                    return Err(Error::input("product factor and weight counts differ"));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::input("product weights must be positive"));
                }
                factors.iter().try_for_each(Geometry::check_parameters)
            }
            _ => Ok(()),
        }
    }

    /// Cheap shape check: the point has the right variant and dimensions.
    fn check_shape(&self, p: &Point) -> Result<()> {
        let ok = match (self, p) {
            (Geometry::Euclidean { dim }, Point::Euclidean(v)) => v.len() == *dim,
            (Geometry::Hyperboloid { dim }, Point::Hyperboloid(v)) => v.len() == dim + 1,
            (Geometry::SpdLogEuclidean { size } | Geometry::SpdLogCholesky { size }, Point::Spd(m)) => {
                m.nrows() == *size && m.ncols() == *size
            }
            (Geometry::Spider { legs }, Point::Spider(s)) => s.leg() >= 1 && s.leg() <= *legs,
            (Geometry::Product { factors, .. }, Point::Product(cs)) => {
                if cs.len() != factors.len() {
                    false
                } else {
                    for (g, c) in factors.iter().zip(cs) {
                        g.check_shape(c)?;
                    }
                    true
                }
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!(
                "{} point does not belong to {} space",
                p.kind_name(),
                self.kind()
            )))
        }
    }

    fn validate(&self, p: &Point) -> Result<()> {
        self.check_shape(p)?;
        match (self, p) {
            (Geometry::Euclidean { .. }, Point::Euclidean(v)) => {
                if v.iter().all(|x| x.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::point("Euclidean coordinates must be finite"))
                }
            }
            (Geometry::Hyperboloid { .. }, Point::Hyperboloid(v)) => hyperboloid::validate(v),
            (Geometry::SpdLogEuclidean { size } | Geometry::SpdLogCholesky { size }, Point::Spd(m)) => {
                spd::validate(m, *size)
            }
            (Geometry::Spider { .. }, Point::Spider(s)) => {
                if s.radius().is_finite() && s.radius() >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::point("spider radius must be finite and non-negative"))
                }
            }
            (Geometry::Product { factors, .. }, Point::Product(cs)) => {
                factors.iter().zip(cs).try_for_each(|(g, c)| g.validate(c))
            }
            _ => unreachable!("shape already checked"),
        }
    }

    fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_shape(x)?;
        self.check_shape(y)?;
        Ok(match (self, x, y) {
            (Geometry::Euclidean { .. }, Point::Euclidean(a), Point::Euclidean(b)) => euclidean::distance(a, b),
            (Geometry::Hyperboloid { .. }, Point::Hyperboloid(a), Point::Hyperboloid(b)) => hyperboloid::distance(a, b),
            (Geometry::SpdLogEuclidean { .. }, Point::Spd(a), Point::Spd(b)) => spd::log_euclidean_distance(a, b)?,
            (Geometry::SpdLogCholesky { .. }, Point::Spd(a), Point::Spd(b)) => spd::log_cholesky_distance(a, b)?,
            (Geometry::Spider { .. }, Point::Spider(a), Point::Spider(b)) => spider::distance(a, b),
            (Geometry::Product { factors, weights }, Point::Product(a), Point::Product(b)) => {
                let mut sq = 0.0;
                for ((g, w), (u, v)) in factors.iter().zip(weights).zip(a.iter().zip(b)) {
                    let d = g.distance(u, v)?;
                    sq += w * d * d;
                }
                sq.sqrt()
            }
            _ => unreachable!("shape already checked"),
        })
    }

    fn geodesic(&self, x: &Point, y: &Point, t: f64) -> Result<Point> {
        self.check_shape(x)?;
        self.check_shape(y)?;
        if t == 0.0 || x == y {
            return Ok(x.clone());
        }
        if t == 1.0 {
            return Ok(y.clone());
        }
        Ok(match (self, x, y) {
            (Geometry::Euclidean { .. }, Point::Euclidean(a), Point::Euclidean(b)) => {
                Point::Euclidean(euclidean::geodesic(a, b, t))
            }
            (Geometry::Hyperboloid { .. }, Point::Hyperboloid(a), Point::Hyperboloid(b)) => {
                Point::Hyperboloid(hyperboloid::geodesic(a, b, t))
            }
            (Geometry::SpdLogEuclidean { .. }, Point::Spd(a), Point::Spd(b)) => {
                Point::Spd(spd::log_euclidean_geodesic(a, b, t)?)
            }
            (Geometry::SpdLogCholesky { .. }, Point::Spd(a), Point::Spd(b)) => {
                Point::Spd(spd::log_cholesky_geodesic(a, b, t)?)
            }
            (Geometry::Spider { .. }, Point::Spider(a), Point::Spider(b)) => Point::Spider(spider::geodesic(a, b, t)),
            (Geometry::Product { factors, .. }, Point::Product(a), Point::Product(b)) => Point::Product(
                factors
                    .iter()
                    .zip(a.iter().zip(b))
                    .map(|(g, (u, v))| g.geodesic(u, v, t))
                    .collect::<Result<_>>()?,
            ),
            _ => unreachable!("shape already checked"),
        })
    }

    fn has_chart(&self) -> bool {
        match self {
            Geometry::Euclidean { .. } | Geometry::SpdLogEuclidean { .. } | Geometry::SpdLogCholesky { .. } => true,
            Geometry::Product { factors, .. } => factors.iter().all(Geometry::has_chart),
            Geometry::Hyperboloid { .. } | Geometry::Spider { .. } => false,
        }
    }

    fn chart_dim(&self) -> usize {
        match self {
            Geometry::Euclidean { dim } => *dim,
            Geometry::SpdLogEuclidean { size } => size * size,
            Geometry::SpdLogCholesky { size } => size * (size + 1) / 2,
            Geometry::Product { factors, .. } => factors.iter().map(Geometry::chart_dim).sum(),
            Geometry::Hyperboloid { .. } | Geometry::Spider { .. } => 0,
        }
    }

    fn chart(&self, x: &Point) -> Result<Vec<f64>> {
        if !self.has_chart() {
            return Err(Error::unsupported(format!("{} space has no flat chart", self.kind())));
        }
        self.check_shape(x)?;
        match (self, x) {
            (Geometry::Euclidean { .. }, Point::Euclidean(v)) => Ok(v.clone()),
            (Geometry::SpdLogEuclidean { .. }, Point::Spd(m)) => spd::log_euclidean_chart(m),
            (Geometry::SpdLogCholesky { .. }, Point::Spd(m)) => spd::log_cholesky_chart(m),
            (Geometry::Product { factors, weights }, Point::Product(cs)) => {
                let mut out = Vec::with_capacity(self.chart_dim());
                for ((g, w), c) in factors.iter().zip(weights).zip(cs) {
                    let s = w.sqrt();
                    out.extend(g.chart(c)?.into_iter().map(|v| s * v));
                }
                Ok(out)
            }
            _ => unreachable!("chart availability and shape already checked"),
        }
    }

    fn chart_inverse(&self, v: &[f64]) -> Result<Point> {
        if !self.has_chart() {
            return Err(Error::unsupported(format!("{} space has no flat chart", self.kind())));
        }
        if v.len() != self.chart_dim() {
            return Err(Error::input(format!(
                "chart vector has {} entries, expected {}",
                v.len(),
                self.chart_dim()
            )));
        }
        match self {
            Geometry::Euclidean { .. } => Ok(Point::Euclidean(v.to_vec())),
            Geometry::SpdLogEuclidean { size } => Ok(Point::Spd(spd::log_euclidean_chart_inverse(v, *size)?)),
            Geometry::SpdLogCholesky { size } => Ok(Point::Spd(spd::log_cholesky_chart_inverse(v, *size)?)),
            Geometry::Product { factors, weights } => {
                let mut offset = 0;
                let mut cs = Vec::with_capacity(factors.len());
                for (g, w) in factors.iter().zip(weights) {
                    let n = g.chart_dim();
                    let s = w.sqrt();
                    let part: Vec<f64> = v[offset..offset + n].iter().map(|x| x / s).collect();
                    cs.push(g.chart_inverse(&part)?);
                    offset += n;
                }
                Ok(Point::Product(cs))
            }
            _ => unreachable!("chart availability already checked"),
        }
    }
}

impl Space {
    pub fn new(geometry: Geometry) -> Result<Self> {
        geometry.check_parameters()?;
        Ok(Self {
            geometry,
            diameter: None,
        })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(Geometry::Euclidean { dim })
    }

    pub fn hyperboloid(dim: usize) -> Result<Self> {
        Self::new(Geometry::Hyperboloid { dim })
    }

    pub fn spd_log_euclidean(size: usize) -> Result<Self> {
        Self::new(Geometry::SpdLogEuclidean { size })
    }

    pub fn spd_log_cholesky(size: usize) -> Result<Self> {
        Self::new(Geometry::SpdLogCholesky { size })
    }

    pub fn spider(legs: usize) -> Result<Self> {
        Self::new(Geometry::Spider { legs })
    }

    /// Weighted product of the given factor spaces (their diameter bounds are dropped).
    pub fn product(factors: Vec<Space>, weights: Vec<f64>) -> Result<Self> {
        Self::new(Geometry::Product {
            factors: factors.into_iter().map(|s| s.geometry).collect(),
            weights,
        })
    }

    /// Attaches a bound on the diameter of the working region.
    pub fn with_diameter(mut self, diameter: f64) -> Result<Self> {
        if !(diameter.is_finite() && diameter > 0.0) {
            return Err(Error::input(format!("diameter bound must be positive, got {diameter}")));
        }
        self.diameter = Some(diameter);
        Ok(self)
    }

    pub fn diameter(&self) -> Option<f64> {
        self.diameter
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn kind(&self) -> SpaceKind {
        self.geometry.kind()
    }

    /// Full validity check: shape plus the per-space payload predicate.
    pub fn validate(&self, p: &Point) -> Result<()> {
        self.geometry.validate(p)
    }

    pub fn validate_atoms(&self, atoms: &WeightedAtoms) -> Result<()> {
        atoms.atoms().iter().try_for_each(|p| self.validate(p))
    }

    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.geometry.distance(x, y)
    }

    pub fn squared_distance(&self, x: &Point, y: &Point) -> Result<f64> {
        let d = self.distance(x, y)?;
        Ok(d * d)
    }

    /// The point `gamma(t)` on the geodesic from `x` (t = 0) to `y` (t = 1).
    pub fn geodesic(&self, x: &Point, y: &Point, t: f64) -> Result<Point> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::input(format!("geodesic parameter {t} outside [0, 1]")));
        }
        self.geometry.geodesic(x, y, t)
    }

    /// `F(x) = sum_i w_i d^2(x, y_i)`, the objective whose minimiser is the barycenter.
    pub fn variance_functional(&self, atoms: &WeightedAtoms, x: &Point) -> Result<f64> {
        let mut total = 0.0;
        for (y, w) in atoms.iter() {
            let d = self.distance(x, y)?;
            total += w * d * d;
        }
        Ok(total)
    }

    /// Whether this space is isometric to a Euclidean space through [`Space::chart`].
    pub fn has_chart(&self) -> bool {
        self.geometry.has_chart()
    }

    pub fn chart_dim(&self) -> Option<usize> {
        self.has_chart().then(|| self.geometry.chart_dim())
    }

    /// Isometry onto a Euclidean space: identity, matrix log, or the log-Cholesky
    /// map (products concatenate factor charts scaled by the square root of the weight).
    pub fn chart(&self, x: &Point) -> Result<Vec<f64>> {
        self.geometry.chart(x)
    }

    pub fn chart_inverse(&self, v: &[f64]) -> Result<Point> {
        self.geometry.chart_inverse(v)
    }

    /// A convenient reference point: origin, identity matrix, or the hub.
    pub fn base_point(&self) -> Point {
        base_point(&self.geometry)
    }
}

fn base_point(g: &Geometry) -> Point {
    match g {
        Geometry::Euclidean { dim } => Point::Euclidean(vec![0.0; *dim]),
        Geometry::Hyperboloid { dim } => Point::Hyperboloid(hyperboloid::origin(*dim)),
        Geometry::SpdLogEuclidean { size } | Geometry::SpdLogCholesky { size } => {
            Point::Spd(DMatrix::identity(*size, *size))
        }
        Geometry::Spider { .. } => Point::Spider(SpiderPoint::hub()),
        Geometry::Product { factors, .. } => Point::Product(factors.iter().map(base_point).collect()),
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.geometry {
            Geometry::Euclidean { dim } | Geometry::Hyperboloid { dim } => write!(f, "{}:{dim}", self.kind()),
            Geometry::SpdLogEuclidean { size } | Geometry::SpdLogCholesky { size } => {
                write!(f, "{}:{size}", self.kind())
            }
            Geometry::Spider { legs } => write!(f, "spider:{legs}"),
            Geometry::Product { factors, weights } => {
                f.write_str("product(")?;
                for (i, (g, w)) in factors.iter().zip(weights).enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(
                        f,
                        "{}*{w}",
                        Space {
                            geometry: g.clone(),
                            diameter: None
                        }
                    )?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn spd_scaled(n: usize, s: f64) -> Point {
        Point::Spd(DMatrix::identity(n, n).scale(s))
    }

    #[test]
    fn distance_examples() {
        let e = Space::euclidean(2).unwrap();
        let d = e.distance(&Point::Euclidean(vec![0.0, 0.0]), &Point::Euclidean(vec![3.0, 4.0]));
        assert_eq!(d.unwrap(), 5.0);

        let s = Space::spider(3).unwrap();
        assert_eq!(s.distance(&Point::spider(1, 1.0), &Point::spider(2, 2.0)).unwrap(), 3.0);

        let h = Space::hyperboloid(2).unwrap();
        let y = Point::Hyperboloid(vec![1f64.cosh(), 1f64.sinh(), 0.0]);
        assert_relative_eq!(h.distance(&h.base_point(), &y).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn kind_mismatch_is_invalid_input() {
        let e = Space::euclidean(2).unwrap();
        let err = e.distance(&Point::Euclidean(vec![0.0, 0.0]), &Point::spider(1, 1.0));
        assert!(matches!(err, Err(Error::InvalidInput(_))));
        let err = e.distance(&Point::Euclidean(vec![0.0]), &Point::Euclidean(vec![0.0, 1.0]));
        assert!(matches!(err, Err(Error::InvalidInput(_))));
        let s = Space::spider(3).unwrap();
        assert!(s.validate(&Point::spider(4, 1.0)).is_err());
    }

    #[test]
    fn geodesic_examples() {
        let e = Space::euclidean(2).unwrap();
        let m = e
            .geodesic(
                &Point::Euclidean(vec![0.0, 0.0]),
                &Point::Euclidean(vec![2.0, 4.0]),
                0.5,
            )
            .unwrap();
        assert_eq!(m, Point::Euclidean(vec![1.0, 2.0]));

        let s = Space::spider(3).unwrap();
        let hub = s.geodesic(&Point::spider(1, 2.0), &Point::spider(2, 2.0), 0.5).unwrap();
        assert_eq!(hub, Point::Spider(SpiderPoint::hub()));

        let le = Space::spd_log_euclidean(2).unwrap();
        let mid = le.geodesic(&spd_scaled(2, 1.0), &spd_scaled(2, E * E), 0.5).unwrap();
        assert!(mid.approx_eq(&spd_scaled(2, E), 1e-12));

        let h = Space::hyperboloid(2).unwrap();
        let y = Point::Hyperboloid(vec![2f64.cosh(), 2f64.sinh(), 0.0]);
        let mid = h.geodesic(&h.base_point(), &y, 0.5).unwrap();
        assert!(mid.approx_eq(&Point::Hyperboloid(vec![1f64.cosh(), 1f64.sinh(), 0.0]), 1e-12));
    }

    #[test]
    fn geodesic_parameter_out_of_range() {
        let e = Space::euclidean(1).unwrap();
        let (x, y) = (Point::Euclidean(vec![0.0]), Point::Euclidean(vec![1.0]));
        assert!(matches!(e.geodesic(&x, &y, 1.5), Err(Error::InvalidInput(_))));
        assert!(matches!(e.geodesic(&x, &y, -0.1), Err(Error::InvalidInput(_))));
        assert!(e.geodesic(&x, &y, f64::NAN).is_err());
    }

    #[test]
    fn degenerate_geodesic_returns_start() {
        let h = Space::hyperboloid(3).unwrap();
        let x = Point::Hyperboloid(hyperboloid::lift(&[0.3, -0.2, 1.1]));
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(h.geodesic(&x, &x, t).unwrap(), x);
        }
    }

    #[test]
    fn variance_functional_examples() {
        let line = Space::euclidean(1).unwrap();
        let atoms = WeightedAtoms::uniform(vec![Point::Euclidean(vec![0.0]), Point::Euclidean(vec![2.0])]).unwrap();
        assert_eq!(
            line.variance_functional(&atoms, &Point::Euclidean(vec![1.0])).unwrap(),
            1.0
        );

        let single = WeightedAtoms::single(Point::Euclidean(vec![0.7]));
        assert_eq!(
            line.variance_functional(&single, &Point::Euclidean(vec![0.7])).unwrap(),
            0.0
        );

        let s = Space::spider(3).unwrap();
        let legs = WeightedAtoms::uniform((1..=3).map(|l| Point::spider(l, 1.0)).collect()).unwrap();
        assert_relative_eq!(
            s.variance_functional(&legs, &Point::spider(1, 0.0)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn spd_validity_errors() {
        let le = Space::spd_log_euclidean(2).unwrap();
        let bad = Point::spd_from_row_slice(2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(le.validate(&bad), Err(Error::InvalidPoint(_))));
        let lc = Space::spd_log_cholesky(2).unwrap();
        assert!(matches!(
            lc.distance(&bad, &spd_scaled(2, 1.0)),
            Err(Error::InvalidPoint(_))
        ));
        let h = Space::hyperboloid(2).unwrap();
        assert!(matches!(
            h.validate(&Point::Hyperboloid(vec![1.0, 0.5, 0.0])),
            Err(Error::InvalidPoint(_))
        ));
    }

    #[test]
    fn parameter_checks() {
        assert!(Space::euclidean(0).is_err());
        assert!(Space::spider(1).is_err());
        assert!(Space::spd_log_cholesky(0).is_err());
        assert!(Space::euclidean(2).unwrap().with_diameter(0.0).is_err());
        assert!(Space::euclidean(2).unwrap().with_diameter(-1.0).is_err());
        assert_eq!(
            Space::euclidean(2).unwrap().with_diameter(3.0).unwrap().diameter(),
            Some(3.0)
        );
        let e = Space::euclidean(1).unwrap();
        assert!(Space::product(vec![e.clone(), e], vec![1.0]).is_err());
    }

    #[test]
    fn chart_examples() {
        let e = Space::euclidean(3).unwrap();
        let x = Point::Euclidean(vec![1.0, -2.0, 0.5]);
        assert_eq!(e.chart(&x).unwrap(), vec![1.0, -2.0, 0.5]);

        let le = Space::spd_log_euclidean(2).unwrap();
        let c = le.chart(&spd_scaled(2, E)).unwrap();
        for (a, b) in c.iter().zip([1.0, 0.0, 0.0, 1.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }

        let lc = Space::spd_log_cholesky(2).unwrap();
        assert_eq!(lc.chart(&spd_scaled(2, 1.0)).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn chart_unsupported_on_curved_spaces() {
        let h = Space::hyperboloid(2).unwrap();
        assert!(matches!(h.chart(&h.base_point()), Err(Error::Unsupported(_))));
        let s = Space::spider(3).unwrap();
        assert!(matches!(s.chart_inverse(&[0.0]), Err(Error::Unsupported(_))));
        let p = Space::product(vec![Space::euclidean(1).unwrap(), s], vec![1.0, 1.0]).unwrap();
        assert!(matches!(p.chart(&p.base_point()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn product_distance_and_chart() {
        let p = Space::product(
            vec![Space::euclidean(1).unwrap(), Space::spd_log_cholesky(1).unwrap()],
            vec![4.0, 1.0],
        )
        .unwrap();
        let x = Point::Product(vec![Point::Euclidean(vec![0.0]), spd_scaled(1, 1.0)]);
        let y = Point::Product(vec![Point::Euclidean(vec![1.0]), spd_scaled(1, E * E)]);
        // sqrt(4 * 1 + 1 * (log e)^2) where the Log-Cholesky chart of [e^2] is log(e) = 1
        assert_relative_eq!(p.distance(&x, &y).unwrap(), 5f64.sqrt(), epsilon = 1e-12);
        let cx = p.chart(&x).unwrap();
        let cy = p.chart(&y).unwrap();
        assert_relative_eq!(euclidean::distance(&cx, &cy), 5f64.sqrt(), epsilon = 1e-12);
        assert!(p.chart_inverse(&cy).unwrap().approx_eq(&y, 1e-12));
    }
}
