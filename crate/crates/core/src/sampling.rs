//! Random points: region samplers for the property checkers and data
//! distributions for the batch experiments.
//!
//! A [`Region`] is a closed ball of radius `R` around a space's base point, so
//! every sampled pair is at distance at most `2R`. Sampling per space:
//!
//! * flat charts: uniform in the chart ball (the chart is an isometry);
//! * hyperboloid: a Gaussian tangent vector at the origin, resampled until its
//!   length is at most `R`, pushed through the exponential map;
//! * spider: uniform leg, radius uniform on `[0, R]`;
//! * products: each factor in a ball of radius `R / sqrt(sum of weights)`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution, StandardNormal};

use crate::barycenter::Solver;
use crate::error::{Error, Result};
use crate::measure::WeightedAtoms;
use crate::space::{Geometry, Point, Space};
use crate::spaces::{hyperboloid, SpiderPoint};

/// Closed ball of radius `radius` around the space's base point.
#[derive(Debug, Clone)]
pub struct Region {
    space: Space,
    radius: f64,
}

impl Region {
    pub fn new(space: Space, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::input(format!("region radius must be positive, got {radius}")));
        }
        Ok(Self { space, radius })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Upper bound on the distance between two points of the region.
    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        sample_ball(self.space.geometry(), self.radius, rng)
    }

    pub fn sample_many<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Point> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform point of the radius-`r` ball in `R^n`.
fn uniform_ball<R: Rng + ?Sized>(n: usize, r: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let g = gaussian_vector(n, rng);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let u: f64 = rng.random();
        let scale = r * u.powf(1.0 / n as f64) / norm;
        return g.into_iter().map(|v| v * scale).collect();
    }
}

/// Symmetric matrix from coordinates in the Frobenius-orthonormal basis
/// `{E_ii} u {(E_ij + E_ji) / sqrt 2 : i < j}`.
fn symmetric_from_basis(c: &[f64], size: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(size, size);
    let mut k = 0;
    for i in 0..size {
        m[(i, i)] = c[k];
        k += 1;
    }
    for i in 0..size {
        for j in i + 1..size {
            let v = c[k] / std::f64::consts::SQRT_2;
            m[(i, j)] = v;
            m[(j, i)] = v;
            k += 1;
        }
    }
    m
}

fn sample_ball<R: Rng + ?Sized>(g: &Geometry, r: f64, rng: &mut R) -> Point {
    match g {
        Geometry::Euclidean { dim } => Point::Euclidean(uniform_ball(*dim, r, rng)),
        Geometry::SpdLogEuclidean { size } => {
            let c = uniform_ball(size * (size + 1) / 2, r, rng);
            Point::Spd(crate::spaces::spd::exp(&symmetric_from_basis(&c, *size)))
        }
        Geometry::SpdLogCholesky { size } => {
            let c = uniform_ball(size * (size + 1) / 2, r, rng);
            Point::Spd(crate::spaces::spd::log_cholesky_chart_inverse(&c, *size).expect("chart length matches"))
        }
        Geometry::Hyperboloid { dim } => {
            let v = loop {
                let v: Vec<f64> = gaussian_vector(*dim, rng).into_iter().map(|x| x * r / 2.0).collect();
                if v.iter().map(|x| x * x).sum::<f64>().sqrt() <= r {
                    break v;
                }
            };
            let mut tangent = vec![0.0];
            tangent.extend(v);
            Point::Hyperboloid(hyperboloid::exp_map(&hyperboloid::origin(*dim), &tangent))
        }
        Geometry::Spider { legs } => {
            let leg = rng.random_range(1..=*legs);
            Point::Spider(SpiderPoint::new(leg, rng.random_range(0.0..=r)))
        }
        Geometry::Product { factors, weights } => {
            let scale = r / weights.iter().sum::<f64>().sqrt();
            Point::Product(factors.iter().map(|f| sample_ball(f, scale, rng)).collect())
        }
    }
}

/// Largest pairwise distance in `points`. In an NPC space this is also the
/// diameter of their geodesic convex hull, which contains every barycenter of
/// measures supported on them.
pub fn measured_diameter(space: &Space, points: &[Point]) -> Result<f64> {
    let mut best: f64 = 0.0;
    for (i, x) in points.iter().enumerate() {
        for y in &points[i + 1..] {
            best = best.max(space.distance(x, y)?);
        }
    }
    Ok(best)
}

/// Distribution of the outcomes `Z` in the batch experiments.
#[derive(Debug, Clone)]
pub enum DataDistribution {
    /// Finite support: `Z = y_i` with probability `w_i`.
    Categorical(WeightedAtoms),
    /// `chart_inverse(mean + std * N(0, I))` on a flat-chart space.
    ChartGaussian { space: Space, mean: Vec<f64>, std: f64 },
}

impl DataDistribution {
    pub fn categorical(support: WeightedAtoms) -> Self {
        DataDistribution::Categorical(support)
    }

    pub fn chart_gaussian(space: Space, mean: &Point, std: f64) -> Result<Self> {
        if !space.has_chart() {
            return Err(Error::unsupported(format!("chart Gaussian on {space}")));
        }
        if !(std.is_finite() && std >= 0.0) {
            return Err(Error::input(format!(
                "standard deviation must be non-negative, got {std}"
            )));
        }
        let mean = space.chart(mean)?;
        Ok(DataDistribution::ChartGaussian { space, mean, std })
    }

    /// The atoms, for finitely supported distributions.
    pub fn support(&self) -> Option<&WeightedAtoms> {
        match self {
            DataDistribution::Categorical(atoms) => Some(atoms),
            DataDistribution::ChartGaussian { .. } => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            DataDistribution::Categorical(atoms) => atoms.atoms()[self.sample_index(rng)].clone(),
            DataDistribution::ChartGaussian { space, mean, std } => {
                let v: Vec<f64> = mean
                    .iter()
                    .map(|m| m + std * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                space.chart_inverse(&v).expect("chart of matching length")
            }
        }
    }

    /// Index of a draw from the categorical support. Panics on a chart Gaussian.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            DataDistribution::Categorical(atoms) => WeightedIndex::new(atoms.weights())
                .expect("validated weights")
                .sample(rng),
            DataDistribution::ChartGaussian { .. } => panic!("chart Gaussian has no finite support"),
        }
    }

    /// Draw counts per support atom for `n` samples: the same law as drawing `n`
    /// indices and tallying them.
    pub fn sample_counts<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Option<Vec<usize>> {
        let atoms = self.support()?;
        let index = WeightedIndex::new(atoms.weights()).expect("validated weights");
        let mut counts = vec![0; atoms.len()];
        for _ in 0..n {
            counts[index.sample(rng)] += 1;
        }
        Some(counts)
    }

    /// Barycenter of the distribution: solved for a finite support, the chart
    /// mean for a chart Gaussian (its law is symmetric about the mean in an
    /// isometric chart).
    pub fn barycenter(&self, space: &Space, solver: &Solver) -> Result<Point> {
        match self {
            DataDistribution::Categorical(atoms) => Ok(solver.solve(space, atoms)?.point),
            DataDistribution::ChartGaussian { space: own, mean, .. } => own.chart_inverse(mean),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spaces() -> Vec<Space> {
        vec![
            Space::euclidean(3).unwrap(),
            Space::hyperboloid(2).unwrap(),
            Space::spd_log_euclidean(2).unwrap(),
            Space::spd_log_cholesky(3).unwrap(),
            Space::spider(3).unwrap(),
            Space::product(
                vec![Space::euclidean(1).unwrap(), Space::spider(2).unwrap()],
                vec![0.5, 2.0],
            )
            .unwrap(),
        ]
    }

    #[test]
    fn samples_stay_in_the_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for space in spaces() {
            let region = Region::new(space.clone(), 1.5).unwrap();
            let base = space.base_point();
            for _ in 0..500 {
                let p = region.sample(&mut rng);
                space.validate(&p).unwrap();
                assert!(space.distance(&base, &p).unwrap() <= 1.5 + 1e-9, "{space}");
            }
        }
    }

    #[test]
    fn symmetric_basis_is_orthonormal() {
        let c = [0.3, -1.2, 0.8, 0.5, -0.1, 2.0];
        let m = symmetric_from_basis(&c, 3);
        let norm: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((m.norm() - norm).abs() < 1e-14);
    }

    #[test]
    fn measured_diameter_of_spider_legs() {
        let s = Space::spider(3).unwrap();
        let pts = vec![Point::spider(1, 1.0), Point::spider(2, 2.0), Point::spider(2, 0.5)];
        assert_eq!(measured_diameter(&s, &pts).unwrap(), 3.0);
    }

    #[test]
    fn categorical_counts_match_weights() {
        let atoms = WeightedAtoms::new(
            vec![Point::Euclidean(vec![-1.0]), Point::Euclidean(vec![1.0])],
            vec![0.25, 0.75],
        )
        .unwrap();
        let dist = DataDistribution::categorical(atoms);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let counts = dist.sample_counts(100_000, &mut rng).unwrap();
        assert_eq!(counts.iter().sum::<usize>(), 100_000);
        assert!((counts[1] as f64 / 100_000.0 - 0.75).abs() < 0.01);
    }

    #[test]
    fn chart_gaussian_centres_on_its_mean() {
        let s = Space::spd_log_euclidean(2).unwrap();
        let mean = Point::spd_from_row_slice(2, &[2.0, 0.5, 0.5, 1.0]);
        let dist = DataDistribution::chart_gaussian(s.clone(), &mean, 0.3).unwrap();
        let b = dist.barycenter(&s, &Solver::auto()).unwrap();
        assert!(b.approx_eq(&mean, 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        s.validate(&dist.sample(&mut rng)).unwrap();
        assert!(DataDistribution::chart_gaussian(Space::spider(3).unwrap(), &Point::spider(1, 0.0), 1.0).is_err());
    }
}
