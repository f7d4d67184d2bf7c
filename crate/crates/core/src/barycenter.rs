//! Barycenters (Fréchet means) of finitely supported measures.
//!
//! Four routes to the minimiser of `F(x) = sum_i w_i d^2(x, y_i)`:
//!
//! * [`closed_form`]: weighted mean in a flat chart (Euclidean and both SPD metrics).
//! * [`cyclic_proximal`]: cyclic proximal point iterations; works in any NPC space
//!   and is the default for curved spaces.
//! * [`inductive`]: the stochastic inductive mean `s_{n+1} = gamma_{s_n, Y}(1/(n+1))`.
//! * [`oracle`]: exhaustive grid search, an independent check for tests.
//!
//! Cyclic proximal point converges at rate `O(1/k)`, which is too slow when a
//! barycenter is needed to 1e-9. [`Solver::auto`] therefore picks the most
//! accurate route per space: the chart mean on flat spaces, [`spider_exact`] on
//! spiders, factor-wise solutions on products, and on the hyperboloid a coarse
//! cyclic proximal run refined by [`hyperboloid_newton`].
//!
//! # The proximal step
//!
//! The proximal map of `x -> w d^2(x, y)` with step `lambda` minimises
//! `w d^2(z, y) + d^2(z, x) / (2 lambda)`. In an NPC space the minimiser lies on
//! the geodesic from `x` to `y`; writing `z = gamma(t)` and `D = d(x, y)` the
//! objective becomes `w (1-t)^2 D^2 + t^2 D^2 / (2 lambda)`, a quadratic in `t`
//! minimised at `t = 2 lambda w / (1 + 2 lambda w)` (see [`prox_parameter`]).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};

use crate::error::{Error, Result};
use crate::measure::WeightedAtoms;
use crate::space::{Geometry, Point, Space};
use crate::spaces::{hyperboloid, SpiderPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    ClosedForm,
    CyclicProximal,
    Inductive,
    /// Per-leg closed form on a spider.
    SpiderExact,
    /// Newton iterations in the spatial coordinates of the hyperboloid.
    HyperboloidNewton,
    /// Most accurate available route for the space (see the module docs).
    Auto,
}

/// Order in which a sweep visits the atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepOrder {
    /// `1, .., n` with step `lambda_k`.
    Cyclic,
    /// `1, .., n` then `n, .., 1`, each half with step `lambda_k / 2`.
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Stop once a full sweep moves the iterate by at most this distance.
    pub tolerance: f64,
    /// `c` in the step schedule `lambda_k = c / (k + 1)`.
    pub step_scale: f64,
    pub sweep: SweepOrder,
    /// Seed of the inductive solver's sampler.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            tolerance: 1e-8,
            step_scale: 1.0,
            sweep: SweepOrder::Symmetric,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::input("max_iterations must be at least 1"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::input("tolerance must be positive"));
        }
        if !(self.step_scale.is_finite() && self.step_scale > 0.0) {
            return Err(Error::input("step scale must be positive"));
        }
        Ok(())
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterResult {
    pub point: Point,
    /// Variance functional at `point`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub solver: SolverKind,
}

/// A solver choice together with its configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Solver {
    pub kind: SolverKind,
    pub config: SolverConfig,
}

impl Default for Solver {
    fn default() -> Self {
        Self::auto()
    }
}

impl Solver {
    pub fn auto() -> Self {
        Self {
            kind: SolverKind::Auto,
            config: SolverConfig::default(),
        }
    }

    pub fn closed_form() -> Self {
        Self {
            kind: SolverKind::ClosedForm,
            config: SolverConfig::default(),
        }
    }

    pub fn cyclic_proximal(config: SolverConfig) -> Self {
        Self {
            kind: SolverKind::CyclicProximal,
            config,
        }
    }

    pub fn inductive(config: SolverConfig) -> Self {
        Self {
            kind: SolverKind::Inductive,
            config,
        }
    }

    pub fn with_config(mut self, config: SolverConfig) -> Self {
        self.config = config;
        self
    }

    pub fn solve(&self, space: &Space, atoms: &WeightedAtoms) -> Result<BarycenterResult> {
        match self.kind {
            SolverKind::ClosedForm => closed_form(space, atoms),
            SolverKind::CyclicProximal => cyclic_proximal(space, atoms, &self.config),
            SolverKind::Inductive => inductive(space, atoms, &self.config),
            SolverKind::SpiderExact => spider_exact(space, atoms),
            SolverKind::HyperboloidNewton => {
                let start = atoms.atoms()[atoms.heaviest()].clone();
                hyperboloid_newton(space, atoms, &self.config, start)
            }
            SolverKind::Auto => auto(space, atoms, &self.config),
        }
    }

    /// Like [`Solver::solve`] but turns a non-converged run into
    /// [`Error::NotConverged`] carrying the partial result.
    pub fn solve_converged(&self, space: &Space, atoms: &WeightedAtoms) -> Result<BarycenterResult> {
        let result = self.solve(space, atoms)?;
        if result.converged {
            Ok(result)
        } else {
            Err(Error::NotConverged {
                partial: Box::new(result),
            })
        }
    }
}

/// Barycenter as the chart image of the weighted chart mean.
pub fn closed_form(space: &Space, atoms: &WeightedAtoms) -> Result<BarycenterResult> {
    let dim = space.chart_dim().ok_or_else(|| {
        Error::unsupported(format!(
            "closed-form barycenter needs a flat chart; {} has none",
            space.kind()
        ))
    })?;
    let mut mean = vec![0.0; dim];
    for (y, w) in atoms.iter() {
        space.validate(y)?;
        if w == 0.0 {
            continue;
        }
        for (m, c) in mean.iter_mut().zip(space.chart(y)?) {
            *m += w * c;
        }
    }
    let point = if atoms.len() == 1 {
        atoms.atoms()[0].clone()
    } else {
        space.chart_inverse(&mean)?
    };
    let objective = space.variance_functional(atoms, &point)?;
    Ok(BarycenterResult {
        point,
        objective,
        iterations: 1,
        converged: true,
        solver: SolverKind::ClosedForm,
    })
}

/// Geodesic parameter of the proximal step for `w d^2(., y)` with step `lambda`.
pub fn prox_parameter(lambda: f64, weight: f64) -> f64 {
    let a = 2.0 * lambda * weight;
    a / (1.0 + a)
}

/// Cyclic proximal point started at the heaviest atom.
pub fn cyclic_proximal(space: &Space, atoms: &WeightedAtoms, config: &SolverConfig) -> Result<BarycenterResult> {
    let start = atoms.atoms()[atoms.heaviest()].clone();
    cyclic_proximal_from(space, atoms, config, start)
}

pub fn cyclic_proximal_from(
    space: &Space,
    atoms: &WeightedAtoms,
    config: &SolverConfig,
    start: Point,
) -> Result<BarycenterResult> {
    config.validate()?;
    space.validate_atoms(atoms)?;
    space.validate(&start)?;
    let active: Vec<(&Point, f64)> = atoms.iter().filter(|(_, w)| *w > 0.0).collect();

    let mut x = start;
    let mut iterations = 0;
    let mut converged = false;
    for k in 0..config.max_iterations {
        let lambda = config.step_scale / (k + 1) as f64;
        let before = x.clone();
        match config.sweep {
            SweepOrder::Cyclic => {
                for (y, w) in &active {
                    x = space.geodesic(&x, y, prox_parameter(lambda, *w))?;
                }
            }
            SweepOrder::Symmetric => {
                let half = 0.5 * lambda;
                for (y, w) in active.iter().chain(active.iter().rev()) {
                    x = space.geodesic(&x, y, prox_parameter(half, *w))?;
                }
            }
        }
        iterations = k + 1;
        if space.distance(&before, &x)? <= config.tolerance {
            converged = true;
            break;
        }
    }
    let objective = space.variance_functional(atoms, &x)?;
    Ok(BarycenterResult {
        point: x,
        objective,
        iterations,
        converged,
        solver: SolverKind::CyclicProximal,
    })
}

/// Inductive mean driven by i.i.d. draws from the weights; runs exactly
/// `max_iterations` steps. `converged` reports whether the last step moved by
/// at most the tolerance.
pub fn inductive(space: &Space, atoms: &WeightedAtoms, config: &SolverConfig) -> Result<BarycenterResult> {
    config.validate()?;
    space.validate_atoms(atoms)?;
    let support: Vec<usize> = (0..atoms.len()).filter(|&i| atoms.weights()[i] > 0.0).collect();
    if support.len() == 1 {
        let point = atoms.atoms()[support[0]].clone();
        let objective = space.variance_functional(atoms, &point)?;
        return Ok(BarycenterResult {
            point,
            objective,
            iterations: 1,
            converged: true,
            solver: SolverKind::Inductive,
        });
    }
    let sampler = WeightedIndex::new(atoms.weights()).map_err(|e| Error::input(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut s = atoms.atoms()[sampler.sample(&mut rng)].clone();
    let mut last_move = f64::INFINITY;
    for n in 1..config.max_iterations {
        let y = &atoms.atoms()[sampler.sample(&mut rng)];
        let next = space.geodesic(&s, y, 1.0 / (n + 1) as f64)?;
        last_move = space.distance(&s, &next)?;
        s = next;
    }
    let objective = space.variance_functional(atoms, &s)?;
    Ok(BarycenterResult {
        point: s,
        objective,
        iterations: config.max_iterations,
        converged: last_move <= config.tolerance,
        solver: SolverKind::Inductive,
    })
}

fn auto(space: &Space, atoms: &WeightedAtoms, config: &SolverConfig) -> Result<BarycenterResult> {
    if space.has_chart() {
        return closed_form(space, atoms);
    }
    let result = match space.geometry() {
        Geometry::Spider { .. } => spider_exact(space, atoms)?,
        Geometry::Hyperboloid { .. } => {
            let coarse = SolverConfig {
                tolerance: config.tolerance.max(1e-4),
                ..config.clone()
            };
            let start = cyclic_proximal(space, atoms, &coarse)?.point;
            hyperboloid_newton(space, atoms, config, start)?
        }
        Geometry::Product { factors, .. } => {
            let mut components = Vec::with_capacity(factors.len());
            let mut iterations = 0;
            let mut converged = true;
            for (i, g) in factors.iter().enumerate() {
                let factor = Space::new(g.clone())?;
                let marginal = marginal(atoms, i)?;
                let r = auto(&factor, &marginal, config)?;
                iterations = iterations.max(r.iterations);
                converged &= r.converged;
                components.push(r.point);
            }
            let point = Point::Product(components);
            let objective = space.variance_functional(atoms, &point)?;
            BarycenterResult {
                point,
                objective,
                iterations,
                converged,
                solver: SolverKind::Auto,
            }
        }
        _ => cyclic_proximal(space, atoms, config)?,
    };
    Ok(result)
}

/// The `i`-th factor marginal of a measure on a product space. The variance
/// functional of a product separates, so its barycenter is the tuple of the
/// marginals' barycenters.
fn marginal(atoms: &WeightedAtoms, i: usize) -> Result<WeightedAtoms> {
    let components = atoms
        .atoms()
        .iter()
        .map(|p| match p {
            Point::Product(cs) => cs
                .get(i)
                .cloned()
                .ok_or_else(|| Error::input("product point has too few components")),
            other => Err(Error::input(format!("{} point in a product space", other.kind_name()))),
        })
        .collect::<Result<Vec<_>>>()?;
    WeightedAtoms::new(components, atoms.weights().to_vec())
}

/// Exact barycenter on a spider.
///
/// On leg `j` the variance functional reads `r^2 - 2 r (2 S_j - T) + const`,
/// where `S_j` is the weighted radius mass on leg `j` and `T` the total one, so
/// it is minimised at `r = max(0, 2 S_j - T)`. At most one leg can have
/// `S_j > T / 2`; if none does, the barycenter is the hub.
pub fn spider_exact(space: &Space, atoms: &WeightedAtoms) -> Result<BarycenterResult> {
    let legs = match space.geometry() {
        Geometry::Spider { legs } => *legs,
        _ => return Err(Error::unsupported(format!("spider barycenter formula on {space}"))),
    };
    space.validate_atoms(atoms)?;
    let mut per_leg = vec![0.0; legs + 1];
    let mut total = 0.0;
    for (p, w) in atoms.iter() {
        let s = p.as_spider().expect("validated spider point");
        per_leg[s.leg()] += w * s.radius();
        total += w * s.radius();
    }
    let mut best = SpiderPoint::hub();
    for (leg, mass) in per_leg.iter().enumerate().skip(1) {
        let r = 2.0 * mass - total;
        if r > best.radius() {
            best = SpiderPoint::new(leg, r);
        }
    }
    let point = Point::Spider(best);
    let objective = space.variance_functional(atoms, &point)?;
    Ok(BarycenterResult {
        point,
        objective,
        iterations: 1,
        converged: true,
        solver: SolverKind::SpiderExact,
    })
}

/// `d / sinh(d)`, continuous at 0.
fn d_over_sinh(d: f64) -> f64 {
    if d < 1e-4 {
        1.0 - d * d / 6.0
    } else {
        d / d.sinh()
    }
}

/// Gradient of `F(lift(u))` with respect to the spatial coordinates `u`.
///
/// With `q = -<lift(u), y>_M = x_0 y_0 - u . y_s` and `d = arccosh(q)`,
/// `d(d^2)/du = 2 (d / sinh d) (y_0 u / x_0 - y_s)`.
fn hyperboloid_gradient(u: &[f64], atoms: &[(Vec<f64>, f64)]) -> Vec<f64> {
    let x = hyperboloid::lift(u);
    let mut g = vec![0.0; u.len()];
    for (y, w) in atoms {
        let d = hyperboloid::distance(&x, y);
        let c = 2.0 * w * d_over_sinh(d);
        for i in 0..u.len() {
            g[i] += c * (y[0] * u[i] / x[0] - y[i + 1]);
        }
    }
    g
}

fn hyperboloid_objective(u: &[f64], atoms: &[(Vec<f64>, f64)]) -> f64 {
    let x = hyperboloid::lift(u);
    atoms
        .iter()
        .map(|(y, w)| w * hyperboloid::distance(&x, y).powi(2))
        .sum()
}

/// Damped Newton iterations on the variance functional written in the spatial
/// coordinates `u` of `x = (sqrt(1 + |u|^2), u)`. The gradient is analytic; the
/// Hessian is a central difference of it. `converged` reports whether the last
/// accepted step was at most the tolerance.
pub fn hyperboloid_newton(
    space: &Space,
    atoms: &WeightedAtoms,
    config: &SolverConfig,
    start: Point,
) -> Result<BarycenterResult> {
    if !matches!(space.geometry(), Geometry::Hyperboloid { .. }) {
        return Err(Error::unsupported(format!("hyperboloid Newton solver on {space}")));
    }
    config.validate()?;
    space.validate_atoms(atoms)?;
    space.validate(&start)?;
    let active: Vec<(Vec<f64>, f64)> = atoms
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(p, w)| (p.as_slice().expect("validated hyperboloid point").to_vec(), w))
        .collect();
    let mut u = start.as_slice().expect("validated hyperboloid point")[1..].to_vec();
    let dim = u.len();
    let mut value = hyperboloid_objective(&u, &active);
    let mut last_step = f64::INFINITY;
    let mut iterations = 0;
    for _ in 0..config.max_iterations.min(100) {
        iterations += 1;
        let g = hyperboloid_gradient(&u, &active);
        let scale = 1.0 + u.iter().map(|v| v * v).sum::<f64>().sqrt();
        let h = 1e-5 * scale;
        let mut hess = nalgebra::DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[j] += h;
            dn[j] -= h;
            let (gp, gm) = (hyperboloid_gradient(&up, &active), hyperboloid_gradient(&dn, &active));
            for i in 0..dim {
                hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let grad = nalgebra::DVector::from_vec(g.clone());
        let mut step: Vec<f64> = match hess.cholesky() {
            Some(chol) => chol.solve(&grad).iter().map(|v| -v).collect(),
            None => g.iter().map(|v| -0.5 * v).collect(),
        };
        // backtracking keeps every accepted step a descent step
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, b)| a + b).collect();
            let trial_value = hyperboloid_objective(&trial, &active);
            if trial_value <= value {
                let x_old = hyperboloid::lift(&u);
                let x_new = hyperboloid::lift(&trial);
                last_step = hyperboloid::distance(&x_old, &x_new);
                u = trial;
                value = trial_value;
                accepted = true;
                break;
            }
            step.iter_mut().for_each(|s| *s *= 0.5);
        }
        if !accepted {
            // no representable descent left: we sit at the minimiser up to rounding
            last_step = 0.0;
            break;
        }
        if last_step <= 1e-15 * scale {
            break;
        }
    }
    let point = Point::Hyperboloid(hyperboloid::lift(&u));
    let objective = space.variance_functional(atoms, &point)?;
    Ok(BarycenterResult {
        point,
        objective,
        iterations,
        converged: last_step <= config.tolerance,
        solver: SolverKind::HyperboloidNewton,
    })
}

/// Grid used by [`oracle`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Mesh size of the coarse pass (coordinate units; radius units on a spider).
    pub step: f64,
    /// Margin added around the bounding box of the atoms.
    pub padding: f64,
    /// The refinement pass uses mesh `step / refine`.
    pub refine: usize,
}

impl GridSpec {
    pub fn new(step: f64) -> Self {
        Self {
            step,
            padding: 0.5,
            refine: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub point: Point,
    pub objective: f64,
    /// Coarse minimiser sat on the outer boundary of the search region, so the
    /// region may not bracket the true minimiser.
    pub on_boundary: bool,
}

const MAX_GRID_POINTS: usize = 20_000_000;

/// Brute-force minimisation of the variance functional over a grid, followed by
/// one refinement pass around the best cell.
///
/// Supported on Euclidean space and hyperbolic space (spatial coordinates
/// `x_1..x_d` of the hyperboloid) up to dimension 3, and on spiders.
pub fn oracle(space: &Space, atoms: &WeightedAtoms, grid: &GridSpec) -> Result<OracleResult> {
    if !(grid.step.is_finite() && grid.step > 0.0) || grid.padding < 0.0 || grid.refine == 0 {
        return Err(Error::input(
            "grid step must be positive, padding non-negative, refine at least 1",
        ));
    }
    space.validate_atoms(atoms)?;
    match space.geometry() {
        Geometry::Euclidean { dim } if *dim <= 3 => {
            let coords: Vec<&[f64]> = atoms.atoms().iter().filter_map(Point::as_slice).collect();
            box_oracle(space, atoms, grid, &coords, |v| Point::Euclidean(v.to_vec()))
        }
        Geometry::Hyperboloid { dim } if *dim <= 3 => {
            let coords: Vec<&[f64]> = atoms
                .atoms()
                .iter()
                .filter_map(|p| p.as_slice().map(|s| &s[1..]))
                .collect();
            box_oracle(space, atoms, grid, &coords, |v| {
                Point::Hyperboloid(hyperboloid::lift(v))
            })
        }
        Geometry::Spider { legs } => spider_oracle(space, atoms, grid, *legs),
        _ => Err(Error::unsupported(format!("no grid oracle for {space}"))),
    }
}

fn box_oracle(
    space: &Space,
    atoms: &WeightedAtoms,
    grid: &GridSpec,
    coords: &[&[f64]],
    to_point: impl Fn(&[f64]) -> Point,
) -> Result<OracleResult> {
    let dim = coords[0].len();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for c in coords {
        for i in 0..dim {
            lo[i] = lo[i].min(c[i]);
            hi[i] = hi[i].max(c[i]);
        }
    }
    for i in 0..dim {
        lo[i] -= grid.padding;
        hi[i] += grid.padding;
    }
    let (best, counts) = scan_box(space, atoms, &lo, &hi, grid.step, &to_point)?;
    let on_boundary = best
        .1
        .iter()
        .zip(&counts)
        .any(|(&idx, &n)| n > 1 && (idx == 0 || idx + 1 == n));

    let fine = grid.step / grid.refine as f64;
    let centre = best.0;
    let flo: Vec<f64> = centre.iter().map(|c| c - grid.step).collect();
    let fhi: Vec<f64> = centre.iter().map(|c| c + grid.step).collect();
    let (refined, _) = scan_box(space, atoms, &flo, &fhi, fine, &to_point)?;
    let point = to_point(&refined.0);
    let objective = space.variance_functional(atoms, &point)?;
    Ok(OracleResult {
        point,
        objective,
        on_boundary,
    })
}

type BoxBest = (Vec<f64>, Vec<usize>);

fn scan_box(
    space: &Space,
    atoms: &WeightedAtoms,
    lo: &[f64],
    hi: &[f64],
    step: f64,
    to_point: &impl Fn(&[f64]) -> Point,
) -> Result<(BoxBest, Vec<usize>)> {
    let counts: Vec<usize> = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| ((b - a) / step).round() as usize + 1)
        .collect();
    let total = counts.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
    match total {
        Some(t) if t <= MAX_GRID_POINTS => {}
        _ => return Err(Error::input("grid too fine for the search region")),
    }
    let mut index = vec![0usize; counts.len()];
    let mut coords = lo.to_vec();
    let mut best: Option<(f64, Vec<f64>, Vec<usize>)> = None;
    loop {
        for (i, &k) in index.iter().enumerate() {
            coords[i] = lo[i] + k as f64 * step;
        }
        let value = space.variance_functional(atoms, &to_point(&coords))?;
        if best.as_ref().is_none_or(|(b, _, _)| value < *b) {
            best = Some((value, coords.clone(), index.clone()));
        }
        // odometer increment
        let mut axis = 0;
        loop {
            if axis == counts.len() {
                let (_, c, idx) = best.expect("grid has at least one point");
                return Ok(((c, idx), counts));
            }
            index[axis] += 1;
            if index[axis] < counts[axis] {
                break;
            }
            index[axis] = 0;
            axis += 1;
        }
    }
}

fn spider_oracle(space: &Space, atoms: &WeightedAtoms, grid: &GridSpec, legs: usize) -> Result<OracleResult> {
    let max_radius = atoms
        .atoms()
        .iter()
        .filter_map(Point::as_spider)
        .map(SpiderPoint::radius)
        .fold(0.0, f64::max)
        + grid.padding;
    let steps = (max_radius / grid.step).ceil() as usize;
    if steps.saturating_mul(legs) > MAX_GRID_POINTS {
        return Err(Error::input("grid too fine for the search region"));
    }

    let scan = |legs_to_scan: &[usize], from: f64, to: f64, step: f64| -> Result<(f64, SpiderPoint, bool)> {
        let n = ((to - from) / step).round() as usize;
        let mut best = (f64::INFINITY, SpiderPoint::hub(), false);
        for &leg in legs_to_scan {
            for i in 0..=n {
                let r = (from + i as f64 * step).max(0.0);
                let p = SpiderPoint::new(leg, r);
                let value = space.variance_functional(atoms, &Point::Spider(p))?;
                if value < best.0 {
                    best = (value, p, i == n);
                }
            }
        }
        Ok(best)
    };

    let all_legs: Vec<usize> = (1..=legs).collect();
    let (_, coarse, on_boundary) = scan(&all_legs, 0.0, steps as f64 * grid.step, grid.step)?;
    let fine = grid.step / grid.refine as f64;
    let (_, refined, _) = if coarse.radius() < grid.step {
        scan(&all_legs, 0.0, grid.step, fine)?
    } else {
        scan(
            &[coarse.leg()],
            coarse.radius() - grid.step,
            coarse.radius() + grid.step,
            fine,
        )?
    };
    let point = Point::Spider(refined);
    let objective = space.variance_functional(atoms, &point)?;
    Ok(OracleResult {
        point,
        objective,
        on_boundary,
    })
}

/// `sum_i w_i (d^2(x, y_i) - d^2(x*, y_i)) - d^2(x, x*)` with `x*` solved by
/// `solver`. Non-negative in every NPC space; identically zero in flat ones.
pub fn variance_inequality_slack(space: &Space, atoms: &WeightedAtoms, x: &Point, solver: &Solver) -> Result<f64> {
    let star = solver.solve(space, atoms)?;
    variance_inequality_slack_at(space, atoms, x, &star.point)
}

/// Same as [`variance_inequality_slack`] with a given barycenter.
pub fn variance_inequality_slack_at(space: &Space, atoms: &WeightedAtoms, x: &Point, star: &Point) -> Result<f64> {
    let mut gap = 0.0;
    for (y, w) in atoms.iter() {
        gap += w * (space.squared_distance(x, y)? - space.squared_distance(star, y)?);
    }
    Ok(gap - space.squared_distance(x, star)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn line(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|x| Point::Euclidean(vec![*x])).collect()
    }

    fn coordinate(p: &Point) -> f64 {
        p.as_slice().unwrap()[0]
    }

    #[test]
    fn prox_parameter_example() {
        assert_eq!(prox_parameter(0.5, 1.0), 0.5);
    }

    #[test]
    fn prox_parameter_minimises_the_one_dimensional_quadratic() {
        // brute-force the minimiser of w(1-t)^2 + t^2/(2 lambda) over t in [0,1]
        for &(lambda, w) in &[(0.5, 1.0), (0.1, 0.3), (3.0, 0.25)] {
            let f = |t: f64| w * (1.0 - t).powi(2) + t * t / (2.0 * lambda);
            let best = (0..=100_000)
                .map(|i| i as f64 / 100_000.0)
                .min_by(|a, b| f(*a).total_cmp(&f(*b)))
                .unwrap();
            assert!((best - prox_parameter(lambda, w)).abs() <= 1e-5);
        }
    }

    #[test]
    fn closed_form_examples() {
        let e = Space::euclidean(1).unwrap();
        let r = closed_form(&e, &WeightedAtoms::uniform(line(&[0.0, 2.0])).unwrap()).unwrap();
        assert_eq!(coordinate(&r.point), 1.0);
        assert!(r.converged);
        assert_eq!(r.iterations, 1);

        let le = Space::spd_log_euclidean(2).unwrap();
        let atoms = WeightedAtoms::uniform(vec![
            Point::spd_from_row_slice(2, &[1.0, 0.0, 0.0, 1.0]),
            Point::spd_from_row_slice(2, &[E * E, 0.0, 0.0, E * E]),
        ])
        .unwrap();
        let r = closed_form(&le, &atoms).unwrap();
        assert!(r
            .point
            .approx_eq(&Point::spd_from_row_slice(2, &[E, 0.0, 0.0, E]), 1e-12));

        let single = Point::spd_from_row_slice(2, &[2.0, 0.3, 0.3, 1.0]);
        let r = closed_form(&le, &WeightedAtoms::single(single.clone())).unwrap();
        assert_eq!(r.point, single);
    }

    #[test]
    fn closed_form_unsupported_on_curved_spaces() {
        let s = Space::spider(3).unwrap();
        let atoms = WeightedAtoms::single(Point::spider(1, 1.0));
        assert!(matches!(closed_form(&s, &atoms), Err(Error::Unsupported(_))));
    }

    #[test]
    fn cyclic_proximal_on_symmetric_spider() {
        let s = Space::spider(3).unwrap();
        let atoms = WeightedAtoms::uniform((1..=3).map(|l| Point::spider(l, 1.0)).collect()).unwrap();
        let r = cyclic_proximal(&s, &atoms, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        // the hub is a kink of F; proximal steps overshoot it by O(lambda)
        assert!(r.point.as_spider().unwrap().radius() < 1e-3);
        assert_relative_eq!(r.objective, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn cyclic_proximal_on_two_legged_spider_matches_the_line() {
        let s = Space::spider(2).unwrap();
        let atoms = WeightedAtoms::uniform(vec![Point::spider(1, 3.0), Point::spider(2, 1.0)]).unwrap();
        let r = cyclic_proximal(&s, &atoms, &SolverConfig::default()).unwrap();
        let p = r.point.as_spider().unwrap();
        assert_eq!(p.leg(), 1);
        assert!((p.radius() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn spider_exact_examples() {
        let s = Space::spider(3).unwrap();
        let legs = WeightedAtoms::uniform((1..=3).map(|l| Point::spider(l, 1.0)).collect()).unwrap();
        let r = spider_exact(&s, &legs).unwrap();
        assert!(r.point.as_spider().unwrap().is_hub());
        assert_relative_eq!(r.objective, 1.0, epsilon = 1e-15);

        let s2 = Space::spider(2).unwrap();
        let pair = WeightedAtoms::uniform(vec![Point::spider(1, 3.0), Point::spider(2, 1.0)]).unwrap();
        assert_eq!(spider_exact(&s2, &pair).unwrap().point, Point::spider(1, 1.0));

        let heavy = WeightedAtoms::new(
            vec![Point::spider(2, 2.0), Point::spider(1, 1.0), Point::spider(3, 0.5)],
            vec![0.6, 0.3, 0.1],
        )
        .unwrap();
        // 2 * 1.2 - 1.55 on leg 2
        assert!(spider_exact(&s, &heavy)
            .unwrap()
            .point
            .approx_eq(&Point::spider(2, 0.85), 1e-14));
        assert!(matches!(
            spider_exact(
                &Space::euclidean(1).unwrap(),
                &WeightedAtoms::single(Point::Euclidean(vec![0.0]))
            ),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn spider_exact_agrees_with_the_grid() {
        let s = Space::spider(4).unwrap();
        let atoms = WeightedAtoms::new(
            vec![
                Point::spider(1, 0.7),
                Point::spider(2, 1.9),
                Point::spider(2, 0.4),
                Point::spider(4, 1.1),
            ],
            vec![0.1, 0.35, 0.25, 0.3],
        )
        .unwrap();
        let exact = spider_exact(&s, &atoms).unwrap();
        let grid = oracle(&s, &atoms, &GridSpec::new(1e-3)).unwrap();
        assert!(exact.objective <= grid.objective + 1e-12);
        assert!(s.distance(&exact.point, &grid.point).unwrap() <= 2e-3);
    }

    #[test]
    fn hyperboloid_newton_reaches_the_midpoint() {
        let h = Space::hyperboloid(2).unwrap();
        let ends = WeightedAtoms::uniform(vec![
            Point::Hyperboloid(vec![1f64.cosh(), -(1f64.sinh()), 0.0]),
            Point::Hyperboloid(vec![3f64.cosh(), 3f64.sinh(), 0.0]),
        ])
        .unwrap();
        let r = Solver::auto().solve(&h, &ends).unwrap();
        assert_eq!(r.solver, SolverKind::HyperboloidNewton);
        assert!(r.converged);
        let mid = Point::Hyperboloid(vec![1f64.cosh(), 1f64.sinh(), 0.0]);
        assert!(h.distance(&r.point, &mid).unwrap() <= 1e-10);
    }

    #[test]
    fn hyperboloid_newton_beats_cyclic_proximal() {
        let h = Space::hyperboloid(3).unwrap();
        let pts = [[0.3, -1.0, 0.2], [1.5, 0.4, -0.7], [-0.8, 0.9, 1.1], [0.0, -0.2, -1.4]];
        let atoms = WeightedAtoms::new(
            pts.iter().map(|u| Point::Hyperboloid(hyperboloid::lift(u))).collect(),
            vec![0.1, 0.4, 0.3, 0.2],
        )
        .unwrap();
        let newton = Solver::auto().solve(&h, &atoms).unwrap();
        let cpp = cyclic_proximal(&h, &atoms, &SolverConfig::default().with_tolerance(1e-10)).unwrap();
        assert!(newton.objective <= cpp.objective + 1e-12);
        assert!(h.distance(&newton.point, &cpp.point).unwrap() <= 1e-5);
        // first-order condition: F grows quadratically away from the minimiser
        for (i, u) in pts.iter().enumerate() {
            let away = h
                .geodesic(&newton.point, &atoms.atoms()[i], 1e-4 / (1.0 + u[0].abs()))
                .unwrap();
            let d = h.distance(&newton.point, &away).unwrap();
            let gain = h.variance_functional(&atoms, &away).unwrap() - newton.objective;
            assert!(gain >= 0.99 * d * d);
        }
    }

    #[test]
    fn auto_on_products_solves_each_factor() {
        let p = Space::product(
            vec![Space::euclidean(1).unwrap(), Space::spider(3).unwrap()],
            vec![1.0, 2.0],
        )
        .unwrap();
        let atoms = WeightedAtoms::uniform(vec![
            Point::Product(vec![Point::Euclidean(vec![0.0]), Point::spider(1, 1.0)]),
            Point::Product(vec![Point::Euclidean(vec![2.0]), Point::spider(1, 2.0)]),
        ])
        .unwrap();
        let r = Solver::auto().solve(&p, &atoms).unwrap();
        let expected = Point::Product(vec![Point::Euclidean(vec![1.0]), Point::spider(1, 1.5)]);
        assert!(r.point.approx_eq(&expected, 1e-14));
    }

    #[test]
    fn plain_cyclic_sweep_also_converges() {
        let e = Space::euclidean(1).unwrap();
        let atoms = WeightedAtoms::new(line(&[0.0, 2.0, 5.0]), vec![0.2, 0.5, 0.3]).unwrap();
        let cfg = SolverConfig {
            sweep: SweepOrder::Cyclic,
            ..SolverConfig::default()
        };
        let r = cyclic_proximal(&e, &atoms, &cfg).unwrap();
        assert!((coordinate(&r.point) - 2.5).abs() < 1e-3);
    }

    #[test]
    fn honest_non_convergence_flag() {
        let e = Space::euclidean(1).unwrap();
        let atoms = WeightedAtoms::uniform(line(&[0.0, 10.0])).unwrap();
        let cfg = SolverConfig::default().with_max_iterations(3);
        let r = cyclic_proximal(&e, &atoms, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
        let err = Solver::cyclic_proximal(cfg).solve_converged(&e, &atoms);
        assert!(matches!(err, Err(Error::NotConverged { .. })));
    }

    #[test]
    fn inductive_examples() {
        let e = Space::euclidean(1).unwrap();
        let single = WeightedAtoms::single(Point::Euclidean(vec![4.0]));
        let r = inductive(&e, &single, &SolverConfig::default()).unwrap();
        assert_eq!(r.point, Point::Euclidean(vec![4.0]));
        assert_eq!(r.iterations, 1);

        let twins = WeightedAtoms::uniform(line(&[1.5, 1.5])).unwrap();
        let r = inductive(&e, &twins, &SolverConfig::default().with_max_iterations(1000)).unwrap();
        assert_eq!(r.point, Point::Euclidean(vec![1.5]));

        let pair = WeightedAtoms::uniform(line(&[0.0, 2.0])).unwrap();
        let cfg = SolverConfig::default().with_max_iterations(100_000).with_seed(42);
        let r = inductive(&e, &pair, &cfg).unwrap();
        assert!((coordinate(&r.point) - 1.0).abs() < 0.05);
        // same seed, same answer
        assert_eq!(inductive(&e, &pair, &cfg).unwrap().point, r.point);
    }

    #[test]
    fn oracle_examples() {
        let e = Space::euclidean(1).unwrap();
        let pair = WeightedAtoms::uniform(line(&[0.0, 2.0])).unwrap();
        let grid = GridSpec {
            step: 1e-3,
            padding: 1.0,
            refine: 10,
        };
        let r = oracle(&e, &pair, &grid).unwrap();
        assert!((coordinate(&r.point) - 1.0).abs() <= 1e-3);
        assert!(!r.on_boundary);

        let s = Space::spider(3).unwrap();
        let legs = WeightedAtoms::uniform((1..=3).map(|l| Point::spider(l, 1.0)).collect()).unwrap();
        let r = oracle(&s, &legs, &GridSpec::new(1e-3)).unwrap();
        assert!(r.point.as_spider().unwrap().radius() <= 1e-3);

        let h = Space::hyperboloid(2).unwrap();
        let ends = WeightedAtoms::uniform(vec![
            h.base_point(),
            Point::Hyperboloid(vec![2f64.cosh(), 2f64.sinh(), 0.0]),
        ])
        .unwrap();
        let r = oracle(&h, &ends, &GridSpec::new(1e-2)).unwrap();
        let mid = Point::Hyperboloid(vec![1f64.cosh(), 1f64.sinh(), 0.0]);
        assert!(h.distance(&r.point, &mid).unwrap() <= 1e-2);
    }

    #[test]
    fn oracle_flags_unbracketed_minimiser() {
        let e = Space::euclidean(1).unwrap();
        let pair = WeightedAtoms::uniform(line(&[0.0, 2.0])).unwrap();
        // zero padding and a step that does not land on 1 still brackets; force a
        // lopsided measure whose minimiser is at an atom on the box edge
        let lopsided = WeightedAtoms::new(line(&[0.0, 2.0]), vec![1.0, 0.0]).unwrap();
        let r = oracle(
            &e,
            &lopsided,
            &GridSpec {
                step: 0.1,
                padding: 0.0,
                refine: 10,
            },
        )
        .unwrap();
        assert!(r.on_boundary);
        let r = oracle(
            &e,
            &pair,
            &GridSpec {
                step: 0.1,
                padding: 0.0,
                refine: 10,
            },
        )
        .unwrap();
        assert!(!r.on_boundary);
    }

    #[test]
    fn variance_inequality_examples() {
        let e = Space::euclidean(2).unwrap();
        let atoms = WeightedAtoms::new(
            vec![
                Point::Euclidean(vec![0.0, 1.0]),
                Point::Euclidean(vec![3.0, -1.0]),
                Point::Euclidean(vec![1.0, 1.0]),
            ],
            vec![0.2, 0.3, 0.5],
        )
        .unwrap();
        for x in [vec![5.0, 5.0], vec![-1.0, 0.25]] {
            let slack = variance_inequality_slack(&e, &atoms, &Point::Euclidean(x), &Solver::auto()).unwrap();
            assert!(slack.abs() <= 1e-9);
        }
        let star = closed_form(&e, &atoms).unwrap().point;
        assert!(
            variance_inequality_slack(&e, &atoms, &star, &Solver::auto())
                .unwrap()
                .abs()
                <= 1e-12
        );

        let s = Space::spider(3).unwrap();
        let legs = WeightedAtoms::uniform((1..=3).map(|l| Point::spider(l, 1.0)).collect()).unwrap();
        let slack = variance_inequality_slack_at(&s, &legs, &Point::spider(1, 1.0), &Point::spider(1, 0.0)).unwrap();
        // mean d^2 from (leg 1, 1) is (0 + 4 + 4)/3, from the hub 1, and d^2(x, hub) = 1
        assert_relative_eq!(slack, 2.0 / 3.0, epsilon = 1e-12);
    }
}
