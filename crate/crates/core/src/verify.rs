//! Randomized checkers for the geometric inequalities behind the guarantees.
//!
//! Every checker draws its trials from a [`Region`] with a seeded generator,
//! computes a slack per trial (non-negative when the inequality holds) and
//! reports the worst one. Convexity-type claims are tested at midpoints, which
//! is enough for continuous functions.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::barycenter::{variance_inequality_slack_at, Solver};
use crate::error::Result;
use crate::measure::WeightedAtoms;
use crate::sampling::Region;
use crate::space::{Point, Space};
use crate::text::format_point;

/// Tolerance for the pointwise geometric checks.
pub const GEOMETRY_TOLERANCE: f64 = 1e-9;

/// Tolerance for checks that go through a barycenter solver.
pub const SOLVER_TOLERANCE: f64 = 1e-6;

/// Reference point of a distance-based test function.
#[derive(Debug, Clone, PartialEq)]
pub enum Anchor {
    Fixed(Point),
    /// Drawn afresh from the region on every trial.
    Random,
}

type PointFn = dyn Fn(&Space, &Point) -> Result<f64> + Send + Sync;

#[derive(Clone)]
pub enum TestFunction {
    SquaredDistance(Anchor),
    Distance(Anchor),
    NegSquaredDistance(Anchor),
    Constant(f64),
    /// `x -> <a, chart(x)>` on a flat-chart space.
    ChartLinear(Vec<f64>),
    Custom {
        name: String,
        f: Arc<PointFn>,
    },
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl TestFunction {
    pub fn custom(name: impl Into<String>, f: impl Fn(&Space, &Point) -> Result<f64> + Send + Sync + 'static) -> Self {
        TestFunction::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> String {
        let anchor = |a: &Anchor| match a {
            Anchor::Fixed(p) => format_point(p),
            Anchor::Random => "p".to_string(),
        };
        match self {
            TestFunction::SquaredDistance(a) => format!("d^2(.,{})", anchor(a)),
            TestFunction::Distance(a) => format!("d(.,{})", anchor(a)),
            TestFunction::NegSquaredDistance(a) => format!("-d^2(.,{})", anchor(a)),
            TestFunction::Constant(c) => format!("const {c}"),
            TestFunction::ChartLinear(_) => "chart-linear".to_string(),
            TestFunction::Custom { name, .. } => name.clone(),
        }
    }

    fn anchor(&self) -> Option<&Anchor> {
        match self {
            TestFunction::SquaredDistance(a) | TestFunction::Distance(a) | TestFunction::NegSquaredDistance(a) => {
                Some(a)
            }
            _ => None,
        }
    }

    /// Fixes the random anchor (if any) for one trial.
    fn instantiate<R: Rng + ?Sized>(&self, region: &Region, rng: &mut R) -> Option<Point> {
        match self.anchor() {
            Some(Anchor::Fixed(p)) => Some(p.clone()),
            Some(Anchor::Random) => Some(region.sample(rng)),
            None => None,
        }
    }

    fn eval(&self, space: &Space, anchor: Option<&Point>, x: &Point) -> Result<f64> {
        match self {
            TestFunction::SquaredDistance(_) => space.squared_distance(x, anchor.expect("anchored")),
            TestFunction::Distance(_) => space.distance(x, anchor.expect("anchored")),
            TestFunction::NegSquaredDistance(_) => Ok(-space.squared_distance(x, anchor.expect("anchored"))?),
            TestFunction::Constant(c) => Ok(*c),
            TestFunction::ChartLinear(a) => {
                let v = space.chart(x)?;
                Ok(a.iter().zip(&v).map(|(p, q)| p * q).sum())
            }
            TestFunction::Custom { f, .. } => f(space, x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub trials: usize,
    pub worst_slack: f64,
    /// Largest slack seen; with `worst_slack` it bounds `|slack|` for identities.
    pub largest_slack: f64,
    pub tolerance: f64,
    /// `worst_slack >= -tolerance` (vacuously true when not applicable).
    pub passed: bool,
    /// False when the check's precondition failed on the sample.
    pub applicable: bool,
    /// Inputs of the worst trial when the check failed.
    pub counterexample: Option<String>,
    pub slacks: Vec<f64>,
}

impl CheckReport {
    fn from_trials(name: String, tolerance: f64, slacks: Vec<f64>, witness: Vec<String>) -> Self {
        let mut worst = 0;
        for (i, s) in slacks.iter().enumerate() {
            if *s < slacks[worst] || s.is_nan() {
                worst = i;
            }
        }
        let worst_slack = slacks.get(worst).copied().unwrap_or(0.0);
        let passed = worst_slack >= -tolerance;
        Self {
            name,
            trials: slacks.len(),
            worst_slack,
            largest_slack: slacks.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            tolerance,
            passed,
            applicable: true,
            counterexample: (!passed).then(|| witness[worst].clone()),
            slacks,
        }
    }

    /// `|slack| <= tolerance` on every trial.
    pub fn is_identity(&self) -> bool {
        self.worst_slack >= -self.tolerance && self.largest_slack <= self.tolerance
    }

    /// `trial,slack` rows.
    pub fn write_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "trial,slack")?;
        for (i, s) in self.slacks.iter().enumerate() {
            writeln!(w, "{i},{s}")?;
        }
        Ok(())
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match (self.applicable, self.passed) {
            (false, _) => "n/a ",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        write!(
            f,
            "{status} {} trials={} worst_slack={:e} tolerance={:e}",
            self.name, self.trials, self.worst_slack, self.tolerance
        )?;
        if let Some(c) = &self.counterexample {
            write!(f, "\n  counterexample: {c}")?;
        }
        Ok(())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pt(p: &Point) -> String {
    format_point(p)
}

/// `|d(gamma(s), gamma(t)) - (t - s) d(x, y)| <= tol (1 + d(x, y))`.
pub fn check_geodesic_scaling(region: &Region, trials: usize, seed: u64) -> Result<CheckReport> {
    let space = region.space();
    let mut rng = rng(seed);
    let (mut slacks, mut witness) = (Vec::with_capacity(trials), Vec::with_capacity(trials));
    for _ in 0..trials {
        let (x, y) = (region.sample(&mut rng), region.sample(&mut rng));
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let (s, t) = (a.min(b), a.max(b));
        let d = space.distance(&x, &y)?;
        let gs = space.geodesic(&x, &y, s)?;
        let gt = space.geodesic(&x, &y, t)?;
        let err = (space.distance(&gs, &gt)? - (t - s) * d).abs();
        slacks.push(-err / (1.0 + d));
        witness.push(format!("x={} y={} s={s} t={t}", pt(&x), pt(&y)));
    }
    Ok(CheckReport::from_trials(
        format!("geodesic-scaling {space}"),
        GEOMETRY_TOLERANCE,
        slacks,
        witness,
    ))
}

/// Symmetry and the triangle inequality on random triples.
pub fn check_metric_axioms(region: &Region, trials: usize, seed: u64) -> Result<CheckReport> {
    let space = region.space();
    let mut rng = rng(seed);
    let (mut slacks, mut witness) = (Vec::with_capacity(trials), Vec::with_capacity(trials));
    for _ in 0..trials {
        let (x, y, z) = (
            region.sample(&mut rng),
            region.sample(&mut rng),
            region.sample(&mut rng),
        );
        let (xy, yx) = (space.distance(&x, &y)?, space.distance(&y, &x)?);
        let triangle = xy + space.distance(&y, &z)? - space.distance(&x, &z)?;
        let own = space.distance(&x, &x)?;
        slacks.push(triangle.min(-(xy - yx).abs()).min(-own));
        witness.push(format!("x={} y={} z={}", pt(&x), pt(&y), pt(&z)));
    }
    Ok(CheckReport::from_trials(
        format!("metric-axioms {space}"),
        GEOMETRY_TOLERANCE,
        slacks,
        witness,
    ))
}

/// Comparison inequality
/// `d^2(p, gamma(t)) <= (1-t) d^2(p, x) + t d^2(p, y) - t (1-t) d^2(x, y)`.
/// Every 50th trial uses `t = 0` and the next one `t = 1`.
pub fn check_npc(region: &Region, trials: usize, seed: u64) -> Result<CheckReport> {
    let space = region.space();
    let mut rng = rng(seed);
    let (mut slacks, mut witness) = (Vec::with_capacity(trials), Vec::with_capacity(trials));
    for i in 0..trials {
        let (p, x, y) = (
            region.sample(&mut rng),
            region.sample(&mut rng),
            region.sample(&mut rng),
        );
        let t: f64 = match i % 50 {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random(),
        };
        let g = space.geodesic(&x, &y, t)?;
        let rhs = (1.0 - t) * space.squared_distance(&p, &x)? + t * space.squared_distance(&p, &y)?
            - t * (1.0 - t) * space.squared_distance(&x, &y)?;
        slacks.push(rhs - space.squared_distance(&p, &g)?);
        witness.push(format!("p={} x={} y={} t={t}", pt(&p), pt(&x), pt(&y)));
    }
    Ok(CheckReport::from_trials(
        format!("npc {space}"),
        GEOMETRY_TOLERANCE,
        slacks,
        witness,
    ))
}

struct MidpointTrial {
    fx: f64,
    fy: f64,
    fm: f64,
    d2: f64,
    witness: String,
}

/// Shared sample cloud for the midpoint checks: the same seed gives the same
/// `(anchor, x, y)` triples for every check.
fn midpoint_trials(region: &Region, f: &TestFunction, trials: usize, seed: u64) -> Result<Vec<MidpointTrial>> {
    let space = region.space();
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(trials);
    for _ in 0..trials {
        let anchor = f.instantiate(region, &mut rng);
        let (x, y) = (region.sample(&mut rng), region.sample(&mut rng));
        let m = space.geodesic(&x, &y, 0.5)?;
        let anchor_text = anchor.as_ref().map(|a| format!(" p={}", pt(a))).unwrap_or_default();
        out.push(MidpointTrial {
            fx: f.eval(space, anchor.as_ref(), &x)?,
            fy: f.eval(space, anchor.as_ref(), &y)?,
            fm: f.eval(space, anchor.as_ref(), &m)?,
            d2: space.squared_distance(&x, &y)?,
            witness: format!("x={} y={}{anchor_text}", pt(&x), pt(&y)),
        });
    }
    Ok(out)
}

fn report(
    name: String,
    tolerance: f64,
    trials: &[MidpointTrial],
    slack: impl Fn(&MidpointTrial) -> f64,
) -> CheckReport {
    let slacks = trials.iter().map(&slack).collect();
    let witness = trials.iter().map(|t| t.witness.clone()).collect();
    CheckReport::from_trials(name, tolerance, slacks, witness)
}

/// Midpoint form of geodesic `alpha`-convexity:
/// `f(m) <= f(x)/2 + f(y)/2 - (alpha/8) d^2(x, y)`.
pub fn check_alpha_convexity(
    region: &Region,
    f: &TestFunction,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<CheckReport> {
    let cloud = midpoint_trials(region, f, trials, seed)?;
    let name = format!("{alpha}-convexity of {} on {}", f.name(), region.space());
    Ok(report(name, GEOMETRY_TOLERANCE, &cloud, |t| {
        0.5 * t.fx + 0.5 * t.fy - alpha / 8.0 * t.d2 - t.fm
    }))
}

fn exp_concavity_slack(beta: f64) -> impl Fn(&MidpointTrial) -> f64 {
    move |t| (-beta * t.fm).exp() - 0.5 * (-beta * t.fx).exp() - 0.5 * (-beta * t.fy).exp()
}

/// Midpoint concavity of `exp(-beta f)`:
/// `exp(-beta f(x))/2 + exp(-beta f(y))/2 <= exp(-beta f(m))`.
pub fn check_exp_concavity(
    region: &Region,
    f: &TestFunction,
    beta: f64,
    trials: usize,
    seed: u64,
) -> Result<CheckReport> {
    let cloud = midpoint_trials(region, f, trials, seed)?;
    let name = format!("exp-concavity of {} at beta={beta} on {}", f.name(), region.space());
    Ok(report(name, GEOMETRY_TOLERANCE, &cloud, exp_concavity_slack(beta)))
}

/// Exp-concavity implies convexity: on the cloud of [`check_exp_concavity`]
/// with the same seed, checks `f(m) <= f(x)/2 + f(y)/2`. Reported as not
/// applicable when exp-concavity itself fails on that cloud.
pub fn check_convexity_from_exp_concavity(
    region: &Region,
    f: &TestFunction,
    beta: f64,
    trials: usize,
    seed: u64,
) -> Result<CheckReport> {
    let cloud = midpoint_trials(region, f, trials, seed)?;
    let premise = report(String::new(), GEOMETRY_TOLERANCE, &cloud, exp_concavity_slack(beta));
    let name = format!(
        "convexity from exp-concavity of {} at beta={beta} on {}",
        f.name(),
        region.space()
    );
    let mut out = report(name, GEOMETRY_TOLERANCE, &cloud, |t| 0.5 * t.fx + 0.5 * t.fy - t.fm);
    if !premise.passed {
        out.applicable = false;
        out.passed = true;
        out.counterexample = None;
    }
    Ok(out)
}

/// Jensen's inequality `f(x*) <= sum_i w_i f(y_i)` for one measure.
pub fn check_jensen(
    space: &Space,
    atoms: &WeightedAtoms,
    f: &TestFunction,
    anchor: Option<&Point>,
    solver: &Solver,
) -> Result<CheckReport> {
    let star = solver.solve(space, atoms)?.point;
    let mean: f64 = atoms
        .iter()
        .map(|(y, w)| f.eval(space, anchor, y).map(|v| w * v))
        .sum::<Result<f64>>()?;
    let slack = mean - f.eval(space, anchor, &star)?;
    let witness = format!("x*={} atoms={}", pt(&star), crate::text::format_points(atoms.atoms()));
    Ok(CheckReport::from_trials(
        format!("jensen {} on {space}", f.name()),
        SOLVER_TOLERANCE,
        vec![slack],
        vec![witness],
    ))
}

/// Random measure with 1 to `max_atoms` atoms from the region and weights
/// proportional to uniform draws on (0, 1].
pub fn random_measure<R: Rng + ?Sized>(region: &Region, max_atoms: usize, rng: &mut R) -> WeightedAtoms {
    let k = rng.random_range(1..=max_atoms.max(1));
    let atoms = region.sample_many(k, rng);
    let raw: Vec<f64> = (0..k).map(|_| 1.0 - rng.random::<f64>()).collect();
    WeightedAtoms::normalized(atoms, raw).expect("positive weights")
}

/// Jensen on random measures; the anchor of `f` (if any) is drawn per trial.
pub fn check_jensen_random(
    region: &Region,
    f: &TestFunction,
    max_atoms: usize,
    trials: usize,
    seed: u64,
    solver: &Solver,
) -> Result<CheckReport> {
    let space = region.space();
    let mut rng = rng(seed);
    let (mut slacks, mut witness) = (Vec::with_capacity(trials), Vec::with_capacity(trials));
    for _ in 0..trials {
        let atoms = random_measure(region, max_atoms, &mut rng);
        let anchor = f.instantiate(region, &mut rng);
        let r = check_jensen(space, &atoms, f, anchor.as_ref(), solver)?;
        slacks.push(r.worst_slack);
        let anchor_text = anchor.as_ref().map(|a| format!(" p={}", pt(a))).unwrap_or_default();
        witness.push(format!(
            "weights={:?}{anchor_text} {}",
            atoms.weights(),
            r.counterexample.unwrap_or_default()
        ));
    }
    Ok(CheckReport::from_trials(
        format!("jensen {} on {space}", f.name()),
        SOLVER_TOLERANCE,
        slacks,
        witness,
    ))
}

/// Variance inequality `d^2(x, x*) <= sum_i w_i (d^2(x, y_i) - d^2(x*, y_i))` on
/// random measures and test points.
pub fn check_variance_inequality(
    region: &Region,
    max_atoms: usize,
    trials: usize,
    seed: u64,
    solver: &Solver,
) -> Result<CheckReport> {
    let space = region.space();
    let mut rng = rng(seed);
    let (mut slacks, mut witness) = (Vec::with_capacity(trials), Vec::with_capacity(trials));
    for _ in 0..trials {
        let atoms = random_measure(region, max_atoms, &mut rng);
        let x = region.sample(&mut rng);
        let star = solver.solve(space, &atoms)?.point;
        slacks.push(variance_inequality_slack_at(space, &atoms, &x, &star)?);
        witness.push(format!(
            "x={} x*={} atoms={} weights={:?}",
            pt(&x),
            pt(&star),
            crate::text::format_points(atoms.atoms()),
            atoms.weights()
        ));
    }
    Ok(CheckReport::from_trials(
        format!("variance-inequality {space}"),
        SOLVER_TOLERANCE,
        slacks,
        witness,
    ))
}

/// Result of [`probe_beta_threshold`].
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdProbe {
    /// `1 / (2 D^2)` with `D` the region diameter.
    pub certified_beta: f64,
    /// Whether the check passed at `certified_beta`.
    pub certified_passes: bool,
    /// Smallest `beta` found to fail, if any failed below `max_beta`.
    pub smallest_failing: Option<f64>,
}

/// Bisects for the smallest `beta` at which the exp-concavity check of
/// `d^2(., p)` fails on a fixed sample cloud. Diagnostic only.
pub fn probe_beta_threshold(region: &Region, trials: usize, seed: u64, max_beta: f64) -> Result<ThresholdProbe> {
    let f = TestFunction::SquaredDistance(Anchor::Random);
    let cloud = midpoint_trials(region, &f, trials, seed)?;
    let fails = |beta: f64| cloud.iter().any(|t| exp_concavity_slack(beta)(t) < -GEOMETRY_TOLERANCE);
    let d = region.diameter();
    let certified_beta = 1.0 / (2.0 * d * d);
    let certified_passes = !fails(certified_beta);
    let mut hi = certified_beta;
    while !fails(hi) {
        hi *= 2.0;
        if hi > max_beta {
            return Ok(ThresholdProbe {
                certified_beta,
                certified_passes,
                smallest_failing: None,
            });
        }
    }
    let mut lo = if certified_passes { certified_beta } else { 0.0 };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if fails(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdProbe {
        certified_beta,
        certified_passes,
        smallest_failing: Some(hi),
    })
}
