//! Online-to-batch conversion and barycenter estimation.
//!
//! Running the forecaster over i.i.d. samples `Z_1..Z_n` with constant experts
//! `Theta` produces iterates `m_1..m_{n+1}`, where `m_i` is the barycenter of
//! `Theta` weighted by `pi_theta exp(-beta sum_{j<i} l(theta, Z_j))`. The batch
//! estimator `theta_n` is the barycenter of the uniform measure on the
//! iterates. For an exp-concave, geodesically convex loss
//!
//! ```text
//! E l(theta_n, Z) - min_theta E l(theta, Z) <= ln |Theta| / (beta (n + 1))
//! ```
//!
//! and, for a `lambda`-Lipschitz loss and any `q` over `Theta`, the excess over a
//! reference point `theta*` is at most
//! `lambda W1(q, delta_theta*) + KL(q || pi) / (beta (n + 1))`.
//!
//! With the squared distance as loss, the variance inequality turns the excess
//! over the barycenter `theta*` of the data into a bound on `d^2(theta_n, theta*)`.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::barycenter::Solver;
use crate::error::{Error, Result};
use crate::forecaster::{kl_divergence, predict, ExpertLedger, LossSpec};
use crate::measure::WeightedAtoms;
use crate::sampling::DataDistribution;
use crate::space::{Point, Space};

/// Smallest Monte Carlo sample accepted by [`excess_risk`].
pub const MIN_MC_SAMPLES: usize = 100;

/// Slack for the per-draw Jensen check `l(theta_n, z) <= mean_i l(m_i, z)`.
pub const JENSEN_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchEstimate {
    pub theta_n: Point,
    /// `m_1..m_{n+1}`.
    pub iterates: Vec<Point>,
    pub n: usize,
}

fn expert_ledger(candidates: &[Point], prior: Option<&[f64]>, beta: f64) -> Result<ExpertLedger> {
    match prior {
        Some(p) => {
            if p.len() != candidates.len() {
                return Err(Error::input(format!(
                    "prior has {} entries for {} candidates",
                    p.len(),
                    candidates.len()
                )));
            }
            ExpertLedger::with_prior(p.to_vec(), beta)
        }
        None => ExpertLedger::uniform(candidates.len(), beta),
    }
}

/// Builds `m_1..m_{n+1}` and their barycenter `theta_n`. Solver failures are
/// reported as [`Error::Iterate`] with the 1-based iterate index; a failure of
/// the final barycenter uses index `n + 2`.
pub fn online_to_batch(
    space: &Space,
    samples: &[Point],
    candidates: &[Point],
    prior: Option<&[f64]>,
    loss: &LossSpec,
    solver: &Solver,
) -> Result<BatchEstimate> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::input("online-to-batch needs at least one sample"));
    }
    if candidates.is_empty() {
        return Err(Error::input("the candidate set is empty"));
    }
    let mut ledger = expert_ledger(candidates, prior, loss.beta())?;
    let mut losses = vec![0.0; candidates.len()];
    let mut iterates = Vec::with_capacity(n + 1);
    let tag = |index: usize| {
        move |e: Error| Error::Iterate {
            index,
            source: Box::new(e),
        }
    };
    for (i, z) in samples.iter().enumerate() {
        iterates.push(predict(&ledger, space, candidates, solver).map_err(tag(i + 1))?);
        for (l, theta) in losses.iter_mut().zip(candidates) {
            *l += loss.evaluate(space, theta, z).map_err(tag(i + 1))?;
        }
        ledger = ledger.with_losses(losses.clone())?;
    }
    iterates.push(predict(&ledger, space, candidates, solver).map_err(tag(n + 1))?);
    let uniform = WeightedAtoms::uniform(iterates.clone())?;
    let theta_n = solver.solve_converged(space, &uniform).map_err(tag(n + 2))?.point;
    Ok(BatchEstimate { theta_n, iterates, n })
}

/// Worst slack of `mean_i l(m_i, z) - l(theta_n, z)` over the given outcomes.
pub fn jensen_slack(space: &Space, estimate: &BatchEstimate, outcomes: &[Point], loss: &LossSpec) -> Result<f64> {
    let mut worst = f64::INFINITY;
    let k = estimate.iterates.len() as f64;
    for z in outcomes {
        let mut mean = 0.0;
        for m in &estimate.iterates {
            mean += loss.evaluate(space, m, z)?;
        }
        worst = worst.min(mean / k - loss.evaluate(space, &estimate.theta_n, z)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    /// Estimate of `E l(theta_n, Z)`.
    pub risk: f64,
    /// Estimates of `E l(theta, Z)` for every candidate.
    pub candidate_risks: Vec<f64>,
    /// Candidate with the smallest estimated risk.
    pub best_candidate: usize,
    /// `risk - candidate_risks[best_candidate]`.
    pub excess: f64,
    /// `min_theta (R(theta) + ln(1/pi_theta) / (beta (n+1))) - min_theta R(theta)`,
    /// which is `ln |Theta| / (beta (n+1))` for a uniform prior.
    pub bound: f64,
    pub samples: usize,
    /// `2 std(l(theta_n, Z) - l(theta_best, Z)) / sqrt(samples)`.
    pub half_width: f64,
    /// `excess <= bound + half_width`.
    pub satisfied: bool,
}

/// Loss values of `points` on a fresh sample, stored compactly: either per
/// support atom with draw counts, or per drawn point.
struct McSample {
    outcomes: Vec<Point>,
    counts: Vec<f64>,
    total: f64,
}

impl McSample {
    fn draw(dist: &DataDistribution, samples: usize, rng: &mut ChaCha8Rng) -> Self {
        match dist.sample_counts(samples, rng) {
            Some(counts) => {
                let atoms = dist.support().expect("finite support");
                let (outcomes, counts) = atoms
                    .atoms()
                    .iter()
                    .zip(counts)
                    .filter(|(_, c)| *c > 0)
                    .map(|(p, c)| (p.clone(), c as f64))
                    .unzip();
                Self {
                    outcomes,
                    counts,
                    total: samples as f64,
                }
            }
            None => Self {
                outcomes: (0..samples).map(|_| dist.sample(rng)).collect(),
                counts: vec![1.0; samples],
                total: samples as f64,
            },
        }
    }

    fn losses(&self, space: &Space, loss: &LossSpec, p: &Point) -> Result<Vec<f64>> {
        self.outcomes.iter().map(|z| loss.evaluate(space, p, z)).collect()
    }

    fn mean(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.counts).map(|(v, c)| v * c).sum::<f64>() / self.total
    }

    /// `2 std(a - b) / sqrt(N)` for paired loss vectors.
    fn half_width(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let mean = self.mean(&diff);
        let ss: f64 = diff
            .iter()
            .zip(&self.counts)
            .map(|(d, c)| c * (d - mean) * (d - mean))
            .sum();
        let std = (ss / (self.total - 1.0)).sqrt();
        2.0 * std / self.total.sqrt()
    }
}

fn excess_bound(risks: &[f64], prior: &[f64], beta: f64, n: usize) -> f64 {
    let scale = beta * (n as f64 + 1.0);
    let best = risks.iter().copied().fold(f64::INFINITY, f64::min);
    let penalised = risks
        .iter()
        .zip(prior)
        .map(|(r, p)| r - p.ln() / scale)
        .fold(f64::INFINITY, f64::min);
    penalised - best
}

/// Monte Carlo excess risk of `theta_n` over the best candidate, on a fresh
/// sample of `samples` outcomes.
#[allow(clippy::too_many_arguments)]
pub fn excess_risk(
    space: &Space,
    estimate: &BatchEstimate,
    candidates: &[Point],
    prior: Option<&[f64]>,
    dist: &DataDistribution,
    loss: &LossSpec,
    samples: usize,
    seed: u64,
) -> Result<RiskReport> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::input(format!(
            "need at least {MIN_MC_SAMPLES} Monte Carlo samples, got {samples}"
        )));
    }
    let ledger = expert_ledger(candidates, prior, loss.beta())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mc = McSample::draw(dist, samples, &mut rng);
    let own = mc.losses(space, loss, &estimate.theta_n)?;
    let per_candidate = candidates
        .iter()
        .map(|c| mc.losses(space, loss, c))
        .collect::<Result<Vec<_>>>()?;
    let candidate_risks: Vec<f64> = per_candidate.iter().map(|l| mc.mean(l)).collect();
    let best_candidate = argmin(&candidate_risks);
    let risk = mc.mean(&own);
    let excess = risk - candidate_risks[best_candidate];
    let bound = excess_bound(&candidate_risks, ledger.prior(), loss.beta(), estimate.n);
    let half_width = mc.half_width(&own, &per_candidate[best_candidate]);
    Ok(RiskReport {
        risk,
        excess,
        bound,
        samples,
        half_width,
        satisfied: excess <= bound + half_width,
        candidate_risks,
        best_candidate,
    })
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// `KL(q || pi)`.
    pub kl: f64,
    /// `sum_theta q_theta d(theta*, theta)`: the only coupling of `q` with a
    /// point mass is the product one.
    pub w1: f64,
    pub lambda: f64,
    /// `lambda W1 + KL / (beta (n+1))`.
    pub combined: f64,
    /// `sum_theta q_theta R(theta) + KL / (beta (n+1))` when risks are supplied.
    pub risk_form: Option<f64>,
}

/// Evaluates both forms of the KL / Wasserstein bound for a given `q`. A `q`
/// charging a zero-prior candidate gives an infinite KL, not an error.
#[allow(clippy::too_many_arguments)]
pub fn kl_w1_bound(
    space: &Space,
    candidates: &[Point],
    prior: &[f64],
    q: &[f64],
    beta: f64,
    n: usize,
    lambda: f64,
    theta_star: &Point,
    risks: Option<&[f64]>,
) -> Result<BoundReport> {
    let k = candidates.len();
    if prior.len() != k || q.len() != k || risks.is_some_and(|r| r.len() != k) {
        return Err(Error::input("candidates, prior, q and risks must have equal lengths"));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::input(format!(
            "Lipschitz constant must be positive, got {lambda}"
        )));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::input(format!("beta must be positive, got {beta}")));
    }
    for v in [prior, q] {
        if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (v.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::input("prior and q must be probability vectors"));
        }
    }
    let kl = kl_divergence(q, prior);
    let mut w1 = 0.0;
    for (theta, w) in candidates.iter().zip(q) {
        if *w > 0.0 {
            w1 += w * space.distance(theta_star, theta)?;
        }
    }
    let penalty = kl / (beta * (n as f64 + 1.0));
    let risk_form = risks.map(|r| q.iter().zip(r).map(|(a, b)| a * b).sum::<f64>() + penalty);
    Ok(BoundReport {
        kl,
        w1,
        lambda,
        combined: lambda * w1 + penalty,
        risk_form,
    })
}

/// Settings of [`barycenter_estimation_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationSettings {
    pub n: usize,
    pub draws: usize,
    pub mc_samples: usize,
    pub beta: f64,
    /// Diameter `D` of the region holding data and candidates.
    pub diameter: f64,
    pub seed: u64,
}

/// Outcome of one training draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawRecord {
    pub draw: usize,
    pub theta_n: Point,
    pub risk: RiskReport,
    /// `d^2(theta_n, theta*)`.
    pub est_error: f64,
    /// Estimate of `E d^2(theta_n, Z) - E d^2(theta*, Z)` on the same sample.
    pub excess_over_star: f64,
    /// Half-width of `excess_over_star`.
    pub star_half_width: f64,
    /// Worst Jensen slack over the training samples and the data support.
    pub jensen_slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    pub settings: EstimationSettings,
    pub theta_star: Point,
    /// `d(theta*, nearest candidate)`; positive means `theta*` is off the grid.
    pub grid_gap: f64,
    pub records: Vec<DrawRecord>,
    /// `2 min_q (D W1(q, delta_theta*) + D^2 KL(q || pi) / (n+1))` over
    /// `q` in {point mass at the nearest candidate, prior}.
    pub estimation_bound: f64,
}

impl EstimationReport {
    fn mean(&self, f: impl Fn(&DrawRecord) -> f64) -> f64 {
        self.records.iter().map(f).sum::<f64>() / self.records.len() as f64
    }

    pub fn mean_excess(&self) -> f64 {
        self.mean(|r| r.risk.excess)
    }

    pub fn mean_half_width(&self) -> f64 {
        self.mean(|r| r.risk.half_width)
    }

    pub fn mean_est_error(&self) -> f64 {
        self.mean(|r| r.est_error)
    }

    pub fn mean_excess_over_star(&self) -> f64 {
        self.mean(|r| r.excess_over_star)
    }

    pub fn mean_star_half_width(&self) -> f64 {
        self.mean(|r| r.star_half_width)
    }

    /// Excess-risk bound (same for every draw with a uniform prior).
    pub fn bound(&self) -> f64 {
        self.mean(|r| r.risk.bound)
    }

    /// Share of draws with `excess <= bound + half_width`.
    pub fn pass_rate(&self) -> f64 {
        self.mean(|r| if r.risk.satisfied { 1.0 } else { 0.0 })
    }

    pub fn worst_jensen_slack(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.jensen_slack)
            .fold(f64::INFINITY, f64::min)
    }

    /// `mean d^2(theta_n, theta*) <= mean excess over theta* + half-width`.
    pub fn estimation_dominated(&self) -> bool {
        self.mean_est_error() <= self.mean_excess_over_star() + self.mean_star_half_width()
    }

    pub fn off_grid(&self) -> bool {
        self.grid_gap > 1e-12
    }

    /// One row per draw: `n, excess_risk, bound, halfwidth, est_error`.
    pub fn write_csv_rows(&self, w: &mut impl Write) -> io::Result<()> {
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{}",
                self.settings.n, r.risk.excess, r.risk.bound, r.risk.half_width, r.est_error
            )?;
        }
        Ok(())
    }
}

pub const BATCH_CSV_COLUMNS: &str = "n,excess_risk,bound,halfwidth,est_error";

pub fn write_batch_csv_header(w: &mut impl Write, params: &str) -> io::Result<()> {
    writeln!(w, "# schema=1 {params}")?;
    writeln!(w, "{BATCH_CSV_COLUMNS}")
}

/// Repeats online-to-batch over independent training draws with squared
/// distance loss, comparing `theta_n` with the data barycenter `theta*`.
///
/// Draw `i` uses stream `i` of the seeded generator for training and stream
/// `i + draws` for evaluation, so every draw is reproducible on its own.
pub fn barycenter_estimation_experiment(
    space: &Space,
    dist: &DataDistribution,
    candidates: &[Point],
    theta_star: &Point,
    settings: &EstimationSettings,
    solver: &Solver,
) -> Result<EstimationReport> {
    if settings.draws == 0 || settings.n == 0 {
        return Err(Error::input("need at least one draw and one sample"));
    }
    if !(settings.diameter.is_finite() && settings.diameter > 0.0) {
        return Err(Error::input("diameter must be positive"));
    }
    space.validate(theta_star)?;
    let loss = LossSpec::squared_distance(settings.beta)?;
    let k = candidates.len();
    let prior = vec![1.0 / k as f64; k];

    let gaps = candidates
        .iter()
        .map(|c| space.distance(theta_star, c))
        .collect::<Result<Vec<_>>>()?;
    let nearest = argmin(&gaps);
    let grid_gap = gaps[nearest];

    let d = settings.diameter;
    let mut point_mass = vec![0.0; k];
    point_mass[nearest] = 1.0;
    let estimation_bound = [point_mass, prior.clone()]
        .iter()
        .map(|q| {
            kl_w1_bound(
                space,
                candidates,
                &prior,
                q,
                settings.beta,
                settings.n,
                2.0 * d,
                theta_star,
                None,
            )
            .map(|b| 2.0 * (d * b.w1 + d * d * b.kl / (settings.n as f64 + 1.0)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);

    let support_points: Vec<Point> = dist.support().map(|a| a.atoms().to_vec()).unwrap_or_default();
    let mut records = Vec::with_capacity(settings.draws);
    for draw in 0..settings.draws {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        rng.set_stream(draw as u64);
        let training: Vec<Point> = (0..settings.n).map(|_| dist.sample(&mut rng)).collect();
        let estimate = online_to_batch(space, &training, candidates, None, &loss, solver)?;

        let eval_seed = settings.seed ^ ((draw + settings.draws) as u64).rotate_left(32);
        let risk = excess_risk(
            space,
            &estimate,
            candidates,
            None,
            dist,
            &loss,
            settings.mc_samples,
            eval_seed,
        )?;

        // same evaluation sample, compared with theta* instead of the best candidate
        let mut eval_rng = ChaCha8Rng::seed_from_u64(eval_seed);
        let mc = McSample::draw(dist, settings.mc_samples, &mut eval_rng);
        let own = mc.losses(space, &loss, &estimate.theta_n)?;
        let star = mc.losses(space, &loss, theta_star)?;
        let excess_over_star = mc.mean(&own) - mc.mean(&star);
        let star_half_width = mc.half_width(&own, &star);

        let mut probes = training;
        probes.extend(support_points.iter().cloned());
        let jensen = jensen_slack(space, &estimate, &probes, &loss)?;

        records.push(DrawRecord {
            draw,
            est_error: space.squared_distance(&estimate.theta_n, theta_star)?,
            theta_n: estimate.theta_n,
            risk,
            excess_over_star,
            star_half_width,
            jensen_slack: jensen,
        });
    }
    Ok(EstimationReport {
        settings: settings.clone(),
        theta_star: theta_star.clone(),
        grid_gap,
        records,
        estimation_bound,
    })
}
