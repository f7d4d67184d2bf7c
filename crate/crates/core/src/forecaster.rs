//! Exponentially weighted average forecaster with barycentric prediction.
//!
//! Each round every expert `theta` advises a point `m_theta`. The forecaster
//! weighs expert `theta` by `pi_theta exp(-beta L_theta)`, where `L_theta` is
//! its cumulative loss so far, and predicts the barycenter of the weighted
//! advice. On Euclidean space this is the usual weighted average.
//!
//! For a loss whose `exp(-beta l(., z))` is geodesically concave, the
//! forecaster's cumulative loss satisfies, for every distribution `q` over the
//! experts,
//!
//! ```text
//! L_hat_T <= sum_theta q_theta L_theta,T + KL(q || pi) / beta
//! ```
//!
//! and taking `q` a point mass gives the regret bound
//! `R_T <= min_theta (L_theta,T + ln(1 / pi_theta) / beta) - min_theta L_theta,T`,
//! which is `ln K / beta` for a uniform prior. Squared distance on a region of
//! diameter `D` qualifies for every `beta <= 1 / (2 D^2)`.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use crate::barycenter::Solver;
use crate::error::{Error, Result};
use crate::measure::{WeightedAtoms, WEIGHT_SUM_TOLERANCE};
use crate::space::{Point, Space};

/// Slack allowed when comparing realized regret with its bound.
pub const BOUND_SLACK: f64 = 1e-6;

/// `1 / (2 D^2)`: the largest `beta` for which squared distance is certified
/// exp-concave on a region of diameter `D`.
pub fn squared_distance_beta(diameter: f64) -> f64 {
    1.0 / (2.0 * diameter * diameter)
}

type LossFn = dyn Fn(&Space, &Point, &Point) -> Result<f64> + Send + Sync;

#[derive(Clone)]
pub enum LossKind {
    SquaredDistance,
    Distance,
    /// `l(m, z)` supplied by the caller; `certified` declares that
    /// `exp(-beta l(., z))` is geodesically concave for the chosen `beta`.
    Custom {
        name: String,
        f: Arc<LossFn>,
        certified: bool,
    },
}

impl fmt::Debug for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::SquaredDistance => f.write_str("SquaredDistance"),
            LossKind::Distance => f.write_str("Distance"),
            LossKind::Custom { name, certified, .. } => write!(f, "Custom({name}, certified={certified})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LossSpec {
    kind: LossKind,
    beta: f64,
    strict: bool,
}

impl LossSpec {
    pub fn new(kind: LossKind, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::input(format!("beta must be positive, got {beta}")));
        }
        Ok(Self {
            kind,
            beta,
            strict: false,
        })
    }

    pub fn squared_distance(beta: f64) -> Result<Self> {
        Self::new(LossKind::SquaredDistance, beta)
    }

    pub fn distance(beta: f64) -> Result<Self> {
        Self::new(LossKind::Distance, beta)
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(&Space, &Point, &Point) -> Result<f64> + Send + Sync + 'static,
        beta: f64,
        certified: bool,
    ) -> Result<Self> {
        Self::new(
            LossKind::Custom {
                name: name.into(),
                f: Arc::new(f),
                certified,
            },
            beta,
        )
    }

    /// In strict mode a squared-distance loss refuses to run on a space with a
    /// declared diameter `D` unless `beta <= 1 / (2 D^2)`.
    pub fn strict(mut self) -> Self {
        self.strict = true;
        self
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kind(&self) -> &LossKind {
        &self.kind
    }

    pub fn evaluate(&self, space: &Space, m: &Point, z: &Point) -> Result<f64> {
        match &self.kind {
            LossKind::SquaredDistance => space.squared_distance(m, z),
            LossKind::Distance => space.distance(m, z),
            LossKind::Custom { f, .. } => f(space, m, z),
        }
    }

    /// Whether the regret bound applies on `space`. Squared distance needs a
    /// declared diameter and a compliant `beta`; plain distance is never
    /// exp-concave in general.
    pub fn is_certified(&self, space: &Space) -> bool {
        match &self.kind {
            LossKind::SquaredDistance => space
                .diameter()
                .is_some_and(|d| self.beta <= squared_distance_beta(d) * (1.0 + 1e-12)),
            LossKind::Distance => false,
            LossKind::Custom { certified, .. } => *certified,
        }
    }

    fn check_strict(&self, space: &Space) -> Result<()> {
        if let (true, LossKind::SquaredDistance, Some(d)) = (self.strict, &self.kind, space.diameter()) {
            if !self.is_certified(space) {
                return Err(Error::input(format!(
                    "beta = {} exceeds 1/(2 D^2) = {} for diameter {d}",
                    self.beta,
                    squared_distance_beta(d)
                )));
            }
        }
        Ok(())
    }
}

/// Cumulative expert losses, prior and learning rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertLedger {
    losses: Vec<f64>,
    prior: Vec<f64>,
    beta: f64,
    rounds: usize,
}

impl ExpertLedger {
    pub fn uniform(k: usize, beta: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::input("need at least one expert"));
        }
        Self::with_prior(vec![1.0 / k as f64; k], beta)
    }

    pub fn with_prior(prior: Vec<f64>, beta: f64) -> Result<Self> {
        if prior.is_empty() {
            return Err(Error::input("need at least one expert"));
        }
        if prior.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::input("prior weights must be positive"));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE * prior.len() as f64 {
            return Err(Error::input(format!("prior sums to {total}, not 1")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::input(format!("beta must be positive, got {beta}")));
        }
        let k = prior.len();
        Ok(Self {
            losses: vec![0.0; k],
            prior,
            beta,
            rounds: 0,
        })
    }

    /// Ledger with given cumulative losses, e.g. to inspect weights directly.
    pub fn with_losses(mut self, losses: Vec<f64>) -> Result<Self> {
        if losses.len() != self.prior.len() {
            return Err(Error::input("one cumulative loss per expert expected"));
        }
        self.losses = losses;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.prior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prior.is_empty()
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn best_loss(&self) -> f64 {
        self.losses.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `w_theta ∝ pi_theta exp(-beta L_theta)`, computed in the log domain and
    /// shifted by the largest exponent so the top weight is `exp(0)`.
    pub fn posterior_weights(&self) -> Vec<f64> {
        let logs: Vec<f64> = self
            .prior
            .iter()
            .zip(&self.losses)
            .map(|(p, l)| p.ln() - self.beta * l)
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = logs.iter().map(|v| (v - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        assert!(total >= 1.0, "max-shifted weights cannot all underflow");
        raw.into_iter().map(|w| w / total).collect()
    }

    /// Regret bound from the point-mass choices of `q`:
    /// `min_theta (L_theta + ln(1/pi_theta)/beta) - min_theta L_theta`.
    pub fn regret_bound(&self) -> f64 {
        let best = self
            .prior
            .iter()
            .zip(&self.losses)
            .map(|(p, l)| l - p.ln() / self.beta)
            .fold(f64::INFINITY, f64::min);
        best - self.best_loss()
    }

    fn add_losses(&mut self, increments: &[f64]) {
        for (l, d) in self.losses.iter_mut().zip(increments) {
            *l += d;
        }
        self.rounds += 1;
    }
}

/// `KL(q || p) = sum q ln(q / p)` with `0 ln 0 = 0`; infinite when `q` charges
/// an atom where `p` vanishes.
pub fn kl_divergence(q: &[f64], p: &[f64]) -> f64 {
    q.iter()
        .zip(p)
        .map(|(&qi, &pi)| match (qi > 0.0, pi > 0.0) {
            (false, _) => 0.0,
            (true, false) => f64::INFINITY,
            (true, true) => qi * (qi / pi).ln(),
        })
        .sum()
}

fn check_probability(q: &[f64], k: usize) -> Result<()> {
    if q.len() != k {
        return Err(Error::input(format!("expected {k} probabilities, got {}", q.len())));
    }
    if q.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::input("probabilities must be finite and non-negative"));
    }
    let total: f64 = q.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::input(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// `sum_theta q_theta L_theta + KL(q || pi) / beta`.
pub fn pac_bound(ledger: &ExpertLedger, q: &[f64]) -> Result<f64> {
    check_probability(q, ledger.len())?;
    let expected: f64 = q.iter().zip(ledger.losses()).map(|(a, b)| a * b).sum();
    Ok(expected + kl_divergence(q, ledger.prior()) / ledger.beta())
}

/// Barycenter of the advice under the ledger's posterior weights.
pub fn predict(ledger: &ExpertLedger, space: &Space, advice: &[Point], solver: &Solver) -> Result<Point> {
    if advice.len() != ledger.len() {
        return Err(Error::input(format!(
            "{} advice points for {} experts",
            advice.len(),
            ledger.len()
        )));
    }
    let atoms = WeightedAtoms::new(advice.to_vec(), ledger.posterior_weights())
        .or_else(|_| WeightedAtoms::normalized(advice.to_vec(), ledger.posterior_weights()))?;
    Ok(solver.solve_converged(space, &atoms)?.point)
}

/// Cumulative totals after one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    /// Loss of this round's prediction.
    pub round_loss: f64,
    /// Cumulative forecaster loss `L_hat_t`.
    pub forecaster_loss: f64,
    /// `min_theta L_theta,t`.
    pub best_expert_loss: f64,
    pub regret: f64,
    /// Regret bound at time `t`; `None` when the loss is not certified.
    pub bound: Option<f64>,
}

/// One game of prediction with expert advice, played round by round.
#[derive(Debug, Clone)]
pub struct Game {
    space: Space,
    loss: LossSpec,
    solver: Solver,
    ledger: ExpertLedger,
    certified: bool,
    forecaster_loss: f64,
    records: Vec<RoundRecord>,
}

impl Game {
    pub fn new(space: Space, loss: LossSpec, prior: Option<Vec<f64>>, k: usize, solver: Solver) -> Result<Self> {
        loss.check_strict(&space)?;
        let ledger = match prior {
            Some(p) => {
                if p.len() != k {
                    return Err(Error::input(format!("prior has {} entries for {k} experts", p.len())));
                }
                ExpertLedger::with_prior(p, loss.beta())?
            }
            None => ExpertLedger::uniform(k, loss.beta())?,
        };
        let certified = loss.is_certified(&space);
        Ok(Self {
            space,
            loss,
            solver,
            ledger,
            certified,
            forecaster_loss: 0.0,
            records: Vec::new(),
        })
    }

    pub fn ledger(&self) -> &ExpertLedger {
        &self.ledger
    }

    pub fn predict(&self, advice: &[Point]) -> Result<Point> {
        predict(&self.ledger, &self.space, advice, &self.solver)
    }

    /// Charges every expert and the forecaster for outcome `z`.
    pub fn observe(&mut self, advice: &[Point], prediction: &Point, z: &Point) -> Result<RoundRecord> {
        if advice.len() != self.ledger.len() {
            return Err(Error::input(format!(
                "{} advice points for {} experts",
                advice.len(),
                self.ledger.len()
            )));
        }
        self.space.validate(z)?;
        let increments = advice
            .iter()
            .map(|m| self.loss.evaluate(&self.space, m, z))
            .collect::<Result<Vec<_>>>()?;
        let round_loss = self.loss.evaluate(&self.space, prediction, z)?;
        self.ledger.add_losses(&increments);
        self.forecaster_loss += round_loss;
        let best = self.ledger.best_loss();
        let record = RoundRecord {
            t: self.ledger.rounds(),
            round_loss,
            forecaster_loss: self.forecaster_loss,
            best_expert_loss: best,
            regret: self.forecaster_loss - best,
            bound: self.certified.then(|| self.ledger.regret_bound()),
        };
        self.records.push(record);
        Ok(record)
    }

    /// Predicts, then observes `z`.
    pub fn play(&mut self, advice: &[Point], z: &Point) -> Result<RoundRecord> {
        let m = self.predict(advice)?;
        self.observe(advice, &m, z)
    }

    pub fn report(self) -> RegretReport {
        let regret = self.forecaster_loss - self.ledger.best_loss();
        let bound = self.certified.then(|| self.ledger.regret_bound());
        RegretReport {
            satisfied: bound.map(|b| regret <= b + BOUND_SLACK),
            forecaster_loss: self.forecaster_loss,
            regret,
            bound,
            rounds: self.records,
            ledger: self.ledger,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegretReport {
    pub rounds: Vec<RoundRecord>,
    /// Final ledger: per-expert cumulative losses, prior and beta.
    pub ledger: ExpertLedger,
    /// `L_hat_T`.
    pub forecaster_loss: f64,
    /// `R_T = L_hat_T - min_theta L_theta,T`.
    pub regret: f64,
    /// `ln K / beta` for a uniform prior; `None` for uncertified losses.
    pub bound: Option<f64>,
    /// `R_T <= bound + BOUND_SLACK`; `None` when there is no bound.
    pub satisfied: Option<bool>,
}

pub const REGRET_CSV_COLUMNS: &str = "t,forecaster_loss,best_expert_loss,regret,bound";

/// Writes the versioned header: a `# schema=1` comment echoing `params`, then
/// the column names.
pub fn write_regret_csv_header(w: &mut impl Write, params: &str) -> io::Result<()> {
    writeln!(w, "# schema=1 {params}")?;
    writeln!(w, "{REGRET_CSV_COLUMNS}")
}

impl RegretReport {
    /// One row per round with cumulative losses; an empty `bound` cell means
    /// the loss is not certified.
    pub fn write_csv_rows(&self, w: &mut impl Write) -> io::Result<()> {
        for r in &self.rounds {
            let bound = r.bound.map(|b| b.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{bound}",
                r.t, r.forecaster_loss, r.best_expert_loss, r.regret
            )?;
        }
        Ok(())
    }
}

/// Plays `outcomes.len()` rounds; `advice[t]` holds the K expert points of round `t`.
pub fn run_game(
    space: &Space,
    advice: &[Vec<Point>],
    outcomes: &[Point],
    loss: &LossSpec,
    prior: Option<Vec<f64>>,
    solver: &Solver,
) -> Result<RegretReport> {
    if advice.len() != outcomes.len() {
        return Err(Error::input(format!(
            "{} rounds of advice but {} outcomes",
            advice.len(),
            outcomes.len()
        )));
    }
    if outcomes.is_empty() {
        return Err(Error::input("a game needs at least one round"));
    }
    let k = advice[0].len();
    let mut game = Game::new(space.clone(), loss.clone(), prior, k, solver.clone())?;
    for (a, z) in advice.iter().zip(outcomes) {
        game.play(a, z)?;
    }
    Ok(game.report())
}

/// Game against constant experts where each outcome is the candidate with the
/// largest loss for the current prediction (first one on ties).
pub fn run_greedy_adversary(
    space: &Space,
    experts: &[Point],
    candidates: &[Point],
    rounds: usize,
    loss: &LossSpec,
    prior: Option<Vec<f64>>,
    solver: &Solver,
) -> Result<(RegretReport, Vec<Point>)> {
    if candidates.is_empty() {
        return Err(Error::input("the adversary needs at least one candidate outcome"));
    }
    if rounds == 0 {
        return Err(Error::input("a game needs at least one round"));
    }
    let mut game = Game::new(space.clone(), loss.clone(), prior, experts.len(), solver.clone())?;
    let mut outcomes = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let m = game.predict(experts)?;
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, z) in candidates.iter().enumerate() {
            let l = loss.evaluate(space, &m, z)?;
            if l > best.0 {
                best = (l, i);
            }
        }
        let z = candidates[best.1].clone();
        game.observe(experts, &m, &z)?;
        outcomes.push(z);
    }
    Ok((game.report(), outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn e(x: f64) -> Point {
        Point::Euclidean(vec![x])
    }

    #[test]
    fn weights_at_the_start_follow_the_prior() {
        let l = ExpertLedger::uniform(4, 1.0).unwrap();
        assert_eq!(l.posterior_weights(), vec![0.25; 4]);
    }

    #[test]
    fn weights_for_a_log_two_gap() {
        let l = ExpertLedger::uniform(2, 1.0)
            .unwrap()
            .with_losses(vec![0.0, 2f64.ln()])
            .unwrap();
        let w = l.posterior_weights();
        assert_relative_eq!(w[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(w[1], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn huge_losses_do_not_underflow() {
        let l = ExpertLedger::uniform(3, 1.0)
            .unwrap()
            .with_losses(vec![1e6, 1e6 + 1.0, 1e6 + 2.0])
            .unwrap();
        let w = l.posterior_weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(w[0] > w[1] && w[1] > w[2]);
    }

    #[test]
    fn predict_examples() {
        let space = Space::euclidean(1).unwrap();
        let uniform = ExpertLedger::uniform(2, 1.0).unwrap();
        let m = predict(&uniform, &space, &[e(1.5), e(1.5)], &Solver::auto()).unwrap();
        assert_eq!(m, e(1.5));

        let skewed = uniform.clone().with_losses(vec![0.0, 2f64.ln()]).unwrap();
        let m = predict(&skewed, &space, &[e(0.0), e(2.0)], &Solver::auto()).unwrap();
        assert_relative_eq!(m.as_slice().unwrap()[0], 2.0 / 3.0, epsilon = 1e-15);

        let spider = Space::spider(3).unwrap();
        let legs: Vec<Point> = (1..=3).map(|l| Point::spider(l, 1.0)).collect();
        let m = predict(&ExpertLedger::uniform(3, 1.0).unwrap(), &spider, &legs, &Solver::auto()).unwrap();
        assert!(m.as_spider().unwrap().is_hub());
    }

    #[test]
    fn observe_examples() {
        let space = Space::euclidean(1).unwrap();
        let loss = LossSpec::squared_distance(1.0).unwrap();
        let mut game = Game::new(space, loss, None, 2, Solver::auto()).unwrap();
        let r = game.observe(&[e(0.0), e(2.0)], &e(2.0 / 3.0), &e(0.0)).unwrap();
        assert_relative_eq!(r.round_loss, 4.0 / 9.0, epsilon = 1e-15);
        assert_eq!(game.ledger().losses(), &[0.0, 4.0]);
    }

    #[test]
    fn single_expert_has_no_regret() {
        let space = Space::spider(3).unwrap().with_diameter(2.0).unwrap();
        let loss = LossSpec::squared_distance(squared_distance_beta(2.0)).unwrap();
        let advice = vec![vec![Point::spider(2, 0.5)]; 20];
        let outcomes: Vec<Point> = (0..20).map(|t| Point::spider(1 + t % 3, 1.0)).collect();
        let r = run_game(&space, &advice, &outcomes, &loss, None, &Solver::auto()).unwrap();
        assert_eq!(r.regret, 0.0);
        assert_eq!(r.bound, Some(0.0));
        assert_eq!(r.satisfied, Some(true));
    }

    #[test]
    fn squared_distance_bound_value() {
        // K = 4, D = 1, beta = 1/2
        let l = ExpertLedger::uniform(4, squared_distance_beta(1.0)).unwrap();
        assert_relative_eq!(l.regret_bound(), 2.0 * 4f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn adversarial_spider_game_respects_the_bound() {
        let space = Space::spider(3).unwrap().with_diameter(2.0).unwrap();
        let loss = LossSpec::squared_distance(squared_distance_beta(2.0)).unwrap();
        let experts: Vec<Point> = (1..=3).map(|l| Point::spider(l, 1.0)).collect();
        let candidates: Vec<Point> = (1..=3)
            .flat_map(|l| (0..=10).map(move |i| Point::spider(l, i as f64 / 10.0)))
            .collect();
        let (r, outcomes) =
            run_greedy_adversary(&space, &experts, &candidates, 50, &loss, None, &Solver::auto()).unwrap();
        assert_eq!(outcomes.len(), 50);
        assert_eq!(r.satisfied, Some(true), "regret {} bound {:?}", r.regret, r.bound);
    }

    #[test]
    fn pac_bound_examples() {
        let l = ExpertLedger::uniform(2, 0.5)
            .unwrap()
            .with_losses(vec![3.0, 1.0])
            .unwrap();
        assert_relative_eq!(pac_bound(&l, &[0.5, 0.5]).unwrap(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(
            pac_bound(&l, &[0.0, 1.0]).unwrap(),
            1.0 + 2f64.ln() / 0.5,
            epsilon = 1e-14
        );
        assert_relative_eq!(kl_divergence(&[1.0, 0.0], &[0.5, 0.5]), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]), f64::INFINITY);
        assert!(pac_bound(&l, &[0.7, 0.7]).is_err());
    }

    #[test]
    fn uncertified_losses_have_no_bound() {
        let space = Space::euclidean(1).unwrap().with_diameter(2.0).unwrap();
        let advice = vec![vec![e(-1.0), e(1.0)]; 5];
        let outcomes = vec![e(1.0); 5];
        let r = run_game(
            &space,
            &advice,
            &outcomes,
            &LossSpec::distance(0.1).unwrap(),
            None,
            &Solver::auto(),
        )
        .unwrap();
        assert_eq!(r.bound, None);
        assert_eq!(r.satisfied, None);
        let undeclared = Space::euclidean(1).unwrap();
        let r = run_game(
            &undeclared,
            &advice,
            &outcomes,
            &LossSpec::squared_distance(0.1).unwrap(),
            None,
            &Solver::auto(),
        )
        .unwrap();
        assert_eq!(r.bound, None);
    }

    #[test]
    fn strict_mode_rejects_large_beta() {
        let space = Space::euclidean(1).unwrap().with_diameter(2.0).unwrap();
        let loss = LossSpec::squared_distance(0.5).unwrap().strict();
        assert!(Game::new(space.clone(), loss, None, 2, Solver::auto()).is_err());
        let ok = LossSpec::squared_distance(0.125).unwrap().strict();
        assert!(Game::new(space, ok, None, 2, Solver::auto()).is_ok());
    }

    #[test]
    fn mismatched_streams_are_rejected() {
        let space = Space::euclidean(1).unwrap();
        let loss = LossSpec::squared_distance(1.0).unwrap();
        let r = run_game(&space, &[vec![e(0.0)]], &[e(0.0), e(1.0)], &loss, None, &Solver::auto());
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn csv_rows() {
        let space = Space::euclidean(1).unwrap().with_diameter(2.0).unwrap();
        let loss = LossSpec::squared_distance(0.125).unwrap();
        let r = run_game(&space, &[vec![e(0.0)]], &[e(1.0)], &loss, None, &Solver::auto()).unwrap();
        let mut out = Vec::new();
        write_regret_csv_header(&mut out, "space=euclidean:1").unwrap();
        r.write_csv_rows(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "# schema=1 space=euclidean:1\nt,forecaster_loss,best_expert_loss,regret,bound\n1,1,1,0,0\n"
        );
    }

    proptest! {
        #[test]
        fn weights_ignore_a_common_shift(
            losses in prop::collection::vec(0.0f64..50.0, 1..8),
            c in -100.0f64..100.0,
            beta in 0.01f64..5.0,
        ) {
            let k = losses.len();
            let a = ExpertLedger::uniform(k, beta).unwrap().with_losses(losses.clone()).unwrap();
            let shifted = losses.iter().map(|l| l + c).collect();
            let b = ExpertLedger::uniform(k, beta).unwrap().with_losses(shifted).unwrap();
            for (x, y) in a.posterior_weights().iter().zip(b.posterior_weights()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn lower_loss_means_higher_weight(
            losses in prop::collection::vec(0.0f64..10.0, 2..8),
            beta in 0.01f64..5.0,
        ) {
            let l = ExpertLedger::uniform(losses.len(), beta).unwrap().with_losses(losses.clone()).unwrap();
            let w = l.posterior_weights();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for i in 0..losses.len() {
                for j in 0..losses.len() {
                    if losses[i] < losses[j] && beta * (losses[j] - losses[i]) > 1e-12 {
                        prop_assert!(w[i] > w[j]);
                    }
                }
            }
        }

        #[test]
        fn euclidean_prediction_is_the_weighted_average(
            advice in prop::collection::vec(-10.0f64..10.0, 1..6),
            losses in prop::collection::vec(0.0f64..5.0, 6),
        ) {
            let k = advice.len();
            let l = ExpertLedger::uniform(k, 1.0).unwrap().with_losses(losses[..k].to_vec()).unwrap();
            let w = l.posterior_weights();
            let space = Space::euclidean(1).unwrap();
            let pts: Vec<Point> = advice.iter().map(|x| e(*x)).collect();
            let m = predict(&l, &space, &pts, &Solver::auto()).unwrap();
            let mean: f64 = w.iter().zip(&advice).map(|(a, b)| a * b).sum();
            prop_assert!((m.as_slice().unwrap()[0] - mean).abs() <= 1e-9);
        }
    }
}
