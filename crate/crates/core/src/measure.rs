//! Finitely supported probability measures.

use crate::error::{Error, Result};
use crate::space::Point;

/// Absolute tolerance on `|sum of weights - 1|`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// `P = sum_i w_i delta_{y_i}` with non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAtoms {
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

impl WeightedAtoms {
    pub fn new(atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::input("a measure needs at least one atom"));
        }
        if atoms.len() != weights.len() {
            return Err(Error::input(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::input("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::input(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { atoms, weights })
    }

    /// Rescales non-negative `raw` weights so that they sum to one.
    pub fn normalized(atoms: Vec<Point>, raw: Vec<f64>) -> Result<Self> {
        let total: f64 = raw.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::input("raw weights must have a positive finite sum"));
        }
        let weights = raw.iter().map(|w| w / total).collect();
        Self::new(atoms, weights)
    }

    pub fn uniform(atoms: Vec<Point>) -> Result<Self> {
        let n = atoms.len();
        if n == 0 {
            return Err(Error::input("a measure needs at least one atom"));
        }
        // built directly: the float sum of n copies of 1/n can drift past the
        // tolerance for very large n
        Ok(Self {
            atoms,
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn single(atom: Point) -> Self {
        Self {
            atoms: vec![atom],
            weights: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> + '_ {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// Index of the atom with the largest weight (first one on ties).
    pub fn heaviest(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64) -> Point {
        Point::Euclidean(vec![x])
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(WeightedAtoms::new(vec![], vec![]).is_err());
        assert!(WeightedAtoms::new(vec![p(0.0)], vec![0.5]).is_err());
        assert!(WeightedAtoms::new(vec![p(0.0), p(1.0)], vec![1.5, -0.5]).is_err());
        assert!(WeightedAtoms::new(vec![p(0.0), p(1.0)], vec![1.0]).is_err());
        assert!(WeightedAtoms::new(vec![p(0.0)], vec![f64::NAN]).is_err());
    }

    #[test]
    fn normalization() {
        let m = WeightedAtoms::normalized(vec![p(0.0), p(1.0)], vec![1.0, 3.0]).unwrap();
        assert_eq!(m.weights(), &[0.25, 0.75]);
        assert_eq!(m.heaviest(), 1);
        let u = WeightedAtoms::uniform((0..7).map(|i| p(i as f64)).collect()).unwrap();
        assert!((u.weights().iter().sum::<f64>() - 1.0).abs() <= WEIGHT_SUM_TOLERANCE);
    }

    #[test]
    fn zero_weights_allowed() {
        let m = WeightedAtoms::new(vec![p(0.0), p(1.0)], vec![1.0, 0.0]).unwrap();
        assert_eq!(m.len(), 2);
    }
}
