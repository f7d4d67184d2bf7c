//! Flat space `R^p` with the l2 metric.

pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    squared_distance(x, y).sqrt()
}

pub fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Straight-line interpolation `x + t (y - x)`.
pub fn geodesic(x: &[f64], y: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + t * (b - a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pythagorean_distance() {
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
    }

    #[test]
    fn midpoint() {
        assert_eq!(geodesic(&[0.0, 0.0], &[2.0, 4.0], 0.5), vec![1.0, 2.0]);
    }

    #[test]
    fn endpoints_are_exact() {
        let x = [0.1, -3.7];
        let y = [2.3, 9.1];
        assert_eq!(geodesic(&x, &y, 0.0), x.to_vec());
        assert_eq!(geodesic(&x, &x, 0.37), x.to_vec());
    }
}
