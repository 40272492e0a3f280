use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Interpolant through tabulated samples: a not-a-knot cubic spline for four
/// or more nodes, the interpolating polynomial otherwise.
#[derive(Debug, Clone)]
pub(crate) struct Interpolant {
    x: Vec<f64>,
    y: Vec<f64>,
    // second derivatives at the nodes (spline case only)
    m: Option<Vec<f64>>,
}

impl Interpolant {
    pub(crate) fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::InvalidArgument("table needs equal, nonzero numbers of radii and values".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("table radii must be strictly increasing".into()));
        }
        let m = if x.len() >= 4 { Some(not_a_knot(x, y)?) } else { None };
        Ok(Self { x: x.to_vec(), y: y.to_vec(), m })
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        let x = &self.x;
        let y = &self.y;
        let Some(m) = &self.m else {
            // Lagrange form, at most three nodes
            return (0..x.len())
                .map(|i| {
                    let w: f64 = (0..x.len()).filter(|&j| j != i).map(|j| (t - x[j]) / (x[i] - x[j])).product();
                    w * y[i]
                })
                .sum();
        };
        let i = match x.partition_point(|&v| v <= t) {
            0 => 0,
            p => (p - 1).min(x.len() - 2),
        };
        let h = x[i + 1] - x[i];
        let a = (x[i + 1] - t) / h;
        let b = (t - x[i]) / h;
        a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0
    }
}

fn not_a_knot(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    a[(0, 0)] = h[1];
    a[(0, 1)] = -(h[0] + h[1]);
    a[(0, 2)] = h[0];
    for i in 1..n - 1 {
        a[(i, i - 1)] = h[i - 1];
        a[(i, i)] = 2.0 * (h[i - 1] + h[i]);
        a[(i, i + 1)] = h[i];
        rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    a[(n - 1, n - 3)] = h[n - 2];
    a[(n - 1, n - 2)] = -(h[n - 3] + h[n - 2]);
    a[(n - 1, n - 1)] = h[n - 3];
    let sol = a.lu().solve(&rhs).ok_or_else(|| Error::InvalidArgument("spline system is singular".into()))?;
    Ok(sol.iter().copied().collect())
}
