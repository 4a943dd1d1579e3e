//! Natural cubic spline interpolation with first and second derivatives.

/// Natural cubic spline through `(x_k, y_k)` knots.
///
/// Second derivatives vanish at both ends; the interpolant is C² on the
/// knot span. Evaluation outside the span extrapolates the end cubics.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    /// Builds the spline. Requires at least two strictly increasing knots.
    pub fn natural(x: &[f64], y: &[f64]) -> Self {
        assert_eq!(x.len(), y.len(), "knot coordinate count mismatch");
        assert!(x.len() >= 2, "spline needs at least two knots");
        assert!(
            x.windows(2).all(|w| w[1] > w[0]),
            "knot abscissae must be strictly increasing"
        );
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior tridiagonal system.
            let rows = n - 2;
            let mut diag = vec![0.0; rows];
            let mut upper = vec![0.0; rows];
            let mut rhs = vec![0.0; rows];
            for i in 0..rows {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..rows {
                let lower = x[i + 1] - x[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[rows] = rhs[rows - 1] / diag[rows - 1];
            for i in (0..rows - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        CubicSpline {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        }
    }

    fn segment(&self, x: f64) -> usize {
        // partition_point returns the first knot > x; the segment is the one
        // starting at the previous knot, clamped to the knot span.
        let k = self.x.partition_point(|&knot| knot <= x);
        k.max(1).min(self.x.len() - 1) - 1
    }

    pub fn value(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let h = self.x[k + 1] - self.x[k];
        let a = (self.x[k + 1] - x) / h;
        let b = (x - self.x[k]) / h;
        a * self.y[k]
            + b * self.y[k + 1]
            + ((a.powi(3) - a) * self.m[k] + (b.powi(3) - b) * self.m[k + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let h = self.x[k + 1] - self.x[k];
        let a = (self.x[k + 1] - x) / h;
        let b = (x - self.x[k]) / h;
        (self.y[k + 1] - self.y[k]) / h
            + ((3.0 * b * b - 1.0) * self.m[k + 1] - (3.0 * a * a - 1.0) * self.m[k]) * h / 6.0
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let h = self.x[k + 1] - self.x[k];
        let a = (self.x[k + 1] - x) / h;
        let b = (x - self.x[k]) / h;
        a * self.m[k] + b * self.m[k + 1]
    }
}
