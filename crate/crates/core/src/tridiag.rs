//! Three-term recurrence (Thomas) elimination for tridiagonal systems.
//!
//! Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`;
//! `lower[0]` and `upper[n-1]` are ignored.

/// Tridiagonal matrix stored by diagonals, all of length `n`.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    scratch: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Turn row `i` into the identity row `x[i] = rhs[i]`.
    pub fn set_identity_row(&mut self, i: usize) {
        self.lower[i] = 0.0;
        self.diag[i] = 1.0;
        self.upper[i] = 0.0;
    }

    /// `y = A x` for the stored matrix.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    /// Solve in place: on return `rhs` holds the solution.
    ///
    /// No pivoting; the systems assembled in this crate are diagonally
    /// dominant (implicit diffusion plus nonnegative reaction).
    pub fn solve_in_place(&mut self, rhs: &mut [f64]) {
        let n = self.len();
        assert_eq!(rhs.len(), n, "tridiagonal solve: rhs length mismatch");
        if n == 0 {
            return;
        }
        let c = &mut self.scratch;
        let mut denom = self.diag[0];
        c[0] = self.upper[0] / denom;
        rhs[0] /= denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i] * c[i - 1];
            c[i] = if i + 1 < n { self.upper[i] / denom } else { 0.0 };
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= c[i] * rhs[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_poisson_stencil() {
        // -x'' = 2 on (0,1), x(0)=x(1)=0 -> x = t(1-t), exact for the 3-point stencil
        let n = 11;
        let h = 1.0 / (n - 1) as f64;
        let mut a = Tridiagonal::zeros(n);
        let mut rhs = vec![2.0 * h * h; n];
        for i in 1..n - 1 {
            a.lower[i] = -1.0;
            a.diag[i] = 2.0;
            a.upper[i] = -1.0;
        }
        a.set_identity_row(0);
        a.set_identity_row(n - 1);
        rhs[0] = 0.0;
        rhs[n - 1] = 0.0;
        a.solve_in_place(&mut rhs);
        for (i, x) in rhs.iter().enumerate() {
            let t = i as f64 * h;
            assert!((x - t * (1.0 - t)).abs() < 1e-14);
        }
    }

    #[test]
    fn apply_then_solve_round_trips() {
        let n = 7;
        let mut a = Tridiagonal::zeros(n);
        for i in 0..n {
            a.lower[i] = -0.3 * (i as f64 + 1.0);
            a.diag[i] = 4.0 + i as f64;
            a.upper[i] = 0.7;
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut y = vec![0.0; n];
        a.apply(&x, &mut y);
        a.solve_in_place(&mut y);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-13);
        }
    }
}
