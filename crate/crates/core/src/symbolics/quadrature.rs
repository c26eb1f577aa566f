use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Integration boxes are this many times the relevant decay radius.
pub const BOX_SCALE: f64 = 1.5;

/// Composite trapezoid rule with a target spacing; the actual spacing on an
/// interval [a, b] is the largest value <= `spacing` that divides b - a evenly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trapezoid {
    pub spacing: f64,
}

impl Default for Trapezoid {
    fn default() -> Self {
        Trapezoid { spacing: 1.0 / 32.0 }
    }
}

impl Trapezoid {
    pub fn new(spacing: f64) -> Self {
        assert!(spacing.is_finite() && spacing > 0.0, "quadrature spacing must be positive");
        Trapezoid { spacing }
    }

    pub fn halved(self) -> Self {
        Trapezoid { spacing: 0.5 * self.spacing }
    }

    /// Nodes and weights on [a, b]; empty when the interval is empty.
    pub fn rule(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        if !(b > a) {
            return Vec::new();
        }
        let cells = ((b - a) / self.spacing).ceil().max(1.0) as usize;
        let h = (b - a) / cells as f64;
        (0..=cells)
            .map(|k| {
                let x = if k == cells { b } else { a + k as f64 * h };
                let w = if k == 0 || k == cells { 0.5 * h } else { h };
                (x, w)
            })
            .collect()
    }

    pub fn integrate<F: FnMut(f64) -> C64>(&self, a: f64, b: f64, mut f: F) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in self.rule(a, b) {
            acc += f(x) * w;
        }
        acc
    }

    /// Tensor rule over [a0, b0] x [a1, b1].
    pub fn integrate_2d<F: FnMut(f64, f64) -> C64>(
        &self,
        (a0, b0): (f64, f64),
        (a1, b1): (f64, f64),
        mut f: F,
    ) -> C64 {
        let r0 = self.rule(a0, b0);
        let r1 = self.rule(a1, b1);
        let mut acc = C64::new(0.0, 0.0);
        for &(x, wx) in &r0 {
            let mut inner = C64::new(0.0, 0.0);
            for &(y, wy) in &r1 {
                inner += f(x, y) * wy;
            }
            acc += inner * wx;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_linear() {
        let q = Trapezoid::new(0.3);
        let v = q.integrate(1.0, 2.0, |x| C64::new(2.0 * x + 1.0, 0.0));
        assert!((v.re - 4.0).abs() < 1e-14);
    }

    #[test]
    fn empty_interval() {
        let q = Trapezoid::default();
        assert_eq!(q.rule(1.0, 1.0).len(), 0);
        assert_eq!(q.integrate(2.0, 1.0, |_| C64::new(1.0, 0.0)), C64::new(0.0, 0.0));
    }

    #[test]
    fn gaussian_is_spectrally_accurate() {
        let q = Trapezoid::new(0.25);
        let v = q.integrate(-12.0, 12.0, |x| C64::new((-x * x).exp(), 0.0));
        assert!((v.re - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn second_order_at_hard_endpoint() {
        // The integrand is not flat at the endpoint, so halving the spacing
        // cuts the error by about four.
        let exact = 1.0 - (-1.0f64).exp();
        let err = |h: f64| (Trapezoid::new(h).integrate(0.0, 1.0, |x| C64::new((-x).exp(), 0.0)).re - exact).abs();
        let r = err(0.1) / err(0.05);
        assert!((r - 4.0).abs() < 0.05, "ratio {r}");
    }
}
