//! Symbol-level products: fibrewise convolution, its hbar-deformation, the
//! asymptotic Green term l_hbar(f, g) and its limit l(f, g), and the product
//! *' on symbol-plus-kernel pairs.
//!
//! Everything is built lazily; values are computed by composite trapezoid
//! quadrature over boxes of 1.5x the relevant decay radii.

use num_complex::Complex64 as C64;

use super::grid::Coord;
use super::kernel::{BoundaryKernel, KernelBody};
use super::quadrature::{Trapezoid, BOX_SCALE};
use super::symbol::{Symbol, SymbolBody};
use crate::error::{Error, Result};

/// A symbol together with a boundary kernel: an element f + K of the
/// boundary symbol algebra.
#[derive(Clone, Debug)]
pub struct BoundaryElement {
    pub symbol: Symbol,
    pub kernel: BoundaryKernel,
}

impl BoundaryElement {
    pub fn new(symbol: Symbol, kernel: BoundaryKernel) -> Result<Self> {
        same_dim(symbol.dim(), kernel.dim())?;
        Ok(BoundaryElement { symbol, kernel })
    }

    pub fn from_symbol(symbol: Symbol) -> Self {
        let dim = symbol.dim();
        BoundaryElement { symbol, kernel: BoundaryKernel::zero(dim) }
    }

    pub fn dim(&self) -> usize {
        self.symbol.dim()
    }
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, actual: b });
    }
    Ok(())
}

/// Quadrature settings for the symbol calculus. Full-line convolutions of
/// smooth decaying integrands converge spectrally under the trapezoid rule;
/// the half-line integrals behind boundary kernels have an endpoint and
/// converge at second order, so they get their own (usually finer) rule.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Calculus {
    pub rule: Trapezoid,
    pub boundary_rule: Trapezoid,
}

impl Calculus {
    pub fn new(rule: Trapezoid) -> Self {
        Calculus { rule, boundary_rule: rule }
    }

    pub fn with_boundary_rule(mut self, rule: Trapezoid) -> Self {
        self.boundary_rule = rule;
        self
    }

    fn check(&self, radii: &[f64]) -> Result<()> {
        let r = radii.iter().copied().filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min);
        let spacing = self.rule.spacing.max(self.boundary_rule.spacing);
        if r.is_finite() && spacing > r / 8.0 {
            return Err(Error::QuadratureResolution { spacing, required: r / 8.0 });
        }
        Ok(())
    }

    /// (f * g)(x, w) = int f(x, v) g(x, w - v) dv.
    pub fn convolve(&self, f: &Symbol, g: &Symbol) -> Result<Symbol> {
        self.convolve_impl(f, g, 0.0)
    }

    /// (f *_hbar g)(x, w) = int f(x, v) g(x - hbar v, w - v) dv.
    pub fn convolve_hbar(&self, f: &Symbol, g: &Symbol, hbar: f64) -> Result<Symbol> {
        check_hbar(hbar)?;
        self.convolve_impl(f, g, hbar)
    }

    fn convolve_impl(&self, f: &Symbol, g: &Symbol, hbar: f64) -> Result<Symbol> {
        same_dim(f.dim(), g.dim())?;
        if f.is_zero() || g.is_zero() {
            return Ok(Symbol::zero(f.dim()));
        }
        self.check(&[f.decay_radius(), g.decay_radius()])?;
        let label = if hbar == 0.0 {
            format!("({})*({})", f.label(), g.label())
        } else {
            format!("({})*[{hbar}]({})", f.label(), g.label())
        };
        Ok(Symbol::from_body(
            f.dim(),
            label,
            f.decay_radius() + g.decay_radius(),
            SymbolBody::Convolution { f: f.clone(), g: g.clone(), hbar, rule: self.rule },
        ))
    }

    /// The limit l(f, g) of the asymptotic Green term.
    pub fn leftover(&self, f: &Symbol, g: &Symbol) -> Result<BoundaryKernel> {
        self.leftover_impl(f, g, 0.0)
    }

    /// The asymptotic Green term l_hbar(f, g).
    pub fn leftover_hbar(&self, f: &Symbol, g: &Symbol, hbar: f64) -> Result<BoundaryKernel> {
        check_hbar(hbar)?;
        self.leftover_impl(f, g, hbar)
    }

    fn leftover_impl(&self, f: &Symbol, g: &Symbol, hbar: f64) -> Result<BoundaryKernel> {
        same_dim(f.dim(), g.dim())?;
        if f.is_zero() || g.is_zero() {
            return Ok(BoundaryKernel::zero(f.dim()));
        }
        self.check(&[f.decay_radius(), g.decay_radius()])?;
        let label = if hbar == 0.0 {
            format!("l({}, {})", f.label(), g.label())
        } else {
            format!("l[{hbar}]({}, {})", f.label(), g.label())
        };
        Ok(BoundaryKernel::from_body(
            f.dim(),
            label,
            f.decay_radius() + g.decay_radius(),
            KernelBody::Leftover { f: f.clone(), g: g.clone(), hbar, rule: self.boundary_rule },
        ))
    }

    /// f *' g = (f * g, l(f, g)) for pure symbols.
    pub fn star_prime(&self, f: &Symbol, g: &Symbol) -> Result<(Symbol, BoundaryKernel)> {
        Ok((self.convolve(f, g)?, self.leftover(f, g)?))
    }

    /// (f + K) *' (g + L) = f * g + [l(f, g) + f.L + K.g + K.L], where the dotted
    /// products are the kernels of the composed boundary operators.
    pub fn star_prime_elements(
        &self,
        a: &BoundaryElement,
        b: &BoundaryElement,
    ) -> Result<BoundaryElement> {
        same_dim(a.dim(), b.dim())?;
        let dim = a.dim();
        let symbol = self.convolve(&a.symbol, &b.symbol)?;
        let mut parts = vec![self.leftover(&a.symbol, &b.symbol)?];
        if !a.symbol.is_zero() && !b.kernel.is_zero() {
            parts.push(BoundaryKernel::from_body(
                dim,
                format!("{}.{}", a.symbol.label(), b.kernel.label()),
                a.symbol.decay_radius() + b.kernel.decay_radius(),
                KernelBody::SymbolKernel { f: a.symbol.clone(), k: b.kernel.clone(), rule: self.boundary_rule },
            ));
        }
        if !a.kernel.is_zero() && !b.symbol.is_zero() {
            parts.push(BoundaryKernel::from_body(
                dim,
                format!("{}.{}", a.kernel.label(), b.symbol.label()),
                a.kernel.decay_radius() + b.symbol.decay_radius(),
                KernelBody::KernelSymbol { k: a.kernel.clone(), g: b.symbol.clone(), rule: self.boundary_rule },
            ));
        }
        if !a.kernel.is_zero() && !b.kernel.is_zero() {
            parts.push(BoundaryKernel::from_body(
                dim,
                format!("{}.{}", a.kernel.label(), b.kernel.label()),
                a.kernel.decay_radius() + b.kernel.decay_radius(),
                KernelBody::KernelKernel { k: a.kernel.clone(), l: b.kernel.clone(), rule: self.boundary_rule },
            ));
        }
        Ok(BoundaryElement { symbol, kernel: BoundaryKernel::sum(dim, parts) })
    }
}

fn check_hbar(hbar: f64) -> Result<()> {
    if !(hbar > 0.0 && hbar <= 1.0) {
        return Err(Error::InvalidArgument(format!("hbar must lie in (0, 1], got {hbar}")));
    }
    Ok(())
}

pub fn convolve_symbols(f: &Symbol, g: &Symbol) -> Result<Symbol> {
    Calculus::default().convolve(f, g)
}

pub fn convolve_symbols_hbar(f: &Symbol, g: &Symbol, hbar: f64) -> Result<Symbol> {
    Calculus::default().convolve_hbar(f, g, hbar)
}

pub fn leftover_l(f: &Symbol, g: &Symbol) -> Result<BoundaryKernel> {
    Calculus::default().leftover(f, g)
}

pub fn leftover_l_hbar(f: &Symbol, g: &Symbol, hbar: f64) -> Result<BoundaryKernel> {
    Calculus::default().leftover_hbar(f, g, hbar)
}

pub fn star_prime(f: &Symbol, g: &Symbol) -> Result<(Symbol, BoundaryKernel)> {
    Calculus::default().star_prime(f, g)
}

/// Intersection of [lo_a, hi_a] and [lo_b, hi_b].
fn clip(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0.max(b.0), a.1.min(b.1))
}

fn boxed(r: f64) -> f64 {
    BOX_SCALE * r
}

pub(crate) fn eval_convolution(
    f: &Symbol,
    g: &Symbol,
    hbar: f64,
    rule: &Trapezoid,
    x: Coord,
    w: Coord,
) -> C64 {
    let (rf, rg) = (boxed(f.decay_radius()), boxed(g.decay_radius()));
    let integrand = |v: Coord| f.eval(x, v) * g.eval(x - v.scale(hbar), w - v);
    if f.dim() == 1 {
        let (lo, hi) = clip((-rf, rf), (w.n - rg, w.n + rg));
        rule.integrate(lo, hi, |vn| integrand(Coord::normal(vn)))
    } else {
        let t = clip((-rf, rf), (w.t - rg, w.t + rg));
        let n = clip((-rf, rf), (w.n - rg, w.n + rg));
        rule.integrate_2d(t, n, |vt, vn| integrand(Coord::new(vt, vn)))
    }
}

/// l_hbar(f, g)(x', y', x_n, y_n)
///   = - int_{v_n >= x_n} f(x', hbar x_n, v) g(x' - hbar v', hbar (x_n - v_n), y' - v', x_n - y_n - v_n) dv
#[allow(clippy::too_many_arguments)]
pub(crate) fn eval_leftover(
    f: &Symbol,
    g: &Symbol,
    hbar: f64,
    rule: &Trapezoid,
    xt: f64,
    yt: f64,
    xn: f64,
    yn: f64,
) -> C64 {
    let (rf, rg) = (boxed(f.decay_radius()), boxed(g.decay_radius()));
    let d = xn - yn;
    let (lo, hi) = clip(clip((xn, f64::INFINITY), (-rf, rf)), (d - rg, d + rg));
    if f.dim() == 1 {
        let base = Coord::normal(hbar * xn);
        -rule.integrate(lo, hi, |vn| {
            f.eval(base, Coord::normal(vn))
                * g.eval(Coord::normal(hbar * (xn - vn)), Coord::normal(d - vn))
        })
    } else {
        let t = clip((-rf, rf), (yt - rg, yt + rg));
        let base = Coord::new(xt, hbar * xn);
        -rule.integrate_2d(t, (lo, hi), |vt, vn| {
            f.eval(base, Coord::new(vt, vn))
                * g.eval(Coord::new(xt - hbar * vt, hbar * (xn - vn)), Coord::new(yt - vt, d - vn))
        })
    }
}

/// int_{z_n >= 0} f((x', 0), (u' - s', v_n - z_n)) K(x', s', z_n, w_n) ds' dz_n
#[allow(clippy::too_many_arguments)]
pub(crate) fn eval_symbol_kernel(
    f: &Symbol,
    k: &BoundaryKernel,
    rule: &Trapezoid,
    xt: f64,
    ut: f64,
    vn: f64,
    wn: f64,
) -> C64 {
    let (rf, rk) = (boxed(f.decay_radius()), boxed(k.decay_radius()));
    let z = clip((0.0_f64.max(vn - rf), vn + rf), (0.0, rk));
    let x = Coord::new(xt, 0.0);
    if f.dim() == 1 {
        rule.integrate(z.0, z.1, |zn| f.eval(x, Coord::normal(vn - zn)) * k.eval1(zn, wn))
    } else {
        let s = clip((ut - rf, ut + rf), (-rk, rk));
        rule.integrate_2d(s, z, |st, zn| f.eval(x, Coord::new(ut - st, vn - zn)) * k.eval(xt, st, zn, wn))
    }
}

/// int_{z_n >= 0} K(x', u' - s', v_n, z_n) g((x', 0), (s', z_n - w_n)) ds' dz_n
#[allow(clippy::too_many_arguments)]
pub(crate) fn eval_kernel_symbol(
    k: &BoundaryKernel,
    g: &Symbol,
    rule: &Trapezoid,
    xt: f64,
    ut: f64,
    vn: f64,
    wn: f64,
) -> C64 {
    let (rk, rg) = (boxed(k.decay_radius()), boxed(g.decay_radius()));
    let z = clip((0.0_f64.max(wn - rg), wn + rg), (0.0, rk));
    let x = Coord::new(xt, 0.0);
    if g.dim() == 1 {
        rule.integrate(z.0, z.1, |zn| k.eval1(vn, zn) * g.eval(x, Coord::normal(zn - wn)))
    } else {
        let s = clip((ut - rk, ut + rk), (-rg, rg));
        rule.integrate_2d(s, z, |st, zn| k.eval(xt, ut - st, vn, zn) * g.eval(x, Coord::new(st, zn - wn)))
    }
}

/// int_{z_n >= 0} K(x', u' - s', v_n, z_n) L(x', s', z_n, w_n) ds' dz_n
#[allow(clippy::too_many_arguments)]
pub(crate) fn eval_kernel_kernel(
    k: &BoundaryKernel,
    l: &BoundaryKernel,
    rule: &Trapezoid,
    xt: f64,
    ut: f64,
    vn: f64,
    wn: f64,
) -> C64 {
    let (rk, rl) = (boxed(k.decay_radius()), boxed(l.decay_radius()));
    let z = (0.0, rk.min(rl));
    if k.dim() == 1 {
        rule.integrate(z.0, z.1, |zn| k.eval1(vn, zn) * l.eval1(zn, wn))
    } else {
        let s = clip((ut - rk, ut + rk), (-rl, rl));
        rule.integrate_2d(s, z, |st, zn| k.eval(xt, ut - st, vn, zn) * l.eval(xt, st, zn, wn))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolics::catalogue::parse_symbol;
    use crate::symbolics::fourier::fourier_at;
    use std::f64::consts::PI;

    fn g1() -> Symbol {
        parse_symbol("gauss:b=1").unwrap()
    }

    #[test]
    fn gaussian_self_convolution_at_origin() {
        let c = convolve_symbols(&g1(), &g1()).unwrap();
        let v = c.eval(Coord::normal(3.0), Coord::ZERO);
        assert!((v.re - (PI / 2.0).sqrt()).abs() < 1e-12, "{v}");
        assert!(v.im.abs() < 1e-15);
        // (f*g)(w) = sqrt(pi/2) exp(-w^2/2)
        let w = c.eval(Coord::ZERO, Coord::normal(1.3));
        assert!((w.re - (PI / 2.0).sqrt() * (-0.5f64 * 1.69).exp()).abs() < 1e-12);
    }

    #[test]
    fn leftover_at_boundary_corner() {
        let l = leftover_l(&g1(), &g1()).unwrap();
        let v = l.eval1(0.0, 0.0);
        assert!((v.re + 0.5 * (PI / 2.0).sqrt()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn zero_inputs_give_structural_zeros() {
        let z = Symbol::zero(1);
        assert!(convolve_symbols(&z, &g1()).unwrap().is_zero());
        assert!(leftover_l(&g1(), &z).unwrap().is_zero());
        let (s, k) = star_prime(&z, &g1()).unwrap();
        assert!(s.is_zero() && k.is_zero());
    }

    #[test]
    fn hbar_convolution_matches_closed_form() {
        // f = g = exp(-x^2 - v^2); at x = 1, w = 0, hbar = 1/2 the integrand is
        // exp(-1) exp(-(2.25 v^2 - v + 1)).
        let f = Symbol::gaussian(1.0, 1.0);
        let c = convolve_symbols_hbar(&f, &f, 0.5).unwrap();
        let v = c.eval(Coord::normal(1.0), Coord::ZERO);
        let exact = (-1.0f64).exp() * (PI / 2.25).sqrt() * (1.0 / 9.0 - 1.0f64).exp();
        assert!((v.re - exact).abs() < 1e-8, "{} vs {exact}", v.re);
    }

    #[test]
    fn hbar_convolution_ignores_hbar_for_base_independent_g() {
        let f = Symbol::gaussian(1.0, 1.0);
        let a = convolve_symbols_hbar(&f, &g1(), 0.25).unwrap();
        let b = convolve_symbols(&f, &g1()).unwrap();
        for (x, w) in [(0.0, 0.0), (0.7, -1.1), (2.0, 0.4)] {
            let (x, w) = (Coord::normal(x), Coord::normal(w));
            assert!((a.eval(x, w) - b.eval(x, w)).norm() < 1e-14);
        }
    }

    #[test]
    fn hbar_leftover_matches_closed_form() {
        // hbar = 1, f = g = exp(-x^2 - v^2), node (0, 0):
        // -int_0^inf exp(-v^2) exp(-v^2) exp(-v^2) dv = -sqrt(pi/3)/2.
        let f = Symbol::gaussian(1.0, 1.0);
        let l = leftover_l_hbar(&f, &f, 1.0).unwrap();
        let v = l.eval1(0.0, 0.0);
        assert!((v.re + 0.5 * (PI / 3.0).sqrt()).abs() < 1e-10, "{v}");
    }

    #[test]
    fn hbar_leftover_converges_linearly() {
        let f = parse_symbol("gauss:a=1,b=1,x0=0.5").unwrap();
        let g = parse_symbol("gauss:a=2,b=2,x0=1,v0=0.5").unwrap();
        let l0 = leftover_l(&f, &g).unwrap();
        let diff = |h: f64| {
            let lh = leftover_l_hbar(&f, &g, h).unwrap();
            let mut m: f64 = 0.0;
            for xn in [0.0, 0.25, 0.5, 1.0] {
                for yn in [0.0, 0.5, 1.0] {
                    m = m.max((lh.eval1(xn, yn) - l0.eval1(xn, yn)).norm());
                }
            }
            m
        };
        let d: Vec<f64> = (3..8).map(|k| diff(0.5f64.powi(k))).collect();
        for w in d.windows(2) {
            assert!(w[1] <= w[0]);
            assert!((w[0] / w[1] - 2.0).abs() < 0.2, "{d:?}");
        }
    }

    #[test]
    fn leftover_vanishes_for_symbols_supported_in_negative_half() {
        let f = parse_symbol("bump:rv=2,v0=-3").unwrap();
        let l = leftover_l(&f, &g1()).unwrap();
        for xn in [0.0, 0.5, 2.0] {
            for yn in [0.0, 1.0] {
                assert_eq!(l.eval1(xn, yn), C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn dim2_leftover_factorizes() {
        let f = parse_symbol("gauss:dim=2,b=1").unwrap();
        let l2 = leftover_l(&f, &f).unwrap();
        let l1 = leftover_l(&g1(), &g1()).unwrap();
        for (xn, yn) in [(0.0, 0.0), (0.3, 0.8), (1.0, 0.2)] {
            let a = l2.eval(0.4, 0.0, xn, yn);
            let b = l1.eval1(xn, yn) * (PI / 2.0).sqrt();
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn conjugation_distributes() {
        let f = parse_symbol("gauss:b=1,k=1").unwrap();
        let g = parse_symbol("gauss:a=1,b=1,x0=0.5").unwrap().scaled(C64::new(0.5, 2.0));
        let a = convolve_symbols(&f, &g).unwrap().conj();
        let b = convolve_symbols(&f.conj(), &g.conj()).unwrap();
        let la = leftover_l(&f, &g).unwrap().conj();
        let lb = leftover_l(&f.conj(), &g.conj()).unwrap();
        for (x, w) in [(0.0, 0.3), (1.0, -0.4)] {
            let d = a.eval(Coord::normal(x), Coord::normal(w))
                - b.eval(Coord::normal(x), Coord::normal(w));
            assert!(d.norm() < 1e-13);
            assert!((la.eval1(x.abs(), w.abs()) - lb.eval1(x.abs(), w.abs())).norm() < 1e-13);
        }
    }

    #[test]
    fn convolution_theorem() {
        let f = parse_symbol("gauss:b=1,k=1").unwrap();
        let g = parse_symbol("gauss:b=0.5,v0=0.5").unwrap();
        let c = convolve_symbols(&f, &g).unwrap();
        let rule = Trapezoid::new(1.0 / 16.0);
        for s in [-2.0, -0.5, 0.0, 1.0, 3.0] {
            let sigma = Coord::normal(s);
            let lhs = fourier_at(&c, Coord::ZERO, sigma, &rule, 16.0);
            let rhs = fourier_at(&f, Coord::ZERO, sigma, &rule, 9.0)
                * fourier_at(&g, Coord::ZERO, sigma, &rule, 10.0);
            assert!((lhs - rhs).norm() < 1e-10, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn coarse_rule_is_rejected() {
        let c = Calculus::new(Trapezoid::new(1.0));
        assert!(matches!(c.convolve(&g1(), &g1()), Err(Error::QuadratureResolution { .. })));
        assert!(convolve_symbols_hbar(&g1(), &g1(), 0.0).is_err());
        assert!(convolve_symbols_hbar(&g1(), &g1(), 1.5).is_err());
    }
}
