//! Symbols f(x, v) on the tangent bundle of the half-space.
//!
//! Catalogue symbols are separable closed forms defined on all of the base
//! space, so the smooth extension off the half-space needed by the composition
//! formulas is plain evaluation. Products built by the calculus are lazy: they
//! carry their factors and evaluate by quadrature on demand.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::calculus;
use super::grid::Coord;
use super::quadrature::Trapezoid;

/// Values below this are treated as zero when sizing supports.
pub const DECAY_THRESHOLD: f64 = 1e-14;

/// exp(1 - 1/(1 - t^2)) on |t| < 1, zero outside; equals 1 at t = 0.
pub fn bump(t: f64) -> f64 {
    let s = 1.0 - t * t;
    if s <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / s).exp()
    }
}

/// Radius beyond which `amp * exp(-rate * r^2)` drops under the decay threshold.
pub(crate) fn gaussian_radius(amp: f64, rate: f64) -> f64 {
    ((amp / DECAY_THRESHOLD).ln().max(0.0) / rate).sqrt()
}

fn dist(x: Coord, c: Coord, dim: usize) -> f64 {
    if dim == 1 {
        (x.n - c.n).abs()
    } else {
        (x - c).norm()
    }
}

fn dist_sq(x: Coord, c: Coord, dim: usize) -> f64 {
    if dim == 1 {
        (x.n - c.n).powi(2)
    } else {
        (x - c).norm_sq()
    }
}

/// Dependence on the base point x. Every profile is bounded by one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BaseProfile {
    Constant,
    /// exp(-a |x - center|^2)
    Gaussian { a: f64, center: Coord },
    /// 1 / (1 + |x - center|^2 / width^2)
    Lorentzian { width: f64, center: Coord },
    /// bump(|x - center| / radius)
    Bump { radius: f64, center: Coord },
}

impl BaseProfile {
    fn eval(&self, x: Coord, dim: usize) -> f64 {
        match self {
            BaseProfile::Constant => 1.0,
            BaseProfile::Gaussian { a, center } => (-a * dist_sq(x, *center, dim)).exp(),
            BaseProfile::Lorentzian { width, center } => {
                1.0 / (1.0 + dist_sq(x, *center, dim) / (width * width))
            }
            BaseProfile::Bump { radius, center } => bump(dist(x, *center, dim) / radius),
        }
    }

    fn support(&self, amp: f64) -> Option<(Coord, f64)> {
        match self {
            BaseProfile::Constant | BaseProfile::Lorentzian { .. } => None,
            BaseProfile::Gaussian { a, center } => Some((*center, gaussian_radius(amp, *a))),
            BaseProfile::Bump { radius, center } => Some((*center, *radius)),
        }
    }
}

/// Dependence on the covariable v. Every profile is bounded by one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FiberProfile {
    /// exp(-b |v - center|^2)
    Gaussian { b: f64, center: Coord },
    /// bump(|v - center| / radius)
    Bump { radius: f64, center: Coord },
}

impl FiberProfile {
    fn eval(&self, v: Coord, dim: usize) -> f64 {
        match self {
            FiberProfile::Gaussian { b, center } => (-b * dist_sq(v, *center, dim)).exp(),
            FiberProfile::Bump { radius, center } => bump(dist(v, *center, dim) / radius),
        }
    }

    fn radius(&self, amp: f64, dim: usize) -> f64 {
        let c = |center: &Coord| if dim == 1 { center.n.abs() } else { center.norm() };
        match self {
            FiberProfile::Gaussian { b, center } => c(center) + gaussian_radius(amp, *b),
            FiberProfile::Bump { radius, center } => c(center) + radius,
        }
    }
}

/// amplitude * base(x) * fiber(v) * exp(i <modulation, v>)
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Separable {
    pub amplitude: C64,
    pub base: BaseProfile,
    pub fiber: FiberProfile,
    pub modulation: Coord,
}

impl Separable {
    fn eval(&self, x: Coord, v: Coord, dim: usize) -> C64 {
        let mag = self.base.eval(x, dim) * self.fiber.eval(v, dim);
        if mag == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let phase = if dim == 1 { self.modulation.n * v.n } else { self.modulation.dot(v) };
        let rot = if phase == 0.0 { C64::new(1.0, 0.0) } else { C64::from_polar(1.0, phase) };
        self.amplitude * mag * rot
    }
}

#[derive(Clone, Debug)]
pub(crate) enum SymbolBody {
    Zero,
    Separable(Separable),
    /// (f *_hbar g)(x, w) = int f(x, v) g(x - hbar v, w - v) dv; hbar = 0 is the plain fibrewise convolution.
    Convolution { f: Symbol, g: Symbol, hbar: f64, rule: Trapezoid },
    Conjugate(Symbol),
    Scaled(C64, Symbol),
}

#[derive(Debug)]
struct SymbolInner {
    dim: usize,
    label: String,
    decay_radius: f64,
    body: SymbolBody,
}

/// A symbol on T R^n_+ (n = 1, 2). Cheap to clone.
#[derive(Clone)]
pub struct Symbol(Arc<SymbolInner>);

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("label", &self.0.label)
            .field("dim", &self.0.dim)
            .field("decay_radius", &self.0.decay_radius)
            .finish()
    }
}

impl Symbol {
    pub(crate) fn from_body(dim: usize, label: String, decay_radius: f64, body: SymbolBody) -> Self {
        Symbol(Arc::new(SymbolInner { dim, label, decay_radius, body }))
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_body(dim, "zero".into(), 0.0, SymbolBody::Zero)
    }

    pub fn separable(dim: usize, label: impl Into<String>, s: Separable) -> Self {
        if s.amplitude == C64::new(0.0, 0.0) {
            return Self::from_body(dim, label.into(), 0.0, SymbolBody::Zero);
        }
        let r = s.fiber.radius(s.amplitude.norm(), dim);
        Self::from_body(dim, label.into(), r, SymbolBody::Separable(s))
    }

    /// exp(-a x_n^2 - b v_n^2) in one dimension; `a = 0` drops the base factor.
    pub fn gaussian(a: f64, b: f64) -> Self {
        let base = if a > 0.0 {
            BaseProfile::Gaussian { a, center: Coord::ZERO }
        } else {
            BaseProfile::Constant
        };
        Self::separable(
            1,
            format!("gauss:a={a},b={b}"),
            Separable {
                amplitude: C64::new(1.0, 0.0),
                base,
                fiber: FiberProfile::Gaussian { b, center: Coord::ZERO },
                modulation: Coord::ZERO,
            },
        )
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn label(&self) -> &str {
        &self.0.label
    }

    /// |f(x, v)| < 1e-14 whenever |v| exceeds this.
    pub fn decay_radius(&self) -> f64 {
        self.0.decay_radius
    }

    /// Structural zero (no evaluation needed).
    pub fn is_zero(&self) -> bool {
        match &self.0.body {
            SymbolBody::Zero => true,
            SymbolBody::Convolution { f, g, .. } => f.is_zero() || g.is_zero(),
            SymbolBody::Conjugate(s) => s.is_zero(),
            SymbolBody::Scaled(c, s) => *c == C64::new(0.0, 0.0) || s.is_zero(),
            SymbolBody::Separable(_) => false,
        }
    }

    /// True when f(x, v) does not depend on x.
    pub fn is_base_independent(&self) -> bool {
        match &self.0.body {
            SymbolBody::Zero => true,
            SymbolBody::Separable(s) => s.base == BaseProfile::Constant,
            SymbolBody::Convolution { f, g, .. } => {
                f.is_base_independent() && g.is_base_independent()
            }
            SymbolBody::Conjugate(s) | SymbolBody::Scaled(_, s) => s.is_base_independent(),
        }
    }

    /// A set |x - center| <= radius outside which f(x, .) is negligible, if
    /// the base dependence is localized.
    pub fn base_support(&self) -> Option<(Coord, f64)> {
        match &self.0.body {
            SymbolBody::Zero => Some((Coord::ZERO, 0.0)),
            SymbolBody::Separable(s) => s.base.support(s.amplitude.norm()),
            SymbolBody::Convolution { f, g, hbar, .. } => {
                let from_g = g.base_support().map(|(c, r)| (c, r + hbar * f.decay_radius()));
                match (f.base_support(), from_g) {
                    (Some(a), Some(b)) => Some(if a.1 <= b.1 { a } else { b }),
                    (a, b) => a.or(b),
                }
            }
            SymbolBody::Conjugate(s) | SymbolBody::Scaled(_, s) => s.base_support(),
        }
    }

    /// Largest coordinate reached by the base support along the normal axis.
    pub fn base_reach(&self) -> Option<f64> {
        self.base_support().map(|(c, r)| c.n + r)
    }

    pub fn eval(&self, x: Coord, v: Coord) -> C64 {
        match &self.0.body {
            SymbolBody::Zero => C64::new(0.0, 0.0),
            SymbolBody::Separable(s) => s.eval(x, v, self.0.dim),
            SymbolBody::Convolution { f, g, hbar, rule } => {
                calculus::eval_convolution(f, g, *hbar, rule, x, v)
            }
            SymbolBody::Conjugate(s) => s.eval(x, v).conj(),
            SymbolBody::Scaled(c, s) => *c * s.eval(x, v),
        }
    }

    /// Complex conjugate symbol.
    pub fn conj(&self) -> Symbol {
        let label = format!("conj({})", self.label());
        match &self.0.body {
            SymbolBody::Zero => self.clone(),
            SymbolBody::Separable(s) => {
                let mut c = s.clone();
                c.amplitude = c.amplitude.conj();
                c.modulation = -c.modulation;
                Self::from_body(self.dim(), label, self.decay_radius(), SymbolBody::Separable(c))
            }
            _ => Self::from_body(
                self.dim(),
                label,
                self.decay_radius(),
                SymbolBody::Conjugate(self.clone()),
            ),
        }
    }

    pub fn scaled(&self, c: C64) -> Symbol {
        if c == C64::new(0.0, 0.0) {
            return Symbol::zero(self.dim());
        }
        Self::from_body(
            self.dim(),
            format!("({c})*{}", self.label()),
            self.decay_radius(),
            SymbolBody::Scaled(c, self.clone()),
        )
    }

    /// The symbol at the boundary x_n = 0 as a function of the normal covariable,
    /// for one-dimensional data.
    pub fn boundary_fiber(&self, s: f64) -> C64 {
        self.eval(Coord::ZERO, Coord::normal(s))
    }
}
