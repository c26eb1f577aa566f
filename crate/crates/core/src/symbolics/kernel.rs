//! Boundary kernels K(x', u', v_n, w_n) carrying singular Green data.
//!
//! For one-dimensional data the tangential slots are ignored and the kernel
//! is a function of (v_n, w_n) on R_+ x R_+.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::calculus;
use super::quadrature::Trapezoid;
use super::symbol::{gaussian_radius, Symbol};

/// c * exp(-rate (s - center)^2), restricted to s >= 0 by the caller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfLineGaussian {
    pub rate: f64,
    pub center: f64,
}

impl HalfLineGaussian {
    pub fn eval(&self, s: f64) -> f64 {
        (-self.rate * (s - self.center).powi(2)).exp()
    }

    fn radius(&self, amp: f64) -> f64 {
        self.center.abs() + gaussian_radius(amp, self.rate)
    }

    /// L^2(R_+) norm by a fine, Richardson-extrapolated trapezoid rule,
    /// independent of any operator grid.
    pub fn l2_norm(&self) -> f64 {
        let r = self.radius(1.0) * 1.5;
        let q = Trapezoid::new(1e-3 / self.rate.sqrt().max(1.0));
        let sq = |s: f64| C64::new(self.eval(s).powi(2), 0.0);
        let coarse = q.integrate(0.0, r, sq).re;
        let fine = q.halved().integrate(0.0, r, sq).re;
        ((4.0 * fine - coarse) / 3.0).sqrt()
    }
}

#[derive(Clone, Debug)]
pub(crate) enum KernelBody {
    Zero,
    /// amplitude * a(v_n) * b(w_n) * exp(-tau u'^2) (tangential factor only in dim 2).
    RankOne { amplitude: C64, a: HalfLineGaussian, b: HalfLineGaussian, tau: f64 },
    /// The asymptotic Green term l_hbar(f, g); hbar = 0 gives l(f, g).
    Leftover { f: Symbol, g: Symbol, hbar: f64, rule: Trapezoid },
    /// Kernel of pi0_boundary(f) composed with pi0_boundary(K).
    SymbolKernel { f: Symbol, k: BoundaryKernel, rule: Trapezoid },
    /// Kernel of pi0_boundary(K) composed with pi0_boundary(g).
    KernelSymbol { k: BoundaryKernel, g: Symbol, rule: Trapezoid },
    /// Kernel of pi0_boundary(K) composed with pi0_boundary(L).
    KernelKernel { k: BoundaryKernel, l: BoundaryKernel, rule: Trapezoid },
    Sum(Vec<BoundaryKernel>),
    Scaled(C64, BoundaryKernel),
    Conjugate(BoundaryKernel),
}

#[derive(Debug)]
struct KernelInner {
    dim: usize,
    label: String,
    decay_radius: f64,
    body: KernelBody,
}

#[derive(Clone)]
pub struct BoundaryKernel(Arc<KernelInner>);

impl fmt::Debug for BoundaryKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryKernel")
            .field("label", &self.0.label)
            .field("dim", &self.0.dim)
            .field("decay_radius", &self.0.decay_radius)
            .finish()
    }
}

impl BoundaryKernel {
    pub(crate) fn from_body(dim: usize, label: String, decay_radius: f64, body: KernelBody) -> Self {
        BoundaryKernel(Arc::new(KernelInner { dim, label, decay_radius, body }))
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_body(dim, "zero".into(), 0.0, KernelBody::Zero)
    }

    /// c * exp(-alpha (v - p)^2) * exp(-beta (w - q)^2), times exp(-tau u'^2) in dim 2.
    #[allow(clippy::too_many_arguments)]
    pub fn rank_one(
        dim: usize,
        label: impl Into<String>,
        amplitude: C64,
        a: HalfLineGaussian,
        b: HalfLineGaussian,
        tau: f64,
    ) -> Self {
        if amplitude == C64::new(0.0, 0.0) {
            return Self::zero(dim);
        }
        let amp = amplitude.norm();
        let mut r = a.radius(amp).max(b.radius(amp));
        if dim == 2 {
            r = r.max(gaussian_radius(amp, tau));
        }
        Self::from_body(dim, label.into(), r, KernelBody::RankOne { amplitude, a, b, tau })
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn label(&self) -> &str {
        &self.0.label
    }

    /// Negligible once any of |u'|, v_n, w_n exceeds this.
    pub fn decay_radius(&self) -> f64 {
        self.0.decay_radius
    }

    pub fn is_zero(&self) -> bool {
        match &self.0.body {
            KernelBody::Zero => true,
            KernelBody::Leftover { f, g, .. } => f.is_zero() || g.is_zero(),
            KernelBody::SymbolKernel { f, k, .. } => f.is_zero() || k.is_zero(),
            KernelBody::KernelSymbol { k, g, .. } => k.is_zero() || g.is_zero(),
            KernelBody::KernelKernel { k, l, .. } => k.is_zero() || l.is_zero(),
            KernelBody::Sum(parts) => parts.iter().all(|p| p.is_zero()),
            KernelBody::Scaled(c, k) => *c == C64::new(0.0, 0.0) || k.is_zero(),
            KernelBody::Conjugate(k) => k.is_zero(),
            KernelBody::RankOne { .. } => false,
        }
    }

    /// For rank-one kernels, the product of the L^2(R_+) norms of the factors
    /// (times the amplitude); this is the operator norm in dim 1.
    pub fn rank_one_norm(&self) -> Option<f64> {
        match &self.0.body {
            KernelBody::RankOne { amplitude, a, b, .. } => {
                Some(amplitude.norm() * a.l2_norm() * b.l2_norm())
            }
            KernelBody::Zero => Some(0.0),
            _ => None,
        }
    }

    /// Evaluate at (x', u', v_n, w_n). One-dimensional kernels ignore x', u'.
    pub fn eval(&self, xt: f64, ut: f64, vn: f64, wn: f64) -> C64 {
        let dim = self.0.dim;
        match &self.0.body {
            KernelBody::Zero => C64::new(0.0, 0.0),
            KernelBody::RankOne { amplitude, a, b, tau } => {
                let t = if dim == 2 { (-tau * ut * ut).exp() } else { 1.0 };
                *amplitude * (a.eval(vn) * b.eval(wn) * t)
            }
            KernelBody::Leftover { f, g, hbar, rule } => {
                calculus::eval_leftover(f, g, *hbar, rule, xt, ut, vn, wn)
            }
            KernelBody::SymbolKernel { f, k, rule } => {
                calculus::eval_symbol_kernel(f, k, rule, xt, ut, vn, wn)
            }
            KernelBody::KernelSymbol { k, g, rule } => {
                calculus::eval_kernel_symbol(k, g, rule, xt, ut, vn, wn)
            }
            KernelBody::KernelKernel { k, l, rule } => {
                calculus::eval_kernel_kernel(k, l, rule, xt, ut, vn, wn)
            }
            KernelBody::Sum(parts) => parts.iter().map(|p| p.eval(xt, ut, vn, wn)).sum(),
            KernelBody::Scaled(c, k) => *c * k.eval(xt, ut, vn, wn),
            KernelBody::Conjugate(k) => k.eval(xt, ut, vn, wn).conj(),
        }
    }

    /// Shorthand for one-dimensional kernels.
    pub fn eval1(&self, vn: f64, wn: f64) -> C64 {
        self.eval(0.0, 0.0, vn, wn)
    }

    pub fn sum(dim: usize, parts: Vec<BoundaryKernel>) -> Self {
        let parts: Vec<_> = parts.into_iter().filter(|p| !p.is_zero()).collect();
        match parts.len() {
            0 => Self::zero(dim),
            1 => parts.into_iter().next().unwrap(),
            _ => {
                let r = parts.iter().map(|p| p.decay_radius()).fold(0.0, f64::max);
                let label = parts.iter().map(|p| p.label()).collect::<Vec<_>>().join(" + ");
                Self::from_body(dim, label, r, KernelBody::Sum(parts))
            }
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        if c == C64::new(0.0, 0.0) || self.is_zero() {
            return Self::zero(self.dim());
        }
        Self::from_body(
            self.dim(),
            format!("({c})*{}", self.label()),
            self.decay_radius(),
            KernelBody::Scaled(c, self.clone()),
        )
    }

    pub fn conj(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        Self::from_body(
            self.dim(),
            format!("conj({})", self.label()),
            self.decay_radius(),
            KernelBody::Conjugate(self.clone()),
        )
    }
}
