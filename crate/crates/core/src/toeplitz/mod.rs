//! Circle symbols obtained by the Cayley transform, Toeplitz finite sections,
//! and the comparison with half-line convolution operators.
//!
//! With z = e^{i theta} the Moebius map i(z - 1)/(z + 1) equals -tan(theta/2),
//! so phi(e^{i theta}) = f^(-tan(theta/2)); z = 1 maps to sigma = 0 and z = -1
//! to sigma = infinity.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::assemble::assemble_pi0_boundary;
use crate::operators::discrete::DiscreteOperator;
use crate::operators::norm::singular_values;
use crate::symbolics::fourier::{fourier_at, fourier_sup};
use crate::symbolics::grid::{Coord, Grid};
use crate::symbolics::kernel::BoundaryKernel;
use crate::symbolics::quadrature::{Trapezoid, BOX_SCALE};
use crate::symbolics::symbol::Symbol;

/// Number of singular values compared in equivalence reports.
pub const REPORTED_SINGULAR_VALUES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CircleSource {
    Cayley { symbol: String },
    Direct { label: String },
}

/// Samples of phi at the N-th roots of unity z_k = exp(2 pi i k / N).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleSymbol {
    pub samples: Vec<C64>,
    pub source: CircleSource,
}

impl CircleSymbol {
    pub fn from_fn(n: usize, label: impl Into<String>, phi: impl Fn(C64) -> C64) -> Self {
        let samples = (0..n).map(|k| phi(root(k, n))).collect();
        CircleSymbol { samples, source: CircleSource::Direct { label: label.into() } }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// phi(-1), present when the sample count is even.
    pub fn at_minus_one(&self) -> Option<C64> {
        let n = self.len();
        (n.is_multiple_of(2) && n > 0).then(|| self.samples[n / 2])
    }

    pub fn sup(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Fourier coefficient phi^(m) = (1/N) sum_k phi(z_k) z_k^{-m}.
    pub fn coefficient(&self, m: i64) -> C64 {
        let n = self.len();
        let s: C64 = self
            .samples
            .iter()
            .enumerate()
            .map(|(k, v)| v * C64::from_polar(1.0, -2.0 * PI * ((k as i64 * m).rem_euclid(n as i64)) as f64 / n as f64))
            .sum();
        s / n as f64
    }
}

fn root(k: usize, n: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)
}

/// phi(z_k) = f^(0, i(z_k - 1)/(z_k + 1)) for the boundary fibre of a
/// one-dimensional symbol, on `n` roots of unity (`n` even so that z = -1 is
/// a node, where phi vanishes).
///
/// The transform is computed by quadrature with spacing r/128; frequencies
/// beyond half the quadrature Nyquist limit are set to zero after checking
/// that the transform has decayed there.
pub fn cayley_symbol(f: &Symbol, n: usize) -> Result<CircleSymbol> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, actual: f.dim() });
    }
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("need an even sample count >= 2, got {n}")));
    }
    let source = CircleSource::Cayley { symbol: f.label().to_string() };
    if f.is_zero() {
        return Ok(CircleSymbol { samples: vec![C64::new(0.0, 0.0); n], source });
    }
    let r = f.decay_radius();
    let rule = Trapezoid::new(r / 128.0);
    let radius = BOX_SCALE * r;
    let cutoff = 0.5 * PI / rule.spacing;
    let fhat = |s: f64| fourier_at(f, Coord::ZERO, Coord::normal(s), &rule, radius);
    let peak = fourier_sup(f, Coord::ZERO);
    let tail = fhat(cutoff).norm().max(fhat(-cutoff).norm());
    if tail > 1e-12 * peak.max(1e-300) {
        return Err(Error::Nyquist { spacing: rule.spacing, required: rule.spacing * 0.5 });
    }
    let samples = (0..n)
        .into_par_iter()
        .map(|k| {
            if 2 * k == n {
                return C64::new(0.0, 0.0);
            }
            let theta = 2.0 * PI * k as f64 / n as f64;
            let sigma = -(0.5 * theta).tan();
            if sigma.abs() > cutoff {
                C64::new(0.0, 0.0)
            } else {
                fhat(sigma)
            }
        })
        .collect();
    Ok(CircleSymbol { samples, source })
}

/// Finite section [phi^(j - k)]_{j,k < N_T} of the Toeplitz operator.
#[derive(Clone, Debug, PartialEq)]
pub struct ToeplitzMatrix {
    pub size: usize,
    /// coeffs[m + size - 1] = phi^(m) for |m| < size.
    pub coeffs: Vec<C64>,
}

impl ToeplitzMatrix {
    pub fn entry(&self, j: usize, k: usize) -> C64 {
        self.coeffs[j + self.size - 1 - k]
    }

    pub fn to_mat(&self) -> Mat<C64> {
        Mat::from_fn(self.size, self.size, |j, k| self.entry(j, k))
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        singular_values(&self.to_mat())
    }

    pub fn norm(&self) -> Result<f64> {
        Ok(self.singular_values()?.first().copied().unwrap_or(0.0))
    }
}

pub fn toeplitz_assemble(phi: &CircleSymbol, size: usize) -> Result<ToeplitzMatrix> {
    if size == 0 || size > phi.len() {
        return Err(Error::InvalidArgument(format!(
            "section size {size} must lie in 1..={}",
            phi.len()
        )));
    }
    let coeffs = (-(size as i64 - 1)..size as i64).into_par_iter().map(|m| phi.coefficient(m)).collect();
    Ok(ToeplitzMatrix { size, coeffs })
}

/// The half-convolution xi -> int_0^inf f(0, s - w) xi(w) dw on a half-line grid.
pub fn half_convolution_assemble(f: &Symbol, grid: &Arc<Grid>) -> Result<DiscreteOperator> {
    let fam = assemble_pi0_boundary(f, &BoundaryKernel::zero(f.dim()), grid, &[])?;
    let op = fam.single().ok_or_else(|| Error::InvalidArgument("half-convolution needs dim-1 data".into()))?;
    Ok(op.clone().with_label(format!("halfconv({})", f.label())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub symbol: String,
    pub section_size: usize,
    pub samples: usize,
    pub half_line_extent: f64,
    pub spacing: f64,
    pub symbol_sup: f64,
    pub half_convolution_norm: f64,
    pub toeplitz_norm: f64,
    /// |half-convolution norm - Toeplitz norm| / max of the two (0 when both vanish).
    pub norm_gap: f64,
    pub phi_at_minus_one: f64,
    pub half_convolution_singular_values: Vec<f64>,
    pub toeplitz_singular_values: Vec<f64>,
    pub singular_value_gaps: Vec<f64>,
}

/// Compare the half-convolution by `f` on `grid` with the finite section of
/// size `section_size` of the Toeplitz operator of its Cayley image
/// (sampled on 4 * section_size roots of unity).
pub fn equivalence_report(f: &Symbol, section_size: usize, grid: &Arc<Grid>) -> Result<EquivalenceReport> {
    let phi = cayley_symbol(f, 4 * section_size)?;
    let t = toeplitz_assemble(&phi, section_size)?;
    let half = half_convolution_assemble(f, grid)?;
    let sv_t = t.singular_values()?;
    let sv_h = singular_values(&half.weighted_matrix())?;
    let (nh, nt) = (sv_h.first().copied().unwrap_or(0.0), sv_t.first().copied().unwrap_or(0.0));
    let denom = nh.max(nt);
    let top = |v: &[f64]| v.iter().take(REPORTED_SINGULAR_VALUES).copied().collect::<Vec<_>>();
    let (th, tt) = (top(&sv_h), top(&sv_t));
    let gaps = th.iter().zip(&tt).map(|(a, b)| (a - b).abs()).collect();
    Ok(EquivalenceReport {
        symbol: f.label().to_string(),
        section_size,
        samples: phi.len(),
        half_line_extent: grid.normal().extent,
        spacing: grid.normal().spacing,
        symbol_sup: fourier_sup(f, Coord::ZERO),
        half_convolution_norm: nh,
        toeplitz_norm: nt,
        norm_gap: if denom > 0.0 { (nh - nt).abs() / denom } else { 0.0 },
        phi_at_minus_one: phi.at_minus_one().map_or(0.0, |z| z.norm()),
        half_convolution_singular_values: th,
        toeplitz_singular_values: tt,
        singular_value_gaps: gaps,
    })
}

/// Leading singular values of [T_phi, T_psi] at one section size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorSection {
    pub section_size: usize,
    pub singular_values: Vec<f64>,
}

/// Singular-value profile of the commutator across section sizes: the
/// leading values stabilize and the tail decays, the finite-dimensional
/// signature of a compact operator. `keep` values are stored per size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorProfile {
    pub sections: Vec<CommutatorSection>,
}

impl CommutatorProfile {
    /// s_k / s_1 at the given section size (k is 1-based); None if unavailable.
    pub fn relative(&self, section_size: usize, k: usize) -> Option<f64> {
        let s = self.sections.iter().find(|s| s.section_size == section_size)?;
        let first = *s.singular_values.first()?;
        let kth = *s.singular_values.get(k.checked_sub(1)?)?;
        Some(if first > 0.0 { kth / first } else { 0.0 })
    }
}

pub fn commutator_compactness(
    phi: &CircleSymbol,
    psi: &CircleSymbol,
    sizes: &[usize],
    keep: usize,
) -> Result<CommutatorProfile> {
    let sections = sizes
        .iter()
        .map(|&n| {
            let a = toeplitz_assemble(phi, n)?.to_mat();
            let b = toeplitz_assemble(psi, n)?.to_mat();
            let c = &a * &b - &b * &a;
            let sv = singular_values(&c)?;
            Ok(CommutatorSection { section_size: n, singular_values: sv.into_iter().take(keep).collect() })
        })
        .collect::<Result<_>>()?;
    Ok(CommutatorProfile { sections })
}
