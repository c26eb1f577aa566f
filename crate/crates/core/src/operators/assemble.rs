//! Discretized representations of symbols and boundary kernels.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::discrete::{DiscreteOperator, LinearOperator};
use super::norm::{operator_norm_with, MethodUsed, NormEstimate, NormOptions};
use crate::error::{Error, Result};
use crate::symbolics::fourier::{fiberwise_fourier, symbol_sup_norm, CovariableGrid, SampledSpectrum};
use crate::symbolics::grid::{AxisKind, Coord, Domain, Grid};
use crate::symbolics::kernel::BoundaryKernel;
use crate::symbolics::quadrature::{Trapezoid, BOX_SCALE};
use crate::symbolics::symbol::Symbol;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn check_hbar(hbar: f64) -> Result<()> {
    if !(hbar > 0.0 && hbar <= 1.0) {
        return Err(Error::InvalidArgument(format!("hbar must lie in (0, 1], got {hbar}")));
    }
    Ok(())
}

/// Kernels of width hbar * radius need grid spacing <= hbar * radius / 8.
pub fn check_resolution(grid: &Grid, hbar: f64, radius: f64) -> Result<()> {
    if radius <= 0.0 {
        return Ok(());
    }
    let spacing = grid.max_spacing();
    let limit = hbar * radius / 8.0;
    if spacing > limit * (1.0 + 1e-12) {
        return Err(Error::Resolution { spacing, limit, finest_hbar: 8.0 * spacing / radius });
    }
    Ok(())
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Index layout of a grid: (tangential points, normal points, tangential spacing, normal spacing).
fn layout(grid: &Grid) -> (usize, usize, f64, f64) {
    let n = grid.normal();
    match grid.tangential() {
        Some(t) => (t.points, n.points, t.spacing, n.spacing),
        None => (1, n.points, 0.0, n.spacing),
    }
}

/// Band half-widths in index units for a kernel vanishing beyond `reach`.
fn band(grid: &Grid, reach: f64) -> (usize, usize) {
    let (nt, nn, ht, hn) = layout(grid);
    let b = |h: f64, n: usize| if h > 0.0 { ((reach / h).floor() as usize + 1).min(n) } else { 0 };
    (b(ht, nt), b(hn, nn))
}

/// rho_hbar(f): kernel hbar^-n f(x, (x - w) / hbar) on the grid. On a
/// half-space grid the restriction to w_n >= 0 is the truncation.
pub fn assemble_rho(f: &Symbol, hbar: f64, grid: &Arc<Grid>) -> Result<DiscreteOperator> {
    rho_impl(f, hbar, grid, None)
}

/// rho_hbar(f) with entries outside `keep` x `keep` left at zero (and never
/// evaluated). Useful when only a compression of the operator is measured.
pub fn assemble_rho_within(f: &Symbol, hbar: f64, grid: &Arc<Grid>, keep: &[bool]) -> Result<DiscreteOperator> {
    check_keep(grid, keep)?;
    rho_impl(f, hbar, grid, Some(keep))
}

fn check_keep(grid: &Grid, keep: &[bool]) -> Result<()> {
    if keep.len() != grid.len() {
        return Err(Error::InvalidArgument(format!("mask has {} entries for {} nodes", keep.len(), grid.len())));
    }
    Ok(())
}

fn kept(keep: Option<&[bool]>, i: usize, j: usize) -> bool {
    keep.is_none_or(|k| k[i] && k[j])
}

fn rho_impl(f: &Symbol, hbar: f64, grid: &Arc<Grid>, keep: Option<&[bool]>) -> Result<DiscreteOperator> {
    check_hbar(hbar)?;
    check_dim(grid.dim(), f.dim())?;
    let label = format!("rho[{hbar}]({})", f.label());
    if f.is_zero() {
        return Ok(DiscreteOperator::zeros(grid.clone(), label));
    }
    let r = f.decay_radius();
    check_resolution(grid, hbar, r)?;
    let scale = hbar.powi(-(grid.dim() as i32));
    let reach = hbar * r;
    let nodes = grid.nodes();
    let dim = grid.dim();
    let outside = move |d: Coord| d.n.abs() > reach || (dim == 2 && d.t.abs() > reach);
    if f.is_base_independent() {
        let table = OffsetTable::new(grid, reach, |d| scale * f.eval(Coord::ZERO, d.scale(1.0 / hbar)));
        return Ok(DiscreteOperator::from_fn(grid.clone(), label, |i, j| {
            if kept(keep, i, j) {
                table.get(i, j)
            } else {
                ZERO
            }
        }));
    }
    Ok(DiscreteOperator::from_fn(grid.clone(), label, |i, j| {
        let d = nodes[i] - nodes[j];
        if outside(d) || !kept(keep, i, j) {
            ZERO
        } else {
            scale * f.eval(nodes[i], d.scale(1.0 / hbar))
        }
    }))
}

/// Values of a translation-invariant kernel indexed by grid offsets.
struct OffsetTable {
    nn: usize,
    bt: usize,
    bn: usize,
    values: Vec<C64>,
}

impl OffsetTable {
    fn new(grid: &Grid, reach: f64, k: impl Fn(Coord) -> C64 + Sync) -> Self {
        let (_, nn, ht, hn) = layout(grid);
        let (bt, bn) = band(grid, reach);
        let wt = 2 * bt + 1;
        let wn = 2 * bn + 1;
        let values = (0..wt * wn)
            .into_par_iter()
            .map(|k_idx| {
                let dt = (k_idx / wn) as f64 - bt as f64;
                let dn = (k_idx % wn) as f64 - bn as f64;
                let d = Coord::new(dt * ht, dn * hn);
                if d.n.abs() > reach || d.t.abs() > reach {
                    ZERO
                } else {
                    k(d)
                }
            })
            .collect();
        OffsetTable { nn, bt, bn, values }
    }

    fn get(&self, i: usize, j: usize) -> C64 {
        let (it, in_) = (i / self.nn, i % self.nn);
        let (jt, jn) = (j / self.nn, j % self.nn);
        let dt = it as isize - jt as isize;
        let dn = in_ as isize - jn as isize;
        if dt.unsigned_abs() > self.bt || dn.unsigned_abs() > self.bn {
            return ZERO;
        }
        let wn = 2 * self.bn + 1;
        self.values[(dt + self.bt as isize) as usize * wn + (dn + self.bn as isize) as usize]
    }
}

/// kappa_hbar(K): kernel hbar^-n K(x', (x' - w') / hbar, x_n / hbar, w_n / hbar).
pub fn assemble_kappa(k: &BoundaryKernel, hbar: f64, grid: &Arc<Grid>) -> Result<DiscreteOperator> {
    kappa_impl(k, hbar, grid, None)
}

/// kappa_hbar(K) restricted to `keep` x `keep`, as for `assemble_rho_within`.
pub fn assemble_kappa_within(
    k: &BoundaryKernel,
    hbar: f64,
    grid: &Arc<Grid>,
    keep: &[bool],
) -> Result<DiscreteOperator> {
    check_keep(grid, keep)?;
    kappa_impl(k, hbar, grid, Some(keep))
}

fn kappa_impl(k: &BoundaryKernel, hbar: f64, grid: &Arc<Grid>, keep: Option<&[bool]>) -> Result<DiscreteOperator> {
    check_hbar(hbar)?;
    check_dim(grid.dim(), k.dim())?;
    if grid.domain() != Domain::HalfSpace {
        return Err(Error::InvalidGrid("boundary kernels need a half-space grid".into()));
    }
    let label = format!("kappa[{hbar}]({})", k.label());
    if k.is_zero() {
        return Ok(DiscreteOperator::zeros(grid.clone(), label));
    }
    let r = k.decay_radius();
    check_resolution(grid, hbar, r)?;
    let scale = hbar.powi(-(grid.dim() as i32));
    let reach = hbar * r;
    let nodes = grid.nodes();
    let dim = grid.dim();
    Ok(DiscreteOperator::from_fn(grid.clone(), label, |i, j| {
        let (x, w) = (nodes[i], nodes[j]);
        if x.n > reach || w.n > reach || (dim == 2 && (x.t - w.t).abs() > reach) || !kept(keep, i, j) {
            return ZERO;
        }
        scale * k.eval(x.t, (x.t - w.t) / hbar, x.n / hbar, w.n / hbar)
    }))
}

/// Matrix-free rho_hbar(f) for grids too large to store densely.
pub struct RhoOperator {
    f: Symbol,
    hbar: f64,
    grid: Arc<Grid>,
    sqrt_w: Vec<f64>,
}

impl RhoOperator {
    pub fn new(f: &Symbol, hbar: f64, grid: &Arc<Grid>) -> Result<Self> {
        check_hbar(hbar)?;
        check_dim(grid.dim(), f.dim())?;
        if !f.is_zero() {
            check_resolution(grid, hbar, f.decay_radius())?;
        }
        Ok(RhoOperator {
            f: f.clone(),
            hbar,
            grid: grid.clone(),
            sqrt_w: grid.weights().iter().map(|w| w.sqrt()).collect(),
        })
    }

    fn entry(&self, i: usize, j: usize) -> C64 {
        let nodes = self.grid.nodes();
        let d = nodes[i] - nodes[j];
        let reach = self.hbar * self.f.decay_radius();
        if d.n.abs() > reach || (self.grid.dim() == 2 && d.t.abs() > reach) {
            return ZERO;
        }
        self.hbar.powi(-(self.grid.dim() as i32)) * self.f.eval(nodes[i], d.scale(1.0 / self.hbar))
    }

    /// Column indices within the kernel band of row i.
    fn neighbours(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let (nt, nn, _, _) = layout(&self.grid);
        let (bt, bn) = band(&self.grid, self.hbar * self.f.decay_radius());
        let (it, in_) = (i / nn, i % nn);
        let t_range = it.saturating_sub(bt)..(it + bt + 1).min(nt);
        t_range.flat_map(move |jt| {
            (in_.saturating_sub(bn)..(in_ + bn + 1).min(nn)).map(move |jn| jt * nn + jn)
        })
    }
}

impl LinearOperator for RhoOperator {
    fn size(&self) -> usize {
        self.grid.len()
    }

    fn apply_l2(&self, x: &[C64], y: &mut [C64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let s: C64 = self.neighbours(i).map(|j| self.entry(i, j) * (self.sqrt_w[j] * x[j])).sum();
            *yi = s * self.sqrt_w[i];
        });
    }

    fn apply_l2_adjoint(&self, x: &[C64], y: &mut [C64]) {
        // The band is symmetric, so the neighbours of j are the rows hitting column j.
        y.par_iter_mut().enumerate().for_each(|(j, yj)| {
            let s: C64 =
                self.neighbours(j).map(|i| self.entry(i, j).conj() * (self.sqrt_w[i] * x[i])).sum();
            *yj = s * self.sqrt_w[j];
        });
    }
}

/// The interior representation pi0(f): at each base point x, convolution
/// by f(x, .) on the covariable fibre. The fibre is periodized so that each
/// block is circulant and diagonalized by the discrete Fourier transform.
#[derive(Clone, Debug)]
pub struct Pi0Operator {
    pub label: String,
    pub symbol: Symbol,
    pub base: Vec<Coord>,
    pub fibre: Arc<Grid>,
    pub blocks: Vec<DiscreteOperator>,
}

fn wrap(d: f64, period: f64) -> f64 {
    d - period * (d / period).round()
}

/// A periodic fibre grid of the right dimension, resolving `f` and wide
/// enough for it to decay: period >= 2 * BOX_SCALE * r, spacing <= r / 8.
pub fn pi0_fibre(f: &Symbol, spacing_divisor: f64) -> Result<Arc<Grid>> {
    let r = f.decay_radius().max(1.0);
    let period = 2.0 * BOX_SCALE * r;
    let points = (period / (r / spacing_divisor)).ceil() as usize;
    let start = -0.5 * period;
    Ok(Arc::new(match f.dim() {
        1 => Grid::periodic_line(start, period, points)?,
        _ => Grid::periodic_plane(start, period, points)?,
    }))
}

pub fn assemble_pi0(f: &Symbol, base: &[Coord], fibre: &Arc<Grid>) -> Result<Pi0Operator> {
    check_dim(fibre.dim(), f.dim())?;
    if fibre.normal().kind != AxisKind::Periodic {
        return Err(Error::InvalidGrid("pi0 needs a periodic fibre grid".into()));
    }
    if base.is_empty() {
        return Err(Error::InvalidArgument("pi0 needs at least one base point".into()));
    }
    let label = format!("pi0({})", f.label());
    let period = fibre.normal().extent;
    if !f.is_zero() {
        check_resolution(fibre, 1.0, f.decay_radius())?;
        if 0.5 * period < f.decay_radius() {
            return Err(Error::Truncation { radius: 0.5 * period, required: f.decay_radius() });
        }
    }
    let nodes = fibre.nodes();
    let dim = f.dim();
    let blocks = base
        .iter()
        .map(|x| {
            let x = *x;
            DiscreteOperator::from_fn(fibre.clone(), format!("{label}@{x:?}"), |i, j| {
                let d = nodes[i] - nodes[j];
                let d = Coord::new(if dim == 2 { wrap(d.t, period) } else { 0.0 }, wrap(d.n, period));
                f.eval(x, d)
            })
        })
        .collect();
    Ok(Pi0Operator { label, symbol: f.clone(), base: base.to_vec(), fibre: fibre.clone(), blocks })
}

impl Pi0Operator {
    /// Largest block norm.
    pub fn norm(&self, opts: &NormOptions) -> Result<NormEstimate> {
        let mut best = NormEstimate { value: 0.0, method: MethodUsed::Svd, iterations: 0, residual: 0.0 };
        for b in &self.blocks {
            let e = operator_norm_with(b, opts)?;
            if e.value > best.value {
                best = e;
            }
        }
        Ok(best)
    }

    /// The covariable grid on which the transform reproduces the block
    /// eigenvalues: the Fourier dual of the periodic fibre.
    pub fn matched_covariables(&self) -> CovariableGrid {
        let axis = self.fibre.normal();
        let (n, p) = (axis.points as i64, axis.extent);
        let freqs: Vec<f64> =
            (-(n / 2)..n - n / 2).map(|k| 2.0 * std::f64::consts::PI * k as f64 / p).collect();
        let sigmas = if self.fibre.dim() == 1 {
            freqs.iter().map(|s| Coord::normal(*s)).collect()
        } else {
            freqs.iter().flat_map(|t| freqs.iter().map(move |s| Coord::new(*t, *s))).collect()
        };
        CovariableGrid {
            dim: self.fibre.dim(),
            base: self.base.clone(),
            sigmas,
            // Slightly above the node spacing so the quadrature lands on it exactly.
            spacing: axis.spacing * (1.0 + 1e-12),
            radius: 0.5 * p,
        }
    }

    pub fn spectrum(&self) -> Result<SampledSpectrum> {
        fiberwise_fourier(&self.symbol, &self.matched_covariables())
    }

    /// sup |f^| over the matched grid; equals the operator norm.
    pub fn symbol_norm(&self) -> Result<f64> {
        Ok(symbol_sup_norm(&self.spectrum()?))
    }
}

/// One frozen member of the boundary representation.
#[derive(Clone, Debug)]
pub struct FamilyMember {
    /// Boundary point x' (0 in dim 1).
    pub xt: f64,
    /// Tangential frequency sigma' (0 in dim 1).
    pub sigma_t: f64,
    pub op: DiscreteOperator,
}

/// pi0_boundary(f, K): a single half-line operator in dim 1; in dim 2 the
/// family over frozen (x', sigma') after a tangential Fourier transform.
#[derive(Clone, Debug)]
pub struct OperatorFamily {
    pub label: String,
    pub members: Vec<FamilyMember>,
}

impl OperatorFamily {
    /// Supremum of the member norms.
    pub fn norm(&self, opts: &NormOptions) -> Result<NormEstimate> {
        let mut best = NormEstimate { value: 0.0, method: MethodUsed::Svd, iterations: 0, residual: 0.0 };
        for m in &self.members {
            let e = operator_norm_with(&m.op, opts)?;
            if e.value > best.value {
                best = e;
            }
        }
        Ok(best)
    }

    /// The only member of a one-dimensional family.
    pub fn single(&self) -> Option<&DiscreteOperator> {
        match self.members.as_slice() {
            [m] => Some(&m.op),
            _ => None,
        }
    }

    /// Member-wise combination of two families built on the same frozen set.
    pub fn zip_with(
        &self,
        other: &OperatorFamily,
        label: impl Into<String>,
        op: impl Fn(&DiscreteOperator, &DiscreteOperator) -> Result<DiscreteOperator>,
    ) -> Result<OperatorFamily> {
        if self.members.len() != other.members.len() {
            return Err(Error::InvalidArgument("families have different frozen sets".into()));
        }
        let members = self
            .members
            .iter()
            .zip(&other.members)
            .map(|(a, b)| {
                if a.xt != b.xt || a.sigma_t != b.sigma_t {
                    return Err(Error::InvalidArgument("families have different frozen sets".into()));
                }
                Ok(FamilyMember { xt: a.xt, sigma_t: a.sigma_t, op: op(&a.op, &b.op)? })
            })
            .collect::<Result<_>>()?;
        Ok(OperatorFamily { label: label.into(), members })
    }
}

/// `grid` is the half-line grid for the normal fibre; `frozen` lists the
/// (x', sigma') pairs used in dim 2 and is ignored in dim 1.
pub fn assemble_pi0_boundary(
    f: &Symbol,
    k: &BoundaryKernel,
    grid: &Arc<Grid>,
    frozen: &[(f64, f64)],
) -> Result<OperatorFamily> {
    check_dim(f.dim(), k.dim())?;
    if grid.dim() != 1 || grid.domain() != Domain::HalfSpace {
        return Err(Error::InvalidGrid("the boundary fibre is a half-line grid".into()));
    }
    let label = format!("pi0d({}, {})", f.label(), k.label());
    for r in [f.decay_radius(), k.decay_radius()] {
        if r > 0.0 {
            check_resolution(grid, 1.0, r)?;
        }
    }
    if f.dim() == 1 {
        let op = boundary_member(grid, &label, |d| f.eval(Coord::ZERO, Coord::normal(d)), f.decay_radius(), |v, w| {
            k.eval1(v, w)
        }, k)?;
        return Ok(OperatorFamily { label, members: vec![FamilyMember { xt: 0.0, sigma_t: 0.0, op }] });
    }
    if frozen.is_empty() {
        return Err(Error::InvalidArgument("dim 2 needs frozen (x', sigma') pairs".into()));
    }
    let rule = Trapezoid::new(grid.normal().spacing);
    let members = frozen
        .iter()
        .map(|&(xt, st)| {
            let base = Coord::new(xt, 0.0);
            let rf = BOX_SCALE * f.decay_radius();
            let rk = BOX_SCALE * k.decay_radius();
            let ft = |d: f64| {
                if f.is_zero() {
                    return ZERO;
                }
                rule.integrate(-rf, rf, |u| C64::from_polar(1.0, -u * st) * f.eval(base, Coord::new(u, d)))
            };
            let kt = |v: f64, w: f64| {
                if k.is_zero() {
                    return ZERO;
                }
                rule.integrate(-rk, rk, |u| C64::from_polar(1.0, -u * st) * k.eval(xt, u, v, w))
            };
            let op = boundary_member(grid, &format!("{label}@({xt},{st})"), ft, f.decay_radius(), kt, k)?;
            Ok(FamilyMember { xt, sigma_t: st, op })
        })
        .collect::<Result<_>>()?;
    Ok(OperatorFamily { label, members })
}

/// Half-line operator with kernel s(v - w) + k(v, w).
fn boundary_member(
    grid: &Arc<Grid>,
    label: &str,
    s: impl Fn(f64) -> C64 + Sync,
    s_radius: f64,
    k: impl Fn(f64, f64) -> C64 + Sync,
    kernel: &BoundaryKernel,
) -> Result<DiscreteOperator> {
    let nodes = grid.nodes();
    let table = if s_radius > 0.0 {
        Some(OffsetTable::new(grid, s_radius, |d| s(d.n)))
    } else {
        None
    };
    let kr = kernel.decay_radius();
    let has_k = !kernel.is_zero();
    Ok(DiscreteOperator::from_fn(grid.clone(), label, |i, j| {
        let mut v = table.as_ref().map_or(ZERO, |t| t.get(i, j));
        if has_k && nodes[i].n <= kr && nodes[j].n <= kr {
            v += k(nodes[i].n, nodes[j].n);
        }
        v
    }))
}

/// Nodes with x_n < a (all nodes once a reaches the far edge).
pub fn projection_mask(a: f64, grid: &Grid) -> Result<Vec<bool>> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("slab thickness must be positive, got {a}")));
    }
    if grid.domain() != Domain::HalfSpace {
        return Err(Error::InvalidGrid("boundary projection needs a half-space grid".into()));
    }
    let all = a >= grid.normal().end();
    Ok(grid.nodes().iter().map(|c| all || c.n < a).collect())
}

/// P: multiplication by the indicator of the slab {x_n < a}.
pub fn boundary_projection(a: f64, grid: &Arc<Grid>) -> Result<DiscreteOperator> {
    let mask = projection_mask(a, grid)?;
    let d: Vec<C64> = mask.iter().map(|&m| C64::new(if m { 1.0 } else { 0.0 }, 0.0)).collect();
    DiscreteOperator::multiplication(grid.clone(), &d, format!("P[{a}]"))
}

/// Slab thickness a = hbar^beta.
pub fn slab_thickness(hbar: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!("beta must lie in (0, 1), got {beta}")));
    }
    Ok(hbar.powf(beta))
}

/// D: (D xi)(x', x_n) = hbar^{1/2} xi(x', hbar x_n), by four-point Lagrange
/// interpolation along the normal axis.
pub fn dilation(hbar: f64, grid: &Arc<Grid>) -> Result<DiscreteOperator> {
    check_hbar(hbar)?;
    if grid.domain() != Domain::HalfSpace {
        return Err(Error::InvalidGrid("dilation acts on a half-space grid".into()));
    }
    let axis = grid.normal();
    let (_, nn, _, _) = layout(grid);
    if nn < 4 {
        return Err(Error::InvalidGrid("dilation needs at least 4 normal nodes".into()));
    }
    let xs = axis.nodes();
    let w = grid.weights();
    let amp = hbar.sqrt();
    // Interpolation stencil per normal row: (first index, four weights).
    let stencils: Vec<(usize, [f64; 4])> = xs
        .iter()
        .map(|&x| {
            let t = hbar * x;
            if t < xs[0] || t > xs[nn - 1] {
                return Err(Error::InvalidArgument(format!("dilated node {t} leaves the grid")));
            }
            let cell = (((t - xs[0]) / axis.spacing).floor() as usize).min(nn - 2);
            let s = cell.saturating_sub(1).min(nn - 4);
            let mut c = [0.0; 4];
            for (a, ca) in c.iter_mut().enumerate() {
                let mut l = 1.0;
                for b in 0..4 {
                    if b != a {
                        l *= (t - xs[s + b]) / (xs[s + a] - xs[s + b]);
                    }
                }
                *ca = l;
            }
            Ok((s, c))
        })
        .collect::<Result<_>>()?;
    Ok(DiscreteOperator::from_fn(grid.clone(), format!("D[{hbar}]"), |i, j| {
        let (it, in_) = (i / nn, i % nn);
        let (jt, jn) = (j / nn, j % nn);
        if it != jt {
            return ZERO;
        }
        let (s, c) = stencils[in_];
        if jn < s || jn >= s + 4 {
            return ZERO;
        }
        C64::new(amp * c[jn - s] / w[j], 0.0)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::norm::{operator_norm, NormMethod};
    use crate::symbolics::catalogue::{parse_kernel, parse_symbol};
    use crate::symbolics::grid::make_grid;
    use std::f64::consts::PI;

    fn half_line(l: f64, h: f64) -> Arc<Grid> {
        Arc::new(Grid::with_max_spacing(1, Domain::HalfSpace, l, None, h).unwrap())
    }

    #[test]
    fn rho_entries_by_substitution() {
        let g = half_line(4.0, 1.0 / 16.0);
        let f = parse_symbol("gauss:b=1").unwrap();
        let a = assemble_rho(&f, 1.0, &g).unwrap();
        let x = g.nodes();
        for (i, j) in [(0, 0), (3, 10), (40, 17)] {
            let e = (-(x[i].n - x[j].n).powi(2)).exp();
            assert!((a.kernel()[(i, j)].re - e).abs() < 1e-15);
        }
        assert!(assemble_rho(&Symbol::zero(1), 0.5, &g).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn rho_resolution_error_names_finest_hbar() {
        let g = half_line(4.0, 0.25);
        let f = parse_symbol("gauss:b=1").unwrap();
        match assemble_rho(&f, 0.1, &g) {
            Err(Error::Resolution { finest_hbar, .. }) => {
                assert!((finest_hbar - 2.0 / f.decay_radius()).abs() < 1e-12);
                assert!(assemble_rho(&f, finest_hbar, &g).is_ok());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rho_norm_near_transform_sup() {
        let hbar = 0.5f64.powi(5);
        let f = parse_symbol("gauss:b=0.5").unwrap();
        let g = half_line(16.0, hbar * f.decay_radius() / 8.0);
        let n = operator_norm(&assemble_rho(&f, hbar, &g).unwrap(), NormMethod::Auto, 1e-10).unwrap();
        assert!((n.value - (2.0 * PI).sqrt()).abs() < 0.05 * (2.0 * PI).sqrt(), "{n:?}");
    }

    #[test]
    fn real_even_symbol_gives_selfadjoint_rho() {
        let g = half_line(3.0, 1.0 / 32.0);
        let f = parse_symbol("gauss:b=2").unwrap();
        let a = assemble_rho(&f, 0.5, &g).unwrap();
        let b = a.adjoint();
        for i in 0..a.len() {
            for j in 0..a.len() {
                assert!((a.kernel()[(i, j)] - b.kernel()[(i, j)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn matrix_free_rho_matches_dense() {
        let g = half_line(4.0, 1.0 / 16.0);
        let f = parse_symbol("gauss:a=1,b=1,x0=0.5").unwrap();
        let dense = assemble_rho(&f, 0.5, &g).unwrap();
        let mf = RhoOperator::new(&f, 0.5, &g).unwrap();
        let x: Vec<C64> = (0..g.len()).map(|k| C64::new((k as f64 * 0.37).sin(), 0.3)).collect();
        let (mut y1, mut y2) = (vec![ZERO; g.len()], vec![ZERO; g.len()]);
        dense.apply_l2(&x, &mut y1);
        mf.apply_l2(&x, &mut y2);
        for (a, b) in y1.iter().zip(&y2) {
            assert!((a - b).norm() < 1e-13);
        }
        dense.apply_l2_adjoint(&x, &mut y1);
        mf.apply_l2_adjoint(&x, &mut y2);
        for (a, b) in y1.iter().zip(&y2) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn kappa_at_unit_hbar_is_plain_kernel() {
        let g = half_line(8.0, 1.0 / 16.0);
        let k = parse_kernel("rank1:alpha=1,beta=2,q=0.5").unwrap();
        let a = assemble_kappa(&k, 1.0, &g).unwrap();
        let x = g.nodes();
        for (i, j) in [(0, 0), (5, 20), (30, 2)] {
            assert!((a.kernel()[(i, j)] - k.eval1(x[i].n, x[j].n)).norm() < 1e-15);
        }
        assert_eq!(assemble_kappa(&BoundaryKernel::zero(1), 0.5, &g).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn kappa_rank_one_norm_is_hbar_independent() {
        let k = parse_kernel("rank1:alpha=1,beta=1").unwrap();
        let exact = k.rank_one_norm().unwrap();
        for e in 0..5 {
            let hbar = 0.5f64.powi(e);
            let g = half_line(8.0, hbar * k.decay_radius() / 8.0);
            let n = operator_norm(&assemble_kappa(&k, hbar, &g).unwrap(), NormMethod::Auto, 1e-10).unwrap();
            assert!((n.value - exact).abs() < 1e-3 * exact, "hbar {hbar}: {} vs {exact}", n.value);
        }
    }

    #[test]
    fn pi0_norm_equals_symbol_sup() {
        let f = parse_symbol("gauss:b=0.5,lx=1").unwrap();
        let fibre = pi0_fibre(&f, 16.0).unwrap();
        let base = [Coord::normal(-1.0), Coord::ZERO, Coord::normal(0.5)];
        let p = assemble_pi0(&f, &base, &fibre).unwrap();
        let opts = NormOptions { tol: 1e-13, max_iter: 100_000, ..NormOptions::with_method(NormMethod::PowerIteration) };
        let power = p.norm(&opts).unwrap().value;
        let sup = p.symbol_norm().unwrap();
        assert!((power - sup).abs() < 1e-6 * sup, "{power} vs {sup}");
        assert!((sup - (2.0 * PI).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn single_base_node_block_is_circulant() {
        let f = parse_symbol("gauss:b=1,k=1").unwrap();
        let fibre = pi0_fibre(&f, 8.0).unwrap();
        let p = assemble_pi0(&f, &[Coord::ZERO], &fibre).unwrap();
        let k = p.blocks[0].kernel();
        let n = k.nrows();
        for i in 0..n {
            assert!((k[(i, 0)] - k[((i + 1) % n, 1)]).norm() < 1e-15);
        }
    }

    #[test]
    fn pi0_boundary_gaussian_and_rank_one() {
        let g = half_line(64.0, 1.0 / 32.0);
        let f = parse_symbol("gauss:b=0.5").unwrap();
        let fam = assemble_pi0_boundary(&f, &BoundaryKernel::zero(1), &g, &[]).unwrap();
        let n = fam.norm(&NormOptions::default()).unwrap().value;
        assert!((n - (2.0 * PI).sqrt()).abs() < 1e-2, "{n}");
        let k = parse_kernel("rank1:alpha=1,beta=0.5,p=1").unwrap();
        let g = half_line(16.0, 1.0 / 16.0);
        let fam = assemble_pi0_boundary(&Symbol::zero(1), &k, &g, &[]).unwrap();
        let n = fam.norm(&NormOptions::default()).unwrap().value;
        let exact = k.rank_one_norm().unwrap();
        assert!((n - exact).abs() < 1e-3 * exact, "{n} vs {exact}");
    }

    #[test]
    fn projection_properties() {
        let g = half_line(4.0, 0.25);
        let full = boundary_projection(4.0, &g).unwrap();
        let id = DiscreteOperator::identity(g.clone());
        assert_eq!(full.kernel(), id.kernel());
        let p = boundary_projection(0.1, &g).unwrap();
        let rank = projection_mask(0.1, &g).unwrap().iter().filter(|m| **m).count();
        assert_eq!(rank, 1);
        let pp = p.compose(&p).unwrap();
        assert_eq!(pp.kernel(), p.kernel());
        assert!(boundary_projection(0.0, &g).is_err());
    }

    #[test]
    fn dilation_identity_and_isometry() {
        let g = half_line(8.0, 1.0 / 32.0);
        let d1 = dilation(1.0, &g).unwrap();
        let id = DiscreteOperator::identity(g.clone());
        for i in 0..g.len() {
            for j in 0..g.len() {
                assert!((d1.kernel()[(i, j)] - id.kernel()[(i, j)]).norm() < 1e-9 * id.kernel()[(i, i)].norm());
            }
        }
        let hbar = 0.25;
        let d = dilation(hbar, &g).unwrap();
        let xi: Vec<C64> = g.nodes().iter().map(|x| C64::new((-x.n * x.n).exp(), 0.0)).collect();
        let y = d.apply(&xi).unwrap();
        let ratio = (d.inner(&y, &y).re / d.inner(&xi, &xi).re).sqrt();
        assert!((0.99..=1.01).contains(&ratio), "{ratio}");
        // composition with a projection is a structural product
        let p = boundary_projection(hbar.sqrt(), &g).unwrap();
        assert!(p.compose(&d).is_ok());
    }

    #[test]
    fn dim2_rho_and_boundary_family() {
        let g = Arc::new(make_grid(2, 3.0, Some(3.0), (25, Some(49))).unwrap());
        let f = parse_symbol("gauss:dim=2,b=4").unwrap();
        let a = assemble_rho(&f, 1.0, &g).unwrap();
        assert_eq!(a.len(), 25 * 49);
        let line = half_line(16.0, 1.0 / 16.0);
        let f = parse_symbol("gauss:dim=2,b=1").unwrap();
        let fam = assemble_pi0_boundary(&f, &BoundaryKernel::zero(2), &line, &[(0.0, 0.0), (0.0, 1.0)]).unwrap();
        assert_eq!(fam.members.len(), 2);
        // At sigma' = 0 the member is sqrt(pi) times the dim-1 operator of exp(-v^2).
        let n = fam.norm(&NormOptions::default()).unwrap().value;
        let one = assemble_pi0_boundary(&parse_symbol("gauss:b=1").unwrap(), &BoundaryKernel::zero(1), &line, &[])
            .unwrap()
            .norm(&NormOptions::default())
            .unwrap()
            .value;
        assert!((n - PI.sqrt() * one).abs() < 1e-8 * n, "{n} vs {}", PI.sqrt() * one);
    }
}
