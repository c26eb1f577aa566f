//! Fibrewise Fourier transform of symbols with respect to the covariable:
//! f^(x, sigma) = int exp(-i <v, sigma>) f(x, v) dv, inverse carrying (2 pi)^-n.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::grid::Coord;
use super::quadrature::Trapezoid;
use super::symbol::Symbol;
use crate::error::{Error, Result};

/// Sign and normalization of the transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FourierConvention {
    /// Forward kernel exp(-i <v, sigma>), no prefactor; inverse (2 pi)^-n.
    NegativeExponent,
}

impl FourierConvention {
    pub fn describe(self) -> &'static str {
        "forward exp(-i<v,sigma>) dv; inverse (2pi)^-n"
    }
}

/// Base nodes, covariable nodes, and the quadrature used in the fibre.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariableGrid {
    pub dim: usize,
    pub base: Vec<Coord>,
    pub sigmas: Vec<Coord>,
    /// Quadrature spacing in v.
    pub spacing: f64,
    /// The v-integral runs over |v_i| <= radius in each component.
    pub radius: f64,
}

impl CovariableGrid {
    /// One base point and `points` frequencies evenly spread over [-max, max].
    pub fn line(base: Coord, max_sigma: f64, points: usize, spacing: f64, radius: f64) -> Self {
        let sigmas = if points < 2 {
            vec![Coord::ZERO]
        } else {
            let step = 2.0 * max_sigma / (points - 1) as f64;
            (0..points).map(|k| Coord::normal(-max_sigma + k as f64 * step)).collect()
        };
        CovariableGrid { dim: 1, base: vec![base], sigmas, spacing, radius }
    }

    fn max_sigma(&self) -> f64 {
        self.sigmas.iter().map(|s| s.t.abs().max(s.n.abs())).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledSpectrum {
    pub label: String,
    pub convention: FourierConvention,
    pub grid: CovariableGrid,
    /// Row-major over (base node, sigma).
    pub samples: Vec<C64>,
}

impl SampledSpectrum {
    pub fn at(&self, base: usize, sigma: usize) -> C64 {
        self.samples[base * self.grid.sigmas.len() + sigma]
    }

    /// CSV with node coordinates followed by re/im columns.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        if self.grid.dim == 1 {
            w.write_record(["x", "sigma", "re", "im"]).map_err(io)?;
        } else {
            w.write_record(["x_t", "x_n", "sigma_t", "sigma_n", "re", "im"]).map_err(io)?;
        }
        for (b, x) in self.grid.base.iter().enumerate() {
            for (s, sigma) in self.grid.sigmas.iter().enumerate() {
                let v = self.at(b, s);
                let row = if self.grid.dim == 1 {
                    vec![x.n, sigma.n, v.re, v.im]
                } else {
                    vec![x.t, x.n, sigma.t, sigma.n, v.re, v.im]
                };
                w.write_record(row.iter().map(|f| f.to_string())).map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Quadrature value of f^(x, sigma) over the box |v_i| <= radius.
pub fn fourier_at(f: &Symbol, x: Coord, sigma: Coord, rule: &Trapezoid, radius: f64) -> C64 {
    if f.dim() == 1 {
        rule.integrate(-radius, radius, |v| {
            C64::from_polar(1.0, -v * sigma.n) * f.eval(x, Coord::normal(v))
        })
    } else {
        rule.integrate_2d((-radius, radius), (-radius, radius), |vt, vn| {
            let v = Coord::new(vt, vn);
            C64::from_polar(1.0, -v.dot(sigma)) * f.eval(x, v)
        })
    }
}

/// Transform `f` on every (base, sigma) node of `grid`.
///
/// Errors when the quadrature spacing cannot resolve the highest frequency
/// (spacing must be below pi / max|sigma|) or when the box cuts off a part of
/// the symbol that has not decayed.
pub fn fiberwise_fourier(f: &Symbol, grid: &CovariableGrid) -> Result<SampledSpectrum> {
    if grid.dim != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), actual: grid.dim });
    }
    if !(grid.spacing > 0.0 && grid.radius > 0.0) {
        return Err(Error::InvalidArgument("spacing and radius must be positive".into()));
    }
    let smax = grid.max_sigma();
    if smax > 0.0 && grid.spacing > std::f64::consts::PI / smax * (1.0 + 1e-9) {
        return Err(Error::Nyquist { spacing: grid.spacing, required: std::f64::consts::PI / smax });
    }
    let nsig = grid.sigmas.len();
    if f.is_zero() {
        return Ok(SampledSpectrum {
            label: f.label().to_string(),
            convention: FourierConvention::NegativeExponent,
            grid: grid.clone(),
            samples: vec![C64::new(0.0, 0.0); grid.base.len() * nsig],
        });
    }
    check_truncation(f, grid)?;
    let rule = Trapezoid::new(grid.spacing);
    let mut samples = Vec::with_capacity(grid.base.len() * nsig);
    for x in &grid.base {
        for sigma in &grid.sigmas {
            samples.push(fourier_at(f, *x, *sigma, &rule, grid.radius));
        }
    }
    Ok(SampledSpectrum {
        label: f.label().to_string(),
        convention: FourierConvention::NegativeExponent,
        grid: grid.clone(),
        samples,
    })
}

/// The box edge must sit where |f| is already negligible.
fn check_truncation(f: &Symbol, grid: &CovariableGrid) -> Result<()> {
    const EDGE_TOLERANCE: f64 = 1e-12;
    let r = grid.radius;
    let edges: Vec<Coord> = if f.dim() == 1 {
        vec![Coord::normal(-r), Coord::normal(r)]
    } else {
        let k = 16;
        (0..=k)
            .flat_map(|i| {
                let s = -r + 2.0 * r * i as f64 / k as f64;
                [Coord::new(s, -r), Coord::new(s, r), Coord::new(-r, s), Coord::new(r, s)]
            })
            .collect()
    };
    let scale = grid
        .base
        .iter()
        .map(|x| f.eval(*x, Coord::ZERO).norm())
        .fold(1.0, f64::max);
    for x in &grid.base {
        for v in &edges {
            if f.eval(*x, *v).norm() > EDGE_TOLERANCE * scale {
                return Err(Error::Truncation { radius: r, required: f.decay_radius() });
            }
        }
    }
    Ok(())
}

/// Largest modulus among the samples.
pub fn symbol_sup_norm(s: &SampledSpectrum) -> f64 {
    s.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// sup over sigma of |f^(x, sigma)| at one base point, by a scan on a grid
/// fine relative to the width of the transform followed by golden-section
/// refinement around the best sample (dim 1) or a local rescan (dim 2).
pub fn fourier_sup(f: &Symbol, x: Coord) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let r = f.decay_radius();
    let radius = 1.25 * r;
    let rule = Trapezoid::new(r / if f.dim() == 1 { 128.0 } else { 32.0 });
    // |f^| varies on the scale 1/r; scan up to where the transform of the
    // catalogue profiles is negligible.
    let smax = (std::f64::consts::PI / rule.spacing).min(64.0);
    let step = 0.25 / r;
    let value = |s: Coord| fourier_at(f, x, s, &rule, radius).norm();
    if f.dim() == 1 {
        let n = (smax / step).ceil() as i64;
        let (mut best, mut best_v) = (0.0, value(Coord::ZERO));
        for k in -n..=n {
            let s = k as f64 * step;
            let v = value(Coord::normal(s));
            if v > best_v {
                best = s;
                best_v = v;
            }
        }
        let (mut a, mut b) = (best - step, best + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (value(Coord::normal(c)), value(Coord::normal(d)));
        for _ in 0..60 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = value(Coord::normal(c));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = value(Coord::normal(d));
            }
        }
        best_v.max(fc).max(fd)
    } else {
        let coarse = 0.5;
        let smax = smax.min(8.0);
        let n = (smax / coarse).ceil() as i64;
        let mut best = (Coord::ZERO, value(Coord::ZERO));
        for i in -n..=n {
            for j in -n..=n {
                let s = Coord::new(i as f64 * coarse, j as f64 * coarse);
                let v = value(s);
                if v > best.1 {
                    best = (s, v);
                }
            }
        }
        let mut h = coarse;
        for _ in 0..12 {
            h *= 0.5;
            let c = best.0;
            for (di, dj) in [(-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0), (-1.0, -1.0), (1.0, 1.0), (-1.0, 1.0), (1.0, -1.0)] {
                let s = Coord::new(c.t + di * h, c.n + dj * h);
                let v = value(s);
                if v > best.1 {
                    best = (s, v);
                }
            }
        }
        best.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolics::catalogue::parse_symbol;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_transform_closed_form() {
        let f = Symbol::gaussian(0.0, 0.5);
        let grid = CovariableGrid::line(Coord::ZERO, 4.0, 161, 1.0 / 32.0, 8.0);
        let s = fiberwise_fourier(&f, &grid).unwrap();
        let err = grid
            .sigmas
            .iter()
            .enumerate()
            .map(|(k, sg)| (s.at(0, k) - (2.0 * PI).sqrt() * (-0.5 * sg.n * sg.n).exp()).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "{err}");
        assert!((symbol_sup_norm(&s) - (2.0 * PI).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn zero_symbol_zero_spectrum() {
        let grid = CovariableGrid::line(Coord::ZERO, 4.0, 9, 0.1, 4.0);
        let s = fiberwise_fourier(&Symbol::zero(1), &grid).unwrap();
        assert!(s.samples.iter().all(|z| *z == C64::new(0.0, 0.0)));
        assert_eq!(symbol_sup_norm(&s), 0.0);
    }

    #[test]
    fn lorentzian_base_sup() {
        let f = parse_symbol("gauss:b=0.5,lx=1").unwrap();
        let base: Vec<Coord> = (-8..=8).map(|k| Coord::normal(k as f64 * 0.5)).collect();
        let grid = CovariableGrid {
            dim: 1,
            base,
            sigmas: (-16..=16).map(|k| Coord::normal(k as f64 * 0.25)).collect(),
            spacing: 1.0 / 32.0,
            radius: 9.0,
        };
        let s = fiberwise_fourier(&f, &grid).unwrap();
        assert!((symbol_sup_norm(&s) - 2.5066282746310002).abs() < 1e-8);
    }

    #[test]
    fn nyquist_and_truncation_are_reported() {
        let f = Symbol::gaussian(0.0, 0.5);
        let coarse = CovariableGrid::line(Coord::ZERO, 40.0, 9, 0.1, 9.0);
        assert!(matches!(fiberwise_fourier(&f, &coarse), Err(Error::Nyquist { .. })));
        let short = CovariableGrid::line(Coord::ZERO, 4.0, 9, 0.01, 3.0);
        assert!(matches!(fiberwise_fourier(&f, &short), Err(Error::Truncation { .. })));
    }

    #[test]
    fn sup_of_modulated_symbol_sits_at_the_modulation() {
        // |f^(sigma)| = sqrt(pi) exp(-(sigma - 1)^2 / 4), maximal at sigma = 1.
        let f = parse_symbol("gauss:b=1,k=1").unwrap();
        assert!((fourier_sup(&f, Coord::ZERO) - PI.sqrt()).abs() < 1e-9);
        let g = parse_symbol("gauss:dim=2,b=1").unwrap();
        assert!((fourier_sup(&g, Coord::ZERO) - PI).abs() < 1e-9);
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let grid = CovariableGrid::line(Coord::ZERO, 1.0, 3, 0.05, 9.0);
        let s = fiberwise_fourier(&Symbol::gaussian(0.0, 0.5), &grid).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,sigma,re,im\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
