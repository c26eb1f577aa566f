//! String ids for catalogue symbols and kernels.
//!
//! Grammar: `family[:key=value[,key=value]*]`.
//!
//! Symbol families:
//! - `zero`
//! - `gauss`: fibre exp(-b |v - v0|^2)
//! - `bump`:  fibre bump(|v - v0| / rv)
//!
//! Shared symbol keys: `dim` (1 or 2), `c` (amplitude), `v0`/`vt0` (fibre
//! centre, normal/tangential), `k`/`kt` (modulation exp(i k.v)), and at most one
//! base factor: `a` (Gaussian exp(-a |x - x0|^2)), `rx` (bump of radius rx) or
//! `lx` (Lorentzian of width lx), centred at (`xt0`, `x0`).
//!
//! Kernel families: `zero` and `rank1` with keys `c`, `alpha`, `p`, `beta`, `q`,
//! `tau`, `dim`: K = c exp(-alpha (v - p)^2) exp(-beta (w - q)^2) [exp(-tau u'^2)].

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use super::grid::Coord;
use super::kernel::{BoundaryKernel, HalfLineGaussian};
use super::symbol::{BaseProfile, FiberProfile, Separable, Symbol};
use crate::error::{Error, Result};

fn err(id: &str, reason: impl Into<String>) -> Error {
    Error::Catalogue { id: id.to_string(), reason: reason.into() }
}

struct Parsed<'a> {
    id: &'a str,
    family: &'a str,
    keys: BTreeMap<&'a str, f64>,
}

impl<'a> Parsed<'a> {
    fn parse(id: &'a str, allowed: &[&str]) -> Result<Self> {
        let id = id.trim();
        let (family, rest) = match id.split_once(':') {
            Some((f, r)) => (f.trim(), r.trim()),
            None => (id, ""),
        };
        let mut keys = BTreeMap::new();
        for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| err(id, format!("expected key=value, got `{pair}`")))?;
            let k = k.trim();
            if !allowed.contains(&k) {
                return Err(err(id, format!("unknown key `{k}`")));
            }
            let v: f64 = v.trim().parse().map_err(|_| err(id, format!("bad number for `{k}`")))?;
            if !v.is_finite() {
                return Err(err(id, format!("`{k}` must be finite")));
            }
            if keys.insert(k, v).is_some() {
                return Err(err(id, format!("duplicate key `{k}`")));
            }
        }
        Ok(Parsed { id, family, keys })
    }

    fn get(&self, k: &str, default: f64) -> f64 {
        self.keys.get(k).copied().unwrap_or(default)
    }

    fn positive(&self, k: &str, default: f64) -> Result<f64> {
        let v = self.get(k, default);
        if v <= 0.0 {
            return Err(err(self.id, format!("`{k}` must be positive")));
        }
        Ok(v)
    }

    fn dim(&self) -> Result<usize> {
        match self.get("dim", 1.0) {
            1.0 => Ok(1),
            2.0 => Ok(2),
            _ => Err(err(self.id, "`dim` must be 1 or 2")),
        }
    }
}

const SYMBOL_KEYS: &[&str] =
    &["dim", "c", "b", "rv", "v0", "vt0", "k", "kt", "a", "rx", "lx", "x0", "xt0"];
const KERNEL_KEYS: &[&str] = &["dim", "c", "alpha", "p", "beta", "q", "tau"];

/// Resolve a symbol id.
pub fn parse_symbol(id: &str) -> Result<Symbol> {
    let p = Parsed::parse(id, SYMBOL_KEYS)?;
    let dim = p.dim()?;
    let fiber_center = Coord::new(p.get("vt0", 0.0), p.get("v0", 0.0));
    let fiber = match p.family {
        "zero" => return Ok(Symbol::zero(dim)),
        "gauss" => {
            if p.keys.contains_key("rv") {
                return Err(err(id, "`rv` belongs to the bump family"));
            }
            FiberProfile::Gaussian { b: p.positive("b", 1.0)?, center: fiber_center }
        }
        "bump" => {
            if p.keys.contains_key("b") {
                return Err(err(id, "`b` belongs to the gauss family"));
            }
            FiberProfile::Bump { radius: p.positive("rv", 1.0)?, center: fiber_center }
        }
        other => return Err(err(id, format!("unknown family `{other}`"))),
    };
    let base_center = Coord::new(p.get("xt0", 0.0), p.get("x0", 0.0));
    let base_keys: Vec<_> = ["a", "rx", "lx"].into_iter().filter(|k| p.keys.contains_key(k)).collect();
    let base = match base_keys.as_slice() {
        [] => BaseProfile::Constant,
        ["a"] => {
            let a = p.get("a", 0.0);
            if a < 0.0 {
                return Err(err(id, "`a` must be nonnegative"));
            }
            if a == 0.0 {
                BaseProfile::Constant
            } else {
                BaseProfile::Gaussian { a, center: base_center }
            }
        }
        ["rx"] => BaseProfile::Bump { radius: p.positive("rx", 1.0)?, center: base_center },
        ["lx"] => BaseProfile::Lorentzian { width: p.positive("lx", 1.0)?, center: base_center },
        _ => return Err(err(id, "at most one of `a`, `rx`, `lx` may be given")),
    };
    if dim == 1 && ["vt0", "kt", "xt0"].iter().any(|k| p.keys.contains_key(k)) {
        return Err(err(id, "tangential keys need dim=2"));
    }
    Ok(Symbol::separable(
        dim,
        id.trim(),
        Separable {
            amplitude: C64::new(p.get("c", 1.0), 0.0),
            base,
            fiber,
            modulation: Coord::new(p.get("kt", 0.0), p.get("k", 0.0)),
        },
    ))
}

/// Resolve a boundary kernel id.
pub fn parse_kernel(id: &str) -> Result<BoundaryKernel> {
    let p = Parsed::parse(id, KERNEL_KEYS)?;
    let dim = p.dim()?;
    match p.family {
        "zero" => Ok(BoundaryKernel::zero(dim)),
        "rank1" => Ok(BoundaryKernel::rank_one(
            dim,
            id.trim(),
            C64::new(p.get("c", 1.0), 0.0),
            HalfLineGaussian { rate: p.positive("alpha", 1.0)?, center: p.get("p", 0.0) },
            HalfLineGaussian { rate: p.positive("beta", 1.0)?, center: p.get("q", 0.0) },
            p.positive("tau", 1.0)?,
        )),
        other => Err(err(id, format!("unknown kernel family `{other}`"))),
    }
}

/// Entries listed by `semiclass catalog`; also the symbol set used for
/// "all catalogue pairs" checks.
pub const STANDARD_SYMBOLS: &[(&str, &str)] = &[
    ("gauss:b=1", "x-independent Gaussian exp(-v^2)"),
    ("gauss:b=0.5", "x-independent Gaussian exp(-v^2/2)"),
    ("gauss:a=1,b=1,x0=0.5", "Gaussian in x and v"),
    ("gauss:a=2,b=2,x0=1,v0=0.5", "off-centre Gaussian"),
    ("gauss:b=1,k=1", "modulated Gaussian exp(-v^2 + i v)"),
    ("bump:rv=2,rx=3,x0=1", "compactly supported bump"),
];

pub const STANDARD_KERNELS: &[(&str, &str)] = &[
    ("zero", "no Green term"),
    ("rank1:alpha=1,beta=1", "rank-one exp(-v^2) exp(-w^2)"),
    ("rank1:c=0.5,alpha=2,p=1,beta=0.5,q=0.5", "off-centre rank-one"),
    ("rank1:c=3,alpha=1,beta=1", "large rank-one"),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_gaussian() {
        let f = parse_symbol("gauss:a=1,b=0.5").unwrap();
        assert_eq!(f.dim(), 1);
        assert_eq!(f.label(), "gauss:a=1,b=0.5");
        let v = f.eval(Coord::normal(1.0), Coord::normal(2.0));
        assert!((v.re - (-1.0f64 - 2.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn parses_bump_and_dim2() {
        let f = parse_symbol("bump:rv=2").unwrap();
        assert_eq!(f.decay_radius(), 2.0);
        assert!(f.is_base_independent());
        let g = parse_symbol("gauss:dim=2,a=1,b=1,xt0=0.5").unwrap();
        assert_eq!(g.dim(), 2);
    }

    #[test]
    fn rejects_malformed_ids() {
        for id in [
            "nope",
            "gauss:b",
            "gauss:b=x",
            "gauss:b=-1",
            "gauss:q=1",
            "gauss:a=1,rx=2",
            "gauss:b=1,b=2",
            "gauss:dim=3",
            "gauss:kt=1",
            "bump:b=1",
        ] {
            assert!(parse_symbol(id).is_err(), "{id}");
        }
        assert!(parse_kernel("rank1:alpha=0").is_err());
        assert!(parse_kernel("rank2").is_err());
    }

    #[test]
    fn zero_entries() {
        assert!(parse_symbol("zero").unwrap().is_zero());
        assert!(parse_kernel("zero").unwrap().is_zero());
        assert!(parse_symbol("gauss:c=0").unwrap().is_zero());
    }

    #[test]
    fn standard_entries_resolve() {
        for (id, _) in STANDARD_SYMBOLS {
            parse_symbol(id).unwrap();
        }
        for (id, _) in STANDARD_KERNELS {
            parse_kernel(id).unwrap();
        }
    }
}
