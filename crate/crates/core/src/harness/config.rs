//! Experiment configuration: a TOML tree with sections grid, hbar, norm,
//! symbols, kernel, reference, toeplitz, thresholds and report.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::operators::norm::{NormMethod, NormOptions, DEFAULT_SEED};
use crate::symbolics::calculus::Calculus;
use crate::symbolics::catalogue::{parse_kernel, parse_symbol};
use crate::symbolics::kernel::BoundaryKernel;
use crate::symbolics::quadrature::Trapezoid;
use crate::symbolics::symbol::Symbol;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub dim: usize,
    /// Slab thickness exponent: a_hbar = hbar^beta.
    pub beta: f64,
    /// Trapezoid spacing for full-line symbol convolutions.
    pub quadrature: f64,
    /// Trapezoid spacing for the half-line integrals of boundary kernels.
    pub boundary_quadrature: f64,
    pub grid: GridConfig,
    pub hbar: HbarConfig,
    pub norm: NormConfig,
    pub symbols: SymbolsConfig,
    pub kernel: KernelConfig,
    pub reference: ReferenceConfig,
    pub toeplitz: ToeplitzConfig,
    pub thresholds: Thresholds,
    pub report: ReportConfig,
}

/// Extents are in x units: the half-line is [0, L_n], the full line [-L_n, L_n],
/// with L_n = normal_extent + extent_per_hbar * hbar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub normal_extent: f64,
    pub extent_per_hbar: f64,
    pub tangential_extent: f64,
    /// Spacing = spacing_per_hbar * hbar when set, else hbar * r / 8 for the
    /// smallest decay radius r involved.
    pub spacing_per_hbar: Option<f64>,
    /// Absolute upper bound on the spacing, applied after the rule above.
    pub max_spacing: Option<f64>,
    /// Residuals are measured on nodes at least guard + guard_per_hbar * hbar
    /// away from the artificial edges.
    pub guard: f64,
    pub guard_per_hbar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HbarConfig {
    pub start: f64,
    pub halvings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormConfig {
    pub method: NormMethod,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolsConfig {
    #[serde(deserialize_with = "one_or_many")]
    pub f: Vec<String>,
    #[serde(deserialize_with = "one_or_many")]
    pub g: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(deserialize_with = "one_or_many")]
    pub k: Vec<String>,
}

/// Half-line grid on which hbar = 0 boundary operators are evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub extent: f64,
    pub spacing: f64,
    /// Frozen tangential covariables of the dim-2 boundary family.
    pub sigma_t: Vec<f64>,
    pub guard: f64,
}

/// Joint refinement: level k = 0..=levels uses section size section_size * 2^k
/// against a half-line of extent extent * 2^k with spacing spacing / 2^k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToeplitzConfig {
    pub section_size: usize,
    pub extent: f64,
    pub spacing: f64,
    pub levels: usize,
    /// Section sizes of the commutator profile.
    pub commutator_sizes: Vec<usize>,
    pub commutator_keep: usize,
}

/// Verdict thresholds. These are engineering choices: the limits involved
/// carry no rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub final_relative_error: f64,
    pub rank_one: f64,
    pub decomposition: f64,
    pub refinement_ratio: f64,
    pub defect_ratio: f64,
    pub multiplicativity: f64,
    /// Relative defect below which base-independent pairs count as exact.
    pub quadrature_level: f64,
    pub quotient_slack: f64,
    pub compression_fraction: f64,
    pub toeplitz_gap: f64,
    pub cayley_vanishing: f64,
    pub commutator_decay: f64,
    pub commutator_index: usize,
    /// Relative slack allowed in monotone-trend checks.
    pub trend_slack: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Record wall-clock times; off by default so reports are byte-stable.
    pub timings: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    })
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: String::new(),
            dim: 1,
            beta: 0.5,
            quadrature: 1.0 / 16.0,
            boundary_quadrature: 1.0 / 64.0,
            grid: GridConfig::default(),
            hbar: HbarConfig::default(),
            norm: NormConfig::default(),
            symbols: SymbolsConfig::default(),
            kernel: KernelConfig::default(),
            reference: ReferenceConfig::default(),
            toeplitz: ToeplitzConfig::default(),
            thresholds: Thresholds::default(),
            report: ReportConfig::default(),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            normal_extent: 16.0,
            extent_per_hbar: 0.0,
            tangential_extent: 8.0,
            spacing_per_hbar: None,
            max_spacing: None,
            guard: 0.0,
            guard_per_hbar: 0.0,
        }
    }
}

impl Default for HbarConfig {
    fn default() -> Self {
        HbarConfig { start: 1.0, halvings: 6 }
    }
}

impl Default for NormConfig {
    fn default() -> Self {
        let d = NormOptions::default();
        NormConfig { method: d.method, tol: d.tol, max_iter: d.max_iter, seed: DEFAULT_SEED }
    }
}

impl Default for SymbolsConfig {
    fn default() -> Self {
        SymbolsConfig { f: vec!["gauss:b=0.5".into()], g: vec!["gauss:b=0.5".into()] }
    }
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { k: vec!["zero".into()] }
    }
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig { extent: 64.0, spacing: 1.0 / 16.0, sigma_t: vec![0.0], guard: 16.0 }
    }
}

impl Default for ToeplitzConfig {
    fn default() -> Self {
        ToeplitzConfig {
            section_size: 128,
            extent: 16.0,
            spacing: 1.0 / 8.0,
            levels: 2,
            commutator_sizes: vec![128, 256, 512],
            commutator_keep: 64,
        }
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            final_relative_error: 0.05,
            rank_one: 1e-3,
            decomposition: 1e-2,
            refinement_ratio: 3.0,
            defect_ratio: 0.1,
            multiplicativity: 1e-2,
            quadrature_level: 1e-5,
            quotient_slack: 1e-3,
            compression_fraction: 0.95,
            toeplitz_gap: 1e-2,
            cayley_vanishing: 1e-10,
            commutator_decay: 1e-6,
            commutator_index: 50,
            trend_slack: 1e-9,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// This config with the keys present in `text` replaced; tables merge
    /// key by key, everything else is replaced whole.
    pub fn with_overlay(&self, text: &str) -> Result<Self> {
        let overlay: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut base = toml::Table::try_from(self).expect("config serializes");
        merge(&mut base, overlay);
        base.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Schedule hbar_k = start * 2^-k, k = 0..=halvings.
    pub fn hbar_schedule(&self) -> Vec<f64> {
        (0..=self.hbar.halvings).map(|k| self.hbar.start * 0.5f64.powi(k as i32)).collect()
    }

    pub fn normal_extent(&self, hbar: f64) -> f64 {
        self.grid.normal_extent + self.grid.extent_per_hbar * hbar
    }

    pub fn guard(&self, hbar: f64) -> f64 {
        self.grid.guard + self.grid.guard_per_hbar * hbar
    }

    pub fn norm_options(&self) -> NormOptions {
        NormOptions { method: self.norm.method, tol: self.norm.tol, max_iter: self.norm.max_iter, seed: self.norm.seed }
    }

    pub fn calculus(&self) -> Calculus {
        Calculus::new(Trapezoid::new(self.quadrature)).with_boundary_rule(Trapezoid::new(self.boundary_quadrature))
    }

    pub fn symbols_f(&self) -> Result<Vec<Symbol>> {
        self.parse_symbols(&self.symbols.f)
    }

    pub fn symbols_g(&self) -> Result<Vec<Symbol>> {
        self.parse_symbols(&self.symbols.g)
    }

    pub fn kernels(&self) -> Result<Vec<BoundaryKernel>> {
        self.kernel.k.iter().map(|id| parse_kernel(&with_dim(id, self.dim)).map_err(config_error)).collect()
    }

    fn parse_symbols(&self, ids: &[String]) -> Result<Vec<Symbol>> {
        ids.iter().map(|id| parse_symbol(&with_dim(id, self.dim)).map_err(config_error)).collect()
    }

    /// Check everything that can be checked without running: value ranges
    /// and catalogue ids.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dim != 1 && self.dim != 2 {
            return bad(format!("dim must be 1 or 2, got {}", self.dim));
        }
        if !(self.hbar.start > 0.0 && self.hbar.start <= 1.0) {
            return bad(format!("hbar.start must lie in (0, 1], got {}", self.hbar.start));
        }
        if self.hbar.halvings > 16 {
            return bad(format!("hbar.halvings must be at most 16, got {}", self.hbar.halvings));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        for (name, v) in [("quadrature", self.quadrature), ("boundary_quadrature", self.boundary_quadrature)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} spacing must be positive, got {v}"));
            }
        }
        let g = &self.grid;
        for (name, v) in [("grid.normal_extent", g.normal_extent), ("grid.tangential_extent", g.tangential_extent)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("grid.extent_per_hbar", g.extent_per_hbar), ("grid.guard", g.guard), ("grid.guard_per_hbar", g.guard_per_hbar)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be nonnegative, got {v}"));
            }
        }
        for (name, v) in [("grid.spacing_per_hbar", g.spacing_per_hbar), ("grid.max_spacing", g.max_spacing)] {
            if let Some(s) = v.filter(|s| !(*s > 0.0 && s.is_finite())) {
                return bad(format!("{name} must be positive, got {s}"));
            }
        }
        if !(self.norm.tol > 0.0) || self.norm.max_iter == 0 {
            return bad("norm.tol and norm.max_iter must be positive".into());
        }
        let r = &self.reference;
        if !(r.extent > 0.0 && r.spacing > 0.0 && r.spacing < r.extent && r.guard >= 0.0) {
            return bad("reference grid needs 0 < spacing < extent and guard >= 0".into());
        }
        let t = &self.toeplitz;
        if t.section_size == 0 || !(t.extent > 0.0 && t.spacing > 0.0) || t.commutator_keep == 0 {
            return bad("toeplitz sizes, extent and spacing must be positive".into());
        }
        let tail = self.thresholds.commutator_index;
        if let Some(&largest) = t.commutator_sizes.iter().max() {
            if tail == 0 || tail > t.commutator_keep.min(largest) {
                return bad(format!(
                    "thresholds.commutator_index must lie in 1..={}, got {tail}",
                    t.commutator_keep.min(largest)
                ));
            }
        }
        if self.symbols.f.is_empty() {
            return bad("symbols.f must name at least one symbol".into());
        }
        self.symbols_f()?;
        self.symbols_g()?;
        self.kernels()?;
        Ok(())
    }
}

/// Catalogue ids default to dim 1; a config with dim 2 applies to ids that
/// do not state a dimension.
fn with_dim(id: &str, dim: usize) -> String {
    if dim == 1 || id.contains("dim=") {
        return id.to_string();
    }
    match id.split_once(':') {
        Some((family, rest)) => format!("{family}:dim={dim},{rest}"),
        None => format!("{id}:dim={dim}"),
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn config_error(e: Error) -> Error {
    match e {
        Error::Catalogue { id, reason } => Error::Config(format!("catalogue id `{id}`: {reason}")),
        other => Error::Config(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
        c.validate().unwrap();
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = ExperimentConfig::from_toml_str(
            "experiment = \"norm-limit-interior\"\n[hbar]\nhalvings = 3\n[symbols]\nf = \"gauss:a=1,b=0.5\"\n",
        )
        .unwrap();
        assert_eq!(c.hbar.halvings, 3);
        assert_eq!(c.hbar.start, 1.0);
        assert_eq!(c.symbols.f, vec!["gauss:a=1,b=0.5".to_string()]);
        assert_eq!(c.hbar_schedule(), vec![1.0, 0.5, 0.25, 0.125]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml_str("[grid]\nbogus = 1\n").unwrap_err().is_config());
        assert!(ExperimentConfig::from_toml_str("[norm]\nmethod = \"qr\"\n").unwrap_err().is_config());
        let mut c = ExperimentConfig::default();
        c.symbols.f = vec!["gauss:b=-1".into()];
        assert!(c.validate().unwrap_err().is_config());
        let mut c = ExperimentConfig::default();
        c.hbar.start = 2.0;
        assert!(c.validate().unwrap_err().is_config());
        let c = ExperimentConfig { beta: 1.0, ..ExperimentConfig::default() };
        assert!(c.validate().unwrap_err().is_config());
        let mut c = ExperimentConfig::default();
        c.toeplitz.commutator_keep = 32;
        assert!(c.validate().unwrap_err().is_config());
    }

    #[test]
    fn overlay_merges_tables() {
        let mut base = ExperimentConfig::default();
        base.grid.spacing_per_hbar = Some(0.25);
        base.grid.normal_extent = 7.0;
        let c = base.with_overlay("beta = 0.25\n[grid]\nnormal_extent = 3.0\n[symbols]\ng = [\"zero\"]\n").unwrap();
        assert_eq!(c.beta, 0.25);
        assert_eq!(c.grid.normal_extent, 3.0);
        assert_eq!(c.grid.spacing_per_hbar, Some(0.25));
        assert_eq!(c.symbols.g, vec!["zero".to_string()]);
        assert_eq!(c.symbols.f, base.symbols.f);
        assert!(base.with_overlay("[grid]\nspan = 1\n").unwrap_err().is_config());
        assert!(base.with_overlay("[grid\n").unwrap_err().is_config());
    }

    #[test]
    fn dim_is_applied_to_ids() {
        assert_eq!(with_dim("gauss:b=1", 2), "gauss:dim=2,b=1");
        assert_eq!(with_dim("zero", 2), "zero:dim=2");
        assert_eq!(with_dim("gauss:dim=2,b=1", 2), "gauss:dim=2,b=1");
        let c = ExperimentConfig { dim: 2, ..ExperimentConfig::default() };
        assert_eq!(c.symbols_f().unwrap()[0].dim(), 2);
    }
}
