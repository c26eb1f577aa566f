//! Fixtures shared by the benchmarks in `benches/`.

use std::sync::Arc;

use semiclass::symbolics::catalogue::parse_symbol;
use semiclass::{Domain, Grid, Symbol};

/// The interior norm-limit symbol exp(-x^2) exp(-v^2/2).
pub fn gaussian() -> Symbol {
    parse_symbol("gauss:a=1,b=0.5").expect("catalogue id")
}

/// Grid on [0, 8] (half-line) or [-8, 8] (full line) with `n` nodes.
pub fn grid(domain: Domain, n: usize) -> Arc<Grid> {
    let grid = match domain {
        Domain::HalfSpace => Grid::half_line(8.0, n),
        Domain::FullSpace => Grid::full_line(8.0, n),
    };
    Arc::new(grid.expect("valid grid"))
}

/// Smallest hbar the grid resolves for `f`: spacing = hbar * r / 8.
pub fn finest_hbar(grid: &Grid, f: &Symbol) -> f64 {
    8.0 * grid.max_spacing() / f.decay_radius()
}
