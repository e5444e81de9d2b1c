//! Stability boundaries computed by the reduction pipeline, and their
//! comparison against closed-form curves.

use num_complex::Complex64;
use serde::Serialize;

use crate::cgle;
use crate::error::{Error, Result};
use crate::higher_order::{HigherOrderKernels, HopState};
use crate::interaction::InteractionSet;
use crate::locked::{splay_analysis, synchrony_analysis, Decomposition, NetworkSpec, SplaySize};

const ROOT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundaryState {
    Synchrony,
    /// Two-node splay.
    Antisynchrony,
    Splay(SplaySize),
}

impl BoundaryState {
    pub fn label(&self) -> String {
        match self {
            BoundaryState::Synchrony => "synchrony".into(),
            BoundaryState::Antisynchrony => "antisynchrony".into(),
            BoundaryState::Splay(SplaySize::Finite(n)) => format!("splay(N={n})"),
            BoundaryState::Splay(SplaySize::Infinite) => "splay(N=inf)".into(),
        }
    }
}

/// The 2x2 eigenvalue block that carries the non-trivial boundary.
fn critical_block(state: BoundaryState, h: &InteractionSet, eps: f64) -> Result<[Complex64; 2]> {
    match state {
        BoundaryState::Synchrony => {
            let (_, rep) = synchrony_analysis(&NetworkSpec::global(2, eps)?, h)?;
            match rep.decomposition {
                Some(Decomposition::Synchrony { m_block, .. }) => Ok(m_block),
                _ => Err(Error::Numerical("synchrony decomposition missing".into())),
            }
        }
        BoundaryState::Antisynchrony | BoundaryState::Splay(_) => {
            let size = match state {
                BoundaryState::Splay(s) => s,
                _ => SplaySize::Finite(2),
            };
            let (_, rep) = splay_analysis(size, h, eps)?;
            match rep.decomposition {
                Some(Decomposition::Splay { blocks }) => {
                    blocks.into_iter().find(|(q, _)| *q == 1).map(|(_, b)| b).ok_or_else(|| Error::Numerical("splay block q=1 missing".into()))
                }
                _ => Err(Error::Numerical("splay decomposition missing".into())),
            }
        }
    }
}

/// Sign changes of `f` on `grid`, refined by bisection; `None` values break brackets.
pub fn crossing_roots(f: &dyn Fn(f64) -> Option<f64>, grid: &[f64]) -> Vec<f64> {
    let vals: Vec<Option<f64>> = grid.iter().map(|&e| f(e)).collect();
    let mut out = Vec::new();
    for k in 0..grid.len().saturating_sub(1) {
        let (Some(a), Some(b)) = (vals[k], vals[k + 1]) else { continue };
        if a == 0.0 {
            out.push(grid[k]);
            continue;
        }
        if (a > 0.0) == (b > 0.0) || b == 0.0 {
            continue;
        }
        let (mut lo, mut hi, mut flo) = (grid[k], grid[k + 1], a);
        while hi - lo > ROOT_TOL * hi.abs().max(1.0) {
            let mid = 0.5 * (lo + hi);
            match f(mid) {
                Some(v) if v == 0.0 => {
                    lo = mid;
                    hi = mid;
                }
                Some(v) if (v > 0.0) == (flo > 0.0) => {
                    lo = mid;
                    flo = v;
                }
                Some(_) => hi = mid,
                None => break,
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out
}

/// Boundaries of the critical block over `grid`, separated into real
/// crossings (`det`-type) and oscillatory crossings.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PipelineBoundaries {
    pub real: Vec<f64>,
    pub oscillatory: Vec<f64>,
}

impl PipelineBoundaries {
    pub fn all(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.real.iter().chain(&self.oscillatory).copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

pub fn pipeline_boundaries(state: BoundaryState, h: &InteractionSet, grid: &[f64]) -> PipelineBoundaries {
    let block = |e: f64| critical_block(state, h, e).ok();
    // a block with real entries has a conjugate or real pair
    let real_block = |b: &[Complex64; 2]| {
        let s = b[0] + b[1];
        let p = b[0] * b[1];
        s.im.abs() <= 1e-9 * s.norm().max(1.0) && p.im.abs() <= 1e-9 * p.norm().max(1.0)
    };
    // one eigenvalue of the block vanishes linearly at ε = 0; dividing it out
    // keeps roots near ε = 0 from cancelling against it
    let det = |e: f64| block(e).filter(|b| e != 0.0 && real_block(b)).map(|b| (b[0] * b[1]).re / e);
    let trace_complex = |e: f64| block(e).filter(|b| real_block(b) && b[0].im.abs() > 1e-12).map(|b| (b[0] + b[1]).re);
    let re_product = |e: f64| block(e).filter(|b| e != 0.0 && !real_block(b)).map(|b| b[0].re * b[1].re / e);
    let mut real = crossing_roots(&det, grid);
    let mut osc = crossing_roots(&trace_complex, grid);
    osc.extend(crossing_roots(&re_product, grid));
    real.sort_by(|a, b| a.partial_cmp(b).unwrap());
    osc.sort_by(|a, b| a.partial_cmp(b).unwrap());
    PipelineBoundaries { real, oscillatory: osc }
}

/// Closed-form phase-isostable boundaries for the MF-CGLE.
pub fn oracle_pi_boundaries(state: BoundaryState, c1: f64, c2: f64) -> Result<Vec<f64>> {
    Ok(match state {
        BoundaryState::Synchrony => vec![cgle::eps_s(c1, c2)],
        BoundaryState::Antisynchrony => cgle::real_roots(&cgle::poly_eps_a_pi(c1, c2))?,
        BoundaryState::Splay(_) => cgle::real_roots(&cgle::poly_eps_0_pi(c1, c2))?,
    })
}

/// One oracle root and its nearest pipeline root.
#[derive(Clone, Debug, Serialize)]
pub struct Match {
    pub oracle: f64,
    pub pipeline: Option<f64>,
    pub deviation: f64,
}

/// Pair each oracle root inside `(lo, hi)` (and away from `skip`) with the
/// nearest pipeline root.
pub fn match_roots(oracle: &[f64], pipeline: &[f64], lo: f64, hi: f64, skip: &[f64]) -> Vec<Match> {
    oracle
        .iter()
        .filter(|&&e| e > lo && e < hi && skip.iter().all(|s| (e - s).abs() > 1e-6))
        .map(|&e| {
            let near = pipeline.iter().copied().min_by(|a, b| (a - e).abs().partial_cmp(&(b - e).abs()).unwrap());
            Match { oracle: e, pipeline: near, deviation: near.map_or(f64::INFINITY, |p| (p - e).abs()) }
        })
        .collect()
}

/// Row of a pipeline-versus-oracle comparison at one `c1`.
#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    pub c1: f64,
    pub c2: f64,
    pub state: String,
    pub matches: Vec<Match>,
}

impl CompareRow {
    pub fn max_deviation(&self) -> f64 {
        self.matches.iter().map(|m| m.deviation).fold(0.0, f64::max)
    }
}

/// Uniform grid of `n` points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Phase-isostable boundaries of `state` from the pipeline against the closed forms.
pub fn compare_pi(state: BoundaryState, c1: f64, c2: f64, h: &InteractionSet, eps_grid: &[f64]) -> Result<CompareRow> {
    let pipe = pipeline_boundaries(state, h, eps_grid);
    let (lo, hi) = (eps_grid[0], *eps_grid.last().unwrap());
    let oracle = oracle_pi_boundaries(state, c1, c2)?;
    let pool = match state {
        BoundaryState::Splay(_) => pipe.oscillatory.clone(),
        _ => pipe.real.clone(),
    };
    // ε = 0 collapses the phase spectrum and ε = 1 is the splay amplitude pole
    let matches = match_roots(&oracle, &pool, lo, hi, &[0.0, 1.0]);
    Ok(CompareRow { c1, c2, state: state.label(), matches })
}

/// Higher-order boundaries from the assembled `H̄` against the closed-form polynomials.
pub fn compare_hop(q: &HigherOrderKernels, state: HopState, order: usize, n: usize, c1: f64, c2: f64, lo: f64, hi: f64) -> Result<CompareRow> {
    let spec = crate::higher_order::hop_spectrum(q, state, n)?;
    let pipe = spec.boundaries(order)?;
    let oracle: Vec<f64> = match (state, order) {
        (HopState::Synchrony, 2) => cgle::eps_s2(c1, c2).into_iter().collect(),
        (HopState::Synchrony, 3) => cgle::real_roots(&cgle::poly_eps_s3(c1, c2))?,
        (HopState::Splay, 2) => cgle::eps_02(c1, c2).into_iter().collect(),
        (HopState::Splay, 3) => cgle::real_roots(&cgle::poly_eps_03(c1, c2))?,
        (HopState::Antisynchrony, 2) => cgle::eps_a2(c1, c2).into_iter().collect(),
        (HopState::Antisynchrony, 3) => cgle::real_roots(&cgle::poly_eps_a3(c1, c2))?,
        _ => return Err(Error::Order(order)),
    };
    let mut matches = match_roots(&oracle, &pipe, lo, hi, &[0.0]);
    // the pipeline must not produce boundaries the closed-form curve lacks
    for &p in pipe.iter().filter(|&&p| p > lo && p < hi && p.abs() > 1e-6) {
        if !oracle.iter().any(|o| (o - p).abs() < 1e-4) {
            matches.push(Match { oracle: f64::NAN, pipeline: Some(p), deviation: f64::INFINITY });
        }
    }
    let label = format!("{}-order{}", match state {
        HopState::Synchrony => "synchrony",
        HopState::Splay => "splay",
        HopState::Antisynchrony => "antisynchrony",
    }, order);
    Ok(CompareRow { c1, c2, state: label, matches })
}
