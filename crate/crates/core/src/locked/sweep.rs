//! Parameter sweeps in `ε` with detection of stability changes.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::two_cluster::{two_cluster_at, two_cluster_det, two_cluster_mismatch, two_cluster_roots};
use super::{
    balanced_cluster_analysis, splay_analysis, synchrony_analysis, LockedState, NetworkSpec, SplaySize, StabilityReport, Verdict,
};
use crate::error::{Error, Result};
use crate::interaction::InteractionSet;

pub const EPS_TOL: f64 = 1e-6;

/// Which common-orbit state a sweep follows.
#[derive(Clone, Debug, PartialEq)]
pub enum Selector {
    /// Synchrony on the given network; its `eps` field is ignored.
    Synchrony(NetworkSpec),
    Splay(SplaySize),
    Balanced { clusters: usize, size: usize },
}

impl Selector {
    pub fn label(&self) -> String {
        match self {
            Selector::Synchrony(_) => "synchrony".into(),
            Selector::Splay(SplaySize::Finite(n)) => format!("splay(N={n})"),
            Selector::Splay(SplaySize::Infinite) => "splay(N=inf)".into(),
            Selector::Balanced { clusters, size } => format!("balanced({clusters}x{size})"),
        }
    }

    pub fn analyse(&self, h: &InteractionSet, eps: f64) -> Result<(LockedState, StabilityReport)> {
        match self {
            Selector::Synchrony(net) => synchrony_analysis(&net.with_eps(eps), h),
            Selector::Splay(size) => splay_analysis(*size, h, eps),
            Selector::Balanced { clusters, size } => balanced_cluster_analysis(*clusters, *size, h, eps),
        }
    }

    /// Denominator of the isostable formula; its zeros are limit points.
    pub fn denominator(&self, h: &InteractionSet, eps: f64) -> f64 {
        let sum_over = |m: usize| -> (f64, f64) {
            (1..=m).fold((0.0, 0.0), |(s4, s56), j| {
                let (v, _) = h.all(2.0 * PI * j as f64 / m as f64);
                (s4 + v[3], s56 + v[4] + v[5])
            })
        };
        match self {
            Selector::Synchrony(net) => {
                let c = net.constant_row().unwrap_or(1.0);
                let (v, _) = h.all(0.0);
                h.kappa + eps * c * (v[4] + v[5])
            }
            Selector::Splay(SplaySize::Finite(n)) => *n as f64 * h.kappa + eps * sum_over(*n).1,
            Selector::Splay(SplaySize::Infinite) => h.kappa + eps * (h.coeff(5, 0).re + h.coeff(6, 0).re),
            Selector::Balanced { clusters, .. } => *clusters as f64 * h.kappa + eps * sum_over(*clusters).1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub class: String,
    pub big_omega: f64,
    pub psi: Vec<f64>,
    pub max_re: f64,
    pub max_im: f64,
    pub verdict: Option<Verdict>,
    pub status: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BifurcationKind {
    TransverseZero,
    HopfPair,
    LimitPoint,
    /// Turning point of a branch in `ε` (two locked states merge).
    Fold,
}

impl BifurcationKind {
    pub fn label(&self) -> &'static str {
        match self {
            BifurcationKind::TransverseZero => "transverse-zero",
            BifurcationKind::HopfPair => "Hopf-pair",
            BifurcationKind::LimitPoint => "limit-point",
            BifurcationKind::Fold => "fold",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Bifurcation {
    pub kind: BifurcationKind,
    pub eps: f64,
    pub eps_lo: f64,
    pub eps_hi: f64,
    /// Imaginary part of the critical eigenvalue (zero for limit points).
    pub frequency: f64,
    pub class: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub bifurcations: Vec<Bifurcation>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,eps,class,Omega,Psi,max_re,max_im,verdict,eps_lo,eps_hi\n");
        let mut lines: Vec<(f64, String)> = Vec::new();
        for r in &self.rows {
            let psi = r.psi.iter().map(|p| format!("{p:.12e}")).collect::<Vec<_>>().join(";");
            let verdict = r.verdict.map(|v| format!("{v:?}").to_lowercase()).unwrap_or_else(|| r.status.clone());
            lines.push((
                r.eps,
                format!("state,{:.9e},{},{:.12e},{},{:.6e},{:.6e},{},,\n", r.eps, r.class, r.big_omega, psi, r.max_re, r.max_im, verdict),
            ));
        }
        for b in &self.bifurcations {
            lines.push((
                b.eps,
                format!("bifurcation,{:.9e},{},,,,{:.6e},{},{:.9e},{:.9e}\n", b.eps, b.class, b.frequency, b.kind.label(), b.eps_lo, b.eps_hi),
            ));
        }
        lines.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for (_, l) in lines {
            s.push_str(&l);
        }
        s
    }

    pub fn find(&self, kind: BifurcationKind) -> Vec<&Bifurcation> {
        self.bifurcations.iter().filter(|b| b.kind == kind).collect()
    }
}

/// Values `a, a+step, ...` up to `b` inclusive.
pub fn eps_range(a: f64, b: f64, step: f64) -> Result<Vec<f64>> {
    if step == 0.0 || !step.is_finite() || !a.is_finite() || !b.is_finite() {
        return Err(Error::Config("ε range needs a finite non-zero step".into()));
    }
    if (b - a) * step < 0.0 {
        return Err(Error::Config("ε range step points away from the end value".into()));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    let v: Vec<f64> = (0..=n).map(|k| a + k as f64 * step).collect();
    if v.is_empty() {
        return Err(Error::Config("empty ε range".into()));
    }
    Ok(v)
}

fn unique_psi(psi: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &p in psi {
        if !out.iter().any(|q| (q - p).abs() <= 1e-12 * p.abs().max(1.0)) {
            out.push(p);
        }
    }
    out
}

fn row_of(eps: f64, class: &str, r: &Result<(LockedState, StabilityReport)>) -> SweepRow {
    match r {
        Ok((s, rep)) => SweepRow {
            eps,
            class: class.into(),
            big_omega: s.big_omega,
            psi: unique_psi(&s.psi),
            max_re: rep.max_re,
            max_im: rep.max_im,
            verdict: Some(rep.verdict),
            status: "ok".into(),
        },
        Err(e) => SweepRow {
            eps,
            class: class.into(),
            big_omega: f64::NAN,
            psi: vec![],
            max_re: f64::NAN,
            max_im: f64::NAN,
            verdict: None,
            status: match e {
                Error::Asymptote(_) => "asymptote".into(),
                Error::NoLockedState(_) => "absent".into(),
                _ => "failed".into(),
            },
        },
    }
}

fn bisect_pred(mut lo: f64, mut hi: f64, p_lo: bool, pred: &dyn Fn(f64) -> Option<bool>) -> (f64, f64) {
    while (hi - lo).abs() > EPS_TOL {
        let mid = 0.5 * (lo + hi);
        match pred(mid) {
            Some(v) if v == p_lo => lo = mid,
            Some(_) => hi = mid,
            None => break,
        }
    }
    (lo, hi)
}

fn classify(report: Option<&StabilityReport>) -> (BifurcationKind, f64) {
    match report {
        Some(r) if r.max_im.abs() > 1e-7 * r.spectral_radius.max(1e-12) => (BifurcationKind::HopfPair, r.max_im.abs()),
        _ => (BifurcationKind::TransverseZero, 0.0),
    }
}

/// Sweep a common-orbit state over `eps_values` (sorted ascending).
pub fn sweep(sel: &Selector, h: &InteractionSet, eps_values: &[f64]) -> SweepResult {
    let class = sel.label();
    let results: Vec<Result<(LockedState, StabilityReport)>> = eps_values.par_iter().map(|&e| sel.analyse(h, e)).collect();
    let rows: Vec<SweepRow> = eps_values.iter().zip(&results).map(|(&e, r)| row_of(e, &class, r)).collect();
    let mut bifurcations = Vec::new();
    for k in 0..eps_values.len().saturating_sub(1) {
        let (e0, e1) = (eps_values[k], eps_values[k + 1]);
        let (d0, d1) = (sel.denominator(h, e0), sel.denominator(h, e1));
        if d0 == 0.0 || d1 == 0.0 || (d0 > 0.0) != (d1 > 0.0) {
            let (lo, hi) = bisect_pred(e0, e1, d0 > 0.0, &|e| Some(sel.denominator(h, e) > 0.0));
            bifurcations.push(Bifurcation { kind: BifurcationKind::LimitPoint, eps: 0.5 * (lo + hi), eps_lo: lo, eps_hi: hi, frequency: 0.0, class: class.clone() });
            continue;
        }
        if e0 <= 0.0 && e1 >= 0.0 {
            // the phase spectrum collapses at ε = 0
            continue;
        }
        let (u0, u1) = (rows[k].verdict.map(|v| v == Verdict::Unstable), rows[k + 1].verdict.map(|v| v == Verdict::Unstable));
        if let (Some(u0), Some(u1)) = (u0, u1) {
            if u0 != u1 {
                let pred = |e: f64| sel.analyse(h, e).ok().map(|(_, r)| r.is_unstable());
                let (lo, hi) = bisect_pred(e0, e1, u0, &pred);
                let unstable_side = if u0 { lo } else { hi };
                let rep = sel.analyse(h, unstable_side).ok().map(|x| x.1);
                let (kind, frequency) = classify(rep.as_ref());
                bifurcations.push(Bifurcation { kind, eps: 0.5 * (lo + hi), eps_lo: lo, eps_hi: hi, frequency, class: class.clone() });
            }
        }
    }
    SweepResult { rows, bifurcations }
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Root of the two-cluster mismatch nearest `guess`, searched within `±window`.
pub fn local_root(na: usize, nb: usize, h: &InteractionSet, eps: f64, guess: f64, window: f64) -> Option<f64> {
    let f = |x: f64| two_cluster_mismatch(x, na, nb, h, eps);
    let steps = 128;
    let dx = 2.0 * window / steps as f64;
    let mut best: Option<f64> = None;
    let mut prev = (guess - window, f(guess - window));
    for k in 1..=steps {
        let x = guess - window + k as f64 * dx;
        let fx = f(x);
        if (prev.1 > 0.0) != (fx > 0.0) || fx == 0.0 {
            let (mut lo, mut hi, mut flo) = (prev.0, x, prev.1);
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let r = 0.5 * (lo + hi);
            if best.is_none_or(|b| (r - guess).abs() < (b - guess).abs()) {
                best = Some(r);
            }
        }
        prev = (x, fx);
    }
    best.map(|r| r.rem_euclid(2.0 * PI))
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchPoint {
    pub eps: f64,
    pub chi: f64,
    pub det: f64,
    pub psi: [f64; 2],
    pub max_re: f64,
    pub max_im: f64,
    pub verdict: Option<Verdict>,
}

#[derive(Clone, Debug)]
pub struct TrackOptions {
    /// Arclength step in the `(χ, 10 ε)` plane.
    pub ds: f64,
    pub max_steps: usize,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self { ds: 2e-3, max_steps: 20_000 }
    }
}

const EPS_WEIGHT: f64 = 10.0;

/// Follow a two-cluster branch by pseudo-arclength continuation of the
/// mismatch in `(χ, ε)`, starting from the root nearest `chi0` at `eps_start`
/// and heading toward `eps_stop`. Folds in `ε` are passed; the run ends when
/// `ε` leaves the interval or the branch merges with synchrony.
pub fn track_two_cluster(
    na: usize,
    nb: usize,
    h: &InteractionSet,
    eps_start: f64,
    eps_stop: f64,
    chi0: f64,
    opts: &TrackOptions,
) -> (Vec<BranchPoint>, Vec<Bifurcation>) {
    let class = format!("two-cluster({na},{nb})");
    let f = |x: [f64; 2]| two_cluster_mismatch(x[0], na, nb, h, x[1] / EPS_WEIGHT);
    let grad = |x: [f64; 2]| {
        let d = 1e-7;
        [(f([x[0] + d, x[1]]) - f([x[0] - d, x[1]])) / (2.0 * d), (f([x[0], x[1] + d]) - f([x[0], x[1] - d])) / (2.0 * d)]
    };
    let tangent = |x: [f64; 2], prev: [f64; 2]| {
        let g = grad(x);
        let n = g[0].hypot(g[1]).max(1e-300);
        let t = [-g[1] / n, g[0] / n];
        if t[0] * prev[0] + t[1] * prev[1] < 0.0 {
            [-t[0], -t[1]]
        } else {
            t
        }
    };
    // Newton on F = 0 restricted to the hyperplane through `pred` normal to `t`
    let correct = |pred: [f64; 2], t: [f64; 2]| -> Option<[f64; 2]> {
        let mut x = pred;
        for _ in 0..20 {
            let fx = f(x);
            let g = grad(x);
            let c = t[0] * (x[0] - pred[0]) + t[1] * (x[1] - pred[1]);
            let det = g[0] * t[1] - g[1] * t[0];
            if det.abs() < 1e-300 {
                return None;
            }
            let dx = [(-fx * t[1] + c * g[1]) / det, (fx * t[0] - c * g[0]) / det];
            x = [x[0] + dx[0], x[1] + dx[1]];
            if dx[0].hypot(dx[1]) < 1e-12 {
                return Some(x);
            }
        }
        None
    };
    let point = |x: [f64; 2]| -> BranchPoint {
        let (chi, eps) = (x[0].rem_euclid(2.0 * PI), x[1] / EPS_WEIGHT);
        let det = two_cluster_det(chi, na, nb, h, eps);
        let (psi, max_re, max_im, verdict) = match two_cluster_at(chi, na, nb, h, eps) {
            Ok((s, rep)) => ([s.psi[0], s.psi[na]], rep.max_re, rep.max_im, Some(rep.verdict)),
            Err(_) => ([f64::NAN; 2], f64::NAN, f64::NAN, None),
        };
        BranchPoint { eps, chi, det, psi, max_re, max_im, verdict }
    };

    let mut pts: Vec<BranchPoint> = Vec::new();
    let mut xs: Vec<[f64; 2]> = Vec::new();
    let start = two_cluster_roots(na, nb, h, eps_start)
        .into_iter()
        .min_by(|a, b| circ_dist(*a, chi0).partial_cmp(&circ_dist(*b, chi0)).unwrap());
    let Some(chi) = start else { return (pts, Vec::new()) };
    let (lo, hi) = (eps_start.min(eps_stop), eps_start.max(eps_stop));
    let mut x = [chi, eps_start * EPS_WEIGHT];
    let mut t = [0.0, if eps_stop >= eps_start { 1.0 } else { -1.0 }];
    xs.push(x);
    pts.push(point(x));
    for _ in 0..opts.max_steps {
        t = tangent(x, t);
        let mut ds = opts.ds;
        let mut next = None;
        while ds > opts.ds / 64.0 {
            if let Some(y) = correct([x[0] + ds * t[0], x[1] + ds * t[1]], t) {
                next = Some(y);
                break;
            }
            ds *= 0.5;
        }
        let Some(y) = next else { break };
        let eps = y[1] / EPS_WEIGHT;
        if eps < lo || eps > hi || circ_dist(y[0], 0.0) < 1e-4 {
            break;
        }
        x = y;
        xs.push(x);
        pts.push(point(x));
    }

    let on_segment = |a: [f64; 2], b: [f64; 2], tau: f64| -> Option<[f64; 2]> {
        let d = [b[0] - a[0], b[1] - a[1]];
        let n = d[0].hypot(d[1]);
        correct([a[0] + tau * d[0], a[1] + tau * d[1]], [d[0] / n, d[1] / n])
    };
    let refine = |a: [f64; 2], b: [f64; 2], pred: &dyn Fn([f64; 2]) -> Option<bool>| -> ([f64; 2], [f64; 2]) {
        let (mut tl, mut th) = (0.0, 1.0);
        let side = pred(a);
        let (mut xl, mut xh) = (a, b);
        for _ in 0..60 {
            if (xh[1] - xl[1]).abs() / EPS_WEIGHT < 1e-9 && (xh[0] - xl[0]).abs() < 1e-9 {
                break;
            }
            let tm = 0.5 * (tl + th);
            let Some(xm) = on_segment(a, b, tm) else { break };
            if pred(xm) == side {
                tl = tm;
                xl = xm;
            } else {
                th = tm;
                xh = xm;
            }
        }
        (xl, xh)
    };
    let bif = |kind, xl: [f64; 2], xh: [f64; 2], frequency| {
        let (el, eh) = (xl[1] / EPS_WEIGHT, xh[1] / EPS_WEIGHT);
        Bifurcation { kind, eps: 0.5 * (el + eh), eps_lo: el.min(eh), eps_hi: el.max(eh), frequency, class: class.clone() }
    };
    let mut bifs = Vec::new();
    let mut tp = [0.0, if eps_stop >= eps_start { 1.0 } else { -1.0 }];
    for k in 0..pts.len().saturating_sub(1) {
        let (p, q) = (&pts[k], &pts[k + 1]);
        let (a, b) = (xs[k], xs[k + 1]);
        let ta = tangent(a, tp);
        let tb = tangent(b, ta);
        tp = ta;
        if (ta[1] > 0.0) != (tb[1] > 0.0) {
            let (xl, xh) = refine(a, b, &|x| Some(tangent(x, ta)[1] > 0.0));
            bifs.push(bif(BifurcationKind::Fold, xl, xh, 0.0));
        }
        if (p.det > 0.0) != (q.det > 0.0) {
            let (xl, xh) = refine(a, b, &|x| Some(two_cluster_det(x[0], na, nb, h, x[1] / EPS_WEIGHT) > 0.0));
            bifs.push(bif(BifurcationKind::LimitPoint, xl, xh, 0.0));
            continue;
        }
        if let (Some(v0), Some(v1)) = (p.verdict, q.verdict) {
            let (u0, u1) = (v0 == Verdict::Unstable, v1 == Verdict::Unstable);
            if u0 != u1 {
                let unstable = |x: [f64; 2]| two_cluster_at(x[0].rem_euclid(2.0 * PI), na, nb, h, x[1] / EPS_WEIGHT).ok().map(|r| r.1.is_unstable());
                let (xl, xh) = refine(a, b, &unstable);
                let side = if u0 { xl } else { xh };
                let rep = two_cluster_at(side[0].rem_euclid(2.0 * PI), na, nb, h, side[1] / EPS_WEIGHT).ok().map(|r| r.1);
                let (kind, frequency) = classify(rep.as_ref());
                bifs.push(bif(kind, xl, xh, frequency));
            }
        }
    }
    (pts, bifs)
}
