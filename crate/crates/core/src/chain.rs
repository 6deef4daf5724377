//! Chain distances `d_eps` on finite metric spaces.
//!
//! `d_eps(x, y)` is the length of the shortest chain from `x` to `y` whose hops are all
//! strictly shorter than `eps`; `None` stands for an infinite value (no such chain).

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::linear_fit;
use crate::scale::{apply_f, apply_f_inverse, ScaleFunction};

/// Points with a symmetric distance matrix stored row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiniteMetricSpace {
    pub labels: Vec<String>,
    dist: Vec<f64>,
}

impl FiniteMetricSpace {
    /// Checks shape, symmetry, zero diagonal and positivity off the diagonal.
    pub fn new(labels: Vec<String>, dist: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if dist.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "distance matrix has {} entries, expected {}",
                dist.len(),
                n * n
            )));
        }
        for x in 0..n {
            if dist[x * n + x] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {x}")));
            }
            for y in 0..n {
                let d = dist[x * n + y];
                if !d.is_finite() || (x != y && d <= 0.0) {
                    return Err(Error::InvalidInput(format!("invalid distance at ({x}, {y}): {d}")));
                }
                if (d - dist[y * n + x]).abs() > 1e-12 * d.max(1.0) {
                    return Err(Error::InvalidInput(format!("asymmetric distance at ({x}, {y})")));
                }
            }
        }
        Ok(FiniteMetricSpace { labels, dist })
    }

    /// Points on the real line.
    pub fn from_line(points: &[f64]) -> Result<Self> {
        let n = points.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = (points[i] - points[j]).abs();
            }
        }
        Self::new(points.iter().map(|p| p.to_string()).collect(), dist)
    }

    /// Reads a row-major CSV with a header row of labels.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty distance CSV".into()))?
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let labels: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let n = labels.len();
        let mut dist = Vec::with_capacity(n * n);
        for (row, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::InvalidInput(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<&str> = line.split(',').collect();
            if vals.len() != n {
                return Err(Error::InvalidInput(format!(
                    "row {} has {} fields, expected {n}",
                    row + 1,
                    vals.len()
                )));
            }
            for v in vals {
                dist.push(v.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("row {}: cannot parse {v:?}", row + 1))
                })?);
            }
        }
        Self::new(labels, dist)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.labels.join(","))?;
        let n = self.len();
        for x in 0..n {
            let row: Vec<String> = (0..n).map(|y| crate::fmt_f64(self.dist[x * n + y])).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn d(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.len() + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let n = self.len();
        &self.dist[x * n..(x + 1) * n]
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest positive distance.
    pub fn min_separation(&self) -> f64 {
        self.dist
            .iter()
            .copied()
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Same space with every distance multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        FiniteMetricSpace {
            labels: self.labels.clone(),
            dist: self.dist.iter().map(|d| d * s).collect(),
        }
    }

    /// Largest violation of the triangle inequality over the given triples.
    pub fn triangle_violation(&self, triples: &[(usize, usize, usize)]) -> f64 {
        triples
            .iter()
            .map(|&(a, b, c)| self.d(a, c) - self.d(a, b) - self.d(b, c))
            .fold(0.0, f64::max)
    }

    /// Shortest `eps`-chain lengths from `x` to every point (dense Dijkstra).
    /// With a `target` the search stops once it is settled, and only that entry is exact.
    pub fn chain_row(&self, eps: f64, x: usize, target: Option<usize>) -> Vec<Option<f64>> {
        let n = self.len();
        let mut best = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        best[x] = 0.0;
        loop {
            let mut u = usize::MAX;
            let mut du = f64::INFINITY;
            for v in 0..n {
                if !done[v] && best[v] < du {
                    du = best[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if Some(u) == target {
                break;
            }
            let row = self.row(u);
            for v in 0..n {
                let w = row[v];
                if !done[v] && w < eps {
                    let cand = du + w;
                    if cand < best[v] {
                        best[v] = cand;
                    }
                }
            }
        }
        best.into_iter()
            .map(|b| if b.is_finite() { Some(b) } else { None })
            .collect()
    }

    /// `d_eps(x, y)`; `None` when no `eps`-chain connects them.
    pub fn chain_distance(&self, eps: f64, x: usize, y: usize) -> Option<f64> {
        if x == y {
            return Some(0.0);
        }
        let row = self.chain_row(eps, x, Some(y));
        row[y]
    }
}

/// `d_eps` for a list of pairs over an `eps` grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainProfile {
    pub pairs: Vec<(usize, usize)>,
    pub eps_grid: Vec<f64>,
    /// `values[i][j] = d_{eps_j}(pairs[i])`, `None` for infinity.
    pub values: Vec<Vec<Option<f64>>>,
    /// Raw distances `d(pairs[i])`.
    pub base: Vec<f64>,
}

/// Geometric grid from `hi` down by factor `ratio < 1` until below `lo`, returned increasing.
pub fn geometric_eps_grid(lo: f64, hi: f64, ratio: f64) -> Vec<f64> {
    assert!(ratio > 0.0 && ratio < 1.0 && lo > 0.0 && hi > lo);
    let mut v = vec![hi];
    while *v.last().unwrap() > lo {
        let next = v.last().unwrap() * ratio;
        v.push(next);
    }
    v.reverse();
    v
}

/// Batched chain distances; entries are made nonincreasing in `eps`.
pub fn chain_profile(space: &FiniteMetricSpace, pairs: &[(usize, usize)], eps_grid: &[f64]) -> Result<ChainProfile> {
    if eps_grid.len() < 2 || eps_grid.windows(2).any(|w| !(w[1] > w[0])) || eps_grid[0] <= 0.0 {
        return Err(Error::InvalidInput("eps grid must be positive and increasing".into()));
    }
    let n = space.len();
    if pairs.iter().any(|&(x, y)| x >= n || y >= n) {
        return Err(Error::InvalidInput("pair index out of range".into()));
    }
    let cells: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|i| (0..eps_grid.len()).map(move |j| (i, j)))
        .collect();
    let flat: Vec<Option<f64>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let (x, y) = pairs[i];
            space.chain_distance(eps_grid[j], x, y)
        })
        .collect();
    let m = eps_grid.len();
    let mut values: Vec<Vec<Option<f64>>> = flat.chunks(m).map(|c| c.to_vec()).collect();
    for row in &mut values {
        // larger eps admits a superset of chains
        for j in 1..m {
            if let (Some(prev), Some(cur)) = (row[j - 1], row[j]) {
                if cur > prev {
                    row[j] = Some(prev);
                }
            }
        }
    }
    let base = pairs.iter().map(|&(x, y)| space.d(x, y)).collect();
    Ok(ChainProfile {
        pairs: pairs.to_vec(),
        eps_grid: eps_grid.to_vec(),
        values,
        base,
    })
}

impl ChainProfile {
    /// CSV rows `x,y,eps,d,d_eps` with `inf` for infinite entries.
    pub fn write_csv<W: Write>(&self, mut w: W, labels: &[String]) -> std::io::Result<()> {
        writeln!(w, "x,y,eps,d,d_eps")?;
        for (i, &(x, y)) in self.pairs.iter().enumerate() {
            for (j, &eps) in self.eps_grid.iter().enumerate() {
                let v = match self.values[i][j] {
                    Some(v) => crate::fmt_f64(v),
                    None => "inf".to_string(),
                };
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    labels[x],
                    labels[y],
                    crate::fmt_f64(eps),
                    crate::fmt_f64(self.base[i]),
                    v
                )?;
            }
        }
        Ok(())
    }

    /// Finite samples `(pair index, eps, d, d_eps)` with `d / eps >= min_ratio`.
    pub fn samples(&self, min_ratio: f64) -> Vec<(usize, f64, f64, f64)> {
        let mut out = Vec::new();
        for (i, row) in self.values.iter().enumerate() {
            let d = self.base[i];
            for (j, v) in row.iter().enumerate() {
                let eps = self.eps_grid[j];
                if let Some(de) = v {
                    if d > 0.0 && eps < d && d / eps >= min_ratio {
                        out.push((i, eps, d, *de));
                    }
                }
            }
        }
        out
    }
}

/// Settings of [`fit_rho_exponent`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Samples with `d / eps` below this are dropped.
    pub min_ratio: f64,
    /// Residual spread (max minus min, natural log) above which the per-pair
    /// envelope exponents are reported.
    pub two_sided_spread: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            min_ratio: 3.0,
            two_sided_spread: 0.5,
        }
    }
}

/// Least-squares chain exponent with its comparability constants.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RhoFit {
    pub gamma: f64,
    /// Smallest observed `(d_eps/eps) / (d/eps)^gamma`.
    pub c_minus: f64,
    /// Largest observed `(d_eps/eps) / (d/eps)^gamma`.
    pub c_plus: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    /// Per-pair exponents `(gamma_low, gamma_high)` when one exponent does not fit.
    pub two_sided: Option<(f64, f64)>,
    pub per_pair: Vec<Option<f64>>,
    pub n_samples: usize,
}

/// Fits `log(d_eps/eps) = c + gamma log(d/eps)` over samples with `d/eps >= min_ratio`.
pub fn fit_rho_exponent(profile: &ChainProfile, cfg: &FitConfig) -> Result<RhoFit> {
    fit_rho_samples(&profile.samples(cfg.min_ratio), profile.pairs.len(), cfg)
}

/// [`fit_rho_exponent`] on explicit samples `(pair index, eps, d, d_eps)`, e.g. pooled
/// from several spaces. `min_ratio` is assumed already applied.
pub fn fit_rho_samples(samples: &[(usize, f64, f64, f64)], n_pairs: usize, cfg: &FitConfig) -> Result<RhoFit> {
    if samples.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "{} finite samples with d/eps >= {}",
            samples.len(),
            cfg.min_ratio
        )));
    }
    let x: Vec<f64> = samples.iter().map(|s| (s.2 / s.1).ln()).collect();
    let y: Vec<f64> = samples.iter().map(|s| (s.3 / s.1).ln()).collect();
    let (intercept, gamma) = linear_fit(&x, &y);
    let residuals: Vec<f64> = x.iter().zip(&y).map(|(a, b)| b - intercept - gamma * a).collect();
    let dev: Vec<f64> = x.iter().zip(&y).map(|(a, b)| b - gamma * a).collect();
    let c_minus = dev.iter().copied().fold(f64::INFINITY, f64::min).exp();
    let c_plus = dev.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp();

    let per_pair: Vec<Option<f64>> = (0..n_pairs)
        .map(|i| {
            let (px, py): (Vec<f64>, Vec<f64>) = samples
                .iter()
                .enumerate()
                .filter(|(_, s)| s.0 == i)
                .map(|(k, _)| (x[k], y[k]))
                .unzip();
            if px.len() >= 3 {
                Some(linear_fit(&px, &py).1)
            } else {
                None
            }
        })
        .collect();
    let spread = residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - residuals.iter().copied().fold(f64::INFINITY, f64::min);
    let two_sided = if spread > cfg.two_sided_spread {
        let g: Vec<f64> = per_pair.iter().flatten().copied().collect();
        if g.len() >= 2 {
            Some((
                g.iter().copied().fold(f64::INFINITY, f64::min),
                g.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ))
        } else {
            None
        }
    } else {
        None
    };
    Ok(RhoFit {
        gamma,
        c_minus,
        c_plus,
        intercept,
        residuals,
        two_sided,
        per_pair,
        n_samples: samples.len(),
    })
}

/// Ratio statistics of `F_{rho,eps}(d_eps)/d` at one `eps`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SandwichRow {
    pub eps: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max(max_ratio, 1/min_ratio)`.
    pub c: f64,
    /// Same for the inverse form `F^{-1}(d)/d_eps`.
    pub c_inverse: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SandwichReport {
    pub rows: Vec<SandwichRow>,
    pub c: f64,
    pub c_inverse: f64,
    /// `max C(eps) / min C(eps)` over rows with samples.
    pub drift: f64,
}

/// Empirical constants of `C^-1 d <= F_{rho,eps}(d_eps) <= C d` per `eps`.
pub fn check_transform_sandwich(
    space: &FiniteMetricSpace,
    rho: &ScaleFunction,
    eps_grid: &[f64],
    pairs: &[(usize, usize)],
) -> Result<SandwichReport> {
    rho.validate()?;
    let profile = chain_profile(space, pairs, eps_grid)?;
    Ok(sandwich_from_profile(&profile, rho))
}

/// [`check_transform_sandwich`] on a precomputed profile.
pub fn sandwich_from_profile(profile: &ChainProfile, rho: &ScaleFunction) -> SandwichReport {
    let mut rows = Vec::new();
    for (j, &eps) in profile.eps_grid.iter().enumerate() {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        let mut inv_lo = f64::INFINITY;
        let mut inv_hi = 0.0_f64;
        let mut count = 0;
        for (i, row) in profile.values.iter().enumerate() {
            let d = profile.base[i];
            if d <= 0.0 {
                continue;
            }
            if let Some(de) = row[j] {
                let r = apply_f(rho, eps, de) / d;
                lo = lo.min(r);
                hi = hi.max(r);
                let ri = apply_f_inverse(rho, eps, d) / de;
                inv_lo = inv_lo.min(ri);
                inv_hi = inv_hi.max(ri);
                count += 1;
            }
        }
        if count > 0 {
            rows.push(SandwichRow {
                eps,
                min_ratio: lo,
                max_ratio: hi,
                c: hi.max(1.0 / lo),
                c_inverse: inv_hi.max(1.0 / inv_lo),
                samples: count,
            });
        }
    }
    let c = rows.iter().map(|r| r.c).fold(1.0, f64::max);
    let c_inverse = rows.iter().map(|r| r.c_inverse).fold(1.0, f64::max);
    let cmin = rows.iter().map(|r| r.c).fold(f64::INFINITY, f64::min);
    let drift = if rows.is_empty() { f64::NAN } else { c / cmin };
    SandwichReport { rows, c, c_inverse, drift }
}

/// Largest `eps` with `(phi(eps)/eps) d_eps(x, y) <= t`.
///
/// Above `d(x, y)` the chain distance equals `d`, so that range is solved directly.
/// Below it the feasible set is located on `grid` and refined by bisection; once both
/// ends of the bracket see the same `d_eps` the remaining equation is solved exactly.
pub fn solve_epsilon_star(
    space: &FiniteMetricSpace,
    phi: &ScaleFunction,
    x: usize,
    y: usize,
    t: f64,
    grid: &[f64],
) -> Result<f64> {
    let d = space.d(x, y);
    if !(d > 0.0) {
        return Err(Error::InvalidInput("solve_epsilon_star needs d(x,y) > 0".into()));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidInput("t must be positive".into()));
    }
    // eps with phi(eps)/eps = target, phi(eps)/eps assumed increasing
    let solve_h = |target: f64| -> f64 {
        let g = |le: f64| phi.ln_eval(le) - le - target.ln();
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        while g(lo) > 0.0 && lo > -1e4 {
            lo *= 2.0;
        }
        while g(hi) < 0.0 && hi < 1e4 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 {
                break;
            }
        }
        (0.5 * (lo + hi)).exp()
    };
    let top = solve_h(t / d);
    if top > d {
        return Ok(top);
    }
    let value = |eps: f64| -> Option<(f64, f64)> {
        space
            .chain_distance(eps, x, y)
            .map(|de| (phi.value(eps) / eps * de, de))
    };
    let feasible = |eps: f64| value(eps).map(|(g, _)| g <= t).unwrap_or(false);
    let mut cands: Vec<f64> = grid.iter().copied().filter(|&e| e < d).collect();
    cands.push(d);
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = (0..cands.len())
        .rev()
        .find(|&k| feasible(cands[k]))
        .ok_or_else(|| Error::TimeTooSmall(format!("no eps in [{:e}, {d:e}] reaches t={t:e}", cands[0])))?;
    let mut lo = cands[k];
    let mut hi = if k + 1 < cands.len() { cands[k + 1] } else { d * (1.0 + 1e-12) };
    for _ in 0..200 {
        let dlo = space.chain_distance(lo, x, y);
        let dhi = space.chain_distance(hi, x, y);
        if let (Some(a), Some(b)) = (dlo, dhi) {
            if a == b {
                return Ok(solve_h(t / a).clamp(lo, hi));
            }
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
        let mid = (lo * hi).sqrt();
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> FiniteMetricSpace {
        FiniteMetricSpace::from_line(&[0.0, 0.4, 1.0]).unwrap()
    }

    #[test]
    fn chain_distance_examples() {
        let s = line();
        assert_eq!(s.chain_distance(1.1, 0, 2), Some(1.0));
        assert!((s.chain_distance(0.7, 0, 2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(s.chain_distance(0.5, 0, 2), None);
        assert_eq!(s.chain_distance(0.01, 1, 1), Some(0.0));
        // strict inequality: a hop of exactly eps is not allowed
        assert_eq!(s.chain_distance(0.6, 0, 2), None);
    }

    #[test]
    fn profile_large_eps_is_raw_distance() {
        let s = line();
        let p = chain_profile(&s, &[(0, 2), (1, 1)], &geometric_eps_grid(0.1, 2.0, 0.8)).unwrap();
        assert_eq!(*p.values[0].last().unwrap(), Some(1.0));
        assert!(p.values[1].iter().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn epsilon_star_examples() {
        let s = line();
        let phi = ScaleFunction::power(2.0);
        let grid = geometric_eps_grid(0.05, 1.0, 0.98);
        let e = solve_epsilon_star(&s, &phi, 0, 2, 2.0, &grid).unwrap();
        assert!((e - 2.0).abs() < 1e-10);
        let e = solve_epsilon_star(&s, &phi, 0, 2, 0.8, &grid).unwrap();
        assert!((e - 0.8).abs() < 1e-10, "{e}");
        assert!(matches!(
            solve_epsilon_star(&s, &phi, 0, 2, 0.5, &grid),
            Err(Error::TimeTooSmall(_))
        ));
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let s = line();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = FiniteMetricSpace::from_csv(&buf[..]).unwrap();
        assert_eq!(back.d(0, 2), 1.0);
        assert!(FiniteMetricSpace::from_csv("a,b\n0,1\n1\n".as_bytes()).is_err());
        assert!(FiniteMetricSpace::from_csv("a,b\n0,x\n1,0\n".as_bytes()).is_err());
        assert!(FiniteMetricSpace::from_csv("a,b\n0,1\n2,0\n".as_bytes()).is_err());
    }

    #[test]
    fn segment_gives_unit_exponent() {
        let pts: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
        let s = FiniteMetricSpace::from_line(&pts).unwrap();
        let pairs = [(0, 200), (10, 150), (50, 90)];
        let grid = geometric_eps_grid(0.006, 0.5, 0.7);
        let p = chain_profile(&s, &pairs, &grid).unwrap();
        let f = fit_rho_exponent(&p, &FitConfig::default()).unwrap();
        assert!((f.gamma - 1.0).abs() < 0.02, "{}", f.gamma);
    }
}
