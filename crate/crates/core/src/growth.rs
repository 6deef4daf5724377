//! Growth of the resistance chain metric `R_r(x, y) / r` on gasket networks, and the
//! junction data behind the two-exponent crossover radius `r_inf(x, y)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::chain::{chain_profile, fit_rho_samples, ChainProfile, FitConfig, RhoFit};
use crate::error::{Error, Result};
use crate::gasket::{build_gasket, corner_coord, GasketGraph, GasketParams};

/// Corner pairs as indices into `GasketGraph::corners`, with their names.
pub const CORNER_PAIRS: [(usize, usize, &str); 3] = [(1, 2, "p2-p3"), (0, 1, "p1-p2"), (0, 2, "p1-p3")];

/// Offset of the chain grid in units of the contraction exponent.
pub const GRID_OFFSET: f64 = 0.5;

/// `eps_k = ratio^(k + GRID_OFFSET)` for `k = -2, -1, 0, ...` down to one step below
/// `floor`, increasing. Distances are taken relative to a unit diameter.
pub fn cell_eps_grid(ratio: f64, floor: f64) -> Vec<f64> {
    assert!(ratio > 0.0 && ratio < 1.0 && floor > 0.0);
    let mut v = Vec::new();
    let mut k = -2i32;
    loop {
        let e = ratio.powf(k as f64 + GRID_OFFSET);
        v.push(e);
        if e < floor {
            break;
        }
        k += 1;
    }
    v.reverse();
    v
}

/// One level of [`corner_chain_growth`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelGrowth {
    pub level: usize,
    /// Resistance diameter before normalization; distances below are divided by it.
    pub diam: f64,
    pub profile: ChainProfile,
    /// `d_eps / eps` at the smallest `eps` with a finite chain, per corner pair.
    pub finest_ratio: Vec<Option<(f64, f64)>>,
    /// Single-level exponent per corner pair.
    pub exponents: Vec<Option<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairGrowth {
    pub pair: String,
    /// `gamma2` for the bottom side, `gamma1` for the pairs through `p1`.
    pub predicted: f64,
    /// Fit pooled over all levels, `None` with fewer than five usable samples.
    pub fit: Option<RhoFit>,
    pub n_samples: usize,
    /// Crossover radius `r_inf` at the finest level (`None` unless `gamma1 > gamma2`).
    pub r_infinity: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CornerGrowth {
    pub params: GasketParams,
    pub levels: Vec<LevelGrowth>,
    pub pairs: Vec<PairGrowth>,
    /// Exponent pooled over all pairs and levels.
    pub pooled: Option<RhoFit>,
}

/// Chain profiles of the corner pairs over `levels`, with pooled exponent fits.
pub fn corner_chain_growth(params: &GasketParams, levels: &[usize]) -> Result<CornerGrowth> {
    if levels.is_empty() {
        return Err(Error::InvalidInput("corner_chain_growth needs at least one level".into()));
    }
    let ratio = params.sigma.max(params.tau);
    let cfg = FitConfig::default();
    let mut out_levels = Vec::new();
    let mut per_pair: Vec<Vec<(usize, f64, f64, f64)>> = vec![Vec::new(); CORNER_PAIRS.len()];
    let mut pooled = Vec::new();
    let mut last: Option<(GasketGraph, Vec<f64>)> = None;
    for &level in levels {
        let graph = build_gasket(params, level)?;
        let space = graph.resistance_space()?;
        let diam = space.diameter();
        let space = space.scaled(1.0 / diam);
        let grid = cell_eps_grid(ratio, space.min_separation());
        let pairs: Vec<(usize, usize)> = CORNER_PAIRS
            .iter()
            .map(|&(a, b, _)| (graph.corners[a], graph.corners[b]))
            .collect();
        let profile = chain_profile(&space, &pairs, &grid)?;
        let samples = profile.samples(cfg.min_ratio);
        let mut exponents = Vec::new();
        let mut finest = Vec::new();
        for (i, row) in profile.values.iter().enumerate() {
            let own: Vec<_> = samples.iter().copied().filter(|s| s.0 == i).collect();
            exponents.push(fit_rho_samples(&own, CORNER_PAIRS.len(), &cfg).ok().map(|f| f.gamma));
            finest.push(
                row.iter()
                    .zip(&profile.eps_grid)
                    .find_map(|(v, &e)| v.map(|de| (e, de / e))),
            );
            per_pair[i].extend(own.iter().map(|s| (0, s.1, s.2, s.3)));
        }
        pooled.extend(samples);
        if Some(level) == levels.iter().copied().max() {
            let rmat = (0..space.len())
                .flat_map(|x| space.row(x).to_vec())
                .collect::<Vec<f64>>();
            last = Some((graph.clone(), rmat));
        }
        out_levels.push(LevelGrowth {
            level,
            diam,
            profile,
            finest_ratio: finest,
            exponents,
        });
    }
    let (graph, rmat) = last.expect("at least one level");
    let pairs = CORNER_PAIRS
        .iter()
        .enumerate()
        .map(|(i, &(a, b, name))| {
            let fit = fit_rho_samples(&per_pair[i], 1, &cfg).ok();
            let r_infinity = junction(&graph, &rmat, graph.corners[a], graph.corners[b])
                .and_then(|j| r_infinity(&j, params.gamma1, params.gamma2));
            PairGrowth {
                pair: name.to_string(),
                predicted: if a == 1 { params.gamma2 } else { params.gamma1 },
                fit,
                n_samples: per_pair[i].len(),
                r_infinity,
            }
        })
        .collect();
    Ok(CornerGrowth {
        params: *params,
        levels: out_levels,
        pairs,
        pooled: fit_rho_samples(&pooled, CORNER_PAIRS.len(), &cfg).ok(),
    })
}

/// Adjacent cells `K_omega` (containing `x`) and `K_omega'` (containing `y`) meeting at `q`,
/// with the distances to the horizontal lines through `q`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Junction {
    pub omega: Vec<u8>,
    pub omega_prime: Vec<u8>,
    pub q: usize,
    /// `R^-(x, q)`: distance from `x` to the points of `K_omega` level with `q`.
    pub r_minus_x: f64,
    pub r_minus_y: f64,
    pub r_xy: f64,
}

/// Junction data of `(x, y)` from the cell structure; `rmat` is the row-major distance
/// matrix in use. `None` when `x` and `y` share a finest-level cell.
pub fn junction(graph: &GasketGraph, rmat: &[f64], x: usize, y: usize) -> Option<Junction> {
    let n = graph.len();
    if x == y {
        return None;
    }
    let cells = graph.vertex_cells();
    let mut best: Option<(usize, Vec<u8>, Vec<u8>)> = None;
    for &cx in &cells[x] {
        for &cy in &cells[y] {
            let (wx, wy) = (graph.cell_word(cx), graph.cell_word(cy));
            let l = wx.iter().zip(&wy).take_while(|(a, b)| a == b).count();
            if best.as_ref().map_or(true, |b| l > b.0) {
                best = Some((l, wx, wy));
            }
        }
    }
    let (l, wx, wy) = best?;
    if l == graph.level {
        return None;
    }
    let omega = wx[..=l].to_vec();
    let omega_prime = wy[..=l].to_vec();
    let index: HashMap<(u32, u32), usize> = graph
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v.coord, i))
        .collect();
    // q = F_omega(p_k) with k the last letter of omega'
    let corner = corner_coord;
    let origin = |w: &[u8]| -> (u32, u32) {
        let mut o = (0u32, 0u32);
        for (k, &i) in w.iter().enumerate() {
            let (a, b) = corner(i);
            let shift = (graph.level - 1 - k) as u32;
            o.0 += a << shift;
            o.1 += b << shift;
        }
        o
    };
    let o = origin(&omega);
    let (a, b) = corner(wy[l]);
    let shift = (graph.level - omega.len()) as u32;
    let q = *index.get(&(o.0 + (a << shift), o.1 + (b << shift)))?;
    let height = graph.vertices[q].coord.1;
    let level_dist = |from: usize, w: &[u8]| -> f64 {
        let n_sub = 3usize.pow((graph.level - w.len()) as u32);
        let mut start = 0usize;
        for &d in w {
            start = start * 3 + (d - 1) as usize;
        }
        start *= n_sub;
        graph.cells[start..start + n_sub]
            .iter()
            .flatten()
            .filter(|&&v| graph.vertices[v].coord.1 == height)
            .map(|&v| rmat[from * n + v])
            .fold(f64::INFINITY, f64::min)
    };
    Some(Junction {
        r_minus_x: level_dist(x, &omega),
        r_minus_y: level_dist(y, &omega_prime),
        omega,
        omega_prime,
        q,
        r_xy: rmat[x * n + y],
    })
}

/// `r_inf = (R^-(x,q) v R^-(y,q))^(g1/(g1-g2)) / R(x,y)^(g2/(g1-g2))`, defined for `g1 > g2`.
pub fn r_infinity(j: &Junction, gamma1: f64, gamma2: f64) -> Option<f64> {
    // at tau = 3/5 the two exponents agree up to round-off
    if !(gamma1 - gamma2 > GAMMA_GAP) {
        return None;
    }
    let m = j.r_minus_x.max(j.r_minus_y);
    let g = gamma1 - gamma2;
    Some(m.powf(gamma1 / g) / j.r_xy.powf(gamma2 / g))
}

/// Exponent gap below which the two growth regimes are treated as one.
pub const GAMMA_GAP: f64 = 1e-9;

/// Crossover radius read off a profile row: `log(d_eps/eps)` is fitted by
/// `max(a1 + g1 log(1/eps), a2 + g2 log(1/eps))` with the exponents fixed, choosing the
/// split between the two branches by least squares; returns where the branches meet.
pub fn measured_crossover(eps: &[f64], d_eps: &[Option<f64>], d: f64, gamma1: f64, gamma2: f64) -> Option<f64> {
    if !(gamma1 - gamma2 > GAMMA_GAP) {
        return None;
    }
    let mut pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(d_eps)
        .filter_map(|(&e, v)| v.filter(|_| e < d).map(|de| ((1.0 / e).ln(), (de / e).ln())))
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut best: Option<(f64, f64)> = None;
    for s in 2..pts.len().saturating_sub(1) {
        let (outer, inner) = pts.split_at(s);
        let a2 = outer.iter().map(|p| p.1 - gamma2 * p.0).sum::<f64>() / outer.len() as f64;
        let a1 = inner.iter().map(|p| p.1 - gamma1 * p.0).sum::<f64>() / inner.len() as f64;
        let sse: f64 = pts.iter().map(|p| (p.1 - (a1 + gamma1 * p.0).max(a2 + gamma2 * p.0)).powi(2)).sum();
        if best.map_or(true, |b| sse < b.0) {
            best = Some((sse, (a2 - a1) / (gamma1 - gamma2)));
        }
    }
    best.map(|(_, x)| (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_offset_geometric() {
        let g = cell_eps_grid(0.6, 0.01);
        assert!(g[0] < 0.01 && g[1] >= 0.01);
        assert!((g.last().unwrap() - 0.6f64.powf(-1.5)).abs() < 1e-12);
        for w in g.windows(2) {
            assert!((w[0] / w[1] - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn crossover_recovered_from_synthetic_profile() {
        let (g1, g2, rc) = (1.45, 1.15, 0.02f64);
        let eps: Vec<f64> = (0..40).map(|k| 0.9 * 0.8f64.powi(k)).collect();
        // continuous two-branch profile meeting at rc
        let vals: Vec<Option<f64>> = eps
            .iter()
            .map(|&e| {
                let x = (1.0 / e).ln();
                let xc = (1.0 / rc).ln();
                let y = (g2 * x).max(g1 * x - (g1 - g2) * xc);
                Some(e * y.exp())
            })
            .collect();
        let m = measured_crossover(&eps, &vals, 1.0, g1, g2).unwrap();
        assert!((m / rc - 1.0).abs() < 0.15, "{m}");
        assert!(measured_crossover(&eps, &vals, 1.0, g2, g1).is_none());
    }

    #[test]
    fn corner_junctions() {
        let p = GasketParams::from_tau(0.55).unwrap();
        let g = build_gasket(&p, 3).unwrap();
        let r = g.resistance_matrix().unwrap();
        let [p1, p2, p3] = g.corners;
        // the bottom side meets at its own midpoint, level with p2 and p3
        let j = junction(&g, &r, p2, p3).unwrap();
        assert_eq!((j.omega.as_slice(), j.omega_prime.as_slice()), (&[2u8][..], &[3u8][..]));
        assert_eq!(j.r_minus_x, 0.0);
        assert_eq!(j.r_minus_y, 0.0);
        let j = junction(&g, &r, p1, p2).unwrap();
        assert!(j.r_minus_x > 0.0);
        assert_eq!(r_infinity(&junction(&g, &r, p2, p3).unwrap(), p.gamma1, p.gamma2), Some(0.0));
        assert!(junction(&g, &r, g.cells[0][0], g.cells[0][1]).is_none());
    }
}
