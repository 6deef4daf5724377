//! Weighted Sierpinski gasket approximations built from the one-parameter
//! renormalization family `tau in (1/2, 1)`.

use std::collections::HashMap;

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::chain::FiniteMetricSpace;
use crate::error::{Error, Result};
use crate::numeric::bisect_root;

/// Largest level accepted by [`build_gasket`].
pub const MAX_LEVEL: usize = 12;

/// `f_tau(sigma)`, whose root in `(1 - tau, 1)` is the renormalized side weight.
pub fn f_tau(tau: f64, sigma: f64) -> f64 {
    2.0 * (2.0 * tau - 1.0) * sigma * sigma
        + 2.0 * (tau * tau - 3.0 * tau + 1.0) * sigma
        + tau * (1.0 - tau * tau)
}

/// `lambda tau (1 + tau - 2 sigma) - (1 - tau) sigma`.
pub fn lambda_residual(tau: f64, sigma: f64, lambda: f64) -> f64 {
    lambda * tau * (1.0 + tau - 2.0 * sigma) - (1.0 - tau) * sigma
}

/// Solves the renormalization system for `(sigma, lambda)`.
pub fn solve_renormalization(tau: f64) -> Result<(f64, f64)> {
    if !tau.is_finite() || tau >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "tau must lie in (1/2, 1), got {tau}"
        )));
    }
    if tau <= 0.5 {
        return Err(Error::NoResistanceForm(tau));
    }
    let sigma = bisect_root(|s| f_tau(tau, s), 1.0 - tau, 1.0, 0.0)?;
    let lambda = (1.0 - tau) * sigma / (tau * (1.0 + tau - 2.0 * sigma));
    Ok((sigma, lambda))
}

/// Root of the increasing-in-`x` equation `g(x) = 0` with `g(0.5) < 0`, widening the
/// upper end of `[0.5, 10]` until it brackets.
fn exponent_root<G: Fn(f64) -> f64>(g: G) -> Result<f64> {
    let mut hi = 10.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Numerical("exponent root out of range".into()));
        }
    }
    bisect_root(g, 0.5, hi, 0.0)
}

/// `(alpha*, beta*, gamma1, gamma2)` from the Moran equations
/// `sigma^a + 2 tau^a = 1`, `sigma^g1 + tau^g1 = 1`, `2 tau^g2 = 1`.
pub fn moran_exponents(sigma: f64, tau: f64) -> Result<(f64, f64, f64, f64)> {
    if !(sigma > 0.0 && sigma < 1.0 && tau > 0.0 && tau < 1.0 && sigma + tau > 1.0) {
        return Err(Error::InvalidInput(format!(
            "moran exponents need sigma, tau in (0,1) with sigma + tau > 1 (sigma={sigma}, tau={tau})"
        )));
    }
    let alpha = exponent_root(|a| 1.0 - sigma.powf(a) - 2.0 * tau.powf(a))?;
    let g1 = exponent_root(|g| 1.0 - sigma.powf(g) - tau.powf(g))?;
    let g2 = exponent_root(|g| 1.0 - 2.0 * tau.powf(g))?;
    Ok((alpha, alpha + 1.0, g1, g2))
}

/// Renormalized parameters of the `tau` gasket.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GasketParams {
    pub tau: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub alpha_star: f64,
    pub beta_star: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

/// Residuals of every defining equation of [`GasketParams`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ParamResiduals {
    pub renormalization: f64,
    pub lambda: f64,
    pub moran: f64,
    pub side_moran_1: f64,
    pub side_moran_2: f64,
    pub beta_minus_alpha: f64,
    pub sigma_plus_tau_gt_1: bool,
    pub gamma1_lt_alpha: bool,
}

impl ParamResiduals {
    /// True when every equation holds to `tol` and the two strict inequalities hold.
    pub fn all_within(&self, tol: f64) -> bool {
        [
            self.renormalization,
            self.lambda,
            self.moran,
            self.side_moran_1,
            self.side_moran_2,
            self.beta_minus_alpha - 1.0,
        ]
        .iter()
        .all(|r| r.abs() < tol)
            && self.sigma_plus_tau_gt_1
            && self.gamma1_lt_alpha
    }
}

impl GasketParams {
    pub fn from_tau(tau: f64) -> Result<Self> {
        let (sigma, lambda) = solve_renormalization(tau)?;
        let (alpha_star, beta_star, gamma1, gamma2) = moran_exponents(sigma, tau)?;
        Ok(GasketParams {
            tau,
            sigma,
            lambda,
            alpha_star,
            beta_star,
            gamma1,
            gamma2,
        })
    }

    /// Conductance weights `(w1, w2, w3) = (1/sigma, 1/tau, 1/tau)`.
    pub fn weights(&self) -> [f64; 3] {
        [1.0 / self.sigma, 1.0 / self.tau, 1.0 / self.tau]
    }

    /// Cell masses `(sigma^a, tau^a, tau^a)`.
    pub fn masses(&self) -> [f64; 3] {
        let t = self.tau.powf(self.alpha_star);
        [self.sigma.powf(self.alpha_star), t, t]
    }

    /// Level-0 triangle conductances `(c12, c13, c23)`.
    pub fn base_conductances(&self) -> [f64; 3] {
        // Delta-Y with star coefficients (1/lambda, 1, 1)
        let a = [1.0 / self.lambda, 1.0, 1.0];
        let s: f64 = a.iter().sum();
        [a[0] * a[1] / s, a[0] * a[2] / s, a[1] * a[2] / s]
    }

    pub fn residuals(&self) -> ParamResiduals {
        let (s, t) = (self.sigma, self.tau);
        ParamResiduals {
            renormalization: f_tau(t, s),
            lambda: lambda_residual(t, s, self.lambda),
            moran: s.powf(self.alpha_star) + 2.0 * t.powf(self.alpha_star) - 1.0,
            side_moran_1: s.powf(self.gamma1) + t.powf(self.gamma1) - 1.0,
            side_moran_2: 2.0 * t.powf(self.gamma2) - 1.0,
            beta_minus_alpha: self.beta_star - self.alpha_star,
            sigma_plus_tau_gt_1: s + t > 1.0,
            gamma1_lt_alpha: self.gamma1 < self.alpha_star,
        }
    }
}

/// A vertex with its canonical address: the lexicographically smallest `(word, corner)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    /// Cell word over `{1, 2, 3}`.
    pub word: Vec<u8>,
    /// Corner `1..=3` of that cell.
    pub corner: u8,
    /// Position in units of `2^-level`, in the basis `(p3, p1)` with `p2` at the origin.
    pub coord: (u32, u32),
}

impl Vertex {
    pub fn address(&self) -> String {
        let w: String = self.word.iter().map(|d| char::from(b'0' + d)).collect();
        format!("{w}:{}", self.corner)
    }

    /// Cartesian position in the plane.
    pub fn position(&self, level: usize) -> (f64, f64) {
        let h = 0.5f64.powi(level as i32);
        let (a, b) = (self.coord.0 as f64 * h, self.coord.1 as f64 * h);
        (a + 0.5 * b, b * 3f64.sqrt() / 2.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub conductance: f64,
}

/// Level-`n` weighted gasket network.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GasketGraph {
    pub params: GasketParams,
    pub level: usize,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub measure: Vec<f64>,
    /// Indices of `p1, p2, p3`.
    pub corners: [usize; 3],
    /// Vertex indices of each level-`n` cell's corners, cells in lexicographic order.
    #[serde(skip)]
    pub cells: Vec<[usize; 3]>,
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, f64)>>,
}

/// Integer offset of corner `p` in the basis `(p3, p1)`.
pub(crate) fn corner_coord(p: u8) -> (u32, u32) {
    match p {
        1 => (0, 1),
        2 => (0, 0),
        _ => (1, 0),
    }
}

/// Builds the level-`level` network.
pub fn build_gasket(params: &GasketParams, level: usize) -> Result<GasketGraph> {
    if level > MAX_LEVEL {
        return Err(Error::InvalidInput(format!(
            "level {level} exceeds the cap {MAX_LEVEL}"
        )));
    }
    let weights = params.weights();
    let masses = params.masses();
    let base = params.base_conductances();
    let n_cells = 3usize.pow(level as u32);
    let n_vertices = (3usize.pow(level as u32 + 1) + 3) / 2;

    let mut index: HashMap<(u32, u32), usize> = HashMap::with_capacity(n_vertices);
    let mut vertices = Vec::with_capacity(n_vertices);
    let mut measure = Vec::with_capacity(n_vertices);
    let mut edges = Vec::with_capacity(3 * n_cells);
    let mut cells = Vec::with_capacity(n_cells);

    let mut word = vec![1u8; level];
    for _ in 0..n_cells {
        let mut origin = (0u32, 0u32);
        let mut w = 1.0;
        let mut m = 1.0;
        for (k, &i) in word.iter().enumerate() {
            let (a, b) = corner_coord(i);
            let shift = (level - 1 - k) as u32;
            origin.0 += a << shift;
            origin.1 += b << shift;
            w *= weights[(i - 1) as usize];
            m *= masses[(i - 1) as usize];
        }
        let mut ids = [0usize; 3];
        for j in 1..=3u8 {
            let (a, b) = corner_coord(j);
            let key = (origin.0 + a, origin.1 + b);
            let id = *index.entry(key).or_insert_with(|| {
                vertices.push(Vertex {
                    word: word.clone(),
                    corner: j,
                    coord: key,
                });
                measure.push(0.0);
                vertices.len() - 1
            });
            measure[id] += m / 3.0;
            ids[(j - 1) as usize] = id;
        }
        edges.push(Edge {
            a: ids[0],
            b: ids[1],
            conductance: w * base[0],
        });
        edges.push(Edge {
            a: ids[0],
            b: ids[2],
            conductance: w * base[1],
        });
        edges.push(Edge {
            a: ids[1],
            b: ids[2],
            conductance: w * base[2],
        });
        cells.push(ids);
        // next word in lexicographic order
        for k in (0..level).rev() {
            if word[k] < 3 {
                word[k] += 1;
                break;
            }
            word[k] = 1;
        }
    }
    debug_assert_eq!(vertices.len(), n_vertices);
    let top = 1u32 << level;
    let corners = [index[&(0, top)], index[&(0, 0)], index[&(top, 0)]];
    let mut adjacency = vec![Vec::new(); vertices.len()];
    for e in &edges {
        adjacency[e.a].push((e.b, e.conductance));
        adjacency[e.b].push((e.a, e.conductance));
    }
    Ok(GasketGraph {
        params: *params,
        level,
        vertices,
        edges,
        measure,
        corners,
        cells,
        adjacency,
    })
}

impl GasketGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Index of the ground node `p2`.
    pub fn ground(&self) -> usize {
        self.corners[1]
    }

    /// Neighbours with conductances.
    pub fn neighbours(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    /// Dense weighted Laplacian `sum c_xy (f(x) - f(y))`.
    pub fn laplacian(&self) -> Mat<f64> {
        let n = self.len();
        let mut l = Mat::<f64>::zeros(n, n);
        for e in &self.edges {
            l[(e.a, e.b)] -= e.conductance;
            l[(e.b, e.a)] -= e.conductance;
            l[(e.a, e.a)] += e.conductance;
            l[(e.b, e.b)] += e.conductance;
        }
        l
    }

    fn apply_laplacian(&self, u: &[f64], out: &mut [f64]) {
        for (x, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for &(y, c) in &self.adjacency[x] {
                s += c * (u[x] - u[y]);
            }
            *o = s;
        }
    }

    /// Effective resistance by preconditioned conjugate gradient on the system grounded at `p2`.
    pub fn effective_resistance(&self, x: usize, y: usize) -> Result<f64> {
        let n = self.len();
        if x >= n || y >= n {
            return Err(Error::InvalidInput("vertex index out of range".into()));
        }
        if x == y {
            return Ok(0.0);
        }
        let g = self.ground();
        let mut b = vec![0.0; n];
        b[x] += 1.0;
        b[y] -= 1.0;
        b[g] = 0.0;
        let u = self.cg_grounded(&b, 1e-12)?;
        Ok(u[x] - u[y])
    }

    fn cg_grounded(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let g = self.ground();
        let diag: Vec<f64> = (0..n)
            .map(|x| self.adjacency[x].iter().map(|&(_, c)| c).sum::<f64>())
            .collect();
        let mut u = vec![0.0; n];
        let mut r = b.to_vec();
        let mut z: Vec<f64> = (0..n)
            .map(|i| if i == g { 0.0 } else { r[i] / diag[i] })
            .collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        for _ in 0..(20 * n).max(1000) {
            self.apply_laplacian(&p, &mut ap);
            ap[g] = 0.0;
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                return Err(Error::Disconnected);
            }
            let alpha = rz / pap;
            for i in 0..n {
                u[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rnorm <= tol * bnorm {
                return Ok(u);
            }
            for i in 0..n {
                z[i] = if i == g { 0.0 } else { r[i] / diag[i] };
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::Numerical(
            "conjugate gradient did not converge".into(),
        ))
    }

    /// All-pairs effective resistance (row-major `n x n`) from the inverse of the
    /// grounded Laplacian: `R(x,y) = G_xx + G_yy - 2 G_xy`.
    pub fn resistance_matrix(&self) -> Result<Vec<f64>> {
        let n = self.len();
        let g = self.ground();
        let l = self.laplacian();
        let keep: Vec<usize> = (0..n).filter(|&i| i != g).collect();
        let m = keep.len();
        let reduced = Mat::<f64>::from_fn(m, m, |i, j| l[(keep[i], keep[j])]);
        let llt = reduced.llt(Side::Lower).map_err(|_| Error::Disconnected)?;
        let inv = llt.inverse();
        let mut green = vec![0.0; n * n];
        for (i, &a) in keep.iter().enumerate() {
            for (j, &b) in keep.iter().enumerate() {
                green[a * n + b] = inv[(i, j)];
            }
        }
        let mut r = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    r[x * n + y] =
                        (green[x * n + x] + green[y * n + y] - 2.0 * green[x * n + y]).max(0.0);
                }
            }
        }
        // symmetrize round-off
        for x in 0..n {
            for y in x + 1..n {
                let v = 0.5 * (r[x * n + y] + r[y * n + x]);
                r[x * n + y] = v;
                r[y * n + x] = v;
            }
        }
        Ok(r)
    }

    /// Sum of vertex shares over the level-`k` cell with word `w` (`k <= level`).
    pub fn cell_measure(&self, w: &[u8]) -> f64 {
        let k = w.len();
        let shift = self.level - k;
        let n_sub = 3usize.pow(shift as u32);
        // cells are stored in lexicographic order, so the subtree is contiguous
        let mut start = 0usize;
        for &d in w {
            start = start * 3 + (d - 1) as usize;
        }
        start *= n_sub;
        let masses = self.params.masses();
        let mut total = 0.0;
        for c in start..start + n_sub {
            let mut m = 1.0;
            let mut idx = c;
            for _ in 0..self.level {
                m *= masses[idx % 3];
                idx /= 3;
            }
            total += m;
        }
        total
    }

    /// The resistance metric as a [`FiniteMetricSpace`] labelled by address.
    pub fn resistance_space(&self) -> Result<FiniteMetricSpace> {
        FiniteMetricSpace::new(self.labels(), self.resistance_matrix()?)
    }

    /// The network of the cell `K_w` on its own, with the conductances it carries here.
    ///
    /// Its vertices keep their order of first appearance; `corners` are the images of
    /// `p1, p2, p3` under `F_w` and the measure is renormalized to total mass 1.
    pub fn sub_cell(&self, w: &[u8]) -> Result<GasketGraph> {
        let k = w.len();
        if k > self.level || w.iter().any(|d| !(1..=3).contains(d)) {
            return Err(Error::InvalidInput(format!("no cell with word {w:?} at level {}", self.level)));
        }
        let n_sub = 3usize.pow((self.level - k) as u32);
        let mut start = 0usize;
        for &d in w {
            start = start * 3 + (d - 1) as usize;
        }
        start *= n_sub;
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut cells = Vec::with_capacity(n_sub);
        for c in start..start + n_sub {
            let mut ids = [0usize; 3];
            for (j, &v) in self.cells[c].iter().enumerate() {
                ids[j] = *remap.entry(v).or_insert_with(|| {
                    vertices.push(self.vertices[v].clone());
                    vertices.len() - 1
                });
            }
            cells.push(ids);
        }
        let edges: Vec<Edge> = self.edges[3 * start..3 * (start + n_sub)]
            .iter()
            .map(|e| Edge {
                a: remap[&e.a],
                b: remap[&e.b],
                conductance: e.conductance,
            })
            .collect();
        let total = self.cell_measure(w);
        let mut measure = vec![0.0; vertices.len()];
        let masses = self.params.masses();
        for (c, ids) in cells.iter().enumerate() {
            let mut m = 1.0;
            let mut idx = start + c;
            for _ in 0..self.level {
                m *= masses[idx % 3];
                idx /= 3;
            }
            for &v in ids {
                measure[v] += m / 3.0 / total;
            }
        }
        // corner j of K_w is corner j of its extreme sub-cell w j j ... j
        let extreme = |j: usize| -> usize {
            let mut c = 0usize;
            for _ in 0..self.level - k {
                c = c * 3 + j;
            }
            cells[c][j]
        };
        let corners = [extreme(0), extreme(1), extreme(2)];
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for e in &edges {
            adjacency[e.a].push((e.b, e.conductance));
            adjacency[e.b].push((e.a, e.conductance));
        }
        Ok(GasketGraph {
            params: self.params,
            level: self.level - k,
            vertices,
            edges,
            measure,
            corners,
            cells,
            adjacency,
        })
    }

    /// Level-`level` cells containing each vertex (one or two per vertex).
    pub fn vertex_cells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.len()];
        for (c, ids) in self.cells.iter().enumerate() {
            for &v in ids {
                out[v].push(c);
            }
        }
        out
    }

    /// Word of the level-`level` cell with index `c`.
    pub fn cell_word(&self, c: usize) -> Vec<u8> {
        let mut w = vec![0u8; self.level];
        let mut idx = c;
        for k in (0..self.level).rev() {
            w[k] = (idx % 3) as u8 + 1;
            idx /= 3;
        }
        w
    }

    /// Labels of all vertices, by canonical address.
    pub fn labels(&self) -> Vec<String> {
        self.vertices.iter().map(|v| v.address()).collect()
    }

    /// Compact JSON with addresses, measure and edges.
    pub fn to_json(&self) -> serde_json::Value {
        let verts: Vec<serde_json::Value> = self
            .vertices
            .iter()
            .zip(&self.measure)
            .map(|(v, m)| {
                let (x, y) = v.position(self.level);
                serde_json::json!({"address": v.address(), "x": x, "y": y, "measure": m})
            })
            .collect();
        let edges: Vec<serde_json::Value> = self
            .edges
            .iter()
            .map(|e| serde_json::json!({"a": e.a, "b": e.b, "conductance": e.conductance}))
            .collect();
        serde_json::json!({
            "params": self.params,
            "level": self.level,
            "corners": self.corners,
            "vertices": verts,
            "edges": edges,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard() -> GasketParams {
        GasketParams::from_tau(0.6).unwrap()
    }

    #[test]
    fn renormalization_examples() {
        let (s, l) = solve_renormalization(0.6).unwrap();
        assert!((s - 0.6).abs() < 1e-12 && (l - 1.0).abs() < 1e-12);
        let (s, l) = solve_renormalization(0.55).unwrap();
        assert!((s - 0.68825).abs() < 1e-4, "{s}");
        assert!((l - 3.247).abs() < 5e-3, "{l}");
        assert!(matches!(
            solve_renormalization(0.5),
            Err(Error::NoResistanceForm(_))
        ));
        assert!(solve_renormalization(1.0).is_err());
    }

    #[test]
    fn exponents_standard() {
        let p = standard();
        let a = 3f64.ln() / (5.0f64 / 3.0).ln();
        let g = 2f64.ln() / (5.0f64 / 3.0).ln();
        assert!((p.alpha_star - a).abs() < 1e-9);
        assert!((p.gamma1 - g).abs() < 1e-9 && (p.gamma2 - g).abs() < 1e-9);
        assert!(p.residuals().all_within(1e-12));
    }

    #[test]
    fn level_zero_conductances() {
        let p = standard();
        let g = build_gasket(&p, 0).unwrap();
        assert_eq!(g.len(), 3);
        for e in &g.edges {
            assert!((e.conductance - 1.0 / 3.0).abs() < 1e-15);
        }
        let q = GasketParams::from_tau(0.7).unwrap();
        let c = q.base_conductances();
        let l = q.lambda;
        assert!((c[0] - 1.0 / (1.0 + 2.0 * l)).abs() < 1e-15);
        assert!((c[2] - l / (1.0 + 2.0 * l)).abs() < 1e-15);
    }

    #[test]
    fn counts_and_measure() {
        let p = standard();
        for n in 0..5 {
            let g = build_gasket(&p, n).unwrap();
            assert_eq!(g.len(), (3usize.pow(n as u32 + 1) + 3) / 2);
            assert_eq!(g.edges.len(), 3 * 3usize.pow(n as u32));
            assert!((g.measure.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(build_gasket(&p, 13).is_err());
    }

    #[test]
    fn resistance_examples() {
        let p = standard();
        let g = build_gasket(&p, 0).unwrap();
        assert!((g.effective_resistance(0, 1).unwrap() - 2.0).abs() < 1e-10);
        assert_eq!(g.effective_resistance(1, 1).unwrap(), 0.0);
        let g3 = build_gasket(&p, 3).unwrap();
        let r = g3.resistance_matrix().unwrap();
        let n = g3.len();
        let [a, b, c] = g3.corners;
        for (x, y) in [(a, b), (b, c), (a, c)] {
            assert!((r[x * n + y] - 2.0).abs() < 1e-9);
            assert!((g3.effective_resistance(x, y).unwrap() - r[x * n + y]).abs() < 1e-8);
        }
    }

    fn corner_resistances(g: &GasketGraph) -> [f64; 3] {
        let [a, b, c] = g.corners;
        [
            g.effective_resistance(a, b).unwrap(),
            g.effective_resistance(b, c).unwrap(),
            g.effective_resistance(a, c).unwrap(),
        ]
    }

    #[test]
    fn corner_resistance_is_level_invariant() {
        for tau in [0.55, 0.6, 0.8] {
            let p = GasketParams::from_tau(tau).unwrap();
            let r0 = corner_resistances(&build_gasket(&p, 0).unwrap());
            for n in 1..5 {
                let rn = corner_resistances(&build_gasket(&p, n).unwrap());
                for k in 0..3 {
                    assert!((rn[k] / r0[k] - 1.0).abs() < 1e-9, "tau {tau} level {n}: {rn:?} vs {r0:?}");
                }
            }
        }
    }

    #[test]
    fn isolated_cells_scale_by_contraction() {
        let p = standard();
        for n in 1..5 {
            let prev = corner_resistances(&build_gasket(&p, n - 1).unwrap());
            let g = build_gasket(&p, n).unwrap();
            for w in 1..=3u8 {
                let cell = g.sub_cell(&[w]).unwrap();
                assert_eq!(cell.len(), (3usize.pow(n as u32) + 3) / 2);
                let r = corner_resistances(&cell);
                for k in 0..3 {
                    assert!((r[k] - 0.6 * prev[k]).abs() < 1e-8, "{r:?} {prev:?}");
                }
            }
        }
        let q = GasketParams::from_tau(0.7).unwrap();
        let prev = corner_resistances(&build_gasket(&q, 3).unwrap());
        let g = build_gasket(&q, 4).unwrap();
        let r1 = corner_resistances(&g.sub_cell(&[1]).unwrap());
        let r3 = corner_resistances(&g.sub_cell(&[3]).unwrap());
        for k in 0..3 {
            assert!((r1[k] - q.sigma * prev[k]).abs() < 1e-8);
            assert!((r3[k] - q.tau * prev[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn resistance_triangle_inequality() {
        use rand::{Rng, SeedableRng};
        let g = build_gasket(&GasketParams::from_tau(0.7).unwrap(), 4).unwrap();
        let r = g.resistance_matrix().unwrap();
        let n = g.len();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let (x, y, z) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            assert!(r[x * n + z] <= r[x * n + y] + r[y * n + z] + 1e-9);
            assert_eq!(r[x * n + y], r[y * n + x]);
        }
    }

    #[test]
    fn cell_measures_are_products() {
        let p = GasketParams::from_tau(0.55).unwrap();
        let g = build_gasket(&p, 5).unwrap();
        let m = p.masses();
        for w in [vec![1u8], vec![2, 3], vec![3, 1, 2], vec![1, 1, 1, 2]] {
            let expect: f64 = w.iter().map(|&d| m[(d - 1) as usize]).product();
            assert!((g.cell_measure(&w) - expect).abs() < 1e-12);
        }
        let total: f64 = (1..=3u8).map(|d| g.cell_measure(&[d])).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
