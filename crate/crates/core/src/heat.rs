//! Discrete generators on gasket networks and their heat kernels.
//!
//! A generator acts as `(Lf)(x) = sum_y q(x, y) (f(x) - f(y))` with off-diagonal rates
//! `q(x, y) = c_xy / mu(x)` (local) or `J(x, y) mu(y)` (jump). It is self-adjoint in
//! `L^2(mu)`, so `D^{1/2} L D^{-1/2}` is symmetric and the heat kernel with respect to
//! `mu` follows from its eigendecomposition.

use std::io::Write;
use std::path::Path;

use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::FiniteMetricSpace;
use crate::error::{Error, Result};
use crate::gasket::GasketGraph;
use crate::scale::ScaleFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Local,
    Jump,
    TruncatedJump,
}

/// Markov generator on a finite measure space, stored as dense off-diagonal rates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DirichletOperator {
    pub kind: OperatorKind,
    pub measure: Vec<f64>,
    /// Row-major `q(x, y)`, zero diagonal.
    pub rates: Vec<f64>,
}

impl DirichletOperator {
    /// Checks measure positivity, rate signs and detailed balance `mu(x) q(x,y) = mu(y) q(y,x)`.
    pub fn new(kind: OperatorKind, measure: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        let n = measure.len();
        if rates.len() != n * n {
            return Err(Error::InvalidInput("rate matrix has the wrong size".into()));
        }
        if measure.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::InvalidInput("measure must be positive".into()));
        }
        let op = DirichletOperator { kind, measure, rates };
        for x in 0..n {
            if op.rates[x * n + x] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal rate at {x}")));
            }
        }
        if op.rates.iter().any(|q| !(q.is_finite() && *q >= 0.0)) {
            return Err(Error::InvalidInput("rates must be finite and nonnegative".into()));
        }
        if op.symmetry_defect() > 1e-12 {
            return Err(Error::InvalidInput("generator is not mu-symmetric".into()));
        }
        Ok(op)
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn rate(&self, x: usize, y: usize) -> f64 {
        self.rates[x * self.len() + y]
    }

    /// `(Lf)(x)`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|x| {
                let row = &self.rates[x * n..(x + 1) * n];
                row.iter().zip(f).map(|(q, fy)| q * (f[x] - fy)).sum()
            })
            .collect()
    }

    /// Generator matrix `L = diag(sum_y q) - q`.
    pub fn generator_matrix(&self) -> Mat<f64> {
        let n = self.len();
        Mat::from_fn(n, n, |x, y| {
            if x == y {
                self.rates[x * n..(x + 1) * n].iter().sum()
            } else {
                -self.rates[x * n + y]
            }
        })
    }

    /// `D^{1/2} L D^{-1/2}` with `D = diag(mu)`.
    pub fn symmetrized(&self) -> Mat<f64> {
        let n = self.len();
        let s: Vec<f64> = self.measure.iter().map(|m| m.sqrt()).collect();
        Mat::from_fn(n, n, |x, y| {
            if x == y {
                self.rates[x * n..(x + 1) * n].iter().sum()
            } else {
                -self.rates[x * n + y] * s[x] / s[y]
            }
        })
    }

    /// Largest `|S_xy - S_yx|` relative to the largest `|S_xy|`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for x in 0..n {
            for y in x + 1..n {
                let a = self.rates[x * n + y] * (self.measure[x] / self.measure[y]).sqrt();
                let b = self.rates[y * n + x] * (self.measure[y] / self.measure[x]).sqrt();
                worst = worst.max((a - b).abs());
                scale = scale.max(a.abs()).max(b.abs());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// Largest `|(L 1)(x)|` computed from the generator matrix.
    pub fn row_sum_defect(&self) -> f64 {
        let l = self.generator_matrix();
        let n = self.len();
        (0..n)
            .map(|x| (0..n).map(|y| l[(x, y)]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    pub fn min_offdiagonal_rate(&self) -> f64 {
        let n = self.len();
        let mut m = f64::INFINITY;
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    m = m.min(self.rates[x * n + y]);
                }
            }
        }
        m
    }
}

/// Generator of the network's energy with respect to its vertex measure.
pub fn local_generator(graph: &GasketGraph) -> Result<DirichletOperator> {
    let n = graph.len();
    let mut rates = vec![0.0; n * n];
    for e in &graph.edges {
        rates[e.a * n + e.b] += e.conductance / graph.measure[e.a];
        rates[e.b * n + e.a] += e.conductance / graph.measure[e.b];
    }
    DirichletOperator::new(OperatorKind::Local, graph.measure.clone(), rates)
}

/// Open-ball volumes `V(x, r) = mu{y : d(x, y) < r}` answered by binary search.
#[derive(Clone, Debug)]
pub struct BallVolumes {
    n: usize,
    /// Per row: distances sorted increasingly.
    dist: Vec<f64>,
    /// Per row: `cum[k]` is the mass of the first `k` sorted points.
    cum: Vec<f64>,
}

impl BallVolumes {
    pub fn new(space: &FiniteMetricSpace, measure: &[f64]) -> Result<Self> {
        let n = space.len();
        if measure.len() != n {
            return Err(Error::InvalidInput("measure and space sizes differ".into()));
        }
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map(|x| {
                let row = space.row(x);
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap().then(a.cmp(&b)));
                let d: Vec<f64> = idx.iter().map(|&i| row[i]).collect();
                let mut c = Vec::with_capacity(n + 1);
                c.push(0.0);
                let mut acc = 0.0;
                for &i in &idx {
                    acc += measure[i];
                    c.push(acc);
                }
                (d, c)
            })
            .collect();
        let mut dist = Vec::with_capacity(n * n);
        let mut cum = Vec::with_capacity(n * (n + 1));
        for (d, c) in rows {
            dist.extend(d);
            cum.extend(c);
        }
        Ok(BallVolumes { n, dist, cum })
    }

    /// `V(x, r)` for the open ball.
    pub fn volume(&self, x: usize, r: f64) -> f64 {
        let row = &self.dist[x * self.n..(x + 1) * self.n];
        let k = row.partition_point(|&d| d < r);
        self.cum[x * (self.n + 1) + k]
    }
}

/// `mu(B(x, r))` for the open ball, from one row of distances.
pub fn ball_volume(measure: &[f64], dist_row: &[f64], r: f64) -> f64 {
    measure
        .iter()
        .zip(dist_row)
        .filter(|(_, &d)| d < r)
        .map(|(m, _)| m)
        .sum()
}

fn jump_rates(
    space: &FiniteMetricSpace,
    measure: &[f64],
    psi_j: &ScaleFunction,
    c_norm: f64,
    cutoff: f64,
) -> Result<Vec<f64>> {
    psi_j.validate()?;
    if !(c_norm > 0.0) {
        return Err(Error::InvalidInput("c_norm must be positive".into()));
    }
    let n = space.len();
    let vol = BallVolumes::new(space, measure)?;
    let mut kernel = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let r = space.d(x, y);
            let p = psi_j.value(r);
            if !(p > 0.0) {
                return Err(Error::Numerical(format!("psi_j vanishes at r = {r:e}")));
            }
            kernel[x * n + y] = c_norm / (vol.volume(x, r) * p);
        }
    }
    let mut rates = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            if x != y && space.d(x, y) < cutoff {
                let j = 0.5 * (kernel[x * n + y] + kernel[y * n + x]);
                rates[x * n + y] = j * measure[y];
            }
        }
    }
    Ok(rates)
}

/// Jump generator with `J(x,y) = c_norm / (V(x, d(x,y)) psi_j(d(x,y)))`, averaged over
/// both orders of the pair.
pub fn jump_generator(
    space: &FiniteMetricSpace,
    measure: &[f64],
    psi_j: &ScaleFunction,
    c_norm: f64,
) -> Result<DirichletOperator> {
    let rates = jump_rates(space, measure, psi_j, c_norm, f64::INFINITY)?;
    DirichletOperator::new(OperatorKind::Jump, measure.to_vec(), rates)
}

/// [`jump_generator`] with jumps of length `>= cutoff` removed.
pub fn truncated_jump_generator(
    space: &FiniteMetricSpace,
    measure: &[f64],
    psi_j: &ScaleFunction,
    c_norm: f64,
    cutoff: f64,
) -> Result<DirichletOperator> {
    let rates = jump_rates(space, measure, psi_j, c_norm, cutoff)?;
    DirichletOperator::new(OperatorKind::TruncatedJump, measure.to_vec(), rates)
}

/// Eigendecomposition of the symmetrized generator.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Nondecreasing.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    pub vectors: Mat<f64>,
    pub measure: Vec<f64>,
    /// `max |S U - U Lambda|` relative to `max |lambda|`.
    pub residual: f64,
}

/// Dense symmetric eigendecomposition; fails if the residual exceeds `1e-8`.
pub fn spectrum(op: &DirichletOperator) -> Result<Spectrum> {
    let s = op.symmetrized();
    let evd = s
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    let u = evd.U().to_owned();
    let n = op.len();
    let lam: Vec<f64> = (0..n).map(|k| evd.S()[k]).collect();
    let su = &s * &u;
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in 0..n {
            worst = worst.max((su[(i, j)] - u[(i, j)] * lam[j]).abs());
        }
    }
    let scale = lam.iter().fold(0.0_f64, |a, b| a.max(b.abs())).max(1e-300);
    let residual = worst / scale;
    if residual > 1e-8 {
        return Err(Error::Numerical(format!(
            "eigendecomposition residual {residual:e}"
        )));
    }
    Ok(Spectrum {
        eigenvalues: lam,
        vectors: u,
        measure: op.measure.clone(),
        residual,
    })
}

/// Which eigenmodes enter the kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Modes {
    All,
    /// Only the given fraction of modes with the largest eigenvalues.
    Top(f64),
}

/// `p_t(x, y)` for `x` in `sources`, all `y`, every `t` in `t_grid`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeatKernelGrid {
    pub t_grid: Vec<f64>,
    pub sources: Vec<usize>,
    pub measure: Vec<f64>,
    /// `kernel[k]` is row-major `sources.len() x n` at `t_grid[k]`.
    pub kernel: Vec<Vec<f64>>,
}

impl HeatKernelGrid {
    pub fn n(&self) -> usize {
        self.measure.len()
    }

    /// `p_{t_k}(sources[i], y)`.
    pub fn p(&self, k: usize, i: usize, y: usize) -> f64 {
        self.kernel[k][i * self.n() + y]
    }

    /// Position of vertex `x` among the sources.
    pub fn source_index(&self, x: usize) -> Option<usize> {
        self.sources.iter().position(|&s| s == x)
    }

    /// CSV rows `t,x,y,p`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,y,p")?;
        let n = self.n();
        for (k, &t) in self.t_grid.iter().enumerate() {
            for (i, &x) in self.sources.iter().enumerate() {
                for y in 0..n {
                    writeln!(
                        w,
                        "{},{x},{y},{}",
                        crate::fmt_f64(t),
                        crate::fmt_f64(self.kernel[k][i * n + y])
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Little-endian `f64` array of shape `[t, source, y]` at `path`, with a JSON
    /// sidecar `path.json` describing it.
    pub fn write_binary(&self, path: &Path) -> std::io::Result<()> {
        let mut bytes = Vec::with_capacity(8 * self.kernel.iter().map(Vec::len).sum::<usize>());
        for block in &self.kernel {
            for v in block {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        std::fs::write(path, bytes)?;
        let sidecar = serde_json::json!({
            "dtype": "f64le",
            "order": "row-major",
            "shape": [self.t_grid.len(), self.sources.len(), self.n()],
            "axes": ["t", "source", "y"],
            "t_grid": self.t_grid,
            "sources": self.sources,
        });
        let mut name = path.as_os_str().to_owned();
        name.push(".json");
        std::fs::write(name, crate::json::to_string_pretty(&sidecar))
    }
}

/// Heat kernel on every pair via the full spectrum.
pub fn heat_kernel(op: &DirichletOperator, t_grid: &[f64]) -> Result<HeatKernelGrid> {
    if op.len() > 10_000 {
        return Err(Error::InvalidInput("dense heat kernel limited to 1e4 points".into()));
    }
    let sp = spectrum(op)?;
    let sources: Vec<usize> = (0..op.len()).collect();
    kernel_from_spectrum(&sp, t_grid, &sources, Modes::All)
}

/// `p_t(x, y) = mu(x)^{-1/2} mu(y)^{-1/2} sum_k e^{-t lambda_k} u_k(x) u_k(y)` over the
/// selected modes.
pub fn kernel_from_spectrum(sp: &Spectrum, t_grid: &[f64], sources: &[usize], modes: Modes) -> Result<HeatKernelGrid> {
    let n = sp.eigenvalues.len();
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0)) || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("t grid must be positive and increasing".into()));
    }
    if sources.iter().any(|&s| s >= n) {
        return Err(Error::InvalidInput("source index out of range".into()));
    }
    let first = match modes {
        Modes::All => 0,
        Modes::Top(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidInput("mode fraction must lie in (0, 1]".into()));
            }
            n - ((f * n as f64).round() as usize).clamp(1, n)
        }
    };
    let m = n - first;
    let inv_sqrt: Vec<f64> = sp.measure.iter().map(|v| 1.0 / v.sqrt()).collect();
    let lam = &sp.eigenvalues[first..];
    let u = &sp.vectors;
    let kernel: Vec<Vec<f64>> = t_grid
        .par_iter()
        .map(|&t| {
            let decay: Vec<f64> = lam.iter().map(|l| (-0.5 * t * l.max(0.0)).exp()).collect();
            let w = Mat::<f64>::from_fn(n, m, |i, k| u[(i, first + k)] * decay[k]);
            let ws = Mat::<f64>::from_fn(sources.len(), m, |i, k| w[(sources[i], k)]);
            let prod = &ws * w.transpose();
            let mut out = vec![0.0; sources.len() * n];
            for (i, &x) in sources.iter().enumerate() {
                for y in 0..n {
                    out[i * n + y] = prod[(i, y)] * inv_sqrt[x] * inv_sqrt[y];
                }
            }
            out
        })
        .collect();
    Ok(HeatKernelGrid {
        t_grid: t_grid.to_vec(),
        sources: sources.to_vec(),
        measure: sp.measure.clone(),
        kernel,
    })
}

/// Worst violations of the Markov properties over a grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarkovReport {
    /// `max(0, -min p_t(x,y) mu(y))`.
    pub positivity: f64,
    /// `max |p_t(x,y) - p_t(y,x)|` relative to `max p_t`, over pairs of sources.
    pub symmetry: f64,
    /// `max |sum_y p_t(x,y) mu(y) - 1|`.
    pub conservativeness: f64,
    /// `max |p_{2t}(x,y) - sum_z p_t(x,z) p_t(z,y) mu(z)|` relative to `max p_{2t}`;
    /// `None` when no `(t, 2t)` pair is on the grid.
    pub chapman_kolmogorov: Option<f64>,
    pub ck_pairs: usize,
}

impl MarkovReport {
    /// Chapman-Kolmogorov is reported as "skipped" when it could not be checked.
    pub fn ck_status(&self) -> String {
        match self.chapman_kolmogorov {
            Some(v) => crate::fmt_f64(v),
            None => "skipped".into(),
        }
    }

    pub fn pass(&self, sym_tol: f64, tol: f64) -> bool {
        self.positivity <= tol
            && self.symmetry <= sym_tol
            && self.conservativeness <= tol
            && self.chapman_kolmogorov.map_or(true, |v| v <= tol)
    }
}

/// Positivity, symmetry, conservativeness and Chapman-Kolmogorov on `(t, 2t)` pairs.
pub fn markov_checks(grid: &HeatKernelGrid) -> MarkovReport {
    let n = grid.n();
    let mu = &grid.measure;
    let mut positivity = 0.0_f64;
    let mut symmetry = 0.0_f64;
    let mut conservativeness = 0.0_f64;
    let pos: Vec<Option<usize>> = {
        let mut v = vec![None; n];
        for (i, &s) in grid.sources.iter().enumerate() {
            v[s] = Some(i);
        }
        v
    };
    for k in 0..grid.t_grid.len() {
        let block = &grid.kernel[k];
        let scale = block.iter().fold(0.0_f64, |a, b| a.max(b.abs())).max(1e-300);
        for (i, &x) in grid.sources.iter().enumerate() {
            let row = &block[i * n..(i + 1) * n];
            let mut mass = 0.0;
            for y in 0..n {
                positivity = positivity.max(-row[y] * mu[y]);
                mass += row[y] * mu[y];
                if let Some(j) = pos[y] {
                    symmetry = symmetry.max((row[y] - block[j * n + x]).abs() / scale);
                }
            }
            conservativeness = conservativeness.max((mass - 1.0).abs());
        }
    }
    let mut ck: Option<f64> = None;
    let mut ck_pairs = 0;
    for (k, &t) in grid.t_grid.iter().enumerate() {
        let Some(k2) = grid
            .t_grid
            .iter()
            .position(|&s| (s / (2.0 * t) - 1.0).abs() < 1e-12)
        else {
            continue;
        };
        ck_pairs += 1;
        let a = &grid.kernel[k];
        let b = &grid.kernel[k2];
        let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        let mut worst = 0.0_f64;
        for (i, _) in grid.sources.iter().enumerate() {
            for (j, &y) in grid.sources.iter().enumerate() {
                // p_t(z, y) = p_t(y, z) for the source y
                let s: f64 = (0..n).map(|z| a[i * n + z] * a[j * n + z] * mu[z]).sum();
                worst = worst.max((b[i * n + y] - s).abs() / scale);
            }
        }
        ck = Some(ck.map_or(worst, |c: f64| c.max(worst)));
    }
    MarkovReport {
        positivity,
        symmetry,
        conservativeness,
        chapman_kolmogorov: ck,
        ck_pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gasket::{build_gasket, GasketParams};

    fn two_point(rate: f64) -> DirichletOperator {
        DirichletOperator::new(OperatorKind::Local, vec![0.5, 0.5], vec![0.0, rate, rate, 0.0]).unwrap()
    }

    #[test]
    fn level_zero_rates() {
        let g = build_gasket(&GasketParams::from_tau(0.6).unwrap(), 0).unwrap();
        let op = local_generator(&g).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                if x != y {
                    assert!((op.rate(x, y) - 1.0).abs() < 1e-14);
                }
            }
        }
        assert!(op.apply(&[1.0; 3]).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_edge_spectrum() {
        // c = 1, mu = 1/2 each: rates 2, eigenvalues {0, 4}
        let op = two_point(2.0);
        let sp = spectrum(&op).unwrap();
        assert!(sp.eigenvalues[0].abs() < 1e-14);
        assert!((sp.eigenvalues[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn two_point_kernel_closed_form() {
        // rate 1 each way: P_t(a, b) = (1 - e^{-2t}) / 2, density divides by mu = 1/2
        let op = two_point(1.0);
        let g = heat_kernel(&op, &[0.1, 0.2, 1.0]).unwrap();
        for (k, &t) in g.t_grid.iter().enumerate() {
            assert!((g.p(k, 0, 1) - (1.0 - (-2.0 * t).exp())).abs() < 1e-14);
            assert!((g.p(k, 0, 0) - (1.0 + (-2.0 * t).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_limits() {
        let g = build_gasket(&GasketParams::from_tau(0.6).unwrap(), 3).unwrap();
        let op = local_generator(&g).unwrap();
        let sp = spectrum(&op).unwrap();
        let lmax = *sp.eigenvalues.last().unwrap();
        let l2 = sp.eigenvalues[1];
        let all: Vec<usize> = (0..g.len()).collect();
        let k = kernel_from_spectrum(&sp, &[1e-9 / lmax, 50.0 / l2], &all, Modes::All).unwrap();
        let n = g.len();
        for x in 0..n {
            for y in 0..n {
                let v = k.p(0, x, y) * g.measure[y];
                if x == y {
                    assert!((v - 1.0).abs() < 1e-6);
                } else {
                    assert!(v.abs() < 1e-6);
                }
                assert!((k.p(1, x, y) - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn markov_suite_and_controls() {
        let g = build_gasket(&GasketParams::from_tau(0.7).unwrap(), 3).unwrap();
        let op = local_generator(&g).unwrap();
        assert!(op.row_sum_defect() < 1e-9);
        let sp = spectrum(&op).unwrap();
        let all: Vec<usize> = (0..g.len()).collect();
        let grid = kernel_from_spectrum(&sp, &[0.01, 0.02, 0.04], &all, Modes::All).unwrap();
        let r = markov_checks(&grid);
        assert!(r.pass(1e-10, 1e-8), "{r:?}");
        assert_eq!(r.ck_pairs, 2);
        let cut = kernel_from_spectrum(&sp, &[0.01, 0.02], &all, Modes::Top(0.5)).unwrap();
        assert!(markov_checks(&cut).conservativeness > 0.5);
        let single = kernel_from_spectrum(&sp, &[0.01], &all, Modes::All).unwrap();
        assert_eq!(markov_checks(&single).ck_status(), "skipped");
    }

    #[test]
    fn ball_volume_conventions() {
        let g = build_gasket(&GasketParams::from_tau(0.6).unwrap(), 2).unwrap();
        let s = g.resistance_space().unwrap();
        let v = BallVolumes::new(&s, &g.measure).unwrap();
        let x = 4;
        assert_eq!(v.volume(x, 0.0), 0.0);
        assert_eq!(v.volume(x, 1e-12), g.measure[x]);
        assert!((v.volume(x, 2.0 * s.diameter()) - 1.0).abs() < 1e-12);
        for r in [0.1, 0.5, 1.0, 1.7] {
            assert!((v.volume(x, r) - ball_volume(&g.measure, s.row(x), r)).abs() < 1e-15);
        }
    }

    #[test]
    fn jump_generator_is_symmetric_and_positive() {
        let p = GasketParams::from_tau(0.6).unwrap();
        let g = build_gasket(&p, 3).unwrap();
        let s = g.resistance_space().unwrap();
        let s = s.scaled(1.0 / s.diameter());
        let b = p.beta_star;
        let psi = ScaleFunction::power_log(1.0, b, 2.0, (-2.0 / b).exp());
        let op = jump_generator(&s, &g.measure, &psi, 1.0).unwrap();
        assert!(op.min_offdiagonal_rate() > 0.0);
        assert!(op.symmetry_defect() < 1e-14);
        let n = g.len();
        for x in 0..n {
            for y in 0..n {
                let a = op.rate(x, y) / g.measure[y];
                let b = op.rate(y, x) / g.measure[x];
                assert!((a - b).abs() <= 1e-12 * a.abs());
            }
        }
        let t = truncated_jump_generator(&s, &g.measure, &psi, 1.0, 0.3).unwrap();
        assert!(t.min_offdiagonal_rate() == 0.0);
    }
}
