//! Ready-made heat kernel studies on gasket networks: operator, normalized metric,
//! sample pairs, time window and the bound scales, shared by the experiment driver,
//! the examples and the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::FiniteMetricSpace;
use crate::error::{Error, Result};
use crate::gasket::{build_gasket, GasketGraph, GasketParams};
use crate::heat::{
    jump_generator, kernel_from_spectrum, local_generator, spectrum, BallVolumes, HeatKernelGrid, Modes,
    Spectrum,
};
use crate::numeric::linear_fit;
use crate::scale::{default_phi_grid, phi_from_scales, ScaleFunction};
use crate::verify::{
    fit_envelope, observations, BoundSpec, ComparabilityReport, Family, FitWindow, Observation, Scales,
    Thresholds, REL_FLOOR,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorChoice {
    Local,
    Jump,
}

/// Which vertex pairs are sampled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairPolicy {
    /// The three corner pairs.
    pub corners: bool,
    /// Number of seeded-random pairs of distinct non-corner vertices.
    pub random: usize,
    /// Also sample `(x, x)` for every source `x`.
    pub diagonal: bool,
}

impl Default for PairPolicy {
    fn default() -> Self {
        PairPolicy {
            corners: true,
            random: 50,
            diagonal: true,
        }
    }
}

/// Pairs of `0..n` under `policy`; `corners` are excluded from the random pairs.
pub fn select_pairs(n: usize, corners: &[usize], policy: &PairPolicy, seed: u64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    if policy.corners {
        for (i, &a) in corners.iter().enumerate() {
            for &b in &corners[i + 1..] {
                pairs.push((a, b));
            }
        }
    }
    let interior = n.saturating_sub(corners.len());
    if interior >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut added = 0;
        while added < policy.random {
            let x = rng.gen_range(0..n);
            let y = rng.gen_range(0..n);
            if x != y && !corners.contains(&x) && !corners.contains(&y) {
                pairs.push((x, y));
                added += 1;
            }
        }
    }
    if policy.diagonal {
        let mut sources: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        sources.sort_unstable();
        sources.dedup();
        pairs.extend(sources.into_iter().map(|x| (x, x)));
    }
    pairs
}

/// Scales of a study before time normalization; `None` entries take the gasket defaults
/// `psi_c = r^beta*`, `psi_j = r^beta* log^2(1/(r ^ e^{-2/beta*}))`, `rho = r^gamma1`
/// and `Phi` from `psi_c, psi_j`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleConfig {
    pub psi_c: Option<ScaleFunction>,
    pub psi_j: Option<ScaleFunction>,
    pub rho: Option<ScaleFunction>,
    pub phi: Option<ScaleFunction>,
}

impl ScaleConfig {
    /// Fills in the defaults for `params`.
    pub fn resolve(&self, params: &GasketParams) -> Result<Scales> {
        let beta = params.beta_star;
        let psi_c = self.psi_c.clone().unwrap_or(ScaleFunction::power(beta));
        let psi_j = self
            .psi_j
            .clone()
            .unwrap_or(ScaleFunction::power_log(1.0, beta, 2.0, (-2.0 / beta).exp()));
        let rho = self.rho.clone().unwrap_or(ScaleFunction::power(params.gamma1));
        let phi = match &self.phi {
            Some(p) => p.clone(),
            None => phi_from_scales(&psi_c, &psi_j, &default_phi_grid())?.phi,
        };
        Ok(Scales {
            psi_c: Some(psi_c),
            psi_j: Some(psi_j),
            phi: Some(phi),
            rho: Some(rho),
        })
    }
}

/// Time grid: `t_max (1 - 1e-3) 2^{-k/per_octave}` down to the window's `t_min`, so that
/// every `t` has `2t` on the grid except near the top.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeGrid {
    pub per_octave: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid { per_octave: 4 }
    }
}

impl TimeGrid {
    pub fn build(&self, t_min: f64, t_max: f64) -> Result<Vec<f64>> {
        if self.per_octave == 0 || !(t_min > 0.0 && t_max > t_min) {
            return Err(Error::InvalidInput(format!(
                "time grid needs per_octave > 0 and 0 < t_min < t_max (got {t_min:e}, {t_max:e})"
            )));
        }
        let top = t_max * (1.0 - 1e-3);
        let mut v = Vec::new();
        let mut k = 0;
        loop {
            let t = top * 2f64.powf(-(k as f64) / self.per_octave as f64);
            if t < t_min * (1.0 - 1e-12) {
                break;
            }
            v.push(t);
            k += 1;
        }
        v.reverse();
        Ok(v)
    }
}

/// Lattice spacings covered by the near-diagonal radius at the bottom of the window.
pub const LATTICE_SPACINGS: f64 = 3.0;

/// A gasket network with its heat operator, prepared for estimate checks.
///
/// Resistance distances are divided by the diameter. The time scale of the bounds
/// (`psi_c` for the diffusion, `Phi` for the jump process) is multiplied by a constant so
/// that its value at the unit diameter is the relaxation time `1/lambda_1`; without it
/// the top of the window sits deep in the equilibrium regime. The window is
/// `[scale(3 h), scale(1))` with `h` the smallest vertex separation, and pairs closer
/// than `3 h` are skipped.
#[derive(Clone, Debug)]
pub struct HeatStudy {
    pub params: GasketParams,
    pub level: usize,
    pub operator: OperatorChoice,
    pub graph: GasketGraph,
    /// Resistance diameter before normalization.
    pub dilation: f64,
    pub space: FiniteMetricSpace,
    pub spacing: f64,
    pub spectrum: Spectrum,
    /// Factor applied to the time scale.
    pub time_unit: f64,
    pub scales: Scales,
    pub pairs: Vec<(usize, usize)>,
    pub sources: Vec<usize>,
    pub window: FitWindow,
    pub t_grid: Vec<f64>,
}

impl HeatStudy {
    pub fn new(
        params: &GasketParams,
        level: usize,
        operator: OperatorChoice,
        scales: &ScaleConfig,
        policy: &PairPolicy,
        seed: u64,
        time_grid: &TimeGrid,
    ) -> Result<Self> {
        let graph = build_gasket(params, level)?;
        let raw = graph.resistance_space()?;
        let dilation = raw.diameter();
        let space = raw.scaled(1.0 / dilation);
        let spacing = space.min_separation();
        let mut scales = scales.resolve(params)?;
        let op = match operator {
            OperatorChoice::Local => local_generator(&graph)?,
            OperatorChoice::Jump => {
                jump_generator(&space, &graph.measure, scales.psi_j.as_ref().expect("resolved"), 1.0)?
            }
        };
        let spectrum = spectrum(&op)?;
        let gap = spectrum.eigenvalues.get(1).copied().unwrap_or(0.0);
        if !(gap > 0.0) {
            return Err(Error::Numerical(format!("spectral gap {gap:e} is not positive")));
        }
        let slot = match operator {
            OperatorChoice::Local => &mut scales.psi_c,
            OperatorChoice::Jump => &mut scales.phi,
        };
        let base = slot.take().expect("resolved");
        let time_unit = 1.0 / (gap * base.value(1.0));
        let scaled = ScaleFunction::compose(ScaleFunction::Power { coef: time_unit, a: 1.0 }, base);
        let t_min = scaled.value(LATTICE_SPACINGS * spacing);
        let t_max = scaled.value(1.0);
        *slot = Some(scaled);
        let pairs = select_pairs(graph.len(), &graph.corners, policy, seed);
        let mut sources: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        sources.sort_unstable();
        sources.dedup();
        let window = FitWindow {
            t_min,
            t_max,
            min_distance: LATTICE_SPACINGS * spacing,
            rel_floor: REL_FLOOR,
        };
        let t_grid = time_grid.build(t_min, t_max)?;
        Ok(HeatStudy {
            params: *params,
            level,
            operator,
            graph,
            dilation,
            space,
            spacing,
            spectrum,
            time_unit,
            scales,
            pairs,
            sources,
            window,
            t_grid,
        })
    }

    pub fn kernel(&self) -> Result<HeatKernelGrid> {
        kernel_from_spectrum(&self.spectrum, &self.t_grid, &self.sources, Modes::All)
    }

    pub fn observations(&self, grid: &HeatKernelGrid) -> Result<Vec<Observation>> {
        observations(grid, &self.space, &self.pairs, &self.window)
    }

    pub fn volumes(&self) -> Result<BallVolumes> {
        BallVolumes::new(&self.space, &self.graph.measure)
    }

    pub fn bound_spec(&self, family: Family, eta: f64) -> Result<BoundSpec> {
        let mut spec = BoundSpec::new(family, self.scales.clone())?;
        spec.eta = eta;
        Ok(spec)
    }

    pub fn fit(&self, grid: &HeatKernelGrid, family: Family, eta: f64, thresholds: Thresholds) -> Result<ComparabilityReport> {
        let spec = self.bound_spec(family, eta)?;
        let obs = self.observations(grid)?;
        fit_envelope(&obs, &self.volumes()?, &spec, &self.window, thresholds)
    }
}

/// Least-squares slope of `log p_t(x, x)` against `log t` over the diagonal samples.
pub fn on_diagonal_slope(obs: &[Observation]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = obs
        .iter()
        .filter(|o| o.x == o.y)
        .map(|o| (o.t.ln(), o.p.ln()))
        .unzip();
    if xs.len() < 2 || xs.iter().all(|x| *x == xs[0]) {
        return None;
    }
    Some(linear_fit(&xs, &ys).1)
}

/// Smallest `p_t(x, y) V(x, psi^{-1}(t))` over observations with `d <= psi^{-1}(t)`.
pub fn near_diagonal_floor(obs: &[Observation], volumes: &BallVolumes, time_scale: &ScaleFunction) -> Option<f64> {
    obs.iter()
        .filter_map(|o| {
            let r = time_scale.inverse_value(o.t);
            (o.d <= r).then(|| o.p * volumes.volume(o.x, r))
        })
        .min_by(|a, b| a.total_cmp(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_policy_is_seeded() {
        let a = select_pairs(100, &[0, 1, 2], &PairPolicy::default(), 3);
        let b = select_pairs(100, &[0, 1, 2], &PairPolicy::default(), 3);
        assert_eq!(a, b);
        assert_eq!(&a[..3], &[(0, 1), (0, 2), (1, 2)]);
        let off: Vec<_> = a.iter().filter(|p| p.0 != p.1).collect();
        assert_eq!(off.len(), 53);
        assert!(off[3..].iter().all(|&&(x, y)| x > 2 && y > 2 && x != y));
        assert!(a.iter().filter(|p| p.0 == p.1).all(|p| a.iter().any(|q| q.0 == p.0 && q.1 != q.0)));
    }

    #[test]
    fn time_grid_contains_doublings() {
        let g = TimeGrid::default().build(1e-3, 1.0).unwrap();
        assert!(g[0] >= 1e-3 && *g.last().unwrap() < 1.0);
        let doubled = g.iter().filter(|t| g.iter().any(|s| (s / (2.0 * **t) - 1.0).abs() < 1e-12)).count();
        assert_eq!(doubled, g.len() - 4);
    }
}
