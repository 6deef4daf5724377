//! Heat kernel bound families and two-sided comparability fits.
//!
//! Every family is written as `C^-1 k G(c1) <= p <= C k G(c2)` where `G(c)` is the
//! family's shape with exponential constant `c`, `k` a fitted normalization and `C >= 1`.
//! The lower bound uses `c1` and the upper bound `c2`; the band is ordered whenever
//! `c1 >= c2`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::FiniteMetricSpace;
use crate::error::{Error, Result};
use crate::heat::{BallVolumes, HeatKernelGrid};
use crate::scale::{variational_sup, ScaleFunction, SupMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "sub_gaussian")]
    SubGaussian,
    #[serde(rename = "stable_like")]
    StableLike,
    #[serde(rename = "rho_gaussian")]
    RhoGaussian,
    #[serde(rename = "SHK")]
    Shk,
    #[serde(rename = "SplusHK")]
    SplusHk,
    #[serde(rename = "GplusHK_lower")]
    GplusHkLower,
    #[serde(rename = "UHK_upper")]
    UhkUpper,
    #[serde(rename = "GHK_both")]
    GhkBoth,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::SubGaussian,
        Family::StableLike,
        Family::RhoGaussian,
        Family::Shk,
        Family::SplusHk,
        Family::GplusHkLower,
        Family::UhkUpper,
        Family::GhkBoth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::SubGaussian => "sub_gaussian",
            Family::StableLike => "stable_like",
            Family::RhoGaussian => "rho_gaussian",
            Family::Shk => "SHK",
            Family::SplusHk => "SplusHK",
            Family::GplusHkLower => "GplusHK_lower",
            Family::UhkUpper => "UHK_upper",
            Family::GhkBoth => "GHK_both",
        }
    }

    /// Diffusion families use `psi_c` as time scale, the others `Phi`.
    pub fn is_local(self) -> bool {
        matches!(self, Family::SubGaussian | Family::RhoGaussian)
    }

    /// Whether the shape has an exponential term with a constant to fit.
    pub fn has_exponential(self) -> bool {
        !matches!(self, Family::StableLike)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown bound family '{s}'")))
    }
}

/// Scale functions a family may refer to.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Scales {
    pub psi_c: Option<ScaleFunction>,
    pub psi_j: Option<ScaleFunction>,
    pub phi: Option<ScaleFunction>,
    pub rho: Option<ScaleFunction>,
}

/// `(C, c1, c2)` plus the normalization `k` of the shape.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub norm: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c: 1.0,
            c1: 1.0,
            c2: 1.0,
            norm: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundSpec {
    pub family: Family,
    pub scales: Scales,
    pub constants: Constants,
    /// Switch point `d = eta Phi^{-1}(t)` of the piecewise lower bound.
    pub eta: f64,
    /// Diameter of the space; times must lie in `(0, scale(diam))`.
    pub diam: f64,
}

impl BoundSpec {
    /// Checks that the family's scales are present and valid; `eta = 1/4`, `diam = 1`.
    pub fn new(family: Family, scales: Scales) -> Result<Self> {
        let spec = BoundSpec {
            family,
            scales,
            constants: Constants::default(),
            eta: 0.25,
            diam: 1.0,
        };
        for name in spec.required() {
            let f = spec.scale(name)?;
            f.validate()?;
        }
        Ok(spec)
    }

    /// Names of the scales `family` needs.
    pub fn required(&self) -> Vec<&'static str> {
        match self.family {
            Family::SubGaussian => vec!["psi_c"],
            Family::RhoGaussian => vec!["psi_c", "rho"],
            Family::StableLike | Family::Shk | Family::GplusHkLower | Family::UhkUpper => {
                vec!["psi_j", "phi"]
            }
            Family::SplusHk => vec!["psi_j", "phi", "rho"],
            Family::GhkBoth => vec!["psi_j", "phi", "rho", "psi_c"],
        }
    }

    fn scale(&self, name: &'static str) -> Result<&ScaleFunction> {
        let s = match name {
            "psi_c" => &self.scales.psi_c,
            "psi_j" => &self.scales.psi_j,
            "phi" => &self.scales.phi,
            _ => &self.scales.rho,
        };
        s.as_ref().ok_or(Error::MissingScale(name))
    }

    /// `psi_c` for diffusion families, `Phi` otherwise.
    pub fn time_scale(&self) -> Result<&ScaleFunction> {
        if self.family.is_local() {
            self.scale("psi_c")
        } else {
            self.scale("phi")
        }
    }

    /// Upper end of the admissible time range.
    pub fn t_max(&self) -> Result<f64> {
        Ok(self.time_scale()?.value(self.diam))
    }

    pub fn with_constants(mut self, c: Constants) -> Self {
        self.constants = c;
        self
    }
}

/// Constant-free ingredients of a bound at one `(x, y, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    pub d: f64,
    pub t: f64,
    /// `1 / V(x, scale^{-1}(t))`.
    pub prefactor: f64,
    /// `t / (V(x, d) psi_j(d))`, infinite at `d = 0`; zero for diffusion families.
    pub jump: f64,
    /// The family's variational supremum.
    pub sup: f64,
    /// `scale^{-1}(t)`.
    pub radius: f64,
    /// Maximizing `sigma` of the supremum: the step length of the optimal chain.
    /// Infinite when the supremum vanishes.
    pub chain_scale: f64,
}

/// Evaluates the constant-free terms; `volume(r)` is `V(x, r)`.
pub fn bound_terms(spec: &BoundSpec, volume: &dyn Fn(f64) -> f64, d: f64, t: f64) -> Result<BoundTerms> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::InvalidInput(format!("distance must be finite and >= 0, got {d}")));
    }
    let t_max = spec.t_max()?;
    if !(t > 0.0 && t < t_max) {
        return Err(Error::OutOfRange(format!("t = {t:e} outside (0, {t_max:e})")));
    }
    let scale = spec.time_scale()?;
    let radius = scale.inverse_value(t);
    let prefactor = 1.0 / volume(radius);
    let jump = if spec.family.is_local() {
        0.0
    } else if d == 0.0 {
        f64::INFINITY
    } else {
        t / (volume(d) * spec.scale("psi_j")?.value(d))
    };
    let id = ScaleFunction::identity();
    let sup = match spec.family {
        Family::StableLike => None,
        Family::SubGaussian => Some(variational_sup(&id, scale, d, t, SupMode::Linear)),
        Family::RhoGaussian | Family::SplusHk => {
            Some(variational_sup(spec.scale("rho")?, scale, d, t, SupMode::Rho))
        }
        // rho = identity through the same objective as SplusHK
        Family::Shk | Family::GplusHkLower | Family::UhkUpper => {
            Some(variational_sup(&id, scale, d, t, SupMode::Rho))
        }
        Family::GhkBoth => {
            let psi_c = spec.scale("psi_c")?;
            Some(variational_sup(spec.scale("rho")?, scale, d, t, SupMode::PsiCComposed(psi_c)))
        }
    };
    let (sup, chain_scale) = match sup {
        Some(s) if s.value > 0.0 => (s.value, s.argmax_sigma),
        _ => (0.0, f64::INFINITY),
    };
    Ok(BoundTerms {
        d,
        t,
        prefactor,
        jump,
        sup,
        radius,
        chain_scale,
    })
}

impl BoundTerms {
    /// Upper shape `G(c)`.
    pub fn upper_shape(&self, family: Family, c: f64) -> f64 {
        let p = self.prefactor;
        let e = p * (-c * self.sup).exp();
        match family {
            Family::SubGaussian | Family::RhoGaussian => e,
            Family::StableLike => p.min(self.jump),
            Family::Shk | Family::SplusHk | Family::GhkBoth | Family::GplusHkLower => {
                p.min(self.jump + e)
            }
            Family::UhkUpper => self.jump + e,
        }
    }

    /// Lower shape `G(c)`.
    pub fn lower_shape(&self, family: Family, c: f64, eta: f64) -> f64 {
        match family {
            Family::GplusHkLower => {
                if self.d <= eta * self.radius {
                    self.prefactor
                } else {
                    self.jump
                }
            }
            Family::UhkUpper => 0.0,
            _ => self.upper_shape(family, c),
        }
    }
}

/// `(lower, upper)` with the constants of the [`BoundSpec`].
pub fn evaluate_bound(spec: &BoundSpec, volume: &dyn Fn(f64) -> f64, d: f64, t: f64) -> Result<(f64, f64)> {
    let terms = bound_terms(spec, volume, d, t)?;
    Ok(bounds_from_terms(spec, &terms))
}

/// `(lower, upper)` from precomputed terms.
pub fn bounds_from_terms(spec: &BoundSpec, terms: &BoundTerms) -> (f64, f64) {
    let k = spec.constants;
    let lower = k.norm / k.c * terms.lower_shape(spec.family, k.c1, spec.eta);
    let upper = k.norm * k.c * terms.upper_shape(spec.family, k.c2);
    (lower, upper)
}

/// One empirical kernel value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: usize,
    pub y: usize,
    pub t: f64,
    pub d: f64,
    pub p: f64,
}

/// Samples admitted to a fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_min: f64,
    pub t_max: f64,
    /// Pairs with `0 < d < min_distance` are excluded; `d = 0` is kept.
    pub min_distance: f64,
    /// Values below `rel_floor * p_t(x, x)` are spectral round-off and are dropped.
    pub rel_floor: f64,
}

/// Default for [`FitWindow::rel_floor`].
pub const REL_FLOOR: f64 = 1e-9;

impl fmt::Display for FitWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t in [{:e}, {:e}), d = 0 or d >= {:e}, p >= {:e} p_t(x,x)",
            self.t_min, self.t_max, self.min_distance, self.rel_floor
        )
    }
}

/// Observations of `grid` on `pairs` inside `window`; `pairs` must start at sources.
pub fn observations(
    grid: &HeatKernelGrid,
    space: &FiniteMetricSpace,
    pairs: &[(usize, usize)],
    window: &FitWindow,
) -> Result<Vec<Observation>> {
    let mut out = Vec::new();
    for &(x, y) in pairs {
        let i = grid
            .source_index(x)
            .ok_or_else(|| Error::InvalidInput(format!("vertex {x} is not a kernel source")))?;
        let d = space.d(x, y);
        if d > 0.0 && d < window.min_distance {
            continue;
        }
        for (k, &t) in grid.t_grid.iter().enumerate() {
            let p = grid.p(k, i, y);
            if t >= window.t_min && t < window.t_max && p >= window.rel_floor * grid.p(k, i, x) {
                out.push(Observation { x, y, t, d, p });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NearDiagonal,
    JumpDominated,
    Exponential,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::NearDiagonal => "near_diagonal",
            Regime::JumpDominated => "jump_dominated",
            Regime::Exponential => "exponential",
        }
    }
}

/// Near-diagonal when `d <= eta scale^{-1}(t)`; otherwise jump-dominated when the jump
/// term beats `e^{-S}/V`, exponential else.
fn regime(spec: &BoundSpec, t: &BoundTerms) -> Regime {
    if t.d <= spec.eta * t.radius {
        Regime::NearDiagonal
    } else if !spec.family.is_local() && t.jump >= t.prefactor * (-t.sup).exp() {
        Regime::JumpDominated
    } else {
        Regime::Exponential
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub max_log_ratio: f64,
    pub max_drift: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            max_log_ratio: 2.5,
            max_drift: 0.25,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportRow {
    pub x: usize,
    pub y: usize,
    pub t: f64,
    pub d: f64,
    pub p: f64,
    pub lower: f64,
    pub upper: f64,
    pub chain_scale: f64,
    pub regime: Regime,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeCounts {
    pub near_diagonal: usize,
    pub jump_dominated: usize,
    pub exponential: usize,
}

/// Worst log-ratios restricted to one regime.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegimeRatios {
    pub upper: f64,
    pub lower: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparabilityReport {
    pub family: Family,
    pub constants: Constants,
    /// Whether some `c2 in [0, C_MAX]` keeps the upper bound on every sample.
    pub upper_identified: bool,
    /// Same for `c1` and the lower bound; true for upper-only families.
    pub lower_identified: bool,
    /// `log(p / upper)` and `log(lower / p)` per row, with `C = 1`.
    pub log_ratios: Vec<(f64, f64)>,
    pub max_upper_ratio: f64,
    pub max_lower_ratio: f64,
    pub regimes: RegimeCounts,
    pub by_regime: Vec<(Regime, RegimeRatios)>,
    pub window: String,
    pub thresholds: Thresholds,
    pub pass: bool,
    /// Per-sample rows, exported as CSV only.
    #[serde(skip)]
    pub rows: Vec<ReportRow>,
}

impl ComparabilityReport {
    pub fn max_log_ratio(&self) -> f64 {
        self.max_upper_ratio.max(self.max_lower_ratio)
    }

    /// CSV rows `x,y,t,d,p,lower,upper,chain_scale,regime`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,t,d,p,lower,upper,chain_scale,regime")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.x,
                r.y,
                crate::fmt_f64(r.t),
                crate::fmt_f64(r.d),
                crate::fmt_f64(r.p),
                crate::fmt_f64(r.lower),
                crate::fmt_f64(r.upper),
                crate::fmt_f64(r.chain_scale),
                r.regime.name()
            )?;
        }
        Ok(())
    }
}

/// Largest exponential constant searched by [`fit_envelope`].
pub const C_MAX: f64 = 1e3;

/// Boundary of `{c in [0, C_MAX] : ok(c)}` for `ok` monotone in `c`; `holds_below` says
/// whether the set is an initial segment. `None` if the set is empty.
fn monotone_boundary<F: Fn(f64) -> bool>(ok: F, holds_below: bool) -> Option<f64> {
    let (inside, outside) = if holds_below { (0.0, C_MAX) } else { (C_MAX, 0.0) };
    if !ok(inside) {
        return None;
    }
    if ok(outside) {
        return Some(outside);
    }
    let (mut a, mut b) = (inside, outside);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if ok(m) {
            a = m;
        } else {
            b = m;
        }
        if (b - a).abs() <= 1e-12 * a.abs().max(b.abs()) {
            break;
        }
    }
    Some(a)
}

/// Fits `(k, C, c1, c2)` to observations.
///
/// `k` and `C` are the midpoint and half-spread of `log(p / G)` over the samples whose
/// shape does not involve the exponential constant: near-diagonal samples
/// (`d <= eta scale^{-1}(t)`, shape `1/V`) and, for jump families, jump-dominated ones
/// (shape `1/V ^ t/(V psi_j)`). With `k, C` fixed, `c2` is the largest constant keeping
/// the upper bound on every sample and `c1` the smallest keeping the lower bound. A side
/// whose constant cannot be found in `[0, C_MAX]`, or sits at the end of that range, is
/// reported as unidentified; its ratios are evaluated at the boundary value. The fit is deterministic.
pub fn fit_envelope(
    obs: &[Observation],
    volumes: &BallVolumes,
    spec: &BoundSpec,
    window: &FitWindow,
    thresholds: Thresholds,
) -> Result<ComparabilityReport> {
    if obs.is_empty() {
        return Err(Error::EmptyWindow(format!("no observations in {window}")));
    }
    if obs.iter().any(|o| !(o.p > 0.0)) {
        return Err(Error::Numerical("nonpositive kernel value in the window".into()));
    }
    let terms: Vec<BoundTerms> = obs
        .par_iter()
        .map(|o| bound_terms(spec, &|r| volumes.volume(o.x, r), o.d, o.t))
        .collect::<Result<_>>()?;
    let fam = spec.family;
    let tags: Vec<Regime> = terms.iter().map(|t| regime(spec, t)).collect();
    let lp: Vec<f64> = obs.iter().map(|o| o.p.ln()).collect();
    let has_lower = fam != Family::UhkUpper;

    let centering: Vec<f64> = terms
        .iter()
        .zip(&tags)
        .zip(&lp)
        .filter_map(|((t, r), l)| {
            if !fam.has_exponential() {
                return Some(l - t.upper_shape(fam, 0.0).ln());
            }
            match r {
                Regime::NearDiagonal => Some(l - t.prefactor.ln()),
                Regime::JumpDominated => Some(l - t.prefactor.min(t.jump).ln()),
                Regime::Exponential => None,
            }
        })
        .collect();
    if centering.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no near-diagonal or jump-dominated samples in {window}"
        )));
    }
    let hi = centering.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = centering.iter().copied().fold(f64::INFINITY, f64::min);
    let m = 0.5 * (hi + lo);
    let log_c = 0.5 * (hi - lo);
    let tol = log_c + 1e-12 * (1.0 + log_c.abs());

    // the centering rows already fix m and C, so only the exponential regime
    // constrains the decay constants
    let decay: Vec<(&BoundTerms, f64)> = terms
        .iter()
        .zip(&tags)
        .zip(&lp)
        .filter(|((_, r), _)| **r == Regime::Exponential)
        .map(|((t, _), l)| (t, *l))
        .collect();
    let upper_excess = |c: f64| -> f64 {
        decay
            .iter()
            .map(|(t, l)| l - m - t.upper_shape(fam, c).ln())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let lower_excess = |c: f64| -> f64 {
        decay
            .iter()
            .map(|(t, l)| m + t.lower_shape(fam, c, spec.eta).ln() - l)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (c2, c1, upper_identified, lower_identified) = if fam.has_exponential() {
        let c2 = monotone_boundary(|c| upper_excess(c) <= tol, true);
        let c1 = if has_lower {
            monotone_boundary(|c| lower_excess(c) <= tol, false)
        } else {
            None
        };
        // a constant pinned at the end of the search range is unconstrained by the data
        (
            c2.unwrap_or(0.0),
            c1.unwrap_or(C_MAX),
            c2.is_some_and(|c| c < C_MAX),
            c1.is_some_and(|c| c > 0.0) || !has_lower,
        )
    } else {
        (spec.constants.c2, spec.constants.c1, true, true)
    };

    let mut log_ratios = Vec::with_capacity(obs.len());
    let mut rows = Vec::with_capacity(obs.len());
    let mut by = [RegimeRatios {
        upper: f64::NEG_INFINITY,
        lower: f64::NEG_INFINITY,
    }; 3];
    let mut counts = RegimeCounts::default();
    for ((o, t), (r, l)) in obs.iter().zip(&terms).zip(tags.iter().zip(&lp)) {
        let up = m + t.upper_shape(fam, c2).ln();
        let low = m + t.lower_shape(fam, c1, spec.eta).ln();
        let ratio = (l - up, low - l);
        log_ratios.push(ratio);
        let slot = match r {
            Regime::NearDiagonal => {
                counts.near_diagonal += 1;
                0
            }
            Regime::JumpDominated => {
                counts.jump_dominated += 1;
                1
            }
            Regime::Exponential => {
                counts.exponential += 1;
                2
            }
        };
        by[slot].upper = by[slot].upper.max(ratio.0);
        by[slot].lower = by[slot].lower.max(ratio.1);
        rows.push(ReportRow {
            x: o.x,
            y: o.y,
            t: o.t,
            d: o.d,
            p: o.p,
            lower: (low - log_c).exp(),
            upper: (up + log_c).exp(),
            chain_scale: t.chain_scale,
            regime: *r,
        });
    }
    let max_upper_ratio = log_ratios.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let max_lower_ratio = log_ratios.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let by_regime = [Regime::NearDiagonal, Regime::JumpDominated, Regime::Exponential]
        .into_iter()
        .zip(by)
        .filter(|(_, v)| v.upper.is_finite() || v.lower.is_finite())
        .collect();
    let within = |v: f64| v <= thresholds.max_log_ratio;
    let pass = within(max_upper_ratio) && (!has_lower || within(max_lower_ratio));
    Ok(ComparabilityReport {
        family: fam,
        constants: Constants {
            c: log_c.exp(),
            c1,
            c2,
            norm: m.exp(),
        },
        upper_identified,
        lower_identified,
        log_ratios,
        max_upper_ratio,
        max_lower_ratio,
        regimes: counts,
        by_regime,
        window: window.to_string(),
        thresholds,
        pass,
        rows,
    })
}

/// Largest relative change `|a_{k+1}/a_k - 1|` of `C`, `c1` and `c2` between consecutive
/// reports (exponential constants only where both reports identified them).
pub fn constant_drift(reports: &[ComparabilityReport]) -> f64 {
    let mut worst = 0.0_f64;
    for w in reports.windows(2) {
        let (a, b) = (&w[0].constants, &w[1].constants);
        worst = worst.max((b.c / a.c - 1.0).abs());
        if w[0].family.has_exponential() {
            if w[0].lower_identified && w[1].lower_identified && w[0].family != Family::UhkUpper {
                worst = worst.max((b.c1 / a.c1 - 1.0).abs());
            }
            if w[0].upper_identified && w[1].upper_identified {
                worst = worst.max((b.c2 / a.c2 - 1.0).abs());
            }
        }
    }
    worst
}

/// One pair of [`crossover_analysis`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossoverRow {
    pub x: usize,
    pub y: usize,
    pub d: f64,
    /// Time where `t/(V psi_j)` equals `V^{-1} e^{-c S}`, `c` being
    /// [`CrossoverTable::exponent_constant`].
    pub predicted_t: Option<f64>,
    /// First grid time (linearly interpolated in `log t`) where `p / (t/(V psi_j))` rises
    /// a factor 2 above its smallest value for the pair.
    pub measured_t: Option<f64>,
    pub tag: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossoverTable {
    pub rows: Vec<CrossoverRow>,
    /// Fitted `c2` when the upper bound identified it, else 1.
    pub exponent_constant: f64,
    /// Whether predicted crossover times increase with `d`.
    pub predicted_monotone: bool,
    /// Same for the measured times.
    pub measured_monotone: bool,
    /// [`concordance`] of the predicted times with `d`.
    pub predicted_concordance: Option<f64>,
    pub measured_concordance: Option<f64>,
}

/// Log-grid points scanned for the predicted crossover.
const CROSSOVER_SCAN: usize = 120;

/// Times at which the jump term of a mixed family hands over to the exponential term.
pub fn crossover_analysis(
    obs: &[Observation],
    volumes: &BallVolumes,
    spec: &BoundSpec,
    report: &ComparabilityReport,
) -> Result<CrossoverTable> {
    if spec.family.is_local() || !spec.family.has_exponential() {
        return Err(Error::InvalidInput(format!(
            "crossover needs a mixed family, got {}",
            spec.family
        )));
    }
    let k = report.constants;
    let c_exp = if report.upper_identified { k.c2 } else { 1.0 };
    let t_max = spec.t_max()?;
    let mut pairs: Vec<(usize, usize, f64)> = obs.iter().map(|o| (o.x, o.y, o.d)).collect();
    pairs.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap().then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    pairs.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    let mut rows = Vec::new();
    for (x, y, d) in pairs {
        if d == 0.0 {
            rows.push(CrossoverRow {
                x,
                y,
                d,
                predicted_t: None,
                measured_t: None,
                tag: "near_diagonal_only".into(),
            });
            continue;
        }
        let vol = |r: f64| volumes.volume(x, r);
        // jump minus exponential, in logs; positive at small t
        let gap = |lt: f64| -> Result<f64> {
            let t = bound_terms(spec, &vol, d, lt.exp())?;
            Ok(t.jump.ln() - (t.prefactor.ln() - c_exp * t.sup))
        };
        let (a, b) = ((t_max * 1e-12).ln(), (t_max * (1.0 - 1e-9)).ln());
        // first sign change on a log grid, then bisection
        let mut predicted_t = None;
        let mut prev = (a, gap(a)?);
        for i in 1..=CROSSOVER_SCAN {
            let lt = a + (b - a) * i as f64 / CROSSOVER_SCAN as f64;
            let g = gap(lt)?;
            if prev.1 > 0.0 && g <= 0.0 {
                let (mut lo, mut hi) = (prev.0, lt);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if gap(mid)? > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                predicted_t = Some((0.5 * (lo + hi)).exp());
                break;
            }
            prev = (lt, g);
        }
        let psi_j = spec.scale("psi_j")?;
        let mut series: Vec<(f64, f64)> = obs
            .iter()
            .filter(|o| o.x == x && o.y == y)
            .map(|o| (o.t.ln(), (o.p * vol(d) * psi_j.value(d) / o.t).ln()))
            .collect();
        series.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // departure of p / J by a factor 2 above its smallest value along the series
        let base = series.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let level = base + std::f64::consts::LN_2;
        let measured_t = series.windows(2).find_map(|w| {
            let ((t0, g0), (t1, g1)) = (w[0], w[1]);
            (g0 <= level && g1 > level).then(|| (t0 + (t1 - t0) * (level - g0) / (g1 - g0)).exp())
        });
        let tag = match (predicted_t, measured_t) {
            (Some(_), Some(_)) => "crossover",
            (None, None) => "single_regime",
            _ => "partial",
        };
        rows.push(CrossoverRow {
            x,
            y,
            d,
            predicted_t,
            measured_t,
            tag: tag.into(),
        });
    }
    let monotone = |get: &dyn Fn(&CrossoverRow) -> Option<f64>| {
        let v: Vec<(f64, f64)> = rows.iter().filter_map(|r| get(r).map(|t| (r.d, t))).collect();
        v.windows(2).all(|w| w[1].0 == w[0].0 || w[1].1 >= w[0].1 * (1.0 - 1e-9))
    };
    let predicted: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.predicted_t.map(|t| (r.d, t))).collect();
    let measured: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.measured_t.map(|t| (r.d, t))).collect();
    Ok(CrossoverTable {
        exponent_constant: c_exp,
        predicted_monotone: monotone(&|r| r.predicted_t),
        measured_monotone: monotone(&|r| r.measured_t),
        predicted_concordance: concordance(&predicted),
        measured_concordance: concordance(&measured),
        rows,
    })
}

/// Fraction of pairs of points with distinct `d` ordered the same way in `d` and `t`;
/// `None` with fewer than two distinct distances.
pub fn concordance(points: &[(f64, f64)]) -> Option<f64> {
    let (mut agree, mut total) = (0usize, 0usize);
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            if a.0 != b.0 {
                total += 1;
                if (a.0 < b.0) == (a.1 < b.1) {
                    agree += 1;
                }
            }
        }
    }
    (total > 0).then(|| agree as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_scales() -> Scales {
        Scales {
            psi_c: Some(ScaleFunction::power(3.0)),
            psi_j: Some(ScaleFunction::power(3.0)),
            phi: Some(ScaleFunction::power(3.0)),
            rho: Some(ScaleFunction::power(1.5)),
        }
    }

    fn vol(r: f64) -> f64 {
        r.powi(2).min(1.0)
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
            let s = serde_json::to_string(&f).unwrap();
            assert_eq!(s, format!("\"{}\"", f.name()));
        }
        assert!("nope".parse::<Family>().is_err());
    }

    #[test]
    fn missing_scale_and_range_errors() {
        let e = BoundSpec::new(Family::RhoGaussian, Scales { psi_c: Some(ScaleFunction::power(2.0)), ..Default::default() });
        assert_eq!(e.unwrap_err(), Error::MissingScale("rho"));
        let s = BoundSpec::new(Family::RhoGaussian, power_scales()).unwrap();
        assert!(matches!(evaluate_bound(&s, &vol, 0.5, 1.5), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn diagonal_reduces_to_prefactor() {
        let s = BoundSpec::new(Family::RhoGaussian, power_scales()).unwrap().with_constants(Constants {
            c: 2.0,
            c1: 3.0,
            c2: 0.5,
            norm: 1.0,
        });
        let t: f64 = 0.125;
        let (lo, up) = evaluate_bound(&s, &vol, 0.0, t).unwrap();
        let p = 1.0 / vol(t.cbrt());
        assert!((lo - p / 2.0).abs() < 1e-12 * p && (up - 2.0 * p).abs() < 1e-12 * p);
    }

    #[test]
    fn jump_term_dominates_far_out() {
        let s = BoundSpec::new(Family::SplusHk, power_scales()).unwrap();
        let (d, t) = (0.9, 1e-6);
        let terms = bound_terms(&s, &vol, d, t).unwrap();
        let (_, up) = bounds_from_terms(&s, &terms);
        let jump = t / (vol(d) * d.powi(3));
        assert!((up / jump - 1.0).abs() < 1e-6, "{up} {jump}");
        // stable_like is the same bound without the exponential term
        let st = BoundSpec::new(Family::StableLike, power_scales()).unwrap();
        for (d, t) in [(0.9, 1e-6), (0.1, 1e-3), (0.0, 0.2), (0.5, 0.5)] {
            let a = bound_terms(&st, &vol, d, t).unwrap();
            let b = bound_terms(&s, &vol, d, t).unwrap();
            assert_eq!(a.upper_shape(Family::StableLike, 1.0), b.prefactor.min(b.jump));
        }
    }

    #[test]
    fn shk_equals_splus_with_identity_rho() {
        let mut sc = power_scales();
        sc.rho = Some(ScaleFunction::identity());
        let k = Constants { c: 1.7, c1: 2.0, c2: 0.8, norm: 1.3 };
        let a = BoundSpec::new(Family::Shk, sc.clone()).unwrap().with_constants(k);
        let b = BoundSpec::new(Family::SplusHk, sc).unwrap().with_constants(k);
        for d in [0.0, 0.01, 0.1, 0.4, 0.9] {
            for t in [1e-6, 1e-3, 0.1, 0.7] {
                let x = evaluate_bound(&a, &vol, d, t).unwrap();
                let y = evaluate_bound(&b, &vol, d, t).unwrap();
                assert_eq!(x.0.to_bits(), y.0.to_bits());
                assert_eq!(x.1.to_bits(), y.1.to_bits());
            }
        }
    }

    #[test]
    fn synthetic_round_trip() {
        use crate::chain::FiniteMetricSpace;
        // two far-apart points: every ball below radius 10 has mass 1/2
        let space = FiniteMetricSpace::from_line(&[0.0, 10.0]).unwrap();
        let vols = BallVolumes::new(&space, &[0.5, 0.5]).unwrap();
        let v = |r: f64| vols.volume(0, r);
        let spec = BoundSpec::new(Family::RhoGaussian, power_scales()).unwrap();
        let mut obs = Vec::new();
        for (i, d) in [0.0, 0.02, 0.05, 0.1, 0.2, 0.4].into_iter().enumerate() {
            for t in [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3] {
                let tm = bound_terms(&spec, &v, d, t).unwrap();
                let wobble = 1.0 + 0.004 * (i as f64 + 7.0 * t).sin();
                obs.push(Observation { x: 0, y: i, t, d, p: 2.0 * tm.upper_shape(spec.family, 0.7) * wobble });
            }
        }
        let w = FitWindow { t_min: 0.0, t_max: 1.0, min_distance: 0.0, rel_floor: REL_FLOOR };
        let r = fit_envelope(&obs, &vols, &spec, &w, Thresholds::default()).unwrap();
        assert!(r.upper_identified && r.lower_identified);
        assert!((r.constants.c1 / 0.7 - 1.0).abs() < 0.05, "{:?}", r.constants);
        assert!((r.constants.c2 / 0.7 - 1.0).abs() < 0.05, "{:?}", r.constants);
        assert!((r.constants.norm / 2.0 - 1.0).abs() < 0.05);
        assert!(r.max_log_ratio() < 0.05 && r.pass);
        for row in &r.rows {
            assert!(row.lower <= row.upper);
        }
        let again = fit_envelope(&obs, &vols, &spec, &w, Thresholds::default()).unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), serde_json::to_string(&again).unwrap());
    }
}
