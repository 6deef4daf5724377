//! Batch experiments: a JSON configuration, one run per experiment kind, artifacts
//! written under an output directory together with `manifest.json`.

use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::chain::{
    chain_profile, fit_rho_exponent, geometric_eps_grid, sandwich_from_profile, FiniteMetricSpace, FitConfig,
};
use crate::error::Error;
use crate::gasket::{build_gasket, solve_renormalization, GasketParams};
use crate::growth::{corner_chain_growth, measured_crossover, CORNER_PAIRS, GAMMA_GAP};
use crate::heat::{kernel_from_spectrum, markov_checks, Modes};
use crate::scale::{certify_doubling, phi_from_scales, probe_grid, ScaleFunction};
use crate::study::{
    near_diagonal_floor, on_diagonal_slope, select_pairs, HeatStudy, OperatorChoice, PairPolicy, ScaleConfig,
    TimeGrid,
};
use crate::verify::{constant_drift, crossover_analysis, Family, Regime, Thresholds};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Renorm,
    Exponents,
    Gasket,
    Chain,
    Phi,
    LocalHk,
    JumpHk,
    Verify,
    Crossover,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Renorm => "renorm",
            Kind::Exponents => "exponents",
            Kind::Gasket => "gasket",
            Kind::Chain => "chain",
            Kind::Phi => "phi",
            Kind::LocalHk => "local_hk",
            Kind::JumpHk => "jump_hk",
            Kind::Verify => "verify",
            Kind::Crossover => "crossover",
        }
    }
}

/// Chain-metric settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    /// Distance matrix CSV; without it the corner pairs of the gasket are profiled.
    pub csv: Option<PathBuf>,
    /// Grid ratio of the `eps` grid for CSV spaces.
    pub eps_ratio: f64,
    pub fit: FitConfig,
    /// Decades of `eps` in the transform sandwich on the finest gasket level.
    pub sandwich_decades: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            csv: None,
            eps_ratio: 0.8,
            fit: FitConfig::default(),
            sandwich_decades: 3.0,
        }
    }
}

/// Tabulation range of the `phi` experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhiConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub per_decade: usize,
}

impl Default for PhiConfig {
    fn default() -> Self {
        PhiConfig {
            r_min: 1e-6,
            r_max: 1.0,
            per_decade: 10,
        }
    }
}

/// Largest level with a dense heat kernel.
pub const MAX_HEAT_LEVEL: usize = 7;
/// Largest level for network-only experiments.
pub const MAX_LEVEL: usize = 9;

/// Relative deviation allowed between the on-diagonal slope and `-alpha*/beta*`.
pub const SLOPE_TOLERANCE: f64 = 0.07;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    pub tau: f64,
    /// Level of single-level experiments.
    pub level: usize,
    /// Levels of `verify` and of the gasket `chain` profile.
    pub levels: Vec<usize>,
    pub family: Family,
    /// Heat operator; `verify` infers it from the family.
    pub operator: Option<OperatorChoice>,
    pub scales: ScaleConfig,
    pub time_grid: TimeGrid,
    pub pairs: PairPolicy,
    pub thresholds: Thresholds,
    pub eta: f64,
    pub seed: u64,
    pub chain: ChainConfig,
    pub phi: PhiConfig,
    /// Output directory; not part of the configuration hash.
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: None,
            tau: 0.6,
            level: 5,
            levels: vec![4, 5, 6],
            family: Family::RhoGaussian,
            operator: None,
            scales: ScaleConfig::default(),
            time_grid: TimeGrid::default(),
            pairs: PairPolicy::default(),
            thresholds: Thresholds::default(),
            eta: 0.25,
            seed: 1,
            chain: ChainConfig::default(),
            phi: PhiConfig::default(),
            out: None,
        }
    }
}

/// Failure of a run, mapped to the process exit status.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(Error),
    Io(io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "invalid config: {m}"),
            RunError::Numerical(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            RunError::Config(e.to_string())
        } else {
            RunError::Numerical(e)
        }
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The configuration as hashed: `out` cleared.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        crate::json::to_string_pretty(&c)
    }

    /// Hex SHA-256 of [`ExperimentConfig::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn kind(&self) -> Result<Kind, RunError> {
        self.kind.ok_or_else(|| RunError::Config("experiment kind is missing".into()))
    }

    /// Kind-specific checks that do not need any computation.
    pub fn validate(&self) -> Result<(), RunError> {
        let kind = self.kind()?;
        let bad = |m: String| Err(RunError::Config(m));
        if !(self.tau.is_finite()) {
            return bad(format!("tau must be finite, got {}", self.tau));
        }
        let heat = matches!(kind, Kind::LocalHk | Kind::JumpHk | Kind::Crossover);
        if heat && !(1..=MAX_HEAT_LEVEL).contains(&self.level) {
            return bad(format!("level must lie in 1..={MAX_HEAT_LEVEL}, got {}", self.level));
        }
        if matches!(kind, Kind::Gasket) && !(1..=MAX_LEVEL).contains(&self.level) {
            return bad(format!("level must lie in 1..={MAX_LEVEL}, got {}", self.level));
        }
        if kind == Kind::Verify || (kind == Kind::Chain && self.chain.csv.is_none()) {
            let max = if kind == Kind::Verify { MAX_HEAT_LEVEL } else { MAX_LEVEL };
            if self.levels.is_empty() || self.levels.iter().any(|l| !(1..=max).contains(l)) {
                return bad(format!("levels must be nonempty and within 1..={max}, got {:?}", self.levels));
            }
        }
        if kind == Kind::Verify {
            let local = self.family.is_local();
            if let Some(op) = self.operator {
                if (op == OperatorChoice::Local) != local {
                    return bad(format!("family {} does not describe the {op:?} operator", self.family));
                }
            }
        }
        if kind == Kind::Crossover && self.family.is_local() {
            return bad(format!("crossover needs a jump family, got {}", self.family));
        }
        if !(self.eta > 0.0) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.thresholds.max_log_ratio > 0.0 && self.thresholds.max_drift > 0.0) {
            return bad("thresholds must be positive".into());
        }
        if kind == Kind::Phi && !(self.phi.r_min > 0.0 && self.phi.r_max > self.phi.r_min && self.phi.per_decade > 0) {
            return bad("phi range needs 0 < r_min < r_max and per_decade > 0".into());
        }
        if kind == Kind::Chain && !(self.chain.eps_ratio > 0.0 && self.chain.eps_ratio < 1.0) {
            return bad(format!("chain eps_ratio must lie in (0, 1), got {}", self.chain.eps_ratio));
        }
        Ok(())
    }
}

/// Artifacts written by a run, relative to the output directory.
#[derive(Debug)]
pub struct Artifacts {
    dir: Option<PathBuf>,
    pub names: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: Option<PathBuf>) -> io::Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Artifacts { dir, names: Vec::new() })
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> io::Result<()> {
        self.with_writer(name, |w| w.write_all(crate::json::to_string_pretty(value).as_bytes()))
    }

    pub fn with_writer<F: FnOnce(&mut dyn Write) -> io::Result<()>>(&mut self, name: &str, f: F) -> io::Result<()> {
        if let Some(d) = &self.dir {
            let mut w = BufWriter::new(fs::File::create(d.join(name))?);
            f(&mut w)?;
            w.flush()?;
            self.names.push(name.to_string());
        }
        Ok(())
    }
}

/// Result of a run: overall pass flag and one summary line per stage.
#[derive(Debug)]
pub struct RunOutcome {
    pub pass: bool,
    pub summary: Vec<String>,
    pub artifacts: Vec<String>,
    pub config_hash: String,
}

/// Runs `config`, writing artifacts and `manifest.json` when `out` is set.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    config.validate()?;
    let kind = config.kind()?;
    let mut art = Artifacts::new(config.out.clone())?;
    let mut summary = Vec::new();
    art.with_writer("config.json", |w| w.write_all(config.canonical().as_bytes()))?;
    let pass = match kind {
        Kind::Renorm => run_renorm(config, &mut art, &mut summary)?,
        Kind::Exponents => run_exponents(config, &mut art, &mut summary)?,
        Kind::Gasket => run_gasket(config, &mut art, &mut summary)?,
        Kind::Chain => run_chain(config, &mut art, &mut summary)?,
        Kind::Phi => run_phi(config, &mut art, &mut summary)?,
        Kind::LocalHk | Kind::JumpHk => run_heat(config, kind, &mut art, &mut summary)?,
        Kind::Verify => run_verify(config, &mut art, &mut summary)?,
        Kind::Crossover => run_crossover(config, &mut art, &mut summary)?,
    };
    let hash = config.hash();
    let mut names = art.names.clone();
    names.push("manifest.json".into());
    names.sort();
    let manifest = json!({
        "kind": kind.name(),
        "config_hash": hash,
        "artifacts": names,
        "pass": pass,
    });
    art.json("manifest.json", &manifest)?;
    Ok(RunOutcome {
        pass,
        summary,
        artifacts: names,
        config_hash: hash,
    })
}

fn run_renorm(c: &ExperimentConfig, art: &mut Artifacts, summary: &mut Vec<String>) -> Result<bool, RunError> {
    let (sigma, lambda) = solve_renormalization(c.tau)?;
    let p = GasketParams::from_tau(c.tau)?;
    let r = p.residuals();
    let pass = r.renormalization.abs() < 1e-12 && r.lambda.abs() < 1e-12;
    art.json(
        "renorm.json",
        &json!({"tau": c.tau, "sigma": sigma, "lambda": lambda, "alpha_star": p.alpha_star,
                "residuals": {"renormalization": r.renormalization, "lambda": r.lambda}, "pass": pass}),
    )?;
    summary.push(format!(
        "renorm: tau={} sigma={} lambda={} residuals=({:e}, {:e}) pass={pass}",
        c.tau, sigma, lambda, r.renormalization, r.lambda
    ));
    Ok(pass)
}

fn run_exponents(c: &ExperimentConfig, art: &mut Artifacts, summary: &mut Vec<String>) -> Result<bool, RunError> {
    let p = GasketParams::from_tau(c.tau)?;
    let r = p.residuals();
    let pass = r.all_within(1e-9);
    art.json("exponents.json", &json!({"params": p, "residuals": r, "pass": pass}))?;
    summary.push(format!(
        "exponents: tau={} sigma={} lambda={} alpha*={} beta*={} gamma1={} gamma2={} pass={pass}",
        p.tau, p.sigma, p.lambda, p.alpha_star, p.beta_star, p.gamma1, p.gamma2
    ));
    Ok(pass)
}

fn run_gasket(c: &ExperimentConfig, art: &mut Artifacts, summary: &mut Vec<String>) -> Result<bool, RunError> {
    let p = GasketParams::from_tau(c.tau)?;
    let g = build_gasket(&p, c.level)?;
    let corners: Vec<f64> = CORNER_PAIRS
        .iter()
        .map(|&(a, b, _)| g.effective_resistance(g.corners[a], g.corners[b]))
        .collect::<crate::Result<_>>()?;
    art.json("gasket.json", &g.to_json())?;
    art.json(
        "resistance.json",
        &json!({"level": c.level, "vertices": g.len(), "edges": g.edges.len(),
                "corner_resistance": CORNER_PAIRS.iter().zip(&corners)
                    .map(|(p, r)| json!({"pair": p.2, "resistance": r})).collect::<Vec<_>>()}),
    )?;
    summary.push(format!(
        "gasket: tau={} level={} vertices={} edges={} corner resistances={:?}",
        c.tau,
        c.level,
        g.len(),
        g.edges.len(),
        corners
    ));
    Ok(true)
}

fn run_chain(c: &ExperimentConfig, art: &mut Artifacts, summary: &mut Vec<String>) -> Result<bool, RunError> {
    if let Some(path) = &c.chain.csv {
        let file = fs::File::open(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        let space = FiniteMetricSpace::from_csv(BufReader::new(file))?;
        if space.len() < 2 {
            return Err(RunError::Config("distance CSV needs at least two points".into()));
        }
        let diam = space.diameter();
        let (mut a, mut b) = (0, 1);
        for x in 0..space.len() {
            for y in x + 1..space.len() {
                if space.d(x, y) == diam {
                    (a, b) = (x, y);
                }
            }
        }
        let mut policy = c.pairs;
        policy.corners = true;
        policy.diagonal = false;
        let pairs = select_pairs(space.len(), &[a, b], &policy, c.seed);
        let grid = geometric_eps_grid(space.min_separation(), diam, c.chain.eps_ratio);
        let profile = chain_profile(&space, &pairs, &grid)?;
        art.with_writer("profile.csv", |w| profile.write_csv(w, &space.labels))?;
        let fit = fit_rho_exponent(&profile, &c.chain.fit)?;
        art.json("fit.json", &fit)?;
        summary.push(format!(
            "chain: {} points, {} pairs, gamma={} C-={} C+={} two_sided={:?}",
            space.len(),
            pairs.len(),
            fit.gamma,
            fit.c_minus,
            fit.c_plus,
            fit.two_sided
        ));
        return Ok(true);
    }
    let p = GasketParams::from_tau(c.tau)?;
    let growth = corner_chain_growth(&p, &c.levels)?;
    art.json("growth.json", &growth)?;
    for pg in &growth.pairs {
        summary.push(format!(
            "chain: pair {} predicted={} fitted={:?} samples={} r_inf={:?}",
            pg.pair,
            pg.predicted,
            pg.fit.as_ref().map(|f| f.gamma),
            pg.n_samples,
            pg.r_infinity
        ));
    }
    if let Some(f) = &growth.pooled {
        summary.push(format!("chain: pooled gamma={} samples={}", f.gamma, f.n_samples));
    }
    let level = *c.levels.iter().max().expect("validated");
    let sandwich = gasket_sandwich(&p, level, &c.pairs, c.seed, c.chain.sandwich_decades)?;
    art.json("sandwich.json", &sandwich)?;
    summary.push(format!(
        "chain: transform sandwich at level {level}: C={} drift={}",
        sandwich.c, sandwich.drift
    ));
    Ok(growth.pooled.is_some())
}

/// Transform sandwich of `rho = r^gamma1` on the normalized resistance metric, over
/// `decades` decades of `eps` starting just above the vertex spacing.
pub fn gasket_sandwich(
    params: &GasketParams,
    level: usize,
    policy: &PairPolicy,
    seed: u64,
    decades: f64,
) -> crate::Result<crate::chain::SandwichReport> {
    let g = build_gasket(params, level)?;
    let raw = g.resistance_space()?;
    let space = raw.scaled(1.0 / raw.diameter());
    let mut policy = *policy;
    policy.diagonal = false;
    let pairs = select_pairs(g.len(), &g.corners, &policy, seed);
    let lo = 1.5 * space.min_separation();
    let grid = geometric_eps_grid(lo, lo * 10f64.powf(decades), 10f64.powf(-0.25));
    let profile = chain_profile(&space, &pairs, &grid)?;
    Ok(sandwich_from_profile(&profile, &ScaleFunction::power(params.gamma1)))
}

/// Relative tolerance of the closed-form check of `Phi` under the default scales.
pub const PHI_CLOSED_FORM_TOL: f64 = 0.01;

fn run_phi(c: &ExperimentConfig, art: &mut Artifacts, summary: &mut Vec<String>) -> Result<bool, RunError> {
    let p = GasketParams::from_tau(c.tau)?;
    let scales = ScaleConfig {
        phi: None,
        ..c.scales.clone()
    };
    let resolved = scales.resolve(&p)?;
    let (psi_c, psi_j) = (resolved.psi_c.unwrap(), resolved.psi_j.unwrap());
    let grid = probe_grid(c.phi.r_min, c.phi.r_max, c.phi.per_decade);
    let phi = phi_from_scales(&psi_c, &psi_j, &grid)?;
    let cert = certify_doubling(&phi.phi, &grid)?;
    // With the default scales Phi has the closed form r^beta* log(1/r) below e^{-2/beta*}.
    let closed_form = (c.scales.psi_c.is_none() && c.scales.psi_j.is_none()).then(|| {
        let knee = (-2.0 / p.beta_star).exp();
        grid.iter()
            .filter(|&&r| r <= knee)
            .map(|&r| (phi.phi.value(r) / (r.powf(p.beta_star) * (1.0 / r).ln()) - 1.0).abs())
            .fold(0.0, f64::max)
    });
    let pass = closed_form.map_or(true, |e| e < PHI_CLOSED_FORM_TOL);
    art.with_writer("phi.csv", |w| {
        writeln!(w, "r,phi,psi_c,psi_j")?;
        for &r in &grid {
            writeln!(
                w,
                "{},{},{},{}",
                crate::fmt_f64(r),
                crate::fmt_f64(phi.phi.value(r)),
                crate::fmt_f64(psi_c.value(r)),
                crate::fmt_f64(psi_j.value(r))
            )?;
        }
        Ok(())
    })?;
    art.json(
        "phi.json",
        &json!({"comp2": phi.comp2, "comp3": phi.comp3, "certificate": cert, "points": grid.len(),
                "closed_form_max_rel_error": closed_form, "pass": pass}),
    )?;
    summary.push(format!(
        "phi: {} points, Phi <= {} psi_j, doubling exponents [{}, {}], closed-form error {:?} pass={pass}",
        grid.len(),
        phi.comp2,
        cert.beta1,
        cert.beta2,
        closed_form
    ));
    Ok(pass)
}

fn heat_study(c: &ExperimentConfig, level: usize, op: OperatorChoice) -> crate::Result<HeatStudy> {
    let p = GasketParams::from_tau(c.tau)?;
    HeatStudy::new(&p, level, op, &c.scales, &c.pairs, c.seed, &c.time_grid)
}

/// Tolerances of the Markov checks.
pub const SYMMETRY_TOL: f64 = 1e-10;
pub const MARKOV_TOL: f64 = 1e-8;

fn run_heat(c: &ExperimentConfig, kind: Kind, art: &mut Artifacts, summary: &mut Vec<String>) -> Result<bool, RunError> {
    let op = match (kind, c.operator) {
        (_, Some(op)) => op,
        (Kind::JumpHk, None) => OperatorChoice::Jump,
        _ => OperatorChoice::Local,
    };
    let s = heat_study(c, c.level, op)?;
    let grid = s.kernel()?;
    let report = markov_checks(&grid);
    let pass = report.pass(SYMMETRY_TOL, MARKOV_TOL);
    let truncated = kernel_from_spectrum(&s.spectrum, &s.t_grid, &s.sources, Modes::Top(0.5))?;
    let control = markov_checks(&truncated);
    art.with_writer("kernel.csv", |w| grid.write_csv(w))?;
    if let Some(d) = &art.dir {
        grid.write_binary(&d.join("kernel.bin"))?;
        art.names.push("kernel.bin".into());
        art.names.push("kernel.bin.json".into());
    }
    art.json(
        "markov.json",
        &json!({"operator": op, "level": c.level, "vertices": s.graph.len(), "times": s.t_grid.len(),
                "sources": s.sources.len(), "spectral_residual": s.spectrum.residual,
                "checks": report, "chapman_kolmogorov": report.ck_status(), "pass": pass,
                "truncated_top_half": {"checks": control,
                    "conservativeness_violated": control.conservativeness > MARKOV_TOL}}),
    )?;
    summary.push(format!(
        "heat: {op:?} level {} n={} positivity={:e} symmetry={:e} conservativeness={:e} ck={} pass={pass}",
        c.level,
        s.graph.len(),
        report.positivity,
        report.symmetry,
        report.conservativeness,
        report.ck_status()
    ));
    summary.push(format!(
        "heat: truncated spectrum (top 50% modes) conservativeness={:e}",
        control.conservativeness
    ));
    Ok(pass)
}

/// Per-level numbers of a `verify` run.
#[derive(Clone, Debug, Serialize)]
pub struct LevelSummary {
    pub level: usize,
    pub max_upper_ratio: f64,
    pub max_lower_ratio: f64,
    pub constants: crate::verify::Constants,
    pub pass: bool,
    pub on_diagonal_slope: Option<f64>,
    pub near_diagonal_floor: Option<f64>,
    pub regimes: crate::verify::RegimeCounts,
}

fn run_verify(c: &ExperimentConfig, art: &mut Artifacts, summary: &mut Vec<String>) -> Result<bool, RunError> {
    let p = GasketParams::from_tau(c.tau)?;
    let op = if c.family.is_local() {
        OperatorChoice::Local
    } else {
        OperatorChoice::Jump
    };
    let mut reports = Vec::new();
    let mut levels = Vec::new();
    let mut controls = Vec::new();
    for &level in &c.levels {
        let s = heat_study(c, level, op)?;
        let grid = s.kernel()?;
        let report = s.fit(&grid, c.family, c.eta, c.thresholds)?;
        let obs = s.observations(&grid)?;
        let time_scale = if c.family.is_local() {
            s.scales.psi_c.clone()
        } else {
            s.scales.phi.clone()
        }
        .expect("resolved");
        let floor = near_diagonal_floor(&obs, &s.volumes()?, &time_scale);
        art.json(&format!("verify_level{level}.json"), &report)?;
        art.with_writer(&format!("verify_level{level}.csv"), |w| report.write_csv(w))?;
        if !c.family.is_local() && c.family != Family::StableLike {
            let control = s.fit(&grid, Family::StableLike, c.eta, c.thresholds)?;
            let exp = control
                .by_regime
                .iter()
                .find(|(r, _)| *r == Regime::Exponential)
                .map(|(_, v)| *v);
            controls.push(json!({"level": level, "family": Family::StableLike, "pass": control.pass,
                "exponential_regime_lower_ratio": exp.map(|v| v.lower),
                "exponential_regime_upper_ratio": exp.map(|v| v.upper)}));
        }
        summary.push(format!(
            "verify: {} level {level} max log-ratio upper={:.4} lower={:.4} C={:.4} c1={:.4} c2={:.4} regimes={}/{}/{} pass={}",
            c.family,
            report.max_upper_ratio,
            report.max_lower_ratio,
            report.constants.c,
            report.constants.c1,
            report.constants.c2,
            report.regimes.near_diagonal,
            report.regimes.jump_dominated,
            report.regimes.exponential,
            report.pass
        ));
        levels.push(LevelSummary {
            level,
            max_upper_ratio: report.max_upper_ratio,
            max_lower_ratio: report.max_lower_ratio,
            constants: report.constants,
            pass: report.pass,
            on_diagonal_slope: on_diagonal_slope(&obs),
            near_diagonal_floor: floor,
            regimes: report.regimes.clone(),
        });
        reports.push(report);
    }
    let drift = (reports.len() > 1).then(|| constant_drift(&reports));
    let drift_pass = drift.map_or(true, |d| d <= c.thresholds.max_drift);
    let slope_target = -p.alpha_star / p.beta_star;
    let slope_pass = !c.family.is_local()
        || levels.iter().all(|l| {
            l.on_diagonal_slope
                .is_some_and(|s| (s / slope_target - 1.0).abs() <= SLOPE_TOLERANCE)
        });
    let mixed = !c.family.is_local() && c.family.has_exponential();
    let regimes_pass =
        !mixed || levels.iter().all(|l| l.regimes.near_diagonal > 0 && l.regimes.jump_dominated > 0);
    let pass = levels.iter().all(|l| l.pass) && drift_pass && slope_pass && regimes_pass;
    art.json(
        "verify.json",
        &json!({"family": c.family, "tau": c.tau, "levels": levels, "drift": drift, "drift_pass": drift_pass,
                "on_diagonal_slope_target": slope_target, "slope_pass": slope_pass,
                "regimes_populated": regimes_pass, "negative_control": controls, "pass": pass}),
    )?;
    summary.push(format!(
        "verify: drift={} slope target={slope_target:.4} slopes={:?} pass={pass}",
        drift.map_or("n/a".to_string(), |d| format!("{d:.4}")),
        levels.iter().map(|l| l.on_diagonal_slope).collect::<Vec<_>>()
    ));
    Ok(pass)
}

/// Smallest fraction of pair orderings in which the predicted crossover time grows with
/// `d`. Volumes depend on the base point, so strict monotonicity is not expected.
pub const MIN_CONCORDANCE: f64 = 0.9;

fn run_crossover(c: &ExperimentConfig, art: &mut Artifacts, summary: &mut Vec<String>) -> Result<bool, RunError> {
    let p = GasketParams::from_tau(c.tau)?;
    let s = heat_study(c, c.level, OperatorChoice::Jump)?;
    let grid = s.kernel()?;
    let report = s.fit(&grid, c.family, c.eta, c.thresholds)?;
    let obs = s.observations(&grid)?;
    let spec = s.bound_spec(c.family, c.eta)?;
    let table = crossover_analysis(&obs, &s.volumes()?, &spec, &report)?;
    art.with_writer("crossover.csv", |w| {
        writeln!(w, "x,y,d,predicted_t,measured_t,tag")?;
        for r in &table.rows {
            let f = |v: Option<f64>| v.map_or(String::new(), crate::fmt_f64);
            writeln!(w, "{},{},{},{},{},{}", r.x, r.y, crate::fmt_f64(r.d), f(r.predicted_t), f(r.measured_t), r.tag)?;
        }
        Ok(())
    })?;
    let mut local = Vec::new();
    if p.gamma1 - p.gamma2 > GAMMA_GAP {
        let growth = corner_chain_growth(&p, &c.levels)?;
        let finest = growth.levels.last().expect("nonempty levels");
        for (i, pg) in growth.pairs.iter().enumerate() {
            let measured = measured_crossover(
                &finest.profile.eps_grid,
                &finest.profile.values[i],
                finest.profile.base[i],
                p.gamma1,
                p.gamma2,
            );
            local.push(json!({"pair": pg.pair, "r_infinity": pg.r_infinity, "measured": measured}));
        }
    }
    let crossings = table.rows.iter().filter(|r| r.predicted_t.is_some()).count();
    let pass = crossings > 0 && table.predicted_concordance.is_some_and(|c| c >= MIN_CONCORDANCE);
    art.json(
        "crossover.json",
        &json!({"family": c.family, "level": c.level, "table": table, "fit_pass": report.pass,
                "local_two_exponent": local, "pass": pass}),
    )?;
    let counted = |tag: &str| table.rows.iter().filter(|r| r.tag == tag).count();
    summary.push(format!(
        "crossover: {} pairs ({} predicted, {} measured, {} near-diagonal only) c={} concordance with d predicted={:?} measured={:?} pass={pass}",
        table.rows.len(),
        crossings,
        counted("crossover"),
        counted("near_diagonal_only"),
        table.exponent_constant,
        table.predicted_concordance,
        table.measured_concordance
    ));
    Ok(pass)
}

/// Parses `HKLAB_THREADS`-style values.
pub fn parse_threads(v: &str) -> Result<usize, RunError> {
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(RunError::Config(format!("thread count must be a positive integer, got {v:?}"))),
    }
}

/// Object form of a report for ad-hoc inspection.
pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}
