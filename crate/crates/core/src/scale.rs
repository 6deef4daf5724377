//! Scale functions: increasing bijections of `(0, inf)` with power-type doubling bounds.
//!
//! All evaluation happens in log coordinates (`x = ln r`, `ln f(r)`), which keeps
//! values far below `f64::MIN_POSITIVE` representable during quadrature and search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, geometric_grid, golden_max};

fn one() -> f64 {
    1.0
}

/// An increasing map `r -> f(r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleFunction {
    /// `A * r^a`.
    Power {
        #[serde(rename = "A", default = "one")]
        coef: f64,
        a: f64,
    },
    /// `A * r^a * log^b(1 / min(r, r0))`.
    PowerLog {
        #[serde(rename = "A", default = "one")]
        coef: f64,
        a: f64,
        b: f64,
        r0: f64,
    },
    /// `outer(inner(r))`.
    Composed {
        outer: Box<ScaleFunction>,
        inner: Box<ScaleFunction>,
    },
    /// Log-log linear interpolation through strictly increasing `(r, value)` knots,
    /// extended by the end-segment power laws.
    Tabulated { points: Vec<[f64; 2]> },
}

/// Doubling certificate `C^-1 (t/s)^beta1 <= f(t)/f(s) <= C (t/s)^beta2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub beta1: f64,
    pub beta2: f64,
    pub c: f64,
}

/// Lower doubling exponent restricted to scales below `r`, with its constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictedCertificate {
    pub beta1: f64,
    pub c: f64,
    pub r: f64,
}

impl ScaleFunction {
    pub fn power(a: f64) -> Self {
        ScaleFunction::Power { coef: 1.0, a }
    }

    pub fn identity() -> Self {
        Self::power(1.0)
    }

    pub fn power_log(coef: f64, a: f64, b: f64, r0: f64) -> Self {
        ScaleFunction::PowerLog { coef, a, b, r0 }
    }

    pub fn compose(outer: ScaleFunction, inner: ScaleFunction) -> Self {
        ScaleFunction::Composed {
            outer: Box::new(outer),
            inner: Box::new(inner),
        }
    }

    /// Tabulated scale function; knots must be positive and strictly increasing in both coordinates.
    pub fn tabulated(points: Vec<[f64; 2]>) -> Result<Self> {
        let f = ScaleFunction::Tabulated { points };
        f.validate()?;
        Ok(f)
    }

    /// Checks parameter ranges and monotonicity.
    pub fn validate(&self) -> Result<()> {
        match self {
            ScaleFunction::Power { coef, a } => {
                if !(coef.is_finite() && *coef > 0.0 && a.is_finite() && *a > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "power needs A>0, a>0 (A={coef}, a={a})"
                    )));
                }
            }
            ScaleFunction::PowerLog { coef, a, b, r0 } => {
                if !(coef.is_finite() && *coef > 0.0 && a.is_finite() && *a > 0.0 && b.is_finite())
                {
                    return Err(Error::InvalidInput(
                        "power_log needs A>0, a>0, finite b".into(),
                    ));
                }
                if *b != 0.0 {
                    if !(*r0 > 0.0 && *r0 < 1.0) {
                        return Err(Error::InvalidInput(format!(
                            "power_log needs 0<r0<1, got {r0}"
                        )));
                    }
                    // increasing below the cutoff iff a*log(1/r) > b there
                    if *b > 0.0 && a * (-r0.ln()) < *b * (1.0 - 1e-12) {
                        return Err(Error::NotScaleFunction(format!(
                            "power_log decreases below r0={r0} (needs r0 <= exp(-b/a))"
                        )));
                    }
                }
            }
            ScaleFunction::Composed { outer, inner } => {
                outer.validate()?;
                inner.validate()?;
            }
            ScaleFunction::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(Error::NotScaleFunction(
                        "table needs at least 2 knots".into(),
                    ));
                }
                for w in points.windows(2) {
                    if !(w[0][0] > 0.0 && w[0][1] > 0.0 && w[1][0] > w[0][0] && w[1][1] > w[0][1])
                        || !w[1][0].is_finite()
                        || !w[1][1].is_finite()
                    {
                        return Err(Error::NotScaleFunction(
                            "table is not strictly increasing and positive".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// `ln f(e^x)`.
    pub fn ln_eval(&self, x: f64) -> f64 {
        match self {
            ScaleFunction::Power { coef, a } => coef.ln() + a * x,
            ScaleFunction::PowerLog { coef, a, b, r0 } => {
                let mut v = coef.ln() + a * x;
                if *b != 0.0 {
                    let l = -x.min(r0.ln());
                    v += b * l.ln();
                }
                v
            }
            ScaleFunction::Composed { outer, inner } => outer.ln_eval(inner.ln_eval(x)),
            ScaleFunction::Tabulated { points } => table_ln_eval(points, x, false).0,
        }
    }

    /// Unchecked evaluation `f(r)`.
    pub fn value(&self, r: f64) -> f64 {
        self.ln_eval(r.ln()).exp()
    }

    /// `f(r)` for finite `r > 0`.
    pub fn evaluate(&self, r: f64) -> Result<f64> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidInput(format!(
                "scale function argument must be finite and positive, got {r}"
            )));
        }
        Ok(self.value(r))
    }

    /// `ln f^{-1}(e^y)`; the flag reports extrapolation beyond a table.
    pub fn ln_inverse_flagged(&self, y: f64) -> (f64, bool) {
        match self {
            ScaleFunction::Power { coef, a } => ((y - coef.ln()) / a, false),
            ScaleFunction::Composed { outer, inner } => {
                let (u, f1) = outer.ln_inverse_flagged(y);
                let (x, f2) = inner.ln_inverse_flagged(u);
                (x, f1 || f2)
            }
            ScaleFunction::Tabulated { points } => table_ln_eval(points, y, true),
            ScaleFunction::PowerLog { .. } => (self.ln_bisect(y), false),
        }
    }

    pub fn ln_inverse(&self, y: f64) -> f64 {
        self.ln_inverse_flagged(y).0
    }

    /// Bisection on `x = ln r`, 200-iteration cap, stopping at relative width 1e-12 in `r`.
    fn ln_bisect(&self, y: f64) -> f64 {
        let g = |x: f64| self.ln_eval(x) - y;
        let mut lo = -1.0;
        let mut hi = 1.0;
        while g(lo) > 0.0 && lo > -1e300 {
            lo *= 2.0;
        }
        while g(hi) < 0.0 && hi < 1e300 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Unchecked inverse `f^{-1}(y)`.
    pub fn inverse_value(&self, y: f64) -> f64 {
        self.ln_inverse(y.ln()).exp()
    }

    /// `f^{-1}(y)` for finite `y > 0`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        Ok(self.inverse_flagged(y)?.0)
    }

    /// `f^{-1}(y)` together with the table-extrapolation flag.
    pub fn inverse_flagged(&self, y: f64) -> Result<(f64, bool)> {
        if !(y.is_finite() && y > 0.0) {
            return Err(Error::InvalidInput(format!(
                "inverse argument must be finite and positive, got {y}"
            )));
        }
        let (x, flag) = self.ln_inverse_flagged(y.ln());
        Ok((x.exp(), flag))
    }

    /// True when the function is a pure power `A r^a`.
    pub fn as_power(&self) -> Option<(f64, f64)> {
        match self {
            ScaleFunction::Power { coef, a } => Some((*coef, *a)),
            ScaleFunction::PowerLog { coef, a, b, .. } if *b == 0.0 => Some((*coef, *a)),
            _ => None,
        }
    }
}

fn table_ln_eval(points: &[[f64; 2]], v: f64, inverse: bool) -> (f64, bool) {
    let (ix, iy) = if inverse { (1, 0) } else { (0, 1) };
    let n = points.len();
    let key = |k: usize| points[k][ix].ln();
    let val = |k: usize| points[k][iy].ln();
    let seg = if v <= key(0) {
        0
    } else if v >= key(n - 1) {
        n - 2
    } else {
        // first knot strictly above v
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if key(mid) <= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let outside = v < key(0) || v > key(n - 1);
    let (k0, k1) = (key(seg), key(seg + 1));
    let (v0, v1) = (val(seg), val(seg + 1));
    let s = (v - k0) / (k1 - k0);
    (v0 + s * (v1 - v0), outside)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 8 {
        return Err(Error::InvalidInput(
            "certificate grid needs at least 8 points".into(),
        ));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] <= 0.0 {
        return Err(Error::InvalidInput(
            "certificate grid must be positive and increasing".into(),
        ));
    }
    if grid[grid.len() - 1] / grid[0] < 1e4 * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(
            "certificate grid must span at least 4 decades".into(),
        ));
    }
    Ok(())
}

/// Certificate from sampled log values on an increasing grid.
///
/// The exponents are the secant slopes over the lowest and the highest decade of the
/// grid (the tails fix what a certificate can claim beyond the grid); `C` is the
/// smallest constant making the pair bounds hold for every grid pair.
pub fn certify_ln_values(grid: &[f64], lnv: &[f64]) -> Result<Certificate> {
    check_grid(grid)?;
    if lnv.windows(2).any(|w| !(w[1] > w[0])) || lnv.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotScaleFunction(
            "values are not strictly increasing on the grid".into(),
        ));
    }
    let lx: Vec<f64> = grid.iter().map(|r| r.ln()).collect();
    let n = lx.len();
    let decade = 10f64.ln() * (1.0 - 1e-12);
    let lo_end = (1..n).find(|&k| lx[k] - lx[0] >= decade).unwrap_or(n - 1);
    let hi_start = (0..n - 1)
        .rev()
        .find(|&k| lx[n - 1] - lx[k] >= decade)
        .unwrap_or(0);
    let s_lo = (lnv[lo_end] - lnv[0]) / (lx[lo_end] - lx[0]);
    let s_hi = (lnv[n - 1] - lnv[hi_start]) / (lx[n - 1] - lx[hi_start]);
    let beta1 = s_lo.min(s_hi);
    let beta2 = s_lo.max(s_hi);
    let mut ln_c = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            let l = lx[j] - lx[i];
            let d = lnv[j] - lnv[i];
            ln_c = ln_c.max(beta1 * l - d).max(d - beta2 * l);
        }
    }
    Ok(Certificate {
        beta1,
        beta2,
        c: ln_c.exp(),
    })
}

/// Doubling certificate of `f` on `grid` (at least 8 points spanning 4 decades).
pub fn certify_doubling(f: &ScaleFunction, grid: &[f64]) -> Result<Certificate> {
    f.validate()?;
    let lnv: Vec<f64> = grid.iter().map(|r| f.ln_eval(r.ln())).collect();
    certify_ln_values(grid, &lnv)
}

/// Restricted lower certificate over grid points `<= r`.
///
/// Returns the minimal pair slope among pairs spanning at least a decade, and the
/// constant making the lower bound hold for all pairs below `r`.
pub fn certify_restricted(
    f: &ScaleFunction,
    grid: &[f64],
    r: f64,
) -> Result<RestrictedCertificate> {
    let sub: Vec<f64> = grid.iter().copied().filter(|&g| g <= r).collect();
    let lnv: Vec<f64> = sub.iter().map(|s| f.ln_eval(s.ln())).collect();
    let cert = certify_ln_values(&sub, &lnv)?;
    Ok(RestrictedCertificate {
        beta1: cert.beta1,
        c: {
            let lx: Vec<f64> = sub.iter().map(|s| s.ln()).collect();
            let mut ln_c = 0.0_f64;
            for i in 0..lx.len() {
                for j in i + 1..lx.len() {
                    ln_c = ln_c.max(cert.beta1 * (lx[j] - lx[i]) - (lnv[j] - lnv[i]));
                }
            }
            ln_c.exp()
        },
        r,
    })
}

/// A geometric probe grid with `per_decade` points per decade.
pub fn probe_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi / lo).log10() * per_decade as f64).ceil() as usize + 1;
    geometric_grid(lo, hi, n.max(2))
}

/// Subordination scale with the measured comparison constants.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhiScale {
    /// Tabulated `Phi`.
    pub phi: ScaleFunction,
    /// Smallest `C` with `Phi <= C psi_j` on the grid.
    pub comp2: f64,
    /// Smallest `C` with `Phi(R)/Phi(r) <= C psi_c(R)/psi_c(r)` over grid pairs.
    pub comp3: f64,
}

/// Upper end of the direct quadrature range in `u = ln(1/s)`.
pub const U_MAX: f64 = 80.0;
const TAIL_U_LIMIT: f64 = 1e12;

/// Default grid for [`phi_from_scales`]: 40 points per decade on `[1e-10, 1e4]`.
pub fn default_phi_grid() -> Vec<f64> {
    probe_grid(1e-10, 1e4, 40)
}

/// Tabulates `Phi(r) = psi_c(r) / int_0^r psi_c(s) / (s psi_j(s)) ds` on `grid`.
///
/// The integral is taken in `u = ln(1/s)`; beyond `u = max(u_0, U_MAX)` the tail is
/// integrated after a second substitution `u = U e^v`, which turns both power and
/// exponential decay of the integrand into at least exponential decay in `v`; the
/// part beyond `u = 1e12` is closed with the decay rate measured there.
pub fn phi_from_scales(
    psi_c: &ScaleFunction,
    psi_j: &ScaleFunction,
    grid: &[f64],
) -> Result<PhiScale> {
    psi_c.validate()?;
    psi_j.validate()?;
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] <= 0.0 {
        return Err(Error::InvalidInput(
            "phi grid must be positive and increasing".into(),
        ));
    }
    let g = |u: f64| (psi_c.ln_eval(-u) - psi_j.ln_eval(-u)).exp();
    let u0 = -grid[0].ln();
    let big_u = u0.max(U_MAX);

    let seg = |a: f64, b: f64| -> Result<f64> {
        let crude = 0.5 * (b - a) * (g(a) + g(b)) + 1e-300;
        adaptive_simpson(&g, a, b, 1e-12 * crude.abs())
    };

    let tail_integrand = |v: f64| {
        let u = big_u * v.exp();
        g(u) * u
    };
    // keep u small enough that ln psi_c - ln psi_j does not cancel to round-off
    let v_end = (TAIL_U_LIMIT / big_u).ln().max(1.0);
    let mut tail = 0.0;
    let mut a = 0.0;
    while a < v_end {
        let b = (a + 1.0).min(v_end);
        let crude = 0.5 * (b - a) * (tail_integrand(a) + tail_integrand(b)) + 1e-300;
        tail += adaptive_simpson(&tail_integrand, a, b, 1e-12 * crude)?;
        a = b;
    }
    // remaining tail from the observed exponential decay rate in v
    let h_end = tail_integrand(v_end);
    if h_end == 0.0 {
        // integrand underflowed: nothing left
    } else {
        let kappa = (tail_integrand(v_end - 1.0) / h_end).ln();
        if !(kappa > 1e-3) || !h_end.is_finite() {
            return Err(Error::SclIntViolated(format!(
            "integrand of int_0^r psi_c/(s psi_j) does not decay (decay rate {kappa:e} in log u)"
        )));
        }
        tail += h_end / kappa;
    }
    let head = if big_u > u0 { seg(u0, big_u)? } else { 0.0 };
    let mut integral = head + tail;
    if !integral.is_finite() {
        return Err(Error::SclIntViolated("integral is not finite".into()));
    }

    let mut points = Vec::with_capacity(grid.len());
    let mut comp2 = 0.0_f64;
    let mut prev_u = u0;
    for (k, &r) in grid.iter().enumerate() {
        let u = -r.ln();
        if k > 0 {
            integral += seg(u, prev_u)?;
        }
        prev_u = u;
        let ln_phi = psi_c.ln_eval(r.ln()) - integral.ln();
        comp2 = comp2.max((ln_phi - psi_j.ln_eval(r.ln())).exp());
        points.push([r, ln_phi.exp()]);
    }
    // Phi(R)/Phi(r) = psi_c(R)/psi_c(r) * I(r)/I(R) and I is increasing
    let comp3 = 1.0;
    let phi = ScaleFunction::tabulated(points)?;
    Ok(PhiScale { phi, comp2, comp3 })
}

/// `F_{rho,eps}(r)`: identity below `eps`, `rho^{-1}((r/eps) rho(eps))` above.
pub fn apply_f(rho: &ScaleFunction, eps: f64, r: f64) -> f64 {
    if r <= eps {
        r
    } else {
        let y = (r / eps).ln() + rho.ln_eval(eps.ln());
        rho.ln_inverse(y).exp()
    }
}

/// `F_{rho,eps}^{-1}(r) = eps rho(r)/rho(eps)` above `eps`.
pub fn apply_f_inverse(rho: &ScaleFunction, eps: f64, r: f64) -> f64 {
    if r <= eps {
        r
    } else {
        eps * (rho.ln_eval(r.ln()) - rho.ln_eval(eps.ln())).exp()
    }
}

/// Validated `F_{rho,eps}(r)`.
pub fn apply_f_checked(rho: &ScaleFunction, eps: f64, r: f64) -> Result<f64> {
    rho.validate()?;
    if !(eps > 0.0 && eps.is_finite() && r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput("apply_f needs eps>0 and r>0".into()));
    }
    Ok(apply_f(rho, eps, r))
}

/// Empirical certificate of `psi o F_{rho,eps}` on `grid`.
pub fn composed_beta_bounds(
    psi: &ScaleFunction,
    rho: &ScaleFunction,
    eps: f64,
    grid: &[f64],
) -> Result<Certificate> {
    psi.validate()?;
    rho.validate()?;
    let lnv: Vec<f64> = grid
        .iter()
        .map(|&r| psi.ln_eval(apply_f(rho, eps, r).ln()))
        .collect();
    certify_ln_values(grid, &lnv)
}

/// Objective selector for [`variational_sup`].
#[derive(Clone, Copy, Debug)]
pub enum SupMode<'a> {
    /// `rho(d)/rho(sigma) - t/Phi(sigma)`.
    Rho,
    /// `d/sigma - t/Phi(sigma)`.
    Linear,
    /// `rho(d)/rho(sigma) - psi_c(Phi^{-1}(t))/psi_c(sigma)`.
    PsiCComposed(&'a ScaleFunction),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalSupResult {
    pub value: f64,
    pub argmax_sigma: f64,
    pub window: (f64, f64),
}

/// Times the supremum window may be widened by three decades on one side.
pub const MAX_WIDENINGS: usize = 20;

/// Grid points per decade of the supremum scan.
pub const SUP_POINTS_PER_DECADE: f64 = 200.0;

fn sup_objective<'a>(
    rho: &'a ScaleFunction,
    phi: &'a ScaleFunction,
    d: f64,
    t: f64,
    mode: SupMode<'a>,
) -> impl Fn(f64) -> f64 + 'a {
    let identity = ScaleFunction::identity();
    let (ln_rho_d, use_rho) = match mode {
        SupMode::Linear => (d.ln(), false),
        _ => (rho.ln_eval(d.ln()), true),
    };
    let ln_t = t.ln();
    let ln_psi_target = match mode {
        SupMode::PsiCComposed(psi_c) => Some((psi_c, psi_c.ln_eval(phi.ln_inverse(ln_t)))),
        _ => None,
    };
    move |x: f64| {
        let ln_rho_s = if use_rho {
            rho.ln_eval(x)
        } else {
            identity.ln_eval(x)
        };
        let first = (ln_rho_d - ln_rho_s).exp();
        let second = match ln_psi_target {
            Some((psi_c, target)) => (target - psi_c.ln_eval(x)).exp(),
            None => (ln_t - phi.ln_eval(x)).exp(),
        };
        first - second
    }
}

fn sup_on_window<F: Fn(f64) -> f64>(obj: &F, lo: f64, hi: f64) -> (f64, f64) {
    let (a, b) = (lo.ln(), hi.ln());
    let decades = (b - a) / 10f64.ln();
    let n = ((decades * SUP_POINTS_PER_DECADE).ceil() as usize).max(2) + 1;
    let step = (b - a) / (n - 1) as f64;
    let mut best_k = 0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..n {
        let v = obj(a + step * k as f64);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let left = a + step * best_k.saturating_sub(1) as f64;
    let right = a + step * (best_k + 1).min(n - 1) as f64;
    let (x, v) = golden_max(obj, left, right, 200);
    if v > best {
        (x, v)
    } else {
        (a + step * best_k as f64, best)
    }
}

/// `sup_{sigma>0}` of the selected objective.
///
/// Scans `[min(d, Phi^{-1}(t))/1e3, max(d, Phi^{-1}(t))*1e3]` at 200 points per decade
/// and polishes the best cell by golden section. While the maximiser sits on an edge the
/// window is widened on that side. The result is clamped below by the
/// `sigma -> inf` limit 0.
pub fn variational_sup(
    rho: &ScaleFunction,
    phi: &ScaleFunction,
    d: f64,
    t: f64,
    mode: SupMode<'_>,
) -> VariationalSupResult {
    let s = phi.ln_inverse(t.ln()).exp();
    if d <= 0.0 {
        return VariationalSupResult {
            value: 0.0,
            argmax_sigma: f64::INFINITY,
            window: (s / 1e3, s * 1e3),
        };
    }
    let mut lo = d.min(s) / 1e3;
    let mut hi = d.max(s) * 1e3;
    let obj = sup_objective(rho, phi, d, t, mode);
    let (mut x, mut v) = sup_on_window(&obj, lo, hi);
    // a maximiser on the edge of the window lies beyond it: widen that side
    let cell = 10f64.ln() / SUP_POINTS_PER_DECADE;
    for _ in 0..MAX_WIDENINGS {
        if hi.ln() - x < cell {
            hi *= 1e3;
        } else if x - lo.ln() < cell {
            lo /= 1e3;
        } else {
            break;
        }
        (x, v) = sup_on_window(&obj, lo, hi);
    }
    if v > 0.0 {
        VariationalSupResult {
            value: v,
            argmax_sigma: x.exp(),
            window: (lo, hi),
        }
    } else {
        VariationalSupResult {
            value: 0.0,
            argmax_sigma: hi,
            window: (lo, hi),
        }
    }
}

/// Parameters of `Phi` needed by [`minimax_window`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MinimaxParams {
    /// Restricted lower exponent `beta_*`.
    pub beta_star: f64,
    /// Constant `C_Phi` of the restricted lower bound.
    pub c_phi: f64,
    /// Upper exponent `beta2(Phi)`.
    pub beta2: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MinimaxWindow {
    pub sigma1: f64,
    pub sigma_hi: f64,
    pub sup_restricted: f64,
    pub sup_full: f64,
    /// `r / (2 Phi^{-1}(t))`.
    pub lower_bound: f64,
    pub params: MinimaxParams,
}

impl MinimaxWindow {
    /// `c11(d1, d2) = (C/d2)^{1/(b-1)} max(d1, d2)^{b/(b-1)}`.
    pub fn c11(&self, d1: f64, d2: f64) -> f64 {
        let b = self.params.beta_star;
        (self.params.c_phi / d2).powf(1.0 / (b - 1.0)) * d1.max(d2).powf(b / (b - 1.0))
    }

    /// `c12(d3) = 2^{(b2-b)/(b-1)} (b-1) C^{2/(b-1)} max(d3, 2)^{b/(b-1)}`.
    pub fn c12(&self, d3: f64) -> f64 {
        let MinimaxParams {
            beta_star: b,
            c_phi,
            beta2,
        } = self.params;
        2f64.powf((beta2 - b) / (b - 1.0))
            * (b - 1.0)
            * c_phi.powf(2.0 / (b - 1.0))
            * d3.max(2.0).powf(b / (b - 1.0))
    }
}

/// `phi_*(r, t) = sup_sigma (r/sigma - t/Phi(sigma))` together with the window
/// `[sigma1, 2 Phi^{-1}(t)]` that contains the maximiser.
pub fn minimax_window(
    phi: &ScaleFunction,
    r: f64,
    t: f64,
    params: MinimaxParams,
) -> Result<MinimaxWindow> {
    if !(params.beta_star > 1.0) {
        return Err(Error::StrongUniformity(params.beta_star));
    }
    if !(r > 0.0 && t > 0.0) {
        return Err(Error::InvalidInput("minimax_window needs r>0, t>0".into()));
    }
    let b = params.beta_star;
    let s = phi.ln_inverse(t.ln()).exp();
    let sigma1 = s.powf(b / (b - 1.0)) * (params.c_phi * r).powf(-1.0 / (b - 1.0));
    let sigma_hi = 2.0 * s;
    let id = ScaleFunction::identity();
    let full = variational_sup(&id, phi, r, t, SupMode::Linear);
    let obj = sup_objective(&id, phi, r, t, SupMode::Linear);
    let (wl, wh) = (sigma1.min(sigma_hi), sigma1.max(sigma_hi));
    let (_, restricted) = sup_on_window(&obj, wl, wh);
    Ok(MinimaxWindow {
        sigma1,
        sigma_hi,
        sup_restricted: restricted.max(0.0),
        sup_full: full.value,
        lower_bound: r / (2.0 * s),
        params,
    })
}

/// `phi_*(r, t)` alone.
pub fn phi_star(phi: &ScaleFunction, r: f64, t: f64) -> f64 {
    variational_sup(&ScaleFunction::identity(), phi, r, t, SupMode::Linear).value
}
