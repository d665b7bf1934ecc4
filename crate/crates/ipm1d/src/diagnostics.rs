//! Scalar diagnostics computed from trajectory snapshots: norms, the mean,
//! the weighted origin functional `J`, Riccati-comparison fitting of its
//! growth, and symmetry/monotonicity defect reports.
//!
//! Everything here is a pure function of a single snapshot (or of a series
//! of scalars), so any saved trajectory can be re-analyzed without solver
//! state.

use std::f64::consts::PI;

use crate::grid::{spectral_derivative, PeriodicField};
use crate::operators::OperatorParams;
use crate::quad;
use crate::solver::{check_blowup_class, tail_fraction, SimState};
use crate::{Error, Result};

const TAU: f64 = std::f64::consts::TAU;

/// The norm bundle for one field.
#[derive(Debug, Clone, Copy)]
pub struct Norms {
    /// Grid maximum of `|f|`; a lower bound on the true supremum.
    pub linf: f64,
    /// `L^2` norm over one period, via Parseval.
    pub l2: f64,
    /// Homogeneous Sobolev seminorm of order `s`. The Nyquist mode is
    /// excluded, matching the derivative convention, so for integer `s` this
    /// equals the `L^2` norm of the `s`-fold spectral derivative.
    pub hs: f64,
    pub mean: f64,
}

fn l2_from_spectrum(f: &PeriodicField) -> f64 {
    (TAU * f.spectrum().iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
}

/// Computes `(linf, l2, hs, mean)` for one field, with `s >= 1`.
pub fn compute_norms(f: &PeriodicField, s: u32) -> Result<Norms> {
    if s == 0 {
        return Err(Error::Param("Sobolev order s must be at least 1".into()));
    }
    let nyquist = (f.grid().n() / 2) as i64;
    let hs_sq: f64 = f
        .spectrum()
        .iter()
        .zip(f.grid().wavenumbers())
        .filter(|&(_, &k)| k != 0 && k != nyquist)
        .map(|(c, &k)| (k.unsigned_abs() as f64).powi(2 * s as i32) * c.norm_sqr())
        .sum();
    Ok(Norms {
        linf: f.values().iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        l2: l2_from_spectrum(f),
        hs: (TAU * hs_sq).sqrt(),
        mean: f.coeff(0).re,
    })
}

fn class_tolerance(f: &PeriodicField) -> f64 {
    1e-6 * (1.0 + f.values().iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// The weighted origin functional `J = int_0^{pi/2} rho(x) x^(-1-delta) dx`
/// with the default 160-node graded rule.
pub fn compute_j(f: &PeriodicField, delta: f64) -> Result<f64> {
    compute_j_with_nodes(f, delta, 160)
}

/// As [`compute_j`] with an explicit node count, for convergence studies.
///
/// Requires blow-up-class data (within a tolerance scaled to the field), so
/// that `rho` vanishes quadratically at the origin and the integral
/// converges. The origin value, which class membership only bounds, is
/// subtracted exactly mode by mode; the graded substitution `x = (pi/2) s^4`
/// then makes the integrand smooth through `s = 0`.
pub fn compute_j_with_nodes(f: &PeriodicField, delta: f64, nodes: usize) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Param(format!("weight exponent delta must lie in (0, 1), got {delta}")));
    }
    if !check_blowup_class(f, class_tolerance(f)) {
        return Err(Error::Precondition(
            "the weighted origin functional needs blow-up-class data".into(),
        ));
    }
    let b = PI / 2.0;
    let rule = quad::GaussLegendre::new(nodes);
    let mut acc = 0.0;
    for (s, w) in rule.mapped(0.0, 1.0) {
        let s3 = s * s * s;
        let x = b * s3 * s;
        acc += w * 4.0 * b * s3 * f.eval_minus_origin(x) * x.powf(-1.0 - delta);
    }
    if !acc.is_finite() {
        return Err(Error::Numeric("weighted origin functional is not finite".into()));
    }
    Ok(acc)
}

/// The instantaneous rate of [`compute_j`] along the flow, from the model
/// tendency itself rather than from differencing `J` samples:
/// `J' = int_0^{pi/2} (d/dt rho)(x) x^(-1-delta) dx`. Serves as an
/// independent cross-check of finite-difference `J'` estimates.
pub fn j_rate_integral(f: &PeriodicField, params: &OperatorParams, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Param(format!("weight exponent delta must lie in (0, 1), got {delta}")));
    }
    let tendency = crate::solver::rhs(f, params)?;
    let b = PI / 2.0;
    let rule = quad::GaussLegendre::new(160);
    let mut acc = 0.0;
    for (s, w) in rule.mapped(0.0, 1.0) {
        let s3 = s * s * s;
        let x = b * s3 * s;
        acc += w * 4.0 * b * s3 * tendency.eval_minus_origin(x) * x.powf(-1.0 - delta);
    }
    if !acc.is_finite() {
        return Err(Error::Numeric("functional rate integral is not finite".into()));
    }
    Ok(acc)
}

/// Result of fitting `J' >= c J^2` to a sampled series.
#[derive(Debug, Clone, Copy)]
pub struct RiccatiFit {
    /// Smallest interior ratio `J'/J^2`; the certified comparison constant
    /// when positive.
    pub c_hat: f64,
    /// `t_0 + 1/(c_hat J(t_0))`, the comparison solution's divergence time;
    /// only present for a conclusive fit.
    pub t_star_bound: Option<f64>,
    /// Root-mean-square spread of the interior ratios around `c_hat`,
    /// relative to `|c_hat|`.
    pub residual: f64,
    /// Whether `c_hat > 0`, so the comparison argument applies.
    pub conclusive: bool,
}

/// Fits the Riccati comparison `J' >= c J^2` to a series of `(t, J)`
/// samples. Derivatives come from centered differences on the (possibly
/// nonuniform) sample times; `c_hat` is the minimum interior ratio, making
/// the bound one the whole sampled window satisfies.
pub fn fit_riccati(series: &[(f64, f64)]) -> Result<RiccatiFit> {
    if series.len() < 8 {
        return Err(Error::Param(format!("need at least 8 samples to fit, got {}", series.len())));
    }
    for pair in series.windows(2) {
        if !(pair[1].0 > pair[0].0) {
            return Err(Error::Param("sample times must be strictly increasing".into()));
        }
    }
    if series.iter().any(|&(t, j)| !(j > 0.0 && j.is_finite() && t.is_finite())) {
        return Err(Error::Precondition("the functional must be finite and strictly positive".into()));
    }

    let mut ratios = Vec::with_capacity(series.len() - 2);
    for i in 1..series.len() - 1 {
        let (tm, jm) = series[i - 1];
        let (t0, j0) = series[i];
        let (tp, jp) = series[i + 1];
        let (hm, hp) = (t0 - tm, tp - t0);
        // three-point derivative, second-order accurate on nonuniform spacing
        let dj = (jp * hm * hm - jm * hp * hp + j0 * (hp * hp - hm * hm))
            / (hm * hp * (hm + hp));
        ratios.push(dj / (j0 * j0));
    }
    let c_hat = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let conclusive = c_hat.is_finite() && c_hat > 0.0;
    let spread = (ratios.iter().map(|r| (r - c_hat) * (r - c_hat)).sum::<f64>()
        / ratios.len() as f64)
        .sqrt();
    let residual = if c_hat != 0.0 && c_hat.is_finite() { spread / c_hat.abs() } else { f64::INFINITY };
    let t_star_bound = conclusive.then(|| series[0].0 + 1.0 / (c_hat * series[0].1));
    Ok(RiccatiFit { c_hat, t_star_bound, residual, conclusive })
}

/// Raw defect numbers for the class-preservation claims; no pass/fail
/// judgment, callers threshold for their own purposes.
#[derive(Debug, Clone, Copy)]
pub struct SymmetryReport {
    /// `max_j |f(x_j) - f(-x_j)|`.
    pub evenness_defect: f64,
    pub min_value: f64,
    /// `|f(0)|`.
    pub origin_abs: f64,
    /// Minimum of `d/dx f` over grid points in `[0, pi)`.
    pub min_slope: f64,
}

pub fn symmetry_monotonicity_report(f: &PeriodicField) -> SymmetryReport {
    let n = f.grid().n();
    let values = f.values();
    let evenness_defect = (0..n)
        .map(|j| (values[j] - values[(n - j) % n]).abs())
        .fold(0.0, f64::max);
    let slope = spectral_derivative(f);
    SymmetryReport {
        evenness_defect,
        min_value: values.iter().copied().fold(f64::INFINITY, f64::min),
        origin_abs: values[f.grid().origin_index()].abs(),
        min_slope: slope.values()[n / 2..].iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// One row of per-snapshot diagnostics, in the order the CSV columns use.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub linf: f64,
    pub l2: f64,
    pub hs: f64,
    pub mean: f64,
    pub slope_max: f64,
    /// Location of the steepest slope.
    pub slope_argmax: f64,
    pub bkm: f64,
    /// The weighted origin functional; NaN when the snapshot is not
    /// blow-up-class data, where the functional is undefined.
    pub j_value: f64,
    pub tail_fraction: f64,
}

/// Assembles the full diagnostics row for one snapshot.
pub fn record_for_state(state: &SimState, s: u32, delta: f64) -> Result<DiagnosticsRecord> {
    let f = &state.field;
    let norms = compute_norms(f, s)?;
    let slope = spectral_derivative(f);
    let (mut slope_max, mut argmax) = (0.0_f64, 0usize);
    for (j, v) in slope.values().iter().enumerate() {
        if v.abs() > slope_max {
            slope_max = v.abs();
            argmax = j;
        }
    }
    let j_value = if check_blowup_class(f, class_tolerance(f)) {
        compute_j(f, delta)?
    } else {
        f64::NAN
    };
    Ok(DiagnosticsRecord {
        t: state.t,
        linf: norms.linf,
        l2: norms.l2,
        hs: norms.hs,
        mean: norms.mean,
        slope_max,
        slope_argmax: f.grid().points()[argmax],
        bkm: state.bkm,
        j_value,
        tail_fraction: tail_fraction(f),
    })
}
