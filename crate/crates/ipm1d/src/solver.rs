//! Time integration of the transport equation
//! `d/dt rho = -g (H_a rho) (d/dx rho)` on the circle, with 2/3-rule
//! dealiasing, CFL-adaptive RK4 stepping, and blow-up-aware stopping.
//!
//! The solver never claims blow-up was reached. It stops on proxies (a slope
//! threshold on `||d/dx rho||_inf`, or spectral energy piling into the upper
//! part of the retained band) and reports which proxy fired; a finite
//! simulation cannot certify a singular time.

use crate::grid::{dealias_truncate, spectral_derivative, PeriodicField};
use crate::operators::{apply_ha_spectral, OperatorParams};
use crate::{Error, Result};

/// Run parameters. `n` is the grid size; `a` and `g` the physical
/// parameters; the rest control stepping, stopping, and output cadence.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub n: usize,
    pub a: f64,
    pub g: f64,
    /// Courant number in (0, 1].
    pub cfl: f64,
    pub t_end: f64,
    /// Stop once `||d/dx rho||_inf` reaches this value.
    pub slope_stop: f64,
    /// Stop once the upper third of the retained spectral band carries at
    /// least this fraction of the total spectral energy; in (0, 1).
    pub tail_stop: f64,
    /// Interval between recorded trajectory states.
    pub output_every: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n: 1024,
            a: 1.0,
            g: 1.0,
            cfl: 0.4,
            t_end: 10.0,
            slope_stop: 1e4,
            tail_stop: 1e-6,
            output_every: 0.01,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        OperatorParams::new(self.a, self.g)?;
        if !(self.cfl.is_finite() && self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if !(self.slope_stop.is_finite() && self.slope_stop > 0.0) {
            return Err(Error::Config(format!("slope_stop must be positive, got {}", self.slope_stop)));
        }
        if !(self.tail_stop > 0.0 && self.tail_stop < 1.0) {
            return Err(Error::Config(format!("tail_stop must lie in (0, 1), got {}", self.tail_stop)));
        }
        if !(self.output_every.is_finite() && self.output_every > 0.0) {
            return Err(Error::Config(format!("output_every must be positive, got {}", self.output_every)));
        }
        Ok(())
    }

    fn params(&self) -> Result<OperatorParams> {
        OperatorParams::new(self.a, self.g)
    }
}

/// One snapshot of a run: the field, its time, and the accumulated
/// `int_0^t ||d/dx rho||_inf ds` (the blow-up criterion integral).
#[derive(Debug, Clone)]
pub struct SimState {
    pub field: PeriodicField,
    pub t: f64,
    pub bkm: f64,
}

/// Why a run terminated. Exactly one per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TimeReached,
    SlopeThreshold,
    ResolutionLost,
    NonfiniteValue,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            StopReason::TimeReached => "time_reached",
            StopReason::SlopeThreshold => "slope_threshold",
            StopReason::ResolutionLost => "resolution_lost",
            StopReason::NonfiniteValue => "nonfinite_value",
        };
        f.write_str(name)
    }
}

/// A finished run: states at the output cadence (plus the exact stop state
/// if a proxy fired mid-interval), the stop reason, and the step count.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Vec<SimState>,
    pub reason: StopReason,
    pub steps: u64,
}

impl RunOutcome {
    pub fn initial(&self) -> &SimState {
        &self.trajectory[0]
    }

    pub fn final_state(&self) -> &SimState {
        self.trajectory.last().expect("a trajectory always holds the initial state")
    }
}

/// The model tendency `-g (H_a rho) (d/dx rho)`, with both factors and the
/// product put through the 2/3 dealiasing rule.
pub fn rhs(field: &PeriodicField, params: &OperatorParams) -> Result<PeriodicField> {
    let u = dealias_truncate(&apply_ha_spectral(field, params.a())?);
    let slope = dealias_truncate(&spectral_derivative(field));
    let g = params.g();
    let values = u
        .values()
        .iter()
        .zip(slope.values())
        .map(|(&u, &s)| -g * u * s)
        .collect();
    Ok(dealias_truncate(&PeriodicField::from_values(field.grid(), values)?))
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn slope_linf(field: &PeriodicField) -> f64 {
    max_abs(spectral_derivative(field).values())
}

/// CFL-limited step: `cfl * dx / max(||u||_inf, 1e-12)`, additionally capped
/// by the output cadence so a quiescent field still lands on output times.
pub fn cfl_dt(state: &SimState, cfg: &SolverConfig) -> Result<f64> {
    cfg.validate()?;
    let u = apply_ha_spectral(&state.field, cfg.a)?;
    let umax = (cfg.g * max_abs(u.values())).max(1e-12);
    Ok((cfg.cfl * state.field.grid().spacing() / umax).min(cfg.output_every))
}

/// One classical Runge-Kutta step of size `dt`. The criterion integral is
/// advanced by the trapezoid rule on `||d/dx rho||_inf` over the step.
pub fn step_rk4(state: &SimState, dt: f64, cfg: &SolverConfig) -> Result<SimState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Param(format!("step size must be positive, got {dt}")));
    }
    let params = cfg.params()?;
    let f = &state.field;
    let k1 = rhs(f, &params)?;
    let k2 = rhs(&f.axpy(0.5 * dt, &k1)?, &params)?;
    let k3 = rhs(&f.axpy(0.5 * dt, &k2)?, &params)?;
    let k4 = rhs(&f.axpy(dt, &k3)?, &params)?;
    let field = f
        .axpy(dt / 6.0, &k1)?
        .axpy(dt / 3.0, &k2)?
        .axpy(dt / 3.0, &k3)?
        .axpy(dt / 6.0, &k4)?;
    let bkm = state.bkm + 0.5 * dt * (slope_linf(f) + slope_linf(&field));
    Ok(SimState { field, t: state.t + dt, bkm })
}

/// Share of spectral energy sitting in the upper third of the retained band
/// (modes above `2/3 * n/3` in absolute value, up to the dealiasing cutoff),
/// relative to the total energy in all nonzero modes. The mean mode carries
/// no resolution information and is excluded. Zero for a constant field.
pub fn tail_fraction(field: &PeriodicField) -> f64 {
    let cutoff = field.grid().dealias_cutoff();
    let inner = 2 * cutoff / 3;
    let mut top = 0.0;
    let mut total = 0.0;
    for (&c, &k) in field.spectrum().iter().zip(field.grid().wavenumbers()) {
        if k == 0 {
            continue;
        }
        let e = c.norm_sqr();
        total += e;
        if k.abs() > inner && k.abs() <= cutoff {
            top += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        top / total
    }
}

/// Membership test for the blow-up class: nonnegative, vanishing at the
/// origin, even, and nondecreasing on `[0, pi)`, each up to `tol` (the slope
/// condition is scaled by `1 + ||d/dx f||_inf`). A nonpositive or non-finite
/// `tol` rejects everything.
pub fn check_blowup_class(f: &PeriodicField, tol: f64) -> bool {
    if !(tol.is_finite() && tol > 0.0) {
        return false;
    }
    let n = f.grid().n();
    let values = f.values();
    if values.iter().any(|&v| v < -tol) {
        return false;
    }
    if values[f.grid().origin_index()].abs() > tol {
        return false;
    }
    for j in 0..n {
        if (values[j] - values[(n - j) % n]).abs() > tol {
            return false;
        }
    }
    let slope = spectral_derivative(f);
    let scale = 1.0 + max_abs(slope.values());
    // grid points in [0, pi) sit at indices n/2 ..= n-1
    slope.values()[n / 2..].iter().all(|&s| s >= -tol * scale)
}

/// Integrates from `rho0` until `t_end` or a stop proxy fires.
///
/// The initial field is projected through the dealiasing filter so the
/// evolved band is consistent from the first step. States are recorded at
/// every multiple of `output_every` (landed on exactly); if a proxy fires
/// between outputs the stop state is recorded at its exact time. On a
/// non-finite value the last recorded state stands as final. Deterministic:
/// identical inputs give bitwise-identical trajectories.
pub fn run(cfg: &SolverConfig, rho0: &PeriodicField) -> Result<RunOutcome> {
    cfg.validate()?;
    if rho0.grid().n() != cfg.n {
        return Err(Error::Config(format!(
            "initial data lives on an n = {} grid but the configuration says n = {}",
            rho0.grid().n(),
            cfg.n
        )));
    }
    let mut state =
        SimState { field: dealias_truncate(rho0), t: 0.0, bkm: 0.0 };
    let mut trajectory = vec![state.clone()];
    let mut steps = 0u64;

    if slope_linf(&state.field) >= cfg.slope_stop {
        return Ok(RunOutcome { trajectory, reason: StopReason::SlopeThreshold, steps });
    }
    if tail_fraction(&state.field) >= cfg.tail_stop {
        return Ok(RunOutcome { trajectory, reason: StopReason::ResolutionLost, steps });
    }

    let mut out_k: u64 = 1;
    let reason = loop {
        if state.t >= cfg.t_end - 1e-14 * cfg.t_end.max(1.0) {
            break StopReason::TimeReached;
        }
        let dt_cfl = cfl_dt(&state, cfg)?;
        let target = ((out_k as f64) * cfg.output_every).min(cfg.t_end);
        let gap = target - state.t;
        let lands = state.t + dt_cfl >= target - 1e-12 * dt_cfl;
        let dt = if lands { gap } else { dt_cfl };
        if !(dt > 0.0) {
            return Err(Error::Numeric(format!("time step underflow at t = {}", state.t)));
        }
        match step_rk4(&state, dt, cfg) {
            Ok(mut next) => {
                if lands {
                    // land on the cadence point exactly rather than on the
                    // rounded sum of increments
                    next.t = target;
                    if target < cfg.t_end {
                        out_k += 1;
                    }
                }
                state = next;
                steps += 1;
                if lands {
                    trajectory.push(state.clone());
                }
                if slope_linf(&state.field) >= cfg.slope_stop {
                    if !lands {
                        trajectory.push(state.clone());
                    }
                    break StopReason::SlopeThreshold;
                }
                if tail_fraction(&state.field) >= cfg.tail_stop {
                    if !lands {
                        trajectory.push(state.clone());
                    }
                    break StopReason::ResolutionLost;
                }
            }
            Err(Error::Numeric(_)) => break StopReason::NonfiniteValue,
            Err(other) => return Err(other),
        }
    };
    Ok(RunOutcome { trajectory, reason, steps })
}
