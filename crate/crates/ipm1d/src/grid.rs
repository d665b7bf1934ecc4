//! Uniform periodic grids and FFT-backed spectral transforms.
//!
//! Conventions used throughout the crate:
//!
//! * grid points `x_j = -pi + 2*pi*j/n` for `j = 0..n`, so the grid covers
//!   `[-pi, pi)` and contains `x = 0` at index `n/2`,
//! * wavenumbers `k` run over `{-n/2+1, ..., n/2}`; the coefficient of mode
//!   `k` is stored at FFT index `k mod n`,
//! * a real field is represented as `f(x_j) = sum_k c_k e^(i k x_j)` with
//!   conjugate-symmetric coefficients `c_(-k) = conj(c_k)`,
//! * the Nyquist mode `k = n/2` is zeroed by spectral differentiation and by
//!   every odd multiplier (`sgn k` has no consistent value there).

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

const TAU: f64 = std::f64::consts::TAU;

/// A uniform grid on `[-pi, pi)` with cached FFT plans.
///
/// Grids are shared behind an [`Arc`] so that fields, solver states, and
/// worker threads can reference the same plans cheaply. The FFT instances
/// provided by `rustfft` are internally synchronized and safe to share.
pub struct PeriodicGrid {
    n: usize,
    spacing: f64,
    points: Vec<f64>,
    wavenumbers: Vec<i64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid").field("n", &self.n).finish()
    }
}

impl PeriodicGrid {
    /// Builds a grid with `n` points. `n` must be even and at least 8.
    pub fn new(n: usize) -> Result<Arc<Self>> {
        if !n.is_multiple_of(2) {
            return Err(Error::Config(format!("grid size must be even, got n = {n}")));
        }
        if n < 8 {
            return Err(Error::Config(format!("grid size must be at least 8, got n = {n}")));
        }
        let spacing = TAU / n as f64;
        // x_j = (j - n/2) * spacing keeps -pi, 0, and pi/2 exact on
        // power-of-two grids.
        let half = (n / 2) as f64;
        let points = (0..n).map(|j| (j as f64 - half) * spacing).collect();
        let wavenumbers = (0..n)
            .map(|m| if m <= n / 2 { m as i64 } else { m as i64 - n as i64 })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Arc::new(PeriodicGrid { n, spacing, points, wavenumbers, fwd, inv }))
    }

    /// Number of grid points.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing `2*pi/n`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Grid points `x_j = -pi + 2*pi*j/n`.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Wavenumber `k` stored at each FFT index (`{-n/2+1, ..., n/2}`).
    pub fn wavenumbers(&self) -> &[i64] {
        &self.wavenumbers
    }

    /// Index of `x = 0` in [`Self::points`] (also the Nyquist FFT index).
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }

    /// Largest retained wavenumber under the 2/3 dealiasing rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n as i64) / 3
    }

    /// Forward transform: values at grid points to Fourier coefficients.
    ///
    /// Because the grid starts at `x_0 = -pi` rather than 0, the plain DFT
    /// picks up a phase `e^(i pi k) = (-1)^k` per mode, which is folded in
    /// here so the stored coefficients are true coefficients of `e^(i k x)`.
    fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> =
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for (m, c) in buf.iter_mut().enumerate() {
            let sign = if self.wavenumbers[m] & 1 == 0 { scale } else { -scale };
            *c *= sign;
        }
        buf
    }

    /// Inverse transform: Fourier coefficients to real values at grid points.
    /// Returns the values and the largest imaginary residue (which is at
    /// rounding level for conjugate-symmetric input).
    fn inverse(&self, spectrum: &[Complex64]) -> (Vec<f64>, f64) {
        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(m, &c)| if self.wavenumbers[m] & 1 == 0 { c } else { -c })
            .collect();
        self.inv.process(&mut buf);
        let max_imag = buf.iter().fold(0.0_f64, |acc, c| acc.max(c.im.abs()));
        (buf.iter().map(|c| c.re).collect(), max_imag)
    }
}

/// A real field on a [`PeriodicGrid`], stored both as grid values and as the
/// matching Fourier coefficients. The two representations are kept consistent
/// by construction.
#[derive(Clone)]
pub struct PeriodicField {
    grid: Arc<PeriodicGrid>,
    values: Vec<f64>,
    spectrum: Vec<Complex64>,
}

impl fmt::Debug for PeriodicField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicField")
            .field("n", &self.grid.n)
            .field("linf", &self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
            .finish()
    }
}

impl PeriodicField {
    /// Builds a field from values at the grid points.
    pub fn from_values(grid: &Arc<PeriodicGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Config(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.n
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite field sample {bad}")));
        }
        let spectrum = grid.forward(&values);
        Ok(PeriodicField { grid: Arc::clone(grid), values, spectrum })
    }

    /// Builds a field by sampling `f` at the grid points.
    pub fn from_fn(grid: &Arc<PeriodicGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points.iter().map(|&x| f(x)).collect();
        Self::from_values(grid, values)
    }

    /// Builds a field from Fourier coefficients in FFT index order.
    ///
    /// The coefficients must be conjugate-symmetric (`c_(-k) = conj(c_k)`,
    /// real mean and Nyquist modes) to relative tolerance `1e-12`; they are
    /// then symmetrized exactly so the stored values are exactly real.
    pub fn from_spectrum(grid: &Arc<PeriodicGrid>, spectrum: Vec<Complex64>) -> Result<Self> {
        let n = grid.n;
        if spectrum.len() != n {
            return Err(Error::Config(format!(
                "coefficient count {} does not match grid size {}",
                spectrum.len(),
                n
            )));
        }
        if spectrum.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Numeric("non-finite Fourier coefficient".into()));
        }
        let scale = spectrum.iter().fold(1.0_f64, |m, c| m.max(c.norm()));
        let tol = 1e-12 * scale;
        let mut sym = spectrum;
        if sym[0].im.abs() > tol || sym[n / 2].im.abs() > tol {
            return Err(Error::Config(
                "spectrum is not conjugate-symmetric: mean or Nyquist coefficient has an imaginary part".into(),
            ));
        }
        sym[0].im = 0.0;
        sym[n / 2].im = 0.0;
        for m in 1..n / 2 {
            let defect = (sym[m] - sym[n - m].conj()).norm();
            if defect > tol {
                return Err(Error::Config(format!(
                    "spectrum is not conjugate-symmetric: modes {} and {} differ by {defect:.3e}",
                    grid.wavenumbers[m],
                    grid.wavenumbers[n - m],
                )));
            }
            let avg = 0.5 * (sym[m] + sym[n - m].conj());
            sym[m] = avg;
            sym[n - m] = avg.conj();
        }
        let (values, _imag) = grid.inverse(&sym);
        Ok(PeriodicField { grid: Arc::clone(grid), values, spectrum: sym })
    }

    /// The constant field with value `c`.
    pub fn constant(grid: &Arc<PeriodicGrid>, c: f64) -> Result<Self> {
        Self::from_values(grid, vec![c; grid.n])
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        &self.grid
    }

    /// Values at the grid points.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Fourier coefficients in FFT index order (see [`PeriodicGrid::wavenumbers`]).
    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    /// Coefficient of mode `k` (zero for `|k| > n/2` or the unstored `-n/2`).
    pub fn coeff(&self, k: i64) -> Complex64 {
        let half = (self.grid.n / 2) as i64;
        if k > half || k <= -half {
            return Complex64::new(0.0, 0.0);
        }
        let m = k.rem_euclid(self.grid.n as i64) as usize;
        self.spectrum[m]
    }

    /// Evaluates the trigonometric interpolant at an arbitrary point.
    ///
    /// This sums the Fourier series directly in `O(n)` per call, which is the
    /// evaluation rule used by all off-grid quadratures. The Nyquist mode
    /// contributes `Re(c_(n/2)) cos(n x / 2)`, the symmetric interpolant.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.n;
        // Reduce to [-pi, pi) so the recurrence below starts from a small angle.
        let xr = (x + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
        let rot = Complex64::from_polar(1.0, xr);
        let mut w = rot;
        let mut acc = self.spectrum[0].re;
        for m in 1..n / 2 {
            acc += 2.0 * (self.spectrum[m] * w).re;
            w *= rot;
        }
        acc + self.spectrum[n / 2].re * w.re
    }

    /// Evaluates `f(x) - f(0)` with the subtraction performed mode by mode.
    ///
    /// For fields vanishing at the origin the difference is genuinely small
    /// near `x = 0`, but `eval(x) - eval(0.0)` would leave rounding noise on
    /// the scale of the field itself. Writing each mode's contribution as
    /// `2 (Re c_k (cos kx - 1) - Im c_k sin kx)` with
    /// `cos kx - 1 = -2 sin^2(kx/2)` keeps the result proportional to the
    /// true difference, which weighted quadratures against `x^(-1-delta)`
    /// depend on.
    pub fn eval_minus_origin(&self, x: f64) -> f64 {
        let n = self.grid.n;
        let xr = (x + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
        let mut acc = 0.0;
        for m in 1..n / 2 {
            let kx = m as f64 * xr;
            let half = (0.5 * kx).sin();
            acc += 2.0 * (self.spectrum[m].re * (-2.0 * half * half) - self.spectrum[m].im * kx.sin());
        }
        let kx = (n / 2) as f64 * xr;
        let half = (0.5 * kx).sin();
        acc + self.spectrum[n / 2].re * (-2.0 * half * half)
    }

    /// Applies a Fourier multiplier `k -> m(k)` and returns the new field.
    ///
    /// The multiplier is applied to every stored mode including Nyquist;
    /// callers that need the Nyquist mode dropped (every odd multiplier)
    /// must return zero for `k = n/2`.
    pub fn map_multiplier(&self, mult: impl Fn(i64) -> Complex64) -> PeriodicField {
        let spectrum: Vec<Complex64> = self
            .spectrum
            .iter()
            .zip(self.grid.wavenumbers.iter())
            .map(|(&c, &k)| c * mult(k))
            .collect();
        let (values, _imag) = self.grid.inverse(&spectrum);
        PeriodicField { grid: Arc::clone(&self.grid), values, spectrum }
    }

    /// Pointwise linear combination `self + scale * other` on a shared grid.
    pub fn axpy(&self, scale: f64, other: &PeriodicField) -> Result<PeriodicField> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && self.grid.n != other.grid.n {
            return Err(Error::Config("fields live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(&u, &v)| u + scale * v)
            .collect();
        PeriodicField::from_values(&self.grid, values)
    }
}

/// Spectral derivative: multiplies mode `k` by `i k` and zeroes Nyquist.
pub fn spectral_derivative(f: &PeriodicField) -> PeriodicField {
    let nyquist = (f.grid().n() / 2) as i64;
    f.map_multiplier(|k| {
        if k == nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k as f64)
        }
    })
}

/// 2/3-rule dealiasing: zeroes every mode with `|k| > n/3` (Nyquist included).
pub fn dealias_truncate(f: &PeriodicField) -> PeriodicField {
    let cutoff = f.grid().dealias_cutoff();
    f.map_multiplier(|k| {
        if k.abs() > cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Arc<PeriodicGrid> {
        PeriodicGrid::new(n).unwrap()
    }

    #[test]
    fn rejects_odd_and_tiny_sizes() {
        let err = PeriodicGrid::new(7).unwrap_err();
        assert!(matches!(err, Error::Config(ref msg) if msg.contains("even")), "{err}");
        let err = PeriodicGrid::new(6).unwrap_err();
        assert!(matches!(err, Error::Config(ref msg) if msg.contains("at least 8")), "{err}");
    }

    #[test]
    fn points_hit_reference_angles_exactly() {
        let g = grid(8);
        assert_eq!(g.points()[0], -PI, "first point should be -pi");
        assert_eq!(g.points()[4], 0.0, "midpoint should be 0");
        assert_eq!(g.points()[6], PI / 2.0, "three-quarter point should be pi/2");
        assert_eq!(g.origin_index(), 4);
    }

    #[test]
    fn wavenumber_layout_covers_expected_range() {
        let g = grid(8);
        assert_eq!(g.wavenumbers(), &[0, 1, 2, 3, 4, -3, -2, -1]);
    }

    #[test]
    fn sine_has_expected_coefficients() {
        let g = grid(64);
        let f = PeriodicField::from_fn(&g, f64::sin).unwrap();
        let c1 = f.coeff(1);
        let cm1 = f.coeff(-1);
        assert!((c1 - Complex64::new(0.0, -0.5)).norm() < 1e-14, "c_1 = {c1}");
        assert!((cm1 - Complex64::new(0.0, 0.5)).norm() < 1e-14, "c_-1 = {cm1}");
        for k in [0i64, 2, 3, 5, 17, 32] {
            assert!(f.coeff(k).norm() < 1e-14, "mode {k} should vanish");
        }
    }

    #[test]
    fn derivative_is_exact_on_band_limited_data() {
        let g = grid(64);
        let f = PeriodicField::from_fn(&g, |x| (3.0 * x).sin() + 0.5 * (5.0 * x).cos()).unwrap();
        let df = spectral_derivative(&f);
        for (&x, &d) in g.points().iter().zip(df.values()) {
            let exact = 3.0 * (3.0 * x).cos() - 2.5 * (5.0 * x).sin();
            assert!((d - exact).abs() < 1e-12, "derivative at {x}: {d} vs {exact}");
        }
    }

    #[test]
    fn derivative_zeroes_nyquist_mode() {
        let g = grid(8);
        // cos(4x) is pure Nyquist content on an 8-point grid.
        let f = PeriodicField::from_fn(&g, |x| (4.0 * x).cos()).unwrap();
        let df = spectral_derivative(&f);
        for &v in df.values() {
            assert!(v.abs() < 1e-14, "Nyquist derivative should vanish, got {v}");
        }
    }

    #[test]
    fn dealias_zeroes_high_modes_only() {
        let g = grid(64);
        // mode 31 > 64/3 is removed, mode 21 <= 64/3 survives.
        let f = PeriodicField::from_fn(&g, |x| (31.0 * x).cos()).unwrap();
        let cut = dealias_truncate(&f);
        for &v in cut.values() {
            assert!(v.abs() < 1e-13, "mode 31 should be dealiased away, got {v}");
        }
        let f = PeriodicField::from_fn(&g, |x| (21.0 * x).cos()).unwrap();
        let kept = dealias_truncate(&f);
        let diff: f64 = f
            .values()
            .iter()
            .zip(kept.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-13, "mode 21 should survive dealiasing, changed by {diff}");
    }

    #[test]
    fn dealias_is_idempotent() {
        let g = grid(64);
        let f = PeriodicField::from_fn(&g, |x| (0.3 * x).sin().powi(3) + (17.0 * x).cos()).unwrap();
        let once = dealias_truncate(&f);
        let twice = dealias_truncate(&once);
        for (a, b) in once.values().iter().zip(twice.values()) {
            assert_eq!(a, b, "dealiasing twice must equal dealiasing once");
        }
    }

    #[test]
    fn eval_matches_grid_values_and_interpolates() {
        let g = grid(64);
        let f = PeriodicField::from_fn(&g, |x| (2.0 * x).sin() - 0.3 * (7.0 * x).cos()).unwrap();
        for (&x, &v) in g.points().iter().zip(f.values()) {
            assert!((f.eval(x) - v).abs() < 1e-12, "eval should reproduce grid value at {x}");
        }
        // Off-grid points reproduce the underlying band-limited function.
        for &x in &[0.1234f64, -2.7, 3.0, 1.0e3, -1.0e3] {
            let exact = (2.0 * x).sin() - 0.3 * (7.0 * x).cos();
            assert!((f.eval(x) - exact).abs() < 1e-10, "interpolation at {x}");
        }
    }

    #[test]
    fn eval_minus_origin_tracks_quadratic_vanishing() {
        let g = grid(64);
        // 2 sin^2(x/2) + small higher harmonics, all vanishing at the origin
        let f = PeriodicField::from_fn(&g, |x| {
            2.0 * (0.5 * x).sin().powi(2) + 0.1 * (4.0 * (0.5 * x).sin().powi(2)).powi(2)
        })
        .unwrap();
        for &x in &[1e-3f64, 1e-5, 1e-7, 1e-9] {
            let exact =
                2.0 * (0.5 * x).sin().powi(2) + 0.1 * (4.0 * (0.5 * x).sin().powi(2)).powi(2);
            let got = f.eval_minus_origin(x);
            // The error must shrink with x. Subtracting two plain
            // evaluations would leave noise on the scale of the field,
            // about 1e-16 regardless of x, which this bound excludes for
            // the smaller sample points.
            assert!(
                (got - exact).abs() < 1e-12 * x,
                "difference evaluation at {x}: {got} vs {exact}"
            );
        }
        // consistent with plain eval away from the origin
        for &x in &[0.5, -2.0, 3.1] {
            assert!((f.eval_minus_origin(x) - (f.eval(x) - f.eval(0.0))).abs() < 1e-12);
        }
    }

    #[test]
    fn from_spectrum_rejects_asymmetric_coefficients() {
        let g = grid(8);
        let mut spec = vec![Complex64::new(0.0, 0.0); 8];
        spec[1] = Complex64::new(0.5, 0.25);
        // Missing the conjugate partner at index 7.
        let err = PeriodicField::from_spectrum(&g, spec).unwrap_err();
        assert!(matches!(err, Error::Config(ref msg) if msg.contains("conjugate")), "{err}");
    }

    #[test]
    fn from_values_rejects_non_finite_samples() {
        let g = grid(8);
        let mut vals = vec![0.0; 8];
        vals[3] = f64::NAN;
        let err = PeriodicField::from_values(&g, vals).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)), "{err}");
    }

    proptest! {
        #[test]
        fn round_trip_preserves_values(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = grid(64);
            let values: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = PeriodicField::from_values(&g, values.clone()).unwrap();
            let back = PeriodicField::from_spectrum(&g, f.spectrum().to_vec()).unwrap();
            let linf = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            for (a, b) in values.iter().zip(back.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * linf.max(1.0));
            }
        }

        #[test]
        fn parseval_holds_on_random_fields(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = grid(128);
            let values: Vec<f64> = (0..128).map(|_| rng.random_range(-2.0..2.0)).collect();
            let f = PeriodicField::from_values(&g, values.clone()).unwrap();
            let physical: f64 = values.iter().map(|v| v * v).sum::<f64>() * g.spacing();
            let spectral: f64 = f.spectrum().iter().map(|c| c.norm_sqr()).sum::<f64>() * TAU;
            prop_assert!((physical - spectral).abs() <= 1e-10 * physical.max(1.0),
                "Parseval mismatch: {} vs {}", physical, spectral);
        }
    }
}
