//! Run configuration: TOML parsing, flag merging, and validation.
//!
//! Configs are flat key-value documents. Every key is optional; defaults
//! follow the solver's own defaults plus `s = 3`, `delta = 0.5`, `q = 1.5`,
//! `sigma = 1.5`. Unknown keys are rejected with the offending name so a
//! typo cannot silently fall back to a default.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ipm1d::grid::{PeriodicField, PeriodicGrid};
use ipm1d::kernels::ClassProfile;
use ipm1d::solver::SolverConfig;
use ipm1d::{Error, Result};
use num_complex::Complex64;
use serde::Deserialize;

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "IPM1D_OUT_DIR";

/// Raw config document. Field names double as the accepted TOML keys.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: Option<usize>,
    pub a: Option<f64>,
    pub g: Option<f64>,
    pub cfl: Option<f64>,
    pub t_end: Option<f64>,
    pub slope_stop: Option<f64>,
    pub tail_stop: Option<f64>,
    pub output_every: Option<f64>,
    pub profile: Option<String>,
    pub coefficients: Option<Vec<(i64, f64, f64)>>,
    pub s: Option<u32>,
    pub delta: Option<f64>,
    pub q: Option<f64>,
    pub sigma: Option<f64>,
    pub out_dir: Option<String>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    /// Parses a TOML document, naming the bad key or value on failure.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config error: {}", e.message())))
    }

    /// Reads and parses a config file from disk.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Loads `path` when given, otherwise starts from an empty document.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_path(p),
            None => Ok(Self::default()),
        }
    }

    /// Overlays `over` on `self`; keys set in `over` win.
    pub fn merged(self, over: ConfigFile) -> ConfigFile {
        ConfigFile {
            n: over.n.or(self.n),
            a: over.a.or(self.a),
            g: over.g.or(self.g),
            cfl: over.cfl.or(self.cfl),
            t_end: over.t_end.or(self.t_end),
            slope_stop: over.slope_stop.or(self.slope_stop),
            tail_stop: over.tail_stop.or(self.tail_stop),
            output_every: over.output_every.or(self.output_every),
            profile: over.profile.or(self.profile),
            coefficients: over.coefficients.or(self.coefficients),
            s: over.s.or(self.s),
            delta: over.delta.or(self.delta),
            q: over.q.or(self.q),
            sigma: over.sigma.or(self.sigma),
            out_dir: over.out_dir.or(self.out_dir),
            seed: over.seed.or(self.seed),
        }
    }
}

/// Initial data selector: a named profile or an explicit coefficient list.
#[derive(Debug, Clone)]
pub enum InitialData {
    Profile(NamedProfile),
    /// Entries are `(k, re, im)` for the mode at wavenumber `k`.
    Coefficients(Vec<(i64, f64, f64)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedProfile {
    OneMinusCos,
    OneMinusCosSquared,
}

impl NamedProfile {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "one-minus-cos" => Ok(Self::OneMinusCos),
            "one-minus-cos-squared" => Ok(Self::OneMinusCosSquared),
            other => Err(Error::Config(format!(
                "unknown profile {other:?}; expected \"one-minus-cos\" or \"one-minus-cos-squared\""
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::OneMinusCos => "one-minus-cos",
            Self::OneMinusCosSquared => "one-minus-cos-squared",
        }
    }

    fn class_profile(self) -> ClassProfile {
        match self {
            Self::OneMinusCos => ClassProfile::one_minus_cos(),
            Self::OneMinusCosSquared => ClassProfile::one_minus_cos_squared(),
        }
    }
}

impl InitialData {
    /// Realizes the initial condition on `grid`.
    pub fn build(&self, grid: &Arc<PeriodicGrid>) -> Result<PeriodicField> {
        match self {
            Self::Profile(p) => p.class_profile().to_field(grid),
            Self::Coefficients(list) => {
                let n = grid.n();
                let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
                for &(k, re, im) in list {
                    let idx = k.rem_euclid(n as i64) as usize;
                    spectrum[idx] = Complex64::new(re, im);
                }
                PeriodicField::from_spectrum(grid, spectrum)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Profile(p) => format!("profile {}", p.as_str()),
            Self::Coefficients(list) => format!("{} explicit coefficients", list.len()),
        }
    }
}

/// Fully resolved simulation request.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub initial: InitialData,
    /// Sobolev index for the diagnostic norm column.
    pub s: u32,
    /// Weight exponent offset for the origin-weighted functional.
    pub delta: f64,
    pub q: f64,
    pub sigma: f64,
    pub out_dir: PathBuf,
    pub seed: u64,
}

/// Resolves a merged document into a validated `RunConfig`.
///
/// Precedence for the output directory: explicit flag, then the
/// `IPM1D_OUT_DIR` environment variable, then the config key, then
/// `ipm1d-out`.
pub fn resolve_run_config(file: ConfigFile, out_dir_flag: Option<PathBuf>) -> Result<RunConfig> {
    let mut solver = SolverConfig::default();
    if let Some(n) = file.n {
        solver.n = n;
    }
    if let Some(a) = file.a {
        solver.a = a;
    }
    if let Some(g) = file.g {
        solver.g = g;
    }
    if let Some(cfl) = file.cfl {
        solver.cfl = cfl;
    }
    if let Some(t_end) = file.t_end {
        solver.t_end = t_end;
    }
    if let Some(slope_stop) = file.slope_stop {
        solver.slope_stop = slope_stop;
    }
    if let Some(tail_stop) = file.tail_stop {
        solver.tail_stop = tail_stop;
    }
    if let Some(output_every) = file.output_every {
        solver.output_every = output_every;
    }
    solver.validate()?;

    let initial = match (&file.profile, &file.coefficients) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "set either profile or coefficients, not both".into(),
            ));
        }
        (Some(name), None) => InitialData::Profile(NamedProfile::parse(name)?),
        (None, Some(list)) => InitialData::Coefficients(validate_coefficients(list, solver.n)?),
        (None, None) => {
            return Err(Error::Config(
                "initial data required: set profile or coefficients".into(),
            ));
        }
    };

    let s = file.s.unwrap_or(3);
    if s == 0 {
        return Err(Error::Config("s must be at least 1".into()));
    }
    let delta = file.delta.unwrap_or(0.5);
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let q = file.q.unwrap_or(1.5);
    if !(q > 1.0 && q < 2.0) {
        return Err(Error::Config(format!("q must lie in (1, 2), got {q}")));
    }
    let sigma = file.sigma.unwrap_or(1.5);
    if !(sigma > 1.0 && sigma < 2.0) {
        return Err(Error::Config(format!(
            "sigma must lie in (1, 2), got {sigma}"
        )));
    }

    let out_dir = out_dir_flag
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| file.out_dir.as_deref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("ipm1d-out"));

    Ok(RunConfig {
        solver,
        initial,
        s,
        delta,
        q,
        sigma,
        out_dir,
        seed: file.seed.unwrap_or(0),
    })
}

/// Checks an explicit coefficient list against the grid it will be placed on.
///
/// Requirements: indices inside the resolvable band (`|k| < n/2`), no
/// duplicates, finite entries, a real mean mode, and an exact conjugate
/// partner for every nonzero wavenumber so the realized field is real.
pub fn validate_coefficients(list: &[(i64, f64, f64)], n: usize) -> Result<Vec<(i64, f64, f64)>> {
    if list.is_empty() {
        return Err(Error::Config("coefficient list is empty".into()));
    }
    let half = (n / 2) as i64;
    let mut seen: Vec<i64> = Vec::with_capacity(list.len());
    for &(k, re, im) in list {
        if k.abs() >= half {
            return Err(Error::Config(format!(
                "coefficient k = {k} is outside the resolvable band |k| < {half} for n = {n}"
            )));
        }
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::Config(format!(
                "coefficient k = {k} has a non-finite entry ({re}, {im})"
            )));
        }
        if seen.contains(&k) {
            return Err(Error::Config(format!("coefficient k = {k} appears twice")));
        }
        seen.push(k);
        if k == 0 && im != 0.0 {
            return Err(Error::Config(format!(
                "coefficient k = 0 must be real, got imaginary part {im}"
            )));
        }
    }
    for &(k, re, im) in list {
        if k == 0 {
            continue;
        }
        let partner = list.iter().find(|&&(kk, _, _)| kk == -k);
        match partner {
            Some(&(_, pre, pim)) if pre == re && pim == -im => {}
            _ => {
                return Err(Error::Config(format!(
                    "coefficients are not conjugate-symmetric: k = {k} needs a partner \
                     at k = {} with value ({re}, {})",
                    -k, -im
                )));
            }
        }
    }
    Ok(list.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_every_field() {
        let file = ConfigFile::from_toml("profile = \"one-minus-cos\"").unwrap();
        let rc = resolve_run_config(file, Some(PathBuf::from("x"))).unwrap();
        assert_eq!(rc.solver.n, 1024);
        assert_eq!(rc.solver.a, 1.0);
        assert_eq!(rc.solver.g, 1.0);
        assert_eq!(rc.solver.cfl, 0.4);
        assert_eq!(rc.s, 3);
        assert_eq!(rc.delta, 0.5);
        assert_eq!(rc.q, 1.5);
        assert_eq!(rc.sigma, 1.5);
        assert_eq!(rc.seed, 0);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = ConfigFile::from_toml("profle = \"one-minus-cos\"").unwrap_err();
        assert!(err.to_string().contains("profle"), "{err}");
    }

    #[test]
    fn negative_layer_thickness_is_named() {
        let file = ConfigFile::from_toml("a = -1.0\nprofile = \"one-minus-cos\"").unwrap();
        let err = resolve_run_config(file, Some(PathBuf::from("x"))).unwrap_err();
        assert!(err.to_string().contains('a'), "{err}");
        assert!(err.to_string().contains("-1"), "{err}");
    }

    #[test]
    fn initial_data_is_mandatory_for_runs() {
        let file = ConfigFile::from_toml("n = 64").unwrap();
        let err = resolve_run_config(file, Some(PathBuf::from("x"))).unwrap_err();
        assert!(err.to_string().contains("initial data"), "{err}");
    }

    #[test]
    fn coefficient_lists_must_be_conjugate_symmetric() {
        let bad = vec![(1, 0.5, 0.25)];
        let err = validate_coefficients(&bad, 64).unwrap_err();
        assert!(err.to_string().contains("conjugate"), "{err}");

        let good = vec![(1, 0.5, 0.25), (-1, 0.5, -0.25), (0, 1.0, 0.0)];
        assert!(validate_coefficients(&good, 64).is_ok());
    }

    #[test]
    fn coefficient_band_and_duplicates_are_rejected() {
        let nyquist = vec![(32, 0.1, 0.0), (-32, 0.1, 0.0)];
        assert!(validate_coefficients(&nyquist, 64).is_err());

        let dup = vec![(0, 1.0, 0.0), (0, 2.0, 0.0)];
        let err = validate_coefficients(&dup, 64).unwrap_err();
        assert!(err.to_string().contains("twice"), "{err}");

        let imag_mean = vec![(0, 1.0, 0.5)];
        assert!(validate_coefficients(&imag_mean, 64).is_err());
    }

    #[test]
    fn coefficients_realize_the_expected_field() {
        let grid = PeriodicGrid::new(64).unwrap();
        let data = InitialData::Coefficients(vec![
            (0, 1.0, 0.0),
            (1, -0.5, 0.0),
            (-1, -0.5, 0.0),
        ]);
        let field = data.build(&grid).unwrap();
        let reference = PeriodicField::from_fn(&grid, |x| 1.0 - x.cos()).unwrap();
        for (v, r) in field.values().iter().zip(reference.values()) {
            assert!((v - r).abs() < 1e-12, "{v} vs {r}");
        }
    }

    #[test]
    fn flag_overlay_wins_over_file_keys() {
        let base = ConfigFile::from_toml("n = 128\na = 2.0").unwrap();
        let over = ConfigFile {
            a: Some(3.0),
            ..ConfigFile::default()
        };
        let merged = base.merged(over);
        assert_eq!(merged.n, Some(128));
        assert_eq!(merged.a, Some(3.0));
    }
}
