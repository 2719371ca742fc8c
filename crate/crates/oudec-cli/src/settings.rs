//! Run configuration: built-in defaults, overridden by an optional flat
//! `key = value` config file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use oudec::{PhysicalParams, DEFAULT_FOCK_CAP};

use crate::AppError;

/// Fully resolved run settings. `None` values mean "derive automatically".
#[derive(Debug, Clone)]
pub struct Settings {
    pub a: f64,
    pub hbar: f64,
    pub d: f64,
    pub tau_c: f64,
    /// Whether tau_c was set explicitly (the limit table picks its own
    /// starting point otherwise).
    pub tau_c_explicit: bool,
    pub beta: Option<f64>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
    pub tau_c_min: f64,
    pub tau_c_max: f64,
    pub points: usize,
    pub decades: u32,
    pub threshold: f64,
    pub interpolate: bool,
    pub fock_cap: usize,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub methods: Vec<String>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            a: 1.0,
            hbar: 1.0,
            d: 1.0,
            tau_c: 1.0,
            tau_c_explicit: false,
            beta: None,
            t_max: None,
            dt: None,
            tau_c_min: 10.0,
            tau_c_max: 1000.0,
            points: 8,
            decades: 4,
            threshold: oudec::default_threshold(),
            interpolate: true,
            fock_cap: DEFAULT_FOCK_CAP,
            jobs: None,
            out: None,
            methods: Vec::new(),
        }
    }
}

impl Settings {
    /// Apply one `key = value` pair from a config file.
    fn apply_entry(&mut self, key: &str, value: &str, lineno: usize) -> Result<(), AppError> {
        let bad = |what: &str| {
            AppError::Config(format!(
                "config line {lineno}: cannot parse {what} from {value:?}"
            ))
        };
        let parse_f64 = |v: &str, what: &str| v.trim().parse::<f64>().map_err(|_| bad(what));
        match key {
            "a" => self.a = parse_f64(value, "a")?,
            "hbar" => self.hbar = parse_f64(value, "hbar")?,
            "D" => self.d = parse_f64(value, "D")?,
            "tau_c" => {
                self.tau_c = parse_f64(value, "tau_c")?;
                self.tau_c_explicit = true;
            }
            "beta" => self.beta = Some(parse_f64(value, "beta")?),
            "t_max" => self.t_max = Some(parse_f64(value, "t_max")?),
            "dt" => self.dt = Some(parse_f64(value, "dt")?),
            "tau_c_min" => self.tau_c_min = parse_f64(value, "tau_c_min")?,
            "tau_c_max" => self.tau_c_max = parse_f64(value, "tau_c_max")?,
            "threshold" => self.threshold = parse_f64(value, "threshold")?,
            "points" => {
                self.points = value.trim().parse().map_err(|_| bad("points"))?;
            }
            "decades" => {
                self.decades = value.trim().parse().map_err(|_| bad("decades"))?;
            }
            "fock_cap" => {
                self.fock_cap = value.trim().parse().map_err(|_| bad("fock_cap"))?;
            }
            "jobs" => {
                self.jobs = Some(value.trim().parse().map_err(|_| bad("jobs"))?);
            }
            "interpolate" => {
                self.interpolate = value.trim().parse().map_err(|_| bad("interpolate"))?;
            }
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "methods" => {
                self.methods = value
                    .split(',')
                    .map(|m| m.trim().to_string())
                    .filter(|m| !m.is_empty())
                    .collect();
            }
            other => {
                return Err(AppError::Config(format!(
                    "config line {lineno}: unknown key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Read a flat config file: one `key = value` per line, `#` comments.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Config(format!("cannot read config {}: {e}", path.display())))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                AppError::Config(format!("config line {}: expected key = value", idx + 1))
            })?;
            self.apply_entry(key.trim(), value, idx + 1)?;
        }
        Ok(())
    }

    /// Validated physical parameters; any violation is a config error.
    pub fn params(&self) -> Result<PhysicalParams, AppError> {
        let mut params = PhysicalParams::new(self.a, self.hbar, self.d, self.tau_c)
            .map_err(|e| AppError::Config(e.to_string()))?;
        if let Some(beta) = self.beta {
            params = params
                .with_beta(beta)
                .map_err(|e| AppError::Config(e.to_string()))?;
        }
        if self.threshold <= 0.0 || self.threshold >= 1.0 || self.threshold.is_nan() {
            return Err(AppError::Config(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        Ok(params)
    }

    /// Log-spaced sweep grid from `tau_c_min` to `tau_c_max`.
    pub fn sweep_grid(&self) -> Result<Vec<f64>, AppError> {
        if self.points < 4 {
            return Err(AppError::Config(format!(
                "sweep needs at least 4 points, got {}",
                self.points
            )));
        }
        if !(self.tau_c_min > 0.0 && self.tau_c_max > self.tau_c_min) {
            return Err(AppError::Config(format!(
                "sweep range must satisfy 0 < tau_c_min < tau_c_max, got [{}, {}]",
                self.tau_c_min, self.tau_c_max
            )));
        }
        let ratio = self.tau_c_max / self.tau_c_min;
        let n = self.points;
        Ok((0..n)
            .map(|k| self.tau_c_min * ratio.powf(k as f64 / (n - 1) as f64))
            .collect())
    }
}
