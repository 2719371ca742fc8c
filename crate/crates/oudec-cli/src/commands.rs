//! Subcommand implementations.

use std::path::PathBuf;
use std::str::FromStr;

use oudec::analysis::{Method, SweepOptions};
use oudec::{
    build_pseudomode, generate_series, markov_limit_study, tau_dec_formula, tegmark_time,
    CoherenceSeries, PhysicalParams,
};

use crate::output::{fmt_float, Csv};
use crate::settings::Settings;
use crate::AppError;

fn parse_methods(tags: &[String], allow_formula: bool) -> Result<Vec<Method>, AppError> {
    if tags.is_empty() {
        return Err(AppError::Config(
            "no methods requested; pass --method <tag> (or methods = ... in the config)".into(),
        ));
    }
    let mut methods = Vec::new();
    for tag in tags {
        let method = Method::from_str(tag).map_err(|e| AppError::Config(e.to_string()))?;
        if !allow_formula && !method.has_series() {
            return Err(AppError::Config(format!(
                "method {tag:?} has no time series and cannot be used here"
            )));
        }
        if !methods.contains(&method) {
            methods.push(method);
        }
    }
    Ok(methods)
}

fn out_path(settings: &Settings, default_name: &str) -> PathBuf {
    settings
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_name))
}

/// Auto horizon: twenty square-root estimates, falling back to the
/// memoryless bound when the kernel has no memory.
fn auto_t_max(params: &PhysicalParams) -> Result<f64, AppError> {
    if let Ok(estimate) = tau_dec_formula(params) {
        return Ok(20.0 * estimate);
    }
    tegmark_time(params)
        .map(|t| 20.0 * t)
        .map_err(|_| AppError::Config("cannot size the grid: pass --t-max explicitly".into()))
}

fn decay_grid(
    settings: &Settings,
    params: &PhysicalParams,
    methods: &[Method],
) -> Result<(f64, f64), AppError> {
    let t_max = match settings.t_max {
        Some(v) if v > 0.0 && v.is_finite() => v,
        Some(v) => {
            return Err(AppError::Config(format!(
                "t_max must be positive, got {v}"
            )))
        }
        None => auto_t_max(params)?,
    };
    let dt = match settings.dt {
        Some(v) if v > 0.0 && v.is_finite() => v,
        Some(v) => return Err(AppError::Config(format!("dt must be positive, got {v}"))),
        None => {
            let mut dt = t_max / 2000.0;
            for method in methods {
                match method {
                    Method::Volterra => dt = dt.min(params.tau_c() / 40.0),
                    Method::Pseudomode => {
                        let base = build_pseudomode(params, 4).map_err(AppError::Compute)?;
                        dt = dt.min(base.step_guard() / 2.0);
                    }
                    _ => {}
                }
            }
            dt
        }
    };
    if dt > t_max {
        return Err(AppError::Config(format!(
            "dt = {dt} exceeds t_max = {t_max}"
        )));
    }
    Ok((t_max, dt))
}

/// `decay`: sample every requested method on one grid and emit
/// `t,<method>_re,<method>_im,<method>_abs` columns.
pub fn decay(settings: &Settings) -> Result<(), AppError> {
    let methods = parse_methods(&settings.methods, false)?;
    let params = settings.params()?;
    let (t_max, dt) = decay_grid(settings, &params, &methods)?;

    let mut series: Vec<CoherenceSeries> = Vec::with_capacity(methods.len());
    for &method in &methods {
        series.push(
            generate_series(method, &params, t_max, dt, settings.fock_cap)
                .map_err(AppError::Compute)?,
        );
    }

    let mut header = String::from("t");
    for method in &methods {
        let tag = method.tag();
        header.push_str(&format!(",{tag}_re,{tag}_im,{tag}_abs"));
    }
    let mut csv = Csv::new(header);
    let n = series.iter().map(|s| s.len()).min().unwrap_or(0);
    for k in 0..n {
        let mut row = fmt_float(k as f64 * dt);
        for s in &series {
            let v = s.values()[k];
            row.push(',');
            row.push_str(&fmt_float(v.re));
            row.push(',');
            row.push_str(&fmt_float(v.im));
            row.push(',');
            row.push_str(&fmt_float(v.norm()));
        }
        csv.rows.push(row);
    }
    // Cross-method divergence footers over the |C| columns; methods
    // built on different conventions (curvature factor 2) are expected
    // to differ beyond the shared quadratic onset.
    for i in 0..series.len() {
        for j in (i + 1)..series.len() {
            let diff = (0..n)
                .map(|k| (series[i].abs(k) - series[j].abs(k)).abs())
                .fold(0.0, f64::max);
            csv.footers.push(format!(
                "# max_abs_diff({},{})={}",
                methods[i].tag(),
                methods[j].tag(),
                fmt_float(diff)
            ));
        }
    }

    let path = out_path(settings, "decay.csv");
    csv.write_to(&path)?;
    println!(
        "wrote {} rows x {} methods to {} (t_max = {t_max}, dt = {dt})",
        n,
        methods.len(),
        path.display()
    );
    for footer in &csv.footers {
        println!("{}", footer.trim_start_matches("# "));
    }
    Ok(())
}

/// `sweep`: decoherence time against correlation time plus a power-law
/// fit per method.
pub fn sweep(settings: &Settings) -> Result<(), AppError> {
    let methods = parse_methods(&settings.methods, true)?;
    let params = settings.params()?;
    let grid = settings.sweep_grid()?;
    let opts = SweepOptions {
        threshold: settings.threshold,
        interpolate: settings.interpolate,
        fock_cap: settings.fock_cap,
        jobs: settings.jobs,
    };
    let result = oudec::sweep(&params, &grid, &methods, &opts).map_err(AppError::Compute)?;

    let mut header = String::from("tau_c");
    for method in &methods {
        header.push_str(&format!(",{}_tau_dec", method.tag()));
    }
    let mut csv = Csv::new(header);
    for row in &result.rows {
        let mut line = fmt_float(row.tau_c);
        for method in &methods {
            line.push(',');
            line.push_str(&fmt_float(row.times[method].value));
        }
        csv.rows.push(line);
    }
    for method in &methods {
        let fit = &result.fits[method];
        csv.footers.push(format!(
            "# method={} exponent={} intercept={} residual={}",
            method.tag(),
            fmt_float(fit.exponent),
            fmt_float(fit.intercept),
            fmt_float(fit.residual)
        ));
    }

    let path = out_path(settings, "sweep.csv");
    csv.write_to(&path)?;
    for method in &methods {
        println!("{} exponent = {:.6}", method.tag(), result.fits[method].exponent);
    }
    println!(
        "wrote {} sweep points x {} methods to {}",
        result.rows.len(),
        methods.len(),
        path.display()
    );
    Ok(())
}

/// `limit`: decoherence time on a descending tau_c grid against the
/// memoryless bound.
pub fn limit(settings: &Settings) -> Result<(), AppError> {
    if settings.decades < 2 {
        return Err(AppError::Config(format!(
            "limit needs at least 2 decades, got {}",
            settings.decades
        )));
    }
    let params = settings.params()?;
    let start = if settings.tau_c_explicit {
        settings.tau_c
    } else {
        0.1
    };
    let study = markov_limit_study(&params, start, settings.decades).map_err(AppError::Compute)?;

    let mut csv = Csv::new("tau_c,tau_dec,tau_T,ratio");
    for row in &study.rows {
        csv.rows.push(format!(
            "{},{},{},{}",
            fmt_float(row.tau_c),
            fmt_float(row.tau_dec),
            fmt_float(study.tau_t),
            fmt_float(row.ratio)
        ));
    }
    csv.footers.push(format!(
        "# converged={} ratio={}",
        study.converged,
        fmt_float(study.final_ratio())
    ));
    csv.footers.push(
        "# note: the ratio reflects the slow decay root 2 a^2 D / hbar^2 of the \
         damped-oscillator closure; the square-root formula would give 1 (see README)"
            .into(),
    );

    let path = out_path(settings, "limit.csv");
    csv.write_to(&path)?;
    println!(
        "converged = {}, tau_dec/tau_T = {:.4}, table in {}",
        study.converged,
        study.final_ratio(),
        path.display()
    );
    Ok(())
}

/// Arguments specific to the `presets` subcommand.
pub struct PresetArgs {
    pub name: String,
    pub tau_t: Option<f64>,
    pub multiplier: Option<f64>,
    pub tau_c_low: Option<f64>,
    pub tau_c_high: Option<f64>,
}

/// `presets`: decoherence-time estimates for named environments in SI
/// seconds. Requires the memoryless bound `--tau-t` for the object under
/// study; everything else follows from the square-root law
/// `tau_dec = sqrt(tau_T tau_c)`.
pub fn presets(args: &PresetArgs) -> Result<(), AppError> {
    const WATER_LOW: f64 = 1e-14;
    const WATER_HIGH: f64 = 1e-13;

    let tau_t = match args.tau_t {
        Some(v) if v > 0.0 && v.is_finite() => v,
        Some(v) => {
            return Err(AppError::Config(format!(
                "tau-t must be positive seconds, got {v}"
            )))
        }
        None => {
            return Err(AppError::Config(
                "presets need --tau-t <seconds>, the memoryless decoherence bound of the \
                 object under study"
                    .into(),
            ))
        }
    };

    let mut notes: Vec<String> = Vec::new();
    let (low, high) = match args.name.as_str() {
        "water" => {
            notes.push(
                "tau_c bounds follow librational timescales of bulk water".to_string(),
            );
            (WATER_LOW, WATER_HIGH)
        }
        "microtubule" => {
            let multiplier = args.multiplier.unwrap_or(1e3);
            if multiplier <= 0.0 || !multiplier.is_finite() {
                return Err(AppError::Config(format!(
                    "multiplier must be positive, got {multiplier}"
                )));
            }
            notes.push(format!(
                "tau_c bounds assume a x{multiplier:.1e} multiplier over bulk water \
                 (assumption; set with --multiplier)"
            ));
            (WATER_LOW * multiplier, WATER_HIGH * multiplier)
        }
        "custom" => {
            let (low, high) = match (args.tau_c_low, args.tau_c_high) {
                (Some(l), Some(h)) => (l, h),
                _ => {
                    return Err(AppError::Config(
                        "custom preset needs --tau-c-low and --tau-c-high in seconds".into(),
                    ))
                }
            };
            if low <= 0.0 || high < low || low.is_nan() || high.is_nan() {
                return Err(AppError::Config(format!(
                    "need 0 < tau-c-low <= tau-c-high, got {low} and {high}"
                )));
            }
            (low, high)
        }
        other => {
            return Err(AppError::Config(format!(
                "unknown preset {other:?}; choose water, microtubule, or custom"
            )))
        }
    };

    println!("preset: {}", args.name);
    println!("tau_T = {tau_t:.4e} s (user supplied)");
    for note in &notes {
        println!("note: {note}");
    }
    println!("{:<6} {:>12} {:>12} {:>12}", "bound", "tau_c_s", "tau_dec_s", "enhance");
    for (label, tau_c) in [("low", low), ("high", high)] {
        let tau_dec = (tau_t * tau_c).sqrt();
        let enhancement = (tau_c / tau_t).sqrt();
        println!(
            "{label:<6} {:>12.4e} {:>12.4e} {:>12.4}",
            tau_c, tau_dec, enhancement
        );
    }
    println!("enhancement = tau_dec / tau_T = sqrt(tau_c / tau_T); values below 1 mean the memoryless bound effectively holds");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_parsing() {
        let tags = vec!["tegmark".to_string(), "eq16".to_string(), "tegmark".to_string()];
        let methods = parse_methods(&tags, false).unwrap();
        assert_eq!(methods, vec![Method::Tegmark, Method::Oscillator]);

        assert!(parse_methods(&[], false).is_err());
        assert!(parse_methods(&["bogus".to_string()], false).is_err());
        assert!(parse_methods(&["formula".to_string()], false).is_err());
        assert!(parse_methods(&["formula".to_string()], true).is_ok());
    }

    #[test]
    fn auto_grid_handles_memoryless_case() {
        let settings = Settings::default();
        let markov = PhysicalParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
        let (t_max, dt) = decay_grid(&settings, &markov, &[Method::Tegmark]).unwrap();
        assert!((t_max - 20.0).abs() < 1e-12);
        assert!(dt > 0.0 && dt <= t_max);
    }
}
