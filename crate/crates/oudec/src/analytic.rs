//! Closed-form coherence laws.
//!
//! Covers the memoryless exponential decay and its decoherence time, the
//! universal quadratic short-time law, the full damped-oscillator solution
//! of the memory-kernel coherence equation in all three damping regimes,
//! the square-root decoherence-time formula, and the exact pure-dephasing
//! solution used as an independent oracle for the pseudomode simulator.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::PhysicalParams;

/// Slack allowed on the series invariants `C(0) = 1` and `|C| <= 1`.
const SERIES_TOL: f64 = 1e-9;

/// A uniformly sampled complex coherence trajectory starting at `C(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceSeries {
    dt: f64,
    values: Vec<Complex64>,
    label: String,
}

impl CoherenceSeries {
    /// Wrap raw samples, enforcing the structural invariants: positive
    /// step, non-empty data, `values[0] = 1`, and `|C| <= 1` up to slack.
    pub fn new(dt: f64, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(Error::InvalidSeries(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidSeries("empty series".into()));
        }
        if (values[0] - Complex64::new(1.0, 0.0)).norm() > SERIES_TOL {
            return Err(Error::InvalidSeries(format!(
                "series must start at 1, got {}",
                values[0]
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.norm().is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite sample {bad}")));
        }
        if let Some(bad) = values.iter().find(|v| v.norm() > 1.0 + SERIES_TOL) {
            return Err(Error::InvalidSeries(format!(
                "coherence magnitude exceeds 1: {bad}"
            )));
        }
        Ok(Self {
            dt,
            values,
            label: label.into(),
        })
    }

    /// Build a real-valued series by evaluating `f` on the grid
    /// `t_k = k dt` for `k = 0 ..= floor(t_max / dt)`.
    pub fn from_fn(
        t_max: f64,
        dt: f64,
        label: impl Into<String>,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let n = sample_count(t_max, dt)?;
        let values = (0..n)
            .map(|k| Complex64::new(f(k as f64 * dt), 0.0))
            .collect();
        Self::new(dt, values, label)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn abs(&self, k: usize) -> f64 {
        self.values[k].norm()
    }

    /// Largest pointwise magnitude difference against another series
    /// sampled on the same grid (compared over the shared prefix).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Number of samples on the grid `0, dt, ..., <= t_max`.
pub(crate) fn sample_count(t_max: f64, dt: f64) -> Result<usize> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if t_max < dt || !t_max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t_max must be at least one step, got {t_max} with dt {dt}"
        )));
    }
    Ok((t_max / dt + 1e-9).floor() as usize + 1)
}

/// Exponential coherence decay of the memoryless bath:
/// `C(t) = exp(-a^2 D t / hbar^2)`.
pub fn tegmark_decay(params: &PhysicalParams, t_max: f64, dt: f64) -> Result<CoherenceSeries> {
    let rate = params.coupling() * params.d();
    CoherenceSeries::from_fn(t_max, dt, "tegmark", |t| (-rate * t).exp())
}

/// Decoherence time of the memoryless bath, `tau_T = hbar^2 / (a^2 D)`.
pub fn tegmark_time(params: &PhysicalParams) -> Result<f64> {
    if params.d() == 0.0 {
        return Err(Error::NoDecoherence);
    }
    Ok(1.0 / (params.coupling() * params.d()))
}

/// Universal short-time law `C(t) = max(0, 1 - Gamma t^2)`.
///
/// Valid for `t` well below `Gamma^{-1/2}`; the clamp at zero keeps the
/// magnitude physical outside that window and is flagged in the label.
pub fn quadratic_law(gamma: f64, t_max: f64, dt: f64) -> Result<CoherenceSeries> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "quadratic rate must be non-negative, got {gamma}"
        )));
    }
    let n = sample_count(t_max, dt)?;
    let mut clamped = false;
    let values = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            let c = 1.0 - gamma * t * t;
            if c < 0.0 {
                clamped = true;
            }
            Complex64::new(c.max(0.0), 0.0)
        })
        .collect();
    let label = if clamped {
        "quadratic (clamped)"
    } else {
        "quadratic"
    };
    CoherenceSeries::new(dt, values, label)
}

/// Dimensionless memory parameter `8 a^2 D tau_c / hbar^2`.
///
/// Above 1 the coherence equation is underdamped, exactly 1 is critical,
/// below 1 overdamped.
pub fn memory_parameter(params: &PhysicalParams) -> f64 {
    8.0 * params.coupling() * params.d() * params.tau_c()
}

/// Damping regime of the coherence equation
/// `C'' + C'/tau_c + K C = 0` with `K = 2 a^2 D / (hbar^2 tau_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// Oscillatory decay with frequency `omega^2 = K - 1/(4 tau_c^2)`.
    Underdamped { omega: f64 },
    /// Double root at `1/(2 tau_c)`.
    Critical,
    /// Two real decay rates with `fast * slow = K`, `fast + slow = 1/tau_c`.
    Overdamped { rate_fast: f64, rate_slow: f64 },
}

/// Solved damped-oscillator coherence equation for initial data
/// `C(0) = 1`, `C'(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorSolution {
    regime: Regime,
    tau_c: f64,
    stiffness: f64,
}

/// Relative tolerance on the memory parameter for detecting the critical
/// regime; avoids catastrophic cancellation between nearly equal roots.
const CRITICAL_TOL: f64 = 1e-12;

impl OscillatorSolution {
    /// Classify the damping regime and precompute roots or frequency.
    pub fn solve(params: &PhysicalParams) -> Result<Self> {
        let tau_c = params.tau_c();
        if tau_c == 0.0 {
            return Err(Error::MarkovianCase);
        }
        if params.d() == 0.0 {
            return Err(Error::NoDecoherence);
        }
        let stiffness = 2.0 * params.coupling() * params.d() / tau_c;
        let m = memory_parameter(params);
        let regime = if (m - 1.0).abs() <= CRITICAL_TOL {
            Regime::Critical
        } else if m > 1.0 {
            Regime::Underdamped {
                omega: (stiffness - 0.25 / (tau_c * tau_c)).sqrt(),
            }
        } else {
            // rate_slow from the product identity to avoid cancellation
            // when the roots are widely separated.
            let disc = ((1.0 - m).sqrt()) / tau_c;
            let rate_fast = 0.5 * (1.0 / tau_c + disc);
            let rate_slow = stiffness / rate_fast;
            Regime::Overdamped {
                rate_fast,
                rate_slow,
            }
        };
        Ok(Self {
            regime,
            tau_c,
            stiffness,
        })
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn tau_c(&self) -> f64 {
        self.tau_c
    }

    /// Coefficient `K = 2 a^2 D / (hbar^2 tau_c)` of the coherence term.
    pub fn stiffness(&self) -> f64 {
        self.stiffness
    }

    /// Evaluate the solution at a single time `t >= 0`.
    pub fn eval(&self, t: f64) -> f64 {
        let half_rate = 0.5 / self.tau_c;
        match self.regime {
            Regime::Underdamped { omega } => {
                (-half_rate * t).exp()
                    * ((omega * t).cos() + (omega * t).sin() * half_rate / omega)
            }
            Regime::Critical => (1.0 + half_rate * t) * (-half_rate * t).exp(),
            Regime::Overdamped {
                rate_fast,
                rate_slow,
            } => {
                // Factored form keeps both exponentials bounded even for
                // stiff rate separations.
                let gap = rate_fast - rate_slow;
                (-rate_slow * t).exp() * (rate_fast - rate_slow * (-gap * t).exp()) / gap
            }
        }
    }

    /// Sample the solution on a uniform grid.
    pub fn series(&self, t_max: f64, dt: f64) -> Result<CoherenceSeries> {
        CoherenceSeries::from_fn(t_max, dt, "eq16", |t| self.eval(t))
    }
}

/// Square-root decoherence-time formula `sqrt(hbar^2 tau_c / (a^2 D))`.
pub fn tau_dec_formula(params: &PhysicalParams) -> Result<f64> {
    if params.tau_c() == 0.0 {
        return Err(Error::MarkovianCase);
    }
    if params.d() == 0.0 {
        return Err(Error::NoDecoherence);
    }
    Ok((params.tau_c() / (params.coupling() * params.d())).sqrt())
}

/// `g(x) = x - 1 + e^{-x}`, evaluated without cancellation for small `x`.
fn exp_remainder(x: f64) -> f64 {
    if x < 1e-2 {
        // x^2/2 - x^3/6 + x^4/24 - x^5/120 + x^6/720
        let x2 = x * x;
        x2 * (0.5 - x / 6.0 + x2 / 24.0 - x2 * x / 120.0 + x2 * x2 / 720.0)
    } else {
        x - 1.0 + (-x).exp()
    }
}

/// Exponent of the exact pure-dephasing solution,
/// `Gamma_ex(t) = (4 a^2 D / hbar^2) [t - tau_c (1 - e^{-t/tau_c})]`,
/// the closed form of the double time integral of the one-sided
/// exponential kernel.
pub fn dephasing_exponent(params: &PhysicalParams, t: f64) -> Result<f64> {
    let tau_c = params.tau_c();
    if tau_c == 0.0 {
        return Err(Error::MarkovianCase);
    }
    let rate = 4.0 * params.coupling() * params.d();
    Ok(rate * tau_c * exp_remainder(t / tau_c))
}

/// Exact pure-dephasing coherence `C(t) = exp(-Gamma_ex(t))` for the
/// one-sided exponential kernel. Serves as the independent oracle for
/// the pseudomode simulator; short-time curvature is
/// `2 a^2 D / (hbar^2 tau_c)` and the long-time rate is `4 a^2 D / hbar^2`.
pub fn dephasing_oracle(params: &PhysicalParams, t_max: f64, dt: f64) -> Result<CoherenceSeries> {
    let tau_c = params.tau_c();
    if tau_c == 0.0 {
        return Err(Error::MarkovianCase);
    }
    let rate = 4.0 * params.coupling() * params.d();
    CoherenceSeries::from_fn(t_max, dt, "oracle", |t| {
        (-rate * tau_c * exp_remainder(t / tau_c)).exp()
    })
}
