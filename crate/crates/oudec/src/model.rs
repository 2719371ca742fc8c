//! Physical parameters, bath correlation kernels, and spectral densities.
//!
//! Everything downstream works in the dimensionless convention where
//! `hbar = a = D = 1` unless the caller supplies other values. All values
//! are immutable after construction and every operation is a pure
//! function, so the types are freely shareable between threads.

use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quad;

/// System and bath parameters shared by every model in the toolkit.
///
/// * `a` - separation of the two pointer states,
/// * `hbar` - action scale,
/// * `d` - noise strength (force^2 * time),
/// * `tau_c` - bath correlation time (`0` means strictly Markovian),
/// * `beta` - optional inverse temperature, used only by the thermal
///   rate integral over tabulated spectra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    a: f64,
    hbar: f64,
    d: f64,
    tau_c: f64,
    beta: Option<f64>,
}

impl PhysicalParams {
    pub fn new(a: f64, hbar: f64, d: f64, tau_c: f64) -> Result<Self> {
        if a <= 0.0 || !a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "separation a must be positive, got {a}"
            )));
        }
        if hbar <= 0.0 || !hbar.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hbar must be positive, got {hbar}"
            )));
        }
        if d < 0.0 || !d.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise strength D must be non-negative, got {d}"
            )));
        }
        if tau_c < 0.0 || !tau_c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "correlation time tau_c must be non-negative, got {tau_c}"
            )));
        }
        Ok(Self {
            a,
            hbar,
            d,
            tau_c,
            beta: None,
        })
    }

    /// The dimensionless unit system `a = hbar = D = tau_c = 1`.
    pub fn unit() -> Self {
        Self::new(1.0, 1.0, 1.0, 1.0).expect("unit parameters are valid")
    }

    pub fn with_tau_c(mut self, tau_c: f64) -> Result<Self> {
        if tau_c < 0.0 || !tau_c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "correlation time tau_c must be non-negative, got {tau_c}"
            )));
        }
        self.tau_c = tau_c;
        Ok(self)
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if beta <= 0.0 || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "inverse temperature beta must be positive, got {beta}"
            )));
        }
        self.beta = Some(beta);
        Ok(self)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn tau_c(&self) -> f64 {
        self.tau_c
    }

    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    /// Coupling prefactor `a^2 / hbar^2` that appears in every rate.
    pub fn coupling(&self) -> f64 {
        (self.a / self.hbar) * (self.a / self.hbar)
    }
}

/// Force autocorrelation function of the bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BathKernel {
    /// `alpha(t, s) = 2 D delta(t - s)`: zero-memory bath.
    MarkovianDelta { d: f64 },
    /// `alpha(t, s) = (D / tau_c) exp(-|t - s| / tau_c)`.
    ExponentialOu { d: f64, tau_c: f64 },
    /// One-sided kernel `A exp(-gamma (t - s)) theta(t - s)`.
    GeneralExponential { amplitude: f64, rate: f64 },
}

impl BathKernel {
    pub fn markovian(d: f64) -> Result<Self> {
        if d < 0.0 || !d.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise strength D must be non-negative, got {d}"
            )));
        }
        Ok(Self::MarkovianDelta { d })
    }

    pub fn exponential_ou(d: f64, tau_c: f64) -> Result<Self> {
        if d < 0.0 || !d.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise strength D must be non-negative, got {d}"
            )));
        }
        if tau_c <= 0.0 || !tau_c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tau_c must be positive for an exponential kernel, got {tau_c}"
            )));
        }
        Ok(Self::ExponentialOu { d, tau_c })
    }

    pub fn general_exponential(amplitude: f64, rate: f64) -> Result<Self> {
        if amplitude < 0.0 || !amplitude.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be non-negative, got {amplitude}"
            )));
        }
        if rate <= 0.0 || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "decay rate must be positive, got {rate}"
            )));
        }
        Ok(Self::GeneralExponential { amplitude, rate })
    }
}

/// Pointwise value of the kernel at lag `dt >= 0`.
///
/// Delta kernels have no pointwise value and report an error.
pub fn eval_kernel(kernel: &BathKernel, dt: f64) -> Result<f64> {
    if dt < 0.0 || dt.is_nan() {
        return Err(Error::NegativeLag);
    }
    match *kernel {
        BathKernel::MarkovianDelta { .. } => Err(Error::NoPointwiseValue),
        BathKernel::ExponentialOu { d, tau_c } => Ok(d / tau_c * (-dt / tau_c).exp()),
        BathKernel::GeneralExponential { amplitude, rate } => Ok(amplitude * (-rate * dt).exp()),
    }
}

/// Rewrite a kernel in its canonical form.
///
/// `GeneralExponential(A, gamma)` is observationally identical to
/// `ExponentialOu(D = A/gamma, tau_c = 1/gamma)`; other variants pass
/// through unchanged. Idempotent.
pub fn normalize(kernel: &BathKernel) -> BathKernel {
    match *kernel {
        BathKernel::GeneralExponential { amplitude, rate } => BathKernel::ExponentialOu {
            d: amplitude / rate,
            tau_c: 1.0 / rate,
        },
        other => other,
    }
}

/// Total integrated kernel strength over all lags,
/// `int_{-inf}^{inf} alpha(tau) dtau`.
///
/// Equal to `2 D` for both the delta and the two-sided exponential kernel
/// (independent of the memory time); the one-sided kernel is symmetrized,
/// doubling its single-sided integral to `2 A / gamma`.
pub fn integrated_strength(kernel: &BathKernel) -> f64 {
    match *kernel {
        BathKernel::MarkovianDelta { d } => 2.0 * d,
        BathKernel::ExponentialOu { d, .. } => 2.0 * d,
        BathKernel::GeneralExponential { amplitude, rate } => 2.0 * amplitude / rate,
    }
}

/// Distribution of bath coupling strength over frequency.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralDensity {
    /// Effective classical noise power `S(omega) = 2 D / (1 + omega^2 tau_c^2)`,
    /// the exact Fourier pair of the two-sided exponential kernel.
    LorentzianOu { d: f64, tau_c: f64 },
    /// User-supplied samples of `J(omega)` on a strictly increasing grid.
    Tabulated { samples: Vec<(f64, f64)> },
}

impl SpectralDensity {
    pub fn lorentzian_ou(d: f64, tau_c: f64) -> Result<Self> {
        if d < 0.0 || !d.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise strength D must be non-negative, got {d}"
            )));
        }
        if tau_c <= 0.0 || !tau_c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tau_c must be positive for a Lorentzian spectrum, got {tau_c}"
            )));
        }
        Ok(Self::LorentzianOu { d, tau_c })
    }

    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidParameter(
                "tabulated spectral density needs at least two samples".into(),
            ));
        }
        if samples[0].0 < 0.0 {
            return Err(Error::InvalidParameter(
                "tabulated frequencies must be non-negative".into(),
            ));
        }
        if samples
            .iter()
            .any(|&(w, j)| !w.is_finite() || !j.is_finite() || j < 0.0)
        {
            return Err(Error::InvalidParameter(
                "tabulated J(omega) values must be finite and non-negative".into(),
            ));
        }
        for pair in samples.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::InvalidParameter(
                    "tabulated frequencies must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self::Tabulated { samples })
    }

    /// Load a tabulated spectrum from two-column plain text: `omega J`
    /// per line, whitespace separated, `#` starts a comment.
    pub fn load_tabulated<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_tabulated(std::io::BufReader::new(file))
    }

    pub fn read_tabulated<R: BufRead>(reader: R) -> Result<Self> {
        let mut samples = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let data = line.split('#').next().unwrap_or("").trim();
            if data.is_empty() {
                continue;
            }
            let mut fields = data.split_whitespace();
            let omega = fields.next();
            let j = fields.next();
            let (omega, j) = match (omega, j, fields.next()) {
                (Some(w), Some(j), None) => (w, j),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected two columns, got {:?}",
                        lineno + 1,
                        data
                    )))
                }
            };
            let omega: f64 = omega.parse().map_err(|_| {
                Error::Parse(format!("line {}: bad frequency {:?}", lineno + 1, omega))
            })?;
            let j: f64 = j
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad J value {:?}", lineno + 1, j)))?;
            samples.push((omega, j));
        }
        Self::tabulated(samples)
    }

    /// Evaluate the spectrum at a frequency. For the Lorentzian variant
    /// this is the noise power `S(omega)`; for a table it is `J(omega)`
    /// linearly interpolated (zero outside the sampled range).
    pub fn power(&self, omega: f64) -> f64 {
        match self {
            Self::LorentzianOu { d, tau_c } => {
                2.0 * d / (1.0 + omega * omega * tau_c * tau_c)
            }
            Self::Tabulated { samples } => {
                let first = samples.first().expect("validated non-empty");
                let last = samples.last().expect("validated non-empty");
                if omega < first.0 || omega > last.0 {
                    return 0.0;
                }
                let idx = samples.partition_point(|&(w, _)| w <= omega);
                if idx == 0 {
                    return first.1;
                }
                if idx == samples.len() {
                    return last.1;
                }
                let (w0, j0) = samples[idx - 1];
                let (w1, j1) = samples[idx];
                j0 + (j1 - j0) * (omega - w0) / (w1 - w0)
            }
        }
    }
}

fn coth(x: f64) -> f64 {
    if x > 20.0 {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

/// Short-time decoherence rate `Gamma` (inverse time squared).
///
/// For the Lorentzian spectrum this is
/// `(a^2/hbar^2) (1/pi) int_0^inf S(omega) domega`, evaluated by
/// quadrature (the closed form is `a^2 D / (hbar^2 tau_c)` and serves as
/// the test oracle). For a tabulated spectrum the thermal integral
/// `(a^2/hbar^2) int J(omega) coth(beta omega / 2) domega` is taken by
/// trapezoid over the samples; without `beta` the weight is the
/// zero-temperature limit `coth -> 1`.
pub fn gamma_rate(params: &PhysicalParams, spectrum: &SpectralDensity) -> Result<f64> {
    match spectrum {
        SpectralDensity::LorentzianOu { d, tau_c } => {
            let integral = quad::lorentzian_power_integral(*d, *tau_c);
            Ok(params.coupling() * integral / std::f64::consts::PI)
        }
        SpectralDensity::Tabulated { samples } => {
            let integrand: Vec<f64> = match params.beta() {
                None => samples.iter().map(|&(_, j)| j).collect(),
                Some(beta) => {
                    let mut vals = Vec::with_capacity(samples.len());
                    for (idx, &(omega, j)) in samples.iter().enumerate() {
                        if omega == 0.0 {
                            if j > 0.0 {
                                return Err(Error::InfraredDivergent);
                            }
                            // J vanishes (at least) linearly: the weighted
                            // integrand tends to 2 * slope / beta.
                            let (w1, j1) = samples[idx + 1];
                            vals.push(2.0 * (j1 / w1) / beta);
                        } else {
                            vals.push(j * coth(beta * omega / 2.0));
                        }
                    }
                    vals
                }
            };
            let mut integral = 0.0;
            for k in 1..samples.len() {
                let h = samples[k].0 - samples[k - 1].0;
                integral += 0.5 * h * (integrand[k] + integrand[k - 1]);
            }
            Ok(params.coupling() * integral)
        }
    }
}

/// Numerically Fourier-transform the Lorentzian noise power back to the
/// time domain on `dt_grid`, as a consistency check against
/// [`eval_kernel`]. Agreement is within quadrature tolerance (about
/// 1e-6 of the kernel amplitude).
pub fn kernel_from_spectrum_roundtrip(
    spectrum: &SpectralDensity,
    dt_grid: &[f64],
) -> Result<Vec<f64>> {
    let (d, tau_c) = match spectrum {
        SpectralDensity::LorentzianOu { d, tau_c } => (*d, *tau_c),
        SpectralDensity::Tabulated { .. } => {
            return Err(Error::InvalidParameter(
                "kernel roundtrip is defined for the Lorentzian spectrum".into(),
            ))
        }
    };
    dt_grid
        .iter()
        .map(|&dt| {
            if dt < 0.0 || dt.is_nan() {
                return Err(Error::NegativeLag);
            }
            Ok(quad::lorentzian_kernel_roundtrip(d, tau_c, dt))
        })
        .collect()
}
