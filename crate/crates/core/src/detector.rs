//! Chi-square hypothesis test on the DFT-domain energy statistic.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::numerics::{ln_chi2_pdf, ln_gamma, ln_noncentral_chi2_pdf, sin_power_integral};
use crate::phy::{ChannelSet, DofConvention, ThresholdMode, SystemConfig};
use crate::receiver::DetectionStatistic;

/// Detection SNR and the powers it is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrTerms {
    pub gamma: f64,
    /// Per-bin variance of the reflected-sample spectrum.
    pub px: f64,
    /// Tag→reader tap energy.
    pub pf: f64,
    pub pw: f64,
}

/// `γ = |η|² P_x P_f / P_w` for a channel realization.
pub fn detection_snr(channels: &ChannelSet, config: &SystemConfig) -> Result<SnrTerms> {
    snr_from_energies(channels.sum_g2(), channels.sum_f2(), config)
}

/// `γ` with the tap energies replaced by their means.
pub fn ensemble_snr(config: &SystemConfig) -> Result<SnrTerms> {
    snr_from_energies((config.m + 1) as f64, (config.k + 1) as f64, config)
}

fn snr_from_energies(sum_g2: f64, sum_f2: f64, config: &SystemConfig) -> Result<SnrTerms> {
    if !(config.nw > 0.0) {
        return Err(domain("N_w", config.nw));
    }
    let px = (config.r() + 1) as f64 * config.ps * sum_g2;
    let pf = sum_f2;
    let pw = config.pw();
    Ok(SnrTerms {
        gamma: config.eta.norm_sqr() * px * pf / pw,
        px,
        pf,
        pw,
    })
}

/// Closed-form ML threshold in the `Γ_t ~ χ²_W(Wγ)` model.
pub fn threshold_paper(w: usize, gamma: f64) -> Result<f64> {
    if w < 2 {
        return Err(domain("closed-form threshold W", w as f64));
    }
    threshold_paper_with(w, gamma, sin_power_integral(w)?)
}

/// [`threshold_paper`] with a precomputed `∫_0^π e^{cos θ} sin^{W−2} θ dθ`.
pub fn threshold_paper_with(w: usize, gamma: f64, sin_integral: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(domain("closed-form threshold gamma", gamma));
    }
    let half = 0.5 * w as f64;
    let lambda = w as f64 * gamma;
    // ln of √π Γ(W/2 − 1/2) / (e^{−Wγ/2} Γ(W/2) ∫…)
    let log_arg = 0.5 * PI.ln() + ln_gamma(half - 0.5)? + 0.5 * lambda
        - ln_gamma(half)?
        - sin_integral.ln();
    Ok(log_arg * log_arg / lambda)
}

/// Parameters of one detection problem. `threshold` is in `Γ_t` units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub w: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub dof_convention: DofConvention,
    pub threshold: f64,
}

impl DetectorParams {
    /// Builds the test and solves for its threshold. At `γ = 0` both
    /// hypotheses share one density; the threshold is then 0 and every
    /// statistic resolves to 1.
    pub fn new(w: usize, gamma: f64, dof: DofConvention, mode: ThresholdMode) -> Result<Self> {
        let mut params = Self::untuned(w, gamma, dof)?;
        if gamma > 0.0 {
            params.threshold = match mode {
                ThresholdMode::ClosedForm => closed_form_for(&params, None)?,
                ThresholdMode::ExactRoot => threshold_exact(&params)?,
            };
        }
        Ok(params)
    }

    /// Closed-form threshold with a cached sine-power integral for the
    /// convention's degree of freedom count.
    pub fn closed_form_cached(
        w: usize,
        gamma: f64,
        dof: DofConvention,
        sin_integral: f64,
    ) -> Result<Self> {
        let mut params = Self::untuned(w, gamma, dof)?;
        if gamma > 0.0 {
            params.threshold = closed_form_for(&params, Some(sin_integral))?;
        }
        Ok(params)
    }

    /// Parameters with threshold 0, to be filled by the caller.
    pub fn untuned(w: usize, gamma: f64, dof: DofConvention) -> Result<Self> {
        if w == 0 {
            return Err(domain("W", 0.0));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(domain("gamma", gamma));
        }
        Ok(DetectorParams {
            w,
            gamma,
            lambda: w as f64 * gamma,
            dof_convention: dof,
            threshold: 0.0,
        })
    }

    /// Chi-square degrees of freedom for the scaled statistic.
    pub fn dof(&self) -> usize {
        match self.dof_convention {
            DofConvention::Paper => self.w,
            DofConvention::Complex => 2 * self.w,
        }
    }

    /// Factor mapping `Γ_t` onto the chi-square variable.
    pub fn scale(&self) -> f64 {
        match self.dof_convention {
            DofConvention::Paper => 1.0,
            DofConvention::Complex => 2.0,
        }
    }

    /// Noncentrality of the scaled statistic under H₁.
    pub fn noncentrality(&self) -> f64 {
        self.scale() * self.lambda
    }

    pub fn ln_pdf_h0(&self, x: f64) -> f64 {
        let s = self.scale();
        ln_chi2_pdf(s * x, self.dof()).expect("dof >= 1") + s.ln()
    }

    pub fn ln_pdf_h1(&self, x: f64) -> f64 {
        let s = self.scale();
        ln_noncentral_chi2_pdf(s * x, self.dof(), self.noncentrality()).expect("valid params")
            + s.ln()
    }

    /// Density of `Γ_t` under H₀.
    pub fn pdf_h0(&self, x: f64) -> f64 {
        self.ln_pdf_h0(x).exp()
    }

    /// Density of `Γ_t` under H₁.
    pub fn pdf_h1(&self, x: f64) -> f64 {
        self.ln_pdf_h1(x).exp()
    }

    /// Mean of `Γ_t` under H₁ in the modeled distribution.
    pub fn mean_h1(&self) -> f64 {
        (self.dof() as f64 + self.noncentrality()) / self.scale()
    }
}

fn closed_form_for(params: &DetectorParams, sin_integral: Option<f64>) -> Result<f64> {
    let n = params.dof();
    let integral = match sin_integral {
        Some(v) => v,
        None => {
            if n < 2 {
                return Err(domain("closed-form threshold W", n as f64));
            }
            sin_power_integral(n)?
        }
    };
    Ok(threshold_paper_with(n, params.gamma, integral)? / params.scale())
}

/// Exact crossing of the H₀ and H₁ densities, found by bisection on the
/// log-likelihood ratio (strictly increasing in `x` for `λ > 0`).
pub fn threshold_exact(params: &DetectorParams) -> Result<f64> {
    let no_crossing = || Error::NoCrossing {
        w: params.w,
        gamma: params.gamma,
    };
    if !(params.gamma > 0.0) {
        return Err(no_crossing());
    }
    let llr = |x: f64| params.ln_pdf_h1(x) - params.ln_pdf_h0(x);

    let mode0 = (params.dof() as f64 - 2.0).max(0.0) / params.scale();
    let mut lo = if mode0 > 0.0 { mode0 } else { params.mean_h1() * 1e-3 };
    let mut hi = params.mean_h1();
    let mut guard = 0;
    while !(llr(lo) < 0.0) {
        lo *= 0.5;
        guard += 1;
        if guard > 200 || lo < f64::MIN_POSITIVE {
            return Err(no_crossing());
        }
    }
    guard = 0;
    while !(llr(hi) > 0.0) {
        hi *= 2.0;
        guard += 1;
        if guard > 200 || !hi.is_finite() {
            return Err(no_crossing());
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if llr(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `1` when `Γ_t ≥ T_h`.
pub fn decide(statistic: &DetectionStatistic, threshold: f64) -> u8 {
    decide_value(statistic.gamma_t, threshold)
}

pub fn decide_value(gamma_t: f64, threshold: f64) -> u8 {
    u8::from(gamma_t >= threshold)
}
