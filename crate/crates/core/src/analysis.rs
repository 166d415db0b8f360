//! Closed-form outage machinery: moment-matched Gamma approximation of the
//! per-user end-to-end magnitude A_k, outage probabilities for the
//! single-user and opportunistic-reflection schemes, and the
//! ideal-reflection upper bound evaluated through a sampling oracle.
//!
//! A_k = sum_s sum_n |f_sn||g_k,sn| + |d_k| is approximated as
//! Gamma(alpha_k, beta_k) by matching its first two moments; gamma_k =
//! A_k^2 is then generalized-Gamma. The bound for ideal reflection needs
//! the CDF of the product of the K squared variates; its closed form is a
//! high-order Meijer G, which is replaced here by a controlled-error
//! Monte-Carlo evaluation.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::channel::{LinkFading, NakagamiParams};
use crate::special::{ln_gamma, reg_lower_gamma};
use crate::{Error, Result};

/// Gamma(alpha, rate beta) fitted to the first two moments of A_k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFit {
    alpha: f64,
    beta: f64,
    mu1: f64,
    mu2: f64,
}

impl GammaFit {
    /// alpha = mu1^2 / (mu2 - mu1^2), beta = mu1 / (mu2 - mu1^2).
    /// Requires positive variance (mu2 > mu1^2).
    pub fn from_moments(mu1: f64, mu2: f64) -> Result<Self> {
        if !(mu1 > 0.0) || !mu1.is_finite() || !mu2.is_finite() {
            return Err(Error::Domain(format!(
                "moment fit needs finite mu1 > 0, got mu1={mu1}, mu2={mu2}"
            )));
        }
        let var = mu2 - mu1 * mu1;
        if !(var > 0.0) {
            return Err(Error::Domain(format!(
                "moment fit needs mu2 > mu1^2 (positive variance), got mu1={mu1}, mu2={mu2}"
            )));
        }
        Ok(Self { alpha: mu1 * mu1 / var, beta: mu1 / var, mu1, mu2 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    pub fn mean(&self) -> f64 {
        self.alpha / self.beta
    }

    pub fn variance(&self) -> f64 {
        self.alpha / (self.beta * self.beta)
    }

    /// CDF of the fitted magnitude: the regularized lower incomplete gamma
    /// P(alpha, beta x). Errors for x < 0.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::Domain(format!("CDF argument must be nonnegative, got {x}")));
        }
        reg_lower_gamma(self.alpha, self.beta * x)
    }
}

/// Cross-moment of one cascade coefficient, E[(|f||g|)^a] for a in {1, 2}:
/// (sqrt(m_g/Omega_g * m_f/Omega_f))^{-a}
///   * Gamma(m_g + a/2) Gamma(m_f + a/2) / (Gamma(m_g) Gamma(m_f)).
pub fn u_term(g: &NakagamiParams, f: &NakagamiParams, a: u32) -> f64 {
    assert!(a == 1 || a == 2, "u_term is defined for a in {{1, 2}}");
    let a_f = f64::from(a);
    let log_gammas = ln_gamma(g.m() + a_f / 2.0) + ln_gamma(f.m() + a_f / 2.0)
        - ln_gamma(g.m())
        - ln_gamma(f.m());
    (g.m() / g.omega() * f.m() / f.omega()).powf(-a_f / 2.0) * log_gammas.exp()
}

/// First and second moment of A_k for one user.
///
/// mu1 adds the direct-link Nakagami mean to the cascade means; mu2 expands
/// the square: the direct second moment, the direct-cascade cross term,
/// per-surface squared terms plus within-surface cross products, and the
/// cross-surface products. Within a surface every element shares one
/// (m, Omega) pair, so the per-element sums collapse to counts.
pub fn moments_ak(fading: &LinkFading, user: usize) -> (f64, f64) {
    let d = fading.direct(user);
    let e_d = d.mean();

    let s_count = fading.num_surfaces();
    let mut u1 = Vec::with_capacity(s_count);
    let mut u2 = Vec::with_capacity(s_count);
    for s in 0..s_count {
        u1.push(u_term(fading.ris_user(s, user), fading.ris_bs(s), 1));
        u2.push(u_term(fading.ris_user(s, user), fading.ris_bs(s), 2));
    }

    // sum over all elements of U(1)
    let t1: f64 = (0..s_count).map(|s| fading.elements()[s] as f64 * u1[s]).sum();
    let mu1 = e_d + t1;

    let mut mu2 = d.second_moment() + 2.0 * e_d * t1;
    for s in 0..s_count {
        let n = fading.elements()[s] as f64;
        // diagonal terms and the 2 * sum_{n < n'} U(1)U(1) cross products
        mu2 += n * u2[s] + n * (n - 1.0) * u1[s] * u1[s];
    }
    for s in 0..s_count {
        let ns = fading.elements()[s] as f64;
        for sp in (s + 1)..s_count {
            let np = fading.elements()[sp] as f64;
            mu2 += 2.0 * (ns * u1[s]) * (np * u1[sp]);
        }
    }
    (mu1, mu2)
}

/// Moment-match one user's A_k.
pub fn fit_user(fading: &LinkFading, user: usize) -> Result<GammaFit> {
    let (mu1, mu2) = moments_ak(fading, user);
    GammaFit::from_moments(mu1, mu2)
}

/// 2^r0 - 1.
pub fn gamma_threshold(r0: f64) -> f64 {
    (r0.exp2()) - 1.0
}

/// Single-user outage probability F_{A_1}(sqrt(gamma_0 / snr_bar)).
pub fn outage_su(fit: &GammaFit, r0: f64, snr_bar: f64) -> Result<f64> {
    fit.cdf((gamma_threshold(r0) / snr_bar).sqrt())
}

/// Opportunistic-reflection outage: product of the per-user CDFs at the
/// common threshold.
pub fn outage_or(fits: &[GammaFit], r0: f64, snr_bar: f64) -> Result<f64> {
    if fits.is_empty() {
        return Err(Error::Config("outage_or needs at least one user fit".into()));
    }
    let x = (gamma_threshold(r0) / snr_bar).sqrt();
    let mut product = 1.0;
    for fit in fits {
        product *= fit.cdf(x)?;
    }
    Ok(product)
}

/// Density of gamma_k = A_k^2 (a generalized Gamma):
/// (1 / 2 sqrt(x)) * beta^alpha / Gamma(alpha) * sqrt(x)^{alpha-1} e^{-beta sqrt(x)}.
pub fn gen_gamma_pdf(fit: &GammaFit, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("generalized-Gamma density needs x > 0, got {x}")));
    }
    let root = x.sqrt();
    let log_pdf = fit.alpha * fit.beta.ln() - ln_gamma(fit.alpha)
        + (fit.alpha - 1.0) * root.ln()
        - fit.beta * root
        - (2.0 * root).ln();
    Ok(log_pdf.exp())
}

fn sample_log_product<R: Rng + ?Sized>(fits: &[GammaFit], rng: &mut R) -> f64 {
    fits.iter()
        .map(|fit| {
            let g = Gamma::new(fit.alpha, 1.0 / fit.beta)
                .expect("GammaFit invariants guarantee a valid Gamma");
            2.0 * g.sample(rng).ln()
        })
        .sum()
}

fn product_cdf_at_log<R: Rng + ?Sized>(
    fits: &[GammaFit],
    ln_x: f64,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if fits.is_empty() {
        return Err(Error::Config("product CDF oracle needs at least one fit".into()));
    }
    if samples < 10_000 {
        return Err(Error::Config(format!(
            "product CDF oracle needs at least 10^4 samples, got {samples}"
        )));
    }
    if ln_x == f64::NEG_INFINITY {
        return Ok((0.0, 0.0));
    }
    let mut hits = 0usize;
    for _ in 0..samples {
        if sample_log_product(fits, rng) <= ln_x {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let se = (p * (1.0 - p) / samples as f64).sqrt();
    Ok((p, se))
}

/// Monte-Carlo estimate of F_Y(x), the CDF of Y = prod_k gamma_k with
/// gamma_k the square of a Gamma(alpha_k, beta_k) variate, plus its
/// binomial standard error. Comparison happens in the log domain so
/// extreme thresholds do not underflow.
pub fn cdf_product_oracle<R: Rng + ?Sized>(
    fits: &[GammaFit],
    x: f64,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let ln_x = if x > 0.0 { x.ln() } else { f64::NEG_INFINITY };
    product_cdf_at_log(fits, ln_x, samples, rng)
}

/// Ideal-reflection outage upper bound: F_Y((gamma_0 / (K snr_bar))^K),
/// evaluated through the product oracle. Returns (estimate, standard error).
pub fn outage_ir_upper_bound<R: Rng + ?Sized>(
    fits: &[GammaFit],
    r0: f64,
    snr_bar: f64,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if fits.is_empty() {
        return Err(Error::Config("ideal-reflection bound needs at least one user fit".into()));
    }
    let k = fits.len() as f64;
    let gamma0 = gamma_threshold(r0);
    let ln_arg = if gamma0 > 0.0 {
        k * (gamma0.ln() - k.ln() - snr_bar.ln())
    } else {
        f64::NEG_INFINITY
    };
    product_cdf_at_log(fits, ln_arg, samples, rng)
}
