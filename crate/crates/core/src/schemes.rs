//! Reflection schemes: phase configurations, end-to-end power gains, and
//! achievable rates on one channel realization.
//!
//! Conventions shared by every runner:
//! - `snr_bar` is the per-user transmit SNR P_u / sigma_n^2 (linear), so a
//!   scheme with effective gain gamma achieves log2(1 + gamma * snr_bar).
//! - argmax ties over users break to the lowest index.
//! - all phases are reduced modulo 2pi into [0, 2pi) at construction.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;

use crate::channel::ChannelRealization;

/// Wrap an angle into [0, 2pi).
pub fn wrap_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can return TAU when theta is a tiny negative number
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// The M phase shifts applied by the reflecting elements, in radians.
/// Every reflection coefficient e^{j theta_m} has unit modulus by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    theta: Vec<f64>,
}

impl PhaseConfig {
    pub fn new(theta: Vec<f64>) -> Self {
        Self { theta: theta.into_iter().map(wrap_phase).collect() }
    }

    pub fn zeros(m: usize) -> Self {
        Self { theta: vec![0.0; m] }
    }

    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        Self { theta: (0..m).map(|_| rng.gen_range(0.0..TAU)).collect() }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Reflection coefficient of element m: e^{j theta_m}.
    pub fn coefficient(&self, m: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.theta[m])
    }
}

/// Transmission scheme identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Single-user bound for user 0 with its optimal reflection.
    Su,
    /// Random phases, serve the instantaneously best user.
    #[serde(rename = "oppbf")]
    OppBf,
    /// Opportunistic reflection: serve only the best coherently-combined user.
    Or,
    /// Opportunistic multi-user reflection: anchor the phases to the best
    /// user, everyone transmits, SIC at the receiver.
    Omur,
    /// OMUR with uniformly random phases (no CSI at the surfaces).
    OmurRp,
    /// Joint reflection: coordinate-ascent maximization of the sum gain.
    Jr,
    /// Ideal (infeasible) reflection bound.
    Ir,
}

impl Scheme {
    pub const ALL: [Scheme; 7] =
        [Scheme::Su, Scheme::OppBf, Scheme::Or, Scheme::Omur, Scheme::OmurRp, Scheme::Jr, Scheme::Ir];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Su => "su",
            Scheme::OppBf => "oppbf",
            Scheme::Or => "or",
            Scheme::Omur => "omur",
            Scheme::OmurRp => "omur-rp",
            Scheme::Jr => "jr",
            Scheme::Ir => "ir",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-realization result of running one scheme.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub selected_user: Option<usize>,
    /// Effective end-to-end power gain (linear).
    pub gamma: f64,
    /// bits/s/Hz at the given snr_bar.
    pub rate: f64,
    /// Applied phases; absent for the ideal bound.
    pub phases: Option<PhaseConfig>,
}

/// log2(1 + gamma * snr_bar).
pub fn rate_from_gain(gamma: f64, snr_bar: f64) -> f64 {
    (1.0 + gamma * snr_bar).log2()
}

/// Effective channel of one user: sum_m f_m e^{j theta_m} G_{m,k} + d_k.
pub fn effective_channel(real: &ChannelRealization, phases: &PhaseConfig, user: usize) -> Complex64 {
    assert_eq!(phases.len(), real.num_elements(), "phase vector must cover all elements");
    let g = real.g_user(user);
    let mut acc = real.d()[user];
    for (m, (&fm, &gm)) in real.f().iter().zip(g).enumerate() {
        acc += fm * phases.coefficient(m) * gm;
    }
    acc
}

/// Coherently-combined per-user gain gamma_k = (sum_m |f_m||G_{m,k}| + |d_k|)^2.
pub fn coherent_gain(real: &ChannelRealization, user: usize) -> f64 {
    let amp: f64 = real
        .f()
        .iter()
        .zip(real.g_user(user))
        .map(|(fm, gm)| fm.norm() * gm.norm())
        .sum::<f64>()
        + real.d()[user].norm();
    amp * amp
}

/// Ideal-reflection sum gain: the per-user coherent gains added up. No
/// single phase vector attains it for more than one user; it upper-bounds
/// every achievable sum gain.
pub fn gain_ideal(real: &ChannelRealization) -> f64 {
    (0..real.num_users()).map(|k| coherent_gain(real, k)).sum()
}

/// Phases that align every reflected path of `user` with its direct path:
/// theta_m = arg(d_k) - arg(f_m G_{m,k}). Elements whose cascade
/// coefficient vanishes contribute nothing; their phase is set to 0 to keep
/// the map total and deterministic.
pub fn anchor_phases(real: &ChannelRealization, user: usize) -> PhaseConfig {
    let d_arg = real.d()[user].arg();
    let g = real.g_user(user);
    let theta = real
        .f()
        .iter()
        .zip(g)
        .map(|(fm, gm)| {
            let cascade = fm * gm;
            if cascade.norm() == 0.0 {
                0.0
            } else {
                wrap_phase(d_arg - cascade.arg())
            }
        })
        .collect();
    PhaseConfig::new(theta)
}

/// Index of the user with the largest coherent gain (lowest index wins ties).
fn best_user(real: &ChannelRealization) -> usize {
    let mut best = 0;
    let mut best_gain = coherent_gain(real, 0);
    for k in 1..real.num_users() {
        let gain = coherent_gain(real, k);
        if gain > best_gain {
            best = k;
            best_gain = gain;
        }
    }
    best
}

/// SIC sum capacity log2(1 + ||f^T Theta G + d^T||^2 pu / noise).
pub fn sum_capacity(real: &ChannelRealization, phases: &PhaseConfig, pu_w: f64, noise_w: f64) -> f64 {
    let total: f64 =
        (0..real.num_users()).map(|k| effective_channel(real, phases, k).norm_sqr()).sum();
    rate_from_gain(total, pu_w / noise_w)
}

/// Single-user bound: user 0 alone with its optimal reflection.
pub fn run_su(real: &ChannelRealization, snr_bar: f64) -> SchemeOutcome {
    let gamma = coherent_gain(real, 0);
    SchemeOutcome {
        scheme: Scheme::Su,
        selected_user: Some(0),
        gamma,
        rate: rate_from_gain(gamma, snr_bar),
        phases: Some(anchor_phases(real, 0)),
    }
}

/// Ideal-reflection bound; no realizable phase configuration exists.
pub fn run_ir(real: &ChannelRealization, snr_bar: f64) -> SchemeOutcome {
    let gamma = gain_ideal(real);
    SchemeOutcome {
        scheme: Scheme::Ir,
        selected_user: None,
        gamma,
        rate: rate_from_gain(gamma, snr_bar),
        phases: None,
    }
}

/// Opportunistic reflection: only the best user transmits.
pub fn run_or(real: &ChannelRealization, snr_bar: f64) -> SchemeOutcome {
    let k_star = best_user(real);
    let gamma = coherent_gain(real, k_star);
    SchemeOutcome {
        scheme: Scheme::Or,
        selected_user: Some(k_star),
        gamma,
        rate: rate_from_gain(gamma, snr_bar),
        phases: Some(anchor_phases(real, k_star)),
    }
}

/// Opportunistic multi-user reflection: phases anchored to the best user,
/// all users transmit, the receiver runs SIC. The sum gain is the anchor
/// user's coherent gain plus every other user's effective power.
pub fn run_omur(real: &ChannelRealization, snr_bar: f64) -> SchemeOutcome {
    let k_star = best_user(real);
    let phases = anchor_phases(real, k_star);
    let gamma_e: f64 = (0..real.num_users())
        .filter(|&k| k != k_star)
        .map(|k| effective_channel(real, &phases, k).norm_sqr())
        .sum();
    let gamma = coherent_gain(real, k_star) + gamma_e;
    SchemeOutcome {
        scheme: Scheme::Omur,
        selected_user: Some(k_star),
        gamma,
        rate: rate_from_gain(gamma, snr_bar),
        phases: Some(phases),
    }
}

/// OMUR with random phase shifts: no CSI, no user selection, SIC sum rate.
pub fn run_omur_rp<R: Rng + ?Sized>(
    real: &ChannelRealization,
    snr_bar: f64,
    rng: &mut R,
) -> SchemeOutcome {
    let phases = PhaseConfig::random(real.num_elements(), rng);
    let gamma: f64 =
        (0..real.num_users()).map(|k| effective_channel(real, &phases, k).norm_sqr()).sum();
    SchemeOutcome {
        scheme: Scheme::OmurRp,
        selected_user: None,
        gamma,
        rate: rate_from_gain(gamma, snr_bar),
        phases: Some(phases),
    }
}

/// Opportunistic beamforming baseline: the surfaces apply random phases and
/// the instantaneously best user transmits alone.
///
/// The baseline paper is cited without a restated algorithm; this
/// random-phase + best-user behavior is inferred from its stated goal of
/// avoiding channel estimation and from its large-K equivalence with OR.
pub fn run_oppbf<R: Rng + ?Sized>(
    real: &ChannelRealization,
    snr_bar: f64,
    rng: &mut R,
) -> SchemeOutcome {
    let phases = PhaseConfig::random(real.num_elements(), rng);
    let mut k_star = 0;
    let mut gamma = effective_channel(real, &phases, 0).norm_sqr();
    for k in 1..real.num_users() {
        let gain = effective_channel(real, &phases, k).norm_sqr();
        if gain > gamma {
            k_star = k;
            gamma = gain;
        }
    }
    SchemeOutcome {
        scheme: Scheme::OppBf,
        selected_user: Some(k_star),
        gamma,
        rate: rate_from_gain(gamma, snr_bar),
        phases: Some(phases),
    }
}
