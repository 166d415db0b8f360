//! i.n.i.d. Nakagami-m channel generation for the three link classes of the
//! multi-RIS uplink: user->BS direct, user->RIS, and RIS->BS.
//!
//! Magnitudes are Nakagami(m, Omega) with per-link parameters; phases are
//! i.i.d. uniform on [0, 2pi), independent of magnitudes. Omega is the
//! linear large-scale power E[X^2], so path loss is folded into Omega
//! before sampling.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::special::reg_lower_gamma;
use crate::{Error, Result};

/// Shape/spread pair of one Nakagami-m fading link.
///
/// `m` sets the severity of small-scale fading (m = 1 is Rayleigh),
/// `omega` is the spread E[X^2] in linear power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NakagamiParams {
    m: f64,
    omega: f64,
}

impl NakagamiParams {
    pub fn new(m: f64, omega: f64) -> Result<Self> {
        if !(m >= 0.5) {
            return Err(Error::Domain(format!(
                "Nakagami shape must satisfy m >= 0.5, got {m}"
            )));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::Domain(format!(
                "Nakagami spread must be positive and finite, got {omega}"
            )));
        }
        Ok(Self { m, omega })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// First moment E[X] = Gamma(m + 1/2) / Gamma(m) * (m / Omega)^{-1/2}.
    pub fn mean(&self) -> f64 {
        let log = crate::special::ln_gamma(self.m + 0.5) - crate::special::ln_gamma(self.m);
        log.exp() * (self.m / self.omega).powf(-0.5)
    }

    /// Second moment E[X^2] = Omega.
    pub fn second_moment(&self) -> f64 {
        self.omega
    }

    /// CDF F(x) = P(m, (m/Omega) x^2), the regularized lower incomplete gamma.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        reg_lower_gamma(self.m, self.m / self.omega * x * x)
    }
}

/// Draw one Nakagami(m, Omega) magnitude: X^2 ~ Gamma(shape m, scale Omega/m).
///
/// The Gamma variate comes from a rejection sampler valid for non-integer
/// shape, so fractional m (the evaluation uses m = 2.5) is exact.
pub fn sample_nakagami<R: Rng + ?Sized>(params: &NakagamiParams, rng: &mut R) -> f64 {
    let gamma = Gamma::new(params.m, params.omega / params.m)
        .expect("NakagamiParams invariants guarantee a valid Gamma");
    gamma.sample(rng).sqrt()
}

/// 3GPP Urban Micro NLOS path loss in dB: -22.7 - 26 log10(fc) - 36.7 log10(d),
/// with fc in GHz and d in meters (reference distance 1 m).
pub fn umi_pathloss_db(fc_ghz: f64, dist_m: f64) -> Result<f64> {
    if !(fc_ghz > 0.0) {
        return Err(Error::Domain(format!("carrier must be positive, got {fc_ghz} GHz")));
    }
    if dist_m < 1.0 {
        return Err(Error::Domain(format!(
            "UMi model is defined for d >= 1 m, got {dist_m}"
        )));
    }
    Ok(-22.7 - 26.0 * fc_ghz.log10() - 36.7 * dist_m.log10())
}

/// Line-of-sight path loss in dB: l0_db - 10 alpha log10(d), with l0_db the
/// loss at the 1 m reference distance.
pub fn los_pathloss_db(dist_m: f64, l0_db: f64, alpha: f64) -> Result<f64> {
    if dist_m < 1.0 {
        return Err(Error::Domain(format!(
            "LOS model is defined for d >= 1 m, got {dist_m}"
        )));
    }
    Ok(l0_db - 10.0 * alpha * dist_m.log10())
}

/// How users are placed in the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UserPlacement {
    /// Explicit (x, y) coordinates in meters, BS at the origin.
    Fixed(Vec<[f64; 2]>),
    /// Uniform over the cell disc.
    UniformDisc,
}

/// Cell geometry: BS at the origin, surfaces equally spaced on a concentric
/// circle (first surface at angle 0), users fixed or drawn uniformly in the
/// cell disc.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub cell_radius_m: f64,
    pub num_users: usize,
    pub elements_per_surface: Vec<usize>,
    pub ris_distance_m: f64,
    pub carrier_ghz: f64,
    pub user_placement: UserPlacement,
}

impl Topology {
    pub fn validate(&self) -> Result<()> {
        if self.num_users < 1 {
            return Err(Error::Config("topology needs at least one user".into()));
        }
        if self.elements_per_surface.iter().any(|&n| n == 0) {
            return Err(Error::Config("every surface needs at least one element".into()));
        }
        if !(self.cell_radius_m > 0.0) {
            return Err(Error::Config("cell radius must be positive".into()));
        }
        if !self.elements_per_surface.is_empty() && self.ris_distance_m < 1.0 {
            return Err(Error::Config("RIS circle must be at least 1 m from the BS".into()));
        }
        if !(self.carrier_ghz > 0.0) {
            return Err(Error::Config("carrier frequency must be positive".into()));
        }
        if let UserPlacement::Fixed(pos) = &self.user_placement {
            if pos.len() != self.num_users {
                return Err(Error::Config(format!(
                    "fixed user positions: expected {} entries, got {}",
                    self.num_users,
                    pos.len()
                )));
            }
        }
        Ok(())
    }

    pub fn num_surfaces(&self) -> usize {
        self.elements_per_surface.len()
    }

    /// Total element count M = sum of N_s; always derived.
    pub fn total_elements(&self) -> usize {
        self.elements_per_surface.iter().sum()
    }

    /// Surface coordinates: equally spaced on the RIS circle starting at angle 0.
    pub fn surface_positions(&self) -> Vec<[f64; 2]> {
        let s = self.num_surfaces();
        (0..s)
            .map(|i| {
                let ang = TAU * i as f64 / s as f64;
                [self.ris_distance_m * ang.cos(), self.ris_distance_m * ang.sin()]
            })
            .collect()
    }
}

/// Per-link Nakagami tables covering every (link, user, surface) pair,
/// plus the per-surface element counts. Omegas already include path loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkFading {
    direct: Vec<NakagamiParams>,
    ris_user: Vec<Vec<NakagamiParams>>,
    ris_bs: Vec<NakagamiParams>,
    elements: Vec<usize>,
}

impl LinkFading {
    /// `direct[k]`, `ris_user[s][k]`, `ris_bs[s]`, `elements[s]`.
    pub fn new(
        direct: Vec<NakagamiParams>,
        ris_user: Vec<Vec<NakagamiParams>>,
        ris_bs: Vec<NakagamiParams>,
        elements: Vec<usize>,
    ) -> Result<Self> {
        let k = direct.len();
        let s = elements.len();
        if k == 0 {
            return Err(Error::Config("fading tables need at least one user".into()));
        }
        if ris_bs.len() != s || ris_user.len() != s {
            return Err(Error::Config(format!(
                "fading tables cover {} surfaces but {} element counts given",
                ris_bs.len().max(ris_user.len()),
                s
            )));
        }
        if elements.iter().any(|&n| n == 0) {
            return Err(Error::Config("every surface needs at least one element".into()));
        }
        for (si, row) in ris_user.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Config(format!(
                    "surface {si}: user->RIS fading row covers {} users, expected {k}",
                    row.len()
                )));
            }
        }
        Ok(Self { direct, ris_user, ris_bs, elements })
    }

    pub fn num_users(&self) -> usize {
        self.direct.len()
    }

    pub fn num_surfaces(&self) -> usize {
        self.elements.len()
    }

    pub fn total_elements(&self) -> usize {
        self.elements.iter().sum()
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn direct(&self, user: usize) -> &NakagamiParams {
        &self.direct[user]
    }

    pub fn ris_user(&self, surface: usize, user: usize) -> &NakagamiParams {
        &self.ris_user[surface][user]
    }

    pub fn ris_bs(&self, surface: usize) -> &NakagamiParams {
        &self.ris_bs[surface]
    }
}

/// Inter-element correlation model. The evaluation only needs the two
/// extremes: fully independent elements, or correlation coefficient 1
/// within each surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Correlation {
    Independent,
    PerSurfaceFull,
}

/// One draw of every fading coefficient: f (RIS->BS, length M), G
/// (user->RIS, M x K), d (user->BS, length K).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    f: Vec<Complex64>,
    /// column-major M x K: column k is user k's RIS channel
    g: Vec<Complex64>,
    d: Vec<Complex64>,
}

impl ChannelRealization {
    /// Assemble from explicit vectors; `g_users[k]` is column k (length M).
    pub fn from_parts(f: Vec<Complex64>, g_users: Vec<Vec<Complex64>>, d: Vec<Complex64>) -> Self {
        let m = f.len();
        assert_eq!(g_users.len(), d.len(), "G must have one column per user");
        let mut g = Vec::with_capacity(m * d.len());
        for col in &g_users {
            assert_eq!(col.len(), m, "every G column must have M entries");
            g.extend_from_slice(col);
        }
        Self { f, g, d }
    }

    pub fn num_users(&self) -> usize {
        self.d.len()
    }

    pub fn num_elements(&self) -> usize {
        self.f.len()
    }

    pub fn f(&self) -> &[Complex64] {
        &self.f
    }

    /// Column k of G: user k's channel to every reflecting element.
    pub fn g_user(&self, user: usize) -> &[Complex64] {
        let m = self.f.len();
        &self.g[user * m..(user + 1) * m]
    }

    pub fn d(&self) -> &[Complex64] {
        &self.d
    }
}

fn polar(mag: f64, phase: f64) -> Complex64 {
    Complex64::from_polar(mag, phase)
}

/// Draw one complete channel realization.
///
/// Under `PerSurfaceFull` correlation all elements of a surface share one
/// magnitude-and-phase draw for f and, per user, one draw for g; the direct
/// links are always independent. Given equal rng states the output is
/// bit-identical.
pub fn realize<R: Rng + ?Sized>(
    fading: &LinkFading,
    correlation: Correlation,
    rng: &mut R,
) -> ChannelRealization {
    let m_total = fading.total_elements();
    let k_users = fading.num_users();

    let mut f = Vec::with_capacity(m_total);
    for (s, &n) in fading.elements().iter().enumerate() {
        let params = fading.ris_bs(s);
        match correlation {
            Correlation::Independent => {
                for _ in 0..n {
                    let mag = sample_nakagami(params, rng);
                    let ph = rng.gen_range(0.0..TAU);
                    f.push(polar(mag, ph));
                }
            }
            Correlation::PerSurfaceFull => {
                let mag = sample_nakagami(params, rng);
                let ph = rng.gen_range(0.0..TAU);
                f.extend(std::iter::repeat(polar(mag, ph)).take(n));
            }
        }
    }

    let mut g = Vec::with_capacity(m_total * k_users);
    for k in 0..k_users {
        for (s, &n) in fading.elements().iter().enumerate() {
            let params = fading.ris_user(s, k);
            match correlation {
                Correlation::Independent => {
                    for _ in 0..n {
                        let mag = sample_nakagami(params, rng);
                        let ph = rng.gen_range(0.0..TAU);
                        g.push(polar(mag, ph));
                    }
                }
                Correlation::PerSurfaceFull => {
                    let mag = sample_nakagami(params, rng);
                    let ph = rng.gen_range(0.0..TAU);
                    g.extend(std::iter::repeat(polar(mag, ph)).take(n));
                }
            }
        }
    }

    let mut d = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let mag = sample_nakagami(fading.direct(k), rng);
        let ph = rng.gen_range(0.0..TAU);
        d.push(polar(mag, ph));
    }

    ChannelRealization { f, g, d }
}
