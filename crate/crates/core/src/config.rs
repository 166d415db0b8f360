//! Experiment configuration: one TOML file describes topology, fading,
//! power/noise budget, target rate, scheme list, and sweep grid.

use serde::{Deserialize, Serialize};

use crate::channel::{Correlation, Topology, UserPlacement};
use crate::schemes::Scheme;
use crate::{Error, Result};

/// Full experiment description. Parses from TOML and serializes losslessly;
/// derived quantities (M, noise power, per-point SNR) are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub topology: TopologySection,
    pub fading: FadingSection,
    pub power: PowerSection,
    pub noise: NoiseSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub cell_radius_m: f64,
    pub num_users: usize,
    pub elements_per_surface: Vec<usize>,
    pub ris_distance_m: f64,
    pub carrier_ghz: f64,
    /// Explicit user coordinates; omitted means uniform in the cell disc.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_positions: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingSection {
    /// Small-scale Nakagami shape applied to every link.
    #[serde(default = "default_m")]
    pub m: f64,
    /// BS-RIS LOS path loss at the 1 m reference distance, dB.
    #[serde(default = "default_l0_db")]
    pub ris_bs_l0_db: f64,
    /// BS-RIS LOS path-loss exponent.
    #[serde(default = "default_alpha")]
    pub ris_bs_alpha: f64,
}

fn default_m() -> f64 {
    2.5
}

fn default_l0_db() -> f64 {
    -30.0
}

fn default_alpha() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    /// Minimal UE transmit power in watts; the sweep adds gain on top.
    pub pu_min_w: f64,
    pub gain_sweep_db: GainSweep,
}

/// Transmit-gain grid: an explicit dB list or a start/stop/step range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSweep {
    List(Vec<f64>),
    Range { start_db: f64, stop_db: f64, step_db: f64 },
}

impl GainSweep {
    /// Ascending grid of gain points in dB.
    pub fn resolve(&self) -> Result<Vec<f64>> {
        let mut grid = match self {
            GainSweep::List(points) => points.clone(),
            GainSweep::Range { start_db, stop_db, step_db } => {
                if !(*step_db > 0.0) {
                    return Err(Error::Config("power.gain_sweep_db.step_db must be positive".into()));
                }
                if stop_db < start_db {
                    return Err(Error::Config(
                        "power.gain_sweep_db.stop_db must not be below start_db".into(),
                    ));
                }
                let n = ((stop_db - start_db) / step_db).round() as usize;
                (0..=n).map(|i| start_db + i as f64 * step_db).filter(|g| *g <= stop_db + 1e-9).collect()
            }
        };
        if grid.is_empty() {
            return Err(Error::Config("power.gain_sweep_db resolves to an empty grid".into()));
        }
        if grid.iter().any(|g| !g.is_finite()) {
            return Err(Error::Config("power.gain_sweep_db contains a non-finite point".into()));
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub bandwidth_hz: f64,
    pub density_dbm_per_hz: f64,
    pub figure_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Target rate R0 in bits/s/Hz. No blessed default; always explicit.
    pub r0_bits: f64,
    pub schemes: Vec<Scheme>,
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "default_correlation")]
    pub correlation: Correlation,
    #[serde(default = "default_placement")]
    pub user_placement: PlacementPolicy,
    /// Sample count for the ideal-reflection bound oracle.
    #[serde(default = "default_oracle_samples")]
    pub oracle_samples: usize,
}

fn default_correlation() -> Correlation {
    Correlation::Independent
}

fn default_placement() -> PlacementPolicy {
    PlacementPolicy::RedrawPerTrial
}

fn default_oracle_samples() -> usize {
    200_000
}

/// When user positions are not fixed in the config: redraw them every
/// trial, or draw them once per sweep from the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementPolicy {
    RedrawPerTrial,
    FixedPerSweep,
}

impl SystemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))
    }

    /// Canonical serialized form: field order is fixed by the struct, so
    /// equal configs hash identically.
    pub fn to_canonical_toml(&self) -> String {
        toml::to_string_pretty(self).expect("SystemConfig always serializes")
    }

    /// Exhaustive validation; returns every violation, one message each.
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut issues = Vec::new();
        let t = &self.topology;
        if t.num_users < 1 {
            issues.push("topology.num_users must be at least 1".into());
        }
        if !(t.cell_radius_m > 0.0) {
            issues.push("topology.cell_radius_m must be positive".into());
        }
        if t.elements_per_surface.iter().any(|&n| n == 0) {
            issues.push("topology.elements_per_surface entries must be at least 1".into());
        }
        if !t.elements_per_surface.is_empty() && t.ris_distance_m < 1.0 {
            issues.push("topology.ris_distance_m must be at least 1 m".into());
        }
        if !(t.carrier_ghz > 0.0) {
            issues.push("topology.carrier_ghz must be positive".into());
        }
        if let Some(pos) = &t.user_positions {
            if pos.len() != t.num_users {
                issues.push(format!(
                    "topology.user_positions has {} entries but num_users is {}",
                    pos.len(),
                    t.num_users
                ));
            }
        }
        if !(self.fading.m >= 0.5) {
            issues.push("fading.m must be at least 0.5".into());
        }
        if !(self.fading.ris_bs_alpha >= 0.0) {
            issues.push("fading.ris_bs_alpha must be nonnegative".into());
        }
        if !(self.power.pu_min_w > 0.0) {
            issues.push("power.pu_min_w must be positive".into());
        }
        if let Err(e) = self.power.gain_sweep_db.resolve() {
            issues.push(e.to_string());
        }
        if !(self.noise.bandwidth_hz > 0.0) {
            issues.push("noise.bandwidth_hz must be positive".into());
        }
        if !(self.run.r0_bits >= 0.0) {
            issues.push("run.r0_bits must be nonnegative".into());
        }
        if self.run.schemes.is_empty() {
            issues.push("run.schemes must list at least one scheme".into());
        }
        if self.run.trials < 1 {
            issues.push("run.trials must be at least 1".into());
        }
        if self.run.oracle_samples < 10_000 {
            issues.push("run.oracle_samples must be at least 10000".into());
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    /// Total noise power in watts (never stored).
    pub fn noise_power_watts(&self) -> f64 {
        crate::simkit::noise_power_watts(
            self.noise.bandwidth_hz,
            self.noise.density_dbm_per_hz,
            self.noise.figure_db,
        )
    }

    /// Transmit power at one sweep point, watts.
    pub fn pu_at(&self, gain_db: f64) -> f64 {
        self.power.pu_min_w * 10f64.powf(gain_db / 10.0)
    }

    /// P_u / sigma_n^2 at one sweep point (linear).
    pub fn snr_bar_at(&self, gain_db: f64) -> f64 {
        self.pu_at(gain_db) / self.noise_power_watts()
    }

    pub fn topology(&self) -> Topology {
        let placement = match &self.topology.user_positions {
            Some(pos) => UserPlacement::Fixed(pos.clone()),
            None => UserPlacement::UniformDisc,
        };
        Topology {
            cell_radius_m: self.topology.cell_radius_m,
            num_users: self.topology.num_users,
            elements_per_surface: self.topology.elements_per_surface.clone(),
            ris_distance_m: self.topology.ris_distance_m,
            carrier_ghz: self.topology.carrier_ghz,
            user_placement: placement,
        }
    }

    /// True when user positions do not change between trials, which is what
    /// makes the analytical overlays well-defined.
    pub fn positions_are_static(&self) -> bool {
        self.topology.user_positions.is_some()
            || self.run.user_placement == PlacementPolicy::FixedPerSweep
    }
}
