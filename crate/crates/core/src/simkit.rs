//! Monte-Carlo experiment harness: builds scenarios from a SystemConfig,
//! sweeps transmit power, estimates per-scheme outage probabilities with
//! Wilson confidence intervals, and overlays the analytical curves where
//! they are defined.
//!
//! Determinism contract: every trial derives its random streams from
//! (master seed, sweep index, trial index, scheme lane), so the output is a
//! pure function of the config -- independent of execution order, thread
//! count, and which other schemes are listed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;
use std::time::Instant;

use crate::analysis::{fit_user, outage_ir_upper_bound, outage_or, outage_su, GammaFit};
use crate::channel::{
    los_pathloss_db, realize, umi_pathloss_db, ChannelRealization, LinkFading, NakagamiParams,
    Topology, UserPlacement,
};
use crate::config::{PlacementPolicy, SystemConfig};
use crate::optimize::{jr_optimize, JrSolverConfig};
use crate::rng::substream;
use crate::schemes::{
    coherent_gain, gain_ideal, rate_from_gain, run_omur, run_omur_rp, run_oppbf, Scheme,
};
use crate::{Error, Result};

const LANE_CHANNEL: u64 = 0;
const LANE_SCHEME: u64 = 1;
const LANE_PLACEMENT: u64 = 2;
const LANE_ORACLE: u64 = 3;
const LANE_BENCH: u64 = 4;

fn scheme_lane(scheme: Scheme) -> u64 {
    Scheme::ALL.iter().position(|&s| s == scheme).unwrap() as u64
}

/// Total noise power in watts from density (dBm/Hz), bandwidth, and noise
/// figure: 10^((density + 10 log10(B) + NF - 30) / 10).
pub fn noise_power_watts(bandwidth_hz: f64, density_dbm_per_hz: f64, figure_db: f64) -> f64 {
    assert!(bandwidth_hz > 0.0, "bandwidth must be positive");
    10f64.powf((density_dbm_per_hz + 10.0 * bandwidth_hz.log10() + figure_db - 30.0) / 10.0)
}

/// Binomial proportion with the halfwidth of the Wilson 95% interval.
/// Zero observed outages still produce a nonzero halfwidth.
pub fn wilson_interval(outages: u64, trials: u64) -> (f64, f64) {
    assert!(trials >= 1, "need at least one trial");
    const Z: f64 = 1.959963984540054;
    let n = trials as f64;
    let p = outages as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let half = (Z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (p, half)
}

/// One estimated point of an outage curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub power_gain_db: f64,
    pub op_estimate: f64,
    pub ci_halfwidth: f64,
    pub trials_used: u64,
    pub outages: u64,
    /// No outage events observed, or the interval is wider than the
    /// estimate: the point is reported as censored rather than as a value.
    pub censored: bool,
}

/// Analytical overlay value at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticPoint {
    pub power_gain_db: f64,
    pub op: f64,
    /// Standard error of the sampling oracle (ideal-reflection bound only).
    pub oracle_se: Option<f64>,
}

/// Estimated outage curve of one scheme across the power sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageCurve {
    pub scheme: Scheme,
    pub points: Vec<CurvePoint>,
    pub analytical: Option<Vec<AnalyticPoint>>,
}

impl OutageCurve {
    /// Indices where the estimate rises with power by more than the
    /// combined interval halfwidths. These are flagged, never fatal.
    pub fn inversion_flags(&self) -> Vec<usize> {
        self.points
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].op_estimate > w[0].op_estimate + w[0].ci_halfwidth + w[1].ci_halfwidth)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

/// Users drawn uniformly over the cell disc.
pub fn draw_positions<R: Rng + ?Sized>(topo: &Topology, rng: &mut R) -> Vec<[f64; 2]> {
    (0..topo.num_users)
        .map(|_| {
            let r = topo.cell_radius_m * rng.gen::<f64>().sqrt();
            let ang = rng.gen_range(0.0..TAU);
            [r * ang.cos(), r * ang.sin()]
        })
        .collect()
}

/// Per-link Nakagami tables for one set of user positions: UMi NLOS for the
/// user->BS and user->RIS links, LOS for the RIS->BS links, a common
/// small-scale shape m. Distances below the 1 m model reference are
/// clamped to 1 m.
pub fn build_fading(
    topo: &Topology,
    positions: &[[f64; 2]],
    m: f64,
    ris_bs_l0_db: f64,
    ris_bs_alpha: f64,
) -> Result<LinkFading> {
    if positions.len() != topo.num_users {
        return Err(Error::Config(format!(
            "expected {} user positions, got {}",
            topo.num_users,
            positions.len()
        )));
    }
    let surf = topo.surface_positions();
    let lin = |db: f64| 10f64.powf(db / 10.0);

    let mut direct = Vec::with_capacity(topo.num_users);
    for p in positions {
        let dist = (p[0] * p[0] + p[1] * p[1]).sqrt().max(1.0);
        direct.push(NakagamiParams::new(m, lin(umi_pathloss_db(topo.carrier_ghz, dist)?))?);
    }

    let mut ris_user = Vec::with_capacity(surf.len());
    let mut ris_bs = Vec::with_capacity(surf.len());
    for s in &surf {
        let dist_bs = (s[0] * s[0] + s[1] * s[1]).sqrt().max(1.0);
        ris_bs.push(NakagamiParams::new(m, lin(los_pathloss_db(dist_bs, ris_bs_l0_db, ris_bs_alpha)?))?);
        let mut row = Vec::with_capacity(positions.len());
        for p in positions {
            let dist = ((p[0] - s[0]).powi(2) + (p[1] - s[1]).powi(2)).sqrt().max(1.0);
            row.push(NakagamiParams::new(m, lin(umi_pathloss_db(topo.carrier_ghz, dist)?))?);
        }
        ris_user.push(row);
    }
    LinkFading::new(direct, ris_user, ris_bs, topo.elements_per_surface.clone())
}

/// Positions used by every trial when the config pins them: the explicit
/// list, or one uniform draw from the seed under fixed-per-sweep placement.
pub fn static_positions(cfg: &SystemConfig) -> Option<Vec<[f64; 2]>> {
    let topo = cfg.topology();
    match &topo.user_placement {
        UserPlacement::Fixed(pos) => Some(pos.clone()),
        UserPlacement::UniformDisc => match cfg.run.user_placement {
            PlacementPolicy::FixedPerSweep => {
                Some(draw_positions(&topo, &mut substream(cfg.run.seed, &[LANE_PLACEMENT])))
            }
            PlacementPolicy::RedrawPerTrial => None,
        },
    }
}

/// Positions backing analytical curves: the static positions when the
/// config pins them, otherwise one seed-derived draw (the same draw
/// fixed-per-sweep placement would use).
pub fn analysis_positions(cfg: &SystemConfig) -> Vec<[f64; 2]> {
    static_positions(cfg).unwrap_or_else(|| {
        draw_positions(&cfg.topology(), &mut substream(cfg.run.seed, &[LANE_PLACEMENT]))
    })
}

/// The channel realization of one (sweep point, trial) cell, exactly as the
/// sweep evaluates it.
pub fn trial_realization(
    cfg: &SystemConfig,
    sweep_idx: usize,
    trial: u64,
) -> Result<ChannelRealization> {
    let topo = cfg.topology();
    let fixed = static_positions(cfg);
    let mut rng = substream(cfg.run.seed, &[LANE_CHANNEL, sweep_idx as u64, trial]);
    let positions = match &fixed {
        Some(p) => p.clone(),
        None => draw_positions(&topo, &mut rng),
    };
    let fading =
        build_fading(&topo, &positions, cfg.fading.m, cfg.fading.ris_bs_l0_db, cfg.fading.ris_bs_alpha)?;
    Ok(realize(&fading, cfg.run.correlation, &mut rng))
}

/// The random stream a scheme may consume inside one trial.
pub fn scheme_stream(cfg: &SystemConfig, sweep_idx: usize, trial: u64, scheme: Scheme) -> ChaCha8Rng {
    substream(cfg.run.seed, &[LANE_SCHEME, sweep_idx as u64, trial, scheme_lane(scheme)])
}

/// Effective gain of one scheme on one realization, drawing any randomness
/// from the scheme's dedicated stream.
pub fn scheme_gamma(
    cfg: &SystemConfig,
    real: &ChannelRealization,
    scheme: Scheme,
    sweep_idx: usize,
    trial: u64,
) -> f64 {
    match scheme {
        Scheme::Su => coherent_gain(real, 0),
        Scheme::Or => {
            (0..real.num_users()).map(|k| coherent_gain(real, k)).fold(f64::MIN, f64::max)
        }
        Scheme::Omur => run_omur(real, 1.0).gamma,
        Scheme::OmurRp => {
            run_omur_rp(real, 1.0, &mut scheme_stream(cfg, sweep_idx, trial, scheme)).gamma
        }
        Scheme::OppBf => {
            run_oppbf(real, 1.0, &mut scheme_stream(cfg, sweep_idx, trial, scheme)).gamma
        }
        Scheme::Jr => jr_optimize(real, &JrSolverConfig::default()).objective,
        Scheme::Ir => gain_ideal(real),
    }
}

struct SweepContext {
    topo: Topology,
    fixed_positions: Option<Vec<[f64; 2]>>,
    m: f64,
    l0_db: f64,
    alpha: f64,
}

fn trial_outage_mask(
    cfg: &SystemConfig,
    ctx: &SweepContext,
    sweep_idx: usize,
    trial: u64,
    snr_bar: f64,
) -> u32 {
    let mut rng = substream(cfg.run.seed, &[LANE_CHANNEL, sweep_idx as u64, trial]);
    let drawn;
    let positions: &[[f64; 2]] = match &ctx.fixed_positions {
        Some(p) => p,
        None => {
            drawn = draw_positions(&ctx.topo, &mut rng);
            &drawn
        }
    };
    let fading = build_fading(&ctx.topo, positions, ctx.m, ctx.l0_db, ctx.alpha)
        .expect("validated config always yields coherent fading tables");
    let real = realize(&fading, cfg.run.correlation, &mut rng);

    let mut mask = 0u32;
    for (si, &scheme) in cfg.run.schemes.iter().enumerate() {
        let gamma = scheme_gamma(cfg, &real, scheme, sweep_idx, trial);
        if rate_from_gain(gamma, snr_bar) < cfg.run.r0_bits {
            mask |= 1 << si;
        }
    }
    mask
}

fn validated(cfg: &SystemConfig) -> Result<()> {
    cfg.validate().map_err(|issues| Error::Config(issues.join("; ")))
}

/// Run the full power sweep for every configured scheme.
///
/// Per sweep point, all schemes share each trial's channel realization, so
/// per-realization orderings (OMUR at or above OR, for example) carry over
/// to the estimates trial by trial. Analytical overlays are attached for
/// the single-user curve, the opportunistic-reflection curve, and the
/// ideal-reflection bound whenever user positions are static across trials;
/// with redraw-per-trial placement the overlays are omitted because the
/// fits are position-specific.
pub fn run_sweep(cfg: &SystemConfig) -> Result<Vec<OutageCurve>> {
    validated(cfg)?;
    let grid = cfg.power.gain_sweep_db.resolve()?;
    let ctx = SweepContext {
        topo: cfg.topology(),
        fixed_positions: static_positions(cfg),
        m: cfg.fading.m,
        l0_db: cfg.fading.ris_bs_l0_db,
        alpha: cfg.fading.ris_bs_alpha,
    };

    let fits: Option<Vec<GammaFit>> = match &ctx.fixed_positions {
        Some(pos) if cfg.run.schemes.iter().any(|s| overlay_defined(*s)) => {
            let fading = build_fading(&ctx.topo, pos, ctx.m, ctx.l0_db, ctx.alpha)?;
            Some(
                (0..fading.num_users())
                    .map(|k| fit_user(&fading, k))
                    .collect::<Result<Vec<_>>>()?,
            )
        }
        _ => None,
    };

    let ns = cfg.run.schemes.len();
    let mut curves: Vec<OutageCurve> = cfg
        .run
        .schemes
        .iter()
        .map(|&scheme| OutageCurve { scheme, points: Vec::new(), analytical: None })
        .collect();

    for (i, &gain_db) in grid.iter().enumerate() {
        let snr_bar = cfg.snr_bar_at(gain_db);
        let counts = (0..cfg.run.trials)
            .into_par_iter()
            .fold(
                || vec![0u64; ns],
                |mut acc, t| {
                    let mask = trial_outage_mask(cfg, &ctx, i, t, snr_bar);
                    for (si, slot) in acc.iter_mut().enumerate() {
                        *slot += u64::from(mask >> si & 1);
                    }
                    acc
                },
            )
            .reduce(
                || vec![0u64; ns],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            );

        for (si, curve) in curves.iter_mut().enumerate() {
            let outages = counts[si];
            let (estimate, halfwidth) = wilson_interval(outages, cfg.run.trials);
            curve.points.push(CurvePoint {
                power_gain_db: gain_db,
                op_estimate: estimate,
                ci_halfwidth: halfwidth,
                trials_used: cfg.run.trials,
                outages,
                censored: outages == 0 || halfwidth > estimate,
            });
        }
    }

    if let Some(fits) = &fits {
        for curve in curves.iter_mut() {
            curve.analytical = analytic_curve(cfg, curve.scheme, fits, &grid)?;
        }
    }
    Ok(curves)
}

fn overlay_defined(scheme: Scheme) -> bool {
    matches!(scheme, Scheme::Su | Scheme::Or | Scheme::Ir)
}

/// Analytical curve of one scheme over the grid, where defined: the
/// single-user CDF expression, the per-user CDF product, or the sampled
/// ideal-reflection upper bound.
pub fn analytic_curve(
    cfg: &SystemConfig,
    scheme: Scheme,
    fits: &[GammaFit],
    grid: &[f64],
) -> Result<Option<Vec<AnalyticPoint>>> {
    if !overlay_defined(scheme) {
        return Ok(None);
    }
    let mut points = Vec::with_capacity(grid.len());
    for (i, &gain_db) in grid.iter().enumerate() {
        let snr_bar = cfg.snr_bar_at(gain_db);
        let point = match scheme {
            Scheme::Su => AnalyticPoint {
                power_gain_db: gain_db,
                op: outage_su(&fits[0], cfg.run.r0_bits, snr_bar)?,
                oracle_se: None,
            },
            Scheme::Or => AnalyticPoint {
                power_gain_db: gain_db,
                op: outage_or(fits, cfg.run.r0_bits, snr_bar)?,
                oracle_se: None,
            },
            Scheme::Ir => {
                let mut rng = substream(cfg.run.seed, &[LANE_ORACLE, i as u64]);
                let (op, se) = outage_ir_upper_bound(
                    fits,
                    cfg.run.r0_bits,
                    snr_bar,
                    cfg.run.oracle_samples,
                    &mut rng,
                )?;
                AnalyticPoint { power_gain_db: gain_db, op, oracle_se: Some(se) }
            }
            _ => unreachable!(),
        };
        points.push(point);
    }
    Ok(Some(points))
}

/// Outage estimate of one scheme at one sweep point. Uses the same trial
/// stream derivation as `run_sweep`, so the result is bit-identical to that
/// scheme's column of the full sweep.
pub fn estimate_op(cfg: &SystemConfig, scheme: Scheme, sweep_idx: usize) -> Result<CurvePoint> {
    validated(cfg)?;
    let grid = cfg.power.gain_sweep_db.resolve()?;
    let gain_db = *grid
        .get(sweep_idx)
        .ok_or_else(|| Error::Config(format!("sweep index {sweep_idx} out of range")))?;
    let snr_bar = cfg.snr_bar_at(gain_db);
    let ctx = SweepContext {
        topo: cfg.topology(),
        fixed_positions: static_positions(cfg),
        m: cfg.fading.m,
        l0_db: cfg.fading.ris_bs_l0_db,
        alpha: cfg.fading.ris_bs_alpha,
    };
    let outages: u64 = (0..cfg.run.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(cfg.run.seed, &[LANE_CHANNEL, sweep_idx as u64, t]);
            let drawn;
            let positions: &[[f64; 2]] = match &ctx.fixed_positions {
                Some(p) => p,
                None => {
                    drawn = draw_positions(&ctx.topo, &mut rng);
                    &drawn
                }
            };
            let fading = build_fading(&ctx.topo, positions, ctx.m, ctx.l0_db, ctx.alpha)
                .expect("validated config always yields coherent fading tables");
            let real = realize(&fading, cfg.run.correlation, &mut rng);
            let gamma = scheme_gamma(cfg, &real, scheme, sweep_idx, t);
            u64::from(rate_from_gain(gamma, snr_bar) < cfg.run.r0_bits)
        })
        .sum();
    let (estimate, halfwidth) = wilson_interval(outages, cfg.run.trials);
    Ok(CurvePoint {
        power_gain_db: gain_db,
        op_estimate: estimate,
        ci_halfwidth: halfwidth,
        trials_used: cfg.run.trials,
        outages,
        censored: outages == 0 || halfwidth > estimate,
    })
}

/// Mean wall-clock cost per realization of each scheme's evaluation,
/// in milliseconds, over at least 100 shared realizations.
pub fn timing_bench(cfg: &SystemConfig, schemes: &[Scheme]) -> Result<Vec<(Scheme, f64)>> {
    validated(cfg)?;
    if schemes.is_empty() {
        return Ok(Vec::new());
    }
    let topo = cfg.topology();
    let mut rng = substream(cfg.run.seed, &[LANE_BENCH]);
    let positions = match &topo.user_placement {
        UserPlacement::Fixed(pos) => pos.clone(),
        UserPlacement::UniformDisc => draw_positions(&topo, &mut rng),
    };
    let fading =
        build_fading(&topo, &positions, cfg.fading.m, cfg.fading.ris_bs_l0_db, cfg.fading.ris_bs_alpha)?;
    let reals: Vec<ChannelRealization> =
        (0..128).map(|_| realize(&fading, cfg.run.correlation, &mut rng)).collect();

    let mut rows = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let start = Instant::now();
        let mut sink = 0.0f64;
        for (t, real) in reals.iter().enumerate() {
            sink += scheme_gamma(cfg, real, scheme, 0, t as u64);
        }
        let elapsed = start.elapsed().as_secs_f64();
        std::hint::black_box(sink);
        rows.push((scheme, elapsed * 1e3 / reals.len() as f64));
    }
    Ok(rows)
}
