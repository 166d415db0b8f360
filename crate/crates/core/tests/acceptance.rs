//! Acceptance suite: one test per criterion, each printing its pass line.
//!
//! Run with:
//!   cargo test -p risim-core --test acceptance -- --nocapture
//!
//! Desk scale throughout: 2 surfaces x 16 elements, 10^5 trials per grid
//! point unless a criterion states otherwise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use risim_core::analysis::fit_user;
use risim_core::channel::{realize, sample_nakagami, Correlation, LinkFading, NakagamiParams};
use risim_core::config::SystemConfig;
use risim_core::optimize::{jr_optimize, JrInit, JrSolverConfig};
use risim_core::schemes::{
    anchor_phases, coherent_gain, effective_channel, gain_ideal, run_omur, run_or, Scheme,
};
use risim_core::simkit::{build_fading, run_sweep, trial_realization, OutageCurve};
use risim_core::special::{ln_gamma, reg_lower_gamma};

// ---------------------------------------------------------------- helpers

fn se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn config(toml: &str) -> SystemConfig {
    let cfg = SystemConfig::from_toml_str(toml).expect("acceptance config parses");
    cfg.validate().expect("acceptance config validates");
    cfg
}

fn curve<'a>(curves: &'a [OutageCurve], scheme: Scheme) -> &'a OutageCurve {
    curves.iter().find(|c| c.scheme == scheme).unwrap()
}

/// Draw one end-to-end amplitude A_k by direct magnitude sampling; an
/// independent path from `realize`, used as the Monte-Carlo oracle.
fn draw_amplitude<R: rand::Rng + ?Sized>(fading: &LinkFading, user: usize, rng: &mut R) -> f64 {
    let mut a = 0.0;
    for s in 0..fading.num_surfaces() {
        for _ in 0..fading.elements()[s] {
            a += sample_nakagami(fading.ris_bs(s), rng) * sample_nakagami(fading.ris_user(s, user), rng);
        }
    }
    a + sample_nakagami(fading.direct(user), rng)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 40)
}

fn unit_scale_fading(num_users: usize) -> LinkFading {
    let p = |m, o| NakagamiParams::new(m, o).unwrap();
    LinkFading::new(
        vec![p(2.5, 1.0); num_users],
        vec![vec![p(2.5, 0.5); num_users], vec![p(2.5, 0.25); num_users]],
        vec![p(2.5, 2.0), p(2.5, 1.5)],
        vec![16, 16],
    )
    .unwrap()
}

const SV_DESK: &str = r#"
[topology]
cell_radius_m = 300.0
num_users = 4
elements_per_surface = [16, 16]
ris_distance_m = 60.0
carrier_ghz = 2.0

[fading]
m = 2.5

[power]
pu_min_w = 0.1
gain_sweep_db = { start_db = 0.0, stop_db = 30.0, step_db = 3.0 }

[noise]
bandwidth_hz = 10.0e6
density_dbm_per_hz = -174.0
figure_db = 9.0

[run]
r0_bits = 4.0
schemes = ["or", "omur"]
trials = 100000
seed = 20260810
"#;

const NEAR_SURFACE: &str = r#"
[topology]
cell_radius_m = 300.0
num_users = 4
elements_per_surface = [16, 16]
ris_distance_m = 60.0
carrier_ghz = 2.0
user_positions = [[62.0, 1.2], [58.4, -1.8], [-58.2, 1.5], [-62.2, -1.1]]

[fading]
m = 2.5

[power]
pu_min_w = 0.1
gain_sweep_db = { start_db = 0.0, stop_db = 30.0, step_db = 3.0 }

[noise]
bandwidth_hz = 10.0e6
density_dbm_per_hz = -174.0
figure_db = 9.0

[run]
r0_bits = 10.0
schemes = ["su", "or"]
trials = 100000
seed = 20260810
"#;

const CLUSTER_K20: &str = r#"
[topology]
cell_radius_m = 20.0
num_users = 20
elements_per_surface = [16, 16]
ris_distance_m = 60.0
carrier_ghz = 2.0

[fading]
m = 2.5

[power]
pu_min_w = 0.1
gain_sweep_db = { start_db = 0.0, stop_db = 30.0, step_db = 3.0 }

[noise]
bandwidth_hz = 10.0e6
density_dbm_per_hz = -174.0
figure_db = 9.0

[run]
r0_bits = 20.0
schemes = ["or", "oppbf", "omur", "omur-rp"]
trials = 100000
seed = 20260810
"#;

// ---------------------------------------------------------------- criteria

/// OMUR dominates OR at every grid point, and the per-realization gain
/// decomposition gamma_omur = gamma_or + gamma_e holds to 1e-9 relative.
#[test]
fn criterion_1_omur_dominates_or() {
    let cfg = config(SV_DESK);
    let curves = run_sweep(&cfg).unwrap();
    let or = curve(&curves, Scheme::Or);
    let omur = curve(&curves, Scheme::Omur);
    for (a, b) in omur.points.iter().zip(&or.points) {
        assert!(
            a.op_estimate <= b.op_estimate,
            "OMUR outage {} above OR outage {} at {} dB",
            a.op_estimate,
            b.op_estimate,
            a.power_gain_db
        );
    }

    let grid_len = cfg.power.gain_sweep_db.resolve().unwrap().len();
    for t in 0..1000u64 {
        let real = trial_realization(&cfg, (t as usize) % grid_len, t).unwrap();
        let or_out = run_or(&real, 1.0);
        let omur_out = run_omur(&real, 1.0);
        let k_star = or_out.selected_user.unwrap();
        let phases = anchor_phases(&real, k_star);
        let gamma_e: f64 = (0..real.num_users())
            .filter(|&k| k != k_star)
            .map(|k| effective_channel(&real, &phases, k).norm_sqr())
            .sum();
        let gap = (omur_out.gamma - (or_out.gamma + gamma_e)).abs();
        assert!(
            gap <= 1e-9 * omur_out.gamma,
            "trial {t}: decomposition off by {gap:e} (gamma {})",
            omur_out.gamma
        );
    }
    println!("criterion 1 (OMUR/OR ordering + gain decomposition): PASS");
}

/// Analytical SU and OR curves match the Monte-Carlo estimates within 3
/// standard errors wherever the outage probability is at least 1e-3, and
/// the fitted CDF stays within 0.02 of the empirical A_k CDF.
#[test]
fn criterion_2_analytic_numeric_match() {
    let cfg = config(NEAR_SURFACE);
    let curves = run_sweep(&cfg).unwrap();
    let mut checked = 0;
    for scheme in [Scheme::Su, Scheme::Or] {
        let c = curve(&curves, scheme);
        let overlay = c.analytical.as_ref().expect("fixed positions produce overlays");
        for (p, a) in c.points.iter().zip(overlay) {
            if p.op_estimate >= 1e-3 {
                let band = 3.0 * se(p.op_estimate, p.trials_used);
                let dev = (p.op_estimate - a.op).abs();
                assert!(
                    dev <= band,
                    "{scheme} at {} dB: |{} - {}| = {dev:.2e} > 3 SE = {band:.2e}",
                    p.power_gain_db,
                    p.op_estimate,
                    a.op
                );
                checked += 1;
            }
        }
    }
    assert!(checked >= 2, "transition must land inside the sweep");

    // fitted-vs-empirical CDF of A_1 over 1e6 draws
    let topo = cfg.topology();
    let positions = cfg.topology.user_positions.clone().unwrap();
    let fading = build_fading(&topo, &positions, 2.5, -30.0, 2.0).unwrap();
    let fit = fit_user(&fading, 0).unwrap();
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2_026_0810);
    let mut samples: Vec<f64> = (0..n).map(|_| draw_amplitude(&fading, 0, &mut rng)).collect();
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut max_dev = 0.0f64;
    for (i, x) in samples.iter().enumerate() {
        let f = fit.cdf(*x).unwrap();
        max_dev = max_dev.max((f - i as f64 / n as f64).abs());
        max_dev = max_dev.max(((i + 1) as f64 / n as f64 - f).abs());
    }
    assert!(max_dev < 0.02, "fitted CDF deviates by {max_dev}");
    println!(
        "criterion 2 (analytic vs numeric, {checked} in-band points; CDF dev {max_dev:.4}): PASS"
    );
}

/// Monte-Carlo ideal-reflection outage never exceeds the sampled
/// product-distribution upper bound by more than 4 combined standard errors.
#[test]
fn criterion_3_ir_upper_bound() {
    let cfg = {
        let mut c = config(NEAR_SURFACE);
        c.run.r0_bits = 13.5;
        c.run.schemes = vec![Scheme::Ir];
        c
    };
    let curves = run_sweep(&cfg).unwrap();
    let ir = curve(&curves, Scheme::Ir);
    let overlay = ir.analytical.as_ref().expect("IR bound overlay expected");
    let mut nontrivial = 0;
    for (p, a) in ir.points.iter().zip(overlay) {
        let combined =
            (se(p.op_estimate, p.trials_used).powi(2) + a.oracle_se.unwrap().powi(2)).sqrt();
        assert!(
            p.op_estimate <= a.op + 4.0 * combined,
            "at {} dB: MC {} exceeds bound {} + 4 SE",
            p.power_gain_db,
            p.op_estimate,
            a.op
        );
        if p.op_estimate > 0.0 && p.op_estimate < 1.0 {
            nontrivial += 1;
        }
    }
    assert!(nontrivial >= 1, "bound check must include an in-transition point");
    println!("criterion 3 (ideal-reflection upper bound): PASS");
}

/// At K = 20 the curves of OR and OppBF, and of OMUR and OMUR-RP, agree
/// within 2 combined standard errors at every grid point.
#[test]
fn criterion_4_large_k_convergence() {
    let cfg = config(CLUSTER_K20);
    let curves = run_sweep(&cfg).unwrap();
    for (lhs, rhs) in [(Scheme::Or, Scheme::OppBf), (Scheme::Omur, Scheme::OmurRp)] {
        let a = curve(&curves, lhs);
        let b = curve(&curves, rhs);
        for (pa, pb) in a.points.iter().zip(&b.points) {
            if pa.op_estimate == pb.op_estimate {
                continue;
            }
            let band =
                2.0 * (se(pa.op_estimate, pa.trials_used).powi(2) + se(pb.op_estimate, pb.trials_used).powi(2)).sqrt();
            let gap = (pa.op_estimate - pb.op_estimate).abs();
            assert!(
                gap <= band,
                "{lhs} vs {rhs} at {} dB: gap {gap:.2e} exceeds 2 SE {band:.2e}",
                pa.power_gain_db
            );
        }
    }
    let or0 = curve(&curves, Scheme::Or).points[0].op_estimate;
    assert!(or0 > 0.1, "curves must be nonvacuous at the first grid point, got {or0}");
    println!("criterion 4 (K=20 OR~OppBF and OMUR~OMUR-RP): PASS");
}

/// With a per-surface inter-element correlation coefficient of 1, OMUR
/// still dominates OR and OppBF at every grid point.
#[test]
fn criterion_5_correlated_channels() {
    let cfg = {
        let mut c = config(CLUSTER_K20);
        c.run.correlation = Correlation::PerSurfaceFull;
        c.run.schemes = vec![Scheme::OppBf, Scheme::Or, Scheme::Omur];
        c
    };
    let curves = run_sweep(&cfg).unwrap();
    let oppbf = curve(&curves, Scheme::OppBf);
    let or = curve(&curves, Scheme::Or);
    let omur = curve(&curves, Scheme::Omur);
    for i in 0..or.points.len() {
        assert!(
            omur.points[i].outages <= or.points[i].outages,
            "correlated: OMUR above OR at {} dB",
            or.points[i].power_gain_db
        );
        assert!(
            omur.points[i].outages <= oppbf.points[i].outages,
            "correlated: OMUR above OppBF at {} dB",
            or.points[i].power_gain_db
        );
    }
    println!("criterion 5 (correlated channels keep OMUR on top): PASS");
}

/// The joint-reflection solver: global optimum on single-user instances,
/// the OR <= OMUR <= JR <= IR sandwich with anchor init, and a monotone
/// objective trace.
#[test]
fn criterion_6_jr_solver() {
    let single = unit_scale_fading(1);
    for i in 0..1000u64 {
        let real = realize(
            &single,
            Correlation::Independent,
            &mut ChaCha8Rng::seed_from_u64(7000 + i),
        );
        // tighter than the sweep defaults: the per-sweep improvement bound
        // must sit well below the 1e-6 optimality gap being asserted
        let cfg = JrSolverConfig {
            max_sweeps: 500,
            rel_tolerance: 1e-11,
            init: JrInit::Random { seed: i },
        };
        let sol = jr_optimize(&real, &cfg);
        let target = coherent_gain(&real, 0);
        let rel = (sol.objective - target).abs() / target;
        assert!(rel <= 1e-6, "instance {i}: K=1 gap {rel:e}");
    }

    let multi = unit_scale_fading(4);
    for i in 0..300u64 {
        let real = realize(
            &multi,
            Correlation::Independent,
            &mut ChaCha8Rng::seed_from_u64(9000 + i),
        );
        let or = run_or(&real, 1.0).gamma;
        let omur = run_omur(&real, 1.0).gamma;
        let sol = jr_optimize(&real, &JrSolverConfig::default());
        let ir = gain_ideal(&real);
        assert!(or <= omur * (1.0 + 1e-9), "instance {i}: OR above OMUR");
        assert!(omur <= sol.objective * (1.0 + 1e-9), "instance {i}: OMUR above JR");
        assert!(sol.objective <= ir * (1.0 + 1e-9), "instance {i}: JR above IR");
        for w in sol.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12 * w[0], "instance {i}: sweep decreased the objective");
        }
    }
    println!("criterion 6 (JR solver: K=1 optimum, sandwich, monotone sweeps): PASS");
}

/// Property suites: sampler KS tests, Lemma-level moment identities against
/// Monte Carlo, fit round trips, special-function quadrature, determinism
/// under varying parallelism.
#[test]
fn criterion_7_property_suites() {
    // --- Kolmogorov-Smirnov, m = 1 against the closed-form Rayleigh CDF
    let n = 100_000usize;
    let ks_critical = 1.6276 / (n as f64).sqrt(); // significance 0.01
    let rayleigh = NakagamiParams::new(1.0, 2.3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let mut samples: Vec<f64> = (0..n).map(|_| sample_nakagami(&rayleigh, &mut rng)).collect();
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut d_rayleigh = 0.0f64;
    for (i, x) in samples.iter().enumerate() {
        let f = 1.0 - (-x * x / 2.3).exp();
        d_rayleigh = d_rayleigh.max((f - i as f64 / n as f64).abs());
        d_rayleigh = d_rayleigh.max(((i + 1) as f64 / n as f64 - f).abs());
    }
    assert!(d_rayleigh < ks_critical, "Rayleigh KS statistic {d_rayleigh} over {ks_critical}");

    // --- KS for fractional shape against the analytical Nakagami CDF
    let nak = NakagamiParams::new(2.5, 0.8).unwrap();
    let mut samples: Vec<f64> = (0..n).map(|_| sample_nakagami(&nak, &mut rng)).collect();
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut d_nak = 0.0f64;
    for (i, x) in samples.iter().enumerate() {
        let f = nak.cdf(*x).unwrap();
        d_nak = d_nak.max((f - i as f64 / n as f64).abs());
        d_nak = d_nak.max(((i + 1) as f64 / n as f64 - f).abs());
    }
    assert!(d_nak < ks_critical, "Nakagami KS statistic {d_nak} over {ks_critical}");

    // --- Lemma-level moments against Monte-Carlo sample moments (4 sigma)
    let cfg = config(NEAR_SURFACE);
    let topo = {
        let mut t = cfg.topology();
        t.elements_per_surface = vec![8, 8];
        t
    };
    let positions = cfg.topology.user_positions.clone().unwrap();
    let fading = build_fading(&topo, &positions, 2.5, -30.0, 2.0).unwrap();
    let draws = 1_000_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(72);
    let (mut s1, mut s2, mut s4) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..draws {
        let a = draw_amplitude(&fading, 0, &mut rng);
        s1 += a;
        s2 += a * a;
        s4 += a * a * a * a;
    }
    let nf = draws as f64;
    let (m1, m2) = (s1 / nf, s2 / nf);
    let se1 = ((m2 - m1 * m1) / nf).sqrt();
    let se2 = ((s4 / nf - m2 * m2) / nf).sqrt();
    let (mu1, mu2) = risim_core::analysis::moments_ak(&fading, 0);
    assert!((m1 - mu1).abs() < 4.0 * se1, "mu1 {mu1} vs sample {m1} (se {se1})");
    assert!((m2 - mu2).abs() < 4.0 * se2, "mu2 {mu2} vs sample {m2} (se {se2})");

    // --- Gamma-fit round trips at 1e-12
    for (mu1, mu2) in [(1.0, 1.09), (3.2e-6, 1.1e-11), (42.0, 1900.0), (0.951, 1.0)] {
        let fit = risim_core::analysis::GammaFit::from_moments(mu1, mu2).unwrap();
        assert!((fit.mean() - mu1).abs() <= 1e-12 * mu1);
        assert!((fit.variance() - (mu2 - mu1 * mu1)).abs() <= 1e-12 * (mu2 - mu1 * mu1));
    }

    // --- regularized incomplete gamma against an adaptive quadrature oracle
    for (a, x) in [(0.5f64, 0.2f64), (1.0, 1.0), (2.5, 2.6), (2.5, 10.0), (9.5, 9.5), (40.0, 55.0)] {
        // P(a, x) = int_0^sqrt(x) 2 u^(2a-1) exp(-u^2) du / Gamma(a)
        let integrand = move |u: f64| {
            if u == 0.0 {
                // u^(2a-1) is 0 for a > 1/2 and 1 at the Rayleigh edge a = 1/2
                if 2.0 * a - 1.0 > 0.0 {
                    0.0
                } else {
                    2.0 * (-ln_gamma(a)).exp()
                }
            } else {
                2.0 * ((2.0 * a - 1.0) * u.ln() - u * u - ln_gamma(a)).exp()
            }
        };
        let quad = adaptive_simpson(&integrand, 0.0, x.sqrt(), 1e-12);
        let p = reg_lower_gamma(a, x).unwrap();
        assert!((p - quad).abs() < 1e-8, "P({a},{x}) = {p} vs quadrature {quad}");
    }

    // --- bit-identical results for any degree of parallelism
    let det_cfg = {
        let mut c = config(SV_DESK);
        c.run.trials = 2000;
        c.run.schemes = Scheme::ALL.to_vec();
        c.power.gain_sweep_db =
            risim_core::config::GainSweep::List(vec![0.0, 15.0, 30.0]);
        c
    };
    let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = pool1.install(|| run_sweep(&det_cfg)).unwrap();
    let b = pool4.install(|| run_sweep(&det_cfg)).unwrap();
    assert_eq!(a, b, "thread count changed the results");

    println!("criterion 7 (KS, moments, fit round-trip, quadrature, determinism): PASS");
}

/// The exclusions: absolute CPU times and the semidefinite-relaxation
/// solver are out of scope; the full-scale setup stays expressible in
/// config without being part of the timed suite.
#[test]
fn criterion_8_full_scale_expressible() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/full_scale.toml");
    let text = std::fs::read_to_string(path).expect("full-scale config ships with the repo");
    let cfg = config(&text);
    assert_eq!(cfg.topology().total_elements(), 400);
    assert_eq!(cfg.topology().num_surfaces(), 4);
    let noise_dbm = 10.0 * cfg.noise_power_watts().log10() + 30.0;
    assert!((noise_dbm - (-95.0)).abs() < 1e-9);
    println!("criterion 8 (full scale config-expressible; absolute timings excluded): PASS");
}
