use super::*;
use crate::designs::design_qos;
use crate::model::{db_to_linear, draw_comm_channels, CMatrix};
use crate::radar::receive_filter_for;
use crate::radar::RadarMetric;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_scene(n_tx: usize, n_rx: usize) -> SystemConfig {
    SystemConfig {
        n_tx,
        n_rx,
        ..SystemConfig::paper_default()
    }
}

fn matched(cfg: &SystemConfig, adc: Resolution) -> (TransmitSignal, ReceiveFilter, RadarChannel) {
    let ch = RadarChannel::new(cfg);
    let x = crate::model::quantize_dac_1bit(&ch.target.g_tx.conjugate(), cfg).unwrap();
    let f = receive_filter_for(&RadarMetric::for_adc(adc, cfg), &x, &ch).unwrap();
    (x, f, ch)
}

#[test]
fn ratio_estimator_on_synthetic_gaussians() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let z1: Vec<Complex64> = (0..50_000).map(|_| complex_normal(&mut rng, 5.0)).collect();
    let z0: Vec<Complex64> = (0..50_000).map(|_| complex_normal(&mut rng, 1.0)).collect();
    let est = variance_ratio_estimate(&z1, &z0);
    assert!(est.covers(4.0, 3.0), "{est:?}");
    assert!(est.stderr > 0.0 && est.stderr < 0.1);
    let v = complex_variance(&z0);
    assert!(v.covers(1.0, 3.0), "{v:?}");
}

#[test]
fn no_target_gives_zero_scnr() {
    let cfg = SystemConfig {
        radar_snr: 0.0,
        ..small_scene(8, 16)
    };
    let (x, f, ch) = matched(&small_scene(8, 16), Resolution::OneBit);
    let est = mc_qscnr(&x, &f, &ch, &cfg, Resolution::OneBit, &McConfig::new(20_000, 3)).unwrap();
    assert!(est.qscnr.covers(0.0, 3.0), "{:?}", est.qscnr);
}

#[test]
fn unquantized_path_matches_closed_form() {
    let cfg = small_scene(8, 16);
    let (x, f, ch) = matched(&cfg, Resolution::Infinite);
    let est = mc_qscnr(&x, &f, &ch, &cfg, Resolution::Infinite, &McConfig::new(40_000, 11)).unwrap();
    assert!(est.qscnr.covers(est.analytic, 3.0), "{:?} vs {}", est.qscnr, est.analytic);
}

#[test]
fn results_do_not_depend_on_batching() {
    let cfg = small_scene(6, 8);
    let (x, f, ch) = matched(&cfg, Resolution::OneBit);
    let run = |batch: usize, seed: u64| {
        let mc = McConfig {
            batch,
            ..McConfig::new(3000, seed)
        };
        mc_qscnr(&x, &f, &ch, &cfg, Resolution::OneBit, &mc).unwrap()
    };
    let a = run(1, 9);
    assert_eq!(a, run(4096, 9));
    assert_eq!(a, run(37, 9));
    assert_ne!(a.qscnr.value, run(37, 10).qscnr.value);
}

#[test]
fn refuses_small_trial_counts() {
    let cfg = small_scene(4, 4);
    let (x, f, ch) = matched(&cfg, Resolution::OneBit);
    let err = mc_qscnr(&x, &f, &ch, &cfg, Resolution::OneBit, &McConfig::new(999, 0));
    assert!(matches!(err, Err(IsacError::TooFewTrials(999))));
}

#[test]
fn roc_is_monotone_and_calibrated() {
    let cfg = small_scene(8, 64);
    let (x, f, ch) = matched(&cfg, Resolution::OneBit);
    let deltas = [0.01, 0.05, 0.1, 0.3, 0.6];
    let roc = mc_roc(&x, &f, &ch, &cfg, &deltas, &McConfig::new(20_000, 4)).unwrap();
    for w in roc.windows(2) {
        assert!(w[1].pd.value >= w[0].pd.value);
        assert!(w[1].pfa.value >= w[0].pfa.value);
        assert!(w[1].threshold < w[0].threshold);
    }
    for p in &roc {
        assert!(p.pd.value >= p.pfa.value);
        assert!((p.pd_analytic - prob_detection(p.delta, qscnr(&f, &x, &ch, &cfg).unwrap()).unwrap()).abs() < 1e-15);
    }
    assert!(mc_roc(&x, &f, &ch, &cfg, &[1.0], &McConfig::new(2000, 4)).is_err());
}

fn ber_problem(n_tx: usize, requirement: Requirement) -> DesignProblem {
    let cfg = small_scene(n_tx, 16);
    let ch = draw_comm_channels(&cfg);
    let psk = Constellation::psk(cfg.modulation_order).unwrap();
    let symbols = vec![psk.symbol(0); cfg.n_users];
    DesignProblem::new(requirement, cfg, ch, symbols)
}

#[test]
fn noiseless_downlink_has_no_errors() {
    let p = ber_problem(10, Requirement::Qod { chi: 0.0 });
    let pts = mc_ber(&p, &[60.0], &McConfig::new(100_000, 1)).unwrap();
    let pt = &pts[0];
    assert_eq!(pt.status, PointStatus::Feasible);
    assert!(pt.alpha_min > 0.0);
    assert_eq!(pt.sep.unwrap().value, 0.0);
    assert_eq!(pt.ber.unwrap().value, 0.0);
    assert_eq!(pt.sep.unwrap().n, 200 * 500 * 4);
}

#[test]
fn ber_points_are_consistent_and_reproducible() {
    let p = ber_problem(10, Requirement::Qod { chi: db_to_linear(3.0) });
    let mc = McConfig::new(1000, 2);
    let pts = mc_ber(&p, &[0.0, 10.0], &mc).unwrap();
    for pt in &pts {
        let (ber, sep) = (pt.ber.unwrap().value, pt.sep.unwrap().value);
        assert!(ber <= sep && sep <= 3.0 * ber, "{ber} {sep}");
        assert!(pt.sep_lower <= pt.sep_upper);
        let s = pt.sep.unwrap();
        assert!(s.value >= pt.sep_lower - 3.0 * s.stderr - 1e-12);
        assert!(s.value <= pt.sep_upper + 3.0 * s.stderr + 1e-12);
    }
    assert!(pts[1].sep.unwrap().value < pts[0].sep.unwrap().value);
    assert_eq!(pts, mc_ber(&p, &[0.0, 10.0], &mc).unwrap());
}

#[test]
fn infeasible_designs_are_flagged_not_zeroed() {
    let p = ber_problem(4, Requirement::Qos { gammas: vec![db_to_linear(40.0); 4] });
    assert_eq!(design_qos(&p).unwrap().status, DesignStatus::Infeasible);
    let pts = mc_ber(&p, &[5.0], &McConfig::new(1000, 0)).unwrap();
    assert_eq!(pts[0].status, PointStatus::Infeasible);
    assert!(pts[0].ber.is_none());
    assert_eq!(pts[0].infeasible_designs, BER_SYMBOL_DRAWS);
}

/// `Var(f^H r~)` for Gaussian `r` with covariance `sigma`, from the arcsine law
/// `E[r~ r~^H]_ij = (4/pi)(asin Re rho_ij + j asin Im rho_ij)`.
fn arcsine_variance(f: &CVector, sigma: &CMatrix) -> f64 {
    let n = f.len();
    let c = CMatrix::from_fn(n, n, |i, j| {
        let rho = sigma[(i, j)] / (sigma[(i, i)].re * sigma[(j, j)].re).sqrt();
        Complex64::new(rho.re.clamp(-1.0, 1.0).asin(), rho.im.clamp(-1.0, 1.0).asin())
            * (4.0 / std::f64::consts::PI)
    });
    f.dotc(&(&c * f)).re
}

#[test]
fn quantized_outputs_follow_the_arcsine_law() {
    // Strong clutter so that the linearized closed form is visibly off while
    // the exact law still holds.
    let cfg = small_scene(8, 16);
    let (x, f, ch) = matched(&cfg, Resolution::OneBit);
    let mut sigma0 = CMatrix::identity(ch.n_rx(), ch.n_rx()) * Complex64::from(cfg.radar_noise_power);
    for (pair, p) in ch.clutter.iter().zip(cfg.clutter_powers()) {
        let e = pair.apply(&x.x);
        sigma0 += &e * e.adjoint() * Complex64::from(p);
    }
    let e0 = ch.target.apply(&x.x);
    let sigma1 = &sigma0 + &e0 * e0.adjoint() * Complex64::from(cfg.target_power());
    let est = mc_qscnr(&x, &f, &ch, &cfg, Resolution::OneBit, &McConfig::new(40_000, 12)).unwrap();
    let (v0, v1) = (arcsine_variance(&f.f, &sigma0), arcsine_variance(&f.f, &sigma1));
    assert!(est.var_h0.covers(v0, 3.0), "{:?} vs {v0}", est.var_h0);
    assert!(est.var_h1.covers(v1, 3.0), "{:?} vs {v1}", est.var_h1);
    let linearized = 2.0 * f.f.norm_squared() + crate::radar::clutter_spread(&f, &x, &ch, &cfg);
    assert!((linearized - v0).abs() > 3.0 * est.var_h0.stderr, "scene no longer exercises the nonlinearity");
}
