use flipkljn_core::harness::*;
use flipkljn_core::noise::NoiseEnvironment;
use flipkljn_core::protocol::*;

fn config(scheme: Scheme, detector: DetectorKind, n: usize, exchanges: u64, seed: u64) -> ExperimentConfig {
    let env = NoiseEnvironment::with_alpha(10.0).unwrap();
    let protocol = ProtocolConfig::new(scheme, detector, ThresholdSet::mirrored(1.35, 3.25), n);
    let mut c = ExperimentConfig::new(env, protocol, exchanges, seed);
    c.shard_len = MIN_SHARD_LEN;
    c
}

fn strip(mut r: ExperimentReport) -> ExperimentReport {
    r.elapsed_secs = 0.0;
    r.workers = 0;
    r.config.workers = 0;
    r
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let mut c = config(Scheme::FlipKljn, DetectorKind::Jvcd, 20, 45_000, 99);
    c.eve = EveModel::StateTracking;
    c.workers = 1;
    let a = strip(run_trials(&c).unwrap());
    c.workers = 4;
    let b = strip(run_trials(&c).unwrap());
    c.workers = 1;
    c.master_seed = 100;
    let d = strip(run_trials(&c).unwrap());
    assert_eq!(a, b);
    assert_ne!(a.totals, d.totals);
}

#[test]
fn classical_noiseless_keeps_half() {
    let mut c = config(Scheme::ClassicalKljn, DetectorKind::VoltageOnly, 10, 100_000, 1);
    c.protocol.estimates = EstimateMode::Exact;
    let r = run_trials(&c).unwrap();
    let sigma = (0.25f64 / 100_000.0).sqrt();
    assert!((r.accepted_fraction - 0.5).abs() < 3.0 * sigma, "{}", r.accepted_fraction);
    assert_eq!(r.ber, Some(0.0));
    assert!((r.discarded_percentage - 100.0 * (1.0 - r.accepted_fraction)).abs() < 1e-12);
}

#[test]
fn classical_eve_reads_non_intermediate_levels() {
    let mut c = config(Scheme::ClassicalKljn, DetectorKind::VoltageOnly, 10, 10_000, 1);
    c.protocol.estimates = EstimateMode::Exact;
    c.eve = EveModel::LevelClassifier;
    let r = run_trials(&c).unwrap();
    assert_eq!(r.eve_accuracy_nonintermediate, Some(1.0));
    // intermediate exchanges score one half
    let overall = r.eve_accuracy_overall.unwrap();
    assert!((overall - 0.75).abs() < 0.02, "{overall}");
}

#[test]
fn flip_state_occupancy_is_balanced() {
    let mut c = config(Scheme::FlipKljn, DetectorKind::VoltageOnly, 200, 200_000, 4);
    c.eve = EveModel::StateAssuming(MapState::Normal);
    let r = run_trials(&c).unwrap();
    assert!((r.state_occupancy.alice_normal - 0.5).abs() < 0.02);
    let acc = r.eve_accuracy_nonintermediate.unwrap();
    assert!((acc - 0.5).abs() < 0.02, "{acc}");
}

#[test]
fn flip_is_never_better_than_classical() {
    for n in [15, 40] {
        let f = run_trials(&config(Scheme::FlipKljn, DetectorKind::VoltageOnly, n, 100_000, 3)).unwrap();
        let k = run_trials(&config(Scheme::ClassicalKljn, DetectorKind::VoltageOnly, n, 100_000, 3)).unwrap();
        let (fb, kb) = (f.ber.unwrap(), k.ber.unwrap());
        let sigma = f.ber_batch_sigma.unwrap().hypot(k.ber_batch_sigma.unwrap());
        assert!(fb >= kb - 2.0 * sigma, "N={n}: flip {fb} classical {kb}");
    }
}

#[test]
fn episode_statistics_match_record_scan() {
    let c = config(Scheme::FlipKljn, DetectorKind::VoltageOnly, 15, 10_000, 8);
    let r = run_trials(&c).unwrap();
    let cfg = c.resolve().unwrap();
    let mut s = Session::default();
    let records: Vec<ExchangeRecord> = (0..10_000)
        .map(|k| s.run_exchange(&cfg.env, &cfg.protocol, &ExchangeContext::new(8, 0, k)))
        .collect();
    assert_eq!(mismatch_episode_stats(&records), r.episodes);
    assert!(r.episodes.count > 100);
}

#[test]
fn optimize_choice_resolves() {
    let mut c = config(Scheme::FlipKljn, DetectorKind::VoltageOnly, 100, 10_000, 8);
    c.thresholds = ThresholdChoice::Optimize;
    let r = run_trials(&c).unwrap();
    let t = r.config.protocol.thresholds;
    assert!((t.beta - 1.31637).abs() < 1e-3);
    assert_eq!((t.eta, t.xi), (t.beta, t.kappa));
    assert!(r.analytic_pb.is_some());
}
