use approx::assert_relative_eq;

use private_twentyq::bounds::query_bound;
use private_twentyq::channel::{Channel, ChannelConstants, HFunction};
use private_twentyq::harness::config::ExperimentConfig;
use private_twentyq::harness::simulate;
use private_twentyq::procedure::{default_thresholds, ProcedureConfig};

/// Every quantity for the crossover-0.1 channel at `L = 2`, `M = 32`, written
/// out from the binary symmetric closed forms.
#[test]
fn query_bound_terms_by_hand() {
    let q: f64 = 0.1;
    let c = 2f64.ln() + q * q.ln() + (1.0 - q) * (1.0 - q).ln();
    let up = (2.0 * (1.0 - q)).ln();
    let b = (0.9 * up * up / c).min(up);
    let d = 0.8 * 9f64.ln();
    let b_test = 9f64.ln();
    // log 2 = C·N − log log N has no root beyond e here, so N† = e
    let (l1, l2, a) = (2f64.ln(), 2f64.ln() + 1.0, 1f64);
    let eps_prime = 0.05;
    let n0 = (10.0 * (16f64.ln() / c + 20f64.ln() / d)).ceil();
    let e_tau = 7.0;
    let terms = [
        (l1 + b) / c,
        ((-l1).exp() + (-a).exp()) * (l2 - l1 + b) / c,
        (a + b_test) / d,
        (-l1).exp() * (a + b_test) / d,
        e_tau,
        ((-l1 + a).exp() + (-l2).exp()) * n0,
    ];
    let eps_bar = (-l1 - a).exp() + (-l2).exp() + eps_prime;

    let ch = Channel::bsc(HFunction::Constant { q }).unwrap();
    let k = ChannelConstants::compute(&ch).unwrap();
    let t = default_thresholds(2, k.capacity).unwrap();
    assert!(!t.n_dagger.exact);
    let cfg = ProcedureConfig::from_thresholds(2, 32, &t, 0.1, eps_prime, &k).unwrap();
    assert_eq!(cfg.stage2_cap as f64, n0);
    assert_eq!(cfg.eps0, 0.0);
    let bound = query_bound(&cfg, &k, e_tau);
    for (ours, theirs) in bound.terms.as_array().iter().zip(terms) {
        assert_relative_eq!(*ours, theirs, max_relative = 1e-8);
    }
    assert_relative_eq!(bound.n_bar, terms.iter().sum::<f64>(), max_relative = 1e-8);
    assert_relative_eq!(bound.eps_bar, eps_bar, max_relative = 1e-10);
    assert_eq!(bound.n, bound.n_bar);
    assert_eq!(bound.eps, bound.eps_bar);
}

#[test]
fn stop_at_zero_scales_bound() {
    let ch = Channel::bsc(HFunction::Constant { q: 0.1 }).unwrap();
    let k = ChannelConstants::compute(&ch).unwrap();
    let mut cfg = ProcedureConfig::new(2, 32, 30.0, 60.0, 10.0, 10.0, 0.05, 0.0, &k).unwrap();
    let plain = query_bound(&cfg, &k, 5.0);
    assert_relative_eq!(plain.eps_bar, 0.05, max_relative = 1e-6);
    cfg.eps0 = 0.2;
    let shared = query_bound(&cfg, &k, 5.0);
    assert_relative_eq!(shared.n, 0.8 * plain.n_bar, max_relative = 1e-12);
    assert_relative_eq!(shared.eps, 0.2 + 0.8 * plain.eps_bar, max_relative = 1e-12);
}

#[test]
fn noiseless_test_terms_saturate() {
    let k = ChannelConstants::compute(&Channel::noiseless()).unwrap();
    let cfg = ProcedureConfig::new(2, 16, 5.0, 10.0, 3.0, 3.0, 0.05, 0.0, &k).unwrap();
    let bound = query_bound(&cfg, &k, 4.0);
    assert!(bound.saturated);
    // one symbol decides the noiseless test
    assert!((bound.terms.test_accept - 1.0).abs() < 1e-6);
    assert!(bound.terms.test_reject < bound.terms.test_accept);
    assert!(bound.terms.as_array().iter().all(|t| t.is_finite() && *t >= 0.0));
}

/// Mean queries order the same way as the bound across privacy levels.
#[test]
fn levels_order_matches_bound() {
    let mut means = Vec::new();
    let mut bounds = Vec::new();
    for levels in [2u32, 4, 8] {
        let cfg = ExperimentConfig::from_toml(&format!(
            "[experiment]\ntrials = 3000\nmaster_seed = 11\n\n[channel]\nkind = \"bsc\"\nh = {{ type = \"constant\", q = 0.1 }}\n\n[procedure]\nlevels = {levels}\ntotal_bins = {}\n",
            8 * levels
        ))
        .unwrap();
        let sim = simulate(&cfg).unwrap();
        assert!(sim.aggregate.mean_tau_total <= 1.05 * sim.bound.n);
        means.push(sim.aggregate.mean_tau_total);
        bounds.push(sim.bound.n);
    }
    assert!(means.windows(2).all(|w| w[0] < w[1]), "{means:?}");
    assert!(bounds.windows(2).all(|w| w[0] < w[1]), "{bounds:?}");
}
