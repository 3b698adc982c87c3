mod common;

use common::rng;
use modernzh_core::optimsched::{stable_adamw_step, AdamWConfig, OptimizerState, ScheduleConfig};
use proptest::prelude::*;
use rand::Rng;

fn random_config(r: &mut impl Rng) -> ScheduleConfig {
    let eta_max = 10f64.powf(r.random_range(-6.0..-1.0));
    ScheduleConfig {
        eta_max,
        eta_min: eta_max * r.random_range(0.0..0.99),
        cycles: r.random_range(1..12),
        damping_gamma: r.random_range(0.0..=1.0),
        total_steps: r.random_range(1..100_000),
        ..ScheduleConfig::default()
    }
}

#[test]
fn endpoints_for_random_configs() {
    let mut r = rng(1);
    for _ in 0..1000 {
        let cfg = random_config(&mut r);
        let start = cfg.eta(0).unwrap();
        let end = cfg.eta(cfg.total_steps).unwrap();
        assert!((start - cfg.eta_max).abs() <= 1e-12 * cfg.eta_max, "{cfg:?}");
        assert!((end - cfg.eta_min).abs() <= 1e-12 * cfg.eta_min.max(f64::MIN_POSITIVE), "{cfg:?}");
    }
}

#[test]
fn midpoint_example() {
    // Peak 4.4e-4, valley 2.25e-4, cosine term zero.
    let cfg = ScheduleConfig::damped_cosine(1000);
    assert!((cfg.eta(500).unwrap() - 3.325e-4).abs() < 1e-15);
    assert!((cfg.peak(0.5) - 4.4e-4).abs() < 1e-18);
    assert!((cfg.valley(0.5) - 2.25e-4).abs() < 1e-18);
}

fn sign_changes(cfg: &ScheduleConfig) -> usize {
    let etas: Vec<f64> = (0..=cfg.total_steps).map(|s| cfg.eta(s).unwrap()).collect();
    let signs: Vec<bool> = etas.windows(2).map(|w| w[1] > w[0]).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Interior extrema of the cosine: 2N - 2 turning points, so 2N - 1
/// monotone stretches on the open interval.
#[test]
fn extrema_count() {
    for n in 1..=8 {
        for gamma in [0.1, 0.5, 1.0] {
            let cfg = ScheduleConfig {
                cycles: n,
                damping_gamma: gamma,
                total_steps: 20_000,
                ..ScheduleConfig::default()
            };
            assert_eq!(sign_changes(&cfg), 2 * n as usize - 2, "N={n} gamma={gamma}");
        }
    }
}

/// With no damping floor the last ripple can flatten into the decay, so a
/// pair of turning points may disappear but never appear.
#[test]
fn undamped_floor_loses_at_most_turning_points() {
    for n in 1..=8 {
        let cfg = ScheduleConfig {
            cycles: n,
            damping_gamma: 0.0,
            total_steps: 20_000,
            ..ScheduleConfig::default()
        };
        let k = sign_changes(&cfg);
        assert!(k <= 2 * n as usize - 2 && k.is_multiple_of(2), "N={n}: {k}");
    }
}

#[test]
fn linear_phases() {
    let w = ScheduleConfig::warmup(1000);
    assert_eq!(w.eta(0).unwrap(), 5e-5);
    assert_eq!(w.eta(1000).unwrap(), 8e-4);
    assert!((w.eta(500).unwrap() - 4.25e-4).abs() < 1e-18);
    let s = ScheduleConfig::stage2(1000);
    assert_eq!(s.eta(0).unwrap(), 1e-4);
    assert_eq!(s.eta(1000).unwrap(), 5e-5);
    assert!((s.eta(500).unwrap() - 7.5e-5).abs() < 1e-18);
}

proptest! {
    #[test]
    fn eta_between_envelopes(
        eta_max in 1e-6f64..1e-1,
        frac in 0.0f64..0.99,
        cycles in 1u32..10,
        gamma in 0.0f64..=1.0,
        steps in 1u64..5000,
        at in 0.0f64..=1.0,
    ) {
        let cfg = ScheduleConfig {
            eta_max,
            eta_min: eta_max * frac,
            cycles,
            damping_gamma: gamma,
            total_steps: steps,
            ..ScheduleConfig::default()
        };
        let step = (at * steps as f64).round() as u64;
        let p = step as f64 / steps as f64;
        let (lo, hi) = {
            let (a, b) = (cfg.peak(p), cfg.valley(p));
            (a.min(b), a.max(b))
        };
        let eta = cfg.eta(step).unwrap();
        let slack = 1e-15 * eta_max;
        prop_assert!(eta >= lo - slack && eta <= hi + slack);
        prop_assert!(eta <= eta_max * (1.0 + 1e-15));
    }
}

/// One scalar AdamW step the textbook way.
struct Textbook {
    m: f64,
    v: f64,
    t: i32,
}

impl Textbook {
    fn step(&mut self, w: f64, g: f64, eta: f64, cfg: &AdamWConfig) -> f64 {
        self.t += 1;
        self.m = cfg.beta1 * self.m + (1.0 - cfg.beta1) * g;
        self.v = cfg.beta2 * self.v + (1.0 - cfg.beta2) * g * g;
        let m_hat = self.m / (1.0 - cfg.beta1.powi(self.t));
        let v_hat = self.v / (1.0 - cfg.beta2.powi(self.t));
        let decayed = w * (1.0 - eta * cfg.weight_decay);
        decayed - eta * m_hat / (v_hat.sqrt() + cfg.eps)
    }
}

#[test]
fn plain_config_is_textbook_adamw() {
    let cfg = AdamWConfig::plain(0.1);
    let mut state = OptimizerState::new(cfg.clone(), [("w", 1)]);
    let mut oracle = Textbook { m: 0.0, v: 0.0, t: 0 };
    let (mut w, mut w_ref) = ([0.5f64], 0.5f64);
    for k in 0..50 {
        // Gradient of (w - 3)^2 at the current point, plus a wobble.
        let g = 2.0 * (w[0] - 3.0) + (k as f64).sin();
        let eta = 1e-2;
        w_ref = oracle.step(w_ref, g, eta, &cfg);
        stable_adamw_step(&mut state, vec![("w".into(), &mut w[..])], vec![("w".into(), &[g][..])], eta).unwrap();
        assert!((w[0] - w_ref).abs() < 1e-10, "step {k}: {} vs {w_ref}", w[0]);
    }
}

/// Constant gradient and no decay: every update is at most eta.
#[test]
fn scalar_recurrence_update_bounded_by_eta() {
    let cfg = AdamWConfig {
        weight_decay: 0.0,
        ..AdamWConfig::default()
    };
    for g in [1e-6, 0.3, 1.0, 50.0, -7.0] {
        let mut state = OptimizerState::new(cfg.clone(), [("w", 1)]);
        let mut w = [0.0f64];
        let eta = 1e-3;
        for _ in 0..500 {
            let before = w[0];
            stable_adamw_step(&mut state, vec![("w".into(), &mut w[..])], vec![("w".into(), &[g][..])], eta)
                .unwrap();
            assert!((w[0] - before).abs() <= eta * (1.0 + 1e-12));
        }
    }
}
