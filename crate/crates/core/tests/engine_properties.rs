use handwash_core::engine::*;
use handwash_core::pipeline::{smooth, MajoritySmoother};
use handwash_core::MovementClass::{self, *};
use proptest::prelude::*;

fn movement() -> impl Strategy<Value = MovementClass> {
    (0..8usize).prop_map(|i| MovementClass::ALL[i])
}

fn small_config() -> ComplianceConfig {
    ComplianceConfig::with_requirements(3.0, &[(PalmToPalm, 1.0), (PalmOverDorsum, 1.0)])
}

proptest! {
    #[test]
    fn fold_matches_reference(
        labels in prop::collection::vec((movement(), (1u32..=40).prop_map(|k| k as f64 * 0.1)), 0..30),
    ) {
        for cfg in [ComplianceConfig::default(), small_config()] {
            let (expected, _) = reference_verdict(&labels, &cfg);
            prop_assert_eq!(fold_verdict(&labels, &cfg).unwrap(), expected);
        }
    }

    #[test]
    fn ledger_is_conserved(
        ticks in prop::collection::vec((movement(), 0.001..0.5f64), 1..400),
    ) {
        let mut engine = Engine::new(small_config()).unwrap();
        let mut t = 0.0;
        let mut credited = [0.0f64; 8];
        let mut prev_seconds = [0.0f64; 8];
        let mut quantum: f64 = 0.0;
        for (i, &(m, dt)) in ticks.iter().enumerate() {
            t += dt;
            if i > 0 {
                credited[m.index()] += dt;
                quantum = quantum.max(dt);
            }
            engine.tick(Observation::washing(m, t)).unwrap();
            let snap = engine.snapshot();
            let ledger = snap.ledger;
            prop_assert!((ledger.total_s() - snap.episode_elapsed_s).abs() <= quantum.max(1e-9));
            for k in MovementClass::ALL {
                let s = ledger.seconds(k);
                prop_assert!(s >= prev_seconds[k.index()]);
                prop_assert!((s - credited[k.index()]).abs() < 1e-9);
                prev_seconds[k.index()] = s;
            }
            let washing: f64 = MovementClass::WASHING.iter().map(|&k| ledger.seconds(k)).sum();
            prop_assert!((ledger.total_active_s() - washing).abs() < 1e-9);
        }
        let report = engine.finalize(t + 0.1).unwrap();
        let active: f64 = MovementClass::WASHING.iter().map(|&k| credited[k.index()]).sum();
        prop_assert!((report.total_active_s - active).abs() < 1e-9);
    }

    #[test]
    fn smoothed_label_comes_from_the_window(
        labels in prop::collection::vec(movement(), 1..200),
        window in 1usize..20,
    ) {
        let mut smoother = MajoritySmoother::new(window);
        for (i, &l) in labels.iter().enumerate() {
            let out = smoother.push(l);
            let recent = &labels[i.saturating_sub(window - 1)..=i];
            prop_assert!(recent.contains(&out));
            prop_assert_eq!(Some(out), smooth(recent));
            let best = MovementClass::ALL.iter().map(|m| recent.iter().filter(|x| *x == m).count()).max().unwrap();
            prop_assert_eq!(recent.iter().filter(|&&x| x == out).count(), best);
        }
    }

    #[test]
    fn snapshot_poll_mirrors_state(
        ticks in prop::collection::vec((movement(), any::<bool>(), 0.01..1.0f64), 1..100),
    ) {
        let mut engine = Engine::new(small_config()).unwrap();
        let mut t = 0.0;
        for (m, on, dt) in ticks {
            t += dt;
            let obs = if on { Observation::washing(m, t) } else { Observation::off(t) };
            engine.tick(obs).unwrap();
            let (washing, code) = engine.poll();
            prop_assert_eq!(washing, engine.episode_open());
            prop_assert_eq!(code, if washing { m.code() } else { 0 });
        }
    }
}

#[test]
fn report_lists_missing_movements() {
    let labels = [(PalmToPalm, 2.0), (ThumbRub, 2.0)];
    let cfg = small_config();
    let (verdict, ledger) = reference_verdict(&labels, &cfg);
    assert_eq!(verdict, Verdict::Failed);
    assert_eq!(ledger.seconds(PalmOverDorsum), 0.0);

    let mut engine = Engine::new(cfg).unwrap();
    for obs in observations_for(&labels, 0.0, 0.05) {
        engine.tick(obs).unwrap();
    }
    assert_eq!(engine.state(), EngineState::Waiting);
    let mut engine = Engine::new(small_config()).unwrap();
    let obs = observations_for(&labels, 0.0, 0.05);
    for o in &obs[..obs.len() - 1] {
        engine.tick(*o).unwrap();
    }
    let report = engine.finalize(10.0).unwrap();
    assert_eq!(report.missing_codes(), vec![PalmOverDorsum]);
    assert_eq!(report.verdict, Verdict::Failed);
}
