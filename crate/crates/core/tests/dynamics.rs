use std::f64::consts::PI;

use torusflow::charfn::{displacement_sq, Convention};
use torusflow::commensura::{periodicity_base, Frequency};
use torusflow::dynamics::*;
use torusflow::flow::{CountableState, CountableTorus, FrequencyFunction, FrequencySequence, RadiiRule};
use torusflow::measure::{DensityMeasure, Interval, Measure};
use torusflow::profile::AmplitudeProfile;

fn unit_state(n: usize) -> CountableState {
    CountableState::at_zero_phase(CountableTorus::new(vec![1.0; n], 0.0).unwrap())
}

#[test]
fn three_irrational_oscillators_return() {
    let l = [1.0, 2f64.sqrt(), 3f64.sqrt()];
    let eps = 0.05 * 3f64.sqrt();
    let rep = recurrence_search(&unit_state(3), &l, &RecurrenceOptions::new(eps, 10.0, 1e4)).unwrap();
    assert_eq!(rep.verdict, RecurrenceVerdict::ReturnsFound);
    let first = rep.return_times[0];
    // independent check of the reported distance
    let direct: f64 = l.iter().map(|x| 4.0 * (0.5 * x * first.t).sin().powi(2)).sum::<f64>().sqrt();
    assert!((direct - first.distance).abs() < 1e-12);
    assert!(first.t > 10.0 && first.distance < eps);
    // first return after t = 10, located by a brute-force scan in a separate script
    assert!((first.t - 1759.36).abs() < 0.05, "{}", first.t);
}

#[test]
fn returns_match_periodicity_base() {
    let freqs: Vec<Frequency> = ["1", "1/2", "1/3"].iter().map(|s| Frequency::parse(s).unwrap()).collect();
    let period = periodicity_base(&freqs).unwrap().period();
    let l: Vec<f64> = freqs.iter().map(Frequency::value).collect();
    let s = CountableState::at_zero_phase(CountableTorus::new(vec![0.3, 2.0, 1.1], 0.0).unwrap());
    let rep = recurrence_search(&s, &l, &RecurrenceOptions::new(1e-6, 1.0, period + 1.0)).unwrap();
    assert_eq!(rep.return_times.len(), 1);
    assert!((rep.return_times[0].t - period).abs() < 1e-6);
}

#[test]
fn rule_based_recurrence_picks_prefix_by_tail() {
    let freqs = FrequencySequence::Linear { scale: Frequency::integer(1) };
    let radii = RadiiRule::Geometric { a: 1.0, q: 0.5 };
    let rep = recurrence_search_rule(&freqs, &radii, &RecurrenceOptions::new(1e-3, 1.0, 7.0)).unwrap();
    assert!(rep.tail_energy_bound < 1e-6 / 8.0);
    assert!((rep.return_times[0].t - 2.0 * PI).abs() < 1e-6);
}

#[test]
fn type_one_period_is_a_return() {
    let seq = FrequencySequence::Linear { scale: Frequency::parse("3/2").unwrap() };
    let radii = RadiiRule::Explicit { radii: (1..=8).map(|k| 1.0 / k as f64).collect(), tail_energy_bound: 0.0 };
    let c = classify_trajectory(&seq, &[2, 4, 8], &radii).unwrap();
    let TrajectoryKind::TypeI { period, stable: true } = c.kind else { panic!("{c:?}") };
    let torus = radii.prefix(8).unwrap();
    let l = seq.values(8).unwrap();
    let rep = recurrence_search(&CountableState::at_zero_phase(torus), &l, &RecurrenceOptions::new(1e-9, 0.5 * period, 1.5 * period)).unwrap();
    assert!((rep.return_times[0].t - period).abs() < 1e-8);
}

#[test]
fn classification_is_scale_invariant() {
    let radii = RadiiRule::Geometric { a: 1.0, q: 0.9 };
    let base = FrequencySequence::Explicit {
        values: ["2", "3", "5"].iter().map(|s| Frequency::parse(s).unwrap()).collect(),
    };
    let scaled = FrequencySequence::Explicit {
        values: ["14/3", "7", "35/3"].iter().map(|s| Frequency::parse(s).unwrap()).collect(),
    };
    let a = classify_trajectory(&base, &[2, 3], &radii).unwrap();
    let b = classify_trajectory(&scaled, &[2, 3], &radii).unwrap();
    match (a.kind, b.kind) {
        (TrajectoryKind::TypeI { period: p, .. }, TrajectoryKind::TypeI { period: q, .. }) => {
            assert!((q - p * 3.0 / 7.0).abs() < 1e-12)
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn certificate_survives_dense_scan() {
    for mu in [Measure::uniform(0.0, 1.0, 1.0), Measure::uniform(-2.0, 3.0, 0.5), Measure::bernoulli(0.3).unwrap()] {
        for conv in [Convention::Angular, Convention::Cyclic] {
            let Some(c) = wandering_certificate(&mu, 0.01, conv, None).unwrap() else { continue };
            let n = 20_000;
            for i in 0..=n {
                let t = c.t * (1.0 + 9.0 * i as f64 / n as f64);
                let d = displacement_sq(&mu, t, conv).unwrap();
                assert!(d >= c.delta * c.delta - 1e-9, "{} at t={t}: {d}", mu.label());
            }
        }
    }
}

#[test]
fn bernoulli_third_passes_sigma_scan() {
    let w = SampleWindow { t_lo: 1e3, t_hi: 1e4, samples: 1000 };
    let r = sigma_condition_scan(&Measure::bernoulli(1.0 / 3.0).unwrap(), 4, 0.05, w, Convention::Angular).unwrap();
    assert_eq!(r.verdict, SigmaVerdict::HoldsOnFamily, "{r:?}");
}

#[test]
fn sine_gordon_is_not_periodic() {
    let rep = nonperiodicity_check_ac(
        &DensityMeasure::uniform(0.0, 1.0, 1.0),
        &FrequencyFunction::SineGordon { m: 1.0 },
        Interval::new(0.0, 1.0),
        &AmplitudeProfile::unit(),
        &[1.0, 2.5, PI],
        200,
    )
    .unwrap();
    assert!(rep.all_pass, "{rep:?}");
}

#[test]
fn weyl_discrepancy_shrinks_for_irrational_pair() {
    let pair = [1.0, 2f64.sqrt()];
    let coarse = weyl_discrepancy(&pair, 1_000, 16).unwrap();
    let fine = weyl_discrepancy(&pair, 100_000, 16).unwrap();
    assert!(fine * 2.0 <= coarse, "{coarse} -> {fine}");
    for s in [1_000, 100_000] {
        assert!(weyl_discrepancy(&[1.0, 2.0], s, 16).unwrap() >= 0.2);
    }
}
