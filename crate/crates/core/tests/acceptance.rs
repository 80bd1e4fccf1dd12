//! End-to-end acceptance suite. Runs without the libtest harness so that
//! every criterion prints one PASS/FAIL line under a plain `cargo test`.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torusflow::charfn::{
    bernoulli_ceiling, bernoulli_product, charfn, displacement_sq, log_grid, Convention, BERNOULLI_TOL,
};
use torusflow::commensura::{jacobi_classify, Frequency, JacobiClass, DEFAULT_HEIGHT};
use torusflow::dynamics::{
    classify_trajectory, nonperiodicity_check_ac, sigma_condition_scan, weyl_discrepancy, Confidence,
    RecurrenceVerdict, SampleWindow, SigmaVerdict, TrajectoryKind,
};
use torusflow::flow::{
    symplectic_form, symplectic_gram, CountableState, CountableTorus, FlowTime, FrequencyFunction,
    FrequencySequence, RadiiRule,
};
use torusflow::measure::{DensityMeasure, Interval, Measure};
use torusflow::profile::AmplitudeProfile;
use torusflow::scenario::{parse_scenario, run_scenario, AnalysisResult};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($fmt)+));
        }
    };
}

fn scenario(name: &str) -> Result<AnalysisResult, String> {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", &format!("{name}.json")]
        .iter()
        .collect();
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let file = parse_scenario(&text).map_err(|e| format!("{name}: {e}"))?;
    Ok(run_scenario(&file).map_err(|e| format!("{name}: {e}"))?.result)
}

fn freqs(list: &[&str]) -> Vec<Frequency> {
    list.iter().map(|s| Frequency::parse(s).unwrap()).collect()
}

fn sinc_oracle() -> Outcome {
    let mut worst = 0.0_f64;
    for t in [0.1, 0.3, 1.7, 10.0, 50.0] {
        let w = 2.0 * PI * t;
        let oracle = w.sin() / w;
        let p = bernoulli_product(0.5, t, BERNOULLI_TOL).map_err(|e| e.to_string())?;
        let z = charfn(&Measure::bernoulli(0.5).unwrap(), t, Convention::Cyclic).map_err(|e| e.to_string())?;
        worst = worst.max((p.value - oracle).abs()).max((z - oracle).norm());
    }
    ensure!(worst <= 1e-8, "max error {worst:e}");
    Ok(format!("max |error| {worst:.1e}"))
}

fn bernoulli_ceiling_holds() -> Outcome {
    let mut notes = Vec::new();
    for eta in [0.3, 1.0 / 3.0, 0.4] {
        let mu = Measure::bernoulli(eta).unwrap();
        let ceiling = bernoulli_ceiling(eta);
        let grid = log_grid(0.5 / eta + 1.0, 1e4, 10_000);
        let mut sup = 0.0_f64;
        for &t in &grid {
            sup = sup.max(charfn(&mu, t, Convention::Cyclic).map_err(|e| e.to_string())?.norm());
        }
        ensure!(sup <= ceiling + 1e-9, "eta {eta}: sup {sup} above ceiling {ceiling}");
        notes.push(format!("η={eta:.3}: {sup:.4} ≤ {ceiling:.4}"));
    }
    Ok(notes.join(", "))
}

fn displacement_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let n = rng.gen_range(1..=16);
        let lambdas: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let u: Vec<Complex64> = (0..n)
            .map(|_| Complex64::from_polar(rng.gen_range(0.05..2.0), rng.gen_range(0.0..2.0 * PI)))
            .collect();
        let mu = Measure::atomic(lambdas.iter().zip(&u).map(|(l, z)| (*l, z.norm_sqr()))).unwrap();
        for _ in 0..100 {
            let t = rng.gen_range(-100.0..100.0);
            // Σ |u_k e^{itλ_k} - u_k|² straight from the complex amplitudes
            let direct: f64 = lambdas
                .iter()
                .zip(&u)
                .map(|(l, z)| (z * Complex64::from_polar(1.0, t * l) - z).norm_sqr())
                .sum();
            let formula = displacement_sq(&mu, t, Convention::Angular).map_err(|e| e.to_string())?;
            worst = worst.max((direct - formula).abs());
        }
    }
    ensure!(worst <= 1e-10, "max error {worst:e}");
    Ok(format!("5000 draws, max |error| {worst:.1e}"))
}

fn wandering_dichotomy() -> Outcome {
    let AnalysisResult::Wander { certificate } = scenario("uniform-density")? else {
        return Err("uniform-density: not a wander result".into());
    };
    let cert = certificate.ok_or("uniform-density: no certificate")?;
    ensure!(cert.delta == 1.0 && cert.t == 4.0, "certificate δ={} T={}", cert.delta, cert.t);
    let mu = Measure::uniform(0.0, 1.0, 1.0);
    let mut lowest = f64::INFINITY;
    for i in 0..=36_000 {
        let t = 4.0 + i as f64 * 1e-3;
        let d = displacement_sq(&mu, t, cert.convention).map_err(|e| e.to_string())?.sqrt();
        // closed form for the uniform density: 2 - 2 sin t / t
        let closed = (2.0 - 2.0 * t.sin() / t).sqrt();
        ensure!((d - closed).abs() < 1e-9, "t={t}: quadrature {d} vs closed form {closed}");
        lowest = lowest.min(d);
    }
    ensure!(lowest >= 1.0 - 1e-9, "dense scan dips to {lowest}");

    let AnalysisResult::Recur { report } = scenario("three-irrational-oscillators")? else {
        return Err("three-irrational-oscillators: not a recur result".into());
    };
    ensure!(report.verdict == RecurrenceVerdict::ReturnsFound, "no return within horizon");
    let first = report.return_times[0];
    let l = [1.0, 2f64.sqrt(), 3f64.sqrt()];
    let direct = l.iter().map(|x| 4.0 * (0.5 * x * first.t).sin().powi(2)).sum::<f64>().sqrt();
    let bound = 0.05 * 3f64.sqrt();
    ensure!(
        first.t > 10.0 && first.t <= 1e4 && direct < bound,
        "return at t={} with distance {direct}",
        first.t
    );
    Ok(format!(
        "δ=1 T=4, scan min {lowest:.4}; first return t={:.4} at distance {direct:.4} < {bound:.4}",
        first.t
    ))
}

fn taxonomy() -> Outcome {
    let unit = RadiiRule::Geometric { a: 1.0, q: 0.5 };
    let linear = FrequencySequence::Linear { scale: Frequency::integer(1) };
    let c = classify_trajectory(&linear, &[2, 5, 10, 20], &unit).map_err(|e| e.to_string())?;
    let TrajectoryKind::TypeI { period, stable: true } = c.kind else {
        return Err(format!("λ_k = k: {:?}", c.kind));
    };
    ensure!((period - 2.0 * PI).abs() < 1e-12, "λ_k = k: period {period}");

    let factorial = FrequencySequence::Factorial { scale: Frequency::integer(1) };
    let radii = RadiiRule::Power { a: 1.0, s: 1.0 };
    let run = || classify_trajectory(&factorial, &[3, 4, 5, 6], &radii).map_err(|e| e.to_string());
    let c = run()?;
    ensure!(c.kind == TrajectoryKind::TypeIII, "λ_k = 1/k!: {:?}", c.kind);
    ensure!(c.confidence == Confidence::Exact, "λ_k = 1/k!: {:?}", c.confidence);
    let mut nfact = 1u64;
    for (n, p) in (3..=6).zip(&c.prefix_periods) {
        nfact = (1..=n).product();
        let base = p.base.as_ref().ok_or("missing exact base")?;
        ensure!(
            base.lambda0 == BigRational::new(1.into(), BigInt::from(nfact)),
            "N={n}: λ₀ = {}",
            base.lambda0
        );
        ensure!((p.period / (2.0 * PI * nfact as f64) - 1.0).abs() < 1e-12, "N={n}: period {}", p.period);
    }
    let again = run()?;
    ensure!(
        serde_json::to_string(&c).unwrap() == serde_json::to_string(&again).unwrap(),
        "repeated classification differs"
    );

    let mixed = FrequencySequence::Explicit { values: freqs(&["1", "sqrt2", "1/2"]) };
    let ones = RadiiRule::Explicit { radii: vec![1.0; 3], tail_energy_bound: 0.0 };
    let c = classify_trajectory(&mixed, &[3], &ones).map_err(|e| e.to_string())?;
    let TrajectoryKind::TypeII { pair, .. } = &c.kind else {
        return Err(format!("(1, √2, 1/2): {:?}", c.kind));
    };
    ensure!(*pair == (1, 2), "(1, √2, 1/2): pair {pair:?}");
    Ok(format!("TypeI 2π; TypeIII up to 2π·{nfact}; TypeII pair {pair:?}"))
}

fn jacobi() -> Outcome {
    let c = jacobi_classify(&freqs(&["2", "3"]), DEFAULT_HEIGHT).map_err(|e| e.to_string())?;
    ensure!(matches!(c, JacobiClass::PeriodicAll { .. }), "{{2,3}}: {c:?}");
    let c = jacobi_classify(&freqs(&["1", "sqrt(2)"]), 1_000_000).map_err(|e| e.to_string())?;
    ensure!(
        matches!(c, JacobiClass::DenseOnTorus { height: 1_000_000, .. }),
        "{{1,√2}}: {c:?}"
    );
    let disc = weyl_discrepancy(&[1.0, 2f64.sqrt()], 100_000, 16).map_err(|e| e.to_string())?;
    ensure!(disc <= 0.02, "discrepancy {disc}");
    let c = jacobi_classify(&freqs(&["1", "sqrt(2)", "1+sqrt(2)"]), DEFAULT_HEIGHT).map_err(|e| e.to_string())?;
    let JacobiClass::ResonantMixed { witness: Some(w), .. } = &c else {
        return Err(format!("{{1,√2,1+√2}}: {c:?}"));
    };
    ensure!(w.exact, "witness not exact: {w:?}");
    // n₀·1 + n₁·√2 + n₂·(1+√2) = 0 splits into rational and √2 parts
    let n = w.dense(3);
    ensure!(
        n.iter().any(|x| *x != BigInt::from(0)) && &n[0] + &n[2] == BigInt::from(0) && &n[1] + &n[2] == BigInt::from(0),
        "witness {n:?} does not vanish"
    );
    Ok(format!("discrepancy {disc:.4}; witness {:?}", n.iter().map(ToString::to_string).collect::<Vec<_>>()))
}

fn sigma_scan() -> Outcome {
    let window = SampleWindow { t_lo: 1e3, t_hi: 1e4, samples: 1000 };
    let r = sigma_condition_scan(&Measure::uniform(0.0, 1.0, 1.0), 6, 0.5, window, Convention::Angular)
        .map_err(|e| e.to_string())?;
    ensure!(r.verdict == SigmaVerdict::HoldsOnFamily, "uniform: {:?}", r.verdict);
    let atom = Measure::atomic([(1.0, 1.0)]).unwrap();
    let a = sigma_condition_scan(&atom, 6, 0.5, window, Convention::Angular).map_err(|e| e.to_string())?;
    let SigmaVerdict::FailsOnSet { cell, .. } = &a.verdict else {
        return Err(format!("atom: {:?}", a.verdict));
    };
    ensure!(cell.lo <= 1.0 && 1.0 < cell.hi, "failing cell {cell:?} misses the atom");
    Ok(format!("uniform holds on {} cells; atom fails on [{}, {})", r.cells_tested, cell.lo, cell.hi))
}

/// Composite Simpson rule for `∫_0^1 4 sin²(Tmλ(k)/2) dk`.
fn displacement_simpson(lambda: impl Fn(f64) -> f64, omega: f64) -> f64 {
    let n = 20_000;
    let h = 1.0 / n as f64;
    let f = |k: f64| 4.0 * (0.5 * omega * lambda(k)).sin().powi(2);
    let mut s = f(0.0) + f(1.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

fn ac_nonperiodicity() -> Outcome {
    let rho = DensityMeasure::uniform(0.0, 1.0, 1.0);
    let periods = [1.0, 2.5, PI];
    let mut notes = Vec::new();
    for (name, lambda) in [
        ("λ=k", FrequencyFunction::Identity),
        ("λ=√(1+k²)", FrequencyFunction::SineGordon { m: 1.0 }),
    ] {
        let rep = nonperiodicity_check_ac(&rho, &lambda, Interval::new(0.0, 1.0), &AmplitudeProfile::unit(), &periods, 200)
            .map_err(|e| e.to_string())?;
        ensure!(rep.m_range == (100, 200), "m range {:?}", rep.m_range);
        for t in &rep.tests {
            let oracle = (100..=200)
                .map(|m| displacement_simpson(|k| lambda.value(k), t.t * m as f64))
                .fold(f64::INFINITY, f64::min);
            ensure!((t.min_displacement - oracle).abs() < 1e-6, "{name} T={}: {} vs {oracle}", t.t, t.min_displacement);
            ensure!(t.pass && t.min_displacement >= 0.5 * rep.weighted_mass, "{name} T={}: {t:?}", t.t);
        }
        let min = rep.tests.iter().map(|t| t.min_displacement).fold(f64::INFINITY, f64::min);
        notes.push(format!("{name}: min D {min:.3} ≥ 0.5"));
    }
    Ok(notes.join(", "))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for draw in 0..1000 {
        let n = rng.gen_range(1..=16);
        let radii: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..2.0)).collect();
        let lambdas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
        let torus = CountableTorus::new(radii, 0.0).unwrap();
        let mut phases = || (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect::<Vec<f64>>();
        let a = CountableState::new(torus.clone(), &phases()).unwrap();
        let b = CountableState::new(torus, &phases()).unwrap();
        let t = FlowTime::new(rng.gen_range(-1e3..1e3)).unwrap();
        let s = FlowTime::new(rng.gen_range(-1e3..1e3)).unwrap();
        let at = a.evolve_ticks(&lambdas, t).unwrap();
        let bt = b.evolve_ticks(&lambdas, t).unwrap();

        let (e0, e1) = (a.energy(&lambdas).unwrap(), at.energy(&lambdas).unwrap());
        ensure!(rel_close(e0, e1, 1e-12), "draw {draw}: energy {e0} -> {e1}");
        for (x, y) in a.realize().actions().iter().zip(at.realize().actions()) {
            ensure!(rel_close(*x, y, 1e-12), "draw {draw}: action {x} -> {y}");
        }
        let (d0, d1) = (a.distance(&b).unwrap(), at.distance(&bt).unwrap());
        ensure!(rel_close(d0, d1, 1e-12), "draw {draw}: distance {d0} -> {d1}");

        let composed = at.evolve_ticks(&lambdas, s).unwrap();
        let direct = a.evolve_ticks(&lambdas, t + s).unwrap();
        ensure!(composed.phases == direct.phases, "draw {draw}: group law");
        let back = at.evolve_ticks(&lambdas, -t).unwrap();
        ensure!(back.phases == a.phases, "draw {draw}: reversibility");
    }
    Ok("1000 draws".into())
}

fn symplectic() -> Outcome {
    let n = 16;
    let gram = symplectic_gram(n);
    // order g_1, f_1, …: ω(g_j, f_k) = δ_jk, ω(g, g) = ω(f, f) = 0
    for (a, row) in gram.iter().enumerate() {
        for (b, &w) in row.iter().enumerate() {
            let expect = match (a % 2, b % 2) {
                (0, 1) if a / 2 == b / 2 => 1.0,
                (1, 0) if a / 2 == b / 2 => -1.0,
                _ => 0.0,
            };
            ensure!(w == expect, "ω(b_{a}, b_{b}) = {w}, expected {expect}");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut v = || -> Vec<Complex64> {
        (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    };
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let (x, y) = (v(), v());
        worst = worst
            .max(symplectic_form(&x, &x).unwrap().abs())
            .max((symplectic_form(&x, &y).unwrap() + symplectic_form(&y, &x).unwrap()).abs());
    }
    ensure!(worst <= 1e-12, "antisymmetry defect {worst:e}");
    Ok(format!("32×32 Gram exact; antisymmetry defect {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("bernoulli-sinc-oracle", Duration::from_secs(1), sinc_oracle),
        ("bernoulli-decay-ceiling", Duration::from_secs(10), bernoulli_ceiling_holds),
        ("displacement-identity", Duration::from_secs(60), displacement_identity),
        ("wandering-dichotomy", Duration::from_secs(60), wandering_dichotomy),
        ("trajectory-taxonomy", Duration::from_secs(60), taxonomy),
        ("jacobi-classification", Duration::from_secs(30), jacobi),
        ("sigma-condition-scan", Duration::from_secs(30), sigma_scan),
        ("ac-nonperiodicity", Duration::from_secs(30), ac_nonperiodicity),
        ("conservation-suite", Duration::from_secs(60), conservation),
        ("symplectic-identities", Duration::from_secs(60), symplectic),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > *budget => Err(format!("took {elapsed:.2?}, budget {budget:?}")),
            o => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += outcome.is_err() as usize;
        println!("{tag} [{:>2}] {name} ({:.2?}): {detail}", i + 1, elapsed);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
