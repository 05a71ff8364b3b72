//! Acceptance checks. Each criterion prints one PASS/FAIL line; the binary
//! exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use kautz_core::harness::report::{write_ensemble_report, write_monte_carlo_report, write_sdof_report};
use kautz_core::harness::{
    cost_model, run_ensemble_experiment, run_monte_carlo, run_sdof_experiment, EnsembleSource, ExperimentConfig,
    FilterKind,
};
use kautz_core::io::read_ensemble_dir;
use kautz_core::{
    estimate_poles, frf_to_impulse_response, impulse_response_of, lms_identify, mdof_proxy_ensemble, normalized_error,
    projection_weights, FrequencyResponse, ImpulseResponse, KautzBank, LmsConfig, MdofProxySpec, Plant, PolePair,
    PoleSet, RationalTransferFunction, TrainingEnsemble,
};
use num_complex::Complex64;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_pair(rng: &mut ChaCha8Rng, r: (f64, f64), angle: (f64, f64)) -> PolePair {
    PolePair::from_polar(rng.random_range(r.0..=r.1), rng.random_range(angle.0..angle.1)).unwrap()
}

fn gram_deviation(bank: &KautzBank, length: usize) -> f64 {
    let b = bank.basis_matrix(length);
    let g = b.transpose() * &b;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut renormalized = 0;
    for _ in 0..50 {
        let n = rng.random_range(1..=10);
        let pairs = (0..n).map(|_| random_pair(&mut rng, (0.05, 0.99), (1e-3, std::f64::consts::PI - 1e-3))).collect();
        let bank = KautzBank::new(PoleSet::new(pairs)).unwrap();
        renormalized += bank.corrections().iter().flatten().filter(|c| **c != 1.0).count();
        let length = 2 * bank.settle_length().unwrap_or(1 << 18);
        worst = worst.max(gram_deviation(&bank, length));
    }
    outcome(
        worst <= 1e-6 && renormalized == 0,
        format!("max |G - I| = {worst:.3e} over 50 banks (tolerance 1e-6), renormalized outputs = {renormalized}"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=5);
        // well separated, decaying poles
        let mut truth: Vec<PolePair> = Vec::new();
        while truth.len() < n {
            let p = random_pair(&mut rng, (0.5, 0.95), (0.1, std::f64::consts::PI - 0.1));
            if truth.iter().all(|q| (q.pole() - p.pole()).norm() > 0.1) {
                truth.push(p);
            }
        }
        let responses = (0..2)
            .map(|_| {
                let residues: Vec<Complex64> = (0..n)
                    .map(|_| Complex64::from_polar(rng.random_range(0.5..1.5), rng.random_range(0.0..std::f64::consts::TAU)))
                    .collect();
                let s = (0..200)
                    .map(|k| {
                        truth
                            .iter()
                            .zip(&residues)
                            .map(|(p, c)| 2.0 * (c * p.pole().powu(k)).re)
                            .sum()
                    })
                    .collect();
                ImpulseResponse::new(s, 500.0).unwrap()
            })
            .collect();
        let ensemble = TrainingEnsemble::new(responses).unwrap();
        match estimate_poles(&ensemble, n) {
            Ok(found) => {
                for p in &truth {
                    let d = found
                        .poles
                        .poles()
                        .iter()
                        .map(|q| (q - p.pole()).norm())
                        .fold(f64::INFINITY, f64::min);
                    worst = worst.max(d);
                }
            }
            Err(_) => failures += 1,
        }
    }
    outcome(
        worst <= 1e-6 && failures == 0,
        format!("max pole error {worst:.3e} over 100 systems (tolerance 1e-6), failures = {failures}"),
    )
}

fn criterion_3() -> Outcome {
    let r = run_sdof_experiment(&ExperimentConfig::sdof()).unwrap();
    let best = r.curve(FilterKind::Kautz, "best").unwrap().mean_at(10).unwrap();
    let bad = r.curve(FilterKind::Kautz, "bad").unwrap().mean_at(10).unwrap();
    outcome(
        (best - 0.01).abs() <= 0.01 && (bad - 0.43).abs() <= 0.15,
        format!("order 10: best = {best:.3e} (0.01 +- 0.01), bad = {bad:.4} (0.43 +- 0.15)"),
    )
}

fn criterion_4() -> Outcome {
    let cfg = ExperimentConfig {
        monte_carlo_trials: 100,
        kautz_orders: (1..=40).map(|i| 2 * i).collect(),
        ..ExperimentConfig::monte_carlo()
    };
    let r = run_monte_carlo(&cfg).unwrap();
    let best = r.curve(FilterKind::Kautz, "best").unwrap();
    let bad = r.curve(FilterKind::Kautz, "bad").unwrap();
    let reference = 10;
    let target = best.mean_at(reference).unwrap();
    let reached = bad.first_order_reaching(target);
    let ratio = reached.map_or(f64::INFINITY, |o| o as f64 / reference as f64);
    outcome(
        (1.5..=3.0).contains(&ratio),
        format!(
            "best mean at order {reference} = {target:.3e}; bad mean reaches it at order {} (ratio {ratio:.2}, band 1.5-3); bad mean at {reference} = {:.3e}; failures = {}",
            reached.map_or("never".to_string(), |o| o.to_string()),
            bad.mean_at(reference).unwrap(),
            r.failures.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let cfg = ExperimentConfig {
        kautz_orders: (1..=20).map(|i| 2 * i).collect(),
        fir_orders: (1..=400).collect(),
        ..ExperimentConfig::sdof()
    };
    let r = run_sdof_experiment(&cfg).unwrap();
    let kautz = r.curve(FilterKind::Kautz, "best").unwrap().first_order_reaching(0.02);
    let fir = r.curve(FilterKind::Fir, "best").unwrap().first_order_reaching(0.02);
    let pass = match (kautz, fir) {
        (Some(k), Some(f)) => k <= 10 && f > 5 * k.max(10),
        (Some(k), None) => k <= 10,
        _ => false,
    };
    outcome(
        pass,
        format!("error <= 0.02 on the best case: Kautz order {kautz:?}, FIR order {fir:?} (must exceed 5 x 10)"),
    )
}

fn criterion_6() -> Outcome {
    const LMS_STEPS: usize = 2_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for trial in 0..20 {
        let n = rng.random_range(1..=4);
        let bank_pairs: Vec<PolePair> = (0..n)
            .map(|_| random_pair(&mut rng, (0.6, 0.95), (0.2, std::f64::consts::PI - 0.2)))
            .collect();
        // plant poles close to the bank poles
        let plant_poles: Vec<Complex64> = bank_pairs
            .iter()
            .flat_map(|p| {
                let q = Complex64::from_polar(
                    p.radius() * (1.0 + rng.random_range(-0.01..0.01)),
                    p.angle() + rng.random_range(-0.02..0.02),
                );
                [q, q.conj()]
            })
            .collect();
        let den = kautz_core::poly::from_roots(&plant_poles);
        let num: Vec<f64> = (0..den.len() - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tf = RationalTransferFunction::new(num, den).unwrap();
        let bank = KautzBank::new(PoleSet::new(bank_pairs)).unwrap();
        let length = 4 * bank.settle_length().unwrap_or(1 << 14);
        let h = impulse_response_of(&tf, length, 1.0).unwrap();
        let basis = bank.basis_impulse_responses(length, 1.0).unwrap();
        let ls = projection_weights(&basis, &h).unwrap();
        // long enough for the tail average to settle even when most of the
        // plant energy lies outside the bank's span
        let config = LmsConfig {
            steps: Some(LMS_STEPS),
            ..LmsConfig::with_seed(100 + trial)
        };
        let run = lms_identify(&bank, &Plant::Rational(tf), &config).unwrap();
        let model = bank.model_impulse_response(&ls, length, 1.0).unwrap();
        worst_residual = worst_residual.max(normalized_error(&h, &model).unwrap());
        worst = worst.max(run.converged_weights.relative_distance(&ls));
    }
    outcome(
        worst <= 0.01,
        format!(
            "max relative weight distance {worst:.3e} over 20 pairs (tolerance 1e-2), {LMS_STEPS} steps, worst LS residual {worst_residual:.3}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut mismatches = 0;
    for n in 3..=1000u64 {
        let f = cost_model(FilterKind::Fir, n);
        let k = cost_model(FilterKind::Kautz, n);
        let fir_ok = f.additions == n + 1 && f.half_multiplications == 2 * n && f.divisions == 0 && f.storage == n;
        let kautz_ok = k.additions == 5 + 3 * (n - 3)
            && 2.0 * (3.5 * (n - 3) as f64 + 8.0) == k.half_multiplications as f64
            && k.divisions == 0
            && k.storage == 3 * n
            && k.from_table;
        if !(fir_ok && kautz_ok) {
            mismatches += 1;
        }
    }
    let f = cost_model(FilterKind::Fir, 800);
    let k = cost_model(FilterKind::Kautz, 80);
    let fixed = (f.additions, f.multiplications(), f.divisions, f.storage) == (801, 800.0, 0, 800)
        && (k.additions, k.multiplications(), k.divisions, k.storage) == (236, 277.5, 0, 240);
    outcome(
        mismatches == 0 && fixed,
        format!("n = 3..1000 mismatches = {mismatches}; FIR(800) = [{f}]; Kautz(80) = [{k}]"),
    )
}

fn proxy_source(seed: u64) -> EnsembleSource {
    EnsembleSource::Proxy {
        spec: MdofProxySpec::default(),
        seed,
    }
}

fn criterion_8() -> Outcome {
    let cfg = ExperimentConfig::ensemble();
    let r = run_ensemble_experiment(&cfg, &proxy_source(cfg.seed)).unwrap();
    let enumerated = r.subsets.len() + r.failures.len();
    let ordered = r.kautz.stats.iter().all(|s| s.min <= s.mean && s.mean <= s.max);
    let monotone = r.subsets.iter().all(|s| s.errors.windows(2).all(|w| w[1] <= w[0]));
    let top: Vec<f64> = r.subsets.iter().map(|s| *s.errors.last().unwrap()).collect();
    let last = r.kautz.stats.last().unwrap();
    let mid = 0.5 * (last.min + last.max);
    let below = top.iter().filter(|e| **e < mid).count() as f64 / top.len() as f64;

    let frf_path = frf_path_property();
    let measured = measured_data_check();
    outcome(
        enumerated == 715 && r.failures.is_empty() && ordered && monotone && below >= 0.6 && frf_path.is_ok() && measured.0,
        format!(
            "subsets = {enumerated}, failures = {}, min<=mean<=max: {ordered}, per-subset non-increasing: {monotone}, \
             order 80 min/mean/max = {:.3e}/{:.3e}/{:.3e}, below midpoint = {:.1}% (>= 60%), FRF path: {}, measured data: {}",
            r.failures.len(),
            last.min,
            last.mean,
            last.max,
            100.0 * below,
            frf_path.err().unwrap_or_else(|| "ok".into()),
            measured.1
        ),
    )
}

/// Impulse responses that pass through the FRF ingest path give the same
/// ensemble curves as the responses themselves.
fn frf_path_property() -> Result<(), String> {
    let cfg = ExperimentConfig {
        training_count: 2,
        kautz_orders: vec![12, 24, 48],
        ..ExperimentConfig::ensemble()
    };
    let mut runner = TestRunner::new(PropConfig {
        cases: 4,
        failure_persistence: None,
        ..PropConfig::default()
    });
    runner
        .run(&(0u64..1000), |seed| {
            let direct = mdof_proxy_ensemble(&MdofProxySpec::default(), cfg.sample_rate_hz, cfg.response_length, seed)
                .unwrap();
            let ingested = direct
                .responses()
                .iter()
                .map(|h| frf_to_impulse_response(&FrequencyResponse::from_impulse_response(h).unwrap(), 0.0, false))
                .collect::<Result<Vec<_>, _>>()
                .unwrap();
            let a = run_ensemble_experiment(&cfg, &EnsembleSource::Given(direct)).unwrap();
            let b = run_ensemble_experiment(&cfg, &EnsembleSource::Given(TrainingEnsemble::new(ingested).unwrap()))
                .unwrap();
            for (x, y) in a.kautz.stats.iter().zip(&b.kautz.stats) {
                proptest::prop_assert!((x.mean - y.mean).abs() < 1e-6, "{} vs {}", x.mean, y.mean);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// With measured FRFs in `KAUTZ_FRF_DIR`, the best and worst order-80 errors
/// must land within 0.05 of 0.05 and 0.34.
fn measured_data_check() -> (bool, String) {
    let Ok(dir) = std::env::var("KAUTZ_FRF_DIR") else {
        return (true, "not supplied (set KAUTZ_FRF_DIR)".into());
    };
    let cfg = ExperimentConfig::ensemble();
    let tmp = tempfile::tempdir().unwrap();
    let mut paths: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    let responses = paths
        .iter()
        .map(|p| frf_to_impulse_response(&kautz_core::io::read_frf(p).unwrap(), cfg.lowcut_hz, true).unwrap())
        .collect();
    kautz_core::io::write_ensemble_dir(tmp.path(), &TrainingEnsemble::new(responses).unwrap()).unwrap();
    let (_, ensemble) = read_ensemble_dir(tmp.path()).unwrap();
    let r = run_ensemble_experiment(&cfg, &EnsembleSource::Given(ensemble)).unwrap();
    let last = r.kautz.stats.last().unwrap();
    (
        (last.min - 0.05).abs() <= 0.05 && (last.max - 0.34).abs() <= 0.05,
        format!("best {:.4} (0.05 +- 0.05), worst {:.4} (0.34 +- 0.05)", last.min, last.max),
    )
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let mut notes = Vec::new();
    let mut all = true;
    let mut compare = |name: &str, write: &dyn Fn(&Path)| {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        write(a.path());
        write(b.path());
        let (x, y) = (read_tree(a.path()), read_tree(b.path()));
        let same = !x.is_empty() && x == y;
        all &= same;
        notes.push(format!("{name}: {} files {}", x.len(), if same { "identical" } else { "DIFFER" }));
    };
    let sdof = ExperimentConfig {
        seed: 7,
        ..ExperimentConfig::sdof()
    };
    compare("sdof", &|d| write_sdof_report(d, &sdof, &run_sdof_experiment(&sdof).unwrap()).unwrap());
    let mc = ExperimentConfig {
        seed: 7,
        monte_carlo_trials: 100,
        ..ExperimentConfig::monte_carlo()
    };
    compare("montecarlo", &|d| write_monte_carlo_report(d, &mc, &run_monte_carlo(&mc).unwrap()).unwrap());
    let ens = ExperimentConfig {
        seed: 7,
        ..ExperimentConfig::ensemble()
    };
    compare("ensemble", &|d| {
        write_ensemble_report(d, &ens, &run_ensemble_experiment(&ens, &proxy_source(7)).unwrap()).unwrap()
    });
    outcome(all, notes.join(", "))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("orthonormal basis", Duration::from_secs(10), criterion_1),
        ("prony round trip", Duration::from_secs(10), criterion_2),
        ("fixed training set errors", Duration::from_secs(5), criterion_3),
        ("bad case needs about twice the order", Duration::from_secs(300), criterion_4),
        ("FIR needs far higher order", Duration::from_secs(120), criterion_5),
        ("LMS matches LS", Duration::from_secs(120), criterion_6),
        ("cost model", Duration::from_secs(10), criterion_7),
        ("ensemble pipeline", Duration::from_secs(600), criterion_8),
        ("determinism", Duration::from_secs(600), criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id} {}: {name}: {} [{:.2}s / {}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
