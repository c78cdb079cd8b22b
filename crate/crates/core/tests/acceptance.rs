//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use geolatent::cli::{self, Dataset, GenerateArgs, VAL_STREAM_OFFSET};
use geolatent::geometry::{
    geodesic_correlation, linear_fit, local_curvature, mle_dimension, pca_dimension, pearson,
};
use geolatent::measurement::{expectations, reconstruct};
use geolatent::model::{forward, init_params, Architecture, CircuitParams, DecoderMode};
use geolatent::qcore::{
    bures_angle, fidelity, herm_eig, purity, validate, ComplexMatrix, DensityMatrix,
};
use geolatent::rng::{self, Rng};
use geolatent::stategen::{gue_hamiltonian, haar_pure, sample_dataset, ChannelKind};
use geolatent::training::{
    batch_gradient, batch_objective, circuit_grad, evaluate, fidelity_grad_pred, train, Example,
    GradMethod, TrainConfig, TrainHistory,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(cond: bool, detail: String) -> Outcome {
    Outcome { pass: cond, detail }
}

fn ginibre_state(r: &mut Rng) -> DensityMatrix {
    let mut g = ComplexMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            g[(i, j)] = rng::complex_normal(r);
        }
    }
    let m = g.matmul(&g.adjoint()).hermitian_part();
    let tr = m.trace().re;
    DensityMatrix::new(m.scale(1.0 / tr)).unwrap()
}

fn dirichlet(r: &mut Rng) -> [f64; 4] {
    let mut p = [0.0; 4];
    for v in p.iter_mut() {
        *v = -rng::uniform(r, 1e-12, 1.0).ln();
    }
    let s: f64 = p.iter().sum();
    p.map(|v| v / s)
}

fn quantum_metric_suite() -> Outcome {
    let worst = std::cell::RefCell::new([0.0f64; 5]);
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha,
        ..Config::default()
    });
    let result = runner.run(&any::<u64>(), |seed| {
        let mut r = rng::stream(seed, 0);
        let (a, b, c) = (ginibre_state(&mut r), ginibre_state(&mut r), ginibre_state(&mut r));
        let sym = (fidelity(&a, &b).unwrap() - fidelity(&b, &a).unwrap()).abs();
        let self_f = (fidelity(&a, &a).unwrap() - 1.0).abs();
        let (ab, bc, ac) = (
            bures_angle(&a, &b).unwrap(),
            bures_angle(&b, &c).unwrap(),
            bures_angle(&a, &c).unwrap(),
        );
        let tri = (ac - ab - bc).max(0.0);
        let psi = haar_pure(2, &mut r);
        let mixed = (fidelity(&DensityMatrix::maximally_mixed(4), &psi).unwrap() - 0.25).abs();
        let u = herm_eig(&gue_hamiltonian(4, &mut r)).unwrap().vectors;
        let (p, q) = (dirichlet(&mut r), dirichlet(&mut r));
        let rho = DensityMatrix::new(u.conjugate(&ComplexMatrix::from_real_diagonal(&p)).hermitian_part()).unwrap();
        let sigma = DensityMatrix::new(u.conjugate(&ComplexMatrix::from_real_diagonal(&q)).hermitian_part()).unwrap();
        let closed = p.iter().zip(&q).map(|(x, y)| (x * y).sqrt()).sum::<f64>().powi(2);
        let comm = (fidelity(&rho, &sigma).unwrap() - closed).abs();
        for (w, v) in worst.borrow_mut().iter_mut().zip([sym, self_f, tri, mixed, comm]) {
            *w = w.max(v);
        }
        prop_assert!(sym <= 1e-9 && self_f <= 1e-9 && tri <= 1e-8 && mixed <= 1e-10 && comm <= 1e-9);
        Ok(())
    });
    let worst = worst.into_inner();
    check(
        result.is_ok(),
        format!(
            "max |F(a,b)-F(b,a)| {:.1e}, |F(a,a)-1| {:.1e}, triangle excess {:.1e}, |F(I/4,psi)-1/4| {:.1e}, commuting {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

fn ensemble_validity(dir: &std::path::Path) -> (Outcome, Option<(Dataset, Dataset)>) {
    let args = GenerateArgs {
        common: cli::CommonOpts {
            out: Some(dir.to_path_buf()),
            seed: Some(2024),
            config: None,
        },
        ..GenerateArgs::default()
    };
    let (tr, va) = match cli::generate(&args) {
        Ok(v) => v,
        Err(e) => return (check(false, format!("generate failed: {e}")), None),
    };
    let all: Vec<_> = tr.records.iter().chain(&va.records).collect();
    let in_range = all.iter().filter(|r| (0.84..=0.96).contains(&r.purity)).count();
    let valid = all.iter().filter(|r| validate(r.rho.matrix()).is_ok()).count();
    let mut spread_ok = true;
    let mut counts_text = Vec::new();
    for ds in [&tr, &va] {
        let counts: Vec<usize> = ChannelKind::ALL
            .iter()
            .map(|k| ds.records.iter().filter(|r| r.channel == *k).count())
            .collect();
        let (lo, hi) = (*counts.iter().min().unwrap(), *counts.iter().max().unwrap());
        let equal = ds.records.len() as f64 / 7.0;
        spread_ok &= counts.iter().all(|&c| (c as f64 - equal).abs() <= 1.0);
        counts_text.push(format!("{lo}..{hi}"));
    }
    let n = all.len();
    (
        check(
            n == 2500 && in_range == n && valid == n && spread_ok,
            format!(
                "{n} states, {in_range} with purity in [0.84, 0.96], {valid} pass validity checks, channel counts {}",
                counts_text.join(" / ")
            ),
        ),
        Some((tr, va)),
    )
}

fn pauli_round_trip() -> Outcome {
    let mut r = rng::stream(3, 0);
    let mut states: Vec<DensityMatrix> = (0..500).map(|_| ginibre_state(&mut r)).collect();
    states.extend(sample_dataset(500, (0.85, 0.95), 3, 0).unwrap().into_iter().map(|s| s.rho));
    let (mut worst_rt, mut worst_parseval) = (0.0f64, 0.0f64);
    for rho in &states {
        let x = expectations(rho).unwrap();
        let back = reconstruct(&x).unwrap();
        worst_rt = worst_rt.max((&back - rho.matrix()).frobenius_norm());
        let parseval = (1.0 + x.0.iter().map(|v| v * v).sum::<f64>()) / 4.0;
        worst_parseval = worst_parseval.max((parseval - purity(rho)).abs());
    }
    check(
        worst_rt <= 1e-10 && worst_parseval <= 1e-9,
        format!(
            "{} states, max Frobenius error {worst_rt:.1e}, max Parseval error {worst_parseval:.1e}",
            states.len()
        ),
    )
}

fn random_hermitian(r: &mut Rng) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] = rng::complex_normal(r);
        }
    }
    m.hermitian_part()
}

fn decoder_degeneracy() -> Outcome {
    let targets = sample_dataset(7, (0.85, 0.95), 4, 0).unwrap();
    let (mut max_out, mut max_grad) = (0.0f64, 0.0f64);
    for draw in 0..100u64 {
        let mut r = rng::stream(400 + draw, 0);
        let p = init_params(&mut r, DecoderMode::PaperLiteral, Architecture::default());
        let x = geolatent::measurement::MeasurementVector(
            (0..15).map(|_| rng::uniform(&mut r, -1.0, 1.0)).collect(),
        );
        let out = forward(&x, &p).unwrap();
        max_out = out.x_hat.0.iter().fold(max_out, |m, v| m.max(v.abs()));
        let target = &targets[draw as usize % targets.len()].rho;
        let upstreams = [
            fidelity_grad_pred(target, &out.rho_pred).unwrap(),
            random_hermitian(&mut r),
        ];
        for up in &upstreams {
            let g = circuit_grad(&out.theta, up, GradMethod::ShiftRule).unwrap();
            max_grad = g.iter().fold(max_grad, |m, v| m.max(v.abs()));
        }
    }
    check(
        max_out <= 1e-12 && max_grad <= 1e-12,
        format!("max |x_hat| {max_out:.1e}, max angle gradient {max_grad:.1e} over 100 draws"),
    )
}

fn gradient_correctness() -> Outcome {
    let micro = Architecture {
        input: 15,
        hidden1: 8,
        hidden2: 6,
        latent: 4,
    };
    let data = Example::from_records(&sample_dataset(3, (0.85, 0.95), 31, 0).unwrap()).unwrap();
    let batch: Vec<&Example> = data.iter().collect();
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let mut params = init_params(&mut rng::stream(5, 0), DecoderMode::Corrected, micro);
    params.encoder.layer1.bias.iter_mut().for_each(|b| *b += 0.3);
    let kink_gap = batch
        .iter()
        .flat_map(|e| {
            let t = params.encoder.forward_trace(e.x.as_slice()).unwrap();
            t.pre1.into_iter().chain(t.pre2)
        })
        .fold(f64::INFINITY, |m, a| m.min(a.abs()));
    let lambda = 0.06;
    let (losses, grad) = batch_gradient(&params, &batch, &pairs, lambda, GradMethod::ShiftRule).unwrap();
    let flat = params.flatten();
    let g = grad.flatten();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for k in 0..flat.len() {
        let eval = |delta: f64| {
            let mut f = flat.clone();
            f[k] += delta;
            let p = geolatent::model::ModelParams::unflatten(micro, DecoderMode::Corrected, &f).unwrap();
            batch_objective(&p, &batch, &pairs, lambda).unwrap().total
        };
        let fd = (eval(h) - eval(-h)) / (2.0 * h);
        let err = (fd - g[k]).abs() / g[k].abs().max(fd.abs()).max(1e-6);
        worst = worst.max(err);
    }

    let mut worst_shift = 0.0f64;
    for seed in 0..20u64 {
        let mut r = rng::stream(600 + seed, 0);
        let raw: Vec<f64> = (0..38).map(|_| rng::uniform(&mut r, -3.0, 3.0)).collect();
        let theta = CircuitParams::from_raw(&raw, DecoderMode::Corrected).unwrap();
        let up = random_hermitian(&mut r);
        let a = circuit_grad(&theta, &up, GradMethod::ShiftRule).unwrap();
        let b = circuit_grad(&theta, &up, GradMethod::FiniteDifference).unwrap();
        for (x, y) in a.iter().zip(&b) {
            worst_shift = worst_shift.max((x - y).abs() / x.abs().max(y.abs()).max(1e-6));
        }
    }
    check(
        worst <= 1e-3 && worst_shift <= 1e-5 && losses.k_valid == 3,
        format!(
            "{} coordinates, max relative error {worst:.1e} (nearest ReLU kink {kink_gap:.1e}); shift rule vs finite differences {worst_shift:.1e}",
            flat.len()
        ),
    )
}

const DESK_SEED: u64 = 42;

fn desk_config(lambda: f64) -> TrainConfig {
    TrainConfig {
        epochs_max: 300,
        patience: 60,
        batch_size: 32,
        learning_rate: 3e-3,
        lambda_metric: lambda,
        seed: DESK_SEED,
        mode: DecoderMode::Corrected,
        ..TrainConfig::default()
    }
}

struct DeskRun {
    history: TrainHistory,
    val_fidelity: f64,
    r: f64,
}

fn desk_run(tr: &[Example], va: &[Example], lambda: f64) -> DeskRun {
    let out = train(tr, va, &desk_config(lambda)).unwrap();
    let val_fidelity = evaluate(&out.params, va).unwrap().mean;
    let all: Vec<&Example> = tr.iter().chain(va).collect();
    let latents: Vec<Vec<f64>> = all
        .iter()
        .map(|e| geolatent::model::encode(&e.x, &out.params.encoder).unwrap().0)
        .collect();
    let rhos: Vec<DensityMatrix> = all.iter().map(|e| e.rho.clone()).collect();
    let corr = geodesic_correlation(&latents, &rhos, 500, &mut rng::stream(DESK_SEED, 7)).unwrap();
    DeskRun {
        history: out.history,
        val_fidelity,
        r: corr.pearson_r,
    }
}

fn desk_data() -> (Vec<Example>, Vec<Example>) {
    let tr = sample_dataset(400, (0.85, 0.95), DESK_SEED, 0).unwrap();
    let va = sample_dataset(100, (0.85, 0.95), DESK_SEED, VAL_STREAM_OFFSET).unwrap();
    (Example::from_records(&tr).unwrap(), Example::from_records(&va).unwrap())
}

fn uniform_cloud(r: &mut Rng, n: usize, dim: usize, disc: bool) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut p = vec![0.0; 20];
            loop {
                for v in p.iter_mut().take(dim) {
                    *v = rng::uniform(r, -1.0, 1.0);
                }
                if !disc || p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                    break;
                }
            }
            p
        })
        .collect()
}

fn geometry_oracles() -> Outcome {
    let mut r = rng::stream(77, 0);
    let mut ok = true;
    let mut parts = Vec::new();
    for (dim, disc, lo, hi) in [(1, false, 0.8, 1.3), (2, true, 1.6, 2.6), (5, false, 4.0, 6.5)] {
        let est = mle_dimension(&uniform_cloud(&mut r, 2000, dim, disc), 15).unwrap().mean;
        ok &= (lo..=hi).contains(&est);
        parts.push(format!("MLE {dim}D {est:.3} in [{lo}, {hi}]"));
    }
    let sub: Vec<Vec<f64>> = (0..500)
        .map(|_| {
            let mut p = vec![0.0; 20];
            for v in p.iter_mut().take(5) {
                *v = rng::normal(&mut r);
            }
            p
        })
        .collect();
    let dims = pca_dimension(&sub, &[0.95, 0.99]).unwrap().1;
    ok &= dims == [5, 5];
    parts.push(format!("PCA dims {dims:?}"));

    let basis: Vec<Vec<f64>> = (0..2).map(|_| (0..20).map(|_| rng::normal(&mut r)).collect()).collect();
    let plane: Vec<Vec<f64>> = (0..600)
        .map(|_| {
            let (a, b) = (rng::uniform(&mut r, -1.0, 1.0), rng::uniform(&mut r, -1.0, 1.0));
            (0..20).map(|c| a * basis[0][c] + b * basis[1][c]).collect()
        })
        .collect();
    let kappa = local_curvature(&plane, 25).unwrap().max;
    ok &= kappa <= 1e-8;
    parts.push(format!("plane max kappa {kappa:.1e}"));

    let mut worst = 0.0f64;
    for _ in 0..50 {
        let x: Vec<f64> = (0..200).map(|_| rng::normal(&mut r)).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.4 * v + rng::normal(&mut r)).collect();
        let rr = pearson(&x, &y).unwrap();
        worst = worst.max((linear_fit(&x, &y).unwrap().r_squared - rr * rr).abs());
    }
    ok &= worst <= 1e-10;
    parts.push(format!("|R^2 - r^2| {worst:.1e}"));
    check(ok, parts.join(", "))
}

fn bits(h: &TrainHistory) -> Vec<[u64; 5]> {
    h.epochs
        .iter()
        .map(|e| {
            [
                e.epoch as u64,
                e.recon_loss.to_bits(),
                e.metric_loss.to_bits(),
                e.total_loss.to_bits(),
                e.val_fidelity.to_bits(),
            ]
        })
        .collect()
}

fn report(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let pass = out.pass && took <= limit;
    println!(
        "{} [{id}] {name}: {} ({:.1} s, limit {} s)",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn main() {
    let secs = Duration::from_secs;
    let mut results = Vec::new();
    results.push(report(1, "quantum metric properties", secs(10), quantum_metric_suite));

    let gen_a = tempfile::tempdir().unwrap();
    let mut generated = None;
    results.push(report(2, "ensemble validity", secs(120), || {
        let (o, d) = ensemble_validity(gen_a.path());
        generated = d;
        o
    }));
    results.push(report(3, "Pauli round trip", secs(5), pauli_round_trip));
    results.push(report(4, "literal decoder degeneracy", secs(5), decoder_degeneracy));
    results.push(report(5, "gradient correctness", secs(30), gradient_correctness));

    let (tr, va) = desk_data();
    let mut with_metric = None;
    results.push(report(6, "desk-scale training", secs(1800), || {
        let a = desk_run(&tr, &va, 0.06);
        let b = desk_run(&tr, &va, 0.0);
        let gain = a.r - b.r;
        let o = check(
            a.val_fidelity >= 0.85 && a.r >= 0.70 && gain >= 0.05,
            format!(
                "val fidelity {:.4} (>= 0.85), pearson r {:.4} (>= 0.70), r(0.06) - r(0) = {:.4} - {:.4} = {gain:.4} (>= 0.05), {} epochs",
                a.val_fidelity,
                a.r,
                a.r,
                b.r,
                a.history.len()
            ),
        );
        with_metric = Some(a);
        o
    }));

    results.push(report(7, "geometry estimator oracles", secs(60), geometry_oracles));

    results.push(report(8, "determinism", secs(1800), || {
        let gen_b = tempfile::tempdir().unwrap();
        let (again, _) = ensemble_validity(gen_b.path());
        let same_files = again.pass
            && ["train.jsonl", "val.jsonl"].iter().all(|f| {
                std::fs::read(gen_a.path().join(f)).unwrap() == std::fs::read(gen_b.path().join(f)).unwrap()
            });
        let rerun = desk_run(&tr, &va, 0.06);
        let first = with_metric.as_ref().expect("criterion 6 ran");
        let same_history = bits(&first.history) == bits(&rerun.history);
        check(
            same_files && same_history && generated.is_some(),
            format!(
                "dataset files byte-identical: {same_files}; {} history rows bitwise identical: {same_history}",
                rerun.history.len()
            ),
        )
    }));

    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
