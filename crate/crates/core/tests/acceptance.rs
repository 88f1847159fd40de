//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::{
    accuracy, loop_forward, max_rel_err, nearest_centroid_accuracy, numeric_gradient, small_problem,
    tally, to_rows, SplitMix,
};
use mfnet::dataio::{generate, parse_model, render_model, split};
use mfnet::evaluation::{confusion_from_labels, metrics};
use mfnet::features::{apply_scaling, expand_all, fit_scaling, ScalingParams};
use mfnet::network::{forward, predict_batch, Model, Topology};
use mfnet::training::{backprop, gradient_check, train, TrainConfig};
use mfnet::{CarcinomaClass, Execution, GeneratorSpec, SplitSpec};
use ndarray::{Array1, Array2};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut configs = 0;
    for seed in 0..20u64 {
        let hidden = [1, 5, 25][seed as usize % 3];
        let lambda = [0.0, 1.0][(seed as usize / 3) % 2];
        // 6..=18 samples
        let per_class = 1 + seed as usize % 6;
        let p = small_problem(per_class.max(2), hidden, lambda, 100 + seed);
        assert!(p.x.nrows() <= 20);
        let (_, grads) = backprop(&p.model, p.x.view(), p.y.view()).unwrap();
        let analytic: Vec<f64> = grads.grad1.iter().chain(grads.grad2.iter()).copied().collect();
        let numeric = numeric_gradient(
            &to_rows(p.model.theta1()),
            &to_rows(p.model.theta2()),
            &to_rows(&p.x),
            &to_rows(&p.y),
            lambda,
            1e-5,
        );
        worst = worst.max(max_rel_err(&analytic, &numeric));
        worst = worst.max(gradient_check(&p.model, p.x.view(), p.y.view(), 1e-5).unwrap());
        configs += 1;
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-6 && elapsed < Duration::from_secs(10),
        format!("{configs} configs, max rel err {worst:.3e} (<= 1e-6), {elapsed:.2?} (< 10 s)"),
    )
}

fn forward_oracle() -> Outcome {
    let mut rng = SplitMix(2);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let t = Topology::pipeline(1 + case % 25).unwrap();
        let t1 = Array2::from_shape_simple_fn(t.theta1_shape(), || rng.range(-1.0, 1.0));
        let t2 = Array2::from_shape_simple_fn(t.theta2_shape(), || rng.range(-1.0, 1.0));
        let model =
            Model::new(t1, t2, ScalingParams::new(vec![0.0; 27], vec![1.0; 27]).unwrap(), 0.0).unwrap();
        let x: Vec<f64> = (0..27).map(|_| rng.range(-3.0, 3.0)).collect();
        let tr = forward(&model, Array1::from(x.clone()).view()).unwrap();
        let oracle = loop_forward(&to_rows(model.theta1()), &to_rows(model.theta2()), &x);
        for (a, b) in tr.a3.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst <= 1e-12, format!("100 cases, max |diff| {worst:.3e} (<= 1e-12)"))
}

fn metric_oracle() -> Outcome {
    let mut rng = SplitMix(31337);
    let mut worst: f64 = 0.0;
    let mut count_mismatch = 0;
    for _ in 0..1000 {
        let n = 1 + (rng.next_u64() % 200) as usize;
        let pred: Vec<u8> = (0..n).map(|_| rng.class().label()).collect();
        let truth: Vec<u8> = (0..n).map(|_| rng.class().label()).collect();
        for k in 1..=3u8 {
            let c = confusion_from_labels(&pred, &truth, k).unwrap();
            let (tp, fp, fn_, tn) = tally(&pred, &truth, k);
            if (c.tp, c.fp, c.fn_, c.tn) != (tp, fp, fn_, tn) {
                count_mismatch += 1;
            }
            let (tp, fp, fn_, tn) = (tp as f64, fp as f64, fn_ as f64, tn as f64);
            let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
            let sens = div(tp, tp + fn_);
            let spec = div(tn, tn + fp);
            let expected = [
                div(tp + tn, tp + tn + fp + fn_),
                sens,
                spec,
                (sens * spec).sqrt(),
                div(tp, tp + fp),
                div(2.0 * tp, 2.0 * tp + fp + fn_),
            ];
            let m = metrics(&c);
            let got = [m.accuracy, m.sensitivity, m.specificity, m.gmean, m.precision, m.f_measure];
            for (a, b) in got.iter().zip(expected) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    outcome(
        worst <= 1e-12 && count_mismatch == 0,
        format!("1000 vectors, count mismatches {count_mismatch}, max metric diff {worst:.3e} (<= 1e-12)"),
    )
}

fn reference_table_consistency() -> Outcome {
    // printed (sensitivity, specificity, gmean, precision, F-measure)
    let tables: [(&str, f64, f64, f64, f64, f64); 3] = [
        ("lung", 0.5455, 0.7697, 0.6480, 0.5071, 0.5255),
        ("renal", 0.5248, 0.8205, 0.6562, 0.7162, 0.6057),
        ("breast", 0.5098, 0.7186, 0.6052, 0.3562, 0.4194),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, sens, spec, gmean, prec, f) in tables {
        let g = (sens * spec).sqrt();
        let fm = 2.0 * prec * sens / (prec + sens);
        worst = worst.max((g - gmean).abs()).max((fm - f).abs());
        parts.push(format!("{name} g={g:.4} F={fm:.4}"));
    }
    outcome(worst <= 5e-4, format!("{}; max dev {worst:.2e} (<= 5e-4)", parts.join(", ")))
}

fn pipeline_sanity() -> Outcome {
    let start = Instant::now();
    let cfg = TrainConfig {
        lambda: 0.0,
        learning_rate: 0.3,
        max_iterations: 2000,
        hidden_size: 25,
        rng_seed: 1,
        ..TrainConfig::default()
    };
    let split_spec = SplitSpec { train_fraction: 0.75, seed: 3, stratified: true };
    let run = |sigma: f64| {
        let data = generate(&GeneratorSpec::with_sigma(sigma, 350, 7)).unwrap();
        let (tr, va) = split(&data, &split_spec).unwrap();
        let centroid = nearest_centroid_accuracy(tr.samples(), va.samples());
        let (model, report) = train(tr.samples(), &cfg).unwrap();
        (accuracy(&model, &va), centroid, report.iterations_run)
    };
    let (sep, sep_oracle, sep_iters) = run(1e-4);
    let (noisy, noisy_oracle, noisy_iters) = run(0.5);
    let elapsed = start.elapsed();
    outcome(
        sep >= 0.95 && (0.25..=0.45).contains(&noisy) && elapsed < Duration::from_secs(60),
        format!(
            "sigma=1e-4: val acc {sep:.4} (>= 0.95; nearest-centroid {sep_oracle:.4}; {sep_iters} iters), \
             sigma=0.5: val acc {noisy:.4} (in [0.25, 0.45]; nearest-centroid {noisy_oracle:.4}; {noisy_iters} iters), \
             {elapsed:.2?} (< 60 s)"
        ),
    )
}

fn monotone_descent() -> Outcome {
    let data = generate(&GeneratorSpec::with_sigma(0.005, 50, 21)).unwrap();
    let mut worst_rise = f64::NEG_INFINITY;
    for seed in 0..5 {
        let cfg = TrainConfig {
            lambda: 0.0,
            learning_rate: 1e-3,
            max_iterations: 300,
            cost_tolerance: f64::MIN_POSITIVE,
            rng_seed: seed,
            ..TrainConfig::default()
        };
        let (_, report) = train(data.samples(), &cfg).unwrap();
        for w in report.cost_history.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
        }
    }
    outcome(
        worst_rise <= 1e-12,
        format!("5 seeds x 300 iterations, largest J_t - J_(t-1) = {worst_rise:.3e} (<= 1e-12)"),
    )
}

fn normalization() -> Outcome {
    let data = generate(&GeneratorSpec::default()).unwrap();
    let (tr, _) = split(&data, &SplitSpec::default()).unwrap();
    let raw = expand_all(tr.samples()).unwrap();
    let params = fit_scaling(raw.view()).unwrap();
    let z = apply_scaling(raw.view(), &params).unwrap();
    let refit = fit_scaling(z.view()).unwrap();
    let max_mean = refit.means().iter().fold(0.0f64, |a, m| a.max(m.abs()));
    let max_sd = refit.std_devs().iter().fold(0.0f64, |a, s| a.max((s - 1.0).abs()));
    outcome(
        max_mean <= 1e-12 && max_sd <= 1e-12,
        format!("27 columns, max |mean| {max_mean:.3e}, max |sd-1| {max_sd:.3e} (<= 1e-12)"),
    )
}

fn split_protocol() -> Outcome {
    let data = generate(&GeneratorSpec::default()).unwrap();
    let spec = SplitSpec { train_fraction: 0.75, seed: 5, stratified: true };
    let (tr, va) = split(&data, &spec).unwrap();
    let (tr2, va2) = split(&data, &spec).unwrap();
    let per_class_ok = CarcinomaClass::ALL
        .iter()
        .all(|&c| tr.count_of(c) == 262 && va.count_of(c) == 88);
    let deterministic = tr == tr2 && va == va2;
    outcome(
        data.len() == 1050 && tr.len() == 786 && va.len() == 264 && per_class_ok && deterministic,
        format!(
            "{} samples -> {}/{} (262/88 per class: {per_class_ok}), deterministic: {deterministic}",
            data.len(),
            tr.len(),
            va.len()
        ),
    )
}

fn persistence() -> Outcome {
    let data = generate(&GeneratorSpec::with_sigma(0.005, 60, 9)).unwrap();
    let cfg = TrainConfig { max_iterations: 200, ..TrainConfig::default() };
    let (model, _) = train(data.samples(), &cfg).unwrap();
    let back = parse_model(&render_model(&model)).unwrap();
    let bits = |m: &Model| -> Vec<u64> {
        m.theta1()
            .iter()
            .chain(m.theta2().iter())
            .chain(m.scaling().means())
            .chain(m.scaling().std_devs())
            .map(|v| v.to_bits())
            .collect()
    };
    let weights_equal = bits(&model) == bits(&back) && model.lambda() == back.lambda();
    let samples = &data.samples()[..100];
    let a = predict_batch(&model, samples, Execution::default()).unwrap();
    let b = predict_batch(&back, samples, Execution::default()).unwrap();
    let predictions_equal = a.iter().zip(&b).all(|(p, q)| {
        p.class == q.class && p.scores.iter().zip(q.scores).all(|(x, y)| x.to_bits() == y.to_bits())
    });
    outcome(
        weights_equal && predictions_equal,
        format!("weights/scaling bitwise equal: {weights_equal}, 100 predictions bitwise equal: {predictions_equal}"),
    )
}

fn regularization() -> Outcome {
    // 150 samples; lr * lambda / m = 2/3 keeps the decay step stable
    let data = generate(&GeneratorSpec::with_sigma(0.005, 50, 13)).unwrap();
    let cfg = TrainConfig {
        lambda: 1e6,
        learning_rate: 1e-4,
        max_iterations: 500,
        cost_tolerance: f64::MIN_POSITIVE,
        ..TrainConfig::default()
    };
    let (model, report) = train(data.samples(), &cfg).unwrap();
    let max_w = [model.theta1(), model.theta2()]
        .iter()
        .flat_map(|t| t.slice(ndarray::s![.., 1..]).iter().copied().collect::<Vec<_>>())
        .fold(0.0f64, |a, w| a.max(w.abs()));
    outcome(
        max_w < 0.01,
        format!("lambda=1e6, {} iterations, max |non-bias w| = {max_w:.3e} (< 0.01)", report.iterations_run),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("gradient correctness", gradient_correctness),
        ("forward-pass oracle equivalence", forward_oracle),
        ("metric oracle equivalence", metric_oracle),
        ("reference metric table cross-consistency", reference_table_consistency),
        ("pipeline sanity on synthetic data", pipeline_sanity),
        ("monotone descent", monotone_descent),
        ("normalization invariants", normalization),
        ("split protocol", split_protocol),
        ("persistence", persistence),
        ("regularization behaviour", regularization),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if result.passed { "PASS" } else { "FAIL" };
        if !result.passed {
            failures += 1;
        }
        println!("[{tag}] {:>2}. {name}: {}", i + 1, result.detail);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
