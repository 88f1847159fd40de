//! `mfnet`: generate synthetic data, train, predict and gradient-check.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mfnet::dataio::{self, generate, load_csv, load_model, read_samples, save_model, split};
use mfnet::evaluation::evaluate;
use mfnet::features::{apply_scaling, expand_all, fit_scaling};
use mfnet::network::{predict_batch, Model, Topology};
use mfnet::training::{gradient_check, init_weights, one_hot, train, InitEpsilon, TrainConfig};
use mfnet::{Error, Execution, GeneratorSpec, SplitSpec};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "mfnet", version, about = "Classify bone metastases by primary carcinoma from multifractal parameters")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic labelled dataset drawn around the reference class means.
    Gen(GenArgs),
    /// Split a dataset, train a model on the training part and save it.
    Train(TrainArgs),
    /// Predict classes for every row of a CSV file.
    Predict(PredictArgs),
    /// Compare backpropagation against finite differences on a small problem.
    Gradcheck(GradcheckArgs),
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("must be a positive number, got `{s}`")),
    }
}

fn non_negative_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("must be a non-negative number, got `{s}`")),
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("must be a positive integer, got `{s}`")),
    }
}

fn open_fraction(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err(format!("must lie strictly between 0 and 1, got `{s}`")),
    }
}

fn init_epsilon(s: &str) -> Result<InitEpsilon, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 350, value_parser = positive_usize)]
    per_class: usize,
    /// Standard deviation applied to every parameter.
    #[arg(long, default_value_t = dataio::DEFAULT_SIGMA, value_parser = positive_f64)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Structured,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalSplit {
    Validation,
    Train,
    All,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model_out: PathBuf,
    #[arg(long, default_value_t = 25, value_parser = positive_usize)]
    hidden: usize,
    #[arg(long, default_value_t = 1.0, value_parser = non_negative_f64)]
    lambda: f64,
    #[arg(long, default_value_t = 0.3, value_parser = positive_f64)]
    learning_rate: f64,
    #[arg(long, default_value_t = 2000, value_parser = positive_usize)]
    max_iter: usize,
    /// Stop once the cost changes by less than this between iterations.
    #[arg(long, default_value_t = 1e-7, value_parser = positive_f64)]
    tol: f64,
    /// Weight initialization seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Uniform init half-width, or `auto` for sqrt(6 / (fan_in + fan_out)).
    #[arg(long, default_value = "auto", value_parser = init_epsilon)]
    init_epsilon: InitEpsilon,
    #[arg(long, default_value_t = 0.75, value_parser = open_fraction)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    /// Shuffle all samples together instead of per class.
    #[arg(long)]
    no_stratify: bool,
    /// Evaluate the trained model and print the per-class report.
    #[arg(long)]
    eval: bool,
    #[arg(long, value_enum, default_value_t = EvalSplit::Validation)]
    eval_split: EvalSplit,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    report_format: ReportFormat,
    /// Also write the structured report to this file.
    #[arg(long)]
    report_out: Option<PathBuf>,
    /// Write the cost of every iteration to this file.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV with the six parameter columns; the label column is optional.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5, value_parser = positive_usize)]
    hidden: usize,
    #[arg(long, default_value_t = 4, value_parser = positive_usize)]
    samples_per_class: usize,
    #[arg(long, default_value_t = 1.0, value_parser = non_negative_f64)]
    lambda: f64,
    #[arg(long, default_value_t = 1e-5, value_parser = positive_f64)]
    step: f64,
    #[arg(long, default_value_t = 1e-6, value_parser = positive_f64)]
    threshold: f64,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig(_) => EXIT_USAGE,
            _ if e.is_numeric() => EXIT_NUMERIC,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn cmd_gen(args: GenArgs) -> CmdResult {
    let spec = GeneratorSpec::with_sigma(args.sigma, args.per_class, args.seed);
    let data = generate(&spec)?;
    dataio::write_csv(&data, &args.out)?;
    eprintln!("wrote {} samples to {}", data.len(), args.out.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    dataio::write_atomic(path, text.as_bytes()).map_err(Failure::from)
}

fn cmd_train(args: TrainArgs) -> CmdResult {
    let data = load_csv(&args.input)?;
    let split_spec = SplitSpec {
        train_fraction: args.train_fraction,
        seed: args.split_seed,
        stratified: !args.no_stratify,
    };
    let (train_set, validation) = split(&data, &split_spec)?;
    let config = TrainConfig {
        lambda: args.lambda,
        learning_rate: args.learning_rate,
        max_iterations: args.max_iter,
        cost_tolerance: args.tol,
        hidden_size: args.hidden,
        rng_seed: args.seed,
        init_epsilon: args.init_epsilon,
    };
    let (model, report) = train(train_set.samples(), &config)?;
    save_model(&model, &args.model_out)?;
    if let Some(log) = &args.log {
        let mut text = String::from("iteration,cost\n");
        for (i, j) in report.cost_history.iter().enumerate() {
            let _ = writeln!(text, "{},{j}", i + 1);
        }
        write_text(log, &text)?;
    }

    println!("train_samples = {}", train_set.len());
    println!("validation_samples = {}", validation.len());
    println!("final_cost = {}", report.final_cost().unwrap_or(f64::NAN));
    println!("iterations_run = {}", report.iterations_run);
    println!("converged = {}", report.converged);

    if args.eval {
        let (name, samples) = match args.eval_split {
            EvalSplit::Validation => ("validation", validation.samples().to_vec()),
            EvalSplit::Train => ("train", train_set.samples().to_vec()),
            EvalSplit::All => ("all", data.samples().to_vec()),
        };
        let eval = evaluate(&model, &samples)?;
        println!("{name}_accuracy = {}", eval.overall_accuracy());
        match args.report_format {
            ReportFormat::Text => print!("\n{}", eval.render_text()),
            ReportFormat::Structured => print!("{}", eval.render_structured()),
        }
        if let Some(path) = &args.report_out {
            write_text(path, &eval.render_structured())?;
        }
    }
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> CmdResult {
    let model = load_model(&args.model)?;
    let samples = read_samples(&args.input)?;
    let predictions = predict_batch(&model, &samples, Execution::default())?;
    let mut out = String::new();
    for (i, p) in predictions.iter().enumerate() {
        let [a, b, c] = p.scores;
        let _ = writeln!(out, "{i},{},{a},{b},{c}", p.class.label());
    }
    print!("{out}");
    Ok(())
}

fn cmd_gradcheck(args: GradcheckArgs) -> CmdResult {
    let data = generate(&GeneratorSpec::with_sigma(0.01, args.samples_per_class, args.seed))?;
    let raw = expand_all(data.samples())?;
    let scaling = fit_scaling(raw.view())?;
    let x = apply_scaling(raw.view(), &scaling)?;
    let y = one_hot(&data.labels());
    let topology = Topology::pipeline(args.hidden)?;
    let (theta1, theta2) = init_weights(topology, args.seed, InitEpsilon::Auto)?;
    let model = Model::new(theta1, theta2, scaling, args.lambda)?;
    let err = gradient_check(&model, x.view(), y.view(), args.step)?;
    println!("max_relative_error = {err:e}");
    if err <= args.threshold {
        println!("gradient check passed (threshold {:e})", args.threshold);
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_NUMERIC,
            message: format!("gradient check failed: {err:e} > threshold {:e}", args.threshold),
        })
    }
}

fn main() -> ExitCode {
    let args = match config::expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message.replace('\n', " "));
            ExitCode::from(f.code)
        }
    }
}
