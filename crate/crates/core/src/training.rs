//! Regularized cross-entropy cost, backpropagation and batch gradient descent.
//!
//! The cost for `m` samples is
//!
//! ```text
//! J = (1/m) Σ_i Σ_k [ -y_k log h_k - (1 - y_k) log(1 - h_k) ]
//!   + λ/(2m) [ Σ θ1[:,1:]² + Σ θ2[:,1:]² ]
//! ```
//!
//! Bias columns are never regularized. Inside the log terms the output
//! activations are clamped to `[1e-12, 1 - 1e-12]`; the gradients use the
//! unclamped `δ3 = a3 - y`.

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2, ArrayView2, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::features::{apply_scaling, expand_all, fit_scaling, CarcinomaClass, MultifractalSample};
use crate::network::{design_matrix, forward_rows, Model, Topology, DEFAULT_HIDDEN, OUTPUT_DIM};

/// Bounds applied to output activations inside the log terms of the cost.
pub const LOG_CLAMP: f64 = 1e-12;

/// Half-width of the uniform weight initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitEpsilon {
    /// `sqrt(6 / (fan_in + fan_out))`, chosen per layer.
    Auto,
    Fixed(f64),
}

impl InitEpsilon {
    pub fn for_layer(self, fan_in: usize, fan_out: usize) -> f64 {
        match self {
            InitEpsilon::Auto => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            InitEpsilon::Fixed(eps) => eps,
        }
    }
}

impl fmt::Display for InitEpsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitEpsilon::Auto => f.write_str("auto"),
            InitEpsilon::Fixed(eps) => write!(f, "{eps}"),
        }
    }
}

impl FromStr for InitEpsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(InitEpsilon::Auto);
        }
        match s.parse::<f64>() {
            Ok(eps) if eps > 0.0 && eps.is_finite() => Ok(InitEpsilon::Fixed(eps)),
            _ => Err(Error::InvalidConfig(format!(
                "init epsilon must be a positive number or `auto`, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Training stops once `|J_t - J_{t-1}|` drops below this.
    pub cost_tolerance: f64,
    pub hidden_size: usize,
    pub rng_seed: u64,
    pub init_epsilon: InitEpsilon,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            learning_rate: 0.3,
            max_iterations: 2000,
            cost_tolerance: 1e-7,
            hidden_size: DEFAULT_HIDDEN,
            rng_seed: 0,
            init_epsilon: InitEpsilon::Auto,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be > 0, got {}", self.learning_rate));
        }
        if self.max_iterations == 0 {
            return bad("max iterations must be >= 1".into());
        }
        if !(self.cost_tolerance > 0.0 && self.cost_tolerance.is_finite()) {
            return bad(format!("cost tolerance must be > 0, got {}", self.cost_tolerance));
        }
        if self.hidden_size == 0 {
            return bad("hidden size must be >= 1".into());
        }
        if let InitEpsilon::Fixed(eps) = self.init_epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return bad(format!("init epsilon must be > 0, got {eps}"));
            }
        }
        Ok(())
    }
}

/// Partial derivatives of the cost, shaped like the weight matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub grad1: Array2<f64>,
    pub grad2: Array2<f64>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.grad1.iter().chain(self.grad2.iter()).all(|g| g.is_finite())
    }

    fn flat(&self, index: usize) -> f64 {
        flat_get(&self.grad1, &self.grad2, index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub cost_history: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

impl TrainReport {
    pub fn final_cost(&self) -> Option<f64> {
        self.cost_history.last().copied()
    }
}

/// One-hot target rows, column `k` for class `k + 1`.
pub fn one_hot(labels: &[CarcinomaClass]) -> Array2<f64> {
    let mut y = Array2::zeros((labels.len(), OUTPUT_DIM));
    for (i, c) in labels.iter().enumerate() {
        y[[i, c.index()]] = 1.0;
    }
    y
}

/// Scaled features and targets with the bias column already prepended.
struct Objective<'a> {
    a1: Array2<f64>,
    y: ArrayView2<'a, f64>,
    lambda: f64,
    exec: Execution,
}

impl<'a> Objective<'a> {
    fn new(
        topology: Topology,
        x: ArrayView2<'_, f64>,
        y: ArrayView2<'a, f64>,
        lambda: f64,
        exec: Execution,
    ) -> Result<Self> {
        check_inputs(topology, x, y)?;
        Ok(Self {
            a1: design_matrix(x),
            y,
            lambda,
            exec,
        })
    }

    fn m(&self) -> f64 {
        self.a1.nrows() as f64
    }

    fn regularization(&self, theta1: &Array2<f64>, theta2: &Array2<f64>) -> f64 {
        let sq = |t: &Array2<f64>| t.slice(s![.., 1..]).iter().map(|w| w * w).sum::<f64>();
        self.lambda / (2.0 * self.m()) * (sq(theta1) + sq(theta2))
    }

    fn cost(&self, theta1: &Array2<f64>, theta2: &Array2<f64>) -> f64 {
        let data = exec::chunked_fold(
            self.a1.nrows(),
            self.exec,
            |r| {
                let trace = forward_rows(theta1, theta2, self.a1.slice(s![r.clone(), ..]));
                log_loss_sum(trace.a3.view(), self.y.slice(s![r, ..]))
            },
            |a, b| a + b,
        )
        .unwrap_or(0.0);
        data / self.m() + self.regularization(theta1, theta2)
    }

    fn cost_and_gradients(&self, theta1: &Array2<f64>, theta2: &Array2<f64>) -> (f64, Gradients) {
        let (data, mut grad1, mut grad2) = exec::chunked_fold(
            self.a1.nrows(),
            self.exec,
            |r| {
                let a1 = self.a1.slice(s![r.clone(), ..]);
                let y = self.y.slice(s![r, ..]);
                let trace = forward_rows(theta1, theta2, a1);
                let loss = log_loss_sum(trace.a3.view(), y);
                let delta3 = &trace.a3 - &y;
                // error of the hidden bias unit is dropped
                let mut delta2 = delta3.dot(theta2).slice_move(s![.., 1..]);
                Zip::from(&mut delta2)
                    .and(trace.a2.slice(s![.., 1..]))
                    .for_each(|d, &a| *d *= a * (1.0 - a));
                (loss, delta2.t().dot(&a1), delta3.t().dot(&trace.a2))
            },
            |(c1, g1a, g2a), (c2, g1b, g2b)| (c1 + c2, g1a + g1b, g2a + g2b),
        )
        .expect("at least one sample");

        let m = self.m();
        let reg = self.lambda / m;
        grad1.mapv_inplace(|g| g / m);
        grad2.mapv_inplace(|g| g / m);
        grad1.slice_mut(s![.., 1..]).scaled_add(reg, &theta1.slice(s![.., 1..]));
        grad2.slice_mut(s![.., 1..]).scaled_add(reg, &theta2.slice(s![.., 1..]));
        let cost = data / m + self.regularization(theta1, theta2);
        (cost, Gradients { grad1, grad2 })
    }
}

fn log_loss_sum(a3: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> f64 {
    let mut acc = 0.0;
    for (h_row, y_row) in a3.rows().into_iter().zip(y.rows()) {
        for (&h, &t) in h_row.iter().zip(y_row.iter()) {
            let h = h.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
            acc += -t * h.ln() - (1.0 - t) * (1.0 - h).ln();
        }
    }
    acc
}

fn check_inputs(topology: Topology, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::InsufficientData("cost needs at least one sample".into()));
    }
    if x.ncols() != topology.input {
        return Err(Error::DimensionMismatch {
            context: "feature columns",
            expected: topology.input,
            found: x.ncols(),
        });
    }
    if y.nrows() != x.nrows() {
        return Err(Error::DimensionMismatch {
            context: "target rows",
            expected: x.nrows(),
            found: y.nrows(),
        });
    }
    if y.ncols() != topology.output {
        return Err(Error::DimensionMismatch {
            context: "target columns",
            expected: topology.output,
            found: y.ncols(),
        });
    }
    for (i, row) in y.rows().into_iter().enumerate() {
        let ones = row.iter().filter(|&&v| v == 1.0).count();
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || ones + zeros != row.len() {
            return Err(Error::InvalidInput(format!("target row {i} is not one-hot")));
        }
    }
    Ok(())
}

/// Regularized cost `J(θ)` of `model` on scaled features `x` and one-hot `y`.
pub fn cost(model: &Model, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<f64> {
    cost_with(model, x, y, Execution::default())
}

pub fn cost_with(
    model: &Model,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    exec: Execution,
) -> Result<f64> {
    let obj = Objective::new(model.topology(), x, y, model.lambda(), exec)?;
    Ok(obj.cost(&model.theta1, &model.theta2))
}

/// Cost and its gradient with respect to both weight matrices.
pub fn backprop(
    model: &Model,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
) -> Result<(f64, Gradients)> {
    backprop_with(model, x, y, Execution::default())
}

pub fn backprop_with(
    model: &Model,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    exec: Execution,
) -> Result<(f64, Gradients)> {
    let obj = Objective::new(model.topology(), x, y, model.lambda(), exec)?;
    Ok(obj.cost_and_gradients(&model.theta1, &model.theta2))
}

fn flat_get(theta1: &Array2<f64>, theta2: &Array2<f64>, index: usize) -> f64 {
    let n1 = theta1.len();
    if index < n1 {
        theta1[[index / theta1.ncols(), index % theta1.ncols()]]
    } else {
        let j = index - n1;
        theta2[[j / theta2.ncols(), j % theta2.ncols()]]
    }
}

fn flat_get_mut<'t>(theta1: &'t mut Array2<f64>, theta2: &'t mut Array2<f64>, index: usize) -> &'t mut f64 {
    let n1 = theta1.len();
    if index < n1 {
        let c = theta1.ncols();
        &mut theta1[[index / c, index % c]]
    } else {
        let j = index - n1;
        let c = theta2.ncols();
        &mut theta2[[j / c, j % c]]
    }
}

/// Compares `grads` against central differences of the cost, returning
/// `max |analytic - numeric| / max(1, |analytic| + |numeric|)` over all weights.
pub fn max_relative_error(
    model: &Model,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    grads: &Gradients,
    step: f64,
    exec: Execution,
) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidConfig(format!("step must be > 0, got {step}")));
    }
    if grads.grad1.dim() != model.theta1.dim() || grads.grad2.dim() != model.theta2.dim() {
        return Err(Error::DimensionMismatch {
            context: "gradient shape",
            expected: model.theta1.len() + model.theta2.len(),
            found: grads.grad1.len() + grads.grad2.len(),
        });
    }
    // cost evaluations run sequentially; the weights are spread across threads
    let obj = Objective::new(model.topology(), x, y, model.lambda(), Execution::Sequential)?;
    let n = model.topology().weight_count();
    let errors = exec::map_indices(n, exec, |i| {
        let mut t1 = model.theta1.clone();
        let mut t2 = model.theta2.clone();
        let w = flat_get(&t1, &t2, i);
        *flat_get_mut(&mut t1, &mut t2, i) = w + step;
        let plus = obj.cost(&t1, &t2);
        *flat_get_mut(&mut t1, &mut t2, i) = w - step;
        let minus = obj.cost(&t1, &t2);
        let numeric = (plus - minus) / (2.0 * step);
        let analytic = grads.flat(i);
        (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1.0)
    });
    Ok(errors.into_iter().fold(0.0, f64::max))
}

/// Backpropagates, then checks the result against central differences.
pub fn gradient_check(
    model: &Model,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    step: f64,
) -> Result<f64> {
    let (_, grads) = backprop(model, x, y)?;
    max_relative_error(model, x, y, &grads, step, Execution::default())
}

/// Draws every weight i.i.d. from `U[-ε, ε]`, θ1 first then θ2, row-major.
pub fn init_weights(
    topology: Topology,
    seed: u64,
    epsilon: InitEpsilon,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layer = |shape: (usize, usize), eps: f64| -> Result<Array2<f64>> {
        let dist = Uniform::new_inclusive(-eps, eps)
            .map_err(|e| Error::InvalidConfig(format!("init epsilon {eps}: {e}")))?;
        Ok(Array2::from_shape_simple_fn(shape, || dist.sample(&mut rng)))
    };
    let eps1 = epsilon.for_layer(topology.input, topology.hidden);
    let eps2 = epsilon.for_layer(topology.hidden, topology.output);
    let theta1 = layer(topology.theta1_shape(), eps1)?;
    let theta2 = layer(topology.theta2_shape(), eps2)?;
    Ok((theta1, theta2))
}

/// Full pipeline: expand, fit scaling, initialize, then gradient descent.
pub fn train(samples: &[MultifractalSample], config: &TrainConfig) -> Result<(Model, TrainReport)> {
    train_with(samples, config, Execution::default())
}

pub fn train_with(
    samples: &[MultifractalSample],
    config: &TrainConfig,
    exec: Execution,
) -> Result<(Model, TrainReport)> {
    config.validate()?;
    let labels = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.label
                .ok_or_else(|| Error::InvalidInput(format!("training sample {i} has no label")))
        })
        .collect::<Result<Vec<_>>>()?;
    for class in CarcinomaClass::ALL {
        let n = labels.iter().filter(|&&c| c == class).count();
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "class {} ({class}) has {n} training samples, need at least 2",
                class.label()
            )));
        }
    }

    let raw = expand_all(samples)?;
    let scaling = fit_scaling(raw.view())?;
    let x = apply_scaling(raw.view(), &scaling)?;
    let y = one_hot(&labels);

    let topology = Topology::pipeline(config.hidden_size)?;
    let (mut theta1, mut theta2) = init_weights(topology, config.rng_seed, config.init_epsilon)?;
    let obj = Objective::new(topology, x.view(), y.view(), config.lambda, exec)?;

    let mut history = Vec::with_capacity(config.max_iterations.min(1 << 16));
    let mut converged = false;
    for iteration in 1..=config.max_iterations {
        let (j, grads) = obj.cost_and_gradients(&theta1, &theta2);
        if !j.is_finite() || !grads.is_finite() {
            return Err(Error::DivergedTraining { iteration });
        }
        let previous = history.last().copied();
        history.push(j);
        if previous.is_some_and(|p: f64| (j - p).abs() < config.cost_tolerance) {
            converged = true;
            break;
        }
        theta1.scaled_add(-config.learning_rate, &grads.grad1);
        theta2.scaled_add(-config.learning_rate, &grads.grad2);
    }
    if theta1.iter().chain(theta2.iter()).any(|w| !w.is_finite()) {
        return Err(Error::DivergedTraining {
            iteration: history.len(),
        });
    }

    let model = Model::new(theta1, theta2, scaling, config.lambda)?;
    let report = TrainReport {
        iterations_run: history.len(),
        cost_history: history,
        converged,
    };
    Ok((model, report))
}
