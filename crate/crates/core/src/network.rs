//! Three-layer sigmoid network: topology, weights and the forward pass.

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::features::{
    apply_scaling, expand_all, expand_features, scale_vector, CarcinomaClass, MultifractalSample,
    ScalingParams, FEATURE_DIM,
};

/// Default hidden-layer width.
pub const DEFAULT_HIDDEN: usize = 25;

/// Number of output units, one per carcinoma class.
pub const OUTPUT_DIM: usize = 3;

/// Layer sizes `(s1, s2, s3)`, not counting bias units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

impl Topology {
    pub fn new(input: usize, hidden: usize, output: usize) -> Result<Self> {
        if input == 0 || hidden == 0 || output == 0 {
            return Err(Error::InvalidConfig(format!(
                "layer sizes must be positive, got {input}/{hidden}/{output}"
            )));
        }
        Ok(Self {
            input,
            hidden,
            output,
        })
    }

    /// The 27-input, 3-output layout used by the classification pipeline.
    pub fn pipeline(hidden: usize) -> Result<Self> {
        Self::new(FEATURE_DIM, hidden, OUTPUT_DIM)
    }

    pub fn theta1_shape(&self) -> (usize, usize) {
        (self.hidden, self.input + 1)
    }

    pub fn theta2_shape(&self) -> (usize, usize) {
        (self.output, self.hidden + 1)
    }

    pub fn weight_count(&self) -> usize {
        self.hidden * (self.input + 1) + self.output * (self.hidden + 1)
    }
}

/// Trained network: weight matrices with the bias in column 0, the scaling
/// fitted on the training features, and the regularization strength used.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    topology: Topology,
    pub(crate) theta1: Array2<f64>,
    pub(crate) theta2: Array2<f64>,
    scaling: ScalingParams,
    lambda: f64,
}

impl Model {
    /// Builds a model, deriving the topology from the weight shapes.
    pub fn new(
        theta1: Array2<f64>,
        theta2: Array2<f64>,
        scaling: ScalingParams,
        lambda: f64,
    ) -> Result<Self> {
        let (hidden, input_plus_bias) = theta1.dim();
        if input_plus_bias < 2 || hidden == 0 {
            return Err(Error::ShapeMismatch {
                what: "theta1 columns".into(),
                expected: 2,
                found: input_plus_bias,
            });
        }
        let topology = Topology::new(input_plus_bias - 1, hidden, theta2.nrows().max(1))?;
        if theta2.nrows() == 0 {
            return Err(Error::ShapeMismatch {
                what: "theta2 rows".into(),
                expected: 1,
                found: 0,
            });
        }
        if theta2.ncols() != hidden + 1 {
            return Err(Error::ShapeMismatch {
                what: "theta2 columns".into(),
                expected: hidden + 1,
                found: theta2.ncols(),
            });
        }
        if scaling.dim() != topology.input {
            return Err(Error::ShapeMismatch {
                what: "scaling dimension".into(),
                expected: topology.input,
                found: scaling.dim(),
            });
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
        }
        if theta1.iter().chain(theta2.iter()).any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("model weights must be finite".into()));
        }
        Ok(Self {
            topology,
            theta1,
            theta2,
            scaling,
            lambda,
        })
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn theta1(&self) -> &Array2<f64> {
        &self.theta1
    }

    pub fn theta2(&self) -> &Array2<f64> {
        &self.theta2
    }

    pub fn scaling(&self) -> &ScalingParams {
        &self.scaling
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Replaces the weights, keeping topology, scaling and λ.
    pub fn with_weights(&self, theta1: Array2<f64>, theta2: Array2<f64>) -> Result<Self> {
        if theta1.dim() != self.topology.theta1_shape() || theta2.dim() != self.topology.theta2_shape()
        {
            return Err(Error::ShapeMismatch {
                what: "weight count".into(),
                expected: self.topology.weight_count(),
                found: theta1.len() + theta2.len(),
            });
        }
        Model::new(theta1, theta2, self.scaling.clone(), self.lambda)
    }

    fn require_pipeline(&self) -> Result<()> {
        if self.topology.input != FEATURE_DIM {
            return Err(Error::DimensionMismatch {
                context: "model input size",
                expected: FEATURE_DIM,
                found: self.topology.input,
            });
        }
        if self.topology.output != OUTPUT_DIM {
            return Err(Error::DimensionMismatch {
                context: "model output size",
                expected: OUTPUT_DIM,
                found: self.topology.output,
            });
        }
        Ok(())
    }
}

/// Logistic function, evaluated so that `exp` never overflows.
///
/// Saturates to exactly 0 or 1 once |z| exceeds what `f64` can resolve.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `g'(z)` expressed through the activation `g(z)`.
#[inline]
pub fn sigmoid_gradient_from_activation(a: f64) -> f64 {
    a * (1.0 - a)
}

/// All intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `[1; x]`
    pub a1: Array1<f64>,
    pub z2: Array1<f64>,
    /// `[1; g(z2)]`
    pub a2: Array1<f64>,
    pub z3: Array1<f64>,
    pub a3: Array1<f64>,
}

fn with_bias(v: ArrayView1<'_, f64>) -> Array1<f64> {
    let mut out = Array1::ones(v.len() + 1);
    out.slice_mut(s![1..]).assign(&v);
    out
}

/// Forward pass for one already-scaled feature vector.
pub fn forward(model: &Model, x: ArrayView1<'_, f64>) -> Result<ForwardTrace> {
    if x.len() != model.topology.input {
        return Err(Error::DimensionMismatch {
            context: "forward input",
            expected: model.topology.input,
            found: x.len(),
        });
    }
    let a1 = with_bias(x);
    let z2 = model.theta1.dot(&a1);
    let a2 = with_bias(z2.mapv(sigmoid).view());
    let z3 = model.theta2.dot(&a2);
    let a3 = z3.mapv(sigmoid);
    Ok(ForwardTrace { a1, z2, a2, z3, a3 })
}

/// Prepends a column of ones.
pub(crate) fn design_matrix(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let ones = Array2::ones((x.nrows(), 1));
    concatenate(Axis(1), &[ones.view(), x]).expect("row counts agree")
}

/// Row-batched forward pass over a design matrix (bias column included).
pub(crate) struct BatchTrace {
    /// Hidden activations with the bias column.
    pub a2: Array2<f64>,
    pub a3: Array2<f64>,
}

pub(crate) fn forward_rows(
    theta1: &Array2<f64>,
    theta2: &Array2<f64>,
    a1: ArrayView2<'_, f64>,
) -> BatchTrace {
    let z2 = a1.dot(&theta1.t());
    let a2 = design_matrix(z2.mapv(sigmoid).view());
    let a3 = a2.dot(&theta2.t()).mapv(sigmoid);
    BatchTrace { a2, a3 }
}

/// Output activations for every row of a scaled feature matrix.
pub fn forward_batch(model: &Model, x: ArrayView2<'_, f64>, exec: Execution) -> Result<Array2<f64>> {
    if x.ncols() != model.topology.input {
        return Err(Error::DimensionMismatch {
            context: "forward input",
            expected: model.topology.input,
            found: x.ncols(),
        });
    }
    let a1 = design_matrix(x);
    let ranges = exec::chunk_ranges(a1.nrows(), exec::CHUNK_ROWS);
    let parts = exec::map_ranges(&ranges, exec, |r| {
        forward_rows(&model.theta1, &model.theta2, a1.slice(s![r, ..])).a3
    });
    let mut out = Array2::zeros((x.nrows(), model.topology.output));
    for (r, part) in ranges.into_iter().zip(parts) {
        out.slice_mut(s![r, ..]).assign(&part);
    }
    Ok(out)
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate().skip(1) {
        if v > scores[best] {
            best = i;
        }
    }
    best
}

/// Decodes three output activations into a class.
pub fn class_from_scores(scores: &[f64]) -> CarcinomaClass {
    CarcinomaClass::from_index(argmax(scores)).expect("three output units")
}

/// Class prediction together with the output activations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub class: CarcinomaClass,
    pub scores: [f64; OUTPUT_DIM],
}

impl Prediction {
    fn from_scores(a3: ArrayView1<'_, f64>) -> Self {
        let scores = [a3[0], a3[1], a3[2]];
        Self {
            class: class_from_scores(&scores),
            scores,
        }
    }
}

/// Expands, scales with the model's stored parameters, runs the network and
/// decodes by argmax.
pub fn predict(model: &Model, sample: &MultifractalSample) -> Result<CarcinomaClass> {
    predict_detailed(model, sample).map(|p| p.class)
}

pub fn predict_detailed(model: &Model, sample: &MultifractalSample) -> Result<Prediction> {
    model.require_pipeline()?;
    let fv = expand_features(sample)?;
    let x = scale_vector(&fv, &model.scaling)?;
    let trace = forward(model, x.view())?;
    Ok(Prediction::from_scores(trace.a3.view()))
}

/// Batch version of [`predict_detailed`].
pub fn predict_batch(
    model: &Model,
    samples: &[MultifractalSample],
    exec: Execution,
) -> Result<Vec<Prediction>> {
    model.require_pipeline()?;
    let x = apply_scaling(expand_all(samples)?.view(), &model.scaling)?;
    let a3 = forward_batch(model, x.view(), exec)?;
    Ok(a3.rows().into_iter().map(Prediction::from_scores).collect())
}
