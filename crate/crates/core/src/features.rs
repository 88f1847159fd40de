//! Raw multifractal samples, quadratic feature expansion and z-score scaling.

use std::fmt;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Number of raw multifractal parameters per sample.
pub const RAW_DIM: usize = 6;

/// Linear terms plus every degree-2 monomial `x_i * x_j` with `i <= j`.
pub const FEATURE_DIM: usize = RAW_DIM + RAW_DIM * (RAW_DIM + 1) / 2;

/// Column names of the raw parameters, in feature order.
pub const PARAMETER_NAMES: [&str; RAW_DIM] = [
    "d_max",
    "q",
    "alpha_min",
    "f_alpha_min",
    "alpha_max",
    "f_alpha_max",
];

/// Primary carcinoma of a metastasis sample.
///
/// The numeric label is also the 1-based index of the network output unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CarcinomaClass {
    Breast = 1,
    Lung = 2,
    Renal = 3,
}

impl CarcinomaClass {
    pub const ALL: [CarcinomaClass; 3] = [
        CarcinomaClass::Breast,
        CarcinomaClass::Lung,
        CarcinomaClass::Renal,
    ];

    pub fn label(self) -> u8 {
        self as u8
    }

    /// Zero-based output-unit index.
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            1 => Some(CarcinomaClass::Breast),
            2 => Some(CarcinomaClass::Lung),
            3 => Some(CarcinomaClass::Renal),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CarcinomaClass::Breast => "breast",
            CarcinomaClass::Lung => "lung",
            CarcinomaClass::Renal => "renal",
        }
    }
}

impl fmt::Display for CarcinomaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The six multifractal parameters of one image, optionally labelled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultifractalSample {
    /// Maximum of the generalized fractal dimension.
    pub d_max: f64,
    /// Exponent of the fractal dimension.
    pub q: f64,
    /// Minimum Hölder exponent.
    pub alpha_min: f64,
    /// Minimum of the multifractal spectrum f(α).
    pub f_alpha_min: f64,
    /// Maximum Hölder exponent.
    pub alpha_max: f64,
    /// Maximum of the multifractal spectrum f(α).
    pub f_alpha_max: f64,
    pub label: Option<CarcinomaClass>,
}

impl MultifractalSample {
    /// Builds a sample from parameters in [`PARAMETER_NAMES`] order.
    pub fn from_params(params: [f64; RAW_DIM], label: Option<CarcinomaClass>) -> Self {
        let [d_max, q, alpha_min, f_alpha_min, alpha_max, f_alpha_max] = params;
        Self {
            d_max,
            q,
            alpha_min,
            f_alpha_min,
            alpha_max,
            f_alpha_max,
            label,
        }
    }

    pub fn params(&self) -> [f64; RAW_DIM] {
        [
            self.d_max,
            self.q,
            self.alpha_min,
            self.f_alpha_min,
            self.alpha_max,
            self.f_alpha_max,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in PARAMETER_NAMES.iter().zip(self.params()) {
            if !value.is_finite() {
                return Err(Error::InvalidSample(format!("{name} is not finite ({value})")));
            }
        }
        Ok(())
    }
}

/// Expanded 27-entry network input for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Appends the six raw parameters followed by the 21 products `x_i * x_j`,
/// `i <= j`, in lexicographic `(i, j)` order.
pub fn expand_features(sample: &MultifractalSample) -> Result<FeatureVector> {
    sample.validate()?;
    let x = sample.params();
    let mut out = [0.0; FEATURE_DIM];
    out[..RAW_DIM].copy_from_slice(&x);
    let mut k = RAW_DIM;
    for i in 0..RAW_DIM {
        for j in i..RAW_DIM {
            out[k] = x[i] * x[j];
            k += 1;
        }
    }
    debug_assert_eq!(k, FEATURE_DIM);
    Ok(FeatureVector(out))
}

/// Expands every sample into one row of an `m x 27` matrix.
pub fn expand_all(samples: &[MultifractalSample]) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((samples.len(), FEATURE_DIM));
    for (mut row, sample) in out.rows_mut().into_iter().zip(samples) {
        let fv = expand_features(sample)?;
        row.assign(&ndarray::ArrayView1::from(&fv.0[..]));
    }
    Ok(out)
}

/// Per-column mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingParams {
    means: Vec<f64>,
    std_devs: Vec<f64>,
}

impl ScalingParams {
    pub fn new(means: Vec<f64>, std_devs: Vec<f64>) -> Result<Self> {
        if means.len() != std_devs.len() {
            return Err(Error::DimensionMismatch {
                context: "scaling std-devs",
                expected: means.len(),
                found: std_devs.len(),
            });
        }
        if let Some(bad) = means.iter().position(|m| !m.is_finite()) {
            return Err(Error::InvalidInput(format!("scaling mean {bad} is not finite")));
        }
        if let Some(column) = std_devs.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::DegenerateFeature { column });
        }
        Ok(Self { means, std_devs })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn std_devs(&self) -> &[f64] {
        &self.std_devs
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// Maps scaled values back to the original units.
    pub fn invert(&self, scaled: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_columns(scaled.ncols())?;
        let mut out = scaled.to_owned();
        for (mut col, (&mu, &sigma)) in out
            .axis_iter_mut(Axis(1))
            .zip(self.means.iter().zip(&self.std_devs))
        {
            col.mapv_inplace(|z| z * sigma + mu);
        }
        Ok(out)
    }

    fn check_columns(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "feature columns",
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

/// Mean with one correction pass, so the result is accurate even when the
/// column's spread is tiny relative to its magnitude.
fn column_mean(values: impl Iterator<Item = f64> + Clone, m: f64) -> f64 {
    let rough = values.clone().sum::<f64>() / m;
    rough + values.map(|v| v - rough).sum::<f64>() / m
}

/// Fits `μ_i = Σx/m` and `σ_i² = Σ(x-μ)²/(m-1)` per column.
pub fn fit_scaling(features: ArrayView2<'_, f64>) -> Result<ScalingParams> {
    let m = features.nrows();
    if m < 2 {
        return Err(Error::InsufficientData(format!(
            "fitting scaling needs at least 2 rows, got {m}"
        )));
    }
    let mut means = Vec::with_capacity(features.ncols());
    let mut std_devs = Vec::with_capacity(features.ncols());
    for (column, col) in features.axis_iter(Axis(1)).enumerate() {
        let mean = column_mean(col.iter().copied(), m as f64);
        let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
        let sd = var.sqrt();
        if sd <= 0.0 || !sd.is_finite() {
            return Err(Error::DegenerateFeature { column });
        }
        means.push(mean);
        std_devs.push(sd);
    }
    ScalingParams::new(means, std_devs)
}

/// Applies `(x - μ_i) / σ_i` column-wise.
pub fn apply_scaling(features: ArrayView2<'_, f64>, params: &ScalingParams) -> Result<Array2<f64>> {
    params.check_columns(features.ncols())?;
    let mut out = features.to_owned();
    for (mut col, (&mu, &sigma)) in out
        .axis_iter_mut(Axis(1))
        .zip(params.means.iter().zip(&params.std_devs))
    {
        col.mapv_inplace(|x| (x - mu) / sigma);
    }
    Ok(out)
}

/// Scales a single feature vector.
pub fn scale_vector(fv: &FeatureVector, params: &ScalingParams) -> Result<Array1<f64>> {
    params.check_columns(FEATURE_DIM)?;
    Ok(fv
        .0
        .iter()
        .zip(params.means.iter().zip(&params.std_devs))
        .map(|(&x, (&mu, &sigma))| (x - mu) / sigma)
        .collect())
}
