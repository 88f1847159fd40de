use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Dataset;
use crate::error::{Error, Result};
use crate::features::{CarcinomaClass, MultifractalSample, RAW_DIM};

/// Reference per-class averages of the six parameters, rows in breast, lung,
/// renal order, columns in feature order.
pub const REFERENCE_MEANS: [[f64; RAW_DIM]; 3] = [
    [2.797801, -6.38071, 3.121177, 0.740055, 1.993426, 1.885918],
    [2.798677, -6.37214, 3.093834, 0.758865, 1.975734, 1.872967],
    [2.786872, -6.41573, 3.103109, 0.762394, 1.993601, 1.88775],
];

/// Default per-parameter standard deviation of the synthetic generator.
pub const DEFAULT_SIGMA: f64 = 0.005;

/// Independent Gaussian per class and parameter.
///
/// Real multifractal parameters are correlated; this generator ignores that.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub class_means: [[f64; RAW_DIM]; 3],
    pub std_devs: [f64; RAW_DIM],
    pub samples_per_class: usize,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            class_means: REFERENCE_MEANS,
            std_devs: [DEFAULT_SIGMA; RAW_DIM],
            samples_per_class: 350,
            seed: 0,
        }
    }
}

impl GeneratorSpec {
    /// Reference means with one σ shared by all parameters.
    pub fn with_sigma(sigma: f64, samples_per_class: usize, seed: u64) -> Self {
        Self {
            std_devs: [sigma; RAW_DIM],
            samples_per_class,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(sd) = self.std_devs.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidConfig(format!("sigma must be > 0, got {sd}")));
        }
        if self.samples_per_class == 0 {
            return Err(Error::InvalidConfig("samples per class must be >= 1".into()));
        }
        if self.class_means.iter().flatten().any(|m| !m.is_finite()) {
            return Err(Error::InvalidConfig("class means must be finite".into()));
        }
        Ok(())
    }
}

/// Draws `samples_per_class` samples for each class, class by class.
pub fn generate(spec: &GeneratorSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut samples = Vec::with_capacity(3 * spec.samples_per_class);
    for class in CarcinomaClass::ALL {
        let dists = spec.class_means[class.index()]
            .iter()
            .zip(&spec.std_devs)
            .map(|(&mu, &sd)| Normal::new(mu, sd).map_err(|e| Error::InvalidConfig(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        for _ in 0..spec.samples_per_class {
            let mut params = [0.0; RAW_DIM];
            for (p, d) in params.iter_mut().zip(&dists) {
                *p = d.sample(&mut rng);
            }
            samples.push(MultifractalSample::from_params(params, Some(class)));
        }
    }
    Dataset::new(
        samples,
        format!(
            "synthetic seed={} per_class={}",
            spec.seed, spec.samples_per_class
        ),
    )
}
