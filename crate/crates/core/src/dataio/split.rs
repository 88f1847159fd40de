use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};
use crate::features::CarcinomaClass;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.75,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }

    fn train_count(&self, n: usize) -> usize {
        (self.train_fraction * n as f64).floor() as usize
    }
}

/// Splits into (train, validation).
///
/// Stratified mode shuffles each class separately and sends
/// `floor(train_fraction * n_k)` of class `k` to the training set.
pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train_idx = Vec::new();
    let mut valid_idx = Vec::new();
    let mut take = |mut idx: Vec<usize>, rng: &mut ChaCha8Rng| {
        idx.shuffle(rng);
        let k = spec.train_count(idx.len());
        valid_idx.extend_from_slice(&idx[k..]);
        idx.truncate(k);
        train_idx.extend(idx);
    };

    let samples = data.samples();
    if spec.stratified {
        for class in CarcinomaClass::ALL {
            let idx: Vec<usize> = (0..samples.len())
                .filter(|&i| samples[i].label == Some(class))
                .collect();
            if idx.len() == 1 {
                return Err(Error::InsufficientData(format!(
                    "class {} has a single sample; stratified split needs at least 2",
                    class.label()
                )));
            }
            take(idx, &mut rng);
        }
    } else {
        if samples.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "split needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        take((0..samples.len()).collect(), &mut rng);
    }

    let pick = |idx: &[usize], tag: &str| {
        Dataset::new(
            idx.iter().map(|&i| samples[i]).collect(),
            format!("{} [{tag}]", data.provenance),
        )
    };
    Ok((pick(&train_idx, "train")?, pick(&valid_idx, "validation")?))
}
