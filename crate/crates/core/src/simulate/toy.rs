//! Two-class Gaussian toy problem with a small network producing embeddings.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::fnn::{train_fnn, TinyFnn, TrainConfig};
use crate::reference::{ClassId, EmbeddingRecord, Phase};
use crate::{Error, Result};

/// Multivariate normal class: mean, covariance and sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianClassSpec {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub count: usize,
    chol: DMatrix<f64>,
}

impl GaussianClassSpec {
    /// Fails unless `covariance` is symmetric positive definite and matches
    /// the mean's dimension.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>, count: usize) -> Result<Self> {
        let d = mean.len();
        if covariance.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: covariance.nrows(),
            });
        }
        if (&covariance - covariance.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidParameter("covariance must be symmetric".into()));
        }
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularCovariance("class covariance is not positive definite".into()))?
            .l();
        Ok(Self {
            mean,
            covariance,
            count,
            chol,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<f64>> {
        let d = self.mean.len();
        (0..self.count)
            .map(|_| {
                let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                (&self.mean + &self.chol * z).as_slice().to_vec()
            })
            .collect()
    }
}

/// Unit diagonal with `band` on the first off-diagonals, zero elsewhere.
pub fn banded_covariance(dim: usize, band: f64) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| match i.abs_diff(j) {
        0 => 1.0,
        1 => band,
        _ => 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub dim: usize,
    /// Class 1 mean is `separation · 1`; class 0 is centered at 0.
    pub separation: f64,
    /// Out-of-control mean is `shift · 1` with the class 0 covariance.
    pub shift: f64,
    pub band: f64,
    pub train_per_class: usize,
    pub in_control_per_class: usize,
    pub out_of_control: usize,
    pub layer_sizes: Vec<usize>,
    pub embedding_layer: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            dim: 7,
            separation: 10.0,
            shift: 5.0,
            band: 0.3,
            train_per_class: 100,
            in_control_per_class: 50,
            out_of_control: 50,
            layer_sizes: vec![7, 5, 3, 1],
            embedding_layer: 2,
            learning_rate: 0.05,
            max_epochs: 2000,
        }
    }
}

impl ToyConfig {
    pub fn classes(&self) -> Result<[GaussianClassSpec; 2]> {
        let d = self.dim;
        Ok([
            GaussianClassSpec::new(DVector::zeros(d), banded_covariance(d, self.band), 0)?,
            GaussianClassSpec::new(
                DVector::from_element(d, self.separation),
                banded_covariance(d, -self.band),
                0,
            )?,
        ])
    }
}

/// Raw toy samples. Labeled blocks hold class 0 rows followed by class 1 rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyData {
    pub train: Vec<(Vec<f64>, ClassId)>,
    pub in_control: Vec<(Vec<f64>, ClassId)>,
    pub out_of_control: Vec<Vec<f64>>,
}

fn with_count(mut spec: GaussianClassSpec, count: usize) -> GaussianClassSpec {
    spec.count = count;
    spec
}

pub fn gen_toy_data_with(config: &ToyConfig, seed: u64) -> Result<ToyData> {
    let [c0, c1] = config.classes()?;
    let ooc = GaussianClassSpec::new(
        DVector::from_element(config.dim, config.shift),
        c0.covariance.clone(),
        config.out_of_control,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labeled = |count: usize| -> Vec<(Vec<f64>, ClassId)> {
        let mut out = Vec::with_capacity(2 * count);
        for (label, spec) in [(ClassId(0), &c0), (ClassId(1), &c1)] {
            let s = with_count(spec.clone(), count);
            out.extend(s.sample(&mut rng).into_iter().map(|x| (x, label)));
        }
        out
    };
    let train = labeled(config.train_per_class);
    let in_control = labeled(config.in_control_per_class);
    let out_of_control = ooc.sample(&mut rng);
    Ok(ToyData {
        train,
        in_control,
        out_of_control,
    })
}

/// Toy data with the default configuration.
pub fn gen_toy_data(seed: u64) -> ToyData {
    gen_toy_data_with(&ToyConfig::default(), seed).expect("default toy configuration is valid")
}

/// Data, trained network and the resulting embedding stream.
#[derive(Debug, Clone)]
pub struct ToyRun {
    pub data: ToyData,
    pub network: TinyFnn,
    pub records: Vec<EmbeddingRecord>,
}

/// One record per sample: training rows as Phase I, then in-control and
/// out-of-control Phase II rows.
pub fn toy_records(data: &ToyData, network: &TinyFnn) -> Result<Vec<EmbeddingRecord>> {
    let rows = data
        .train
        .iter()
        .map(|(x, c)| (x, Some(*c), Phase::PhaseI))
        .chain(
            data.in_control
                .iter()
                .map(|(x, c)| (x, Some(*c), Phase::PhaseIIInControl)),
        )
        .chain(
            data.out_of_control
                .iter()
                .map(|x| (x, None, Phase::PhaseIIOutOfControl)),
        );
    rows.enumerate()
        .map(|(index, (x, true_label, phase))| {
            let (predicted_label, p) = network.predict(x)?;
            Ok(EmbeddingRecord {
                index,
                embedding: network.embed(x)?,
                true_label,
                predicted_label,
                softmax: Some(vec![1.0 - p, p]),
                phase,
            })
        })
        .collect()
}

/// Generates the data, trains the network on the Phase I block and embeds
/// every sample.
pub fn run_toy(config: &ToyConfig, seed: u64) -> Result<ToyRun> {
    let data = gen_toy_data_with(config, seed)?;
    let xs: Vec<Vec<f64>> = data.train.iter().map(|(x, _)| x.clone()).collect();
    let ys: Vec<f64> = data.train.iter().map(|(_, c)| f64::from(c.0)).collect();
    let train = TrainConfig {
        learning_rate: config.learning_rate,
        max_epochs: config.max_epochs,
        seed: seed.wrapping_add(1),
    };
    let network = train_fnn(&xs, &ys, &config.layer_sizes, config.embedding_layer, &train)?;
    let records = toy_records(&data, &network)?;
    Ok(ToyRun { data, network, records })
}
