//! Dual-objective training: fidelity reconstruction plus latent metric
//! preservation, optimized with Adam and early stopping on validation
//! fidelity.

mod adam;
mod grad;
mod loss;

pub use adam::Adam;
pub use grad::{
    backprop_classical, circuit_grad, fidelity_and_grad, fidelity_grad_pred, latent_distance_grad,
    FidelityGrad, GradMethod, FD_STEP, INV_SQRT_FLOOR,
};
pub use loss::{
    metric_loss, metric_loss_for_pairs, recon_loss, total_loss, MetricLoss, PairSample,
    MIN_BURES_FOR_PAIR, RATIO_EPSILON,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::MeasurementVector;
use crate::model::{
    decode, forward, init_params, Architecture, CircuitParams, DecoderMode, ModelParams,
};
use crate::qcore::{DensityMatrix, FidelityReference};
use crate::rng;
use crate::stategen::StateRecord;

const INIT_STREAM: u64 = 0x0100_0000_0000;
const SHUFFLE_STREAM: u64 = 0x0200_0000_0000;
const PAIR_STREAM: u64 = 0x0300_0000_0000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs_max: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda_metric: f64,
    pub pairs_per_batch: usize,
    pub patience: usize,
    pub seed: u64,
    pub mode: DecoderMode,
    pub grad_method: GradMethod,
    pub architecture: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs_max: 300,
            batch_size: 64,
            learning_rate: 1e-3,
            lambda_metric: 0.06,
            pairs_per_batch: 50,
            patience: 60,
            seed: 0,
            mode: DecoderMode::Corrected,
            grad_method: GradMethod::ShiftRule,
            architecture: Architecture::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if !(self.lambda_metric >= 0.0 && self.lambda_metric.is_finite()) {
            return bad("lambda_metric must be a finite value >= 0");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a finite value >= 0");
        }
        if self.pairs_per_batch == 0 {
            return bad("pairs_per_batch must be >= 1");
        }
        if self.patience == 0 {
            return bad("patience must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.epochs_max == 0 {
            return bad("epochs_max must be >= 1");
        }
        Ok(())
    }
}

/// A measurement vector with its true state and cached √ρ.
#[derive(Clone, Debug)]
pub struct Example {
    pub x: MeasurementVector,
    pub rho: DensityMatrix,
    reference: FidelityReference,
}

impl Example {
    pub fn new(x: MeasurementVector, rho: DensityMatrix) -> Result<Self> {
        let reference = FidelityReference::new(&rho)?;
        Ok(Self { x, rho, reference })
    }

    pub fn from_record(r: &StateRecord) -> Result<Self> {
        Self::new(r.pauli.clone(), r.rho.clone())
    }

    pub fn from_records(records: &[StateRecord]) -> Result<Vec<Self>> {
        records.iter().map(Self::from_record).collect()
    }

    pub fn fidelity(&self, sigma: &DensityMatrix) -> Result<f64> {
        self.reference.fidelity(sigma)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub recon_loss: f64,
    pub metric_loss: f64,
    pub total_loss: f64,
    pub val_fidelity: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Index into `epochs` of the best validation fidelity.
    pub best_epoch: Option<usize>,
}

impl TrainHistory {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.best_epoch.map(|i| &self.epochs[i])
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    /// `epoch,recon_loss,metric_loss,total_loss,val_fidelity` rows.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::result::Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        for rec in &self.epochs {
            out.serialize(rec)?;
        }
        if self.epochs.is_empty() {
            out.write_record(["epoch", "recon_loss", "metric_loss", "total_loss", "val_fidelity"])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Loss components of one batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchLosses {
    pub recon: f64,
    pub metric: f64,
    pub total: f64,
    pub k_valid: usize,
}

fn forward_raw(params: &ModelParams, x: &[f64]) -> Result<(crate::model::EncoderTrace, CircuitParams)> {
    let trace = params.encoder.forward_trace(x)?;
    let raw = params.latent_map.0.forward(&trace.z);
    let theta = CircuitParams::from_raw(&raw, params.mode)?;
    Ok((trace, theta))
}

/// Batch objective for fixed pairs, without gradients.
pub fn batch_objective(
    params: &ModelParams,
    batch: &[&Example],
    pairs: &[(usize, usize)],
    lambda: f64,
) -> Result<BatchLosses> {
    let mut recon = 0.0;
    let mut latents = Vec::with_capacity(batch.len());
    for ex in batch {
        let (trace, theta) = forward_raw(params, ex.x.as_slice())?;
        recon += 1.0 - ex.fidelity(&decode(&theta)?)?;
        latents.push(trace.z);
    }
    recon /= batch.len() as f64;
    let rhos: Vec<DensityMatrix> = batch.iter().map(|e| e.rho.clone()).collect();
    let m = metric_loss_for_pairs(&latents, &rhos, pairs)?;
    Ok(BatchLosses {
        recon,
        metric: m.value,
        total: total_loss(recon, m.value, lambda),
        k_valid: m.k_valid,
    })
}

/// Batch objective and its exact gradient for fixed pairs.
pub fn batch_gradient(
    params: &ModelParams,
    batch: &[&Example],
    pairs: &[(usize, usize)],
    lambda: f64,
    method: GradMethod,
) -> Result<(BatchLosses, ModelParams)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let b = batch.len() as f64;
    let mut recon = 0.0;
    let mut traces = Vec::with_capacity(batch.len());
    let mut dthetas = Vec::with_capacity(batch.len());
    for ex in batch {
        let (trace, theta) = forward_raw(params, ex.x.as_slice())?;
        let sigma = decode(&theta)?;
        let fg = fidelity_and_grad(&ex.reference, sigma.matrix())?;
        recon += 1.0 - fg.fidelity;
        dthetas.push(circuit_grad(&theta, &fg.grad.scale(-1.0 / b), method)?);
        traces.push(trace);
    }
    recon /= b;

    let latents: Vec<Vec<f64>> = traces.iter().map(|t| t.z.clone()).collect();
    let rhos: Vec<DensityMatrix> = batch.iter().map(|e| e.rho.clone()).collect();
    let m = metric_loss_for_pairs(&latents, &rhos, pairs)?;
    let mut dz = vec![vec![0.0; params.architecture().latent]; batch.len()];
    if m.k_valid > 0 && lambda != 0.0 {
        let kv = m.k_valid as f64;
        for p in m.pairs.iter().filter(|p| p.valid) {
            let denom = p.d_bures + RATIO_EPSILON;
            let coef = lambda * 2.0 * (p.d_latent / denom - 1.0) / denom / kv;
            let g = latent_distance_grad(&latents[p.i], &latents[p.j]);
            for (k, gk) in g.iter().enumerate() {
                dz[p.i][k] += coef * gk;
                dz[p.j][k] -= coef * gk;
            }
        }
    }

    let mut grad = ModelParams::zeros(params.architecture(), params.mode);
    for ((trace, dtheta), dzi) in traces.iter().zip(&dthetas).zip(&dz) {
        backprop_classical(trace, params, dzi, dtheta, &mut grad);
    }
    Ok((
        BatchLosses {
            recon,
            metric: m.value,
            total: total_loss(recon, m.value, lambda),
            k_valid: m.k_valid,
        },
        grad,
    ))
}

/// Reconstruction fidelities of a dataset under `params`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mean: f64,
    pub median: f64,
    pub per_state: Vec<f64>,
}

pub fn evaluate(params: &ModelParams, data: &[Example]) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let per_state = data
        .iter()
        .map(|ex| ex.fidelity(&forward(&ex.x, params)?.rho_pred))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Evaluation {
        mean: per_state.iter().sum::<f64>() / per_state.len() as f64,
        median: median(&per_state),
        per_state,
    })
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Best parameters and the full per-epoch history.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: TrainHistory,
}

pub fn train(train_set: &[Example], val_set: &[Example], config: &TrainConfig) -> Result<TrainOutcome> {
    train_observed(train_set, val_set, config, |_| {})
}

/// [`train`] with a callback after every completed epoch.
pub fn train_observed(
    train_set: &[Example],
    val_set: &[Example],
    config: &TrainConfig,
    mut observe: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::InvalidArgument(
            "training and validation sets must be non-empty".into(),
        ));
    }
    let mut params = init_params(
        &mut rng::stream(config.seed, INIT_STREAM),
        config.mode,
        config.architecture,
    );
    let mut opt = Adam::new(params.n_params(), config.learning_rate);
    let mut history = TrainHistory::default();
    let mut best = params.clone();
    let mut best_fid = f64::NEG_INFINITY;
    let mut stale = 0;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.epochs_max {
        rng::shuffle(&mut rng::stream(config.seed, SHUFFLE_STREAM + epoch as u64), &mut order);
        let (mut recon, mut metric, mut total) = (0.0, 0.0, 0.0);
        let mut n_batches = 0;
        for (bi, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train_set[i]).collect();
            let mut pr = rng::stream(config.seed, PAIR_STREAM + ((epoch as u64) << 20) + bi as u64);
            let pairs = rng::distinct_pairs(&mut pr, batch.len(), config.pairs_per_batch);
            let (losses, grad) =
                batch_gradient(&params, &batch, &pairs, config.lambda_metric, config.grad_method)?;
            let grad_ok = grad.layers().iter().all(|l| l.check_finite());
            if !losses.total.is_finite() || !grad_ok {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: bi,
                    param_norm: params.l2_norm(),
                });
            }
            opt.step(&mut params, &grad);
            recon += losses.recon;
            metric += losses.metric;
            total += losses.total;
            n_batches += 1;
        }
        let nb = n_batches as f64;
        let val = evaluate(&params, val_set)?;
        let record = EpochRecord {
            epoch,
            recon_loss: recon / nb,
            metric_loss: metric / nb,
            total_loss: total / nb,
            val_fidelity: val.mean,
        };
        history.epochs.push(record);
        observe(&record);
        if val.mean > best_fid {
            best_fid = val.mean;
            best = params.clone();
            history.best_epoch = Some(history.epochs.len() - 1);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        params: best,
        history,
    })
}
