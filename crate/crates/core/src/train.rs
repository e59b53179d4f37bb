//! Training loop: batched Monte Carlo optimization of the VIB/VUB objectives
//! with an exponentially decaying learning rate, per-epoch metric logging and
//! information-plane estimates.
//!
//! Everything is deterministic given `(seed, config, data)`: epoch shuffles,
//! per-sample noise draws and evaluation streams are all derived from the
//! config seed.

use std::path::Path;

use rand::seq::SliceRandom;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::losses::{self, LossKind, LossSpec};
use crate::net::{backward, forward, Model};
use crate::opt::{optimizer_step, AdamParams, OptState, OptimizerKind};
use crate::rng::{mix_seed, sample_rng, seeded_rng, standard_normal_vec};
use crate::scalar::{real, to_f64, Scalar};
use crate::PROB_FLOOR;

const SALT_SHUFFLE: u64 = 0x01;
const SALT_NOISE: u64 = 0x02;
const SALT_EVAL: u64 = 0x03;
const SALT_INFO: u64 = 0x04;

#[derive(Clone, Debug)]
pub struct TrainConfig<T> {
    pub loss_kind: LossKind,
    pub beta: T,
    pub base_lr: T,
    pub lr_decay: T,
    pub decay_every: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub adam: AdamParams<T>,
    pub mc_samples_train: usize,
    pub mc_samples_eval: usize,
}

impl<T: Scalar> TrainConfig<T> {
    pub fn new(loss_kind: LossKind, beta: T, epochs: usize, seed: u64) -> Self {
        TrainConfig {
            loss_kind,
            beta,
            base_lr: real(1e-4),
            lr_decay: real(0.97),
            decay_every: 2,
            batch_size: 32,
            epochs,
            seed,
            optimizer: OptimizerKind::Adam,
            adam: AdamParams::default(),
            mc_samples_train: 1,
            mc_samples_eval: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta < T::zero() {
            return Err(Error::invalid("beta must be >= 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be >= 1"));
        }
        if !(self.lr_decay > T::zero() && self.lr_decay <= T::one()) {
            return Err(Error::invalid("lr decay must lie in (0, 1]"));
        }
        if self.decay_every == 0 {
            return Err(Error::invalid("decay interval must be >= 1"));
        }
        if self.mc_samples_train == 0 || self.mc_samples_eval == 0 {
            return Err(Error::invalid("mc sample counts must be >= 1"));
        }
        Ok(())
    }
}

/// `base_lr * lr_decay^floor(epoch / decay_every)`.
pub fn lr_schedule<T: Scalar>(epoch: usize, cfg: &TrainConfig<T>) -> T {
    cfg.base_lr * cfg.lr_decay.powi((epoch / cfg.decay_every) as i32)
}

/// One row per completed epoch.
#[derive(Clone, Copy, Debug)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss_total: f64,
    pub loss_kl: f64,
    pub loss_ce: f64,
    pub loss_min_term: f64,
    pub train_acc: f64,
    pub eval_acc: f64,
    pub eval_ce: f64,
    pub rate_estimate: f64,
    pub distortion_analog: f64,
    pub lr: f64,
}

/// Per-batch tightness diagnostic: both objectives evaluated on the same
/// forwards against the pre-update model.
#[derive(Clone, Copy, Debug)]
pub struct BatchDiagnostic {
    pub epoch: usize,
    pub batch: usize,
    pub vib_total: f64,
    pub vub_total: f64,
    pub min_term: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TraceLog {
    pub epochs: Vec<EpochRecord>,
    pub batch_diag: Vec<BatchDiagnostic>,
}

impl TraceLog {
    pub const CSV_HEADER: &'static str = "epoch,loss_total,loss_kl,loss_ce,loss_min_term,train_acc,eval_acc,eval_ce,rate_estimate,distortion_analog,lr";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.epoch,
                r.loss_total,
                r.loss_kl,
                r.loss_ce,
                r.loss_min_term,
                r.train_acc,
                r.eval_acc,
                r.eval_ce,
                r.rate_estimate,
                r.distortion_analog,
                r.lr
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn check_dims<T: Scalar>(model: &Model<T>, ds: &Dataset<T>) -> Result<()> {
    if ds.d() != model.dims.d_in {
        return Err(Error::LengthMismatch {
            expected: model.dims.d_in,
            got: ds.d(),
        });
    }
    if ds.k() != model.dims.n_classes {
        return Err(Error::LengthMismatch {
            expected: model.dims.n_classes,
            got: ds.k(),
        });
    }
    Ok(())
}

/// Argmax with lowest-index tie-break.
pub(crate) fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Trains `model` on `train_set`, logging one record per epoch. The label
/// entropy for the VUB min term is computed once from the training split.
pub fn train<T: Scalar>(
    model: Model<T>,
    train_set: &Dataset<T>,
    eval_set: &Dataset<T>,
    cfg: &TrainConfig<T>,
) -> Result<(Model<T>, TraceLog)> {
    cfg.validate()?;
    check_dims(&model, train_set)?;
    check_dims(&model, eval_set)?;

    let mut model = model;
    let mut trace = TraceLog::default();
    if cfg.epochs == 0 {
        return Ok((model, trace));
    }

    let h_labels = losses::label_entropy(train_set.labels(), train_set.k())?;
    let spec = LossSpec {
        kind: cfg.loss_kind,
        beta: cfg.beta,
        label_entropy: h_labels,
    };
    let mut opt_state = OptState::new(cfg.optimizer, model.dims);
    let mut shuffle_rng = seeded_rng(mix_seed(cfg.seed, SALT_SHUFFLE));
    let mut noise_rng = seeded_rng(mix_seed(cfg.seed, SALT_NOISE));
    let k_latent = model.dims.latent;

    for epoch in 0..cfg.epochs {
        let lr = lr_schedule(epoch, cfg);
        let mut perm: Vec<usize> = (0..train_set.n()).collect();
        perm.shuffle(&mut shuffle_rng);

        let mut sum_total = 0.0;
        let mut sum_kl = 0.0;
        let mut sum_ce = 0.0;
        let mut sum_min = 0.0;
        let mut n_records = 0usize;
        let mut n_correct = 0usize;

        for (batch_idx, batch) in perm.chunks(cfg.batch_size).enumerate() {
            let mut records = Vec::with_capacity(batch.len() * cfg.mc_samples_train);
            let mut labels = Vec::with_capacity(records.capacity());
            for &i in batch {
                for _ in 0..cfg.mc_samples_train {
                    let eps = standard_normal_vec(&mut noise_rng, k_latent);
                    records.push(forward(&model, train_set.row(i), &eps)?);
                    labels.push(train_set.label(i));
                }
            }

            // Tightness diagnostic on identical forwards, pre-update.
            let vib = losses::vib_loss(&records, &labels, cfg.beta)?;
            let vub = losses::vub_loss(&records, &labels, cfg.beta, h_labels)?;
            trace.batch_diag.push(BatchDiagnostic {
                epoch,
                batch: batch_idx,
                vib_total: to_f64(vib.total),
                vub_total: to_f64(vub.total),
                min_term: to_f64(vub.min_entropy_term),
            });

            let (grads, breakdown) = backward(&model, &records, &labels, &spec)?;
            if !breakdown.total.is_finite() {
                return Err(Error::NanLoss {
                    epoch,
                    batch: batch_idx,
                    kl: to_f64(breakdown.kl),
                    ce: to_f64(breakdown.ce),
                });
            }

            let w = records.len() as f64;
            sum_total += to_f64(breakdown.total) * w;
            sum_kl += to_f64(breakdown.kl) * w;
            sum_ce += to_f64(breakdown.ce) * w;
            sum_min += to_f64(breakdown.min_entropy_term) * w;
            n_records += records.len();
            n_correct += records
                .iter()
                .zip(&labels)
                .filter(|(rec, &y)| argmax(&rec.probs) == y)
                .count();

            optimizer_step(&mut model, &grads, &mut opt_state, lr, &cfg.adam)?;
        }

        let eval = evaluate(
            &model,
            eval_set,
            cfg.mc_samples_eval,
            mix_seed(cfg.seed, SALT_EVAL.wrapping_add((epoch as u64) << 8)),
        )?;
        let info = info_plane_point(
            &model,
            eval_set,
            mix_seed(cfg.seed, SALT_INFO.wrapping_add((epoch as u64) << 8)),
        )?;

        let nr = n_records as f64;
        trace.epochs.push(EpochRecord {
            epoch,
            loss_total: sum_total / nr,
            loss_kl: sum_kl / nr,
            loss_ce: sum_ce / nr,
            loss_min_term: sum_min / nr,
            train_acc: n_correct as f64 / nr,
            eval_acc: eval.accuracy,
            eval_ce: eval.mean_ce,
            rate_estimate: info.rate_estimate,
            distortion_analog: info.distortion_analog,
            lr: to_f64(lr),
        });
    }
    Ok((model, trace))
}

#[derive(Clone, Copy, Debug)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub mean_ce: f64,
    pub mean_classifier_entropy: f64,
}

/// Per sample, averages class probabilities over `mc_samples` noise draws
/// (stream derived from `(seed, sample index)`) and predicts the argmax with
/// lowest-index tie-break.
pub fn evaluate<T: Scalar>(
    model: &Model<T>,
    ds: &Dataset<T>,
    mc_samples: usize,
    seed: u64,
) -> Result<EvalMetrics> {
    if mc_samples == 0 {
        return Err(Error::invalid("mc sample count must be >= 1"));
    }
    check_dims(model, ds)?;
    let k_latent = model.dims.latent;
    let n_classes = model.dims.n_classes;
    let mut n_correct = 0usize;
    let mut sum_ce = 0.0;
    let mut sum_entropy = 0.0;
    for i in 0..ds.n() {
        let mut rng = sample_rng(seed, i as u64);
        let mut mean_p = vec![T::zero(); n_classes];
        for _ in 0..mc_samples {
            let eps = standard_normal_vec(&mut rng, k_latent);
            let rec = forward(model, ds.row(i), &eps)?;
            for (m, &p) in mean_p.iter_mut().zip(&rec.probs) {
                *m = *m + p;
            }
        }
        let inv = T::one() / real::<T>(mc_samples as f64);
        for m in mean_p.iter_mut() {
            *m = *m * inv;
        }
        let y = ds.label(i);
        if argmax(&mean_p) == y {
            n_correct += 1;
        }
        sum_ce += -to_f64(mean_p[y]).max(PROB_FLOOR).ln();
        sum_entropy += to_f64(losses::categorical_entropy(&mean_p).value);
    }
    let n = ds.n() as f64;
    Ok(EvalMetrics {
        accuracy: n_correct as f64 / n,
        mean_ce: sum_ce / n,
        mean_classifier_entropy: sum_entropy / n,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct InfoPlanePoint {
    pub rate_estimate: f64,
    pub distortion_analog: f64,
}

/// Differential entropy of the K-dimensional standard-normal prior,
/// `(K/2) ln(2 pi e)`.
pub fn standard_normal_entropy(k: usize) -> f64 {
    0.5 * k as f64 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln()
}

/// Information-plane estimates: rate as `H(R) - H(Z|X)` with both entropies
/// in closed form from the encoder log-variances, and `1 / mean CE` as the
/// distortion analog (capped at 1e6 once mean CE drops below 1e-6).
pub fn info_plane_point<T: Scalar>(
    model: &Model<T>,
    ds: &Dataset<T>,
    seed: u64,
) -> Result<InfoPlanePoint> {
    check_dims(model, ds)?;
    let k_latent = model.dims.latent;
    let h_prior = standard_normal_entropy(k_latent);
    let ln_2pe = (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();

    let mut sum_h_z_given_x = 0.0;
    let mut sum_ce = 0.0;
    for i in 0..ds.n() {
        let mut rng = sample_rng(seed, i as u64);
        let eps = standard_normal_vec(&mut rng, k_latent);
        let rec = forward(model, ds.row(i), &eps)?;
        sum_h_z_given_x += rec
            .params
            .logvar
            .iter()
            .map(|&lv| 0.5 * (ln_2pe + to_f64(lv)))
            .sum::<f64>();
        sum_ce += -to_f64(rec.probs[ds.label(i)]).max(PROB_FLOOR).ln();
    }
    let n = ds.n() as f64;
    let mean_ce = sum_ce / n;
    let distortion_analog = if mean_ce < 1e-6 { 1e6 } else { 1.0 / mean_ce };
    Ok(InfoPlanePoint {
        rate_estimate: h_prior - sum_h_z_given_x / n,
        distortion_analog,
    })
}
