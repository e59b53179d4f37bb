//! Adversarial evaluation over embedding inputs: untargeted fast gradient
//! sign and a simplified targeted L2 attack (fixed trade-off constant, no
//! binary search, no box constraints).
//!
//! Attack gradients are taken through a single frozen noise draw per
//! attacked sample, and sweeps only count samples that were classified
//! correctly to begin with. The FGS sweep judges success with the same
//! per-sample evaluation draw that established original correctness (a
//! paired comparison, so a zero perturbation can never count as a flip); the
//! gradient uses its own stream. The targeted L2 attack judges success on
//! the final iterate under its frozen draw.

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::net::{forward, input_gradient, Model};
use crate::rng::{mix_seed, sample_rng, standard_normal_vec};
use crate::scalar::{real, to_f64, Scalar};
use crate::train::argmax;
use crate::PROB_FLOOR;

const SALT_CLEAN: u64 = 0x10;
const SALT_GRAD: u64 = 0x11;

/// Parameters echoed into the report.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum AttackParams {
    Fgs {
        epsilon: f64,
        seed: u64,
    },
    L2 {
        target: usize,
        steps: usize,
        c: f64,
        step_size: f64,
        seed: u64,
    },
}

/// Outcome of a sweep. `success_rate` is the fraction of originally-correct
/// samples that were flipped; `mean_l2_of_success` is reported for the
/// targeted attack and absent when there were no successes.
#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub n_evaluated: usize,
    pub n_originally_correct: usize,
    pub n_successful_attacks: usize,
    pub success_rate: f64,
    pub mean_l2_of_success: Option<f64>,
    pub params: AttackParams,
}

fn signum_strict<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Cotangent on the logits of the cross-entropy loss: `p - onehot(y)`,
/// zeroed when the probability floor clamps the loss flat.
fn ce_logit_cotangent<T: Scalar>(probs: &[T], y: usize) -> Vec<T> {
    let floor = real::<T>(PROB_FLOOR);
    if probs[y] <= floor {
        return vec![T::zero(); probs.len()];
    }
    probs
        .iter()
        .enumerate()
        .map(|(i, &p)| if i == y { p - T::one() } else { p })
        .collect()
}

/// Single-sample prediction with a fresh draw from `(seed, stream)`.
fn predict_single<T: Scalar>(model: &Model<T>, x: &[T], seed: u64, stream: u64) -> Result<usize> {
    let eps = standard_normal_vec(&mut sample_rng(seed, stream), model.dims.latent);
    let rec = forward(model, x, &eps)?;
    Ok(argmax(&rec.probs))
}

/// `x + epsilon * sign(d CE / d x)` with one seeded noise draw held fixed
/// through the gradient; `sign(0) = 0`.
pub fn fgs_attack<T: Scalar>(
    model: &Model<T>,
    x: &[T],
    y: usize,
    epsilon: T,
    seed: u64,
) -> Result<Vec<T>> {
    if epsilon < T::zero() {
        return Err(Error::invalid("epsilon must be >= 0"));
    }
    if y >= model.dims.n_classes {
        return Err(Error::LabelOutOfRange {
            label: y,
            classes: model.dims.n_classes,
        });
    }
    let eps_noise = standard_normal_vec(&mut sample_rng(seed, 0), model.dims.latent);
    let rec = forward(model, x, &eps_noise)?;
    let ct = ce_logit_cotangent(&rec.probs, y);
    let grad = input_gradient(model, &rec, &ct)?;
    Ok(x.iter()
        .zip(&grad)
        .map(|(&xi, &g)| xi + epsilon * signum_strict(g))
        .collect())
}

/// FGS over every originally-correct sample of the dataset.
pub fn attack_sweep_fgs<T: Scalar>(
    model: &Model<T>,
    ds: &Dataset<T>,
    epsilon: T,
    seed: u64,
) -> Result<AttackReport> {
    let eval_seed = mix_seed(seed, SALT_CLEAN);
    let grad_seed = mix_seed(seed, SALT_GRAD);
    let mut n_correct = 0usize;
    let mut n_success = 0usize;
    for i in 0..ds.n() {
        let y = ds.label(i);
        if predict_single(model, ds.row(i), eval_seed, i as u64)? != y {
            continue;
        }
        n_correct += 1;
        let x_adv = fgs_attack(model, ds.row(i), y, epsilon, mix_seed(grad_seed, i as u64))?;
        if predict_single(model, &x_adv, eval_seed, i as u64)? != y {
            n_success += 1;
        }
    }
    Ok(AttackReport {
        n_evaluated: ds.n(),
        n_originally_correct: n_correct,
        n_successful_attacks: n_success,
        success_rate: if n_correct > 0 {
            n_success as f64 / n_correct as f64
        } else {
            0.0
        },
        mean_l2_of_success: None,
        params: AttackParams::Fgs {
            epsilon: to_f64(epsilon),
            seed,
        },
    })
}

/// Result of one targeted attack.
#[derive(Clone, Debug)]
pub struct L2AttackOutcome<T> {
    pub x_adv: Vec<T>,
    pub success: bool,
    pub l2_distance: T,
}

/// Gradient descent on `||x' - x||^2 + c * max(0, max_{i != t} logit_i -
/// logit_t)` from `x' = x`, with one frozen noise draw. Success is judged by
/// single-sample inference on the final iterate under the same frozen draw.
pub fn l2_targeted_attack<T: Scalar>(
    model: &Model<T>,
    x: &[T],
    target: usize,
    steps: usize,
    c: T,
    step_size: T,
    seed: u64,
) -> Result<L2AttackOutcome<T>> {
    if steps == 0 {
        return Err(Error::invalid("steps must be >= 1"));
    }
    if !(c > T::zero()) {
        return Err(Error::invalid("trade-off constant must be > 0"));
    }
    if target >= model.dims.n_classes {
        return Err(Error::LabelOutOfRange {
            label: target,
            classes: model.dims.n_classes,
        });
    }
    let eps_noise = standard_normal_vec(&mut sample_rng(seed, 0), model.dims.latent);
    let two = real::<T>(2.0);
    let mut x_adv = x.to_vec();
    for _ in 0..steps {
        let rec = forward(model, &x_adv, &eps_noise)?;
        let logits = rec.logits();
        let mut rival = usize::MAX;
        for i in 0..logits.len() {
            if i != target && (rival == usize::MAX || logits[i] > logits[rival]) {
                rival = i;
            }
        }
        let mut grad: Vec<T> = x_adv.iter().zip(x).map(|(&a, &b)| two * (a - b)).collect();
        if rival != usize::MAX && logits[rival] - logits[target] > T::zero() {
            let mut ct = vec![T::zero(); logits.len()];
            ct[rival] = c;
            ct[target] = -c;
            let hinge_grad = input_gradient(model, &rec, &ct)?;
            for (g, h) in grad.iter_mut().zip(&hinge_grad) {
                *g = *g + *h;
            }
        }
        for (xi, g) in x_adv.iter_mut().zip(&grad) {
            *xi = *xi - step_size * *g;
        }
    }
    let final_rec = forward(model, &x_adv, &eps_noise)?;
    let success = argmax(&final_rec.probs) == target;
    let l2 = x_adv
        .iter()
        .zip(x)
        .map(|(&a, &b)| (a - b) * (a - b))
        .fold(T::zero(), |acc, v| acc + v)
        .sqrt();
    Ok(L2AttackOutcome {
        x_adv,
        success,
        l2_distance: l2,
    })
}

/// Targeted sweep over correctly-classified samples whose true label is not
/// the target. Reports the mean L2 distance over successes (higher means a
/// more robust model); absent when nothing was attacked successfully.
#[allow(clippy::too_many_arguments)]
pub fn attack_sweep_l2<T: Scalar>(
    model: &Model<T>,
    ds: &Dataset<T>,
    target: usize,
    steps: usize,
    c: T,
    step_size: T,
    seed: u64,
) -> Result<AttackReport> {
    let clean_seed = mix_seed(seed, SALT_CLEAN);
    let attack_seed = mix_seed(seed, SALT_GRAD);
    let mut n_correct = 0usize;
    let mut n_success = 0usize;
    let mut l2_sum = 0.0;
    for i in 0..ds.n() {
        let y = ds.label(i);
        if y == target {
            continue;
        }
        if predict_single(model, ds.row(i), clean_seed, i as u64)? != y {
            continue;
        }
        n_correct += 1;
        let outcome = l2_targeted_attack(
            model,
            ds.row(i),
            target,
            steps,
            c,
            step_size,
            mix_seed(attack_seed, i as u64),
        )?;
        if outcome.success {
            n_success += 1;
            l2_sum += to_f64(outcome.l2_distance);
        }
    }
    Ok(AttackReport {
        n_evaluated: ds.n(),
        n_originally_correct: n_correct,
        n_successful_attacks: n_success,
        success_rate: if n_correct > 0 {
            n_success as f64 / n_correct as f64
        } else {
            0.0
        },
        mean_l2_of_success: if n_success > 0 {
            Some(l2_sum / n_success as f64)
        } else {
            None
        },
        params: AttackParams::L2 {
            target,
            steps,
            c: to_f64(c),
            step_size: to_f64(step_size),
            seed,
        },
    })
}
