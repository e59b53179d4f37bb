//! Closed-form loss terms and the VIB / VUB batch objectives.
//!
//! Every scalar term also exposes its partial derivatives with respect to its
//! direct inputs, so the network backward pass and the gradient checks share
//! one set of definitions. The VUB objective subtracts, per sample, the
//! smaller of the empirical label entropy and the classifier output entropy;
//! ties activate the classifier branch so the regularizer stays live at the
//! boundary. All quantities are in nats.

use crate::error::{Error, Result};
use crate::net::{ForwardRecord, GaussianParams};
use crate::scalar::{real, Scalar};
use crate::PROB_FLOOR;

/// Which empirical objective to optimize.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    Vib,
    Vub,
}

/// Which side of the per-sample `min` was active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinBranch {
    ClassifierEntropy,
    LabelEntropy,
}

/// Loss configuration shared by the batch objectives and `net::backward`.
#[derive(Clone, Copy, Debug)]
pub struct LossSpec<T> {
    pub kind: LossKind,
    pub beta: T,
    /// Empirical label entropy H of the training split; ignored for VIB.
    pub label_entropy: T,
}

/// Batch-mean loss terms. `total` is `beta*kl + ce` for VIB and
/// `beta*kl + ce - min_entropy_term` for VUB.
#[derive(Clone, Debug)]
pub struct LossBreakdown<T> {
    pub kl: T,
    pub ce: T,
    pub min_entropy_term: T,
    pub total: T,
    /// Active branch per sample; empty for VIB.
    pub branch: Vec<MinBranch>,
}

/// Scalar value with its gradient with respect to one vector input.
#[derive(Clone, Debug)]
pub struct ValueGrad<T> {
    pub value: T,
    pub grad: Vec<T>,
}

/// KL divergence from a diagonal gaussian to the standard normal, with
/// partials for both parameter vectors.
#[derive(Clone, Debug)]
pub struct KlStdNormal<T> {
    pub value: T,
    pub d_mu: Vec<T>,
    pub d_logvar: Vec<T>,
}

/// D_KL( N(mu, diag(exp(logvar))) || N(0, I) )
/// = 1/2 * sum_i ( mu_i^2 + exp(logvar_i) - logvar_i - 1 ).
pub fn kl_std_normal<T: Scalar>(params: &GaussianParams<T>) -> KlStdNormal<T> {
    let half = real::<T>(0.5);
    let mut value = T::zero();
    let mut d_mu = Vec::with_capacity(params.mu.len());
    let mut d_logvar = Vec::with_capacity(params.logvar.len());
    for (&m, &lv) in params.mu.iter().zip(&params.logvar) {
        let ev = lv.exp();
        value = value + half * (m * m + ev - lv - T::one());
        d_mu.push(m);
        d_logvar.push(half * (ev - T::one()));
    }
    KlStdNormal {
        value,
        d_mu,
        d_logvar,
    }
}

/// -log(max(p_y, floor)) with its gradient in p.
pub fn cross_entropy<T: Scalar>(p: &[T], y: usize) -> Result<ValueGrad<T>> {
    if y >= p.len() {
        return Err(Error::LabelOutOfRange {
            label: y,
            classes: p.len(),
        });
    }
    let floor = real::<T>(PROB_FLOOR);
    let mut grad = vec![T::zero(); p.len()];
    let value = if p[y] > floor {
        grad[y] = -T::one() / p[y];
        -p[y].ln()
    } else {
        // Clamped: locally constant in p_y.
        -floor.ln()
    };
    Ok(ValueGrad { value, grad })
}

/// Shannon entropy -sum p_i log(max(p_i, floor)) with its gradient in p.
pub fn categorical_entropy<T: Scalar>(p: &[T]) -> ValueGrad<T> {
    let floor = real::<T>(PROB_FLOOR);
    let ln_floor = floor.ln();
    let mut value = T::zero();
    let mut grad = Vec::with_capacity(p.len());
    for &pi in p {
        if pi > floor {
            let l = pi.ln();
            value = value - pi * l;
            grad.push(-(l + T::one()));
        } else {
            value = value - pi * ln_floor;
            grad.push(-ln_floor);
        }
    }
    ValueGrad { value, grad }
}

/// Plug-in entropy of the empirical label frequencies.
pub fn label_entropy<T: Scalar>(labels: &[usize], k: usize) -> Result<T> {
    if labels.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut counts = vec![0usize; k];
    for &y in labels {
        if y >= k {
            return Err(Error::LabelOutOfRange {
                label: y,
                classes: k,
            });
        }
        counts[y] += 1;
    }
    let n = real::<T>(labels.len() as f64);
    let mut h = T::zero();
    for &c in &counts {
        if c > 0 {
            let p = real::<T>(c as f64) / n;
            h = h - p * p.ln();
        }
    }
    Ok(h)
}

/// Batch mean of `beta*KL + CE`.
pub fn vib_loss<T: Scalar>(
    records: &[ForwardRecord<T>],
    labels: &[usize],
    beta: T,
) -> Result<LossBreakdown<T>> {
    loss_breakdown(
        records,
        labels,
        &LossSpec {
            kind: LossKind::Vib,
            beta,
            label_entropy: T::zero(),
        },
    )
}

/// Batch mean of `beta*KL + CE - min(h_labels, H(classifier output))`,
/// the min evaluated per sample.
pub fn vub_loss<T: Scalar>(
    records: &[ForwardRecord<T>],
    labels: &[usize],
    beta: T,
    h_labels: T,
) -> Result<LossBreakdown<T>> {
    loss_breakdown(
        records,
        labels,
        &LossSpec {
            kind: LossKind::Vub,
            beta,
            label_entropy: h_labels,
        },
    )
}

/// Shared implementation of both batch objectives.
pub fn loss_breakdown<T: Scalar>(
    records: &[ForwardRecord<T>],
    labels: &[usize],
    spec: &LossSpec<T>,
) -> Result<LossBreakdown<T>> {
    if records.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if records.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: records.len(),
            got: labels.len(),
        });
    }
    if spec.beta < T::zero() {
        return Err(Error::invalid("beta must be >= 0"));
    }
    if spec.label_entropy < T::zero() {
        return Err(Error::invalid("label entropy must be >= 0"));
    }

    let mut kl_sum = T::zero();
    let mut ce_sum = T::zero();
    let mut min_sum = T::zero();
    let mut branch = Vec::new();
    for (rec, &y) in records.iter().zip(labels) {
        kl_sum = kl_sum + kl_std_normal(&rec.params).value;
        ce_sum = ce_sum + cross_entropy(&rec.probs, y)?.value;
        if spec.kind == LossKind::Vub {
            let h_c = categorical_entropy(&rec.probs).value;
            if h_c <= spec.label_entropy {
                min_sum = min_sum + h_c;
                branch.push(MinBranch::ClassifierEntropy);
            } else {
                min_sum = min_sum + spec.label_entropy;
                branch.push(MinBranch::LabelEntropy);
            }
        }
    }
    let n = real::<T>(records.len() as f64);
    let kl = kl_sum / n;
    let ce = ce_sum / n;
    let min_entropy_term = if spec.kind == LossKind::Vub {
        min_sum / n
    } else {
        T::zero()
    };
    let total = spec.beta * kl + ce - min_entropy_term;
    Ok(LossBreakdown {
        kl,
        ce,
        min_entropy_term,
        total,
        branch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::Matrix;
    use crate::net::{forward, Dims, Model};
    use proptest::prelude::*;

    /// Model whose encoder output and logits are set directly through the
    /// biases, so params and probs are hand-chosen exactly.
    fn bias_model(mu: &[f64], logvar: &[f64], logits: &[f64]) -> Model<f64> {
        let k = mu.len();
        let dims = Dims {
            d_in: 1,
            hidden: 1,
            latent: k,
            n_classes: logits.len(),
        };
        let mut enc_b2 = mu.to_vec();
        enc_b2.extend_from_slice(logvar);
        Model {
            dims,
            enc_w1: Matrix::zeros(1, 1),
            enc_b1: vec![0.0],
            enc_w2: Matrix::zeros(2 * k, 1),
            enc_b2,
            head_w: Matrix::zeros(logits.len(), k),
            head_b: logits.to_vec(),
        }
    }

    fn record(mu: &[f64], logvar: &[f64], logits: &[f64]) -> crate::net::ForwardRecord<f64> {
        let m = bias_model(mu, logvar, logits);
        forward(&m, &[0.0], &vec![0.0; mu.len()]).unwrap()
    }

    /// Gauss-Legendre-free oracle: plain composite Simpson over a wide range.
    fn kl_by_quadrature(mu: f64, logvar: f64) -> f64 {
        let sigma = (0.5 * logvar).exp();
        let lo = mu - 12.0 * sigma.max(1.0);
        let hi = mu + 12.0 * sigma.max(1.0);
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let pdf = |x: f64| {
            let t = (x - mu) / sigma;
            (-0.5 * t * t).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        };
        let integrand = |x: f64| {
            let p = pdf(x);
            if p < 1e-300 {
                0.0
            } else {
                let t = (x - mu) / sigma;
                let logratio = -0.5 * t * t - 0.5 * logvar + 0.5 * x * x;
                p * logratio
            }
        };
        let mut s = integrand(lo) + integrand(hi);
        for i in 1..n {
            let x = lo + i as f64 * h;
            s += integrand(x) * if i % 2 == 0 { 2.0 } else { 4.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn kl_zero_iff_standard_normal() {
        let p = GaussianParams {
            mu: vec![0.0_f64, 0.0],
            logvar: vec![0.0, 0.0],
        };
        assert_eq!(kl_std_normal(&p).value, 0.0);
    }

    #[test]
    fn kl_closed_form_matches_quadrature() {
        let p = GaussianParams {
            mu: vec![1.0_f64],
            logvar: vec![0.0],
        };
        let kl = kl_std_normal(&p);
        assert!((kl.value - 0.5).abs() < 1e-12);
        assert!((kl.value - kl_by_quadrature(1.0, 0.0)).abs() < 1e-8);

        let p = GaussianParams {
            mu: vec![0.0, 0.0],
            logvar: vec![4.0_f64.ln(), 0.0],
        };
        let kl = kl_std_normal(&p);
        let expected = 0.5 * (4.0 - 4.0_f64.ln() - 1.0);
        assert!((kl.value - expected).abs() < 1e-12);
        assert!((expected - 0.806853).abs() < 1e-6);
        let quad = kl_by_quadrature(0.0, 4.0_f64.ln()) + kl_by_quadrature(0.0, 0.0);
        assert!((kl.value - quad).abs() < 1e-8);
    }

    #[test]
    fn kl_partials_match_finite_differences() {
        let p = GaussianParams {
            mu: vec![0.7_f64, -1.2],
            logvar: vec![0.3, -0.9],
        };
        let kl = kl_std_normal(&p);
        let h = 1e-6;
        for i in 0..2 {
            let mut up = p.clone();
            up.mu[i] += h;
            let mut dn = p.clone();
            dn.mu[i] -= h;
            let fd = (kl_std_normal(&up).value - kl_std_normal(&dn).value) / (2.0 * h);
            assert!((fd - kl.d_mu[i]).abs() < 1e-8);

            let mut up = p.clone();
            up.logvar[i] += h;
            let mut dn = p.clone();
            dn.logvar[i] -= h;
            let fd = (kl_std_normal(&up).value - kl_std_normal(&dn).value) / (2.0 * h);
            assert!((fd - kl.d_logvar[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn cross_entropy_examples() {
        let one_hot = [0.0_f64, 1.0, 0.0];
        assert!(cross_entropy(&one_hot, 1).unwrap().value.abs() < 1e-12);
        let uniform = [0.25_f64; 4];
        assert!((cross_entropy(&uniform, 2).unwrap().value - 4.0_f64.ln()).abs() < 1e-12);
        let p = [0.7_f64, 0.3];
        let ce = cross_entropy(&p, 0).unwrap();
        assert!((ce.value - 0.356675).abs() < 1e-6);
        assert!((ce.grad[0] + 1.0 / 0.7).abs() < 1e-12);
        assert_eq!(ce.grad[1], 0.0);
        assert!(cross_entropy(&p, 2).is_err());
    }

    #[test]
    fn categorical_entropy_examples() {
        assert!(categorical_entropy(&[1.0_f64, 0.0]).value.abs() < 1e-10);
        assert!((categorical_entropy(&[0.25_f64; 4]).value - 4.0_f64.ln()).abs() < 1e-12);
        assert!((categorical_entropy(&[0.7_f64, 0.3]).value - 0.610864).abs() < 1e-6);
    }

    #[test]
    fn label_entropy_examples() {
        assert!((label_entropy::<f64>(&[0, 1, 0, 1], 2).unwrap() - 2.0_f64.ln()).abs() < 1e-12);
        assert_eq!(label_entropy::<f64>(&[3, 3, 3], 4).unwrap(), 0.0);
        assert!((label_entropy::<f64>(&[0, 0, 0, 1], 2).unwrap() - 0.562335).abs() < 1e-6);
        assert!(label_entropy::<f64>(&[], 2).is_err());
        assert!(label_entropy::<f64>(&[2], 2).is_err());
    }

    #[test]
    fn vib_loss_examples() {
        let r1 = record(&[1.0], &[0.0], &[0.0, 3.0_f64.ln()]);
        let r2 = record(&[0.0], &[4.0_f64.ln()], &[0.0, 0.0]);

        // Hand per-sample values: kl1 = 0.5, ce1 = -ln 0.75 (label 1);
        // kl2 = 0.5*(4 - ln4 - 1), ce2 = ln 2 (label 0).
        let kl1 = 0.5;
        let ce1 = -(0.75_f64.ln());
        let kl2 = 0.5 * (4.0 - 4.0_f64.ln() - 1.0);
        let ce2 = 2.0_f64.ln();

        let beta = 0.3;
        let l = vib_loss(&[r1.clone(), r2.clone()], &[1, 0], beta).unwrap();
        assert!((l.kl - (kl1 + kl2) / 2.0).abs() < 1e-12);
        assert!((l.ce - (ce1 + ce2) / 2.0).abs() < 1e-12);
        assert_eq!(l.min_entropy_term, 0.0);
        assert!((l.total - (beta * l.kl + l.ce)).abs() < 1e-15);

        // beta = 0 leaves only the cross entropy.
        let l0 = vib_loss(&[r1.clone()], &[1], 0.0).unwrap();
        assert!((l0.total - l0.ce).abs() < 1e-15);

        // Single sample equals its own terms.
        let l1 = vib_loss(&[r1], &[1], beta).unwrap();
        assert!((l1.total - (beta * kl1 + ce1)).abs() < 1e-12);
    }

    #[test]
    fn vub_reduces_to_vib_when_min_vanishes() {
        // Near-one-hot classifier output: entropy ~ 0, so the min term is ~0.
        let r = record(&[0.5], &[0.0], &[60.0, 0.0]);
        let vib = vib_loss(&[r.clone()], &[0], 0.1).unwrap();
        let vub = vub_loss(&[r.clone()], &[0], 0.1, 2.0_f64.ln()).unwrap();
        assert!((vub.total - vib.total).abs() < 1e-12);

        // h_labels = 0 degenerates VUB to VIB for any batch.
        let r2 = record(&[0.1], &[0.2], &[0.3, -0.4]);
        let vib = vib_loss(&[r.clone(), r2.clone()], &[0, 1], 0.1).unwrap();
        let vub = vub_loss(&[r, r2], &[0, 1], 0.1, 0.0).unwrap();
        assert_eq!(vub.min_entropy_term, 0.0);
        assert!((vub.total - vib.total).abs() < 1e-15);
        assert_eq!(vub.branch, vec![MinBranch::LabelEntropy; 2]);
    }

    #[test]
    fn vub_uniform_outputs_subtract_ln_k() {
        // Uniform outputs at k = 2 with h_labels = ln 2: tie, classifier branch.
        let r = record(&[0.0], &[0.0], &[0.0, 0.0]);
        let h = 2.0_f64.ln();
        let vib = vib_loss(&[r.clone()], &[0], 0.05).unwrap();
        let vub = vub_loss(&[r], &[0], 0.05, h).unwrap();
        assert!((vib.total - vub.total - h).abs() < 1e-12);
        assert_eq!(vub.branch, vec![MinBranch::ClassifierEntropy]);
    }

    proptest! {
        #[test]
        fn vub_never_exceeds_vib_and_gap_is_min_term(
            seed in 0u64..500,
            beta in 0.0f64..2.0,
        ) {
            use crate::net::init_model;
            use crate::rng::{sample_rng, standard_normal_vec};
            let m: Model<f64> = init_model(3, 3, 2, 3, seed).unwrap();
            let mut recs = Vec::new();
            let mut labels = Vec::new();
            for i in 0..4u64 {
                let mut rng = sample_rng(seed ^ 0xabc, i);
                let x: Vec<f64> = standard_normal_vec(&mut rng, 3);
                let eps: Vec<f64> = standard_normal_vec(&mut rng, 2);
                recs.push(forward(&m, &x, &eps).unwrap());
                labels.push((i % 3) as usize);
            }
            let h = label_entropy(&labels, 3).unwrap();
            let vib = vib_loss(&recs, &labels, beta).unwrap();
            let vub = vub_loss(&recs, &labels, beta, h).unwrap();
            prop_assert!(vub.total <= vib.total + 1e-12);
            prop_assert!(((vib.total - vub.total) - vub.min_entropy_term).abs() < 1e-12);
            prop_assert!(vub.min_entropy_term <= h + 1e-12);
        }

        #[test]
        fn entropy_bounds_hold(
            raw in proptest::collection::vec(1e-6f64..1.0, 2..6)
        ) {
            let sum: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|v| v / sum).collect();
            let h = categorical_entropy(&p).value;
            prop_assert!(h >= -1e-12);
            prop_assert!(h <= (p.len() as f64).ln() + 1e-12);
        }

        #[test]
        fn kl_nonnegative(
            mu in proptest::collection::vec(-4.0f64..4.0, 1..5),
            lv in proptest::collection::vec(-6.0f64..6.0, 1..5)
        ) {
            let n = mu.len().min(lv.len());
            let p = GaussianParams { mu: mu[..n].to_vec(), logvar: lv[..n].to_vec() };
            prop_assert!(kl_std_normal(&p).value >= 0.0);
        }
    }
}
