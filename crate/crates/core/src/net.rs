//! Stochastic classifier: diagonal-gaussian encoder, reparameterized latent,
//! softmax head. Forward and backward passes are coded explicitly; the
//! backward pass returns the exact analytic gradient of the batch-mean VIB or
//! VUB loss with the noise draws held fixed.

use crate::error::{Error, Result};
use crate::losses::{self, LossBreakdown, LossKind, LossSpec, MinBranch};
use crate::mat::Matrix;
use crate::rng::{seeded_rng, uniform_symmetric};
use crate::scalar::{real, Scalar};
use crate::PROB_FLOOR;

/// Raw log-variance outputs are clamped to `[-LOGVAR_CLAMP, LOGVAR_CLAMP]`.
pub const LOGVAR_CLAMP: f64 = 10.0;

/// Layer sizes of the classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub d_in: usize,
    pub hidden: usize,
    /// Latent dimension K; the encoder emits 2K values (mean and log-variance).
    pub latent: usize,
    pub n_classes: usize,
}

/// Parameters of the stochastic classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    pub dims: Dims,
    /// hidden x d_in
    pub enc_w1: Matrix<T>,
    pub enc_b1: Vec<T>,
    /// 2*latent x hidden
    pub enc_w2: Matrix<T>,
    pub enc_b2: Vec<T>,
    /// n_classes x latent
    pub head_w: Matrix<T>,
    pub head_b: Vec<T>,
}

/// Per-sample diagonal-gaussian encoder output.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianParams<T> {
    pub mu: Vec<T>,
    /// Natural-log variance, clamped to `[-LOGVAR_CLAMP, LOGVAR_CLAMP]`.
    pub logvar: Vec<T>,
}

/// Everything one forward pass produced, with the caches backward needs.
#[derive(Clone, Debug)]
pub struct ForwardRecord<T> {
    pub x: Vec<T>,
    pub params: GaussianParams<T>,
    pub eps: Vec<T>,
    pub z: Vec<T>,
    pub probs: Vec<T>,
    /// First encoder layer before ReLU.
    pre_act1: Vec<T>,
    /// First encoder layer after ReLU.
    hidden: Vec<T>,
    /// Second encoder layer before the mean / log-variance split and clamp.
    enc_raw: Vec<T>,
    logits: Vec<T>,
}

impl<T: Scalar> ForwardRecord<T> {
    pub fn logits(&self) -> &[T] {
        &self.logits
    }
}

/// Gradient of the loss with respect to every model parameter.
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub enc_w1: Matrix<T>,
    pub enc_b1: Vec<T>,
    pub enc_w2: Matrix<T>,
    pub enc_b2: Vec<T>,
    pub head_w: Matrix<T>,
    pub head_b: Vec<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros(dims: Dims) -> Self {
        Gradients {
            enc_w1: Matrix::zeros(dims.hidden, dims.d_in),
            enc_b1: vec![T::zero(); dims.hidden],
            enc_w2: Matrix::zeros(2 * dims.latent, dims.hidden),
            enc_b2: vec![T::zero(); 2 * dims.latent],
            head_w: Matrix::zeros(dims.n_classes, dims.latent),
            head_b: vec![T::zero(); dims.n_classes],
        }
    }

    pub fn iter_flat(&self) -> impl Iterator<Item = &T> {
        self.enc_w1
            .data()
            .iter()
            .chain(self.enc_b1.iter())
            .chain(self.enc_w2.data().iter())
            .chain(self.enc_b2.iter())
            .chain(self.head_w.data().iter())
            .chain(self.head_b.iter())
    }

    pub fn iter_flat_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.enc_w1
            .data_mut()
            .iter_mut()
            .chain(self.enc_b1.iter_mut())
            .chain(self.enc_w2.data_mut().iter_mut())
            .chain(self.enc_b2.iter_mut())
            .chain(self.head_w.data_mut().iter_mut())
            .chain(self.head_b.iter_mut())
    }
}

impl<T: Scalar> Model<T> {
    pub fn param_count(&self) -> usize {
        let d = self.dims;
        d.hidden * d.d_in
            + d.hidden
            + 2 * d.latent * d.hidden
            + 2 * d.latent
            + d.n_classes * d.latent
            + d.n_classes
    }

    /// Parameters in a fixed flat order (weights row-major, layer by layer).
    pub fn iter_flat(&self) -> impl Iterator<Item = &T> {
        self.enc_w1
            .data()
            .iter()
            .chain(self.enc_b1.iter())
            .chain(self.enc_w2.data().iter())
            .chain(self.enc_b2.iter())
            .chain(self.head_w.data().iter())
            .chain(self.head_b.iter())
    }

    pub fn iter_flat_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.enc_w1
            .data_mut()
            .iter_mut()
            .chain(self.enc_b1.iter_mut())
            .chain(self.enc_w2.data_mut().iter_mut())
            .chain(self.enc_b2.iter_mut())
            .chain(self.head_w.data_mut().iter_mut())
            .chain(self.head_b.iter_mut())
    }

    /// True when every parameter is finite.
    pub fn is_finite(&self) -> bool {
        self.iter_flat().all(|v| v.is_finite())
    }
}

/// Initializes a model with uniform fan-based weights and zero biases,
/// deterministically from `seed`.
pub fn init_model<T: Scalar>(
    d_in: usize,
    hidden: usize,
    latent: usize,
    n_classes: usize,
    seed: u64,
) -> Result<Model<T>> {
    if d_in == 0 || hidden == 0 || latent == 0 || n_classes == 0 {
        return Err(Error::invalid("all model dimensions must be >= 1"));
    }
    let dims = Dims {
        d_in,
        hidden,
        latent,
        n_classes,
    };
    let mut rng = seeded_rng(seed);
    let layer = |rows: usize, cols: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        let a = (6.0 / (rows + cols) as f64).sqrt();
        Matrix::from_fn(rows, cols, |_, _| uniform_symmetric(rng, a))
    };
    let enc_w1 = layer(hidden, d_in, &mut rng);
    let enc_w2 = layer(2 * latent, hidden, &mut rng);
    let head_w = layer(n_classes, latent, &mut rng);
    Ok(Model {
        dims,
        enc_w1,
        enc_b1: vec![T::zero(); hidden],
        enc_w2,
        enc_b2: vec![T::zero(); 2 * latent],
        head_w,
        head_b: vec![T::zero(); n_classes],
    })
}

fn check_len<T>(v: &[T], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: v.len(),
        });
    }
    Ok(())
}

/// Runs the two encoder layers and splits the raw output into mean and
/// clamped log-variance. ReLU is applied between the layers only.
pub fn encode<T: Scalar>(model: &Model<T>, x: &[T]) -> Result<GaussianParams<T>> {
    let (params, _, _, _) = encode_cached(model, x)?;
    Ok(params)
}

fn encode_cached<T: Scalar>(
    model: &Model<T>,
    x: &[T],
) -> Result<(GaussianParams<T>, Vec<T>, Vec<T>, Vec<T>)> {
    check_len(x, model.dims.d_in)?;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("input vector contains non-finite values"));
    }
    let mut pre_act1 = model.enc_w1.matvec(x);
    for (a, b) in pre_act1.iter_mut().zip(&model.enc_b1) {
        *a = *a + *b;
    }
    let hidden: Vec<T> = pre_act1.iter().map(|&a| a.max(T::zero())).collect();
    let mut enc_raw = model.enc_w2.matvec(&hidden);
    for (a, b) in enc_raw.iter_mut().zip(&model.enc_b2) {
        *a = *a + *b;
    }
    let k = model.dims.latent;
    let clamp = real::<T>(LOGVAR_CLAMP);
    let mu = enc_raw[..k].to_vec();
    let logvar = enc_raw[k..].iter().map(|&v| v.min(clamp).max(-clamp)).collect();
    Ok((GaussianParams { mu, logvar }, pre_act1, hidden, enc_raw))
}

/// z = mu + eps * exp(logvar / 2), elementwise.
pub fn reparameterize<T: Scalar>(params: &GaussianParams<T>, eps: &[T]) -> Result<Vec<T>> {
    check_len(eps, params.mu.len())?;
    Ok(params
        .mu
        .iter()
        .zip(&params.logvar)
        .zip(eps)
        .map(|((&m, &lv), &e)| m + e * (lv * real::<T>(0.5)).exp())
        .collect())
}

/// Softmax of the head layer, computed with max subtraction.
pub fn classify<T: Scalar>(model: &Model<T>, z: &[T]) -> Result<Vec<T>> {
    check_len(z, model.dims.latent)?;
    let mut logits = model.head_w.matvec(z);
    for (a, b) in logits.iter_mut().zip(&model.head_b) {
        *a = *a + *b;
    }
    Ok(softmax(&logits))
}

pub(crate) fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits
        .iter()
        .fold(T::neg_infinity(), |acc, &v| acc.max(v));
    let exps: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Full pass: encode, reparameterize with the given noise, classify.
pub fn forward<T: Scalar>(model: &Model<T>, x: &[T], eps: &[T]) -> Result<ForwardRecord<T>> {
    let (params, pre_act1, hidden, enc_raw) = encode_cached(model, x)?;
    let z = reparameterize(&params, eps)?;
    let mut logits = model.head_w.matvec(&z);
    for (a, b) in logits.iter_mut().zip(&model.head_b) {
        *a = *a + *b;
    }
    let probs = softmax(&logits);
    Ok(ForwardRecord {
        x: x.to_vec(),
        params,
        eps: eps.to_vec(),
        z,
        probs,
        pre_act1,
        hidden,
        enc_raw,
        logits,
    })
}

/// Gradient of the batch-mean loss defined by `spec`, differentiated through
/// the reparameterization path with the recorded noise held fixed. Returns
/// the gradients together with the loss breakdown of the same batch.
pub fn backward<T: Scalar>(
    model: &Model<T>,
    records: &[ForwardRecord<T>],
    labels: &[usize],
    spec: &LossSpec<T>,
) -> Result<(Gradients<T>, LossBreakdown<T>)> {
    if records.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if records.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: records.len(),
            got: labels.len(),
        });
    }
    let dims = model.dims;
    for rec in records {
        if rec.x.len() != dims.d_in || rec.z.len() != dims.latent || rec.probs.len() != dims.n_classes
        {
            return Err(Error::invalid(
                "forward record shapes do not match this model",
            ));
        }
    }
    let breakdown = losses::loss_breakdown(records, labels, spec)?;

    let mut grads = Gradients::zeros(dims);
    let scale = T::one() / real::<T>(records.len() as f64);
    let floor = real::<T>(PROB_FLOOR);
    let ln_floor = real::<T>(PROB_FLOOR.ln());
    let clamp = real::<T>(LOGVAR_CLAMP);
    let k = dims.latent;

    for (i, (rec, &y)) in records.iter().zip(labels).enumerate() {
        let p = &rec.probs;

        // d(loss)/d(probs): cross entropy plus, on the active VUB branch,
        // the subtracted classifier-entropy term.
        let mut dldp = vec![T::zero(); dims.n_classes];
        if p[y] > floor {
            dldp[y] = dldp[y] - T::one() / p[y];
        }
        let entropy_active =
            spec.kind == LossKind::Vub && breakdown.branch[i] == MinBranch::ClassifierEntropy;
        if entropy_active {
            // loss term is -H(p); d(-H)/dp_i = ln p_i + 1 above the floor.
            for (d, &pi) in dldp.iter_mut().zip(p) {
                *d = *d + if pi > floor { pi.ln() + T::one() } else { ln_floor };
            }
        }

        // Through softmax: dldt_j = p_j * (dldp_j - sum_i p_i dldp_i).
        let dot: T = p.iter().zip(&dldp).map(|(&pi, &di)| pi * di).sum();
        let dldt: Vec<T> = p
            .iter()
            .zip(&dldp)
            .map(|(&pi, &di)| pi * (di - dot))
            .collect();

        grads.head_w.add_outer_scaled(&dldt, &rec.z, scale);
        for (g, &d) in grads.head_b.iter_mut().zip(&dldt) {
            *g = *g + scale * d;
        }
        let dldz = model.head_w.matvec_transpose(&dldt);

        // Reparameterization: z = mu + eps * sigma, sigma = exp(logvar/2).
        let half = real::<T>(0.5);
        let mut dldmu = dldz.clone();
        let mut dldlogvar: Vec<T> = dldz
            .iter()
            .zip(&rec.eps)
            .zip(&rec.params.logvar)
            .map(|((&dz, &e), &lv)| dz * e * (lv * half).exp() * half)
            .collect();

        // KL term, scaled by beta.
        for (d, &m) in dldmu.iter_mut().zip(&rec.params.mu) {
            *d = *d + spec.beta * m;
        }
        for (d, &lv) in dldlogvar.iter_mut().zip(&rec.params.logvar) {
            *d = *d + spec.beta * half * (lv.exp() - T::one());
        }

        // Join mean and log-variance gradients; the clamp blocks gradient
        // where the raw output left [-LOGVAR_CLAMP, LOGVAR_CLAMP].
        let mut dldu = vec![T::zero(); 2 * k];
        dldu[..k].copy_from_slice(&dldmu);
        for j in 0..k {
            let raw = rec.enc_raw[k + j];
            if raw >= -clamp && raw <= clamp {
                dldu[k + j] = dldlogvar[j];
            }
        }

        grads.enc_w2.add_outer_scaled(&dldu, &rec.hidden, scale);
        for (g, &d) in grads.enc_b2.iter_mut().zip(&dldu) {
            *g = *g + scale * d;
        }
        let dldh = model.enc_w2.matvec_transpose(&dldu);

        let dlda1: Vec<T> = dldh
            .iter()
            .zip(&rec.pre_act1)
            .map(|(&d, &a)| if a > T::zero() { d } else { T::zero() })
            .collect();

        grads.enc_w1.add_outer_scaled(&dlda1, &rec.x, scale);
        for (g, &d) in grads.enc_b1.iter_mut().zip(&dlda1) {
            *g = *g + scale * d;
        }
    }

    Ok((grads, breakdown))
}

/// Backpropagates a cotangent on the logits down to the input, with the
/// recorded noise held fixed. Used by the attack harness.
pub fn input_gradient<T: Scalar>(
    model: &Model<T>,
    rec: &ForwardRecord<T>,
    logit_cotangent: &[T],
) -> Result<Vec<T>> {
    check_len(logit_cotangent, model.dims.n_classes)?;
    let k = model.dims.latent;
    let clamp = real::<T>(LOGVAR_CLAMP);
    let half = real::<T>(0.5);

    let dldz = model.head_w.matvec_transpose(logit_cotangent);
    let mut dldu = vec![T::zero(); 2 * k];
    dldu[..k].copy_from_slice(&dldz);
    for j in 0..k {
        let raw = rec.enc_raw[k + j];
        if raw >= -clamp && raw <= clamp {
            let lv = rec.params.logvar[j];
            dldu[k + j] = dldz[j] * rec.eps[j] * (lv * half).exp() * half;
        }
    }
    let dldh = model.enc_w2.matvec_transpose(&dldu);
    let dlda1: Vec<T> = dldh
        .iter()
        .zip(&rec.pre_act1)
        .map(|(&d, &a)| if a > T::zero() { d } else { T::zero() })
        .collect();
    Ok(model.enc_w1.matvec_transpose(&dlda1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{sample_rng, standard_normal_vec};
    use proptest::prelude::*;

    fn zero_model(dims: Dims) -> Model<f64> {
        Model {
            dims,
            enc_w1: Matrix::zeros(dims.hidden, dims.d_in),
            enc_b1: vec![0.0; dims.hidden],
            enc_w2: Matrix::zeros(2 * dims.latent, dims.hidden),
            enc_b2: vec![0.0; 2 * dims.latent],
            head_w: Matrix::zeros(dims.n_classes, dims.latent),
            head_b: vec![0.0; dims.n_classes],
        }
    }

    #[test]
    fn init_is_deterministic_and_shaped() {
        let a: Model<f64> = init_model(4, 4, 2, 2, 7).unwrap();
        let b: Model<f64> = init_model(4, 4, 2, 2, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.enc_w2.rows(), 4);
        assert_eq!(a.enc_w2.cols(), 4);
        assert!(a.is_finite());
        assert!(init_model::<f64>(0, 1, 1, 1, 0).is_err());
    }

    #[test]
    fn init_param_count_matches_hand_count() {
        let m: Model<f64> = init_model(2048, 2048, 1024, 1000, 1).unwrap();
        let expected = 2048 * 2048 + 2048 + 2048 * 2048 + 2048 + 1024 * 1000 + 1000;
        assert_eq!(m.param_count(), expected);
        assert_eq!(m.iter_flat().count(), expected);
    }

    #[test]
    fn encode_zero_model_gives_standard_params() {
        let m = zero_model(Dims {
            d_in: 3,
            hidden: 2,
            latent: 2,
            n_classes: 2,
        });
        let p = encode(&m, &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(p.mu, vec![0.0, 0.0]);
        assert_eq!(p.logvar, vec![0.0, 0.0]);
    }

    #[test]
    fn encode_clamps_logvar() {
        let mut m = zero_model(Dims {
            d_in: 1,
            hidden: 1,
            latent: 1,
            n_classes: 2,
        });
        m.enc_b2 = vec![0.0, 25.0];
        let p = encode(&m, &[0.0]).unwrap();
        assert_eq!(p.logvar, vec![10.0]);
        m.enc_b2 = vec![0.0, -25.0];
        let p = encode(&m, &[0.0]).unwrap();
        assert_eq!(p.logvar, vec![-10.0]);
    }

    #[test]
    fn encode_rejects_bad_input() {
        let m = zero_model(Dims {
            d_in: 2,
            hidden: 1,
            latent: 1,
            n_classes: 2,
        });
        assert!(matches!(
            encode(&m, &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(encode(&m, &[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn encode_matches_independent_matrix_arithmetic() {
        let m: Model<f64> = init_model(5, 4, 2, 3, 0).unwrap();
        let x = [1.0, 0.0, 0.0, 0.0, 0.0];
        let got = encode(&m, &x).unwrap();

        // Re-evaluate with nothing but explicit index arithmetic.
        let mut h = vec![0.0; 4];
        for r in 0..4 {
            let mut s = m.enc_b1[r];
            for c in 0..5 {
                s += m.enc_w1.get(r, c) * x[c];
            }
            h[r] = s.max(0.0);
        }
        let mut u = vec![0.0; 4];
        for r in 0..4 {
            let mut s = m.enc_b2[r];
            for c in 0..4 {
                s += m.enc_w2.get(r, c) * h[c];
            }
            u[r] = s;
        }
        for j in 0..2 {
            assert!((got.mu[j] - u[j]).abs() < 1e-12);
            assert!((got.logvar[j] - u[2 + j].clamp(-10.0, 10.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn reparameterize_examples() {
        let p = GaussianParams {
            mu: vec![0.0, 0.0],
            logvar: vec![0.0, 0.0],
        };
        assert_eq!(reparameterize(&p, &[0.3, -0.7]).unwrap(), vec![0.3, -0.7]);
        let p = GaussianParams {
            mu: vec![1.0],
            logvar: vec![4.0_f64.ln()],
        };
        let z = reparameterize(&p, &[0.5]).unwrap();
        assert!((z[0] - 2.0).abs() < 1e-15);
        assert!(reparameterize(&p, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn reparameterize_zero_noise_returns_mu_exactly() {
        let p = GaussianParams {
            mu: vec![0.25, -3.5, 1e-9],
            logvar: vec![2.0, -7.0, 0.1],
        };
        assert_eq!(reparameterize(&p, &[0.0, 0.0, 0.0]).unwrap(), p.mu);
    }

    #[test]
    fn classify_uniform_and_stable() {
        let m = zero_model(Dims {
            d_in: 2,
            hidden: 2,
            latent: 2,
            n_classes: 4,
        });
        let p = classify(&m, &[1.0, -1.0]).unwrap();
        assert_eq!(p, vec![0.25; 4]);

        let huge = softmax(&[1000.0_f64, 1000.0]);
        assert!((huge[0] - 0.5).abs() < 1e-12 && huge[1].is_finite());

        let p = softmax(&[0.0_f64, 3.0_f64.ln()]);
        assert!((p[0] - 0.25).abs() < 1e-12);
        assert!((p[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn forward_composes_the_three_ops() {
        let m: Model<f64> = init_model(4, 4, 2, 3, 3).unwrap();
        let x = [0.5, -1.0, 2.0, 0.0];
        let eps = [0.7, -0.2];
        let rec = forward(&m, &x, &eps).unwrap();
        let params = encode(&m, &x).unwrap();
        let z = reparameterize(&params, &eps).unwrap();
        let probs = classify(&m, &z).unwrap();
        assert_eq!(rec.params, params);
        assert_eq!(rec.z, z);
        assert_eq!(rec.probs, probs);
        let sum: f64 = rec.probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn backward_rejects_bad_batches() {
        let m: Model<f64> = init_model(2, 2, 1, 2, 0).unwrap();
        let spec = LossSpec {
            kind: LossKind::Vib,
            beta: 0.0,
            label_entropy: 0.0,
        };
        assert!(matches!(
            backward(&m, &[], &[], &spec),
            Err(Error::EmptyBatch)
        ));
        let rec = forward(&m, &[1.0, 0.0], &[0.3]).unwrap();
        assert!(backward(&m, &[rec.clone()], &[5], &spec).is_err());
        assert!(backward(&m, &[rec], &[0, 1], &spec).is_err());
    }

    #[test]
    fn duplicated_sample_gradient_equals_single_sample() {
        let m: Model<f64> = init_model(3, 3, 2, 2, 11).unwrap();
        let rec = forward(&m, &[0.2, -0.4, 1.1], &[0.5, -1.3]).unwrap();
        let spec = LossSpec {
            kind: LossKind::Vub,
            beta: 0.01,
            label_entropy: 0.5,
        };
        let (g1, l1) = backward(&m, &[rec.clone()], &[1], &spec).unwrap();
        let (g2, l2) = backward(&m, &[rec.clone(), rec], &[1, 1], &spec).unwrap();
        assert!((l1.total - l2.total).abs() < 1e-15);
        for (a, b) in g1.iter_flat().zip(g2.iter_flat()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn beta_zero_vib_reduces_to_cross_entropy_gradient() {
        // With beta = 0 the KL contribution must vanish: perturbing only the
        // loss spec, not the records, the gradient equals the CE-only path.
        let m: Model<f64> = init_model(3, 3, 2, 3, 5).unwrap();
        let eps = standard_normal_vec(&mut sample_rng(9, 0), 2);
        let rec = forward(&m, &[0.1, 0.2, -0.3], &eps).unwrap();
        let spec = LossSpec {
            kind: LossKind::Vib,
            beta: 0.0,
            label_entropy: 0.0,
        };
        let (g, l) = backward(&m, &[rec.clone()], &[2], &spec).unwrap();
        assert!((l.total - l.ce).abs() < 1e-15);
        assert_eq!(l.kl * 0.0, 0.0);

        // Hand-computed softmax CE gradient on the head bias: p - onehot.
        for c in 0..3 {
            let want = rec.probs[c] - if c == 2 { 1.0 } else { 0.0 };
            assert!((g.head_b[c] - want).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn softmax_is_a_probability_vector(
            logits in proptest::collection::vec(-1e3_f64..1e3, 1..6)
        ) {
            let p = softmax(&logits);
            prop_assert!(p.iter().all(|&v| v >= 0.0 && v.is_finite()));
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
        }

        #[test]
        fn reparameterize_zero_noise_identity(
            mu in proptest::collection::vec(-5.0_f64..5.0, 1..5),
            lv in proptest::collection::vec(-9.0_f64..9.0, 1..5)
        ) {
            let n = mu.len().min(lv.len());
            let params = GaussianParams { mu: mu[..n].to_vec(), logvar: lv[..n].to_vec() };
            let z = reparameterize(&params, &vec![0.0; n]).unwrap();
            prop_assert_eq!(z, params.mu);
        }
    }
}
