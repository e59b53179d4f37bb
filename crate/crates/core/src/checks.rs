//! Numerical verification helpers: a central finite-difference gradient that
//! never touches the analytic backward path, for use by gradient-check
//! suites. The loss is re-evaluated through `forward` and the closed-form
//! loss definitions with the noise draws frozen.

use crate::data::Dataset;
use crate::error::Result;
use crate::losses::{loss_breakdown, LossSpec};
use crate::net::{forward, Model};
use crate::rng::{sample_rng, standard_normal_vec};
use crate::scalar::{real, to_f64, Scalar};

/// Batch-mean loss of `spec` on `(xs, epss, labels)`, evaluated from scratch.
pub fn batch_loss<T: Scalar>(
    model: &Model<T>,
    xs: &[Vec<T>],
    epss: &[Vec<T>],
    labels: &[usize],
    spec: &LossSpec<T>,
) -> Result<T> {
    let records = xs
        .iter()
        .zip(epss)
        .map(|(x, e)| forward(model, x, e))
        .collect::<Result<Vec<_>>>()?;
    Ok(loss_breakdown(&records, labels, spec)?.total)
}

/// Central finite differences over every parameter, step `h`, frozen noise.
pub fn fd_gradient<T: Scalar>(
    model: &Model<T>,
    xs: &[Vec<T>],
    epss: &[Vec<T>],
    labels: &[usize],
    spec: &LossSpec<T>,
    h: f64,
) -> Result<Vec<f64>> {
    let n = model.param_count();
    let step = real::<T>(h);
    let mut grad = Vec::with_capacity(n);
    for i in 0..n {
        let mut up = model.clone();
        let p = up.iter_flat_mut().nth(i).expect("param index");
        *p = *p + step;
        let mut dn = model.clone();
        let p = dn.iter_flat_mut().nth(i).expect("param index");
        *p = *p - step;
        let lu = batch_loss(&up, xs, epss, labels, spec)?;
        let ld = batch_loss(&dn, xs, epss, labels, spec)?;
        grad.push((to_f64(lu) - to_f64(ld)) / (2.0 * h));
    }
    Ok(grad)
}

/// Relative error with a small absolute floor so near-zero entries compare
/// sanely against finite-difference noise.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

/// A random batch for gradient checks: inputs and noise drawn from
/// per-sample streams of `seed`, labels cycling through the classes.
pub fn random_batch<T: Scalar>(
    model: &Model<T>,
    batch: usize,
    seed: u64,
) -> (Vec<Vec<T>>, Vec<Vec<T>>, Vec<usize>) {
    let mut xs = Vec::with_capacity(batch);
    let mut epss = Vec::with_capacity(batch);
    let mut labels = Vec::with_capacity(batch);
    for i in 0..batch {
        let mut rng = sample_rng(seed, i as u64);
        xs.push(standard_normal_vec(&mut rng, model.dims.d_in));
        epss.push(standard_normal_vec(&mut rng, model.dims.latent));
        labels.push(i % model.dims.n_classes);
    }
    (xs, epss, labels)
}

/// Fixed desk-scale task shared by the training and robustness checks:
/// a 4-class, 16-dimensional, separation-3 mixture split 80/20.
pub fn desk_task(n: usize, seed: u64) -> (Dataset<f64>, Dataset<f64>) {
    let ds = crate::data::gen_gaussian_mixture(4, 16, n, 3.0, seed).expect("mixture");
    crate::data::split(&ds, 0.8, seed ^ 0x51).expect("split")
}
