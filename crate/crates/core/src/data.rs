//! Datasets: synthetic gaussian mixtures, splits, standardization, and the
//! `vubds` text format.
//!
//! File format (version 1): header line `vubds,v1,<n>,<d>,<k>`, then n lines
//! of d floats and one integer label, comma-separated. Floats carry 17
//! significant digits so `f64` features round-trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::oracle::textio::{format_float, parse_float};
use crate::rng::{seeded_rng, standard_normal_vec};
use crate::scalar::{real, to_f64, Scalar};

pub const DATASET_MAGIC: &str = "vubds";

/// Dense feature vectors with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    features: Vec<T>,
    labels: Vec<usize>,
    d: usize,
    k: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(features: Vec<T>, labels: Vec<usize>, d: usize, k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("dataset must contain at least one sample"));
        }
        if d == 0 || k == 0 {
            return Err(Error::invalid("feature dim and class count must be >= 1"));
        }
        if features.len() != labels.len() * d {
            return Err(Error::LengthMismatch {
                expected: labels.len() * d,
                got: features.len(),
            });
        }
        if !features.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("features must be finite"));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                classes: k,
            });
        }
        Ok(Dataset {
            features,
            labels,
            d,
            k,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// Balanced gaussian mixture: class means on a seeded orthonormal-ish frame
/// scaled by `separation`, unit isotropic noise, n/k samples per class with
/// the remainder assigned to class 0.
pub fn gen_gaussian_mixture<T: Scalar>(
    k: usize,
    d: usize,
    n: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset<T>> {
    if k == 0 || d == 0 {
        return Err(Error::invalid("k and d must be >= 1"));
    }
    if n < k {
        return Err(Error::invalid("need at least one sample per class"));
    }
    if !(separation >= 0.0) {
        return Err(Error::invalid("separation must be >= 0"));
    }
    let mut rng = seeded_rng(seed);

    // Orthonormalize successive gaussian directions while the dimension
    // allows; classes d..2d reuse the negated frame, anything beyond falls
    // back to normalized random directions.
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(k);
    for c in 0..k {
        if c >= d && c < 2 * d {
            let v = frame[c - d].iter().map(|x| -x).collect();
            frame.push(v);
            continue;
        }
        let mut v: Vec<f64> = standard_normal_vec(&mut rng, d);
        if c < d {
            for prev in &frame[..c] {
                let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
                for (vi, pi) in v.iter_mut().zip(prev) {
                    *vi -= dot * pi;
                }
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            for vi in v.iter_mut() {
                *vi /= norm;
            }
        }
        frame.push(v);
    }

    let base = n / k;
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for c in 0..k {
        let count = if c == 0 { base + n % k } else { base };
        for _ in 0..count {
            let noise: Vec<f64> = standard_normal_vec(&mut rng, d);
            for j in 0..d {
                features.push(real::<T>(separation * frame[c][j] + noise[j]));
            }
            labels.push(c);
        }
    }
    Dataset::new(features, labels, d, k)
}

/// Seeded permutation followed by a head/tail partition.
pub fn split<T: Scalar>(
    ds: &Dataset<T>,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid("train fraction must lie in (0, 1)"));
    }
    let n = ds.n();
    let n_train = (n as f64 * train_fraction).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::invalid("split leaves an empty side"));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    perm.shuffle(&mut seeded_rng(seed));

    let take = |idx: &[usize]| -> Dataset<T> {
        let mut features = Vec::with_capacity(idx.len() * ds.d);
        let mut labels = Vec::with_capacity(idx.len());
        for &i in idx {
            features.extend_from_slice(ds.row(i));
            labels.push(ds.label(i));
        }
        Dataset {
            features,
            labels,
            d: ds.d,
            k: ds.k,
        }
    };
    Ok((take(&perm[..n_train]), take(&perm[n_train..])))
}

/// Per-feature affine transform fitted on a training split.
#[derive(Clone, Debug)]
pub struct Standardizer<T> {
    mean: Vec<T>,
    inv_std: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    /// Fits mean and standard deviation per feature.
    pub fn fit(ds: &Dataset<T>) -> Self {
        let d = ds.d();
        let n = real::<T>(ds.n() as f64);
        let mut mean = vec![T::zero(); d];
        for i in 0..ds.n() {
            for (m, &v) in mean.iter_mut().zip(ds.row(i)) {
                *m = *m + v;
            }
        }
        for m in mean.iter_mut() {
            *m = *m / n;
        }
        let mut var = vec![T::zero(); d];
        for i in 0..ds.n() {
            for ((s, &v), &m) in var.iter_mut().zip(ds.row(i)).zip(&mean) {
                let dlt = v - m;
                *s = *s + dlt * dlt;
            }
        }
        let floor = real::<T>(1e-12);
        let inv_std = var
            .into_iter()
            .map(|s| T::one() / (s / n).sqrt().max(floor))
            .collect();
        Standardizer { mean, inv_std }
    }

    pub fn apply(&self, ds: &Dataset<T>) -> Dataset<T> {
        let d = ds.d();
        let mut features = Vec::with_capacity(ds.n() * d);
        for i in 0..ds.n() {
            for ((&v, &m), &s) in ds.row(i).iter().zip(&self.mean).zip(&self.inv_std) {
                features.push((v - m) * s);
            }
        }
        Dataset {
            features,
            labels: ds.labels.clone(),
            d,
            k: ds.k,
        }
    }
}

pub fn dataset_to_string<T: Scalar>(ds: &Dataset<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{DATASET_MAGIC},v1,{},{},{}", ds.n(), ds.d(), ds.k());
    for i in 0..ds.n() {
        for &v in ds.row(i) {
            let _ = write!(out, "{},", format_float(to_f64(v)));
        }
        let _ = writeln!(out, "{}", ds.label(i));
    }
    out
}

pub fn save_dataset<T: Scalar>(ds: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, dataset_to_string(ds))?;
    Ok(())
}

pub fn dataset_from_string(text: &str) -> Result<Dataset<f64>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header"))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() != 5 || fields[0] != DATASET_MAGIC || fields[1] != "v1" {
        return Err(Error::parse(1, "expected header vubds,v1,<n>,<d>,<k>"));
    }
    let parse_size = |s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::parse(1, format!("invalid size {s:?}")))
    };
    let n = parse_size(fields[2])?;
    let d = parse_size(fields[3])?;
    let k = parse_size(fields[4])?;
    if n == 0 || d == 0 || k == 0 {
        return Err(Error::parse(1, "sizes must be >= 1"));
    }

    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut line_no = 1usize;
    for _ in 0..n {
        line_no += 1;
        let row = lines
            .next()
            .ok_or_else(|| Error::parse(line_no, "unexpected end of file"))?;
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != d + 1 {
            return Err(Error::parse(
                line_no,
                format!("expected {} fields, got {}", d + 1, cells.len()),
            ));
        }
        for cell in &cells[..d] {
            features.push(parse_float(cell, line_no)?);
        }
        let label: usize = cells[d]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("invalid label {:?}", cells[d])))?;
        if label >= k {
            return Err(Error::parse(
                line_no,
                format!("label {label} out of range for {k} classes"),
            ));
        }
        labels.push(label);
    }
    for extra in lines {
        line_no += 1;
        if !extra.trim().is_empty() {
            return Err(Error::parse(line_no, "trailing content"));
        }
    }
    Dataset::new(features, labels, d, k)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset<f64>> {
    dataset_from_string(&std::fs::read_to_string(path)?)
}
