//! Exact computation on finite distributions: mutual information, the IB
//! functional `L_IB = beta*I(Z;X) - I(Z;Y)`, and its variational upper
//! bounds, all as finite sums. This is the ground truth against which the
//! Monte Carlo machinery is validated.
//!
//! An instance bundles a joint PMF over (x, y) with a variational encoder
//! channel e(z|x), classifier channel c(y|z) and prior r(z). For any such
//! instance the rate bound equals `I(Z;X) + KL(P(z)||R(z))` and the chain
//! `l_ib <= l_vub <= l_vib` holds for every beta >= 0; both identities are
//! exercised by the sweep in [`sweep`].
//!
//! Beta conventions differ between the bound evaluators and the curve
//! solver: the evaluators here use `L = beta*I(Z;X) - I(Z;Y)`, while
//! [`curve::ib_curve`] natively uses `L = I(Z;X) - beta*I(Z;Y)` (see its
//! docs). `0 * log 0 := 0` everywhere.

pub mod curve;
pub mod sweep;
pub mod textio;

use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::rng::seeded_rng;
use crate::scalar::{real, to_f64, Scalar};
use crate::PROB_FLOOR;

/// Normalization slack accepted by the validating constructors.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Tolerance at which [`verify_ordering`] checks the bound chain.
pub const ORDERING_TOL: f64 = 1e-9;

/// Finite joint PMF over (x, y), stored |X| x |Y|.
#[derive(Clone, Debug)]
pub struct DiscreteJoint<T> {
    table: Matrix<T>,
}

/// Row-stochastic conditional PMF table (rows are the conditioning value).
#[derive(Clone, Debug)]
pub struct DiscreteChannel<T> {
    table: Matrix<T>,
}

/// Probability vector over |Z|.
#[derive(Clone, Debug)]
pub struct DiscretePrior<T> {
    probs: Vec<T>,
}

/// A joint with encoder, classifier and prior of compatible dimensions,
/// following the Markov chain Z - X - Y.
#[derive(Clone, Debug)]
pub struct DiscreteInstance<T> {
    pub joint: DiscreteJoint<T>,
    /// |X| -> |Z|
    pub encoder: DiscreteChannel<T>,
    /// |Z| -> |Y|
    pub classifier: DiscreteChannel<T>,
    pub prior: DiscretePrior<T>,
}

fn sum_tol_ok<T: Scalar>(sum: T) -> bool {
    (to_f64(sum) - 1.0).abs() <= NORMALIZATION_TOL
}

impl<T: Scalar> DiscreteJoint<T> {
    /// Validates entries >= 0 and total mass 1 within `NORMALIZATION_TOL`.
    pub fn new(table: Matrix<T>) -> Result<Self> {
        if table.rows() == 0 || table.cols() == 0 {
            return Err(Error::invalid("joint must be non-empty"));
        }
        if table.iter().any(|&v| v < T::zero() || !v.is_finite()) {
            return Err(Error::invalid("joint entries must be finite and >= 0"));
        }
        let sum: T = table.iter().copied().sum();
        if !sum_tol_ok(sum) {
            return Err(Error::NotNormalized { sum: to_f64(sum) });
        }
        Ok(DiscreteJoint { table })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let m = Matrix::from_rows(rows).ok_or_else(|| Error::invalid("ragged joint rows"))?;
        Self::new(m)
    }

    pub fn nx(&self) -> usize {
        self.table.rows()
    }

    pub fn ny(&self) -> usize {
        self.table.cols()
    }

    pub fn prob(&self, x: usize, y: usize) -> T {
        self.table.get(x, y)
    }

    pub fn table(&self) -> &Matrix<T> {
        &self.table
    }

    pub fn x_marginal(&self) -> Vec<T> {
        (0..self.nx())
            .map(|x| self.table.row(x).iter().copied().sum())
            .collect()
    }

    pub fn y_marginal(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.ny()];
        for x in 0..self.nx() {
            for (o, &v) in out.iter_mut().zip(self.table.row(x)) {
                *o = *o + v;
            }
        }
        out
    }
}

impl<T: Scalar> DiscreteChannel<T> {
    /// Validates row-stochasticity, then floors every entry at `PROB_FLOOR`
    /// and renormalizes each row, so all transition probabilities are
    /// strictly positive.
    pub fn new(rows: &[Vec<T>]) -> Result<Self> {
        let mut ch = Self::new_exact(rows)?;
        let floor = real::<T>(PROB_FLOOR);
        for r in 0..ch.table.rows() {
            let row = ch.table.row_mut(r);
            for v in row.iter_mut() {
                *v = v.max(floor);
            }
            let sum: T = row.iter().copied().sum();
            for v in row.iter_mut() {
                *v = *v / sum;
            }
        }
        Ok(ch)
    }

    /// Validating constructor that keeps exact zeros (deterministic channels,
    /// divergence-edge cases).
    pub fn new_exact(rows: &[Vec<T>]) -> Result<Self> {
        let table = Matrix::from_rows(rows).ok_or_else(|| Error::invalid("ragged channel rows"))?;
        if table.rows() == 0 || table.cols() == 0 {
            return Err(Error::invalid("channel must be non-empty"));
        }
        if table.iter().any(|&v| v < T::zero() || !v.is_finite()) {
            return Err(Error::invalid("channel entries must be finite and >= 0"));
        }
        for r in 0..table.rows() {
            let sum: T = table.row(r).iter().copied().sum();
            if !sum_tol_ok(sum) {
                return Err(Error::NotNormalized { sum: to_f64(sum) });
            }
        }
        Ok(DiscreteChannel { table })
    }

    pub fn n_in(&self) -> usize {
        self.table.rows()
    }

    pub fn n_out(&self) -> usize {
        self.table.cols()
    }

    pub fn prob(&self, cond: usize, out: usize) -> T {
        self.table.get(cond, out)
    }

    pub fn row(&self, cond: usize) -> &[T] {
        self.table.row(cond)
    }

    pub fn table(&self) -> &Matrix<T> {
        &self.table
    }
}

impl<T: Scalar> DiscretePrior<T> {
    /// Validates a probability vector; exact zeros are allowed.
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("prior must be non-empty"));
        }
        if probs.iter().any(|&v| v < T::zero() || !v.is_finite()) {
            return Err(Error::invalid("prior entries must be finite and >= 0"));
        }
        let sum: T = probs.iter().copied().sum();
        if !sum_tol_ok(sum) {
            return Err(Error::NotNormalized { sum: to_f64(sum) });
        }
        Ok(DiscretePrior { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, z: usize) -> T {
        self.probs[z]
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }
}

impl<T: Scalar> DiscreteInstance<T> {
    pub fn new(
        joint: DiscreteJoint<T>,
        encoder: DiscreteChannel<T>,
        classifier: DiscreteChannel<T>,
        prior: DiscretePrior<T>,
    ) -> Result<Self> {
        if encoder.n_in() != joint.nx() {
            return Err(Error::invalid("encoder rows must match |X|"));
        }
        if classifier.n_in() != encoder.n_out() {
            return Err(Error::invalid("classifier rows must match |Z|"));
        }
        if classifier.n_out() != joint.ny() {
            return Err(Error::invalid("classifier columns must match |Y|"));
        }
        if prior.len() != encoder.n_out() {
            return Err(Error::invalid("prior length must match |Z|"));
        }
        Ok(DiscreteInstance {
            joint,
            encoder,
            classifier,
            prior,
        })
    }

    pub fn nx(&self) -> usize {
        self.joint.nx()
    }

    pub fn ny(&self) -> usize {
        self.joint.ny()
    }

    pub fn nz(&self) -> usize {
        self.encoder.n_out()
    }
}

/// I(A;B) of a joint PMF: `sum p(a,b) log( p(a,b) / (p(a) p(b)) )`.
/// Errors if the table is not a normalized PMF.
pub fn mutual_information<T: Scalar>(joint: &Matrix<T>) -> Result<T> {
    if joint.iter().any(|&v| v < T::zero() || !v.is_finite()) {
        return Err(Error::invalid("joint entries must be finite and >= 0"));
    }
    let sum: T = joint.iter().copied().sum();
    if !sum_tol_ok(sum) {
        return Err(Error::NotNormalized { sum: to_f64(sum) });
    }
    Ok(mi_unchecked(joint))
}

pub(crate) fn mi_unchecked<T: Scalar>(joint: &Matrix<T>) -> T {
    let rows = joint.rows();
    let cols = joint.cols();
    let mut pa = vec![T::zero(); rows];
    let mut pb = vec![T::zero(); cols];
    for a in 0..rows {
        for b in 0..cols {
            let v = joint.get(a, b);
            pa[a] = pa[a] + v;
            pb[b] = pb[b] + v;
        }
    }
    let mut mi = T::zero();
    for a in 0..rows {
        for b in 0..cols {
            let v = joint.get(a, b);
            if v > T::zero() {
                mi = mi + v * (v / (pa[a] * pb[b])).ln();
            }
        }
    }
    mi
}

/// Entropy of a probability vector, `0 log 0 := 0`.
pub(crate) fn entropy_vec<T: Scalar>(p: &[T]) -> T {
    p.iter().fold(T::zero(), |acc, &v| {
        if v > T::zero() {
            acc - v * v.ln()
        } else {
            acc
        }
    })
}

/// KL(p || q) over matching supports; errors where q = 0 under p > 0.
pub fn kl_discrete<T: Scalar>(p: &[T], q: &[T]) -> Result<T> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    let mut kl = T::zero();
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > T::zero() {
            if qi <= T::zero() {
                return Err(Error::DivergenceInfinite(format!(
                    "q[{i}] = 0 with p[{i}] > 0"
                )));
            }
            kl = kl + pi * (pi / qi).ln();
        }
    }
    Ok(kl)
}

/// Distributions induced by pushing the joint through the encoder.
#[derive(Clone, Debug)]
pub struct Induced<T> {
    pub p_z: Vec<T>,
    /// |X| x |Z|, entries `P*(x) e(z|x)`.
    pub joint_xz: Matrix<T>,
    /// |Y| x |Z|, entries `sum_x P*(x,y) e(z|x)`.
    pub joint_yz: Matrix<T>,
}

/// P(z), P(x,z) and P(y,z) induced by the instance's Markov chain.
pub fn induced_distributions<T: Scalar>(inst: &DiscreteInstance<T>) -> Induced<T> {
    let (nx, ny, nz) = (inst.nx(), inst.ny(), inst.nz());
    let p_x = inst.joint.x_marginal();
    let joint_xz = Matrix::from_fn(nx, nz, |x, z| p_x[x] * inst.encoder.prob(x, z));
    let mut joint_yz = Matrix::zeros(ny, nz);
    for x in 0..nx {
        for y in 0..ny {
            let pxy = inst.joint.prob(x, y);
            if pxy > T::zero() {
                for z in 0..nz {
                    let v = joint_yz.get(y, z) + pxy * inst.encoder.prob(x, z);
                    joint_yz.set(y, z, v);
                }
            }
        }
    }
    let p_z = (0..nz)
        .map(|z| (0..nx).fold(T::zero(), |acc, x| acc + joint_xz.get(x, z)))
        .collect();
    Induced {
        p_z,
        joint_xz,
        joint_yz,
    }
}

/// `beta * I(Z;X) - I(Z;Y)` computed exactly from the induced distributions.
pub fn l_ib_exact<T: Scalar>(inst: &DiscreteInstance<T>, beta: T) -> T {
    let ind = induced_distributions(inst);
    beta * mi_unchecked(&ind.joint_xz) - mi_unchecked(&ind.joint_yz)
}

/// `sum_{x,z} P*(x) e(z|x) log( e(z|x) / r(z) )`. Satisfies
/// `rate_bound = I(Z;X) + KL(P(z)||R(z))`.
pub fn rate_bound_exact<T: Scalar>(inst: &DiscreteInstance<T>) -> Result<T> {
    let p_x = inst.joint.x_marginal();
    let mut bound = T::zero();
    for x in 0..inst.nx() {
        if p_x[x] <= T::zero() {
            continue;
        }
        for z in 0..inst.nz() {
            let e = inst.encoder.prob(x, z);
            if e > T::zero() {
                let r = inst.prior.prob(z);
                if r <= T::zero() {
                    return Err(Error::DivergenceInfinite(format!(
                        "prior is zero at z={z} where the encoder has mass"
                    )));
                }
                bound = bound + p_x[x] * e * (e / r).ln();
            }
        }
    }
    Ok(bound)
}

/// Pieces of the exact distortion bound `ce_term + min(h_y, h_c_y_given_z)`,
/// a lower bound on I(Z;Y).
#[derive(Clone, Copy, Debug)]
pub struct DistortionBound<T> {
    /// `sum_{x,y,z} P*(x,y) e(z|x) log c(y|z)` (non-positive).
    pub ce_term: T,
    /// Entropy of the label marginal P*(y).
    pub h_y: T,
    /// Classifier conditional entropy under the induced P(z).
    pub h_c_y_given_z: T,
    pub bound: T,
}

pub fn distortion_bound_exact<T: Scalar>(inst: &DiscreteInstance<T>) -> Result<DistortionBound<T>> {
    let (nx, ny, nz) = (inst.nx(), inst.ny(), inst.nz());
    let mut ce_term = T::zero();
    for x in 0..nx {
        for y in 0..ny {
            let pxy = inst.joint.prob(x, y);
            if pxy <= T::zero() {
                continue;
            }
            for z in 0..nz {
                let e = inst.encoder.prob(x, z);
                if e > T::zero() {
                    let c = inst.classifier.prob(z, y);
                    if c <= T::zero() {
                        return Err(Error::DivergenceInfinite(format!(
                            "classifier is zero at (y={y}, z={z}) on supported mass"
                        )));
                    }
                    ce_term = ce_term + pxy * e * c.ln();
                }
            }
        }
    }
    let h_y = entropy_vec(&inst.joint.y_marginal());
    let ind = induced_distributions(inst);
    let mut h_c = T::zero();
    for z in 0..nz {
        let pz = ind.p_z[z];
        if pz > T::zero() {
            h_c = h_c + pz * entropy_vec(inst.classifier.row(z));
        }
    }
    let bound = ce_term + h_y.min(h_c);
    Ok(DistortionBound {
        ce_term,
        h_y,
        h_c_y_given_z: h_c,
        bound,
    })
}

/// Which way the entropy `min` term enters the upper bound. `SubtractMin` is
/// the reading consistent with the bound chain and is the default; `AddMin`
/// reproduces the looser printed variant for demonstration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SignConvention {
    #[default]
    SubtractMin,
    AddMin,
}

/// `beta * rate_bound - ce_term`: the VIB-style exact upper bound.
pub fn l_vib_exact<T: Scalar>(inst: &DiscreteInstance<T>, beta: T) -> Result<T> {
    let rate = rate_bound_exact(inst)?;
    let dist = distortion_bound_exact(inst)?;
    Ok(beta * rate - dist.ce_term)
}

/// `l_vib - min(h_y, h_c_y_given_z)`: the tighter exact upper bound.
pub fn l_vub_exact<T: Scalar>(inst: &DiscreteInstance<T>, beta: T) -> Result<T> {
    l_vub_exact_with(inst, beta, SignConvention::SubtractMin)
}

pub fn l_vub_exact_with<T: Scalar>(
    inst: &DiscreteInstance<T>,
    beta: T,
    convention: SignConvention,
) -> Result<T> {
    let rate = rate_bound_exact(inst)?;
    let dist = distortion_bound_exact(inst)?;
    let min_term = dist.h_y.min(dist.h_c_y_given_z);
    let base = beta * rate - dist.ce_term;
    Ok(match convention {
        SignConvention::SubtractMin => base - min_term,
        SignConvention::AddMin => base + min_term,
    })
}

/// One beta's worth of the ordering check.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct OrderingRow<T> {
    pub beta: T,
    pub l_ib: T,
    pub l_vub: T,
    pub l_vib: T,
    pub pass: bool,
}

/// Result of checking `l_ib <= l_vub <= l_vib` over a beta grid.
#[derive(Clone, Debug, serde::Serialize)]
pub struct OrderingReport<T> {
    pub rows: Vec<OrderingRow<T>>,
    /// `l_vib - l_vub = min(h_y, h_c_y_given_z)`; independent of beta.
    pub gap: T,
    pub tolerance: f64,
    pub all_pass: bool,
}

/// Checks the bound chain at each beta; failures become report rows, not
/// errors.
pub fn verify_ordering<T: Scalar>(
    inst: &DiscreteInstance<T>,
    betas: &[T],
) -> Result<OrderingReport<T>> {
    let ind = induced_distributions(inst);
    let i_zx = mi_unchecked(&ind.joint_xz);
    let i_zy = mi_unchecked(&ind.joint_yz);
    let rate = rate_bound_exact(inst)?;
    let dist = distortion_bound_exact(inst)?;
    let min_term = dist.h_y.min(dist.h_c_y_given_z);
    let tol = real::<T>(ORDERING_TOL);

    let rows: Vec<OrderingRow<T>> = betas
        .iter()
        .map(|&beta| {
            let l_ib = beta * i_zx - i_zy;
            let l_vib = beta * rate - dist.ce_term;
            let l_vub = l_vib - min_term;
            let pass = l_ib <= l_vub + tol && l_vub <= l_vib + tol;
            OrderingRow {
                beta,
                l_ib,
                l_vub,
                l_vib,
                pass,
            }
        })
        .collect();
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(OrderingReport {
        rows,
        gap: min_term,
        tolerance: ORDERING_TOL,
        all_pass,
    })
}

/// Sizes of a random instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstanceSizes {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

/// Draws a joint and all channel rows from symmetric Dirichlet
/// distributions, deterministically from `seed`. Channel rows and the prior
/// are floored at `PROB_FLOOR` so they are strictly positive.
pub fn random_instance<T: Scalar>(
    seed: u64,
    sizes: InstanceSizes,
    concentration: f64,
) -> Result<DiscreteInstance<T>> {
    if sizes.nx == 0 || sizes.ny == 0 || sizes.nz == 0 {
        return Err(Error::invalid("instance sizes must be >= 1"));
    }
    if !(concentration > 0.0) {
        return Err(Error::invalid("concentration must be > 0"));
    }
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::invalid(format!("bad concentration: {e}")))?;
    let mut rng = seeded_rng(seed);
    let mut dirichlet = |len: usize| -> Vec<T> {
        let raw: Vec<f64> = (0..len).map(|_| gamma.sample(&mut rng)).collect();
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return vec![real(1.0 / len as f64); len];
        }
        raw.into_iter().map(|v| real(v / sum)).collect()
    };

    let flat = dirichlet(sizes.nx * sizes.ny);
    let joint_rows: Vec<Vec<T>> = flat.chunks(sizes.ny).map(|c| c.to_vec()).collect();
    let joint = DiscreteJoint::from_rows(&joint_rows)?;

    let enc_rows: Vec<Vec<T>> = (0..sizes.nx).map(|_| dirichlet(sizes.nz)).collect();
    let encoder = DiscreteChannel::new(&enc_rows)?;

    let cls_rows: Vec<Vec<T>> = (0..sizes.nz).map(|_| dirichlet(sizes.ny)).collect();
    let classifier = DiscreteChannel::new(&cls_rows)?;

    let mut prior_p = dirichlet(sizes.nz);
    let floor = real::<T>(PROB_FLOOR);
    for v in prior_p.iter_mut() {
        *v = v.max(floor);
    }
    let s: T = prior_p.iter().copied().sum();
    for v in prior_p.iter_mut() {
        *v = *v / s;
    }
    let prior = DiscretePrior::new(prior_p)?;

    DiscreteInstance::new(joint, encoder, classifier, prior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[Vec<f64>]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn mi_examples() {
        let independent = mat(&[vec![0.25, 0.25], vec![0.25, 0.25]]);
        assert!(mutual_information(&independent).unwrap().abs() < 1e-15);

        let diagonal = mat(&[vec![0.5, 0.0], vec![0.0, 0.5]]);
        let mi = mutual_information(&diagonal).unwrap();
        assert!((mi - 2.0_f64.ln()).abs() < 1e-15);

        // H(X) + H(Y) - H(X,Y) by hand for [[0.4, 0.1], [0.1, 0.4]].
        let skew = mat(&[vec![0.4, 0.1], vec![0.1, 0.4]]);
        let mi = mutual_information(&skew).unwrap();
        let h = |p: &[f64]| -> f64 { p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum() };
        let expected = h(&[0.5, 0.5]) + h(&[0.5, 0.5]) - h(&[0.4, 0.1, 0.1, 0.4]);
        assert!((mi - expected).abs() < 1e-15);
        assert!((mi - 0.192745).abs() < 1e-6);

        let bad = mat(&[vec![0.5, 0.2]]);
        assert!(matches!(
            mutual_information(&bad),
            Err(Error::NotNormalized { .. })
        ));
    }

    fn small_instance(seed: u64) -> DiscreteInstance<f64> {
        random_instance(
            seed,
            InstanceSizes {
                nx: 4,
                ny: 2,
                nz: 3,
            },
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn random_instance_is_deterministic_and_valid() {
        let a = small_instance(9);
        let b = small_instance(9);
        assert_eq!(a.joint.table().data(), b.joint.table().data());
        assert_eq!(a.encoder.table().data(), b.encoder.table().data());
        assert_eq!(a.prior.probs(), b.prior.probs());

        // Low concentration: rows near-sparse but strictly positive.
        let sparse = random_instance::<f64>(
            3,
            InstanceSizes {
                nx: 3,
                ny: 3,
                nz: 4,
            },
            0.1,
        )
        .unwrap();
        for x in 0..3 {
            for z in 0..4 {
                assert!(sparse.encoder.prob(x, z) > 0.0);
            }
        }
        for z in 0..4 {
            assert!(sparse.prior.prob(z) > 0.0);
        }
    }

    #[test]
    fn induced_distributions_behave() {
        // Deterministic (permutation) encoder permutes P(x).
        let joint = DiscreteJoint::from_rows(&[vec![0.6_f64, 0.0], vec![0.0, 0.4]]).unwrap();
        let enc = DiscreteChannel::new_exact(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let cls = DiscreteChannel::new(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let prior = DiscretePrior::new(vec![0.5, 0.5]).unwrap();
        let inst = DiscreteInstance::new(joint, enc, cls, prior).unwrap();
        let ind = induced_distributions(&inst);
        assert!((ind.p_z[0] - 0.4).abs() < 1e-15);
        assert!((ind.p_z[1] - 0.6).abs() < 1e-15);

        // Uniform encoder rows give uniform P(z) regardless of P(x).
        let enc = DiscreteChannel::new(&[vec![1.0 / 3.0; 3], vec![1.0 / 3.0; 3]]).unwrap();
        let cls = DiscreteChannel::new(&vec![vec![0.5, 0.5]; 3]).unwrap();
        let prior = DiscretePrior::new(vec![1.0 / 3.0; 3]).unwrap();
        let joint = DiscreteJoint::from_rows(&[vec![0.7_f64, 0.1], vec![0.1, 0.1]]).unwrap();
        let inst = DiscreteInstance::new(joint, enc, cls, prior).unwrap();
        let ind = induced_distributions(&inst);
        for z in 0..3 {
            assert!((ind.p_z[z] - 1.0 / 3.0).abs() < 1e-12);
        }

        // Marginals of a random instance renormalize to 1.
        let inst = small_instance(17);
        let ind = induced_distributions(&inst);
        let sz: f64 = ind.p_z.iter().sum();
        let sxz: f64 = ind.joint_xz.iter().sum();
        let syz: f64 = ind.joint_yz.iter().sum();
        assert!((sz - 1.0).abs() < 1e-12);
        assert!((sxz - 1.0).abs() < 1e-12);
        assert!((syz - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l_ib_matches_brute_force_triple_sum() {
        let inst = small_instance(23);
        let beta = 0.5;
        let got = l_ib_exact(&inst, beta);

        // Independent evaluation: expand every sum from first principles.
        let p_x = inst.joint.x_marginal();
        let nz = inst.nz();
        let mut p_z = vec![0.0; nz];
        for x in 0..inst.nx() {
            for z in 0..nz {
                p_z[z] += p_x[x] * inst.encoder.prob(x, z);
            }
        }
        let mut i_zx = 0.0;
        for x in 0..inst.nx() {
            for z in 0..nz {
                let w = p_x[x] * inst.encoder.prob(x, z);
                if w > 0.0 {
                    i_zx += w * (inst.encoder.prob(x, z) / p_z[z]).ln();
                }
            }
        }
        let p_y = inst.joint.y_marginal();
        let mut i_zy = 0.0;
        for y in 0..inst.ny() {
            for z in 0..nz {
                let mut pyz = 0.0;
                for x in 0..inst.nx() {
                    pyz += inst.joint.prob(x, y) * inst.encoder.prob(x, z);
                }
                if pyz > 0.0 {
                    i_zy += pyz * (pyz / (p_y[y] * p_z[z])).ln();
                }
            }
        }
        assert!((got - (beta * i_zx - i_zy)).abs() < 1e-12);

        // beta = 0 leaves -I(Z;Y).
        assert!((l_ib_exact(&inst, 0.0) + i_zy).abs() < 1e-12);
    }

    #[test]
    fn constant_encoder_kills_both_informations() {
        let joint = DiscreteJoint::from_rows(&[vec![0.3_f64, 0.2], vec![0.1, 0.4]]).unwrap();
        let enc = DiscreteChannel::new(&[vec![0.7, 0.3], vec![0.7, 0.3]]).unwrap();
        let cls = DiscreteChannel::new(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let prior = DiscretePrior::new(vec![0.5, 0.5]).unwrap();
        let inst = DiscreteInstance::new(joint, enc, cls, prior).unwrap();
        assert!(l_ib_exact(&inst, 0.7).abs() < 1e-12);
    }

    #[test]
    fn rate_bound_identity_and_special_cases() {
        let inst = small_instance(31);
        let ind = induced_distributions(&inst);
        let i_zx = mi_unchecked(&ind.joint_xz);
        let rate = rate_bound_exact(&inst).unwrap();
        let kl = kl_discrete(&ind.p_z, inst.prior.probs()).unwrap();
        assert!((rate - i_zx - kl).abs() < 1e-12);
        assert!(kl >= 0.0);

        // Prior equal to the induced marginal: the KL term vanishes.
        let matched = DiscreteInstance::new(
            inst.joint.clone(),
            inst.encoder.clone(),
            inst.classifier.clone(),
            DiscretePrior::new(ind.p_z.clone()).unwrap(),
        )
        .unwrap();
        let rate = rate_bound_exact(&matched).unwrap();
        assert!((rate - i_zx).abs() < 1e-12);

        // Constant encoder against a uniform prior: KL(P(z) || uniform).
        let joint = DiscreteJoint::from_rows(&[vec![0.5, 0.5]]).unwrap();
        let enc = DiscreteChannel::new_exact(&[vec![0.9, 0.1]]).unwrap();
        let cls = DiscreteChannel::new(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let prior = DiscretePrior::new(vec![0.5, 0.5]).unwrap();
        let inst = DiscreteInstance::new(joint, enc, cls, prior).unwrap();
        let rate = rate_bound_exact(&inst).unwrap();
        let expected = 0.9 * (0.9_f64 / 0.5).ln() + 0.1 * (0.1_f64 / 0.5).ln();
        assert!((rate - expected).abs() < 1e-15);

        // Zero prior under encoder mass is an infinite divergence.
        let prior = DiscretePrior::new(vec![1.0, 0.0]).unwrap();
        let joint = DiscreteJoint::from_rows(&[vec![0.5, 0.5]]).unwrap();
        let enc = DiscreteChannel::new_exact(&[vec![0.9, 0.1]]).unwrap();
        let cls = DiscreteChannel::new(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let inst = DiscreteInstance::new(joint, enc, cls, prior).unwrap();
        assert!(matches!(
            rate_bound_exact(&inst),
            Err(Error::DivergenceInfinite(_))
        ));
    }

    #[test]
    fn distortion_bound_special_cases() {
        // Uniform classifier: ce_term = -ln|Y|, h_c = ln|Y|.
        let inst = {
            let joint = DiscreteJoint::from_rows(&[vec![0.3, 0.2], vec![0.1, 0.4]]).unwrap();
            let enc = DiscreteChannel::new(&[vec![0.6, 0.4], vec![0.2, 0.8]]).unwrap();
            let cls = DiscreteChannel::new(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
            let prior = DiscretePrior::new(vec![0.5, 0.5]).unwrap();
            DiscreteInstance::new(joint, enc, cls, prior).unwrap()
        };
        let d = distortion_bound_exact(&inst).unwrap();
        assert!((d.ce_term + 2.0_f64.ln()).abs() < 1e-12);
        assert!((d.h_c_y_given_z - 2.0_f64.ln()).abs() < 1e-12);

        // Deterministic classifier matched to a deterministic chain:
        // conditional entropy 0 and bound = ce_term.
        let joint = DiscreteJoint::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let enc = DiscreteChannel::new_exact(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let cls = DiscreteChannel::new_exact(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let prior = DiscretePrior::new(vec![0.5, 0.5]).unwrap();
        let inst = DiscreteInstance::new(joint, enc, cls, prior).unwrap();
        let d = distortion_bound_exact(&inst).unwrap();
        assert_eq!(d.h_c_y_given_z, 0.0);
        assert_eq!(d.bound, d.ce_term);
        assert_eq!(d.ce_term, 0.0);

        // Classifier zero on supported (y, z): infinite divergence.
        let cls = DiscreteChannel::new_exact(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let joint = DiscreteJoint::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let enc = DiscreteChannel::new_exact(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let prior = DiscretePrior::new(vec![0.5, 0.5]).unwrap();
        let inst = DiscreteInstance::new(joint, enc, cls, prior).unwrap();
        assert!(matches!(
            distortion_bound_exact(&inst),
            Err(Error::DivergenceInfinite(_))
        ));
    }

    #[test]
    fn plugin_classifier_ce_term_is_minus_conditional_entropy() {
        let inst = small_instance(41);
        let ind = induced_distributions(&inst);
        // Build the exact posterior classifier c(y|z) = P(y,z) / P(z).
        let nz = inst.nz();
        let ny = inst.ny();
        let rows: Vec<Vec<f64>> = (0..nz)
            .map(|z| (0..ny).map(|y| ind.joint_yz.get(y, z) / ind.p_z[z]).collect())
            .collect();
        let plugin = DiscreteChannel::new_exact(&rows).unwrap();
        let matched = DiscreteInstance::new(
            inst.joint.clone(),
            inst.encoder.clone(),
            plugin,
            inst.prior.clone(),
        )
        .unwrap();
        let d = distortion_bound_exact(&matched).unwrap();

        // H(Y|Z) from the induced joint.
        let mut h_y_given_z = 0.0;
        for z in 0..nz {
            for y in 0..ny {
                let pyz = ind.joint_yz.get(y, z);
                if pyz > 0.0 {
                    h_y_given_z -= pyz * (pyz / ind.p_z[z]).ln();
                }
            }
        }
        assert!((d.ce_term + h_y_given_z).abs() < 1e-12);
        // The bound never exceeds the true I(Z;Y).
        let i_zy = mi_unchecked(&ind.joint_yz);
        assert!(d.bound <= i_zy + 1e-12);
    }

    #[test]
    fn ordering_report_chain_and_gap() {
        let inst = small_instance(53);
        let betas = [0.0, 1e-3, 1e-2, 1e-1, 1.0];
        let report = verify_ordering(&inst, &betas).unwrap();
        assert!(report.all_pass);
        assert_eq!(report.rows.len(), betas.len());
        for row in &report.rows {
            assert!(row.l_ib <= row.l_vub + ORDERING_TOL);
            assert!(row.l_vub <= row.l_vib + ORDERING_TOL);
            assert!(((row.l_vib - row.l_vub) - report.gap).abs() < 1e-12);
        }

        // AddMin gives the looser bound, above l_vib.
        let loose = l_vub_exact_with(&inst, 0.1, SignConvention::AddMin).unwrap();
        let vib = l_vib_exact(&inst, 0.1).unwrap();
        assert!(loose >= vib);
    }

    #[test]
    fn degenerate_singleton_instance_is_all_zero() {
        let inst = random_instance::<f64>(
            0,
            InstanceSizes {
                nx: 1,
                ny: 1,
                nz: 1,
            },
            1.0,
        )
        .unwrap();
        let report = verify_ordering(&inst, &[0.0, 1.0]).unwrap();
        assert!(report.all_pass);
        for row in &report.rows {
            assert!(row.l_ib.abs() < 1e-12);
            assert!(row.l_vub.abs() < 1e-12);
            assert!(row.l_vib.abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn mi_nonnegative_and_transpose_symmetric(seed in 0u64..300) {
            let inst = small_instance(seed);
            let ind = induced_distributions(&inst);
            let mi = mi_unchecked(&ind.joint_yz);
            prop_assert!(mi >= -1e-15);
            let t = ind.joint_yz.transpose();
            prop_assert!((mi - mi_unchecked(&t)).abs() < 1e-12);
        }

        #[test]
        fn data_processing_inequality(seed in 0u64..300) {
            let inst = small_instance(seed);
            let ind = induced_distributions(&inst);
            let i_zy = mi_unchecked(&ind.joint_yz);
            let i_xy = mi_unchecked(inst.joint.table());
            prop_assert!(i_zy <= i_xy + 1e-12);
        }
    }
}
