//! Iterative self-consistent solver tracing the information curve of a
//! finite joint.
//!
//! Beta convention here is `L = I(Z;X) - beta * I(Z;Y)`: beta = 0 drives the
//! encoder to maximal compression (rate 0), large beta recovers as much of
//! I(X;Y) as the cardinality of Z allows. This is the opposite role of beta
//! from the bound evaluators in the parent module.

use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::oracle::{mi_unchecked, DiscreteJoint};
use crate::rng::seeded_rng;
use crate::scalar::{real, to_f64, Scalar};
use crate::PROB_FLOOR;

use rand_distr::{Distribution, Gamma};

/// Fixed initialization seed for the encoder rows (Dirichlet(1)).
const INIT_SEED: u64 = 0x1b;

/// Achieved (rate, distortion) at one beta.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct CurvePoint<T> {
    pub beta: T,
    /// I(Z;X)
    pub rate: T,
    /// I(Z;Y)
    pub distortion: T,
    /// False when the fixed-point iteration hit `iters` before `tol`.
    pub converged: bool,
}

/// Traces the information curve by fixed-point iteration of
/// `P(z|x) ~ P(z) exp(-beta * KL(P(y|x) || P(y|z)))` with marginal and
/// classifier consistency updates. Grid points are solved in ascending beta
/// order with warm starts; results are returned in the caller's grid order.
pub fn ib_curve<T: Scalar>(
    joint: &DiscreteJoint<T>,
    z_card: usize,
    beta_grid: &[T],
    iters: usize,
    tol: T,
) -> Result<Vec<CurvePoint<T>>> {
    if z_card == 0 {
        return Err(Error::invalid("z cardinality must be >= 1"));
    }
    if iters == 0 {
        return Err(Error::invalid("iteration budget must be >= 1"));
    }
    if !(tol > T::zero()) {
        return Err(Error::invalid("tolerance must be > 0"));
    }
    let nx = joint.nx();
    let ny = joint.ny();
    let p_x = joint.x_marginal();
    let p_y = joint.y_marginal();

    // Conditional P(y|x); rows with no mass get the label marginal (their
    // weight is zero everywhere below).
    let p_y_given_x = Matrix::from_fn(nx, ny, |x, y| {
        if p_x[x] > T::zero() {
            joint.prob(x, y) / p_x[x]
        } else {
            p_y[y]
        }
    });

    // Dirichlet(1) encoder initialization from the fixed seed.
    let mut rng = seeded_rng(INIT_SEED);
    let mut encoder = Matrix::from_fn(nx, z_card, |_, _| real::<T>(gamma_dist_sample(&mut rng)));
    for x in 0..nx {
        normalize_row(encoder.row_mut(x));
    }

    // Ascending beta order for deterministic annealing; remember where each
    // grid point belongs in the output.
    let mut order: Vec<usize> = (0..beta_grid.len()).collect();
    order.sort_by(|&a, &b| {
        to_f64(beta_grid[a])
            .partial_cmp(&to_f64(beta_grid[b]))
            .expect("finite beta grid")
    });

    let mut out: Vec<Option<CurvePoint<T>>> = vec![None; beta_grid.len()];
    for (step, &idx) in order.iter().enumerate() {
        let beta = beta_grid[idx];
        if beta < T::zero() {
            return Err(Error::invalid("beta grid entries must be >= 0"));
        }
        if step > 0 {
            // Deterministic symmetry breaking between grid points: identical
            // encoder rows (the collapsed phase) are a fixed point at every
            // beta, so a warm start alone can never split clusters. The
            // jitter decays to nothing at convergence.
            let gamma = real::<T>(1e-2);
            let one_minus = T::one() - gamma;
            for x in 0..nx {
                let jitter = {
                    let mut j: Vec<T> =
                        (0..z_card).map(|_| real(gamma_dist_sample(&mut rng))).collect();
                    normalize_row(&mut j);
                    j
                };
                for z in 0..z_card {
                    let v = one_minus * encoder.get(x, z) + gamma * jitter[z];
                    encoder.set(x, z, v);
                }
                normalize_row(encoder.row_mut(x));
            }
        }
        let mut converged = false;
        for _ in 0..iters {
            let (p_z, p_y_given_z) = consistency(&encoder, &p_x, &p_y_given_x, &p_y);
            let mut max_change = T::zero();
            for x in 0..nx {
                // Log-space update with max subtraction, so large beta does
                // not underflow every weight.
                let mut logw = vec![T::neg_infinity(); z_card];
                for z in 0..z_card {
                    let mut kl = T::zero();
                    for y in 0..ny {
                        let pyx = p_y_given_x.get(x, y);
                        if pyx > T::zero() {
                            let pyz = p_y_given_z.get(z, y);
                            if pyz > T::zero() {
                                kl = kl + pyx * (pyx / pyz).ln();
                            } else {
                                kl = T::infinity();
                            }
                        }
                    }
                    if p_z[z] > T::zero() && kl.is_finite() {
                        logw[z] = p_z[z].ln() - beta * kl;
                    }
                }
                let peak = logw.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
                let mut row: Vec<T> = if peak.is_finite() {
                    logw.iter().map(|&l| (l - peak).exp()).collect()
                } else {
                    vec![T::one(); z_card]
                };
                normalize_row(&mut row);
                for z in 0..z_card {
                    let change = (row[z] - encoder.get(x, z)).abs();
                    if change > max_change {
                        max_change = change;
                    }
                    encoder.set(x, z, row[z]);
                }
            }
            if max_change < tol {
                converged = true;
                break;
            }
        }

        let joint_xz = Matrix::from_fn(nx, z_card, |x, z| p_x[x] * encoder.get(x, z));
        let mut joint_yz = Matrix::zeros(ny, z_card);
        for x in 0..nx {
            for y in 0..ny {
                let pxy = joint.prob(x, y);
                if pxy > T::zero() {
                    for z in 0..z_card {
                        let v = joint_yz.get(y, z) + pxy * encoder.get(x, z);
                        joint_yz.set(y, z, v);
                    }
                }
            }
        }
        out[idx] = Some(CurvePoint {
            beta,
            rate: mi_unchecked(&joint_xz),
            distortion: mi_unchecked(&joint_yz),
            converged,
        });
    }
    Ok(out.into_iter().map(|p| p.expect("all grid points solved")).collect())
}

/// P(z) and P(y|z) consistent with the current encoder.
fn consistency<T: Scalar>(
    encoder: &Matrix<T>,
    p_x: &[T],
    p_y_given_x: &Matrix<T>,
    p_y: &[T],
) -> (Vec<T>, Matrix<T>) {
    let nx = encoder.rows();
    let nz = encoder.cols();
    let ny = p_y.len();
    let mut p_z = vec![T::zero(); nz];
    for x in 0..nx {
        for z in 0..nz {
            p_z[z] = p_z[z] + p_x[x] * encoder.get(x, z);
        }
    }
    let mut p_y_given_z = Matrix::zeros(nz, ny);
    for z in 0..nz {
        if p_z[z] > T::zero() {
            for y in 0..ny {
                let mut s = T::zero();
                for x in 0..nx {
                    s = s + p_x[x] * encoder.get(x, z) * p_y_given_x.get(x, y);
                }
                p_y_given_z.set(z, y, s / p_z[z]);
            }
        } else {
            for y in 0..ny {
                p_y_given_z.set(z, y, p_y[y]);
            }
        }
    }
    (p_z, p_y_given_z)
}

fn gamma_dist_sample(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    Gamma::new(1.0, 1.0).expect("unit gamma").sample(rng)
}

fn normalize_row<T: Scalar>(row: &mut [T]) {
    // Normalize first so relative magnitudes survive, then floor and
    // renormalize to keep every entry strictly positive.
    let floor = real::<T>(PROB_FLOOR);
    let sum: T = row.iter().copied().sum();
    if sum > T::zero() {
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
    for v in row.iter_mut() {
        *v = v.max(floor);
    }
    let sum: T = row.iter().copied().sum();
    for v in row.iter_mut() {
        *v = *v / sum;
    }
}
