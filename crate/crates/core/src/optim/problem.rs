use crate::data::Dataset;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Ridge,
    Logistic,
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::Ridge => "ridge",
            LossKind::Logistic => "logistic",
        })
    }
}

/// `f(x) = (1/2n)|Ax - y|^2 + (lambda/2)|x|^2` (ridge) or
/// `f(x) = (1/n) sum log(1 + exp(-y_i <a_i, x>)) + (lambda/2)|x|^2` (logistic).
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    features: DMatrix<f64>,
    labels: DVector<f64>,
    lambda: f64,
    kind: LossKind,
}

const POWER_MAX_ITER: usize = 10_000;
const POWER_TOL: f64 = 1e-8;
const MINIMIZER_GRAD_TOL: f64 = 1e-10;
const MINIMIZER_MAX_ITER: usize = 1_000_000;

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Problem {
    pub fn new(
        features: DMatrix<f64>,
        labels: Vec<f64>,
        lambda: f64,
        kind: LossKind,
    ) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::invalid("problem needs at least one sample and one feature"));
        }
        if labels.len() != features.nrows() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
        }
        if kind == LossKind::Logistic && labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::invalid("logistic labels must be -1 or +1"));
        }
        Ok(Self {
            features,
            labels: DVector::from_vec(labels),
            lambda,
            kind,
        })
    }

    /// Ridge regression with `lambda = 1/n`.
    pub fn ridge(ds: &Dataset) -> Result<Self> {
        let lambda = 1.0 / ds.n() as f64;
        Self::new(ds.features.clone(), ds.labels.clone(), lambda, LossKind::Ridge)
    }

    /// Logistic regression with `lambda = 1/n`; labels are mapped to `{-1, +1}`.
    pub fn logistic(ds: &Dataset) -> Result<Self> {
        let lambda = 1.0 / ds.n() as f64;
        Self::new(ds.features.clone(), ds.binary_labels()?, lambda, LossKind::Logistic)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }

    fn vector(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: x.len(),
            });
        }
        Ok(DVector::from_column_slice(x))
    }

    pub fn loss(&self, x: &[f64]) -> Result<f64> {
        let xv = self.vector(x)?;
        let n = self.n() as f64;
        let ax = &self.features * &xv;
        let data = match self.kind {
            LossKind::Ridge => (ax - &self.labels).norm_squared() / (2.0 * n),
            LossKind::Logistic => {
                ax.iter()
                    .zip(self.labels.iter())
                    .map(|(z, y)| softplus(-y * z))
                    .sum::<f64>()
                    / n
            }
        };
        Ok(data + 0.5 * self.lambda * xv.norm_squared())
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let xv = self.vector(x)?;
        let n = self.n() as f64;
        let ax = &self.features * &xv;
        let residual = match self.kind {
            LossKind::Ridge => ax - &self.labels,
            LossKind::Logistic => DVector::from_iterator(
                ax.len(),
                ax.iter()
                    .zip(self.labels.iter())
                    .map(|(z, y)| -y * sigmoid(-y * z)),
            ),
        };
        let g = self.features.tr_mul(&residual) / n + xv * self.lambda;
        Ok(g.iter().copied().collect())
    }

    /// Largest eigenvalue of `A^T A` by power iteration on the Rayleigh quotient.
    pub fn max_eigenvalue(&self) -> Result<f64> {
        let d = self.d();
        // Fixed, non-symmetric start so runs are reproducible.
        let mut v = DVector::from_fn(d, |i, _| 1.0 + (i as f64 + 1.0).sqrt().fract());
        v /= v.norm();
        let mut prev = 0.0;
        for _ in 0..POWER_MAX_ITER {
            let w = self.features.tr_mul(&(&self.features * &v));
            let lambda = v.dot(&w);
            let norm = w.norm();
            if norm == 0.0 {
                return Ok(0.0);
            }
            v = w / norm;
            if (lambda - prev).abs() <= POWER_TOL * lambda.abs() {
                return Ok(lambda.max(norm));
            }
            prev = lambda;
        }
        Err(Error::NonConvergence {
            routine: "power iteration",
            iterations: POWER_MAX_ITER,
        })
    }

    /// Smoothness constant: `lambda_max(A^T A)/n + lambda` for ridge,
    /// `lambda_max(A^T A)/(4n) + lambda` for logistic.
    pub fn smoothness(&self) -> Result<f64> {
        let top = self.max_eigenvalue()? / self.n() as f64;
        Ok(match self.kind {
            LossKind::Ridge => top + self.lambda,
            LossKind::Logistic => top / 4.0 + self.lambda,
        })
    }

    /// Exact minimizer: a Cholesky solve for ridge, gradient descent with step
    /// `1/L` until `|grad f| <= 1e-10` for logistic.
    pub fn minimizer(&self) -> Result<Vec<f64>> {
        match self.kind {
            LossKind::Ridge => {
                let n = self.n() as f64;
                let mut h = self.features.tr_mul(&self.features) / n;
                for i in 0..self.d() {
                    h[(i, i)] += self.lambda;
                }
                let rhs = self.features.tr_mul(&self.labels) / n;
                let chol = h
                    .cholesky()
                    .ok_or_else(|| Error::invalid("normal equations are singular"))?;
                Ok(chol.solve(&rhs).iter().copied().collect())
            }
            LossKind::Logistic => {
                if self.lambda <= 0.0 {
                    return Err(Error::invalid("logistic minimizer needs lambda > 0"));
                }
                let step = 1.0 / self.smoothness()?;
                let mut x = vec![0.0; self.d()];
                for _ in 0..MINIMIZER_MAX_ITER {
                    let g = self.gradient(&x)?;
                    if g.iter().map(|v| v * v).sum::<f64>().sqrt() <= MINIMIZER_GRAD_TOL {
                        return Ok(x);
                    }
                    x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi -= step * gi);
                }
                Err(Error::NonConvergence {
                    routine: "logistic minimizer",
                    iterations: MINIMIZER_MAX_ITER,
                })
            }
        }
    }
}
