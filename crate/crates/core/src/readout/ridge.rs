use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear readout `z = W · r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub lambda: f64,
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!("ridge λ must be positive and finite, got {lambda}")))
    }
}

/// `W = Y Rᵀ (R Rᵀ + λI)⁻¹` with `features` as `R` (`d × m`, one column per
/// sample). Solved by Cholesky on the `d × d` normal matrix.
pub fn ridge_fit(features: &DMatrix<f64>, targets: &[f64], lambda: f64) -> Result<RidgeModel> {
    check_lambda(lambda)?;
    let (d, m) = features.shape();
    if d == 0 || m == 0 {
        return Err(Error::validation("ridge fit needs at least one feature and one sample"));
    }
    if targets.len() != m {
        return Err(Error::structural(format!("{} targets for {m} samples", targets.len())));
    }
    if features.iter().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite ridge input"));
    }
    let mut normal = features * features.transpose();
    for i in 0..d {
        normal[(i, i)] += lambda;
    }
    let rhs = features * DVector::from_column_slice(targets);
    let chol = normal.clone().cholesky().ok_or_else(|| Error::Numerical {
        message: "ridge normal matrix is not positive definite".into(),
        min_eigenvalue: min_eigenvalue(&normal),
    })?;
    Ok(RidgeModel { weights: chol.solve(&rhs).iter().copied().collect(), lambda })
}

pub fn ridge_predict(model: &RidgeModel, feature: &[f64]) -> Result<f64> {
    if feature.len() != model.weights.len() {
        return Err(Error::structural(format!(
            "feature of length {} for a model over {} features",
            feature.len(),
            model.weights.len()
        )));
    }
    Ok(model.weights.iter().zip(feature).map(|(w, r)| w * r).sum())
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}
