//! The reference generating models used by the experiments.

use crate::linalg::RMat;
use crate::model::VarmaModel;

/// Shared innovations covariance of the VMA(1) and nonminimum-phase models.
pub fn correlated_sigma() -> RMat {
    RMat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 5.0])
}

/// VMA(1) with one-way lagged coupling and instantaneous correlation:
/// `x1 = w1(n) + w2(n-1)`, `x2 = w2(n) + w2(n-1)`.
pub fn example1() -> VarmaModel {
    let b0 = RMat::identity(2, 2);
    let b1 = RMat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
    VarmaModel::vma(vec![b0, b1], correlated_sigma()).expect("valid catalog model")
}

/// Resonator parameters of the VARMA(2,2) model.
pub const EXAMPLE2_RADIUS: f64 = 0.95;
pub const EXAMPLE2_ANGLE: f64 = std::f64::consts::PI / 3.0;

/// VARMA(2,2):
///
/// ```text
/// x1 = 2 r cosθ x1(n-1) - r² x1(n-2) + w1(n) + w3(n) + w3(n-1)
/// x2 = b x1(n-1) + a x2(n-1) + w2(n)
/// x3 = c x3(n-1) + w2(n) + w2(n-2) + w3(n)
/// ```
///
/// with r = .95, θ = π/3, b = .5, a = -.5, c = .7 and identity covariance.
pub fn example2() -> VarmaModel {
    let (r, theta) = (EXAMPLE2_RADIUS, EXAMPLE2_ANGLE);
    let (a, b, c) = (-0.5, 0.5, 0.7);
    let a1 = RMat::from_row_slice(3, 3, &[2.0 * r * theta.cos(), 0.0, 0.0, b, a, 0.0, 0.0, 0.0, c]);
    let mut a2 = RMat::zeros(3, 3);
    a2[(0, 0)] = -r * r;
    let b0 = RMat::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
    let mut b1 = RMat::zeros(3, 3);
    b1[(0, 2)] = 1.0;
    let mut b2 = RMat::zeros(3, 3);
    b2[(2, 1)] = 1.0;
    VarmaModel::new(vec![a1, a2], vec![b0, b1, b2], RMat::identity(3, 3)).expect("valid catalog model")
}

/// Nonminimum-phase VMA(2): x2 drives x1, nothing drives x2.
pub fn example4() -> VarmaModel {
    let b0 = RMat::identity(2, 2);
    let b1 = RMat::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.0]);
    let b2 = RMat::from_row_slice(2, 2, &[4.0, 2.0, 0.0, 2.0]);
    VarmaModel::vma(vec![b0, b1, b2], correlated_sigma()).expect("valid catalog model")
}

/// Looks up a catalog model. Id 3 has no printed coefficients and is refused.
pub fn by_id(id: u32) -> Result<VarmaModel, String> {
    match id {
        1 => Ok(example1()),
        2 => Ok(example2()),
        3 => Err("example 3 is a VAR model whose coefficients are only published elsewhere; \
                  supply them as a model file and use the `model` subcommand"
            .into()),
        4 => Ok(example4()),
        _ => Err(format!("unknown example {id}; available examples are 1, 2 and 4")),
    }
}
