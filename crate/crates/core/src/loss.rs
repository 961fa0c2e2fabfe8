//! Binary classification losses, the rejection target loss, and the surrogate
//! loss that trains the regressor/rejector pair.
//!
//! The target loss charges the squared error when the rejector output is
//! positive (the instance is accepted) and the rejection cost otherwise.
//! Because that is discontinuous in the rejector, training instead descends
//! the surrogate
//!
//! ```text
//! psi(h, r, c, x, y) = (h(x) - y)^2 * l(r(x), -1) + c(x) * l(r(x), +1)
//! ```
//!
//! where `l` is one of five binary margin losses. Rejection is treated as the
//! positive-margin side of a binary classification problem: a large squared
//! error pushes the rejector negative, a large cost pushes it positive.

use crate::data::Dataset;
use crate::error::{Error, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Binary label in {+1, -1}. `Plus` asks the rejector to accept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// The five binary losses the surrogate can be equipped with.
///
/// All are non-negative. `Logistic` and `Sigmoid` (and `Mae`) are strictly
/// positive for every finite input; `Hinge` and `Square` can reach zero.
/// The MAE loss is the L1 distance between the one-hot label and the
/// two-class softmax of (r, 0), which works out to `2 * sigmoid(-z * r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryLossKind {
    Mae,
    Hinge,
    Logistic,
    Square,
    Sigmoid,
}

impl BinaryLossKind {
    pub const ALL: [BinaryLossKind; 5] = [
        BinaryLossKind::Mae,
        BinaryLossKind::Hinge,
        BinaryLossKind::Logistic,
        BinaryLossKind::Square,
        BinaryLossKind::Sigmoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BinaryLossKind::Mae => "mae",
            BinaryLossKind::Hinge => "hinge",
            BinaryLossKind::Logistic => "logistic",
            BinaryLossKind::Square => "square",
            BinaryLossKind::Sigmoid => "sigmoid",
        }
    }
}

impl std::fmt::Display for BinaryLossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BinaryLossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mae" => Ok(BinaryLossKind::Mae),
            "hinge" => Ok(BinaryLossKind::Hinge),
            "logistic" => Ok(BinaryLossKind::Logistic),
            "square" => Ok(BinaryLossKind::Square),
            "sigmoid" => Ok(BinaryLossKind::Sigmoid),
            other => Err(Error::Invalid {
                what: "binary loss kind",
                reason: format!("unknown kind {other:?}"),
            }),
        }
    }
}

/// Numerically stable logistic sigmoid.
#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(x)) without overflow for large |x|.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Loss value without argument validation; `r` must be finite.
#[inline]
pub(crate) fn raw_binary_loss(kind: BinaryLossKind, r: f64, z: f64) -> f64 {
    match kind {
        BinaryLossKind::Mae => 2.0 * sigmoid(-z * r),
        BinaryLossKind::Hinge => (1.0 - z * r).max(0.0),
        BinaryLossKind::Logistic => softplus(-z * r),
        BinaryLossKind::Square => (r - z) * (r - z),
        BinaryLossKind::Sigmoid => sigmoid(-z * r),
    }
}

/// dl/dr without argument validation. At the hinge kink the flat-side
/// subgradient 0 is returned, so a rejector resting on the kink is not pushed.
#[inline]
pub(crate) fn raw_binary_loss_grad(kind: BinaryLossKind, r: f64, z: f64) -> f64 {
    match kind {
        BinaryLossKind::Mae => {
            let s = sigmoid(-z * r);
            -2.0 * z * s * (1.0 - s)
        }
        BinaryLossKind::Hinge => {
            if 1.0 - z * r > 0.0 {
                -z
            } else {
                0.0
            }
        }
        BinaryLossKind::Logistic => -z * sigmoid(-z * r),
        BinaryLossKind::Square => 2.0 * (r - z),
        BinaryLossKind::Sigmoid => {
            let s = sigmoid(-z * r);
            -z * s * (1.0 - s)
        }
    }
}

/// Binary loss l(r, z).
pub fn binary_loss(kind: BinaryLossKind, r: f64, z: Sign) -> Result<f64> {
    if !r.is_finite() {
        return Err(Error::NonFinite { what: "binary loss input", value: r });
    }
    Ok(raw_binary_loss(kind, r, z.value()))
}

/// Derivative of the binary loss with respect to r.
pub fn binary_loss_grad(kind: BinaryLossKind, r: f64, z: Sign) -> Result<f64> {
    if !r.is_finite() {
        return Err(Error::NonFinite { what: "binary loss input", value: r });
    }
    Ok(raw_binary_loss_grad(kind, r, z.value()))
}

/// The evaluation loss: squared error if accepted (r_out > 0), cost otherwise.
///
/// A rejector output of exactly zero rejects.
pub fn target_loss(h_pred: f64, y: f64, r_out: f64, c: f64) -> Result<f64> {
    for (what, v) in [("prediction", h_pred), ("target", y), ("rejector output", r_out)] {
        if !v.is_finite() {
            return Err(Error::NonFinite { what, value: v });
        }
    }
    check_cost(c)?;
    if r_out > 0.0 {
        let d = h_pred - y;
        Ok(d * d)
    } else {
        Ok(c)
    }
}

#[inline]
fn check_cost(c: f64) -> Result<()> {
    if !c.is_finite() {
        return Err(Error::NonFinite { what: "rejection cost", value: c });
    }
    if c < 0.0 {
        return Err(Error::Negative { what: "rejection cost", value: c });
    }
    Ok(())
}

#[inline]
pub(crate) fn raw_surrogate_loss(kind: BinaryLossKind, h_pred: f64, y: f64, r_out: f64, c: f64) -> f64 {
    let d = h_pred - y;
    d * d * raw_binary_loss(kind, r_out, -1.0) + c * raw_binary_loss(kind, r_out, 1.0)
}

/// Surrogate loss and its two partial derivatives (w.r.t. h_pred and r_out),
/// computed together. Used by the training hot path.
#[inline]
pub(crate) fn raw_surrogate_loss_and_grads(
    kind: BinaryLossKind,
    h_pred: f64,
    y: f64,
    r_out: f64,
    c: f64,
) -> (f64, f64, f64) {
    let d = h_pred - y;
    let l_neg = raw_binary_loss(kind, r_out, -1.0);
    let l_pos = raw_binary_loss(kind, r_out, 1.0);
    let g_neg = raw_binary_loss_grad(kind, r_out, -1.0);
    let g_pos = raw_binary_loss_grad(kind, r_out, 1.0);
    let loss = d * d * l_neg + c * l_pos;
    let d_h = 2.0 * d * l_neg;
    let d_r = d * d * g_neg + c * g_pos;
    (loss, d_h, d_r)
}

fn check_surrogate_args(h_pred: f64, y: f64, r_out: f64, c: f64) -> Result<()> {
    for (what, v) in [("prediction", h_pred), ("target", y), ("rejector output", r_out)] {
        if !v.is_finite() {
            return Err(Error::NonFinite { what, value: v });
        }
    }
    check_cost(c)
}

/// Surrogate loss psi(h, r, c, x, y).
pub fn surrogate_loss(h_pred: f64, y: f64, r_out: f64, c: f64, kind: BinaryLossKind) -> Result<f64> {
    check_surrogate_args(h_pred, y, r_out, c)?;
    Ok(raw_surrogate_loss(kind, h_pred, y, r_out, c))
}

/// Partial derivatives of the surrogate loss: (d/d h_pred, d/d r_out).
pub fn surrogate_grads(
    h_pred: f64,
    y: f64,
    r_out: f64,
    c: f64,
    kind: BinaryLossKind,
) -> Result<(f64, f64)> {
    check_surrogate_args(h_pred, y, r_out, c)?;
    let (_, d_h, d_r) = raw_surrogate_loss_and_grads(kind, h_pred, y, r_out, c);
    Ok((d_h, d_r))
}

/// How rejection costs are supplied: one constant for the whole dataset, or a
/// per-example column carried by the dataset itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostSpec {
    Constant(f64),
    PerExample,
}

impl CostSpec {
    pub fn validate(&self) -> Result<()> {
        if let CostSpec::Constant(c) = self {
            check_cost(*c)?;
        }
        Ok(())
    }

    /// Resolve to one cost per example of `ds`.
    pub fn resolve(&self, ds: &Dataset) -> Result<Vec<f64>> {
        match self {
            CostSpec::Constant(c) => {
                check_cost(*c)?;
                Ok(vec![*c; ds.len()])
            }
            CostSpec::PerExample => match &ds.costs {
                Some(costs) => Ok(costs.clone()),
                None => Err(Error::Invalid {
                    what: "cost specification",
                    reason: "per-example costs requested but the dataset has no cost column".into(),
                }),
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            CostSpec::Constant(c) => format!("{c}"),
            CostSpec::PerExample => "per_example".into(),
        }
    }
}

impl Serialize for CostSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CostSpec::Constant(c) => serializer.serialize_f64(*c),
            CostSpec::PerExample => serializer.serialize_str("per_example"),
        }
    }
}

impl<'de> Deserialize<'de> for CostSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(c) => {
                if !c.is_finite() || c < 0.0 {
                    return Err(D::Error::custom(format!("rejection cost must be finite and >= 0, got {c}")));
                }
                Ok(CostSpec::Constant(c))
            }
            Repr::Text(s) if s == "per_example" => Ok(CostSpec::PerExample),
            Repr::Text(s) => Err(D::Error::custom(format!("unknown cost spec {s:?}"))),
        }
    }
}
