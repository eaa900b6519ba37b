//! E-step of the product-of-Bernoullis model.
//!
//! A reward `w = u * v` with `u ~ Bernoulli(p)`, `v ~ Bernoulli(q)` independent.
//! Observing `w = 1` forces `u = v = 1`. Observing `w = 0` leaves the three
//! outcomes `(0,0)`, `(0,1)`, `(1,0)` with weights proportional to their prior
//! probabilities.

use crate::error::{Error, Result};

/// `(E[u | w], E[v | w])`.
pub fn em_posterior(w: f64, p: f64, q: f64) -> Result<(f64, f64)> {
    if !(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "posterior needs p, q in (0, 1), got p = {p}, q = {q}"
        )));
    }
    if w == 1.0 {
        return Ok((1.0, 1.0));
    }
    if w != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "binary reward expected, got {w}"
        )));
    }
    let miss = 1.0 - p * q;
    if !(miss > 0.0) {
        return Err(Error::NonIdentifiable(
            "w = 0 has zero likelihood when p * q = 1".into(),
        ));
    }
    Ok((p * (1.0 - q) / miss, q * (1.0 - p) / miss))
}
