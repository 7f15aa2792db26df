//! Return, advantage and loss arithmetic of the PPO update.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `R_t = r_t + gamma * R_{t+1}` computed backward, with `R_{T+1} = bootstrap`.
pub fn discounted_returns<T: Scalar>(rewards: &[T], gamma: T, bootstrap: T) -> Vec<T> {
    let mut out = vec![T::zero(); rewards.len()];
    let mut acc = bootstrap;
    for (o, &r) in out.iter_mut().zip(rewards).rev() {
        acc = r + gamma * acc;
        *o = acc;
    }
    out
}

/// `R_t - V(x_t)`.
pub fn advantages<T: Scalar>(returns: &[T], values: &[T]) -> Result<Vec<T>> {
    if returns.len() != values.len() {
        return Err(Error::config(format!(
            "{} returns but {} values",
            returns.len(),
            values.len()
        )));
    }
    Ok(returns.iter().zip(values).map(|(&r, &v)| r - v).collect())
}

/// Generalized advantage estimates with `lambda`; `values` has one extra
/// trailing entry holding the bootstrap value.
pub fn gae<T: Scalar>(rewards: &[T], values: &[T], gamma: T, lambda: T) -> Result<Vec<T>> {
    if values.len() != rewards.len() + 1 {
        return Err(Error::config("gae needs one value per reward plus a bootstrap value"));
    }
    let mut out = vec![T::zero(); rewards.len()];
    let mut acc = T::zero();
    for t in (0..rewards.len()).rev() {
        let delta = rewards[t] + gamma * values[t + 1] - values[t];
        acc = delta + gamma * lambda * acc;
        out[t] = acc;
    }
    Ok(out)
}

/// Shift to zero mean and scale to unit (population) standard deviation.
pub fn normalize<T: Scalar>(xs: &mut [T]) {
    if xs.len() < 2 {
        return;
    }
    let n = T::of(xs.len() as f64);
    let mean = xs.iter().copied().sum::<T>() / n;
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    let std = var.sqrt() + T::of(1e-8);
    xs.iter_mut().for_each(|x| *x = (*x - mean) / std);
}

/// `min(r A, clip(r, 1 - eps, 1 + eps) A)`.
pub fn ppo_clip_objective<T: Scalar>(ratio: T, advantage: T, eps: T) -> Result<T> {
    if !(ratio > T::zero()) {
        return Err(Error::Numeric(format!("probability ratio {ratio} is not positive")));
    }
    let clipped = ratio.max(T::one() - eps).min(T::one() + eps);
    Ok((ratio * advantage).min(clipped * advantage))
}

/// `d/dr` of the clipped objective: `A` when the unclipped branch is the
/// minimum, otherwise 0.
pub fn ppo_clip_slope<T: Scalar>(ratio: T, advantage: T, eps: T) -> T {
    let clipped = ratio.max(T::one() - eps).min(T::one() + eps);
    if ratio * advantage <= clipped * advantage {
        advantage
    } else {
        T::zero()
    }
}

/// Mean of `(V - R)^2`.
pub fn value_loss<T: Scalar>(values: &[T], returns: &[T]) -> Result<T> {
    if values.is_empty() {
        return Err(Error::invalid("value loss of an empty buffer"));
    }
    if values.len() != returns.len() {
        return Err(Error::config("values and returns differ in length"));
    }
    let n = T::of(values.len() as f64);
    Ok(values.iter().zip(returns).map(|(&v, &r)| (v - r) * (v - r)).sum::<T>() / n)
}
