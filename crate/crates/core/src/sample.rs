//! Weighted samples and their weighted summary statistics.

use crate::error::{Error, Result};

/// Observations sorted ascending, with weights and optional event indicators
/// permuted consistently.
///
/// Weights are stored as given (they need not sum to one). The statistics
/// below normalize internally. Ties in `x` are kept as distinct atoms; an
/// uncensored observation sorts before a censored one at the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    x: Vec<f64>,
    w: Vec<f64>,
    delta: Option<Vec<bool>>,
    order: Vec<usize>,
}

impl WeightedSample {
    pub fn new(x: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        Self::build(x, w, None)
    }

    /// Right-censored sample; `delta[i]` is true when `x[i]` is an observed event.
    pub fn with_censoring(x: Vec<f64>, w: Vec<f64>, delta: Vec<bool>) -> Result<Self> {
        Self::build(x, w, Some(delta))
    }

    /// Equal weights `1/n`.
    pub fn uniform(x: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n == 0 {
            return Err(Error::EmptySample);
        }
        Self::new(x, vec![1.0 / n as f64; n])
    }

    /// Censored sample carrying equal weights `1/n`; callers usually follow
    /// with [`WeightedSample::reweighted`].
    pub fn censored_uniform(x: Vec<f64>, delta: Vec<bool>) -> Result<Self> {
        let n = x.len();
        if n == 0 {
            return Err(Error::EmptySample);
        }
        Self::with_censoring(x, vec![1.0 / n as f64; n], delta)
    }

    fn build(x: Vec<f64>, w: Vec<f64>, delta: Option<Vec<bool>>) -> Result<Self> {
        let n = x.len();
        if n == 0 {
            return Err(Error::EmptySample);
        }
        if w.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: w.len() });
        }
        if let Some(d) = &delta {
            if d.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: d.len() });
            }
        }
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        check_weights(&w)?;

        let mut order: Vec<usize> = (0..n).collect();
        // Stable: equal keys keep their input order.
        order.sort_by(|&a, &b| {
            x[a].total_cmp(&x[b]).then_with(|| {
                let ea = delta.as_ref().map_or(true, |d| d[a]);
                let eb = delta.as_ref().map_or(true, |d| d[b]);
                eb.cmp(&ea)
            })
        });
        let xs = order.iter().map(|&i| x[i]).collect();
        let ws = order.iter().map(|&i| w[i]).collect();
        let ds = delta.map(|d| order.iter().map(|&i| d[i]).collect());
        Ok(WeightedSample { x: xs, w: ws, delta: ds, order })
    }

    /// Same observations with new weights, given in sorted order.
    pub fn reweighted(&self, w: Vec<f64>) -> Result<Self> {
        if w.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: w.len() });
        }
        check_weights(&w)?;
        Ok(WeightedSample { w, ..self.clone() })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Sorted observations.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Raw weights aligned with [`WeightedSample::x`].
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn delta(&self) -> Option<&[bool]> {
        self.delta.as_deref()
    }

    /// Event indicators, all `true` when the sample carries none.
    pub fn events(&self) -> Vec<bool> {
        self.delta.clone().unwrap_or_else(|| vec![true; self.len()])
    }

    /// `order()[k]` is the input index of the k-th sorted observation.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn total_weight(&self) -> f64 {
        self.w.iter().sum()
    }

    pub fn normalized_weights(&self) -> Vec<f64> {
        let total = self.total_weight();
        self.w.iter().map(|w| w / total).collect()
    }

    pub fn weighted_mean(&self) -> f64 {
        let total = self.total_weight();
        self.x.iter().zip(&self.w).map(|(x, w)| x * w).sum::<f64>() / total
    }

    /// Weighted divide-by-total variance. Zero when all mass sits on one
    /// value; see [`WeightedSample::is_degenerate`].
    pub fn weighted_variance(&self) -> f64 {
        let total = self.total_weight();
        let mu = self.weighted_mean();
        let v = self
            .x
            .iter()
            .zip(&self.w)
            .map(|(x, w)| w * (x - mu).powi(2))
            .sum::<f64>()
            / total;
        v.max(0.0)
    }

    pub fn weighted_sd(&self) -> f64 {
        self.weighted_variance().sqrt()
    }

    /// True when every positively weighted observation has the same value.
    pub fn is_degenerate(&self) -> bool {
        let mut support = self.x.iter().zip(&self.w).filter(|(_, w)| **w > 0.0).map(|(x, _)| *x);
        match support.next() {
            Some(first) => support.all(|x| x == first),
            None => true,
        }
    }

    /// Weighted quantile by the remainder rule: with normalized weights on
    /// the order statistics, take the largest `q` whose cumulative weight is
    /// at most `p`, and return `X(q) + r (X(q+1) - X(q))` where `r` is the
    /// leftover probability. The remainder is used directly as the
    /// interpolation fraction.
    pub fn weighted_quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("probability {p} outside (0, 1)")));
        }
        let total = self.total_weight();
        let n = self.len();
        let eps = 1e-12;
        let mut cum = 0.0;
        let mut q = 0usize;
        for (k, w) in self.w.iter().enumerate() {
            let next = cum + w / total;
            if next <= p + eps {
                cum = next;
                q = k + 1;
            } else {
                break;
            }
        }
        if q == 0 {
            return Ok(self.x[0]);
        }
        if q >= n {
            return Ok(self.x[n - 1]);
        }
        let r = (p - cum).max(0.0);
        let lo = self.x[q - 1];
        let hi = self.x[q];
        Ok(lo + r * (hi - lo))
    }

    pub fn weighted_iqr(&self) -> f64 {
        let q3 = self.weighted_quantile(0.75).expect("0.75 is a valid probability");
        let q1 = self.weighted_quantile(0.25).expect("0.25 is a valid probability");
        (q3 - q1).max(0.0)
    }
}

fn check_weights(w: &[f64]) -> Result<()> {
    if let Some(index) = w.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::NegativeWeight { index });
    }
    if w.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroWeight);
    }
    Ok(())
}
