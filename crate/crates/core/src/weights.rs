//! Weight schemes: uniform, Kaplan-Meier jumps, inverse biasing
//! probabilities and windowed redistribution of censored mass.
//!
//! All functions that take `x` and `delta` expect the observations sorted
//! ascending with events before censored points at ties, which is the order
//! [`WeightedSample`](crate::WeightedSample) stores them in.

use crate::error::{Error, Result};

/// Which scheme produced a sample's weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Uniform,
    KaplanMeier,
    BiasedInverse,
    Redistributed,
}

impl WeightKind {
    pub fn name(self) -> &'static str {
        match self {
            WeightKind::Uniform => "uniform",
            WeightKind::KaplanMeier => "km",
            WeightKind::BiasedInverse => "biased",
            WeightKind::Redistributed => "windowed",
        }
    }
}

pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Jumps of the Kaplan-Meier product-limit estimator at each observation.
///
/// Censored points get zero. The total is below one exactly when the largest
/// observation is censored.
pub fn km_weights(x: &[f64], delta: &[bool]) -> Result<Vec<f64>> {
    check_aligned(x, delta)?;
    if !delta.iter().any(|d| *d) {
        return Err(Error::AllCensored);
    }
    let n = x.len();
    if delta.iter().all(|d| *d) {
        return Ok(uniform_weights(n));
    }
    let mut surv = 1.0;
    let mut out = vec![0.0; n];
    for (i, event) in delta.iter().enumerate() {
        if *event {
            let at_risk = (n - i) as f64;
            let jump = surv / at_risk;
            out[i] = jump;
            surv -= jump;
        }
    }
    Ok(out)
}

/// Step function built from the product
/// `prod_{i<k} ((n-i)/(n-i+1))^(1-Δ_i)` on `(X(k-1), X(k)]`.
///
/// [`CensoringSurvival::eval`] returns that product: one on `[0, X(1)]`, a
/// left-continuous decreasing step through the data, zero beyond `X(n)`.
/// This is the product-limit survival of the censoring time and is the
/// `H*` used by the Kuhn-Padgett estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoringSurvival {
    knots: Vec<f64>,
    /// `prefix[k]` is the product over the first `k` sorted observations.
    prefix: Vec<f64>,
}

impl CensoringSurvival {
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x > self.knots[n - 1] {
            return 0.0;
        }
        // first sorted index with X(k) >= x; the product runs over indices below it
        let k = self.knots.partition_point(|v| *v < x);
        self.prefix[k]
    }

    /// One minus [`CensoringSurvival::eval`]: the complement as written
    /// alongside the product definition. Zero near the origin.
    pub fn complement(&self, x: f64) -> f64 {
        1.0 - self.eval(x)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }
}

pub fn censoring_survival(x: &[f64], delta: &[bool]) -> Result<CensoringSurvival> {
    check_aligned(x, delta)?;
    if x.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = x.len();
    let mut prefix = Vec::with_capacity(n + 1);
    let mut acc = 1.0;
    prefix.push(acc);
    for (i0, event) in delta.iter().enumerate() {
        let i = (i0 + 1) as f64;
        if !*event {
            acc *= (n as f64 - i) / (n as f64 - i + 1.0);
        }
        prefix.push(acc);
    }
    Ok(CensoringSurvival { knots: x.to_vec(), prefix })
}

/// `w_i ∝ 1/b(x_i)`, normalized to sum to one.
pub fn biased_weights(x: &[f64], b: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut inv = Vec::with_capacity(x.len());
    for &xi in x {
        let bi = b(xi);
        if !(bi > 0.0) {
            return Err(Error::ZeroBias(xi));
        }
        inv.push(1.0 / bi);
    }
    let total: f64 = inv.iter().sum();
    Ok(inv.into_iter().map(|v| v / total).collect())
}

/// Redistributes the mass of censored points over a bounded window.
///
/// Starting from `1/n` everywhere, censored points are visited in increasing
/// order. The current weight of censored point `i` is split equally among
/// every other observation in `(x_i, x_i + r_i]`; mass landing on a later
/// censored point moves again when that point is visited. With an empty
/// window the whole weight goes to the observation nearest `x_i + r_i`,
/// skipping censored points already visited. `r_hat` holds one residual per
/// censored point, in sorted order.
pub fn redistribute_windowed(x: &[f64], delta: &[bool], r_hat: &[f64]) -> Result<Vec<f64>> {
    check_aligned(x, delta)?;
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let censored: Vec<usize> = (0..n).filter(|&i| !delta[i]).collect();
    if r_hat.len() != censored.len() {
        return Err(Error::LengthMismatch { expected: censored.len(), got: r_hat.len() });
    }
    if let Some(r) = r_hat.iter().find(|r| !(**r >= 0.0)) {
        return Err(Error::InvalidParameter(format!("residual {r} must be non-negative")));
    }

    let mut w = uniform_weights(n);
    let mut visited = vec![false; n];
    for (&i, &r) in censored.iter().zip(r_hat) {
        let mass = w[i];
        w[i] = 0.0;
        visited[i] = true;
        let upper = x[i] + r;
        // x is sorted, so the window is a contiguous run after the ties of x_i
        let start = i + 1 + x[i + 1..].partition_point(|v| *v <= x[i]);
        let end = start + x[start..].partition_point(|v| *v <= upper);
        if end > start {
            let share = mass / (end - start) as f64;
            for wj in &mut w[start..end] {
                *wj += share;
            }
            continue;
        }
        let target = (0..n)
            .filter(|&j| j != i && !visited[j])
            .min_by(|&a, &b| (x[a] - upper).abs().total_cmp(&(x[b] - upper).abs()))
            .ok_or(Error::NoTarget { index: i })?;
        w[target] += mass;
    }
    Ok(w)
}

fn check_aligned(x: &[f64], delta: &[bool]) -> Result<()> {
    if x.len() != delta.len() {
        return Err(Error::LengthMismatch { expected: x.len(), got: delta.len() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn uniform_examples() {
        assert_eq!(uniform_weights(4), vec![0.25; 4]);
        assert_eq!(uniform_weights(1), vec![1.0]);
        assert!((uniform_weights(10).iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn km_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(close(&km_weights(&x, &[true; 5]).unwrap(), &[0.2; 5], 1e-15));
        let w = km_weights(&[1.0, 2.0, 3.0], &[true, false, true]).unwrap();
        assert!(close(&w, &[1.0 / 3.0, 0.0, 2.0 / 3.0], 1e-15));
        let w = km_weights(&[1.0, 2.0], &[true, false]).unwrap();
        assert!(close(&w, &[0.5, 0.0], 1e-15));
        assert_eq!(km_weights(&[1.0, 2.0], &[false, false]), Err(Error::AllCensored));
    }

    #[test]
    fn censoring_survival_examples() {
        let x = [1.0, 2.0, 3.0];
        let hs = censoring_survival(&x, &[true; 3]).unwrap();
        assert_eq!(hs.eval(0.0), 1.0);
        assert_eq!(hs.eval(1.0), 1.0);
        assert_eq!(hs.complement(0.5), 0.0);
        assert_eq!(hs.eval(2.5), 1.0);
        assert_eq!(hs.eval(3.5), 0.0);
        assert_eq!(hs.complement(3.5), 1.0);

        let hs = censoring_survival(&[1.0, 2.0], &[false, true]).unwrap();
        assert_eq!(hs.eval(0.5), 1.0);
        assert_eq!(hs.eval(1.5), 0.5);
        assert_eq!(hs.eval(2.0), 0.5);
        assert_eq!(hs.eval(2.1), 0.0);
    }

    #[test]
    fn censoring_survival_steps_only_at_censored_points() {
        // n = 4, censored at sorted positions 2 and 3 (1-based)
        let hs = censoring_survival(&[1.0, 2.0, 3.0, 4.0], &[true, false, false, true]).unwrap();
        assert_eq!(hs.eval(1.5), 1.0);
        assert_eq!(hs.eval(2.5), 2.0 / 3.0);
        assert!((hs.eval(3.5) - 1.0 / 3.0).abs() < 1e-15);
        assert!((hs.eval(4.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn biased_examples() {
        let w = biased_weights(&[1.0, 5.0, 9.0], |_| 0.7).unwrap();
        assert!(close(&w, &[1.0 / 3.0; 3], 1e-15));
        let w = biased_weights(&[1.0, 2.0], |x| x).unwrap();
        assert!(close(&w, &[2.0 / 3.0, 1.0 / 3.0], 1e-15));
        let w = biased_weights(&[1.0, 1.0, 2.0], |x| x).unwrap();
        assert!(close(&w, &[0.4, 0.4, 0.2], 1e-15));
        assert_eq!(biased_weights(&[0.0, 1.0], |x| x), Err(Error::ZeroBias(0.0)));
    }

    #[test]
    fn windowed_examples() {
        let w = redistribute_windowed(&[1.0, 2.0, 3.0], &[true; 3], &[]).unwrap();
        assert!(close(&w, &[1.0 / 3.0; 3], 1e-15));
        let w = redistribute_windowed(&[1.0, 2.0, 3.0], &[false, true, true], &[1.5]).unwrap();
        assert!(close(&w, &[0.0, 2.0 / 3.0, 1.0 / 3.0], 1e-15));
        let w = redistribute_windowed(&[1.0, 5.0], &[false, true], &[1.0]).unwrap();
        assert!(close(&w, &[0.0, 1.0], 1e-15));
    }

    #[test]
    fn windowed_cascades_through_censored_recipients() {
        // point 1 sends 1/8 each to points 2 and 3; point 2 then splits its
        // 1/4 + 1/8 between points 3 and 4
        let x = [1.0, 2.0, 3.0, 4.0];
        let d = [false, false, true, true];
        let w = redistribute_windowed(&x, &d, &[2.0, 2.0]).unwrap();
        assert!(close(&w, &[0.0, 0.0, 0.5625, 0.4375], 1e-15));
    }

    #[test]
    fn windowed_fallback_skips_visited_censored() {
        // window of point 3 is empty; nearest to 4.25 is point 2 (already
        // emptied, skipped), so the event at 1 receives it
        let x = [1.0, 3.5, 4.0];
        let d = [true, false, false];
        let w = redistribute_windowed(&x, &d, &[10.0, 0.25]).unwrap();
        assert!(close(&w, &[1.0, 0.0, 0.0], 1e-15));
        assert_eq!(
            redistribute_windowed(&[1.0], &[false], &[1.0]),
            Err(Error::NoTarget { index: 0 })
        );
    }

    #[test]
    fn windowed_errors() {
        assert!(matches!(
            redistribute_windowed(&[1.0, 2.0], &[false, true], &[]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(redistribute_windowed(&[1.0, 2.0], &[false, true], &[-1.0]).is_err());
    }
}
