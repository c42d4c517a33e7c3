//! Model parameters and the closed-form laws of a typical cluster.
//!
//! A cluster grows by traceable contaminations (rate `p*gamma` per member),
//! is isolated as a whole when any member is detected (rate `delta` per
//! member), and seeds new clusters by untraceable contaminations (rate
//! `(1-p)*gamma` per member). With `rho = delta + p*gamma`, the size of a
//! cluster of age `t` is a rate-`rho` pure birth process stopped at an
//! independent geometric level with success probability `delta / rho`, and
//! everything in this module follows from that representation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default tail tolerance for truncating geometric-dominated series.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// Validated model parameters.
///
/// `delta = 0` (no detection ever) is accepted but flagged; operations that
/// divide by `delta` reject it and the detection-free variants documented on
/// each operation apply instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Parameters<R> {
    gamma: R,
    p: R,
    delta: R,
}

/// Rates and success probabilities derived from the parameter triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedRates<R> {
    /// `delta + p * gamma`: total per-member jump rate of a cluster.
    pub rho: R,
    /// `delta / rho`: probability that a cluster jump is an isolation.
    pub iso_success: R,
    /// `delta / ((1-p) * gamma + delta)`: success probability of the
    /// geometric variable `1 + Z1`, `Z1` the number of child clusters.
    pub offspring_success: R,
}

/// Criticality of the epidemic: subcritical and critical epidemics die out
/// almost surely, supercritical ones survive with positive probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl<R: Real> Parameters<R> {
    /// Validates the raw triple `(gamma, p, delta)`.
    ///
    /// Rejects non-finite inputs, `gamma <= 0`, `p` outside `[0, 1]`,
    /// `delta < 0`, and the fully degenerate `delta = 0, p = 0` corner where
    /// `rho = 0` and a cluster has no dynamics at all.
    pub fn new(gamma: R, p: R, delta: R) -> Result<Self> {
        if !(gamma.is_finite() && p.is_finite() && delta.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "non-finite input: gamma = {gamma}, p = {p}, delta = {delta}"
            )));
        }
        if gamma <= R::zero() {
            return Err(Error::InvalidParameters(format!("gamma must be > 0, got {gamma}")));
        }
        if p < R::zero() || p > R::one() {
            return Err(Error::InvalidParameters(format!("p must lie in [0, 1], got {p}")));
        }
        if delta < R::zero() {
            return Err(Error::InvalidParameters(format!("delta must be >= 0, got {delta}")));
        }
        if delta == R::zero() && p == R::zero() {
            return Err(Error::InvalidParameters(
                "delta = 0 with p = 0 leaves clusters with no dynamics (rho = 0)".into(),
            ));
        }
        Ok(Self { gamma, p, delta })
    }

    #[inline]
    pub fn gamma(&self) -> R {
        self.gamma
    }

    #[inline]
    pub fn p(&self) -> R {
        self.p
    }

    #[inline]
    pub fn delta(&self) -> R {
        self.delta
    }

    /// True in the flagged detection-free mode `delta = 0`.
    #[inline]
    pub fn detection_free(&self) -> bool {
        self.delta == R::zero()
    }

    pub fn rates(&self) -> DerivedRates<R> {
        let rho = self.delta + self.p * self.gamma;
        let untraceable = (R::one() - self.p) * self.gamma;
        let denom = untraceable + self.delta;
        // denom = 0 only for p = 1, delta = 0: a single immortal cluster
        // that never begets, i.e. Z1 = 0 surely.
        let offspring_success = if denom > R::zero() {
            self.delta / denom
        } else {
            R::one()
        };
        DerivedRates {
            rho,
            iso_success: self.delta / rho,
            offspring_success,
        }
    }

    /// Classification by the sign of `(1-p)*gamma - delta`.
    pub fn regime(&self) -> Regime {
        let untraceable = (R::one() - self.p) * self.gamma;
        if self.delta < untraceable {
            Regime::Supercritical
        } else if self.delta == untraceable {
            Regime::Critical
        } else {
            Regime::Subcritical
        }
    }

    #[inline]
    pub fn is_supercritical(&self) -> bool {
        self.regime() == Regime::Supercritical
    }
}

/// Convenience wrapper mirroring the operation name; see [`Parameters::new`].
pub fn validate<R: Real>(gamma: R, p: R, delta: R) -> Result<Parameters<R>> {
    Parameters::new(gamma, p, delta)
}

fn check_time<R: Real>(t: R) -> Result<()> {
    if !t.is_finite() || t < R::zero() {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// `P(C(t) = k)`: probability that a typical cluster has size `k >= 1` and is
/// still active at age `t`.
///
/// Equals `(1 - delta/rho)^(k-1) (1 - e^(-rho t))^(k-1) e^(-rho t)`; the
/// `k`-th power factors are assembled in log space.
pub fn typical_size_pmf<R: Real>(params: &Parameters<R>, t: R, k: u64) -> Result<R> {
    check_time(t)?;
    if k < 1 {
        return Err(Error::Domain(format!("cluster size must be >= 1, got {k}")));
    }
    let rates = params.rates();
    let survive = (-rates.rho * t).exp();
    if k == 1 {
        return Ok(survive);
    }
    let grown = -(-rates.rho * t).exp_m1(); // 1 - e^(-rho t)
    let keep = R::one() - rates.iso_success;
    if grown == R::zero() || keep == R::zero() {
        return Ok(R::zero());
    }
    let log_mass = R::of_usize((k - 1) as usize) * (keep.ln() + grown.ln()) - rates.rho * t;
    Ok(log_mass.exp())
}

/// `P(zeta <= t)`: distribution function of the isolation age of a typical
/// cluster, `1 - rho / (rho + delta (e^(rho t) - 1))`.
pub fn isolation_cdf<R: Real>(params: &Parameters<R>, t: R) -> Result<R> {
    check_time(t)?;
    if params.detection_free() {
        return Ok(R::zero());
    }
    let rho = params.rates().rho;
    Ok(R::one() - rho / (rho + params.delta() * (rho * t).exp_m1()))
}

/// `P(C(zeta-) = k, zeta <= t)`: joint law of the final size and the
/// isolation age, `(delta/rho)(1 - delta/rho)^(k-1) (1 - e^(-rho t))^k`.
pub fn joint_final_size_cdf<R: Real>(params: &Parameters<R>, t: R, k: u64) -> Result<R> {
    check_time(t)?;
    if k < 1 {
        return Err(Error::Domain(format!("cluster size must be >= 1, got {k}")));
    }
    let rates = params.rates();
    let q = rates.iso_success;
    if q == R::zero() {
        return Ok(R::zero());
    }
    let grown = -(-rates.rho * t).exp_m1();
    if grown == R::zero() {
        return Ok(R::zero());
    }
    let keep = R::one() - q;
    if keep == R::zero() {
        // p = 0: clusters are isolated at size 1.
        return Ok(if k == 1 { q * grown } else { R::zero() });
    }
    let log_mass =
        q.ln() + R::of_usize((k - 1) as usize) * keep.ln() + R::of_usize(k as usize) * grown.ln();
    Ok(log_mass.exp())
}

/// `P(Z1 = k)` for `k >= 0`: the number of child clusters of a typical
/// cluster; `1 + Z1` is geometric with success `delta / ((1-p) gamma + delta)`.
///
/// Rejects the detection-free mode, where `Z1` is infinite with positive
/// probability.
pub fn offspring_pmf<R: Real>(params: &Parameters<R>, k: u64) -> Result<R> {
    if params.detection_free() {
        return Err(Error::DetectionFree(
            "Z1 has no proper law without detection".into(),
        ));
    }
    let s = params.rates().offspring_success;
    if k == 0 {
        return Ok(s);
    }
    let fail = R::one() - s;
    if fail == R::zero() {
        return Ok(R::zero());
    }
    Ok((s.ln() + R::of_usize(k as usize) * fail.ln()).exp())
}

/// `mu(t) = E xi([0, t])`: expected number of child clusters begotten by a
/// typical cluster up to age `t`.
///
/// For `delta > 0` this is `(1-p)(gamma/delta)(1 - 1/(1 + delta(e^(rho t)-1)/rho))`;
/// in the detection-free mode the cluster is a pure birth process and
/// `mu(t) = ((1-p)/p)(e^(p gamma t) - 1)`.
pub fn untraceable_intensity<R: Real>(params: &Parameters<R>, t: R) -> Result<R> {
    check_time(t)?;
    let one = R::one();
    if params.detection_free() {
        // validation guarantees p > 0 here
        return Ok((one - params.p()) / params.p() * (params.p() * params.gamma() * t).exp_m1());
    }
    let rho = params.rates().rho;
    let lam = params.delta() * (rho * t).exp_m1() / rho;
    Ok((one - params.p()) * params.gamma() / params.delta() * (one - (one + lam).recip()))
}

/// `E C(t)` for a typical cluster, `e^(rho t) / (1 + delta(e^(rho t)-1)/rho)^2`,
/// evaluated in the overflow-free form `w / (w + q(1-w))^2` with
/// `w = e^(-rho t)`, `q = delta/rho`.
pub fn expected_typical_size<R: Real>(params: &Parameters<R>, t: R) -> Result<R> {
    check_time(t)?;
    let rates = params.rates();
    let w = (-rates.rho * t).exp();
    let q = rates.iso_success;
    let denom = w + q * (R::one() - w);
    Ok(w / (denom * denom))
}

/// Probability that the epidemic eventually ceases: `min(1, delta/((1-p) gamma))`.
pub fn extinction_probability<R: Real>(params: &Parameters<R>) -> R {
    let untraceable = (R::one() - params.p()) * params.gamma();
    if untraceable == R::zero() {
        // p = 1: a single cluster, isolated in finite time when delta > 0
        // and immortal but alone when delta = 0; either way no growing
        // population of clusters.
        return R::one();
    }
    (params.delta() / untraceable).min(R::one())
}

/// Tail rule for truncating series dominated by the geometric factor
/// `(1 - delta/rho)^(k-1)`: the smallest `K` with
/// `(1 - delta/rho)^K / (delta/rho) < eps`.
///
/// Fails in the detection-free mode where the factor does not decay.
pub fn tail_truncation_k<R: Real>(params: &Parameters<R>, eps: R) -> Result<usize> {
    if eps <= R::zero() {
        return Err(Error::Domain("tail tolerance must be positive".into()));
    }
    let q = params.rates().iso_success;
    if q == R::zero() {
        return Err(Error::DetectionFree(
            "geometric tail rule needs delta > 0".into(),
        ));
    }
    if q == R::one() {
        return Ok(1);
    }
    let keep = R::one() - q;
    let mut k = ((eps * q).ln() / keep.ln()).ceil();
    if k < R::one() {
        k = R::one();
    }
    let mut k = k.to_usize().unwrap_or(1).max(1);
    // ceil on logs can land one off; settle by direct check.
    while k > 1 && (keep.powi((k - 1) as i32)) / q < eps {
        k -= 1;
    }
    while keep.powi(k as i32) / q >= eps {
        k += 1;
    }
    Ok(k)
}
