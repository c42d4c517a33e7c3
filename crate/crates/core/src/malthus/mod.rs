//! Spectral and asymptotic quantities of the cluster process.
//!
//! The number of active clusters counted with a characteristic grows like
//! `e^(alpha t)`, where the Malthusian parameter `alpha` is the unique root
//! of `L(alpha) = 1` and `L` is the Laplace transform of the intensity of
//! child-cluster births. This module computes `alpha`, the derivative
//! constant `beta = -L'(alpha)`, the measures `m_a`/`m_i` attached to active
//! and isolated clusters, their normalizations `pi_a`/`pi_i`, and solves the
//! same eigenproblem two more ways (a linear recurrence and a truncated ODE
//! system) so each route can certify the others.

mod ode;

pub use ode::{integrate_nu, NuTrajectory, StepControl};

use crate::error::{Error, Result};
use crate::model::{Parameters, Regime};
use crate::numeric::quad;
use crate::numeric::roots;
use crate::numeric::special::{beta as beta_fn, ln_beta};
use crate::scalar::Real;

/// Truncated measure on `{1, .., K}` with an explicit bound on the mass
/// beyond the truncation point.
///
/// Masses are not necessarily normalized; constructors document the scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf<R> {
    mass: Vec<R>,
    tail_bound: R,
}

impl<R: Real> Pmf<R> {
    pub fn new(mass: Vec<R>, tail_bound: R) -> Result<Self> {
        if mass.iter().any(|&m| !m.is_finite() || m < R::zero()) {
            return Err(Error::Numerical("pmf mass must be finite and >= 0".into()));
        }
        if !tail_bound.is_finite() || tail_bound < R::zero() {
            return Err(Error::Numerical("pmf tail bound must be >= 0".into()));
        }
        Ok(Self { mass, tail_bound })
    }

    /// Largest stored size `K`; the support is `1..=K`.
    #[inline]
    pub fn k_max(&self) -> usize {
        self.mass.len()
    }

    /// Mass at size `k` (1-based); zero beyond the truncation.
    #[inline]
    pub fn get(&self, k: usize) -> R {
        if k >= 1 && k <= self.mass.len() {
            self.mass[k - 1]
        } else {
            R::zero()
        }
    }

    #[inline]
    pub fn masses(&self) -> &[R] {
        &self.mass
    }

    #[inline]
    pub fn tail_bound(&self) -> R {
        self.tail_bound
    }

    pub fn total(&self) -> R {
        self.mass.iter().copied().sum()
    }

    /// `sum_k k * mass(k)` over the stored support.
    pub fn mean(&self) -> R {
        self.mass
            .iter()
            .enumerate()
            .map(|(i, &m)| R::of_usize(i + 1) * m)
            .sum()
    }

    /// `sum_{j <= k} mass(j)`.
    pub fn cdf(&self, k: usize) -> R {
        self.mass.iter().take(k).copied().sum()
    }

    /// Rescales so the stored masses sum to one. Fails on zero total mass.
    pub fn normalized(&self) -> Result<Pmf<R>> {
        let total = self.total();
        if total <= R::zero() {
            return Err(Error::Empty("cannot normalize a zero measure".into()));
        }
        Ok(Pmf {
            mass: self.mass.iter().map(|&m| m / total).collect(),
            tail_bound: self.tail_bound / total,
        })
    }
}

/// Geometric law with success probability `q` truncated to `{1, .., K}`:
/// `q (1-q)^(k-1)`.
pub fn geometric_pmf<R: Real>(q: R, k_max: usize) -> Result<Pmf<R>> {
    if q <= R::zero() || q > R::one() {
        return Err(Error::Domain(format!("geometric success must lie in (0, 1], got {q}")));
    }
    let mut mass = Vec::with_capacity(k_max);
    let mut w = q;
    for _ in 0..k_max {
        mass.push(w);
        w *= R::one() - q;
    }
    // exact tail: (1-q)^K
    Pmf::new(mass, (R::one() - q).powi(k_max as i32))
}

fn require_detection<R: Real>(params: &Parameters<R>, what: &str) -> Result<()> {
    if params.detection_free() {
        return Err(Error::DetectionFree(what.into()));
    }
    Ok(())
}

/// Series evaluation of the Laplace transform
/// `L(theta) = ((1-p) gamma / rho) sum_j j (1 - delta/rho)^(j-1) B(1 + theta/rho, j)`,
/// with the beta factor advanced by its integer recurrence.
///
/// The summand ratio is at most `1 - delta/rho < 1`, which gives a geometric
/// remainder bound used as stopping rule.
pub fn laplace_series<R: Real>(params: &Parameters<R>, theta: R) -> Result<R> {
    require_detection(params, "Laplace series diverges for delta = 0")?;
    if !theta.is_finite() || theta < R::zero() {
        return Err(Error::Domain(format!("theta must be >= 0, got {theta}")));
    }
    let rates = params.rates();
    let a = theta / rates.rho;
    let keep = R::one() - rates.iso_success;
    let prefactor = (R::one() - params.p()) * params.gamma() / rates.rho;

    // j = 1 term: B(1+a, 1) = 1/(1+a)
    let mut beta_term = (R::one() + a).recip();
    let mut geo = R::one();
    let mut sum = beta_term;
    let mut j = R::one();
    for _ in 1..20_000_000usize {
        // advance to j+1: B(1+a, j+1) = B(1+a, j) * j / (1 + a + j)
        beta_term *= j / (R::one() + a + j);
        geo *= keep;
        j += R::one();
        let term = j * geo * beta_term;
        sum += term;
        if keep < R::one() {
            let remainder = term * keep / (R::one() - keep);
            if remainder <= sum * R::epsilon() {
                return Ok(prefactor * sum);
            }
        }
    }
    Err(Error::Numerical("Laplace series did not converge".into()))
}

/// Quadrature evaluation of the same transform,
/// `(1-p) gamma rho int_0^1 x^(theta/rho) / ((rho - delta) x + delta)^2 dx`.
///
/// The substitution `x = u^2` tames the unbounded derivative of
/// `x^(theta/rho)` at zero when `theta < rho`; the integral is then evaluated
/// adaptively on `[0, 1]` to absolute tolerance `1e-12`.
pub fn laplace_quadrature<R: Real>(params: &Parameters<R>, theta: R) -> Result<R> {
    require_detection(params, "Laplace integral needs delta > 0")?;
    if !theta.is_finite() || theta < R::zero() {
        return Err(Error::Domain(format!("theta must be >= 0, got {theta}")));
    }
    let rates = params.rates();
    let a = theta / rates.rho;
    let pg = rates.rho - params.delta(); // p * gamma
    let delta = params.delta();
    let prefactor = (R::one() - params.p()) * params.gamma() * rates.rho;
    let two = R::of(2.0);
    let integrand = move |u: R| {
        let x = u * u;
        let denom = pg * x + delta;
        two * u.powf(two * a + R::one()) / (denom * denom)
    };
    let tol = R::of(1e-12).max(R::epsilon() * R::of(32.0));
    let q = quad::integrate(integrand, R::zero(), R::one(), tol, 90)?;
    Ok(prefactor * q.value)
}

/// Laplace transform of the child-cluster birth intensity, evaluated by the
/// series and the quadrature routes; the two must agree within `1e-9` (or a
/// scale-appropriate bound for low-precision scalars).
pub fn laplace_transform<R: Real>(params: &Parameters<R>, theta: R) -> Result<R> {
    let series = laplace_series(params, theta)?;
    let quadrature = laplace_quadrature(params, theta)?;
    let tol = R::of(1e-9).max(R::epsilon() * R::of(1e3) * series.abs().max(R::one()));
    if (series - quadrature).abs() > tol {
        return Err(Error::Numerical(format!(
            "Laplace evaluations disagree: series {series} vs quadrature {quadrature}"
        )));
    }
    Ok(series)
}

/// Malthusian parameter: the unique root of `L(alpha) = 1`, certified to
/// `|L(alpha) - 1| < tol`.
///
/// Only supercritical parameters have a positive root. In the detection-free
/// mode the transform is explicit, `L(theta) = (1-p) gamma / (theta - p gamma)`,
/// and the root is exactly `gamma`.
pub fn malthusian_parameter<R: Real>(params: &Parameters<R>, tol: R) -> Result<R> {
    if tol <= R::zero() {
        return Err(Error::Domain("solver tolerance must be positive".into()));
    }
    if params.regime() != Regime::Supercritical {
        return Err(Error::Domain(
            "the Malthusian equation has no positive root outside the supercritical regime".into(),
        ));
    }
    if params.detection_free() {
        return Ok(params.gamma());
    }
    let gap = |theta: R| laplace_series(params, theta).map(|l| l - R::one()).unwrap_or(R::nan());
    let lo = R::of(1e-8);
    let (lo, hi) = roots::expand_upper(&gap, lo, params.gamma(), 200)?;
    let x_tol = (R::epsilon() * R::of(8.0)).max(R::of(1e-15)) * params.gamma().max(R::one());
    let alpha = roots::bisect(gap, lo, hi, x_tol)?;
    let residual = (laplace_transform(params, alpha)? - R::one()).abs();
    if residual >= tol {
        return Err(Error::Numerical(format!(
            "root certificate failed: |L(alpha) - 1| = {residual:e} >= {tol:e}"
        )));
    }
    Ok(alpha)
}

/// `beta = -L'(alpha)`: quadrature of
/// `(1-p) gamma int_0^inf t e^((rho - alpha) t) / (1 + delta (e^(rho t)-1)/rho)^2 dt`,
/// evaluated in the overflow-free form
/// `t e^(-(rho + alpha) t) / (w + q (1 - w))^2`, `w = e^(-rho t)`.
pub fn beta_constant<R: Real>(params: &Parameters<R>, alpha: R) -> Result<R> {
    if !alpha.is_finite() || alpha <= R::zero() {
        return Err(Error::Domain(format!("alpha must be > 0, got {alpha}")));
    }
    if params.detection_free() {
        // L(theta) = (1-p) gamma / (theta - p gamma)
        let d = alpha - params.p() * params.gamma();
        return Ok((R::one() - params.p()) * params.gamma() / (d * d));
    }
    let rates = params.rates();
    let q = rates.iso_success;
    let rho = rates.rho;
    let prefactor = (R::one() - params.p()) * params.gamma();
    let integrand = move |t: R| {
        let w = (-rho * t).exp();
        let denom = w + q * (R::one() - w);
        t * (-(rho + alpha) * t).exp() / (denom * denom)
    };
    // Tail beyond T is below prefactor (T+1) e^(-(rho+alpha) T) / q^2.
    let decay = rho + alpha;
    let mut t_cut = R::one();
    while prefactor * (t_cut + R::one()) * (-decay * t_cut).exp() / (q * q) > R::of(1e-18) {
        t_cut *= R::of(1.5);
        if t_cut > R::of(1e6) {
            break;
        }
    }
    let tol = R::of(1e-12).max(R::epsilon() * R::of(32.0));
    let quad = quad::integrate(integrand, R::zero(), t_cut, tol, 60)?;
    Ok(prefactor * quad.value)
}

/// `m_a(k) = (1/rho) (1 - delta/rho)^(k-1) B(1 + alpha/rho, k)`, the measure
/// of active-cluster sizes; beta function through log-gamma.
pub fn m_active<R: Real>(params: &Parameters<R>, alpha: R, k: usize) -> Result<R> {
    if k < 1 {
        return Err(Error::Domain("size must be >= 1".into()));
    }
    let rates = params.rates();
    let a = alpha / rates.rho;
    let keep = R::one() - rates.iso_success;
    if keep == R::zero() && k >= 2 {
        return Ok(R::zero());
    }
    let log_keep = if k == 1 { R::zero() } else { R::of_usize(k - 1) * keep.ln() };
    Ok((log_keep + ln_beta(R::one() + a, R::of_usize(k)) - rates.rho.ln()).exp())
}

/// `m_i(k) = (delta/rho^2) (1 - delta/rho)^(k-1) B(alpha/rho, k + 1)`, the
/// measure of isolated-cluster final sizes. Identically zero without
/// detection.
pub fn m_isolated<R: Real>(params: &Parameters<R>, alpha: R, k: usize) -> Result<R> {
    if k < 1 {
        return Err(Error::Domain("size must be >= 1".into()));
    }
    if params.detection_free() {
        return Ok(R::zero());
    }
    let rates = params.rates();
    let a = alpha / rates.rho;
    let keep = R::one() - rates.iso_success;
    if keep == R::zero() && k >= 2 {
        return Ok(R::zero());
    }
    let log_keep = if k == 1 { R::zero() } else { R::of_usize(k - 1) * keep.ln() };
    let log_pref = params.delta().ln() - R::of(2.0) * rates.rho.ln();
    Ok((log_pref + log_keep + ln_beta(a, R::of_usize(k + 1))).exp())
}

fn profile_pmf<R: Real>(
    params: &Parameters<R>,
    alpha: R,
    k_max: usize,
    shifted: bool,
) -> Result<(Pmf<R>, R)> {
    if k_max < 1 {
        return Err(Error::Domain("truncation must keep at least one size".into()));
    }
    let rates = params.rates();
    let a = alpha / rates.rho;
    let keep = R::one() - rates.iso_success;
    // unnormalized masses (1-q)^(k-1) B(1 + a, k) or (1-q)^(k-1) B(a, k+1)
    let mut mass = Vec::with_capacity(k_max);
    let mut geo = R::one();
    for k in 1..=k_max {
        let b = if shifted {
            ln_beta(a, R::of_usize(k + 1)).exp()
        } else {
            ln_beta(R::one() + a, R::of_usize(k)).exp()
        };
        mass.push(geo * b);
        geo *= keep;
        if geo == R::zero() {
            mass.resize(k_max, R::zero());
            break;
        }
    }
    // tail bound: the beta factor decreases in k, so the remainder is below
    // B(next) (1-q)^K / q, and exactly B(a, K+1) when q = 0 (undamped case).
    let tail = if rates.iso_success > R::zero() {
        let b_next = if shifted {
            beta_fn(a, R::of_usize(k_max + 2))
        } else {
            beta_fn(R::one() + a, R::of_usize(k_max + 1))
        };
        b_next * keep.powi(k_max as i32) / rates.iso_success
    } else if shifted {
        R::zero()
    } else {
        a * beta_fn(a, R::of_usize(k_max + 1))
    };
    let total: R = mass.iter().copied().sum();
    if total <= R::zero() {
        return Err(Error::Numerical("profile measure vanished".into()));
    }
    let normalizer = total.recip();
    let pmf = Pmf::new(mass.into_iter().map(|m| m * normalizer).collect(), tail * normalizer)?;
    Ok((pmf, normalizer))
}

/// Limiting size distribution of active clusters,
/// `pi_a(k) = c_a (1 - delta/rho)^(k-1) B(1 + alpha/rho, k)`, truncated to
/// `{1, .., K}`. Returns the distribution and the normalizer `c_a`.
pub fn pi_active<R: Real>(params: &Parameters<R>, alpha: R, k_max: usize) -> Result<(Pmf<R>, R)> {
    profile_pmf(params, alpha, k_max, false)
}

/// Limiting size distribution of isolated clusters,
/// `pi_i(k) = c_i (1 - delta/rho)^(k-1) B(alpha/rho, k + 1)`. Rejects the
/// detection-free mode, where nothing is ever isolated.
pub fn pi_isolated<R: Real>(params: &Parameters<R>, alpha: R, k_max: usize) -> Result<(Pmf<R>, R)> {
    require_detection(params, "no isolated clusters without detection")?;
    profile_pmf(params, alpha, k_max, true)
}

/// Infinitesimal generator of the size of one active cluster, applied to a
/// test function:
/// `A f(k) = k (p gamma (f(k+1) - f(k)) + (1-p) gamma f(1) - delta f(k))`.
pub fn generator_apply<R: Real>(params: &Parameters<R>, f: impl Fn(usize) -> R, k: usize) -> R {
    let fk = f(k);
    R::of_usize(k)
        * (params.p() * params.gamma() * (f(k + 1) - fk)
            + (R::one() - params.p()) * params.gamma() * f(1)
            - params.delta() * fk)
}

/// Largest violation of `<pi_a, A f> = alpha <pi_a, f>` over the indicator
/// test functions `f = 1_j`, `j <= K - 1` (so `f(k+1)` stays inside the
/// truncation).
pub fn eigen_residual<R: Real>(params: &Parameters<R>, alpha: R, pi_a: &Pmf<R>) -> R {
    let k_max = pi_a.k_max();
    let mut worst = R::zero();
    for j in 1..k_max {
        let f = |i: usize| if i == j { R::one() } else { R::zero() };
        let mut lhs = R::zero();
        for k in 1..=k_max {
            lhs += pi_a.get(k) * generator_apply(params, f, k);
        }
        let resid = (lhs - alpha * pi_a.get(j)).abs();
        if resid > worst {
            worst = resid;
        }
    }
    worst
}

/// Eigenvector candidate produced by the size recurrence at trial rate `r`.
#[derive(Debug, Clone)]
pub struct NuSolution<R> {
    /// Unnormalized vector with `nu(1) = rho / (r + rho)`, i.e. constant
    /// `c = 1` in `nu(k) = c (1 - delta/rho)^(k-1) B(1 + r/rho, k)`.
    pub nu: Pmf<R>,
    /// `(r + rho) nu(1) - (1-p) gamma sum_j j nu(j)`: vanishes exactly when
    /// `r` is the Malthusian parameter.
    pub balance_gap: R,
}

/// Runs the linear recurrence `nu(k) = p gamma (k-1) / (r + rho k) nu(k-1)`
/// from `nu(1) = rho / (r + rho)` and reports the size-one balance gap.
pub fn nu_recurrence<R: Real>(params: &Parameters<R>, r: R, k_max: usize) -> Result<NuSolution<R>> {
    if !r.is_finite() || r <= R::zero() {
        return Err(Error::Domain(format!("trial rate must be > 0, got {r}")));
    }
    if k_max < 1 {
        return Err(Error::Domain("truncation must keep at least one size".into()));
    }
    let rates = params.rates();
    let rho = rates.rho;
    let pg = params.p() * params.gamma();
    let mut mass = Vec::with_capacity(k_max);
    let mut nu_k = rho / (r + rho);
    mass.push(nu_k);
    for k in 2..=k_max {
        nu_k = nu_k * pg * R::of_usize(k - 1) / (r + rho * R::of_usize(k));
        mass.push(nu_k);
    }
    let weighted: R = mass
        .iter()
        .enumerate()
        .map(|(i, &m)| R::of_usize(i + 1) * m)
        .sum();
    let balance_gap = (r + rho) * mass[0] - (R::one() - params.p()) * params.gamma() * weighted;
    // same tail shape as the active profile
    let keep = R::one() - rates.iso_success;
    let tail = if rates.iso_success > R::zero() {
        beta_fn(R::one() + r / rho, R::of_usize(k_max + 1)) * keep.powi(k_max as i32)
            / rates.iso_success
    } else {
        (r / rho) * beta_fn(r / rho, R::of_usize(k_max + 1))
    };
    Ok(NuSolution {
        nu: Pmf::new(mass, tail)?,
        balance_gap,
    })
}

/// Root of the balance gap in `r`: an evaluation of the Malthusian parameter
/// that uses only the product recurrence, independent of quadrature, series
/// and log-gamma.
pub fn nu_balance_root<R: Real>(params: &Parameters<R>, k_max: usize, x_tol: R) -> Result<R> {
    if params.regime() != Regime::Supercritical {
        return Err(Error::Domain("balance root exists only in the supercritical regime".into()));
    }
    require_detection(params, "balance root needs delta > 0")?;
    let gap = |r: R| {
        nu_recurrence(params, r, k_max)
            .map(|s| s.balance_gap)
            .unwrap_or(R::nan())
    };
    let (lo, hi) = roots::expand_upper(&gap, R::of(1e-8), params.gamma(), 200)?;
    roots::bisect(gap, lo, hi, x_tol)
}

/// Yule-Simon probability mass `sigma_q(k) = (1/q) B(1 + 1/q, k)` for
/// `q` in `(0, 1]`, `k >= 1`.
pub fn yule_simon_pmf<R: Real>(q: R, k: usize) -> Result<R> {
    if !(q > R::zero() && q <= R::one()) {
        return Err(Error::Domain(format!("q must lie in (0, 1], got {q}")));
    }
    if k < 1 {
        return Err(Error::Domain("k must be >= 1".into()));
    }
    let a = q.recip();
    Ok(a * ln_beta(R::one() + a, R::of_usize(k)).exp().max(R::zero()))
}

/// Yule-Simon law truncated to `{1, .., K}`, with the exact tail
/// `(1/q) B(1/q, K + 1)`.
pub fn yule_simon_dist<R: Real>(q: R, k_max: usize) -> Result<Pmf<R>> {
    let mut mass = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        mass.push(yule_simon_pmf(q, k)?);
    }
    let a = q.recip();
    Pmf::new(mass, a * beta_fn(a, R::of_usize(k_max + 1)))
}

/// The assembled spectral data of a supercritical epidemic.
#[derive(Debug, Clone)]
pub struct SpectralSolution<R> {
    pub alpha: R,
    pub beta: R,
    /// Normalizer of the truncated active profile.
    pub c_a: R,
    /// Normalizer of the truncated isolated profile.
    pub c_i: R,
    pub pi_a: Pmf<R>,
    pub pi_i: Pmf<R>,
    pub solver_tol: R,
}

/// Solves the full spectral problem: Malthusian root, derivative constant,
/// and both limiting profiles truncated at `trunc_k` (default: the geometric
/// tail rule at [`crate::model::DEFAULT_TAIL_EPS`]).
///
/// Requires a supercritical epidemic with `delta > 0`; the detection-free
/// mode has no isolated profile and is served by [`yule_simon_dist`].
pub fn solve_spectral<R: Real>(
    params: &Parameters<R>,
    trunc_k: Option<usize>,
    tol: R,
) -> Result<SpectralSolution<R>> {
    require_detection(params, "spectral profiles need delta > 0")?;
    let alpha = malthusian_parameter(params, tol)?;
    let beta = beta_constant(params, alpha)?;
    let k_max = match trunc_k {
        Some(k) => k,
        None => crate::model::tail_truncation_k(params, R::of(crate::model::DEFAULT_TAIL_EPS))?,
    };
    let (pi_a, c_a) = pi_active(params, alpha, k_max)?;
    let (pi_i, c_i) = pi_isolated(params, alpha, k_max)?;

    // Self-check: pi_i must be the size-biasing of pi_a on the common
    // truncation. Guards against a silently wrong root.
    let mean_a = pi_a.mean();
    for k in 1..=k_max {
        let lhs = pi_i.get(k) * mean_a;
        let rhs = R::of_usize(k) * pi_a.get(k);
        let scale = lhs.abs().max(rhs.abs()).max(R::epsilon());
        if (lhs - rhs).abs() > R::of(1e-9).max(R::epsilon() * R::of(64.0)) * scale.max(R::one()) {
            return Err(Error::Numerical(format!(
                "size-bias identity violated at k = {k}: {lhs} vs {rhs}"
            )));
        }
    }
    Ok(SpectralSolution {
        alpha,
        beta,
        c_a,
        c_i,
        pi_a,
        pi_i,
        solver_tol: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;
    use approx::assert_relative_eq;

    fn reference() -> Parameters<f64> {
        validate::<f64>(2.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn laplace_at_zero_is_mean_offspring() {
        let p = reference();
        assert_relative_eq!(
            laplace_transform(&p, 0.0).unwrap(),
            2.0, // (1-p) gamma / delta
            epsilon = 1e-11
        );
    }

    #[test]
    fn laplace_closed_form_when_p_zero() {
        // p = 0 collapses the transform to gamma / (theta + delta)
        let p = validate::<f64>(2.0, 0.0, 0.5).unwrap();
        for &theta in &[0.0, 0.3, 1.0, 2.5, 4.0] {
            assert_relative_eq!(
                laplace_transform(&p, theta).unwrap(),
                2.0 / (theta + 0.5),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn laplace_strictly_decreasing() {
        let p = reference();
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let theta = 0.2 * i as f64;
            let l = laplace_transform(&p, theta).unwrap();
            assert!(l < prev);
            prev = l;
        }
    }

    #[test]
    fn laplace_rejects_detection_free_and_negative_theta() {
        assert!(laplace_transform(&validate::<f64>(2.0, 0.5, 0.0).unwrap(), 1.0).is_err());
        assert!(laplace_transform(&reference(), -0.1).is_err());
    }

    #[test]
    fn alpha_closed_form_when_p_zero() {
        let p = validate::<f64>(2.0, 0.0, 0.5).unwrap();
        let alpha = malthusian_parameter(&p, 1e-12).unwrap();
        assert!((alpha - 1.5).abs() < 1e-9);
    }

    #[test]
    fn alpha_reference_value() {
        // root of the transform for (2, 0.5, 0.5), from an independent
        // high-precision evaluation
        let alpha = malthusian_parameter(&reference(), 1e-12).unwrap();
        assert!((alpha - 0.786_515_727_612_138_5).abs() < 1e-10);
    }

    #[test]
    fn alpha_root_certificate() {
        let p = reference();
        let tol = 1e-12;
        let alpha = malthusian_parameter(&p, tol).unwrap();
        let eps = 10.0 * tol;
        assert!(laplace_transform(&p, alpha - eps).unwrap() > 1.0);
        assert!(laplace_transform(&p, alpha + eps).unwrap() < 1.0);
    }

    #[test]
    fn alpha_needs_supercritical() {
        assert!(malthusian_parameter(&validate::<f64>(1.0, 0.9, 0.5).unwrap(), 1e-10).is_err());
        assert!(malthusian_parameter(&validate::<f64>(2.0, 0.5, 1.0).unwrap(), 1e-10).is_err());
    }

    #[test]
    fn alpha_detection_free_is_gamma() {
        let p = validate::<f64>(2.0, 0.5, 0.0).unwrap();
        assert_eq!(malthusian_parameter(&p, 1e-12).unwrap(), 2.0);
    }

    #[test]
    fn beta_constant_p_zero_closed_form() {
        // -d/dtheta [gamma/(theta+delta)] at alpha = gamma - delta is
        // gamma / gamma^2 ... evaluated: 2 / (1.5 + 0.5)^2 = 0.5
        let p = validate::<f64>(2.0, 0.0, 0.5).unwrap();
        let beta = beta_constant(&p, 1.5).unwrap();
        assert_relative_eq!(beta, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn beta_constant_matches_finite_differences() {
        let p = reference();
        let alpha = malthusian_parameter(&p, 1e-12).unwrap();
        let beta = beta_constant(&p, alpha).unwrap();
        assert!(beta > 0.0);
        for &h in &[1e-3, 1e-4] {
            let fd = (laplace_transform(&p, alpha - h).unwrap()
                - laplace_transform(&p, alpha + h).unwrap())
                / (2.0 * h);
            assert!(
                (beta - fd).abs() <= 100.0 * h * h,
                "h = {h}: beta = {beta}, fd = {fd}"
            );
        }
        // independent high-precision reference
        assert!((beta - 0.710_836_310_361_060_5).abs() < 1e-9);
    }

    #[test]
    fn m_active_at_one() {
        let p = reference();
        let alpha = malthusian_parameter(&p, 1e-12).unwrap();
        // B(x, 1) = 1/x, so m_a(1) = 1/(rho + alpha)
        assert_relative_eq!(
            m_active(&p, alpha, 1).unwrap(),
            1.0 / (1.5 + alpha),
            epsilon = 1e-12
        );
    }

    #[test]
    fn measures_match_defining_integrals() {
        // m_a(k) = int e^(-alpha t) P(C(t) = k) dt and
        // m_i(k) = int e^(-alpha t) P(C(zeta-) = k, zeta <= t) dt,
        // by adaptive quadrature in t on a truncated horizon.
        use crate::model::{joint_final_size_cdf, typical_size_pmf};
        let p = reference();
        let alpha = malthusian_parameter(&p, 1e-12).unwrap();
        let t_cut = 100.0 / (alpha + 1.5);
        for k in [1usize, 2, 5, 10] {
            let qa = quad::integrate(
                |t: f64| (-alpha * t).exp() * typical_size_pmf(&p, t, k as u64).unwrap(),
                0.0,
                t_cut,
                1e-12,
                60,
            )
            .unwrap();
            assert!(
                (qa.value - m_active(&p, alpha, k).unwrap()).abs() < 1e-9,
                "m_a({k})"
            );
            let qi = quad::integrate(
                |t: f64| (-alpha * t).exp() * joint_final_size_cdf(&p, t, k as u64).unwrap(),
                0.0,
                t_cut,
                1e-12,
                60,
            )
            .unwrap();
            assert!(
                (qi.value - m_isolated(&p, alpha, k).unwrap()).abs() < 1e-9,
                "m_i({k})"
            );
        }
    }

    #[test]
    fn beta_identity_pointwise() {
        // (alpha/rho) B(alpha/rho, k+1) = k B(1 + alpha/rho, k)
        let p = reference();
        let alpha = malthusian_parameter(&p, 1e-12).unwrap();
        let a = alpha / 1.5;
        for k in 1..=100usize {
            let lhs = a * beta_fn(a, (k + 1) as f64);
            let rhs = k as f64 * beta_fn(1.0 + a, k as f64);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn profiles_normalize_and_size_bias() {
        let p = reference();
        let alpha = malthusian_parameter(&p, 1e-12).unwrap();
        let k_max = crate::model::tail_truncation_k(&p, 1e-12).unwrap();
        let (pi_a, c_a) = pi_active(&p, alpha, k_max).unwrap();
        let (pi_i, c_i) = pi_isolated(&p, alpha, k_max).unwrap();
        assert_relative_eq!(pi_a.total(), 1.0, epsilon = 1e-13);
        assert_relative_eq!(pi_i.total(), 1.0, epsilon = 1e-13);
        // independent high-precision references for the normalizers
        assert!((c_a - 1.048_687_636_816_184_7).abs() < 1e-9);
        assert!((c_i - 0.349_562_545_605_394_9).abs() < 1e-9);
        let mean = pi_a.mean();
        assert!((mean - 1.573_031_455_224_277).abs() < 1e-9);
        for k in 1..=k_max {
            let lhs = pi_i.get(k) * mean;
            let rhs = k as f64 * pi_a.get(k);
            assert!((lhs - rhs).abs() < 1e-10, "size bias at k = {k}");
        }
    }

    #[test]
    fn isolated_profile_stochastically_smaller_than_geometric() {
        let p = reference();
        let alpha = malthusian_parameter(&p, 1e-12).unwrap();
        let k_max = 120;
        let (pi_i, _) = pi_isolated(&p, alpha, k_max).unwrap();
        let geo = geometric_pmf(1.0 / 3.0, k_max).unwrap();
        for k in 1..=k_max {
            assert!(
                pi_i.cdf(k) >= geo.cdf(k) - 1e-12,
                "dominance fails at k = {k}"
            );
        }
        // and strictly somewhere
        assert!(pi_i.cdf(1) > geo.cdf(1) + 0.05);
    }

    #[test]
    fn generator_examples() {
        let p = reference();
        let zero = |_: usize| 0.0;
        assert_eq!(generator_apply(&p, zero, 3), 0.0);
        // f = indicator of 1 at k = 1: gamma (1 - 2p) - delta
        let ind1 = |i: usize| if i == 1 { 1.0 } else { 0.0 };
        assert_relative_eq!(
            generator_apply(&p, ind1, 1),
            2.0 * (1.0 - 2.0 * 0.5) - 0.5,
            epsilon = 1e-14
        );
        // f = 1: k ((1-p) gamma - delta), positive iff supercritical
        let one = |_: usize| 1.0;
        for k in 1..=5 {
            assert_relative_eq!(
                generator_apply(&p, one, k),
                k as f64 * ((1.0 - 0.5) * 2.0 - 0.5),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn eigen_residual_small_at_tail_rule() {
        let p = reference();
        let alpha = malthusian_parameter(&p, 1e-12).unwrap();
        let k_max = crate::model::tail_truncation_k(&p, 1e-12).unwrap();
        let (pi_a, _) = pi_active(&p, alpha, k_max).unwrap();
        assert!(eigen_residual(&p, alpha, &pi_a) < 1e-8);
    }

    #[test]
    fn eigen_residual_grows_as_truncation_shrinks() {
        let p = reference();
        let alpha = malthusian_parameter(&p, 1e-12).unwrap();
        let mut prev = 0.0;
        for &k_max in &[60usize, 20, 10, 5] {
            let (pi_a, _) = pi_active(&p, alpha, k_max).unwrap();
            let r = eigen_residual(&p, alpha, &pi_a);
            assert!(r >= prev);
            prev = r;
        }
        assert!(prev > 1e-6);
    }

    #[test]
    fn recurrence_matches_beta_closed_form() {
        // nu(k) with c = 1 equals (1 - delta/rho)^(k-1) B(1 + r/rho, k)
        let p = reference();
        let r = 0.9;
        let sol = nu_recurrence(&p, r, 100).unwrap();
        let a: f64 = r / 1.5;
        let keep: f64 = 1.0 - 1.0 / 3.0;
        for k in 1..=100usize {
            let expect = keep.powi(k as i32 - 1) * beta_fn(1.0 + a, k as f64);
            assert_relative_eq!(sol.nu.get(k), expect, max_relative = 1e-11);
        }
    }

    #[test]
    fn balance_gap_vanishes_at_alpha_only() {
        let p = reference();
        let alpha = malthusian_parameter(&p, 1e-12).unwrap();
        let k_max = crate::model::tail_truncation_k(&p, 1e-13).unwrap();
        let at_root = nu_recurrence(&p, alpha, k_max).unwrap();
        assert!(at_root.balance_gap.abs() < 1e-9);
        // at 2 alpha the transform is below one, so the gap is positive and
        // far from zero
        let off = nu_recurrence(&p, 2.0 * alpha, k_max).unwrap();
        assert!(off.balance_gap > 0.1);
        let root = nu_balance_root(&p, k_max, 1e-13).unwrap();
        assert!((root - alpha).abs() < 1e-9);
    }

    #[test]
    fn recurrence_vector_proportional_to_active_profile() {
        let p = reference();
        let alpha = malthusian_parameter(&p, 1e-12).unwrap();
        let k_max = 80;
        let sol = nu_recurrence(&p, alpha, k_max).unwrap();
        let (pi_a, _) = pi_active(&p, alpha, k_max).unwrap();
        let scaled = sol.nu.normalized().unwrap();
        for k in 1..=k_max {
            assert!((scaled.get(k) - pi_a.get(k)).abs() < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn yule_simon_values() {
        // q = 1: sigma(k) = 1 / (k (k+1)), so sigma(1) = 1/2
        assert_relative_eq!(yule_simon_pmf(1.0, 1).unwrap(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(
            yule_simon_pmf(1.0, 7).unwrap(),
            1.0 / (7.0 * 8.0),
            epsilon = 1e-11
        );
        let dist = yule_simon_dist::<f64>(0.5, 400).unwrap();
        assert!((dist.total() + dist.tail_bound() - 1.0).abs() < 1e-9);
        assert!(yule_simon_pmf(0.0, 1).is_err());
        assert!(yule_simon_pmf(1.2, 1).is_err());
    }

    #[test]
    fn detection_free_active_profile_is_yule_simon() {
        // delta = 0: alpha = gamma, alpha/rho = 1/p, and the active profile
        // collapses to the Yule-Simon law with that parameter
        let p = validate::<f64>(2.0, 0.5, 0.0).unwrap();
        let alpha = malthusian_parameter(&p, 1e-12).unwrap();
        assert_eq!(alpha / p.rates().rho, 1.0 / 0.5);
        let (pi_a, _) = pi_active(&p, alpha, 300).unwrap();
        let ys = yule_simon_dist(0.5, 300).unwrap();
        // both normalized over the same truncation
        let ys_total = ys.total();
        for k in 1..=300 {
            assert!((pi_a.get(k) - ys.get(k) / ys_total).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn spectral_solution_assembles() {
        let p = reference();
        let sol = solve_spectral(&p, None, 1e-12).unwrap();
        assert!(sol.alpha > 0.0 && sol.beta > 0.0);
        assert!(sol.pi_a.k_max() == sol.pi_i.k_max());
        assert!(solve_spectral(&validate::<f64>(1.0, 0.9, 0.5).unwrap(), None, 1e-12).is_err());
    }

    #[test]
    fn spectral_works_in_f32() {
        let p = Parameters::<f32>::new(2.0, 0.5, 0.5).unwrap();
        let alpha = malthusian_parameter(&p, 1e-3f32).unwrap();
        assert!((alpha - 0.7865).abs() < 1e-3);
    }
}
