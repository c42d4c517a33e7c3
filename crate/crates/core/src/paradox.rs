//! A self-contained cohort model of the detection bias.
//!
//! Individuals are atoms `(b, l)` of a Poisson point process: born at `b`
//! with lifespan `l` drawn from a law `lambda`. When the birth intensity
//! grows exponentially (`e^b db`), the empirical lifespan mean over the
//! individuals *dead* by a large time `t` does not converge to the mean of
//! `lambda` but to the mean of the tilted law
//! `lambda_1(dl) = e^(-l) lambda(dl) / int e^(-s) lambda(ds)`:
//! a constant fraction of the population was born in the last few time
//! units, and among those only the short-lived are already dead. With a
//! polynomial intensity (`b^r db`) the bias disappears and the dead-cohort
//! mean estimates `lambda` itself.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::numeric::quad;
use crate::rng;

/// Documented horizon cap for the exponential intensity: beyond this the
/// expected atom count is astronomically large.
pub const MAX_EXPONENTIAL_HORIZON: f64 = 30.0;

/// Hard budget on the expected number of atoms in one cohort.
const ATOM_BUDGET: f64 = 5e7;

/// Lifespan law `lambda` on `(0, infinity)`.
#[derive(Debug, Clone, PartialEq)]
pub enum LifespanSpec {
    PointMass(f64),
    Exponential { rate: f64 },
    /// Inverse distribution function tabulated on `[0, 1]` and linearly
    /// interpolated: `u[i]` strictly increasing from 0 to 1, `ell[i]`
    /// strictly increasing and positive.
    Tabulated { u: Vec<f64>, ell: Vec<f64> },
}

impl LifespanSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            LifespanSpec::PointMass(l) => {
                if !l.is_finite() || *l <= 0.0 {
                    return Err(Error::Domain(format!("point mass must be positive, got {l}")));
                }
            }
            LifespanSpec::Exponential { rate } => {
                if !rate.is_finite() || *rate <= 0.0 {
                    return Err(Error::Domain(format!("rate must be positive, got {rate}")));
                }
            }
            LifespanSpec::Tabulated { u, ell } => {
                if u.len() != ell.len() || u.len() < 2 {
                    return Err(Error::Domain(
                        "tabulated grid needs matching u/ell of length >= 2".into(),
                    ));
                }
                if u[0] != 0.0 || *u.last().unwrap() != 1.0 {
                    return Err(Error::Domain("u grid must span [0, 1]".into()));
                }
                if !u.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::Domain("u grid must be strictly increasing".into()));
                }
                if ell[0] <= 0.0 || !ell.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::Domain(
                        "ell grid must be positive and strictly increasing".into(),
                    ));
                }
                if ell.iter().any(|l| !l.is_finite()) {
                    return Err(Error::Domain("ell grid must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Inverse-distribution-function value at `p` in `[0, 1]`.
    fn quantile(&self, p: f64) -> f64 {
        match self {
            LifespanSpec::PointMass(l) => *l,
            LifespanSpec::Exponential { rate } => -(-p).ln_1p() / rate,
            LifespanSpec::Tabulated { u, ell } => {
                let idx = match u.binary_search_by(|x| x.partial_cmp(&p).unwrap()) {
                    Ok(i) => return ell[i],
                    Err(i) => i,
                };
                // p lies strictly between u[idx-1] and u[idx]
                let (u0, u1) = (u[idx - 1], u[idx]);
                let (l0, l1) = (ell[idx - 1], ell[idx]);
                l0 + (l1 - l0) * (p - u0) / (u1 - u0)
            }
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            // no draw consumed: the law is deterministic
            LifespanSpec::PointMass(l) => *l,
            _ => self.quantile(rng.random::<f64>()),
        }
    }
}

/// Birth intensity of the cohort over `[0, t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntensityKind {
    /// `e^b db`
    Exponential,
    /// `b^r db` for some `r > 0`: sub-exponential control case.
    Polynomial { exponent: f64 },
}

impl IntensityKind {
    fn expected_count(&self, t: f64) -> f64 {
        match *self {
            IntensityKind::Exponential => t.exp_m1(),
            IntensityKind::Polynomial { exponent } => t.powf(exponent + 1.0) / (exponent + 1.0),
        }
    }

    /// Birth time at quantile `p` of the normalized intensity on `[0, t]`.
    fn birth_quantile(&self, t: f64, p: f64) -> f64 {
        match *self {
            IntensityKind::Exponential => (p * t.exp_m1()).ln_1p(),
            IntensityKind::Polynomial { exponent } => t * p.powf(1.0 / (exponent + 1.0)),
        }
    }
}

/// Realized cohort: atoms `(birth, lifespan)` over the horizon `[0, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortSample {
    pub atoms: Vec<(f64, f64)>,
    pub horizon: f64,
    pub intensity: IntensityKind,
}

/// Draws one cohort: a Poisson number of atoms with births placed by the
/// inverse distribution function of the normalized intensity and lifespans
/// drawn independently from `lambda`.
pub fn sample_cohort(
    spec: &LifespanSpec,
    intensity: IntensityKind,
    t: f64,
    seed: u64,
) -> Result<CohortSample> {
    spec.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("horizon must be positive, got {t}")));
    }
    if let IntensityKind::Polynomial { exponent } = intensity {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::Domain(format!(
                "polynomial exponent must be positive, got {exponent}"
            )));
        }
    }
    if matches!(intensity, IntensityKind::Exponential) && t > MAX_EXPONENTIAL_HORIZON {
        return Err(Error::Domain(format!(
            "exponential-intensity horizon capped at {MAX_EXPONENTIAL_HORIZON}, got {t}"
        )));
    }
    let mean = intensity.expected_count(t);
    if !(mean.is_finite()) || mean > ATOM_BUDGET {
        return Err(Error::Numerical(format!(
            "expected cohort of {mean:.3e} atoms exceeds the budget of {ATOM_BUDGET:.0e}"
        )));
    }
    let mut rng = rng::rng_for(seed);
    let n = if mean > 0.0 {
        let draw: f64 = Poisson::new(mean)
            .map_err(|e| Error::Numerical(format!("poisson sampler: {e}")))?
            .sample(&mut rng);
        draw as u64
    } else {
        0
    };
    let mut atoms = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let b = intensity.birth_quantile(t, rng.random::<f64>());
        let l = spec.sample(&mut rng);
        atoms.push((b, l));
    }
    Ok(CohortSample {
        atoms,
        horizon: t,
        intensity,
    })
}

/// Empirical mean of `f(lifespan)` over the atoms dead by time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeadStats {
    pub n_dead: usize,
    /// `None` when no atom has died yet.
    pub mean: Option<f64>,
}

pub fn dead_mean(sample: &CohortSample, t: f64, f: impl Fn(f64) -> f64) -> DeadStats {
    let mut n = 0usize;
    let mut acc = 0.0;
    for &(b, l) in &sample.atoms {
        if b + l <= t {
            n += 1;
            acc += f(l);
        }
    }
    DeadStats {
        n_dead: n,
        mean: if n > 0 { Some(acc / n as f64) } else { None },
    }
}

fn quad_tol() -> f64 {
    1e-11
}

/// Integral of `g` against the lifespan law, by adaptive quadrature.
///
/// For the tabulated law the integral runs in quantile space segment by
/// segment, where the integrand is smooth.
fn integrate_against(spec: &LifespanSpec, g: impl Fn(f64) -> f64) -> Result<f64> {
    match spec {
        LifespanSpec::PointMass(l) => Ok(g(*l)),
        LifespanSpec::Exponential { rate } => {
            let a = *rate;
            // cut where the density alone leaves no mass worth 1e-18
            let cut = 50.0 / a + 50.0;
            let r = quad::integrate(|l| g(l) * a * (-a * l).exp(), 0.0, cut, quad_tol(), 70)?;
            Ok(r.value)
        }
        LifespanSpec::Tabulated { u, ell } => {
            let mut acc = 0.0;
            for w in u.windows(2).zip(ell.windows(2)) {
                let ((u0, u1), (l0, l1)) = ((w.0[0], w.0[1]), (w.1[0], w.1[1]));
                let r = quad::integrate(
                    |p| {
                        let l = l0 + (l1 - l0) * (p - u0) / (u1 - u0);
                        g(l)
                    },
                    u0,
                    u1,
                    quad_tol() * (u1 - u0).max(1e-3),
                    60,
                )?;
                acc += r.value;
            }
            Ok(acc)
        }
    }
}

/// `<lambda, f>`: plain expectation of `f` under the lifespan law.
pub fn lambda_expectation(spec: &LifespanSpec, f: impl Fn(f64) -> f64) -> Result<f64> {
    spec.validate()?;
    integrate_against(spec, f)
}

/// `<lambda_1, f>`: expectation under the exponentially tilted law
/// `lambda_1(dl) = e^(-l) lambda(dl) / int e^(-s) lambda(ds)`, the limit of
/// the dead-cohort mean under the exponential intensity.
pub fn lambda1_expectation(spec: &LifespanSpec, f: impl Fn(f64) -> f64) -> Result<f64> {
    spec.validate()?;
    let numerator = integrate_against(spec, |l| f(l) * (-l).exp())?;
    let normalizer = integrate_against(spec, |l| (-l).exp())?;
    if normalizer <= 0.0 {
        return Err(Error::Numerical("tilting normalizer vanished".into()));
    }
    Ok(numerator / normalizer)
}
