//! Forward integration of the expected-count hierarchy.
//!
//! `nu_t(k)` is the expected number of active clusters of size `k` at time
//! `t`. It satisfies the truncated linear system
//!
//! ```text
//! d nu(1)/dt = -(p gamma + delta) nu(1) + (1-p) gamma sum_j j nu(j)
//! d nu(k)/dt = -(p gamma + delta) k nu(k) + p gamma (k-1) nu(k-1),  k >= 2
//! ```
//!
//! started from unit mass at size one. The total mass grows like
//! `e^(alpha t)` and the normalized state converges to the active profile,
//! which makes this integrator an oracle for the Malthusian parameter that
//! shares no numerics with the root solvers.
//!
//! Flux out of the last tracked size is dropped and accumulated as leaked
//! mass; the run fails if the leak exceeds its threshold relative to the
//! final total.

use crate::error::{Error, Result};
use crate::malthus::Pmf;
use crate::model::Parameters;
use crate::scalar::Real;

/// Step-size and bookkeeping controls for [`integrate_nu`].
#[derive(Debug, Clone, Copy)]
pub struct StepControl<R> {
    /// Fixed step; `None` picks `1 / ((gamma + rho) k_max)`, safely inside
    /// the stability region of the classical fourth-order scheme for the
    /// stiffest mode of the truncated operator.
    pub dt: Option<R>,
    /// Maximum tolerated leaked mass relative to the final total.
    pub leak_threshold: R,
    /// Approximate number of stored time points.
    pub store_points: usize,
}

impl<R: Real> Default for StepControl<R> {
    fn default() -> Self {
        Self {
            dt: None,
            leak_threshold: R::of(1e-6),
            store_points: 201,
        }
    }
}

/// Stored trajectory of the truncated hierarchy.
#[derive(Debug, Clone)]
pub struct NuTrajectory<R> {
    pub times: Vec<R>,
    /// `states[i][k-1]` is `nu_{times[i]}(k)`.
    pub states: Vec<Vec<R>>,
    /// Cumulative leaked mass at each stored time.
    pub leaked: Vec<R>,
}

impl<R: Real> NuTrajectory<R> {
    pub fn k_max(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// Total mass `sum_k nu_t(k)` at stored index `i`.
    pub fn total(&self, i: usize) -> R {
        self.states[i].iter().copied().sum()
    }

    pub fn totals(&self) -> Vec<R> {
        (0..self.times.len()).map(|i| self.total(i)).collect()
    }

    /// Least-squares slope of `log total` over the trailing `fraction` of
    /// the time window: the growth-rate estimate.
    pub fn log_slope(&self, fraction: R) -> Result<R> {
        if !(fraction > R::zero() && fraction <= R::one()) {
            return Err(Error::Domain("window fraction must lie in (0, 1]".into()));
        }
        let t_end = *self.times.last().ok_or_else(|| Error::Empty("empty trajectory".into()))?;
        let t_start = t_end * (R::one() - fraction);
        let pts: Vec<(R, R)> = self
            .times
            .iter()
            .zip(0..)
            .filter(|&(&t, _)| t >= t_start)
            .map(|(&t, i)| (t, self.total(i)))
            .collect();
        if pts.len() < 2 {
            return Err(Error::Empty("not enough stored points in the window".into()));
        }
        if pts.iter().any(|&(_, m)| m <= R::zero()) {
            return Err(Error::Numerical("non-positive mass in slope window".into()));
        }
        let n = R::of_usize(pts.len());
        let mean_t = pts.iter().map(|&(t, _)| t).sum::<R>() / n;
        let mean_y = pts.iter().map(|&(_, m)| m.ln()).sum::<R>() / n;
        let mut num = R::zero();
        let mut den = R::zero();
        for &(t, m) in &pts {
            num += (t - mean_t) * (m.ln() - mean_y);
            den += (t - mean_t) * (t - mean_t);
        }
        if den == R::zero() {
            return Err(Error::Numerical("degenerate time window".into()));
        }
        Ok(num / den)
    }

    /// Final state normalized to a distribution; the tail bound records the
    /// leaked mass on the same scale.
    pub fn final_profile(&self) -> Result<Pmf<R>> {
        let last = self.states.last().ok_or_else(|| Error::Empty("empty trajectory".into()))?;
        let total: R = last.iter().copied().sum();
        if total <= R::zero() {
            return Err(Error::Numerical("final state has no mass".into()));
        }
        Pmf::new(
            last.iter().map(|&m| m / total).collect(),
            *self.leaked.last().unwrap() / total,
        )
    }
}

/// Derivative of the truncated system; `state[k_max]` carries the cumulative
/// leak so it is integrated with the same order as everything else.
fn rhs<R: Real>(params: &Parameters<R>, state: &[R], out: &mut [R]) {
    let k_max = state.len() - 1;
    let rho = params.rates().rho;
    let pg = params.p() * params.gamma();
    let source = (R::one() - params.p()) * params.gamma();
    let weighted: R = state[..k_max]
        .iter()
        .enumerate()
        .map(|(i, &m)| R::of_usize(i + 1) * m)
        .sum();
    out[0] = -rho * state[0] + source * weighted;
    for k in 2..=k_max {
        out[k - 1] = -rho * R::of_usize(k) * state[k - 1] + pg * R::of_usize(k - 1) * state[k - 2];
    }
    // flux that would feed size k_max + 1, dropped by the truncation
    out[k_max] = pg * R::of_usize(k_max) * state[k_max - 1];
}

/// Integrates the hierarchy from unit mass at size one over `[0, t_max]`
/// with the classical fourth-order scheme.
pub fn integrate_nu<R: Real>(
    params: &Parameters<R>,
    k_max: usize,
    t_max: R,
    control: StepControl<R>,
) -> Result<NuTrajectory<R>> {
    if k_max < 2 {
        return Err(Error::Domain("need at least two tracked sizes".into()));
    }
    if !(t_max > R::zero() && t_max.is_finite()) {
        return Err(Error::Domain("t_max must be positive and finite".into()));
    }
    let rho = params.rates().rho;
    let stability_cap = R::of(2.0) / ((params.gamma() + rho) * R::of_usize(k_max));
    let dt = match control.dt {
        Some(dt) => {
            if !dt.is_finite() || dt <= R::zero() || dt > stability_cap {
                return Err(Error::Domain(format!(
                    "dt must lie in (0, {stability_cap}] for a stable step"
                )));
            }
            dt
        }
        None => stability_cap * R::of(0.5),
    };
    let n_steps = (t_max / dt).ceil().to_usize().unwrap_or(usize::MAX);
    if n_steps == 0 || n_steps > 200_000_000 {
        return Err(Error::Domain("step count out of range".into()));
    }
    let dt = t_max / R::of_usize(n_steps);
    let stride = (n_steps / control.store_points.max(1)).max(1);

    let dim = k_max + 1;
    let mut y = vec![R::zero(); dim];
    y[0] = R::one();
    let mut k1 = vec![R::zero(); dim];
    let mut k2 = vec![R::zero(); dim];
    let mut k3 = vec![R::zero(); dim];
    let mut k4 = vec![R::zero(); dim];
    let mut tmp = vec![R::zero(); dim];

    let mut times = Vec::with_capacity(control.store_points + 2);
    let mut states = Vec::with_capacity(control.store_points + 2);
    let mut leaked = Vec::with_capacity(control.store_points + 2);
    let store = |times: &mut Vec<R>, states: &mut Vec<Vec<R>>, leaked: &mut Vec<R>, t: R, y: &[R]| {
        times.push(t);
        states.push(y[..k_max].to_vec());
        leaked.push(y[k_max]);
    };
    store(&mut times, &mut states, &mut leaked, R::zero(), &y);

    let half = R::of(0.5);
    let sixth = R::of(6.0).recip();
    for step in 1..=n_steps {
        rhs(params, &y, &mut k1);
        for i in 0..dim {
            tmp[i] = y[i] + half * dt * k1[i];
        }
        rhs(params, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + half * dt * k2[i];
        }
        rhs(params, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + dt * k3[i];
        }
        rhs(params, &tmp, &mut k4);
        for i in 0..dim {
            y[i] += dt * sixth * (k1[i] + R::of(2.0) * (k2[i] + k3[i]) + k4[i]);
        }
        if step % stride == 0 || step == n_steps {
            let t = dt * R::of_usize(step);
            store(&mut times, &mut states, &mut leaked, t, &y);
        }
    }

    let traj = NuTrajectory { times, states, leaked };
    let total_end = traj.total(traj.times.len() - 1);
    let leak_end = *traj.leaked.last().unwrap();
    if !total_end.is_finite() || total_end <= R::zero() {
        return Err(Error::Numerical("integration produced a non-positive total".into()));
    }
    if leak_end > control.leak_threshold * total_end {
        return Err(Error::Numerical(format!(
            "truncation leak {leak_end:e} exceeds {:e} of the final mass {total_end:e}; increase k_max",
            control.leak_threshold
        )));
    }
    Ok(traj)
}
