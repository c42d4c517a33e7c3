//! Estimators over traces: counted processes, empirical size distributions,
//! growth-rate regression, the intrinsic martingale, and the distance and
//! goodness-of-fit machinery used to compare them with the closed forms.

use crate::error::{Error, Result};
use crate::malthus::Pmf;
use crate::model::Parameters;
use crate::numeric::special::gamma_q;
use crate::sim::{snapshot, EventKind, Trace};

/// Test function applied to cluster sizes, with `f(0) = 0` so isolated
/// clusters never contribute to active counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Characteristic {
    One,
    Identity,
    SquareSize,
    IndicatorSize(u32),
    /// `e^(b k)`; admissible only while `(1 - delta/rho) e^b < 1`, since
    /// larger `b` make the counted process non-integrable.
    ExpSize(f64),
}

impl Characteristic {
    pub fn validate(&self, params: &Parameters<f64>) -> Result<()> {
        match *self {
            Characteristic::IndicatorSize(k) if k < 1 => {
                Err(Error::Domain("indicator size must be >= 1".into()))
            }
            Characteristic::ExpSize(b) => {
                let keep = 1.0 - params.rates().iso_success;
                if keep * b.exp() < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "ExpSize({b}) inadmissible: requires b < {}",
                        -keep.ln()
                    )))
                }
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, k: u32) -> f64 {
        if k == 0 {
            return 0.0;
        }
        match *self {
            Characteristic::One => 1.0,
            Characteristic::Identity => k as f64,
            Characteristic::SquareSize => (k as f64) * (k as f64),
            Characteristic::IndicatorSize(j) => {
                if k == j {
                    1.0
                } else {
                    0.0
                }
            }
            Characteristic::ExpSize(b) => (b * k as f64).exp(),
        }
    }
}

/// `A^f(t)`: sum of `f` over the sizes of clusters active at `t`.
pub fn active_count(trace: &Trace, t: f64, f: &Characteristic) -> Result<f64> {
    f.validate(&trace.params)?;
    let snap = snapshot(trace, t)?;
    Ok(snap.active_sizes.iter().map(|&(_, s)| f.apply(s)).sum())
}

/// `I^f(t)`: sum of `f` over the detection sizes of clusters isolated by `t`.
pub fn isolated_count(trace: &Trace, t: f64, f: &Characteristic) -> Result<f64> {
    f.validate(&trace.params)?;
    let snap = snapshot(trace, t)?;
    Ok(snap.isolated_sizes.iter().map(|&(_, s)| f.apply(s)).sum())
}

/// Size histogram with mergeable counts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmpiricalDist {
    counts: Vec<u64>, // counts[i] holds size k = i + 1
    total: u64,
}

impl EmpiricalDist {
    pub fn from_sizes(sizes: impl IntoIterator<Item = u32>) -> Self {
        let mut d = Self::default();
        for s in sizes {
            d.add(s);
        }
        d
    }

    pub fn add(&mut self, size: u32) {
        if size == 0 {
            return;
        }
        let idx = size as usize - 1;
        if idx >= self.counts.len() {
            self.counts.resize(idx + 1, 0);
        }
        self.counts[idx] += 1;
        self.total += 1;
    }

    /// Pools another histogram into this one by summing counts.
    pub fn merge(&mut self, other: &EmpiricalDist) {
        if other.counts.len() > self.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (i, &c) in other.counts.iter().enumerate() {
            self.counts[i] += c;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn k_max(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, k: usize) -> u64 {
        if k >= 1 && k <= self.counts.len() {
            self.counts[k - 1]
        } else {
            0
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Normalized weight of size `k`; zero for an empty histogram.
    pub fn weight(&self, k: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(k) as f64 / self.total as f64
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (1..=self.counts.len()).map(|k| self.weight(k)).collect()
    }

    pub fn mean(&self) -> Option<f64> {
        if self.total == 0 {
            return None;
        }
        Some(
            self.counts
                .iter()
                .enumerate()
                .map(|(i, &c)| (i + 1) as f64 * c as f64)
                .sum::<f64>()
                / self.total as f64,
        )
    }
}

/// Empirical distribution of active cluster sizes at `t`; explicitly empty
/// when nothing is active.
pub fn empirical_active(trace: &Trace, t: f64) -> Result<EmpiricalDist> {
    let snap = snapshot(trace, t)?;
    Ok(EmpiricalDist::from_sizes(
        snap.active_sizes.iter().map(|&(_, s)| s),
    ))
}

/// Empirical distribution of isolated cluster sizes at `t`.
pub fn empirical_isolated(trace: &Trace, t: f64) -> Result<EmpiricalDist> {
    let snap = snapshot(trace, t)?;
    Ok(EmpiricalDist::from_sizes(
        snap.isolated_sizes.iter().map(|&(_, s)| s),
    ))
}

/// Survival convention used for conditioning: at least one contagious
/// individual at the sampling time.
pub fn is_surviving_at(trace: &Trace, t: f64) -> Result<bool> {
    Ok(snapshot(trace, t)?.totals.contagious > 0)
}

/// Number of active clusters sampled on a time grid, in one sweep over the
/// event log.
pub fn active_cluster_count_series(trace: &Trace, grid: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(grid.len());
    let mut count = 1i64; // ancestral cluster
    let mut ev = trace.events.iter().peekable();
    for &t in grid {
        while let Some(e) = ev.peek() {
            if e.time > t {
                break;
            }
            match e.kind {
                EventKind::UntraceableBirth { .. } => count += 1,
                EventKind::Isolation { .. } => count -= 1,
                EventKind::TraceableGrowth { .. } => {}
            }
            ev.next();
        }
        out.push((t, count as f64));
    }
    out
}

/// Least-squares slope of `log count` over a `(t, count)` series.
///
/// Errors on fewer than two points or non-positive counts: an extinct run
/// has no growth to fit.
pub fn estimate_alpha_series(series: &[(f64, f64)]) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::Empty("need at least two points to fit a slope".into()));
    }
    if series.iter().any(|&(_, c)| c <= 0.0) {
        return Err(Error::Numerical(
            "non-positive count in the fit window; no growth to fit".into(),
        ));
    }
    let n = series.len() as f64;
    let mean_t = series.iter().map(|&(t, _)| t).sum::<f64>() / n;
    let mean_y = series.iter().map(|&(_, c)| c.ln()).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(t, c) in series {
        num += (t - mean_t) * (c.ln() - mean_y);
        den += (t - mean_t) * (t - mean_t);
    }
    if den == 0.0 {
        return Err(Error::Numerical("degenerate time grid".into()));
    }
    Ok(num / den)
}

/// Growth-rate estimate from one trace: regression of `log A^1(t)` over
/// `points` grid times in `[t_end * (1 - window), t_end]`.
///
/// The default window is the last half of the run with 50 points.
pub fn estimate_alpha_trace(trace: &Trace, window: Option<(f64, usize)>) -> Result<f64> {
    let (fraction, points) = window.unwrap_or((0.5, 50));
    if !(0.0 < fraction && fraction <= 1.0) || points < 2 {
        return Err(Error::Domain("window fraction in (0,1] and >= 2 points required".into()));
    }
    let t_end = trace.end_time;
    let t_start = t_end * (1.0 - fraction);
    let grid: Vec<f64> = (0..points)
        .map(|i| t_start + (t_end - t_start) * i as f64 / (points - 1) as f64)
        .collect();
    estimate_alpha_series(&active_cluster_count_series(trace, &grid))
}

/// Pools `A^1(t)` over replicates on a common grid.
///
/// An extinct replicate contributes zero beyond its end time (its count
/// really is zero forever after); a truncated replicate must cover the whole
/// grid, since its process continues unobserved.
pub fn pooled_active_series(traces: &[Trace], grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if traces.is_empty() || grid.is_empty() {
        return Err(Error::Empty("nothing to pool".into()));
    }
    let t_last = grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut pooled = vec![0.0; grid.len()];
    for trace in traces {
        if trace.end_time < t_last && trace.is_surviving() {
            return Err(Error::Domain(format!(
                "replicate truncated at {} cannot be pooled up to {}",
                trace.end_time, t_last
            )));
        }
        let series = active_cluster_count_series(trace, grid);
        for (i, &(t, c)) in series.iter().enumerate() {
            // past the end of an extinct run the count stays zero
            pooled[i] += if t > trace.end_time { 0.0 } else { c };
        }
    }
    Ok(grid.iter().copied().zip(pooled).collect())
}

/// Intrinsic martingale at generation `n`: the sum of `e^(-alpha birth)`
/// over clusters of genealogical depth `n`. Zero when the trace never
/// reached that generation.
pub fn intrinsic_martingale(trace: &Trace, alpha: f64, n: u32) -> f64 {
    trace
        .clusters
        .iter()
        .filter(|c| c.generation == n)
        .map(|c| (-alpha * c.birth_time).exp())
        .sum()
}

fn residual(masses: &[f64]) -> f64 {
    (1.0 - masses.iter().sum::<f64>()).max(0.0)
}

/// Total variation distance between two (possibly truncated) distributions
/// on `{1, 2, ...}`, masses aligned at size one. Mass missing from a
/// truncation is treated as a common "beyond support" state.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let m = p.len().max(q.len());
    let mut acc = 0.0;
    for i in 0..m {
        let a = p.get(i).copied().unwrap_or(0.0);
        let b = q.get(i).copied().unwrap_or(0.0);
        acc += (a - b).abs();
    }
    0.5 * (acc + (residual(p) - residual(q)).abs())
}

pub fn tv_empirical_pmf(d: &EmpiricalDist, pmf: &Pmf<f64>) -> Result<f64> {
    if d.is_empty() {
        return Err(Error::Empty("empirical distribution has no samples".into()));
    }
    Ok(tv_distance(&d.weights(), pmf.masses()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square of observed counts against a reference law given by
/// per-size probabilities plus an explicit tail probability beyond them.
///
/// Cells with expected count below `min_expected` are pooled with their
/// right neighbors (the tail cell included), the classical validity rule.
pub fn chi_square(
    observed: &EmpiricalDist,
    probs: &[f64],
    tail_prob: f64,
    min_expected: f64,
) -> Result<ChiSquareTest> {
    if observed.is_empty() {
        return Err(Error::Empty("chi-square needs samples".into()));
    }
    if min_expected <= 0.0 {
        return Err(Error::Domain("min_expected must be positive".into()));
    }
    let n = observed.total() as f64;
    let m = probs.len().max(observed.k_max());
    // raw cells, tail last
    let mut cells: Vec<(f64, f64)> = (1..=m)
        .map(|k| {
            (
                observed.count(k) as f64,
                n * probs.get(k - 1).copied().unwrap_or(0.0),
            )
        })
        .collect();
    cells.push((0.0, n * tail_prob.max(0.0)));

    // pool right-to-left until every kept cell is heavy enough
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for &(o, e) in cells.iter().rev() {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= min_expected {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        if let Some(last) = pooled.last_mut() {
            last.0 += acc.0;
            last.1 += acc.1;
        }
    }
    pooled.reverse();
    if pooled.len() < 2 {
        return Err(Error::Numerical(
            "fewer than two usable cells after pooling".into(),
        ));
    }
    let statistic: f64 = pooled
        .iter()
        .map(|&(o, e)| {
            if e > 0.0 {
                (o - e) * (o - e) / e
            } else {
                0.0
            }
        })
        .sum();
    let dof = pooled.len() - 1;
    let p_value = gamma_q(dof as f64 / 2.0, statistic / 2.0)?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Survival function of the Kolmogorov distribution,
/// `Q(lambda) = 2 sum_j (-1)^(j-1) e^(-2 j^2 lambda^2)`.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test of `samples` against a continuous
/// distribution function, with the usual finite-`n` correction of the
/// asymptotic p-value.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsTest> {
    if samples.is_empty() {
        return Err(Error::Empty("ks test needs samples".into()));
    }
    let mut xs = samples.to_vec();
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("ks test input contains NaN".into()));
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d
            .max((f - i as f64 / nf).abs())
            .max(((i + 1) as f64 / nf - f).abs());
    }
    let sqrt_n = nf.sqrt();
    let p_value = kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
    Ok(KsTest {
        statistic: d,
        p_value,
        n,
    })
}
