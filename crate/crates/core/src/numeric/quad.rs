//! Adaptive Gauss-Kronrod quadrature on a finite interval.
//!
//! A 7-point Gauss / 15-point Kronrod pair with bisection refinement. The
//! local error estimate follows the QUADPACK rescaling of `|K15 - G7|`
//! against the deviation integral, so integrands with an endpoint
//! singularity in a derivative (such as `x^a` at zero with `a < 1`) are
//! refined where it matters and nowhere else.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Abscissae of the 15-point Kronrod rule on [-1, 1]; odd indices are the
/// embedded 7-point Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_33,
    0.949_107_912_342_758_524_526_189_684_047_85,
    0.864_864_423_359_769_072_789_712_788_640_93,
    0.741_531_185_599_394_439_863_864_773_280_79,
    0.586_087_235_467_691_130_294_144_838_258_73,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_08,
    0.279_705_391_489_276_667_901_467_771_423_78,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_33,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_52,
    0.140_653_259_715_525_918_745_189_590_510_24,
    0.169_004_726_639_267_902_826_583_426_598_55,
    0.190_350_578_064_785_409_913_256_402_421_01,
    0.204_432_940_075_298_892_414_161_999_234_65,
    0.209_482_141_084_727_828_012_999_174_891_71,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<R> {
    pub value: R,
    /// Accumulated local error estimate.
    pub abs_error: R,
    pub evaluations: usize,
}

struct Panel<R> {
    value: R,
    error: R,
    /// The raw Gauss/Kronrod difference sits at the roundoff floor;
    /// splitting this panel cannot improve it.
    machine_limited: bool,
}

fn kronrod_panel<R: Real>(f: &impl Fn(R) -> R, a: R, b: R) -> Panel<R> {
    let half = R::of(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);

    let f_center = f(center);
    let mut fv1 = [R::zero(); 8];
    let mut fv2 = [R::zero(); 8];

    let mut res_gauss = R::of(WG[3]) * f_center;
    let mut res_kronrod = R::of(WGK[7]) * f_center;
    let mut res_abs = res_kronrod.abs();

    for j in 0..7 {
        let x = half_len * R::of(XGK[j]);
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_kronrod += R::of(WGK[j]) * (f1 + f2);
        res_abs += R::of(WGK[j]) * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += R::of(WG[j / 2]) * (f1 + f2);
        }
    }

    let mean = res_kronrod * half;
    let mut res_asc = R::of(WGK[7]) * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += R::of(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_kronrod * half_len;
    res_abs *= half_len.abs();
    res_asc *= half_len.abs();

    // QUADPACK error rescaling.
    let mut err = ((res_kronrod - res_gauss) * half_len).abs();
    if res_asc != R::zero() && err != R::zero() {
        let scale = (R::of(200.0) * err / res_asc).powf(R::of(1.5));
        err = if scale < R::one() { res_asc * scale } else { res_asc };
    }
    let floor = R::of(50.0) * R::epsilon() * res_abs;
    let machine_limited = err <= floor;
    if floor > err {
        err = floor;
    }

    Panel {
        value,
        error: err,
        machine_limited,
    }
}

fn refine<R: Real>(
    f: &impl Fn(R) -> R,
    a: R,
    b: R,
    tol: R,
    depth: u32,
    max_depth: u32,
    evals: &mut usize,
) -> (R, R) {
    *evals += 15;
    let panel = kronrod_panel(f, a, b);
    if panel.error <= tol || panel.machine_limited || depth >= max_depth {
        return (panel.value, panel.error);
    }
    let mid = R::of(0.5) * (a + b);
    let half_tol = R::of(0.5) * tol;
    let (v1, e1) = refine(f, a, mid, half_tol, depth + 1, max_depth, evals);
    let (v2, e2) = refine(f, mid, b, half_tol, depth + 1, max_depth, evals);
    (v1 + v2, e1 + e2)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Fails if the accumulated error estimate still exceeds the tolerance after
/// refinement down to `max_depth` bisection levels.
pub fn integrate<R: Real>(
    f: impl Fn(R) -> R,
    a: R,
    b: R,
    abs_tol: R,
    max_depth: u32,
) -> Result<QuadResult<R>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("quadrature interval must be finite".into()));
    }
    if abs_tol <= R::zero() {
        return Err(Error::Domain("quadrature tolerance must be positive".into()));
    }
    if a == b {
        return Ok(QuadResult {
            value: R::zero(),
            abs_error: R::zero(),
            evaluations: 0,
        });
    }
    let mut evals = 0usize;
    let (value, err) = refine(&f, a, b, abs_tol, 0, max_depth, &mut evals);
    if !value.is_finite() {
        return Err(Error::Numerical("quadrature produced a non-finite value".into()));
    }
    if err > abs_tol * R::of(8.0) {
        return Err(Error::Numerical(format!(
            "quadrature did not reach tolerance: error estimate {err:e} > {abs_tol:e}"
        )));
    }
    Ok(QuadResult {
        value,
        abs_error: err,
        evaluations: evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x: f64| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12, 40).unwrap();
        assert_relative_eq!(r.value, 4.0 - 4.0 + 2.0, epsilon = 1e-13);
        assert_eq!(r.evaluations, 15);
    }

    #[test]
    fn exponential_tail() {
        let r = integrate(|x: f64| (-x).exp(), 0.0, 50.0, 1e-12, 50).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-11);
    }

    #[test]
    fn endpoint_singular_derivative() {
        // int_0^1 sqrt(x) dx = 2/3; derivative unbounded at 0.
        let r = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12, 100).unwrap();
        assert_relative_eq!(r.value, 2.0 / 3.0, epsilon = 1e-11);
        // fractional power closer to the hard end of what the solver meets
        let a = 0.51;
        let r = integrate(|x: f64| x.powf(a), 0.0, 1.0, 1e-12, 100).unwrap();
        assert_relative_eq!(r.value, 1.0 / (a + 1.0), epsilon = 1e-10);
    }

    #[test]
    fn reports_failure_when_tolerance_unreachable() {
        // max_depth too small for the requested tolerance
        let r = integrate(|x: f64| x.powf(0.2), 0.0, 1.0, 1e-13, 4);
        assert!(r.is_err());
    }

    #[test]
    fn works_in_f32() {
        let r = integrate(|x: f32| x.exp(), 0.0f32, 1.0, 1e-5, 30).unwrap();
        assert!((r.value - (std::f32::consts::E - 1.0)).abs() < 1e-5);
    }
}
