use num_complex::Complex;

use crate::error::{Error, Result};
use crate::point::Point;
use crate::scalar::Real;

/// Closed-form heat kernels and Gaussian bounds for the exactly solvable
/// cases: constant field, isotropic oscillator potential, and their
/// combination.
///
/// All hyperbolic expressions are evaluated through ratio helpers that stay
/// accurate for tiny arguments (series expansion) and never overflow for
/// huge ones (exponential-difference forms).

/// `t / sinh t`, continuous through `t = 0`, and `-> 0` cleanly as `|t| -> inf`.
pub(crate) fn sinh_ratio<T: Real>(t: T) -> T {
    let a = t.abs();
    if a < T::of(1e-4) {
        let t2 = t * t;
        T::one() - t2 / T::of(6.0) + T::of(7.0 / 360.0) * t2 * t2
    } else if a > T::of(700.0) {
        // sinh would overflow; the true ratio underflows to zero
        T::of(2.0) * a * (-a).exp()
    } else {
        t / t.sinh()
    }
}

/// `t / tanh t`, continuous through `t = 0`, `-> |t|` as `|t| -> inf`.
pub(crate) fn tanh_ratio<T: Real>(t: T) -> T {
    let a = t.abs();
    if a < T::of(1e-4) {
        let t2 = t * t;
        T::one() + t2 / T::of(3.0) - t2 * t2 / T::of(45.0)
    } else {
        t / t.tanh()
    }
}

/// `cosh p / cosh q` for `|p| <= q`, safe for arbitrarily large `q`.
fn cosh_ratio<T: Real>(p: T, q: T) -> T {
    debug_assert!(p.abs() <= q * (T::one() + T::of(1e-12)) + T::of(1e-300));
    let p = p.abs();
    if q > T::of(30.0) {
        let two = T::of(2.0);
        (p - q).exp() * (T::one() + (-two * p).exp()) / (T::one() + (-two * q).exp())
    } else {
        p.cosh() / q.cosh()
    }
}

/// `sinh p / sinh q` for `|p| <= q`, `q > 0`, safe for arbitrarily large `q`.
fn sinh_ratio_pair<T: Real>(p: T, q: T) -> T {
    debug_assert!(q > T::zero() && p.abs() <= q * (T::one() + T::of(1e-12)));
    let sign = if p < T::zero() { -T::one() } else { T::one() };
    let p = p.abs();
    if q > T::of(30.0) {
        let two = T::of(2.0);
        sign * (p - q).exp() * (T::one() - (-two * p).exp()) / (T::one() - (-two * q).exp())
    } else if q < T::of(1e-4) {
        let corr = |t: T| T::one() + t * t / T::of(6.0);
        sign * p * corr(p) / (q * corr(q))
    } else {
        sign * p.sinh() / q.sinh()
    }
}

/// Effective oscillator frequency `sqrt((b/2)^2 + omega^2)`.
fn big_omega<T: Real>(b: T, omega: T) -> T {
    (b.half()).hypot(omega)
}

/// Gaussian prefactor `b / (4 pi sinh(beta b / 2))`, even in `b`, with the
/// free-kernel limit `1 / (2 pi beta)` at `b = 0`.
fn landau_pref<T: Real>(b: T, beta: T) -> T {
    sinh_ratio(beta * b.half()) / (T::of(2.0) * T::PI() * beta)
}

fn check_beta<T: Real>(beta: T) -> Result<()> {
    if !(beta.is_finite() && beta > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature must be positive and finite, got {beta}"
        )));
    }
    Ok(())
}

/// Parameters of the exactly solvable problem: constant field `b`, isotropic
/// oscillator potential of frequency `omega`, inverse temperature `beta`.
#[derive(Clone, Copy, Debug)]
pub struct MehlerParams<T> {
    pub b: T,
    pub omega: T,
    pub beta: T,
}

impl<T: Real> MehlerParams<T> {
    pub fn new(b: T, omega: T, beta: T) -> Result<Self> {
        check_beta(beta)?;
        if !b.is_finite() {
            return Err(Error::InvalidParameter("field strength must be finite".into()));
        }
        if !(omega.is_finite() && omega >= T::zero()) {
            return Err(Error::InvalidParameter(
                "oscillator frequency must be non-negative and finite".into(),
            ));
        }
        Ok(MehlerParams { b, omega, beta })
    }

    pub fn big_omega(&self) -> T {
        big_omega(self.b, self.omega)
    }

    /// Ground-state energy `sqrt((b/2)^2 + omega^2)` of this problem.
    pub fn e0(&self) -> T {
        self.big_omega()
    }
}

/// Heat kernel of the free Laplacian `p^2/2` in the plane.
pub fn free_kernel<T: Real>(beta: T, x: Point<T>, y: Point<T>) -> Result<T> {
    check_beta(beta)?;
    let d2 = (x - y).norm2();
    Ok((-d2 / (T::of(2.0) * beta)).exp() / (T::of(2.0) * T::PI() * beta))
}

/// Heat kernel of the constant-field + oscillator problem in symmetric gauge.
///
/// Modulus and phase are assembled from overflow-safe hyperbolic ratios, so
/// the formula is usable from `beta*Omega ~ 1e-12` up to arguments where the
/// kernel itself underflows.
pub fn mehler_kernel<T: Real>(p: &MehlerParams<T>, x: Point<T>, y: Point<T>) -> Complex<T> {
    let om = p.big_omega();
    let beta = p.beta;
    if om == T::zero() {
        let d2 = (x - y).norm2();
        let v = (-d2 / (T::of(2.0) * beta)).exp() / (T::of(2.0) * T::PI() * beta);
        return Complex::new(v, T::zero());
    }
    let t = beta * om;
    let pref = sinh_ratio(t) / (T::of(2.0) * T::PI() * beta);
    let c = cosh_ratio(beta * p.b.half(), t);
    let quad = x.norm2() + y.norm2() - T::of(2.0) * x.dot(y) * c;
    let exponent = -(tanh_ratio(t) / (T::of(2.0) * beta)) * quad;
    let phase_coeff = om * sinh_ratio_pair(beta * p.b.half(), t);
    let phase = phase_coeff * x.cross(y);
    Complex::from_polar(pref * exponent.exp(), phase)
}

/// Gaussian upper bound `b/(4 pi sinh(beta b/2)) * exp(-|x-y|^2/(2 beta))`,
/// valid for any field dominating `b >= 0` pointwise. `b = 0` reproduces the
/// free kernel.
pub fn loss_thaller_rhs<T: Real>(b: T, beta: T, x: Point<T>, y: Point<T>) -> Result<T> {
    check_beta(beta)?;
    if !(b.is_finite() && b >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "bound requires a non-negative field floor, got {b}"
        )));
    }
    let d2 = (x - y).norm2();
    Ok(landau_pref(b, beta) * (-d2 / (T::of(2.0) * beta)).exp())
}

/// Sharper anisotropic bound for fields that are constant along `x2` and
/// dominate `b >= 0`: full magnetic Gaussian decay in the `x1` separation,
/// free decay in the `x2` separation.
pub fn improved_bound_rhs<T: Real>(b: T, beta: T, x: Point<T>, y: Point<T>) -> Result<T> {
    check_beta(beta)?;
    if !(b.is_finite() && b >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "bound requires a non-negative field floor, got {b}"
        )));
    }
    let d1 = x.x1 - y.x1;
    let d2 = x.x2 - y.x2;
    let two_beta = T::of(2.0) * beta;
    let q1 = tanh_ratio(beta * b.half()) / two_beta;
    Ok(landau_pref(b, beta) * (-q1 * d1 * d1 - d2 * d2 / two_beta).exp())
}

/// Gaussian lower bound on the kernel modulus at equal `x2`, for fields with
/// `|b| <= b_hat` everywhere: the constant-field kernel at strength `b_hat`
/// restricted to a transverse separation.
pub fn lower_bound_lhs<T: Real>(b_hat: T, beta: T, x1: T, y1: T) -> Result<T> {
    check_beta(beta)?;
    if !(b_hat.is_finite() && b_hat >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "bound requires a non-negative field cap, got {b_hat}"
        )));
    }
    let d1 = x1 - y1;
    let q1 = tanh_ratio(beta * b_hat.half()) / (T::of(2.0) * beta);
    Ok(landau_pref(b_hat, beta) * (-q1 * d1 * d1).exp())
}

/// Ground-energy upper bound `|b_hat|/2 + e0(0, v)` from capping the field.
pub fn lieb_bound<T: Real>(b_hat_sup: T, e0_zero_field: T) -> T {
    b_hat_sup.abs().half() + e0_zero_field
}

/// Ground-state energy of the constant-field + oscillator problem.
pub fn oscillator_e0<T: Real>(b: T, omega: T) -> T {
    big_omega(b, omega)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LANDAU_DIAG_B2_BETA1: f64 = 0.13542782627579134;

    fn pt(x1: f64, x2: f64) -> Point<f64> {
        Point::new(x1, x2)
    }

    #[test]
    fn ratio_helpers_continuous_across_series_threshold() {
        for &t in &[0.99e-4_f64, 1.01e-4] {
            assert!((sinh_ratio(t) - t / t.sinh()).abs() < 1e-15);
            assert!((tanh_ratio(t) - t / t.tanh()).abs() < 1e-15);
        }
        assert_eq!(sinh_ratio(0.0_f64), 1.0);
        assert_eq!(tanh_ratio(0.0_f64), 1.0);
        assert_eq!(sinh_ratio(-2.0_f64), sinh_ratio(2.0));
    }

    #[test]
    fn ratio_helpers_survive_extreme_arguments() {
        let r = cosh_ratio(400.0_f64, 800.0);
        assert!(r.is_finite() && (r / (-400.0f64).exp() - 1.0).abs() < 1e-12);
        let s = sinh_ratio_pair(25.0, 50.0);
        assert!((s / (-25.0f64).exp() - 1.0).abs() < 1e-10);
        assert_eq!(sinh_ratio(800.0), 2.0 * 800.0 * (-800.0f64).exp());
        // branch continuity at q = 30: cosh(q')/cosh(q) ~ e^(q' - q)
        let a = cosh_ratio(10.0, 29.999);
        let b = cosh_ratio(10.0, 30.001);
        assert!((a / b - (30.001f64 - 29.999).exp()).abs() < 1e-6, "{}", a / b);
    }

    #[test]
    fn landau_diagonal_matches_closed_form() {
        let p = MehlerParams::new(2.0, 0.0, 1.0).unwrap();
        for &x in &[pt(0.0, 0.0), pt(0.3, -1.1), pt(5.0, 2.0)] {
            let k = mehler_kernel(&p, x, x);
            assert!(
                (k.re - LANDAU_DIAG_B2_BETA1).abs() < 1e-12 * LANDAU_DIAG_B2_BETA1,
                "diag at {x:?}: {}",
                k.re
            );
            assert_eq!(k.im, 0.0);
        }
    }

    #[test]
    fn landau_off_diagonal_modulus() {
        // |K| = b/(4 pi sinh(beta b/2)) exp(-(b/4) |x-y|^2 / tanh(beta b/2))
        let (b, beta) = (2.0, 1.0);
        let p = MehlerParams::new(b, 0.0, beta).unwrap();
        let (x, y) = (pt(1.0, 0.5), pt(-0.5, 1.25));
        let d2 = (x - y).norm2();
        let expect = LANDAU_DIAG_B2_BETA1 * (-(b / 4.0) * d2 / (beta * b / 2.0).tanh()).exp();
        let got = mehler_kernel(&p, x, y).norm();
        assert!((got - expect).abs() < 1e-14, "{got} vs {expect}");
    }

    #[test]
    fn zero_parameters_reduce_to_free_kernel() {
        let p = MehlerParams::new(0.0, 0.0, 2.0).unwrap();
        let (x, y) = (pt(1.0, -2.0), pt(0.25, 0.5));
        let k = mehler_kernel(&p, x, y);
        assert_eq!(k.im, 0.0);
        assert!((k.re - free_kernel(2.0, x, y).unwrap()).abs() < 1e-16);
        // frozen free-kernel values
        assert!((free_kernel(1.0, pt(0.0, 0.0), pt(0.0, 0.0)).unwrap()
            - 0.15915494309189535)
            .abs()
            < 1e-16);
        assert!((free_kernel(2.0, pt(2.0, 0.0), pt(0.0, 0.0)).unwrap()
            - 0.029274915762159584)
            .abs()
            < 1e-16);
    }

    #[test]
    fn tiny_field_is_continuous_with_free() {
        let p = MehlerParams::new(1e-10, 0.0, 1.0).unwrap();
        let (x, y) = (pt(0.7, 0.1), pt(-0.4, 0.6));
        let k = mehler_kernel(&p, x, y);
        let f = free_kernel(1.0, x, y).unwrap();
        assert!((k.norm() - f).abs() < 1e-12 * f);
    }

    #[test]
    fn oscillator_factorizes_into_1d_kernels() {
        // at b = 0 the two coordinates decouple
        let one_d = |omega: f64, beta: f64, x: f64, y: f64| -> f64 {
            let s = (beta * omega).sinh();
            (omega / (2.0 * std::f64::consts::PI * s)).sqrt()
                * (-omega * ((x * x + y * y) * (beta * omega).cosh() - 2.0 * x * y) / (2.0 * s))
                    .exp()
        };
        let (omega, beta) = (0.8, 1.3);
        let p = MehlerParams::new(0.0, omega, beta).unwrap();
        for &(x, y) in &[
            (pt(0.0, 0.0), pt(0.0, 0.0)),
            (pt(1.0, -0.5), pt(0.3, 0.9)),
            (pt(2.0, 2.0), pt(-1.0, 0.0)),
        ] {
            let k = mehler_kernel(&p, x, y);
            let expect = one_d(omega, beta, x.x1, y.x1) * one_d(omega, beta, x.x2, y.x2);
            assert_eq!(k.im, 0.0);
            assert!((k.re - expect).abs() < 1e-13 * expect.abs().max(1e-3), "{k:?}");
        }
    }

    #[test]
    fn hermitian_symmetry() {
        let p = MehlerParams::new(1.7, 0.4, 0.9).unwrap();
        let (x, y) = (pt(1.0, 2.0), pt(-0.5, 0.25));
        let kxy = mehler_kernel(&p, x, y);
        let kyx = mehler_kernel(&p, y, x);
        assert!((kxy.re - kyx.re).abs() < 1e-16);
        assert!((kxy.im + kyx.im).abs() < 1e-16);
    }

    #[test]
    fn modulus_decreases_with_field_and_frequency() {
        let (x, y) = (pt(0.9, -0.2), pt(0.1, 0.4));
        let mods: Vec<f64> = [0.0, 0.5, 1.5, 4.0]
            .iter()
            .map(|&b| mehler_kernel(&MehlerParams::new(b, 0.0, 1.0).unwrap(), x, y).norm())
            .collect();
        assert!(mods.windows(2).all(|w| w[1] < w[0]), "{mods:?}");
        let diag: Vec<f64> = [0.0, 0.5, 1.5]
            .iter()
            .map(|&om| mehler_kernel(&MehlerParams::new(1.0, om, 1.0).unwrap(), x, x).norm())
            .collect();
        assert!(diag.windows(2).all(|w| w[1] < w[0]), "{diag:?}");
    }

    #[test]
    fn gaussian_bound_values_and_ordering() {
        let v = improved_bound_rhs(2.0, 1.0, pt(1.0, 0.0), pt(0.0, 0.0)).unwrap();
        assert!((v - 0.07024022890726984).abs() < 1e-15, "{v}");
        // anisotropic bound is never weaker than the isotropic one
        for &(x, y) in &[
            (pt(1.0, 0.0), pt(0.0, 0.0)),
            (pt(0.0, 3.0), pt(0.0, 0.0)),
            (pt(2.0, 1.0), pt(-1.0, -1.0)),
        ] {
            let iso = loss_thaller_rhs(2.0, 1.0, x, y).unwrap();
            let aniso = improved_bound_rhs(2.0, 1.0, x, y).unwrap();
            assert!(aniso <= iso * (1.0 + 1e-15), "{aniso} vs {iso}");
        }
        // bound decreasing in the field floor, free limit at zero
        let (x, y) = (pt(1.5, 0.0), pt(0.0, 0.0));
        let seq: Vec<f64> = [0.0, 1.0, 2.0, 5.0]
            .iter()
            .map(|&b| loss_thaller_rhs(b, 1.0, x, y).unwrap())
            .collect();
        assert!(seq.windows(2).all(|w| w[1] < w[0]), "{seq:?}");
        assert!((seq[0] - free_kernel(1.0, x, y).unwrap()).abs() < 1e-16);
    }

    #[test]
    fn lower_bound_is_constant_field_modulus_at_equal_x2() {
        let (b, beta) = (2.5, 0.8);
        let p = MehlerParams::new(b, 0.0, beta).unwrap();
        let (x1, y1) = (1.2, -0.3);
        let lhs = lower_bound_lhs(b, beta, x1, y1).unwrap();
        let k = mehler_kernel(&p, pt(x1, 0.7), pt(y1, 0.7)).norm();
        assert!((lhs - k).abs() < 1e-15, "{lhs} vs {k}");
    }

    #[test]
    fn ground_energies() {
        assert_eq!(oscillator_e0(2.0_f64, 0.0), 1.0);
        assert!((oscillator_e0(2.0_f64, 1.5) - 1.8027756377319946).abs() < 1e-15);
        assert!((oscillator_e0(1.0_f64, 1.0) - 1.118033988749895).abs() < 1e-15);
        assert_eq!(MehlerParams::new(2.0, 1.5, 1.0).unwrap().e0(), oscillator_e0(2.0, 1.5));
        // field cap bound dominates the exact energy
        assert!(lieb_bound(2.0, oscillator_e0(0.0, 1.0)) >= oscillator_e0(2.0, 1.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(MehlerParams::new(1.0, -0.1, 1.0).is_err());
        assert!(MehlerParams::new(1.0, 0.0, 0.0).is_err());
        assert!(free_kernel(-1.0, pt(0.0, 0.0), pt(0.0, 0.0)).is_err());
        assert!(loss_thaller_rhs(-1.0, 1.0, pt(0.0, 0.0), pt(0.0, 0.0)).is_err());
        assert!(lower_bound_lhs(f64::NAN, 1.0, 0.0, 0.0).is_err());
    }
}
