use crate::error::{Error, Result};
use crate::scalar::Real;

/// Absolute tolerance used for gauge/flux quadrature when none is given.
pub fn default_quad_tol<T: Real>() -> T {
    T::of(1e-10)
}

/// Adaptive Simpson integration of `f` over `[a, b]` (signed: `a > b` flips
/// the sign). The error target is absolute. Used only for profiles without a
/// closed-form antiderivative; all preset profiles bypass it.
pub fn adaptive_simpson<T: Real>(f: &dyn Fn(T) -> T, a: T, b: T, tol: T) -> Result<T> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(
            "quadrature endpoints must be finite".into(),
        ));
    }
    if tol <= T::zero() {
        return Err(Error::InvalidParameter(
            "quadrature tolerance must be positive".into(),
        ));
    }
    if a == b {
        return Ok(T::zero());
    }
    if a > b {
        return adaptive_simpson(f, b, a, tol).map(|v| -v);
    }

    let c = (a + b).half();
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = simpson(a, b, fa, fc, fb);
    let v = step(f, a, b, fa, fc, fb, whole, tol, 48)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("quadrature result".into()))
    }
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::of(6.0) * (fa + T::of(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn step<T: Real>(
    f: &dyn Fn(T) -> T,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> Result<T> {
    let m = (a + b).half();
    let lm = (a + m).half();
    let rm = (m + b).half();
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= T::of(15.0) * tol || (b - a).abs() < T::epsilon() * T::of(16.0) {
        return Ok(left + right + delta / T::of(15.0));
    }
    if depth == 0 {
        return Err(Error::GridTooCoarse(
            "adaptive quadrature failed to converge (recursion limit)".into(),
        ));
    }
    let half_tol = tol.half();
    let l = step(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?;
    let r = step(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?;
    Ok(l + r)
}
