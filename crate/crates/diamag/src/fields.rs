use std::sync::Arc;

use crate::error::{Error, Result};
use crate::point::Point;
use crate::quad::{adaptive_simpson, default_quad_tol};
use crate::scalar::Real;

/// How a scalar profile `s -> value` is laid out in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    /// Profile of `x1` only: translation invariant along `x2`.
    AlongX1,
    /// Profile of `r = |x|`: rotation invariant.
    Radial,
}

pub type ProfileFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone)]
enum FieldKind<T> {
    Constant {
        b: T,
    },
    /// `b (1 + x1^2 / lambda^2)`, growing along `x1`.
    Fact4 {
        b: T,
        lambda: T,
    },
    /// `2 + sin(x1)`: strictly positive, mean 2, certified range [1, 3].
    Sine,
    /// `b0 exp(-s^2 / (2 sigma^2))` with `s = x1` or `s = r`.
    GaussianBump {
        b0: T,
        sigma: T,
        geometry: Geometry,
    },
    /// Piecewise-linear profile of `x1`, clamped to the end values outside
    /// the node range. Nodes are `(x1, b)` with strictly increasing `x1`.
    PiecewiseLinear {
        nodes: Vec<(T, T)>,
    },
    Custom {
        f: ProfileFn<T>,
        geometry: Geometry,
        inf_abs: Option<T>,
        sup_abs: Option<T>,
        label: String,
    },
}

/// A magnetic field profile with whatever closed-form structure it has
/// (gauge, flux, certified bounds) carried along.
#[derive(Clone)]
pub struct FieldProfile<T> {
    kind: FieldKind<T>,
}

fn require_finite<T: Real>(v: T, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be finite")))
    }
}

fn require_positive<T: Real>(v: T, what: &str) -> Result<()> {
    require_finite(v, what)?;
    if v > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} must be positive, got {v}"
        )))
    }
}

impl<T: Real> FieldProfile<T> {
    pub fn constant(b: T) -> Result<Self> {
        require_finite(b, "constant field strength")?;
        Ok(Self {
            kind: FieldKind::Constant { b },
        })
    }

    pub fn fact4(b: T, lambda: T) -> Result<Self> {
        require_positive(b, "fact4 base field")?;
        require_positive(lambda, "fact4 length scale")?;
        Ok(Self {
            kind: FieldKind::Fact4 { b, lambda },
        })
    }

    pub fn sine() -> Self {
        Self {
            kind: FieldKind::Sine,
        }
    }

    pub fn gaussian_bump(b0: T, sigma: T, geometry: Geometry) -> Result<Self> {
        require_finite(b0, "bump amplitude")?;
        require_positive(sigma, "bump width")?;
        Ok(Self {
            kind: FieldKind::GaussianBump { b0, sigma, geometry },
        })
    }

    pub fn piecewise_linear(nodes: Vec<(T, T)>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidParameter(
                "piecewise-linear field needs at least one node".into(),
            ));
        }
        for w in nodes.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidParameter(
                    "piecewise-linear nodes must have strictly increasing x1".into(),
                ));
            }
        }
        for &(x, b) in &nodes {
            require_finite(x, "node position")?;
            require_finite(b, "node value")?;
        }
        Ok(Self {
            kind: FieldKind::PiecewiseLinear { nodes },
        })
    }

    /// A caller-supplied profile. `inf_abs` / `sup_abs` are certified bounds
    /// on `|b|` over the whole geometry domain; leave `None` when unknown
    /// (bound-based checks will then refuse to use this profile).
    pub fn custom(
        f: impl Fn(T) -> T + Send + Sync + 'static,
        geometry: Geometry,
        inf_abs: Option<T>,
        sup_abs: Option<T>,
        label: impl Into<String>,
    ) -> Self {
        Self {
            kind: FieldKind::Custom {
                f: Arc::new(f),
                geometry,
                inf_abs,
                sup_abs,
                label: label.into(),
            },
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            FieldKind::Constant { b } => format!("constant(b={b})"),
            FieldKind::Fact4 { b, lambda } => format!("fact4(b={b}, lambda={lambda})"),
            FieldKind::Sine => "sine".into(),
            FieldKind::GaussianBump { b0, sigma, geometry } => {
                let g = match geometry {
                    Geometry::AlongX1 => "x1",
                    Geometry::Radial => "radial",
                };
                format!("gaussian_bump(b0={b0}, sigma={sigma}, {g})")
            }
            FieldKind::PiecewiseLinear { nodes } => {
                format!("piecewise_linear({} nodes)", nodes.len())
            }
            FieldKind::Custom { label, .. } => format!("custom({label})"),
        }
    }

    /// True when the field depends on `x1` only (fibered backends apply).
    pub fn is_x2_independent(&self) -> bool {
        match &self.kind {
            FieldKind::Constant { .. }
            | FieldKind::Fact4 { .. }
            | FieldKind::Sine
            | FieldKind::PiecewiseLinear { .. } => true,
            FieldKind::GaussianBump { geometry, .. } | FieldKind::Custom { geometry, .. } => {
                *geometry == Geometry::AlongX1
            }
        }
    }

    /// True when the field is rotation invariant (the radial backend applies).
    pub fn is_radial(&self) -> bool {
        match &self.kind {
            FieldKind::Constant { .. } => true,
            FieldKind::GaussianBump { geometry, .. } | FieldKind::Custom { geometry, .. } => {
                *geometry == Geometry::Radial
            }
            _ => false,
        }
    }

    /// Field strength as a function of the transverse coordinate `x1`.
    pub fn eval_x1(&self, x1: T) -> Result<T> {
        match &self.kind {
            FieldKind::Constant { b } => Ok(*b),
            FieldKind::Fact4 { b, lambda } => {
                let u = x1 / *lambda;
                Ok(*b * (T::one() + u * u))
            }
            FieldKind::Sine => Ok(T::of(2.0) + x1.sin()),
            FieldKind::GaussianBump { b0, sigma, geometry } => {
                if *geometry != Geometry::AlongX1 {
                    return Err(Error::IncompatibleGeometry(
                        "radial bump evaluated along x1".into(),
                    ));
                }
                let u = x1 / *sigma;
                Ok(*b0 * (-u * u.half()).exp())
            }
            FieldKind::PiecewiseLinear { nodes } => Ok(piecewise_eval(nodes, x1)),
            FieldKind::Custom { f, geometry, .. } => {
                if *geometry != Geometry::AlongX1 {
                    return Err(Error::IncompatibleGeometry(
                        "radial custom field evaluated along x1".into(),
                    ));
                }
                Ok(f(x1))
            }
        }
    }

    /// Field strength as a function of radius.
    pub fn eval_r(&self, r: T) -> Result<T> {
        if r < T::zero() {
            return Err(Error::NegativeRadius(r.as_f64()));
        }
        match &self.kind {
            FieldKind::Constant { b } => Ok(*b),
            FieldKind::GaussianBump { b0, sigma, geometry } => {
                if *geometry != Geometry::Radial {
                    return Err(Error::IncompatibleGeometry(
                        "x1 bump evaluated radially".into(),
                    ));
                }
                let u = r / *sigma;
                Ok(*b0 * (-u * u.half()).exp())
            }
            FieldKind::Custom { f, geometry, .. } => {
                if *geometry != Geometry::Radial {
                    return Err(Error::IncompatibleGeometry(
                        "x1 custom field evaluated radially".into(),
                    ));
                }
                Ok(f(r))
            }
            _ => Err(Error::IncompatibleGeometry(format!(
                "{} has no radial interpretation",
                self.label()
            ))),
        }
    }

    /// Field strength at a point of the plane.
    pub fn eval_field(&self, p: Point<T>) -> Result<T> {
        if self.is_x2_independent() {
            self.eval_x1(p.x1)
        } else {
            self.eval_r(p.norm())
        }
    }

    /// Transverse gauge `a2(x1) = integral of b from 0 to x1`; `a2(0) = 0`
    /// exactly. Closed forms for every preset; adaptive quadrature only for
    /// custom profiles. Radial-only fields have no transverse gauge.
    pub fn gauge_a2(&self, x1: T) -> Result<T> {
        self.gauge_a2_tol(x1, default_quad_tol())
    }

    pub fn gauge_a2_tol(&self, x1: T, tol: T) -> Result<T> {
        match &self.kind {
            FieldKind::Constant { b } => Ok(*b * x1),
            FieldKind::Fact4 { b, lambda } => {
                Ok(*b * (x1 + x1 * x1 * x1 / (T::of(3.0) * *lambda * *lambda)))
            }
            FieldKind::Sine => Ok(T::of(2.0) * x1 + T::one() - x1.cos()),
            FieldKind::GaussianBump { b0, sigma, geometry } => {
                if *geometry != Geometry::AlongX1 {
                    return Err(Error::GaugeUnavailable(
                        "radial bump has no transverse gauge".into(),
                    ));
                }
                // integral of b0 exp(-t^2/(2 sigma^2)) dt from 0 to x1
                let root_half_pi = T::of(std::f64::consts::FRAC_PI_2).sqrt();
                let arg = (x1 / *sigma).as_f64() / std::f64::consts::SQRT_2;
                Ok(*b0 * *sigma * root_half_pi * T::of(libm::erf(arg)))
            }
            FieldKind::PiecewiseLinear { nodes } => Ok(piecewise_gauge(nodes, x1)),
            FieldKind::Custom { f, geometry, .. } => {
                if *geometry != Geometry::AlongX1 {
                    return Err(Error::GaugeUnavailable(
                        "radial custom field has no transverse gauge".into(),
                    ));
                }
                adaptive_simpson(&**f, T::zero(), x1, tol)
            }
        }
    }

    /// Flux through the disk of radius `r`, divided by `2 pi`:
    /// `integral of s b(s) ds from 0 to r`. Radial fields only.
    pub fn poincare_flux(&self, r: T) -> Result<T> {
        self.poincare_flux_tol(r, default_quad_tol())
    }

    pub fn poincare_flux_tol(&self, r: T, tol: T) -> Result<T> {
        if r < T::zero() {
            return Err(Error::NegativeRadius(r.as_f64()));
        }
        match &self.kind {
            FieldKind::Constant { b } => Ok(*b * r * r.half()),
            FieldKind::GaussianBump { b0, sigma, geometry } => {
                if *geometry != Geometry::Radial {
                    return Err(Error::GaugeUnavailable(
                        "x1 bump has no radial flux".into(),
                    ));
                }
                let u = r / *sigma;
                let s2 = *sigma * *sigma;
                Ok(*b0 * s2 * (T::one() - (-u * u.half()).exp()))
            }
            FieldKind::Custom { f, geometry, .. } => {
                if *geometry != Geometry::Radial {
                    return Err(Error::GaugeUnavailable(
                        "x1 custom field has no radial flux".into(),
                    ));
                }
                let g = |s: T| s * f(s);
                adaptive_simpson(&g, T::zero(), r, tol)
            }
            _ => Err(Error::GaugeUnavailable(format!(
                "{} has no radial flux",
                self.label()
            ))),
        }
    }

    /// Certified `inf |b|` over the profile's domain, when known.
    pub fn certified_inf_abs(&self) -> Option<T> {
        match &self.kind {
            FieldKind::Constant { b } => Some(b.abs()),
            FieldKind::Fact4 { b, .. } => Some(*b),
            FieldKind::Sine => Some(T::one()),
            FieldKind::GaussianBump { .. } => Some(T::zero()),
            FieldKind::PiecewiseLinear { nodes } => {
                let lo = nodes.iter().map(|n| n.1).fold(T::infinity(), T::min);
                let hi = nodes.iter().map(|n| n.1).fold(T::neg_infinity(), T::max);
                if lo <= T::zero() && hi >= T::zero() {
                    Some(T::zero())
                } else {
                    Some(lo.abs().min(hi.abs()))
                }
            }
            FieldKind::Custom { inf_abs, .. } => *inf_abs,
        }
    }

    /// Certified `sup |b|` over the profile's domain, when finite and known.
    pub fn certified_sup_abs(&self) -> Option<T> {
        match &self.kind {
            FieldKind::Constant { b } => Some(b.abs()),
            FieldKind::Fact4 { .. } => None,
            FieldKind::Sine => Some(T::of(3.0)),
            FieldKind::GaussianBump { b0, .. } => Some(b0.abs()),
            FieldKind::PiecewiseLinear { nodes } => nodes
                .iter()
                .map(|n| n.1.abs())
                .fold(None, |acc: Option<T>, v| {
                    Some(acc.map_or(v, |a| a.max(v)))
                }),
            FieldKind::Custom { sup_abs, .. } => *sup_abs,
        }
    }
}

fn piecewise_eval<T: Real>(nodes: &[(T, T)], x: T) -> T {
    let first = nodes[0];
    let last = nodes[nodes.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let j = nodes.partition_point(|n| n.0 <= x) - 1;
    let (x0, b0) = nodes[j];
    let (x1, b1) = nodes[j + 1];
    b0 + (b1 - b0) * (x - x0) / (x1 - x0)
}

/// Antiderivative of the clamped piecewise-linear profile, anchored so the
/// returned value is exactly `integral from 0 to x`.
fn piecewise_gauge<T: Real>(nodes: &[(T, T)], x: T) -> T {
    let primitive = |t: T| -> T {
        // integral from nodes[0].0 to t
        let first = nodes[0];
        let last = nodes[nodes.len() - 1];
        if t <= first.0 {
            return first.1 * (t - first.0);
        }
        let mut acc = T::zero();
        for w in nodes.windows(2) {
            let (xa, ba) = w[0];
            let (xb, bb) = w[1];
            if t >= xb {
                acc += (ba + bb).half() * (xb - xa);
            } else {
                let dt = t - xa;
                let bt = ba + (bb - ba) * dt / (xb - xa);
                acc += (ba + bt).half() * dt;
                return acc;
            }
        }
        acc + last.1 * (t - last.0)
    };
    primitive(x) - primitive(T::zero())
}

/// Result of a pointwise domination test `|b| <= b_hat` on a sample grid.
#[derive(Clone, Copy, Debug)]
pub struct Domination<T> {
    pub holds: bool,
    /// Minimum of `b_hat - |b|` over the grid; negative iff `holds` is false.
    pub min_gap: T,
}

/// Check `|b(x)| <= b_hat(x)` on a shared sample grid. Profiles must admit a
/// common geometry: both `x2`-independent (grid values are `x1`) or both
/// radial (grid values are radii).
pub fn dominates<T: Real>(
    field: &FieldProfile<T>,
    field_hat: &FieldProfile<T>,
    grid: &[T],
) -> Result<Domination<T>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter(
            "domination check needs a non-empty sample grid".into(),
        ));
    }
    let along_x1 = field.is_x2_independent() && field_hat.is_x2_independent();
    let radial = field.is_radial() && field_hat.is_radial();
    if !along_x1 && !radial {
        return Err(Error::IncompatibleGeometry(format!(
            "no common geometry for {} and {}",
            field.label(),
            field_hat.label()
        )));
    }
    let mut min_gap = T::infinity();
    for &s in grid {
        let (b, bh) = if along_x1 {
            (field.eval_x1(s)?, field_hat.eval_x1(s)?)
        } else {
            (field.eval_r(s)?, field_hat.eval_r(s)?)
        };
        min_gap = min_gap.min(bh - b.abs());
    }
    Ok(Domination {
        holds: min_gap >= T::zero(),
        min_gap,
    })
}

/// Gauge data for one field with a pinned quadrature tolerance.
#[derive(Clone)]
pub struct GaugeData<T> {
    field: FieldProfile<T>,
    quad_tol: T,
}

impl<T: Real> GaugeData<T> {
    pub fn new(field: FieldProfile<T>) -> Self {
        GaugeData {
            field,
            quad_tol: default_quad_tol(),
        }
    }

    pub fn with_tol(field: FieldProfile<T>, quad_tol: T) -> Self {
        GaugeData { field, quad_tol }
    }

    pub fn field(&self) -> &FieldProfile<T> {
        &self.field
    }

    pub fn a2(&self, x1: T) -> Result<T> {
        self.field.gauge_a2_tol(x1, self.quad_tol)
    }

    pub fn flux(&self, r: T) -> Result<T> {
        self.field.poincare_flux_tol(r, self.quad_tol)
    }
}

#[derive(Clone)]
enum PotKind<T> {
    Zero,
    /// `omega^2 s^2 / 2`.
    Oscillator { omega: T },
    /// Regularized attractive well `-g / sqrt(s^2 + lambda^2)`.
    Coulomb { g: T, lambda: T },
    Custom {
        f: ProfileFn<T>,
        geometry: Geometry,
        lower_bound: T,
        label: String,
    },
}

/// A scalar potential profile. The presets are one-dimensional profiles that
/// each backend interprets in its own geometry (`s = x1` for fibered methods,
/// `s = r` for the radial method); custom profiles pin a geometry.
#[derive(Clone)]
pub struct PotentialProfile<T> {
    kind: PotKind<T>,
}

impl<T: Real> PotentialProfile<T> {
    pub fn zero() -> Self {
        Self { kind: PotKind::Zero }
    }

    pub fn oscillator(omega: T) -> Result<Self> {
        require_finite(omega, "oscillator frequency")?;
        if omega < T::zero() {
            return Err(Error::InvalidParameter(
                "oscillator frequency must be non-negative".into(),
            ));
        }
        Ok(Self {
            kind: PotKind::Oscillator { omega },
        })
    }

    pub fn coulomb(g: T, lambda: T) -> Result<Self> {
        require_positive(g, "coulomb coupling")?;
        require_positive(lambda, "coulomb regularization length")?;
        Ok(Self {
            kind: PotKind::Coulomb { g, lambda },
        })
    }

    pub fn custom(
        f: impl Fn(T) -> T + Send + Sync + 'static,
        geometry: Geometry,
        lower_bound: T,
        label: impl Into<String>,
    ) -> Self {
        Self {
            kind: PotKind::Custom {
                f: Arc::new(f),
                geometry,
                lower_bound,
                label: label.into(),
            },
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            PotKind::Zero => "zero".into(),
            PotKind::Oscillator { omega } => format!("oscillator(omega={omega})"),
            PotKind::Coulomb { g, lambda } => format!("coulomb(g={g}, lambda={lambda})"),
            PotKind::Custom { label, .. } => format!("custom({label})"),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PotKind::Zero)
    }

    /// Oscillator frequency when the profile is exactly the oscillator preset.
    pub fn oscillator_omega(&self) -> Option<T> {
        match &self.kind {
            PotKind::Zero => Some(T::zero()),
            PotKind::Oscillator { omega } => Some(*omega),
            _ => None,
        }
    }

    pub fn is_x2_independent(&self) -> bool {
        match &self.kind {
            PotKind::Zero | PotKind::Oscillator { .. } | PotKind::Coulomb { .. } => true,
            PotKind::Custom { geometry, .. } => *geometry == Geometry::AlongX1,
        }
    }

    pub fn is_radial(&self) -> bool {
        match &self.kind {
            PotKind::Zero | PotKind::Oscillator { .. } | PotKind::Coulomb { .. } => true,
            PotKind::Custom { geometry, .. } => *geometry == Geometry::Radial,
        }
    }

    pub fn eval_x1(&self, x1: T) -> Result<T> {
        match &self.kind {
            PotKind::Zero => Ok(T::zero()),
            PotKind::Oscillator { omega } => Ok(*omega * *omega * x1 * x1 * T::of(0.5)),
            PotKind::Coulomb { g, lambda } => {
                Ok(-*g / (x1 * x1 + *lambda * *lambda).sqrt())
            }
            PotKind::Custom { f, geometry, .. } => {
                if *geometry != Geometry::AlongX1 {
                    return Err(Error::IncompatibleGeometry(
                        "radial custom potential evaluated along x1".into(),
                    ));
                }
                Ok(f(x1))
            }
        }
    }

    pub fn eval_r(&self, r: T) -> Result<T> {
        if r < T::zero() {
            return Err(Error::NegativeRadius(r.as_f64()));
        }
        match &self.kind {
            PotKind::Zero => Ok(T::zero()),
            PotKind::Oscillator { omega } => Ok(*omega * *omega * r * r * T::of(0.5)),
            PotKind::Coulomb { g, lambda } => Ok(-*g / (r * r + *lambda * *lambda).sqrt()),
            PotKind::Custom { f, geometry, .. } => {
                if *geometry != Geometry::Radial {
                    return Err(Error::IncompatibleGeometry(
                        "x1 custom potential evaluated radially".into(),
                    ));
                }
                Ok(f(r))
            }
        }
    }

    /// A certified lower bound on the potential over its domain. Exact for
    /// every preset (`-g/lambda` for the regularized well).
    pub fn lower_bound(&self) -> T {
        match &self.kind {
            PotKind::Zero | PotKind::Oscillator { .. } => T::zero(),
            PotKind::Coulomb { g, lambda } => -*g / *lambda,
            PotKind::Custom { lower_bound, .. } => *lower_bound,
        }
    }
}

/// Check `v(x) <= v_hat(x)` on a sample grid (shared geometry rules as
/// [`dominates`]).
pub fn potential_dominates<T: Real>(
    pot: &PotentialProfile<T>,
    pot_hat: &PotentialProfile<T>,
    grid: &[T],
) -> Result<Domination<T>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter(
            "potential ordering check needs a non-empty sample grid".into(),
        ));
    }
    let along_x1 = pot.is_x2_independent() && pot_hat.is_x2_independent();
    let radial = pot.is_radial() && pot_hat.is_radial();
    if !along_x1 && !radial {
        return Err(Error::IncompatibleGeometry(format!(
            "no common geometry for {} and {}",
            pot.label(),
            pot_hat.label()
        )));
    }
    let mut min_gap = T::infinity();
    for &s in grid {
        let (v, vh) = if along_x1 {
            (pot.eval_x1(s)?, pot_hat.eval_x1(s)?)
        } else {
            (pot.eval_r(s)?, pot_hat.eval_r(s)?)
        };
        min_gap = min_gap.min(vh - v);
    }
    Ok(Domination {
        holds: min_gap >= T::zero(),
        min_gap,
    })
}
