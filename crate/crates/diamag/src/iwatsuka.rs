use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Flagged, Flags, Result};
use crate::fields::{FieldProfile, PotentialProfile};
use crate::point::Point;
use crate::scalar::Real;
use crate::tridiag::SymTridiag;

/// Spectral backend for fields and potentials that depend on `x1` only.
///
/// The problem then fibers over the conserved transverse momentum `k`: each
/// fiber is a 1D operator `p^2/2 + (k - a2(x1))^2/2 + v(x1)` discretized on a
/// node grid with Dirichlet walls just outside, and the planar kernel is the
/// `k`-integral of fiber heat kernels times the transverse phase.

/// Relative floor under which a thermal mode weight is considered zero.
const THERMAL_REL_FLOOR: f64 = 1e-14;
/// Energy window above the fiber potential minimum that the truncation box
/// must confine: covers the thermal window plus zero-point margin.
const WALL_MARGIN: f64 = 15.0;
/// Hard cap on modes kept per fiber.
const MAX_MODES: usize = 512;

/// Uniform node grid on `[x_min, x_max]`; Dirichlet boundary sits one
/// spacing outside the end nodes, so every node is an unknown.
#[derive(Clone, Copy, Debug)]
pub struct Grid1D<T> {
    pub x_min: T,
    pub x_max: T,
    pub n_points: usize,
}

impl<T: Real> Grid1D<T> {
    pub fn new(x_min: T, x_max: T, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::InvalidParameter(
                "grid needs finite x_min < x_max".into(),
            ));
        }
        if n_points < 3 {
            return Err(Error::GridTooCoarse(format!(
                "grid needs at least 3 points, got {n_points}"
            )));
        }
        Ok(Grid1D { x_min, x_max, n_points })
    }

    pub fn h(&self) -> T {
        (self.x_max - self.x_min) / T::of((self.n_points - 1) as f64)
    }

    pub fn node(&self, i: usize) -> T {
        self.x_min + T::of(i as f64) * self.h()
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }

    /// Nearest node index and the snap distance to it.
    pub fn snap(&self, x: T) -> (usize, T) {
        let raw = ((x - self.x_min) / self.h()).round();
        let i = raw
            .max(T::zero())
            .min(T::of((self.n_points - 1) as f64))
            .as_f64() as usize;
        (i, (x - self.node(i)).abs())
    }
}

/// One fiber operator at transverse momentum `k`, discretized over the full
/// master grid: `diag[i] = 1/h^2 + (k - a2(x_i))^2/2 + v(x_i)`,
/// `off = -1/(2 h^2)`.
#[derive(Clone, Debug)]
pub struct FiberOperator<T> {
    pub k: T,
    pub diag: Vec<T>,
    pub off: T,
}

fn require_fiberable<T: Real>(
    field: &FieldProfile<T>,
    pot: &PotentialProfile<T>,
) -> Result<()> {
    if !field.is_x2_independent() {
        return Err(Error::IncompatibleGeometry(format!(
            "{} is not translation invariant along x2",
            field.label()
        )));
    }
    if !pot.is_x2_independent() {
        return Err(Error::IncompatibleGeometry(format!(
            "{} is not translation invariant along x2",
            pot.label()
        )));
    }
    Ok(())
}

/// Gauge and potential sampled on the master grid, shared across fibers.
fn sample_profiles<T: Real>(
    field: &FieldProfile<T>,
    pot: &PotentialProfile<T>,
    grid: &Grid1D<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    require_fiberable(field, pot)?;
    let mut a2 = Vec::with_capacity(grid.n_points);
    let mut v = Vec::with_capacity(grid.n_points);
    let lb = pot.lower_bound();
    let lb_slack = T::of(1e-9) * (T::one() + lb.abs());
    for i in 0..grid.n_points {
        let x = grid.node(i);
        a2.push(field.gauge_a2(x)?);
        let vi = pot.eval_x1(x)?;
        if !vi.is_finite() {
            return Err(Error::NonFinite(format!("potential at x1 = {x}")));
        }
        if vi < lb - lb_slack {
            return Err(Error::InvalidParameter(format!(
                "potential value {vi} at x1 = {x} violates its declared lower bound {lb}"
            )));
        }
        v.push(vi);
    }
    Ok((a2, v))
}

pub fn build_fiber<T: Real>(
    field: &FieldProfile<T>,
    pot: &PotentialProfile<T>,
    k: T,
    grid: &Grid1D<T>,
) -> Result<FiberOperator<T>> {
    let (a2, v) = sample_profiles(field, pot, grid)?;
    Ok(build_fiber_from_samples(k, &a2, &v, grid.h()))
}

fn build_fiber_from_samples<T: Real>(k: T, a2: &[T], v: &[T], h: T) -> FiberOperator<T> {
    let inv_h2 = (h * h).recip();
    let diag = a2
        .iter()
        .zip(v.iter())
        .map(|(&a, &vi)| {
            let u = k - a;
            inv_h2 + u * u.half() + vi
        })
        .collect();
    FiberOperator {
        k,
        diag,
        off: -inv_h2.half(),
    }
}

/// Thermally relevant eigenpairs of one fiber. Modes are normalized with the
/// grid weight (`sum phi^2 h = 1`) and stored on the truncation sub-box;
/// `x0` is the coordinate of the first stored node.
#[derive(Clone, Debug)]
pub struct EigenSystem<T> {
    pub k: T,
    pub energies: Vec<T>,
    pub modes: Vec<Vec<T>>,
    pub x0: T,
    pub h: T,
    pub offset: usize,
    pub box_edge: bool,
}

/// Sub-box of the master grid confining everything below `w_min + margin`.
fn sub_box<T: Real>(w: &[T], margin: T) -> (usize, usize, bool) {
    let n = w.len();
    let thresh = w.iter().copied().fold(T::infinity(), T::min) + margin;
    let mut lo = n;
    let mut hi = 0;
    for (i, &wi) in w.iter().enumerate() {
        if wi <= thresh {
            lo = lo.min(i);
            hi = hi.max(i);
        }
    }
    let box_edge = w[0] <= thresh || w[n - 1] <= thresh;
    let pad = ((hi - lo + 1) / 10).max(3);
    (lo.saturating_sub(pad), (hi + pad).min(n - 1), box_edge)
}

pub fn solve_fiber<T: Real>(op: &FiberOperator<T>, grid: &Grid1D<T>, beta: T) -> Result<EigenSystem<T>> {
    if !(beta.is_finite() && beta > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature must be positive, got {beta}"
        )));
    }
    let h = grid.h();
    let inv_h2 = (h * h).recip();
    let w: Vec<T> = op.diag.iter().map(|&d| d - inv_h2).collect();
    let margin = T::of(40.0) / beta + T::of(WALL_MARGIN);
    let (lo, hi, box_edge) = sub_box(&w, margin);

    let sub = SymTridiag::new(
        op.diag[lo..=hi].to_vec(),
        vec![op.off; hi - lo],
    )?;
    let e0 = sub.lowest_eigenvalue();
    let cutoff = e0 + T::of(-THERMAL_REL_FLOOR.ln()) / beta;
    let energies = sub.eigenvalues_below(cutoff, MAX_MODES);

    let scale = energies
        .last()
        .map(|e| e.abs())
        .unwrap_or(T::one())
        .max(T::one());
    let cluster = T::of(1e-7) * scale;
    // Gram-Schmidt inside the eigensolver needs l2-normalized vectors; the
    // grid weight is applied only after all vectors are found.
    let mut raw: Vec<Vec<T>> = Vec::with_capacity(energies.len());
    for (j, &lam) in energies.iter().enumerate() {
        let against: Vec<&[T]> = energies[..j]
            .iter()
            .enumerate()
            .filter(|(_, &lj)| (lj - lam).abs() < cluster)
            .map(|(i, _)| raw[i].as_slice())
            .collect();
        raw.push(sub.eigenvector(lam, &against));
    }
    let inv_sqrt_h = h.sqrt().recip();
    let modes: Vec<Vec<T>> = raw
        .into_iter()
        .map(|mut v| {
            for x in v.iter_mut() {
                *x *= inv_sqrt_h;
            }
            v
        })
        .collect();

    Ok(EigenSystem {
        k: op.k,
        energies,
        modes,
        x0: grid.node(lo),
        h,
        offset: lo,
        box_edge,
    })
}

/// Fiber heat kernel value with a conservative truncation bound.
#[derive(Clone, Copy, Debug)]
pub struct FiberHeat<T> {
    pub value: T,
    pub truncation_bound: T,
}

pub fn heat_kernel_fiber<T: Real>(
    es: &EigenSystem<T>,
    beta: T,
    x1: T,
    y1: T,
    n_modes: Option<usize>,
) -> FiberHeat<T> {
    let keep = n_modes.unwrap_or(es.energies.len()).min(es.energies.len());
    let local = |x: T| -> Option<usize> {
        let j = ((x - es.x0) / es.h).round();
        if j < -T::of(0.5) {
            return None;
        }
        let j = j.as_f64() as usize;
        (j < es.modes.first().map_or(0, Vec::len)).then_some(j)
    };
    let (ix, iy) = (local(x1), local(y1));
    let mut value = T::zero();
    if let (Some(ix), Some(iy)) = (ix, iy) {
        for m in 0..keep {
            value += (-beta * es.energies[m]).exp() * es.modes[m][ix] * es.modes[m][iy];
        }
    }
    let truncation_bound = if keep < es.energies.len() {
        (-beta * es.energies[keep]).exp() / es.h
    } else {
        // everything below the thermal floor was dropped at solve time
        es.energies
            .first()
            .map(|&e0| (-beta * e0).exp() * T::of(THERMAL_REL_FLOOR) / es.h)
            .unwrap_or(T::zero())
    };
    FiberHeat { value, truncation_bound }
}

/// Discretization settings for the fibered backend.
#[derive(Clone, Copy, Debug)]
pub struct SpectralSettings<T> {
    pub grid: Grid1D<T>,
    pub k_half_width: T,
    pub k_points: usize,
}

impl<T: Real> SpectralSettings<T> {
    pub fn new(grid: Grid1D<T>, k_half_width: T, k_points: usize) -> Result<Self> {
        if !(k_half_width.is_finite() && k_half_width > T::zero()) {
            return Err(Error::InvalidParameter(
                "k window half-width must be positive".into(),
            ));
        }
        if k_points < 3 {
            return Err(Error::GridTooCoarse(format!(
                "k grid needs at least 3 points, got {k_points}"
            )));
        }
        Ok(SpectralSettings { grid, k_half_width, k_points })
    }
}

struct FiberData<T> {
    energies: Vec<T>,
    /// Mode values at the registered nodes: `at[slot][mode]`.
    at: Vec<Vec<T>>,
}

/// Planar heat-kernel evaluator for one `(field, potential, beta)` problem.
///
/// Fiber eigensystems are solved once, in parallel over the momentum grid,
/// and only their values at the registered `x1` nodes are retained, so any
/// number of kernel queries on those nodes is cheap afterwards. Queries are
/// answered at the nearest grid node; `snap` reports the distance moved.
pub struct SpectralEvaluator<T> {
    beta: T,
    grid: Grid1D<T>,
    k_grid: Vec<T>,
    dk: T,
    nodes: Vec<usize>,
    fibers: Vec<FiberData<T>>,
    flags: Flags,
}

impl<T: Real> SpectralEvaluator<T> {
    pub fn build(
        field: &FieldProfile<T>,
        pot: &PotentialProfile<T>,
        beta: T,
        settings: &SpectralSettings<T>,
        query_x1: &[T],
    ) -> Result<Self> {
        if !(beta.is_finite() && beta > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "inverse temperature must be positive, got {beta}"
            )));
        }
        if query_x1.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one query node must be registered".into(),
            ));
        }
        let grid = settings.grid;
        let (a2, v) = sample_profiles(field, pot, &grid)?;

        let mut nodes: Vec<usize> = query_x1.iter().map(|&x| grid.snap(x).0).collect();
        nodes.sort_unstable();
        nodes.dedup();

        let nk = settings.k_points;
        let dk = T::of(2.0) * settings.k_half_width / T::of((nk - 1) as f64);
        let k_grid: Vec<T> = (0..nk)
            .map(|i| -settings.k_half_width + T::of(i as f64) * dk)
            .collect();

        let h = grid.h();
        let fibers: Vec<(FiberData<T>, bool)> = k_grid
            .par_iter()
            .map(|&k| -> Result<(FiberData<T>, bool)> {
                let op = build_fiber_from_samples(k, &a2, &v, h);
                let es = solve_fiber(&op, &grid, beta)?;
                let span = es.modes.first().map_or(0, Vec::len);
                let at = nodes
                    .iter()
                    .map(|&i| {
                        es.modes
                            .iter()
                            .map(|m| {
                                if i >= es.offset && i - es.offset < span {
                                    m[i - es.offset]
                                } else {
                                    T::zero()
                                }
                            })
                            .collect::<Vec<T>>()
                    })
                    .collect();
                Ok((
                    FiberData { energies: es.energies, at },
                    es.box_edge,
                ))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut flags = Flags::default();
        flags.box_edge = fibers.iter().any(|(_, be)| *be);
        let fibers: Vec<FiberData<T>> = fibers.into_iter().map(|(f, _)| f).collect();

        // relative decay of the fiber diagonal at the momentum-window ends
        for slot in 0..nodes.len() {
            let diag_of = |f: &FiberData<T>| -> T {
                f.energies
                    .iter()
                    .zip(f.at[slot].iter())
                    .map(|(&e, &p)| (-beta * e).exp() * p * p)
                    .sum()
            };
            let peak = fibers.iter().map(diag_of).fold(T::zero(), T::max);
            let edge = diag_of(&fibers[0]).max(diag_of(&fibers[nk - 1]));
            if peak > T::zero() && edge > T::of(1e-12) * peak {
                flags.k_window_edge = true;
            }
        }

        Ok(SpectralEvaluator { beta, grid, k_grid, dk, nodes, fibers, flags })
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn build_flags(&self) -> Flags {
        self.flags
    }

    /// Distance a query at `x1` moves when snapped to its master node.
    pub fn snap_distance(&self, x1: T) -> T {
        self.grid.snap(x1).1
    }

    fn slot(&self, x1: T) -> Result<usize> {
        let (i, _) = self.grid.snap(x1);
        self.nodes
            .binary_search(&i)
            .map_err(|_| Error::QueryNotRegistered(format!("x1 = {x1}")))
    }

    /// Fiber heat-kernel values `f_k(x1, y1)` over the whole momentum grid.
    pub fn fiber_values(&self, x1: T, y1: T) -> Result<Vec<T>> {
        let sx = self.slot(x1)?;
        let sy = self.slot(y1)?;
        Ok(self
            .fibers
            .iter()
            .map(|f| {
                f.energies
                    .iter()
                    .zip(f.at[sx].iter().zip(f.at[sy].iter()))
                    .map(|(&e, (&px, &py))| (-self.beta * e).exp() * px * py)
                    .sum()
            })
            .collect())
    }

    /// Planar heat kernel at `(x, y)`; `x1`/`y1` must snap to registered
    /// nodes. Build-time quality flags are merged into the result.
    pub fn kernel(&self, x: Point<T>, y: Point<T>) -> Result<Flagged<Complex<T>>> {
        let fk = self.fiber_values(x.x1, y.x1)?;
        let d2 = x.x2 - y.x2;
        let mut flags = self.flags;
        if d2 != T::zero() && self.dk > T::PI() / (T::of(4.0) * d2.abs()) {
            flags.phase_resolution = true;
        }
        let nk = self.k_grid.len();
        let mut acc = Complex::new(T::zero(), T::zero());
        for (i, (&k, &f)) in self.k_grid.iter().zip(fk.iter()).enumerate() {
            let w = if i == 0 || i == nk - 1 {
                T::of(0.5)
            } else {
                T::one()
            };
            let phase = k * d2;
            acc += Complex::from_polar(w * f, phase);
        }
        let value = acc * self.dk / (T::of(2.0) * T::PI());
        Ok(Flagged::with(value, flags))
    }
}

/// One-shot planar kernel evaluation.
pub fn kernel_2d<T: Real>(
    field: &FieldProfile<T>,
    pot: &PotentialProfile<T>,
    beta: T,
    x: Point<T>,
    y: Point<T>,
    settings: &SpectralSettings<T>,
) -> Result<Flagged<Complex<T>>> {
    let ev = SpectralEvaluator::build(field, pot, beta, settings, &[x.x1, y.x1])?;
    ev.kernel(x, y)
}

/// Lowest fiber eigenvalue as a function of the transverse momentum.
#[derive(Clone, Debug)]
pub struct BandFunction<T> {
    pub k_grid: Vec<T>,
    pub e0: Vec<T>,
}

pub fn band_function<T: Real>(
    field: &FieldProfile<T>,
    pot: &PotentialProfile<T>,
    settings: &SpectralSettings<T>,
) -> Result<Flagged<BandFunction<T>>> {
    let grid = settings.grid;
    let (a2, v) = sample_profiles(field, pot, &grid)?;
    let nk = settings.k_points;
    let dk = T::of(2.0) * settings.k_half_width / T::of((nk - 1) as f64);
    let k_grid: Vec<T> = (0..nk)
        .map(|i| -settings.k_half_width + T::of(i as f64) * dk)
        .collect();
    let h = grid.h();
    let inv_h2 = (h * h).recip();
    // the walls only need to confine the ground state here
    let margin = T::of(WALL_MARGIN);

    let results: Vec<(T, bool)> = k_grid
        .par_iter()
        .map(|&k| -> Result<(T, bool)> {
            let op = build_fiber_from_samples(k, &a2, &v, h);
            let w: Vec<T> = op.diag.iter().map(|&d| d - inv_h2).collect();
            let (lo, hi, box_edge) = sub_box(&w, margin);
            let sub = SymTridiag::new(op.diag[lo..=hi].to_vec(), vec![op.off; hi - lo])?;
            Ok((sub.lowest_eigenvalue(), box_edge))
        })
        .collect::<Result<Vec<_>>>()?;

    let e0: Vec<T> = results.iter().map(|r| r.0).collect();
    let mut flags = Flags::default();
    flags.box_edge = results.iter().any(|r| r.1);

    let (argmin, &emin) = e0
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite energies"))
        .expect("non-empty band");
    let scale = emin.abs().max(T::one());
    let interior_min = e0[1..nk - 1]
        .iter()
        .copied()
        .fold(T::infinity(), T::min);
    if (argmin == 0 || argmin == nk - 1) && emin < interior_min - T::of(1e-10) * scale {
        flags.band_edge = true;
    }

    Ok(Flagged::with(BandFunction { k_grid, e0 }, flags))
}

/// Ground-state energy: minimum of the band function over the momentum window.
pub fn ground_state_energy<T: Real>(
    field: &FieldProfile<T>,
    pot: &PotentialProfile<T>,
    settings: &SpectralSettings<T>,
) -> Result<Flagged<T>> {
    let band = band_function(field, pot, settings)?;
    let e = band
        .value
        .e0
        .iter()
        .copied()
        .fold(T::infinity(), T::min);
    Ok(Flagged::with(e, band.flags))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn landau_fiber_diag(b: f64, beta: f64, k: f64, x1: f64) -> f64 {
        // closed-form fiber diagonal for a constant field
        (b / (2.0 * std::f64::consts::PI * (beta * b).sinh())).sqrt()
            * (-((beta * b / 2.0).tanh() / b) * (k - b * x1).powi(2)).exp()
    }

    #[test]
    fn grid_snapping() {
        let g = Grid1D::new(-1.0_f64, 1.0, 21).unwrap();
        assert!((g.h() - 0.1).abs() < 1e-15);
        let (i, d) = g.snap(0.234);
        assert_eq!(i, 12);
        assert!((d - 0.034).abs() < 1e-12);
        let (i, _) = g.snap(5.0);
        assert_eq!(i, 20);
        assert!(Grid1D::new(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn fiber_diag_matches_constant_field_closed_form() {
        let field = FieldProfile::constant(2.0).unwrap();
        let pot = PotentialProfile::zero();
        let grid = Grid1D::new(-10.0, 10.0, 2001).unwrap();
        let (b, beta, x1) = (2.0, 1.0, 0.3);
        for &k in &[b * x1, b * x1 + 0.8, b * x1 - 1.5] {
            let op = build_fiber(&field, &pot, k, &grid).unwrap();
            let es = solve_fiber(&op, &grid, beta).unwrap();
            let got = heat_kernel_fiber(&es, beta, x1, x1, None).value;
            let expect = landau_fiber_diag(b, beta, k, x1);
            assert!(
                (got - expect).abs() < 2e-4 * expect,
                "k={k}: {got} vs {expect}"
            );
            assert!(!es.box_edge);
        }
    }

    #[test]
    fn oscillator_fiber_energies() {
        // b = 0: fiber at momentum k is a hosted oscillator, e0 = omega/2 + k^2/2
        let field = FieldProfile::constant(0.0_f64).unwrap();
        let pot = PotentialProfile::oscillator(1.0).unwrap();
        let grid = Grid1D::new(-9.0, 9.0, 1201).unwrap();
        for &k in &[0.0, 1.0] {
            let op = build_fiber(&field, &pot, k, &grid).unwrap();
            let es = solve_fiber(&op, &grid, 1.0).unwrap();
            let expect = 0.5 + k * k / 2.0;
            assert!(
                (es.energies[0] - expect).abs() < 1e-4,
                "k={k}: {}",
                es.energies[0]
            );
        }
    }

    #[test]
    fn fiber_heat_kernel_matches_1d_oscillator() {
        let field = FieldProfile::constant(0.0_f64).unwrap();
        let pot = PotentialProfile::oscillator(1.0).unwrap();
        let grid = Grid1D::new(-9.0, 9.0, 1201).unwrap();
        let beta = 1.0;
        let op = build_fiber(&field, &pot, 0.0, &grid).unwrap();
        let es = solve_fiber(&op, &grid, beta).unwrap();
        // query points must sit on grid nodes (h = 0.015): off-node queries
        // snap and the snap offset, not the scheme, would dominate the error
        for &x in &[0.0, 0.6] {
            let got = heat_kernel_fiber(&es, beta, x, x, None).value;
            let expect = (1.0 / (2.0 * std::f64::consts::PI * beta.sinh())).sqrt()
                * (-(beta / 2.0f64).tanh() * x * x).exp();
            assert!((got - expect).abs() < 2e-4 * expect, "x={x}: {got} vs {expect}");
        }
    }

    #[test]
    fn truncating_modes_reports_a_bound() {
        let field = FieldProfile::constant(2.0_f64).unwrap();
        let pot = PotentialProfile::zero();
        let grid = Grid1D::new(-8.0, 8.0, 801).unwrap();
        let op = build_fiber(&field, &pot, 0.0, &grid).unwrap();
        let es = solve_fiber(&op, &grid, 1.0).unwrap();
        assert!(es.energies.len() > 2);
        let full = heat_kernel_fiber(&es, 1.0, 0.0, 0.0, None);
        let cut = heat_kernel_fiber(&es, 1.0, 0.0, 0.0, Some(2));
        assert!((full.value - cut.value).abs() <= cut.truncation_bound);
        assert!(cut.truncation_bound > full.truncation_bound);
    }

    #[test]
    fn landau_band_is_flat() {
        let field = FieldProfile::constant(2.0).unwrap();
        let pot = PotentialProfile::zero();
        let settings = SpectralSettings::new(
            Grid1D::new(-12.0, 12.0, 1201).unwrap(),
            6.0,
            25,
        )
        .unwrap();
        let band = band_function(&field, &pot, &settings).unwrap();
        let (lo, hi) = band
            .value
            .e0
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &e| {
                (l.min(e), h.max(e))
            });
        assert!(hi - lo < 1e-8 * hi, "band spread {}", hi - lo);
        assert!(!band.flags.band_edge);
        // value itself converges at O(h^2); coarse grid, loose tolerance
        assert!((lo - 1.0).abs() < 1e-3, "{lo}");
    }

    #[test]
    fn spectral_kernel_matches_exact_constant_field() {
        let field = FieldProfile::constant(2.0_f64).unwrap();
        let pot = PotentialProfile::zero();
        let beta = 1.0;
        let settings = SpectralSettings::new(
            Grid1D::new(-12.0, 12.0, 1201).unwrap(),
            12.0,
            193,
        )
        .unwrap();
        let x = Point::new(0.5, 0.3);
        let y = Point::new(-0.2, -0.8);
        let ev = SpectralEvaluator::build(&field, &pot, beta, &settings, &[x.x1, y.x1, 0.0])
            .unwrap();
        let p = crate::exact::MehlerParams::new(2.0, 0.0, beta).unwrap();

        let diag = ev.kernel(Point::origin(), Point::origin()).unwrap();
        let exact_diag = crate::exact::mehler_kernel(&p, Point::origin(), Point::origin());
        assert!(
            (diag.value.re - exact_diag.re).abs() < 1e-3 * exact_diag.re,
            "{} vs {}",
            diag.value.re,
            exact_diag.re
        );

        // gauge differs, so only moduli are comparable
        let off = ev.kernel(x, y).unwrap();
        let exact_off = crate::exact::mehler_kernel(&p, x, y);
        assert!(
            (off.value.norm() - exact_off.norm()).abs() < 1e-3 * exact_off.norm(),
            "{} vs {}",
            off.value.norm(),
            exact_off.norm()
        );
        assert!(!off.flags.any(), "{:?}", off.flags);
    }

    #[test]
    fn kernel_is_hermitian_and_x2_covariant() {
        let field = FieldProfile::<f64>::sine();
        let pot = PotentialProfile::zero();
        let settings = SpectralSettings::new(
            Grid1D::new(-9.0, 9.0, 601).unwrap(),
            7.0,
            81,
        )
        .unwrap();
        let ev = SpectralEvaluator::build(&field, &pot, 1.0, &settings, &[0.4, -1.1]).unwrap();
        let x = Point::new(0.4, 0.9);
        let y = Point::new(-1.1, -0.3);
        let kxy = ev.kernel(x, y).unwrap().value;
        let kyx = ev.kernel(y, x).unwrap().value;
        assert!((kxy.re - kyx.re).abs() < 1e-15);
        assert!((kxy.im + kyx.im).abs() < 1e-15);

        let shift = 2.5;
        let ks = ev
            .kernel(
                Point::new(x.x1, x.x2 + shift),
                Point::new(y.x1, y.x2 + shift),
            )
            .unwrap()
            .value;
        assert!((kxy - ks).norm() < 1e-15);
    }

    #[test]
    fn unregistered_query_is_an_error() {
        let field = FieldProfile::constant(1.0).unwrap();
        let pot = PotentialProfile::zero();
        let settings = SpectralSettings::new(
            Grid1D::new(-6.0, 6.0, 301).unwrap(),
            5.0,
            41,
        )
        .unwrap();
        let ev = SpectralEvaluator::build(&field, &pot, 1.0, &settings, &[0.0]).unwrap();
        assert!(ev.kernel(Point::origin(), Point::origin()).is_ok());
        assert!(ev
            .kernel(Point::new(3.0, 0.0), Point::origin())
            .is_err());
        assert!(ev.snap_distance(0.011) < 0.021);
    }

    #[test]
    fn narrow_k_window_is_flagged() {
        let field = FieldProfile::constant(0.2).unwrap();
        let pot = PotentialProfile::zero();
        let settings = SpectralSettings::new(
            Grid1D::new(-8.0, 8.0, 401).unwrap(),
            1.0,
            21,
        )
        .unwrap();
        let ev = SpectralEvaluator::build(&field, &pot, 1.0, &settings, &[0.0]).unwrap();
        assert!(ev.build_flags().k_window_edge);
    }

    #[test]
    fn coarse_phase_sampling_is_flagged() {
        let field = FieldProfile::constant(2.0).unwrap();
        let pot = PotentialProfile::zero();
        let settings = SpectralSettings::new(
            Grid1D::new(-8.0, 8.0, 401).unwrap(),
            8.0,
            41,
        )
        .unwrap();
        let ev = SpectralEvaluator::build(&field, &pot, 1.0, &settings, &[0.0]).unwrap();
        // dk = 0.4: fine at small separation, too coarse at d2 = 8
        let near = ev
            .kernel(Point::new(0.0, 0.5), Point::origin())
            .unwrap();
        assert!(!near.flags.phase_resolution);
        let far = ev.kernel(Point::new(0.0, 8.0), Point::origin()).unwrap();
        assert!(far.flags.phase_resolution);
    }

    #[test]
    fn tilted_potential_pushes_band_minimum_to_edge() {
        let field = FieldProfile::constant(2.0).unwrap();
        let pot = PotentialProfile::custom(|x: f64| -0.3 * x, crate::fields::Geometry::AlongX1, -5.0, "tilt");
        let settings = SpectralSettings::new(
            Grid1D::new(-8.0, 8.0, 401).unwrap(),
            2.0,
            25,
        )
        .unwrap();
        let band = band_function(&field, &pot, &settings).unwrap();
        assert!(band.flags.band_edge);
    }

    #[test]
    fn geometry_mismatch_is_rejected() {
        let radial = FieldProfile::gaussian_bump(1.0, 1.0, crate::fields::Geometry::Radial).unwrap();
        let pot = PotentialProfile::zero();
        let grid = Grid1D::new(-5.0, 5.0, 101).unwrap();
        assert!(build_fiber(&radial, &pot, 0.0, &grid).is_err());
    }
}
