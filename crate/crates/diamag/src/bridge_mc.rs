use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::free_kernel;
use crate::fields::{dominates, FieldProfile, PotentialProfile};
use crate::point::Point;
use crate::scalar::Real;

/// Path-integral backend: the kernel at `(x, y)` is the free Gaussian factor
/// times a Brownian-bridge average of the gauge phase, the gauge variance
/// damping, and the potential weight. Fields and potentials must depend on
/// `x1` only (the `x2` integral has been done exactly, which is what the
/// variance term encodes).
///
/// Reproducibility: samples are drawn from a counter-based generator, one
/// dedicated stream per sample index (stream id = index), so the estimate is
/// bit-identical for a given `(seed, n_samples, n_steps)` regardless of
/// thread count, and two estimates sharing a seed share their bridges
/// (common random numbers) point by point.
const BLOCK: u64 = 4096;

/// One Brownian bridge over `[0, beta]` on a uniform time grid; `values`
/// holds `n_steps + 1` positions with the endpoints pinned exactly.
#[derive(Clone, Debug)]
pub struct BridgePath<T> {
    pub beta: T,
    pub values: Vec<T>,
}

impl<T: Real> BridgePath<T> {
    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    /// Straight line from `x1` to `y1`: the zero-noise bridge, handy as a
    /// deterministic reference path.
    pub fn straight(x1: T, y1: T, beta: T, n_steps: usize) -> Result<Self> {
        check_bridge_args(beta, n_steps)?;
        let n = T::of(n_steps as f64);
        let values = (0..=n_steps)
            .map(|j| x1 + (y1 - x1) * T::of(j as f64) / n)
            .collect();
        Ok(BridgePath { beta, values })
    }
}

fn check_bridge_args<T: Real>(beta: T, n_steps: usize) -> Result<()> {
    if !(beta.is_finite() && beta > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature must be positive, got {beta}"
        )));
    }
    if n_steps < 2 {
        return Err(Error::InvalidParameter(format!(
            "a bridge needs at least 2 time steps, got {n_steps}"
        )));
    }
    Ok(())
}

/// Draw one Brownian bridge from `x1` at time 0 to `y1` at time `beta` by
/// sequential conditioned increments: given the position `w` at time `tau`,
/// the next position is Gaussian with mean `w + (y1 - w) dt / (beta - tau)`
/// and variance `dt (beta - tau - dt) / (beta - tau)`.
pub fn sample_bridge<T, R>(x1: T, y1: T, beta: T, n_steps: usize, rng: &mut R) -> Result<BridgePath<T>>
where
    T: Real,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    check_bridge_args(beta, n_steps)?;
    if !(x1.is_finite() && y1.is_finite()) {
        return Err(Error::InvalidParameter("bridge endpoints must be finite".into()));
    }
    let dt = beta / T::of(n_steps as f64);
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut w = x1;
    values.push(w);
    for j in 0..n_steps - 1 {
        let remaining = beta - dt * T::of(j as f64);
        let mean = w + (y1 - w) * dt / remaining;
        let var = dt * (remaining - dt) / remaining;
        let z: T = rng.sample(StandardNormal);
        w = mean + var.sqrt() * z;
        values.push(w);
    }
    values.push(y1);
    Ok(BridgePath { beta, values })
}

/// Time average and variance of `f` along a path, by trapezoid weights on
/// the uniform time grid (ends weighted half).
#[derive(Clone, Copy, Debug)]
pub struct PathFunctionals<T> {
    pub mean: T,
    pub variance: T,
}

fn functionals_of_values<T: Real>(vals: &[T]) -> Result<PathFunctionals<T>> {
    let n = vals.len() - 1;
    let inv_n = T::of(n as f64).recip();
    let half_end = inv_n.half();
    let weight = |j: usize| if j == 0 || j == n { half_end } else { inv_n };
    let mut mean = T::zero();
    for (j, &f) in vals.iter().enumerate() {
        mean += weight(j) * f;
    }
    let mut var = T::zero();
    for (j, &f) in vals.iter().enumerate() {
        let d = f - mean;
        var += weight(j) * d * d;
    }
    if var < T::zero() {
        if var >= T::of(-1e-14) {
            var = T::zero();
        } else {
            return Err(Error::NonFinite(format!(
                "path variance came out negative: {var}"
            )));
        }
    }
    Ok(PathFunctionals { mean, variance: var })
}

pub fn path_functionals<T: Real>(
    f: impl Fn(T) -> T,
    w: &BridgePath<T>,
) -> Result<PathFunctionals<T>> {
    let vals: Vec<T> = w.values.iter().map(|&x| f(x)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("path functional integrand".into()));
    }
    functionals_of_values(&vals)
}

pub fn path_mean<T: Real>(f: impl Fn(T) -> T, w: &BridgePath<T>) -> Result<T> {
    path_functionals(f, w).map(|p| p.mean)
}

pub fn path_variance<T: Real>(f: impl Fn(T) -> T, w: &BridgePath<T>) -> Result<T> {
    path_functionals(f, w).map(|p| p.variance)
}

/// Monte Carlo kernel estimate with its statistical error.
#[derive(Clone, Copy, Debug)]
pub struct MCEstimate<T> {
    pub value: Complex<T>,
    /// Standard error of the mean, worst of the real and imaginary
    /// components, in the same units as `value`.
    pub std_error: T,
    pub n_samples: u64,
    pub seed: u64,
}

struct BlockStats<T> {
    n: u64,
    mean: Complex<T>,
    m2: Complex<T>, // component-wise sums of squared deviations
}

fn block_stats<T: Real>(vals: &[Complex<T>], _offset: u64) -> BlockStats<T> {
    let n = vals.len() as u64;
    let nt = T::of(n as f64);
    let mut mean = Complex::new(T::zero(), T::zero());
    for v in vals {
        mean += *v;
    }
    mean /= nt;
    let mut m2 = Complex::new(T::zero(), T::zero());
    for v in vals {
        let dr = v.re - mean.re;
        let di = v.im - mean.im;
        m2.re += dr * dr;
        m2.im += di * di;
    }
    BlockStats { n, mean, m2 }
}

fn merge_stats<T: Real>(a: BlockStats<T>, b: BlockStats<T>) -> BlockStats<T> {
    if a.n == 0 {
        return b;
    }
    let na = T::of(a.n as f64);
    let nb = T::of(b.n as f64);
    let n = na + nb;
    let dr = b.mean.re - a.mean.re;
    let di = b.mean.im - a.mean.im;
    BlockStats {
        n: a.n + b.n,
        mean: Complex::new(
            a.mean.re + dr * nb / n,
            a.mean.im + di * nb / n,
        ),
        m2: Complex::new(
            a.m2.re + b.m2.re + dr * dr * na * nb / n,
            a.m2.im + b.m2.im + di * di * na * nb / n,
        ),
    }
}

/// Generator for sample `index` of run `seed`: one ChaCha8 stream per
/// sample, so any sample is reproducible in isolation and estimates do not
/// depend on how samples are scheduled across threads.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Path-integral estimate of the heat kernel at `(x, y)`.
pub fn mc_kernel<T>(
    field: &FieldProfile<T>,
    pot: &PotentialProfile<T>,
    beta: T,
    x: Point<T>,
    y: Point<T>,
    n_steps: usize,
    n_samples: u64,
    seed: u64,
) -> Result<MCEstimate<T>>
where
    T: Real,
    StandardNormal: Distribution<T>,
{
    check_bridge_args(beta, n_steps)?;
    if n_samples < 2 {
        return Err(Error::InvalidParameter(format!(
            "standard errors need at least 2 samples, got {n_samples}"
        )));
    }
    if !field.is_x2_independent() || !pot.is_x2_independent() {
        return Err(Error::IncompatibleGeometry(
            "the path-integral backend needs x2-independent profiles".into(),
        ));
    }
    let prefactor = free_kernel(beta, x, y)?;
    let d2 = x.x2 - y.x2;
    let half_beta = beta.half();
    let skip_pot = pot.is_zero();

    let n_blocks = n_samples.div_ceil(BLOCK);
    let blocks: Vec<BlockStats<T>> = (0..n_blocks)
        .into_par_iter()
        .map(|blk| -> Result<BlockStats<T>> {
            let start = blk * BLOCK;
            let end = (start + BLOCK).min(n_samples);
            let mut vals = Vec::with_capacity((end - start) as usize);
            let mut a2_buf: Vec<T> = Vec::with_capacity(n_steps + 1);
            for idx in start..end {
                let mut rng = sample_rng(seed, idx);
                let w = sample_bridge(x.x1, y.x1, beta, n_steps, &mut rng)?;
                a2_buf.clear();
                for &wj in &w.values {
                    a2_buf.push(field.gauge_a2(wj)?);
                }
                let gauge = functionals_of_values(&a2_buf)?;
                let mut exponent = -half_beta * gauge.variance;
                if !skip_pot {
                    let vpot = path_mean(|s| pot.eval_x1(s).unwrap_or(T::nan()), &w)?;
                    exponent -= beta * vpot;
                }
                let weight = exponent.exp();
                if !weight.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "sample {idx} produced weight exp({exponent})"
                    )));
                }
                vals.push(Complex::from_polar(weight, d2 * gauge.mean));
            }
            Ok(block_stats(&vals, start))
        })
        .collect::<Result<Vec<_>>>()?;

    // merge in ascending block order: deterministic for any thread count
    let total = blocks.into_iter().fold(
        BlockStats {
            n: 0,
            mean: Complex::new(T::zero(), T::zero()),
            m2: Complex::new(T::zero(), T::zero()),
        },
        merge_stats,
    );

    let n = T::of(total.n as f64);
    let var_re = total.m2.re / (n - T::one());
    let var_im = total.m2.im / (n - T::one());
    let se = (var_re.max(var_im) / n).sqrt();
    Ok(MCEstimate {
        value: total.mean * prefactor,
        std_error: prefactor * se,
        n_samples: total.n,
        seed,
    })
}

/// Pathwise gauge-variance gap `var(a2_hat) - var(a2)` along one bridge.
/// The precondition `|b| <= b_hat` is validated on the path's own visited
/// points; under it the gap is non-negative up to roundoff for every path.
pub fn variance_comparison<T: Real>(
    field: &FieldProfile<T>,
    field_hat: &FieldProfile<T>,
    w: &BridgePath<T>,
) -> Result<T> {
    let dom = dominates(field, field_hat, &w.values)?;
    if !dom.holds {
        return Err(Error::DominationFailed(format!(
            "|b| <= b_hat fails on the path (worst gap {:e})",
            dom.min_gap.as_f64()
        )));
    }
    let g = path_functionals(|s| field.gauge_a2(s).unwrap_or(T::nan()), w)?;
    let gh = path_functionals(|s| field_hat.gauge_a2(s).unwrap_or(T::nan()), w)?;
    Ok(gh.variance - g.variance)
}
