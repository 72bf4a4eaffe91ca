//! Randomized invariants of the closed-form layer and the bridge sampler,
//! plus the deterministic reproducibility guarantees the check reports
//! depend on.

use proptest::prelude::*;

use diamag::bridge_mc::{mc_kernel, path_variance, sample_bridge, sample_rng};
use diamag::checks::{check_theorem2, PairGrid, Theorem2Backend};
use diamag::exact::{free_kernel, improved_bound_rhs, loss_thaller_rhs, mehler_kernel};
use diamag::iwatsuka::kernel_2d;
use diamag::{
    FieldProfile64, Grid1D64, MehlerParams64, Point64, PotentialProfile64, SpectralSettings64,
};

fn pt(x1: f64, x2: f64) -> Point64 {
    Point64::new(x1, x2)
}

proptest! {
    /// Turning on any constant field or oscillator only shrinks the kernel
    /// modulus below the free Gaussian.
    #[test]
    fn kernel_modulus_below_free(
        b in -5.0..5.0f64,
        omega in 0.0..3.0f64,
        beta in 0.1..4.0f64,
        x1 in -3.0..3.0f64,
        x2 in -3.0..3.0f64,
        y1 in -3.0..3.0f64,
        y2 in -3.0..3.0f64,
    ) {
        let p = MehlerParams64::new(b, omega, beta).unwrap();
        let (x, y) = (pt(x1, x2), pt(y1, y2));
        let modulus = mehler_kernel(&p, x, y).norm();
        let free = free_kernel(beta, x, y).unwrap();
        prop_assert!(modulus <= free * (1.0 + 1e-12), "{modulus} vs {free}");
    }

    /// The kernel is hermitian: swapping arguments conjugates it.
    #[test]
    fn kernel_is_hermitian(
        b in -5.0..5.0f64,
        omega in 0.0..3.0f64,
        beta in 0.1..4.0f64,
        x1 in -3.0..3.0f64,
        x2 in -3.0..3.0f64,
        y1 in -3.0..3.0f64,
        y2 in -3.0..3.0f64,
    ) {
        let p = MehlerParams64::new(b, omega, beta).unwrap();
        let kxy = mehler_kernel(&p, pt(x1, x2), pt(y1, y2));
        let kyx = mehler_kernel(&p, pt(y1, y2), pt(x1, x2));
        prop_assert_eq!(kxy.re, kyx.re);
        prop_assert_eq!(kxy.im, -kyx.im);
    }

    /// The anisotropic Gaussian bound is never looser than the isotropic
    /// one, and the isotropic bound never exceeds the free kernel.
    #[test]
    fn bound_hierarchy(
        b in 0.01..4.0f64,
        beta in 0.1..4.0f64,
        x1 in -3.0..3.0f64,
        x2 in -3.0..3.0f64,
        y1 in -3.0..3.0f64,
        y2 in -3.0..3.0f64,
    ) {
        let (x, y) = (pt(x1, x2), pt(y1, y2));
        let improved = improved_bound_rhs(b, beta, x, y).unwrap();
        let isotropic = loss_thaller_rhs(b, beta, x, y).unwrap();
        let free = free_kernel(beta, x, y).unwrap();
        prop_assert!(improved <= isotropic * (1.0 + 1e-12));
        prop_assert!(isotropic <= free * (1.0 + 1e-12));
    }

    /// Bridges hit their endpoints exactly, whatever the stream.
    #[test]
    fn bridge_endpoints_pinned(
        x1 in -5.0..5.0f64,
        y1 in -5.0..5.0f64,
        beta in 0.05..8.0f64,
        n_steps in 2usize..200,
        seed in any::<u64>(),
        index in 0u64..1000,
    ) {
        let w = sample_bridge(x1, y1, beta, n_steps, &mut sample_rng(seed, index)).unwrap();
        prop_assert_eq!(w.values[0], x1);
        prop_assert_eq!(w.values[n_steps], y1);
        prop_assert!(w.values.iter().all(|v| v.is_finite()));
    }

    /// The time-discretized variance functional is non-negative for any
    /// integrand along any bridge.
    #[test]
    fn path_variance_nonnegative(
        seed in any::<u64>(),
        a in -3.0..3.0f64,
        c in -3.0..3.0f64,
        beta in 0.1..4.0f64,
    ) {
        let w = sample_bridge(-0.8, 1.1, beta, 64, &mut sample_rng(seed, 0)).unwrap();
        let v = path_variance(|s| a * s + c * s * s, &w).unwrap();
        prop_assert!(v >= 0.0, "{v}");
    }

    /// The symplectic cross product is exactly antisymmetric.
    #[test]
    fn cross_product_antisymmetric(
        x1 in -10.0..10.0f64,
        x2 in -10.0..10.0f64,
        y1 in -10.0..10.0f64,
        y2 in -10.0..10.0f64,
    ) {
        let (x, y) = (pt(x1, x2), pt(y1, y2));
        prop_assert_eq!(x.cross(y), -y.cross(x));
    }

    /// Gauge potentials of fields with a positive floor grow at least
    /// linearly with that floor.
    #[test]
    fn gauge_increments_respect_floor(
        kind in 0usize..3,
        b in 0.1..4.0f64,
        x in -6.0..6.0f64,
        delta in 0.001..2.0f64,
    ) {
        let (field, floor) = match kind {
            0 => (FieldProfile64::constant(b).unwrap(), b),
            1 => (FieldProfile64::sine(), 1.0),
            _ => (FieldProfile64::fact4(b, 1.0).unwrap(), b),
        };
        let lo = field.gauge_a2(x).unwrap();
        let hi = field.gauge_a2(x + delta).unwrap();
        prop_assert!(hi - lo >= floor * delta * (1.0 - 1e-9) - 1e-12,
            "increment {} below floor {} x {}", hi - lo, floor, delta);
    }
}

/// In the zero-temperature limit the log of the diagonal domination ratio
/// recovers the ground-energy gap from below, monotonically.
#[test]
fn zero_temperature_trend() {
    // closed form: free diag / constant-field diag at the origin
    let rate = |beta: f64| (beta.sinh().ln() - beta.ln()) / beta;
    let (r2, r4, r8) = (rate(2.0), rate(4.0), rate(8.0));
    assert!(r2 < r4 && r4 < r8 && r8 < 1.0, "{r2} {r4} {r8}");
    assert!((r8 - 0.6534263956531297).abs() < 1e-12, "{r8}");

    // the spectral backend reproduces the same trend
    let free = FieldProfile64::constant(0.0).unwrap();
    let hat = FieldProfile64::constant(2.0).unwrap();
    let zero = PotentialProfile64::zero();
    let st =
        SpectralSettings64::new(Grid1D64::new(-10.0, 10.0, 1001).unwrap(), 8.0, 129).unwrap();
    let mut prev = 0.0;
    for &beta in &[2.0, 4.0, 8.0] {
        let top = kernel_2d(&hat, &zero, beta, Point64::origin(), Point64::origin(), &st)
            .unwrap()
            .value
            .re;
        let bottom = kernel_2d(&free, &zero, beta, Point64::origin(), Point64::origin(), &st)
            .unwrap()
            .value
            .re;
        let r_spec = -(top / bottom).ln() / beta;
        assert!(
            (r_spec - rate(beta)).abs() < 1e-3,
            "beta={beta}: {r_spec} vs {}",
            rate(beta)
        );
        assert!(r_spec > prev, "trend broke at beta={beta}");
        prev = r_spec;
    }
}

/// Identical runs produce byte-identical serialized reports.
#[test]
fn reports_are_deterministic() {
    let plain = FieldProfile64::constant(0.0).unwrap();
    let hat = FieldProfile64::constant(2.0).unwrap();
    let zero = PotentialProfile64::zero();
    let st = SpectralSettings64::new(Grid1D64::new(-10.0, 10.0, 501).unwrap(), 8.0, 81).unwrap();
    let grid = PairGrid::new(vec![0.0, 1.0], vec![0.0], vec![0.0, 1.0], vec![1.0]).unwrap();
    let run = || {
        let r = check_theorem2(
            &plain,
            &zero,
            &hat,
            &zero,
            &grid,
            &st,
            Theorem2Backend::Spectral,
        )
        .unwrap();
        serde_json::to_string(&r).unwrap()
    };
    assert_eq!(run(), run());

    let mc = || {
        let r = check_theorem2(
            &plain,
            &zero,
            &hat,
            &zero,
            &grid,
            &st,
            Theorem2Backend::Mc {
                n_steps: 32,
                n_samples: 8192,
                seed: 4242,
            },
        )
        .unwrap();
        serde_json::to_string(&r).unwrap()
    };
    assert_eq!(mc(), mc());
}

/// Sampling estimates are a pure function of the seed: same seed, same
/// bits, regardless of scheduling.
#[test]
fn mc_estimates_are_seed_deterministic() {
    let field = FieldProfile64::sine();
    let pot = PotentialProfile64::oscillator(0.5).unwrap();
    let x = pt(0.4, 1.2);
    let y = pt(-0.3, 0.0);
    let a = mc_kernel(&field, &pot, 1.5, x, y, 32, 20_000, 77).unwrap();
    let b = mc_kernel(&field, &pot, 1.5, x, y, 32, 20_000, 77).unwrap();
    assert_eq!(a.value.re.to_bits(), b.value.re.to_bits());
    assert_eq!(a.value.im.to_bits(), b.value.im.to_bits());
    assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    let c = mc_kernel(&field, &pot, 1.5, x, y, 32, 20_000, 78).unwrap();
    assert_ne!(a.value.re.to_bits(), c.value.re.to_bits());
}
