use crate::error::{Error, Result};
use crate::scalar::Real;

/// Real symmetric tridiagonal matrix. The two spectral backends reduce to
/// this type; everything spectral in the crate flows through it.
///
/// Eigenvalues come from Sturm-sequence bisection (robust, and cheap when
/// only the thermally relevant bottom of the spectrum is needed), vectors
/// from inverse iteration with partial pivoting and Gram–Schmidt against
/// earlier vectors of a numerically clustered eigenvalue.
#[derive(Clone, Debug)]
pub struct SymTridiag<T> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
}

impl<T: Real> SymTridiag<T> {
    pub fn new(diag: Vec<T>, off: Vec<T>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidParameter("empty matrix".into()));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::InvalidParameter(format!(
                "off-diagonal length {} does not match dimension {}",
                off.len(),
                diag.len()
            )));
        }
        if diag.iter().chain(off.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        Ok(SymTridiag { diag, off })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    fn inf_norm(&self) -> T {
        let n = self.n();
        let mut m = T::zero();
        for i in 0..n {
            let mut row = self.diag[i].abs();
            if i > 0 {
                row += self.off[i - 1].abs();
            }
            if i + 1 < n {
                row += self.off[i].abs();
            }
            m = m.max(row);
        }
        m
    }

    /// Interval certain to contain the whole spectrum.
    pub fn gershgorin(&self) -> (T, T) {
        let n = self.n();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let mut r = T::zero();
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: T) -> usize {
        let n = self.n();
        let pivmin = sturm_pivmin(&self.off);
        let mut count = 0usize;
        let mut q = self.diag[0] - x;
        if q < T::zero() {
            count += 1;
        }
        for i in 1..n {
            let e2 = self.off[i - 1] * self.off[i - 1];
            if q.abs() < pivmin {
                q = -pivmin;
            }
            q = self.diag[i] - x - e2 / q;
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    /// All eigenvalues strictly below `cutoff`, ascending, at most `max_count`
    /// of them (lowest first). Each is bisected to roughly machine precision
    /// relative to the spectral scale.
    pub fn eigenvalues_below(&self, cutoff: T, max_count: usize) -> Vec<T> {
        let (glo, ghi) = self.gershgorin();
        let scale = glo.abs().max(ghi.abs()).max(T::one());
        let tol = scale * T::epsilon() * T::of(4.0);
        let total = self.count_below(cutoff).min(max_count);
        let mut out = Vec::with_capacity(total);
        let mut floor = glo;
        for j in 0..total {
            let mut lo = floor;
            let mut hi = cutoff.min(ghi + tol);
            for _ in 0..120 {
                if hi - lo <= tol {
                    break;
                }
                let mid = (lo + hi).half();
                if self.count_below(mid) >= j + 1 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let lambda = (lo + hi).half();
            out.push(lambda);
            // eigenvalues are sorted; never re-search below the last one
            floor = lo;
        }
        out
    }

    /// Smallest eigenvalue.
    pub fn lowest_eigenvalue(&self) -> T {
        let (_, ghi) = self.gershgorin();
        let scale_tol = ghi.abs().max(T::one()) * T::epsilon();
        self.eigenvalues_below(ghi + scale_tol + scale_tol, 1)
            .pop()
            .expect("spectrum is non-empty")
    }

    /// Eigenvector for the (previously computed) eigenvalue `lambda`, by
    /// inverse iteration. `orthogonalize_against` carries the vectors already
    /// found in the same numerical cluster; the result is l2-normalized and
    /// orthogonal to them.
    pub fn eigenvector(&self, lambda: T, orthogonalize_against: &[&[T]]) -> Vec<T> {
        let n = self.n();
        if n == 1 {
            return vec![T::one()];
        }
        let scale = self.inf_norm().max(T::one());
        let fac = factor_shifted(self, lambda, scale);

        // fixed pseudo-random start vector: deterministic, no symmetry bias
        let mut v: Vec<T> = (0..n)
            .map(|i| {
                let s = (i as u64)
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add(0xB529_7A4D);
                let u = ((s >> 11) as f64) / (1u64 << 53) as f64;
                T::of(u - 0.5 + 1e-3)
            })
            .collect();
        normalize(&mut v);

        let res_tol = scale * T::epsilon() * T::of(100.0);
        let mut best = v.clone();
        let mut best_res = T::infinity();
        for _ in 0..6 {
            fac.solve(&mut v);
            gram_schmidt(&mut v, orthogonalize_against);
            normalize(&mut v);
            let r = self.residual(lambda, &v);
            if r < best_res {
                best_res = r;
                best.copy_from_slice(&v);
            }
            if r <= res_tol {
                break;
            }
        }
        best
    }

    fn residual(&self, lambda: T, v: &[T]) -> T {
        let n = self.n();
        let mut worst = T::zero();
        for i in 0..n {
            let mut r = (self.diag[i] - lambda) * v[i];
            if i > 0 {
                r += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                r += self.off[i] * v[i + 1];
            }
            worst = worst.max(r.abs());
        }
        worst
    }
}

fn sturm_pivmin<T: Real>(off: &[T]) -> T {
    let e2max = off
        .iter()
        .map(|e| *e * *e)
        .fold(T::one(), T::max);
    T::min_positive_value() / T::epsilon() * e2max
}

fn normalize<T: Real>(v: &mut [T]) {
    let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    if norm > T::zero() && norm.is_finite() {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

fn gram_schmidt<T: Real>(v: &mut [T], against: &[&[T]]) {
    for p in against {
        let dot = v.iter().zip(p.iter()).map(|(&a, &b)| a * b).sum::<T>();
        for (x, &pi) in v.iter_mut().zip(p.iter()) {
            *x -= dot * pi;
        }
    }
}

/// LU factorization of `A - lambda I` with partial pivoting, stored in band
/// form so the inverse-iteration solves are O(n) each.
struct ShiftedLu<T> {
    d: Vec<T>,    // diagonal of U
    u1: Vec<T>,   // first super-diagonal of U
    u2: Vec<T>,   // second super-diagonal of U (appears through pivoting)
    l: Vec<T>,    // multipliers
    swapped: Vec<bool>,
}

fn factor_shifted<T: Real>(a: &SymTridiag<T>, lambda: T, scale: T) -> ShiftedLu<T> {
    let n = a.n();
    let pivmin = scale * T::epsilon() * T::of(1e-2);
    let mut d: Vec<T> = a.diag.iter().map(|&x| x - lambda).collect();
    let mut u1 = a.off.clone();
    let mut u2 = vec![T::zero(); n.saturating_sub(2)];
    let mut l = a.off.clone();
    let mut swapped = vec![false; n.saturating_sub(1)];

    for i in 0..n - 1 {
        if d[i].abs() >= l[i].abs() {
            let piv = if d[i].abs() < pivmin {
                if d[i] < T::zero() {
                    -pivmin
                } else {
                    pivmin
                }
            } else {
                d[i]
            };
            d[i] = piv;
            let fact = l[i] / piv;
            l[i] = fact;
            d[i + 1] -= fact * u1[i];
        } else {
            swapped[i] = true;
            let fact = d[i] / l[i];
            d[i] = l[i];
            l[i] = fact;
            let old_d_next = d[i + 1];
            d[i + 1] = u1[i] - fact * old_d_next;
            u1[i] = old_d_next;
            if i + 2 < n {
                let old_u_next = u1[i + 1];
                u2[i] = old_u_next;
                u1[i + 1] = -fact * old_u_next;
            }
        }
    }
    if d[n - 1].abs() < pivmin {
        d[n - 1] = if d[n - 1] < T::zero() { -pivmin } else { pivmin };
    }
    ShiftedLu { d, u1, u2, l, swapped }
}

impl<T: Real> ShiftedLu<T> {
    fn solve(&self, rhs: &mut [T]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                rhs.swap(i, i + 1);
            }
            let update = self.l[i] * rhs[i];
            rhs[i + 1] -= update;
        }
        rhs[n - 1] /= self.d[n - 1];
        if n >= 2 {
            rhs[n - 2] = (rhs[n - 2] - self.u1[n - 2] * rhs[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            rhs[i] = (rhs[i] - self.u1[i] * rhs[i + 1] - self.u2[i] * rhs[i + 2]) / self.d[i];
        }
        // rescale to dodge overflow when (A - lambda I) is nearly singular
        let m = rhs.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
        if m > T::one() / T::epsilon() {
            for x in rhs.iter_mut() {
                *x /= m;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dirichlet Laplacian on [0, (n+1)h]: eigenvalues are known exactly.
    fn laplacian(n: usize, h: f64) -> SymTridiag<f64> {
        let h2 = h * h;
        SymTridiag::new(vec![2.0 / h2; n], vec![-1.0 / h2; n - 1]).unwrap()
    }

    fn laplacian_eig(n: usize, h: f64, k: usize) -> f64 {
        // k = 1..n
        let theta = std::f64::consts::PI * k as f64 / (n + 1) as f64;
        2.0 / (h * h) * (1.0 - theta.cos())
    }

    #[test]
    fn counts_match_closed_form() {
        let (n, h) = (40, 0.1);
        let a = laplacian(n, h);
        for k in 1..=n {
            let lam = laplacian_eig(n, h, k);
            assert_eq!(a.count_below(lam * (1.0 + 1e-12)), k, "k={k}");
            assert_eq!(a.count_below(lam * (1.0 - 1e-12)), k - 1, "k={k}");
        }
    }

    #[test]
    fn eigenvalues_against_closed_form() {
        let (n, h) = (50, 0.1);
        let a = laplacian(n, h);
        let cutoff = laplacian_eig(n, h, 6) + 1.0;
        let vals = a.eigenvalues_below(cutoff, 100);
        assert_eq!(vals.len(), 6);
        for (j, &v) in vals.iter().enumerate() {
            let exact = laplacian_eig(n, h, j + 1);
            assert!((v - exact).abs() < 1e-9 * exact.max(1.0), "{v} vs {exact}");
        }
        // max_count truncation keeps the lowest ones
        let few = a.eigenvalues_below(cutoff, 2);
        assert_eq!(few.len(), 2);
        assert!((few[0] - vals[0]).abs() < 1e-12);
    }

    #[test]
    fn lowest_eigenvalue_shortcut() {
        let a = laplacian(30, 0.2);
        let direct = a.lowest_eigenvalue();
        assert!((direct - laplacian_eig(30, 0.2, 1)).abs() < 1e-10);
    }

    #[test]
    fn eigenvectors_match_sines_and_are_orthonormal() {
        let (n, h) = (50, 0.1);
        let a = laplacian(n, h);
        let vals = a.eigenvalues_below(laplacian_eig(n, h, 4), 10);
        let mut vecs: Vec<Vec<f64>> = Vec::new();
        for (j, &lam) in vals.iter().enumerate() {
            let against: Vec<&[f64]> = vecs
                .iter()
                .enumerate()
                .filter(|(i, _)| (vals[*i] - lam).abs() < 1e-6 * lam.abs().max(1.0))
                .map(|(_, v)| v.as_slice())
                .collect();
            let v = a.eigenvector(lam, &against);
            // closed-form eigenvector: sin(k pi i / (n+1))
            let k = j + 1;
            let mut exact: Vec<f64> = (1..=n)
                .map(|i| (std::f64::consts::PI * (k * i) as f64 / (n + 1) as f64).sin())
                .collect();
            normalize(&mut exact);
            let overlap: f64 = v.iter().zip(&exact).map(|(a, b)| a * b).sum();
            assert!(overlap.abs() > 1.0 - 1e-10, "mode {k}: overlap {overlap}");
            vecs.push(v);
        }
        for i in 0..vecs.len() {
            for j in 0..i {
                let dot: f64 = vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-10, "modes {i},{j} not orthogonal: {dot}");
            }
        }
    }

    #[test]
    fn oscillator_finite_differences() {
        // 1/2 p^2 + 1/2 x^2 on [-10, 10]: ground energy 1/2, gap 1
        let n = 1001;
        let h = 20.0 / (n + 1) as f64;
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let x = -10.0 + (i + 1) as f64 * h;
                1.0 / (h * h) + 0.5 * x * x
            })
            .collect();
        let a = SymTridiag::new(diag, vec![-0.5 / (h * h); n - 1]).unwrap();
        let vals = a.eigenvalues_below(3.0, 10);
        assert!((vals[0] - 0.5).abs() < 5e-5, "{}", vals[0]);
        assert!((vals[1] - 1.5).abs() < 3e-4, "{}", vals[1]);
        assert!((vals[2] - 2.5).abs() < 1e-3, "{}", vals[2]);
    }

    #[test]
    fn exact_degeneracy_is_resolved_orthogonally() {
        // two identical blocks joined by a zero coupling: doubly degenerate
        let block_d = vec![2.0_f64, 3.0, 2.5];
        let block_e = vec![0.7, -0.4];
        let mut diag = block_d.clone();
        diag.extend_from_slice(&block_d);
        let mut off = block_e.clone();
        off.push(0.0);
        off.extend_from_slice(&block_e);
        let a = SymTridiag::new(diag, off).unwrap();
        let vals = a.eigenvalues_below(10.0, 10);
        assert_eq!(vals.len(), 6);
        assert!((vals[0] - vals[1]).abs() < 1e-12);

        let v0 = a.eigenvector(vals[0], &[]);
        let v1 = a.eigenvector(vals[1], &[&v0]);
        let dot: f64 = v0.iter().zip(&v1).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-9, "degenerate pair not orthogonal: {dot}");
        assert!(a.residual(vals[0], &v0) < 1e-10);
        assert!(a.residual(vals[1], &v1) < 1e-10);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(SymTridiag::<f64>::new(vec![], vec![]).is_err());
        assert!(SymTridiag::new(vec![1.0, 2.0], vec![0.5, 0.5]).is_err());
        assert!(SymTridiag::new(vec![1.0, f64::NAN], vec![0.5]).is_err());
    }
}
