//! Dense matrix kernels. All of them accumulate into `c`.

use crate::real::Real;

fn check(len: usize, rows: usize, cols: usize, what: &str) {
    assert!(len >= rows * cols, "{what} slice too short for {rows}x{cols}");
}

/// c[m×n] += a[m×k] · b[k×n]
pub fn mm_nn<T: Real>(a: &[T], b: &[T], c: &mut [T], m: usize, k: usize, n: usize) {
    check(a.len(), m, k, "a");
    check(b.len(), k, n, "b");
    check(c.len(), m, n, "c");
    // SAFETY: extents checked above, row-major contiguous layouts
    unsafe {
        T::gemm_acc(m, k, n, a.as_ptr(), k as isize, 1, b.as_ptr(), n as isize, 1, c.as_mut_ptr(), n as isize);
    }
}

/// c[m×n] += a[m×k] · b[n×k]ᵀ
pub fn mm_nt<T: Real>(a: &[T], b: &[T], c: &mut [T], m: usize, k: usize, n: usize) {
    check(a.len(), m, k, "a");
    check(b.len(), n, k, "b");
    check(c.len(), m, n, "c");
    // SAFETY: extents checked above; bᵀ is read through swapped strides
    unsafe {
        T::gemm_acc(m, k, n, a.as_ptr(), k as isize, 1, b.as_ptr(), 1, k as isize, c.as_mut_ptr(), n as isize);
    }
}

/// c[m×n] += a[k×m]ᵀ · b[k×n]
pub fn mm_tn<T: Real>(a: &[T], b: &[T], c: &mut [T], m: usize, k: usize, n: usize) {
    check(a.len(), k, m, "a");
    check(b.len(), k, n, "b");
    check(c.len(), m, n, "c");
    // SAFETY: extents checked above; aᵀ is read through swapped strides
    unsafe {
        T::gemm_acc(m, k, n, a.as_ptr(), 1, m as isize, b.as_ptr(), n as isize, 1, c.as_mut_ptr(), n as isize);
    }
}

/// Standard normal CDF evaluated in f64.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Probability mass of the unit bin centred on `value` under N(mean, scale²),
/// i.e. the Gaussian convolved with U(-½, ½) evaluated at `value`.
///
/// Evaluated on the lower tail side so that far-tail masses keep relative
/// precision.
pub fn gaussian_bin_mass(value: f64, mean: f64, scale: f64) -> f64 {
    let d = (value - mean).abs();
    let upper = (0.5 - d) / scale;
    let lower = (-0.5 - d) / scale;
    normal_cdf(upper) - normal_cdf(lower)
}

pub(crate) const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
pub(crate) const GELU_A: f64 = 0.044_715;

/// Tanh-approximated GELU, written as x·σ(2u) so it costs a single exp.
pub fn gelu<T: Real>(x: T) -> T {
    x * gelu_gate(x)
}

/// σ(2u) = ½(1 + tanh u) with u = √(2/π)(x + 0.044715x³).
#[inline]
fn gelu_gate<T: Real>(x: T) -> T {
    let u = T::from_f64(GELU_C) * (x + T::from_f64(GELU_A) * x * x * x);
    T::one() / (T::one() + (-(u + u)).exp())
}

pub(crate) fn gelu_grad<T: Real>(x: T) -> T {
    let c = T::from_f64(GELU_C);
    let a = T::from_f64(GELU_A);
    let s = gelu_gate(x);
    // d/dx x·s = s + x·2s(1−s)·du/dx
    s + x * T::from_f64(2.0) * s * (T::one() - s) * c * (T::one() + T::from_f64(3.0) * a * x * x)
}

pub fn softplus<T: Real>(x: T) -> T {
    // log(1 + e^x) without overflow
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_agree_with_naive_product() {
        let (m, k, n) = (3, 4, 5);
        let a: Vec<f64> = (0..m * k).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64 * 0.91).cos()).collect();
        let mut naive = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    naive[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        let mut c = vec![0.0; m * n];
        mm_nn(&a, &b, &mut c, m, k, n);
        for (x, y) in c.iter().zip(&naive) {
            assert!((x - y).abs() < 1e-12);
        }

        let mut bt = vec![0.0; n * k];
        for p in 0..k {
            for j in 0..n {
                bt[j * k + p] = b[p * n + j];
            }
        }
        let mut c2 = vec![0.0; m * n];
        mm_nt(&a, &bt, &mut c2, m, k, n);
        for (x, y) in c2.iter().zip(&naive) {
            assert!((x - y).abs() < 1e-12);
        }

        let mut at = vec![0.0; k * m];
        for i in 0..m {
            for p in 0..k {
                at[p * m + i] = a[i * k + p];
            }
        }
        let mut c3 = vec![0.0; m * n];
        mm_tn(&at, &b, &mut c3, m, k, n);
        for (x, y) in c3.iter().zip(&naive) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn bin_mass_at_origin() {
        let p = gaussian_bin_mass(0.0, 0.0, 1.0);
        assert!((p - 0.382_924_922_548_026).abs() < 1e-12);
    }

    #[test]
    fn gelu_matches_tanh_form() {
        for i in -80..=80 {
            let x = i as f64 * 0.1;
            let u = GELU_C * (x + GELU_A * x * x * x);
            let reference = 0.5 * x * (1.0 + u.tanh());
            assert!((gelu(x) - reference).abs() < 1e-12, "{x}");
        }
        assert_eq!(gelu(-1e4f32), 0.0);
        assert_eq!(gelu(1e4f32), 1e4);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(1000.0f64) - 1000.0).abs() < 1e-12);
        assert!(softplus(-1000.0f64) >= 0.0);
        assert!((softplus(0.0f64) - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
