//! Allocation-free kernels for small dense complex matrices stored as flat
//! row-major slices. Fiber ranks in this crate are tiny (1..=4 on the hot
//! paths), so straight index loops beat any general linear-algebra dispatch.

use num_complex::Complex64 as C64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// out = a * b for n x n matrices. Ranks 2 and 3 dominate the flow's inner
/// loop, so they get fully unrolled paths.
pub fn mul(n: usize, a: &[C64], b: &[C64], out: &mut [C64]) {
    debug_assert!(a.len() == n * n && b.len() == n * n && out.len() == n * n);
    match n {
        2 => {
            let (a, b, o) = (&a[..4], &b[..4], &mut out[..4]);
            o[0] = a[0] * b[0] + a[1] * b[2];
            o[1] = a[0] * b[1] + a[1] * b[3];
            o[2] = a[2] * b[0] + a[3] * b[2];
            o[3] = a[2] * b[1] + a[3] * b[3];
        }
        3 => {
            let (a, b, o) = (&a[..9], &b[..9], &mut out[..9]);
            for i in 0..3 {
                let (x, y, z) = (a[3 * i], a[3 * i + 1], a[3 * i + 2]);
                o[3 * i] = x * b[0] + y * b[3] + z * b[6];
                o[3 * i + 1] = x * b[1] + y * b[4] + z * b[7];
                o[3 * i + 2] = x * b[2] + y * b[5] + z * b[8];
            }
        }
        _ => {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = ZERO;
                    for k in 0..n {
                        acc += a[i * n + k] * b[k * n + j];
                    }
                    out[i * n + j] = acc;
                }
            }
        }
    }
}

/// out = a * b^H (conjugate transpose of b).
pub fn mul_conjt(n: usize, a: &[C64], b: &[C64], out: &mut [C64]) {
    match n {
        2 => {
            let (a, b, o) = (&a[..4], &b[..4], &mut out[..4]);
            o[0] = a[0] * b[0].conj() + a[1] * b[1].conj();
            o[1] = a[0] * b[2].conj() + a[1] * b[3].conj();
            o[2] = a[2] * b[0].conj() + a[3] * b[1].conj();
            o[3] = a[2] * b[2].conj() + a[3] * b[3].conj();
        }
        3 => {
            let (a, b, o) = (&a[..9], &b[..9], &mut out[..9]);
            for i in 0..3 {
                let (x, y, z) = (a[3 * i], a[3 * i + 1], a[3 * i + 2]);
                for j in 0..3 {
                    o[3 * i + j] =
                        x * b[3 * j].conj() + y * b[3 * j + 1].conj() + z * b[3 * j + 2].conj();
                }
            }
        }
        _ => {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = ZERO;
                    for k in 0..n {
                        acc += a[i * n + k] * b[j * n + k].conj();
                    }
                    out[i * n + j] = acc;
                }
            }
        }
    }
}

/// out = a^H * b.
pub fn conjt_mul(n: usize, a: &[C64], b: &[C64], out: &mut [C64]) {
    match n {
        2 => {
            let (a, b, o) = (&a[..4], &b[..4], &mut out[..4]);
            o[0] = a[0].conj() * b[0] + a[2].conj() * b[2];
            o[1] = a[0].conj() * b[1] + a[2].conj() * b[3];
            o[2] = a[1].conj() * b[0] + a[3].conj() * b[2];
            o[3] = a[1].conj() * b[1] + a[3].conj() * b[3];
        }
        _ => {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = ZERO;
                    for k in 0..n {
                        acc += a[k * n + i].conj() * b[k * n + j];
                    }
                    out[i * n + j] = acc;
                }
            }
        }
    }
}

pub fn conjt(n: usize, a: &[C64], out: &mut [C64]) {
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = a[j * n + i].conj();
        }
    }
}

pub fn trace(n: usize, a: &[C64]) -> C64 {
    (0..n).map(|i| a[i * n + i]).sum()
}

pub fn det(n: usize, a: &[C64]) -> C64 {
    match n {
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => {
            let mut buf = a.to_vec();
            let mut d = ONE;
            for col in 0..n {
                let mut piv = col;
                for r in col + 1..n {
                    if buf[r * n + col].norm_sqr() > buf[piv * n + col].norm_sqr() {
                        piv = r;
                    }
                }
                if buf[piv * n + col].norm_sqr() == 0.0 {
                    return ZERO;
                }
                if piv != col {
                    for c in 0..n {
                        buf.swap(col * n + c, piv * n + c);
                    }
                    d = -d;
                }
                let p = buf[col * n + col];
                d *= p;
                for r in col + 1..n {
                    let f = buf[r * n + col] / p;
                    for c in col..n {
                        let sub = f * buf[col * n + c];
                        buf[r * n + c] -= sub;
                    }
                }
            }
            d
        }
    }
}

/// out = a^-1. Closed-form adjugate for n <= 3, Gauss-Jordan with partial
/// pivoting above that. Returns false when the matrix is numerically singular.
pub fn inverse(n: usize, a: &[C64], out: &mut [C64]) -> bool {
    match n {
        1 => {
            if a[0].norm_sqr() == 0.0 {
                return false;
            }
            out[0] = ONE / a[0];
            true
        }
        2 => {
            let d = a[0] * a[3] - a[1] * a[2];
            if d.norm_sqr() == 0.0 {
                return false;
            }
            let inv = ONE / d;
            out[0] = a[3] * inv;
            out[1] = -a[1] * inv;
            out[2] = -a[2] * inv;
            out[3] = a[0] * inv;
            true
        }
        3 => {
            let c00 = a[4] * a[8] - a[5] * a[7];
            let c01 = a[5] * a[6] - a[3] * a[8];
            let c02 = a[3] * a[7] - a[4] * a[6];
            let d = a[0] * c00 + a[1] * c01 + a[2] * c02;
            if d.norm_sqr() == 0.0 {
                return false;
            }
            let inv = ONE / d;
            out[0] = c00 * inv;
            out[1] = (a[2] * a[7] - a[1] * a[8]) * inv;
            out[2] = (a[1] * a[5] - a[2] * a[4]) * inv;
            out[3] = c01 * inv;
            out[4] = (a[0] * a[8] - a[2] * a[6]) * inv;
            out[5] = (a[2] * a[3] - a[0] * a[5]) * inv;
            out[6] = c02 * inv;
            out[7] = (a[1] * a[6] - a[0] * a[7]) * inv;
            out[8] = (a[0] * a[4] - a[1] * a[3]) * inv;
            true
        }
        _ => {
            let mut aug = vec![ZERO; n * 2 * n];
            for i in 0..n {
                for j in 0..n {
                    aug[i * 2 * n + j] = a[i * n + j];
                }
                aug[i * 2 * n + n + i] = ONE;
            }
            let w = 2 * n;
            for col in 0..n {
                let mut piv = col;
                for r in col + 1..n {
                    if aug[r * w + col].norm_sqr() > aug[piv * w + col].norm_sqr() {
                        piv = r;
                    }
                }
                if aug[piv * w + col].norm_sqr() < 1e-300 {
                    return false;
                }
                if piv != col {
                    for c in 0..w {
                        aug.swap(col * w + c, piv * w + c);
                    }
                }
                let p = aug[col * w + col];
                for c in 0..w {
                    aug[col * w + c] /= p;
                }
                for r in 0..n {
                    if r != col {
                        let f = aug[r * w + col];
                        if f.norm_sqr() != 0.0 {
                            for c in 0..w {
                                let sub = f * aug[col * w + c];
                                aug[r * w + c] -= sub;
                            }
                        }
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = aug[i * w + n + j];
                }
            }
            true
        }
    }
}

/// Cholesky factor L with a = L L^H for Hermitian positive-definite input.
/// Returns false (and leaves `out` unspecified) when a pivot fails, which
/// doubles as the positive-definiteness test.
pub fn cholesky_lower(n: usize, a: &[C64], out: &mut [C64]) -> bool {
    for v in out.iter_mut() {
        *v = ZERO;
    }
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= out[i * n + k] * out[j * n + k].conj();
            }
            if i == j {
                let d = sum.re;
                if d <= 0.0 || !d.is_finite() {
                    return false;
                }
                out[i * n + i] = C64::new(d.sqrt(), 0.0);
            } else {
                out[i * n + j] = sum / out[j * n + j];
            }
        }
    }
    true
}

/// Inverse of a lower-triangular matrix by forward substitution.
pub fn lower_inverse(n: usize, l: &[C64], out: &mut [C64]) -> bool {
    for v in out.iter_mut() {
        *v = ZERO;
    }
    for i in 0..n {
        let d = l[i * n + i];
        if d.norm_sqr() == 0.0 {
            return false;
        }
        out[i * n + i] = ONE / d;
        for j in 0..i {
            let mut sum = ZERO;
            for k in j..i {
                sum += l[i * n + k] * out[k * n + j];
            }
            out[i * n + j] = -sum / d;
        }
    }
    true
}

pub fn frob_norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// a <- (a + a^H) / 2.
pub fn hermitize(n: usize, a: &mut [C64]) {
    for i in 0..n {
        a[i * n + i] = C64::new(a[i * n + i].re, 0.0);
        for j in i + 1..n {
            let avg = 0.5 * (a[i * n + j] + a[j * n + i].conj());
            a[i * n + j] = avg;
            a[j * n + i] = avg.conj();
        }
    }
}

/// out = exp(a) by scaling-and-squaring on a degree-8 Taylor polynomial.
/// Accurate to machine precision for the step sizes the flow uses
/// (||a|| is O(dt * |K|), far below 1).
pub fn expm(n: usize, a: &[C64], out: &mut [C64], scratch: &mut [C64]) {
    let norm = max_abs(a) * n as f64;
    let s = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scale = (0.5f64).powi(s as i32);
    // Taylor order by scaled norm: the flow feeds ||a|| = O(dt |K|) << 1,
    // where three terms already reach machine precision.
    let order: u32 = if norm * scale < 1e-4 {
        3
    } else if norm * scale < 1e-2 {
        5
    } else {
        8
    };
    let (term, acc) = scratch.split_at_mut(n * n);
    // Horner evaluation of I + y(I + y/2(I + ... )).
    for v in out.iter_mut() {
        *v = ZERO;
    }
    for i in 0..n {
        out[i * n + i] = ONE;
    }
    for k in (1..=order).rev() {
        // out <- I + (scale/k) * a * out
        mul(n, a, out, term);
        let w = scale / k as f64;
        for (o, t) in out.iter_mut().zip(term.iter()) {
            *o = w * t;
        }
        for i in 0..n {
            out[i * n + i] += ONE;
        }
    }
    for _ in 0..s {
        mul(n, out, out, acc);
        out.copy_from_slice(acc);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn inverse_roundtrip_ranks_1_to_4() {
        for n in 1..=4usize {
            let a: Vec<C64> = (0..n * n)
                .map(|k| c(1.0 + (k as f64 * 0.37).sin(), (k as f64 * 0.61).cos() * 0.5))
                .map(|v| if v.norm() < 0.1 { v + ONE } else { v })
                .collect();
            let mut a = a;
            // Diagonal dominance so every test matrix is invertible.
            for i in 0..n {
                a[i * n + i] += c(3.0, 0.0);
            }
            let mut inv = vec![ZERO; n * n];
            assert!(inverse(n, &a, &mut inv));
            let mut prod = vec![ZERO; n * n];
            mul(n, &a, &inv, &mut prod);
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { ONE } else { ZERO };
                    assert!((prod[i * n + j] - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn det_matches_product_rule() {
        let a = [c(2.0, 1.0), c(0.3, -0.2), c(-1.0, 0.5), c(1.5, 0.0)];
        let b = [c(0.5, 0.0), c(1.0, 1.0), c(0.0, -0.3), c(2.0, 0.2)];
        let mut ab = [ZERO; 4];
        mul(2, &a, &b, &mut ab);
        assert!((det(2, &ab) - det(2, &a) * det(2, &b)).norm() < 1e-12);
    }

    #[test]
    fn det_gauss_matches_closed_form() {
        let a: Vec<C64> = (0..16)
            .map(|k| c((k as f64 * 0.7).sin() + if k % 5 == 0 { 2.0 } else { 0.0 }, (k as f64 * 0.3).cos()))
            .collect();
        // Compare the n=4 elimination path against Laplace expansion over 3x3 minors.
        let mut lap = ZERO;
        for j in 0..4 {
            let minor: Vec<C64> = (1..4)
                .flat_map(|r| (0..4).filter(|&cc| cc != j).map(move |cc| (r, cc)))
                .map(|(r, cc)| a[r * 4 + cc])
                .collect();
            let sign = if j % 2 == 0 { ONE } else { -ONE };
            lap += sign * a[j] * det(3, &minor);
        }
        assert!((det(4, &a) - lap).norm() < 1e-10);
    }

    #[test]
    fn expm_matches_series_small_and_scaled() {
        // Nilpotent block: exp is exact degree-1 polynomial.
        let a = [ZERO, c(0.7, 0.1), ZERO, ZERO];
        let mut out = [ZERO; 4];
        let mut scratch = [ZERO; 8];
        expm(2, &a, &mut out, &mut scratch);
        assert!((out[0] - ONE).norm() < 1e-15);
        assert!((out[1] - c(0.7, 0.1)).norm() < 1e-15);
        // Diagonal with norm above the scaling threshold.
        let d = [c(1.3, 0.4), ZERO, ZERO, c(-2.0, 0.9)];
        expm(2, &d, &mut out, &mut scratch);
        assert!((out[0] - d[0].exp()).norm() < 1e-13);
        assert!((out[3] - d[3].exp()).norm() < 1e-12);
        assert!(out[1].norm() < 1e-15 && out[2].norm() < 1e-15);
    }

    #[test]
    fn cholesky_and_lower_inverse() {
        // Hermitian positive definite 3x3.
        let a = [
            c(4.0, 0.0), c(1.0, 0.5), c(0.2, -0.1),
            c(1.0, -0.5), c(3.0, 0.0), c(0.4, 0.2),
            c(0.2, 0.1), c(0.4, -0.2), c(2.0, 0.0),
        ];
        let mut l = [ZERO; 9];
        assert!(cholesky_lower(3, &a, &mut l));
        let mut rebuilt = [ZERO; 9];
        mul_conjt(3, &l, &l, &mut rebuilt);
        for (x, y) in rebuilt.iter().zip(a.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
        let mut linv = [ZERO; 9];
        assert!(lower_inverse(3, &l, &mut linv));
        let mut prod = [ZERO; 9];
        mul(3, &l, &linv, &mut prod);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { ONE } else { ZERO };
                assert!((prod[i * 3 + j] - expect).norm() < 1e-12);
            }
        }
        // Indefinite input is rejected.
        let ind = [c(-1.0, 0.0), ZERO, ZERO, c(1.0, 0.0)];
        let mut l2 = [ZERO; 4];
        assert!(!cholesky_lower(2, &ind, &mut l2));
    }

    #[test]
    fn hermitize_projects() {
        let mut a = [c(1.0, 0.5), c(2.0, 1.0), c(0.5, 0.5), c(3.0, -0.2)];
        hermitize(2, &mut a);
        assert_eq!(a[0], c(1.0, 0.0));
        assert_eq!(a[3], c(3.0, 0.0));
        assert!((a[1] - a[2].conj()).norm() < 1e-16);
    }
}
