//! Eigenvalues of a general real matrix: diagonal balancing, Householder
//! reduction to upper Hessenberg form, then Francis double-shift QR down to
//! real Schur form. Eigenvalues are read from the 1x1 and 2x2 diagonal
//! blocks. The QR sweep follows the EISPACK `hqr` procedure.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Sweeps allowed per unit of matrix order.
pub const SWEEPS_PER_ORDER: usize = 40;

/// Scale rows and columns by powers of two until row and column norms are
/// comparable. A similarity transform, exact in floating point.
pub(crate) fn balance(a: &mut [f64], n: usize) {
    const RADIX: f64 = 2.0;
    const SQRDX: f64 = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j * n + i].abs();
                    r += a[i * n + j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= SQRDX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= SQRDX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[i * n + j] *= g;
                }
                for j in 0..n {
                    a[j * n + i] *= f;
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form, in place.
pub(crate) fn hessenberg(a: &mut [f64], n: usize) {
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let scale: f64 = (k + 1..n).map(|i| a[i * n + k].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut sigma = 0.0;
        for i in k + 1..n {
            v[i] = a[i * n + k] / scale;
            sigma += v[i] * v[i];
        }
        let norm = sigma.sqrt();
        let alpha = if v[k + 1] > 0.0 { -norm } else { norm };
        v[k + 1] -= alpha;
        let vtv: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vtv == 0.0 {
            continue;
        }
        // left: rows k+1.., all columns from k
        for j in k..n {
            let s: f64 = (k + 1..n).map(|i| v[i] * a[i * n + j]).sum();
            let f = 2.0 * s / vtv;
            for i in k + 1..n {
                a[i * n + j] -= f * v[i];
            }
        }
        // right: columns k+1.., all rows
        for i in 0..n {
            let s: f64 = (k + 1..n).map(|j| a[i * n + j] * v[j]).sum();
            let f = 2.0 * s / vtv;
            for j in k + 1..n {
                a[i * n + j] -= f * v[j];
            }
        }
        a[(k + 1) * n + k] = alpha * scale;
        for i in k + 2..n {
            a[i * n + k] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix. Destroys `h`.
pub(crate) fn hqr(h: &mut [f64], n: usize) -> Result<Vec<Complex64>> {
    let nn = n as isize;
    let at = |i: isize, j: isize| (i * nn + j) as usize;
    let eps = f64::EPSILON;
    let max_sweeps = SWEEPS_PER_ORDER * n;

    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];

    let mut norm = 0.0;
    for i in 0..nn {
        for j in (i - 1).max(0)..nn {
            norm += h[at(i, j)].abs();
        }
    }

    let mut hi = nn - 1;
    let low = 0isize;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut total = 0usize;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut w, mut x, mut y);

    while hi >= low {
        // look for a single small subdiagonal element
        let mut l = hi;
        while l > low {
            s = h[at(l - 1, l - 1)].abs() + h[at(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[at(l, l - 1)].abs() <= eps * s {
                break;
            }
            l -= 1;
        }

        if l == hi {
            // one root
            h[at(hi, hi)] += exshift;
            wr[hi as usize] = h[at(hi, hi)];
            wi[hi as usize] = 0.0;
            hi -= 1;
            iter = 0;
        } else if l == hi - 1 {
            // two roots from the trailing 2x2 block
            w = h[at(hi, hi - 1)] * h[at(hi - 1, hi)];
            p = (h[at(hi - 1, hi - 1)] - h[at(hi, hi)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[at(hi, hi)] += exshift;
            h[at(hi - 1, hi - 1)] += exshift;
            x = h[at(hi, hi)];
            let (a, b) = ((hi - 1) as usize, hi as usize);
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                wr[a] = x + z;
                wr[b] = if z != 0.0 { x - w / z } else { x + z };
                wi[a] = 0.0;
                wi[b] = 0.0;
            } else {
                wr[a] = x + p;
                wr[b] = x + p;
                wi[a] = z;
                wi[b] = -z;
            }
            hi -= 2;
            iter = 0;
        } else {
            if total >= max_sweeps {
                let residual = h[at(hi, hi - 1)].abs();
                return Err(Error::NoConvergence {
                    iterations: total,
                    residual,
                });
            }
            // form shift
            x = h[at(hi, hi)];
            y = h[at(hi - 1, hi - 1)];
            w = h[at(hi, hi - 1)] * h[at(hi - 1, hi)];

            // exceptional shifts break cycles
            if iter == 10 {
                exshift += x;
                for i in low..=hi {
                    h[at(i, i)] -= x;
                }
                s = h[at(hi, hi - 1)].abs() + h[at(hi - 1, hi - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=hi {
                        h[at(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total += 1;

            // look for two consecutive small subdiagonal elements
            let mut m = hi - 2;
            loop {
                z = h[at(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[at(m + 1, m)] + h[at(m, m + 1)];
                q = h[at(m + 1, m + 1)] - z - r - s;
                r = h[at(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let lhs = h[at(m, m - 1)].abs() * (q.abs() + r.abs());
                let rhs = eps
                    * (p.abs() * (h[at(m - 1, m - 1)].abs() + z.abs() + h[at(m + 1, m + 1)].abs()));
                if lhs < rhs {
                    break;
                }
                m -= 1;
            }

            for i in m + 2..=hi {
                h[at(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[at(i, i - 3)] = 0.0;
                }
            }

            // double QR step on rows l..=hi and columns m..=hi
            let mut k = m;
            while k < hi {
                let notlast = k != hi - 1;
                if k != m {
                    p = h[at(k, k - 1)];
                    q = h[at(k + 1, k - 1)];
                    r = if notlast { h[at(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                } else {
                    x = 0.0;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[at(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[at(k, k - 1)] = -h[at(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn {
                        p = h[at(k, j)] + q * h[at(k + 1, j)];
                        if notlast {
                            p += r * h[at(k + 2, j)];
                            h[at(k + 2, j)] -= p * z;
                        }
                        h[at(k, j)] -= p * x;
                        h[at(k + 1, j)] -= p * y;
                    }
                    for i in 0..=hi.min(k + 3) {
                        p = x * h[at(i, k)] + y * h[at(i, k + 1)];
                        if notlast {
                            p += z * h[at(i, k + 2)];
                            h[at(i, k + 2)] -= p * r;
                        }
                        h[at(i, k)] -= p;
                        h[at(i, k + 1)] -= p * q;
                    }
                }
                k += 1;
            }
        }
    }

    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}
