//! Dense LU and a block-tridiagonal (block Thomas) solver.

/// In-place LU with partial pivoting of a row-major `n×n` matrix.
/// Returns `None` if a pivot vanishes.
pub(crate) fn lu_factor(a: &mut [f64], n: usize, piv: &mut [usize]) -> Option<()> {
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].abs();
        for i in k + 1..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best > 0.0) || !best.is_finite() {
            return None;
        }
        piv[k] = p;
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
        }
        let d = a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] / d;
            a[i * n + k] = f;
            if f != 0.0 {
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
    }
    Some(())
}

pub(crate) fn lu_solve(lu: &[f64], n: usize, piv: &[usize], b: &mut [f64]) {
    for k in 0..n {
        b.swap(k, piv[k]);
    }
    for i in 1..n {
        let mut s = b[i];
        for j in 0..i {
            s -= lu[i * n + j] * b[j];
        }
        b[i] = s;
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= lu[i * n + j] * b[j];
        }
        b[i] = s / lu[i * n + i];
    }
}

/// `m` block rows of size `nb`: `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
/// `lower[0]` and `upper[m-1]` are ignored. All blocks row-major, stored
/// contiguously. On success `rhs` holds the solution; on failure returns the
/// index of the block row whose pivot vanished.
pub(crate) fn block_tridiag_solve(
    m: usize,
    nb: usize,
    lower: &[f64],
    diag: &mut [f64],
    upper: &[f64],
    rhs: &mut [f64],
) -> Result<(), usize> {
    let bs = nb * nb;
    // gamma[i] = diag'^{-1} upper[i]
    let mut gamma = vec![0.0; m * bs];
    let mut piv = vec![0usize; nb];
    let mut col = vec![0.0; nb];
    let mut tmp = vec![0.0; nb];
    for i in 0..m {
        if i > 0 {
            let a = &lower[i * bs..(i + 1) * bs];
            let (g_prev, y_prev) = (&gamma[(i - 1) * bs..i * bs], &rhs[(i - 1) * nb..i * nb]);
            // diag[i] -= a * gamma[i-1]; rhs[i] -= a * y[i-1]
            for r in 0..nb {
                tmp[r] = 0.0;
                for c in 0..nb {
                    let mut s = 0.0;
                    for k in 0..nb {
                        s += a[r * nb + k] * g_prev[k * nb + c];
                    }
                    diag[i * bs + r * nb + c] -= s;
                }
                for k in 0..nb {
                    tmp[r] += a[r * nb + k] * y_prev[k];
                }
            }
            for r in 0..nb {
                rhs[i * nb + r] -= tmp[r];
            }
        }
        let d = &mut diag[i * bs..(i + 1) * bs];
        lu_factor(d, nb, &mut piv).ok_or(i)?;
        lu_solve(d, nb, &piv, &mut rhs[i * nb..(i + 1) * nb]);
        if i + 1 < m {
            let u = &upper[i * bs..(i + 1) * bs];
            for c in 0..nb {
                for r in 0..nb {
                    col[r] = u[r * nb + c];
                }
                lu_solve(d, nb, &piv, &mut col);
                for r in 0..nb {
                    gamma[i * bs + r * nb + c] = col[r];
                }
            }
        }
    }
    for i in (0..m.saturating_sub(1)).rev() {
        let g = &gamma[i * bs..(i + 1) * bs];
        for r in 0..nb {
            let mut s = 0.0;
            for k in 0..nb {
                s += g[r * nb + k] * rhs[(i + 1) * nb + k];
            }
            rhs[i * nb + r] -= s;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        // needs pivoting: zero in the (0,0) slot
        let mut a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let orig = a.clone();
        let x = [1.0, -2.0, 0.5];
        let mut b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| orig[i * 3 + j] * x[j]).sum())
            .collect();
        let mut piv = [0; 3];
        lu_factor(&mut a, 3, &mut piv).unwrap();
        lu_solve(&a, 3, &piv, &mut b);
        for i in 0..3 {
            assert!((b[i] - x[i]).abs() < 1e-14);
        }
        let mut s = vec![1.0, 2.0, 2.0, 4.0];
        assert!(lu_factor(&mut s, 2, &mut [0; 2]).is_none());
    }

    #[test]
    fn block_thomas_matches_dense_product() {
        let (m, nb) = (5, 3);
        let bs = nb * nb;
        let val = |i: usize, s: u64| ((i as u64 * 2654435761 + s) % 1000) as f64 / 1000.0 - 0.5;
        let lower: Vec<f64> = (0..m * bs).map(|i| val(i, 1)).collect();
        let upper: Vec<f64> = (0..m * bs).map(|i| val(i, 7)).collect();
        let mut diag: Vec<f64> = (0..m * bs)
            .map(|i| val(i, 3) + if (i % bs) % (nb + 1) == 0 { 4.0 } else { 0.0 })
            .collect();
        let x: Vec<f64> = (0..m * nb).map(|i| val(i, 11)).collect();
        let mut rhs = vec![0.0; m * nb];
        for i in 0..m {
            for r in 0..nb {
                let mut s = 0.0;
                for c in 0..nb {
                    s += diag[i * bs + r * nb + c] * x[i * nb + c];
                    if i > 0 {
                        s += lower[i * bs + r * nb + c] * x[(i - 1) * nb + c];
                    }
                    if i + 1 < m {
                        s += upper[i * bs + r * nb + c] * x[(i + 1) * nb + c];
                    }
                }
                rhs[i * nb + r] = s;
            }
        }
        block_tridiag_solve(m, nb, &lower, &mut diag, &upper, &mut rhs).unwrap();
        for (a, b) in rhs.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}
