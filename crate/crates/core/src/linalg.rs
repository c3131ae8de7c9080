//! Fixed-size dense linear algebra for the handful of small symmetric
//! systems the estimators need (4×4, 5×5, 7×7, 8×8).

pub type Matrix<const R: usize, const C: usize> = [[f64; C]; R];

pub fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm<const N: usize>(a: &[f64; N]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn zeros<const R: usize, const C: usize>() -> Matrix<R, C> {
    [[0.0; C]; R]
}

pub fn identity<const N: usize>() -> Matrix<N, N> {
    let mut m = zeros::<N, N>();
    for i in 0..N {
        m[i][i] = 1.0;
    }
    m
}

pub fn transpose<const R: usize, const C: usize>(a: &Matrix<R, C>) -> Matrix<C, R> {
    let mut t = zeros::<C, R>();
    for i in 0..R {
        for j in 0..C {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn mat_vec<const R: usize, const C: usize>(a: &Matrix<R, C>, x: &[f64; C]) -> [f64; R] {
    let mut y = [0.0; R];
    for i in 0..R {
        y[i] = dot(&a[i], x);
    }
    y
}

/// `aᵀ x`
pub fn mat_t_vec<const R: usize, const C: usize>(a: &Matrix<R, C>, x: &[f64; R]) -> [f64; C] {
    let mut y = [0.0; C];
    for i in 0..R {
        for j in 0..C {
            y[j] += a[i][j] * x[i];
        }
    }
    y
}

pub fn mat_mul<const R: usize, const K: usize, const C: usize>(
    a: &Matrix<R, K>,
    b: &Matrix<K, C>,
) -> Matrix<R, C> {
    let mut m = zeros::<R, C>();
    for i in 0..R {
        for k in 0..K {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..C {
                m[i][j] += aik * b[k][j];
            }
        }
    }
    m
}

/// `aᵀ m a` for symmetric `m`.
pub fn congruence<const R: usize, const C: usize>(a: &Matrix<R, C>, m: &Matrix<R, R>) -> Matrix<C, C> {
    let ma = mat_mul(m, a);
    mat_mul(&transpose(a), &ma)
}

/// Lower Cholesky factor of a symmetric positive-definite matrix, or `None`
/// if a non-positive pivot appears.
pub fn cholesky<const N: usize>(a: &Matrix<N, N>) -> Option<Matrix<N, N>> {
    let mut l = zeros::<N, N>();
    for j in 0..N {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = libm::sqrt(d);
        l[j][j] = djj;
        for i in (j + 1)..N {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / djj;
        }
    }
    Some(l)
}

pub fn cholesky_solve<const N: usize>(l: &Matrix<N, N>, b: &[f64; N]) -> [f64; N] {
    let mut y = [0.0; N];
    for i in 0..N {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = [0.0; N];
    for i in (0..N).rev() {
        let mut s = y[i];
        for k in (i + 1)..N {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues and a matrix whose columns are the eigenvectors.
pub fn symmetric_eigen<const N: usize>(a: &Matrix<N, N>) -> ([f64; N], Matrix<N, N>) {
    let mut m = *a;
    let mut v = identity::<N>();
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..N {
            diag += m[i][i] * m[i][i];
            for j in (i + 1)..N {
                off += m[i][j] * m[i][j];
            }
        }
        if off <= 1e-32 * diag || off == 0.0 {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..N {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..N {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..N {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut vals = [0.0; N];
    for i in 0..N {
        vals[i] = m[i][i];
    }
    (vals, v)
}

/// Inverse of a symmetric positive-semidefinite matrix.
///
/// Uses the Cholesky factor when the spectral condition number is at most
/// `max_condition`; otherwise returns the pseudo-inverse restricted to
/// eigen-directions with `λ > λ_max / max_condition`. The flag reports the
/// fallback.
pub fn spd_inverse<const N: usize>(a: &Matrix<N, N>, max_condition: f64) -> (Matrix<N, N>, bool) {
    let (vals, vecs) = symmetric_eigen(a);
    let lmax = vals.iter().cloned().fold(0.0_f64, f64::max);
    let lmin = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let well_conditioned = lmax > 0.0 && lmin > 0.0 && lmax / lmin <= max_condition;
    if well_conditioned {
        if let Some(l) = cholesky(a) {
            let mut inv = zeros::<N, N>();
            for j in 0..N {
                let mut e = [0.0; N];
                e[j] = 1.0;
                let col = cholesky_solve(&l, &e);
                for i in 0..N {
                    inv[i][j] = col[i];
                }
            }
            // symmetrize
            for i in 0..N {
                for j in (i + 1)..N {
                    let s = 0.5 * (inv[i][j] + inv[j][i]);
                    inv[i][j] = s;
                    inv[j][i] = s;
                }
            }
            return (inv, false);
        }
    }
    let cutoff = lmax / max_condition;
    let mut inv = zeros::<N, N>();
    for k in 0..N {
        if vals[k] > cutoff && vals[k] > 0.0 {
            let w = 1.0 / vals[k];
            for i in 0..N {
                for j in 0..N {
                    inv[i][j] += w * vecs[i][k] * vecs[j][k];
                }
            }
        }
    }
    (inv, true)
}

/// Ratio of largest to smallest eigenvalue; infinite when singular.
pub fn condition_number<const N: usize>(a: &Matrix<N, N>) -> f64 {
    let (vals, _) = symmetric_eigen(a);
    let lmax = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lmin = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if lmin <= 0.0 {
        f64::INFINITY
    } else {
        lmax / lmin
    }
}
