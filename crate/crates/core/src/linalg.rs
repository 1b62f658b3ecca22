//! Small dense helpers: restarted GMRES for matrix-free complex operators.

use num_complex::Complex64;

use crate::error::{LabError, Result};

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct GmresReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solve `A x = b` by GMRES(`restart`) with modified Gram-Schmidt and Givens rotations.
///
/// `apply` writes `A v` into its second argument. Starts from `x = 0`.
pub fn gmres(
    n: usize,
    apply: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
    b: &[Complex64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vec<Complex64>, GmresReport)> {
    let zero = Complex64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((
            x,
            GmresReport {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut av = vec![zero; n];
    let mut total = 0;
    let mut rel = 1.0;
    while total < max_iter {
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= tol {
            break;
        }
        let m = restart.min(max_iter - total);
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![zero; m]; m + 1];
        let mut cs = vec![zero; m];
        let mut sn = vec![zero; m];
        let mut s = vec![zero; m + 1];
        s[0] = Complex64::new(beta, 0.0);
        let mut used = 0;
        for k in 0..m {
            apply(&basis[k], &mut av);
            total += 1;
            let mut w = av.clone();
            for (q, vq) in basis.iter().enumerate() {
                let hq = dot(vq, &w);
                hess[q][k] = hq;
                for (wi, vi) in w.iter_mut().zip(vq) {
                    *wi -= hq * vi;
                }
            }
            let wn = norm(&w);
            hess[k + 1][k] = Complex64::new(wn, 0.0);
            for q in 0..k {
                let t = cs[q].conj() * hess[q][k] + sn[q].conj() * hess[q + 1][k];
                hess[q + 1][k] = -sn[q] * hess[q][k] + cs[q] * hess[q + 1][k];
                hess[q][k] = t;
            }
            let (a, bb) = (hess[k][k], hess[k + 1][k]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == 0.0 {
                cs[k] = Complex64::new(1.0, 0.0);
                sn[k] = zero;
            } else {
                cs[k] = a / den;
                sn[k] = bb / den;
            }
            hess[k][k] = cs[k].conj() * a + sn[k].conj() * bb;
            hess[k + 1][k] = zero;
            s[k + 1] = -sn[k] * s[k];
            s[k] = cs[k].conj() * s[k];
            used = k + 1;
            rel = s[k + 1].norm() / bnorm;
            if rel <= tol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution on the triangular Hessenberg block
        let mut y = vec![zero; used];
        for q in (0..used).rev() {
            let mut acc = s[q];
            for t in q + 1..used {
                acc -= hess[q][t] * y[t];
            }
            if hess[q][q].norm() == 0.0 {
                return Err(LabError::Singular { condition: f64::INFINITY });
            }
            y[q] = acc / hess[q][q];
        }
        for (q, yq) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[q]) {
                *xi += yq * vi;
            }
        }
        apply(&x, &mut av);
        for ((ri, bi), ai) in r.iter_mut().zip(b).zip(&av) {
            *ri = bi - ai;
        }
        rel = norm(&r) / bnorm;
        if rel <= tol {
            break;
        }
    }
    if rel > tol {
        return Err(LabError::NotConverged {
            method: "GMRES",
            iterations: total,
            residual: rel,
        });
    }
    Ok((
        x,
        GmresReport {
            iterations: total,
            relative_residual: rel,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_small_nonsymmetric_system() {
        let n = 30;
        let c = |re, im| Complex64::new(re, im);
        let mut apply = |v: &[Complex64], out: &mut [Complex64]| {
            for i in 0..n {
                let mut acc = c(3.0, 0.5) * v[i];
                if i > 0 {
                    acc += c(-1.0, 0.2) * v[i - 1];
                }
                if i + 1 < n {
                    acc += c(0.4, -1.0) * v[i + 1];
                }
                out[i] = acc;
            }
        };
        let b: Vec<Complex64> = (0..n).map(|i| c(i as f64, 1.0)).collect();
        let (x, rep) = gmres(n, &mut apply, &b, 1e-12, 10, 500).unwrap();
        let mut ax = vec![c(0.0, 0.0); n];
        apply(&x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err / norm(&b) < 1e-11, "residual {err}, report {rep:?}");
    }
}
