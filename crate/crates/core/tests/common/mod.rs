//! Independent reference routines for the integration tests. Nothing here
//! calls into the library except to build inputs.
#![allow(dead_code)]

use krylov_certify::CsrMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(n: usize, entries: &[f64]) -> Vec<f64> {
    let mut a = entries.to_vec();
    let frob: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * frob {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Textbook dense CG, recording α, β, iterates and residuals.
pub struct BruteCg {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
}

pub fn brute_force_cg(n: usize, a: &[f64], b: &[f64], steps: usize) -> BruteCg {
    let mul = |v: &[f64]| -> Vec<f64> {
        (0..n).map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum()).collect()
    };
    let dotp = |u: &[f64], v: &[f64]| -> f64 { u.iter().zip(v).map(|(p, q)| p * q).sum() };
    let mut out = BruteCg {
        alpha: vec![],
        beta: vec![],
        x: vec![vec![0.0; n]],
        r: vec![b.to_vec()],
        d: vec![b.to_vec()],
    };
    for _ in 0..steps {
        let r = out.r.last().unwrap().clone();
        let d = out.d.last().unwrap().clone();
        let rr = dotp(&r, &r);
        if rr == 0.0 {
            break;
        }
        let ad = mul(&d);
        let alpha = rr / dotp(&d, &ad);
        let x: Vec<f64> = out.x.last().unwrap().iter().zip(&d).map(|(x, d)| x + alpha * d).collect();
        let r_new: Vec<f64> = r.iter().zip(&ad).map(|(r, ad)| r - alpha * ad).collect();
        let beta = dotp(&r_new, &r_new) / rr;
        let d_new: Vec<f64> = r_new.iter().zip(&d).map(|(r, d)| r + beta * d).collect();
        out.alpha.push(alpha);
        out.beta.push(beta);
        out.x.push(x);
        out.r.push(r_new);
        out.d.push(d_new);
    }
    out
}

/// Random orthogonal matrix by modified Gram-Schmidt (applied twice).
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut q: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    for _pass in 0..2 {
        for i in 0..n {
            for j in 0..i {
                let p: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
                let qj = q[j].clone();
                for (a, b) in q[i].iter_mut().zip(&qj) {
                    *a -= p * b;
                }
            }
            let s: f64 = q[i].iter().map(|v| v * v).sum::<f64>().sqrt();
            q[i].iter_mut().for_each(|v| *v /= s);
        }
    }
    q.into_iter().flatten().collect()
}

/// `Q diag(λ) Qᵀ`, symmetrized exactly.
pub fn with_spectrum(rng: &mut ChaCha8Rng, lambda: &[f64]) -> Vec<f64> {
    let n = lambda.len();
    let q = random_orthogonal(rng, n);
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = (0..n).map(|k| q[k * n + i] * lambda[k] * q[k * n + j]).sum();
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    a
}

/// Random SPD matrix with log-uniform spectrum in `[1, kappa]`, both ends attained.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, kappa: f64) -> (Vec<f64>, Vec<f64>) {
    let mut lambda: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => 1.0,
            1 => kappa,
            _ => kappa.powf(rng.gen_range(0.0..1.0)),
        })
        .collect();
    lambda.sort_by(|x, y| x.partial_cmp(y).unwrap());
    (with_spectrum(rng, &lambda), lambda)
}

pub fn csr(n: usize, dense: &[f64]) -> CsrMatrix {
    CsrMatrix::from_dense(n, dense).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Random SPD matrix whose spectrum sits at the Chebyshev-Lobatto points of
/// `[1, kappa]`. No Ritz value settles before step `n`, so floating-point
/// CG keeps enough orthogonality to reach exact termination.
pub fn chebyshev_spd(rng: &mut ChaCha8Rng, n: usize, kappa: f64) -> (Vec<f64>, Vec<f64>) {
    let lambda: Vec<f64> = (0..n)
        .map(|i| {
            let c = (std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
            (1.0 + kappa) / 2.0 - (kappa - 1.0) / 2.0 * c
        })
        .collect();
    (with_spectrum(rng, &lambda), lambda)
}
