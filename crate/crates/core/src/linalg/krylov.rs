use serde::{Deserialize, Serialize};

use super::sparse::{CsrMatrix, Ilu0};

/// Which method produced a solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMethod {
    BiCgStab,
    Gmres,
    Dense,
}

/// Result of an iterative solve. `converged` is false when the iteration
/// budget ran out or the method broke down.
#[derive(Clone, Debug)]
pub struct KrylovOutcome {
    pub x: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

impl KrylovOutcome {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::INFINITY)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn precondition(m: Option<&Ilu0>, b: &[f64], x: &mut [f64]) {
    match m {
        Some(m) => m.apply(b, x),
        None => x.copy_from_slice(b),
    }
}

/// Right-preconditioned BiCGSTAB. Residuals in the history are relative to `‖b‖`.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], x0: &[f64], m: Option<&Ilu0>, tol: f64, max_iter: usize) -> KrylovOutcome {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = x0.to_vec();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovOutcome {
            x,
            converged: true,
            iterations: 0,
            residual_history: vec![0.0],
        };
    }
    let mut r = a.mul_vec(&x);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut history = vec![norm(&r) / bnorm];
    if history[0] <= tol {
        return KrylovOutcome {
            x,
            converged: true,
            iterations: 0,
            residual_history: history,
        };
    }
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precondition(m, &p, &mut p_hat);
        a.mul_vec_into(&p_hat, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            break;
        }
        alpha = rho / rv;
        // r now holds s = r - αv.
        for i in 0..n {
            r[i] -= alpha * v[i];
        }
        let snorm = norm(&r) / bnorm;
        if snorm <= tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            history.push(snorm);
            return KrylovOutcome {
                x,
                converged: true,
                iterations: it,
                residual_history: history,
            };
        }
        precondition(m, &r, &mut s_hat);
        a.mul_vec_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            break;
        }
        omega = dot(&t, &r) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] -= omega * t[i];
        }
        let rn = norm(&r) / bnorm;
        history.push(rn);
        if !rn.is_finite() {
            break;
        }
        if rn <= tol {
            return KrylovOutcome {
                x,
                converged: true,
                iterations: it,
                residual_history: history,
            };
        }
        if omega == 0.0 {
            break;
        }
    }
    let iterations = history.len() - 1;
    KrylovOutcome {
        x,
        converged: false,
        iterations,
        residual_history: history,
    }
}

/// Restarted, right-preconditioned GMRES with Givens rotations.
pub fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    m: Option<&Ilu0>,
    tol: f64,
    max_iter: usize,
    restart: usize,
) -> KrylovOutcome {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = x0.to_vec();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovOutcome {
            x,
            converged: true,
            iterations: 0,
            residual_history: vec![0.0],
        };
    }
    let restart = restart.max(1);
    let mut history = Vec::new();
    let mut total = 0;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    loop {
        let mut r = a.mul_vec(&x);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        let beta = norm(&r);
        history.push(beta / bnorm);
        if beta / bnorm <= tol {
            return KrylovOutcome {
                x,
                converged: true,
                iterations: total,
                residual_history: history,
            };
        }
        if total >= max_iter || !beta.is_finite() {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            precondition(m, &basis[k], &mut z);
            a.mul_vec_into(&z, &mut w);
            for (j, vj) in basis.iter().enumerate() {
                let hjk = dot(&w, vj);
                h[j][k] = hjk;
                w.iter_mut().zip(vj).for_each(|(wi, vi)| *wi -= hjk * vi);
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for j in 0..k {
                let tmp = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = tmp;
            }
            let den = h[k][k].hypot(h[k + 1][k]);
            if den == 0.0 {
                break;
            }
            cs[k] = h[k][k] / den;
            sn[k] = h[k + 1][k] / den;
            h[k][k] = den;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            total += 1;
            let rel = g[k + 1].abs() / bnorm;
            if rel <= tol || total >= max_iter || wn == 0.0 {
                break;
            }
            history.push(rel);
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        if k_used == 0 {
            break;
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            update.iter_mut().zip(&basis[j]).for_each(|(u, v)| *u += yj * v);
        }
        precondition(m, &update, &mut z);
        x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi += zi);
    }
    KrylovOutcome {
        x,
        converged: false,
        iterations: total,
        residual_history: history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Non-symmetric convection-diffusion matrix on a 1D grid.
    fn convection(n: usize) -> CsrMatrix {
        CsrMatrix::from_rows(
            n,
            (0..n)
                .map(|i| {
                    let mut r = vec![(i, 2.0)];
                    if i > 0 {
                        r.push((i - 1, -1.3));
                    }
                    if i + 1 < n {
                        r.push((i + 1, -0.7));
                    }
                    r
                })
                .collect(),
        )
    }

    fn check(out: &KrylovOutcome, a: &CsrMatrix, b: &[f64]) {
        assert!(out.converged, "history {:?}", out.residual_history);
        let r = a.mul_vec(&out.x);
        let res: f64 = r.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!(res <= 1e-9 * norm(b), "true residual {res}");
    }

    #[test]
    fn bicgstab_with_and_without_preconditioner() {
        let a = convection(200);
        let b: Vec<f64> = (0..200).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let x0 = vec![0.0; 200];
        check(&bicgstab(&a, &b, &x0, None, 1e-12, 5000), &a, &b);
        let ilu = Ilu0::new(&a).unwrap();
        let out = bicgstab(&a, &b, &x0, Some(&ilu), 1e-12, 5000);
        assert!(out.iterations <= 2);
        check(&out, &a, &b);
    }

    #[test]
    fn gmres_converges_with_restarts() {
        let a = convection(150);
        let b: Vec<f64> = (0..150).map(|i| (i as f64 * 0.37).cos()).collect();
        let x0 = vec![0.0; 150];
        check(&gmres(&a, &b, &x0, None, 1e-12, 20_000, 10), &a, &b);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = convection(5);
        let out = bicgstab(&a, &[0.0; 5], &[1.0; 5], None, 1e-10, 10);
        assert!(out.converged && out.x.iter().all(|&v| v == 0.0));
    }
}
