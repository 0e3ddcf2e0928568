//! Brute-force reference for the random-intercept likelihood.
//!
//! Works from Henderson's mixed-model equations on plain vectors, with its
//! own Gaussian elimination, so it shares no code with the library solver.

#![allow(dead_code)]

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Solves `m z = rhs` by partial pivoting; returns z and ln|det m|.
pub fn gauss_solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> (Vec<f64>, f64) {
    let n = rhs.len();
    let mut log_det = 0.0;
    for k in 0..n {
        let piv = (k..n).max_by(|&a, &b| m[a][k].abs().total_cmp(&m[b][k].abs())).unwrap();
        m.swap(k, piv);
        rhs.swap(k, piv);
        let d = m[k][k];
        assert!(d != 0.0, "singular system");
        log_det += d.abs().ln();
        for i in (k + 1)..n {
            let f = m[i][k] / d;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    let mut z = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| m[k][j] * z[j]).sum();
        z[k] = (rhs[k] - s) / m[k][k];
    }
    (z, log_det)
}

pub struct OraclePoint {
    pub log_likelihood: f64,
    pub beta: Vec<f64>,
}

/// Profiled (RE)ML log-likelihood at λ > 0 via the mixed-model equations.
pub fn mme_profile(y: &[f64], x: &[Vec<f64>], groups: &[usize], lambda: f64, reml: bool) -> OraclePoint {
    let n = y.len();
    let p = x[0].len();
    let q = groups.iter().max().unwrap() + 1;
    let dim = p + q;
    // C = [XᵀX XᵀZ; ZᵀX ZᵀZ + I/λ]
    let mut c = vec![vec![0.0; dim]; dim];
    let mut rhs = vec![0.0; dim];
    for i in 0..n {
        let g = p + groups[i];
        for a in 0..p {
            for b in 0..p {
                c[a][b] += x[i][a] * x[i][b];
            }
            c[a][g] += x[i][a];
            c[g][a] += x[i][a];
            rhs[a] += x[i][a] * y[i];
        }
        c[g][g] += 1.0;
        rhs[g] += y[i];
    }
    let mut zz = vec![vec![0.0; q]; q];
    for k in 0..q {
        c[p + k][p + k] += 1.0 / lambda;
        zz[k][k] = c[p + k][p + k];
    }
    let (sol, log_det_c) = gauss_solve(c, rhs);
    let (beta, u) = sol.split_at(p);
    let mut rss = 0.0;
    for i in 0..n {
        let fit: f64 = (0..p).map(|a| x[i][a] * beta[a]).sum::<f64>() + u[groups[i]];
        rss += (y[i] - fit).powi(2);
    }
    rss += u.iter().map(|v| v * v).sum::<f64>() / lambda;
    let (_, log_det_zz) = gauss_solve(zz, vec![0.0; q]);
    // |V| = λ^q |ZᵀZ + I/λ| and |C| = |ZᵀZ + I/λ| |XᵀV⁻¹X|
    let log_det_v = q as f64 * lambda.ln() + log_det_zz;
    let log_det_a = log_det_c - log_det_zz;
    let nf = n as f64;
    let log_likelihood = if reml {
        let df = nf - p as f64;
        -0.5 * (df * (LN_2PI + (rss / df).ln()) + log_det_v + log_det_a + df)
    } else {
        -0.5 * (nf * (LN_2PI + (rss / nf).ln()) + log_det_v + nf)
    };
    OraclePoint { log_likelihood, beta: beta.to_vec() }
}

/// Grid search over log λ in [−12, 12] at step 0.01, then repeated tenfold
/// zooms around the best grid point until the step reaches 1e-8.
pub fn grid_search(y: &[f64], x: &[Vec<f64>], groups: &[usize], reml: bool) -> (f64, OraclePoint) {
    let eval = |t: f64| mme_profile(y, x, groups, t.exp(), reml);
    let mut best_t = -12.0;
    let mut best = eval(best_t);
    for k in 1..=2400 {
        let t = -12.0 + 0.01 * k as f64;
        let pt = eval(t);
        if pt.log_likelihood > best.log_likelihood {
            best_t = t;
            best = pt;
        }
    }
    let mut step = 0.01;
    while step > 1e-8 {
        let centre = best_t;
        let fine = step / 10.0;
        for k in -10..=10 {
            let t = (centre + fine * k as f64).clamp(-12.0, 12.0);
            let pt = eval(t);
            if pt.log_likelihood > best.log_likelihood {
                best_t = t;
                best = pt;
            }
        }
        step = fine;
    }
    (best_t, best)
}
