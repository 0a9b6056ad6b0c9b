//! Independent oracles: explicit inverses, direct formula transcription and
//! quadrature. Nothing here calls into the factor-and-solve paths it checks.

#![allow(dead_code)]

use empbridge_core::{Dataset, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(a: &Dense) -> Dense {
    let n = a.len();
    let mut aug: Dense = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| aug[i][c].abs().total_cmp(&aug[j][c].abs()))
            .unwrap();
        aug.swap(c, p);
        let piv = aug[c][c];
        assert!(piv.abs() > 1e-300, "singular matrix in oracle");
        aug[c].iter_mut().for_each(|v| *v /= piv);
        for r in 0..n {
            if r != c {
                let f = aug[r][c];
                if f != 0.0 {
                    let pivot_row = aug[c].clone();
                    aug[r]
                        .iter_mut()
                        .zip(&pivot_row)
                        .for_each(|(v, p)| *v -= f * p);
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn quad_form(a: &Dense, u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..u.len() {
        for j in 0..v.len() {
            s += u[i] * a[i][j] * v[j];
        }
    }
    s
}

pub fn to_dense(m: &Matrix) -> Dense {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Raw rows for the brute-force pipeline.
#[derive(Debug, Clone)]
pub struct Instance {
    pub key: Vec<f64>,
    pub x: Dense,
    pub y: Vec<f64>,
    pub intercept: bool,
    pub d: usize,
}

impl Instance {
    pub fn dataset(&self) -> Dataset {
        let m = self.x[0].len();
        let flat = self.x.iter().flatten().copied().collect();
        Dataset::new(
            Some(self.key.clone()),
            Matrix::new(self.y.len(), m, flat).unwrap(),
            self.y.clone(),
        )
        .unwrap()
    }
}

/// Random instance with `n <= 30`, at most 3 design columns, `d <= 4`.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.random_range(8..=30);
    let intercept = rng.random_bool(0.5);
    let cols = rng.random_range(1..=3);
    let m = if intercept { cols - 1 } else { cols };
    let x: Dense = (0..n)
        .map(|_| (0..m).map(|_| rng.random_range(-2.0..3.0)).collect())
        .collect();
    let y = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    let key = (0..n).map(|_| rng.random::<f64>()).collect();
    let d = rng.random_range(1..=4);
    Instance {
        key,
        x,
        y,
        intercept,
        d,
    }
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Direct transcription of the test statistic with explicit inverses and
/// exact integer grid arithmetic.
pub fn brute_force_statistic(inst: &Instance) -> f64 {
    let n = inst.y.len();
    let d = inst.d;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| inst.key[a].partial_cmp(&inst.key[b]).unwrap());
    let x: Dense = idx
        .iter()
        .map(|&i| {
            let mut r = inst.x[i].clone();
            if inst.intercept {
                r.push(1.0);
            }
            r
        })
        .collect();
    let y: Vec<f64> = idx.iter().map(|&i| inst.y[i]).collect();
    let m = x[0].len();

    // θ̂ = (XᵀX)⁻¹ XᵀY
    let xtx: Dense = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| (0..n).map(|i| x[i][a] * x[i][b]).sum())
                .collect()
        })
        .collect();
    let xty: Vec<f64> = (0..m)
        .map(|a| (0..n).map(|i| x[i][a] * y[i]).sum())
        .collect();
    let inv = inverse(&xtx);
    let theta: Vec<f64> = (0..m)
        .map(|a| (0..m).map(|b| inv[a][b] * xty[b]).sum())
        .collect();
    let eps: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..m).map(|a| x[i][a] * theta[a]).sum::<f64>())
        .collect();
    let sigma = (eps.iter().map(|e| e * e).sum::<f64>() / n as f64).sqrt();

    let delta = |k: usize| eps[..k].iter().sum::<f64>();
    let total = delta(n);
    let node = |k: usize| (delta(k) - k as f64 / n as f64 * total) / (sigma * (n as f64).sqrt());

    // grid point i/(d+1): n·t = i·n/(d+1) exactly
    let q: Vec<f64> = (1..=d)
        .map(|i| {
            let k = i * n / (d + 1);
            let lambda = (i * n % (d + 1)) as f64 / (d + 1) as f64;
            if lambda == 0.0 {
                node(k)
            } else {
                (1.0 - lambda) * node(k) + lambda * node(k + 1)
            }
        })
        .collect();

    let g: Dense = xtx
        .iter()
        .map(|r| r.iter().map(|v| v / n as f64).collect())
        .collect();
    let g_inv = inverse(&g);
    let lorentz = |k: usize| -> Vec<f64> {
        (0..m)
            .map(|a| (0..k).map(|i| x[i][a]).sum::<f64>() / n as f64)
            .collect()
    };
    let l_end = lorentz(n);
    let l0 = |i: usize| -> Vec<f64> {
        let t = i as f64 / (d + 1) as f64;
        let k = i * n / (d + 1);
        lorentz(k)
            .iter()
            .zip(&l_end)
            .map(|(l, e)| l - t * e)
            .collect()
    };
    let big_q: Dense = (1..=d)
        .map(|i| {
            (1..=d)
                .map(|j| {
                    let (s, t) = (i as f64 / (d + 1) as f64, j as f64 / (d + 1) as f64);
                    s.min(t) - s * t - quad_form(&g_inv, &l0(i), &l0(j))
                })
                .collect()
        })
        .collect();
    quad_form(&inverse(&big_q), &q, &q)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// `Γ(d/2)` from the half-integer recursion.
pub fn gamma_half(d: usize) -> f64 {
    let (mut g, mut a) = if d.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    while a < d as f64 / 2.0 {
        g *= a;
        a += 1.0;
    }
    g
}

/// `P(χ²_d ≤ x)` by quadrature after substituting `x = u²`, which removes the
/// `x^{-1/2}` singularity at zero for `d = 1`.
pub fn chi2_cdf_quadrature(x: f64, d: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let c = 2.0 / (2f64.powf(d as f64 / 2.0) * gamma_half(d));
    let f = |u: f64| c * u.powi(d as i32 - 1) * (-u * u / 2.0).exp();
    adaptive_simpson(&f, 0.0, x.sqrt(), 1e-13)
}
