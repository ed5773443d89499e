//! Independent numeric oracles for the integration suites: adaptive
//! quadrature, the raw two-pair rate expectation, exhaustive subset search,
//! and a small least-squares helper. Nothing here calls the library's own
//! special-function or scheduling code paths it is used to check.
//!
//! Each test binary pulls in the whole module but uses only part of it.
#![allow(dead_code)]

use d2dsim::ChannelRealization;

/// Adaptive Simpson quadrature on a finite interval.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 40)
}

/// E1(x) = int_x^inf e^-t/t dt by quadrature only (substituting
/// t = x - ln u maps the tail onto the unit interval).
pub fn e1_by_quadrature(x: f64) -> f64 {
    assert!(x > 0.0);
    (-x).exp() * adaptive_simpson(&|u: f64| 1.0 / (x - u.ln()), 0.0, 1.0, 1e-13)
}

/// Upper integration limit standing in for infinity in exp(-t)-weighted
/// integrals; exp(-50) ~ 2e-22 is far below every tolerance used here.
const TAIL: f64 = 50.0;

/// Partner-silent branch of the two-pair rate expectation, in nats:
/// E_g[ int_{gamma (g + 1/p)}^inf ln(1 + p t) e^-t dt ], by raw nested
/// quadrature of the double integral.
pub fn branch_partner_silent(gamma: f64, p: f64) -> f64 {
    adaptive_simpson(
        &|g: f64| {
            let a = gamma * (g + 1.0 / p);
            let inner = adaptive_simpson(
                &|s: f64| (1.0 + p * (a + s)).ln() * (-s).exp(),
                0.0,
                TAIL,
                1e-11,
            );
            (-g).exp() * (-a).exp() * inner
        },
        0.0,
        TAIL,
        1e-9,
    )
}

/// Partner-active branch, in nats:
/// E_g[ int_{gamma (g + 1/p)}^inf ln(1 + t / (g + 1/p)) e^-t dt ].
pub fn branch_partner_active(gamma: f64, p: f64) -> f64 {
    adaptive_simpson(
        &|g: f64| {
            let c = g + 1.0 / p;
            let a = gamma * c;
            let inner = adaptive_simpson(
                &|s: f64| (1.0 + (a + s) / c).ln() * (-s).exp(),
                0.0,
                TAIL,
                1e-11,
            );
            (-g).exp() * (-a).exp() * inner
        },
        0.0,
        TAIL,
        1e-9,
    )
}

/// Best sum rate over all 2^K on/off subsets, by exhaustive enumeration.
pub fn best_subset_sum_rate(real: &ChannelRealization) -> f64 {
    let k = real.num_pairs();
    assert!(k <= 20, "exhaustive search is for small K only");
    let n_over_p = real.noise_over_power();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << k) {
        let mut sum = 0.0;
        for i in 0..k {
            if mask & (1 << i) == 0 {
                continue;
            }
            let mut interference = 0.0;
            for j in 0..k {
                if j != i && mask & (1 << j) != 0 {
                    interference += real.gain(i, j);
                }
            }
            sum += (1.0 + real.gain(i, i) / (interference + n_over_p)).log2();
        }
        best = best.max(sum);
    }
    best
}

/// R^2 of the least-squares quadratic fit y = a + b x + c x^2.
pub fn quadratic_fit_r2(xs: &[f64], ys: &[f64]) -> f64 {
    assert!(xs.len() == ys.len() && xs.len() >= 3);
    let n = xs.len();
    // Normal equations for the 3x3 system.
    let mut m = [[0.0f64; 4]; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let pows = [1.0, x, x * x];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += pows[r] * pows[c];
            }
            m[r][3] += pows[r] * y;
        }
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        for row in col + 1..3 {
            let factor = m[row][col] / m[col][col];
            for c in col..4 {
                m[row][c] -= factor * m[col][c];
            }
        }
    }
    let mut coeff = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut acc = m[row][3];
        for c in row + 1..3 {
            acc -= m[row][c] * coeff[c];
        }
        coeff[row] = acc / m[row][row];
    }
    let mean = ys.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - (coeff[0] + coeff[1] * x + coeff[2] * x * x)).powi(2))
        .sum();
    1.0 - ss_res / ss_tot
}
