//! Adaptive Gauss–Kronrod (7/15) quadrature with global bisection.

use crate::error::{Error, Result};
use crate::sum;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod evaluation: (integral, |K - G|).
pub fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = hl * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * hl, ((k - g) * hl).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

/// Adaptive integral of `f` over `[a, b]`; returns (value, error estimate).
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, opts: &QuadOptions) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (v, e) = kronrod15(f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total = sum::compensated(parts.iter().map(|p| p.2));
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            return Ok((total, err));
        }
        if parts.len() >= opts.max_intervals {
            return Err(Error::QuadratureFailure { a, b, estimate: err });
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return Err(Error::QuadratureFailure { a, b, estimate: err });
        }
        let (v1, e1) = kronrod15(f, lo, mid);
        let (v2, e2) = kronrod15(f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}
