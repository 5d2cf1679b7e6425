use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

// 15-point Kronrod extension of the 7-point Gauss rule; abscissae are for
// the interval [-1, 1], positive half (last entry is the midpoint).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
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
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod panel: returns the K15 value and |K15 - G7| as the
/// error estimate.
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    for j in 0..3 {
        let idx = 2 * j + 1;
        let x = h * XGK[idx];
        let pair = f(c - x) + f(c + x);
        resg += WG[j] * pair;
        resk += WGK[idx] * pair;
    }
    for j in 0..4 {
        let idx = 2 * j;
        let x = h * XGK[idx];
        let pair = f(c - x) + f(c + x);
        resk += WGK[idx] * pair;
    }
    (resk * h, ((resk - resg) * h).norm())
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive Gauss-Kronrod integration of a complex-valued function over
/// [a, b] to an absolute tolerance. Returns the value and the accumulated
/// error estimate. Deterministic: panel refinement follows the error heap.
pub fn integrate<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<(Complex64, f64)> {
    if a == b {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    if !(a < b) {
        return Err(Error::domain(format!("integration bounds [{a}, {b}] are not ordered")));
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e });
    // panels that can no longer be bisected at floating-point resolution
    let mut stalled: Vec<Panel> = Vec::new();
    let mut heap_err = e;
    let mut stalled_err = 0.0;
    while heap_err + stalled_err > abs_tol && !heap.is_empty() {
        if heap.len() + stalled.len() >= max_panels {
            break;
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        heap_err -= worst.err;
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            stalled_err += worst.err;
            stalled.push(worst);
            continue;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        heap_err += e1 + e2;
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
    }
    let total_err = heap_err + stalled_err;
    let n_panels = heap.len() + stalled.len();
    let value: Complex64 =
        heap.iter().map(|p| p.value).sum::<Complex64>() + stalled.iter().map(|p| p.value).sum::<Complex64>();
    if total_err > abs_tol {
        return Err(Error::numeric(format!(
            "quadrature on [{a}, {b}] stalled at residual {total_err:.3e} (tolerance {abs_tol:.3e}, {n_panels} panels)"
        )));
    }
    Ok((value, total_err))
}

/// Adaptive integration of a real-valued function.
pub fn integrate_real<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<(f64, f64)> {
    let (v, e) = integrate(|t| Complex64::new(f(t), 0.0), a, b, abs_tol, max_panels)?;
    Ok((v.re, e))
}
