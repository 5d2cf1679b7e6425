use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quad::integrate_real;

/// Which side of [0, 1] the transition interval sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSide {
    /// 1 on [0, 1-eps], 0 on [1, inf): a minorant of the indicator of [0, 1].
    Lower,
    /// 1 on [0, 1], 0 on [1+eps, inf): a majorant of the indicator of [0, 1].
    Upper,
}

impl WeightSide {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightSide::Lower => "lower",
            WeightSide::Upper => "upper",
        }
    }
}

/// Highest derivative order supported by the polynomial recurrence tables.
pub const K_MAX_SUPPORTED: u32 = 12;

const DEFAULT_K_MAX: u32 = 8;

/// The standard bump exp(-1/(t(1-t))) on (0, 1), zero elsewhere.
pub fn bump(t: f64) -> f64 {
    if t <= 1.0e-8 || t >= 1.0 - 1.0e-8 {
        return 0.0;
    }
    (-1.0 / (t * (1.0 - t))).exp()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

fn poly_scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|&x| c * x).collect()
}

fn poly_derivative(a: &[f64]) -> Vec<f64> {
    if a.len() <= 1 {
        return vec![0.0];
    }
    (1..a.len()).map(|i| i as f64 * a[i]).collect()
}

/// Compensated Horner evaluation (error-free transformations via FMA).
/// The numerator polynomials have huge alternating coefficients and small
/// values across most of (0, 1); plain Horner loses up to 8 digits there,
/// which the downstream 1/(t(1-t))^(2m) factor amplifies into visible noise.
fn poly_eval(a: &[f64], t: f64) -> f64 {
    let mut s = *a.last().expect("nonempty polynomial");
    let mut c = 0.0f64;
    for &coeff in a.iter().rev().skip(1) {
        let prod = s * t;
        let prod_err = s.mul_add(t, -prod);
        let sum = prod + coeff;
        let tmp = sum - prod;
        let sum_err = (prod - (sum - tmp)) + (coeff - tmp);
        s = sum;
        c = c.mul_add(t, prod_err + sum_err);
    }
    s + c
}

/// Numerator polynomials N_m with b^(m)(t) = b(t) * N_m(t) / (t(1-t))^(2m).
/// Writing w = t(1-t), differentiation gives the recurrence
/// N_{m+1} = (N_m' * w - 2m * N_m * w') * w + N_m * w'.
fn numerator_polys() -> &'static Vec<Vec<f64>> {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let w = vec![0.0, 1.0, -1.0];
        let wd = vec![1.0, -2.0];
        let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
        for m in 0..K_MAX_SUPPORTED as usize {
            let n_m = &polys[m];
            let inner = poly_add(
                &poly_mul(&poly_derivative(n_m), &w),
                &poly_scale(&poly_mul(n_m, &wd), -2.0 * m as f64),
            );
            polys.push(poly_add(&poly_mul(&inner, &w), &poly_mul(n_m, &wd)));
        }
        polys
    })
}

/// m-th derivative of the bump, computed from the closed-form numerator
/// polynomials (exact up to float rounding, no finite differences).
pub fn bump_derivative(m: u32, t: f64) -> f64 {
    assert!(m <= K_MAX_SUPPORTED, "derivative order {m} above supported maximum");
    if t <= 1.0e-8 || t >= 1.0 - 1.0e-8 {
        return 0.0;
    }
    let b = bump(t);
    if m == 0 {
        return b;
    }
    let num = poly_eval(&numerator_polys()[m as usize], t);
    b * num / (t * (1.0 - t)).powi(2 * m as i32)
}

/// Normalizing constant of the bump: the integral of bump over (0, 1).
pub fn bump_norm() -> f64 {
    static NORM: OnceLock<f64> = OnceLock::new();
    *NORM.get_or_init(|| {
        integrate_real(bump, 0.0, 1.0, 1e-15, 2000)
            .expect("bump normalization integral converges")
            .0
    })
}

/// Normalized ramp: the integral of the bump over (0, w) divided by the full
/// bump mass; rises smoothly from 0 at w <= 0 to 1 at w >= 1.
pub fn ramp(w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    if w >= 1.0 {
        return 1.0;
    }
    let (v, _) = integrate_real(bump, 0.0, w, 1e-15, 2000).expect("ramp integral converges");
    (v / bump_norm()).clamp(0.0, 1.0)
}

/// A C-infinity approximation to the indicator of [0, 1], equal to the
/// normalized bump ramp across its transition interval.
#[derive(Debug, Clone, Copy)]
pub struct SmoothWeight {
    side: WeightSide,
    epsilon: f64,
    k_max: u32,
}

impl SmoothWeight {
    pub fn new(side: WeightSide, epsilon: f64) -> Result<Self> {
        Self::with_k_max(side, epsilon, DEFAULT_K_MAX)
    }

    pub fn with_k_max(side: WeightSide, epsilon: f64, k_max: u32) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::domain(format!("epsilon = {epsilon} must lie in (0, 1/2)")));
        }
        if k_max < 1 || k_max > K_MAX_SUPPORTED {
            return Err(Error::domain(format!(
                "k_max = {k_max} must lie in [1, {K_MAX_SUPPORTED}]"
            )));
        }
        Ok(SmoothWeight { side, epsilon, k_max })
    }

    pub fn side(&self) -> WeightSide {
        self.side
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Highest derivative order with a computable norm bound.
    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    /// End of the support: the weight vanishes at and beyond this point.
    pub fn support_end(&self) -> f64 {
        match self.side {
            WeightSide::Lower => 1.0,
            WeightSide::Upper => 1.0 + self.epsilon,
        }
    }

    /// The open interval on which the weight transitions from 1 to 0.
    pub fn transition(&self) -> (f64, f64) {
        match self.side {
            WeightSide::Lower => (1.0 - self.epsilon, 1.0),
            WeightSide::Upper => (1.0, 1.0 + self.epsilon),
        }
    }

    /// Transition parametrization t = tau(w): w in [0, 1] sweeps the
    /// transition interval from its upper end (weight 0) to its lower end
    /// (weight 1); dt = -eps dw.
    pub(crate) fn tau(&self, w: f64) -> f64 {
        match self.side {
            WeightSide::Lower => 1.0 - self.epsilon * w,
            WeightSide::Upper => 1.0 + self.epsilon - self.epsilon * w,
        }
    }

    /// Weight value at t >= 0; exactly 0/1 outside the transition interval.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::domain(format!("weight argument t = {t} must be >= 0")));
        }
        let (lo, hi) = self.transition();
        if t <= lo {
            Ok(1.0)
        } else if t >= hi {
            Ok(0.0)
        } else {
            Ok(ramp((hi - t) / self.epsilon))
        }
    }

    /// Mellin transform at a real point sigma > 0, where the integrand is
    /// positive: integral of weight(t) t^(sigma-1), evaluated through the
    /// integrated-by-parts form (1/(sigma B)) int_0^1 bump(w) tau(w)^sigma dw.
    pub fn mellin_real(&self, sigma: f64) -> Result<f64> {
        if !(sigma > 0.0) {
            return Err(Error::domain(format!("mellin abscissa sigma = {sigma} must be > 0")));
        }
        let (v, _) = integrate_real(
            |w| bump(w) * self.tau(w).powf(sigma),
            0.0,
            1.0,
            1e-14,
            4000,
        )?;
        Ok(v / (sigma * bump_norm()))
    }

    /// Derivative norm M_k: integral of |weight^(k)(t)| t^(sigma+k-1) over
    /// the transition interval, for 1 <= k <= k_max.
    pub fn derivative_norm(&self, sigma: f64, k: u32) -> Result<f64> {
        if !(sigma > 0.0) {
            return Err(Error::domain(format!("mellin abscissa sigma = {sigma} must be > 0")));
        }
        if k < 1 || k > self.k_max {
            return Err(Error::domain(format!("derivative order k = {k} outside [1, {}]", self.k_max)));
        }
        let m = k - 1;
        let power = sigma + k as f64 - 1.0;
        // scale the tolerance to the integrand's magnitude, sampled coarsely
        let peak = (0..=100)
            .map(|i| bump_derivative(m, i as f64 / 100.0).abs())
            .fold(0.0, f64::max)
            .max(1e-300);
        let (v, _) = integrate_real(
            |w| bump_derivative(m, w).abs() * self.tau(w).powf(power),
            0.0,
            1.0,
            1e-10 * peak,
            20_000,
        )?;
        Ok(v / (self.epsilon.powi(m as i32) * bump_norm()))
    }
}
