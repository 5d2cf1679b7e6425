use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use num_complex::Complex64;

use crate::dirichlet::Character;
use crate::error::{Error, Result};
use crate::primes::PrimeTable;
use crate::quad::integrate;
use crate::saddle::{log_l_principal, solve_alpha};
use crate::weight::{bump, SmoothWeight};

/// Adaptive quadrature settings for Mellin and contour integrals.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSettings {
    /// Transform tolerance relative to the integrand's natural scale.
    pub rel_tol: f64,
    /// Contour-band tolerance relative to the integrand's natural scale;
    /// the certified truncation tail dominates the error budget, so bands
    /// run looser than the transform.
    pub contour_rel_tol: f64,
    /// Panel budget per integration call.
    pub max_panels: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings { rel_tol: 1e-10, contour_rel_tol: 1e-8, max_panels: 40_000 }
    }
}

/// Evaluator for the Mellin transform of a smooth weight, with a write-once
/// cache of derivative norms keyed by (sigma bits, k).
#[derive(Debug)]
pub struct MellinEvaluator {
    weight: SmoothWeight,
    settings: QuadratureSettings,
    norm_cache: Mutex<BTreeMap<(u64, u32), f64>>,
    /// Transform values keyed by (Re s, Im s) bits; contour integrals for
    /// different characters share the same abscissa, so quadrature nodes
    /// repeat across characters.
    line_cache: Mutex<HashMap<(u64, u64), Complex64>>,
}

impl MellinEvaluator {
    pub fn new(weight: SmoothWeight) -> Self {
        Self::with_settings(weight, QuadratureSettings::default())
    }

    pub fn with_settings(weight: SmoothWeight, settings: QuadratureSettings) -> Self {
        MellinEvaluator {
            weight,
            settings,
            norm_cache: Mutex::new(BTreeMap::new()),
            line_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn weight(&self) -> &SmoothWeight {
        &self.weight
    }

    /// Cached derivative norm M_k at abscissa sigma.
    pub fn derivative_norm(&self, sigma: f64, k: u32) -> Result<f64> {
        let key = (sigma.to_bits(), k);
        if let Some(&v) = self.norm_cache.lock().expect("norm cache lock").get(&key) {
            return Ok(v);
        }
        let v = self.weight.derivative_norm(sigma, k)?;
        self.norm_cache.lock().expect("norm cache lock").insert(key, v);
        Ok(v)
    }

    /// The Mellin transform: integral of weight(t) t^(s-1) over the support,
    /// for Re(s) > 0. Evaluated in the integrated-by-parts form
    /// (1/(s B)) int_0^1 bump(w) tau(w)^s dw, whose integrand is supported on
    /// the short transition interval and oscillates only |Im s| * eps times.
    pub fn transform(&self, s: Complex64) -> Result<Complex64> {
        if !(s.re > 0.0) {
            return Err(Error::domain(format!("mellin transform requires Re(s) > 0, got {}", s.re)));
        }
        // the k = 1 decay bound is the integrand's natural scale
        let scale = self.derivative_norm(s.re, 1)? / s.norm();
        let (v, _) = integrate(
            |w| {
                let b = bump(w);
                if b == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                b * (s * self.weight.tau(w).ln()).exp()
            },
            0.0,
            1.0,
            self.settings.rel_tol * scale.max(1e-280) * crate::weight::bump_norm(),
            self.settings.max_panels,
        )?;
        Ok(v / (s * crate::weight::bump_norm()))
    }

    /// Memoized transform along a fixed vertical line; arguments with
    /// Im s < 0 resolve through the conjugate symmetry of the transform.
    fn transform_cached(&self, s: Complex64) -> Result<Complex64> {
        if s.im < 0.0 {
            return Ok(self.transform_cached(s.conj())?.conj());
        }
        let key = (s.re.to_bits(), s.im.to_bits());
        if let Some(&v) = self.line_cache.lock().expect("line cache lock").get(&key) {
            return Ok(v);
        }
        let v = self.transform(s)?;
        self.line_cache.lock().expect("line cache lock").insert(key, v);
        Ok(v)
    }

    /// Integration-by-parts decay bound: M_k / |s (s+1) ... (s+k-1)|,
    /// guaranteed to dominate |transform(s)|.
    pub fn decay_bound(&self, s: Complex64, k: u32) -> Result<f64> {
        if !(s.re > 0.0) {
            return Err(Error::domain(format!("decay bound requires Re(s) > 0, got {}", s.re)));
        }
        let m_k = self.derivative_norm(s.re, k)?;
        let mut denom = 1.0;
        for j in 0..k {
            denom *= (s + j as f64).norm();
        }
        Ok(m_k / denom)
    }

    /// Certified bound on the two-sided contour tail beyond |t| = t_max:
    /// (1/pi) * scale * min over k >= 2 of M_k / ((k-1) t_max^(k-1)), where
    /// scale = x^alpha L(alpha, chi_0; y). Infinite when t_max = 0.
    pub fn tail_bound(&self, scale: f64, alpha: f64, t_max: f64) -> Result<f64> {
        let mut best = f64::INFINITY;
        for k in 2..=self.weight.k_max() {
            let m_k = self.derivative_norm(alpha, k)?;
            let b = m_k / ((k - 1) as f64 * t_max.powi(k as i32 - 1));
            best = best.min(b);
        }
        Ok(scale * best / std::f64::consts::PI)
    }
}

/// A contour integral value with its accumulated error information.
#[derive(Debug, Clone, Copy)]
pub struct ContourValue {
    pub value: Complex64,
    /// Quadrature error estimate over the integrated range.
    pub quad_error: f64,
    /// Certified bound on the omitted |t| > t_max tail.
    pub tail_bound: f64,
    /// Half-length of the integrated t-range.
    pub t_max: f64,
}

/// Precomputed data for the integrand L(alpha+it, chi; y) x^(alpha+it)
/// mellin(alpha+it) along the vertical line through the saddle point.
struct ContourIntegrand<'a> {
    ev: &'a MellinEvaluator,
    alpha: f64,
    log_x: f64,
    x_alpha: f64,
    /// (log p, chi(p)) for p <= y, p coprime to the modulus.
    primes: Vec<(f64, Complex64)>,
    chi_is_real: bool,
}

impl<'a> ContourIntegrand<'a> {
    fn build(
        x: f64,
        y: f64,
        chi: &Character,
        ev: &'a MellinEvaluator,
        table: &PrimeTable,
    ) -> Result<Self> {
        let alpha = solve_alpha(x, y, table)?;
        let q = chi.group().modulus();
        let mut primes = Vec::new();
        for &p in table.primes_upto(y)? {
            if q % p == 0 {
                continue;
            }
            primes.push(((p as f64).ln(), chi.eval(p)));
        }
        let log_x = x.ln();
        if alpha * log_x > 600.0 {
            return Err(Error::capacity(format!(
                "x^alpha overflows the contour integrand at x = {x}"
            )));
        }
        Ok(ContourIntegrand {
            ev,
            alpha,
            log_x,
            x_alpha: (alpha * log_x).exp(),
            primes,
            chi_is_real: chi.is_real(),
        })
    }

    fn euler_product(&self, s: Complex64) -> Complex64 {
        let mut log_l = Complex64::new(0.0, 0.0);
        for &(lp, chip) in &self.primes {
            let factor = Complex64::new(1.0, 0.0) - chip * (-s * lp).exp();
            log_l -= factor.ln();
        }
        log_l.exp()
    }

    fn one_sided(&self, t: f64) -> Result<Complex64> {
        let s = Complex64::new(self.alpha, t);
        let phase = Complex64::new(0.0, t * self.log_x).exp();
        Ok(self.euler_product(s) * self.x_alpha * phase * self.ev.transform_cached(s)?)
    }

    /// f(t) + f(-t); collapses to 2 Re f(t) for real characters, making the
    /// result exactly real.
    fn symmetric_pair(&self, t: f64) -> Result<Complex64> {
        let plus = self.one_sided(t)?;
        if self.chi_is_real {
            return Ok(Complex64::new(2.0 * plus.re, 0.0));
        }
        Ok(plus + self.one_sided(-t)?)
    }

    /// Natural magnitude of the integrand near the saddle point, used to
    /// scale quadrature tolerances.
    fn scale(&self) -> Result<f64> {
        let m1 = self.ev.derivative_norm(self.alpha, 1)?;
        let l0: f64 = self
            .primes
            .iter()
            .map(|&(lp, _)| -(-(-self.alpha * lp).exp()).ln_1p())
            .sum();
        Ok(self.x_alpha * l0.exp() * m1 / self.alpha)
    }

    /// Principal-character magnitude x^alpha L(alpha, chi_0; y) bounding
    /// |L(s, chi; y) x^s| on the line.
    fn axis_bound(&self, q: u64, y: f64, table: &PrimeTable) -> Result<f64> {
        Ok(self.x_alpha * log_l_principal(self.alpha, y, q, table)?.exp())
    }

    fn integrate_band(&self, t_lo: f64, t_hi: f64, abs_tol: f64) -> Result<(Complex64, f64)> {
        if t_lo == t_hi {
            return Ok((Complex64::new(0.0, 0.0), 0.0));
        }
        let (v, e) = integrate(
            |t| self.symmetric_pair(t).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
            t_lo,
            t_hi,
            abs_tol,
            self.ev.settings.max_panels,
        )?;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::numeric("contour integrand failed inside quadrature"));
        }
        Ok((v / (2.0 * std::f64::consts::PI), e / (2.0 * std::f64::consts::PI)))
    }
}

/// Contour integral of the weighted smooth-count integrand over a band
/// t_lo <= |t| <= t_hi (both signs), normalized by 1/(2 pi).
pub fn contour_segment(
    x: f64,
    y: f64,
    chi: &Character,
    ev: &MellinEvaluator,
    t_lo: f64,
    t_hi: f64,
    table: &PrimeTable,
) -> Result<(Complex64, f64)> {
    if !(t_lo >= 0.0 && t_hi >= t_lo) {
        return Err(Error::domain(format!("band [{t_lo}, {t_hi}] must satisfy 0 <= t_lo <= t_hi")));
    }
    let integrand = ContourIntegrand::build(x, y, chi, ev, table)?;
    let tol = ev.settings.contour_rel_tol * integrand.scale()?;
    integrand.integrate_band(t_lo, t_hi, tol)
}

/// Truncated contour integral over |t| <= t_max with a certified tail bound
/// for the omitted range.
pub fn contour_psi(
    x: f64,
    y: f64,
    chi: &Character,
    ev: &MellinEvaluator,
    t_max: f64,
    table: &PrimeTable,
) -> Result<ContourValue> {
    if !(t_max >= 0.0) {
        return Err(Error::domain(format!("truncation t_max = {t_max} must be >= 0")));
    }
    let integrand = ContourIntegrand::build(x, y, chi, ev, table)?;
    let q = chi.group().modulus();
    let axis = integrand.axis_bound(q, y, table)?;
    let tol = ev.settings.contour_rel_tol * integrand.scale()?;
    let (value, quad_error) = integrand.integrate_band(0.0, t_max, tol)?;
    let tail_bound = ev.tail_bound(axis, integrand.alpha, t_max)?;
    Ok(ContourValue { value, quad_error, tail_bound, t_max })
}

/// Truncated contour integral with the truncation chosen automatically: the
/// band doubles outward from |t| <= 8 until the certified tail bound falls
/// below 1e-3 of the running value.
pub fn contour_psi_auto(
    x: f64,
    y: f64,
    chi: &Character,
    ev: &MellinEvaluator,
    table: &PrimeTable,
) -> Result<ContourValue> {
    let integrand = ContourIntegrand::build(x, y, chi, ev, table)?;
    let q = chi.group().modulus();
    let axis = integrand.axis_bound(q, y, table)?;
    let tol = ev.settings.contour_rel_tol * integrand.scale()?;
    let mut value = Complex64::new(0.0, 0.0);
    let mut quad_error = 0.0;
    let mut t_prev = 0.0f64;
    let mut t_max = 8.0f64;
    loop {
        let (v, e) = integrand.integrate_band(t_prev, t_max, tol)?;
        value += v;
        quad_error += e;
        let tail_bound = ev.tail_bound(axis, integrand.alpha, t_max)?;
        if tail_bound <= 1e-3 * value.norm() {
            return Ok(ContourValue { value, quad_error, tail_bound, t_max });
        }
        if t_max >= 1e6 {
            return Err(Error::numeric(format!(
                "contour tail bound {tail_bound:.3e} still above 1e-3 of |{:.6e}| at t_max = {t_max}",
                value.norm()
            )));
        }
        t_prev = t_max;
        t_max *= 2.0;
    }
}

/// The central band |t| <= u_param / sqrt(log x log y) of the contour, the
/// dominant range around the saddle point; 1 <= u_param <= sqrt(u).
pub fn central_segment(
    x: f64,
    y: f64,
    chi: &Character,
    ev: &MellinEvaluator,
    u_param: f64,
    table: &PrimeTable,
) -> Result<(Complex64, f64)> {
    let u = x.ln() / y.ln();
    if !(u > 1.0) {
        return Err(Error::domain(format!("central segment requires u > 1, got u = {u}")));
    }
    if !(1.0 <= u_param && u_param * u_param <= u * (1.0 + 1e-12)) {
        return Err(Error::domain(format!(
            "central band parameter {u_param} outside [1, sqrt(u)] with u = {u}"
        )));
    }
    let half_width = u_param / (x.ln() * y.ln()).sqrt();
    contour_segment(x, y, chi, ev, 0.0, half_width, table)
}

/// Half-width of the central band for a given u_param.
pub fn central_half_width(x: f64, y: f64, u_param: f64) -> f64 {
    u_param / (x.ln() * y.ln()).sqrt()
}
