use num_complex::Complex64;

use crate::dirichlet::Character;
use crate::error::{Error, Result};
use crate::primes::PrimeTable;
use crate::weight::SmoothWeight;

/// Saddle-point data for a pair (x, y): the exponent alpha where the Mellin
/// integrand is stationary, together with the local scale factors.
#[derive(Debug, Clone, Copy)]
pub struct SaddleData {
    pub x: f64,
    pub y: f64,
    /// log x / log y.
    pub u: f64,
    /// Solution of sum over p <= y of log p / (p^alpha - 1) = log x.
    pub alpha: f64,
    /// Solution of e^xi = 1 + xi * u.
    pub xi: f64,
    /// Second-derivative scale at alpha (primes p | q omitted).
    pub phi2: f64,
    /// log of the truncated Euler product at alpha for the principal
    /// character (primes p | q omitted).
    pub log_l: f64,
}

/// Solves e^xi = 1 + xi * u for xi > 0, for u > 1.
pub fn solve_xi(u: f64) -> Result<f64> {
    if !(u > 1.0) {
        return Err(Error::domain(format!("xi(u) requires u > 1, got u = {u}")));
    }
    let f = |xi: f64| xi.exp() - 1.0 - xi * u;
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while f(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::numeric("xi bracket expansion failed"));
        }
    }
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut xi = 0.5 * (lo + hi);
    for _ in 0..60 {
        let fx = f(xi);
        if fx > 0.0 {
            hi = xi;
        } else {
            lo = xi;
        }
        if fx.abs() <= 1e-13 * (1.0 + xi * u) {
            return Ok(xi);
        }
        let deriv = xi.exp() - u;
        let step = fx / deriv;
        let next = xi - step;
        xi = if deriv != 0.0 && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    if f(xi).abs() <= 1e-12 * (1.0 + xi * u) {
        Ok(xi)
    } else {
        Err(Error::numeric(format!("xi solver did not converge at u = {u}")))
    }
}

fn saddle_residual(alpha: f64, primes: &[u64], log_x: f64) -> f64 {
    primes
        .iter()
        .map(|&p| {
            let lp = (p as f64).ln();
            lp / ((p as f64).powf(alpha) - 1.0)
        })
        .sum::<f64>()
        - log_x
}

fn saddle_residual_derivative(alpha: f64, primes: &[u64]) -> f64 {
    -primes
        .iter()
        .map(|&p| {
            let pa = (p as f64).powf(alpha);
            let lp = (p as f64).ln();
            pa * lp * lp / ((pa - 1.0) * (pa - 1.0))
        })
        .sum::<f64>()
}

/// Solves sum over p <= y of log p / (p^alpha - 1) = log x for alpha > 0.
/// The left side is strictly decreasing in alpha, so a bracketed Newton
/// iteration is safe; the residual at the returned alpha is below
/// 1e-12 * log x.
pub fn solve_alpha(x: f64, y: f64, table: &PrimeTable) -> Result<f64> {
    if !(x > 1.0) {
        return Err(Error::domain(format!("saddle point requires x > 1, got x = {x}")));
    }
    let primes = table.primes_upto(y)?;
    let log_x = x.ln();
    let tol = 1e-12 * log_x;

    let mut lo = 1e-9f64;
    let mut hi = {
        let u = log_x / y.ln();
        let guess = if u > 1.0 { 1.0 - solve_xi(u)? / y.ln() } else { 1.0 };
        guess.clamp(1e-3, 2.0)
    };
    while saddle_residual(hi, primes, log_x) > 0.0 {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::numeric("alpha bracket expansion failed"));
        }
    }
    for _ in 0..10 {
        let mid = 0.5 * (lo + hi);
        if saddle_residual(mid, primes, log_x) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut alpha = 0.5 * (lo + hi);
    for _ in 0..100 {
        let r = saddle_residual(alpha, primes, log_x);
        if r > 0.0 {
            lo = alpha;
        } else {
            hi = alpha;
        }
        if r.abs() <= tol {
            return Ok(alpha);
        }
        let d = saddle_residual_derivative(alpha, primes);
        let next = alpha - r / d;
        alpha = if d != 0.0 && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    let r = saddle_residual(alpha, primes, log_x);
    if r.abs() <= 1e-9 * log_x {
        Ok(alpha)
    } else {
        Err(Error::numeric(format!(
            "alpha solver stalled at residual {r:.3e} for x = {x}, y = {y}"
        )))
    }
}

/// Second logarithmic-derivative scale: sum over p <= y, p not dividing q,
/// of p^alpha (log p)^2 / (p^alpha - 1)^2.
pub fn phi2(alpha: f64, y: f64, q: u64, table: &PrimeTable) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("phi2 requires alpha > 0, got {alpha}")));
    }
    let mut sum = 0.0;
    for &p in table.primes_upto(y)? {
        if q % p == 0 {
            continue;
        }
        let pa = (p as f64).powf(alpha);
        let lp = (p as f64).ln();
        sum += pa * lp * lp / ((pa - 1.0) * (pa - 1.0));
    }
    Ok(sum)
}

/// log of the Euler product over p <= y of (1 - chi(p) p^(-s))^(-1), by the
/// principal branch; primes with chi(p) = 0 contribute nothing.
pub fn log_l_truncated(
    s: Complex64,
    chi: &Character,
    y: f64,
    table: &PrimeTable,
) -> Result<Complex64> {
    if !(s.re > 0.0) {
        return Err(Error::domain(format!("Euler product requires Re(s) > 0, got {}", s.re)));
    }
    let q = chi.group().modulus();
    let mut sum = Complex64::new(0.0, 0.0);
    for &p in table.primes_upto(y)? {
        if q % p == 0 {
            continue;
        }
        let factor = Complex64::new(1.0, 0.0) - chi.eval(p) * (-s * (p as f64).ln()).exp();
        if factor.norm() < 1e-300 {
            return Err(Error::numeric(format!("Euler factor vanishes at p = {p}")));
        }
        sum -= factor.ln();
    }
    Ok(sum)
}

/// The truncated Euler product itself; may overflow for large x-scale
/// arguments, in which case callers should stay in log space.
pub fn l_truncated(s: Complex64, chi: &Character, y: f64, table: &PrimeTable) -> Result<Complex64> {
    Ok(log_l_truncated(s, chi, y, table)?.exp())
}

/// Real-axis principal-character case of [`log_l_truncated`].
pub fn log_l_principal(alpha: f64, y: f64, q: u64, table: &PrimeTable) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("Euler product requires alpha > 0, got {alpha}")));
    }
    let mut sum = 0.0;
    for &p in table.primes_upto(y)? {
        if q % p == 0 {
            continue;
        }
        sum -= (-(1.0f64) / (p as f64).powf(alpha)).ln_1p();
    }
    Ok(sum)
}

impl SaddleData {
    /// Solves the saddle point for (x, y) and evaluates the scale factors,
    /// omitting primes dividing q from phi2 and log L. Requires x > y so
    /// that u > 1.
    pub fn compute(x: f64, y: f64, q: u64, table: &PrimeTable) -> Result<SaddleData> {
        let u = x.ln() / y.ln();
        if !(u > 1.0) {
            return Err(Error::domain(format!(
                "saddle data requires u = log x / log y > 1, got u = {u}"
            )));
        }
        let alpha = solve_alpha(x, y, table)?;
        let xi = solve_xi(u)?;
        let phi2 = phi2(alpha, y, q, table)?;
        let log_l = log_l_principal(alpha, y, q, table)?;
        Ok(SaddleData { x, y, u, alpha, xi, phi2, log_l })
    }
}

/// Saddle-point estimate of the weighted smooth count:
/// x^alpha L(alpha) mellin(alpha) / sqrt(2 pi phi2), assembled in log space.
pub fn ht_estimate(
    x: f64,
    y: f64,
    weight: &SmoothWeight,
    q: u64,
    table: &PrimeTable,
) -> Result<f64> {
    let sd = SaddleData::compute(x, y, q, table)?;
    let mellin = weight.mellin_real(sd.alpha)?;
    let log_est = sd.alpha * x.ln() + sd.log_l + mellin.ln()
        - 0.5 * (2.0 * std::f64::consts::PI * sd.phi2).ln();
    Ok(log_est.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::build_group;
    use crate::primes::build_prime_table;
    use crate::smooth::for_each_smooth;
    use crate::weight::WeightSide;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bisect_xi(u: f64) -> f64 {
        let f = |xi: f64| xi.exp() - 1.0 - xi * u;
        let (mut lo, mut hi) = (1e-18, 50.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn xi_hand_and_oracle_values() {
        assert!((solve_xi(std::f64::consts::E - 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(solve_xi(1.0 + 1e-6).unwrap() < 1e-2);
        let xi10 = solve_xi(10.0).unwrap();
        assert!((xi10 - 3.614950427087530).abs() < 1e-9);
        assert!((xi10 - bisect_xi(10.0)).abs() < 1e-12);
        for &u in &[1.5, 2.0, 5.0, 50.0, 300.0] {
            let xi = solve_xi(u).unwrap();
            assert!((xi.exp() - 1.0 - xi * u).abs() <= 1e-12 * (1.0 + xi * u), "u = {u}");
        }
        assert!(solve_xi(1.0).is_err());
        assert!(solve_xi(0.5).is_err());
    }

    #[test]
    fn xi_is_deterministic() {
        for &u in &[1.2, 3.7, 12.0] {
            assert_eq!(solve_xi(u).unwrap().to_bits(), solve_xi(u).unwrap().to_bits());
        }
    }

    #[test]
    fn alpha_residual_grid() {
        let table = build_prime_table(10_000).unwrap();
        for &x in &[1e4, 1e6, 1e8] {
            for &y in &[1e2, 1e3, 1e4] {
                if y >= x {
                    continue;
                }
                let alpha = solve_alpha(x, y, &table).unwrap();
                let primes = table.primes_upto(y).unwrap();
                let r = saddle_residual(alpha, primes, x.ln());
                assert!(r.abs() <= 1e-9 * x.ln(), "x={x} y={y} residual {r:.3e}");
                assert_eq!(
                    solve_alpha(x, y, &table).unwrap().to_bits(),
                    alpha.to_bits(),
                    "determinism x={x} y={y}"
                );
            }
        }
    }

    #[test]
    fn alpha_frozen_value() {
        let table = build_prime_table(1000).unwrap();
        let alpha = solve_alpha(1e6, 1e3, &table).unwrap();
        assert!((alpha - 0.810772226116982).abs() < 1e-9);
    }

    #[test]
    fn saddle_map_is_strictly_decreasing() {
        let table = build_prime_table(1000).unwrap();
        for &(x, y) in &[(1e4, 1e2), (1e6, 1e3)] {
            let alpha = solve_alpha(x, y, &table).unwrap();
            let primes = table.primes_upto(y).unwrap();
            let below = saddle_residual(alpha - 1e-3, primes, x.ln());
            let above = saddle_residual(alpha + 1e-3, primes, x.ln());
            assert!(below > 0.0 && above < 0.0, "x={x} y={y}");
        }
    }

    #[test]
    fn alpha_near_first_order_approximation() {
        let table = build_prime_table(1000).unwrap();
        let (x, y) = (1e8, 1e3);
        let alpha = solve_alpha(x, y, &table).unwrap();
        let u = x.ln() / y.ln();
        let approx = 1.0 - solve_xi(u).unwrap() / y.ln();
        assert!((alpha - approx).abs() <= 10.0 / x.ln());
    }

    #[test]
    fn phi2_values() {
        let table = build_prime_table(1000).unwrap();
        let v = phi2(1.0, 100.0, 1, &table).unwrap();
        assert!((v - 10.994376987789954).abs() < 1e-9);
        assert!(phi2(0.5, 500.0, 6, &table).unwrap() > 0.0);

        let alpha = solve_alpha(1e6, 1e3, &table).unwrap();
        let ratio = phi2(alpha, 1e3, 1, &table).unwrap() / (1e6f64.ln() * 1e3f64.ln());
        assert!((0.05..=20.0).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn euler_product_values() {
        let table = build_prime_table(1000).unwrap();
        let one = build_group(1).unwrap();
        let chi = one.principal();
        let v = l_truncated(Complex64::new(1.0, 0.0), &chi, 2.0, &table).unwrap();
        assert!((v - Complex64::new(2.0, 0.0)).norm() < 1e-12);

        // product over p <= 10 at s = 2 vs the smooth harmonic series
        let product = l_truncated(Complex64::new(2.0, 0.0), &chi, 10.0, &table).unwrap();
        let mut series = 0.0;
        for_each_smooth(1e6, 10.0, &table, |n| series += 1.0 / (n as f64 * n as f64)).unwrap();
        assert!((product.re - series).abs() < 1e-6);
        assert!(product.im.abs() < 1e-15);
    }

    #[test]
    fn euler_product_dominated_by_principal_axis() {
        let table = build_prime_table(1000).unwrap();
        let group = build_group(7).unwrap();
        let chars = group.characters();
        let alpha = 0.7;
        let bound = log_l_principal(alpha, 100.0, 7, &table).unwrap().exp();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let t: f64 = rng.gen_range(-50.0..50.0);
            let chi = &chars[rng.gen_range(0..chars.len())];
            let v = l_truncated(Complex64::new(alpha, t), chi, 100.0, &table).unwrap();
            assert!(v.norm() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn log_l_positive_above_one() {
        let table = build_prime_table(10_000).unwrap();
        for &(x, y) in &[(1e4, 1e2), (1e6, 1e3), (1e8, 1e4)] {
            let sd = SaddleData::compute(x, y, 1, &table).unwrap();
            assert!(sd.u > 1.0);
            assert!(sd.log_l > 0.0, "x={x} y={y}");
            assert!(sd.phi2 > 0.0);
        }
        assert!(SaddleData::compute(100.0, 100.0, 1, &table).is_err());
    }

    #[test]
    fn ht_estimate_is_positive_and_monotone_in_x() {
        let table = build_prime_table(100).unwrap();
        let w = SmoothWeight::new(WeightSide::Lower, 0.05).unwrap();
        let mut prev = 0.0;
        for &x in &[1e4, 1e5, 1e6] {
            let est = ht_estimate(x, 1e2, &w, 1, &table).unwrap();
            assert!(est > prev, "x = {x}");
            prev = est;
        }
    }

    #[test]
    fn domain_errors() {
        let table = build_prime_table(100).unwrap();
        assert!(solve_alpha(0.5, 10.0, &table).is_err());
        assert!(solve_alpha(100.0, 1.0, &table).is_err());
        assert!(phi2(0.0, 10.0, 1, &table).is_err());
        let one = build_group(1).unwrap();
        assert!(log_l_truncated(Complex64::new(0.0, 1.0), &one.principal(), 10.0, &table).is_err());
    }
}
