use std::collections::BTreeMap;
use std::ops::ControlFlow;

use num_complex::Complex64;

use crate::dirichlet::Character;
use crate::error::{Error, Result};
use crate::primes::PrimeTable;
use crate::weight::SmoothWeight;

/// Largest list length [`enumerate_smooth`] will materialize.
pub const DEFAULT_ENUM_BUDGET: usize = 50_000_000;

/// Exact counts of smooth numbers per reduced residue class.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothCounts {
    pub x: f64,
    pub y: f64,
    pub q: u64,
    /// Keys are exactly the residues mod q coprime to q.
    pub per_residue: BTreeMap<u64, u64>,
    /// Count of smooth n <= x with gcd(n, q) = 1; equals the sum of `per_residue`.
    pub psi_q: u64,
}

impl SmoothCounts {
    /// Normalized deviations `count * phi(q) / psi_q - 1` per reduced residue.
    pub fn deviations(&self) -> Vec<(u64, f64)> {
        let phi = self.per_residue.len() as f64;
        self.per_residue
            .iter()
            .map(|(&a, &c)| (a, c as f64 * phi / self.psi_q as f64 - 1.0))
            .collect()
    }

    /// Maximum absolute normalized deviation.
    pub fn discrepancy(&self) -> f64 {
        self.deviations()
            .iter()
            .map(|&(_, d)| d.abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn integer_cutoff(x: f64) -> Result<u64> {
    if !(x >= 1.0) {
        return Err(Error::domain(format!("cutoff x = {x} must be >= 1")));
    }
    if x >= 9.0e18 {
        return Err(Error::capacity(format!("cutoff x = {x} exceeds 64-bit enumeration range")));
    }
    Ok(x.floor() as u64)
}

fn walk<F: FnMut(u64) -> ControlFlow<()>>(
    primes: &[u64],
    n_max: u64,
    cur: u64,
    start: usize,
    f: &mut F,
) -> ControlFlow<()> {
    f(cur)?;
    for (i, &p) in primes.iter().enumerate().skip(start) {
        if cur > n_max / p {
            break;
        }
        walk(primes, n_max, cur * p, i, f)?;
    }
    ControlFlow::Continue(())
}

/// Visits every y-smooth integer in [1, x] exactly once, in depth-first
/// order over nondecreasing prime factorizations (not sorted). Returns
/// whether the visitor ran to completion.
pub fn try_for_each_smooth<F: FnMut(u64) -> ControlFlow<()>>(
    x: f64,
    y: f64,
    table: &PrimeTable,
    mut f: F,
) -> Result<bool> {
    let n_max = integer_cutoff(x)?;
    let primes = table.primes_upto(y)?;
    Ok(walk(primes, n_max, 1, 0, &mut f).is_continue())
}

/// Infallible-visitor variant of [`try_for_each_smooth`].
pub fn for_each_smooth<F: FnMut(u64)>(x: f64, y: f64, table: &PrimeTable, mut f: F) -> Result<()> {
    try_for_each_smooth(x, y, table, |n| {
        f(n);
        ControlFlow::Continue(())
    })
    .map(|_| ())
}

/// True iff every prime factor of n is `<= y`; n = 1 counts as smooth.
pub fn is_smooth(n: u64, y: f64, table: &PrimeTable) -> Result<bool> {
    if n == 0 {
        return Err(Error::domain("smoothness is defined for n >= 1"));
    }
    if n == 1 {
        return Ok(true);
    }
    if y < 2.0 {
        return Ok(false);
    }
    if n as f64 <= y {
        return Ok(true);
    }
    if table.has_spf() && n <= table.limit() {
        let mut m = n;
        while m > 1 {
            let p = table.spf(m).expect("spf covers m <= limit");
            if p as f64 > y {
                return Ok(false);
            }
            m /= p;
        }
        return Ok(true);
    }
    let mut m = n;
    for &p in table.primes_upto(y)? {
        if p > m / p {
            break;
        }
        while m % p == 0 {
            m /= p;
        }
    }
    Ok(m == 1 || m as f64 <= y)
}

/// All y-smooth integers in [1, x], ascending.
pub fn enumerate_smooth(x: f64, y: f64, table: &PrimeTable) -> Result<Vec<u64>> {
    enumerate_smooth_with_budget(x, y, table, DEFAULT_ENUM_BUDGET)
}

/// Same as [`enumerate_smooth`] with an explicit length budget.
pub fn enumerate_smooth_with_budget(
    x: f64,
    y: f64,
    table: &PrimeTable,
    budget: usize,
) -> Result<Vec<u64>> {
    let mut out: Vec<u64> = Vec::new();
    let completed = try_for_each_smooth(x, y, table, |n| {
        if out.len() == budget {
            return ControlFlow::Break(());
        }
        out.push(n);
        ControlFlow::Continue(())
    })?;
    if !completed {
        return Err(Error::capacity(format!(
            "smooth enumeration exceeds budget of {budget} values"
        )));
    }
    out.sort_unstable();
    Ok(out)
}

/// Count of y-smooth integers in [1, x]; streams without materializing.
pub fn psi_exact(x: f64, y: f64, table: &PrimeTable) -> Result<u64> {
    let mut count = 0u64;
    for_each_smooth(x, y, table, |_| count += 1)?;
    Ok(count)
}

/// Exact per-residue smooth counts mod q; streams with a running residue.
pub fn psi_progression_exact(x: f64, y: f64, q: u64, table: &PrimeTable) -> Result<SmoothCounts> {
    if q < 1 {
        return Err(Error::domain("modulus q must be >= 1"));
    }
    let mut counts = vec![0u64; q as usize];
    for_each_smooth(x, y, table, |n| counts[(n % q) as usize] += 1)?;
    let mut per_residue = BTreeMap::new();
    let mut psi_q = 0u64;
    for (a, &c) in counts.iter().enumerate() {
        if gcd(a as u64, q) == 1 {
            per_residue.insert(a as u64, c);
            psi_q += c;
        }
    }
    Ok(SmoothCounts { x, y, q, per_residue, psi_q })
}

/// Character sum over smooth numbers: sum of chi(n) for y-smooth n <= x.
pub fn psi_character_exact(x: f64, y: f64, chi: &Character, table: &PrimeTable) -> Result<Complex64> {
    let values = chi.value_table();
    let q = chi.group().modulus();
    let mut sum = Complex64::new(0.0, 0.0);
    for_each_smooth(x, y, table, |n| sum += values[(n % q) as usize])?;
    Ok(sum)
}

/// Weighted character sum: sum of chi(n) * weight(n / x) over smooth n in
/// the weight's support.
pub fn psi_weighted_exact(
    x: f64,
    y: f64,
    chi: &Character,
    weight: &SmoothWeight,
    table: &PrimeTable,
) -> Result<Complex64> {
    let values = chi.value_table();
    let q = chi.group().modulus();
    let cutoff = x * weight.support_end();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut status = Ok(());
    for_each_smooth(cutoff, y, table, |n| {
        if status.is_err() {
            return;
        }
        match weight.eval(n as f64 / x) {
            Ok(w) => sum += values[(n % q) as usize] * w,
            Err(e) => status = Err(e),
        }
    })?;
    status?;
    Ok(sum)
}
