use crate::error::{Error, Result};

/// Largest `limit` accepted by [`build_prime_table`].
pub const DEFAULT_LIMIT_BUDGET: u64 = 50_000_000;

/// Largest `limit` for which the smallest-prime-factor array is materialized.
/// Above this the table still lists primes but factors by trial division.
pub const SPF_LIMIT: u64 = 10_000_000;

/// Primes up to a fixed limit, with an optional smallest-prime-factor array.
///
/// The table is immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
    /// spf[n] = smallest prime factor of n for 2 <= n <= limit; empty when
    /// the limit exceeds [`SPF_LIMIT`].
    spf: Vec<u32>,
}

/// Builds a [`PrimeTable`] covering all primes `<= limit`.
///
/// Uses a linear sieve when the smallest-prime-factor array fits the budget,
/// otherwise a plain sieve of Eratosthenes for the prime list alone.
pub fn build_prime_table(limit: u64) -> Result<PrimeTable> {
    build_prime_table_with_budget(limit, DEFAULT_LIMIT_BUDGET)
}

/// Same as [`build_prime_table`] with an explicit limit budget.
pub fn build_prime_table_with_budget(limit: u64, budget: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(Error::domain(format!("prime table limit {limit} must be >= 2")));
    }
    if limit > budget {
        return Err(Error::capacity(format!(
            "prime table limit {limit} exceeds budget {budget}"
        )));
    }
    if limit <= SPF_LIMIT {
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        let mut primes: Vec<u64> = Vec::new();
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u64);
            }
            for &p in &primes {
                let p = p as usize;
                if p > spf[i] as usize || i * p > n {
                    break;
                }
                spf[i * p] = p as u32;
            }
        }
        Ok(PrimeTable { limit, primes, spf })
    } else {
        let n = limit as usize;
        let mut composite = vec![false; n + 1];
        let mut primes: Vec<u64> = Vec::new();
        for i in 2..=n {
            if !composite[i] {
                primes.push(i as u64);
                let mut j = i * i;
                while j <= n {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        Ok(PrimeTable { limit, primes, spf: Vec::new() })
    }
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// All primes `<= limit`, ascending.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// All primes `<= y`, ascending. Requires `y <= limit`.
    pub fn primes_upto(&self, y: f64) -> Result<&[u64]> {
        if !(y >= 2.0) {
            return Err(Error::domain(format!("smoothness bound y = {y} must be >= 2")));
        }
        if y > self.limit as f64 {
            return Err(Error::domain(format!(
                "smoothness bound y = {y} exceeds table limit {}",
                self.limit
            )));
        }
        let cut = y.floor() as u64;
        let idx = self.primes.partition_point(|&p| p <= cut);
        Ok(&self.primes[..idx])
    }

    /// Smallest prime factor of n, when the spf array covers n.
    pub fn spf(&self, n: u64) -> Option<u64> {
        if n >= 2 && (n as usize) < self.spf.len() {
            Some(self.spf[n as usize] as u64)
        } else {
            None
        }
    }

    pub fn has_spf(&self) -> bool {
        !self.spf.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division_primes(limit: u64) -> Vec<u64> {
        (2..=limit)
            .filter(|&n| (2..).take_while(|d| d * d <= n).all(|d| n % d != 0))
            .collect()
    }

    #[test]
    fn small_tables() {
        let t = build_prime_table(10).unwrap();
        assert_eq!(t.primes(), &[2, 3, 5, 7]);
        let t = build_prime_table(2).unwrap();
        assert_eq!(t.primes(), &[2]);
    }

    #[test]
    fn against_trial_division() {
        let t = build_prime_table(10_000).unwrap();
        assert_eq!(t.primes(), trial_division_primes(10_000).as_slice());
    }

    #[test]
    fn prime_count_at_one_million() {
        let t = build_prime_table(1_000_000).unwrap();
        assert_eq!(t.primes().len(), 78498);
    }

    #[test]
    fn spf_invariants() {
        let t = build_prime_table(3000).unwrap();
        assert!(t.has_spf());
        for n in 2..=3000u64 {
            let p = t.spf(n).unwrap();
            assert_eq!(n % p, 0, "spf({n}) = {p} must divide n");
            assert!(t.primes().binary_search(&p).is_ok(), "spf({n}) = {p} must be prime");
            for &r in t.primes() {
                if r >= p {
                    break;
                }
                assert_ne!(n % r, 0, "{n} has a prime factor {r} below spf {p}");
            }
        }
    }

    #[test]
    fn primes_upto_slices() {
        let t = build_prime_table(100).unwrap();
        assert_eq!(t.primes_upto(10.0).unwrap(), &[2, 3, 5, 7]);
        assert_eq!(t.primes_upto(2.0).unwrap(), &[2]);
        assert_eq!(t.primes_upto(30.5).unwrap().last(), Some(&29));
        assert!(t.primes_upto(101.0).is_err());
        assert!(t.primes_upto(1.0).is_err());
    }

    #[test]
    fn rejects_bad_limits() {
        assert!(matches!(build_prime_table(1), Err(Error::Domain(_))));
        assert!(matches!(
            build_prime_table_with_budget(1000, 100),
            Err(Error::Capacity(_))
        ));
    }
}
