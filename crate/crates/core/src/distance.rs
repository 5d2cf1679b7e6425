use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::dirichlet::{Character, CharacterGroup};
use crate::error::{Error, Result};
use crate::primes::PrimeTable;

/// A completely multiplicative function restricted to the primes p <= y with
/// p coprime to q, taking values in the closed unit disc.
#[derive(Debug, Clone)]
pub struct PrimeFunction {
    values: BTreeMap<u64, Complex64>,
}

impl PrimeFunction {
    /// The constant function 1 on every prime p <= y coprime to q.
    pub fn constant_one(y: f64, q: u64, table: &PrimeTable) -> Result<Self> {
        Self::from_fn(y, q, table, |_| Complex64::new(1.0, 0.0))
    }

    /// A character restricted to the primes p <= y coprime to its modulus.
    pub fn from_character(chi: &Character, y: f64, table: &PrimeTable) -> Result<Self> {
        Self::from_fn(y, chi.group().modulus(), table, |p| chi.eval(p))
    }

    pub fn from_fn(
        y: f64,
        q: u64,
        table: &PrimeTable,
        f: impl Fn(u64) -> Complex64,
    ) -> Result<Self> {
        let mut values = BTreeMap::new();
        for &p in table.primes_upto(y)? {
            if q % p == 0 {
                continue;
            }
            let v = f(p);
            if !(v.norm_sqr() <= (1.0 + 1e-12) * (1.0 + 1e-12)) {
                return Err(Error::domain(format!(
                    "prime function value {v} at p = {p} lies outside the unit disc"
                )));
            }
            values.insert(p, v);
        }
        Ok(PrimeFunction { values })
    }

    pub fn get(&self, p: u64) -> Option<Complex64> {
        self.values.get(&p).copied()
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.values.keys().copied()
    }
}

/// Pointwise product over the common primes.
impl std::ops::Mul for &PrimeFunction {
    type Output = PrimeFunction;

    fn mul(self, rhs: &PrimeFunction) -> PrimeFunction {
        let mut values = BTreeMap::new();
        for (&p, &a) in &self.values {
            if let Some(&b) = rhs.values.get(&p) {
                values.insert(p, a * b);
            }
        }
        PrimeFunction { values }
    }
}

/// The pretentious distance: sqrt of sum over p <= y, p coprime to q, of
/// (1 - Re(conj(f(p)) g(p))) / p^alpha. Each term is clamped at zero against
/// rounding; missing prime values are a domain error.
pub fn distance(
    f: &PrimeFunction,
    g: &PrimeFunction,
    alpha: f64,
    y: f64,
    q: u64,
    table: &PrimeTable,
) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("distance requires alpha > 0, got {alpha}")));
    }
    let mut sum = 0.0;
    for &p in table.primes_upto(y)? {
        if q % p == 0 {
            continue;
        }
        let (a, b) = match (f.get(p), g.get(p)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::domain(format!("prime function undefined at p = {p}")));
            }
        };
        let term = 1.0 - (a.re * b.re + a.im * b.im);
        sum += term.max(0.0) / (p as f64).powf(alpha);
    }
    Ok(sum.sqrt())
}

/// Per-prime data for twisted-distance evaluation: (log p, chi(p), p^-alpha).
struct TwistProfile {
    terms: Vec<(f64, Complex64, f64)>,
}

impl TwistProfile {
    fn build(chi: &Character, alpha: f64, y: f64, table: &PrimeTable) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::domain(format!("twist distance requires alpha > 0, got {alpha}")));
        }
        let q = chi.group().modulus();
        let mut terms = Vec::new();
        for &p in table.primes_upto(y)? {
            if q % p == 0 {
                continue;
            }
            terms.push(((p as f64).ln(), chi.eval(p), (p as f64).powf(-alpha)));
        }
        Ok(TwistProfile { terms })
    }

    /// Squared distance from 1 to p -> chi(p) p^(-it).
    fn d2(&self, t: f64) -> f64 {
        let mut sum = 0.0;
        for &(lp, c, w) in &self.terms {
            let (sin, cos) = (t * lp).sin_cos();
            let term = 1.0 - (c.re * cos + c.im * sin);
            sum += term.max(0.0) * w;
        }
        sum
    }
}

/// Distance from the constant 1 to the twisted character p -> chi(p) p^(-it).
pub fn dist_char_twist(
    chi: &Character,
    t: f64,
    alpha: f64,
    y: f64,
    table: &PrimeTable,
) -> Result<f64> {
    Ok(TwistProfile::build(chi, alpha, y, table)?.d2(t).sqrt())
}

/// Minimizes the squared twisted distance over the symmetric grid
/// {0, +-gridStep, ..., +-t_max}, then refines around the grid minimum by
/// golden-section search to 1e-6 in t. Returns (minimizer, squared distance).
pub fn min_dist_over_t(
    chi: &Character,
    alpha: f64,
    y: f64,
    t_max: f64,
    grid_step: f64,
    table: &PrimeTable,
) -> Result<(f64, f64)> {
    if !(t_max > 0.0 && grid_step > 0.0) {
        return Err(Error::domain(format!(
            "minimization needs t_max > 0 and grid_step > 0, got {t_max} and {grid_step}"
        )));
    }
    let profile = TwistProfile::build(chi, alpha, y, table)?;

    let mut best_t = 0.0;
    let mut best_d2 = profile.d2(0.0);
    let mut consider = |t: f64, d2: f64| {
        if d2 < best_d2 {
            best_t = t;
            best_d2 = d2;
        }
    };
    let steps = (t_max / grid_step).floor() as u64;
    for k in 1..=steps {
        let t = k as f64 * grid_step;
        consider(t, profile.d2(t));
        consider(-t, profile.d2(-t));
    }
    if steps as f64 * grid_step < t_max {
        consider(t_max, profile.d2(t_max));
        consider(-t_max, profile.d2(-t_max));
    }

    // golden-section refinement inside the bracket around the grid minimum
    let mut a = (best_t - grid_step).max(-t_max);
    let mut b = (best_t + grid_step).min(t_max);
    let inv_phi = 0.618033988749894848;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = profile.d2(c);
    let mut fd = profile.d2(d);
    while b - a > 1e-6 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = profile.d2(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = profile.d2(d);
        }
    }
    if fc < best_d2 {
        best_t = c;
        best_d2 = fc;
    }
    if fd < best_d2 {
        best_t = d;
        best_d2 = fd;
    }
    Ok((best_t, best_d2))
}

/// A character flagged as a potential equidistribution obstruction, with the
/// location and value of its minimal squared twisted distance.
#[derive(Debug, Clone)]
pub struct FlaggedCharacter {
    pub character: Character,
    pub order: u64,
    pub t_min: f64,
    pub d2_min: f64,
}

/// One coset of the subgroup H inside the reduced residues, labeled by its
/// minimal member.
#[derive(Debug, Clone)]
pub struct Coset {
    pub rep: u64,
    pub members: Vec<u64>,
}

/// Flagged characters of bounded order with small twisted distance, together
/// with their joint kernel H and its cosets.
#[derive(Debug, Clone)]
pub struct ProblemSet {
    pub q: u64,
    pub b_order: u64,
    pub threshold: f64,
    pub flagged: Vec<FlaggedCharacter>,
    pub h: Vec<u64>,
    pub index: u64,
    pub cosets: Vec<Coset>,
}

/// The default squared-distance cutoff sqrt(u) / (40 B^2).
pub fn default_distance_threshold(u: f64, b: u64) -> f64 {
    u.sqrt() / (40.0 * (b * b) as f64)
}

/// Scans the nonprincipal characters of order <= B, flags those whose minimal
/// squared twisted distance over |t| <= sqrt(q)/(2B) falls at or below the
/// default threshold sqrt(u)/(40 B^2), and assembles their joint kernel.
pub fn flag_problem_characters(
    group: &CharacterGroup,
    alpha: f64,
    y: f64,
    u: f64,
    b: u64,
    table: &PrimeTable,
) -> Result<ProblemSet> {
    flag_problem_characters_with_threshold(
        group,
        alpha,
        y,
        b,
        default_distance_threshold(u, b),
        table,
    )
}

/// Flagging with an explicit squared-distance cutoff.
pub fn flag_problem_characters_with_threshold(
    group: &CharacterGroup,
    alpha: f64,
    y: f64,
    b: u64,
    threshold: f64,
    table: &PrimeTable,
) -> Result<ProblemSet> {
    if b < 1 {
        return Err(Error::domain("order bound B must be >= 1"));
    }
    let q = group.modulus();
    let t_max = (q as f64).sqrt() / (2 * b) as f64;
    let grid_step = 1.0 / (4.0 * y.ln() * b as f64);
    let mut flagged = Vec::new();
    for chi in group.characters() {
        if chi.is_principal() {
            continue;
        }
        let order = chi.order();
        if order > b {
            continue;
        }
        let (t_min, d2_min) = min_dist_over_t(&chi, alpha, y, t_max, grid_step, table)?;
        if d2_min <= threshold {
            flagged.push(FlaggedCharacter { character: chi, order, t_min, d2_min });
        }
    }
    build_problem_set(group, b, threshold, flagged)
}

/// Assembles a ProblemSet from an explicit flagged list: the joint kernel
/// H = {h : chi(h) = 1 for every flagged chi}, its index, and the coset
/// partition of the reduced residues.
pub fn build_problem_set(
    group: &CharacterGroup,
    b_order: u64,
    threshold: f64,
    flagged: Vec<FlaggedCharacter>,
) -> Result<ProblemSet> {
    let q = group.modulus();
    let reduced = group.reduced_residues();
    let h: Vec<u64> = reduced
        .iter()
        .copied()
        .filter(|&r| flagged.iter().all(|f| f.character.is_one_at(r)))
        .collect();
    if h.is_empty() || reduced.len() % h.len() != 0 {
        return Err(Error::internal(format!(
            "kernel size {} does not divide phi({q}) = {}",
            h.len(),
            reduced.len()
        )));
    }
    let index = (reduced.len() / h.len()) as u64;

    let mut seen = std::collections::BTreeSet::new();
    let mut cosets = Vec::new();
    for &r in &reduced {
        if seen.contains(&r) {
            continue;
        }
        let mut members: Vec<u64> = h
            .iter()
            .map(|&e| if q <= 1 { 0 } else { ((r as u128 * e as u128) % q as u128) as u64 })
            .collect();
        members.sort_unstable();
        members.dedup();
        if members.len() != h.len() {
            return Err(Error::internal(format!("coset of {r} mod {q} collapsed")));
        }
        for &m in &members {
            seen.insert(m);
        }
        cosets.push(Coset { rep: members[0], members });
    }
    Ok(ProblemSet { q, b_order, threshold, flagged, h, index, cosets })
}

/// Index of H in the reduced residues, recomputed from the coset partition;
/// a size mismatch is an internal invariant violation.
pub fn subgroup_index(ps: &ProblemSet) -> Result<u64> {
    let phi: usize = ps.cosets.iter().map(|c| c.members.len()).sum();
    if ps.h.is_empty() || phi % ps.h.len() != 0 {
        return Err(Error::internal(format!(
            "kernel size {} does not divide phi = {phi}",
            ps.h.len()
        )));
    }
    Ok((phi / ps.h.len()) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::build_group;
    use crate::primes::build_prime_table;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn distance_vanishes_for_equal_functions() {
        let table = build_prime_table(100).unwrap();
        let g5 = build_group(5).unwrap();
        let f = PrimeFunction::from_character(&g5.character(&[1]).unwrap(), 50.0, &table).unwrap();
        let d = distance(&f, &f, 0.8, 50.0, 5, &table).unwrap();
        assert!(d < 1e-6);
    }

    #[test]
    fn distance_quadratic_example() {
        // mod 3 with y = 10 and alpha = 1: terms 1 (p=2), 0.4 (p=5), 0 (p=7)
        let table = build_prime_table(100).unwrap();
        let g3 = build_group(3).unwrap();
        let one = PrimeFunction::constant_one(10.0, 3, &table).unwrap();
        let chi = PrimeFunction::from_character(&g3.character(&[1]).unwrap(), 10.0, &table).unwrap();
        let d = distance(&one, &chi, 1.0, 10.0, 3, &table).unwrap();
        assert!((d - 1.4f64.sqrt()).abs() < 1e-14);

        let dt = dist_char_twist(&g3.character(&[1]).unwrap(), 0.0, 1.0, 10.0, &table).unwrap();
        assert_eq!(d, dt);
    }

    #[test]
    fn distance_is_symmetric() {
        let table = build_prime_table(100).unwrap();
        let g7 = build_group(7).unwrap();
        let f = PrimeFunction::from_character(&g7.character(&[1]).unwrap(), 80.0, &table).unwrap();
        let g = PrimeFunction::from_character(&g7.character(&[2]).unwrap(), 80.0, &table).unwrap();
        let ab = distance(&f, &g, 0.7, 80.0, 7, &table).unwrap();
        let ba = distance(&g, &f, 0.7, 80.0, 7, &table).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn distance_rejects_missing_primes() {
        let table = build_prime_table(100).unwrap();
        let one_small = PrimeFunction::constant_one(10.0, 1, &table).unwrap();
        let one_big = PrimeFunction::constant_one(50.0, 1, &table).unwrap();
        assert!(distance(&one_small, &one_big, 0.8, 50.0, 1, &table).is_err());
        assert!(distance(&one_big, &one_big, 0.0, 50.0, 1, &table).is_err());
    }

    #[test]
    fn unit_disc_invariant_enforced() {
        let table = build_prime_table(100).unwrap();
        let too_big = PrimeFunction::from_fn(50.0, 1, &table, |_| Complex64::new(1.5, 0.0));
        assert!(too_big.is_err());
    }

    #[test]
    fn principal_twist_minimum_is_zero() {
        let table = build_prime_table(1000).unwrap();
        let g7 = build_group(7).unwrap();
        let (t, d2) =
            min_dist_over_t(&g7.principal(), 0.8, 100.0, 7f64.sqrt(), 0.05, &table).unwrap();
        assert!(t.abs() < 1e-3);
        assert!(d2 <= 1e-12);
    }

    #[test]
    fn minimum_dominated_by_any_sample() {
        let table = build_prime_table(1000).unwrap();
        let g7 = build_group(7).unwrap();
        let chi = g7.character(&[3]).unwrap();
        let alpha = 0.810772226116982;
        let (_, d2) =
            min_dist_over_t(&chi, alpha, 1e3, 7f64.sqrt(), 0.0362, &table).unwrap();
        let at_zero = dist_char_twist(&chi, 0.0, alpha, 1e3, &table).unwrap();
        assert!(d2 <= at_zero * at_zero);
    }

    #[test]
    fn quadratic_twist_minimum_frozen() {
        // quadratic character mod 7 at the (x, y) = (1e6, 1e3) saddle point
        let table = build_prime_table(1000).unwrap();
        let g7 = build_group(7).unwrap();
        let chi = g7.character(&[3]).unwrap();
        assert_eq!(chi.order(), 2);
        let alpha = 0.810772226116982;
        let step = 1.0 / (4.0 * 1e3f64.ln());
        let (t, d2) = min_dist_over_t(&chi, alpha, 1e3, 7f64.sqrt(), step, &table).unwrap();
        assert!((d2 - 3.022225511645).abs() < 1e-9, "d2 = {d2}");
        assert!((t.abs() - 1.704889).abs() < 1e-4, "t = {t}");

        // brute-force grid oracle over the same range
        let profile_min = (0..=26458)
            .map(|k| k as f64 * 1e-4)
            .map(|tt| dist_char_twist(&chi, tt, alpha, 1e3, &table).unwrap().powi(2))
            .fold(f64::INFINITY, f64::min);
        assert!(d2 <= profile_min + 1e-9);
    }

    #[test]
    fn triangle_inequality_for_products() {
        let table = build_prime_table(100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let random_fn = |rng: &mut ChaCha8Rng| {
            let phases: BTreeMap<u64, f64> = table
                .primes_upto(50.0)
                .unwrap()
                .iter()
                .map(|&p| (p, rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
            PrimeFunction::from_fn(50.0, 1, &table, |p| {
                let theta = phases[&p];
                Complex64::new(theta.cos(), theta.sin())
            })
            .unwrap()
        };
        for _ in 0..1000 {
            let f1 = random_fn(&mut rng);
            let g1 = random_fn(&mut rng);
            let f2 = random_fn(&mut rng);
            let g2 = random_fn(&mut rng);
            let lhs = distance(&f1, &g1, 0.8, 50.0, 1, &table).unwrap()
                + distance(&f2, &g2, 0.8, 50.0, 1, &table).unwrap();
            let rhs = distance(&(&f1 * &f2), &(&g1 * &g2), 0.8, 50.0, 1, &table).unwrap();
            assert!(lhs >= rhs - 1e-12, "lhs = {lhs}, rhs = {rhs}");
        }
    }

    #[test]
    fn order_k_power_twist_bound() {
        // distance to a twisted order-k character is at least 1/k times the
        // distance to the k-th power twist of the trivial function
        let table = build_prime_table(1000).unwrap();
        let g13 = build_group(13).unwrap();
        let chi0 = g13.principal();
        for chi in g13.characters() {
            if chi.is_principal() {
                continue;
            }
            let k = chi.order() as f64;
            for &t in &[0.0, 0.3, -0.7, 1.1, 2.9] {
                let lhs = dist_char_twist(&chi, t, 0.8, 200.0, &table).unwrap();
                let rhs = dist_char_twist(&chi0, k * t, 0.8, 200.0, &table).unwrap() / k;
                assert!(lhs >= rhs - 1e-12, "order {k}, t = {t}");
            }
        }
    }

    #[test]
    fn squared_distance_monotone_in_y() {
        let table = build_prime_table(1000).unwrap();
        let g7 = build_group(7).unwrap();
        let chi = g7.character(&[3]).unwrap();
        let small = dist_char_twist(&chi, 0.4, 0.8, 50.0, &table).unwrap();
        let large = dist_char_twist(&chi, 0.4, 0.8, 200.0, &table).unwrap();
        assert!(large * large >= small * small);
    }

    #[test]
    fn squared_distance_nonincreasing_in_alpha() {
        let table = build_prime_table(1000).unwrap();
        let g7 = build_group(7).unwrap();
        for exps in [[1u64], [2], [3]] {
            let chi = g7.character(&exps).unwrap();
            for &t in &[0.0, 0.9] {
                let lo = dist_char_twist(&chi, t, 0.7, 300.0, &table).unwrap();
                let hi = dist_char_twist(&chi, t, 0.8, 300.0, &table).unwrap();
                assert!(lo * lo >= hi * hi - 1e-12);
            }
        }
    }

    #[test]
    fn obstruction_flags_quadratic_character() {
        // all 2-smooth numbers are quadratic residues mod 7; at x = 2^20 the
        // quadratic character is within threshold distance of principal
        let table = build_prime_table(1000).unwrap();
        let g7 = build_group(7).unwrap();
        let x: f64 = (1u64 << 20) as f64;
        let alpha = crate::saddle::solve_alpha(x, 2.0, &table).unwrap();
        let u = x.ln() / 2f64.ln();
        let ps = flag_problem_characters(&g7, alpha, 2.0, u, 2, &table).unwrap();

        assert!((ps.threshold - 20f64.sqrt() / 160.0).abs() < 1e-12);
        assert_eq!(ps.flagged.len(), 1);
        assert_eq!(ps.flagged[0].order, 2);
        assert!(ps.flagged[0].d2_min <= 1e-12);
        assert_eq!(ps.h, vec![1, 2, 4]);
        assert_eq!(ps.index, 2);
        assert_eq!(subgroup_index(&ps).unwrap(), 2);
        assert!(ps.index <= 2u64.pow(2));

        for f in &ps.flagged {
            for &h in &ps.h {
                assert!((f.character.eval(h) - Complex64::new(1.0, 0.0)).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn no_flags_at_large_y() {
        let table = build_prime_table(1000).unwrap();
        let g7 = build_group(7).unwrap();
        let ps =
            flag_problem_characters(&g7, 0.810772226116982, 1e3, 2.0, 10, &table).unwrap();
        assert!(ps.flagged.is_empty());
        assert_eq!(ps.h, vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(ps.index, 1);
        assert_eq!(ps.cosets.len(), 1);
        assert_eq!(ps.cosets[0].rep, 1);
    }

    #[test]
    fn forced_quadratic_kernel() {
        let g7 = build_group(7).unwrap();
        let chi = g7.character(&[3]).unwrap();
        let ps = build_problem_set(
            &g7,
            2,
            0.1,
            vec![FlaggedCharacter { character: chi, order: 2, t_min: 0.0, d2_min: 0.0 }],
        )
        .unwrap();
        assert_eq!(ps.h, vec![1, 2, 4]);
        assert_eq!(ps.index, 2);
        let sizes: Vec<usize> = ps.cosets.iter().map(|c| c.members.len()).collect();
        assert_eq!(sizes, vec![3, 3]);
        assert_eq!(ps.cosets[0].rep, 1);
        assert_eq!(ps.cosets[1].rep, 3);
        assert_eq!(ps.cosets[1].members, vec![3, 5, 6]);
    }

    #[test]
    fn two_independent_quadratics_give_index_four() {
        let g21 = build_group(21).unwrap();
        let quads: Vec<Character> = g21
            .characters()
            .into_iter()
            .filter(|c| c.order() == 2)
            .collect();
        assert_eq!(quads.len(), 3);
        // the quadratic lifted from mod 3 and the one lifted from mod 7
        let pair: Vec<FlaggedCharacter> = quads
            .into_iter()
            .filter(|c| {
                let e = c.exponents();
                e.iter().filter(|&&v| v != 0).count() == 1
            })
            .map(|c| FlaggedCharacter { character: c, order: 2, t_min: 0.0, d2_min: 0.0 })
            .collect();
        assert_eq!(pair.len(), 2);
        let ps = build_problem_set(&g21, 2, 0.1, pair).unwrap();
        assert_eq!(ps.h, vec![1, 4, 16]);
        assert_eq!(ps.index, 4);
        assert_eq!(subgroup_index(&ps).unwrap(), 4);
    }

    #[test]
    fn kernel_is_a_group() {
        let table = build_prime_table(1000).unwrap();
        let g7 = build_group(7).unwrap();
        let x: f64 = (1u64 << 20) as f64;
        let alpha = crate::saddle::solve_alpha(x, 2.0, &table).unwrap();
        let ps = flag_problem_characters(&g7, alpha, 2.0, 20.0, 2, &table).unwrap();
        assert!(ps.h.contains(&1));
        for &a in &ps.h {
            for &b in &ps.h {
                assert!(ps.h.contains(&(a * b % 7)));
            }
            let inv = (1..7).find(|&v| a * v % 7 == 1).unwrap();
            assert!(ps.h.contains(&inv));
        }
        let total: usize = ps.cosets.iter().map(|c| c.members.len()).sum();
        assert_eq!(total, 6);
    }

    #[test]
    fn trivial_moduli_problem_sets() {
        let g1 = build_group(1).unwrap();
        let ps = build_problem_set(&g1, 3, 0.5, Vec::new()).unwrap();
        assert_eq!(ps.index, 1);
        assert_eq!(ps.h, vec![0]);
        assert_eq!(ps.cosets.len(), 1);
        assert_eq!(subgroup_index(&ps).unwrap(), 1);
    }
}
