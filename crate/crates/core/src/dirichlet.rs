use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::smooth::gcd;

/// Largest modulus accepted by [`build_group`].
pub const DEFAULT_GROUP_LIMIT: u64 = 1_000_000;

#[derive(Debug)]
struct Generator {
    residue: u64,
    order: u64,
}

/// One prime-power component of the unit group, with discrete logs against
/// its generators for every residue (u32::MAX marks non-coprime residues).
#[derive(Debug)]
struct Part {
    pk: u64,
    gens: Vec<Generator>,
    dlog: Vec<u32>,
}

#[derive(Debug)]
struct GroupInner {
    q: u64,
    parts: Vec<Part>,
    /// Generator orders flattened across parts, in part order.
    orders: Vec<u64>,
    /// lcm of all generator orders; every character value is an
    /// (lcm_order)-th root of unity.
    lcm_order: u64,
    phi: u64,
}

/// The full dual group of (Z/qZ)*, shared immutably by its characters.
#[derive(Debug, Clone)]
pub struct CharacterGroup {
    inner: Arc<GroupInner>,
}

/// A Dirichlet character mod q, stored as an exponent vector against the
/// group's generator basis.
#[derive(Debug, Clone)]
pub struct Character {
    group: CharacterGroup,
    exps: Vec<u64>,
}

fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut acc: u128 = 1 % m;
    let mut b = base as u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut k = 0;
            while n % d == 0 {
                n /= d;
                k += 1;
            }
            out.push((d, k));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Smallest primitive root mod an odd prime p.
fn primitive_root_mod_p(p: u64) -> u64 {
    let factors: Vec<u64> = factorize(p - 1).into_iter().map(|(r, _)| r).collect();
    (2..p)
        .find(|&g| factors.iter().all(|&r| pow_mod(g, (p - 1) / r, p) != 1))
        .expect("every odd prime has a primitive root")
}

fn build_part(p: u64, k: u32) -> Part {
    let pk = p.pow(k);
    if p == 2 {
        match k {
            1 => {
                // unit group of Z/2Z is trivial
                return Part { pk, gens: Vec::new(), dlog: vec![u32::MAX, 0] };
            }
            2 => {
                let mut dlog = vec![u32::MAX; 4];
                dlog[1] = 0;
                dlog[3] = 1;
                return Part { pk, gens: vec![Generator { residue: 3, order: 2 }], dlog };
            }
            _ => {
                // units mod 2^k (k >= 3) are generated by -1 and 5
                let half = pk / 4;
                let mut dlog = vec![u32::MAX; 2 * pk as usize];
                for e0 in 0..2u64 {
                    let mut r = if e0 == 0 { 1 } else { pk - 1 };
                    for e1 in 0..half {
                        dlog[2 * r as usize] = e0 as u32;
                        dlog[2 * r as usize + 1] = e1 as u32;
                        r = r * 5 % pk;
                    }
                }
                return Part {
                    pk,
                    gens: vec![
                        Generator { residue: pk - 1, order: 2 },
                        Generator { residue: 5, order: half },
                    ],
                    dlog,
                };
            }
        }
    }
    let mut g = primitive_root_mod_p(p);
    if k >= 2 && pow_mod(g, p - 1, p * p) == 1 {
        g += p;
    }
    let order = pk / p * (p - 1);
    let mut dlog = vec![u32::MAX; pk as usize];
    let mut r = 1u64;
    for e in 0..order {
        dlog[r as usize] = e as u32;
        r = r * g % pk;
    }
    Part { pk, gens: vec![Generator { residue: g % pk, order }], dlog }
}

fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd(a, b) * b
}

/// Builds the character group mod q with full discrete-log tables.
pub fn build_group(q: u64) -> Result<CharacterGroup> {
    build_group_with_limit(q, DEFAULT_GROUP_LIMIT)
}

/// Same as [`build_group`] with an explicit modulus limit.
pub fn build_group_with_limit(q: u64, limit: u64) -> Result<CharacterGroup> {
    if q < 1 {
        return Err(Error::domain("modulus q must be >= 1"));
    }
    if q > limit {
        return Err(Error::capacity(format!("modulus {q} exceeds group limit {limit}")));
    }
    let mut parts: Vec<Part> = if q <= 2 {
        // trivial unit group; a single order-1 generator keeps exponent
        // vectors nonempty so external character ids stay well-formed
        let mut dlog = vec![u32::MAX; q as usize];
        dlog[(1 % q) as usize] = 0;
        vec![Part { pk: q, gens: vec![Generator { residue: 1 % q, order: 1 }], dlog }]
    } else {
        factorize(q).into_iter().map(|(p, k)| build_part(p, k)).collect()
    };
    parts.retain(|part| !part.gens.is_empty());
    let orders: Vec<u64> = parts.iter().flat_map(|p| p.gens.iter().map(|g| g.order)).collect();
    let phi: u64 = orders.iter().product();
    let lcm_order = orders.iter().fold(1u64, |acc, &o| lcm(acc, o));
    Ok(CharacterGroup {
        inner: Arc::new(GroupInner { q, parts, orders, lcm_order, phi }),
    })
}

/// Solves r = a mod m, r = b mod n for coprime m, n.
fn crt_pair(a: u64, m: u64, b: u64, n: u64) -> u64 {
    // inverse of n mod m by extended Euclid
    let (mut r0, mut r1) = (m as i128, n as i128 % m as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let qt = r0 / r1;
        (r0, r1) = (r1, r0 - qt * r1);
        (s0, s1) = (s1, s0 - qt * s1);
    }
    let inv = s0.rem_euclid(m as i128) as u128;
    let diff = (a as u128 + m as u128 - b as u128 % m as u128) % m as u128;
    (b as u128 + n as u128 * (diff * inv % m as u128)) as u64 % (m * n)
}

impl CharacterGroup {
    pub fn modulus(&self) -> u64 {
        self.inner.q
    }

    /// Euler phi of the modulus; equals the number of characters.
    pub fn phi(&self) -> u64 {
        self.inner.phi
    }

    /// Orders of the generator basis, one entry per exponent coordinate.
    pub fn generator_orders(&self) -> &[u64] {
        &self.inner.orders
    }

    /// The generator basis as (residue, order) pairs, one per coordinate.
    /// Each residue is lifted to mod q: it generates its own prime-power
    /// component and is 1 on every other component.
    pub fn generators(&self) -> Vec<(u64, u64)> {
        let q = self.inner.q;
        let mut out = Vec::with_capacity(self.inner.orders.len());
        for part in &self.inner.parts {
            for g in &part.gens {
                let lifted = if part.pk == q {
                    g.residue
                } else {
                    crt_pair(g.residue, part.pk, 1, q / part.pk)
                };
                out.push((lifted, g.order));
            }
        }
        out
    }

    /// The residues mod q coprime to q, ascending (for q = 1 this is {0}).
    pub fn reduced_residues(&self) -> Vec<u64> {
        if self.inner.q == 1 {
            return vec![0];
        }
        (1..=self.inner.q).filter(|&a| a < self.inner.q && gcd(a, self.inner.q) == 1).collect()
    }

    pub fn principal(&self) -> Character {
        Character { group: self.clone(), exps: vec![0; self.inner.orders.len()] }
    }

    /// All phi(q) characters, principal first, in mixed-radix order over the
    /// exponent vectors.
    pub fn characters(&self) -> Vec<Character> {
        let orders = &self.inner.orders;
        let mut out = Vec::with_capacity(self.inner.phi as usize);
        let mut exps = vec![0u64; orders.len()];
        loop {
            out.push(Character { group: self.clone(), exps: exps.clone() });
            let mut j = orders.len();
            loop {
                if j == 0 {
                    return out;
                }
                j -= 1;
                exps[j] += 1;
                if exps[j] < orders[j] {
                    break;
                }
                exps[j] = 0;
            }
        }
    }

    /// Builds the character with the given exponent vector.
    pub fn character(&self, exps: &[u64]) -> Result<Character> {
        let orders = &self.inner.orders;
        if exps.len() != orders.len() {
            return Err(Error::domain(format!(
                "exponent vector length {} does not match generator count {}",
                exps.len(),
                orders.len()
            )));
        }
        let exps = exps.iter().zip(orders).map(|(&e, &o)| e % o).collect();
        Ok(Character { group: self.clone(), exps })
    }

    /// Exponent vector of the residue r against the generator basis, when
    /// gcd(r, q) = 1.
    pub fn exponents_of(&self, r: u64) -> Option<Vec<u64>> {
        if gcd(r, self.inner.q) != 1 {
            return None;
        }
        let mut out = Vec::with_capacity(self.inner.orders.len());
        for part in &self.inner.parts {
            let rp = (r % part.pk) as usize;
            let stride = part.gens.len();
            for j in 0..stride {
                let e = part.dlog[rp * stride + j];
                if e == u32::MAX {
                    return None;
                }
                out.push(e as u64);
            }
        }
        Some(out)
    }
}

impl PartialEq for Character {
    fn eq(&self, other: &Self) -> bool {
        self.group.modulus() == other.group.modulus() && self.exps == other.exps
    }
}
impl Eq for Character {}

impl Character {
    pub fn group(&self) -> &CharacterGroup {
        &self.group
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exps
    }

    /// External id: the exponent vector as a comma-separated integer list.
    pub fn id(&self) -> String {
        self.exps.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")
    }

    pub fn is_principal(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    /// Least k >= 1 with chi^k principal.
    pub fn order(&self) -> u64 {
        self.exps
            .iter()
            .zip(self.group.inner.orders.iter())
            .fold(1u64, |acc, (&e, &o)| lcm(acc, o / gcd(o, e)))
    }

    /// True iff all values are real, i.e. order divides 2.
    pub fn is_real(&self) -> bool {
        self.order() <= 2
    }

    pub fn conj(&self) -> Character {
        let exps = self
            .exps
            .iter()
            .zip(self.group.inner.orders.iter())
            .map(|(&e, &o)| (o - e) % o)
            .collect();
        Character { group: self.group.clone(), exps }
    }

    /// Numerator of the value's phase over the group's lcm order:
    /// chi(n) = exp(2 pi i * num / lcm_order). None when gcd(n, q) > 1.
    pub fn phase_numerator(&self, n: u64) -> Option<u64> {
        let inner = &self.group.inner;
        let r = n % inner.q;
        let rexps = self.group.exponents_of(r)?;
        let l = inner.lcm_order as u128;
        let mut num: u128 = 0;
        for ((&e, &re), &o) in self.exps.iter().zip(&rexps).zip(&inner.orders) {
            num = (num + e as u128 * re as u128 % l * (l / o as u128)) % l;
        }
        Some(num as u64)
    }

    /// chi(n), exactly zero when gcd(n, q) > 1.
    pub fn eval(&self, n: u64) -> Complex64 {
        match self.phase_numerator(n) {
            None => Complex64::new(0.0, 0.0),
            Some(0) => Complex64::new(1.0, 0.0),
            Some(num) => {
                let theta = 2.0 * std::f64::consts::PI * num as f64 / self.group.inner.lcm_order as f64;
                Complex64::new(theta.cos(), theta.sin())
            }
        }
    }

    /// True iff chi(n) is exactly 1 (an exact root-of-unity test, no floats).
    pub fn is_one_at(&self, n: u64) -> bool {
        self.phase_numerator(n) == Some(0)
    }

    /// chi(r) for every residue r in [0, q), as a lookup table.
    pub fn value_table(&self) -> Vec<Complex64> {
        (0..self.group.inner.q).map(|r| self.eval(r)).collect()
    }
}
