//! Integral-ideal arithmetic in Hermite normal form.
//!
//! An integral ideal is stored as `g * (Z a + Z (b + omega))` with
//! `0 <= b < a` and `a | N(b + omega)`; the triple `(g, a, b)` is canonical,
//! so equality and map keys are structural. Norms, products, gcds, quotients,
//! containment, prime factorizations, divisor sums and residue systems are
//! all exact.

use std::cmp::Ordering;
use std::fmt;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::quadfield::{
    ext_gcd, is_totally_positive, tp_orbit_rep, FieldContext, FieldElem,
};
use crate::Result;

/// Integral ideal in canonical HNF.
#[derive(Debug, Clone)]
pub struct Ideal {
    g: Integer,
    a: Integer,
    b: Integer,
    norm: Integer,
}

impl PartialEq for Ideal {
    fn eq(&self, other: &Self) -> bool {
        self.g == other.g && self.a == other.a && self.b == other.b
    }
}
impl Eq for Ideal {}

impl std::hash::Hash for Ideal {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.g.hash(state);
        self.a.hash(state);
        self.b.hash(state);
    }
}

// Ordered by (norm, a, b); g is determined by (norm, a).
impl PartialOrd for Ideal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ideal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.norm
            .cmp(&other.norm)
            .then_with(|| self.a.cmp(&other.a))
            .then_with(|| self.b.cmp(&other.b))
    }
}

impl fmt::Display for Ideal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.g, self.a, self.b)
    }
}

impl Serialize for Ideal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Ideal", 4)?;
        let to_i64 = |v: &Integer| -> std::result::Result<i64, S::Error> {
            v.to_i64()
                .ok_or_else(|| serde::ser::Error::custom("ideal component exceeds i64"))
        };
        st.serialize_field("g", &to_i64(&self.g)?)?;
        st.serialize_field("a", &to_i64(&self.a)?)?;
        st.serialize_field("b", &to_i64(&self.b)?)?;
        st.serialize_field("norm", &to_i64(&self.norm)?)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Ideal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            g: i64,
            a: i64,
            b: i64,
        }
        let raw = Raw::deserialize(d)?;
        if raw.g <= 0 || raw.a <= 0 || raw.b < 0 || raw.b >= raw.a {
            return Err(D::Error::custom("ideal HNF out of range"));
        }
        let g = Integer::from(raw.g);
        let a = Integer::from(raw.a);
        let b = Integer::from(raw.b);
        let norm = Integer::from(&g * &g) * &a;
        Ok(Ideal { g, a, b, norm })
    }
}

impl Ideal {
    pub fn one() -> Ideal {
        Ideal {
            g: Integer::from(1),
            a: Integer::from(1),
            b: Integer::from(0),
            norm: Integer::from(1),
        }
    }

    pub fn is_one(&self) -> bool {
        self.g == 1 && self.a == 1
    }

    pub fn g(&self) -> &Integer {
        &self.g
    }

    pub fn a(&self) -> &Integer {
        &self.a
    }

    pub fn b(&self) -> &Integer {
        &self.b
    }

    pub fn norm(&self) -> &Integer {
        &self.norm
    }

    pub fn norm_i64(&self) -> i64 {
        self.norm.to_i64().expect("ideal norm fits i64 at desk scale")
    }

    /// Z-basis of the ideal as field elements: `(g a, g(b + omega))`.
    pub fn basis(&self) -> (FieldElem, FieldElem) {
        let e1 = FieldElem::from_integers(Integer::from(&self.g * &self.a), Integer::from(0));
        let e2 = FieldElem::from_integers(Integer::from(&self.g * &self.b), self.g.clone());
        (e1, e2)
    }

    /// Membership test for an integral element.
    pub fn contains(&self, x: &FieldElem) -> bool {
        if !x.is_integral() {
            return false;
        }
        let xv = Rational::from(&x.x).into_numer_denom().0;
        let yv = Rational::from(&x.y).into_numer_denom().0;
        if !yv.is_divisible(&self.g) {
            return false;
        }
        let t = Integer::from(&yv / &self.g);
        let rem = xv - Integer::from(&t * &self.g) * &self.b;
        rem.is_divisible(&Integer::from(&self.g * &self.a))
    }

    /// Canonical representative of `x` modulo this ideal, inside the HNF box
    /// `{i + j omega : 0 <= i < g a, 0 <= j < g}`.
    pub fn reduce(&self, x: &FieldElem, f: &FieldContext) -> FieldElem {
        debug_assert!(x.is_integral());
        let y = Rational::from(&x.y).into_numer_denom().0;
        let j = y.div_rem_euc(self.g.clone()).0;
        let gen2 = FieldElem::from_integers(Integer::from(&self.g * &self.b), self.g.clone());
        let x1 = x.sub(&gen2.scale(&Rational::from(j)));
        let ga = Integer::from(&self.g * &self.a);
        let xv = Rational::from(&x1.x).into_numer_denom().0;
        let i = xv.div_rem_euc(ga.clone()).0;
        let out = x1.sub(&FieldElem::from_integers(Integer::from(&i * &ga), Integer::from(0)));
        debug_assert!(self.contains(&x.sub(&out)));
        let _ = f;
        out
    }

    /// The complete residue system from the HNF box, in deterministic order.
    pub fn residues(&self) -> Vec<FieldElem> {
        let ga = Integer::from(&self.g * &self.a);
        let ga_i = ga.to_i64().expect("residue box fits i64");
        let g_i = self.g.to_i64().expect("residue box fits i64");
        let mut out = Vec::with_capacity((ga_i * g_i) as usize);
        for j in 0..g_i {
            for i in 0..ga_i {
                out.push(FieldElem::from_ints(i, j));
            }
        }
        out
    }
}

/// HNF of the Z-lattice spanned by integer coordinate rows `(u, v)` meaning
/// `u + v omega`. The lattice must be an O-module (callers pass ideal
/// generators together with their omega-multiples).
fn hnf_from_rows(rows: &[(Integer, Integer)]) -> Result<Ideal> {
    let rows: Vec<(Integer, Integer)> = rows
        .iter()
        .filter(|(u, v)| *u != 0 || *v != 0)
        .cloned()
        .collect();
    if rows.is_empty() {
        return Err(Error::ZeroGenerator);
    }
    // Combine rows to one vector w = (c, g) with g = gcd of all omega-parts.
    let mut g = Integer::from(0);
    let mut c = Integer::from(0);
    for (u, v) in &rows {
        if *v == 0 {
            continue;
        }
        if g == 0 {
            g = v.clone().abs();
            c = if *v < 0 { Integer::from(-u) } else { u.clone() };
        } else {
            let (gg, s, t) = g.clone().extended_gcd(v.clone(), Integer::new());
            c = Integer::from(&s * &c) + Integer::from(&t * u);
            g = gg;
        }
    }
    if g == 0 {
        return Err(Error::DomainError(
            "lattice has rank < 2; not an ideal".into(),
        ));
    }
    // Reduce all rows to omega-part zero and gcd the rational parts.
    let mut a_full = Integer::from(0);
    for (u, v) in &rows {
        let q = Integer::from(v / &g);
        let u_red = u.clone() - Integer::from(&q * &c);
        a_full.gcd_mut(&u_red);
    }
    if a_full == 0 {
        return Err(Error::DomainError(
            "lattice has rank < 2; not an ideal".into(),
        ));
    }
    if !a_full.is_divisible(&g) || !c.is_divisible(&g) {
        return Err(Error::DomainError(
            "lattice is not an O-ideal (HNF shape violated)".into(),
        ));
    }
    let a = Integer::from(&a_full / &g);
    let b = Integer::from(&c / &g).div_rem_euc(a.clone()).1;
    let norm = Integer::from(&g * &g) * &a;
    Ok(Ideal { g, a, b, norm })
}

/// HNF of the principal ideal `(x)`.
pub fn ideal_from_gen(x: &FieldElem, f: &FieldContext) -> Result<Ideal> {
    if x.is_zero() {
        return Err(Error::ZeroGenerator);
    }
    if !x.is_integral() {
        return Err(Error::DomainError(format!("{x} is not integral")));
    }
    let xo = x.mul(&FieldElem::omega(), f);
    let rows = vec![elem_row(x), elem_row(&xo)];
    let ideal = hnf_from_rows(&rows)?;
    debug_assert_eq!(Rational::from(ideal.norm.clone()), x.norm(f).abs());
    Ok(ideal)
}

fn elem_row(x: &FieldElem) -> (Integer, Integer) {
    debug_assert!(x.is_integral());
    (
        Rational::from(&x.x).into_numer_denom().0,
        Rational::from(&x.y).into_numer_denom().0,
    )
}

/// Product ideal `I * J`.
pub fn ideal_mul(i: &Ideal, j: &Ideal, f: &FieldContext) -> Ideal {
    let (i1, i2) = i.basis();
    let (j1, j2) = j.basis();
    let mut rows = Vec::with_capacity(8);
    for p in [
        i1.mul(&j1, f),
        i1.mul(&j2, f),
        i2.mul(&j1, f),
        i2.mul(&j2, f),
    ] {
        rows.push(elem_row(&p));
        rows.push(elem_row(&p.mul(&FieldElem::omega(), f)));
    }
    let out = hnf_from_rows(&rows).expect("product of nonzero ideals is nonzero");
    debug_assert_eq!(out.norm, Integer::from(&i.norm * &j.norm));
    out
}

/// Ideal gcd `I + J`.
pub fn ideal_gcd(i: &Ideal, j: &Ideal) -> Ideal {
    let (i1, i2) = i.basis();
    let (j1, j2) = j.basis();
    let rows = vec![elem_row(&i1), elem_row(&i2), elem_row(&j1), elem_row(&j2)];
    hnf_from_rows(&rows).expect("sum of nonzero ideals is nonzero")
}

/// True iff `J | I`, equivalently `I` is contained in `J`.
pub fn ideal_divides(j: &Ideal, i: &Ideal) -> bool {
    let (i1, i2) = i.basis();
    j.contains(&i1) && j.contains(&i2)
}

/// Galois conjugate ideal; same `(g, a)` with `b' = (-b - Tr omega) mod a`.
pub fn ideal_conj(i: &Ideal, f: &FieldContext) -> Ideal {
    let b = Integer::from(-&i.b) - Integer::from(f.omega_trace());
    let b = b.div_rem_euc(i.a.clone()).1;
    Ideal {
        g: i.g.clone(),
        a: i.a.clone(),
        b,
        norm: i.norm.clone(),
    }
}

/// Exact quotient `I / J`; errors with [`Error::NotDivisible`] unless `J | I`.
/// Uses `J * conj(J) = (N(J))`, so `I / J = I * conj(J) / N(J)`.
pub fn ideal_quotient(i: &Ideal, j: &Ideal, f: &FieldContext) -> Result<Ideal> {
    if !ideal_divides(j, i) {
        return Err(Error::NotDivisible);
    }
    let k = ideal_mul(i, &ideal_conj(j, f), f);
    debug_assert!(k.g.is_divisible(&j.norm));
    let g = Integer::from(&k.g / &j.norm);
    let norm = Integer::from(&g * &g) * &k.a;
    Ok(Ideal {
        g,
        a: k.a,
        b: k.b,
        norm,
    })
}

/// Splitting behaviour of a rational prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Split,
    Inert,
    Ramified,
}

/// A prime ideal above a rational prime, with its totally positive generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeIdealData {
    pub p: i64,
    pub kind: SplitKind,
    pub ideal: Ideal,
    pub residue_degree: u32,
    pub tp_gen: FieldElem,
}

/// Kronecker symbol `(d / n)` for `d` a fundamental discriminant.
pub fn kronecker(d: i64, n: i64) -> i32 {
    // Standard Kronecker symbol; handles the 2-adic and sign conventions.
    if n == 0 {
        return if d == 1 || d == -1 { 1 } else { 0 };
    }
    let mut a = d;
    let mut b = n;
    let mut result = 1i32;
    if b < 0 {
        b = -b;
        if a < 0 {
            result = -result;
        }
    }
    // Pull out factors of 2 from b.
    let mut twos = 0u32;
    while b % 2 == 0 {
        b /= 2;
        twos += 1;
    }
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        // (a/2) = 1 if a = +-1 mod 8 else -1; applied `twos` times.
        let a8 = a.rem_euclid(8);
        if twos % 2 == 1 && (a8 == 3 || a8 == 5) {
            result = -result;
        }
    }
    a = a.rem_euclid(b);
    // Jacobi loop.
    while a != 0 {
        let mut t = 0u32;
        while a % 2 == 0 {
            a /= 2;
            t += 1;
        }
        if t % 2 == 1 {
            let b8 = b.rem_euclid(8);
            if b8 == 3 || b8 == 5 {
                result = -result;
            }
        }
        if a.rem_euclid(4) == 3 && b.rem_euclid(4) == 3 {
            result = -result;
        }
        let tmp = a;
        a = b.rem_euclid(tmp);
        b = tmp;
    }
    if b == 1 {
        result
    } else {
        0
    }
}

/// The prime ideals above `p`, with totally positive generators.
pub fn primes_above(p: i64, f: &FieldContext) -> Vec<PrimeIdealData> {
    debug_assert!(p >= 2);
    let chi = kronecker(f.disc(), p);
    let t = f.omega_trace();
    let n = f.omega_norm();
    let minpoly = |r: i64| -> i64 { (r * r - t * r + n).rem_euclid(p) };
    let make = |ideal: Ideal, kind: SplitKind, deg: u32| -> PrimeIdealData {
        let tp_gen = tp_generator(&ideal, f).expect("h+ = 1 guarantees a generator");
        PrimeIdealData {
            p,
            kind,
            ideal,
            residue_degree: deg,
            tp_gen,
        }
    };
    match chi {
        -1 => {
            let g = Integer::from(p);
            let norm = Integer::from(&g * &g);
            let ideal = Ideal {
                g,
                a: Integer::from(1),
                b: Integer::from(0),
                norm,
            };
            vec![make(ideal, SplitKind::Inert, 2)]
        }
        0 => {
            let r = (0..p).find(|&r| minpoly(r) == 0).expect("ramified root exists");
            let b = (-r).rem_euclid(p);
            let ideal = Ideal {
                g: Integer::from(1),
                a: Integer::from(p),
                b: Integer::from(b),
                norm: Integer::from(p),
            };
            vec![make(ideal, SplitKind::Ramified, 1)]
        }
        _ => {
            let r1 = (0..p).find(|&r| minpoly(r) == 0).expect("split root exists");
            let r2 = (t - r1).rem_euclid(p);
            debug_assert_ne!(r1, r2);
            let mut out: Vec<PrimeIdealData> = [r1, r2]
                .into_iter()
                .map(|r| {
                    let b = (-r).rem_euclid(p);
                    let ideal = Ideal {
                        g: Integer::from(1),
                        a: Integer::from(p),
                        b: Integer::from(b),
                        norm: Integer::from(p),
                    };
                    make(ideal, SplitKind::Split, 1)
                })
                .collect();
            out.sort_by(|x, y| x.ideal.cmp(&y.ideal));
            out
        }
    }
}

/// Totally positive generator of `I`, as the canonical orbit representative.
///
/// `I = g * (Z a + Z(b + omega))` and the primitive part is the O-ideal
/// generated by `a` and `b + omega`, so a Euclidean gcd produces a generator
/// directly; a norm-(-1) unit and a sign fix make it totally positive.
pub fn tp_generator(i: &Ideal, f: &FieldContext) -> Result<FieldElem> {
    let a_el = FieldElem::from_integers(i.a.clone(), Integer::from(0));
    let b_el = FieldElem::from_integers(i.b.clone(), Integer::from(1));
    let (gamma, _, _) = ext_gcd(&a_el, &b_el, f)?;
    let mut gen = gamma.scale(&Rational::from(i.g.clone()));
    if gen.norm(f).cmp0() == Ordering::Less {
        gen = gen.mul(f.fund_unit(), f);
    }
    if gen.trace(f).cmp0() == Ordering::Less {
        gen = gen.neg();
    }
    if !is_totally_positive(&gen, f) {
        return Err(Error::NoGenerator(format!("{i}")));
    }
    let (gen, _) = tp_orbit_rep(&gen, f)?;
    let check = ideal_from_gen(&gen, f)?;
    if &check != i {
        return Err(Error::NoGenerator(format!(
            "gcd generator {gen} regenerates {check}, expected {i}"
        )));
    }
    Ok(gen)
}

/// Prime-power valuation of `I` at the prime ideal `p`.
pub fn valuation(i: &Ideal, p: &Ideal, f: &FieldContext) -> u32 {
    let mut e = 0;
    let mut cur = i.clone();
    while ideal_divides(p, &cur) {
        cur = ideal_quotient(&cur, p, f).expect("divides checked");
        e += 1;
    }
    e
}

/// Prime factorization of `I` as `(prime data, exponent)` pairs, sorted by
/// the prime ideal's canonical order.
pub fn factor_ideal(i: &Ideal, f: &FieldContext) -> Vec<(PrimeIdealData, u32)> {
    let mut out = Vec::new();
    if i.is_one() {
        return out;
    }
    let mut n = i.norm.clone();
    let mut p = Integer::from(2);
    while Integer::from(&p * &p) <= n {
        if n.is_divisible(&p) {
            while n.is_divisible(&p) {
                n /= &p;
            }
            let pp = p.to_i64().expect("prime fits i64");
            for data in primes_above(pp, f) {
                let e = valuation(i, &data.ideal, f);
                if e > 0 {
                    out.push((data, e));
                }
            }
        }
        p += 1;
    }
    if n > 1 {
        let pp = n.to_i64().expect("prime fits i64");
        for data in primes_above(pp, f) {
            let e = valuation(i, &data.ideal, f);
            if e > 0 {
                out.push((data, e));
            }
        }
    }
    out.sort_by(|a, b| a.0.ideal.cmp(&b.0.ideal));
    out
}

/// All divisors of `I`, sorted canonically.
pub fn divisors(i: &Ideal, f: &FieldContext) -> Vec<Ideal> {
    let fac = factor_ideal(i, f);
    let mut out = vec![Ideal::one()];
    for (data, e) in &fac {
        let mut next = Vec::with_capacity(out.len() * (*e as usize + 1));
        for d in &out {
            let mut cur = d.clone();
            next.push(cur.clone());
            for _ in 0..*e {
                cur = ideal_mul(&cur, &data.ideal, f);
                next.push(cur.clone());
            }
        }
        out = next;
    }
    out.sort();
    out
}

/// All integral ideals with norm at most `max_norm`, sorted canonically.
pub fn enumerate_ideals(max_norm: i64, f: &FieldContext) -> Vec<Ideal> {
    debug_assert!(max_norm >= 1);
    let mut prime_ideals: Vec<(i64, Ideal)> = Vec::new();
    let mut p = 2i64;
    while p <= max_norm {
        if is_prime_i64(p) {
            for data in primes_above(p, f) {
                let n = data.ideal.norm_i64();
                if n <= max_norm {
                    prime_ideals.push((n, data.ideal));
                }
            }
        }
        p += 1;
    }
    // Depth-first over distinct prime ideals, multiplying in powers while
    // the norm budget allows.
    fn rec(
        f: &FieldContext,
        primes: &[(i64, Ideal)],
        idx: usize,
        cur: &Ideal,
        budget: i64,
        out: &mut Vec<Ideal>,
    ) {
        for j in idx..primes.len() {
            let (pn, pi) = &primes[j];
            if cur.norm_i64().checked_mul(*pn).map(|v| v > budget).unwrap_or(true) {
                continue;
            }
            let mut acc = ideal_mul(cur, pi, f);
            loop {
                out.push(acc.clone());
                rec(f, primes, j + 1, &acc, budget, out);
                if acc.norm_i64().checked_mul(*pn).map(|v| v > budget).unwrap_or(true) {
                    break;
                }
                acc = ideal_mul(&acc, pi, f);
            }
        }
    }
    let mut out = vec![Ideal::one()];
    rec(f, &prime_ideals, 0, &Ideal::one(), max_norm, &mut out);
    out.sort();
    out
}

fn is_prime_i64(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2i64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Exact divisor sum `sigma_r(I) = sum over divisors of N(divisor)^r`;
/// `r` may be negative, in which case the result is a rational.
pub fn sigma_r(i: &Ideal, r: i64, f: &FieldContext) -> Rational {
    let fac = factor_ideal(i, f);
    let mut out = Rational::from(1);
    for (data, e) in &fac {
        let np = Rational::from(data.ideal.norm().clone());
        let mut local = Rational::from(1);
        let mut powv = Rational::from(1);
        let step = if r >= 0 {
            np.clone().pow(r as u32)
        } else {
            np.clone().pow((-r) as u32).recip()
        };
        for _ in 0..*e {
            powv *= &step;
            local += &powv;
        }
        out *= local;
    }
    out
}

/// Numeric divisor sum with a real exponent, from the exact divisor list.
pub fn sigma_r_numeric(i: &Ideal, r: &Float, f: &FieldContext, prec: u32) -> Float {
    let mut out = Float::with_val(prec, 0);
    for d in divisors(i, f) {
        let nd = Float::with_val(prec, d.norm());
        out += nd.pow(r.clone());
    }
    out
}

/// Inverse of `x` modulo `q`, reduced to the canonical residue box.
pub fn inv_mod(x: &FieldElem, q: &Ideal, f: &FieldContext) -> Result<FieldElem> {
    if !x.is_integral() {
        return Err(Error::DomainError(format!("{x} is not integral")));
    }
    let q_gen = any_generator(q, f)?;
    let (g, u, _) = ext_gcd(x, &q_gen, f)?;
    if !f.is_unit(&g) {
        return Err(Error::NotInvertible);
    }
    let y = u.mul(&g.inv(f)?, f);
    debug_assert!(y.is_integral() || q.contains(&FieldElem::zero()));
    // u/g can pick up the unit denominator only; it stays integral.
    Ok(q.reduce(&y, f))
}

/// Some generator of `I` (not necessarily totally positive).
pub fn any_generator(i: &Ideal, f: &FieldContext) -> Result<FieldElem> {
    let a_el = FieldElem::from_integers(i.a.clone(), Integer::from(0));
    let b_el = FieldElem::from_integers(i.b.clone(), Integer::from(1));
    let (gamma, _, _) = ext_gcd(&a_el, &b_el, f)?;
    let gen = gamma.scale(&Rational::from(i.g.clone()));
    let check = ideal_from_gen(&gen, f)?;
    if &check != i {
        return Err(Error::NoGenerator(format!("{i}")));
    }
    Ok(gen)
}

/// Units of the residue ring `O/q`, each with its inverse, in deterministic
/// order. Shared by the Kloosterman sums.
pub fn unit_residues_with_inverses(q: &Ideal, f: &FieldContext) -> Result<Vec<(FieldElem, FieldElem)>> {
    let mut out = Vec::new();
    for r in q.residues() {
        match inv_mod(&r, q, f) {
            Ok(inv) => out.push((r, inv)),
            Err(Error::NotInvertible) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::make_field;

    fn f5() -> FieldContext {
        make_field(5).unwrap()
    }

    #[test]
    fn principal_ideal_examples() {
        let f = f5();
        let one = ideal_from_gen(&FieldElem::one(), &f).unwrap();
        assert!(one.is_one());
        assert_eq!(one.norm_i64(), 1);
        let two = ideal_from_gen(&FieldElem::from_ints(2, 0), &f).unwrap();
        assert_eq!(two.norm_i64(), 4);
        // (2+w) is the ramified prime above 5.
        let d = ideal_from_gen(&FieldElem::from_ints(2, 1), &f).unwrap();
        assert_eq!(d.norm_i64(), 5);
        let above5 = primes_above(5, &f);
        assert_eq!(above5.len(), 1);
        assert_eq!(above5[0].kind, SplitKind::Ramified);
        assert_eq!(above5[0].ideal, d);
    }

    #[test]
    fn arith_examples() {
        let f = f5();
        let two = ideal_from_gen(&FieldElem::from_ints(2, 0), &f).unwrap();
        let three = ideal_from_gen(&FieldElem::from_ints(3, 0), &f).unwrap();
        // Coprime norms 4 and 9 force gcd = O.
        assert!(ideal_gcd(&two, &three).is_one());
        // Round trip through mul and quotient.
        let prod = ideal_mul(&two, &three, &f);
        assert_eq!(ideal_quotient(&prod, &three, &f).unwrap(), two);
        // (2+w) divides (5): ramified square.
        let d = ideal_from_gen(&FieldElem::from_ints(2, 1), &f).unwrap();
        let five = ideal_from_gen(&FieldElem::from_ints(5, 0), &f).unwrap();
        assert!(ideal_divides(&d, &five));
        assert_eq!(ideal_mul(&d, &d, &f), five);
        assert!(matches!(
            ideal_quotient(&two, &three, &f),
            Err(Error::NotDivisible)
        ));
    }

    #[test]
    fn primes_above_examples() {
        let f = f5();
        // p = 11 splits; the generators 3+2w and 5-2w both have norm 11.
        let above11 = primes_above(11, &f);
        assert_eq!(above11.len(), 2);
        let i1 = ideal_from_gen(&FieldElem::from_ints(3, 2), &f).unwrap();
        let i2 = ideal_from_gen(&FieldElem::from_ints(5, -2), &f).unwrap();
        let set: Vec<&Ideal> = above11.iter().map(|d| &d.ideal).collect();
        assert!(set.contains(&&i1));
        assert!(set.contains(&&i2));
        for d in &above11 {
            assert_eq!(d.ideal.norm_i64(), 11);
            assert!(is_totally_positive(&d.tp_gen, &f));
            assert_eq!(ideal_from_gen(&d.tp_gen, &f).unwrap(), d.ideal);
        }
        // p = 2 is inert: chi_5(2) = -1.
        assert_eq!(kronecker(5, 2), -1);
        let above2 = primes_above(2, &f);
        assert_eq!(above2.len(), 1);
        assert_eq!(above2[0].kind, SplitKind::Inert);
        assert_eq!(above2[0].ideal.norm_i64(), 4);
    }

    #[test]
    fn enumerate_and_count_oracle() {
        let f = f5();
        let ideals = enumerate_ideals(5, &f);
        assert_eq!(ideals.len(), 3); // O, (2), (2+w)
        assert_eq!(enumerate_ideals(1, &f).len(), 1);

        // Dedekind zeta coefficient identity: #{N(I) = n} = sum_{e | n} chi_D(e),
        // via an independent divisor-sum oracle, for all n <= 500.
        let all = enumerate_ideals(500, &f);
        let mut counts = vec![0i64; 501];
        for i in &all {
            counts[i.norm_i64() as usize] += 1;
        }
        for n in 1..=500i64 {
            let mut expect = 0i64;
            for e in 1..=n {
                if n % e == 0 {
                    expect += kronecker(5, e) as i64;
                }
            }
            assert_eq!(counts[n as usize], expect, "norm {n}");
        }
        // Norm 11 has exactly 2 ideals.
        assert_eq!(counts[11], 2);
    }

    #[test]
    fn sigma_examples() {
        let f = f5();
        assert_eq!(sigma_r(&Ideal::one(), 3, &f), 1);
        let two = ideal_from_gen(&FieldElem::from_ints(2, 0), &f).unwrap();
        assert_eq!(sigma_r(&two, 1, &f), 5); // 1 + 4
        let d = ideal_from_gen(&FieldElem::from_ints(2, 1), &f).unwrap();
        assert_eq!(sigma_r(&d, 0, &f), 2);
        // Negative exponent stays exact: sigma_{-1}((2)) = 1 + 1/4.
        assert_eq!(sigma_r(&two, -1, &f), Rational::from((5, 4)));
    }

    #[test]
    fn sigma_multiplicative_and_norm_multiplicative() {
        let f = f5();
        let ideals = enumerate_ideals(200, &f);
        for i in ideals.iter().step_by(7) {
            for j in ideals.iter().step_by(11) {
                if !ideal_gcd(i, j).is_one() {
                    continue;
                }
                let prod = ideal_mul(i, j, &f);
                assert_eq!(
                    Integer::from(i.norm() * j.norm()),
                    *prod.norm(),
                    "norm multiplicativity"
                );
                assert_eq!(
                    sigma_r(i, 2, &f) * sigma_r(j, 2, &f),
                    sigma_r(&prod, 2, &f),
                    "sigma multiplicativity"
                );
            }
        }
    }

    #[test]
    fn tp_generator_regenerates() {
        let f = f5();
        for i in enumerate_ideals(500, &f) {
            let gen = tp_generator(&i, &f).unwrap();
            assert!(is_totally_positive(&gen, &f));
            assert_eq!(ideal_from_gen(&gen, &f).unwrap(), i);
            assert_eq!(tp_orbit_rep(&gen, &f).unwrap().1, 0, "canonical rep");
        }
        let two = ideal_from_gen(&FieldElem::from_ints(2, 0), &f).unwrap();
        assert_eq!(tp_generator(&two, &f).unwrap(), FieldElem::from_ints(2, 0));
        assert_eq!(tp_generator(&Ideal::one(), &f).unwrap(), FieldElem::one());
    }

    #[test]
    fn factor_roundtrip_small() {
        let f = f5();
        for i in enumerate_ideals(500, &f) {
            let fac = factor_ideal(&i, &f);
            let mut prod = Ideal::one();
            for (d, e) in &fac {
                for _ in 0..*e {
                    prod = ideal_mul(&prod, &d.ideal, &f);
                }
            }
            assert_eq!(prod, i);
        }
    }

    #[test]
    fn inv_mod_examples() {
        let f = f5();
        let two = ideal_from_gen(&FieldElem::from_ints(2, 0), &f).unwrap();
        let one = inv_mod(&FieldElem::one(), &two, &f).unwrap();
        assert!(two.contains(&one.sub(&FieldElem::one())));
        // w * (1+w) = 1 + 2w = 1 mod (2).
        let winv = inv_mod(&FieldElem::omega(), &two, &f).unwrap();
        assert_eq!(winv, FieldElem::from_ints(1, 1));
        assert!(matches!(
            inv_mod(&FieldElem::from_ints(2, 0), &two, &f),
            Err(Error::NotInvertible)
        ));
    }

    #[test]
    fn inv_mod_all_units_small_moduli() {
        let f = f5();
        for q in enumerate_ideals(100, &f) {
            if q.is_one() {
                continue;
            }
            for (r, inv) in unit_residues_with_inverses(&q, &f).unwrap() {
                let prod = r.mul(&inv, &f);
                assert!(
                    q.contains(&prod.sub(&FieldElem::one())),
                    "x * x^-1 = 1 mod {q} failed for {r}"
                );
            }
        }
    }

    #[test]
    fn residue_box_size() {
        let f = f5();
        for q in enumerate_ideals(60, &f) {
            assert_eq!(q.residues().len() as i64, q.norm_i64());
            // The box is a complete residue system: all pairwise differences
            // outside the ideal.
            if q.norm_i64() <= 25 {
                let rs = q.residues();
                for (i, r1) in rs.iter().enumerate() {
                    for r2 in rs.iter().skip(i + 1) {
                        assert!(!q.contains(&r1.sub(r2)));
                    }
                }
            }
        }
    }

    #[test]
    fn serde_shape() {
        let f = f5();
        let d = ideal_from_gen(&FieldElem::from_ints(2, 1), &f).unwrap();
        let js = serde_json::to_string(&d).unwrap();
        let expected = format!(r#"{{"g":1,"a":5,"b":{},"norm":5}}"#, d.b());
        assert_eq!(js, expected);
        let back: Ideal = serde_json::from_str(&js).unwrap();
        assert_eq!(back, d);
    }
}
