//! Ideal-indexed Dirichlet series: exact convolution algebra, Hecke action,
//! Hecke-multiplicative coefficient generation, numeric `zeta_F` / `L` /
//! `Lambda` / Rankin-Selberg values, and the exact convolution identity
//! behind Zagier's kernel formula.
//!
//! Truncation semantics: a series is complete up to `max_norm`; querying a
//! coefficient beyond that bound is an error, never a silent zero.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ideals::{
    divisors, enumerate_ideals, factor_ideal, ideal_gcd, ideal_mul, ideal_quotient, sigma_r,
    Ideal,
};
use crate::numeric::{self, divisor_sum_tail};
use crate::quadfield::FieldContext;
use crate::Result;

/// A series coefficient: exact rational or big float.
#[derive(Debug, Clone)]
pub enum SCoeff {
    Exact(Rational),
    Num(Float),
}

impl SCoeff {
    pub fn zero() -> SCoeff {
        SCoeff::Exact(Rational::new())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SCoeff::Exact(q) => q.cmp0() == std::cmp::Ordering::Equal,
            SCoeff::Num(x) => x.is_zero(),
        }
    }

    pub fn as_exact(&self) -> Result<&Rational> {
        match self {
            SCoeff::Exact(q) => Ok(q),
            SCoeff::Num(_) => Err(Error::DomainError(
                "operation requires exact coefficients".into(),
            )),
        }
    }

    pub fn to_float(&self, prec: u32) -> Float {
        match self {
            SCoeff::Exact(q) => Float::with_val(prec, q),
            SCoeff::Num(x) => Float::with_val(prec, x),
        }
    }

    fn prec_or(&self, fallback: u32) -> u32 {
        match self {
            SCoeff::Exact(_) => fallback,
            SCoeff::Num(x) => x.prec(),
        }
    }

    pub fn add(&self, other: &SCoeff) -> SCoeff {
        match (self, other) {
            (SCoeff::Exact(a), SCoeff::Exact(b)) => SCoeff::Exact(Rational::from(a + b)),
            _ => {
                let prec = self.prec_or(192).max(other.prec_or(192));
                SCoeff::Num(self.to_float(prec) + other.to_float(prec))
            }
        }
    }

    pub fn mul(&self, other: &SCoeff) -> SCoeff {
        match (self, other) {
            (SCoeff::Exact(a), SCoeff::Exact(b)) => SCoeff::Exact(Rational::from(a * b)),
            _ => {
                let prec = self.prec_or(192).max(other.prec_or(192));
                SCoeff::Num(self.to_float(prec) * other.to_float(prec))
            }
        }
    }
}

/// Truncated ideal-indexed coefficient sequence.
#[derive(Debug, Clone)]
pub struct IdealCoeffSeries {
    pub label: String,
    /// Weight metadata for the Hecke action.
    pub weight: i64,
    /// Completeness bound: every ideal of norm <= max_norm is represented
    /// (absent keys of admissible norm are zero).
    pub max_norm: i64,
    coeffs: BTreeMap<Ideal, SCoeff>,
}

impl IdealCoeffSeries {
    pub fn new(label: impl Into<String>, weight: i64, max_norm: i64) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(Ideal::one(), SCoeff::zero());
        IdealCoeffSeries {
            label: label.into(),
            weight,
            max_norm,
            coeffs,
        }
    }

    /// Dirac series: 1 at the unit ideal, 0 elsewhere.
    pub fn delta_unit(max_norm: i64) -> Self {
        let mut s = IdealCoeffSeries::new("delta_O", 0, max_norm);
        s.set(Ideal::one(), SCoeff::Exact(Rational::from(1)));
        s
    }

    /// The sigma_r series: coefficient `sigma_r(m)` at every ideal.
    pub fn sigma_series(r: i64, max_norm: i64, f: &FieldContext) -> Self {
        let mut s = IdealCoeffSeries::new(format!("sigma_{r}"), r + 1, max_norm);
        for i in enumerate_ideals(max_norm, f) {
            let v = sigma_r(&i, r, f);
            s.set(i, SCoeff::Exact(v));
        }
        s
    }

    pub fn set(&mut self, ideal: Ideal, value: SCoeff) {
        debug_assert!(ideal.norm_i64() <= self.max_norm);
        self.coeffs.insert(ideal, value);
    }

    /// Coefficient lookup; beyond `max_norm` this is an error, not a zero.
    pub fn get(&self, ideal: &Ideal) -> Result<SCoeff> {
        let n = ideal.norm_i64();
        if n > self.max_norm {
            return Err(Error::InsufficientTruncation {
                have: self.max_norm,
                need: n,
            });
        }
        Ok(self.coeffs.get(ideal).cloned().unwrap_or_else(SCoeff::zero))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ideal, &SCoeff)> {
        self.coeffs.iter()
    }

    pub fn is_exact(&self) -> bool {
        self.coeffs.values().all(|c| matches!(c, SCoeff::Exact(_)))
    }

    /// Coefficientwise `N(m)^r * c(m)`.
    pub fn shift(&self, r: i64) -> Self {
        let mut out = IdealCoeffSeries::new(
            format!("{}<shift {r}>", self.label),
            self.weight,
            self.max_norm,
        );
        for (i, c) in &self.coeffs {
            let n = Rational::from(i.norm().clone());
            let factor = if r >= 0 {
                n.pow(r as u32)
            } else {
                n.pow((-r) as u32).recip()
            };
            out.set(i.clone(), c.mul(&SCoeff::Exact(factor)));
        }
        out
    }

    /// Restrict to a smaller completeness bound.
    pub fn truncate(&self, max_norm: i64) -> Self {
        let max_norm = max_norm.min(self.max_norm);
        let mut out = IdealCoeffSeries::new(self.label.clone(), self.weight, max_norm);
        for (i, c) in &self.coeffs {
            if i.norm_i64() <= max_norm {
                out.set(i.clone(), c.clone());
            }
        }
        out
    }

    /// Coefficientwise product (used for Rankin-Selberg series).
    pub fn pointwise_mul(&self, other: &Self) -> Self {
        let max_norm = self.max_norm.min(other.max_norm);
        let mut out = IdealCoeffSeries::new(
            format!("{}*{}", self.label, other.label),
            self.weight,
            max_norm,
        );
        for (i, c) in &self.coeffs {
            if i.norm_i64() > max_norm {
                continue;
            }
            if let Ok(oc) = other.get(i) {
                out.set(i.clone(), c.mul(&oc));
            }
        }
        out
    }

    /// JSON dump; exact series only.
    pub fn to_json(&self) -> Result<serde_json::Value> {
        let mut rows = Vec::new();
        for (i, c) in &self.coeffs {
            let q = c.as_exact()?;
            if q.cmp0() == std::cmp::Ordering::Equal && !i.is_one() {
                continue;
            }
            let num: serde_json::Number = q
                .numer()
                .to_string()
                .parse()
                .map_err(|_| Error::Parse("numerator is not a JSON number".into()))?;
            let den: serde_json::Number = q
                .denom()
                .to_string()
                .parse()
                .map_err(|_| Error::Parse("denominator is not a JSON number".into()))?;
            rows.push(serde_json::json!([i, num, den]));
        }
        Ok(serde_json::json!({
            "label": self.label,
            "weight": self.weight,
            "max_norm": self.max_norm,
            "coeffs": rows,
        }))
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        #[derive(Serialize, Deserialize)]
        struct Raw {
            label: String,
            weight: i64,
            max_norm: i64,
            coeffs: Vec<(Ideal, serde_json::Number, serde_json::Number)>,
        }
        let raw: Raw = serde_json::from_value(v.clone())
            .map_err(|e| Error::Parse(format!("bad series JSON: {e}")))?;
        if raw.max_norm < 1 {
            return Err(Error::Parse("max_norm must be positive".into()));
        }
        let mut s = IdealCoeffSeries::new(raw.label, raw.weight, raw.max_norm);
        for (ideal, num, den) in raw.coeffs {
            if ideal.norm_i64() > raw.max_norm {
                return Err(Error::Parse(format!(
                    "coefficient at norm {} exceeds max_norm {}",
                    ideal.norm_i64(),
                    raw.max_norm
                )));
            }
            let n: Integer = num
                .to_string()
                .parse()
                .map_err(|_| Error::Parse("bad numerator".into()))?;
            let d: Integer = den
                .to_string()
                .parse()
                .map_err(|_| Error::Parse("bad denominator".into()))?;
            if d == 0 {
                return Err(Error::Parse("zero denominator".into()));
            }
            s.set(ideal, SCoeff::Exact(Rational::from((n, d))));
        }
        Ok(s)
    }
}

/// `zeta_F(s)` as a numeric value; see [`crate::numeric::zeta_f`].
pub fn zeta_f_numeric(s: &Float, f: &FieldContext, prec: u32) -> Result<Float> {
    numeric::zeta_f(s, f.disc(), prec)
}

/// Dirichlet convolution `(A * B)(m) = sum_{a b = m} A(a) B(b)`, exact when
/// both inputs are exact; `max_norm` is the minimum of the inputs'.
pub fn dirichlet_convolve(
    a: &IdealCoeffSeries,
    b: &IdealCoeffSeries,
    f: &FieldContext,
) -> IdealCoeffSeries {
    let max_norm = a.max_norm.min(b.max_norm);
    let mut out = IdealCoeffSeries::new(format!("{}(*){}", a.label, b.label), a.weight, max_norm);
    for m in enumerate_ideals(max_norm, f) {
        let mut acc = SCoeff::zero();
        for d in divisors(&m, f) {
            let q = ideal_quotient(&m, &d, f).expect("divisor");
            let av = a.get(&d).expect("within truncation");
            let bv = b.get(&q).expect("within truncation");
            if av.is_zero() || bv.is_zero() {
                continue;
            }
            acc = acc.add(&av.mul(&bv));
        }
        if !acc.is_zero() || m.is_one() {
            out.set(m, acc);
        }
    }
    out
}

/// Extend Hecke eigenvalues at primes to a multiplicative coefficient
/// series of weight `m`:
/// `c(O) = 1`, `c(p^{r+1}) = c(p) c(p^r) - N(p)^{m-1} c(p^{r-1})`, and
/// multiplicativity across distinct primes.
pub fn hecke_extend(
    prime_values: &BTreeMap<Ideal, Rational>,
    weight: i64,
    max_norm: i64,
    f: &FieldContext,
) -> Result<IdealCoeffSeries> {
    let mut powers: BTreeMap<Ideal, Vec<Rational>> = BTreeMap::new();
    let mut out = IdealCoeffSeries::new("hecke", weight, max_norm);
    for m in enumerate_ideals(max_norm, f) {
        let mut val = Rational::from(1);
        for (pdata, e) in factor_ideal(&m, f) {
            let p = pdata.ideal;
            if !powers.contains_key(&p) {
                let cp = prime_values
                    .get(&p)
                    .ok_or(Error::MissingPrime(p.norm_i64()))?
                    .clone();
                powers.insert(p.clone(), vec![Rational::from(1), cp]);
            }
            let list = powers.get_mut(&p).unwrap();
            let npow = Rational::from(p.norm().clone()).pow((weight - 1) as u32);
            while list.len() <= e as usize {
                let k = list.len();
                let next =
                    Rational::from(&list[1] * &list[k - 1]) - Rational::from(&npow * &list[k - 2]);
                list.push(next);
            }
            val *= &list[e as usize];
        }
        out.set(m, SCoeff::Exact(val));
    }
    Ok(out)
}

/// Seeded random Hecke-multiplicative series (eigenvalues uniform in a small
/// integer range), used by the verification suites.
pub fn random_hecke_series(
    seed: u64,
    weight: i64,
    max_norm: i64,
    f: &FieldContext,
) -> Result<IdealCoeffSeries> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut pv = BTreeMap::new();
    for i in enumerate_ideals(max_norm, f) {
        let fac = factor_ideal(&i, f);
        if fac.len() == 1 && fac[0].1 == 1 {
            pv.insert(i.clone(), Rational::from(rng.gen_range(-50i64..=50)));
        }
    }
    hecke_extend(&pv, weight, max_norm, f)
}

/// Hecke operator on coefficients at level `O` (trivial character):
/// `c(a, T_m f) = sum_{r | a + m} N(r)^{k-1} c(a m r^{-2}, f)`.
pub fn hecke_apply(
    m: &Ideal,
    series: &IdealCoeffSeries,
    weight: i64,
    f: &FieldContext,
) -> Result<IdealCoeffSeries> {
    let nm = m.norm_i64();
    if series.max_norm < nm {
        return Err(Error::InsufficientTruncation {
            have: series.max_norm,
            need: nm,
        });
    }
    let new_max = series.max_norm / nm;
    let mut out = IdealCoeffSeries::new(format!("T_{m}({})", series.label), weight, new_max);
    for a in enumerate_ideals(new_max, f) {
        let g = ideal_gcd(&a, m);
        let mut acc = SCoeff::zero();
        for r in divisors(&g, f) {
            let am = ideal_mul(&a, m, f);
            let r2 = ideal_mul(&r, &r, f);
            let target = ideal_quotient(&am, &r2, f).expect("r^2 divides a*m");
            let c = series.get(&target)?;
            let npow = Rational::from(r.norm().clone()).pow((weight - 1) as u32);
            acc = acc.add(&c.mul(&SCoeff::Exact(npow)));
        }
        out.set(a, acc);
    }
    Ok(out)
}

/// Truncated `L(s, f)` with an explicit tail bound from the caller-declared
/// growth `|c(m)| <= C N(m)^growth`; the constant is the empirical maximum
/// over stored coefficients. Errors unless `s - growth > 1`.
pub fn l_numeric(
    series: &IdealCoeffSeries,
    s: &Float,
    growth_exponent: f64,
    prec: u32,
) -> Result<(Float, Float)> {
    let s_f = s.to_f64();
    if s_f - growth_exponent <= 1.0 {
        return Err(Error::AbscissaViolation {
            s: s_f,
            growth: growth_exponent,
        });
    }
    let wp = prec + 32;
    let mut sum = Float::with_val(wp, 0);
    // Growth constant witnessed on the outer half of the stored range, where
    // the asymptotic regime lives; a series that vanishes there is treated
    // as finitely supported (tail 0).
    let mut c_emp = Float::with_val(wp, 0);
    for (i, c) in series.iter() {
        let cf = c.to_float(wp);
        if cf.is_zero() {
            continue;
        }
        let n = Float::with_val(wp, i.norm());
        sum += &cf * n.clone().pow(Float::with_val(wp, -s.clone()));
        if 2 * i.norm_i64() > series.max_norm {
            let ratio = cf.abs() / n.pow(Float::with_val(wp, growth_exponent));
            if ratio > c_emp {
                c_emp = ratio;
            }
        }
    }
    let sigma = Float::with_val(wp, s - &Float::with_val(wp, growth_exponent));
    let tail = c_emp * divisor_sum_tail(&sigma, series.max_norm, wp);
    Ok((Float::with_val(prec, sum), Float::with_val(prec, tail)))
}

/// Completed `Lambda(s, f) = D^s (2 pi)^{-2s} Gamma(s)^2 L(s, f)`, real `s`
/// in the convergence region only.
pub fn lambda_numeric(
    series: &IdealCoeffSeries,
    s: &Float,
    growth_exponent: f64,
    f: &FieldContext,
    prec: u32,
) -> Result<(Float, Float)> {
    let (l, tail) = l_numeric(series, s, growth_exponent, prec)?;
    let wp = prec + 32;
    let d = Float::with_val(wp, f.disc()).pow(Float::with_val(wp, s));
    let tp = numeric::two_pi(wp).pow(Float::with_val(wp, -2 * s.clone()));
    let ga = Float::with_val(wp, s).gamma().square();
    let factor = d * tp * ga;
    Ok((
        Float::with_val(prec, &l * &factor),
        Float::with_val(prec, &tail * &factor.clone().abs()),
    ))
}

/// Truncated Rankin-Selberg `L(f x g, s)` (real coefficients, so no
/// conjugation), with a tail bound at the combined growth exponent.
pub fn rankin_selberg_numeric(
    fs: &IdealCoeffSeries,
    gs: &IdealCoeffSeries,
    s: &Float,
    combined_growth: f64,
    prec: u32,
) -> Result<(Float, Float)> {
    let prod = fs.pointwise_mul(gs);
    l_numeric(&prod, s, combined_growth, prec)
}

/// Outcome of the exact Zagier-kernel convolution check.
#[derive(Debug, Clone, Serialize)]
pub struct Thm45Report {
    pub pass: bool,
    pub checked_ideals: usize,
    pub max_norm: i64,
    pub first_failure: Option<String>,
}

/// Exact coefficientwise verification of
/// `sum sigma_{l-1}(m) c(m) N(m)^{-s} = L(f, s) L(f, s-l+1) / zeta_F(2s-l-m+2)`
/// in convolution form: `A * Z = B` with `A = sigma_{l-1} . c`,
/// `Z(a^2) = N(a)^{l+m-2}` supported on squares, and `B = c * shift(c, l-1)`.
pub fn verify_thm45_identity(
    series: &IdealCoeffSeries,
    l: i64,
    weight_m: i64,
    max_norm: i64,
    f: &FieldContext,
) -> Result<Thm45Report> {
    if !series.is_exact() {
        return Err(Error::NotMultiplicative("series must be exact".into()));
    }
    spot_check_multiplicative(series, weight_m, f)?;
    let max_norm = max_norm.min(series.max_norm);

    // A(m) = sigma_{l-1}(m) * c(m).
    let sig = IdealCoeffSeries::sigma_series(l - 1, max_norm, f);
    let a = sig.pointwise_mul(series);

    // Z supported on squares: Z(a^2) = N(a)^{l+m-2}.
    let mut z = IdealCoeffSeries::new("zeta_sq", weight_m, max_norm);
    let root = (max_norm as f64).sqrt().floor() as i64;
    for i in enumerate_ideals(root, f) {
        let sq = ideal_mul(&i, &i, f);
        if sq.norm_i64() > max_norm {
            continue;
        }
        let v = Rational::from(i.norm().clone()).pow((l + weight_m - 2) as u32);
        z.set(sq, SCoeff::Exact(v));
    }

    let lhs = dirichlet_convolve(&a, &z, f);
    let rhs = dirichlet_convolve(series, &series.shift(l - 1), f);

    let mut checked = 0usize;
    for m in enumerate_ideals(max_norm, f) {
        let lv = lhs.get(&m)?.as_exact()?.clone();
        let rv = rhs.get(&m)?.as_exact()?.clone();
        checked += 1;
        if lv != rv {
            return Ok(Thm45Report {
                pass: false,
                checked_ideals: checked,
                max_norm,
                first_failure: Some(format!("ideal {m}: lhs {lv} != rhs {rv}")),
            });
        }
    }
    Ok(Thm45Report {
        pass: true,
        checked_ideals: checked,
        max_norm,
        first_failure: None,
    })
}

/// Light multiplicativity precondition: c(O) = 1, a few coprime products and
/// the prime-power recursion on the smallest primes.
fn spot_check_multiplicative(
    series: &IdealCoeffSeries,
    weight_m: i64,
    f: &FieldContext,
) -> Result<()> {
    let one = series.get(&Ideal::one())?.as_exact()?.clone();
    if one != 1 {
        return Err(Error::NotMultiplicative(format!("c(O) = {one} != 1")));
    }
    let ideals = enumerate_ideals(series.max_norm.min(60), f);
    let primes: Vec<&Ideal> = ideals
        .iter()
        .filter(|i| {
            let fac = factor_ideal(i, f);
            fac.len() == 1 && fac[0].1 == 1
        })
        .take(4)
        .collect();
    for (idx, p) in primes.iter().enumerate() {
        for q in primes.iter().skip(idx + 1) {
            if !ideal_gcd(p, q).is_one() {
                continue;
            }
            let prod = ideal_mul(p, q, f);
            if prod.norm_i64() > series.max_norm {
                continue;
            }
            let lhs = series.get(&prod)?.as_exact()?.clone();
            let rhs = Rational::from(series.get(p)?.as_exact()? * series.get(q)?.as_exact()?);
            if lhs != rhs {
                return Err(Error::NotMultiplicative(format!(
                    "c({p} {q}) != c({p}) c({q})"
                )));
            }
        }
        let sq = ideal_mul(p, p, f);
        if sq.norm_i64() <= series.max_norm {
            let cp = series.get(p)?.as_exact()?.clone();
            let expect = Rational::from(&cp * &cp)
                - Rational::from(p.norm().clone()).pow((weight_m - 1) as u32);
            let got = series.get(&sq)?.as_exact()?.clone();
            if got != expect {
                return Err(Error::NotMultiplicative(format!(
                    "prime-power recursion fails at {p}^2"
                )));
            }
        }
    }
    Ok(())
}
