//! Truncated Fourier expansions on the product of two upper half planes:
//! evaluation with explicit tail estimates, Rankin-Cohen brackets with exact
//! coefficient arithmetic in `F`, and numeric modularity-defect testing.
//!
//! Coefficients are stored once per totally-positive unit orbit, at the
//! canonical window representative; the unit relation
//! `a(eps v) = eps^{k/2} a(v)` reconstructs every lattice translate (it is
//! the identity for parallel even weight). Powers of `2 pi i` are tracked
//! symbolically in `prefactor_pow` so exact expansions stay inside `F`.

use std::collections::BTreeMap;

use rug::ops::Pow;
use rug::{Complete, Complex, Float, Integer, Rational};

use crate::error::Error;
use crate::ideals::{tp_generator, Ideal};
use crate::numeric::{self, e_complex};
use crate::quadfield::{
    enumerate_tp_lattice, is_totally_positive, tp_orbit_rep, FieldContext, FieldElem,
};
use crate::Result;

/// A Fourier coefficient: exact element of `F` (read through `sigma_1`) or a
/// complex big float. Mixing promotes to numeric.
#[derive(Debug, Clone)]
pub enum Coeff {
    Exact(FieldElem),
    Num(Complex),
}

impl Coeff {
    pub fn zero() -> Coeff {
        Coeff::Exact(FieldElem::zero())
    }

    pub fn one() -> Coeff {
        Coeff::Exact(FieldElem::one())
    }

    pub fn from_rational(q: Rational) -> Coeff {
        Coeff::Exact(FieldElem::new(q, Rational::new()))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coeff::Exact(e) => e.is_zero(),
            Coeff::Num(z) => z.is_zero(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Coeff::Exact(_))
    }

    fn prec_or(&self, fallback: u32) -> u32 {
        match self {
            Coeff::Exact(_) => fallback,
            Coeff::Num(z) => z.prec().0,
        }
    }

    /// Numeric value: `sigma_1` for exact coefficients.
    pub fn to_complex(&self, f: &FieldContext, prec: u32) -> Complex {
        match self {
            Coeff::Exact(e) => {
                let (s1, _) = e.embed(f, prec);
                Complex::with_val(prec, (s1, Float::new(prec)))
            }
            Coeff::Num(z) => Complex::with_val(prec, z),
        }
    }

    pub fn add(&self, other: &Coeff, f: &FieldContext) -> Coeff {
        match (self, other) {
            (Coeff::Exact(a), Coeff::Exact(b)) => Coeff::Exact(a.add(b)),
            _ => {
                let prec = self.prec_or(192).max(other.prec_or(192));
                Coeff::Num(self.to_complex(f, prec) + other.to_complex(f, prec))
            }
        }
    }

    pub fn mul(&self, other: &Coeff, f: &FieldContext) -> Coeff {
        match (self, other) {
            (Coeff::Exact(a), Coeff::Exact(b)) => Coeff::Exact(a.mul(b, f)),
            _ => {
                let prec = self.prec_or(192).max(other.prec_or(192));
                Coeff::Num(self.to_complex(f, prec) * other.to_complex(f, prec))
            }
        }
    }

    /// Multiply by an exact field element (stays exact when self is exact).
    pub fn mul_elem(&self, e: &FieldElem, f: &FieldContext) -> Coeff {
        match self {
            Coeff::Exact(a) => Coeff::Exact(a.mul(e, f)),
            Coeff::Num(z) => {
                let prec = z.prec().0;
                let (s1, _) = e.embed(f, prec);
                Coeff::Num(Complex::with_val(prec, z * s1))
            }
        }
    }

    pub fn scale(&self, q: &Rational, f: &FieldContext) -> Coeff {
        self.mul_elem(&FieldElem::new(q.clone(), Rational::new()), f)
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Coeff::Exact(e) => serde_json::json!({ "exact": e.to_string() }),
            Coeff::Num(z) => {
                let (re, im) = numeric::complex_to_strings(z);
                serde_json::json!({ "re": re, "im": im })
            }
        }
    }
}

/// Truncated Fourier expansion of a weight-(k1, k2) form. The represented
/// function is `(2 pi i)^prefactor_pow * (const_term + sum ...)`.
#[derive(Debug, Clone)]
pub struct QExpansion {
    pub weight: (i64, i64),
    pub level: Ideal,
    pub const_term: Coeff,
    coeffs: BTreeMap<FieldElem, Coeff>,
    pub trace_bound: Rational,
    pub prefactor_pow: i64,
}

impl QExpansion {
    pub fn new(weight: (i64, i64), level: Ideal, trace_bound: Rational) -> Self {
        QExpansion {
            weight,
            level,
            const_term: Coeff::zero(),
            coeffs: BTreeMap::new(),
            trace_bound,
            prefactor_pow: 0,
        }
    }

    /// The constant function 1 (weight (0,0)).
    pub fn constant_one(trace_bound: Rational) -> Self {
        let mut q = QExpansion::new((0, 0), Ideal::one(), trace_bound);
        q.const_term = Coeff::one();
        q
    }

    pub fn is_exact(&self) -> bool {
        self.const_term.is_exact() && self.coeffs.values().all(Coeff::is_exact)
    }

    /// Insert the coefficient at a canonical orbit representative.
    pub fn set_coeff(&mut self, rep: FieldElem, value: Coeff, f: &FieldContext) -> Result<()> {
        let (canon, j) = tp_orbit_rep(&rep, f)?;
        if j != 0 || canon != rep {
            return Err(Error::DomainError(format!(
                "{rep} is not a canonical orbit representative"
            )));
        }
        if rep.trace(f) > self.trace_bound {
            return Err(Error::DomainError(format!(
                "trace of {rep} exceeds the trace bound"
            )));
        }
        self.coeffs.insert(rep, value);
        Ok(())
    }

    pub fn coeff_at_rep(&self, rep: &FieldElem) -> Coeff {
        self.coeffs.get(rep).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn reps(&self) -> impl Iterator<Item = (&FieldElem, &Coeff)> {
        self.coeffs.iter()
    }

    pub fn num_coeffs(&self) -> usize {
        self.coeffs.len()
    }

    /// Unit weight factor `(eps+^j)^{k/2}` as an exact field element;
    /// requires even weight components.
    fn unit_weight_factor(&self, j: i64, f: &FieldContext) -> Result<FieldElem> {
        let (k1, k2) = self.weight;
        if k1 % 2 != 0 || k2 % 2 != 0 {
            return Err(Error::BadWeight(format!(
                "odd weight ({k1},{k2}) has no exact unit factor"
            )));
        }
        if k1 == k2 {
            // N(eps)^{k/2} = 1: invariance for parallel weight.
            return Ok(FieldElem::one());
        }
        let u = f.tp_unit().pow(j, f)?;
        let a = u.pow(k1 / 2, f)?;
        let b = u.conj(f).pow(k2 / 2, f)?;
        Ok(a.mul(&b, f))
    }

    /// Coefficient at an arbitrary totally positive lattice point, via the
    /// orbit representative and the unit weight relation.
    pub fn coeff_at_lattice(&self, v: &FieldElem, f: &FieldContext) -> Result<Coeff> {
        if v.is_zero() {
            return Ok(self.const_term.clone());
        }
        let (rep, j) = tp_orbit_rep(v, f)?;
        let base = self.coeff_at_rep(&rep);
        if base.is_zero() {
            return Ok(Coeff::zero());
        }
        let factor = self.unit_weight_factor(j, f)?;
        Ok(base.mul_elem(&factor, f))
    }

    /// Multiply every coefficient (including the constant term).
    pub fn scale_coeff(&self, c: &Coeff, f: &FieldContext) -> QExpansion {
        let mut out = self.clone();
        out.const_term = out.const_term.mul(c, f);
        for v in out.coeffs.values_mut() {
            *v = v.mul(c, f);
        }
        out
    }

    /// Sum of two expansions of identical weight, level and prefactor.
    pub fn add_expansion(&self, other: &QExpansion, f: &FieldContext) -> Result<QExpansion> {
        if self.weight != other.weight
            || self.level != other.level
            || self.prefactor_pow != other.prefactor_pow
        {
            return Err(Error::IncompatibleLevels);
        }
        let bound = self.trace_bound.clone().min(other.trace_bound.clone());
        let mut out = QExpansion::new(self.weight, self.level.clone(), bound.clone());
        out.prefactor_pow = self.prefactor_pow;
        out.const_term = self.const_term.add(&other.const_term, f);
        for (rep, c) in self.coeffs.iter().chain(other.coeffs.iter()) {
            if rep.trace(f) > bound {
                continue;
            }
            let cur = out.coeffs.remove(rep).unwrap_or_else(Coeff::zero);
            out.coeffs.insert(rep.clone(), cur.add(c, f));
        }
        Ok(out)
    }

    /// JSON dump: weight, level, trace bound, prefactor power and the
    /// orbit-indexed coefficients sorted by (trace, norm).
    pub fn to_json(&self, f: &FieldContext) -> serde_json::Value {
        let mut rows: Vec<(Rational, Rational, &FieldElem, &Coeff)> = self
            .coeffs
            .iter()
            .map(|(v, c)| (v.trace(f), v.norm(f), v, c))
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)).then_with(|| a.2.cmp(b.2)));
        serde_json::json!({
            "weight": [self.weight.0, self.weight.1],
            "level": self.level,
            "trace_bound": self.trace_bound.to_string(),
            "prefactor_pow": self.prefactor_pow,
            "mode": if self.is_exact() { "exact" } else { "numeric" },
            "const_term": self.const_term.to_json(),
            "coeffs": rows
                .into_iter()
                .map(|(_, _, v, c)| serde_json::json!([v.to_string(), c.to_json()]))
                .collect::<Vec<_>>(),
        })
    }
}

/// Evaluate the expansion at `z = (z1, z2)` with positive imaginary parts.
///
/// Sums the stored orbits over all unit translates whose exponent is within
/// reach of the working precision, then multiplies by `(2 pi i)^prefactor`.
/// The returned tail covers the translate cutoff and the trace truncation,
/// the latter through the documented lattice-count heuristic
/// `#(Tr in [t, t+1)) <= 2(2t+2)/sqrt(D) + 2` and the growth model
/// `|a(v)| <= C N(v)^{kmax}` with `C` witnessed on the stored outer half.
pub fn qexp_eval(
    q: &QExpansion,
    z: &(Complex, Complex),
    f: &FieldContext,
    prec: u32,
) -> Result<(Complex, Float)> {
    let wp = prec + 32;
    let y1 = Float::with_val(wp, z.0.imag());
    let y2 = Float::with_val(wp, z.1.imag());
    if !(y1.is_sign_positive() && !y1.is_zero() && y2.is_sign_positive() && !y2.is_zero()) {
        return Err(Error::NotUpperHalfPlane);
    }
    let tiny = numeric::ulp(wp - 8, wp);
    let mut acc = q.const_term.to_complex(f, wp);
    let mut unit_tail = Float::with_val(wp, 0);

    for (rep, coeff) in q.reps() {
        if coeff.is_zero() {
            continue;
        }
        // Walk unit translates eps+^j * rep in both directions; the exponent
        // 2 pi (s1 y1 + s2 y2) is convex in j, so each direction ends once
        // terms are tiny past the minimum.
        for dir in [1i64, -1] {
            let mut j = if dir == 1 { 0 } else { -1 };
            let mut last_exp = Float::with_val(wp, -1);
            loop {
                let u = f.tp_unit().pow(j, f)?;
                let tau = rep.mul(&u, f);
                let (s1, s2) = tau.embed(f, wp);
                let expo = numeric::two_pi(wp)
                    * (Float::with_val(wp, &s1 * &y1) + Float::with_val(wp, &s2 * &y2));
                let factor = q.unit_weight_factor(j, f)?;
                let a = coeff.mul_elem(&factor, f).to_complex(f, wp);
                let mag = a.clone().abs().real().clone()
                    * Float::with_val(wp, (-expo.clone()).exp());
                if mag > tiny {
                    let w = Complex::with_val(wp, &z.0 * &s1) + Complex::with_val(wp, &z.1 * &s2);
                    acc += a * e_complex(&w, wp);
                } else if expo > last_exp {
                    // Past the exponent minimum and below threshold: the
                    // remaining terms decay at least geometrically.
                    unit_tail += 2u32 * mag;
                    break;
                }
                last_exp = expo;
                j += dir;
                if j.unsigned_abs() > 64 {
                    unit_tail += mag;
                    break;
                }
            }
        }
    }

    // Trace-truncation tail: growth model over the unstored range.
    let kmax = q.weight.0.max(q.weight.1).max(0);
    let mut c_emp = Float::with_val(wp, 0);
    for (rep, coeff) in q.reps() {
        let tr = rep.trace(f);
        if 2u32 * tr.clone() > q.trace_bound {
            let mag = coeff.to_complex(f, wp).abs().real().clone();
            let n = Float::with_val(wp, &rep.norm(f));
            let ratio = mag / n.pow(kmax as i32);
            if ratio > c_emp {
                c_emp = ratio;
            }
        }
    }
    let mut trace_tail = Float::with_val(wp, 0);
    if !c_emp.is_zero() {
        let ymin = y1.clone().min(&y2);
        let sqrt_d = f.sqrt_disc(wp);
        let mut t = q.trace_bound.to_f64().floor() as i64 + 1;
        loop {
            let count = 2.0 * (2.0 * t as f64 + 2.0) / sqrt_d.to_f64() + 2.0;
            let nmax = Float::with_val(wp, t as f64 / 2.0).pow(2 * kmax as i32);
            let term = Float::with_val(wp, count)
                * nmax
                * (-(numeric::two_pi(wp) * Float::with_val(wp, t) * &ymin)).exp();
            trace_tail += Float::with_val(wp, &term * &c_emp);
            if Float::with_val(wp, &term * &c_emp) < tiny || t > 100_000 {
                break;
            }
            t += 1;
        }
    }

    // Fold in the (2 pi i)^p prefactor.
    let p = q.prefactor_pow;
    let two_pi_i = Complex::with_val(wp, (Float::new(wp), numeric::two_pi(wp)));
    let pref = Complex::with_val(wp, two_pi_i.pow(p as i32));
    let pref_mag = pref.clone().abs().real().clone();
    let value = Complex::with_val(prec, &acc * &pref);
    let tail = Float::with_val(prec, (unit_tail + trace_tail) * pref_mag);
    Ok((value, tail))
}

/// Rankin-Cohen bracket `[f, g]_n`.
///
/// Coefficient at a representative `v`, over actual lattice splittings
/// `v = v1 + v2` (each part totally positive or zero):
/// `sum_l (-1)^{|l|} prod_j C(kf_j+n_j-1, n_j-l_j) C(kg_j+n_j-1, l_j)
///  sigma_j(v1)^{l_j} sigma_j(v2)^{n_j-l_j} a(v1) b(v2)`,
/// with `0^0 = 1` so constant terms only enter where the paired exponent
/// vanishes. In exact mode the sigma-power products are the field elements
/// `v1^{l1} conj(v1)^{l2}` etc., so coefficients stay in `F`.
pub fn rankin_cohen(
    fq: &QExpansion,
    gq: &QExpansion,
    n: (i64, i64),
    f: &FieldContext,
) -> Result<QExpansion> {
    if fq.level != gq.level {
        return Err(Error::IncompatibleLevels);
    }
    if n.0 < 0 || n.1 < 0 {
        return Err(Error::BadWeight("bracket index must be nonnegative".into()));
    }
    let weight = (
        fq.weight.0 + gq.weight.0 + 2 * n.0,
        fq.weight.1 + gq.weight.1 + 2 * n.1,
    );
    let bound = fq.trace_bound.clone().min(gq.trace_bound.clone());
    let mut out = QExpansion::new(weight, fq.level.clone(), bound.clone());
    out.prefactor_pow = fq.prefactor_pow + gq.prefactor_pow + n.0 + n.1;

    // n = 0 degenerates to the plain product, constants included.
    if n == (0, 0) {
        out.const_term = fq.const_term.mul(&gq.const_term, f);
    }

    let lattice = enumerate_tp_lattice(&bound, f);
    let targets: Vec<FieldElem> = lattice
        .iter()
        .filter(|v| {
            tp_orbit_rep(v, f)
                .map(|(rep, j)| j == 0 && &&rep == v)
                .unwrap_or(false)
        })
        .cloned()
        .collect();

    for target in targets {
        let mut acc = Coeff::zero();
        let target_trace = target.trace(f);
        let mut splittings: Vec<(FieldElem, FieldElem)> = vec![
            (FieldElem::zero(), target.clone()),
            (target.clone(), FieldElem::zero()),
        ];
        for v1 in &lattice {
            if v1.trace(f) >= target_trace {
                break; // lattice is sorted by trace
            }
            let v2 = target.sub(v1);
            if is_totally_positive(&v2, f) {
                splittings.push((v1.clone(), v2));
            }
        }
        for (v1, v2) in splittings {
            let a1 = fq.coeff_at_lattice(&v1, f)?;
            if a1.is_zero() {
                continue;
            }
            let a2 = gq.coeff_at_lattice(&v2, f)?;
            if a2.is_zero() {
                continue;
            }
            let pair = a1.mul(&a2, f);
            let v1c = v1.conj(f);
            let v2c = v2.conj(f);
            for l1 in 0..=n.0 {
                for l2 in 0..=n.1 {
                    // 0^0 = 1: zero parts force the matching exponent to 0.
                    if v1.is_zero() && (l1, l2) != (0, 0) {
                        continue;
                    }
                    if v2.is_zero() && (l1, l2) != n {
                        continue;
                    }
                    let b1 = Integer::binomial_u((fq.weight.0 + n.0 - 1) as u32, (n.0 - l1) as u32)
                        .complete();
                    let b2 = Integer::binomial_u((fq.weight.1 + n.1 - 1) as u32, (n.1 - l2) as u32)
                        .complete();
                    let b3 =
                        Integer::binomial_u((gq.weight.0 + n.0 - 1) as u32, l1 as u32).complete();
                    let b4 =
                        Integer::binomial_u((gq.weight.1 + n.1 - 1) as u32, l2 as u32).complete();
                    let mut scalar = Rational::from(b1 * b2 * b3 * b4);
                    if (l1 + l2) % 2 == 1 {
                        scalar = -scalar;
                    }
                    if scalar == 0 {
                        continue;
                    }
                    // sigma powers as exact field elements.
                    let w1 = v1.pow(l1, f)?.mul(&v1c.pow(l2, f)?, f);
                    let w2 = v2.pow(n.0 - l1, f)?.mul(&v2c.pow(n.1 - l2, f)?, f);
                    let term = pair.mul_elem(&w1, f).mul_elem(&w2, f).scale(&scalar, f);
                    acc = acc.add(&term, f);
                }
            }
        }
        if !acc.is_zero() {
            out.set_coeff(target, acc, f)?;
        }
    }
    Ok(out)
}

/// Group membership test for `Gamma_0(O, n)`: `a, d` integral, `b` in the
/// inverse different, `c` in `n * different`, determinant a totally positive
/// unit.
pub fn check_in_group(gamma: &[FieldElem; 4], level: &Ideal, f: &FieldContext) -> Result<()> {
    let [a, b, c, d] = gamma;
    if !a.is_integral() || !d.is_integral() {
        return Err(Error::NotInGroup("diagonal entries must be integral".into()));
    }
    let delta = f.diff_gen();
    if !b.mul(delta, f).is_integral() {
        return Err(Error::NotInGroup("b is not in the inverse different".into()));
    }
    if !c.is_zero() {
        let n_gen = tp_generator(level, f)?;
        let scaled = c.div(&delta.mul(&n_gen, f), f)?;
        if !scaled.is_integral() {
            return Err(Error::NotInGroup("c is not in n * different".into()));
        }
    }
    let det = a.mul(d, f).sub(&b.mul(c, f));
    let n = det.norm(f);
    if n != 1 || !is_totally_positive(&det, f) {
        return Err(Error::NotInGroup(format!(
            "determinant {det} is not a totally positive unit"
        )));
    }
    Ok(())
}

/// Mobius action of `gamma` on `z`, componentwise over the two embeddings.
pub fn mobius_apply(
    gamma: &[FieldElem; 4],
    z: &(Complex, Complex),
    f: &FieldContext,
    prec: u32,
) -> (Complex, Complex) {
    let [a, b, c, d] = gamma;
    let map = |which: usize| -> Complex {
        let pick = |e: &FieldElem| {
            let (s1, s2) = e.embed(f, prec);
            if which == 0 {
                s1
            } else {
                s2
            }
        };
        let zz = if which == 0 { &z.0 } else { &z.1 };
        let num = Complex::with_val(prec, zz * &pick(a)) + pick(b);
        let den = Complex::with_val(prec, zz * &pick(c)) + pick(d);
        num / den
    };
    (map(0), map(1))
}

/// `|f(gamma z) - det(gamma)^{-k/2} N(cz+d)^k f(z)|` with the two
/// evaluations' tails combined.
pub fn modularity_defect(
    q: &QExpansion,
    gamma: &[FieldElem; 4],
    z: &(Complex, Complex),
    f: &FieldContext,
    prec: u32,
) -> Result<(Float, Float)> {
    check_in_group(gamma, &q.level, f)?;
    let wp = prec + 16;
    let gz = mobius_apply(gamma, z, f, wp);
    let (lhs, lhs_tail) = qexp_eval(q, &gz, f, wp)?;
    let (rhs0, rhs_tail) = qexp_eval(q, z, f, wp)?;
    let [_, _, c, d] = gamma;
    let det = gamma[0].mul(&gamma[3], f).sub(&gamma[1].mul(&gamma[2], f));
    let (det1, det2) = det.embed(f, wp);
    let (c1, c2) = c.embed(f, wp);
    let (d1, d2) = d.embed(f, wp);
    let (k1, k2) = q.weight;
    let det_factor = det1.pow(Float::with_val(wp, -k1) / 2u32)
        * det2.pow(Float::with_val(wp, -k2) / 2u32);
    let aut1 = Complex::with_val(wp, (Complex::with_val(wp, &z.0 * &c1) + d1).pow(k1 as i32));
    let aut2 = Complex::with_val(wp, (Complex::with_val(wp, &z.1 * &c2) + d2).pow(k2 as i32));
    let factor = Complex::with_val(wp, &aut1 * &aut2) * &det_factor;
    let rhs = Complex::with_val(wp, &rhs0 * &factor);
    let defect = Complex::with_val(wp, &lhs - &rhs).abs().real().clone();
    let tail = lhs_tail + rhs_tail * factor.abs().real().clone();
    Ok((Float::with_val(prec, defect), Float::with_val(prec, tail)))
}

/// Translation matrix `(1, beta; 0, 1)`.
pub fn translation_matrix(beta: &FieldElem) -> [FieldElem; 4] {
    [
        FieldElem::one(),
        beta.clone(),
        FieldElem::zero(),
        FieldElem::one(),
    ]
}

/// Pseudo-random element of `Gamma_0(O, n)` with `c != 0`: picks
/// `c = delta * n_gen * o` from the seed, walks `d` to coprimality with
/// `c/delta`, and completes with determinant 1.
pub fn random_group_element(
    level: &Ideal,
    seed: (i64, i64, i64, i64),
    f: &FieldContext,
) -> Result<[FieldElem; 4]> {
    let n_gen = tp_generator(level, f)?;
    let (ox, oy, dx, dy) = seed;
    let o = FieldElem::from_ints(ox, oy);
    if o.is_zero() {
        return Err(Error::DomainError("zero c seed".into()));
    }
    let c = f.diff_gen().mul(&n_gen, f).mul(&o, f);
    let c_over_delta = c.div(f.diff_gen(), f)?;
    let mut d = FieldElem::from_ints(dx, dy);
    loop {
        if !d.is_zero() {
            let (g, _, _) = crate::quadfield::ext_gcd(&d, &c_over_delta, f)?;
            if f.is_unit(&g) {
                break;
            }
        }
        d = d.add(&FieldElem::one());
    }
    complete_matrix(&c, &d, f)
}

/// Complete `(c, d)` to a group element with `a d - b c = 1`, `b` in the
/// inverse different; solves `a d - b' (c/delta) = 1` by the extended gcd.
pub fn complete_matrix(c: &FieldElem, d: &FieldElem, f: &FieldContext) -> Result<[FieldElem; 4]> {
    if c.is_zero() {
        if !f.is_unit(d) {
            return Err(Error::CompletionFailure("c = 0 needs unit d".into()));
        }
        return Ok([d.inv(f)?, FieldElem::zero(), FieldElem::zero(), d.clone()]);
    }
    let c_over_delta = c.div(f.diff_gen(), f)?;
    if !c_over_delta.is_integral() {
        return Err(Error::CompletionFailure(format!(
            "c = {c} is not in the different"
        )));
    }
    let (g, u, v) = crate::quadfield::ext_gcd(d, &c_over_delta, f)?;
    if !f.is_unit(&g) {
        return Err(Error::CompletionFailure(format!(
            "gcd(d, c/delta) = {g} is not a unit"
        )));
    }
    // u d + v (c/delta) = g; take a = u/g, b' = -v/g so a d - b'(c/delta) = 1.
    let ginv = g.inv(f)?;
    let a = u.mul(&ginv, f);
    let b_prime = v.mul(&ginv, f).neg();
    let b = b_prime.div(f.diff_gen(), f)?;
    let gamma = [a, b, c.clone(), d.clone()];
    let det = gamma[0].mul(&gamma[3], f).sub(&gamma[1].mul(&gamma[2], f));
    debug_assert_eq!(det, FieldElem::one());
    Ok(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::{enumerate_tp_orbits, make_field};

    fn f5() -> FieldContext {
        make_field(5).unwrap()
    }

    fn z_test(prec: u32) -> (Complex, Complex) {
        (
            Complex::with_val(prec, (0.0, 1.0)),
            Complex::with_val(prec, (0.0, 1.0)),
        )
    }

    #[test]
    fn eval_constant() {
        let f = f5();
        let q = QExpansion::constant_one(Rational::from(10));
        let (v, tail) = qexp_eval(&q, &z_test(128), &f, 128).unwrap();
        assert!(
            Complex::with_val(128, &v - &Complex::with_val(128, 1))
                .abs()
                .real()
                .clone()
                < 1e-30
        );
        assert!(tail < 1e-20);
    }

    #[test]
    fn eval_single_orbit_matches_translate_sum_oracle() {
        // Single orbit v = 1, coefficient 1, z = (i, i): independent direct
        // translate-sum oracle; value is about e^{-4 pi}.
        let f = f5();
        let prec = 160;
        let mut q = QExpansion::new((8, 8), Ideal::one(), Rational::from(10));
        q.set_coeff(FieldElem::one(), Coeff::one(), &f).unwrap();
        let (v, tail) = qexp_eval(&q, &z_test(prec), &f, prec).unwrap();

        let mut oracle = Float::with_val(prec, 0);
        for j in -12i64..=12 {
            let u = f.tp_unit().pow(j, &f).unwrap();
            let tr = u.trace(&f);
            oracle += (-(numeric::two_pi(prec) * Float::with_val(prec, &tr))).exp();
        }
        let err = Float::with_val(prec, v.real() - &oracle).abs();
        assert!(err < Float::with_val(prec, 1e-35), "err = {err}");
        assert!(v.imag().clone().abs() < 1e-30);
        assert!(tail < 1e-20);
        assert!((v.real().to_f64() - (-4.0 * std::f64::consts::PI).exp()).abs() < 1e-5);
    }

    #[test]
    fn eval_linearity_and_prefactor() {
        let f = f5();
        let prec = 128;
        let mut q = QExpansion::new((6, 6), Ideal::one(), Rational::from(8));
        q.set_coeff(FieldElem::one(), Coeff::from_rational(Rational::from(3)), &f)
            .unwrap();
        q.set_coeff(FieldElem::from_ints(2, 0), Coeff::one(), &f).unwrap();
        let (v1, _) = qexp_eval(&q, &z_test(prec), &f, prec).unwrap();
        let scaled = q.scale_coeff(&Coeff::from_rational(Rational::from((7, 2))), &f);
        let (v2, _) = qexp_eval(&scaled, &z_test(prec), &f, prec).unwrap();
        let expect = Complex::with_val(prec, &v1 * &Float::with_val(prec, 3.5));
        assert!(
            Complex::with_val(prec, &v2 - &expect).abs().real().clone() < 1e-25
        );

        let mut qp = q.clone();
        qp.prefactor_pow = 2;
        let (v3, _) = qexp_eval(&qp, &z_test(prec), &f, prec).unwrap();
        let tpi = Complex::with_val(prec, (Float::new(prec), numeric::two_pi(prec)));
        let expect = Complex::with_val(prec, &v1 * &Complex::with_val(prec, tpi.pow(2i32)));
        assert!(
            Complex::with_val(prec, &v3 - &expect).abs().real().clone() < 1e-25
        );
    }

    #[test]
    fn bracket_n0_is_cauchy_product() {
        let f = f5();
        let bound = Rational::from(12);
        let mut a = QExpansion::new((4, 4), Ideal::one(), bound.clone());
        a.const_term = Coeff::from_rational(Rational::from(2));
        let mut b = QExpansion::new((6, 6), Ideal::one(), bound.clone());
        b.const_term = Coeff::from_rational(Rational::from(1));
        for (i, rep) in enumerate_tp_orbits(&bound, &f).into_iter().enumerate() {
            a.set_coeff(
                rep.clone(),
                Coeff::from_rational(Rational::from((i as i64 % 5) - 2)),
                &f,
            )
            .unwrap();
            b.set_coeff(rep, Coeff::from_rational(Rational::from((i as i64 % 3) + 1)), &f)
                .unwrap();
        }
        let prod = rankin_cohen(&a, &b, (0, 0), &f).unwrap();
        assert_eq!(prod.weight, (10, 10));
        // Independent Cauchy-product oracle at each representative.
        for target in enumerate_tp_orbits(&bound, &f) {
            let mut expect = a
                .const_term
                .mul(&b.coeff_at_lattice(&target, &f).unwrap(), &f)
                .add(
                    &a.coeff_at_lattice(&target, &f)
                        .unwrap()
                        .mul(&b.const_term, &f),
                    &f,
                );
            for v1 in enumerate_tp_lattice(&bound, &f) {
                let v2 = target.sub(&v1);
                if !is_totally_positive(&v2, &f) {
                    continue;
                }
                expect = expect.add(
                    &a.coeff_at_lattice(&v1, &f)
                        .unwrap()
                        .mul(&b.coeff_at_lattice(&v2, &f).unwrap(), &f),
                    &f,
                );
            }
            let got = prod.coeff_at_rep(&target);
            match (got, expect) {
                (Coeff::Exact(x), Coeff::Exact(y)) => assert_eq!(x, y, "at {target}"),
                _ => panic!("expected exact"),
            }
        }
        match prod.const_term {
            Coeff::Exact(ref e) => assert_eq!(e, &FieldElem::from_ints(2, 0)),
            _ => panic!(),
        }
    }

    #[test]
    fn bracket_of_constants_vanishes() {
        let f = f5();
        let mut one4 = QExpansion::constant_one(Rational::from(10));
        one4.weight = (4, 4);
        let mut one6 = QExpansion::constant_one(Rational::from(10));
        one6.weight = (6, 6);
        let br = rankin_cohen(&one4, &one6, (1, 1), &f).unwrap();
        assert!(br.const_term.is_zero());
        assert_eq!(br.num_coeffs(), 0);
    }

    #[test]
    fn bracket_swap_rule_exact() {
        // [f, g]_n = (-1)^{|n|} [g, f]_n (weights swapped), exactly,
        // including non-parallel n.
        let f = f5();
        let bound = Rational::from(10);
        let mut a = QExpansion::new((4, 4), Ideal::one(), bound.clone());
        a.const_term = Coeff::from_rational(Rational::from(1));
        let mut b = QExpansion::new((6, 6), Ideal::one(), bound.clone());
        b.const_term = Coeff::from_rational(Rational::from(-2));
        for (i, rep) in enumerate_tp_orbits(&bound, &f).into_iter().enumerate() {
            a.set_coeff(rep.clone(), Coeff::from_rational(Rational::from(i as i64 + 1)), &f)
                .unwrap();
            b.set_coeff(rep, Coeff::from_rational(Rational::from(2 * i as i64 - 3)), &f)
                .unwrap();
        }
        for n in [(1i64, 1i64), (2, 1), (1, 0), (2, 2)] {
            let fg = rankin_cohen(&a, &b, n, &f).unwrap();
            let gf = rankin_cohen(&b, &a, n, &f).unwrap();
            let sign = if (n.0 + n.1) % 2 == 0 { 1 } else { -1 };
            for (rep, c) in fg.reps() {
                let other = gf.coeff_at_rep(rep);
                let expect = other.scale(&Rational::from(sign), &f);
                match (c, expect) {
                    (Coeff::Exact(x), Coeff::Exact(y)) => {
                        assert_eq!(*x, y, "swap rule at {rep}, n = {n:?}")
                    }
                    _ => panic!("expected exact"),
                }
            }
        }
    }

    #[test]
    fn bracket_bilinear_exact() {
        let f = f5();
        let bound = Rational::from(8);
        let reps = enumerate_tp_orbits(&bound, &f);
        let mk = |scale: i64, konst: i64| {
            let mut q = QExpansion::new((4, 4), Ideal::one(), bound.clone());
            q.const_term = Coeff::from_rational(Rational::from(konst));
            for (i, rep) in reps.iter().enumerate() {
                q.set_coeff(
                    rep.clone(),
                    Coeff::from_rational(Rational::from(scale * (i as i64 + 1))),
                    &f,
                )
                .unwrap();
            }
            q
        };
        let f1 = mk(1, 2);
        let f2 = mk(-3, 1);
        let g = mk(2, 0);
        let alpha = Rational::from((5, 3));
        let combo = f1
            .scale_coeff(&Coeff::from_rational(alpha.clone()), &f)
            .add_expansion(&f2, &f)
            .unwrap();
        let lhs = rankin_cohen(&combo, &g, (1, 1), &f).unwrap();
        let r1 = rankin_cohen(&f1, &g, (1, 1), &f).unwrap();
        let r2 = rankin_cohen(&f2, &g, (1, 1), &f).unwrap();
        let rhs = r1
            .scale_coeff(&Coeff::from_rational(alpha), &f)
            .add_expansion(&r2, &f)
            .unwrap();
        for (rep, c) in lhs.reps() {
            match (c, rhs.coeff_at_rep(rep)) {
                (Coeff::Exact(x), Coeff::Exact(y)) => assert_eq!(*x, y, "at {rep}"),
                _ => panic!("expected exact"),
            }
        }
    }

    #[test]
    fn modularity_identity_and_translation() {
        let f = f5();
        let prec = 128;
        let mut q = QExpansion::new((6, 6), Ideal::one(), Rational::from(10));
        q.set_coeff(FieldElem::one(), Coeff::one(), &f).unwrap();
        q.set_coeff(
            FieldElem::from_ints(2, 0),
            Coeff::from_rational(Rational::from(7)),
            &f,
        )
        .unwrap();
        let z = (
            Complex::with_val(prec, (0.1, 1.2)),
            Complex::with_val(prec, (-0.2, 0.9)),
        );
        let id = [
            FieldElem::one(),
            FieldElem::zero(),
            FieldElem::zero(),
            FieldElem::one(),
        ];
        let (defect, _) = modularity_defect(&q, &id, &z, &f, prec).unwrap();
        assert!(defect < 1e-30, "identity defect {defect}");

        // Translation by beta in the inverse different.
        let beta = FieldElem::one().div(f.diff_gen(), &f).unwrap();
        let t = translation_matrix(&beta);
        let (defect, tail) = modularity_defect(&q, &t, &z, &f, prec).unwrap();
        assert!(
            defect < Float::with_val(prec, 1e-25) + tail,
            "translation defect {defect}"
        );

        // Determinant 2 is not a unit.
        let bad = [
            FieldElem::one(),
            FieldElem::one(),
            FieldElem::zero(),
            FieldElem::from_ints(2, 0),
        ];
        assert!(matches!(
            modularity_defect(&q, &bad, &z, &f, prec),
            Err(Error::NotInGroup(_))
        ));
    }

    #[test]
    fn completion_and_random_group_elements() {
        let f = f5();
        for seed in [(1, 0, 3, 1), (0, 1, 2, -1), (1, 1, -4, 3)] {
            let gamma = random_group_element(&Ideal::one(), seed, &f).unwrap();
            check_in_group(&gamma, &Ideal::one(), &f).unwrap();
            let det = gamma[0].mul(&gamma[3], &f).sub(&gamma[1].mul(&gamma[2], &f));
            assert_eq!(det, FieldElem::one());
            assert!(!gamma[2].is_zero());
        }
    }

    #[test]
    fn non_parallel_bracket_unit_relation() {
        // Coefficients of a non-parallel-weight bracket obey
        // a(eps v) = eps^{k/2} a(v): coeff_at_lattice (unit relation) agrees
        // with a direct splitting-formula evaluation at the translate.
        let f = f5();
        let bound = Rational::from(26);
        let reps = enumerate_tp_orbits(&bound, &f);
        let mut a = QExpansion::new((4, 4), Ideal::one(), bound.clone());
        a.const_term = Coeff::from_rational(Rational::from(1));
        let mut b = QExpansion::new((6, 6), Ideal::one(), bound.clone());
        b.const_term = Coeff::from_rational(Rational::from(2));
        for (i, rep) in reps.iter().enumerate() {
            a.set_coeff(rep.clone(), Coeff::from_rational(Rational::from(i as i64 + 1)), &f)
                .unwrap();
            b.set_coeff(rep.clone(), Coeff::from_rational(Rational::from(i as i64 - 4)), &f)
                .unwrap();
        }
        let br = rankin_cohen(&a, &b, (1, 0), &f).unwrap();
        assert_eq!(br.weight, (12, 10));
        let v = FieldElem::one();
        let eps_v = v.mul(f.tp_unit(), &f);
        let direct = direct_bracket_coeff(&a, &b, (1, 0), &eps_v, &f);
        let via_relation = br.coeff_at_lattice(&eps_v, &f).unwrap();
        match (direct, via_relation) {
            (Coeff::Exact(x), Coeff::Exact(y)) => assert_eq!(x, y),
            _ => panic!("expected exact"),
        }
    }

    /// Independent direct evaluation of the bracket coefficient at an
    /// arbitrary lattice point (not orbit-reduced).
    fn direct_bracket_coeff(
        fq: &QExpansion,
        gq: &QExpansion,
        n: (i64, i64),
        target: &FieldElem,
        f: &FieldContext,
    ) -> Coeff {
        let bound = target.trace(f);
        let mut splittings: Vec<(FieldElem, FieldElem)> = vec![
            (FieldElem::zero(), target.clone()),
            (target.clone(), FieldElem::zero()),
        ];
        for v1 in enumerate_tp_lattice(&bound, f) {
            let v2 = target.sub(&v1);
            if is_totally_positive(&v2, f) {
                splittings.push((v1, v2));
            }
        }
        let mut acc = Coeff::zero();
        for (v1, v2) in splittings {
            let a1 = fq.coeff_at_lattice(&v1, f).unwrap();
            let a2 = gq.coeff_at_lattice(&v2, f).unwrap();
            if a1.is_zero() || a2.is_zero() {
                continue;
            }
            let pair = a1.mul(&a2, f);
            let v1c = v1.conj(f);
            let v2c = v2.conj(f);
            for l1 in 0..=n.0 {
                for l2 in 0..=n.1 {
                    if v1.is_zero() && (l1, l2) != (0, 0) {
                        continue;
                    }
                    if v2.is_zero() && (l1, l2) != n {
                        continue;
                    }
                    let b1 = Integer::binomial_u((fq.weight.0 + n.0 - 1) as u32, (n.0 - l1) as u32)
                        .complete();
                    let b2 = Integer::binomial_u((fq.weight.1 + n.1 - 1) as u32, (n.1 - l2) as u32)
                        .complete();
                    let b3 = Integer::binomial_u((gq.weight.0 + n.0 - 1) as u32, l1 as u32)
                        .complete();
                    let b4 = Integer::binomial_u((gq.weight.1 + n.1 - 1) as u32, l2 as u32)
                        .complete();
                    let mut scalar = Rational::from(b1 * b2 * b3 * b4);
                    if (l1 + l2) % 2 == 1 {
                        scalar = -scalar;
                    }
                    let w1 = v1.pow(l1, f).unwrap().mul(&v1c.pow(l2, f).unwrap(), f);
                    let w2 = v2
                        .pow(n.0 - l1, f)
                        .unwrap()
                        .mul(&v2c.pow(n.1 - l2, f).unwrap(), f);
                    let term = pair.mul_elem(&w1, f).mul_elem(&w2, f).scale(&scalar, f);
                    acc = acc.add(&term, f);
                }
            }
        }
        acc
    }
}
