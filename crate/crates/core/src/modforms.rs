//! Concrete modular objects: Eisenstein series in both normalizations,
//! Bessel and Kloosterman kernels, Poincare coefficients via the explicit
//! formula, direct coset-sum Poincare evaluation (the independent route),
//! and the seed machinery for brackets of Poincare series.
//!
//! Two routes to the same Poincare series coexist on purpose: the explicit
//! Kloosterman/Bessel coefficient formula and the raw average over
//! `Gamma_infty \ Gamma`. Their agreement is the calibration invariant that
//! pins the Kloosterman normalization; the calibration report carries any
//! constant twist it detects.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use dashmap::DashMap;
use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Complex, Float, Rational};
use serde::Serialize;

use crate::error::Error;
use crate::ideals::{
    ideal_from_gen, sigma_r, tp_generator, unit_residues_with_inverses, Ideal,
};
use crate::numeric::{self, e_complex, e_rational};
use crate::qexp::{complete_matrix, mobius_apply, qexp_eval, Coeff, QExpansion};
use crate::quadfield::{
    enumerate_tp_orbits, is_totally_positive, tp_orbit_rep, unit_window_rep, FieldContext,
    FieldElem,
};
use crate::Result;

/// Controls for the Kloosterman/Bessel coefficient sums.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationPolicy {
    /// Bound on |N(c)| in the c-sum.
    pub cmax: i64,
    /// Half-width of the unit-power window in the epsilon-sum.
    pub eps_window: i64,
    /// Working precision in bits.
    pub prec: u32,
    /// Stop threshold for the convergence monitor.
    pub tol: f64,
}

impl TruncationPolicy {
    pub fn new(cmax: i64, eps_window: i64, prec: u32, tol: f64) -> Self {
        TruncationPolicy {
            cmax,
            eps_window,
            prec,
            tol,
        }
    }

    pub fn default_for(f: &FieldContext) -> Self {
        TruncationPolicy::new(200 * f.disc(), 3, 192, 1e-9)
    }

    pub fn validate(&self, f: &FieldContext) -> Result<()> {
        if self.cmax < f.disc() {
            return Err(Error::DomainError(format!(
                "cmax = {} is below N(delta) = {}",
                self.cmax,
                f.disc()
            )));
        }
        if self.eps_window < 0 || self.tol <= 0.0 {
            return Err(Error::DomainError("eps_window >= 0 and tol > 0 required".into()));
        }
        Ok(())
    }
}

/// A coset representative datum for `Gamma_infty \ Gamma`: the bottom row
/// `(c, d)` with its determinant-1 completion.
#[derive(Debug, Clone)]
pub struct CosetRep {
    pub c: FieldElem,
    pub d: FieldElem,
    pub a: FieldElem,
    pub b: FieldElem,
}

/// Eisenstein series of even parallel weight `k >= 4` at level `(n)`.
///
/// Un-normalized: constant term `zeta_F(k)` (numeric) and coefficient
/// `K_k * sigma_{k-1}((b))` at `v = n b`, where
/// `K_k = (2 pi)^{2k} / (Gamma(k)^2 sqrt(D) N(d)^k)`.
/// Normalized: exact coefficients `sigma_{k-1}((b))` and numeric constant
/// `zeta_F(k) / K_k`; the two differ by the scalar `K_k` exactly.
pub fn eisenstein_qexp(
    k: i64,
    level: &Ideal,
    trace_bound: &Rational,
    normalized: bool,
    f: &FieldContext,
    prec: u32,
) -> Result<QExpansion> {
    if k < 4 || k % 2 != 0 {
        return Err(Error::BadWeight(format!("Eisenstein weight must be even >= 4, got {k}")));
    }
    let n_gen = tp_generator(level, f).map_err(|_| {
        Error::BadLevel("level must be principal with totally positive generator".into())
    })?;
    let mut q = QExpansion::new((k, k), level.clone(), trace_bound.clone());
    let kk = eisenstein_scalar(k, f, prec);
    let zf = numeric::zeta_f(&Float::with_val(prec, k), f.disc(), prec)?;
    q.const_term = if normalized {
        Coeff::Num(Complex::with_val(prec, (Float::with_val(prec, &zf / &kk), Float::new(prec))))
    } else {
        Coeff::Num(Complex::with_val(prec, (zf, Float::new(prec))))
    };
    for rep in enumerate_tp_orbits(trace_bound, f) {
        // Support is n * O^+: the index must be divisible by the level
        // generator with totally positive quotient.
        let b = rep.div(&n_gen, f)?;
        if !b.is_integral() || !is_totally_positive(&b, f) {
            continue;
        }
        let sig = sigma_r(&ideal_from_gen(&b, f)?, k - 1, f);
        let coeff = if normalized {
            Coeff::from_rational(sig)
        } else {
            Coeff::Num(Complex::with_val(
                prec,
                (Float::with_val(prec, &kk * &Float::with_val(prec, &sig)), Float::new(prec)),
            ))
        };
        q.set_coeff(rep, coeff, f)?;
    }
    Ok(q)
}

/// `K_k = (2 pi)^{2k} / (Gamma(k)^2 sqrt(D) N(d)^k)`; `e^{pi i d k / 2} = 1`
/// for even k.
pub fn eisenstein_scalar(k: i64, f: &FieldContext, prec: u32) -> Float {
    let two_pi = numeric::two_pi(prec);
    let num = two_pi.pow((2 * k) as i32);
    let gamma_k = numeric::factorial((k - 1) as u32, prec);
    let den = gamma_k.square() * f.sqrt_disc(prec) * Float::with_val(prec, f.disc()).pow(k as i32);
    num / den
}

static BESSEL_CACHE: OnceLock<DashMap<(u32, u32, String), Float>> = OnceLock::new();

/// Bessel `J_order(x)` by the ascending series, with working precision
/// `prec + 1.5 x` bits to absorb the cancellation; absolute error below
/// `2^-prec`. Arguments above `x_cap` are refused so callers shrink their
/// truncations instead of silently degrading.
pub fn bessel_j(order: u32, x: &Float, prec: u32, x_cap: f64) -> Result<Float> {
    let xf = x.to_f64();
    if !(0.0..=x_cap).contains(&xf) {
        return Err(Error::ArgumentTooLarge(xf, x_cap));
    }
    let cache = BESSEL_CACHE.get_or_init(DashMap::new);
    let key = (order, prec, x.to_string_radix(16, None));
    if let Some(v) = cache.get(&key) {
        return Ok(v.clone());
    }
    let wp = prec + (1.5 * xf).ceil() as u32 + 48;
    let half = Float::with_val(wp, x) / 2u32;
    let half_sq = half.clone().square();
    // term_0 = (x/2)^order / order!
    let mut term = half.pow(order as i32) / numeric::factorial(order, wp);
    let mut sum = term.clone();
    let tiny = numeric::ulp(wp - 8, wp);
    let mut j = 0u32;
    loop {
        j += 1;
        term *= &half_sq;
        term = -term;
        term /= Float::with_val(wp, j) * Float::with_val(wp, j + order);
        sum += &term;
        if term.clone().abs() < tiny && (j as f64) > xf / 2.0 {
            break;
        }
        if j > 10_000 {
            return Err(Error::DomainError("bessel series failed to converge".into()));
        }
    }
    let out = Float::with_val(prec, sum);
    cache.insert(key, out.clone());
    Ok(out)
}

static KLOOSTERMAN_CACHE: OnceLock<DashMap<String, (Float, Float)>> = OnceLock::new();

/// Kloosterman sum
/// `S(nu, mu; c) = sum over units x of O/(c/delta) of e(Tr((nu x + mu x*)/c))`
/// with `x* = x^{-1} mod (c/delta)`. The representative `c` is normalized to
/// its canonical unit-window form first, so the value depends on `c` only
/// through that representative. Returns `(Re S, |Im S|)`; the imaginary part
/// must vanish to rounding.
pub fn kloosterman_sum(
    nu: &FieldElem,
    mu: &FieldElem,
    c: &FieldElem,
    f: &FieldContext,
    prec: u32,
) -> Result<(Float, Float)> {
    if c.is_zero() {
        return Err(Error::ZeroModulus);
    }
    let c = unit_window_rep(c, f)?;
    let key = format!("{}|{}|{}|{}|{}", f.m(), nu, mu, c, prec);
    let cache = KLOOSTERMAN_CACHE.get_or_init(DashMap::new);
    if let Some(v) = cache.get(&key) {
        return Ok(v.clone());
    }
    let modulus = c.div(f.diff_gen(), f)?;
    if !modulus.is_integral() {
        return Err(Error::DomainError(format!("c = {c} is not in the different")));
    }
    let value = if f.is_unit(&modulus) {
        (Float::with_val(prec, 1), Float::with_val(prec, 0))
    } else {
        let q_ideal = ideal_from_gen(&modulus, f)?;
        let table = residue_table(&q_ideal, f)?;
        let mut acc = Complex::with_val(prec + 16, (0, 0));
        for (x, xinv) in table.iter() {
            let arg = nu.mul(x, f).add(&mu.mul(xinv, f)).div(&c, f)?;
            let t = arg.trace(f);
            acc += e_rational(&t, prec + 16);
        }
        (
            Float::with_val(prec, acc.real()),
            Float::with_val(prec, acc.imag().clone().abs()),
        )
    };
    cache.insert(key, value.clone());
    Ok(value)
}

static RESIDUE_CACHE: OnceLock<DashMap<String, std::sync::Arc<Vec<(FieldElem, FieldElem)>>>> =
    OnceLock::new();

fn residue_table(
    q: &Ideal,
    f: &FieldContext,
) -> Result<std::sync::Arc<Vec<(FieldElem, FieldElem)>>> {
    let key = format!("{}|{}", f.m(), q);
    let cache = RESIDUE_CACHE.get_or_init(DashMap::new);
    if let Some(v) = cache.get(&key) {
        return Ok(v.clone());
    }
    let table = std::sync::Arc::new(unit_residues_with_inverses(q, f)?);
    cache.insert(key, table.clone());
    Ok(table)
}

/// Convergence trace for the coefficient formula.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub stages: Vec<ConvergenceStage>,
    pub last_increment: f64,
    pub converged: bool,
    pub max_im_sanity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStage {
    pub cmax: i64,
    pub eps_window: i64,
    pub value: f64,
}

static WINDOW_REP_CACHE: OnceLock<DashMap<(i64, i64), std::sync::Arc<Vec<FieldElem>>>> =
    OnceLock::new();

/// Unit-window representatives `o` of `O* / O^x` with `|N(o)| <= bound`,
/// sorted deterministically and cached per field.
pub fn enumerate_unit_window_reps(bound: i64, f: &FieldContext) -> std::sync::Arc<Vec<FieldElem>> {
    let cache = WINDOW_REP_CACHE.get_or_init(DashMap::new);
    if let Some(v) = cache.get(&(f.m(), bound)) {
        return v.clone();
    }
    let out = std::sync::Arc::new(enumerate_unit_window_reps_uncached(bound, f));
    cache.insert((f.m(), bound), out.clone());
    out
}

fn enumerate_unit_window_reps_uncached(bound: i64, f: &FieldContext) -> Vec<FieldElem> {
    if bound < 1 {
        return Vec::new();
    }
    let rho = {
        let (e1, _) = f.tp_unit().embed(f, 64);
        e1.to_f64().sqrt() // sigma_1(eps0)
    };
    let b = bound as f64;
    let s1_max = rho * b.sqrt() * 1.01 + 1.0;
    let s2_max = b.sqrt() * 1.01 + 1.0;
    let sqrt_d = (f.disc() as f64).sqrt();
    let y_cap = ((s1_max + s2_max) / sqrt_d).ceil() as i64 + 1;
    let (w1, w2) = if f.m() % 4 == 1 {
        (
            (1.0 + (f.m() as f64).sqrt()) / 2.0,
            (1.0 - (f.m() as f64).sqrt()) / 2.0,
        )
    } else {
        ((f.m() as f64).sqrt(), -(f.m() as f64).sqrt())
    };
    let mut out: Vec<(Rational, FieldElem)> = Vec::new();
    for y in -y_cap..=y_cap {
        let centers = [-(y as f64) * w1, -(y as f64) * w2];
        let lo = (centers[0].min(centers[1]) - s1_max).floor() as i64;
        let hi = (centers[0].max(centers[1]) + s1_max).ceil() as i64;
        for x in lo..=hi {
            let o = FieldElem::from_ints(x, y);
            if o.is_zero() {
                continue;
            }
            let n = o.norm(f).abs();
            if n > bound {
                continue;
            }
            match unit_window_rep(&o, f) {
                Ok(rep) if rep == o => out.push((n, o)),
                _ => {}
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    out.into_iter().map(|(_, o)| o).collect()
}

/// Fourier coefficient `c_k(nu, mu)` of the Poincare series `P_mu(z; k, O, n)`
/// by the explicit formula:
/// `chi_mu(nu) + (N(nu)/N(mu))^{(k-1)/2} (2 pi)^2 N(nd)/sqrt(D)
///  sum_eps sum_c S(nu, eps mu; c)/|N(c)| J_{k-1}(x_1) J_{k-1}(x_2)`
/// with `x_i = 4 pi sqrt(nu_i eps_i mu_i) / |c_i|`. The epsilon window and
/// c-bound escalate until the increment drops below the policy tolerance.
pub fn poincare_coeff(
    nu: &FieldElem,
    mu: &FieldElem,
    k: i64,
    level: &Ideal,
    policy: &TruncationPolicy,
    f: &FieldContext,
) -> Result<(Float, ConvergenceReport)> {
    if k < 4 || k % 2 != 0 {
        return Err(Error::BadWeight(format!("Poincare weight must be even >= 4, got {k}")));
    }
    policy.validate(f)?;
    if !is_totally_positive(nu, f) || !is_totally_positive(mu, f) {
        return Err(Error::NotTotallyPositive(format!("{nu} or {mu}")));
    }
    let prec = policy.prec;
    let chi = if tp_orbit_rep(nu, f)?.0 == tp_orbit_rep(mu, f)?.0 {
        Float::with_val(prec, 1)
    } else {
        Float::with_val(prec, 0)
    };

    let mut stages = Vec::new();
    let mut max_im: f64 = 0.0;
    let mut prev: Option<Float> = None;
    let mut last_increment = f64::INFINITY;
    let mut converged = false;
    let mut final_value = chi.clone();

    // Every stage widens the epsilon window (the dominant error source), so
    // a small increment really witnesses the tail; tol is relative to the
    // value's magnitude, floored at 1.
    let w0 = policy.eps_window;
    let schedule: Vec<(i64, i64)> = vec![
        (policy.cmax / 2, (w0 - 1).max(1)),
        (policy.cmax, w0),
        (policy.cmax * 2, w0 + 1),
        (policy.cmax * 2, w0 + 2),
        (policy.cmax * 4, w0 + 3),
        (policy.cmax * 4, w0 + 4),
        (policy.cmax * 4, w0 + 5),
        (policy.cmax * 4, w0 + 6),
    ];
    for (idx, (cmax, window)) in schedule.into_iter().enumerate() {
        if cmax < f.disc() {
            continue;
        }
        let (sum, im) = poincare_tail_sum(nu, mu, k, level, cmax, window, policy.tol, f, prec)?;
        max_im = max_im.max(im);
        let value = Float::with_val(prec, &chi + &sum);
        stages.push(ConvergenceStage {
            cmax,
            eps_window: window,
            value: value.to_f64(),
        });
        if let Some(p) = prev {
            last_increment = Float::with_val(prec, &value - &p).abs().to_f64();
            let scale = value.clone().abs().to_f64().max(1.0);
            if idx >= 2 && last_increment < policy.tol * scale {
                converged = true;
                final_value = value;
                break;
            }
        }
        final_value = value.clone();
        prev = Some(value);
    }
    let report = ConvergenceReport {
        stages,
        last_increment,
        converged,
        max_im_sanity: max_im,
    };
    if !converged {
        return Err(Error::NotConverged {
            last_increment,
            tol: policy.tol,
            cmax: policy.cmax * 4,
            eps_window: policy.eps_window + 2,
        });
    }
    Ok((final_value, report))
}

/// Cheap upper bound on |J_k(x)|: `min(1, 0.8 x^{-1/3}, (x/2)^k / k!)`.
fn bessel_bound(k: i64, x: f64) -> f64 {
    let mut b = 1.0f64;
    if x > 1.0 {
        b = b.min(0.8 / x.powf(1.0 / 3.0));
    }
    // (x/2)^k / k! in logs to avoid overflow.
    let lg = (k as f64) * (x / 2.0).ln() - (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    if lg < 0.0 {
        b = b.min(lg.exp());
    }
    b
}

/// The epsilon- and c-double sum of the coefficient formula (everything but
/// the chi term). Terms whose a-priori bound is far below `tol` are skipped
/// before any Bessel evaluation.
#[allow(clippy::too_many_arguments)]
fn poincare_tail_sum(
    nu: &FieldElem,
    mu: &FieldElem,
    k: i64,
    level: &Ideal,
    cmax: i64,
    eps_window: i64,
    tol: f64,
    f: &FieldContext,
    prec: u32,
) -> Result<(Float, f64)> {
    let n_gen = tp_generator(level, f)?;
    let level_norm = level.norm_i64();
    let o_bound = cmax / (f.disc() * level_norm);
    let base = f.diff_gen().mul(&n_gen, f);
    let reps = enumerate_unit_window_reps(o_bound, f);

    let four_pi = 2u32 * numeric::two_pi(prec);
    let (nu1, nu2) = nu.embed(f, prec);
    let (mu1, mu2) = mu.embed(f, prec);
    // Skipping budget: at most ~1e4 candidate (c, eps) pairs, so the summed
    // skip error stays below tol relative to the coefficient's natural
    // N(nu)^{(k-1)/2} scale (the same scale the convergence gate uses).
    // Inner kernels (Bessel factors, Kloosterman character sums) only need
    // accuracy well below tol; the chi term and the final assembly stay at
    // full precision.
    let kernel_prec = ((-tol.log2()).ceil() as u32 + 48).clamp(96, prec);
    let prefac_f64 = 39.48 * (f.disc() * level_norm) as f64 / (f.disc() as f64).sqrt();
    let ratio_pow = (nu.norm(f).to_f64() / mu.norm(f).to_f64()).powf((k - 1) as f64 / 2.0);
    let skip_below = tol * 1e-4 * ratio_pow.max(1.0);

    let terms: Vec<Result<(Float, f64)>> = reps
        .par_iter()
        .map(|o| -> Result<(Float, f64)> {
            let c = unit_window_rep(&base.mul(o, f), f)?;
            let (c1, c2) = c.embed(f, prec);
            let abs_nc = Float::with_val(prec, c.norm(f).abs());
            let abs_nc_f = abs_nc.to_f64();
            let mut local = Float::with_val(prec, 0);
            let mut local_im: f64 = 0.0;
            for j in -eps_window..=eps_window {
                let eps = f.tp_unit().pow(j, f)?;
                let (e1, e2) = eps.embed(f, prec);
                let prod1 = Float::with_val(prec, &nu1 * &e1) * &mu1;
                let prod2 = Float::with_val(prec, &nu2 * &e2) * &mu2;
                let x1 = Float::with_val(prec, &four_pi * &prod1.sqrt()) / c1.clone().abs();
                let x2 = Float::with_val(prec, &four_pi * &prod2.sqrt()) / c2.clone().abs();
                // Unit-group size of O/(c/delta) bounds |S|.
                let units_bound = abs_nc_f / (f.disc() * level_norm) as f64;
                let apriori = bessel_bound(k - 1, x1.to_f64())
                    * bessel_bound(k - 1, x2.to_f64())
                    * units_bound
                    / abs_nc_f
                    * prefac_f64
                    * ratio_pow;
                if apriori < skip_below {
                    continue;
                }
                let eps_mu = eps.mul(mu, f);
                let (s, im) = kloosterman_sum(nu, &eps_mu, &c, f, kernel_prec)?;
                local_im = local_im.max(im.to_f64());
                if s.is_zero() {
                    continue;
                }
                let xk1 = Float::with_val(kernel_prec, &x1);
                let xk2 = Float::with_val(kernel_prec, &x2);
                let j1 = bessel_j((k - 1) as u32, &xk1, kernel_prec, 2048.0)?;
                let j2 = bessel_j((k - 1) as u32, &xk2, kernel_prec, 2048.0)?;
                local += Float::with_val(prec, &s / &Float::with_val(kernel_prec, &abs_nc)) * j1 * j2;
            }
            Ok((local, local_im))
        })
        .collect();

    let mut sum = Float::with_val(prec, 0);
    let mut max_im: f64 = 0.0;
    for t in terms {
        let (v, im) = t?;
        sum += v;
        max_im = max_im.max(im);
    }

    // (N(nu)/N(mu))^{(k-1)/2} * (2 pi)^2 * N(n) * N(d) / sqrt(D); the class
    // ideal is O so N(cd) = N(d) = D, and the level norm scales N(nd).
    let ratio = Float::with_val(prec, Rational::from(nu.norm(f) / mu.norm(f)));
    let power = ratio.pow(Float::with_val(prec, Rational::from(((k - 1), 2))));
    let prefactor = numeric::two_pi(prec).square()
        * Float::with_val(prec, f.disc() * level_norm)
        / f.sqrt_disc(prec);
    Ok((sum * power * prefactor, max_im))
}

/// Assemble the truncated q-expansion of `P_mu(z; k, O, level)` from the
/// coefficient formula, over orbit representatives with trace at most
/// `trace_bound`.
pub fn pmu_qexpansion(
    mu: &FieldElem,
    k: i64,
    level: &Ideal,
    trace_bound: &Rational,
    policy: &TruncationPolicy,
    f: &FieldContext,
) -> Result<QExpansion> {
    let reps = enumerate_tp_orbits(trace_bound, f);
    let coeffs: Vec<Result<(FieldElem, Float)>> = reps
        .into_par_iter()
        .map(|rep| -> Result<(FieldElem, Float)> {
            let (v, _) = poincare_coeff(&rep, mu, k, level, policy, f)?;
            Ok((rep, v))
        })
        .collect();
    let mut q = QExpansion::new((k, k), level.clone(), trace_bound.clone());
    for item in coeffs {
        let (rep, v) = item?;
        q.set_coeff(
            rep,
            Coeff::Num(Complex::with_val(policy.prec, (v, Float::new(policy.prec)))),
            f,
        )?;
    }
    Ok(q)
}

/// Seed of a Poincare series.
#[derive(Debug, Clone)]
pub enum SeedSpec {
    /// Constant seed 1 (Eisenstein).
    One,
    /// `P_mu` seed: the unit-orbit sum of `e(eps mu z)` is generated
    /// internally.
    PMu(FieldElem),
    /// A finite q-series with complex coefficients at totally positive
    /// lattice indices (already including any unit translates).
    QSeries(Vec<(FieldElem, Complex)>),
}

/// Cutoffs for the direct coset-sum evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct DirectCutoffs {
    /// Bound on |N(c)|.
    pub cmax: i64,
    /// Half-width of the d-box in embedding units.
    pub d_box: i64,
    /// Hard cap on the unit-translate walk inside seed evaluation.
    pub trans_cutoff: i64,
}

impl DirectCutoffs {
    pub fn default_for(f: &FieldContext) -> Self {
        DirectCutoffs {
            cmax: 60 * f.disc(),
            d_box: 12,
            trans_cutoff: 32,
        }
    }
}

fn seed_eval(
    seed: &SeedSpec,
    w: &(Complex, Complex),
    trans_cutoff: i64,
    f: &FieldContext,
    prec: u32,
) -> Result<Complex> {
    match seed {
        SeedSpec::One => Ok(Complex::with_val(prec, 1)),
        SeedSpec::PMu(mu) => {
            // sum over eps+^j mu with (eps/..)^{k/2} = 1 for parallel weight.
            let tiny = numeric::ulp(prec - 8, prec);
            let mut acc = Complex::with_val(prec, 0);
            for dir in [1i64, -1] {
                let mut j = if dir == 1 { 0 } else { -1 };
                let mut last_mag: Option<Float> = None;
                loop {
                    let tau = mu.mul(&f.tp_unit().pow(j, f)?, f);
                    let (s1, s2) = tau.embed(f, prec);
                    let arg = Complex::with_val(prec, &w.0 * &s1) + Complex::with_val(prec, &w.1 * &s2);
                    let term = e_complex(&arg, prec);
                    let mag = term.clone().abs().real().clone();
                    acc += term;
                    let past_peak = last_mag.map(|m| mag < m).unwrap_or(false);
                    if (mag < tiny && past_peak) || j.unsigned_abs() >= trans_cutoff as u64 {
                        break;
                    }
                    last_mag = Some(mag);
                    j += dir;
                }
            }
            Ok(acc)
        }
        SeedSpec::QSeries(terms) => {
            let mut acc = Complex::with_val(prec, 0);
            for (idx, coeff) in terms {
                let (s1, s2) = idx.embed(f, prec);
                let arg = Complex::with_val(prec, &w.0 * &s1) + Complex::with_val(prec, &w.1 * &s2);
                acc += Complex::with_val(prec, coeff * &e_complex(&arg, prec));
            }
            Ok(acc)
        }
    }
}

fn seed_sup_bound(seed: &SeedSpec, trans_cutoff: i64, prec: u32) -> Float {
    match seed {
        SeedSpec::One => Float::with_val(prec, 1),
        SeedSpec::PMu(_) => Float::with_val(prec, 2 * trans_cutoff + 2),
        SeedSpec::QSeries(terms) => {
            let mut acc = Float::with_val(prec, 0);
            for (_, c) in terms {
                acc += c.clone().abs().real();
            }
            acc
        }
    }
}

/// Direct evaluation of the Poincare series
/// `sum over cosets of det^{k/2} N(cz+d)^{-k} seed(gamma z)` at parallel
/// weight `k`. Completions are via the extended gcd with determinant 1.
/// Returns the value and a heuristic estimate of the dropped c/d tails.
pub fn poincare_eval_direct(
    seed: &SeedSpec,
    k: i64,
    z: &(Complex, Complex),
    cutoffs: &DirectCutoffs,
    level: &Ideal,
    f: &FieldContext,
    prec: u32,
) -> Result<(Complex, Float)> {
    if k < 4 || k % 2 != 0 {
        return Err(Error::BadWeight(format!("parallel weight must be even >= 4, got {k}")));
    }
    let wp = prec + 16;
    let y1 = Float::with_val(wp, z.0.imag());
    let y2 = Float::with_val(wp, z.1.imag());
    if !(y1.is_sign_positive() && !y1.is_zero() && y2.is_sign_positive() && !y2.is_zero()) {
        return Err(Error::NotUpperHalfPlane);
    }

    // Identity coset.
    let mut acc = seed_eval(seed, z, cutoffs.trans_cutoff, f, wp)?;
    let mut estimate = Float::with_val(wp, 0);

    let n_gen = tp_generator(level, f)?;
    let base = f.diff_gen().mul(&n_gen, f);
    let o_bound = cutoffs.cmax / (f.disc() * level.norm_i64());
    let sup_seed = seed_sup_bound(seed, cutoffs.trans_cutoff, wp);

    let c_list = enumerate_unit_window_reps(o_bound, f);
    let results: Vec<Result<(Complex, Float)>> = c_list
        .par_iter()
        .map(|o| -> Result<(Complex, Float)> {
            let c = base.mul(o, f);
            coset_row_sum(seed, &c, k, z, cutoffs, f, wp, &sup_seed)
        })
        .collect();
    for r in results {
        let (v, e) = r?;
        acc += v;
        estimate += e;
    }
    Ok((Complex::with_val(prec, acc), Float::with_val(prec, estimate)))
}

/// Sum over `d` of one `c`-row, with the d-box tail estimate.
#[allow(clippy::too_many_arguments)]
fn coset_row_sum(
    seed: &SeedSpec,
    c: &FieldElem,
    k: i64,
    z: &(Complex, Complex),
    cutoffs: &DirectCutoffs,
    f: &FieldContext,
    wp: u32,
    sup_seed: &Float,
) -> Result<(Complex, Float)> {
    let (c1, c2) = c.embed(f, wp);
    let c_over_delta = c.div(f.diff_gen(), f)?;
    // Box centers: sigma_i(d) near -Re(sigma_i(c) z_i).
    let e1 = Float::with_val(wp, &c1 * z.0.real()).to_f64();
    let e2 = Float::with_val(wp, &c2 * z.1.real()).to_f64();
    let l = cutoffs.d_box as f64;
    let sqrt_d = (f.disc() as f64).sqrt();
    let w1f = if f.m() % 4 == 1 {
        (1.0 + (f.m() as f64).sqrt()) / 2.0
    } else {
        (f.m() as f64).sqrt()
    };
    let y_lo = ((-e1 - l) - (-e2 + l)) / sqrt_d;
    let y_hi = ((-e1 + l) - (-e2 - l)) / sqrt_d;
    let mut acc = Complex::with_val(wp, 0);
    for y in (y_lo.floor() as i64 - 1)..=(y_hi.ceil() as i64 + 1) {
        // sigma_1(d) = x + y w1 in [-e1 - L, -e1 + L]
        let lo = (-e1 - l - y as f64 * w1f).floor() as i64 - 1;
        let hi = (-e1 + l - y as f64 * w1f).ceil() as i64 + 1;
        for x in lo..=hi {
            let d = FieldElem::from_ints(x, y);
            let (d1, d2) = d.embed(f, wp);
            // Enforce the box in both embeddings.
            if (d2.to_f64() + e2).abs() > l + 1.0 || (d1.to_f64() + e1).abs() > l + 1.0 {
                continue;
            }
            // Completability: gcd(d, c/delta) must be a unit.
            if d.is_zero() {
                if !f.is_unit(&c_over_delta) {
                    continue;
                }
            } else {
                let (g, _, _) = crate::quadfield::ext_gcd(&d, &c_over_delta, f)?;
                if !f.is_unit(&g) {
                    continue;
                }
            }
            let gamma = complete_matrix(c, &d, f)?;
            let gz = mobius_apply(&gamma, z, f, wp);
            let den1 = Complex::with_val(wp, &z.0 * &c1) + &d1;
            let den2 = Complex::with_val(wp, &z.1 * &c2) + &d2;
            let aut = Complex::with_val(wp, den1.pow(-(k as i32)))
                * Complex::with_val(wp, den2.pow(-(k as i32)));
            let sv = seed_eval(seed, &gz, cutoffs.trans_cutoff, f, wp)?;
            acc += Complex::with_val(wp, &aut * &sv);
        }
    }
    // Tail estimate outside the box: |c_i z_i + d_i| >= max(|u_i + e_i|,
    // |sigma_i(c)| y_i); shells of radius r >= L contribute at most
    // count(r) * sup_seed * r^{-k} * min_i(|c_i| y_i)^{-k} ... using the
    // larger coordinate for the r^{-k} factor and the imaginary floor for
    // the other.
    let y1 = Float::with_val(wp, z.0.imag());
    let y2 = Float::with_val(wp, z.1.imag());
    let floor1 = Float::with_val(wp, &c1.clone().abs() * &y1);
    let floor2 = Float::with_val(wp, &c2.clone().abs() * &y2);
    let min_floor = floor1.min(&floor2);
    let mut tail = Float::with_val(wp, 0);
    let mut r = cutoffs.d_box;
    loop {
        let count = 4.0 * (2.0 * r as f64 + 2.0) / sqrt_d + 4.0;
        let rad = Float::with_val(wp, r);
        let term = Float::with_val(wp, count)
            * sup_seed
            * rad.pow(-(k as i32))
            * min_floor.clone().pow(-(k as i32));
        tail += &term;
        if term < numeric::ulp(wp - 8, wp) || r > cutoffs.d_box * 64 {
            break;
        }
        r += 1;
    }
    Ok((acc, tail))
}

/// Empirical growth report: `max |a_v| / N(v)^{k/2 - 2 - eps}` over the
/// support (a witness, not a proof).
pub fn seed_growth_report(
    phi: &[(FieldElem, Complex)],
    k: i64,
    eps: f64,
    f: &FieldContext,
    prec: u32,
) -> Float {
    let mut max = Float::with_val(prec, 0);
    let expo = Float::with_val(prec, k as f64 / 2.0 - 2.0 - eps);
    for (v, a) in phi {
        if v.is_zero() {
            continue;
        }
        let n = Float::with_val(prec, v.norm(f));
        let ratio = a.clone().abs().real().clone() / n.pow(expo.clone());
        if ratio > max {
            max = ratio;
        }
    }
    max
}

/// Lift a finitely supported orbit-coefficient list to the truncated
/// expansion `c_0 E_k + sum c_mu P_mu`, assembling the `P_mu` parts from the
/// coefficient formula.
pub fn seed_lift(
    const_coeff: &Complex,
    orbit_coeffs: &BTreeMap<FieldElem, Complex>,
    k: i64,
    level: &Ideal,
    trace_bound: &Rational,
    policy: &TruncationPolicy,
    f: &FieldContext,
) -> Result<QExpansion> {
    let mut total = QExpansion::new((k, k), level.clone(), trace_bound.clone());
    if !const_coeff.is_zero() {
        let e = eisenstein_qexp(k, level, trace_bound, false, f, policy.prec)?;
        total = total.add_expansion(
            &e.scale_coeff(&Coeff::Num(const_coeff.clone()), f),
            f,
        )?;
    }
    for (mu, cmu) in orbit_coeffs {
        if cmu.is_zero() {
            continue;
        }
        let pmu = pmu_qexpansion(mu, k, level, trace_bound, policy, f)?;
        total = total.add_expansion(&pmu.scale_coeff(&Coeff::Num(cmu.clone()), f), f)?;
    }
    Ok(total)
}

/// Report of the two-route Poincare calibration: the q-expansion assembled
/// from the Kloosterman/Bessel formula versus the direct coset sum, at one
/// point. `detected_twist` is the complex ratio between the routes; a value
/// far from 1 that is stable across points indicates a constant
/// normalization twist in the Kloosterman convention.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub qexp_value: (f64, f64),
    pub direct_value: (f64, f64),
    pub rel_defect: f64,
    pub detected_twist: (f64, f64),
    pub twist_stable: Option<bool>,
    pub pass: bool,
    pub tolerance: f64,
}

/// Criterion-level两-route calibration of `P_mu` at `z`, with an optional
/// second point to test twist stability.
pub fn poincare_two_route_calibration(
    mu: &FieldElem,
    k: i64,
    z: &(Complex, Complex),
    z2: Option<&(Complex, Complex)>,
    trace_bound: &Rational,
    policy: &TruncationPolicy,
    cutoffs: &DirectCutoffs,
    tolerance: f64,
    level: &Ideal,
    f: &FieldContext,
) -> Result<CalibrationReport> {
    let prec = policy.prec;
    let qx = pmu_qexpansion(mu, k, level, trace_bound, policy, f)?;
    let (route_a, _) = qexp_eval(&qx, z, f, prec)?;
    let (route_b, _) = poincare_eval_direct(&SeedSpec::PMu(mu.clone()), k, z, cutoffs, level, f, prec)?;
    let diff = Complex::with_val(prec, &route_a - &route_b).abs().real().clone();
    let scale = route_b.clone().abs().real().clone();
    let rel = (diff / scale).to_f64();
    let twist = Complex::with_val(prec, &route_a / &route_b);
    let twist_stable = match z2 {
        None => None,
        Some(zz) => {
            let (a2, _) = qexp_eval(&qx, zz, f, prec)?;
            let (b2, _) =
                poincare_eval_direct(&SeedSpec::PMu(mu.clone()), k, zz, cutoffs, level, f, prec)?;
            let t2 = Complex::with_val(prec, &a2 / &b2);
            let drift = Complex::with_val(prec, &twist - &t2).abs().real().clone().to_f64();
            Some(drift < tolerance * 10.0)
        }
    };
    Ok(CalibrationReport {
        qexp_value: (route_a.real().to_f64(), route_a.imag().to_f64()),
        direct_value: (route_b.real().to_f64(), route_b.imag().to_f64()),
        rel_defect: rel,
        detected_twist: (twist.real().to_f64(), twist.imag().to_f64()),
        twist_stable,
        pass: rel < tolerance,
        tolerance,
    })
}

/// Report for the pointwise bracket identity
/// `[f, P_mu(k2)]_n = P_{k1+k2+2n}(phi)` with
/// `phi = e(mu z) sum_l (-1)^{|l|} C(k1+n-1, n-l) C(k2+n-1, l)
///        N(2 pi i mu)^{n-l} f^{(l)}`.
#[derive(Debug, Clone, Serialize)]
pub struct Thm41Report {
    pub lhs: (f64, f64),
    pub rhs: (f64, f64),
    pub abs_defect: f64,
    pub rel_defect: f64,
    pub pass: bool,
    pub tolerance: f64,
}

/// Pointwise verification of the bracket/Poincare identity at `z`.
///
/// The seed is assembled from `f`'s lattice translates: the `l`-derivative
/// contributes `prod_j (2 pi i sigma_j(v))^{l_j}` per translate and the
/// `e(mu z)` shift adds `mu` to each index.
#[allow(clippy::too_many_arguments)]
pub fn theorem41_verify(
    fq: &QExpansion,
    mu: &FieldElem,
    k2: i64,
    n: (i64, i64),
    z: &(Complex, Complex),
    policy: &TruncationPolicy,
    cutoffs: &DirectCutoffs,
    tolerance: f64,
    f_cuspidal: bool,
    f: &FieldContext,
) -> Result<Thm41Report> {
    let (k1a, k1b) = fq.weight;
    if k1a != k1b {
        return Err(Error::BadWeight("f must have parallel weight here".into()));
    }
    let k1 = k1a;
    if !f_cuspidal && k2 < k1 + 2 {
        return Err(Error::HypothesisViolated(format!(
            "k2 = {k2} must be at least k1 + 2 = {} for non-cuspidal f",
            k1 + 2
        )));
    }
    let prec = policy.prec;
    let m_weight = k1 + k2 + n.0 + n.1 + n.0 + n.1; // k1 + k2 + 2n (parallel n allowed to differ per slot)
    let _ = m_weight;

    // LHS: [f, P_mu]_n evaluated at z.
    let pmu = pmu_qexpansion(mu, k2, &fq.level, &fq.trace_bound, policy, f)?;
    let bracket = crate::qexp::rankin_cohen(fq, &pmu, n, f)?;
    let (lhs, _) = qexp_eval(&bracket, z, f, prec)?;

    // RHS: direct average of the seed.
    let phi = theorem41_seed(fq, mu, k2, n, f, prec)?;
    let weight_out = (k1 + k2 + 2 * n.0, k1 + k2 + 2 * n.1);
    if weight_out.0 != weight_out.1 {
        return Err(Error::BadWeight("non-parallel output weight not supported in the direct route".into()));
    }
    let (rhs, _) = poincare_eval_direct(
        &SeedSpec::QSeries(phi),
        weight_out.0,
        z,
        cutoffs,
        &fq.level,
        f,
        prec,
    )?;

    let abs = Complex::with_val(prec, &lhs - &rhs).abs().real().clone().to_f64();
    let scale = rhs.clone().abs().real().clone().to_f64();
    let rel = if scale > 0.0 { abs / scale } else { abs };
    Ok(Thm41Report {
        lhs: (lhs.real().to_f64(), lhs.imag().to_f64()),
        rhs: (rhs.real().to_f64(), rhs.imag().to_f64()),
        abs_defect: abs,
        rel_defect: rel,
        pass: rel < tolerance,
        tolerance,
    })
}

/// The finite q-series seed of Theorem 4.1-type identities.
pub fn theorem41_seed(
    fq: &QExpansion,
    mu: &FieldElem,
    k2: i64,
    n: (i64, i64),
    f: &FieldContext,
    prec: u32,
) -> Result<Vec<(FieldElem, Complex)>> {
    let k1 = fq.weight.0;
    let two_pi_i = Complex::with_val(prec, (Float::new(prec), numeric::two_pi(prec)));
    let (mu1, mu2) = mu.embed(f, prec);
    let mut terms: BTreeMap<FieldElem, Complex> = BTreeMap::new();

    // Translates of f's support with the zero index included.
    let mut support: Vec<FieldElem> = vec![FieldElem::zero()];
    let lattice_bound = Rational::from(&fq.trace_bound - &mu.trace(f));
    if lattice_bound.cmp0() == std::cmp::Ordering::Greater {
        support.extend(crate::quadfield::enumerate_tp_lattice(&lattice_bound, f));
    }

    for v in support {
        let a = fq.coeff_at_lattice(&v, f)?;
        if a.is_zero() {
            continue;
        }
        let a_num = a.to_complex(f, prec);
        let (v1, v2) = v.embed(f, prec);
        let idx = mu.add(&v);
        let mut total = Complex::with_val(prec, 0);
        for l1 in 0..=n.0 {
            for l2 in 0..=n.1 {
                if v.is_zero() && (l1, l2) != (0, 0) {
                    continue;
                }
                let b1 = rug::Integer::binomial_u((k1 + n.0 - 1) as u32, (n.0 - l1) as u32)
                    .complete();
                let b2 = rug::Integer::binomial_u((k1 + n.1 - 1) as u32, (n.1 - l2) as u32)
                    .complete();
                let b3 = rug::Integer::binomial_u((k2 + n.0 - 1) as u32, l1 as u32).complete();
                let b4 = rug::Integer::binomial_u((k2 + n.1 - 1) as u32, l2 as u32).complete();
                let mut scalar = Float::with_val(prec, rug::Integer::from(b1 * b2) * rug::Integer::from(b3 * b4));
                if (l1 + l2) % 2 == 1 {
                    scalar = -scalar;
                }
                // N(2 pi i mu)^{n - l} = prod_j (2 pi i mu_j)^{n_j - l_j}
                let p1 = Complex::with_val(prec, &two_pi_i * &mu1).pow((n.0 - l1) as i32);
                let p2 = Complex::with_val(prec, &two_pi_i * &mu2).pow((n.1 - l2) as i32);
                // f^{(l)} translate factor: prod_j (2 pi i v_j)^{l_j}
                let q1 = Complex::with_val(prec, &two_pi_i * &v1).pow(l1 as i32);
                let q2 = Complex::with_val(prec, &two_pi_i * &v2).pow(l2 as i32);
                let term = Complex::with_val(prec, &p1 * &p2)
                    * Complex::with_val(prec, &q1 * &q2)
                    * &scalar;
                total += term;
            }
        }
        let contrib = Complex::with_val(prec, &total * &a_num);
        terms
            .entry(idx)
            .and_modify(|t| *t += contrib.clone())
            .or_insert(contrib);
    }
    Ok(terms.into_iter().collect())
}

use rug::Complete;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::make_field;

    fn f5() -> FieldContext {
        make_field(5).unwrap()
    }

    #[test]
    fn bessel_examples() {
        let prec = 192;
        // J_k(0) = 0 for k >= 1.
        for k in 1..6u32 {
            let v = bessel_j(k, &Float::with_val(prec, 0), prec, 64.0).unwrap();
            assert!(v.is_zero());
        }
        // J_3(1): independent series oracle at 4x precision.
        let v = bessel_j(3, &Float::with_val(prec, 1), prec, 64.0).unwrap();
        let oracle = bessel_series_oracle(3, 1.0, 4 * prec);
        let err = Float::with_val(prec, &v - &oracle).abs();
        assert!(err < numeric::ulp(prec - 8, prec), "err {err}");
        assert!((v.to_f64() - 1.9563e-2).abs() < 1e-6);
        // Cap refusal.
        assert!(matches!(
            bessel_j(3, &Float::with_val(prec, 65), prec, 64.0),
            Err(Error::ArgumentTooLarge(_, _))
        ));
    }

    /// Slow independent ascending-series evaluation at high precision.
    fn bessel_series_oracle(order: u32, x: f64, wp: u32) -> Float {
        let half = Float::with_val(wp, x) / 2u32;
        let mut sum = Float::with_val(wp, 0);
        for j in 0..400u32 {
            let num = half.clone().pow((2 * j + order) as i32);
            let den = numeric::factorial(j, wp) * numeric::factorial(j + order, wp);
            let term = num / den;
            if j % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        sum
    }

    #[test]
    fn bessel_recurrence_samples() {
        // J_{k-1}(x) + J_{k+1}(x) = (2k/x) J_k(x) within 2^{-prec+4}.
        let prec = 128;
        let mut state = 12345u64;
        for _ in 0..100 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let k = 1 + ((state >> 17) % 9) as u32;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = 0.1 + ((state >> 16) % 4000) as f64 / 100.0; // up to ~40
            let xf = Float::with_val(prec, x);
            let a = bessel_j(k - 1, &xf, prec, 64.0).unwrap();
            let b = bessel_j(k + 1, &xf, prec, 64.0).unwrap();
            let c = bessel_j(k, &xf, prec, 64.0).unwrap();
            let lhs = a + b;
            let rhs = Float::with_val(prec, 2 * k) / &xf * c;
            let err = Float::with_val(prec, &lhs - &rhs).abs();
            assert!(err < numeric::ulp(prec - 4, prec), "k={k} x={x} err={err}");
        }
    }

    #[test]
    fn kloosterman_examples() {
        let f = f5();
        let prec = 128;
        let one = FieldElem::one();
        // c = delta * unit: modulus O, S = 1.
        let (s, im) = kloosterman_sum(&one, &one, f.diff_gen(), &f, prec).unwrap();
        assert_eq!(s, 1);
        assert!(im.is_zero());
        // Symmetry S(nu, mu; c) = S(mu, nu; c) and the trivial bound, on
        // samples.
        let nu = FieldElem::from_ints(2, 1);
        let mu = FieldElem::from_ints(1, 0);
        for oc in [(2i64, 0i64), (3, 0), (2, 1), (4, 1), (1, 2)] {
            let c = f.diff_gen().mul(&FieldElem::from_ints(oc.0, oc.1), &f);
            if c.is_zero() {
                continue;
            }
            let (s1, im1) = kloosterman_sum(&nu, &mu, &c, &f, prec).unwrap();
            let (s2, _) = kloosterman_sum(&mu, &nu, &c, &f, prec).unwrap();
            let err = Float::with_val(prec, &s1 - &s2).abs();
            assert!(err < 1e-25, "symmetry failed at c = {c}: {err}");
            assert!(im1 < 1e-25, "imaginary part {im1}");
            let modulus = c.div(f.diff_gen(), &f).unwrap();
            let q = ideal_from_gen(&modulus, &f).unwrap();
            let units = unit_residues_with_inverses(&q, &f).unwrap().len();
            assert!(s1.clone().abs() <= Float::with_val(prec, units) + Float::with_val(prec, 1e-20));
        }
        // Unit-window normalization: S depends on c only through its window
        // representative.
        let c = f.diff_gen().mul(&FieldElem::from_ints(3, 0), &f);
        let c_shift = c.mul(f.tp_unit(), &f);
        let (sa, _) = kloosterman_sum(&nu, &mu, &c, &f, prec).unwrap();
        let (sb, _) = kloosterman_sum(&nu, &mu, &c_shift, &f, prec).unwrap();
        assert_eq!(sa, sb);
    }

    #[test]
    fn eisenstein_normalized_coefficients() {
        let f = f5();
        let prec = 192;
        let e4 = eisenstein_qexp(4, &Ideal::one(), &Rational::from(8), true, &f, prec).unwrap();
        // sigma_3 at the unit orbit is 1.
        match e4.coeff_at_rep(&FieldElem::one()) {
            Coeff::Exact(e) => assert_eq!(e, FieldElem::one()),
            _ => panic!("expected exact"),
        }
        // Coefficient at 2: sigma_3((2)) = 1 + 64 = 65.
        match e4.coeff_at_rep(&FieldElem::from_ints(2, 0)) {
            Coeff::Exact(e) => assert_eq!(e, FieldElem::from_ints(65, 0)),
            _ => panic!("expected exact"),
        }
        // Constant-term consistency: t_l * K_l = zeta_F(l).
        let t4 = e4.const_term.to_complex(&f, prec).real().clone();
        let kk = eisenstein_scalar(4, &f, prec);
        let zf = numeric::zeta_f(&Float::with_val(prec, 4), 5, prec).unwrap();
        let err = Float::with_val(prec, &t4 * &kk) - zf;
        assert!(err.abs() < 1e-40);
        // Functional-equation oracle: t_4 = D * zeta_F(-3) / 4 = 1/48 exactly
        // for Q(sqrt 5) (Siegel's value zeta_F(-3) = 1/60).
        let expect = Float::with_val(prec, Rational::from((1, 48)));
        let err = Float::with_val(prec, &t4 - &expect).abs();
        assert!(err < Float::with_val(prec, 1e-40), "t4 = {t4}");
        // And t_6 = 5 * (67/630) / 4 = 67/504.
        let e6 = eisenstein_qexp(6, &Ideal::one(), &Rational::from(4), true, &f, prec).unwrap();
        let t6 = e6.const_term.to_complex(&f, prec).real().clone();
        let expect = Float::with_val(prec, Rational::from((67, 504)));
        let err = Float::with_val(prec, &t6 - &expect).abs();
        assert!(err < Float::with_val(prec, 1e-40), "t6 = {t6}");

        assert!(matches!(
            eisenstein_qexp(5, &Ideal::one(), &Rational::from(4), true, &f, prec),
            Err(Error::BadWeight(_))
        ));
    }

    #[test]
    fn unit_window_rep_enumeration_consistent() {
        let f = f5();
        let reps = enumerate_unit_window_reps(30, &f);
        // Norms 1..30 with the right multiplicities: one orbit per principal
        // ideal... count by |N|.
        for o in reps.iter() {
            assert_eq!(unit_window_rep(o, &f).unwrap(), *o);
            assert!(o.norm(&f).abs() <= 30);
        }
        // No duplicates and closure: every element of small norm reduces to
        // a listed rep.
        for x in -8i64..=8 {
            for y in -8i64..=8 {
                let o = FieldElem::from_ints(x, y);
                if o.is_zero() || o.norm(&f).abs() > 30 {
                    continue;
                }
                let rep = unit_window_rep(&o, &f).unwrap();
                assert!(reps.contains(&rep), "missing rep {rep} of {o}");
            }
        }
    }
}
