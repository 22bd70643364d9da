//! Solver for unit equations `α·X + β·Y = 1` where `Y` is tied to `X` by an
//! involution of the unit group.
//!
//! The search space is the exponent lattice of a fixed system of units.  A
//! shrinking sequence of thresholds splits the work into ellipsoid
//! enumerations: at threshold `s`, any solution not already enumerated has one
//! conjugate term exceptionally close to `1` (or two conjugates exceptionally
//! close to each other), which pins that coordinate into a thin slab of width
//! `2/s`.  Slab candidates are enumerated as lattice points of a weighted
//! ellipsoid; candidates whose two conjugate terms merely stay close survive
//! into a low-dimensional residual list that is swept by a box scan over the
//! involution-fixed directions.  All candidates pass a multi-prime modular
//! sieve before the exact algebraic identity is checked.

use std::collections::{BTreeSet, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use rug::ops::Pow;
use rug::Float;

use crate::lattice::{enumerate_ellipsoid_reduced, float_solve};
use crate::order::{Elem, OrderContext};
use crate::units::UnitSystem;
use crate::{Error, Result};

/// Where the two terms of the equation live.
pub enum EquationAlgebra {
    /// `X` ranges over units of a quadratic extension of the base order and
    /// `Y = σ(X)` is its image under the involution swapping each conjugate
    /// pair.  Coefficients are kept cross-multiplied: with `α = a/c` and
    /// `β^{(ij)} = α^{(ij')}`, a solution satisfies
    /// `a·X·σc + σa·σX·c = c·σc` exactly.
    Single {
        g: OrderContext,
        units: UnitSystem,
        /// Involution image of the generator, used to pair roots mod `p`.
        sigma_gen: Elem,
        a: Elem,
        sigma_a: Elem,
        c: Elem,
        sigma_c: Elem,
    },
    /// `X` and `Y` are independent units of the base order itself (the
    /// resolvent splits completely); the involution swaps the two exponent
    /// blocks.  A solution satisfies `a·X + b·Y = c` exactly.
    Paired {
        base: OrderContext,
        units: Vec<Elem>,
        a: Elem,
        b: Elem,
        c: Elem,
    },
}

/// A unit equation prepared for the schedule solver.
pub struct UnitEquation {
    pub algebra: EquationAlgebra,
    /// Number of conjugate pairs (base-field embeddings).
    pub m: usize,
    /// Exponent dimension.
    pub t: usize,
    /// Rank of the involution-fixed sublattice.
    pub r: usize,
    /// Rank of the quotient by the fixed sublattice.
    pub s: usize,
    /// `2m × t` rows of `log|unit|` in slot order `(pair 0, side 1), (pair 0,
    /// side 2), (pair 1, side 1), …`.
    log_rows: Vec<Vec<Float>>,
    /// `log|α|` per slot.
    offsets: Vec<Float>,
    kernel: Vec<Vec<i64>>,
    lift: Vec<Vec<i64>>,
    quotient: Vec<Vec<i64>>,
    /// All slot offsets agree (the equation looks the same from every slot).
    pub symmetric: bool,
}

fn abs_log(ctx: &OrderContext, e: &Elem, j: usize) -> Float {
    let v = ctx.embed(e, j).abs().real().clone();
    v.ln()
}

impl UnitEquation {
    /// Equation over a quadratic extension `g` of its base order.
    ///
    /// `sigma_gen` is the involution image of the generator; `a`/`c` the
    /// cross-multiplied coefficient pair together with their involution
    /// images.  Consistency of the supplied images is checked numerically at
    /// every conjugate pair, and `c` must be invertible in the field.
    pub fn new_single(
        g: OrderContext,
        units: UnitSystem,
        sigma_gen: Elem,
        a: Elem,
        sigma_a: Elem,
        c: Elem,
        sigma_c: Elem,
    ) -> Result<Self> {
        let pairing = g.base_pairing.as_ref().ok_or_else(|| {
            Error::Verification("unit equation needs an extension with a base pairing".into())
        })?;
        if g.degree % 2 != 0 {
            return Err(Error::Verification(
                "quadratic extension must have even degree".into(),
            ));
        }
        let m = g.degree / 2;
        let mut slots = Vec::with_capacity(2 * m);
        for i in 0..m {
            let pair: Vec<usize> = (0..g.degree)
                .filter(|&j| pairing.embedding_map[j] == i)
                .collect();
            if pair.len() != 2 {
                return Err(Error::Verification(format!(
                    "base embedding {i} is covered by {} extension embeddings, expected 2",
                    pair.len()
                )));
            }
            slots.extend(pair);
        }
        if c.iter().all(|x| x.is_zero()) || g.norm(&c).is_zero() {
            return Err(Error::Verification("coefficient denominator is zero".into()));
        }
        let bits = g.prec.bits();
        let tol = Float::with_val(bits, 2f64).pow(-(bits as i32) / 2);
        for i in 0..m {
            let (j1, j2) = (slots[2 * i], slots[2 * i + 1]);
            for (lhs, rhs, what) in [
                (&sigma_a, &a, "coefficient numerator"),
                (&sigma_c, &c, "coefficient denominator"),
            ] {
                let d = rug::Complex::with_val(bits, g.embed(lhs, j1) - g.embed(rhs, j2))
                    .abs()
                    .real()
                    .clone();
                if d > tol {
                    return Err(Error::Verification(format!(
                        "involution image of the {what} does not match its conjugate values"
                    )));
                }
            }
            let d = rug::Complex::with_val(
                bits,
                g.embed(&sigma_gen, j1) - g.embeddings[j2].clone(),
            )
            .abs()
            .real()
            .clone();
            if d > tol {
                return Err(Error::Verification(
                    "involution image of the generator does not swap the conjugate pairs".into(),
                ));
            }
        }
        let t = units.len();
        let log_rows: Vec<Vec<Float>> = slots
            .iter()
            .map(|&j| units.units.iter().map(|u| abs_log(&g, u, j)).collect())
            .collect();
        let offsets: Vec<Float> = slots
            .iter()
            .map(|&j| abs_log(&g, &a, j) - abs_log(&g, &c, j))
            .collect();
        let symmetric = offsets
            .iter()
            .all(|o| (o.clone() - &offsets[0]).abs() < tol);
        let kernel = units.kernel_basis.clone();
        let lift = units.lift_map.clone();
        let quotient = units.quotient_map.clone();
        let (r, s) = (units.rank_relative, units.rank_quotient);
        Ok(Self {
            algebra: EquationAlgebra::Single {
                g,
                units,
                sigma_gen,
                a,
                sigma_a,
                c,
                sigma_c,
            },
            m,
            t,
            r,
            s,
            log_rows,
            offsets,
            kernel,
            lift,
            quotient,
            symmetric,
        })
    }

    /// Equation `a·X + b·Y = c` with `X`, `Y` independent units of a totally
    /// real base order; the involution swaps the two exponent blocks.
    pub fn new_paired(base: OrderContext, units: Vec<Elem>, a: Elem, b: Elem, c: Elem) -> Result<Self> {
        if base.signature.1 != 0 {
            return Err(Error::Verification(
                "paired equation expects a totally real base order".into(),
            ));
        }
        if c.iter().all(|x| x.is_zero()) || base.norm(&c).is_zero() {
            return Err(Error::Verification("coefficient denominator is zero".into()));
        }
        for u in &units {
            let n = base.norm(u);
            if n.magnitude() != &BigInt::one().magnitude().clone() {
                return Err(Error::Verification("paired system contains a non-unit".into()));
            }
        }
        let m = base.degree;
        let rb = units.len();
        let t = 2 * rb;
        let bits = base.prec.bits();
        let mut log_rows = Vec::with_capacity(2 * m);
        let mut offsets = Vec::with_capacity(2 * m);
        for i in 0..m {
            let logs: Vec<Float> = units.iter().map(|u| abs_log(&base, u, i)).collect();
            let zero = Float::with_val(bits, 0);
            let mut left: Vec<Float> = logs.clone();
            left.extend(std::iter::repeat(zero.clone()).take(rb));
            let mut right: Vec<Float> = std::iter::repeat(zero).take(rb).collect();
            right.extend(logs);
            log_rows.push(left);
            log_rows.push(right);
            offsets.push(abs_log(&base, &a, i) - abs_log(&base, &c, i));
            offsets.push(abs_log(&base, &b, i) - abs_log(&base, &c, i));
        }
        let tol = Float::with_val(bits, 2f64).pow(-(bits as i32) / 2);
        let symmetric = offsets
            .iter()
            .all(|o| (o.clone() - &offsets[0]).abs() < tol);
        let mut kernel = Vec::with_capacity(rb);
        let mut lift = vec![vec![0i64; rb]; t];
        let mut quotient = vec![vec![0i64; t]; rb];
        for k in 0..rb {
            let mut row = vec![0i64; t];
            row[k] = 1;
            row[rb + k] = 1;
            kernel.push(row);
            lift[k][k] = 1;
            quotient[k][k] = 1;
            quotient[k][rb + k] = -1;
        }
        Ok(Self {
            algebra: EquationAlgebra::Paired { base, units, a, b, c },
            m,
            t,
            r: rb,
            s: rb,
            log_rows,
            offsets,
            kernel,
            lift,
            quotient,
            symmetric,
        })
    }

    fn ctx(&self) -> &OrderContext {
        match &self.algebra {
            EquationAlgebra::Single { g, .. } => g,
            EquationAlgebra::Paired { base, .. } => base,
        }
    }

    /// Sign pairs `(δ_X, δ_Y)` a solution may carry.  In the single-field
    /// algebra `Y = σ(X)` forces the same free sign on both terms; in the
    /// paired algebra the two signs are independent.
    pub fn sign_combos(&self) -> &'static [(i64, i64)] {
        match &self.algebra {
            EquationAlgebra::Single { .. } => &[(1, 1), (-1, -1)],
            EquationAlgebra::Paired { .. } => &[(1, 1), (1, -1), (-1, 1), (-1, -1)],
        }
    }

    /// Quotient coordinates of an exponent vector.
    pub fn quotient_coords(&self, a: &[i64]) -> Vec<i64> {
        self.quotient
            .iter()
            .map(|row| row.iter().zip(a).map(|(&q, &x)| q * x).sum())
            .collect()
    }

    /// One preimage of quotient coordinates.
    pub fn lift_quotient(&self, b: &[i64]) -> Vec<i64> {
        self.lift
            .iter()
            .map(|row| row.iter().zip(b).map(|(&l, &x)| l * x).sum())
            .collect()
    }

    pub(crate) fn power_product(ctx: &OrderContext, units: &[Elem], exps: &[i64]) -> Result<Elem> {
        let mut num = ctx.one();
        let mut den = ctx.one();
        for (u, &e) in units.iter().zip(exps) {
            let p = ctx.pow(u, u32::try_from(e.unsigned_abs()).map_err(|_| {
                Error::CardinalityCap("exponent too large for exact expansion".into())
            })?);
            if e >= 0 {
                num = ctx.mul(&num, &p);
            } else {
                den = ctx.mul(&den, &p);
            }
        }
        ctx.divide_exact(&num, &den)
    }

    /// Exact check of the defining identity for a signed exponent vector.
    ///
    /// The sign is the free sign of the `X` term; for the single-field
    /// algebra the `Y` sign follows from the torsion of the involution, for
    /// the paired algebra both signs are explicit.
    pub fn verify_exact(&self, signs: (i64, i64), a: &[i64]) -> Result<bool> {
        match &self.algebra {
            EquationAlgebra::Single {
                g,
                units,
                a: ca,
                sigma_a,
                c,
                sigma_c,
                ..
            } => {
                let x = units.element_of_exponent(g, a)?;
                let (tau, conj) = units.conjugate_exponent(a);
                let xc = units.element_of_exponent(g, &conj)?;
                let d1 = signs.0;
                let d2 = signs.0 * tau;
                let term1 = g.scalar_mul(&BigInt::from(d1), &g.mul(&g.mul(ca, &x), sigma_c));
                let term2 = g.scalar_mul(&BigInt::from(d2), &g.mul(&g.mul(sigma_a, &xc), c));
                let rhs = g.mul(c, sigma_c);
                Ok(g.add(&term1, &term2) == rhs)
            }
            EquationAlgebra::Paired { base, units, a: ca, b, c } => {
                let rb = units.len();
                let x = Self::power_product(base, units, &a[..rb])?;
                let y = Self::power_product(base, units, &a[rb..])?;
                let term1 = base.scalar_mul(&BigInt::from(signs.0), &base.mul(ca, &x));
                let term2 = base.scalar_mul(&BigInt::from(signs.1), &base.mul(b, &y));
                Ok(base.add(&term1, &term2) == *c)
            }
        }
    }

    /// Resolve the recorded sign pair of a verified solution.
    fn solution_signs(&self, combo: (i64, i64), a: &[i64]) -> (i64, i64) {
        match &self.algebra {
            EquationAlgebra::Single { units, .. } => {
                let (tau, _) = units.conjugate_exponent(a);
                (combo.0, combo.0 * tau)
            }
            EquationAlgebra::Paired { .. } => combo,
        }
    }
}

fn mul_p(a: u64, b: u64, p: u64) -> u64 {
    a * b % p
}

fn pow_p(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_p(acc, b, p);
        }
        b = mul_p(b, b, p);
        e >>= 1;
    }
    acc
}

fn exp_mod(e: i64, p: u64) -> u64 {
    e.rem_euclid((p - 1) as i64) as u64
}

fn eval_elem_mod(e: &Elem, x: u64, p: u64) -> u64 {
    let pb = BigInt::from(p);
    let mut acc = 0u64;
    for c in e.iter().rev() {
        let cm = ((c % &pb) + &pb) % &pb;
        let cm = cm.to_u64().expect("residue fits u64");
        acc = (mul_p(acc, x, p) + cm) % p;
    }
    acc
}

/// One conjugate-pair test site at a fixed prime: the equation instance
/// `δ_X·ca·V₁ + δ_Y·cb·V₂ ≡ rhs (mod p)` with `V₁ = ∏ left[k]^{a_k}` and
/// `V₂ = ∏ right[k]^{a_k}`.
struct SieveSite {
    ca: u64,
    cb: u64,
    rhs: u64,
    left: Vec<u64>,
    right: Vec<u64>,
}

struct PrimeSieve {
    p: u64,
    sites: Vec<SieveSite>,
}

impl PrimeSieve {
    fn site_values(&self, a: &[i64]) -> Vec<(u64, u64)> {
        self.sites
            .iter()
            .map(|site| {
                let mut v1 = 1u64;
                let mut v2 = 1u64;
                for (k, &e) in a.iter().enumerate() {
                    if e != 0 {
                        let em = exp_mod(e, self.p);
                        v1 = mul_p(v1, pow_p(site.left[k], em, self.p), self.p);
                        v2 = mul_p(v2, pow_p(site.right[k], em, self.p), self.p);
                    }
                }
                (v1, v2)
            })
            .collect()
    }

    fn combo_mask(&self, combos: &[(i64, i64)], values: &[(u64, u64)], mut mask: u8) -> u8 {
        for (ci, &(d1, d2)) in combos.iter().enumerate() {
            if mask & (1 << ci) == 0 {
                continue;
            }
            for (site, &(v1, v2)) in self.sites.iter().zip(values) {
                let t1 = mul_p(site.ca, v1, self.p);
                let t1 = if d1 > 0 { t1 } else { (self.p - t1) % self.p };
                let t2 = mul_p(site.cb, v2, self.p);
                let t2 = if d2 > 0 { t2 } else { (self.p - t2) % self.p };
                if (t1 + t2) % self.p != site.rhs {
                    mask &= !(1 << ci);
                    break;
                }
            }
        }
        mask
    }
}

/// Modular pre-filter for candidate exponent vectors.
///
/// Every listed prime must split the defining polynomial into distinct roots
/// arranged by the involution into conjugate pairs; a candidate survives only
/// if some admissible sign pair satisfies the equation at every site of every
/// prime.  True solutions always survive, so the plan may only discard.
pub struct SievePlan {
    primes: Vec<PrimeSieve>,
}

impl SievePlan {
    pub fn new(eq: &UnitEquation, primes: &[u64]) -> Result<Self> {
        let mut out = Vec::with_capacity(primes.len());
        for &p in primes {
            if p < 3 || p > (1 << 31) {
                return Err(Error::Verification(format!("sieve prime {p} out of range")));
            }
            out.push(Self::prepare_prime(eq, p)?);
        }
        Ok(Self { primes: out })
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    fn prepare_prime(eq: &UnitEquation, p: u64) -> Result<PrimeSieve> {
        let ctx = eq.ctx();
        let f = &ctx.defining_polynomial;
        let fe: Elem = f.coeffs.clone();
        let roots: Vec<u64> = (0..p).filter(|&x| eval_elem_mod(&fe, x, p) == 0).collect();
        if roots.len() != ctx.degree {
            return Err(Error::Verification(format!(
                "prime {p} does not split the defining polynomial into distinct roots"
            )));
        }
        let sites = match &eq.algebra {
            EquationAlgebra::Single {
                g,
                units,
                sigma_gen,
                a,
                sigma_a,
                c,
                sigma_c,
            } => {
                let _ = g;
                let partner: Vec<u64> = roots
                    .iter()
                    .map(|&r| eval_elem_mod(sigma_gen, r, p))
                    .collect();
                let mut sites = Vec::new();
                let mut seen = HashSet::new();
                for (i, &r) in roots.iter().enumerate() {
                    let q = partner[i];
                    let qi = roots.iter().position(|&x| x == q).ok_or_else(|| {
                        Error::Verification(format!(
                            "prime {p}: involution image of a root is not a root"
                        ))
                    })?;
                    if q == r {
                        return Err(Error::Verification(format!(
                            "prime {p}: involution fixes a root"
                        )));
                    }
                    if partner[qi] != r {
                        return Err(Error::Verification(format!(
                            "prime {p}: root pairing is not an involution"
                        )));
                    }
                    if seen.contains(&r) || seen.contains(&q) {
                        continue;
                    }
                    seen.insert(r);
                    seen.insert(q);
                    let left: Vec<u64> = units
                        .units
                        .iter()
                        .map(|u| eval_elem_mod(u, r, p))
                        .collect();
                    let right: Vec<u64> = units
                        .units
                        .iter()
                        .map(|u| eval_elem_mod(u, q, p))
                        .collect();
                    if left.iter().chain(&right).any(|&v| v == 0) {
                        return Err(Error::Verification(format!(
                            "prime {p} divides a unit value"
                        )));
                    }
                    let ca = mul_p(eval_elem_mod(a, r, p), eval_elem_mod(sigma_c, r, p), p);
                    let cb = mul_p(eval_elem_mod(sigma_a, r, p), eval_elem_mod(c, r, p), p);
                    let rhs = mul_p(eval_elem_mod(c, r, p), eval_elem_mod(sigma_c, r, p), p);
                    if ca == 0 || cb == 0 || rhs == 0 {
                        return Err(Error::Verification(format!(
                            "prime {p} degenerates the equation coefficients"
                        )));
                    }
                    sites.push(SieveSite { ca, cb, rhs, left, right });
                }
                sites
            }
            EquationAlgebra::Paired { units, a, b, c, .. } => {
                let rb = units.len();
                let mut sites = Vec::new();
                for &r in &roots {
                    let vals: Vec<u64> = units.iter().map(|u| eval_elem_mod(u, r, p)).collect();
                    if vals.iter().any(|&v| v == 0) {
                        return Err(Error::Verification(format!(
                            "prime {p} divides a unit value"
                        )));
                    }
                    let one = vec![1u64; rb];
                    let mut left = vals.clone();
                    left.extend(one.iter().copied());
                    let mut right = one;
                    right.extend(vals);
                    let ca = eval_elem_mod(a, r, p);
                    let cb = eval_elem_mod(b, r, p);
                    let rhs = eval_elem_mod(c, r, p);
                    if ca == 0 || cb == 0 || rhs == 0 {
                        return Err(Error::Verification(format!(
                            "prime {p} degenerates the equation coefficients"
                        )));
                    }
                    sites.push(SieveSite { ca, cb, rhs, left, right });
                }
                sites
            }
        };
        Ok(PrimeSieve { p, sites })
    }

    /// Bitmask of sign pairs surviving every prime (bit `i` ↔ `combos[i]`).
    /// An empty plan filters nothing.
    pub fn mask_full(&self, eq: &UnitEquation, a: &[i64]) -> u8 {
        let combos = eq.sign_combos();
        let mut mask = (1u8 << combos.len()) - 1;
        for ps in &self.primes {
            if mask == 0 {
                break;
            }
            let values = ps.site_values(a);
            mask = ps.combo_mask(combos, &values, mask);
        }
        mask
    }
}

/// Descending enumeration thresholds; after the last one a final uniform
/// enumeration at that threshold closes the search.
pub struct EnumerationSchedule {
    pub thresholds: Vec<f64>,
}

impl Default for EnumerationSchedule {
    fn default() -> Self {
        Self {
            thresholds: vec![1e20, 1e10, 1e3, 1e2],
        }
    }
}

/// A verified solution `δ_X·∏u^a` of the unit equation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct UnitSolution {
    pub sign_x: i64,
    pub sign_y: i64,
    pub exponents: Vec<i64>,
}

/// Statistics and results of a full schedule run.
pub struct ScheduleOutcome {
    pub ln_s0: f64,
    /// Per step: candidates enumerated with one term pinned near `1`
    /// (summed over slots, rounded slab centers included).
    pub case1_counts: Vec<usize>,
    /// Per step: quotient vectors with two conjugate terms pinned together
    /// (union over slots).
    pub case2_counts: Vec<usize>,
    /// Union of all quotient vectors that survived into the box scan.
    pub residual: Vec<Vec<i64>>,
    pub case1_candidates: usize,
    /// Exponent vectors examined by the residual box scan.
    pub scanned: u64,
    pub first_prime_survivors: u64,
    pub sieve_survivors: usize,
    pub solutions: Vec<UnitSolution>,
}

/// Least-squares form of a weighted affine system: returns the Gram matrix,
/// the minimizing center, and the residual radius² available for lattice
/// points.  A negative radius means the slab misses the search region.
fn centered_form(
    rows: &[Vec<Float>],
    offs: &[Float],
    weights: &[Float],
    r2: f64,
    bits: u32,
) -> Result<(Vec<Vec<Float>>, Vec<Float>, Float)> {
    let nc = rows[0].len();
    let mut gram = vec![vec![Float::with_val(bits, 0); nc]; nc];
    let mut rhs = vec![Float::with_val(bits, 0); nc];
    let mut cnst = Float::with_val(bits, 0);
    for (k, row) in rows.iter().enumerate() {
        let w2 = Float::with_val(bits, &weights[k] * &weights[k]);
        cnst += Float::with_val(bits, &w2 * &Float::with_val(bits, &offs[k] * &offs[k]));
        for a in 0..nc {
            let wa = Float::with_val(bits, &w2 * &row[a]);
            rhs[a] -= Float::with_val(bits, &wa * &offs[k]);
            for b in 0..nc {
                gram[a][b] += Float::with_val(bits, &wa * &row[b]);
            }
        }
    }
    let center = float_solve(&gram, &rhs)?;
    let mut cgc = Float::with_val(bits, 0);
    for a in 0..nc {
        for b in 0..nc {
            let t = Float::with_val(bits, &center[a] * &gram[a][b]);
            cgc += Float::with_val(bits, &t * &center[b]);
        }
    }
    let r2_eff = Float::with_val(bits, r2) - (cnst - cgc);
    Ok((gram, center, r2_eff))
}

fn rounded_center(center: &[Float]) -> Option<Vec<i64>> {
    let mut out = Vec::with_capacity(center.len());
    for c in center {
        let v = c.to_f64();
        if !v.is_finite() || v.abs() > 9e15 {
            return None;
        }
        out.push(v.round() as i64);
    }
    Some(out)
}

fn slab_points(
    rows: &[Vec<Float>],
    offs: &[Float],
    weights: &[Float],
    r2: f64,
    cap: usize,
    bits: u32,
) -> Result<(Vec<Vec<i64>>, Option<Vec<i64>>)> {
    let (gram, center, r2_eff) = centered_form(rows, offs, weights, r2, bits)?;
    let rounded = rounded_center(&center);
    if r2_eff < 0 {
        return Ok((Vec::new(), rounded));
    }
    let pts = enumerate_ellipsoid_reduced(&gram, &center, &r2_eff, cap)?;
    Ok((pts, rounded))
}

/// Worst-case bound `max |log| α·X ||` over the search box: every solution
/// with exponents bounded by `e_r` stays below the initial threshold.
pub fn initial_log_bound(eq: &UnitEquation, e_r: i64) -> Float {
    let bits = eq.ctx().prec.bits();
    let mut max_off = Float::with_val(bits, 0);
    for o in &eq.offsets {
        let a = o.clone().abs();
        if a > max_off {
            max_off = a;
        }
    }
    let mut max_row = Float::with_val(bits, 0);
    for row in &eq.log_rows {
        let mut s = Float::with_val(bits, 0);
        for v in row {
            s += v.clone().abs();
        }
        if s > max_row {
            max_row = s;
        }
    }
    max_off + Float::with_val(bits, e_r) * max_row
}

struct KernelSection {
    pivots: Vec<usize>,
    inverse: Vec<Vec<BigRational>>,
}

fn kernel_section(kernel: &[Vec<i64>]) -> Result<KernelSection> {
    let r = kernel.len();
    if r == 0 {
        return Ok(KernelSection {
            pivots: vec![],
            inverse: vec![],
        });
    }
    let t = kernel[0].len();
    let mut pivots = Vec::new();
    let mut echelon: Vec<Vec<BigRational>> = Vec::new();
    for col in 0..t {
        if pivots.len() == r {
            break;
        }
        let mut v: Vec<BigRational> = kernel
            .iter()
            .map(|row| BigRational::from(BigInt::from(row[col])))
            .collect();
        for e in &echelon {
            let lead = e.iter().position(|x| !x.is_zero()).unwrap();
            if !v[lead].is_zero() {
                let f = &v[lead] / &e[lead];
                for i in 0..r {
                    let sub = &f * &e[i];
                    v[i] -= sub;
                }
            }
        }
        if v.iter().any(|x| !x.is_zero()) {
            echelon.push(v);
            pivots.push(col);
        }
    }
    if pivots.len() != r {
        return Err(Error::Verification(
            "involution-fixed lattice basis is rank deficient".into(),
        ));
    }
    // Invert M with M[j][i] = kernel[i][pivots[j]] by Gauss-Jordan.
    let mut m: Vec<Vec<BigRational>> = (0..r)
        .map(|j| {
            (0..r)
                .map(|i| BigRational::from(BigInt::from(kernel[i][pivots[j]])))
                .collect()
        })
        .collect();
    let mut inv: Vec<Vec<BigRational>> = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| {
                    if i == j {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..r {
        let piv = (col..r)
            .find(|&i| !m[i][col].is_zero())
            .ok_or_else(|| Error::Verification("singular pivot matrix".into()))?;
        m.swap(col, piv);
        inv.swap(col, piv);
        let d = m[col][col].clone();
        for k in 0..r {
            m[col][k] /= d.clone();
            inv[col][k] /= d.clone();
        }
        for row in 0..r {
            if row != col && !m[row][col].is_zero() {
                let f = m[row][col].clone();
                for k in 0..r {
                    let s1 = &f * &m[col][k];
                    m[row][k] -= s1;
                    let s2 = &f * &inv[col][k];
                    inv[row][k] -= s2;
                }
            }
        }
    }
    Ok(KernelSection { pivots, inverse: inv })
}

impl KernelSection {
    /// Per-direction box radius covering every exponent vector with
    /// coordinates bounded by `e_r` above the given lifted base point.
    fn box_bounds(&self, a0: &[i64], e_r: i64) -> Vec<i64> {
        self.inverse
            .iter()
            .map(|row| {
                let mut acc = BigRational::zero();
                for (j, f) in row.iter().enumerate() {
                    let reach = BigRational::from(BigInt::from(e_r + a0[self.pivots[j]].abs()));
                    acc += f.abs() * reach;
                }
                acc.ceil().to_integer().to_i64().unwrap_or(i64::MAX)
            })
            .collect()
    }
}

struct ScanStats {
    scanned: u64,
    survivors: Vec<Vec<i64>>,
}

/// Sweep the involution-fixed box above one residual quotient vector,
/// pre-filtering with the first prime of the plan.
fn scan_residual(
    eq: &UnitEquation,
    plan: &SievePlan,
    section: &KernelSection,
    b: &[i64],
    e_r: i64,
) -> ScanStats {
    let a0 = eq.lift_quotient(b);
    let bounds = section.box_bounds(&a0, e_r);
    let combos = eq.sign_combos();
    let full = (1u8 << combos.len()) - 1;
    let mut stats = ScanStats {
        scanned: 0,
        survivors: Vec::new(),
    };
    let Some(ps) = plan.primes.first() else {
        // No sieve: hand every box vector to the exact stage.
        let mut t = vec![0i64; eq.r];
        enumerate_box(&bounds, 0, &mut t, &mut |tv| {
            stats.scanned += 1;
            stats.survivors.push(compose(eq, &a0, tv));
        });
        return stats;
    };
    let base_values = ps.site_values(&a0);
    // Step multipliers (and their value at the lower box edge) per kernel
    // direction and site side.
    let nsites = ps.sites.len();
    let mut step: Vec<Vec<(u64, u64)>> = Vec::with_capacity(eq.r);
    let mut start: Vec<Vec<(u64, u64)>> = Vec::with_capacity(eq.r);
    for (i, k) in eq.kernel.iter().enumerate() {
        let vals = ps.site_values(k);
        let lo = exp_mod(-bounds[i], ps.p);
        let at_lo: Vec<(u64, u64)> = vals
            .iter()
            .map(|&(v1, v2)| (pow_p(v1, lo, ps.p), pow_p(v2, lo, ps.p)))
            .collect();
        step.push(vals);
        start.push(at_lo);
    }
    let mut t = vec![0i64; eq.r];
    let mut values = vec![base_values; 1];
    scan_level(
        eq, ps, combos, full, &bounds, &step, &start, 0, &mut t, &mut values, &a0, &mut stats,
    );
    let _ = nsites;
    stats
}

fn compose(eq: &UnitEquation, a0: &[i64], t: &[i64]) -> Vec<i64> {
    let mut a = a0.to_vec();
    for (i, &ti) in t.iter().enumerate() {
        for (k, &ki) in eq.kernel[i].iter().enumerate() {
            a[k] += ti * ki;
        }
    }
    a
}

fn enumerate_box(bounds: &[i64], level: usize, t: &mut Vec<i64>, f: &mut impl FnMut(&[i64])) {
    if level == bounds.len() {
        f(t);
        return;
    }
    for v in -bounds[level]..=bounds[level] {
        t[level] = v;
        enumerate_box(bounds, level + 1, t, f);
    }
}

#[allow(clippy::too_many_arguments)]
fn scan_level(
    eq: &UnitEquation,
    ps: &PrimeSieve,
    combos: &[(i64, i64)],
    full: u8,
    bounds: &[i64],
    step: &[Vec<(u64, u64)>],
    start: &[Vec<(u64, u64)>],
    level: usize,
    t: &mut Vec<i64>,
    values: &mut Vec<Vec<(u64, u64)>>,
    a0: &[i64],
    stats: &mut ScanStats,
) {
    if level == eq.r {
        stats.scanned += 1;
        let cur = values.last().unwrap();
        if ps.combo_mask(combos, cur, full) != 0 {
            stats.survivors.push(compose(eq, a0, t));
        }
        return;
    }
    let parent = values.last().unwrap().clone();
    let mut cur: Vec<(u64, u64)> = parent
        .iter()
        .zip(&start[level])
        .map(|(&(v1, v2), &(s1, s2))| (mul_p(v1, s1, ps.p), mul_p(v2, s2, ps.p)))
        .collect();
    for v in -bounds[level]..=bounds[level] {
        t[level] = v;
        values.push(cur.clone());
        scan_level(
            eq, ps, combos, full, bounds, step, start, level + 1, t, values, a0, stats,
        );
        values.pop();
        for (c, &(s1, s2)) in cur.iter_mut().zip(&step[level]) {
            c.0 = mul_p(c.0, s1, ps.p);
            c.1 = mul_p(c.1, s2, ps.p);
        }
    }
}

/// Run the full shrinking-threshold schedule and return every solution with
/// exponents bounded by `e_r`.
pub fn run_schedule(
    eq: &UnitEquation,
    e_r: i64,
    schedule: &EnumerationSchedule,
    plan: &SievePlan,
    cap: usize,
) -> Result<ScheduleOutcome> {
    if e_r <= 0 {
        return Err(Error::Verification("exponent bound must be positive".into()));
    }
    let bits = eq.ctx().prec.bits();
    let ln_s0 = initial_log_bound(eq, e_r);
    let mut prev = ln_s0.clone();
    for (i, &s) in schedule.thresholds.iter().enumerate() {
        if s <= 2.6 {
            return Err(Error::Verification(format!(
                "threshold {s} too small for the slab dichotomy"
            )));
        }
        let lns = Float::with_val(bits, s).ln();
        if lns >= prev {
            return Err(Error::Verification(format!(
                "threshold #{i} does not shrink the bound"
            )));
        }
        prev = lns;
    }

    let two_m = 2 * eq.m;
    let mut case1_counts = Vec::new();
    let mut case1_cands: HashSet<Vec<i64>> = HashSet::new();
    let mut ln_s = ln_s0.clone();
    for &s in &schedule.thresholds {
        let half_s = Float::with_val(bits, s / 2.0);
        let w_reg = Float::with_val(bits, 1) / &ln_s;
        let mut step_total = 0usize;
        for slot in 0..two_m {
            let mut rows = eq.log_rows.clone();
            rows.push(eq.log_rows[slot].clone());
            let mut offs = eq.offsets.clone();
            offs.push(eq.offsets[slot].clone());
            let mut weights = vec![w_reg.clone(); two_m];
            weights.push(half_s.clone());
            let (pts, center) =
                slab_points(&rows, &offs, &weights, (two_m + 1) as f64, cap, bits)?;
            let mut slot_set: HashSet<Vec<i64>> = pts.into_iter().collect();
            if let Some(c) = center {
                slot_set.insert(c);
            }
            step_total += slot_set.len();
            case1_cands.extend(slot_set);
        }
        case1_counts.push(step_total);
        ln_s = Float::with_val(bits, s).ln();
    }
    {
        let w = Float::with_val(bits, 1) / &ln_s;
        let weights = vec![w; two_m];
        let (pts, _) = slab_points(
            &eq.log_rows,
            &eq.offsets,
            &weights,
            two_m as f64,
            cap,
            bits,
        )?;
        case1_counts.push(pts.len());
        case1_cands.extend(pts);
    }

    // Quotient-space systems for the paired-slab case.
    let mut q_rows: Vec<Vec<Float>> = Vec::with_capacity(eq.m);
    let mut q_offs: Vec<Float> = Vec::with_capacity(eq.m);
    for i in 0..eq.m {
        let mut row = vec![Float::with_val(bits, 0); eq.s];
        for l in 0..eq.s {
            for k in 0..eq.t {
                if eq.lift[k][l] != 0 {
                    let d = Float::with_val(bits, &eq.log_rows[2 * i][k] - &eq.log_rows[2 * i + 1][k]);
                    row[l] += d * Float::with_val(bits, eq.lift[k][l]);
                }
            }
        }
        q_rows.push(row);
        q_offs.push(Float::with_val(bits, &eq.offsets[2 * i] - &eq.offsets[2 * i + 1]));
    }
    let mut case2_counts = Vec::new();
    let mut residual: BTreeSet<Vec<i64>> = BTreeSet::new();
    if eq.s == 0 {
        // Trivial quotient: the zero vector is the only candidate and the
        // box scan over the fixed directions covers everything.
        for _ in 0..=schedule.thresholds.len() {
            case2_counts.push(1);
        }
        residual.insert(Vec::new());
    } else {
        let mut ln_s = ln_s0.clone();
        for &s in &schedule.thresholds {
            let half_s = Float::with_val(bits, s / 2.0);
            let w_reg = Float::with_val(bits, 0.5) / &ln_s;
            let mut step_union: HashSet<Vec<i64>> = HashSet::new();
            for i in 0..eq.m {
                for sign in [1i64, -1] {
                    let mut rows = q_rows.clone();
                    rows.push(
                        q_rows[i]
                            .iter()
                            .map(|v| Float::with_val(bits, v * sign))
                            .collect(),
                    );
                    let mut offs = q_offs.clone();
                    offs.push(Float::with_val(bits, &q_offs[i] * sign));
                    let mut weights = vec![w_reg.clone(); eq.m];
                    weights.push(half_s.clone());
                    let (pts, _) =
                        slab_points(&rows, &offs, &weights, (eq.m + 1) as f64, cap, bits)?;
                    step_union.extend(pts);
                }
            }
            case2_counts.push(step_union.len());
            residual.extend(step_union);
            ln_s = Float::with_val(bits, s).ln();
        }
        let w = Float::with_val(bits, 0.5) / &ln_s;
        let weights = vec![w; eq.m];
        let (pts, _) = slab_points(&q_rows, &q_offs, &weights, eq.m as f64, cap, bits)?;
        case2_counts.push(pts.len());
        residual.extend(pts);
    }
    let residual: Vec<Vec<i64>> = residual.into_iter().collect();

    // Box scan over the involution-fixed directions above each residual
    // vector, pre-filtered by the first prime.
    let section = kernel_section(&eq.kernel)?;
    let scans: Vec<ScanStats> = residual
        .par_iter()
        .map(|b| scan_residual(eq, plan, &section, b, e_r))
        .collect();
    let scanned: u64 = scans.iter().map(|s| s.scanned).sum();
    let mut survivors: HashSet<Vec<i64>> = HashSet::new();
    for s in scans {
        survivors.extend(s.survivors);
    }
    let first_prime_survivors = survivors.len() as u64;
    survivors.extend(case1_cands.iter().cloned());

    let combos = eq.sign_combos();
    let mut sieve_survivors = 0usize;
    let mut solutions: BTreeSet<UnitSolution> = BTreeSet::new();
    for a in &survivors {
        let mask = plan.mask_full(eq, a);
        if mask == 0 {
            continue;
        }
        sieve_survivors += 1;
        for (ci, &combo) in combos.iter().enumerate() {
            if mask & (1 << ci) == 0 {
                continue;
            }
            if eq.verify_exact(combo, a)? {
                let (sx, sy) = eq.solution_signs(combo, a);
                solutions.insert(UnitSolution {
                    sign_x: sx,
                    sign_y: sy,
                    exponents: a.clone(),
                });
            }
        }
    }

    Ok(ScheduleOutcome {
        ln_s0: ln_s0.to_f64(),
        case1_counts,
        case2_counts,
        residual,
        case1_candidates: case1_cands.len(),
        scanned,
        first_prime_survivors,
        sieve_survivors,
        solutions: solutions.into_iter().collect(),
    })
}
