//! Cubic resolvent classification and the quartic relative Thue step.
//!
//! The resolvent norm equation `F(U,V) = ε·ν` over the base order is handled
//! according to how the cubic `F(U,1)` factors there: three roots give a
//! two-term unit equation over the base order itself, exactly one root gives
//! one over a quadratic extension, and no root would need unit data for a
//! cubic extension.  Verified unit-equation solutions are pulled back to
//! pairs `(U,V)`, normalized so the linear form at the split root is the
//! plain divisor representative, and every pair is re-checked exactly against
//! the norm of the right-hand side.  The final stage bounds the solutions of
//! the induced quartic relative norm equation inside a ball of the base
//! order, which turns it into a finite exact search.

use crate::order::{make_context, Elem, OrderContext};
use crate::poly;
use crate::units::UnitSystem;
use crate::unitsolve::{
    run_schedule, EnumerationSchedule, EquationAlgebra, ScheduleOutcome, SievePlan, UnitEquation,
};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Complex, Float};
use std::collections::{BTreeSet, HashMap};

/// Factorization shape of the resolvent cubic over the base order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResolventCase {
    /// Three distinct roots in the base order.
    SplitsCompletely,
    /// No root in the base order.
    Irreducible,
    /// Exactly one root; the cofactor is an irreducible quadratic.
    LinearTimesQuadratic,
}

/// The classified resolvent norm equation `F(U,V) = ε·ν`.
///
/// `F(U,V) = U³ + c₂U²V + c₁UV² + c₀V³` with coefficients `[c₂, c₁, c₀]`
/// in the base order; the right-hand side runs over unit multiples of the
/// representatives in `nu_reps`, each of absolute norm `rhs_norm`.
#[derive(Clone, Debug)]
pub struct ResolventEquation {
    pub coeffs: [Elem; 3],
    pub rhs_norm: BigInt,
    pub nu_reps: Vec<Elem>,
    pub case: ResolventCase,
    /// Roots of `F(U,1)` found in the base order, sorted by coordinates.
    pub roots: Vec<Elem>,
    /// For [`ResolventCase::LinearTimesQuadratic`]: `[q₁, q₀]` with
    /// `F(U,1) = (U − λ)(U² + q₁U + q₀)`.
    pub quadratic: Option<[Elem; 2]>,
}

/// `x³ + c₂x² + c₁x + c₀` evaluated exactly in the order.
fn eval_cubic(m: &OrderContext, coeffs: &[Elem; 3], x: &Elem) -> Elem {
    let mut acc = m.add(x, &coeffs[0]);
    acc = m.add(&m.mul(&acc, x), &coeffs[1]);
    m.add(&m.mul(&acc, x), &coeffs[2])
}

/// The homogeneous resolvent `U³ + c₂U²V + c₁UV² + c₀V³`, exactly.
pub fn eval_resolvent(m: &OrderContext, coeffs: &[Elem; 3], u: &Elem, v: &Elem) -> Elem {
    let v2 = m.mul(v, v);
    let mut acc = m.add(u, &m.mul(&coeffs[0], v));
    acc = m.add(&m.mul(&acc, u), &m.mul(&coeffs[1], &v2));
    m.add(&m.mul(&acc, u), &m.mul(&coeffs[2], &m.mul(&v2, v)))
}

/// Round prescribed embedding values to an order element, or report how far
/// from integral the rounding was.
fn round_coords(ctx: &OrderContext, vals: &[Complex]) -> (Elem, f64) {
    let coords = ctx.coords_from_embeddings(vals);
    let mut elem = Vec::with_capacity(coords.len());
    let mut worst = 0f64;
    for c in &coords {
        let (n, dist) = crate::bigfloat::round_to_big(c);
        worst = worst.max(dist.to_f64());
        elem.push(n);
    }
    (elem, worst)
}

/// Largest embedding-value error of a proposed element against target values.
fn embedding_residual(ctx: &OrderContext, e: &Elem, vals: &[Complex]) -> Float {
    let bits = ctx.prec.bits();
    let mut worst = Float::with_val(bits, 0);
    for (j, v) in vals.iter().enumerate() {
        let d = Complex::with_val(bits, ctx.embed(e, j) - v)
            .abs()
            .real()
            .clone();
        if d > worst {
            worst = d;
        }
    }
    worst
}

/// Roots of `F(U,1)` in the base order, found by rounding consistent choices
/// of numeric roots across all embeddings and verifying exactly.
///
/// Each accepted root must satisfy the cubic exactly in the order *and* sit
/// within `2^(−bits/4)` of the numeric roots; an exact match with a large
/// numeric residual, or a near-integral rounding that fails the exact check,
/// escalates the working precision before giving up.
fn integral_roots(m: &OrderContext, coeffs: &[Elem; 3]) -> Result<Vec<Elem>> {
    let mut scratch;
    let mut ctx = m;
    let mut prec = m.prec;
    for attempt in 0..3 {
        if attempt > 0 {
            prec = prec.double();
            scratch = make_context(&m.defining_polynomial, prec)?;
            ctx = &scratch;
        }
        let bits = prec.bits();
        let accept_tol = Float::with_val(bits, 2f64).pow(-(i32::try_from(bits).unwrap() / 4));
        let ambiguous_tol = 1e-10;
        let n = ctx.degree;
        let mut per_embedding: Vec<Vec<Complex>> = Vec::with_capacity(n);
        for i in 0..n {
            let cs = [
                ctx.embed(&coeffs[2], i),
                ctx.embed(&coeffs[1], i),
                ctx.embed(&coeffs[0], i),
                Complex::with_val(bits, 1),
            ];
            per_embedding.push(poly::complex_roots_c(&cs, prec));
        }
        let mut found: BTreeSet<Elem> = BTreeSet::new();
        let mut rounded_to_root: BTreeSet<Elem> = BTreeSet::new();
        let mut ambiguous = false;
        let combos = 3usize.pow(u32::try_from(n).expect("degree fits u32"));
        for combo in 0..combos {
            let mut idx = combo;
            let vals: Vec<Complex> = (0..n)
                .map(|i| {
                    let v = per_embedding[i][idx % 3].clone();
                    idx /= 3;
                    v
                })
                .collect();
            let (cand, dist) = round_coords(ctx, &vals);
            if dist > 0.25 {
                continue;
            }
            let exact = eval_cubic(m, coeffs, &cand).iter().all(BigInt::is_zero);
            if exact {
                // A mixed assignment can round into a genuine root too; only
                // the assignment matching the element's own embeddings (tiny
                // residual) certifies it.
                rounded_to_root.insert(cand.clone());
                if embedding_residual(ctx, &cand, &vals) <= accept_tol {
                    found.insert(cand);
                }
            } else if dist < ambiguous_tol {
                ambiguous = true;
            }
        }
        if rounded_to_root.difference(&found).next().is_some() {
            ambiguous = true;
        }
        if ambiguous {
            if attempt == 2 {
                return Err(Error::Precision(
                    "root rounding stayed inconsistent after raising precision".into(),
                ));
            }
            continue;
        }
        if found.len() == 2 {
            let mut third = m.neg(&coeffs[0]);
            for r in &found {
                third = m.sub(&third, r);
            }
            if eval_cubic(m, coeffs, &third).iter().all(BigInt::is_zero) {
                found.insert(third);
            }
        }
        if !found.is_empty() || attempt > 0 {
            return Ok(found.into_iter().collect());
        }
    }
    Ok(Vec::new())
}

/// Classify the resolvent equation by factoring its cubic over the base
/// order and extract the split data.
///
/// Errors when the cubic has a repeated root in the order: the pullback
/// needs three distinct linear forms.
pub fn classify_resolvent(
    m: &OrderContext,
    coeffs: [Elem; 3],
    rhs_norm: BigInt,
    nu_reps: Vec<Elem>,
) -> Result<ResolventEquation> {
    let roots = integral_roots(m, &coeffs)?;
    for lam in &roots {
        let q1 = m.add(&coeffs[0], lam);
        let q0 = m.add(&coeffs[1], &m.mul(lam, &q1));
        let at_lam = m.add(&q0, &m.mul(lam, &m.add(&q1, lam)));
        if at_lam.iter().all(BigInt::is_zero) {
            return Err(Error::Verification(
                "resolvent cubic has a repeated root over the base order".into(),
            ));
        }
    }
    let (case, quadratic) = match roots.len() {
        0 => (ResolventCase::Irreducible, None),
        3 => (ResolventCase::SplitsCompletely, None),
        1 => {
            let lam = &roots[0];
            let q1 = m.add(&coeffs[0], lam);
            let q0 = m.add(&coeffs[1], &m.mul(lam, &q1));
            let rem = m.add(&coeffs[2], &m.mul(lam, &q0));
            if !rem.iter().all(BigInt::is_zero) {
                return Err(Error::Verification(
                    "division by the linear factor left a nonzero remainder".into(),
                ));
            }
            (ResolventCase::LinearTimesQuadratic, Some([q1, q0]))
        }
        k => {
            return Err(Error::Verification(format!(
                "cubic reported {k} distinct roots over the base order"
            )))
        }
    };
    Ok(ResolventEquation {
        coeffs,
        rhs_norm,
        nu_reps,
        case,
        roots,
        quadratic,
    })
}

/// Base-order data for a completely split resolvent: the unit generators of
/// the order and, per right-hand-side representative, the divisor triple of
/// the three linear forms.
#[derive(Clone, Debug)]
pub struct SplitFieldData {
    pub units: Vec<Elem>,
    pub delta_triples: Vec<[Elem; 3]>,
}

/// Quadratic-extension data for a resolvent with exactly one root: the
/// extension order (paired with the base), its verified unit system, the
/// involution image of its generator, and per representative the divisor
/// pair (base form, extension form).
#[derive(Clone, Debug)]
pub struct QuadraticExtensionData {
    pub g: OrderContext,
    pub units: UnitSystem,
    pub sigma_gen: Elem,
    pub delta_pairs: Vec<(Elem, Elem)>,
}

/// Field data needed to turn a classified resolvent into unit equations.
#[derive(Clone, Debug)]
pub enum CasePayload {
    Split(SplitFieldData),
    Quadratic(QuadraticExtensionData),
}

/// A resolvent with one root, prepared as a unit equation over the
/// quadratic extension.
pub struct CaseCEquation {
    /// Root of the quadratic cofactor in the extension order.
    pub root: Elem,
    pub sigma_root: Elem,
    /// The base-order root of the cubic, lifted to the extension.
    pub lambda: Elem,
    pub delta_base: Elem,
    pub delta_ext: Elem,
    pub sigma_delta_ext: Elem,
    pub equation: UnitEquation,
}

/// Image of an extension element under the involution `gen ↦ sigma_gen`.
fn involution(g: &OrderContext, sigma_gen: &Elem, x: &Elem) -> Elem {
    let mut acc = g.zero();
    let mut pw = g.one();
    for c in x {
        acc = g.add(&acc, &g.scalar_mul(c, &pw));
        pw = g.mul(&pw, sigma_gen);
    }
    acc
}

/// Find the root of the quadratic cofactor inside the extension order and
/// assemble the two-term unit equation of the quotient of linear forms.
///
/// The root is located by assigning the two numeric roots of the cofactor to
/// the two extension embeddings over each base embedding, rounding, and
/// verifying the quadratic exactly; its involution image must be the other
/// root.  Errors when no assignment verifies, i.e. the supplied extension
/// does not split the cofactor.
pub fn build_case_c(
    res: &ResolventEquation,
    m: &OrderContext,
    ext: &QuadraticExtensionData,
    delta_base: &Elem,
    delta_ext: &Elem,
) -> Result<CaseCEquation> {
    if res.case != ResolventCase::LinearTimesQuadratic {
        return Err(Error::Verification(
            "quadratic-extension construction needs a resolvent with exactly one root".into(),
        ));
    }
    let g = &ext.g;
    let pairing = g.base_pairing.as_ref().ok_or_else(|| {
        Error::Verification("extension order is not paired with the base order".into())
    })?;
    let quad = res.quadratic.as_ref().expect("one-root case stores its cofactor");
    let q1 = g.lift_from_base(&quad[0])?;
    let q0 = g.lift_from_base(&quad[1])?;
    let bits = g.prec.bits();
    let accept_tol = Float::with_val(bits, 2f64).pow(-(i32::try_from(bits).unwrap() / 4));
    let mut slot_pairs: Vec<[usize; 2]> = Vec::with_capacity(m.degree);
    for i in 0..m.degree {
        let js: Vec<usize> = (0..g.degree)
            .filter(|&j| pairing.embedding_map[j] == i)
            .collect();
        if js.len() != 2 {
            return Err(Error::Verification(format!(
                "base embedding {i} is covered by {} extension embeddings, expected 2",
                js.len()
            )));
        }
        slot_pairs.push([js[0], js[1]]);
    }
    let mut pair_roots: Vec<Vec<Complex>> = Vec::with_capacity(m.degree);
    for i in 0..m.degree {
        let cs = [
            m.embed(&quad[1], i),
            m.embed(&quad[0], i),
            Complex::with_val(bits, 1),
        ];
        let roots = poly::complex_roots_c(&cs, g.prec);
        pair_roots.push(roots);
    }
    let verify = |t: &Elem| -> bool {
        let val = g.add(&g.mul(t, &g.add(t, &q1)), &q0);
        val.iter().all(BigInt::is_zero)
    };
    let mut root = None;
    'assign: for mask in 0..(1usize << m.degree) {
        let mut vals = vec![Complex::with_val(bits, 0); g.degree];
        for (i, slots) in slot_pairs.iter().enumerate() {
            let bit = (mask >> i) & 1;
            vals[slots[0]] = pair_roots[i][bit].clone();
            vals[slots[1]] = pair_roots[i][1 - bit].clone();
        }
        let (cand, dist) = round_coords(g, &vals);
        if dist > 0.25 || !verify(&cand) {
            continue;
        }
        if embedding_residual(g, &cand, &vals) > accept_tol {
            continue 'assign;
        }
        root = Some(cand);
        break;
    }
    let root = root.ok_or_else(|| {
        Error::Verification(
            "the supplied extension does not split the quadratic cofactor of the resolvent".into(),
        )
    })?;
    let sigma_root = involution(g, &ext.sigma_gen, &root);
    if sigma_root == root || !verify(&sigma_root) {
        return Err(Error::Verification(
            "involution image of the cofactor root is not the conjugate root".into(),
        ));
    }
    let sum = g.add(&root, &sigma_root);
    let prod = g.mul(&root, &sigma_root);
    if g.add(&sum, &q1).iter().any(|c| !c.is_zero()) || g.sub(&prod, &q0).iter().any(|c| !c.is_zero())
    {
        return Err(Error::Verification(
            "cofactor roots do not reproduce its coefficients".into(),
        ));
    }
    let lambda = g.lift_from_base(&res.roots[0])?;
    let delta_b = g.lift_from_base(delta_base)?;
    let sigma_delta_ext = involution(g, &ext.sigma_gen, delta_ext);
    let a = g.mul(&g.sub(&lambda, &root), &sigma_delta_ext);
    let sigma_a = g.mul(&g.sub(&lambda, &sigma_root), delta_ext);
    let c = g.mul(&g.sub(&sigma_root, &root), &delta_b);
    let sigma_c = g.mul(&g.sub(&root, &sigma_root), &delta_b);
    let equation = UnitEquation::new_single(
        g.clone(),
        ext.units.clone(),
        ext.sigma_gen.clone(),
        a,
        sigma_a,
        c,
        sigma_c,
    )?;
    Ok(CaseCEquation {
        root,
        sigma_root,
        lambda,
        delta_base: delta_b,
        delta_ext: delta_ext.clone(),
        sigma_delta_ext,
        equation,
    })
}

/// Knobs for driving the unit-equation engine from the resolvent layer.
pub struct ResolventSolverConfig<'a> {
    /// Reduced exponent bound fed to the enumeration schedule.
    pub exponent_bound: i64,
    pub schedule: &'a EnumerationSchedule,
    pub sieve_primes: &'a [u64],
    /// Hard cap on enumerated lattice points per ellipsoid.
    pub cap: usize,
}

/// Resolvent solutions together with the per-branch engine statistics.
pub struct ResolventSolutions {
    /// Pairs `(U, V)` in the base order, one representative per unit orbit
    /// (the linear form at the split root normalized to its divisor), with
    /// the overall sign canonicalized.
    pub pairs: Vec<(Elem, Elem)>,
    pub runs: Vec<ScheduleOutcome>,
}

/// Flip the pair's sign so its first nonzero coordinate is positive.
fn canonical_pair(m: &OrderContext, u: Elem, v: Elem) -> (Elem, Elem) {
    let lead = u.iter().chain(v.iter()).find(|c| !c.is_zero());
    if let Some(c) = lead {
        if c.is_negative() {
            return (m.neg(&u), m.neg(&v));
        }
    }
    (u, v)
}

fn signed(m: &OrderContext, sign: i64, e: &Elem) -> Elem {
    if sign >= 0 {
        e.clone()
    } else {
        m.neg(e)
    }
}

/// Solve the classified resolvent equation: build the unit equation of each
/// divisor branch, run the enumeration schedule, pull the verified solutions
/// back to pairs `(U,V)`, and keep those that are integral over the base.
///
/// Every emitted pair is re-checked exactly: `|N(F(U,V))|` must equal the
/// declared right-hand-side norm.  A resolvent with no root aborts, since the
/// field data format carries no cubic-extension unit system.
pub fn solve_resolvent(
    res: &ResolventEquation,
    m: &OrderContext,
    payload: Option<&CasePayload>,
    cfg: &ResolventSolverConfig,
) -> Result<ResolventSolutions> {
    if res.nu_reps.is_empty() {
        return Ok(ResolventSolutions {
            pairs: Vec::new(),
            runs: Vec::new(),
        });
    }
    for rep in &res.nu_reps {
        if m.norm(rep).abs() != res.rhs_norm.abs() {
            return Err(Error::Verification(
                "right-hand-side representative has the wrong norm".into(),
            ));
        }
    }
    let mut pairs: BTreeSet<(Elem, Elem)> = BTreeSet::new();
    let mut runs = Vec::new();
    match res.case {
        ResolventCase::Irreducible => {
            return Err(Error::MissingData("Case B data required".into()));
        }
        ResolventCase::SplitsCompletely => {
            let data = match payload {
                Some(CasePayload::Split(d)) => d,
                _ => {
                    return Err(Error::MissingData(
                        "completely split resolvent needs the base-order unit data".into(),
                    ))
                }
            };
            if data.delta_triples.len() != res.nu_reps.len() {
                return Err(Error::Verification(
                    "one divisor triple per right-hand-side representative is required".into(),
                ));
            }
            let [l1, l2, l3] = [&res.roots[0], &res.roots[1], &res.roots[2]];
            for (rep, deltas) in res.nu_reps.iter().zip(&data.delta_triples) {
                let prod = m.mul(&m.mul(&deltas[0], &deltas[1]), &deltas[2]);
                if m.norm(&prod).abs() != m.norm(rep).abs() {
                    return Err(Error::Verification(
                        "divisor triple does not have the norm of its representative".into(),
                    ));
                }
                let a = m.mul(&m.sub(l1, l2), &deltas[2]);
                let b = m.mul(&m.sub(l3, l1), &deltas[1]);
                let c = m.mul(&m.sub(l3, l2), &deltas[0]);
                let eq = UnitEquation::new_paired(m.clone(), data.units.clone(), a, b, c)?;
                let plan = SievePlan::new(&eq, cfg.sieve_primes)?;
                let out = run_schedule(&eq, cfg.exponent_bound, cfg.schedule, &plan, cfg.cap)?;
                let rb = data.units.len();
                for sol in &out.solutions {
                    let x = UnitEquation::power_product(m, &data.units, &sol.exponents[..rb])?;
                    let y = UnitEquation::power_product(m, &data.units, &sol.exponents[rb..])?;
                    let xs = signed(m, sol.sign_x, &x);
                    let ys = signed(m, sol.sign_y, &y);
                    let num = m.sub(&m.mul(&deltas[2], &xs), &m.mul(&deltas[1], &ys));
                    let den = m.sub(l2, l3);
                    let v = match m.divide_exact(&num, &den) {
                        Ok(v) => v,
                        Err(_) => continue,
                    };
                    let u = m.add(&m.mul(&deltas[2], &xs), &m.mul(l3, &v));
                    let f = eval_resolvent(m, &res.coeffs, &u, &v);
                    if m.norm(&f).abs() != res.rhs_norm.abs() {
                        return Err(Error::Verification(
                            "recovered pair does not match the right-hand-side norm".into(),
                        ));
                    }
                    pairs.insert(canonical_pair(m, u, v));
                }
                runs.push(out);
            }
        }
        ResolventCase::LinearTimesQuadratic => {
            let data = match payload {
                Some(CasePayload::Quadratic(d)) => d,
                _ => {
                    return Err(Error::MissingData(
                        "one-root resolvent needs the quadratic-extension data".into(),
                    ))
                }
            };
            if data.delta_pairs.len() != res.nu_reps.len() {
                return Err(Error::Verification(
                    "one divisor pair per right-hand-side representative is required".into(),
                ));
            }
            let g = &data.g;
            for (rep, dp) in res.nu_reps.iter().zip(&data.delta_pairs) {
                let cce = build_case_c(res, m, data, &dp.0, &dp.1)?;
                let rel_norm = g.mul(&cce.delta_ext, &cce.sigma_delta_ext);
                let rel_norm_base = g.project_to_base(&rel_norm, m).ok_or_else(|| {
                    Error::Verification("extension divisor norm is not in the base order".into())
                })?;
                let total = m.mul(&dp.0, &rel_norm_base);
                if m.norm(&total).abs() != m.norm(rep).abs() {
                    return Err(Error::Verification(
                        "divisor pair does not have the norm of its representative".into(),
                    ));
                }
                let plan = SievePlan::new(&cce.equation, cfg.sieve_primes)?;
                let out =
                    run_schedule(&cce.equation, cfg.exponent_bound, cfg.schedule, &plan, cfg.cap)?;
                let units = match &cce.equation.algebra {
                    EquationAlgebra::Single { units, .. } => units,
                    EquationAlgebra::Paired { .. } => unreachable!("built as a single-field equation"),
                };
                for sol in &out.solutions {
                    let x = units.element_of_exponent(g, &sol.exponents)?;
                    let (_, conj) = units.conjugate_exponent(&sol.exponents);
                    let xc = units.element_of_exponent(g, &conj)?;
                    let xs = signed(g, sol.sign_x, &x);
                    let sxs = signed(g, sol.sign_y, &xc);
                    let num = g.sub(
                        &g.mul(&cce.delta_ext, &sxs),
                        &g.mul(&cce.sigma_delta_ext, &xs),
                    );
                    let den = g.sub(&cce.sigma_root, &cce.root);
                    let vg = match g.divide_exact(&num, &den) {
                        Ok(v) => v,
                        Err(_) => continue,
                    };
                    let ug = g.add(&g.mul(&cce.delta_ext, &sxs), &g.mul(&cce.root, &vg));
                    let (u, v) = match (g.project_to_base(&ug, m), g.project_to_base(&vg, m)) {
                        (Some(u), Some(v)) => (u, v),
                        _ => continue,
                    };
                    let f = eval_resolvent(m, &res.coeffs, &u, &v);
                    if m.norm(&f).abs() != res.rhs_norm.abs() {
                        return Err(Error::Verification(
                            "recovered pair does not match the right-hand-side norm".into(),
                        ));
                    }
                    pairs.insert(canonical_pair(m, u, v));
                }
                runs.push(out);
            }
        }
    }
    Ok(ResolventSolutions {
        pairs: pairs.into_iter().collect(),
        runs,
    })
}

/// The quartic relative norm equation `N(X − ξY) = ν` over the base order,
/// with the numeric data of its small-solution bound.
///
/// `coeffs` are `[a₁, a₂, a₃, a₄]` of the relative polynomial
/// `x⁴ + a₁x³ + a₂x² + a₃x + a₄`; the equation reads
/// `X⁴ + a₁X³Y + a₂X²Y² + a₃XY³ + a₄Y⁴ = ν` for each listed `ν`.
pub struct QuarticThueInstance {
    pub base: OrderContext,
    pub coeffs: [Elem; 4],
    pub rhs: Vec<Elem>,
    /// Reciprocal of the smallest `|Im|` over all roots of all embedded
    /// quartics.
    pub c0: Float,
    /// Largest absolute value of a root of an embedded quartic.
    pub root_size: Float,
}

/// One solution of the quartic equation, tagged with the right-hand side it
/// matches.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct QuarticSolution {
    pub rhs_index: usize,
    pub x: Elem,
    pub y: Elem,
}

/// Build a quartic instance, verifying that every embedded quartic is
/// totally complex (no root close to the real axis) and that no right-hand
/// side is zero.
pub fn quartic_instance(
    base: &OrderContext,
    coeffs: [Elem; 4],
    rhs: Vec<Elem>,
) -> Result<QuarticThueInstance> {
    for nu in &rhs {
        if nu.iter().all(BigInt::is_zero) {
            return Err(Error::Verification("right-hand side is zero".into()));
        }
    }
    let bits = base.prec.bits();
    let real_tol = Float::with_val(bits, 2f64).pow(-(i32::try_from(bits).unwrap() / 2));
    let mut min_im: Option<Float> = None;
    let mut root_size = Float::with_val(bits, 0);
    for i in 0..base.degree {
        let cs = [
            base.embed(&coeffs[3], i),
            base.embed(&coeffs[2], i),
            base.embed(&coeffs[1], i),
            base.embed(&coeffs[0], i),
            Complex::with_val(bits, 1),
        ];
        for root in poly::complex_roots_c(&cs, base.prec) {
            let im = root.imag().clone().abs();
            if im < real_tol {
                return Err(Error::Verification(format!(
                    "embedded quartic at base embedding {i} has a real root"
                )));
            }
            let sz = root.abs().real().clone();
            if sz > root_size {
                root_size = sz;
            }
            min_im = Some(match min_im {
                Some(cur) if cur <= im => cur,
                _ => im,
            });
        }
    }
    let min_im = min_im.ok_or_else(|| Error::Verification("base order has no embeddings".into()))?;
    let c0 = Float::with_val(bits, 1) / min_im;
    Ok(QuarticThueInstance {
        base: base.clone(),
        coeffs,
        rhs,
        c0,
        root_size,
    })
}

impl QuarticThueInstance {
    /// Solution bound for one right-hand side: `size(ν)^{1/4}·(1 + c₀·|ξ|)`.
    pub fn rhs_bound(&self, k: usize) -> Float {
        let bits = self.base.prec.bits();
        let quarter = self.base.size(&self.rhs[k]).root(4);
        let factor = Float::with_val(bits, 1) + self.c0.clone() * self.root_size.clone();
        quarter * factor
    }

    /// Largest [`Self::rhs_bound`] over all right-hand sides.
    pub fn solution_bound(&self) -> Float {
        let bits = self.base.prec.bits();
        let mut best = Float::with_val(bits, 0);
        for k in 0..self.rhs.len() {
            let b = self.rhs_bound(k);
            if b > best {
                best = b;
            }
        }
        best
    }
}

/// The relative norm form `X⁴ + a₁X³Y + a₂X²Y² + a₃XY³ + a₄Y⁴`, exactly.
pub fn quartic_norm_form(base: &OrderContext, coeffs: &[Elem; 4], x: &Elem, y: &Elem) -> Elem {
    let y2 = base.mul(y, y);
    let y3 = base.mul(&y2, y);
    let y4 = base.mul(&y2, &y2);
    let mut acc = base.add(x, &base.mul(&coeffs[0], y));
    acc = base.add(&base.mul(&acc, x), &base.mul(&coeffs[1], &y2));
    acc = base.add(&base.mul(&acc, x), &base.mul(&coeffs[2], &y3));
    base.add(&base.mul(&acc, x), &base.mul(&coeffs[3], &y4))
}

/// Exhaust all solutions of the quartic equation inside the theorem ball.
///
/// Enumerates the base-order elements of size at most the solution bound and
/// tests the norm form exactly on every ordered pair; the bound covers both
/// coordinates of any solution, so nothing is excluded.  Output is sorted by
/// (right-hand side, X, Y).
pub fn quartic_small_solutions(
    inst: &QuarticThueInstance,
    cap: usize,
) -> Result<Vec<QuarticSolution>> {
    if inst.rhs.is_empty() {
        return Ok(Vec::new());
    }
    let base = &inst.base;
    let bound = inst.solution_bound();
    let ball = base.enumerate_bounded(&bound, cap)?;
    let mut targets: HashMap<&Elem, Vec<usize>> = HashMap::new();
    for (k, nu) in inst.rhs.iter().enumerate() {
        targets.entry(nu).or_default().push(k);
    }
    let zero = [
        inst.coeffs[0].iter().all(BigInt::is_zero),
        inst.coeffs[1].iter().all(BigInt::is_zero),
        inst.coeffs[2].iter().all(BigInt::is_zero),
        inst.coeffs[3].iter().all(BigInt::is_zero),
    ];
    let pow4 = |e: &Elem| {
        let e2 = base.mul(e, e);
        base.mul(&e2, &e2)
    };
    let y_terms: Vec<(Elem, Option<Elem>)> = ball
        .par_iter()
        .map(|y| {
            let tail = if zero[3] {
                None
            } else {
                Some(base.mul(&inst.coeffs[3], &pow4(y)))
            };
            (y.clone(), tail)
        })
        .collect();
    let mut hits: Vec<QuarticSolution> = ball
        .par_iter()
        .flat_map_iter(|x| {
            let x4 = pow4(x);
            let mut local = Vec::new();
            for (y, tail) in &y_terms {
                let mut val = x4.clone();
                if !(zero[0] && zero[1] && zero[2]) {
                    let x2 = base.mul(x, x);
                    let y2 = base.mul(y, y);
                    if !zero[0] {
                        val = base.add(&val, &base.mul(&base.mul(&inst.coeffs[0], &base.mul(&x2, x)), y));
                    }
                    if !zero[1] {
                        val = base.add(&val, &base.mul(&base.mul(&inst.coeffs[1], &x2), &y2));
                    }
                    if !zero[2] {
                        val = base.add(&val, &base.mul(&base.mul(&inst.coeffs[2], x), &base.mul(&y2, y)));
                    }
                }
                if let Some(t) = tail {
                    val = base.add(&val, t);
                }
                if let Some(ks) = targets.get(&val) {
                    for &k in ks {
                        local.push(QuarticSolution {
                            rhs_index: k,
                            x: x.clone(),
                            y: y.clone(),
                        });
                    }
                }
            }
            local
        })
        .collect();
    hits.sort();
    Ok(hits)
}

/// A signed unit-translate of the base right-hand side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhsRep {
    pub sign: i64,
    pub exponents: Vec<i64>,
    pub value: Elem,
}

/// The `2·kʳ` signed representatives `±ν₀·∏εᵢ^{ℓᵢ}` with `ℓᵢ ∈ [−1, k−2]`,
/// one from each class of right-hand sides modulo `k`-th powers of units.
pub fn unit_normalize_rhs(
    base: &OrderContext,
    rhs0: &Elem,
    units: &[Elem],
    k: u32,
) -> Result<Vec<RhsRep>> {
    if k < 2 {
        return Err(Error::Verification(
            "unit normalization needs exponent modulus at least 2".into(),
        ));
    }
    let inverses: Vec<Elem> = units
        .iter()
        .map(|u| base.inverse_unit(u))
        .collect::<Result<_>>()?;
    let r = units.len();
    let span = i64::from(k);
    let total = (span as usize).pow(u32::try_from(r).expect("unit count fits u32"));
    let mut out = Vec::with_capacity(2 * total);
    for combo in 0..total {
        let mut idx = combo;
        let mut exps = Vec::with_capacity(r);
        let mut value = rhs0.clone();
        for i in 0..r {
            let l = (idx % span as usize) as i64 - 1;
            idx /= span as usize;
            exps.push(l);
            let factor = if l >= 0 { &units[i] } else { &inverses[i] };
            for _ in 0..l.unsigned_abs() {
                value = base.mul(&value, factor);
            }
        }
        out.push(RhsRep {
            sign: 1,
            exponents: exps.clone(),
            value: value.clone(),
        });
        out.push(RhsRep {
            sign: -1,
            exponents: exps,
            value: base.neg(&value),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigfloat::Prec;
    use crate::fixtures::{cubic_base, cubic_base_units, paired_sextic, reference_system};
    use num_traits::One;
    use crate::order::{elem_from_i64, make_context};
    use crate::poly::IntPoly;
    use rand::{Rng, SeedableRng};

    fn int_elem(m: &OrderContext, k: i64) -> Elem {
        m.from_int(&BigInt::from(k))
    }

    fn real_quadratic() -> OrderContext {
        make_context(&IntPoly::from_i64(&[-2, 0, 1]), Prec::new(60)).unwrap()
    }

    fn classified(m: &OrderContext, cs: [i64; 3]) -> Result<ResolventEquation> {
        let coeffs = [int_elem(m, cs[0]), int_elem(m, cs[1]), int_elem(m, cs[2])];
        classify_resolvent(m, coeffs, BigInt::one(), vec![m.one()])
    }

    #[test]
    fn classify_splits_completely_with_integer_roots() {
        let m = cubic_base();
        let res = classified(&m, [-6, 11, -6]).unwrap();
        assert_eq!(res.case, ResolventCase::SplitsCompletely);
        let expect: Vec<Elem> = (1..=3).map(|k| int_elem(&m, k)).collect();
        assert_eq!(res.roots, expect);
        assert!(res.quadratic.is_none());
    }

    #[test]
    fn classify_one_root_with_quadratic_cofactor() {
        let m = cubic_base();
        let mu = elem_from_i64(&[0, 1, 0]);
        let coeffs = [m.zero(), m.scalar_mul(&BigInt::from(-4), &mu), m.zero()];
        let res = classify_resolvent(&m, coeffs, BigInt::one(), vec![m.one()]).unwrap();
        assert_eq!(res.case, ResolventCase::LinearTimesQuadratic);
        assert_eq!(res.roots, vec![m.zero()]);
        let quad = res.quadratic.unwrap();
        assert_eq!(quad[0], m.zero());
        assert_eq!(quad[1], m.scalar_mul(&BigInt::from(-4), &mu));
    }

    #[test]
    fn classify_irreducible_cubic() {
        let m = cubic_base();
        let res = classified(&m, [0, 0, -2]).unwrap();
        assert_eq!(res.case, ResolventCase::Irreducible);
        assert!(res.roots.is_empty());
    }

    #[test]
    fn classify_rejects_repeated_roots() {
        let m = cubic_base();
        assert!(matches!(
            classified(&m, [-4, 5, -2]),
            Err(Error::Verification(_))
        ));
    }

    #[test]
    fn factorization_reexpands_exactly() {
        let m = cubic_base();
        let split = classified(&m, [-6, 11, -6]).unwrap();
        let [l1, l2, l3] = [&split.roots[0], &split.roots[1], &split.roots[2]];
        let sum = m.add(&m.add(l1, l2), l3);
        let sym2 = m.add(
            &m.add(&m.mul(l1, l2), &m.mul(l1, l3)),
            &m.mul(l2, l3),
        );
        let prod = m.mul(&m.mul(l1, l2), l3);
        assert_eq!(split.coeffs[0], m.neg(&sum));
        assert_eq!(split.coeffs[1], sym2);
        assert_eq!(split.coeffs[2], m.neg(&prod));

        let mu = elem_from_i64(&[0, 1, 0]);
        let coeffs = [m.zero(), m.scalar_mul(&BigInt::from(-4), &mu), m.zero()];
        let one_root = classify_resolvent(&m, coeffs, BigInt::one(), vec![m.one()]).unwrap();
        let lam = &one_root.roots[0];
        let quad = one_root.quadratic.as_ref().unwrap();
        assert_eq!(one_root.coeffs[0], m.sub(&quad[0], lam));
        assert_eq!(one_root.coeffs[1], m.sub(&quad[1], &m.mul(lam, &quad[0])));
        assert_eq!(one_root.coeffs[2], m.neg(&m.mul(lam, &quad[1])));
    }

    fn sextic_extension_data() -> (OrderContext, QuadraticExtensionData) {
        let m = cubic_base();
        let g = paired_sextic();
        let units = reference_system(&g);
        let data = QuadraticExtensionData {
            g: g.clone(),
            units,
            sigma_gen: elem_from_i64(&[0, -1, 0, 0, 0, 0]),
            delta_pairs: vec![(m.one(), g.one())],
        };
        (m, data)
    }

    #[test]
    fn case_c_construction_matches_the_sextic_pair() {
        let (m, data) = sextic_extension_data();
        let mu = elem_from_i64(&[0, 1, 0]);
        let coeffs = [m.zero(), m.scalar_mul(&BigInt::from(-4), &mu), m.zero()];
        let res = classify_resolvent(&m, coeffs, BigInt::one(), vec![m.one()]).unwrap();
        let g = &data.g;
        let cce = build_case_c(&res, &m, &data, &m.one(), &g.one()).unwrap();
        let sq = g.mul(&cce.root, &cce.root);
        assert_eq!(sq, elem_from_i64(&[0, 0, 4, 0, 0, 0]));
        assert_eq!(cce.sigma_root, g.neg(&cce.root));
        match &cce.equation.algebra {
            EquationAlgebra::Single { a, sigma_a, c, sigma_c, .. } => {
                assert_eq!(*a, g.neg(&cce.root));
                assert_eq!(*sigma_a, cce.root);
                assert_eq!(*c, g.scalar_mul(&BigInt::from(-2), &cce.root));
                assert_eq!(*sigma_c, g.scalar_mul(&BigInt::from(2), &cce.root));
            }
            EquationAlgebra::Paired { .. } => panic!("expected a single-field equation"),
        }
    }

    fn cyclotomic_pair() -> (OrderContext, QuadraticExtensionData) {
        let m = real_quadratic();
        let g = make_context(&IntPoly::from_i64(&[1, 0, 0, 0, 1]), Prec::new(60)).unwrap();
        let inj = vec![elem_from_i64(&[1, 0, 0, 0]), elem_from_i64(&[0, 1, 0, -1])];
        let g = g.with_base(&m, inj).unwrap();
        let units = UnitSystem::new(
            &g,
            vec![elem_from_i64(&[1, 1, 0, -1])],
            vec![vec![1]],
            vec![1],
        )
        .unwrap();
        let data = QuadraticExtensionData {
            g: g.clone(),
            units,
            sigma_gen: elem_from_i64(&[0, 0, 0, -1]),
            delta_pairs: vec![(m.one(), g.one())],
        };
        (m, data)
    }

    #[test]
    fn synthetic_quadratic_extension_roundtrip() {
        let (m, data) = cyclotomic_pair();
        let coeffs = [m.zero(), m.one(), m.zero()];
        let res = classify_resolvent(&m, coeffs, BigInt::one(), vec![m.one()]).unwrap();
        assert_eq!(res.case, ResolventCase::LinearTimesQuadratic);
        let g = &data.g;
        let cce = build_case_c(&res, &m, &data, &m.one(), &g.one()).unwrap();
        let sq = g.mul(&cce.root, &cce.root);
        assert_eq!(sq, g.neg(&g.one()));
        assert_eq!(cce.sigma_root, g.neg(&cce.root));

        let schedule = EnumerationSchedule::default();
        let cfg = ResolventSolverConfig {
            exponent_bound: 60,
            schedule: &schedule,
            sieve_primes: &[17, 41, 73, 89],
            cap: 2_000_000,
        };
        let payload = CasePayload::Quadratic(data.clone());
        let sols = solve_resolvent(&res, &m, Some(&payload), &cfg).unwrap();
        assert_eq!(sols.pairs, vec![(m.one(), m.zero())]);
    }

    #[test]
    fn split_case_solutions_over_real_quadratic() {
        let m = real_quadratic();
        let res = classified(&m, [0, -2, 0]).unwrap();
        assert_eq!(res.case, ResolventCase::SplitsCompletely);
        assert_eq!(
            res.roots,
            vec![
                elem_from_i64(&[0, -1]),
                elem_from_i64(&[0, 0]),
                elem_from_i64(&[0, 1]),
            ]
        );
        let one = m.one();
        let data = SplitFieldData {
            units: vec![elem_from_i64(&[1, 1])],
            delta_triples: vec![[one.clone(), one.clone(), one.clone()]],
        };
        let schedule = EnumerationSchedule::default();
        let cfg = ResolventSolverConfig {
            exponent_bound: 60,
            schedule: &schedule,
            sieve_primes: &[7, 17, 23, 31],
            cap: 2_000_000,
        };
        let payload = CasePayload::Split(data);
        let sols = solve_resolvent(&res, &m, Some(&payload), &cfg).unwrap();
        let expect = vec![
            (elem_from_i64(&[1, -1]), elem_from_i64(&[1, -1])),
            (elem_from_i64(&[1, 0]), elem_from_i64(&[0, 0])),
            (elem_from_i64(&[1, 1]), elem_from_i64(&[-1, -1])),
        ];
        assert_eq!(sols.pairs, expect);
        for (u, v) in &sols.pairs {
            let f = eval_resolvent(&m, &res.coeffs, u, v);
            assert_eq!(m.norm(&f).abs(), BigInt::one());
        }
    }

    #[test]
    fn solve_resolvent_with_no_rhs_is_empty() {
        let m = cubic_base();
        let coeffs = [m.zero(), int_elem(&m, -4), m.zero()];
        let res = classify_resolvent(&m, coeffs, BigInt::one(), Vec::new()).unwrap();
        let schedule = EnumerationSchedule::default();
        let cfg = ResolventSolverConfig {
            exponent_bound: 10,
            schedule: &schedule,
            sieve_primes: &[113],
            cap: 1000,
        };
        let sols = solve_resolvent(&res, &m, None, &cfg).unwrap();
        assert!(sols.pairs.is_empty());
        assert!(sols.runs.is_empty());
    }

    #[test]
    fn irreducible_resolvent_requires_extension_data() {
        let m = cubic_base();
        let res = classified(&m, [0, 0, -2]).unwrap();
        let schedule = EnumerationSchedule::default();
        let cfg = ResolventSolverConfig {
            exponent_bound: 10,
            schedule: &schedule,
            sieve_primes: &[113],
            cap: 1000,
        };
        match solve_resolvent(&res, &m, None, &cfg) {
            Err(Error::MissingData(msg)) => assert_eq!(msg, "Case B data required"),
            Err(other) => panic!("unexpected error {other:?}"),
            Ok(_) => panic!("expected missing-data abort"),
        }
    }

    #[test]
    fn sextic_resolvent_has_only_the_trivial_orbit() {
        let (m, data) = sextic_extension_data();
        let mu = elem_from_i64(&[0, 1, 0]);
        let coeffs = [m.zero(), m.scalar_mul(&BigInt::from(-4), &mu), m.zero()];
        let res = classify_resolvent(&m, coeffs, BigInt::one(), vec![m.one()]).unwrap();
        let schedule = EnumerationSchedule::default();
        let cfg = ResolventSolverConfig {
            exponent_bound: 220,
            schedule: &schedule,
            sieve_primes: &[113, 787, 1223, 2053],
            cap: 5_000_000,
        };
        let payload = CasePayload::Quadratic(data.clone());
        let sols = solve_resolvent(&res, &m, Some(&payload), &cfg).unwrap();
        assert_eq!(sols.pairs, vec![(m.one(), m.zero())]);
        assert_eq!(sols.runs.len(), 1);
        assert_eq!(sols.runs[0].solutions.len(), 3);
    }

    #[test]
    fn quartic_instance_rejects_real_roots() {
        let m = real_quadratic();
        let coeffs = [m.zero(), m.zero(), m.zero(), m.neg(&m.one())];
        assert!(matches!(
            quartic_instance(&m, coeffs, vec![m.one()]),
            Err(Error::Verification(_))
        ));
    }

    #[test]
    fn quartic_ball_and_solutions_on_the_sextic_pair() {
        let m = cubic_base();
        let units = cubic_base_units();
        let reps = unit_normalize_rhs(&m, &m.one(), &units, 4).unwrap();
        assert_eq!(reps.len(), 32);
        let mu = elem_from_i64(&[0, 1, 0]);
        let coeffs = [m.zero(), m.zero(), m.zero(), mu];
        let rhs: Vec<Elem> = reps.iter().map(|r| r.value.clone()).collect();
        let inst = quartic_instance(&m, coeffs, rhs).unwrap();
        assert!((inst.c0.to_f64() - 1.5380).abs() < 1e-3);
        let bound = inst.solution_bound();
        assert!((bound.to_f64() - 13.343).abs() < 5e-3);
        let ball = m.enumerate_bounded(&bound, 1_000_000).unwrap();
        assert_eq!(ball.len(), 1005);
        let sols = quartic_small_solutions(&inst, 1_000_000).unwrap();
        assert_eq!(sols.len(), 2);
        let plus_one = reps
            .iter()
            .position(|r| r.sign == 1 && r.exponents.iter().all(|&l| l == 0))
            .unwrap();
        for s in &sols {
            assert_eq!(s.rhs_index, plus_one);
            assert_eq!(s.y, m.zero());
        }
        assert_eq!(sols[0].x, m.neg(&m.one()));
        assert_eq!(sols[1].x, m.one());
    }

    #[test]
    fn planted_quartic_solutions_are_recovered() {
        let m = real_quadratic();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1837);
        for _ in 0..15 {
            let a2 = rng.gen_range(0..4i64);
            let a4 = rng.gen_range(1..5i64);
            let coeffs = [m.zero(), int_elem(&m, a2), m.zero(), int_elem(&m, a4)];
            let (x, y) = loop {
                let x = elem_from_i64(&[rng.gen_range(-1..=1), rng.gen_range(-1..=1)]);
                let y = elem_from_i64(&[rng.gen_range(-1..=1), rng.gen_range(-1..=1)]);
                if !(x.iter().all(BigInt::is_zero) && y.iter().all(BigInt::is_zero)) {
                    break (x, y);
                }
            };
            let nu = quartic_norm_form(&m, &coeffs, &x, &y);
            let inst = quartic_instance(&m, coeffs, vec![nu]).unwrap();
            let bound = inst.rhs_bound(0);
            assert!(m.size(&x) <= bound.clone() + 1e-9);
            assert!(m.size(&y) <= bound + 1e-9);
            let sols = quartic_small_solutions(&inst, 1_000_000).unwrap();
            assert!(sols.contains(&QuarticSolution {
                rhs_index: 0,
                x: x.clone(),
                y: y.clone(),
            }));
        }
    }

    #[test]
    fn rhs_representatives_count_and_exactness() {
        let m = cubic_base();
        let units = cubic_base_units();
        let reps = unit_normalize_rhs(&m, &m.one(), &units, 4).unwrap();
        assert_eq!(reps.len(), 32);
        let distinct: BTreeSet<Elem> = reps.iter().map(|r| r.value.clone()).collect();
        assert_eq!(distinct.len(), 32);
        for rep in &reps {
            assert_eq!(m.norm(&rep.value).abs(), BigInt::one());
            assert!(rep.exponents.iter().all(|&l| (-1..=2).contains(&l)));
        }
        let bare = unit_normalize_rhs(&m, &m.one(), &[], 4).unwrap();
        assert_eq!(bare.len(), 2);
        assert_eq!(bare[0].value, m.one());
        assert_eq!(bare[1].value, m.neg(&m.one()));
    }
}
