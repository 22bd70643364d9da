//! Index forms of the relative quartic extension and the absolute-index
//! search.
//!
//! From the relative defining polynomial `x⁴ + a₁x³ + a₂x² + a₃x + a₄` over
//! the base order this module builds the cubic resolvent form and the two
//! ternary quadratic forms whose simultaneous values `(U, V)` classify the
//! generators, parametrizes the conic each resolvent pair cuts out,
//! reduces the pair of quadratic conditions to a quartic binary form, maps
//! quartic solutions back to generator triples `(X, Y, Z)`, and computes
//! absolute indices `I(ζ)` with `I(ζ)²·|D_K| = |D(ζ)|` over the degree-`4m`
//! order containing everything.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use rug::ops::Pow;
use rug::Float;

use crate::bigfloat::round_to_big;
use crate::order::{Elem, OrderContext};
use crate::poly;
use crate::{Error, Result};

/// Relative quartic input data: coefficients of the defining polynomial over
/// the base order, the generator denominator `d`, and the relative index
/// `i₀` of the defining root.
#[derive(Clone, Debug)]
pub struct RelativeQuarticData {
    /// `a₁..a₄` of `x⁴ + a₁x³ + a₂x² + a₃x + a₄`.
    pub a: [Elem; 4],
    pub d: BigInt,
    pub i0: BigInt,
}

impl RelativeQuarticData {
    /// Validate positivity of `d` and `i₀` and the divisibility
    /// `i₀ | d^{6m}` required for the resolvent norm to be integral.
    pub fn new(m: &OrderContext, a: [Elem; 4], d: BigInt, i0: BigInt) -> Result<Self> {
        if !d.is_positive() || !i0.is_positive() {
            return Err(Error::Parse(
                "denominator and relative index must be positive".into(),
            ));
        }
        let data = RelativeQuarticData { a, d, i0 };
        if !(data.d_power(m) % &data.i0).is_zero() {
            return Err(Error::Parse(
                "relative index does not divide the denominator power d^{6m}".into(),
            ));
        }
        Ok(data)
    }

    fn d_power(&self, m: &OrderContext) -> BigInt {
        num_traits::pow::pow(self.d.clone(), 6 * m.degree)
    }

    /// Right-hand-side norm `d^{6m}/i₀` of the resolvent equation.
    pub fn rhs_norm(&self, m: &OrderContext) -> BigInt {
        self.d_power(m) / &self.i0
    }
}

/// Ternary quadratic form
/// `c₀X² + c₁XY + c₂Y² + c₃XZ + c₄YZ + c₅Z²` with base-order coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TernaryForm {
    pub c: [Elem; 6],
}

impl TernaryForm {
    pub fn eval(&self, m: &OrderContext, x: &Elem, y: &Elem, z: &Elem) -> Elem {
        let mut acc = m.mul(&self.c[0], &m.mul(x, x));
        acc = m.add(&acc, &m.mul(&self.c[1], &m.mul(x, y)));
        acc = m.add(&acc, &m.mul(&self.c[2], &m.mul(y, y)));
        acc = m.add(&acc, &m.mul(&self.c[3], &m.mul(x, z)));
        acc = m.add(&acc, &m.mul(&self.c[4], &m.mul(y, z)));
        m.add(&acc, &m.mul(&self.c[5], &m.mul(z, z)))
    }

    fn is_zero(&self) -> bool {
        self.c.iter().all(|e| e.iter().all(BigInt::is_zero))
    }

    /// Coefficient array with the variables at `i` and `j` exchanged.
    fn swap_vars(&self, i: usize, j: usize) -> TernaryForm {
        let (lo, hi) = (i.min(j), i.max(j));
        let map: [usize; 6] = match (lo, hi) {
            _ if lo == hi => [0, 1, 2, 3, 4, 5],
            (0, 2) => [5, 4, 2, 3, 1, 0],
            (1, 2) => [0, 3, 5, 1, 4, 2],
            (0, 1) => [2, 1, 0, 4, 3, 5],
            _ => unreachable!("variable index out of range"),
        };
        TernaryForm {
            c: std::array::from_fn(|k| self.c[map[k]].clone()),
        }
    }
}

/// Binary quadratic form `c₀P² + c₁PQ + c₂Q²`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryQuadratic {
    pub c: [Elem; 3],
}

impl BinaryQuadratic {
    pub fn eval(&self, m: &OrderContext, p: &Elem, q: &Elem) -> Elem {
        let mut acc = m.mul(&self.c[0], &m.mul(p, p));
        acc = m.add(&acc, &m.mul(&self.c[1], &m.mul(p, q)));
        m.add(&acc, &m.mul(&self.c[2], &m.mul(q, q)))
    }
}

/// Binary quartic form `c₀P⁴ + c₁P³Q + c₂P²Q² + c₃PQ³ + c₄Q⁴`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryQuartic {
    pub c: [Elem; 5],
}

impl BinaryQuartic {
    pub fn eval(&self, m: &OrderContext, p: &Elem, q: &Elem) -> Elem {
        let p2 = m.mul(p, p);
        let q2 = m.mul(q, q);
        let pq = m.mul(p, q);
        let mut acc = m.mul(&self.c[0], &m.mul(&p2, &p2));
        acc = m.add(&acc, &m.mul(&self.c[1], &m.mul(&p2, &pq)));
        acc = m.add(&acc, &m.mul(&self.c[2], &m.mul(&p2, &q2)));
        acc = m.add(&acc, &m.mul(&self.c[3], &m.mul(&pq, &q2)));
        m.add(&acc, &m.mul(&self.c[4], &m.mul(&q2, &q2)))
    }

    fn is_zero(&self) -> bool {
        self.c.iter().all(|e| e.iter().all(BigInt::is_zero))
    }

    fn reversed(&self) -> BinaryQuartic {
        let mut c = self.c.clone();
        c.reverse();
        BinaryQuartic { c }
    }
}

fn bq_product(m: &OrderContext, a: &BinaryQuadratic, b: &BinaryQuadratic) -> BinaryQuartic {
    let mut c: [Elem; 5] = std::array::from_fn(|_| m.zero());
    for i in 0..3 {
        for j in 0..3 {
            c[i + j] = m.add(&c[i + j], &m.mul(&a.c[i], &b.c[j]));
        }
    }
    BinaryQuartic { c }
}

/// Substitute three binary quadratics for the variables of a ternary form.
pub fn compose(m: &OrderContext, t: &TernaryForm, f: &[BinaryQuadratic; 3]) -> BinaryQuartic {
    let pairs = [(0, 0, 0), (0, 1, 1), (1, 1, 2), (0, 2, 3), (1, 2, 4), (2, 2, 5)];
    let mut acc: [Elem; 5] = std::array::from_fn(|_| m.zero());
    for (i, j, k) in pairs {
        let prod = bq_product(m, &f[i], &f[j]);
        for (slot, coeff) in acc.iter_mut().zip(prod.c.iter()) {
            *slot = m.add(slot, &m.mul(&t.c[k], coeff));
        }
    }
    BinaryQuartic { c: acc }
}

/// The three forms attached to the relative quartic: the cubic resolvent
/// (as `U³ + c₂U²V + c₁UV² + c₀V³` coefficients) and the two ternary
/// quadratics whose values on a generator triple are `(U, V)`.
#[derive(Clone, Debug)]
pub struct IndexForms {
    pub resolvent: [Elem; 3],
    pub q1: TernaryForm,
    pub q2: TernaryForm,
}

/// Resolvent coefficients `[c₂, c₁, c₀]` of a monic quartic `a₁..a₄`.
pub fn resolvent_of(m: &OrderContext, a: &[Elem; 4]) -> [Elem; 3] {
    let [a1, a2, a3, a4] = a;
    let c2 = m.neg(a2);
    let c1 = m.sub(&m.mul(a1, a3), &m.scalar_mul(&BigInt::from(4), a4));
    let mut c0 = m.scalar_mul(&BigInt::from(4), &m.mul(a2, a4));
    c0 = m.sub(&c0, &m.mul(a3, a3));
    c0 = m.sub(&c0, &m.mul(&m.mul(a1, a1), a4));
    [c2, c1, c0]
}

/// Discriminant `18c₂c₁c₀ − 4c₂³c₀ + c₂²c₁² − 4c₁³ − 27c₀²` of the monic
/// cubic with coefficients `[c₂, c₁, c₀]`.
pub fn cubic_disc(m: &OrderContext, c: &[Elem; 3]) -> Elem {
    let [c2, c1, c0] = c;
    let mut acc = m.scalar_mul(&BigInt::from(18), &m.mul(&m.mul(c2, c1), c0));
    acc = m.sub(&acc, &m.scalar_mul(&BigInt::from(4), &m.mul(&m.mul(c2, &m.mul(c2, c2)), c0)));
    acc = m.add(&acc, &m.mul(&m.mul(c2, c2), &m.mul(c1, c1)));
    acc = m.sub(&acc, &m.scalar_mul(&BigInt::from(4), &m.mul(c1, &m.mul(c1, c1))));
    m.sub(&acc, &m.scalar_mul(&BigInt::from(27), &m.mul(c0, c0)))
}

/// Build the resolvent and the two quadratic index forms from the quartic
/// coefficients.
pub fn build_forms(m: &OrderContext, data: &RelativeQuarticData) -> IndexForms {
    let [a1, a2, a3, a4] = &data.a;
    let two = BigInt::from(2);
    let q1 = TernaryForm {
        c: [
            m.one(),
            m.neg(a1),
            a2.clone(),
            m.sub(&m.mul(a1, a1), &m.scalar_mul(&two, a2)),
            m.sub(a3, &m.mul(a1, a2)),
            m.add(&m.sub(&m.mul(a2, a2), &m.mul(a1, a3)), a4),
        ],
    };
    let q2 = TernaryForm {
        c: [m.zero(), m.zero(), m.one(), m.neg(&m.one()), m.neg(a1), a2.clone()],
    };
    IndexForms {
        resolvent: resolvent_of(m, &data.a),
        q1,
        q2,
    }
}

/// Exact norm certificate for a resolvent pair: `|N(F(u, v))|` must equal
/// the declared right-hand-side norm `d^{6m}/i₀`.
pub fn verify_norm_condition(
    m: &OrderContext,
    data: &RelativeQuarticData,
    forms: &IndexForms,
    u: &Elem,
    v: &Elem,
) -> Result<()> {
    let value = crate::thue::eval_resolvent(m, &forms.resolvent, u, v);
    let norm = m.norm(&value).abs();
    let want = data.rhs_norm(m);
    if norm != want {
        return Err(Error::Verification(format!(
            "resolvent norm {norm} differs from the declared value {want}"
        )));
    }
    Ok(())
}

/// Conic parametrization attached to one resolvent pair: the conic `Q₀`,
/// a nontrivial zero with a nonzero pivot coordinate, the three binary
/// quadratics expressing `κ·(X,Y,Z)` in the parameters, and the finite
/// list of κ divisor representatives.
#[derive(Clone, Debug)]
pub struct ParametrizationData {
    pub q0: TernaryForm,
    pub zero: [Elem; 3],
    /// Coordinate pinned during the elimination; `zero[pivot]` is nonzero.
    pub pivot: usize,
    pub f: [BinaryQuadratic; 3],
    pub kappa_reps: Vec<Elem>,
}

fn first_nonzero_coord(elems: &[&Elem]) -> Option<BigInt> {
    for e in elems {
        for c in e.iter() {
            if !c.is_zero() {
                return Some(c.clone());
            }
        }
    }
    None
}

fn negate_triple(m: &OrderContext, t: &mut [Elem; 3]) {
    for e in t.iter_mut() {
        *e = m.neg(e);
    }
}

/// Zero-candidate ranking: coordinate magnitude, then total size, then the
/// support pattern (earlier power-basis coordinates first), then the
/// magnitudes themselves.
fn zero_key(t: &[Elem; 3]) -> (BigInt, BigInt, Vec<usize>, Vec<BigInt>) {
    let flat: Vec<BigInt> = t.iter().flat_map(|e| e.iter().cloned()).collect();
    let max = flat.iter().map(|c| c.abs()).max().unwrap_or_default();
    let l1: BigInt = flat.iter().map(|c| c.abs()).sum();
    let support: Vec<usize> = flat
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, _)| i)
        .collect();
    let mags: Vec<BigInt> = flat.iter().map(|c| c.abs()).collect();
    (max, l1, support, mags)
}

const ZERO_SEARCH_BUDGET: usize = 4_000_000;

/// Enumerate triples over growing coordinate boxes and collect the conic
/// zeros of the first box size that contains any.
fn search_conic_zeros(m: &OrderContext, q0: &TernaryForm) -> Vec<[Elem; 3]> {
    let dims = 3 * m.degree;
    let mut budget = ZERO_SEARCH_BUDGET;
    for s in [1i64, 2, 4, 8, 16, 32, 64] {
        let width = (2 * s + 1) as usize;
        let Some(total) = width.checked_pow(dims as u32) else {
            break;
        };
        if total > budget {
            break;
        }
        budget -= total;
        let mut zeros: Vec<[Elem; 3]> = Vec::new();
        let mut counter = vec![-s; dims];
        loop {
            // Sign canonicalization: only visit triples whose first nonzero
            // coordinate is positive; the mirror triple is the same zero.
            if let Some(first) = counter.iter().find(|&&c| c != 0) {
                if *first > 0 {
                    let triple: [Elem; 3] = std::array::from_fn(|i| {
                        counter[i * m.degree..(i + 1) * m.degree]
                            .iter()
                            .map(|&c| BigInt::from(c))
                            .collect()
                    });
                    let val = q0.eval(m, &triple[0], &triple[1], &triple[2]);
                    if val.iter().all(BigInt::is_zero) {
                        zeros.push(triple);
                    }
                }
            }
            let mut k = 0;
            loop {
                if k == dims {
                    break;
                }
                counter[k] += 1;
                if counter[k] <= s {
                    break;
                }
                counter[k] = -s;
                k += 1;
            }
            if k == dims {
                break;
            }
        }
        if !zeros.is_empty() {
            return zeros;
        }
    }
    Vec::new()
}

fn is_unit(m: &OrderContext, e: &Elem) -> bool {
    m.norm(e).abs().is_one()
}

/// Parametrize the conic `Q₀ = v·Q₁ − u·Q₂ = 0` through a nontrivial zero.
///
/// The elimination pins the pivot coordinate to the zero and expresses the
/// triple as `κ·(X,Y,Z) = (f_X, f_Y, f_Z)(P, Q)` with binary quadratics;
/// the κ representatives are the unit products modulo squares times the
/// configured divisor classes.  A supplied `zero_override` skips the box
/// search.
pub fn parametrize(
    m: &OrderContext,
    forms: &IndexForms,
    u: &Elem,
    v: &Elem,
    units: &[Elem],
    kappa_classes: &[Elem],
    zero_override: Option<[Elem; 3]>,
) -> Result<ParametrizationData> {
    let mut q0 = TernaryForm {
        c: std::array::from_fn(|i| m.sub(&m.mul(v, &forms.q1.c[i]), &m.mul(u, &forms.q2.c[i]))),
    };
    if q0.is_zero() {
        return Err(Error::Verification(
            "conic form vanishes identically for this resolvent pair".into(),
        ));
    }
    if let Some(lead) = first_nonzero_coord(&q0.c.iter().collect::<Vec<_>>()) {
        if lead.is_negative() {
            for c in q0.c.iter_mut() {
                *c = m.neg(c);
            }
        }
    }

    let candidates: Vec<[Elem; 3]> = match zero_override {
        Some(z) => {
            if z.iter().all(|e| e.iter().all(BigInt::is_zero)) {
                return Err(Error::Parse("supplied conic zero is trivial".into()));
            }
            let val = q0.eval(m, &z[0], &z[1], &z[2]);
            if !val.iter().all(BigInt::is_zero) {
                return Err(Error::Verification(
                    "supplied conic zero does not lie on the conic".into(),
                ));
            }
            vec![z]
        }
        None => search_conic_zeros(m, &q0),
    };
    if candidates.is_empty() {
        return Err(Error::MissingData(
            "no nontrivial conic zero within the coordinate search boxes; \
             supply a zero manually in the field-spec file"
                .into(),
        ));
    }

    let group = |z: &[Elem; 3]| -> usize {
        if !z[2].iter().all(BigInt::is_zero) {
            0
        } else if !z[1].iter().all(BigInt::is_zero) {
            1
        } else {
            2
        }
    };
    let mut ordered = candidates;
    ordered.sort_by(|a, b| (group(a), zero_key(a)).cmp(&(group(b), zero_key(b))));

    for zero in ordered {
        let pivot = match group(&zero) {
            0 => 2,
            1 => 1,
            _ => 0,
        };
        let qp = q0.swap_vars(pivot, 2);
        let zp: [Elem; 3] = {
            let mut z = zero.clone();
            z.swap(pivot, 2);
            z
        };
        let [x0, y0, z0] = &zp;
        let two = BigInt::from(2);
        // Polar derivatives of the permuted conic at the zero.
        let c1 = {
            let mut acc = m.scalar_mul(&two, &m.mul(&qp.c[0], x0));
            acc = m.add(&acc, &m.mul(&qp.c[1], y0));
            m.add(&acc, &m.mul(&qp.c[3], z0))
        };
        let c2 = {
            let mut acc = m.mul(&qp.c[1], x0);
            acc = m.add(&acc, &m.scalar_mul(&two, &m.mul(&qp.c[2], y0)));
            m.add(&acc, &m.mul(&qp.c[4], z0))
        };
        if c1.iter().all(BigInt::is_zero) && c2.iter().all(BigInt::is_zero) {
            continue;
        }
        // Negated restriction of the conic to the pivot plane.
        let c3 = m.neg(&qp.c[0]);
        let c4 = m.neg(&qp.c[1]);
        let c5 = m.neg(&qp.c[2]);
        let quad = |w: &Elem| -> [Elem; 3] {
            [m.mul(w, &c3), m.mul(w, &c4), m.mul(w, &c5)]
        };
        let add3 = |a: [Elem; 3], b: [Elem; 3]| -> [Elem; 3] {
            std::array::from_fn(|i| m.add(&a[i], &b[i]))
        };
        let fhat: [[Elem; 3]; 3] = [
            add3(quad(x0), [c1.clone(), c2.clone(), m.zero()]),
            add3(quad(y0), [m.zero(), c1.clone(), c2.clone()]),
            quad(z0),
        ];
        let perm = {
            let mut p = [0usize, 1, 2];
            p.swap(pivot, 2);
            p
        };
        let mut f: [BinaryQuadratic; 3] = std::array::from_fn(|i| BinaryQuadratic {
            c: fhat[perm[i]].clone(),
        });
        let flat: Vec<&Elem> = f.iter().flat_map(|b| b.c.iter()).collect();
        if let Some(lead) = first_nonzero_coord(&flat) {
            if lead.is_negative() {
                for b in f.iter_mut() {
                    for c in b.c.iter_mut() {
                        *c = m.neg(c);
                    }
                }
            }
        }

        let vanish = compose(m, &q0, &f);
        if !vanish.is_zero() {
            return Err(Error::Verification(
                "conic parametrization failed the exact vanishing identity".into(),
            ));
        }

        let mut kappa_reps = Vec::new();
        for class in kappa_classes {
            let masks = 1usize << units.len();
            for mask in 0..masks {
                let mut rep = class.clone();
                for (i, unit) in units.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        rep = m.mul(&rep, unit);
                    }
                }
                kappa_reps.push(rep);
            }
        }

        return Ok(ParametrizationData {
            q0,
            zero,
            pivot,
            f,
            kappa_reps,
        });
    }
    Err(Error::MissingData(
        "every conic zero found is a singular point; supply a zero manually \
         in the field-spec file"
            .into(),
    ))
}

/// The two quartic binary forms induced by a parametrization, with the
/// nondegenerate side selected and normalized to a monic quartic.
#[derive(Clone, Debug)]
pub struct ThueForms {
    pub f1: BinaryQuartic,
    pub f2: BinaryQuartic,
    /// `0` selects `f1` (right side `u`), `1` selects `f2` (right side `v`).
    pub selected: usize,
    /// The selected form was reversed (parameters exchanged) to obtain a
    /// unit leading coefficient.
    pub reversed: bool,
    /// Monic coefficients `a₁..a₄` of the selected side.
    pub monic: [Elem; 4],
    /// Right-hand-side base value scaled by the inverse leading unit.
    pub rhs_base: Elem,
}

fn monicize_side(
    m: &OrderContext,
    form: &BinaryQuartic,
    rhs: &Elem,
) -> Option<(bool, [Elem; 4], Elem)> {
    if form.is_zero() {
        return None;
    }
    for (bq, rev) in [(form.clone(), false), (form.reversed(), true)] {
        let b0 = &bq.c[0];
        if b0.iter().all(BigInt::is_zero) || !is_unit(m, b0) {
            continue;
        }
        let inv = m.inverse_unit(b0).ok()?;
        let monic: [Elem; 4] = std::array::from_fn(|i| m.mul(&inv, &bq.c[i + 1]));
        let disc = cubic_disc(m, &resolvent_of(m, &monic));
        if disc.iter().all(BigInt::is_zero) {
            continue;
        }
        return Some((rev, monic, m.mul(&inv, rhs)));
    }
    None
}

/// Compose the index forms with the parametrization and select the side
/// that is a genuine quartic form (unit leading coefficient after an
/// optional parameter exchange, distinct roots).  Both sides degenerate is
/// an abort: the parametrization then carries no quartic reduction.
pub fn quartic_instances(
    m: &OrderContext,
    forms: &IndexForms,
    pdata: &ParametrizationData,
    u: &Elem,
    v: &Elem,
) -> Result<ThueForms> {
    let f1 = compose(m, &forms.q1, &pdata.f);
    let f2 = compose(m, &forms.q2, &pdata.f);
    if let Some((reversed, monic, rhs_base)) = monicize_side(m, &f1, u) {
        return Ok(ThueForms {
            f1,
            f2,
            selected: 0,
            reversed,
            monic,
            rhs_base,
        });
    }
    if let Some((reversed, monic, rhs_base)) = monicize_side(m, &f2, v) {
        return Ok(ThueForms {
            f1,
            f2,
            selected: 1,
            reversed,
            monic,
            rhs_base,
        });
    }
    Err(Error::Verification(
        "both quartic forms of the parametrization are degenerate".into(),
    ))
}

/// One family of generators: the triple `(X, Y, Z)` up to a base unit
/// factor, the index-form values it attains, and the κ divisor that
/// cleared the parametrized coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorFamily {
    pub x: Elem,
    pub y: Elem,
    pub z: Elem,
    pub u: Elem,
    pub v: Elem,
    pub kappa: Elem,
}

fn orbit_equivalent(m: &OrderContext, a: [&Elem; 3], b: [&Elem; 3]) -> bool {
    let pivot = a.iter().position(|e| !e.iter().all(BigInt::is_zero));
    let Some(i) = pivot else {
        return b.iter().all(|e| e.iter().all(BigInt::is_zero));
    };
    let Ok(nu) = m.divide_exact(b[i], a[i]) else {
        return false;
    };
    if !is_unit(m, &nu) {
        return false;
    }
    (0..3).all(|j| *b[j] == m.mul(&nu, a[j]))
}

/// Map quartic solutions back to generator triples: evaluate the
/// parametrization, clear a κ representative by exact division, keep the
/// triples whose index-form values are a unit multiple of the resolvent
/// pair, canonicalize signs, and deduplicate unit orbits.  Every kept
/// family is re-verified exactly against both quadratic forms.
pub fn assemble_generators(
    m: &OrderContext,
    forms: &IndexForms,
    pdata: &ParametrizationData,
    reversed: bool,
    sols: &[(Elem, Elem)],
    u0: &Elem,
    v0: &Elem,
) -> Result<Vec<GeneratorFamily>> {
    let mut families: Vec<GeneratorFamily> = Vec::new();
    for (sp, sq) in sols {
        let (p, q) = if reversed { (sq, sp) } else { (sp, sq) };
        let g: [Elem; 3] = std::array::from_fn(|i| pdata.f[i].eval(m, p, q));
        if g.iter().all(|e| e.iter().all(BigInt::is_zero)) {
            continue;
        }
        for kappa in &pdata.kappa_reps {
            let mut triple: [Elem; 3] = Default::default();
            let mut ok = true;
            for i in 0..3 {
                match m.divide_exact(&g[i], kappa) {
                    Ok(e) => triple[i] = e,
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let u_val = forms.q1.eval(m, &triple[0], &triple[1], &triple[2]);
            let v_val = forms.q2.eval(m, &triple[0], &triple[1], &triple[2]);
            let (num, den, other_num, other_den) = if !u0.iter().all(BigInt::is_zero) {
                (&u_val, u0, &v_val, v0)
            } else if !v0.iter().all(BigInt::is_zero) {
                (&v_val, v0, &u_val, u0)
            } else {
                continue;
            };
            let Ok(nu) = m.divide_exact(num, den) else {
                continue;
            };
            if !is_unit(m, &nu) || *other_num != m.mul(&nu, other_den) {
                continue;
            }
            if let Some(lead) = first_nonzero_coord(&triple.iter().collect::<Vec<_>>()) {
                if lead.is_negative() {
                    negate_triple(m, &mut triple);
                }
            }
            if families
                .iter()
                .any(|f| orbit_equivalent(m, [&f.x, &f.y, &f.z], [&triple[0], &triple[1], &triple[2]]))
            {
                continue;
            }
            families.push(GeneratorFamily {
                x: triple[0].clone(),
                y: triple[1].clone(),
                z: triple[2].clone(),
                u: u_val,
                v: v_val,
                kappa: kappa.clone(),
            });
        }
    }
    for fam in &families {
        let u_check = forms.q1.eval(m, &fam.x, &fam.y, &fam.z);
        let v_check = forms.q2.eval(m, &fam.x, &fam.y, &fam.z);
        if u_check != fam.u || v_check != fam.v {
            return Err(Error::Verification(
                "assembled family fails the exact index-form check".into(),
            ));
        }
    }
    Ok(families)
}

/// Exact absolute index `I(ζ)` with `I(ζ)²·|D_K| = |D(ζ)|`, or `None` when
/// `ζ` has repeated conjugates (its discriminant vanishes).
///
/// The discriminant is computed as a product over embedding pairs at the
/// order's working precision and rounded to an integer; when the rounding
/// margin is thinner than 10³ units in the last place (or the running
/// error estimate), it is recomputed exactly from the characteristic
/// polynomial.
pub fn absolute_index(k: &OrderContext, zeta: &Elem, dk: &BigInt) -> Result<Option<BigInt>> {
    let bits = k.prec.bits();
    let n = k.degree;
    let vals = k.embed_all(zeta);
    let mut prod = rug::Complex::with_val(bits, 1);
    let mut rel_err = Float::with_val(bits, 0);
    let ulp = Float::with_val(bits, 2f64).pow(-(bits as i32) + 2);
    let mut exact_needed = false;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = rug::Complex::with_val(bits, &vals[i] - &vals[j]);
            let da = d.clone().abs().real().clone();
            if da.is_zero() {
                exact_needed = true;
                break;
            }
            let scale = Float::with_val(
                bits,
                vals[i].clone().abs().real() + vals[j].clone().abs().real(),
            );
            rel_err += Float::with_val(bits, &scale / &da) * &ulp + &ulp;
            prod *= d;
        }
        if exact_needed {
            break;
        }
    }
    let disc = if exact_needed {
        poly::discriminant(&k.char_poly(zeta))
    } else {
        let sq = rug::Complex::with_val(bits, prod.square_ref());
        let mag = sq.clone().abs().real().clone();
        let budget_re = Float::with_val(bits, &mag * &rel_err) * 4u32
            + Float::with_val(bits, &mag * &ulp) * 1000u32;
        let (rounded, dist) = round_to_big(sq.real());
        let margin = Float::with_val(bits, 0.5) - dist;
        let imag_ok = sq.imag().clone().abs() <= budget_re;
        if !sq.real().is_finite() {
            return Err(Error::Precision(
                "discriminant product overflowed the working precision".into(),
            ));
        }
        if margin > budget_re && imag_ok {
            rounded
        } else {
            poly::discriminant(&k.char_poly(zeta))
        }
    };
    if disc.is_zero() {
        return Ok(None);
    }
    let (quot, rem) = disc.abs().div_rem(dk);
    if !rem.is_zero() {
        return Err(Error::Verification(
            "element discriminant is not divisible by the field discriminant".into(),
        ));
    }
    let root = num_integer::Roots::sqrt(&quot);
    if &root * &root != quot {
        return Err(Error::Verification(
            "discriminant quotient is not a perfect square".into(),
        ));
    }
    Ok(Some(root))
}

/// One absolute-search hit: `ζ = Σ shiftsⱼ·μ^{j+1} + (Π unitsⱼ^{kⱼ})·ξ`
/// with its exact index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchHit {
    pub shifts: Vec<i64>,
    pub unit_exponents: Vec<i64>,
    pub index: BigInt,
}

#[derive(Clone, Debug)]
pub struct AbsoluteSearchConfig {
    /// Half-width of every coordinate box.
    pub range: i64,
    /// Strict upper bound on reported indices.
    pub threshold: BigInt,
    /// Cap on the number of candidates.
    pub cap: usize,
}

fn odometer(dims: usize, range: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut counter = vec![-range; dims];
    loop {
        out.push(counter.clone());
        let mut k = 0;
        loop {
            if k == dims {
                return out;
            }
            counter[k] += 1;
            if counter[k] <= range {
                break;
            }
            counter[k] = -range;
            k += 1;
        }
    }
}

/// Scan `ζ = z₁μ + … + z_{m−1}μ^{m−1} + ε₁^{k₁}···ε_r^{k_r}·ξ` over the
/// coordinate boxes `[−range, range]` and report every element whose index
/// is below the threshold.  The mirror `−ζ` of every candidate has the
/// same index and is not listed separately; constant shifts do not change
/// the index and are fixed to zero.
///
/// A logarithmic floating-point screen discards candidates whose
/// discriminant is far above the admissible size; survivors get the exact
/// treatment of [`absolute_index`].
pub fn absolute_search(
    k: &OrderContext,
    m: &OrderContext,
    units: &[Elem],
    xi: &Elem,
    dk: &BigInt,
    cfg: &AbsoluteSearchConfig,
) -> Result<Vec<SearchHit>> {
    let r = units.len();
    let t = m.degree - 1;
    let range = cfg.range;
    if range < 0 {
        return Err(Error::Parse("search range must be nonnegative".into()));
    }
    let width = (2 * range + 1) as u128;
    let total = width
        .checked_pow((r + t) as u32)
        .filter(|&v| v <= cfg.cap as u128)
        .ok_or_else(|| {
            Error::CardinalityCap(format!(
                "absolute search box of width {width} in {} dimensions exceeds the cap",
                r + t
            ))
        })?;
    let _ = total;
    let n = k.degree;

    // Exact base-power lifts and their embeddings.
    let mut base_powers: Vec<Elem> = Vec::with_capacity(t);
    for j in 1..=t {
        let mut e = m.zero();
        e[j] = BigInt::one();
        base_powers.push(k.lift_from_base(&e)?);
    }
    let embed_f64 = |e: &Elem| -> Vec<(f64, f64)> {
        k.embed_all(e)
            .iter()
            .map(|c| {
                (
                    c.real().to_f64(),
                    c.imag().to_f64(),
                )
            })
            .collect()
    };
    let base_embeds: Vec<Vec<(f64, f64)>> = base_powers.iter().map(|e| embed_f64(e)).collect();

    // Signed unit power tables over the base order.
    let mut pow_tables: Vec<Vec<Elem>> = Vec::with_capacity(r);
    for unit in units {
        let inv = m.inverse_unit(unit)?;
        let mut tbl = vec![m.zero(); (2 * range + 1) as usize];
        let mid = range as usize;
        tbl[mid] = m.one();
        for i in 1..=range as usize {
            tbl[mid + i] = m.mul(&tbl[mid + i - 1], unit);
            tbl[mid - i] = m.mul(&tbl[mid - i + 1], &inv);
        }
        pow_tables.push(tbl);
    }

    let dk_f = dk.to_f64().unwrap_or(f64::MAX);
    let thr_f = cfg.threshold.to_f64().unwrap_or(f64::MAX);
    // ln|D| admissible limit with one decade of slack.
    let ln_limit = 2.0 * thr_f.max(1.0).ln() + dk_f.ln() + std::f64::consts::LN_10;

    let cells = odometer(r, range);
    let candidates: Vec<(Vec<i64>, Elem, Vec<Vec<i64>>)> = cells
        .into_par_iter()
        .map(|kvec| {
            let mut prod = m.one();
            for (j, &e) in kvec.iter().enumerate() {
                prod = m.mul(&prod, &pow_tables[j][(e + range) as usize]);
            }
            let w = k.mul(&k.lift_from_base(&prod).expect("unit lift"), xi);
            let w_embed = embed_f64(&w);
            let mut found = Vec::new();
            let mut counter = vec![-range; t.max(1)];
            let dims = t;
            loop {
                let zvec: Vec<i64> = counter[..dims].to_vec();
                let mut ln_sum = 0.0f64;
                let vals: Vec<(f64, f64)> = (0..n)
                    .map(|i| {
                        let mut re = w_embed[i].0;
                        let mut im = w_embed[i].1;
                        for (j, &z) in zvec.iter().enumerate() {
                            re += z as f64 * base_embeds[j][i].0;
                            im += z as f64 * base_embeds[j][i].1;
                        }
                        (re, im)
                    })
                    .collect();
                let mut batch = 1.0f64;
                let mut in_batch = 0u32;
                for i in 0..n {
                    for j in (i + 1)..n {
                        let dr = vals[i].0 - vals[j].0;
                        let di = vals[i].1 - vals[j].1;
                        batch *= (dr * dr + di * di).max(1e-280);
                        in_batch += 1;
                        if in_batch == 8 {
                            ln_sum += batch.ln();
                            batch = 1.0;
                            in_batch = 0;
                        }
                    }
                }
                if in_batch > 0 {
                    ln_sum += batch.ln();
                }
                if ln_sum < ln_limit {
                    found.push(zvec);
                }
                if dims == 0 {
                    break;
                }
                let mut kk = 0;
                loop {
                    if kk == dims {
                        break;
                    }
                    counter[kk] += 1;
                    if counter[kk] <= range {
                        break;
                    }
                    counter[kk] = -range;
                    kk += 1;
                }
                if kk == dims {
                    break;
                }
            }
            (kvec, w, found)
        })
        .collect();

    let mut hits = Vec::new();
    for (kvec, w, zlist) in candidates {
        for zvec in zlist {
            let mut zeta = w.clone();
            for (j, &z) in zvec.iter().enumerate() {
                zeta = k.add(&zeta, &k.scalar_mul(&BigInt::from(z), &base_powers[j]));
            }
            if let Some(index) = absolute_index(k, &zeta, dk)? {
                if index < cfg.threshold {
                    hits.push(SearchHit {
                        shifts: zvec,
                        unit_exponents: kvec.clone(),
                        index,
                    });
                }
            }
        }
    }
    hits.sort_by(|a, b| (&a.shifts, &a.unit_exponents).cmp(&(&b.shifts, &b.unit_exponents)));
    Ok(hits)
}
