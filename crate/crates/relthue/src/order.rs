//! Arithmetic in orders of number fields given by a monic defining polynomial.
//!
//! Elements are integer coordinate vectors over the power basis.  All ring
//! operations are exact (driven by a precomputed multiplication table);
//! floating-point embeddings are used only to propose candidates (rounding,
//! enumeration boxes) and every accepted result is re-verified exactly.

use crate::bigfloat::{self, cmp_roots, round_down, round_to_big, round_up, Prec};
use crate::poly::{self, IntPoly};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rug::{Complex, Float};

/// Element of an order: integer coordinates over the power basis.
pub type Elem = Vec<BigInt>;

pub fn elem_from_i64(cs: &[i64]) -> Elem {
    cs.iter().map(|&c| BigInt::from(c)).collect()
}

/// Links an order to an order of a subfield: the coordinate images of the
/// base basis elements, and for every embedding of the extension the index
/// of the base embedding it restricts to.
#[derive(Clone, Debug)]
pub struct BasePairing {
    pub injection: Vec<Elem>,
    pub embedding_map: Vec<usize>,
}

/// A monogenic order with cached numerical data.
#[derive(Clone, Debug)]
pub struct OrderContext {
    pub defining_polynomial: IntPoly,
    pub degree: usize,
    pub multiplication_table: Vec<Vec<Elem>>,
    /// Roots of the defining polynomial: real ascending, then complex by
    /// (Re, Im) lexicographic order.
    pub embeddings: Vec<Complex>,
    /// (number of real embeddings, number of complex conjugate pairs).
    pub signature: (usize, usize),
    pub prec: Prec,
    pub base_pairing: Option<BasePairing>,
    root_powers: Vec<Vec<Complex>>,
    inv_embedding: Vec<Vec<Complex>>,
}

/// Build a context from a monic integer polynomial.
pub fn make_context(f: &IntPoly, prec: Prec) -> Result<OrderContext> {
    let n = f.degree();
    if n == 0 || !f.lc().is_one() {
        return Err(Error::Parse(
            "defining polynomial must be monic of positive degree".into(),
        ));
    }
    let bits = prec.bits();
    let mut roots = poly::complex_roots(f, prec);
    let tol = prec.eps();
    roots.sort_by(|a, b| cmp_roots(a, b, &tol));

    // Residual check at half precision, scaled by the evaluation size.
    for r in &roots {
        let res = f.eval_complex(r, prec).abs().real().clone();
        let mut scale = Float::with_val(bits, 1);
        let az = Float::with_val(bits, r.clone().abs().real());
        let mut pw = Float::with_val(bits, 1);
        for c in &f.coeffs {
            scale += Float::with_val(bits, bigfloat::big_to_rug(&c.abs())) * &pw;
            pw *= &az;
        }
        if res > scale * prec.eps() {
            return Err(Error::Precision(format!(
                "root residual too large at {} digits",
                prec.digits
            )));
        }
    }

    let n_real = roots
        .iter()
        .filter(|r| r.imag().clone().abs() < tol)
        .count();
    if (n - n_real) % 2 != 0 {
        return Err(Error::Precision("unpaired complex embedding".into()));
    }

    let root_powers: Vec<Vec<Complex>> = roots
        .iter()
        .map(|r| {
            let mut pw = Vec::with_capacity(n);
            let mut acc = Complex::with_val(bits, 1);
            for _ in 0..n {
                pw.push(acc.clone());
                acc *= r;
            }
            pw
        })
        .collect();

    let inv_embedding = invert_complex(&root_powers, bits)
        .ok_or_else(|| Error::Precision("embedding matrix numerically singular".into()))?;

    // Power-basis multiplication table from x^k mod f, k ≤ 2n−2.
    let mut xpow: Vec<Elem> = Vec::with_capacity(2 * n - 1);
    for k in 0..=2 * n - 2 {
        if k < n {
            let mut e = vec![BigInt::zero(); n];
            e[k] = BigInt::one();
            xpow.push(e);
        } else {
            // x^k = x·x^{k−1}, reduced by x^n = −(c_0 + … + c_{n−1}x^{n−1}).
            let prev = xpow[k - 1].clone();
            let mut e = vec![BigInt::zero(); n];
            for (i, c) in prev.iter().enumerate().take(n - 1) {
                e[i + 1] += c;
            }
            let top = prev[n - 1].clone();
            for i in 0..n {
                e[i] -= &top * &f.coeffs[i];
            }
            xpow.push(e);
        }
    }
    let multiplication_table: Vec<Vec<Elem>> = (0..n)
        .map(|i| (0..n).map(|j| xpow[i + j].clone()).collect())
        .collect();

    Ok(OrderContext {
        defining_polynomial: f.clone(),
        degree: n,
        multiplication_table,
        embeddings: roots,
        signature: (n_real, (n - n_real) / 2),
        prec,
        base_pairing: None,
        root_powers,
        inv_embedding,
    })
}

fn invert_complex(rows: &[Vec<Complex>], bits: u32) -> Option<Vec<Vec<Complex>>> {
    let n = rows.len();
    let mut m: Vec<Vec<Complex>> = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            for j in 0..n {
                r.push(Complex::with_val(bits, if i == j { 1 } else { 0 }));
            }
            r
        })
        .collect();
    for k in 0..n {
        let pivot = (k..n).max_by(|&a, &b| {
            let fa = m[a][k].clone().abs().real().clone();
            let fb = m[b][k].clone().abs().real().clone();
            fa.partial_cmp(&fb).unwrap_or(std::cmp::Ordering::Equal)
        })?;
        m.swap(k, pivot);
        if m[k][k].clone().abs().real().is_zero() {
            return None;
        }
        let p = m[k][k].clone();
        for j in k..2 * n {
            m[k][j] = Complex::with_val(bits, &m[k][j] / &p);
        }
        for i in 0..n {
            if i != k {
                let f = m[i][k].clone();
                if !f.clone().abs().real().is_zero() {
                    for j in k..2 * n {
                        let s = Complex::with_val(bits, &m[k][j] * &f);
                        m[i][j] -= s;
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n..].to_vec()).collect())
}

impl OrderContext {
    pub fn zero(&self) -> Elem {
        vec![BigInt::zero(); self.degree]
    }

    pub fn one(&self) -> Elem {
        self.from_int(&BigInt::one())
    }

    pub fn from_int(&self, k: &BigInt) -> Elem {
        let mut e = self.zero();
        e[0] = k.clone();
        e
    }

    pub fn add(&self, a: &Elem, b: &Elem) -> Elem {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    pub fn sub(&self, a: &Elem, b: &Elem) -> Elem {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    pub fn neg(&self, a: &Elem) -> Elem {
        a.iter().map(|x| -x).collect()
    }

    pub fn scalar_mul(&self, k: &BigInt, a: &Elem) -> Elem {
        a.iter().map(|x| x * k).collect()
    }

    /// Exact product via the multiplication table.
    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        let mut out = self.zero();
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                let c = ai * bj;
                for (k, t) in self.multiplication_table[i][j].iter().enumerate() {
                    if !t.is_zero() {
                        out[k] += &c * t;
                    }
                }
            }
        }
        out
    }

    pub fn pow(&self, a: &Elem, e: u32) -> Elem {
        let mut acc = self.one();
        for _ in 0..e {
            acc = self.mul(&acc, a);
        }
        acc
    }

    /// Value of `a` under the `j`-th embedding.
    pub fn embed(&self, a: &Elem, j: usize) -> Complex {
        let bits = self.prec.bits();
        let mut acc = Complex::with_val(bits, 0);
        for (k, c) in a.iter().enumerate() {
            if !c.is_zero() {
                acc += Complex::with_val(
                    bits,
                    &self.root_powers[j][k] * Float::with_val(bits, bigfloat::big_to_rug(c)),
                );
            }
        }
        acc
    }

    pub fn embed_all(&self, a: &Elem) -> Vec<Complex> {
        (0..self.degree).map(|j| self.embed(a, j)).collect()
    }

    /// Field norm down to ℚ, exact: the resultant of the defining polynomial
    /// with the coordinate polynomial.
    pub fn norm(&self, a: &Elem) -> BigInt {
        let g = IntPoly::new(a.clone());
        if g.is_zero() {
            return BigInt::zero();
        }
        poly::resultant(&self.defining_polynomial, &g)
    }

    /// Maximum absolute value over all embeddings, rounded outward (upper bound).
    pub fn size(&self, a: &Elem) -> Float {
        let bits = self.prec.bits();
        let mut m = Float::with_val(bits, 0);
        for j in 0..self.degree {
            let v = self.embed(a, j).abs().real().clone();
            if v > m {
                m = v;
            }
        }
        round_up(&m)
    }

    /// Real coordinates recovered from prescribed embedding values.
    pub fn coords_from_embeddings(&self, vals: &[Complex]) -> Vec<Float> {
        let bits = self.prec.bits();
        (0..self.degree)
            .map(|k| {
                let mut acc = Complex::with_val(bits, 0);
                for (j, v) in vals.iter().enumerate() {
                    acc += Complex::with_val(bits, &self.inv_embedding[k][j] * v);
                }
                acc.real().clone()
            })
            .collect()
    }

    /// Exact quotient `a/b` in the order; error when not integral.
    pub fn divide_exact(&self, a: &Elem, b: &Elem) -> Result<Elem> {
        if b.iter().all(|c| c.is_zero()) {
            return Err(Error::Verification("division by zero element".into()));
        }
        let vals: Vec<Complex> = (0..self.degree)
            .map(|j| {
                let bv = self.embed(b, j);
                Complex::with_val(self.prec.bits(), self.embed(a, j) / bv)
            })
            .collect();
        let coords = self.coords_from_embeddings(&vals);
        let mut q = Vec::with_capacity(self.degree);
        for c in &coords {
            let (n, _) = round_to_big(c);
            q.push(n);
        }
        if self.mul(b, &q) == *a {
            Ok(q)
        } else {
            Err(Error::Verification("quotient is not integral".into()))
        }
    }

    pub fn inverse_unit(&self, a: &Elem) -> Result<Elem> {
        self.divide_exact(&self.one(), a)
    }

    /// All order elements of size at most `bound`.
    ///
    /// The coordinate box is derived from the inverse embedding matrix with
    /// outward rounding; the final filter compares a certified lower bound of
    /// the size against `bound`, so elements sitting exactly on the boundary
    /// are kept.
    pub fn enumerate_bounded(&self, bound: &Float, cap: usize) -> Result<Vec<Elem>> {
        let bits = self.prec.bits();
        let mut box_bounds = Vec::with_capacity(self.degree);
        let mut total: u128 = 1;
        for k in 0..self.degree {
            let mut row = Float::with_val(bits, 0);
            for j in 0..self.degree {
                row += self.inv_embedding[k][j].clone().abs().real();
            }
            let b = round_up(&(row * bound.clone()))
                .floor()
                .to_f64();
            if !b.is_finite() || b > 1e12 {
                return Err(Error::CardinalityCap("enumeration box unbounded".into()));
            }
            let b = b as i64;
            total = total.saturating_mul((2 * b + 1) as u128);
            box_bounds.push(b);
        }
        if total > cap as u128 {
            return Err(Error::CardinalityCap(format!(
                "box of {total} points exceeds cap {cap}"
            )));
        }
        let mut out = Vec::new();
        let mut idx = vec![0i64; self.degree];
        for (k, b) in box_bounds.iter().enumerate() {
            idx[k] = -b;
        }
        loop {
            let cand: Elem = idx.iter().map(|&c| BigInt::from(c)).collect();
            let mut m = Float::with_val(bits, 0);
            for j in 0..self.degree {
                let v = self.embed(&cand, j).abs().real().clone();
                if v > m {
                    m = v;
                }
            }
            if round_down(&m) <= *bound {
                out.push(cand);
            }
            let mut k = 0;
            loop {
                if k == self.degree {
                    return Ok(out);
                }
                idx[k] += 1;
                if idx[k] <= box_bounds[k] {
                    break;
                }
                idx[k] = -box_bounds[k];
                k += 1;
            }
        }
    }

    /// Matrix of multiplication by `a` over the power basis (column `j` holds
    /// the coordinates of `a·e_j`).
    pub fn mult_matrix(&self, a: &Elem) -> Vec<Vec<BigInt>> {
        let n = self.degree;
        let mut m = vec![vec![BigInt::zero(); n]; n];
        for j in 0..n {
            let mut ej = self.zero();
            ej[j] = BigInt::one();
            let col = self.mul(a, &ej);
            for i in 0..n {
                m[i][j] = col[i].clone();
            }
        }
        m
    }

    /// Characteristic polynomial of multiplication by `a`, exact.
    pub fn char_poly(&self, a: &Elem) -> IntPoly {
        poly::charpoly(&self.mult_matrix(a))
    }

    /// Attach a subfield order: `injection[k]` is the image of the base basis
    /// element `e_k`.  The injection is verified to be an exact ring
    /// homomorphism and every extension embedding is matched to the base
    /// embedding it restricts to (ambiguous matches abort).
    pub fn with_base(mut self, base: &OrderContext, injection: Vec<Elem>) -> Result<Self> {
        if injection.len() != base.degree || injection.iter().any(|e| e.len() != self.degree) {
            return Err(Error::Parse("injection has wrong shape".into()));
        }
        if injection[0] != self.one() {
            return Err(Error::Verification("injection must fix 1".into()));
        }
        for i in 0..base.degree {
            for j in 0..base.degree {
                let img = self.mul(&injection[i], &injection[j]);
                let mut expect = self.zero();
                for (k, c) in base.multiplication_table[i][j].iter().enumerate() {
                    expect = self.add(&expect, &self.scalar_mul(c, &injection[k]));
                }
                if img != expect {
                    return Err(Error::Verification(
                        "injection does not respect multiplication".into(),
                    ));
                }
            }
        }
        // Match each extension embedding to the base embedding it lies over,
        // by the image of the base generator.
        let bits = self.prec.bits();
        let gen_img = &injection[1.min(base.degree - 1)];
        let mut map = Vec::with_capacity(self.degree);
        for j in 0..self.degree {
            let val = self.embed(gen_img, j);
            let mut dists: Vec<(usize, Float)> = (0..base.degree)
                .map(|i| {
                    let d = Complex::with_val(bits, &base.embeddings[i] - &val)
                        .abs()
                        .real()
                        .clone();
                    (i, d)
                })
                .collect();
            dists.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
            if dists[0].1 > self.prec.eps() {
                return Err(Error::Verification(
                    "extension embedding does not restrict to any base embedding".into(),
                ));
            }
            if base.degree > 1 && dists[1].1 < self.prec.eps() {
                return Err(Error::Precision(
                    "ambiguous embedding restriction; raise precision".into(),
                ));
            }
            map.push(dists[0].0);
        }
        self.base_pairing = Some(BasePairing {
            injection,
            embedding_map: map,
        });
        Ok(self)
    }

    /// Image of a base-order element under the attached injection.
    pub fn lift_from_base(&self, a: &Elem) -> Result<Elem> {
        let bp = self
            .base_pairing
            .as_ref()
            .ok_or_else(|| Error::MissingData("no base pairing attached".into()))?;
        let mut out = self.zero();
        for (k, c) in a.iter().enumerate() {
            out = self.add(&out, &self.scalar_mul(c, &bp.injection[k]));
        }
        Ok(out)
    }

    /// Express an element as base-order coordinates if it lies in the image
    /// of the injection (exact membership test).
    pub fn project_to_base(&self, a: &Elem, base: &OrderContext) -> Option<Elem> {
        let bp = self.base_pairing.as_ref()?;
        // Solve the integer linear system over ℚ and verify exactly.
        use num_rational::BigRational;
        let rows: Vec<Vec<BigRational>> = (0..self.degree)
            .map(|r| {
                (0..base.degree)
                    .map(|k| BigRational::from(bp.injection[k][r].clone()))
                    .collect()
            })
            .collect();
        // Overdetermined: pick base.degree independent rows by greedy pivoting.
        let rhs: Vec<BigRational> = a.iter().map(|c| BigRational::from(c.clone())).collect();
        let mut chosen_rows: Vec<usize> = Vec::new();
        let mut work: Vec<Vec<BigRational>> = Vec::new();
        let mut rank = 0usize;
        for r in 0..self.degree {
            if rank == base.degree {
                break;
            }
            let mut cand: Vec<BigRational> = rows[r].clone();
            for (wi, w) in work.iter().enumerate() {
                let p = chosen_rows[wi];
                let pivcol = (0..base.degree).find(|&c| !w[c].is_zero()).unwrap();
                let f = &cand[pivcol] / &w[pivcol];
                let _ = p;
                for c in 0..base.degree {
                    let s = &w[c] * &f;
                    cand[c] = &cand[c] - &s;
                }
            }
            if cand.iter().any(|c| !c.is_zero()) {
                work.push(cand);
                chosen_rows.push(r);
                rank += 1;
            }
        }
        if rank < base.degree {
            return None;
        }
        let a_mat: Vec<Vec<BigRational>> = chosen_rows.iter().map(|&r| rows[r].clone()).collect();
        let b_vec: Vec<BigRational> = chosen_rows.iter().map(|&r| rhs[r].clone()).collect();
        let sol = poly::rational_solve(&a_mat, &b_vec)?;
        let mut coords = Vec::with_capacity(base.degree);
        for s in &sol {
            if !s.denom().is_one() {
                return None;
            }
            coords.push(s.numer().clone());
        }
        // Exact verification over the full system.
        let lifted = self.lift_from_base(&coords).ok()?;
        if lifted == *a {
            Some(coords)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn base_cubic() -> IntPoly {
        IntPoly::from_i64(&[-7, 15, -8, 1])
    }

    fn even_sextic() -> IntPoly {
        IntPoly::from_i64(&[-7, 0, 15, 0, -8, 0, 1])
    }

    fn ctx_m() -> OrderContext {
        make_context(&base_cubic(), Prec::new(60)).unwrap()
    }

    fn ctx_g() -> OrderContext {
        make_context(&even_sextic(), Prec::new(60)).unwrap()
    }

    #[test]
    fn signatures_and_root_order() {
        let m = ctx_m();
        assert_eq!(m.signature, (3, 0));
        let r: Vec<f64> = m.embeddings.iter().map(|z| z.real().to_f64()).collect();
        assert!(r[0] < r[1] && r[1] < r[2]);
        let g = ctx_g();
        assert_eq!(g.signature, (6, 0));
    }

    #[test]
    fn ring_axioms_spot_checks() {
        let m = ctx_m();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let rnd = |rng: &mut ChaCha8Rng| -> Elem {
                (0..3).map(|_| BigInt::from(rng.gen_range(-9i64..=9))).collect()
            };
            let (a, b, c) = (rnd(&mut rng), rnd(&mut rng), rnd(&mut rng));
            assert_eq!(m.mul(&a, &b), m.mul(&b, &a));
            assert_eq!(m.mul(&m.mul(&a, &b), &c), m.mul(&a, &m.mul(&b, &c)));
            assert_eq!(
                m.mul(&m.add(&a, &b), &c),
                m.add(&m.mul(&a, &c), &m.mul(&b, &c))
            );
        }
    }

    #[test]
    fn norms_of_reference_units_are_plus_minus_one() {
        let g = ctx_g();
        let units = [
            (elem_from_i64(&[1, 1, 0, 0, 0, 0]), 1),
            (elem_from_i64(&[1, -1, 0, 0, 0, 0]), 1),
            (elem_from_i64(&[2, 0, -1, 0, 0, 0]), 1),
            (elem_from_i64(&[3, 1, -1, 0, 0, 0]), -1),
            (elem_from_i64(&[3, -7, 0, 7, 0, -1]), -1),
        ];
        for (u, s) in &units {
            assert_eq!(g.norm(u), BigInt::from(*s));
        }
        let m = ctx_m();
        assert_eq!(m.norm(&elem_from_i64(&[0, 1, 0])), BigInt::from(7));
    }

    #[test]
    fn norm_is_multiplicative_exactly() {
        let m = ctx_m();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let rnd = |rng: &mut ChaCha8Rng| -> Elem {
                (0..3).map(|_| BigInt::from(rng.gen_range(-6i64..=6))).collect()
            };
            let (a, b) = (rnd(&mut rng), rnd(&mut rng));
            assert_eq!(m.norm(&m.mul(&a, &b)), m.norm(&a) * m.norm(&b));
        }
    }

    #[test]
    fn norm_agrees_with_conjugate_product() {
        let m = ctx_m();
        let a = elem_from_i64(&[2, -1, 3]);
        let exact = m.norm(&a);
        let bits = m.prec.bits();
        let mut prod = Complex::with_val(bits, 1);
        for j in 0..3 {
            prod *= m.embed(&a, j);
        }
        let approx = prod.real().to_f64();
        let exact_f = exact.to_string().parse::<f64>().unwrap();
        assert!((approx - exact_f).abs() <= 1e-6 * exact_f.abs().max(1.0));
    }

    #[test]
    fn size_is_submultiplicative() {
        let m = ctx_m();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..40 {
            let rnd = |rng: &mut ChaCha8Rng| -> Elem {
                (0..3).map(|_| BigInt::from(rng.gen_range(-6i64..=6))).collect()
            };
            let (a, b) = (rnd(&mut rng), rnd(&mut rng));
            let lhs = m.size(&m.mul(&a, &b));
            let rhs = m.size(&a) * m.size(&b);
            assert!(lhs <= rhs * (1.0 + 1e-10));
        }
    }

    #[test]
    fn mul_agrees_with_embeddings() {
        let m = ctx_m();
        let a = elem_from_i64(&[4, -2, 1]);
        let b = elem_from_i64(&[-3, 5, 2]);
        let ab = m.mul(&a, &b);
        for j in 0..3 {
            let lhs = m.embed(&ab, j);
            let rhs = Complex::with_val(m.prec.bits(), m.embed(&a, j) * m.embed(&b, j));
            let diff = Complex::with_val(m.prec.bits(), lhs - rhs).abs().real().clone();
            assert!(diff < m.prec.eps());
        }
    }

    #[test]
    fn enumerate_small_balls() {
        let m = ctx_m();
        let half = m.prec.float(0.5);
        let pts = m.enumerate_bounded(&half, 10_000).unwrap();
        assert_eq!(pts, vec![m.zero()]);
        let one = m.prec.float(1.0);
        let mut pts = m.enumerate_bounded(&one, 10_000).unwrap();
        pts.sort();
        let mut expect = vec![m.zero(), m.one(), m.neg(&m.one())];
        expect.sort();
        assert_eq!(pts, expect);
    }

    #[test]
    fn enumerate_matches_wide_brute_force() {
        let m = ctx_m();
        let bound = m.prec.float(3.2);
        let mut fast: Vec<Vec<i64>> = m
            .enumerate_bounded(&bound, 1_000_000)
            .unwrap()
            .into_iter()
            .map(|e| e.iter().map(|c| i64::try_from(c).unwrap()).collect())
            .collect();
        fast.sort();
        // Independent oracle: scan a generous fixed box with f64 embeddings.
        let roots: Vec<f64> = m.embeddings.iter().map(|z| z.real().to_f64()).collect();
        let mut slow: Vec<Vec<i64>> = Vec::new();
        for a in -40i64..=40 {
            for b in -40i64..=40 {
                for c in -40i64..=40 {
                    let sz = roots
                        .iter()
                        .map(|r| (a as f64 + b as f64 * r + c as f64 * r * r).abs())
                        .fold(0.0f64, f64::max);
                    if sz <= 3.2 {
                        slow.push(vec![a, b, c]);
                    }
                }
            }
        }
        slow.sort();
        assert_eq!(fast, slow);
    }

    #[test]
    fn divide_exact_cases() {
        let m = ctx_m();
        let two = m.from_int(&BigInt::from(2));
        assert!(matches!(
            m.divide_exact(&m.one(), &two),
            Err(Error::Verification(_))
        ));
        let a = elem_from_i64(&[3, -2, 1]);
        let b = elem_from_i64(&[1, 4, -2]);
        let ab = m.mul(&a, &b);
        assert_eq!(m.divide_exact(&ab, &b).unwrap(), a);
    }

    #[test]
    fn base_pairing_of_even_sextic_over_cubic() {
        let m = ctx_m();
        let g = ctx_g();
        // 1, μ, μ² map to 1, γ², γ⁴.
        let inj = vec![
            elem_from_i64(&[1, 0, 0, 0, 0, 0]),
            elem_from_i64(&[0, 0, 1, 0, 0, 0]),
            elem_from_i64(&[0, 0, 0, 0, 1, 0]),
        ];
        let g = g.with_base(&m, inj).unwrap();
        let bp = g.base_pairing.as_ref().unwrap();
        // Sorted sextic roots are ±2.35, ±1.33, ±0.845; squares pair them to
        // the cubic roots 5.51, 1.78, 0.715 (indices 2, 1, 0).
        assert_eq!(bp.embedding_map, vec![2, 1, 0, 0, 1, 2]);
        // Round trip through the projection.
        let x = elem_from_i64(&[5, -3, 2]);
        let lifted = g.lift_from_base(&x).unwrap();
        assert_eq!(g.project_to_base(&lifted, &m).unwrap(), x);
        // γ itself is not in the base image.
        let gamma = elem_from_i64(&[0, 1, 0, 0, 0, 0]);
        assert!(g.project_to_base(&gamma, &m).is_none());
    }

    #[test]
    fn char_poly_of_generator_and_subfield_element() {
        let g = ctx_g();
        let gamma = elem_from_i64(&[0, 1, 0, 0, 0, 0]);
        assert_eq!(g.char_poly(&gamma), even_sextic());
        // γ² generates the cubic subfield, so its characteristic polynomial
        // is the square of the cubic.
        let mu = elem_from_i64(&[0, 0, 1, 0, 0, 0]);
        let cubic = base_cubic();
        assert_eq!(g.char_poly(&mu), cubic.mul(&cubic));
    }

    #[test]
    fn precision_doubling_is_stable() {
        let f = base_cubic();
        let lo = make_context(&f, Prec::new(40)).unwrap();
        let hi = make_context(&f, Prec::new(80)).unwrap();
        let a = elem_from_i64(&[17, -6, 2]);
        let dl = lo.size(&a).to_f64();
        let dh = hi.size(&a).to_f64();
        assert!((dl - dh).abs() < 1e-18 * dh.abs());
    }
}
