//! Unit systems of a relative quadratic extension.
//!
//! A [`UnitSystem`] carries a list of generating units of the extension
//! order, the action of the relative involution on them (an integer exponent
//! matrix plus torsion signs), and the derived splitting of the exponent
//! lattice into the sublattice fixed by the involution and a complementary
//! quotient.  All structural facts are verified before use: exact norms,
//! multiplicative independence, involution consistency against the paired
//! embeddings.

use crate::bigfloat::Prec;
use crate::order::{Elem, OrderContext};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rug::{ops::Pow, Complex, Float};

/// The other extension embedding lying over the same base embedding.
pub fn conjugate_embedding(g: &OrderContext, j: usize) -> Result<usize> {
    let bp = g
        .base_pairing
        .as_ref()
        .ok_or_else(|| Error::MissingData("no base pairing attached".into()))?;
    for j2 in 0..g.degree {
        if j2 != j && bp.embedding_map[j2] == bp.embedding_map[j] {
            return Ok(j2);
        }
    }
    Err(Error::Verification(format!(
        "embedding {j} has no partner over the base"
    )))
}

#[derive(Clone, Debug)]
pub struct UnitSystem {
    pub units: Vec<Elem>,
    /// Row `k` gives the exponents of the involution image of unit `k`.
    pub conj_action: Vec<Vec<i64>>,
    /// Sign factor of the involution image of unit `k`.
    pub torsion_signs: Vec<i64>,
    /// Basis of the exponent vectors fixed by the involution (saturated).
    pub kernel_basis: Vec<Vec<i64>>,
    /// Coordinate positions complementary to the kernel pivots.
    pub complement: Vec<usize>,
    /// Quotient coordinates: `c = Q·a` vanishes exactly on the kernel.
    pub quotient_map: Vec<Vec<i64>>,
    /// Section of the quotient: `Q·L = I`.
    pub lift_map: Vec<Vec<i64>>,
    pub rank_relative: usize,
    pub rank_quotient: usize,
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.abs(), a.signum(), 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - (a.div_euclid(b)) * y)
    }
}

/// Unimodular row reduction of the columns spanned by `kernel`: returns
/// (E, pivot_rows) with E·K having an invertible upper block and zeros below.
fn row_reduce(kernel: &[Vec<i64>], t: usize) -> Result<(Vec<Vec<i64>>, Vec<usize>)> {
    let r = kernel.len();
    let mut m: Vec<Vec<i64>> = (0..t)
        .map(|row| (0..r).map(|col| kernel[col][row]).collect())
        .collect();
    let mut e: Vec<Vec<i64>> = (0..t)
        .map(|i| (0..t).map(|j| i64::from(i == j)).collect())
        .collect();
    let mut orig: Vec<usize> = (0..t).collect();
    for col in 0..r {
        let piv = (col..t)
            .find(|&i| m[i][col] != 0)
            .ok_or_else(|| Error::Verification("kernel basis is dependent".into()))?;
        m.swap(col, piv);
        e.swap(col, piv);
        orig.swap(col, piv);
        for i in 0..t {
            if i == col || m[i][col] == 0 {
                continue;
            }
            let (g, x, y) = ext_gcd(m[col][col], m[i][col]);
            let (p, q) = (m[col][col] / g, m[i][col] / g);
            for j in 0..r {
                let (a, b) = (m[col][j], m[i][j]);
                m[col][j] = x * a + y * b;
                m[i][j] = -q * a + p * b;
            }
            for j in 0..t {
                let (a, b) = (e[col][j], e[i][j]);
                e[col][j] = x * a + y * b;
                e[i][j] = -q * a + p * b;
            }
        }
        if m[col][col].abs() != 1 {
            return Err(Error::Verification(
                "kernel basis is not saturated".into(),
            ));
        }
        if m[col][col] < 0 {
            for j in 0..r {
                m[col][j] = -m[col][j];
            }
            for j in 0..t {
                e[col][j] = -e[col][j];
            }
        }
    }
    Ok((e, orig))
}

fn invert_unimodular(e: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    use num_rational::BigRational;
    let t = e.len();
    let a: Vec<Vec<BigRational>> = e
        .iter()
        .map(|row| row.iter().map(|&x| BigRational::from(BigInt::from(x))).collect())
        .collect();
    let mut inv = vec![vec![0i64; t]; t];
    for col in 0..t {
        let b: Vec<BigRational> = (0..t)
            .map(|i| BigRational::from(BigInt::from(i64::from(i == col))))
            .collect();
        let sol = crate::poly::rational_solve(&a, &b)
            .ok_or_else(|| Error::Verification("reduction matrix is singular".into()))?;
        for (i, s) in sol.iter().enumerate() {
            if !s.denom().is_one() {
                return Err(Error::Verification("reduction matrix is not unimodular".into()));
            }
            inv[i][col] = i64::try_from(s.numer().clone())
                .map_err(|_| Error::Verification("reduction matrix entry overflow".into()))?;
        }
    }
    Ok(inv)
}

impl UnitSystem {
    /// Build and fully verify a unit system over the extension order `g`.
    pub fn new(
        g: &OrderContext,
        units: Vec<Elem>,
        conj_action: Vec<Vec<i64>>,
        torsion_signs: Vec<i64>,
    ) -> Result<Self> {
        let t = units.len();
        if conj_action.len() != t
            || conj_action.iter().any(|r| r.len() != t)
            || torsion_signs.len() != t
            || torsion_signs.iter().any(|&s| s != 1 && s != -1)
        {
            return Err(Error::Parse("conjugation data has wrong shape".into()));
        }
        for u in &units {
            let n = g.norm(u);
            if !n.abs().is_one() {
                return Err(Error::Verification(format!(
                    "unit candidate has norm {n}"
                )));
            }
        }
        // Involution squares to the identity, including signs.
        for k in 0..t {
            for m in 0..t {
                let mut s = 0i64;
                for l in 0..t {
                    s += conj_action[k][l] * conj_action[l][m];
                }
                if s != i64::from(k == m) {
                    return Err(Error::Verification(
                        "conjugation matrix does not square to identity".into(),
                    ));
                }
            }
            let mut sign = torsion_signs[k];
            for l in 0..t {
                if conj_action[k][l].rem_euclid(2) == 1 && torsion_signs[l] == -1 {
                    sign = -sign;
                }
            }
            if sign != 1 {
                return Err(Error::Verification(
                    "conjugation signs do not square to identity".into(),
                ));
            }
        }
        // Multiplicative independence: the log-embedding matrix has full
        // column rank.
        let logm = log_matrix(g, &units);
        let rank = float_rank(&logm, &rank_threshold(g.prec));
        if rank != t {
            return Err(Error::Verification(format!(
                "units are multiplicatively dependent (log rank {rank} of {t})"
            )));
        }
        // The declared involution matches the embedding pairing.
        verify_conjugation(g, &units, &conj_action, &torsion_signs)?;

        // Fixed sublattice: kernel of (Aᵀ − I); exponent vectors transform
        // by a ↦ Aᵀa under the involution.
        let kernel_q = integer_kernel(&conj_action, t);
        let r = kernel_q.len();
        let s = t - r;
        let (e, orig) = row_reduce(&kernel_q, t)?;
        let einv = invert_unimodular(&e)?;
        let quotient_map: Vec<Vec<i64>> = e[r..].to_vec();
        let lift_map: Vec<Vec<i64>> = (0..t)
            .map(|i| (r..t).map(|j| einv[i][j]).collect())
            .collect();
        let mut complement: Vec<usize> = orig[r..].to_vec();
        complement.sort_unstable();
        Ok(UnitSystem {
            units,
            conj_action,
            torsion_signs,
            kernel_basis: kernel_q,
            complement,
            quotient_map,
            lift_map,
            rank_relative: r,
            rank_quotient: s,
        })
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Exponent image under the involution: sign and vector of `Aᵀa`.
    pub fn conjugate_exponent(&self, a: &[i64]) -> (i64, Vec<i64>) {
        let t = self.len();
        let mut out = vec![0i64; t];
        let mut sign = 1i64;
        for (k, &ak) in a.iter().enumerate() {
            for l in 0..t {
                out[l] += ak * self.conj_action[k][l];
            }
            if ak.rem_euclid(2) == 1 && self.torsion_signs[k] == -1 {
                sign = -sign;
            }
        }
        (sign, out)
    }

    /// Quotient coordinates of an exponent vector.
    pub fn quotient_coords(&self, a: &[i64]) -> Vec<i64> {
        self.quotient_map
            .iter()
            .map(|row| row.iter().zip(a).map(|(&q, &x)| q * x).sum())
            .collect()
    }

    /// A preimage of quotient coordinates under [`Self::quotient_coords`].
    pub fn lift_quotient(&self, c: &[i64]) -> Vec<i64> {
        self.lift_map
            .iter()
            .map(|row| row.iter().zip(c).map(|(&l, &x)| l * x).sum())
            .collect()
    }

    /// Value of `∏ units[k]^{a[k]}` under the `j`-th embedding.
    pub fn value_at(&self, g: &OrderContext, a: &[i64], j: usize) -> Complex {
        let bits = g.prec.bits();
        let mut acc = Complex::with_val(bits, 1);
        for (k, &ak) in a.iter().enumerate() {
            if ak != 0 {
                let v = g.embed(&self.units[k], j);
                acc *= v.pow(i32::try_from(ak).expect("exponent fits i32"));
            }
        }
        acc
    }

    /// `∏ units[k]^{a[k]}` as an exact order element.
    pub fn element_of_exponent(&self, g: &OrderContext, a: &[i64]) -> Result<Elem> {
        let mut num = g.one();
        let mut den = g.one();
        for (k, &ak) in a.iter().enumerate() {
            let e = u32::try_from(ak.unsigned_abs()).map_err(|_| {
                Error::CardinalityCap("exponent too large for exact expansion".into())
            })?;
            let p = g.pow(&self.units[k], e);
            if ak >= 0 {
                num = g.mul(&num, &p);
            } else {
                den = g.mul(&den, &p);
            }
        }
        g.divide_exact(&num, &den)
    }
}

/// `log|unit value|` for every embedding (rows) and unit (columns).
pub fn log_matrix(g: &OrderContext, units: &[Elem]) -> Vec<Vec<Float>> {
    (0..g.degree)
        .map(|j| {
            units
                .iter()
                .map(|u| g.embed(u, j).abs().real().clone().ln())
                .collect()
        })
        .collect()
}

fn rank_threshold(prec: Prec) -> Float {
    let bits = prec.bits();
    Float::with_val(bits, 10).pow(-(prec.digits as i32) / 4)
}

fn float_rank(m: &[Vec<Float>], threshold: &Float) -> usize {
    if m.is_empty() {
        return 0;
    }
    let rows = m.len();
    let cols = m[0].len();
    let mut a: Vec<Vec<Float>> = m.to_vec();
    let mut rank = 0;
    for col in 0..cols {
        let piv = (rank..rows).max_by(|&i, &j| {
            a[i][col]
                .clone()
                .abs()
                .partial_cmp(&a[j][col].clone().abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let piv = match piv {
            Some(p) => p,
            None => break,
        };
        if a[piv][col].clone().abs() <= *threshold {
            continue;
        }
        a.swap(rank, piv);
        for i in rank + 1..rows {
            let f = a[i][col].clone() / a[rank][col].clone();
            for j in col..cols {
                let s = a[rank][j].clone() * &f;
                a[i][j] -= s;
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Saturated integer kernel of `Aᵀ − I`.
fn integer_kernel(conj_action: &[Vec<i64>], t: usize) -> Vec<Vec<i64>> {
    use num_rational::BigRational;
    // Rows of D are the relations: D[l][k] = A[k][l] − δ_{kl}.
    let mut d: Vec<Vec<BigRational>> = (0..t)
        .map(|l| {
            (0..t)
                .map(|k| {
                    BigRational::from(BigInt::from(
                        conj_action[k][l] - i64::from(k == l),
                    ))
                })
                .collect()
        })
        .collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row = 0usize;
    for col in 0..t {
        if let Some(p) = (row..t).find(|&i| !d[i][col].is_zero()) {
            d.swap(row, p);
            let inv = d[row][col].clone();
            for j in 0..t {
                d[row][j] = &d[row][j] / &inv;
            }
            for i in 0..t {
                if i != row && !d[i][col].is_zero() {
                    let f = d[i][col].clone();
                    for j in 0..t {
                        let s = &d[row][j] * &f;
                        d[i][j] = &d[i][j] - &s;
                    }
                }
            }
            pivots.push((row, col));
            row += 1;
        }
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let free_cols: Vec<usize> = (0..t).filter(|c| !pivot_cols.contains(c)).collect();
    let mut basis = Vec::new();
    for &fc in &free_cols {
        let mut v = vec![BigRational::from(BigInt::from(0)); t];
        v[fc] = BigRational::from(BigInt::from(1));
        for &(pr, pc) in &pivots {
            v[pc] = -d[pr][fc].clone();
        }
        // Clear denominators and make primitive.
        let mut lcm = BigInt::one();
        for x in &v {
            lcm = num_integer::lcm(lcm, x.denom().clone());
        }
        let ints: Vec<BigInt> = v.iter().map(|x| (x * BigRational::from(lcm.clone())).numer().clone()).collect();
        let mut gcd = BigInt::from(0);
        for x in &ints {
            gcd = num_integer::gcd(gcd, x.clone());
        }
        if gcd.is_one() || gcd > BigInt::one() {
            let out: Vec<i64> = ints
                .iter()
                .map(|x| i64::try_from(x / &gcd).expect("kernel entry fits i64"))
                .collect();
            basis.push(out);
        }
    }
    basis
}

fn verify_conjugation(
    g: &OrderContext,
    units: &[Elem],
    conj_action: &[Vec<i64>],
    torsion_signs: &[i64],
) -> Result<()> {
    let bits = g.prec.bits();
    let tol = Prec {
        digits: g.prec.digits,
    }
    .eps();
    for (k, u) in units.iter().enumerate() {
        for j in 0..g.degree {
            let j2 = conjugate_embedding(g, j)?;
            let lhs = g.embed(u, j2);
            let mut rhs = Complex::with_val(bits, torsion_signs[k]);
            for (l, &e) in conj_action[k].iter().enumerate() {
                if e != 0 {
                    rhs *= g.embed(&units[l], j).pow(i32::try_from(e).unwrap());
                }
            }
            let scale = Float::with_val(bits, lhs.clone().abs().real()) + 1u32;
            let diff = Complex::with_val(bits, lhs - rhs).abs().real().clone();
            if diff > scale * &tol {
                return Err(Error::Verification(format!(
                    "conjugation image of unit {k} mismatches at embedding {j}"
                )));
            }
        }
    }
    Ok(())
}
