//! Exact univariate polynomials over the integers, resultants and
//! discriminants via the primitive pseudo-remainder sequence, fraction-free
//! determinants, and arbitrary-precision complex root finding.

use crate::bigfloat::{big_to_rug, Prec};
use num_bigint::BigInt;
use num_integer::Integer as _;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rug::{Complex, Float};

/// Dense polynomial with ascending integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPoly {
    pub coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        IntPoly { coeffs }
    }

    pub fn zero() -> Self {
        IntPoly { coeffs: vec![] }
    }

    pub fn one() -> Self {
        IntPoly {
            coeffs: vec![BigInt::one()],
        }
    }

    pub fn from_i64(cs: &[i64]) -> Self {
        Self::new(cs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn lc(&self) -> BigInt {
        self.coeffs.last().cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn neg(&self) -> Self {
        IntPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![BigInt::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        IntPoly::new(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        IntPoly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn derivative(&self) -> Self {
        IntPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i))
                .collect(),
        )
    }

    pub fn eval_big(&self, x: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = &acc * x + c;
        }
        acc
    }

    pub fn eval_rational(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = &acc * x + BigRational::from(c.clone());
        }
        acc
    }

    pub fn eval_complex(&self, z: &Complex, prec: Prec) -> Complex {
        let bits = prec.bits();
        let mut acc = Complex::with_val(bits, 0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + Complex::with_val(bits, Float::with_val(bits, big_to_rug(c)));
        }
        acc
    }

    /// Greatest common divisor of the coefficients (nonnegative).
    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.coeffs {
            g = g.gcd(c);
        }
        g
    }

    pub fn primitive_part(&self) -> (BigInt, Self) {
        let c = self.content();
        if c.is_zero() || c.is_one() {
            return (BigInt::one(), self.clone());
        }
        (
            c.clone(),
            IntPoly::new(self.coeffs.iter().map(|x| x / &c).collect()),
        )
    }

    /// Exact division; `None` if `other` does not divide `self` over ℤ.
    pub fn div_exact(&self, other: &Self) -> Option<Self> {
        if other.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(IntPoly::zero());
        }
        if self.degree() < other.degree() {
            return None;
        }
        let mut rem = self.coeffs.clone();
        let dq = self.degree() - other.degree();
        let mut q = vec![BigInt::zero(); dq + 1];
        let lc = other.lc();
        for k in (0..=dq).rev() {
            let top = rem[k + other.degree()].clone();
            if (&top % &lc) != BigInt::zero() {
                return None;
            }
            let c = &top / &lc;
            for (j, b) in other.coeffs.iter().enumerate() {
                rem[k + j] -= &c * b;
            }
            q[k] = c;
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return None;
        }
        Some(IntPoly::new(q))
    }
}

/// Pseudo-remainder: returns `R` with `lc(g)^(δ+1)·f = q·g + R`, `δ = deg f − deg g`.
fn pseudo_rem(f: &IntPoly, g: &IntPoly) -> IntPoly {
    let df = f.degree();
    let dg = g.degree();
    debug_assert!(!g.is_zero() && df >= dg);
    let lcg = g.lc();
    let mut r = f.coeffs.clone();
    for k in (dg..=df).rev() {
        let top = r[k].clone();
        for c in r.iter_mut().take(k) {
            *c = &*c * &lcg;
        }
        for (j, b) in g.coeffs.iter().take(dg).enumerate() {
            r[k - dg + j] -= &top * b;
        }
        r[k] = BigInt::zero();
        for c in r.iter_mut().skip(k + 1) {
            *c = &*c * &lcg;
        }
    }
    IntPoly::new(r)
}

/// Resultant of two integer polynomials, exact.
///
/// Uses the primitive pseudo-remainder sequence with an exact rational
/// correction factor carried alongside, so intermediate coefficient growth
/// stays polynomial while the result is the true resultant.
pub fn resultant(f: &IntPoly, g: &IntPoly) -> BigInt {
    fn go(f: &IntPoly, g: &IntPoly) -> BigRational {
        let df = f.degree();
        let dg = g.degree();
        if f.is_zero() || g.is_zero() {
            return BigRational::zero();
        }
        if df < dg {
            let sign = if (df * dg) % 2 == 1 {
                -BigRational::one()
            } else {
                BigRational::one()
            };
            return sign * go(g, f);
        }
        if dg == 0 {
            return BigRational::from(num_traits::pow::pow(g.lc(), df));
        }
        let delta = df - dg;
        let r = pseudo_rem(f, g);
        if r.is_zero() {
            return BigRational::zero();
        }
        let (cont, rp) = r.primitive_part();
        let dr = r.degree();
        // Res(f,g) = (−1)^{df·dg} · lc(g)^{df−dr} / lc(g)^{(δ+1)·dg} · cont^{dg} · Res(g, r/cont)
        let lcg = BigRational::from(g.lc());
        let mut factor = num_traits::pow::pow(lcg.clone(), df - dr)
            / num_traits::pow::pow(lcg, (delta + 1) * dg);
        factor = factor * num_traits::pow::pow(BigRational::from(cont), dg);
        if (df * dg) % 2 == 1 {
            factor = -factor;
        }
        factor * go(g, &rp)
    }
    let r = go(f, g);
    debug_assert!(r.denom().is_one(), "resultant must be an integer");
    r.numer().clone()
}

/// Discriminant `(−1)^{n(n−1)/2}·Res(f,f′)/lc(f)`, exact.
pub fn discriminant(f: &IntPoly) -> BigInt {
    let n = f.degree();
    let r = resultant(f, &f.derivative());
    let lc = f.lc();
    debug_assert!((&r % &lc).is_zero());
    let d = &r / &lc;
    if (n * (n - 1) / 2) % 2 == 1 {
        -d
    } else {
        d
    }
}

/// Fraction-free (Bareiss) determinant of a square integer matrix.
pub fn bareiss_det(mat: &[Vec<BigInt>]) -> BigInt {
    let n = mat.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut m: Vec<Vec<BigInt>> = mat.to_vec();
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let swap = (k + 1..n).find(|&i| !m[i][k].is_zero());
            match swap {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                debug_assert!((&num % &prev).is_zero());
                m[i][j] = &num / &prev;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}

/// Characteristic polynomial `det(xI − M)` of an integer matrix, exact,
/// by evaluation at `n+1` integer points and Lagrange interpolation.
pub fn charpoly(mat: &[Vec<BigInt>]) -> IntPoly {
    let n = mat.len();
    let points: Vec<BigInt> = (0..=n as i64).map(BigInt::from).collect();
    let values: Vec<BigInt> = points
        .iter()
        .map(|x| {
            let shifted: Vec<Vec<BigInt>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i == j {
                                x - &mat[i][j]
                            } else {
                                -&mat[i][j]
                            }
                        })
                        .collect()
                })
                .collect();
            bareiss_det(&shifted)
        })
        .collect();
    // Lagrange interpolation over ℚ; the result is integral.
    let mut acc = vec![BigRational::zero(); n + 1];
    for (i, xi) in points.iter().enumerate() {
        let mut basis = vec![BigRational::one()];
        let mut denom = BigRational::one();
        for (j, xj) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut next = vec![BigRational::zero(); basis.len() + 1];
            for (k, b) in basis.iter().enumerate() {
                next[k] -= b * BigRational::from(xj.clone());
                next[k + 1] += b;
            }
            basis = next;
            denom *= BigRational::from(xi - xj);
        }
        let w = BigRational::from(values[i].clone()) / denom;
        for (k, b) in basis.iter().enumerate() {
            acc[k] += b * &w;
        }
    }
    IntPoly::new(
        acc.into_iter()
            .map(|c| {
                debug_assert!(c.denom().is_one());
                c.numer().clone()
            })
            .collect(),
    )
}

/// Exact solution of `A·x = b` over the rationals; `None` when singular.
pub fn rational_solve(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for k in 0..n {
        let pivot = (k..n).find(|&i| !m[i][k].is_zero())?;
        m.swap(k, pivot);
        let p = m[k][k].clone();
        for j in k..=n {
            m[k][j] = &m[k][j] / &p;
        }
        for i in 0..n {
            if i != k && !m[i][k].is_zero() {
                let f = m[i][k].clone();
                for j in k..=n {
                    let sub = &m[k][j] * &f;
                    m[i][j] = &m[i][j] - &sub;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

/// All complex roots of an exact integer polynomial at the given precision.
///
/// Aberth–Ehrlich iteration with deterministic initial values; the caller is
/// responsible for choosing a precision at which the roots are separated
/// (inputs here are separable by construction).
pub fn complex_roots(f: &IntPoly, prec: Prec) -> Vec<Complex> {
    let bits = prec.bits();
    let coeffs: Vec<Complex> = f
        .coeffs
        .iter()
        .map(|c| Complex::with_val(bits, Float::with_val(bits, big_to_rug(c))))
        .collect();
    complex_roots_c(&coeffs, prec)
}

/// All complex roots of a polynomial with complex coefficients (ascending).
pub fn complex_roots_c(coeffs: &[Complex], prec: Prec) -> Vec<Complex> {
    let bits = prec.bits();
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return vec![];
    }
    let eval = |z: &Complex| -> Complex {
        let mut acc = Complex::with_val(bits, 0);
        for c in coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    };
    let deriv: Vec<Complex> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| Complex::with_val(bits, c * Float::with_val(bits, i as u32)))
        .collect();
    let eval_d = |z: &Complex| -> Complex {
        let mut acc = Complex::with_val(bits, 0);
        for c in deriv.iter().rev() {
            acc = acc * z + c;
        }
        acc
    };

    // Cauchy-style inclusion radius 1 + max |c_i / c_n|.
    let lead = Float::with_val(bits, coeffs[n].clone().abs().real());
    let mut radius = Float::with_val(bits, 0);
    for c in coeffs.iter().take(n) {
        let a = Float::with_val(bits, c.clone().abs().real()) / &lead;
        if a > radius {
            radius = a;
        }
    }
    radius += 1;

    let pi = Float::with_val(bits, rug::float::Constant::Pi);
    let mut z: Vec<Complex> = (0..n)
        .map(|k| {
            // Staggered radii and an irrational phase offset break the
            // symmetries of even and reciprocal polynomials.
            let theta = Float::with_val(bits, 2 * k as u32 + 1) * &pi / Float::with_val(bits, n)
                + Float::with_val(bits, 0.3941);
            let r = radius.clone() * (1.0 + 0.07 * (k as f64) / (n as f64));
            Complex::with_val(bits, (r * theta.clone().cos(), radius.clone() * theta.sin()))
        })
        .collect();

    let tol = Float::with_val(bits, Float::i_exp(1, -(bits as i32) + 24));
    let max_iter = 60 + 4 * (prec.digits as usize);
    for _ in 0..max_iter {
        let mut done = true;
        for i in 0..n {
            let pz = eval(&z[i]);
            let dz = eval_d(&z[i]);
            let w = if dz.clone().abs().real().is_zero() {
                Complex::with_val(bits, (1e-20, 1e-20))
            } else {
                pz / dz
            };
            let mut s = Complex::with_val(bits, 0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    let d = Complex::with_val(bits, &z[i] - zj);
                    if !d.clone().abs().real().is_zero() {
                        s += d.recip();
                    }
                }
            }
            let denom = Complex::with_val(bits, 1) - w.clone() * s;
            let corr = if denom.clone().abs().real().is_zero() {
                w
            } else {
                w / denom
            };
            let step = corr.clone().abs().real().clone();
            let scale = Float::with_val(bits, z[i].clone().abs().real()).max(&Float::with_val(bits, 1));
            if step > tol.clone() * scale {
                done = false;
            }
            z[i] -= corr;
        }
        if done {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigfloat::Prec;

    fn p(cs: &[i64]) -> IntPoly {
        IntPoly::from_i64(cs)
    }

    #[test]
    fn arithmetic_and_division() {
        let f = p(&[-1, 0, 1]); // x^2 - 1
        let g = p(&[1, 1]); // x + 1
        let h = f.div_exact(&g).unwrap();
        assert_eq!(h, p(&[-1, 1]));
        assert_eq!(g.mul(&h), f);
        assert!(p(&[1, 1, 1]).div_exact(&g).is_none());
    }

    #[test]
    fn resultant_matches_sylvester_determinant() {
        // Res(x^2-3x+2, x^2-1) computed two ways.
        let f = p(&[2, -3, 1]);
        let g = p(&[-1, 0, 1]);
        let syl = vec![
            vec![
                BigInt::from(1),
                BigInt::from(-3),
                BigInt::from(2),
                BigInt::from(0),
            ],
            vec![
                BigInt::from(0),
                BigInt::from(1),
                BigInt::from(-3),
                BigInt::from(2),
            ],
            vec![
                BigInt::from(1),
                BigInt::from(0),
                BigInt::from(-1),
                BigInt::from(0),
            ],
            vec![
                BigInt::from(0),
                BigInt::from(1),
                BigInt::from(0),
                BigInt::from(-1),
            ],
        ];
        assert_eq!(resultant(&f, &g), bareiss_det(&syl));
        // Res = prod of g at roots of f (f monic): g(1)*g(2) = 0*3 = 0.
        assert_eq!(resultant(&f, &g), BigInt::from(0));
        let g2 = p(&[-5, 0, 1]);
        // g2(1)*g2(2) = (-4)*(-1) = 4.
        assert_eq!(resultant(&f, &g2), BigInt::from(4));
    }

    #[test]
    fn discriminant_of_known_cubics() {
        // disc(x^3 + px + q) = -4p^3 - 27q^2.
        let f = p(&[2, -1, 0, 1]);
        assert_eq!(discriminant(&f), BigInt::from(-4 * (-1i64).pow(3) - 27 * 4));
        // The base cubic used throughout the test suite; 361 = 19^2.
        let m = p(&[-7, 15, -8, 1]);
        assert_eq!(discriminant(&m), BigInt::from(361));
    }

    #[test]
    fn bareiss_handles_swaps_and_singularity() {
        let z = |v: i64| BigInt::from(v);
        let m = vec![
            vec![z(0), z(2), z(1)],
            vec![z(1), z(0), z(0)],
            vec![z(3), z(1), z(5)],
        ];
        // det = -9 by cofactor expansion.
        assert_eq!(bareiss_det(&m), z(-9));
        let s = vec![
            vec![z(1), z(2), z(3)],
            vec![z(2), z(4), z(6)],
            vec![z(7), z(8), z(9)],
        ];
        assert_eq!(bareiss_det(&s), z(0));
    }

    #[test]
    fn charpoly_of_companion_matrix_recovers_polynomial() {
        // Companion matrix of x^3 - 8x^2 + 15x - 7.
        let z = |v: i64| BigInt::from(v);
        let m = vec![
            vec![z(0), z(0), z(7)],
            vec![z(1), z(0), z(-15)],
            vec![z(0), z(1), z(8)],
        ];
        assert_eq!(charpoly(&m), p(&[-7, 15, -8, 1]));
    }

    #[test]
    fn rational_solve_small_system() {
        let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        let a = vec![vec![q(2, 1), q(1, 1)], vec![q(1, 1), q(3, 1)]];
        let b = vec![q(5, 1), q(10, 1)];
        let x = rational_solve(&a, &b).unwrap();
        assert_eq!(x, vec![q(1, 1), q(3, 1)]);
    }

    #[test]
    fn roots_of_base_cubic_are_real_and_accurate() {
        let prec = Prec::new(60);
        let f = p(&[-7, 15, -8, 1]);
        let mut roots = complex_roots(&f, prec);
        roots.sort_by(|a, b| crate::bigfloat::cmp_roots(a, b, &prec.eps()));
        assert_eq!(roots.len(), 3);
        let expect = [0.7148575181702146, 1.7781238377368091, 5.507018644092976];
        for (r, e) in roots.iter().zip(expect) {
            assert!(r.imag().clone().abs() < prec.eps());
            assert!((r.real().clone() - Float::with_val(64, e)).abs() < 1e-12);
        }
    }

    #[test]
    fn roots_of_even_sextic_come_in_sign_pairs() {
        let prec = Prec::new(80);
        let f = p(&[-7, 0, 15, 0, -8, 0, 1]);
        let mut roots = complex_roots(&f, prec);
        roots.sort_by(|a, b| crate::bigfloat::cmp_roots(a, b, &prec.eps()));
        assert_eq!(roots.len(), 6);
        let expect = [
            -2.3467037827755288,
            -1.333463099503248,
            -0.8454924707945155,
            0.8454924707945155,
            1.333463099503248,
            2.3467037827755288,
        ];
        for (r, e) in roots.iter().zip(expect) {
            assert!(r.imag().clone().abs() < prec.eps());
            assert!((r.real().clone() - Float::with_val(96, e)).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_roots_of_totally_complex_quartic() {
        let prec = Prec::new(60);
        // x^4 + 1: all roots on the unit circle off the real axis.
        let f = p(&[1, 0, 0, 0, 1]);
        let roots = complex_roots(&f, prec);
        assert_eq!(roots.len(), 4);
        for r in &roots {
            assert!((r.clone().abs().real().clone() - 1f64).abs() < 1e-12);
            assert!(r.imag().clone().abs() > 0.5);
        }
    }
}
