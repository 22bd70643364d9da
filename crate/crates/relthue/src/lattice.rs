//! Exact lattice tools: LLL reduction, bound-shrinking via closest-vector
//! certificates, and integer-point enumeration in ellipsoids.
//!
//! Floating point is only used to propose enumeration ranges; every accepted
//! distance comparison is re-done in exact integer arithmetic, and the LLL
//! output is verified against its recorded unimodular transform.

use crate::bigfloat::{self, round_to_big};
use crate::poly;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rug::ops::Pow;
use rug::Float;

/// A lattice given by basis vectors (each entry one basis vector).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerLattice {
    pub columns: Vec<Vec<BigInt>>,
}

impl IntegerLattice {
    pub fn new(columns: Vec<Vec<BigInt>>) -> Self {
        IntegerLattice { columns }
    }

    pub fn from_i64(cols: &[&[i64]]) -> Self {
        IntegerLattice {
            columns: cols
                .iter()
                .map(|c| c.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.columns.first().map_or(0, |c| c.len())
    }
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rat(x: BigInt) -> BigRational {
    BigRational::from(x)
}

fn round_rational(x: &BigRational) -> BigInt {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    (x + half).floor().to_integer()
}

/// Full Gram–Schmidt data (`μ` strictly lower triangular, `B` the squared
/// orthogonalized norms), exact.
fn gso(cols: &[Vec<BigInt>]) -> Result<(Vec<Vec<BigRational>>, Vec<BigRational>)> {
    let n = cols.len();
    let d = cols[0].len();
    let mut mu = vec![vec![BigRational::zero(); n]; n];
    let mut b = vec![BigRational::zero(); n];
    let mut star: Vec<Vec<BigRational>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v: Vec<BigRational> = cols[i].iter().cloned().map(rat).collect();
        for j in 0..i {
            let mut num = BigRational::zero();
            for k in 0..d {
                num += rat(cols[i][k].clone()) * &star[j][k];
            }
            let m = num / &b[j];
            for k in 0..d {
                let s = &m * &star[j][k];
                v[k] -= s;
            }
            mu[i][j] = m;
        }
        let norm: BigRational = v.iter().map(|x| x * x).sum();
        if norm.is_zero() {
            return Err(Error::Verification("lattice basis is dependent".into()));
        }
        b[i] = norm;
        star.push(v);
    }
    Ok((mu, b))
}

/// LLL reduction result with the recorded unimodular transform:
/// `reduced[i] = Σ_j transform[i][j]·input[j]`.
#[derive(Clone, Debug)]
pub struct LLLResult {
    pub reduced: IntegerLattice,
    pub transform: Vec<Vec<BigInt>>,
}

/// Exact LLL with δ = 3/4.  Verifies on exit that the transform reproduces
/// the output, has determinant ±1, and that the reduced basis satisfies the
/// size-reduction and exchange conditions.
pub fn lll_reduce(lat: &IntegerLattice) -> Result<LLLResult> {
    let n = lat.rank();
    if n == 0 {
        return Ok(LLLResult {
            reduced: lat.clone(),
            transform: vec![],
        });
    }
    let mut cols = lat.columns.clone();
    let mut u: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect();
    let (mut mu, mut b) = gso(&cols)?;
    let delta = BigRational::new(BigInt::from(3), BigInt::from(4));

    let red = |cols: &mut Vec<Vec<BigInt>>,
               u: &mut Vec<Vec<BigInt>>,
               mu: &mut Vec<Vec<BigRational>>,
               k: usize,
               l: usize| {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        if mu[k][l].clone().abs() > half {
            let q = round_rational(&mu[k][l]);
            let qr = rat(q.clone());
            for idx in 0..cols[k].len() {
                let s = &q * &cols[l][idx];
                cols[k][idx] -= s;
            }
            for idx in 0..u[k].len() {
                let s = &q * &u[l][idx];
                u[k][idx] -= s;
            }
            for i in 0..l {
                let s = &qr * &mu[l][i];
                mu[k][i] -= s;
            }
            let s = qr;
            mu[k][l] -= s;
        }
    };

    let mut k = 1usize;
    while k < n {
        red(&mut cols, &mut u, &mut mu, k, k - 1);
        let lhs = b[k].clone();
        let rhs = (&delta - &mu[k][k - 1] * &mu[k][k - 1]) * &b[k - 1];
        if lhs < rhs {
            cols.swap(k, k - 1);
            u.swap(k, k - 1);
            for j in 0..k.saturating_sub(1) {
                let t = mu[k][j].clone();
                mu[k][j] = mu[k - 1][j].clone();
                mu[k - 1][j] = t;
            }
            let m = mu[k][k - 1].clone();
            let bnew = &b[k] + &m * &m * &b[k - 1];
            let t = &b[k - 1] / &bnew;
            mu[k][k - 1] = &m * &t;
            b[k] = &b[k] * &t;
            b[k - 1] = bnew;
            for i in k + 1..n {
                let t2 = mu[i][k].clone();
                mu[i][k] = &mu[i][k - 1] - &m * &t2;
                mu[i][k - 1] = &t2 + &mu[k][k - 1] * &mu[i][k];
            }
            k = k.max(2) - 1;
        } else {
            for l in (0..k.saturating_sub(1)).rev() {
                red(&mut cols, &mut u, &mut mu, k, l);
            }
            k += 1;
        }
    }

    // Exit verification: transform validity, unimodularity, reduction
    // conditions.
    for i in 0..n {
        let mut acc = vec![BigInt::zero(); lat.ambient_dim()];
        for j in 0..n {
            for idx in 0..acc.len() {
                acc[idx] += &u[i][j] * &lat.columns[j][idx];
            }
        }
        if acc != cols[i] {
            return Err(Error::Verification("LLL transform mismatch".into()));
        }
    }
    let det = poly::bareiss_det(&u);
    if !det.clone().abs().is_one() {
        return Err(Error::Verification("LLL transform not unimodular".into()));
    }
    let (mu2, b2) = gso(&cols)?;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    for i in 0..n {
        for j in 0..i {
            if mu2[i][j].clone().abs() > half {
                return Err(Error::Verification("LLL size reduction violated".into()));
            }
        }
        if i > 0 {
            let rhs = (&delta - &mu2[i][i - 1] * &mu2[i][i - 1]) * &b2[i - 1];
            if b2[i] < rhs {
                return Err(Error::Verification("LLL exchange condition violated".into()));
            }
        }
    }
    Ok(LLLResult {
        reduced: IntegerLattice { columns: cols },
        transform: u,
    })
}

/// Integer points `x` with `(x−c)ᵀ G (x−c) ≤ r²`, in lexicographic order.
///
/// `G` must be positive definite at the working precision; a failed Cholesky
/// factorization is reported as a precision error so callers can retry
/// higher.  The cap aborts oversized enumerations before materializing them.
pub fn enumerate_ellipsoid(
    gram: &[Vec<Float>],
    center: &[Float],
    r2: &Float,
    cap: usize,
) -> Result<Vec<Vec<i64>>> {
    let n = gram.len();
    if n == 0 {
        return Ok(vec![vec![]]);
    }
    let bits = gram[0][0].prec();
    let r = cholesky_upper(gram)?;
    let mut out: Vec<Vec<i64>> = Vec::new();
    let mut x = vec![0i64; n];
    // Depth-first from the last coordinate; `used` carries the partial sum.
    fn descend(
        lvl: usize,
        n: usize,
        r: &[Vec<Float>],
        center: &[Float],
        x: &mut Vec<i64>,
        used: &Float,
        r2: &Float,
        out: &mut Vec<Vec<i64>>,
        cap: usize,
    ) -> Result<()> {
        let bits = r2.prec();
        let rem = Float::with_val(bits, r2 - used);
        if rem < 0 {
            return Ok(());
        }
        let i = lvl - 1;
        // Offset from already-fixed coordinates j > i.
        let mut off = Float::with_val(bits, 0);
        for j in i + 1..n {
            off += Float::with_val(bits, &r[i][j] * &(Float::with_val(bits, x[j]) - &center[j]));
        }
        let w = Float::with_val(bits, rem.clone().sqrt() / &r[i][i]);
        let mid = Float::with_val(bits, &center[i] - Float::with_val(bits, &off / &r[i][i]));
        let lo = Float::with_val(bits, &mid - &w).ceil().to_f64();
        let hi = Float::with_val(bits, &mid + &w).floor().to_f64();
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Precision("enumeration range overflow".into()));
        }
        let (lo, hi) = (lo as i64, hi as i64);
        for v in lo..=hi {
            x[i] = v;
            let term = Float::with_val(
                bits,
                &r[i][i] * &(Float::with_val(bits, v) - &mid),
            );
            let used2 = Float::with_val(bits, used + Float::with_val(bits, &term * &term));
            if used2 > *r2 {
                continue;
            }
            if i == 0 {
                if out.len() >= cap {
                    return Err(Error::CardinalityCap(format!(
                        "ellipsoid enumeration exceeds cap {cap}"
                    )));
                }
                out.push(x.clone());
            } else {
                descend(i, n, r, center, x, &used2, r2, out, cap)?;
            }
        }
        x[i] = 0;
        Ok(())
    }
    descend(
        n,
        n,
        &r,
        center,
        &mut x,
        &Float::with_val(bits, 0),
        r2,
        &mut out,
        cap,
    )?;
    out.sort();
    Ok(out)
}

/// Cholesky factorization `G = RᵀR` with `R` upper triangular; fails as a
/// precision error when the form is not positive definite at working
/// precision.
fn cholesky_upper(gram: &[Vec<Float>]) -> Result<Vec<Vec<Float>>> {
    let n = gram.len();
    let bits = gram[0][0].prec();
    let mut r = vec![vec![Float::with_val(bits, 0); n]; n];
    for i in 0..n {
        let mut d = gram[i][i].clone();
        for k in 0..i {
            d -= Float::with_val(bits, &r[k][i] * &r[k][i]);
        }
        if d <= 0 {
            return Err(Error::Precision(
                "quadratic form not positive definite at working precision".into(),
            ));
        }
        r[i][i] = d.sqrt();
        for j in i + 1..n {
            let mut s = gram[i][j].clone();
            for k in 0..i {
                s -= Float::with_val(bits, &r[k][i] * &r[k][j]);
            }
            r[i][j] = s / &r[i][i];
        }
    }
    Ok(r)
}

/// Solve a positive definite float system by Gaussian elimination with
/// partial pivoting.
pub(crate) fn float_solve(m_in: &[Vec<Float>], rhs: &[Float]) -> Result<Vec<Float>> {
    let n = rhs.len();
    let bits = rhs[0].prec();
    let mut m: Vec<Vec<Float>> = m_in.to_vec();
    let mut v = rhs.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| {
                m[i][col]
                    .clone()
                    .abs()
                    .partial_cmp(&m[j][col].clone().abs())
                    .unwrap()
            })
            .unwrap();
        if m[piv][col].is_zero() {
            return Err(Error::Precision("linear system is singular".into()));
        }
        m.swap(col, piv);
        v.swap(col, piv);
        for row in col + 1..n {
            let f = Float::with_val(bits, &m[row][col] / &m[col][col]);
            for k in col..n {
                let sub = Float::with_val(bits, &f * &m[col][k]);
                m[row][k] -= sub;
            }
            let sub = Float::with_val(bits, &f * &v[col]);
            v[row] -= sub;
        }
    }
    let mut x = vec![Float::with_val(bits, 0); n];
    for row in (0..n).rev() {
        let mut acc = v[row].clone();
        for k in row + 1..n {
            acc -= Float::with_val(bits, &m[row][k] * &x[k]);
        }
        x[row] = acc / &m[row][row];
    }
    Ok(x)
}

/// Ellipsoid enumeration for badly conditioned forms (thin slabs across
/// large balls).  The plain recursion sweeps the large directions before the
/// thin one can prune, so its tree can dwarf the point count by many orders.
/// An LLL basis computed from a scaled Cholesky factor turns the form into
/// near-orthogonal coordinates first; the change of variables is unimodular,
/// so the returned point set is identical.
pub fn enumerate_ellipsoid_reduced(
    gram: &[Vec<Float>],
    center: &[Float],
    r2: &Float,
    cap: usize,
) -> Result<Vec<Vec<i64>>> {
    let n = gram.len();
    if n == 0 {
        return Ok(vec![vec![]]);
    }
    let bits = gram[0][0].prec();
    let r = cholesky_upper(gram)?;
    let mut maxabs = Float::with_val(bits, 0);
    for row in &r {
        for v in row {
            let a = v.clone().abs();
            if a > maxabs {
                maxabs = a;
            }
        }
    }
    if maxabs.is_zero() {
        return Err(Error::Precision("zero quadratic form".into()));
    }
    // Scale the factor so the largest entry sits near 2^110: enough headroom
    // to keep ~30 significant bits in directions 24 orders smaller.
    let scale = Float::with_val(bits, Float::with_val(bits, 2).pow(110u32) / &maxabs);
    let cols: Vec<Vec<BigInt>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| bigfloat::round_to_big(&Float::with_val(bits, &r[i][j] * &scale)).0)
                .collect()
        })
        .collect();
    let lll = lll_reduce(&IntegerLattice::new(cols))?;
    let t = &lll.transform;
    // x = U·y with U = Tᵀ; the reduced form is UᵀGU.
    let u_f: Vec<Vec<Float>> = (0..n)
        .map(|row| {
            (0..n)
                .map(|col| bigfloat::big_to_float(&t[col][row], bits))
                .collect()
        })
        .collect();
    let mut gu = vec![vec![Float::with_val(bits, 0); n]; n];
    for i in 0..n {
        for b in 0..n {
            let mut acc = Float::with_val(bits, 0);
            for j in 0..n {
                acc += Float::with_val(bits, &gram[i][j] * &u_f[j][b]);
            }
            gu[i][b] = acc;
        }
    }
    let mut gp = vec![vec![Float::with_val(bits, 0); n]; n];
    for a in 0..n {
        for b in 0..n {
            let mut acc = Float::with_val(bits, 0);
            for i in 0..n {
                acc += Float::with_val(bits, &u_f[i][a] * &gu[i][b]);
            }
            gp[a][b] = acc;
        }
    }
    let mut gc = vec![Float::with_val(bits, 0); n];
    for (i, g) in gc.iter_mut().enumerate() {
        for j in 0..n {
            *g += Float::with_val(bits, &gram[i][j] * &center[j]);
        }
    }
    let rhs: Vec<Float> = (0..n)
        .map(|a| {
            let mut acc = Float::with_val(bits, 0);
            for i in 0..n {
                acc += Float::with_val(bits, &u_f[i][a] * &gc[i]);
            }
            acc
        })
        .collect();
    let cp = float_solve(&gp, &rhs)?;
    let pts_y = enumerate_ellipsoid(&gp, &cp, r2, cap)?;
    let mut out: Vec<Vec<i64>> = Vec::with_capacity(pts_y.len());
    for y in pts_y {
        let mut x = Vec::with_capacity(n);
        let mut ok = true;
        for j in 0..n {
            let mut acc = BigInt::zero();
            for (i, &yi) in y.iter().enumerate() {
                acc += &t[i][j] * BigInt::from(yi);
            }
            match acc.to_i64() {
                Some(v) => x.push(v),
                // Points beyond i64 coordinates cannot meet any exponent
                // bound downstream; drop them.
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            out.push(x);
        }
    }
    out.sort();
    Ok(out)
}

/// Lattice points of squared norm at most `r²`, exact membership, sorted by
/// coefficient vector.  Returns (coefficients, ambient vectors).
pub fn fincke_pohst(
    lat: &IntegerLattice,
    r2: &Float,
    cap: usize,
) -> Result<Vec<(Vec<i64>, Vec<BigInt>)>> {
    let n = lat.rank();
    let bits = r2.prec().max(128);
    let mut gram = vec![vec![Float::with_val(bits, 0); n]; n];
    for i in 0..n {
        for j in 0..n {
            let g = dot(&lat.columns[i], &lat.columns[j]);
            gram[i][j] = bigfloat::big_to_float(&g, bits);
        }
    }
    let center = vec![Float::with_val(bits, 0); n];
    let margin = Float::with_val(bits, r2 * Float::with_val(bits, 1.0 + 1e-9));
    let cands = enumerate_ellipsoid(&gram, &center, &margin, cap)?;
    // Exact filter against the rational radius.
    let r2_exact = bigfloat::float_to_big_rational(r2);
    let mut out = Vec::new();
    for c in cands {
        let mut v = vec![BigInt::zero(); lat.ambient_dim()];
        for (j, &cj) in c.iter().enumerate() {
            if cj != 0 {
                let cb = BigInt::from(cj);
                for idx in 0..v.len() {
                    v[idx] += &cb * &lat.columns[j][idx];
                }
            }
        }
        let norm = rat(dot(&v, &v));
        if norm <= r2_exact {
            out.push((c, v));
        }
    }
    Ok(out)
}

/// The inhomogeneous inequality `|β₀ + Σ aₖθₖ| ≤ c₁·exp(−c₂D − c₃)` whose
/// integer solutions are to be squeezed.
#[derive(Clone, Debug)]
pub struct ReductionInequality {
    pub theta: Vec<Float>,
    pub beta0: Float,
    pub c1: Float,
    pub c2: Float,
    pub c3: Float,
}

/// Certificate of one bound-shrinking step.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ReductionCertificate {
    pub d0: String,
    pub h: String,
    pub new_bound: String,
    /// Norm of the first reduced basis vector.
    pub b1_norm: f64,
    /// Conventional comparison value `√((n+1)·2^{n−1})·D₀` for `|b₁|`.
    pub b1_threshold: f64,
    /// Smallest exact squared distance found within the search radius.
    pub closest_dist_sq: Option<f64>,
    /// Squared distance any surviving solution would have to beat:
    /// `n·D₀² + (D₀ + (n·D₀+1)/2 + 1/2)²`.
    pub threshold_sq: f64,
    pub dimension: usize,
}

#[derive(Clone, Debug)]
pub enum StepOutcome {
    Reduced(ReductionCertificate),
    HTooSmall { reason: String },
}

fn pow10(decades: u32) -> BigInt {
    num_traits::pow::pow(BigInt::from(10), decades as usize)
}

/// One reduction step: builds the scaled integer lattice for multiplier `H`,
/// proves by exact closest-vector enumeration that no solution with
/// `max|aₖ| ≤ D₀` survives above the shrunken bound, and returns that bound.
///
/// The shrunken bound is `⌈(log H + log c₁ − c₃ − log D₀)/c₂⌉`; the lattice
/// distance test certifies it.  When the lattice admits a vector within the
/// threshold the multiplier was too small and the caller should retry with a
/// larger `H`.
pub fn reduction_step(ineq: &ReductionInequality, d0: &BigInt, h: &BigInt) -> Result<StepOutcome> {
    let n = ineq.theta.len();
    if n == 0 {
        return Err(Error::Parse("reduction needs at least one coefficient".into()));
    }
    let h_bits = h.bits();
    let src_bits = ineq.theta[0].prec();
    if u64::from(src_bits) < h_bits + 130 {
        return Err(Error::Precision(format!(
            "coefficients carry {src_bits} bits but the multiplier needs {}",
            h_bits + 130
        )));
    }
    let wb = (2 * h_bits + 192) as u32;

    // New bound from the defining formula; for multipliers too small to make
    // progress we skip the lattice work entirely.
    let lnh = bigfloat::ln_big(h, wb);
    let lnd0 = bigfloat::ln_big(d0, wb);
    let num = Float::with_val(wb, &lnh + &ineq.c1.clone().ln()) - &ineq.c3 - &lnd0;
    let newb_f = Float::with_val(wb, &num / &ineq.c2).ceil();
    if newb_f <= 0 {
        return Ok(StepOutcome::HTooSmall {
            reason: "shrunken bound not positive".into(),
        });
    }
    let (new_bound, _) = round_to_big(&newb_f);

    // Integer data: last row of the basis and the target.
    let hf = bigfloat::big_to_float(h, src_bits.max(wb));
    let mut cols: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for (k, th) in ineq.theta.iter().enumerate() {
        let prod = Float::with_val(wb, &hf * th);
        let (m, _) = round_to_big(&prod);
        let mut v = vec![BigInt::zero(); n + 1];
        v[k] = BigInt::one();
        v[n] = m;
        cols.push(v);
    }
    let target_last = -round_to_big(&Float::with_val(wb, &hf * &ineq.beta0)).0;
    let mut target = vec![BigInt::zero(); n + 1];
    target[n] = target_last;

    let lat = IntegerLattice::new(cols);
    let lll = lll_reduce(&lat)?;
    let b1 = &lll.reduced.columns[0];
    let b1_norm = bigfloat::big_to_float(&dot(b1, b1), 128).sqrt().to_f64();
    let b1_threshold = {
        let scale = (((n + 1) as f64) * f64::powi(2.0, n as i32 - 1)).sqrt();
        scale * bigfloat::big_to_float(d0, 128).to_f64()
    };

    // Honest distance threshold: coordinate part plus the worst-case final
    // coordinate (inequality value scaled by H, bounded by D₀ via the new
    // bound, plus all rounding slack).
    let nb = BigInt::from(n);
    let t2_4 = BigInt::from(4) * &nb * d0 * d0 + {
        let last = (&nb + 2) * d0 + 2;
        &last * &last
    };
    match closest_within(&lll.reduced, &target, &t2_4, wb)? {
        Some((_, dist4)) => {
            let d = bigfloat::big_to_float(&dist4, 128).to_f64() / 4.0;
            Ok(StepOutcome::HTooSmall {
                reason: format!(
                    "lattice point at squared distance {:.3e} within threshold {:.3e}",
                    d,
                    bigfloat::big_to_float(&t2_4, 128).to_f64() / 4.0
                ),
            })
        }
        None => Ok(StepOutcome::Reduced(ReductionCertificate {
            d0: d0.to_string(),
            h: h.to_string(),
            new_bound: new_bound.to_string(),
            b1_norm,
            b1_threshold,
            closest_dist_sq: None,
            threshold_sq: bigfloat::big_to_float(&t2_4, 128).to_f64() / 4.0,
            dimension: n,
        })),
    }
}

/// Exact closest-vector test: some lattice point within squared distance
/// `t2_4/4` of `target`?  Returns the best (coefficients, 4·distance²) if so.
fn closest_within(
    lat: &IntegerLattice,
    target: &[BigInt],
    t2_4: &BigInt,
    bits: u32,
) -> Result<Option<(Vec<BigInt>, BigInt)>> {
    let n = lat.rank();
    // Float Cholesky of the Gram matrix.
    let mut gram_f = vec![vec![Float::with_val(bits, 0); n]; n];
    let mut gram_e = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let g = dot(&lat.columns[i], &lat.columns[j]);
            gram_f[i][j] = bigfloat::big_to_float(&g, bits);
            gram_e[i][j] = g;
        }
    }
    let bty: Vec<BigInt> = (0..n).map(|i| dot(&lat.columns[i], target)).collect();
    let yy = dot(target, target);
    let mut r = vec![vec![Float::with_val(bits, 0); n]; n];
    for i in 0..n {
        let mut d = gram_f[i][i].clone();
        for k in 0..i {
            d -= Float::with_val(bits, &r[k][i] * &r[k][i]);
        }
        if d <= 0 {
            return Err(Error::Precision("Gram matrix lost definiteness".into()));
        }
        r[i][i] = d.sqrt();
        for j in i + 1..n {
            let mut s = gram_f[i][j].clone();
            for k in 0..i {
                s -= Float::with_val(bits, &r[k][i] * &r[k][j]);
            }
            r[i][j] = s / &r[i][i];
        }
    }
    // Real solution of G t = Bᵀy  via the Cholesky factors.
    let mut t = vec![Float::with_val(bits, 0); n];
    for i in 0..n {
        let mut s = bigfloat::big_to_float(&bty[i], bits);
        for k in 0..i {
            s -= Float::with_val(bits, &r[k][i] * &t[k]);
        }
        t[i] = s / &r[i][i];
    }
    for i in (0..n).rev() {
        let mut s = t[i].clone();
        for k in i + 1..n {
            s -= Float::with_val(bits, &r[i][k] * &t[k]);
        }
        t[i] = s / &r[i][i];
    }
    // Residual distance from target to the lattice's real span.
    let mut proj = Float::with_val(bits, 0);
    for i in 0..n {
        for j in 0..n {
            proj += Float::with_val(
                bits,
                Float::with_val(bits, &gram_f[i][j] * &t[i]) * &t[j],
            );
        }
    }
    let resid = Float::with_val(bits, bigfloat::big_to_float(&yy, bits) - proj);
    let t2_f = bigfloat::big_to_float(t2_4, bits) / Float::with_val(bits, 4);
    let slack = Float::with_val(bits, &t2_f * Float::with_val(bits, 1e-12));
    if resid > Float::with_val(bits, &t2_f + &slack) {
        return Ok(None);
    }
    let r2 = Float::with_val(
        bits,
        Float::with_val(bits, &t2_f - &resid) * Float::with_val(bits, 1.0 + 1e-9) + &slack,
    );
    // Enumerate around t in coefficient space; coordinates can be huge, so
    // the recursion carries exact integers for the candidate vector.
    let mut best: Option<(Vec<BigInt>, BigInt)> = None;
    let mut x = vec![BigInt::zero(); n];
    fn descend(
        lvl: usize,
        n: usize,
        r: &[Vec<Float>],
        t: &[Float],
        x: &mut Vec<BigInt>,
        used: &Float,
        r2: &Float,
        ctx: &mut dyn FnMut(&[BigInt]),
    ) {
        let bits = r2.prec();
        let rem = Float::with_val(bits, r2 - used);
        if rem < 0 {
            return;
        }
        let i = lvl - 1;
        let mut off = Float::with_val(bits, 0);
        for j in i + 1..n {
            let xo = bigfloat::big_to_float(&x[j], bits);
            off += Float::with_val(bits, &r[i][j] * &(xo - &t[j]));
        }
        let w = Float::with_val(bits, rem.clone().sqrt() / &r[i][i]);
        let mid = Float::with_val(bits, &t[i] - Float::with_val(bits, &off / &r[i][i]));
        let lo = Float::with_val(bits, &mid - &w).ceil();
        let hi = Float::with_val(bits, &mid + &w).floor();
        let (mut v, _) = round_to_big(&lo);
        let (v_hi, _) = round_to_big(&hi);
        while v <= v_hi {
            x[i] = v.clone();
            let vf = bigfloat::big_to_float(&v, bits);
            let term = Float::with_val(bits, &r[i][i] * &(vf - &mid));
            let used2 = Float::with_val(bits, used + Float::with_val(bits, &term * &term));
            if used2 <= *r2 {
                if i == 0 {
                    ctx(x);
                } else {
                    descend(i, n, r, t, x, &used2, r2, ctx);
                }
            }
            v += 1;
        }
        x[i] = BigInt::zero();
    }
    {
        let gram_e = &gram_e;
        let bty = &bty;
        let yy = &yy;
        let mut visit = |c: &[BigInt]| {
            // 4·‖Bc − y‖² = 4(cᵀGc − 2cᵀBᵀy + yᵀy), exact.
            let mut q = BigInt::zero();
            for i in 0..c.len() {
                for j in 0..c.len() {
                    q += &c[i] * &c[j] * &gram_e[i][j];
                }
            }
            let mut cross = BigInt::zero();
            for i in 0..c.len() {
                cross += &c[i] * &bty[i];
            }
            let dist4 = BigInt::from(4) * (q - BigInt::from(2) * cross + yy.clone());
            if dist4 <= *t2_4 && best.as_ref().map_or(true, |(_, d)| dist4 < *d) {
                best = Some((c.to_vec(), dist4));
            }
        };
        descend(
            n,
            n,
            &r,
            &t,
            &mut x,
            &Float::with_val(bits, 0),
            &r2,
            &mut visit,
        );
    }
    Ok(best)
}

/// One entry of the shrinking schedule: multiplier `10^h_decades` carried at
/// the given decimal working precision.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct ScheduleEntry {
    pub h_decades: u32,
    pub digits: u32,
}

#[derive(Clone, Debug)]
pub struct FixpointResult {
    pub final_bound: BigInt,
    pub steps: Vec<ReductionCertificate>,
    pub attempts: usize,
}

/// Default multiplier for bound `D₀` in dimension `n`: `D₀ⁿ·10^{2n}`.
pub fn default_multiplier(d0: &BigInt, n: usize) -> BigInt {
    let mut h = pow10(2 * n as u32);
    for _ in 0..n {
        h *= d0;
    }
    h
}

/// Iterate reduction steps until the bound improves by less than 1%.
///
/// Scheduled multipliers are used first; afterwards the default multiplier
/// rule continues.  Each step retries with `H × 100` (up to 10 times) when
/// the multiplier proves too small.
pub fn reduce_to_fixpoint(
    ineq: &ReductionInequality,
    start: &BigInt,
    schedule: &[ScheduleEntry],
    max_rounds: usize,
) -> Result<FixpointResult> {
    let n = ineq.theta.len();
    let mut current = start.clone();
    let mut steps = Vec::new();
    let mut attempts = 0usize;
    for round in 0..max_rounds {
        let mut h = if round < schedule.len() {
            pow10(schedule[round].h_decades)
        } else {
            default_multiplier(&current, n)
        };
        let mut tries = 0usize;
        let cert = loop {
            attempts += 1;
            match reduction_step(ineq, &current, &h)? {
                StepOutcome::Reduced(c) => break c,
                StepOutcome::HTooSmall { reason } => {
                    tries += 1;
                    if tries >= 10 {
                        return Err(Error::Verification(format!(
                            "multiplier retries exhausted: {reason}"
                        )));
                    }
                    h *= BigInt::from(100);
                }
            }
        };
        let new_bound: BigInt = cert.new_bound.parse().expect("decimal bound");
        let improvement = &current - &new_bound;
        if new_bound < current {
            steps.push(cert);
            let threshold = (&current / BigInt::from(100)).max(BigInt::one());
            current = new_bound;
            if improvement < threshold {
                break;
            }
        } else {
            break;
        }
    }
    Ok(FixpointResult {
        final_bound: current,
        steps,
        attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigfloat::Prec;
    use crate::order::{elem_from_i64, make_context};
    use crate::poly::IntPoly;
    use crate::units::log_matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lll_keeps_identity_and_fixes_sheared_basis() {
        let id = IntegerLattice::from_i64(&[&[1, 0], &[0, 1]]);
        let r = lll_reduce(&id).unwrap();
        assert_eq!(r.reduced, id);
        let sheared = IntegerLattice::from_i64(&[&[1, 0], &[1_000_000_000, 1]]);
        let r = lll_reduce(&sheared).unwrap();
        for c in &r.reduced.columns {
            let norm: BigInt = c.iter().map(|x| x * x).sum();
            assert!(norm <= BigInt::from(2));
        }
    }

    #[test]
    fn lll_transform_checks_out_on_random_bases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let cols: Vec<Vec<BigInt>> = (0..5)
                .map(|_| (0..5).map(|_| BigInt::from(rng.gen_range(-50i64..=50))).collect())
                .collect();
            let lat = IntegerLattice::new(cols);
            match lll_reduce(&lat) {
                Ok(_) => {}
                Err(Error::Verification(msg)) => {
                    assert!(msg.contains("dependent"), "unexpected: {msg}");
                }
                Err(e) => panic!("unexpected error {e:?}"),
            }
        }
    }

    #[test]
    fn lll_first_vector_is_near_shortest() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut done = 0;
        while done < 100 {
            let dim = rng.gen_range(2usize..=5);
            let cols: Vec<Vec<BigInt>> = (0..dim)
                .map(|_| (0..dim).map(|_| BigInt::from(rng.gen_range(-5i64..=5))).collect())
                .collect();
            let lat = IntegerLattice::new(cols.clone());
            let r = match lll_reduce(&lat) {
                Ok(r) => r,
                Err(_) => continue,
            };
            done += 1;
            // Brute-force shortest vector over a coefficient box.
            let mut best: Option<BigInt> = None;
            let mut idx = vec![-6i64; dim];
            'outer: loop {
                let mut v = vec![BigInt::zero(); dim];
                for (j, &c) in idx.iter().enumerate() {
                    for k in 0..dim {
                        v[k] += BigInt::from(c) * &cols[j][k];
                    }
                }
                let norm: BigInt = v.iter().map(|x| x * x).sum();
                if !norm.is_zero() && best.as_ref().map_or(true, |b| norm < *b) {
                    best = Some(norm);
                }
                let mut k = 0;
                loop {
                    if k == dim {
                        break 'outer;
                    }
                    idx[k] += 1;
                    if idx[k] <= 6 {
                        break;
                    }
                    idx[k] = -6;
                    k += 1;
                }
            }
            let b1: BigInt = r.reduced.columns[0].iter().map(|x| x * x).sum();
            let bound = best.unwrap() * BigInt::from(1 << (dim - 1));
            assert!(b1 <= bound, "b1² = {b1}, 2^{}·λ₁² = {bound}", dim - 1);
        }
    }

    #[test]
    fn ellipsoid_identity_ball_has_seven_points() {
        let bits = 128;
        let gram: Vec<Vec<Float>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| Float::with_val(bits, i32::from(i == j)))
                    .collect()
            })
            .collect();
        let center = vec![Float::with_val(bits, 0); 3];
        let r2 = Float::with_val(bits, 1);
        let pts = enumerate_ellipsoid(&gram, &center, &r2, 100).unwrap();
        assert_eq!(pts.len(), 7);
        assert!(pts.contains(&vec![0, 0, 0]));
        assert!(pts.contains(&vec![1, 0, 0]));
        assert!(pts.contains(&vec![0, -1, 0]));
    }

    #[test]
    fn ellipsoid_matches_box_oracle() {
        let bits = 128;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            // Random positive definite form A = MᵀM + I.
            let m: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let mut a = vec![vec![0.0f64; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        a[i][j] += m[k][i] * m[k][j];
                    }
                }
                a[i][i] += 1.0;
            }
            let r2v: f64 = rng.gen_range(1.0..30.0);
            let gram: Vec<Vec<Float>> = a
                .iter()
                .map(|row| row.iter().map(|&x| Float::with_val(bits, x)).collect())
                .collect();
            let center: Vec<Float> = (0..4)
                .map(|_| Float::with_val(bits, rng.gen_range(-1.5..1.5)))
                .collect();
            let r2 = Float::with_val(bits, r2v);
            let fast = enumerate_ellipsoid(&gram, &center, &r2, 200_000).unwrap();
            let cf: Vec<f64> = center.iter().map(|c| c.to_f64()).collect();
            let mut slow = Vec::new();
            let bound = (r2v.sqrt() / 1.0f64).ceil() as i64 + 3;
            for x0 in -bound..=bound {
                for x1 in -bound..=bound {
                    for x2 in -bound..=bound {
                        for x3 in -bound..=bound {
                            let x = [x0 as f64, x1 as f64, x2 as f64, x3 as f64];
                            let mut q = 0.0;
                            for i in 0..4 {
                                for j in 0..4 {
                                    q += a[i][j] * (x[i] - cf[i]) * (x[j] - cf[j]);
                                }
                            }
                            if q <= r2v {
                                slow.push(vec![x0, x1, x2, x3]);
                            }
                        }
                    }
                }
            }
            slow.sort();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn reduced_enumeration_matches_plain_on_mild_forms() {
        let bits = 128;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let m: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let mut a = vec![vec![0.0f64; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        a[i][j] += m[k][i] * m[k][j];
                    }
                }
                a[i][i] += 0.5;
            }
            let gram: Vec<Vec<Float>> = a
                .iter()
                .map(|row| row.iter().map(|&x| Float::with_val(bits, x)).collect())
                .collect();
            let center: Vec<Float> = (0..4)
                .map(|_| Float::with_val(bits, rng.gen_range(-2.0..2.0)))
                .collect();
            let r2 = Float::with_val(bits, rng.gen_range(1.0..25.0));
            let plain = enumerate_ellipsoid(&gram, &center, &r2, 500_000).unwrap();
            let reduced = enumerate_ellipsoid_reduced(&gram, &center, &r2, 500_000).unwrap();
            assert_eq!(plain, reduced);
        }
    }

    #[test]
    fn reduced_enumeration_handles_thin_slabs() {
        // A slab of width ~1e-18 across a ball of radius ~40, first axis
        // aligned (solvable directly), then skewed by a unimodular mix whose
        // plain enumeration tree would be astronomically large.
        let bits = 192;
        let w = 1e18f64;
        let diag = [1.0f64, 1.0, 1.0, w * w];
        let g0: Vec<Vec<f64>> = (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| if i == j { diag[i] } else { 0.0 })
                    .collect()
            })
            .collect();
        let c0 = [0.25f64, -0.5, 0.75, 0.0];
        let r2v = 1600.0f64;
        let to_float = |m: &Vec<Vec<f64>>| -> Vec<Vec<Float>> {
            m.iter()
                .map(|row| row.iter().map(|&x| Float::with_val(bits, x)).collect())
                .collect()
        };
        let axis = enumerate_ellipsoid_reduced(
            &to_float(&g0),
            &c0.iter().map(|&x| Float::with_val(bits, x)).collect::<Vec<_>>(),
            &Float::with_val(bits, r2v),
            2_000_000,
        )
        .unwrap();
        // Direct expectation: x₃ = 0 forced, the rest a Euclidean ball.
        for p in &axis {
            assert_eq!(p[3], 0);
        }
        assert!(!axis.is_empty());

        // Skew with M (unimodular): form₁(y) = form₀(M·y), center M⁻¹·c₀.
        // Points map bijectively, y = M⁻¹x, so the count must match.
        let m_rows: [[i64; 4]; 4] = [
            [1, 3, -2, 5],
            [0, 1, 4, -3],
            [0, 0, 1, 7],
            [0, 0, 0, 1],
        ];
        let mut g1 = vec![vec![0.0f64; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = 0.0;
                for i in 0..4 {
                    acc += (m_rows[i][a] as f64) * diag[i] * (m_rows[i][b] as f64);
                }
                g1[a][b] = acc;
            }
        }
        // M is upper unitriangular: invert by back substitution on c₀.
        let mut c1 = [0.0f64; 4];
        for i in (0..4).rev() {
            let mut acc = c0[i];
            for j in i + 1..4 {
                acc -= (m_rows[i][j] as f64) * c1[j];
            }
            c1[i] = acc;
        }
        let skewed = enumerate_ellipsoid_reduced(
            &to_float(&g1),
            &c1.iter().map(|&x| Float::with_val(bits, x)).collect::<Vec<_>>(),
            &Float::with_val(bits, r2v),
            2_000_000,
        )
        .unwrap();
        assert_eq!(axis.len(), skewed.len());
        // Each skewed point maps back onto an axis-aligned point.
        let mut mapped: Vec<Vec<i64>> = skewed
            .iter()
            .map(|y| {
                (0..4)
                    .map(|i| (0..4).map(|j| m_rows[i][j] * y[j]).sum::<i64>())
                    .collect()
            })
            .collect();
        mapped.sort();
        assert_eq!(mapped, axis);
    }

    #[test]
    fn fincke_pohst_membership_is_exact() {
        let lat = IntegerLattice::from_i64(&[&[2, 0], &[1, 2]]);
        let r2 = Float::with_val(128, 4);
        let pts = fincke_pohst(&lat, &r2, 1000).unwrap();
        // The lattice {(2a+b, 2b)} meets the closed disk of radius 2 in
        // exactly (0,0) and ±(2,0): odd first coordinates force norm² ≥ 5.
        let norms: Vec<i64> = pts
            .iter()
            .map(|(_, v)| v.iter().map(|x| i64::try_from(x).unwrap().pow(2)).sum())
            .collect();
        assert!(norms.iter().all(|&n| n <= 4));
        assert!(pts.iter().any(|(_, v)| v == &[BigInt::from(0), BigInt::from(0)]));
        assert_eq!(pts.len(), 3);
    }

    fn reference_inequality(digits: u32) -> ReductionInequality {
        let prec = Prec::new(digits);
        let m = make_context(&IntPoly::from_i64(&[-7, 15, -8, 1]), prec).unwrap();
        let g = make_context(&IntPoly::from_i64(&[-7, 0, 15, 0, -8, 0, 1]), prec)
            .unwrap()
            .with_base(
                &m,
                vec![
                    elem_from_i64(&[1, 0, 0, 0, 0, 0]),
                    elem_from_i64(&[0, 0, 1, 0, 0, 0]),
                    elem_from_i64(&[0, 0, 0, 0, 1, 0]),
                ],
            )
            .unwrap();
        let units = vec![
            elem_from_i64(&[1, 1, 0, 0, 0, 0]),
            elem_from_i64(&[1, -1, 0, 0, 0, 0]),
            elem_from_i64(&[2, 0, -1, 0, 0, 0]),
            elem_from_i64(&[3, 1, -1, 0, 0, 0]),
            elem_from_i64(&[3, -7, 0, 7, 0, -1]),
        ];
        let logs = log_matrix(&g, &units);
        let bits = prec.bits();
        ReductionInequality {
            theta: logs[2].clone(),
            beta0: Float::with_val(bits, 2).ln() * Float::with_val(bits, -1),
            c1: Float::with_val(bits, 1),
            c2: Float::with_val(bits, 0.182986),
            c3: Float::with_val(bits, 0),
        }
    }

    #[test]
    fn reduction_chain_reproduces_reference_bounds() {
        let ineq = reference_inequality(400);
        let d0 = pow10(32);
        let h = pow10(170);
        let out = reduction_step(&ineq, &d0, &h).unwrap();
        let b1 = match out {
            StepOutcome::Reduced(c) => c.new_bound.parse::<i64>().unwrap(),
            StepOutcome::HTooSmall { reason } => panic!("step failed: {reason}"),
        };
        assert!((b1 - 1736).abs() <= 173, "first bound {b1}");
        let out = reduction_step(&ineq, &BigInt::from(b1), &pow10(30)).unwrap();
        let b2 = match out {
            StepOutcome::Reduced(c) => c.new_bound.parse::<i64>().unwrap(),
            StepOutcome::HTooSmall { reason } => panic!("step failed: {reason}"),
        };
        assert!((b2 - 336).abs() <= 33, "second bound {b2}");
        let out = reduction_step(&ineq, &BigInt::from(b2), &pow10(20)).unwrap();
        let b3 = match out {
            StepOutcome::Reduced(c) => c.new_bound.parse::<i64>().unwrap(),
            StepOutcome::HTooSmall { reason } => panic!("step failed: {reason}"),
        };
        assert!((b3 - 219).abs() <= 21, "third bound {b3}");
    }

    #[test]
    fn fixpoint_from_start_bound_lands_in_window() {
        let ineq = reference_inequality(400);
        let start: BigInt = "3814200000000000000000000000000".parse().unwrap();
        let schedule = [
            ScheduleEntry { h_decades: 170, digits: 300 },
            ScheduleEntry { h_decades: 30, digits: 100 },
            ScheduleEntry { h_decades: 20, digits: 100 },
        ];
        let fp = reduce_to_fixpoint(&ineq, &start, &schedule, 8).unwrap();
        let fb = fp.final_bound.to_i64().unwrap();
        assert!((200..=260).contains(&fb), "final bound {fb}");
        assert!(fp.steps.len() <= 5, "{} rounds", fp.steps.len());
        let bounds: Vec<i64> = fp
            .steps
            .iter()
            .map(|c| c.new_bound.parse::<i64>().unwrap())
            .collect();
        assert_eq!(bounds.len(), 3);
        assert!(bounds[0] >= 1700 && bounds[0] <= 1800);
    }

    #[test]
    fn too_small_multiplier_is_reported_and_retried() {
        let ineq = reference_inequality(400);
        let d0 = pow10(6);
        match reduction_step(&ineq, &d0, &pow10(2)).unwrap() {
            StepOutcome::HTooSmall { .. } => {}
            StepOutcome::Reduced(c) => panic!("expected failure, got bound {}", c.new_bound),
        }
        // The fixpoint driver recovers using the default multiplier rule.
        let fp = reduce_to_fixpoint(&ineq, &d0, &[], 8).unwrap();
        let fb = fp.final_bound.to_i64().unwrap();
        assert!(fb < 300, "final bound {fb}");
    }
}
