//! Initial exponent bounds for unit equations from lower bounds on linear
//! forms in logarithms.
//!
//! Two certified quantities are produced here.  First, a decay constant
//! `c₁` such that every nonzero exponent vector `a` with `E = max|a_k|`
//! forces some conjugate of the unit power product below `exp(−c₁E)`.
//! Second, the start bound itself: the largest `E` compatible with the
//! explicit lower bound `|Λ| ≥ exp(−C·log E)` for the associated linear form
//! in logarithms, found as a fixpoint and certified by sign evaluation on
//! both sides of the root.

use crate::bigfloat::{round_down, round_up, Prec};
use crate::poly::{self, IntPoly};
use crate::{Error, Result};
use rug::{ops::Pow, Float};

/// Certificate for the decay constant of a unit power product.
#[derive(Clone, Debug)]
pub struct C1Certificate {
    pub c1: Float,
    /// Embedding rows of the chosen full-rank square submatrix.
    pub rows: Vec<usize>,
    pub inverse_norm: Float,
    pub candidates_checked: usize,
}

/// Largest admissible `c₁ = 1/((R−1)·‖T⁻¹‖∞)` over full-rank square
/// submatrices `T` of the log-embedding matrix (R = number of rows).
///
/// Soundness for any such `T`: restricting `v_j = Σ_k a_k·log|ε_k^{(j)}|`
/// to the rows of `T` gives `a = T⁻¹v`, hence `max_j|v_j| ≥ E/‖T⁻¹‖∞`;
/// since the `v_j` sum to zero over all rows (unit norms are ±1), the
/// minimum satisfies `min_j v_j ≤ −E/((R−1)·‖T⁻¹‖∞)`.
pub fn compute_c1(log_rows: &[Vec<Float>], prec: Prec) -> Result<C1Certificate> {
    let rows = log_rows.len();
    let cols = log_rows.first().map_or(0, |r| r.len());
    if cols == 0 || rows <= cols {
        return Err(Error::Parse(
            "log matrix must have more rows than columns".into(),
        ));
    }
    let subsets = enumerate_subsets(rows, cols, 200);
    let mut best: Option<C1Certificate> = None;
    let mut checked = 0usize;
    for sel in &subsets {
        checked += 1;
        let sub: Vec<Vec<Float>> = sel.iter().map(|&i| log_rows[i].clone()).collect();
        if let Some(norm) = inverse_infinity_norm(&sub, prec) {
            let denom = Float::with_val(prec.bits(), rows as u32 - 1) * &norm;
            let c1 = round_down(&(Float::with_val(prec.bits(), 1) / denom));
            if best.as_ref().map_or(true, |b| c1 > b.c1) {
                best = Some(C1Certificate {
                    c1,
                    rows: sel.clone(),
                    inverse_norm: norm,
                    candidates_checked: 0,
                });
            }
        }
    }
    let mut cert = best.ok_or_else(|| {
        Error::Verification("no full-rank square submatrix of the log matrix".into())
    })?;
    cert.candidates_checked = checked;
    Ok(cert)
}

fn enumerate_subsets(rows: usize, cols: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..cols).collect();
    loop {
        out.push(idx.clone());
        if out.len() >= cap {
            break;
        }
        // Next combination in lexicographic order.
        let mut i = cols;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + rows - cols {
                break;
            }
        }
        if idx[i] == i + rows - cols {
            return out;
        }
        idx[i] += 1;
        for j in i + 1..cols {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

/// `‖T⁻¹‖∞` by Gaussian inversion, or `None` when numerically singular.
fn inverse_infinity_norm(t: &[Vec<Float>], prec: Prec) -> Option<Float> {
    let n = t.len();
    let bits = prec.bits();
    let mut m: Vec<Vec<Float>> = t
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            for j in 0..n {
                r.push(Float::with_val(bits, i32::from(i == j)));
            }
            r
        })
        .collect();
    for k in 0..n {
        let piv = (k..n).max_by(|&a, &b| {
            m[a][k]
                .clone()
                .abs()
                .partial_cmp(&m[b][k].clone().abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        m.swap(k, piv);
        if m[k][k].clone().abs() < prec.eps() {
            return None;
        }
        let p = m[k][k].clone();
        for j in k..2 * n {
            m[k][j] /= &p;
        }
        for i in 0..n {
            if i != k {
                let f = m[i][k].clone();
                for j in k..2 * n {
                    let s = m[k][j].clone() * &f;
                    m[i][j] -= s;
                }
            }
        }
    }
    let mut norm = Float::with_val(bits, 0);
    for row in &m {
        let mut s = Float::with_val(bits, 0);
        for v in &row[n..] {
            s += v.clone().abs();
        }
        if s > norm {
            norm = s;
        }
    }
    Some(round_up(&norm))
}

/// Absolute logarithmic height from a defining polynomial:
/// `(1/deg)(log|lc| + Σ log⁺|roots|)`, rounded outward.
pub fn algebraic_height(f: &IntPoly, prec: Prec) -> Float {
    let bits = prec.bits();
    let deg = f.degree();
    let mut h = Float::with_val(bits, crate::bigfloat::big_to_rug(&f.lc()))
        .abs()
        .ln();
    for r in poly::complex_roots(f, prec) {
        let a = r.abs().real().clone();
        if a > 1 {
            h += a.ln();
        }
    }
    round_up(&(h / Float::with_val(bits, deg as u32)))
}

/// One log term of the linear form: its defining polynomial and the absolute
/// value it takes at the relevant embedding.
#[derive(Clone, Debug)]
pub struct FormTerm {
    pub poly: IntPoly,
    pub abs_value: Float,
}

/// Data of the linear form in logarithms bounding the unit equation.
#[derive(Clone, Debug)]
pub struct LinearFormSpec {
    pub terms: Vec<FormTerm>,
    /// Degree of a number field containing every term.
    pub field_degree: usize,
    /// Upper bound for the coefficient `|α|` in `|Λ| ≤ 2|α|·exp(−c₁E)`.
    pub alpha_bound: Float,
}

/// Certified start bound for the exponent size.
#[derive(Clone, Debug)]
pub struct StartBound {
    pub bound: Float,
    pub c_total: Float,
    pub c1: Float,
    pub modified_heights: Vec<Float>,
}

/// Lower-bound backend: produces the total constant `C` of
/// `|Λ| ≥ exp(−C·log E)` from the term count, field degree and heights.
pub trait LowerBoundMethod {
    fn total_constant(&self, spec: &LinearFormSpec, prec: Prec) -> Result<(Float, Vec<Float>)>;
}

/// The explicit constant `18(t+1)!·t^{t+1}·(32d)^{t+2}·log(2td)` multiplied
/// by the modified heights `max(h(α), |log α|/d, 1/d)` of all terms.
pub struct BakerWustholz;

impl LowerBoundMethod for BakerWustholz {
    fn total_constant(&self, spec: &LinearFormSpec, prec: Prec) -> Result<(Float, Vec<Float>)> {
        let bits = prec.bits();
        let t = spec.terms.len();
        let d = spec.field_degree;
        if t == 0 || d == 0 {
            return Err(Error::Parse("linear form needs terms and a degree".into()));
        }
        let mut c = Float::with_val(bits, 18);
        let mut fact = Float::with_val(bits, 1);
        for k in 2..=t + 1 {
            fact *= Float::with_val(bits, k as u32);
        }
        c *= fact;
        c *= Float::with_val(bits, t as u32).pow((t + 1) as u32);
        c *= Float::with_val(bits, 32 * d as u32).pow((t + 2) as u32);
        c *= Float::with_val(bits, 2 * t as u32 * d as u32).ln();
        let df = Float::with_val(bits, d as u32);
        let mut heights = Vec::with_capacity(t);
        for term in &spec.terms {
            let h = algebraic_height(&term.poly, prec);
            let lg = term.abs_value.clone().ln().abs() / &df;
            let inv = Float::with_val(bits, 1) / &df;
            let mut hm = h;
            if lg > hm {
                hm = lg;
            }
            if inv > hm {
                hm = inv;
            }
            let hm = round_up(&hm);
            c *= &hm;
            heights.push(hm);
        }
        Ok((round_up(&c), heights))
    }
}

/// Largest `E` with `c₁E − log(2·alpha_bound) ≤ C·log E`, certified by sign
/// evaluation at the returned bound and just above it.
pub fn start_bound(
    spec: &LinearFormSpec,
    c1: &Float,
    method: &dyn LowerBoundMethod,
    prec: Prec,
) -> Result<StartBound> {
    let bits = prec.bits();
    let (c_total, modified_heights) = method.total_constant(spec, prec)?;
    let log2a = (Float::with_val(bits, 2) * &spec.alpha_bound).ln();
    let phi = |e: &Float| -> Float {
        let mut v = Float::with_val(bits, c1 * e);
        v -= &log2a;
        v -= Float::with_val(bits, &c_total * &e.clone().ln());
        v
    };
    let mut e = Float::with_val(bits, &c_total / c1) * 2u32;
    if e < 16u32 {
        e = Float::with_val(bits, 16);
    }
    for _ in 0..1000 {
        let next = Float::with_val(
            bits,
            (Float::with_val(bits, &c_total * &e.clone().ln()) + &log2a) / c1,
        );
        let rel = Float::with_val(bits, &next / &e) - 1u32;
        e = next;
        if rel.abs() < prec.eps() {
            break;
        }
    }
    let bound = round_up(&e).ceil();
    // Past the fixpoint the deficit must grow: this needs E > C/c₁.
    let turning = Float::with_val(bits, &c_total / c1);
    if bound <= turning {
        return Err(Error::Verification("start bound below turning point".into()));
    }
    // At the rounded-up bound the deficit is still near zero (we sit just
    // above the root); one step further it must be strictly positive, and
    // monotonicity past the turning point extends that to every larger E.
    let at = phi(&bound);
    let above = phi(&(bound.clone() + 1u32));
    if at < Float::with_val(bits, -1) || above <= at || above <= 0u32 {
        return Err(Error::Verification(
            "start bound certificate failed sign evaluation".into(),
        ));
    }
    Ok(StartBound {
        bound,
        c_total,
        c1: c1.clone(),
        modified_heights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigfloat::Prec;
    use crate::order::{elem_from_i64, make_context};
    use crate::units::log_matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_logs() -> Vec<Vec<Float>> {
        let m = make_context(&IntPoly::from_i64(&[-7, 15, -8, 1]), Prec::new(60)).unwrap();
        let g = make_context(&IntPoly::from_i64(&[-7, 0, 15, 0, -8, 0, 1]), Prec::new(60))
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
        log_matrix(&g, &units)
    }

    #[test]
    fn c1_matches_frozen_value() {
        let cert = compute_c1(&reference_logs(), Prec::new(60)).unwrap();
        let c1 = cert.c1.to_f64();
        assert!((c1 - 0.182986).abs() < 1e-5, "c1 = {c1}");
        assert_eq!(cert.rows.len(), 5);
        assert_eq!(cert.candidates_checked, 6);
    }

    #[test]
    fn c1_bounds_minimum_conjugate_log() {
        let logs = reference_logs();
        let cert = compute_c1(&logs, Prec::new(60)).unwrap();
        let c1 = cert.c1.to_f64();
        let m: Vec<Vec<f64>> = logs
            .iter()
            .map(|r| r.iter().map(|x| x.to_f64()).collect())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10_000 {
            let a: Vec<i64> = (0..5).map(|_| rng.gen_range(-50i64..=50)).collect();
            let e = a.iter().map(|x| x.abs()).max().unwrap();
            if e == 0 {
                continue;
            }
            let min = m
                .iter()
                .map(|row| row.iter().zip(&a).map(|(&l, &x)| l * x as f64).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            assert!(min <= -c1 * e as f64 + 1e-6, "a = {a:?}, min = {min}");
        }
    }

    #[test]
    fn heights_of_reference_terms() {
        let p = Prec::new(60);
        let h2 = algebraic_height(&IntPoly::from_i64(&[-1, 2]), p).to_f64();
        assert!((h2 - std::f64::consts::LN_2).abs() < 1e-10);
        let golden = algebraic_height(&IntPoly::from_i64(&[-1, -1, 1]), p).to_f64();
        assert!((golden - 0.2406059125).abs() < 1e-8);
    }

    use crate::poly::IntPoly;

    fn reference_form() -> LinearFormSpec {
        let m = make_context(&IntPoly::from_i64(&[-7, 15, -8, 1]), Prec::new(60)).unwrap();
        let g = make_context(&IntPoly::from_i64(&[-7, 0, 15, 0, -8, 0, 1]), Prec::new(60))
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
        let mut terms: Vec<FormTerm> = units
            .iter()
            .map(|u| FormTerm {
                poly: g.char_poly(u),
                abs_value: g.size(u),
            })
            .collect();
        terms.push(FormTerm {
            poly: IntPoly::from_i64(&[-1, 2]),
            abs_value: Prec::new(60).float(0.5),
        });
        LinearFormSpec {
            terms,
            field_degree: 6,
            alpha_bound: Prec::new(60).float(0.5),
        }
    }

    #[test]
    fn start_bound_matches_frozen_values() {
        let p = Prec::new(60);
        let spec = reference_form();
        let (c_total, heights) = BakerWustholz.total_constant(&spec, p).unwrap();
        let expect_h = [0.494289, 0.494289, 0.501879, 0.670594, 0.867014];
        for (h, e) in heights.iter().zip(expect_h) {
            assert!((h.to_f64() - e).abs() < 1e-4, "{} vs {}", h.to_f64(), e);
        }
        let ct = c_total.to_f64();
        assert!((ct / 9.91173e27 - 1.0).abs() < 1e-3, "C = {ct:e}");
        let c1 = compute_c1(&reference_logs(), p).unwrap().c1;
        let sb = start_bound(&spec, &c1, &BakerWustholz, p).unwrap();
        let b = sb.bound.to_f64();
        assert!((b / 3.8142e30 - 1.0).abs() < 1e-3, "bound = {b:e}");
        assert!(b > 1e28 && b < 1e34);
    }

    #[test]
    fn start_bound_grows_with_heights() {
        let p = Prec::new(60);
        let spec = reference_form();
        let c1 = compute_c1(&reference_logs(), p).unwrap().c1;
        let base = start_bound(&spec, &c1, &BakerWustholz, p).unwrap();
        struct Doubled;
        impl LowerBoundMethod for Doubled {
            fn total_constant(
                &self,
                spec: &LinearFormSpec,
                prec: Prec,
            ) -> Result<(Float, Vec<Float>)> {
                let (c, h) = BakerWustholz.total_constant(spec, prec)?;
                Ok((c * 2u32, h))
            }
        }
        let bigger = start_bound(&spec, &c1, &Doubled, p).unwrap();
        assert!(bigger.bound > base.bound);
    }
}
