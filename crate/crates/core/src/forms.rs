//! Pointwise (p,q)-forms in a unitary frame, Chern forms, and the β boundary form.
//!
//! A basis element is dz^I ∧ dz̄^J with I, J bitmasks over {0..m}, all dz
//! factors first in increasing order, then all dz̄ factors in increasing order.
//! The √−1/2π factor of every dz∧dz̄ pair in ω, ρ and Ω is folded into the
//! stored coefficients.

use crate::curvature::{CurvatureScalars, KahlerCurvature};
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("degree ({p},{q}) exceeds complex dimension {m}")]
    DegreeOverflow { p: usize, q: usize, m: usize },
    #[error("forms live in different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("expected a top-degree ({m},{m}) form, got ({p},{q})")]
    NotTopDegree { p: usize, q: usize, m: usize },
    #[error("degree mismatch in sum: ({0},{1}) vs ({2},{3})")]
    DegreeMismatch(usize, usize, usize, usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

const MAX_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct PQForm {
    m: usize,
    p: usize,
    q: usize,
    coeffs: Vec<Complex64>,
}

/// The (√−1/2π) factor attached to each dz∧dz̄ pair.
pub fn pair_factor() -> Complex64 {
    Complex64::new(0.0, 1.0 / (2.0 * PI))
}

fn masks_with(m: usize, k: usize) -> Vec<u32> {
    (0u32..(1 << m)).filter(|x| x.count_ones() as usize == k).collect()
}

/// Sign of merging the increasing sequence `a` followed by `b` into increasing order.
#[inline]
fn merge_sign(a: u32, b: u32) -> f64 {
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let k = rest.trailing_zeros();
        inversions += (a >> (k + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl PQForm {
    pub fn zero(m: usize, p: usize, q: usize) -> Result<Self, FormError> {
        if p > m || q > m || m > MAX_DIM {
            return Err(FormError::DegreeOverflow { p, q, m });
        }
        Ok(Self {
            m,
            p,
            q,
            coeffs: vec![Complex64::new(0.0, 0.0); 1 << (2 * m)],
        })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    #[inline]
    fn slot(&self, i: u32, j: u32) -> usize {
        ((i as usize) << self.m) | j as usize
    }

    /// Coefficient of dz^I ∧ dz̄^J.
    pub fn coeff(&self, i: u32, j: u32) -> Complex64 {
        self.coeffs[self.slot(i, j)]
    }

    pub fn set_coeff(&mut self, i: u32, j: u32, v: Complex64) {
        debug_assert_eq!(i.count_ones() as usize, self.p);
        debug_assert_eq!(j.count_ones() as usize, self.q);
        let s = self.slot(i, j);
        self.coeffs[s] = v;
    }

    /// (√−1/2π) Σ a_{kl} dz^k ∧ dz̄^l for an m×m row-major matrix `a`.
    pub fn from_hermitian(m: usize, a: &[Complex64]) -> Result<Self, FormError> {
        if a.len() != m * m {
            return Err(FormError::Shape(format!("expected {} entries, got {}", m * m, a.len())));
        }
        let mut f = Self::zero(m, 1, 1)?;
        for k in 0..m {
            for l in 0..m {
                f.set_coeff(1 << k, 1 << l, pair_factor() * a[k * m + l]);
            }
        }
        Ok(f)
    }

    /// Kähler form of the unitary frame.
    pub fn kahler(m: usize) -> Result<Self, FormError> {
        let mut id = vec![Complex64::new(0.0, 0.0); m * m];
        for k in 0..m {
            id[k * m + k] = Complex64::new(1.0, 0.0);
        }
        Self::from_hermitian(m, &id)
    }

    /// Unit (0,0)-form.
    pub fn one(m: usize) -> Result<Self, FormError> {
        let mut f = Self::zero(m, 0, 0)?;
        f.set_coeff(0, 0, Complex64::new(1.0, 0.0));
        Ok(f)
    }

    fn nonzero_terms(&self) -> impl Iterator<Item = (u32, u32, Complex64)> + '_ {
        let is = masks_with(self.m, self.p);
        let js = masks_with(self.m, self.q);
        is.into_iter()
            .flat_map(move |i| js.clone().into_iter().map(move |j| (i, j)))
            .map(|(i, j)| (i, j, self.coeff(i, j)))
            .filter(|(_, _, c)| *c != Complex64::new(0.0, 0.0))
    }

    pub fn wedge(&self, other: &Self) -> Result<Self, FormError> {
        if self.m != other.m {
            return Err(FormError::DimensionMismatch(self.m, other.m));
        }
        let mut out = Self::zero(self.m, self.p + other.p, self.q + other.q)?;
        let b_terms: Vec<_> = other.nonzero_terms().collect();
        // moving dz^K of `other` left past dz̄^J of `self`
        let cross = if (self.q * other.p) % 2 == 0 { 1.0 } else { -1.0 };
        for (i, j, a) in self.nonzero_terms() {
            for &(k, l, b) in &b_terms {
                if i & k != 0 || j & l != 0 {
                    continue;
                }
                let sign = cross * merge_sign(i, k) * merge_sign(j, l);
                let s = out.slot(i | k, j | l);
                out.coeffs[s] += a * b * sign;
            }
        }
        Ok(out)
    }

    pub fn power(&self, k: usize) -> Result<Self, FormError> {
        let mut acc = Self::one(self.m)?;
        for _ in 0..k {
            acc = acc.wedge(self)?;
        }
        Ok(acc)
    }

    pub fn add(&self, other: &Self) -> Result<Self, FormError> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FormError> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Self, s: f64) -> Result<Self, FormError> {
        if self.m != other.m {
            return Err(FormError::DimensionMismatch(self.m, other.m));
        }
        if (self.p, self.q) != (other.p, other.q) {
            return Err(FormError::DegreeMismatch(self.p, self.q, other.p, other.q));
        }
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a += b * s);
        Ok(out)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|a| *a *= s);
        out
    }

    /// Complex conjugate, a (q,p)-form.
    pub fn conjugate(&self) -> Self {
        let mut out = Self::zero(self.m, self.q, self.p).expect("degrees already valid");
        let sign = if (self.p * self.q) % 2 == 0 { 1.0 } else { -1.0 };
        for (i, j, c) in self.nonzero_terms() {
            out.set_coeff(j, i, c.conj() * sign);
        }
        out
    }

    /// max |conj(f) − f|; only meaningful when p = q.
    pub fn reality_residual(&self) -> f64 {
        if self.p != self.q {
            return f64::INFINITY;
        }
        self.max_difference(&self.conjugate())
    }

    pub fn max_difference(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// λ with f = λ ω^m, plus the imaginary residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopCoefficient {
    pub value: f64,
    pub imaginary: f64,
}

pub fn top_coefficient(f: &PQForm) -> Result<TopCoefficient, FormError> {
    let m = f.m;
    if f.p != m || f.q != m {
        return Err(FormError::NotTopDegree { p: f.p, q: f.q, m });
    }
    let full = (1u32 << m) - 1;
    let lambda = f.coeff(full, full) / volume_coefficient(m);
    Ok(TopCoefficient {
        value: lambda.re,
        imaginary: lambda.im,
    })
}

/// Coefficient of dz^{1..m} ∧ dz̄^{1..m} in ω^m: m!·(√−1/2π)^m·(−1)^{m(m−1)/2}.
pub fn volume_coefficient(m: usize) -> Complex64 {
    let fact: f64 = (1..=m).map(|k| k as f64).product();
    let sign = if (m * (m.saturating_sub(1)) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    pair_factor().powu(m as u32) * fact * sign
}

/// Curvature forms, Ricci form and second Chern form of a Kähler curvature tensor.
#[derive(Debug, Clone)]
pub struct ChernData {
    pub omega: PQForm,
    pub rho: PQForm,
    pub c2: PQForm,
    /// `curvature_2forms[i * m + j]` is Ω^i_j.
    pub curvature_2forms: Vec<PQForm>,
}

impl ChernData {
    pub fn new(k: &KahlerCurvature) -> Result<Self, FormError> {
        let m = k.dim();
        let mut omegas = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                // Ω^i_j = (√−1/2π) R_{j ī k l̄} dz^k ∧ dz̄^l
                let a: Vec<Complex64> = (0..m * m).map(|kl| k.get(j, i, kl / m, kl % m)).collect();
                omegas.push(PQForm::from_hermitian(m, &a)?);
            }
        }
        let rho = ricci_form(k)?;
        let mut c2 = PQForm::zero(m, 2, 2)?;
        for i in 0..m {
            for j in 0..m {
                let diag = omegas[i * m + i].wedge(&omegas[j * m + j])?;
                let cross = omegas[i * m + j].wedge(&omegas[j * m + i])?;
                c2 = c2.add(&diag.sub(&cross)?)?;
            }
        }
        Ok(Self {
            omega: PQForm::kahler(m)?,
            rho,
            c2: c2.scaled(Complex64::new(0.5, 0.0)),
            curvature_2forms: omegas,
        })
    }

    pub fn trace_of_curvature(&self) -> Result<PQForm, FormError> {
        let m = self.omega.dim();
        let mut acc = PQForm::zero(m, 1, 1)?;
        for i in 0..m {
            acc = acc.add(&self.curvature_2forms[i * m + i])?;
        }
        Ok(acc)
    }
}

pub fn ricci_form(k: &KahlerCurvature) -> Result<PQForm, FormError> {
    PQForm::from_hermitian(k.dim(), &k.ricci())
}

pub fn second_chern_form(k: &KahlerCurvature) -> Result<PQForm, FormError> {
    Ok(ChernData::new(k)?.c2)
}

/// |top(LHS) − RHS| for the three pointwise identities expressing
/// ρ∧ρ∧ω^{m−2}, c₂∧ω^{m−2} and (ρ∧ρ − 2c₂)∧ω^{m−2} through the curvature scalars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApteResiduals {
    pub rho_rho: f64,
    pub c2: f64,
    pub difference: f64,
    pub scalars: CurvatureScalars,
}

impl ApteResiduals {
    pub fn max(&self) -> f64 {
        self.rho_rho.max(self.c2).max(self.difference)
    }
}

pub fn verify_apte_pointwise(k: &KahlerCurvature) -> Result<ApteResiduals, FormError> {
    let m = k.dim();
    if m < 2 {
        return Err(FormError::DegreeOverflow { p: 2, q: 2, m });
    }
    let data = ChernData::new(k)?;
    let s = k.scalars();
    let mm = (m * (m - 1)) as f64;
    let omega_pow = data.omega.power(m - 2)?;
    let rr = data.rho.wedge(&data.rho)?;
    let lhs1 = top_coefficient(&rr.wedge(&omega_pow)?)?.value;
    let lhs2 = top_coefficient(&data.c2.wedge(&omega_pow)?)?.value;
    let diff = rr.sub(&data.c2.scaled(Complex64::new(2.0, 0.0)))?;
    let lhs3 = top_coefficient(&diff.wedge(&omega_pow)?)?.value;
    let rhs1 = (s.r * s.r - s.ric2) / mm;
    let rhs2 = (s.r * s.r - 2.0 * s.ric2 + s.rm2) / (2.0 * mm);
    let rhs3 = (s.ric2 - s.rm2) / mm;
    Ok(ApteResiduals {
        rho_rho: (lhs1 - rhs1).abs(),
        c2: (lhs2 - rhs2).abs(),
        difference: (lhs3 - rhs3).abs(),
        scalars: s,
    })
}

/// Real 3-form: a (2,1) part and a (1,2) part.
#[derive(Debug, Clone)]
pub struct BetaForm {
    pub part21: PQForm,
    pub part12: PQForm,
}

impl BetaForm {
    /// max |part12 − conj(part21)|.
    pub fn reality_residual(&self) -> f64 {
        self.part12.max_difference(&self.part21.conjugate())
    }

    pub fn max_norm(&self) -> f64 {
        self.part21.max_norm().max(self.part12.max_norm())
    }
}

/// Mixed curvature R^j_{i γ r̄} stored as `[((j*m + i)*m + γ)*m + r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedCurvature {
    pub m: usize,
    pub c: Vec<Complex64>,
}

impl MixedCurvature {
    /// Raise the second index with the unitary-frame metric (the identity).
    pub fn from_unitary(k: &KahlerCurvature) -> Self {
        let m = k.dim();
        let mut c = vec![Complex64::new(0.0, 0.0); m.pow(4)];
        for j in 0..m {
            for i in 0..m {
                for g in 0..m {
                    for r in 0..m {
                        c[((j * m + i) * m + g) * m + r] = k.get(i, j, g, r);
                    }
                }
            }
        }
        Self { m, c }
    }

    #[inline]
    fn get(&self, j: usize, i: usize, g: usize, r: usize) -> Complex64 {
        self.c[((j * self.m + i) * self.m + g) * self.m + r]
    }
}

/// Christoffel difference D^i_{jk} = Γ^i_{jk} − Γ̃^i_{jk}, stored `[(i*m + j)*m + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionDifference {
    pub m: usize,
    pub c: Vec<Complex64>,
}

impl ConnectionDifference {
    pub fn zero(m: usize) -> Self {
        Self {
            m,
            c: vec![Complex64::new(0.0, 0.0); m * m * m],
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.c[(i * self.m + j) * self.m + k]
    }
}

/// β = (1/8π²) D^i_{jk}(R^j_{iγr̄} + R̃^j_{iγr̄}) dz̄^r∧dz^k∧dz^γ + its conjugate-type part.
pub fn beta_form(
    gamma_diff: &ConnectionDifference,
    curv: &MixedCurvature,
    curv0: &MixedCurvature,
) -> Result<BetaForm, FormError> {
    let m = gamma_diff.m;
    if gamma_diff.c.len() != m * m * m {
        return Err(FormError::Shape("connection difference".into()));
    }
    for (name, c) in [("curvature", curv), ("reference curvature", curv0)] {
        if c.m != m || c.c.len() != m.pow(4) {
            return Err(FormError::Shape(format!("{name} does not match dimension {m}")));
        }
    }
    let pref = 1.0 / (8.0 * PI * PI);
    let mut part21 = PQForm::zero(m, 2, 1)?;
    let mut part12 = PQForm::zero(m, 1, 2)?;
    for k in 0..m {
        for g in 0..m {
            if k == g {
                continue;
            }
            // dz̄^r∧dz^k∧dz^γ = dz^k∧dz^γ∧dz̄^r; reordering k,γ gives merge sign
            let sign = merge_sign(1 << k, 1 << g);
            for r in 0..m {
                let mut t21 = Complex64::new(0.0, 0.0);
                let mut t12 = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    for j in 0..m {
                        let s = curv.get(j, i, g, r) + curv0.get(j, i, g, r);
                        t21 += gamma_diff.get(i, j, k) * s;
                        t12 += gamma_diff.get(i, j, k).conj() * s.conj();
                    }
                }
                let (km, gm) = ((1u32 << k) | (1 << g), 1u32 << r);
                let c21 = part21.coeff(km, gm) + t21 * pref * sign;
                part21.set_coeff(km, gm, c21);
                // dz^r∧dz̄^k∧dz̄^γ, the conjugate basis element
                let c12 = part12.coeff(gm, km) + t12 * pref * sign;
                part12.set_coeff(gm, km, c12);
            }
        }
    }
    Ok(BetaForm { part21, part12 })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: ratio of the top coefficient of a_1∧…∧a_m to that of
    /// ω^m, with each a_s = (√−1/2π)Σ A_s[k][l] dz^k∧dz̄^l, by expanding all words
    /// dz^{k1}dz̄^{l1}⋯ and sorting with explicit transposition counting.
    pub(crate) fn brute_top(mats: &[Vec<Complex64>], m: usize) -> Complex64 {
        fn word_sign(word: &mut Vec<(u8, usize)>) -> Option<f64> {
            // order: all holomorphic (tag 0) before antiholomorphic (tag 1), then by index
            let mut sign = 1.0;
            let n = word.len();
            for a in 0..n {
                for b in 0..n - 1 - a {
                    if word[b] > word[b + 1] {
                        word.swap(b, b + 1);
                        sign = -sign;
                    } else if word[b] == word[b + 1] {
                        return None;
                    }
                }
            }
            for w in word.windows(2) {
                if w[0] == w[1] {
                    return None;
                }
            }
            Some(sign)
        }
        fn expand(mats: &[Vec<Complex64>], m: usize, depth: usize, word: &mut Vec<(u8, usize)>, coef: Complex64, acc: &mut Complex64) {
            if depth == mats.len() {
                let mut w = word.clone();
                if let Some(s) = word_sign(&mut w) {
                    *acc += coef * s;
                }
                return;
            }
            for k in 0..m {
                for l in 0..m {
                    let a = mats[depth][k * m + l];
                    if a == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    word.push((0, k));
                    word.push((1, l));
                    expand(mats, m, depth + 1, word, coef * a, acc);
                    word.pop();
                    word.pop();
                }
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        expand(mats, m, 0, &mut Vec::new(), Complex64::new(1.0, 0.0), &mut acc);
        let id: Vec<Complex64> = (0..m * m)
            .map(|x| if x / m == x % m { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
            .collect();
        let ids = vec![id; m];
        let mut vol = Complex64::new(0.0, 0.0);
        expand(&ids, m, 0, &mut Vec::new(), Complex64::new(1.0, 0.0), &mut vol);
        acc / vol
    }

    fn identity(m: usize) -> Vec<Complex64> {
        (0..m * m)
            .map(|x| if x / m == x % m { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
            .collect()
    }

    #[test]
    fn omega_squared_in_dimension_two() {
        let w = PQForm::kahler(2).unwrap();
        let w2 = w.wedge(&w).unwrap();
        // ω∧ω = 2·(i/2π)² dz¹∧dz̄¹∧dz²∧dz̄² = −2(i/2π)² dz¹dz²dz̄¹dz̄²
        let expect = pair_factor() * pair_factor() * -2.0;
        assert!((w2.coeff(3, 3) - expect).norm() < 1e-16);
        assert_eq!(top_coefficient(&w2).unwrap().value, 1.0);
    }

    #[test]
    fn top_of_zero_is_zero_and_degree_checked() {
        let z = PQForm::zero(3, 3, 3).unwrap();
        assert_eq!(top_coefficient(&z).unwrap().value, 0.0);
        let w = PQForm::kahler(3).unwrap();
        assert!(matches!(top_coefficient(&w), Err(FormError::NotTopDegree { .. })));
        assert!(matches!(
            w.power(2).unwrap().wedge(&w.power(2).unwrap()),
            Err(FormError::DegreeOverflow { .. })
        ));
    }

    #[test]
    fn odd_degree_squares_vanish_and_graded_commutativity() {
        let beta = beta_form(
            &ConnectionDifference {
                m: 3,
                c: (0..27).map(|x| Complex64::new(x as f64 * 0.1, 1.0 - x as f64 * 0.05)).collect(),
            },
            &MixedCurvature::from_unitary(&KahlerCurvature::random(3, 4).unwrap()),
            &MixedCurvature::from_unitary(&KahlerCurvature::random(3, 5).unwrap()),
        )
        .unwrap();
        let a = &beta.part21;
        let b = &beta.part12;
        let ab = a.wedge(b).unwrap();
        let ba = b.wedge(a).unwrap();
        assert!(ab.add(&ba).unwrap().max_norm() < 1e-14);
        let w = PQForm::kahler(3).unwrap();
        let aw = a.wedge(&w).unwrap();
        let wa = w.wedge(a).unwrap();
        assert!(aw.max_difference(&wa) < 1e-15);
        let mut one_form = PQForm::zero(3, 1, 0).unwrap();
        one_form.set_coeff(1, 0, Complex64::new(0.3, 0.2));
        one_form.set_coeff(4, 0, Complex64::new(-1.0, 0.5));
        assert!(one_form.wedge(&one_form).unwrap().max_norm() == 0.0);
    }

    #[test]
    fn wedge_of_hermitian_forms_matches_brute_force() {
        let m = 3;
        let mats: Vec<Vec<Complex64>> = (0..3)
            .map(|s| {
                let k = KahlerCurvature::random(m, 100 + s).unwrap();
                k.ricci()
            })
            .collect();
        let forms: Vec<PQForm> = mats.iter().map(|a| PQForm::from_hermitian(m, a).unwrap()).collect();
        let prod = forms[0].wedge(&forms[1]).unwrap().wedge(&forms[2]).unwrap();
        let top = top_coefficient(&prod).unwrap();
        let oracle = brute_top(&mats, m);
        assert!((top.value - oracle.re).abs() < 1e-12 * (1.0 + oracle.re.abs()));
        assert!(top.imaginary.abs() < 1e-12);
    }

    #[test]
    fn rho_rho_omega_matches_brute_force_and_scalars() {
        let m = 3;
        let k = KahlerCurvature::random(m, 21).unwrap();
        let ric = k.ricci();
        let oracle = brute_top(&[ric.clone(), ric, identity(m)], m).re;
        let s = k.scalars();
        let expected = (s.r * s.r - s.ric2) / (m * (m - 1)) as f64;
        assert!((oracle - expected).abs() < 1e-10 * (1.0 + expected.abs()));
        let data = ChernData::new(&k).unwrap();
        let f = data.rho.wedge(&data.rho).unwrap().wedge(&data.omega).unwrap();
        assert!((top_coefficient(&f).unwrap().value - expected).abs() < 1e-10 * (1.0 + expected.abs()));
    }

    #[test]
    fn c2_matches_brute_force_expansion() {
        let m = 3;
        let k = KahlerCurvature::random(m, 5).unwrap();
        let omega_mat = |i: usize, j: usize| -> Vec<Complex64> {
            (0..m * m).map(|kl| k.get(j, i, kl / m, kl % m)).collect()
        };
        let mut oracle = Complex64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                oracle += brute_top(&[omega_mat(i, i), omega_mat(j, j), identity(m)], m);
                oracle -= brute_top(&[omega_mat(i, j), omega_mat(j, i), identity(m)], m);
            }
        }
        oracle *= 0.5;
        let data = ChernData::new(&k).unwrap();
        let top = top_coefficient(&data.c2.wedge(&data.omega).unwrap()).unwrap();
        assert!((top.value - oracle.re).abs() < 1e-11, "{} vs {}", top.value, oracle);
    }

    #[test]
    fn constant_holomorphic_ricci_form_is_multiple_of_omega() {
        let k = KahlerCurvature::constant_holomorphic(3, 0.8);
        let rho = ricci_form(&k).unwrap();
        let w = PQForm::kahler(3).unwrap();
        // (m+1)h/2 = 1.6
        assert!(rho.max_difference(&w.scaled(Complex64::new(1.6, 0.0))) < 1e-15);
    }

    #[test]
    fn zero_curvature_forms_vanish() {
        let k = KahlerCurvature::zero(2);
        assert_eq!(ricci_form(&k).unwrap().max_norm(), 0.0);
        assert_eq!(second_chern_form(&k).unwrap().max_norm(), 0.0);
        let r = verify_apte_pointwise(&k).unwrap();
        assert_eq!(r.max(), 0.0);
    }

    #[test]
    fn chern_forms_are_real() {
        let k = KahlerCurvature::random(2, 9).unwrap();
        let data = ChernData::new(&k).unwrap();
        assert!(data.c2.reality_residual() < 1e-13);
        assert!(data.rho.reality_residual() < 1e-15);
        assert!(data.omega.reality_residual() < 1e-16);
        assert!(data.trace_of_curvature().unwrap().max_difference(&data.rho) < 1e-15);
    }

    #[test]
    fn apte_examples() {
        let k = KahlerCurvature::random(2, 3).unwrap();
        assert!(verify_apte_pointwise(&k).unwrap().max() < 1e-10);
        let big = k.scaled(10.0);
        let r = verify_apte_pointwise(&big).unwrap();
        assert!(r.max() < 1e-8);
        assert!(r.max() / big.scalars().rm2 < 1e-12);
    }

    #[test]
    fn beta_vanishes_for_equal_connections() {
        let k = KahlerCurvature::random(2, 1).unwrap();
        let mixed = MixedCurvature::from_unitary(&k);
        let b = beta_form(&ConnectionDifference::zero(2), &mixed, &mixed).unwrap();
        assert_eq!(b.max_norm(), 0.0);
    }

    #[test]
    fn beta_parts_are_conjugate() {
        let m = 3;
        let d = ConnectionDifference {
            m,
            c: (0..27)
                .map(|x| Complex64::new((x as f64 * 0.37).sin(), (x as f64 * 1.3).cos()))
                .collect(),
        };
        let b = beta_form(
            &d,
            &MixedCurvature::from_unitary(&KahlerCurvature::random(m, 2).unwrap()),
            &MixedCurvature::from_unitary(&KahlerCurvature::random(m, 3).unwrap()),
        )
        .unwrap();
        assert!(b.max_norm() > 1e-3);
        assert!(b.reality_residual() < 1e-15);
    }

    #[test]
    fn beta_rejects_shape_mismatch() {
        let k = MixedCurvature::from_unitary(&KahlerCurvature::random(2, 1).unwrap());
        let r = beta_form(&ConnectionDifference::zero(3), &k, &k);
        assert!(matches!(r, Err(FormError::Shape(_))));
    }
}
