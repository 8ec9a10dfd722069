//! Algebraic curvature tensors at a point, in an orthonormal (real) or
//! unitary (Kähler) frame.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvatureError {
    #[error("complex dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
}

/// Scalar curvature, squared Ricci norm and squared Riemann norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CurvatureScalars {
    pub r: f64,
    pub ric2: f64,
    pub rm2: f64,
}

impl CurvatureScalars {
    pub fn new(r: f64, ric2: f64, rm2: f64) -> Self {
        Self { r, ric2, rm2 }
    }

    /// Rescale the metric by `factor`: curvature scales by 1/factor.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            r: self.r / factor,
            ric2: self.ric2 / (factor * factor),
            rm2: self.rm2 / (factor * factor),
        }
    }

    /// Integrand of the 4-d Chern–Gauss–Bonnet formula.
    pub fn gauss_bonnet_density(&self) -> f64 {
        self.rm2 - 4.0 * self.ric2 + self.r * self.r
    }
}

#[inline]
fn idx4(a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * 4 + b) * 4 + c) * 4 + d
}

/// Real curvature tensor R_{abcd} in dimension 4.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannTensor4 {
    c: [f64; 256],
}

/// Residuals of the three algebraic symmetries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryResiduals {
    pub antisymmetry: f64,
    pub pair: f64,
    pub bianchi: f64,
}

impl SymmetryResiduals {
    pub fn max(&self) -> f64 {
        self.antisymmetry.max(self.pair).max(self.bianchi)
    }
}

impl RiemannTensor4 {
    pub fn zero() -> Self {
        Self { c: [0.0; 256] }
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zero();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        t.c[idx4(a, b, c, d)] = f(a, b, c, d);
                    }
                }
            }
        }
        t
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.c[idx4(a, b, c, d)]
    }

    pub fn components(&self) -> &[f64; 256] {
        &self.c
    }

    /// R_{abcd} = K(δ_ac δ_bd − δ_ad δ_bc).
    pub fn constant_curvature(k: f64) -> Self {
        let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        Self::from_fn(|a, b, c, e| k * (d(a, c) * d(b, e) - d(a, e) * d(b, c)))
    }

    /// Tensor with prescribed sectional curvature on each coordinate plane
    /// {a,b}; `k[a][b]` for a ≠ b, symmetric in a,b. All mixed terms vanish.
    pub fn diagonal_planes(k: [[f64; 4]; 4]) -> Self {
        Self::from_fn(|a, b, c, d| {
            if a == b {
                return 0.0;
            }
            if a == c && b == d {
                k[a][b]
            } else if a == d && b == c {
                -k[a][b]
            } else {
                0.0
            }
        })
    }

    /// Riemannian product of two surfaces, frames {0,1} and {2,3}.
    pub fn product_surfaces(k1: f64, k2: f64) -> Self {
        let mut k = [[0.0; 4]; 4];
        k[0][1] = k1;
        k[1][0] = k1;
        k[2][3] = k2;
        k[3][2] = k2;
        Self::diagonal_planes(k)
    }

    /// Warped product dr² + ψ² g_{S³}: radial planes {0,i} carry `radial`,
    /// spherical planes {i,j} carry `sphere`.
    pub fn warped(radial: f64, sphere: f64) -> Self {
        let mut k = [[sphere; 4]; 4];
        for i in 1..4 {
            k[0][i] = radial;
            k[i][0] = radial;
        }
        Self::diagonal_planes(k)
    }

    /// Complex space form with holomorphic sectional curvature `h` for the
    /// complex structure J e0 = e1, J e2 = e3.
    pub fn complex_space_form(h: f64) -> Self {
        let j = |v: usize, w: usize| -> f64 {
            // matrix of J: J e_v = Σ_w j(w,v) e_w
            match (w, v) {
                (1, 0) | (3, 2) => 1.0,
                (0, 1) | (2, 3) => -1.0,
                _ => 0.0,
            }
        };
        let g = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        // ⟨X, J Y⟩ for basis vectors
        let gj = |a: usize, b: usize| j(a, b);
        Self::from_fn(|a, b, c, d| {
            0.25 * h
                * (g(a, c) * g(b, d) - g(a, d) * g(b, c) + gj(a, c) * gj(b, d)
                    - gj(a, d) * gj(b, c)
                    + 2.0 * gj(a, b) * gj(c, d))
        })
    }

    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut raw = Self::zero();
        for v in raw.c.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        raw.projected()
    }

    /// Orthogonal projection onto algebraic curvature tensors.
    pub fn projected(&self) -> Self {
        let s = Self::from_fn(|a, b, c, d| {
            let x = self.get(a, b, c, d) - self.get(b, a, c, d) - self.get(a, b, d, c)
                + self.get(b, a, d, c);
            let y = self.get(c, d, a, b) - self.get(d, c, a, b) - self.get(c, d, b, a)
                + self.get(d, c, b, a);
            (x + y) / 8.0
        });
        Self::from_fn(|a, b, c, d| {
            s.get(a, b, c, d) - (s.get(a, b, c, d) + s.get(a, c, d, b) + s.get(a, d, b, c)) / 3.0
        })
    }

    pub fn symmetry_residuals(&self) -> SymmetryResiduals {
        let mut r = SymmetryResiduals {
            antisymmetry: 0.0,
            pair: 0.0,
            bianchi: 0.0,
        };
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let v = self.get(a, b, c, d);
                        r.antisymmetry = r
                            .antisymmetry
                            .max((v + self.get(b, a, c, d)).abs())
                            .max((v + self.get(a, b, d, c)).abs());
                        r.pair = r.pair.max((v - self.get(c, d, a, b)).abs());
                        r.bianchi = r
                            .bianchi
                            .max((v + self.get(a, c, d, b) + self.get(a, d, b, c)).abs());
                    }
                }
            }
        }
        r
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        let mut t = self.clone();
        t.c.iter_mut().for_each(|v| *v *= lambda);
        t
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut t = self.clone();
        t.c.iter_mut().zip(other.c.iter()).for_each(|(v, w)| *v += w);
        t
    }

    /// Components in the rotated frame e'_a = Σ_i q[i][a] e_i.
    pub fn rotated(&self, q: &[[f64; 4]; 4]) -> Self {
        // contract one slot at a time
        let mut cur = self.c;
        for slot in 0..4 {
            let mut next = [0.0; 256];
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        for d in 0..4 {
                            let ix = [a, b, c, d];
                            let mut acc = 0.0;
                            for i in 0..4 {
                                let mut jx = ix;
                                jx[slot] = i;
                                acc += q[i][ix[slot]] * cur[idx4(jx[0], jx[1], jx[2], jx[3])];
                            }
                            next[idx4(a, b, c, d)] = acc;
                        }
                    }
                }
            }
            cur = next;
        }
        Self { c: cur }
    }

    /// Ric_ab = Σ_c R_acbc.
    pub fn ricci(&self) -> [[f64; 4]; 4] {
        let mut ric = [[0.0; 4]; 4];
        for (a, row) in ric.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|c| self.get(a, c, b, c)).sum();
            }
        }
        ric
    }

    pub fn scalars(&self) -> CurvatureScalars {
        let ric = self.ricci();
        let r = (0..4).map(|a| ric[a][a]).sum();
        let ric2 = ric.iter().flatten().map(|v| v * v).sum();
        let rm2 = self.c.iter().map(|v| v * v).sum();
        CurvatureScalars { r, ric2, rm2 }
    }

    /// Rm(Ric, Ric) = Σ R_{ikjl} Ric_{ij} Ric_{kl}.
    pub fn rm_ric_ric(&self) -> f64 {
        let ric = self.ricci();
        let mut acc = 0.0;
        for i in 0..4 {
            for k in 0..4 {
                for j in 0..4 {
                    for l in 0..4 {
                        acc += self.get(i, k, j, l) * ric[i][j] * ric[k][l];
                    }
                }
            }
        }
        acc
    }
}

/// Kähler curvature R_{i j̄ k l̄} in a unitary frame of complex dimension m.
#[derive(Debug, Clone, PartialEq)]
pub struct KahlerCurvature {
    m: usize,
    c: Vec<Complex64>,
}

impl KahlerCurvature {
    pub fn zero(m: usize) -> Self {
        Self {
            m,
            c: vec![Complex64::new(0.0, 0.0); m.pow(4)],
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    #[inline]
    fn ix(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.m + j) * self.m + k) * self.m + l
    }

    /// Component R_{i j̄ k l̄} (zero-based indices).
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        self.c[self.ix(i, j, k, l)]
    }

    pub fn from_fn(m: usize, mut f: impl FnMut(usize, usize, usize, usize) -> Complex64) -> Self {
        let mut t = Self::zero(m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let ix = t.ix(i, j, k, l);
                        t.c[ix] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    /// Constant holomorphic sectional curvature h:
    /// R_{i j̄ k l̄} = (h/2)(δ_ij δ_kl + δ_il δ_kj).
    pub fn constant_holomorphic(m: usize, h: f64) -> Self {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        Self::from_fn(m, |i, j, k, l| {
            Complex64::new(0.5 * h * (d(i, j) * d(k, l) + d(i, l) * d(k, j)), 0.0)
        })
    }

    /// Product of Riemann surfaces: only R_{i ī i ī} = kappa[i] is nonzero.
    pub fn product_curves(kappa: &[f64]) -> Self {
        let m = kappa.len();
        Self::from_fn(m, |i, j, k, l| {
            if i == j && j == k && k == l {
                Complex64::new(kappa[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn random(m: usize, seed: u64) -> Result<Self, CurvatureError> {
        if m < 2 {
            return Err(CurvatureError::DimensionTooSmall(m));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut raw = Self::zero(m);
        for v in raw.c.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *v = Complex64::new(re, im);
        }
        Ok(raw.projected())
    }

    /// Average over the index swaps and the reality involution.
    pub fn projected(&self) -> Self {
        let m = self.m;
        let s = Self::from_fn(m, |i, j, k, l| {
            (self.get(i, j, k, l) + self.get(k, j, i, l) + self.get(i, l, k, j) + self.get(k, l, i, j))
                / 4.0
        });
        Self::from_fn(m, |i, j, k, l| (s.get(i, j, k, l) + s.get(j, i, l, k).conj()) / 2.0)
    }

    pub fn symmetry_residual(&self) -> f64 {
        let m = self.m;
        let mut r: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let v = self.get(i, j, k, l);
                        r = r
                            .max((v - self.get(k, j, i, l)).norm())
                            .max((v - self.get(i, l, k, j)).norm())
                            .max((v.conj() - self.get(j, i, l, k)).norm());
                    }
                }
            }
        }
        r
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            m: self.m,
            c: self.c.iter().map(|v| v * lambda).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            m: self.m,
            c: self.c.iter().zip(&other.c).map(|(a, b)| a + b).collect(),
        }
    }

    /// Components in the frame e'_a = Σ_i u[i][a] e_i for unitary u.
    pub fn transformed(&self, u: &[Vec<Complex64>]) -> Self {
        let m = self.m;
        let mut cur = self.c.clone();
        for slot in 0..4 {
            let mut next = vec![Complex64::new(0.0, 0.0); m.pow(4)];
            for (flat, out) in next.iter_mut().enumerate() {
                let ix = [flat / (m * m * m), (flat / (m * m)) % m, (flat / m) % m, flat % m];
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    let mut jx = ix;
                    jx[slot] = i;
                    let coef = if slot % 2 == 0 {
                        u[i][ix[slot]]
                    } else {
                        u[i][ix[slot]].conj()
                    };
                    acc += coef * cur[((jx[0] * m + jx[1]) * m + jx[2]) * m + jx[3]];
                }
                *out = acc;
            }
            cur = next;
        }
        Self { m, c: cur }
    }

    /// Ric_{k l̄} = Σ_i R_{i ī k l̄}, row-major m×m.
    pub fn ricci(&self) -> Vec<Complex64> {
        let m = self.m;
        let mut ric = vec![Complex64::new(0.0, 0.0); m * m];
        for k in 0..m {
            for l in 0..m {
                ric[k * m + l] = (0..m).map(|i| self.get(i, i, k, l)).sum();
            }
        }
        ric
    }

    pub fn scalars(&self) -> CurvatureScalars {
        let m = self.m;
        let ric = self.ricci();
        let r: f64 = (0..m).map(|k| ric[k * m + k].re).sum();
        let mut ric2 = Complex64::new(0.0, 0.0);
        for k in 0..m {
            for l in 0..m {
                ric2 += ric[k * m + l] * ric[l * m + k];
            }
        }
        let mut rm2 = Complex64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        rm2 += self.get(i, j, k, l) * self.get(j, i, l, k);
                    }
                }
            }
        }
        CurvatureScalars {
            r,
            ric2: ric2.re,
            rm2: rm2.re,
        }
    }
}

/// Random orthogonal 4×4 matrix (Gram–Schmidt on Gaussian columns).
pub fn random_orthogonal(seed: u64) -> [[f64; 4]; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<[f64; 4]> = Vec::new();
    while cols.len() < 4 {
        let mut v = [0.0; 4];
        for x in v.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
        for c in &cols {
            let p: f64 = (0..4).map(|i| v[i] * c[i]).sum();
            for i in 0..4 {
                v[i] -= p * c[i];
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            cols.push(v.map(|x| x / n));
        }
    }
    let mut q = [[0.0; 4]; 4];
    for (a, c) in cols.iter().enumerate() {
        for i in 0..4 {
            q[i][a] = c[i];
        }
    }
    q
}

/// Random m×m unitary matrix, row-major `u[i][a]`.
pub fn random_unitary(m: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    while cols.len() < m {
        let mut v: Vec<Complex64> = (0..m)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        for c in &cols {
            let p: Complex64 = (0..m).map(|i| c[i].conj() * v[i]).sum();
            for i in 0..m {
                v[i] -= p * c[i];
            }
        }
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            cols.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    (0..m).map(|i| (0..m).map(|a| cols[a][i]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn unit_sphere_ricci_and_norms() {
        let t = RiemannTensor4::constant_curvature(1.0);
        let ric = t.ricci();
        for a in 0..4 {
            for b in 0..4 {
                let e = if a == b { 3.0 } else { 0.0 };
                assert_eq!(ric[a][b], e);
            }
        }
        let s = t.scalars();
        assert_eq!((s.r, s.ric2, s.rm2), (12.0, 36.0, 24.0));
        assert_eq!(RiemannTensor4::constant_curvature(-1.0).scalars().r, -12.0);
        assert_eq!(RiemannTensor4::constant_curvature(0.0), RiemannTensor4::zero());
    }

    #[test]
    fn zero_tensor_scalars() {
        assert_eq!(RiemannTensor4::zero().scalars(), CurvatureScalars::default());
        assert_eq!(KahlerCurvature::zero(3).scalars(), CurvatureScalars::default());
    }

    #[test]
    fn product_surface_norms() {
        let (p, q) = (0.7, 1.9);
        let s = RiemannTensor4::product_surfaces(1.0 / p, 1.0 / q).scalars();
        assert!(close(s.r, 2.0 / p + 2.0 / q, 1e-15));
        assert!(close(s.ric2, 2.0 / (p * p) + 2.0 / (q * q), 1e-15));
        assert!(close(s.rm2, 4.0 / (p * p) + 4.0 / (q * q), 1e-15));
    }

    #[test]
    fn random_real_tensor_is_exact_curvature_tensor() {
        let t = RiemannTensor4::random(11);
        assert!(t.symmetry_residuals().max() < 1e-15);
        let s = t.scalars();
        assert!(s.ric2 >= s.r * s.r / 4.0);
    }

    #[test]
    fn kahler_random_is_exact_and_deterministic() {
        let a = KahlerCurvature::random(2, 1).unwrap();
        assert!(a.symmetry_residual() < 1e-15);
        let b = KahlerCurvature::random(3, 7).unwrap();
        assert_eq!(b, KahlerCurvature::random(3, 7).unwrap());
        assert_eq!(KahlerCurvature::random(1, 0), Err(CurvatureError::DimensionTooSmall(1)));
    }

    #[test]
    fn kahler_ricci_hermitian() {
        for seed in 0..5 {
            let k = KahlerCurvature::random(2 + seed as usize % 3, seed).unwrap();
            let m = k.dim();
            let ric = k.ricci();
            for a in 0..m {
                for b in 0..m {
                    assert!((ric[a * m + b].conj() - ric[b * m + a]).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn complex_space_form_is_einstein() {
        let t = RiemannTensor4::complex_space_form(4.0);
        assert!(t.symmetry_residuals().max() < 1e-15);
        assert_eq!(t.get(0, 1, 0, 1), 4.0);
        let ric = t.ricci();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(ric[a][b], if a == b { 6.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn kahler_constant_holomorphic_ricci() {
        let k = KahlerCurvature::constant_holomorphic(3, 2.0);
        let ric = k.ricci();
        // (m+1) h / 2
        assert!((ric[0].re - 4.0).abs() < 1e-15);
        assert!(ric[1].norm() < 1e-15);
    }

    #[test]
    fn warped_tensor_matches_hand_contraction() {
        let (kr, ks) = (0.3, -1.1);
        let t = RiemannTensor4::warped(kr, ks);
        let ric = t.ricci();
        assert!(close(ric[0][0], 3.0 * kr, 1e-15));
        assert!(close(ric[2][2], kr + 2.0 * ks, 1e-15));
        let s = t.scalars();
        assert!(close(s.rm2, 12.0 * kr * kr + 12.0 * ks * ks, 1e-14));
        let l1 = 3.0 * kr;
        let l2 = kr + 2.0 * ks;
        assert!(close(t.rm_ric_ric(), 6.0 * kr * l1 * l2 + 6.0 * ks * l2 * l2, 1e-14));
    }

    #[test]
    fn rm_ric_ric_sphere() {
        // K = 1/c: Ric = 3/c g, Rm(Ric,Ric) = 12·9/c³
        let c: f64 = 0.4;
        let t = RiemannTensor4::constant_curvature(1.0 / c);
        assert!(close(t.rm_ric_ric(), 108.0 / c.powi(3), 1e-14));
    }
}
