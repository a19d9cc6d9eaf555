use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::{CMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimpleFactor {
    U1,
    Su2,
    Su3,
}

impl SimpleFactor {
    pub fn name(self) -> &'static str {
        match self {
            SimpleFactor::U1 => "u1",
            SimpleFactor::Su2 => "su2",
            SimpleFactor::Su3 => "su3",
        }
    }

    fn matrix_size(self) -> usize {
        match self {
            SimpleFactor::U1 => 1,
            SimpleFactor::Su2 => 2,
            SimpleFactor::Su3 => 3,
        }
    }

    /// Orthonormal anti-Hermitian basis: `i`, `-iσ_a/2`, `-iλ_a/2`.
    fn basis(self) -> Vec<CMatrix> {
        let c = |re: f64, im: f64| C64::new(re, im);
        match self {
            SimpleFactor::U1 => vec![CMatrix::from_element(1, 1, c(0.0, 1.0))],
            SimpleFactor::Su2 => {
                let z = c(0.0, 0.0);
                let half = 0.5;
                vec![
                    CMatrix::from_row_slice(2, 2, &[z, c(0.0, -half), c(0.0, -half), z]),
                    CMatrix::from_row_slice(2, 2, &[z, c(-half, 0.0), c(half, 0.0), z]),
                    CMatrix::from_row_slice(2, 2, &[c(0.0, -half), z, z, c(0.0, half)]),
                ]
            }
            SimpleFactor::Su3 => gell_mann()
                .into_iter()
                .map(|l| l * c(0.0, -0.5))
                .collect(),
        }
    }
}

fn gell_mann() -> Vec<CMatrix> {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let r3 = C64::new(1.0 / 3f64.sqrt(), 0.0);
    let m = |v: [C64; 9]| CMatrix::from_row_slice(3, 3, &v);
    vec![
        m([z, o, z, o, z, z, z, z, z]),
        m([z, -i, z, i, z, z, z, z, z]),
        m([o, z, z, z, -o, z, z, z, z]),
        m([z, z, o, z, z, z, o, z, z]),
        m([z, z, -i, z, z, z, i, z, z]),
        m([z, z, z, z, z, o, z, o, z]),
        m([z, z, z, z, z, -i, z, i, z]),
        m([r3, z, z, z, r3, z, z, z, r3 * -2.0]),
    ]
}

/// A compact Lie algebra with an orthonormal basis of anti-Hermitian
/// matrices; the Ad-invariant inner product is the identity in this basis.
#[derive(Clone, Debug)]
pub struct LieAlgebraModel {
    name: String,
    factors: Vec<SimpleFactor>,
    basis: Vec<CMatrix>,
    structure: Vec<f64>,
}

/// Parses `u1`, `su2`, `su3` and direct sums such as `su3+su2+u1`.
pub fn build_lie_algebra(spec: &str) -> Result<LieAlgebraModel> {
    let mut factors = Vec::new();
    for part in spec.split(['+', ',']) {
        let p = part.trim().to_ascii_lowercase().replace(['(', ')', '_'], "");
        let f = match p.as_str() {
            "u1" => SimpleFactor::U1,
            "su2" => SimpleFactor::Su2,
            "su3" => SimpleFactor::Su3,
            _ => {
                return Err(Error::Parameter(format!(
                    "unsupported Lie algebra '{}'",
                    part.trim()
                )))
            }
        };
        factors.push(f);
    }
    LieAlgebraModel::from_factors(&factors)
}

impl LieAlgebraModel {
    pub fn from_factors(factors: &[SimpleFactor]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Parameter("empty Lie algebra".into()));
        }
        let size: usize = factors.iter().map(|f| f.matrix_size()).sum();
        let mut basis = Vec::new();
        let mut offset = 0;
        for f in factors {
            let k = f.matrix_size();
            for b in f.basis() {
                let mut big = CMatrix::zeros(size, size);
                big.view_mut((offset, offset), (k, k)).copy_from(&b);
                basis.push(big);
            }
            offset += k;
        }
        let n = basis.len();
        let mut structure = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                let br = &basis[a] * &basis[b] - &basis[b] * &basis[a];
                for c in 0..n {
                    let v = frob(&basis[c], &br) / frob(&basis[c], &basis[c]);
                    structure[(a * n + b) * n + c] = if v.abs() < 1e-15 { 0.0 } else { v };
                }
            }
        }
        let name = factors.iter().map(|f| f.name()).collect::<Vec<_>>().join("+");
        Ok(Self {
            name,
            factors: factors.to_vec(),
            basis,
            structure,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn factors(&self) -> &[SimpleFactor] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Basis elements in the block-diagonal defining representation.
    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    /// `f_ab^c` with `[ξ_a, ξ_b] = Σ_c f_ab^c ξ_c`.
    #[inline]
    pub fn structure_constant(&self, a: usize, b: usize, c: usize) -> f64 {
        let n = self.dim();
        self.structure[(a * n + b) * n + c]
    }

    pub fn is_abelian(&self) -> bool {
        self.structure.iter().all(|v| *v == 0.0)
    }

    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut out = DVector::zeros(n);
        if self.is_abelian() {
            return out;
        }
        for a in 0..n {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                let xy = x[a] * y[b];
                if xy == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out[c] += xy * self.structure_constant(a, b, c);
                }
            }
        }
        out
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(y)
    }

    pub fn inner_product_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::identity(self.dim(), self.dim())
    }

    /// Coordinates of a matrix in the span of the basis.
    pub fn coordinates(&self, x: &CMatrix) -> DVector<f64> {
        DVector::from_fn(self.dim(), |c, _| frob(&self.basis[c], x) / frob(&self.basis[c], &self.basis[c]))
    }

    pub fn matrix(&self, x: &DVector<f64>) -> CMatrix {
        let n = self.basis[0].nrows();
        let mut out = CMatrix::zeros(n, n);
        for (b, &v) in self.basis.iter().zip(x.iter()) {
            out += b * C64::new(v, 0.0);
        }
        out
    }

    /// Largest `|⟨[ξ_a, ξ_b], ξ_c⟩ + ⟨ξ_b, [ξ_a, ξ_c]⟩|` over basis triples.
    pub fn ad_invariance_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let r = self.structure_constant(a, b, c) + self.structure_constant(a, c, b);
                    worst = worst.max(r.abs());
                }
            }
        }
        worst
    }
}

/// `Re tr(x† y)`.
fn frob(x: &CMatrix, y: &CMatrix) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn su2_structure_is_levi_civita() {
        let g = build_lie_algebra("su2").unwrap();
        assert_eq!(g.structure_constant(0, 1, 2), 1.0);
        assert_eq!(g.structure_constant(1, 0, 2), -1.0);
        assert_eq!(g.structure_constant(1, 2, 0), 1.0);
        assert!(g.ad_invariance_residual() <= 1e-14);
    }

    #[test]
    fn standard_model_algebra() {
        let g = build_lie_algebra("su3+su2+u1").unwrap();
        assert_eq!(g.dim(), 12);
        assert!(g.ad_invariance_residual() <= 1e-14);
        // orthonormal basis under -2 tr for su(n), tr-norm for u(1)
        for a in 0..12 {
            for b in 0..12 {
                let mut ip = -(&g.basis()[a] * &g.basis()[b]).trace().re;
                if a < 11 {
                    ip *= 2.0;
                }
                let expect = if a == b { 1.0 } else { 0.0 };
                if a == 11 || b == 11 {
                    continue;
                }
                assert!((ip - expect).abs() < 1e-14, "{a} {b} {ip}");
            }
        }
        assert!(build_lie_algebra("so3").is_err());
    }

    #[test]
    fn u1_is_abelian() {
        let g = build_lie_algebra("u1").unwrap();
        assert!(g.is_abelian());
        assert_eq!(g.dim(), 1);
    }
}
