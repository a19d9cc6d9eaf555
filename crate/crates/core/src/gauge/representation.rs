use nalgebra::DVector;

use super::algebra::{LieAlgebraModel, SimpleFactor};
use crate::error::{Error, Result};
use crate::{CMatrix, C64};

/// Unitary representation given by the anti-Hermitian images of the basis.
#[derive(Clone, Debug)]
pub struct RepresentationModel {
    dim: usize,
    images: Vec<CMatrix>,
}

impl RepresentationModel {
    /// Validates anti-Hermiticity and the bracket relations.
    pub fn new(algebra: &LieAlgebraModel, images: Vec<CMatrix>) -> Result<Self> {
        let n = algebra.dim();
        if images.len() != n {
            return Err(Error::Shape(format!(
                "representation needs {n} generator images, got {}",
                images.len()
            )));
        }
        let dim = images.first().map(|m| m.nrows()).unwrap_or(0);
        for (a, m) in images.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Shape(format!("generator image {a} is not {dim}x{dim}")));
            }
            if (m.adjoint() + m).camax() > 1e-12 {
                return Err(Error::Parameter(format!(
                    "generator image {a} is not anti-Hermitian"
                )));
            }
        }
        for a in 0..n {
            for b in 0..n {
                let mut r = &images[a] * &images[b] - &images[b] * &images[a];
                for (c, img) in images.iter().enumerate() {
                    let f = algebra.structure_constant(a, b, c);
                    if f != 0.0 {
                        r -= img * C64::new(f, 0.0);
                    }
                }
                if r.camax() > 1e-10 {
                    return Err(Error::Parameter(format!(
                        "images {a}, {b} violate the bracket relations"
                    )));
                }
            }
        }
        Ok(Self { dim, images })
    }

    /// Every generator acts by zero.
    pub fn trivial(algebra: &LieAlgebraModel, dim: usize) -> Self {
        Self {
            dim,
            images: vec![CMatrix::zeros(dim, dim); algebra.dim()],
        }
    }

    /// Charge `q` under every `u(1)` factor, trivial on the rest, acting on
    /// `C^dim`.
    pub fn u1_charge(algebra: &LieAlgebraModel, q: f64, dim: usize) -> Result<Self> {
        if !algebra.factors().contains(&SimpleFactor::U1) {
            return Err(Error::Parameter("u1-charge preset needs a u1 factor".into()));
        }
        let mut images = Vec::new();
        for f in algebra.factors() {
            let k = match f {
                SimpleFactor::U1 => 1,
                SimpleFactor::Su2 => 3,
                SimpleFactor::Su3 => 8,
            };
            for _ in 0..k {
                images.push(if *f == SimpleFactor::U1 {
                    CMatrix::identity(dim, dim) * C64::new(0.0, q)
                } else {
                    CMatrix::zeros(dim, dim)
                });
            }
        }
        Self::new(algebra, images)
    }

    /// Defining representation of the first `su2` factor on `C²`.
    pub fn su2_fundamental(algebra: &LieAlgebraModel) -> Result<Self> {
        let mut images = Vec::new();
        let mut used = false;
        let mut offset = 0;
        for f in algebra.factors() {
            let (k, size) = match f {
                SimpleFactor::U1 => (1, 1),
                SimpleFactor::Su2 => (3, 2),
                SimpleFactor::Su3 => (8, 3),
            };
            for _ in 0..k {
                if *f == SimpleFactor::Su2 && !used {
                    let b = &algebra.basis()[images.len()];
                    images.push(b.view((offset, offset), (2, 2)).into_owned());
                } else {
                    images.push(CMatrix::zeros(2, 2));
                }
            }
            if *f == SimpleFactor::Su2 {
                used = true;
            }
            offset += size;
        }
        if !used {
            return Err(Error::Parameter(
                "su2-fundamental preset needs an su2 factor".into(),
            ));
        }
        Self::new(algebra, images)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn image(&self, a: usize) -> &CMatrix {
        &self.images[a]
    }

    pub fn images(&self) -> &[CMatrix] {
        &self.images
    }

    /// `ρ(X)` for Lie algebra coordinates `X`.
    pub fn act(&self, x: &DVector<f64>) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (img, &v) in self.images.iter().zip(x.iter()) {
            if v != 0.0 {
                out += img * C64::new(v, 0.0);
            }
        }
        out
    }

    /// Block-diagonal sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let d = self.dim + other.dim;
        let images = self
            .images
            .iter()
            .zip(&other.images)
            .map(|(a, b)| {
                let mut m = CMatrix::zeros(d, d);
                m.view_mut((0, 0), (self.dim, self.dim)).copy_from(a);
                m.view_mut((self.dim, self.dim), (other.dim, other.dim)).copy_from(b);
                m
            })
            .collect();
        Self { dim: d, images }
    }
}
