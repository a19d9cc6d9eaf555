use crate::clifford::TwistedModel;
use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

#[derive(Clone, Debug, PartialEq)]
pub enum YukawaKind {
    Zero,
    /// `i Y Ψ = mass Ψ`, independent of the Higgs field.
    Mass { mass: f64 },
    /// `Y_Φ = 1 ⊗ [[0, -B(Φ)†], [B(Φ), 0]]` on `Σ ⊗ (V₊ ⊕ V₋)` with
    /// `B(Φ) = Σ_k Φ_k B_k` (or `conj(Φ_k)` when `antilinear`).
    Block {
        couplings: Vec<CMatrix>,
        antilinear: bool,
    },
}

/// Yukawa coupling acting on twisted spinors.
#[derive(Clone, Debug)]
pub struct YukawaModel {
    kind: YukawaKind,
    w_dim: usize,
    s_dim: usize,
    v_plus: usize,
    v_minus: usize,
}

impl YukawaModel {
    pub fn new(kind: YukawaKind, w_dim: usize, twisted: &TwistedModel) -> Result<Self> {
        let (v_plus, v_minus) = twisted.split();
        if let YukawaKind::Block { couplings, .. } = &kind {
            if twisted.clifford().dimension() % 2 == 1 {
                return Err(Error::Parameter(
                    "block Yukawa couplings need an even dimension".into(),
                ));
            }
            if couplings.len() != w_dim {
                return Err(Error::Shape(format!(
                    "block Yukawa needs one coupling per Higgs component ({w_dim}), got {}",
                    couplings.len()
                )));
            }
            for (k, b) in couplings.iter().enumerate() {
                if b.nrows() != v_minus || b.ncols() != v_plus {
                    return Err(Error::Shape(format!(
                        "Yukawa block {k} must be {v_minus}x{v_plus}, got {}x{}",
                        b.nrows(),
                        b.ncols()
                    )));
                }
            }
        }
        if let YukawaKind::Mass { mass } = kind {
            if !mass.is_finite() {
                return Err(Error::Parameter("mass must be finite".into()));
            }
        }
        Ok(Self {
            kind,
            w_dim,
            s_dim: twisted.clifford().spinor_dim(),
            v_plus,
            v_minus,
        })
    }

    pub fn kind(&self) -> &YukawaKind {
        &self.kind
    }

    pub fn is_zero(&self) -> bool {
        self.kind == YukawaKind::Zero
    }

    /// `Y_Φ` as a matrix on `Σ ⊗ V`.
    pub fn matrix(&self, phi: &CVector) -> Result<CMatrix> {
        let v = self.v_plus + self.v_minus;
        let n = self.s_dim * v;
        match &self.kind {
            YukawaKind::Zero => Ok(CMatrix::zeros(n, n)),
            YukawaKind::Mass { mass } => Ok(CMatrix::identity(n, n) * C64::new(0.0, -mass)),
            YukawaKind::Block {
                couplings,
                antilinear,
            } => {
                if phi.len() != self.w_dim {
                    return Err(Error::Shape(format!(
                        "Higgs value has {} components, expected {}",
                        phi.len(),
                        self.w_dim
                    )));
                }
                let mut b = CMatrix::zeros(self.v_minus, self.v_plus);
                for (bk, p) in couplings.iter().zip(phi.iter()) {
                    let c = if *antilinear { p.conj() } else { *p };
                    b += bk * c;
                }
                let mut m = CMatrix::zeros(v, v);
                m.view_mut((self.v_plus, 0), (self.v_minus, self.v_plus))
                    .copy_from(&b);
                m.view_mut((0, self.v_plus), (self.v_plus, self.v_minus))
                    .copy_from(&(-b.adjoint()));
                Ok(CMatrix::identity(self.s_dim, self.s_dim).kronecker(&m))
            }
        }
    }

    pub fn apply(&self, phi: &CVector, psi: &CVector) -> Result<CVector> {
        Ok(self.matrix(phi)? * psi)
    }

    /// `⟨Ψ, i Y_Φ Ψ⟩`, real because `i Y_Φ` is self-adjoint.
    pub fn pairing(&self, twisted: &TwistedModel, phi: &CVector, psi: &CVector) -> Result<f64> {
        let y = self.apply(phi, psi)? * C64::new(0.0, 1.0);
        Ok(twisted.pair(psi, &y).re)
    }

    /// `J3 ∈ W` with `2 Re⟨Φ, J3⟩ = ⟨Ψ, i Y_Φ Ψ⟩` for every `Φ`; zero for the
    /// Higgs-independent kinds.
    pub fn dual(&self, twisted: &TwistedModel, psi: &CVector) -> Result<CVector> {
        let mut out = CVector::zeros(self.w_dim);
        if !matches!(self.kind, YukawaKind::Block { .. }) {
            return Ok(out);
        }
        for k in 0..self.w_dim {
            let mut e = CVector::zeros(self.w_dim);
            e[k] = C64::new(1.0, 0.0);
            let f_re = self.pairing(twisted, &e, psi)?;
            e[k] = C64::new(0.0, 1.0);
            let f_im = self.pairing(twisted, &e, psi)?;
            out[k] = C64::new(0.5 * f_re, 0.5 * f_im);
        }
        Ok(out)
    }
}

/// Free-function forms.
pub fn yukawa_apply(y: &YukawaModel, phi: &CVector, psi: &CVector) -> Result<CVector> {
    y.apply(phi, psi)
}

pub fn yukawa_dual(y: &YukawaModel, twisted: &TwistedModel, psi: &CVector) -> Result<CVector> {
    y.dual(twisted, psi)
}
