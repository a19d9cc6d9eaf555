//! Gamma matrices with `γ_a γ_b + γ_b γ_a = -2 η_ab`, the indefinite spinor
//! pairing `⟨ψ, φ⟩ = ψ† γ_0 φ`, chirality, twisted spinors and the twisted
//! Dirac operator.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gauge::{field_strength, spinor_covariant_derivative, FieldConfiguration};
use crate::geometry::curvature_package;
use crate::numerics::{fd_jet, Stencil};
use crate::{CMatrix, CVector, C64};

const I: C64 = C64::new(0.0, 1.0);

fn pauli() -> [CMatrix; 3] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    [
        CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        CMatrix::from_row_slice(2, 2, &[z, -I, I, z]),
        CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// `2k + 1` Hermitian matrices of size `2^k` squaring to the identity and
/// pairwise anticommuting.
fn euclidean_generators(k: usize) -> Vec<CMatrix> {
    let [s1, s2, s3] = pauli();
    let mut gens = vec![CMatrix::identity(1, 1)];
    for _ in 0..k {
        let n = gens[0].nrows();
        let id = CMatrix::identity(n, n);
        let mut next: Vec<CMatrix> = gens.iter().map(|g| g.kronecker(&s1)).collect();
        next.push(id.kronecker(&s2));
        next.push(id.kronecker(&s3));
        gens = next;
    }
    gens
}

/// Chirality sector of a twisted spinor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Chirality {
    Plus,
    Minus,
    Full,
}

impl Chirality {
    pub fn opposite(self) -> Self {
        match self {
            Chirality::Plus => Chirality::Minus,
            Chirality::Minus => Chirality::Plus,
            Chirality::Full => Chirality::Full,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CliffordModel {
    m: usize,
    gamma: Vec<CMatrix>,
    pairing: CMatrix,
    chirality: Option<CMatrix>,
}

pub fn build_clifford_model(m: usize) -> Result<CliffordModel> {
    if !(2..=8).contains(&m) {
        return Err(Error::Parameter(format!(
            "Clifford models are supported for 2 <= m <= 8, got {m}"
        )));
    }
    let k = m / 2;
    let e = euclidean_generators(k);
    let gamma: Vec<CMatrix> = (0..m)
        .map(|a| if a == 0 { e[0].clone() } else { &e[a] * I })
        .collect();
    let pairing = gamma[0].clone();
    let chirality = if m % 2 == 0 {
        let n = gamma[0].nrows();
        let mut p = CMatrix::identity(n, n);
        for g in &gamma {
            p = p * g;
        }
        // p² = ±1; pick the phase that makes ω² = 1 and ω Hermitian.
        let sq = &p * &p;
        let c = if sq[(0, 0)].re > 0.0 { C64::new(1.0, 0.0) } else { I };
        Some(p * c)
    } else {
        None
    };
    Ok(CliffordModel {
        m,
        gamma,
        pairing,
        chirality,
    })
}

impl CliffordModel {
    pub fn dimension(&self) -> usize {
        self.m
    }

    pub fn spinor_dim(&self) -> usize {
        self.gamma[0].nrows()
    }

    pub fn gamma(&self, a: usize) -> &CMatrix {
        &self.gamma[a]
    }

    pub fn gammas(&self) -> &[CMatrix] {
        &self.gamma
    }

    /// `γ^a = η^{ab} γ_b`.
    pub fn gamma_upper(&self, a: usize) -> CMatrix {
        if a == 0 {
            -&self.gamma[0]
        } else {
            self.gamma[a].clone()
        }
    }

    pub fn pairing(&self) -> &CMatrix {
        &self.pairing
    }

    pub fn chirality(&self) -> Option<&CMatrix> {
        self.chirality.as_ref()
    }

    /// `(1 ± ω) / 2` for even `m`.
    pub fn projector(&self, plus: bool) -> Option<CMatrix> {
        self.chirality.as_ref().map(|w| {
            let n = w.nrows();
            let id = CMatrix::identity(n, n);
            if plus {
                (id + w) * C64::new(0.5, 0.0)
            } else {
                (id - w) * C64::new(0.5, 0.0)
            }
        })
    }

    pub fn pair(&self, psi: &CVector, phi: &CVector) -> C64 {
        psi.dotc(&(&self.pairing * phi))
    }

    /// Clifford multiplication by the frame vector with components `x`.
    pub fn clifford_vector(&self, x: &[f64]) -> CMatrix {
        let n = self.spinor_dim();
        let mut out = CMatrix::zeros(n, n);
        for (g, &v) in self.gamma.iter().zip(x) {
            out += g * C64::new(v, 0.0);
        }
        out
    }

    /// Spin connection `Ω = -¼ Σ ω_ab γ^a γ^b` for Levi-Civita connection
    /// coefficients `ω_ab = g(e_a, ∇ e_b)` in one direction.
    pub fn spin_connection(&self, omega: &DMatrix<f64>) -> CMatrix {
        let n = self.spinor_dim();
        let mut out = CMatrix::zeros(n, n);
        for a in 0..self.m {
            let ga = self.gamma_upper(a);
            for b in 0..self.m {
                let w = omega[(a, b)];
                if w != 0.0 {
                    out += &ga * self.gamma_upper(b) * C64::new(-0.25 * w, 0.0);
                }
            }
        }
        out
    }
}

/// Clifford model tensored with a twist space `V = V₊ ⊕ V₋`.
#[derive(Clone, Debug)]
pub struct TwistedModel {
    clifford: CliffordModel,
    v_plus: usize,
    v_minus: usize,
    gamma: Vec<CMatrix>,
    pairing: CMatrix,
}

impl TwistedModel {
    pub fn new(clifford: CliffordModel, v_plus: usize, v_minus: usize) -> Result<Self> {
        if v_plus + v_minus == 0 {
            return Err(Error::Parameter("twist space must be non-trivial".into()));
        }
        if clifford.dimension() % 2 == 1 && v_minus != 0 {
            return Err(Error::Parameter(
                "odd dimensions have no chiral splitting of the twist space".into(),
            ));
        }
        let v = v_plus + v_minus;
        let id = CMatrix::identity(v, v);
        let gamma = clifford.gamma.iter().map(|g| g.kronecker(&id)).collect();
        let pairing = clifford.pairing.kronecker(&id);
        Ok(Self {
            clifford,
            v_plus,
            v_minus,
            gamma,
            pairing,
        })
    }

    pub fn clifford(&self) -> &CliffordModel {
        &self.clifford
    }

    pub fn twist_dim(&self) -> usize {
        self.v_plus + self.v_minus
    }

    pub fn split(&self) -> (usize, usize) {
        (self.v_plus, self.v_minus)
    }

    pub fn dim(&self) -> usize {
        self.clifford.spinor_dim() * self.twist_dim()
    }

    /// `γ_a ⊗ 1`.
    pub fn gamma(&self, a: usize) -> &CMatrix {
        &self.gamma[a]
    }

    pub fn pairing(&self) -> &CMatrix {
        &self.pairing
    }

    pub fn pair(&self, psi: &CVector, phi: &CVector) -> C64 {
        psi.dotc(&(&self.pairing * phi))
    }

    /// `1 ⊗ M` for an endomorphism of the twist space.
    pub fn twist(&self, m: &CMatrix) -> CMatrix {
        let s = self.clifford.spinor_dim();
        CMatrix::identity(s, s).kronecker(m)
    }

    /// `M ⊗ 1` for an endomorphism of the spinor space.
    pub fn spinorial(&self, m: &CMatrix) -> CMatrix {
        let v = self.twist_dim();
        m.kronecker(&CMatrix::identity(v, v))
    }

    /// Projector onto the given sector (`Full` gives the identity).
    pub fn sector_projector(&self, chirality: Chirality) -> Result<CMatrix> {
        let n = self.dim();
        if chirality == Chirality::Full {
            return Ok(CMatrix::identity(n, n));
        }
        let (pp, pm) = match (self.clifford.projector(true), self.clifford.projector(false)) {
            (Some(p), Some(q)) => (p, q),
            _ => {
                return Err(Error::Parameter(
                    "chiral spinors need an even dimension".into(),
                ))
            }
        };
        let v = self.twist_dim();
        let mut vp = CMatrix::zeros(v, v);
        let mut vm = CMatrix::zeros(v, v);
        for i in 0..v {
            if i < self.v_plus {
                vp[(i, i)] = C64::new(1.0, 0.0);
            } else {
                vm[(i, i)] = C64::new(1.0, 0.0);
            }
        }
        Ok(match chirality {
            Chirality::Plus => pp.kronecker(&vp) + pm.kronecker(&vm),
            Chirality::Minus => pm.kronecker(&vp) + pp.kronecker(&vm),
            Chirality::Full => unreachable!(),
        })
    }
}

/// A twisted spinor with frame covariant derivatives `derivs[a] = (∇Ψ)(e_a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistedSpinorJet {
    pub value: CVector,
    pub derivs: Vec<CVector>,
    pub chirality: Chirality,
}

impl TwistedSpinorJet {
    pub fn check(&self, model: &TwistedModel) -> Result<()> {
        let n = model.dim();
        let m = model.clifford().dimension();
        if self.value.len() != n || self.derivs.iter().any(|d| d.len() != n) {
            return Err(Error::Shape(format!(
                "spinor jet components must have length {n}"
            )));
        }
        if self.derivs.len() != m {
            return Err(Error::Shape(format!(
                "spinor jet needs {m} frame derivatives, got {}",
                self.derivs.len()
            )));
        }
        if self.chirality != Chirality::Full {
            let q = model.sector_projector(self.chirality.opposite())?;
            let scale = self.value.norm().max(1.0);
            if (&q * &self.value).norm() > 1e-10 * scale {
                return Err(Error::Contract(
                    "spinor has components outside its chirality sector".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `η^{ab} γ_a (∇Ψ)(e_b)`; the result lies in the opposite chirality sector.
pub fn dirac_apply(model: &TwistedModel, jet: &TwistedSpinorJet) -> Result<(CVector, Chirality)> {
    let n = model.dim();
    let m = model.clifford().dimension();
    if jet.value.len() != n || jet.derivs.len() != m || jet.derivs.iter().any(|d| d.len() != n) {
        return Err(Error::Shape(format!(
            "spinor jet does not match a twisted model of dimension {n} in m = {m}"
        )));
    }
    let mut out = CVector::zeros(n);
    for (a, d) in jet.derivs.iter().enumerate() {
        let s = if a == 0 { -1.0 } else { 1.0 };
        out += model.gamma(a) * d * C64::new(s, 0.0);
    }
    Ok((out, jet.chirality.opposite()))
}

fn complex_from_flat(v: &[f64]) -> CVector {
    CVector::from_fn(v.len() / 2, |i, _| C64::new(v[2 * i], v[2 * i + 1]))
}

fn flat_from_complex(v: &CVector) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Frame derivatives `e_a(f)` of a spinor-valued function at `x`.
fn frame_derivatives<F>(
    config: &FieldConfiguration,
    x: &[f64],
    stencil: &Stencil,
    f: F,
) -> Result<(Vec<CVector>, CVector)>
where
    F: Fn(&[f64]) -> Result<CVector>,
{
    let flat = |y: &[f64]| Ok(flat_from_complex(&f(y)?));
    let raw = fd_jet(&flat, x, stencil, 1)?;
    let frame = crate::geometry::Frame::from_metric(&config.metric.metric(x)?)?;
    let e = frame.matrix();
    let m = x.len();
    let n = raw.value.len() / 2;
    let value = complex_from_flat(&raw.value);
    let dcoord: Vec<CVector> = raw.first.iter().map(|d| complex_from_flat(d)).collect();
    let out = (0..m)
        .map(|a| {
            let mut s = CVector::zeros(n);
            for mu in 0..m {
                s += &dcoord[mu] * C64::new(e[(mu, a)], 0.0);
            }
            s
        })
        .collect();
    Ok((out, value))
}

/// Norm of `𝔇²Ψ - (-□Ψ + ¼ Scal Ψ + ½ γ^a γ^b χ(F_ab) Ψ)` at `point`, every
/// derivative taken with `stencil` (nested differences for second order).
pub fn weitzenboeck_residual(
    config: &FieldConfiguration,
    point: &[f64],
    stencil: &Stencil,
) -> Result<f64> {
    let model = &config.theory.twisted;
    let m = point.len();
    if config.spinor.is_none() {
        return Err(Error::InsufficientJet("scene has no spinor field".into()));
    }
    let cov = |x: &[f64]| spinor_covariant_derivative(config, x, stencil);
    let at = cov(point)?;

    // 𝔇²Ψ: covariant derivative of Θ = 𝔇Ψ.
    let theta = |x: &[f64]| -> Result<CVector> {
        let c = cov(x)?;
        Ok(dirac_apply(model, &c.jet)?.0)
    };
    let (dtheta, theta0) = frame_derivatives(config, point, stencil, theta)?;
    let theta_jet = TwistedSpinorJet {
        value: theta0.clone(),
        derivs: (0..m)
            .map(|a| &dtheta[a] + &at.operators[a] * &theta0)
            .collect(),
        chirality: Chirality::Full,
    };
    let (d2, _) = dirac_apply(model, &theta_jet)?;

    // □Ψ = η^{ab} (∇_{e_a} V_b - ω^c_b(e_a) V_c).
    let n = model.dim();
    let mut boxed = CVector::zeros(n);
    for b in 0..m {
        let vb = |x: &[f64]| -> Result<CVector> { Ok(cov(x)?.jet.derivs[b].clone()) };
        let (dvb, vb0) = frame_derivatives(config, point, stencil, vb)?;
        let s = if b == 0 { -1.0 } else { 1.0 };
        let mut term = &dvb[b] + &at.operators[b] * &vb0;
        for c in 0..m {
            // ω^c_b = η^{cc} ω_{cb}
            let w = if c == 0 { -1.0 } else { 1.0 } * at.omega[b][(c, b)];
            term -= &at.jet.derivs[c] * C64::new(w, 0.0);
        }
        boxed += term * C64::new(s, 0.0);
    }

    let curv = curvature_package(config.metric.as_ref(), point, stencil)?;
    let mut rhs = -boxed + &at.jet.value * C64::new(0.25 * curv.scal, 0.0);
    if let Some(f) = field_strength(config, point, stencil)? {
        for a in 0..m {
            for b in 0..m {
                let fab = f.component(a, b);
                if fab.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let chi = model.twist(&config.theory.twist.act(fab));
                let ga = model.spinorial(&model.clifford().gamma_upper(a));
                let gb = model.spinorial(&model.clifford().gamma_upper(b));
                rhs += ga * gb * chi * &at.jet.value * C64::new(0.5, 0.0);
            }
        }
    }
    Ok((d2 - rhs).norm())
}
