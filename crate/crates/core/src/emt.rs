//! Sector energy-momentum tensors, their traces and divergences, and the
//! variational cross-check by direct metric perturbation.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::clifford::{dirac_apply, TwistedModel, TwistedSpinorJet};
use crate::energycond::QuadraticForm;
use crate::error::{Error, Result};
use crate::gauge::jet::{connection_jet, coordinate_field_strength, coordinate_higgs};
use crate::gauge::{
    conformal_coupling, covariant_jet, FieldConfiguration, FieldStrength, GaugeJet, HiggsJet,
    Potential, Theory,
};
use crate::geometry::{covariant_divergence, eta, CurvatureData, Frame};
use crate::numerics::{Region, Stencil};
use crate::{CVector, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Sector {
    #[serde(rename = "YM")]
    YangMills,
    Higgs,
    Dirac,
    #[serde(rename = "cHiggs")]
    ConformalHiggs,
    #[serde(rename = "total")]
    Total,
}

impl Sector {
    pub fn name(self) -> &'static str {
        match self {
            Sector::YangMills => "YM",
            Sector::Higgs => "Higgs",
            Sector::Dirac => "Dirac",
            Sector::ConformalHiggs => "cHiggs",
            Sector::Total => "total",
        }
    }
}

impl std::fmt::Display for Sector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Symmetric frame components `T(e_a, e_b)` with `e_0 = n`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyMomentumTensor {
    pub components: DMatrix<f64>,
    pub sector: Sector,
    /// Set when the formula is only valid where the field equations hold.
    pub on_shell_only: bool,
}

impl EnergyMomentumTensor {
    pub fn new(components: DMatrix<f64>, sector: Sector) -> Self {
        Self {
            components,
            sector,
            on_shell_only: false,
        }
    }

    pub fn dimension(&self) -> usize {
        self.components.nrows()
    }

    /// `η^{ab} T_ab`.
    pub fn trace(&self) -> f64 {
        let t = &self.components;
        (1..t.nrows()).map(|i| t[(i, i)]).sum::<f64>() - t[(0, 0)]
    }

    /// `T(X, X)` for frame components `x`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (&self.components * x).dot(x)
    }

    pub fn symmetry_defect(&self) -> f64 {
        (&self.components - self.components.transpose()).amax()
    }

    /// `q(ξ) = T(n + ξ, n + ξ)`.
    pub fn quadratic_form(&self) -> QuadraticForm {
        let t = &self.components;
        let k = t.nrows() - 1;
        QuadraticForm::new(
            t[(0, 0)],
            t.view((1, 0), (k, 1)).column(0).into_owned(),
            t.view((1, 1), (k, k)).into_owned(),
        )
    }

    /// Components in the frame rotated by the spatial orthogonal matrix `r`.
    pub fn rotated(&self, r: &DMatrix<f64>) -> Result<Self> {
        let m = self.dimension();
        if r.nrows() != m - 1 || r.ncols() != m - 1 {
            return Err(Error::Shape("rotation must be (m-1)x(m-1)".into()));
        }
        let mut full = DMatrix::identity(m, m);
        full.view_mut((1, 1), (m - 1, m - 1)).copy_from(r);
        Ok(Self {
            components: full.transpose() * &self.components * full,
            sector: self.sector,
            on_shell_only: self.on_shell_only,
        })
    }

    /// Sum of sector tensors, tagged total.
    pub fn sum(parts: &[EnergyMomentumTensor]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Parameter("no sector tensors to add".into()))?;
        let mut c = DMatrix::zeros(first.dimension(), first.dimension());
        for p in parts {
            if p.dimension() != first.dimension() {
                return Err(Error::Shape("sector tensors differ in dimension".into()));
            }
            c += &p.components;
        }
        Ok(Self {
            components: c,
            sector: Sector::Total,
            on_shell_only: parts.iter().any(|p| p.on_shell_only),
        })
    }
}

fn eta_sign(a: usize) -> f64 {
    if a == 0 {
        -1.0
    } else {
        1.0
    }
}

/// `T_ab = η^{cd} ⟨F_ac, F_bd⟩ - ½ |F|² η_ab`.
pub fn emt_yang_mills(f: &FieldStrength) -> EnergyMomentumTensor {
    let m = f.dimension();
    let norm = f.norm_sq();
    let mut t = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let mut s = 0.0;
            for c in 0..m {
                s += eta_sign(c) * f.component(a, c).dot(f.component(b, c));
            }
            if a == b {
                s -= 0.5 * norm * eta_sign(a);
            }
            t[(a, b)] = s;
            t[(b, a)] = s;
        }
    }
    EnergyMomentumTensor::new(t, Sector::YangMills)
}

fn re_inner(a: &CVector, b: &CVector) -> f64 {
    a.dotc(b).re
}

/// `T_ab = Re⟨∇_a Φ, ∇_b Φ⟩ - ½ (|∇Φ|² + U) η_ab` for a metric-independent
/// potential.
pub fn emt_higgs(jet: &HiggsJet, potential: &Potential) -> Result<EnergyMomentumTensor> {
    if potential.is_conformal() {
        return Err(Error::WrongSector(
            "the conformal potential needs the conformal Higgs tensor".into(),
        ));
    }
    let m = jet.first.len();
    let (u, _) = potential.evaluate(&jet.value, None, m)?;
    let grad = jet.gradient_norm_sq();
    let mut t = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let mut s = re_inner(&jet.first[a], &jet.first[b]);
            if a == b {
                s -= 0.5 * (grad + u) * eta_sign(a);
            }
            t[(a, b)] = s;
            t[(b, a)] = s;
        }
    }
    Ok(EnergyMomentumTensor::new(t, Sector::Higgs))
}

/// `T_ab = ¼ Re⟨Ψ, i e_a·(∇Ψ)_b + i e_b·(∇Ψ)_a⟩`.
pub fn emt_dirac(jet: &TwistedSpinorJet, model: &TwistedModel) -> Result<EnergyMomentumTensor> {
    jet.check(model)?;
    let m = model.clifford().dimension();
    let i = C64::new(0.0, 1.0);
    // w[a][b] = Re⟨Ψ, i γ_a (∇Ψ)_b⟩
    let mut w = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            let v = model.gamma(a) * &jet.derivs[b] * i;
            w[(a, b)] = model.pair(&jet.value, &v).re;
        }
    }
    let t = (&w + w.transpose()) * 0.25;
    Ok(EnergyMomentumTensor::new(t, Sector::Dirac))
}

/// The conformal Higgs tensor in its on-shell form; `yukawa` is
/// `⟨Ψ, i Y_Φ Ψ⟩`.
pub fn emt_conformal_higgs(
    jet: &HiggsJet,
    curvature: &CurvatureData,
    lambda: f64,
    yukawa: f64,
) -> Result<EnergyMomentumTensor> {
    let m = jet.first.len();
    let hess = jet.symmetrized_second()?;
    let c = conformal_coupling(m);
    let md = m as f64;
    let phi2 = jet.value.norm_squared();
    let grad = jet.gradient_norm_sq();
    let scalar = -grad - c * curvature.scal * phi2
        + 0.5 * (md - 3.0) * lambda * phi2 * phi2
        + 0.5 * (md - 2.0) * yukawa;
    let pre = 1.0 / (2.0 * (md - 1.0));
    let mut t = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let mut s = (2.0 - md) * re_inner(&jet.value, &hess[a][b])
                + md * re_inner(&jet.first[a], &jet.first[b])
                + 0.5 * (md - 2.0) * phi2 * curvature.ricci[(a, b)];
            if a == b {
                s += scalar * eta_sign(a);
            }
            t[(a, b)] = pre * s;
            t[(b, a)] = pre * s;
        }
    }
    Ok(EnergyMomentumTensor {
        components: t,
        sector: Sector::ConformalHiggs,
        on_shell_only: true,
    })
}

/// The conformal Higgs tensor as it comes out of the metric variation,
/// valid off shell:
/// `Re∇Φ⊗∇Φ - ½(|∇Φ|² + c Scal |Φ|² + λ/2 |Φ|⁴) g + c (□|Φ|² g - ∇²|Φ|² + |Φ|² Ric)`.
pub fn emt_conformal_higgs_variational(
    jet: &HiggsJet,
    curvature: &CurvatureData,
    lambda: f64,
) -> Result<EnergyMomentumTensor> {
    let m = jet.first.len();
    let hess = jet.symmetrized_second()?;
    let c = conformal_coupling(m);
    let phi2 = jet.value.norm_squared();
    let grad = jet.gradient_norm_sq();
    // ∇²|Φ|² = 2 Re∇Φ⊗∇Φ + 2 Re⟨Φ, ∇²Φ⟩
    let h2 = DMatrix::from_fn(m, m, |a, b| {
        2.0 * re_inner(&jet.first[a], &jet.first[b]) + 2.0 * re_inner(&jet.value, &hess[a][b])
    });
    let box2: f64 = (0..m).map(|a| eta_sign(a) * h2[(a, a)]).sum();
    let mut t = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            let mut s = re_inner(&jet.first[a], &jet.first[b])
                + c * (phi2 * curvature.ricci[(a, b)] - h2[(a, b)]);
            if a == b {
                s += eta_sign(a)
                    * (-0.5 * (grad + c * curvature.scal * phi2 + 0.5 * lambda * phi2 * phi2)
                        + c * box2);
            }
            t[(a, b)] = s;
        }
    }
    let t = (&t + t.transpose()) * 0.5;
    Ok(EnergyMomentumTensor::new(t, Sector::ConformalHiggs))
}

fn lambda_of(potential: &Potential) -> f64 {
    match potential {
        Potential::Conformal { lambda } => *lambda,
        _ => 0.0,
    }
}

/// `⟨Ψ, i Y_Φ Ψ⟩` at the jet, zero without a spinor.
pub fn yukawa_term(jet: &GaugeJet, theory: &Theory) -> Result<f64> {
    match &jet.spinor {
        Some(s) => {
            let phi = jet
                .higgs
                .as_ref()
                .map(|h| h.value.clone())
                .unwrap_or_else(|| CVector::zeros(theory.higgs.dim()));
            theory.yukawa.pairing(&theory.twisted, &phi, &s.value)
        }
        None => Ok(0.0),
    }
}

/// Tensors of every sector present in the jet, in the order YM, Higgs or
/// cHiggs, Dirac. The YM sector is included whenever the jet comes from a
/// configuration with a connection.
pub fn sector_tensors(
    jet: &GaugeJet,
    theory: &Theory,
    with_connection: bool,
) -> Result<Vec<EnergyMomentumTensor>> {
    let mut out = Vec::new();
    if with_connection {
        out.push(emt_yang_mills(&jet.field_strength));
    }
    if let Some(h) = &jet.higgs {
        if theory.potential.is_conformal() {
            let curv = jet.curvature.as_ref().ok_or_else(|| {
                Error::InsufficientJet("the conformal Higgs tensor needs curvature".into())
            })?;
            let y = yukawa_term(jet, theory)?;
            out.push(emt_conformal_higgs(
                h,
                curv,
                lambda_of(&theory.potential),
                y,
            )?);
        } else {
            out.push(emt_higgs(h, &theory.potential)?);
        }
    }
    if let Some(s) = &jet.spinor {
        out.push(emt_dirac(s, &theory.twisted)?);
    }
    Ok(out)
}

/// Jet depth needed to evaluate every sector tensor of `config`.
pub fn required_depth(config: &FieldConfiguration) -> usize {
    if config.higgs.is_some() && config.theory.potential.is_conformal() {
        2
    } else {
        1
    }
}

/// Sector tensors at `point`, followed by their total when more than one
/// sector is present.
pub fn evaluate_tensors(
    config: &FieldConfiguration,
    point: &[f64],
    stencil: &Stencil,
) -> Result<Vec<EnergyMomentumTensor>> {
    let jet = covariant_jet(config, point, stencil, required_depth(config))?;
    let mut out = sector_tensors(&jet, &config.theory, config.connection.is_some())?;
    if out.len() > 1 {
        let total = EnergyMomentumTensor::sum(&out)?;
        out.push(total);
    }
    Ok(out)
}

/// Computed trace against its closed-form value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceCheck {
    pub sector: Sector,
    pub trace: f64,
    pub expected: f64,
    pub residual: f64,
}

/// Compares `Tr_g T` with the closed-form trace of its sector:
/// YM `-½(m-4)|F|²`, Higgs `-½(m-2)|∇Φ|² - ½ m U`, Dirac `½ Re⟨Ψ, i𝔇Ψ⟩`,
/// cHiggs `¼(m-4)λ|Φ|⁴ + ¼(m-2)y` plus the multiple `(2-m)/(2(m-1))` of the
/// Higgs equation defect `Re⟨Φ, □Φ⟩ - c Scal |Φ|² - λ|Φ|⁴ - ½y`.
pub fn trace_check(t: &EnergyMomentumTensor, jet: &GaugeJet, theory: &Theory) -> Result<TraceCheck> {
    let m = t.dimension();
    let md = m as f64;
    let missing = |what: &str| Error::InsufficientJet(format!("trace check needs {what}"));
    let expected = match t.sector {
        Sector::YangMills => -0.5 * (md - 4.0) * jet.field_strength.norm_sq(),
        Sector::Higgs => {
            let h = jet.higgs.as_ref().ok_or_else(|| missing("a Higgs field"))?;
            let (u, _) = theory.potential.evaluate(&h.value, None, m)?;
            -0.5 * (md - 2.0) * h.gradient_norm_sq() - 0.5 * md * u
        }
        Sector::Dirac => {
            let s = jet.spinor.as_ref().ok_or_else(|| missing("a spinor"))?;
            let (d, _) = dirac_apply(&theory.twisted, s)?;
            0.5 * theory.twisted.pair(&s.value, &(d * C64::new(0.0, 1.0))).re
        }
        Sector::ConformalHiggs => {
            let h = jet.higgs.as_ref().ok_or_else(|| missing("a Higgs field"))?;
            let curv = jet.curvature.as_ref().ok_or_else(|| missing("curvature"))?;
            let lambda = lambda_of(&theory.potential);
            let y = yukawa_term(jet, theory)?;
            let phi2 = h.value.norm_squared();
            let defect = re_inner(&h.value, &h.box_op()?)
                - conformal_coupling(m) * curv.scal * phi2
                - lambda * phi2 * phi2
                - 0.5 * y;
            0.25 * (md - 4.0) * lambda * phi2 * phi2
                + 0.25 * (md - 2.0) * y
                + (2.0 - md) / (2.0 * (md - 1.0)) * defect
        }
        Sector::Total => {
            return Err(Error::Parameter(
                "trace check applies to a single sector".into(),
            ))
        }
    };
    let trace = t.trace();
    Ok(TraceCheck {
        sector: t.sector,
        trace,
        expected,
        residual: (trace - expected).abs(),
    })
}

/// `∇*T = -∇^a T_ab` of one sector (or the total) in frame components at
/// `point`. `outer` differentiates `T`, `inner` builds the jets.
pub fn tensor_divergence(
    config: &FieldConfiguration,
    point: &[f64],
    outer: &Stencil,
    inner: &Stencil,
    sector: Sector,
) -> Result<DVector<f64>> {
    let div = covariant_divergence(config.metric.as_ref(), point, outer, inner, |x| {
        let ts = evaluate_tensors(config, x, inner)?;
        let t = pick_sector(&ts, sector)?;
        let frame = Frame::from_metric(&config.metric.metric(x)?)?;
        Ok(frame.tensor_to_coordinates(&t.components))
    })?;
    Ok(-div)
}

fn pick_sector(ts: &[EnergyMomentumTensor], sector: Sector) -> Result<&EnergyMomentumTensor> {
    if sector == Sector::Total && ts.len() == 1 {
        return Ok(&ts[0]);
    }
    ts.iter()
        .find(|t| t.sector == sector)
        .ok_or_else(|| Error::Parameter(format!("scene has no {sector} sector")))
}

/// Residuals of the divergence identities at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceResiduals {
    /// `∇*T^YM + η^{ab}⟨(d*F)_a, F_b·⟩`, any fields.
    pub yang_mills: Option<DVector<f64>>,
    /// `∇*T^Higgs + Re⟨□Φ - ½ grad U, ∇Φ⟩ + η^{ab} Re⟨∇_a Φ, ρ(F_b·)Φ⟩`, any
    /// fields with a metric-independent potential.
    pub higgs: Option<DVector<f64>>,
    /// `∇*T` of the total, for exact solutions only.
    pub total: Option<DVector<f64>>,
}

impl DivergenceResiduals {
    pub fn norms(&self) -> (Option<f64>, Option<f64>, Option<f64>) {
        (
            self.yang_mills.as_ref().map(|v| v.norm()),
            self.higgs.as_ref().map(|v| v.norm()),
            self.total.as_ref().map(|v| v.norm()),
        )
    }
}

/// Runs the off-shell YM and Higgs identities for the sectors present and,
/// with `on_shell`, the conservation of the total tensor. The latter requires
/// a configuration marked as a solution.
pub fn divergence_identity_check(
    config: &FieldConfiguration,
    point: &[f64],
    outer: &Stencil,
    inner: &Stencil,
    on_shell: bool,
) -> Result<DivergenceResiduals> {
    if on_shell && !config.solution {
        return Err(Error::Contract(
            "conservation of the total tensor is only checked on exact solutions".into(),
        ));
    }
    let theory = &config.theory;
    let m = config.dimension();
    let mut out = DivergenceResiduals {
        yang_mills: None,
        higgs: None,
        total: None,
    };
    let off_shell_ym = config.connection.is_some();
    let off_shell_higgs = config.higgs.is_some() && !theory.potential.is_conformal();
    if off_shell_ym || off_shell_higgs {
        let jet = covariant_jet(config, point, inner, 2)?;
        let f = &jet.field_strength;
        if off_shell_ym {
            let dstar = jet.codifferential.as_ref().expect("depth-2 jet");
            let div = tensor_divergence(config, point, outer, inner, Sector::YangMills)?;
            let rhs = DVector::from_fn(m, |nu, _| {
                -(0..m)
                    .map(|l| eta_sign(l) * dstar[l].dot(f.component(l, nu)))
                    .sum::<f64>()
            });
            out.yang_mills = Some(div - rhs);
        }
        if off_shell_higgs {
            let h = jet.higgs.as_ref().expect("Higgs jet");
            let (_, grad) = theory.potential.evaluate(&h.value, None, m)?;
            let source = h.box_op()? - grad * C64::new(0.5, 0.0);
            let div = tensor_divergence(config, point, outer, inner, Sector::Higgs)?;
            let rhs = DVector::from_fn(m, |nu, _| {
                let mut s = -re_inner(&source, &h.first[nu]);
                for mu in 0..m {
                    let rf = theory.higgs.act(f.component(mu, nu)) * &h.value;
                    s -= eta_sign(mu) * re_inner(&h.first[mu], &rf);
                }
                s
            });
            out.higgs = Some(div - rhs);
        }
    }
    if on_shell {
        out.total = Some(tensor_divergence(config, point, outer, inner, Sector::Total)?);
    }
    Ok(out)
}

/// Outcome of the variational cross-check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    /// Centered difference in `t` of `∫ L dvol`.
    pub lhs: f64,
    /// `∫ h^{ab} T_ab dvol`.
    pub rhs: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

/// A metric perturbation `h_μν(x)` in coordinates.
pub type Perturbation = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// Smooth bump `Π_μ (1 - s_μ²)³`, `s_μ = (x_μ - c_μ)/w_μ`, vanishing with
/// its first two derivatives on the boundary of the region.
pub fn region_bump(region: &Region, x: &[f64]) -> f64 {
    let mut v = 1.0;
    for ((xi, c), w) in x.iter().zip(&region.center).zip(&region.half_widths) {
        let s = (xi - c) / w;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        v *= (1.0 - s * s).powi(3);
    }
    v
}

/// Random symmetric coefficient matrix times the region bump.
pub fn random_bump_perturbation(region: &Region, seed: u64) -> Box<Perturbation> {
    let m = region.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::<f64>::from_fn(m, m, |_, _| StandardNormal.sample(&mut rng));
    let coeffs = (&raw + raw.transpose()) * 0.5;
    let region = region.clone();
    Box::new(move |x: &[f64]| &coeffs * region_bump(&region, x))
}

struct OracleSample {
    weight: f64,
    g: DMatrix<f64>,
    h: DMatrix<f64>,
    f: Option<FieldStrength>,
    dphi: Option<Vec<CVector>>,
    u: f64,
    t: DMatrix<f64>,
}

fn lagrangian(s: &OracleSample, g: &DMatrix<f64>) -> Result<f64> {
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidMetric("degenerate perturbed metric".into()))?;
    let m = g.nrows();
    let mut l = -s.u;
    if let Some(f) = &s.f {
        // |F|² = ½ g^{μα} g^{νβ} ⟨F_μν, F_αβ⟩
        let mut n2 = 0.0;
        for mu in 0..m {
            for nu in 0..m {
                for a in 0..m {
                    let gma = ginv[(mu, a)];
                    if gma == 0.0 {
                        continue;
                    }
                    for b in 0..m {
                        let w = gma * ginv[(nu, b)];
                        if w != 0.0 {
                            n2 += w * f.component(mu, nu).dot(f.component(a, b));
                        }
                    }
                }
            }
        }
        l -= 0.5 * n2;
    }
    if let Some(d) = &s.dphi {
        let mut n2 = 0.0;
        for mu in 0..m {
            for nu in 0..m {
                n2 += ginv[(mu, nu)] * re_inner(&d[mu], &d[nu]);
            }
        }
        l -= n2;
    }
    Ok(l * g.determinant().abs().sqrt())
}

/// Compares `d/dt ∫ L_{g+th} dvol_{g+th}` at `t = 0` with `∫ h^{ab} T_ab dvol`
/// over the grid of `region` (trapezoid rule). Only the Yang-Mills sector and
/// Higgs fields with a metric-independent potential are supported.
pub fn variational_oracle(
    config: &FieldConfiguration,
    region: &Region,
    stencil: &Stencil,
    perturbation: &Perturbation,
    t_step: f64,
) -> Result<OracleResult> {
    if config.spinor.is_some() {
        return Err(Error::OutOfScope(
            "the variational check does not cover the Dirac sector".into(),
        ));
    }
    if config.theory.potential.is_conformal() {
        return Err(Error::OutOfScope(
            "the variational check does not cover the conformal potential".into(),
        ));
    }
    if region.dimension() != config.dimension() {
        return Err(Error::Shape("region dimension differs from the scene".into()));
    }
    if region.is_empty() {
        return Err(Error::Parameter("empty region".into()));
    }
    if !(t_step > 0.0) {
        return Err(Error::Parameter("t step must be positive".into()));
    }
    let theory = &config.theory;
    let m = config.dimension();
    let points = region.points();
    let weights = region.trapezoid_weights();
    let samples: Vec<OracleSample> = points
        .par_iter()
        .zip(weights.par_iter())
        .map(|(x, &weight)| -> Result<OracleSample> {
            let g = config.metric.metric(x)?;
            let cj = connection_jet(config, x, stencil, 1)?;
            let f = config
                .connection
                .is_some()
                .then(|| coordinate_field_strength(theory, &cj));
            let higgs = coordinate_higgs(config, x, stencil, 1, &cj, None)?;
            let u = match &higgs {
                Some(h) => theory.potential.evaluate(&h.value, None, m)?.0,
                None => 0.0,
            };
            let jet = covariant_jet(config, x, stencil, 1)?;
            let ts = sector_tensors(&jet, theory, config.connection.is_some())?;
            let frame = Frame::from_metric(&g)?;
            let mut t = DMatrix::zeros(m, m);
            for s in &ts {
                t += frame.tensor_to_coordinates(&s.components);
            }
            Ok(OracleSample {
                weight,
                h: perturbation(x),
                g,
                f,
                dphi: higgs.map(|h| h.d),
                u,
                t,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let contributions: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|s| -> Result<(f64, f64)> {
            if s.weight == 0.0 || s.h.amax() == 0.0 {
                return Ok((0.0, 0.0));
            }
            let lp = lagrangian(s, &(&s.g + &s.h * t_step))?;
            let lm = lagrangian(s, &(&s.g - &s.h * t_step))?;
            let ginv = s
                .g
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::InvalidMetric("degenerate metric".into()))?;
            let hup = &ginv * &s.h * &ginv;
            let contraction = hup.component_mul(&s.t).sum();
            let vol = s.g.determinant().abs().sqrt();
            Ok((
                s.weight * (lp - lm) / (2.0 * t_step),
                s.weight * contraction * vol,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for (l, r) in contributions {
        lhs += l;
        rhs += r;
    }
    let abs_error = (lhs - rhs).abs();
    let scale = lhs.abs().max(rhs.abs());
    let rel_error = if scale > 0.0 { abs_error / scale } else { abs_error };
    Ok(OracleResult {
        lhs,
        rhs,
        abs_error,
        rel_error,
    })
}

/// `η` as an energy-momentum tensor; handy for constant-potential checks.
pub fn metric_tensor(m: usize, scale: f64, sector: Sector) -> EnergyMomentumTensor {
    EnergyMomentumTensor::new(eta(m) * scale, sector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_clifford_model;

    fn random_f(m: usize, n: usize, seed: u64) -> FieldStrength {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = FieldStrength::zeros(m, n);
        for a in 0..m {
            for b in (a + 1)..m {
                f.set(a, b, DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng)));
            }
        }
        f
    }

    #[test]
    fn electric_field_energy_density() {
        let mut f = FieldStrength::zeros(4, 1);
        f.set(0, 1, DVector::from_element(1, 2.0));
        let t = emt_yang_mills(&f);
        assert!((t.components[(0, 0)] - 2.0).abs() < 1e-15);
        assert!(t.trace().abs() < 1e-15);
        assert_eq!(emt_yang_mills(&FieldStrength::zeros(4, 1)).components.amax(), 0.0);
    }

    #[test]
    fn yang_mills_trace_in_six_dimensions() {
        let f = random_f(6, 3, 7);
        let t = emt_yang_mills(&f);
        assert!((t.trace() + f.norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn constant_higgs_is_a_cosmological_constant() {
        let jet = HiggsJet {
            value: CVector::from_vec(vec![C64::new(0.3, 0.0), C64::new(0.0, 0.0)]),
            first: vec![CVector::zeros(2); 4],
            second: None,
        };
        let pot = Potential::mexican_hat(2.0, 2.0).unwrap();
        let (u, _) = pot.evaluate(&jet.value, None, 4).unwrap();
        let t = emt_higgs(&jet, &pot).unwrap();
        assert!((t.components.clone() + eta(4) * (0.5 * u)).amax() < 1e-15);
        assert!((t.trace() + 2.0 * u).abs() < 1e-14);
        let conf = Potential::conformal(0.0).unwrap();
        assert!(matches!(emt_higgs(&jet, &conf), Err(Error::WrongSector(_))));
    }

    #[test]
    fn dirac_tensor_is_symmetric_and_vanishes_for_constants() {
        let model = TwistedModel::new(build_clifford_model(4).unwrap(), 1, 1).unwrap();
        let jet = TwistedSpinorJet {
            value: CVector::from_fn(8, |i, _| C64::new(i as f64, 0.5)),
            derivs: vec![CVector::zeros(8); 4],
            chirality: crate::clifford::Chirality::Full,
        };
        let t = emt_dirac(&jet, &model).unwrap();
        assert_eq!(t.components.amax(), 0.0);
    }

    #[test]
    fn rotation_preserves_trace() {
        let t = emt_yang_mills(&random_f(4, 1, 3));
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let r = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        let tr = t.rotated(&r).unwrap();
        assert!((tr.trace() - t.trace()).abs() < 1e-13);
        assert!((tr.components[(0, 0)] - t.components[(0, 0)]).abs() < 1e-13);
    }
}
