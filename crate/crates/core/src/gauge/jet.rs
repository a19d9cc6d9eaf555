use nalgebra::{DMatrix, DVector};

use super::{FieldConfiguration, Theory};
use crate::clifford::{dirac_apply, TwistedSpinorJet};
use crate::error::{Error, Result};
use crate::geometry::{
    connection_forms, frame_jet, metric_jet, Christoffel, CurvatureData, Frame, MetricJet,
};
use crate::numerics::{fd_jet, RawJet, Stencil};
use crate::{CMatrix, CVector, C64};

/// Antisymmetric `F_ab` with values in Lie algebra coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldStrength {
    m: usize,
    n: usize,
    comps: Vec<DVector<f64>>,
}

impl FieldStrength {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            comps: vec![DVector::zeros(n); m * m],
        }
    }

    pub fn dimension(&self) -> usize {
        self.m
    }

    pub fn algebra_dim(&self) -> usize {
        self.n
    }

    pub fn component(&self, a: usize, b: usize) -> &DVector<f64> {
        &self.comps[a * self.m + b]
    }

    /// Sets `F_ab = v` and `F_ba = -v`.
    pub fn set(&mut self, a: usize, b: usize, v: DVector<f64>) {
        if a == b {
            return;
        }
        self.comps[b * self.m + a] = -&v;
        self.comps[a * self.m + b] = v;
    }

    /// `|F|² = ½ η^{ac} η^{bd} ⟨F_ab, F_cd⟩`.
    pub fn norm_sq(&self) -> f64 {
        let mut s = 0.0;
        for a in 0..self.m {
            for b in (a + 1)..self.m {
                let sign = if a == 0 { -1.0 } else { 1.0 };
                s += sign * self.component(a, b).norm_squared();
            }
        }
        s
    }

    /// `F'_ab = Σ e[(μ, a)] e[(ν, b)] F_μν`; converts coordinate components to
    /// frame components when `e` holds the frame vectors.
    pub fn transform(&self, e: &DMatrix<f64>) -> Self {
        let m = self.m;
        let mut out = Self::zeros(m, self.n);
        for a in 0..m {
            for b in (a + 1)..m {
                let mut v = DVector::zeros(self.n);
                for mu in 0..m {
                    for nu in 0..m {
                        let w = e[(mu, a)] * e[(nu, b)];
                        if w != 0.0 && mu != nu {
                            v += self.component(mu, nu) * w;
                        }
                    }
                }
                out.set(a, b, v);
            }
        }
        out
    }
}

/// Electric and magnetic parts `E_i = F(n, e_i)`, `B_ij = F(e_i, e_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElectricMagnetic {
    pub electric: Vec<DVector<f64>>,
    /// Full antisymmetric `(m-1) x (m-1)` array.
    pub magnetic: Vec<Vec<DVector<f64>>>,
}

impl ElectricMagnetic {
    pub fn electric_sq(&self) -> f64 {
        self.electric.iter().map(|e| e.norm_squared()).sum()
    }

    /// `½ Σ_ij |B_ij|²`.
    pub fn magnetic_sq(&self) -> f64 {
        let mut s = 0.0;
        for (i, row) in self.magnetic.iter().enumerate() {
            for b in row.iter().skip(i + 1) {
                s += b.norm_squared();
            }
        }
        s
    }

    /// `F = -n♭ ∧ E + B` in frame components.
    pub fn reassemble(&self) -> FieldStrength {
        let k = self.electric.len();
        let n = self.electric.first().map(|e| e.len()).unwrap_or(0);
        let mut f = FieldStrength::zeros(k + 1, n);
        for i in 0..k {
            f.set(0, i + 1, self.electric[i].clone());
            for j in (i + 1)..k {
                f.set(i + 1, j + 1, self.magnetic[i][j].clone());
            }
        }
        f
    }
}

/// Splits a frame field strength relative to `e_0`, which must be the unit
/// normal of the slices of `g`.
pub fn eb_split(f: &FieldStrength, frame: &Frame, g: &DMatrix<f64>) -> Result<ElectricMagnetic> {
    let m = f.dimension();
    if frame.dimension() != m || g.nrows() != m {
        return Err(Error::Shape("field strength, frame and metric sizes differ".into()));
    }
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidMetric("degenerate metric".into()))?;
    let s = (-ginv[(0, 0)]).sqrt();
    let normal = DVector::from_fn(m, |c, _| -ginv[(c, 0)] / s);
    if !s.is_finite() || (frame.vector(0) - normal).amax() > 1e-9 {
        return Err(Error::Contract("frame vector e_0 is not the unit normal".into()));
    }
    let electric = (1..m).map(|i| f.component(0, i).clone()).collect();
    let magnetic = (1..m)
        .map(|i| (1..m).map(|j| f.component(i, j).clone()).collect())
        .collect();
    Ok(ElectricMagnetic {
        electric,
        magnetic,
    })
}

/// Higgs value with frame covariant derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct HiggsJet {
    pub value: CVector,
    /// `first[a] = (∇Φ)(e_a)`
    pub first: Vec<CVector>,
    /// `second[a][b] = (∇²Φ)(e_a, e_b)`
    pub second: Option<Vec<Vec<CVector>>>,
}

impl HiggsJet {
    /// `η^{ab} Re⟨∇_a Φ, ∇_b Φ⟩`.
    pub fn gradient_norm_sq(&self) -> f64 {
        self.first
            .iter()
            .enumerate()
            .map(|(a, d)| if a == 0 { -d.norm_squared() } else { d.norm_squared() })
            .sum()
    }

    /// `□Φ = η^{ab} (∇²Φ)_ab`.
    pub fn box_op(&self) -> Result<CVector> {
        let s = self
            .second
            .as_ref()
            .ok_or_else(|| Error::InsufficientJet("second derivatives of the Higgs field".into()))?;
        let mut out = CVector::zeros(self.value.len());
        for (a, row) in s.iter().enumerate() {
            if a == 0 {
                out -= &row[a];
            } else {
                out += &row[a];
            }
        }
        Ok(out)
    }

    /// Symmetric part of `∇²Φ`.
    pub fn symmetrized_second(&self) -> Result<Vec<Vec<CVector>>> {
        let s = self
            .second
            .as_ref()
            .ok_or_else(|| Error::InsufficientJet("second derivatives of the Higgs field".into()))?;
        let m = s.len();
        Ok((0..m)
            .map(|a| {
                (0..m)
                    .map(|b| (&s[a][b] + &s[b][a]) * C64::new(0.5, 0.0))
                    .collect()
            })
            .collect())
    }

    /// Re-expresses the jet in the frame `e'_a = Σ_b r[(b, a)] e_b`.
    pub fn transform(&self, r: &DMatrix<f64>) -> Self {
        let m = self.first.len();
        let n = self.value.len();
        let first = (0..m)
            .map(|a| {
                let mut v = CVector::zeros(n);
                for b in 0..m {
                    v += &self.first[b] * C64::new(r[(b, a)], 0.0);
                }
                v
            })
            .collect();
        let second = self.second.as_ref().map(|s| {
            (0..m)
                .map(|a| {
                    (0..m)
                        .map(|b| {
                            let mut v = CVector::zeros(n);
                            for c in 0..m {
                                for d in 0..m {
                                    let w = r[(c, a)] * r[(d, b)];
                                    if w != 0.0 {
                                        v += &s[c][d] * C64::new(w, 0.0);
                                    }
                                }
                            }
                            v
                        })
                        .collect()
                })
                .collect()
        });
        Self {
            value: self.value.clone(),
            first,
            second,
        }
    }
}

/// All pointwise field data in the frame of the point.
#[derive(Clone, Debug)]
pub struct GaugeJet {
    pub point: Vec<f64>,
    pub metric: DMatrix<f64>,
    pub frame: Frame,
    pub christoffel: Christoffel,
    pub curvature: Option<CurvatureData>,
    /// `A(e_a)` in Lie algebra coordinates.
    pub connection: Vec<DVector<f64>>,
    pub field_strength: FieldStrength,
    /// `(d*F)(e_b)`, depth 2 only.
    pub codifferential: Option<Vec<DVector<f64>>>,
    pub higgs: Option<HiggsJet>,
    pub spinor: Option<TwistedSpinorJet>,
}

pub(crate) fn complex_from_flat(v: &[f64]) -> CVector {
    CVector::from_fn(v.len() / 2, |i, _| C64::new(v[2 * i], v[2 * i + 1]))
}

fn decode_connection(v: &[f64], m: usize, n: usize) -> Result<Vec<DVector<f64>>> {
    if v.len() != m * n {
        return Err(Error::Shape(format!(
            "connection has {} components, expected {}",
            v.len(),
            m * n
        )));
    }
    Ok((0..m)
        .map(|mu| DVector::from_column_slice(&v[mu * n..(mu + 1) * n]))
        .collect())
}

/// Coordinate connection data: `a[μ]`, `da[ν][μ] = ∂_ν A_μ`, and optionally
/// `dda[λ][ν][μ] = ∂_λ ∂_ν A_μ`.
pub(crate) struct ConnectionJet {
    pub a: Vec<DVector<f64>>,
    pub da: Vec<Vec<DVector<f64>>>,
    pub dda: Option<Vec<Vec<Vec<DVector<f64>>>>>,
}

pub(crate) fn connection_jet(
    config: &FieldConfiguration,
    point: &[f64],
    stencil: &Stencil,
    depth: usize,
) -> Result<ConnectionJet> {
    let m = config.dimension();
    let n = config.theory.algebra.dim();
    let Some(f) = &config.connection else {
        let z = DVector::zeros(n);
        return Ok(ConnectionJet {
            a: vec![z.clone(); m],
            da: vec![vec![z.clone(); m]; m],
            dda: (depth == 2).then(|| vec![vec![vec![z.clone(); m]; m]; m]),
        });
    };
    let raw: RawJet = fd_jet(f.as_ref(), point, stencil, depth)?;
    let a = decode_connection(&raw.value, m, n)?;
    let da = raw
        .first
        .iter()
        .map(|d| decode_connection(d, m, n))
        .collect::<Result<Vec<_>>>()?;
    let dda = match raw.second {
        Some(s) => Some(
            s.iter()
                .map(|row| row.iter().map(|d| decode_connection(d, m, n)).collect())
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    Ok(ConnectionJet { a, da, dda })
}

/// Coordinate field strength `F_μν = ∂_μ A_ν - ∂_ν A_μ + [A_μ, A_ν]`.
pub(crate) fn coordinate_field_strength(theory: &Theory, cj: &ConnectionJet) -> FieldStrength {
    let m = cj.a.len();
    let alg = &theory.algebra;
    let mut f = FieldStrength::zeros(m, alg.dim());
    for mu in 0..m {
        for nu in (mu + 1)..m {
            let v = &cj.da[mu][nu] - &cj.da[nu][mu] + alg.bracket(&cj.a[mu], &cj.a[nu]);
            f.set(mu, nu, v);
        }
    }
    f
}

/// Coordinate Higgs data: value, `D_μ Φ` and `∇_μ D_ν Φ`.
pub(crate) struct CoordinateHiggs {
    pub value: CVector,
    pub d: Vec<CVector>,
    pub dd: Option<Vec<Vec<CVector>>>,
}

pub(crate) fn coordinate_higgs(
    config: &FieldConfiguration,
    point: &[f64],
    stencil: &Stencil,
    depth: usize,
    cj: &ConnectionJet,
    gamma: Option<&Christoffel>,
) -> Result<Option<CoordinateHiggs>> {
    let Some(f) = &config.higgs else {
        return Ok(None);
    };
    let theory = &config.theory;
    let w = theory.higgs.dim();
    let m = config.dimension();
    let raw = fd_jet(f.as_ref(), point, stencil, depth)?;
    if raw.value.len() != 2 * w {
        return Err(Error::Shape(format!(
            "Higgs field has {} real components, expected {}",
            raw.value.len(),
            2 * w
        )));
    }
    let value = complex_from_flat(&raw.value);
    let dphi: Vec<CVector> = raw.first.iter().map(|v| complex_from_flat(v)).collect();
    let rho_a: Vec<CMatrix> = cj.a.iter().map(|a| theory.higgs.act(a)).collect();
    let d: Vec<CVector> = (0..m).map(|mu| &dphi[mu] + &rho_a[mu] * &value).collect();
    let dd = match (&raw.second, gamma) {
        (Some(s), Some(gamma)) => {
            let mut out = vec![vec![CVector::zeros(w); m]; m];
            for mu in 0..m {
                for nu in 0..m {
                    let mut v = complex_from_flat(&s[mu][nu])
                        + theory.higgs.act(&cj.da[mu][nu]) * &value
                        + &rho_a[nu] * &dphi[mu]
                        + &rho_a[mu] * &d[nu];
                    for l in 0..m {
                        let g = gamma.get(l, mu, nu);
                        if g != 0.0 {
                            v -= &d[l] * C64::new(g, 0.0);
                        }
                    }
                    out[mu][nu] = v;
                }
            }
            Some(out)
        }
        (Some(_), None) => {
            return Err(Error::InsufficientJet("Christoffel symbols needed".into()))
        }
        _ => None,
    };
    Ok(Some(CoordinateHiggs { value, d, dd }))
}

fn to_frame_vectors(e: &DMatrix<f64>, v: &[CVector]) -> Vec<CVector> {
    let m = v.len();
    (0..m)
        .map(|a| {
            let mut s = CVector::zeros(v[0].len());
            for mu in 0..m {
                let w = e[(mu, a)];
                if w != 0.0 {
                    s += &v[mu] * C64::new(w, 0.0);
                }
            }
            s
        })
        .collect()
}

fn to_frame_real(e: &DMatrix<f64>, v: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let m = v.len();
    (0..m)
        .map(|a| {
            let mut s = DVector::zeros(v[0].len());
            for mu in 0..m {
                let w = e[(mu, a)];
                if w != 0.0 {
                    s += &v[mu] * w;
                }
            }
            s
        })
        .collect()
}

/// Frame field strength at `point`, or `None` without a connection.
pub fn field_strength(
    config: &FieldConfiguration,
    point: &[f64],
    stencil: &Stencil,
) -> Result<Option<FieldStrength>> {
    if config.connection.is_none() {
        return Ok(None);
    }
    let cj = connection_jet(config, point, stencil, 1)?;
    let f = coordinate_field_strength(&config.theory, &cj);
    let frame = Frame::from_metric(&config.metric.metric(point)?)?;
    Ok(Some(f.transform(frame.matrix())))
}

/// Spinor jet plus the connection data used to build it.
#[derive(Clone, Debug)]
pub struct SpinorCovariant {
    pub jet: TwistedSpinorJet,
    /// `Ω(e_a) ⊗ 1 + 1 ⊗ χ(A(e_a))`.
    pub operators: Vec<CMatrix>,
    /// Levi-Civita forms `omega[a][(b, c)] = g(e_b, ∇_{e_a} e_c)`.
    pub omega: Vec<DMatrix<f64>>,
}

pub fn spinor_covariant_derivative(
    config: &FieldConfiguration,
    point: &[f64],
    stencil: &Stencil,
) -> Result<SpinorCovariant> {
    let sp = config
        .spinor
        .as_ref()
        .ok_or_else(|| Error::InsufficientJet("no spinor field".into()))?;
    let theory = &config.theory;
    let model = &theory.twisted;
    let m = config.dimension();
    let mj = metric_jet(config.metric.as_ref(), point, stencil, 1)?;
    let gamma = Christoffel::from_jet(&mj)?;
    let fj = frame_jet(config.metric.as_ref(), point, stencil)?;
    let omega = connection_forms(&fj, &gamma, &mj.g);
    let e = fj.frame.matrix();

    let n_alg = theory.algebra.dim();
    let a_frame = match &config.connection {
        Some(f) => to_frame_real(e, &decode_connection(&f(point)?, m, n_alg)?),
        None => vec![DVector::zeros(n_alg); m],
    };
    let operators: Vec<CMatrix> = (0..m)
        .map(|a| {
            model.spinorial(&model.clifford().spin_connection(&omega[a]))
                + model.twist(&theory.twist.act(&a_frame[a]))
        })
        .collect();

    let raw = fd_jet(sp.field.as_ref(), point, stencil, 1)?;
    if raw.value.len() != 2 * model.dim() {
        return Err(Error::Shape(format!(
            "spinor field has {} real components, expected {}",
            raw.value.len(),
            2 * model.dim()
        )));
    }
    let value = complex_from_flat(&raw.value);
    let d: Vec<CVector> = raw.first.iter().map(|v| complex_from_flat(v)).collect();
    let mut derivs = to_frame_vectors(e, &d);
    for (a, dv) in derivs.iter_mut().enumerate() {
        *dv += &operators[a] * &value;
    }
    let jet = TwistedSpinorJet {
        value,
        derivs,
        chirality: sp.chirality,
    };
    jet.check(model)?;
    Ok(SpinorCovariant {
        jet,
        operators,
        omega,
    })
}

/// Assembles the frame jet of every field at `point` to `depth` 1 or 2.
/// Depth 2 adds curvature, `d*F` and second derivatives of the Higgs field.
pub fn covariant_jet(
    config: &FieldConfiguration,
    point: &[f64],
    stencil: &Stencil,
    depth: usize,
) -> Result<GaugeJet> {
    let m = config.dimension();
    if point.len() != m {
        return Err(Error::Shape(format!(
            "point has {} coordinates, expected {m}",
            point.len()
        )));
    }
    if depth == 0 || depth > 2 {
        return Err(Error::Parameter(format!("jet depth must be 1 or 2, got {depth}")));
    }
    let theory = &config.theory;
    let mj: MetricJet = metric_jet(config.metric.as_ref(), point, stencil, depth)?;
    let gamma = Christoffel::from_jet(&mj)?;
    let curvature = if depth == 2 {
        Some(CurvatureData::from_jet(&mj)?)
    } else {
        None
    };
    let frame = Frame::from_metric(&mj.g)?;
    let e = frame.matrix().clone();

    let cj = connection_jet(config, point, stencil, depth)?;
    let f_coord = coordinate_field_strength(theory, &cj);
    let field_strength = f_coord.transform(&e);
    let connection = to_frame_real(&e, &cj.a);

    let codifferential = match &cj.dda {
        Some(dda) if config.connection.is_some() => {
            Some(codifferential(theory, &cj, dda, &f_coord, &gamma, &mj.g, &e)?)
        }
        Some(_) => Some(vec![DVector::zeros(theory.algebra.dim()); m]),
        None => None,
    };

    let higgs = coordinate_higgs(config, point, stencil, depth, &cj, Some(&gamma))?.map(|h| {
        let first = to_frame_vectors(&e, &h.d);
        let second = h.dd.map(|dd| {
            (0..m)
                .map(|a| {
                    (0..m)
                        .map(|b| {
                            let mut v = CVector::zeros(h.value.len());
                            for mu in 0..m {
                                for nu in 0..m {
                                    let w = e[(mu, a)] * e[(nu, b)];
                                    if w != 0.0 {
                                        v += &dd[mu][nu] * C64::new(w, 0.0);
                                    }
                                }
                            }
                            v
                        })
                        .collect()
                })
                .collect()
        });
        HiggsJet {
            value: h.value,
            first,
            second,
        }
    });

    let spinor = if config.spinor.is_some() {
        Some(spinor_covariant_derivative(config, point, stencil)?.jet)
    } else {
        None
    };

    Ok(GaugeJet {
        point: point.to_vec(),
        metric: mj.g,
        frame,
        christoffel: gamma,
        curvature,
        connection,
        field_strength,
        codifferential,
        higgs,
        spinor,
    })
}

/// `(d*F)_ν = -g^{λμ} ∇_λ F_μν`, returned in frame components.
fn codifferential(
    theory: &Theory,
    cj: &ConnectionJet,
    dda: &[Vec<Vec<DVector<f64>>>],
    f: &FieldStrength,
    gamma: &Christoffel,
    g: &DMatrix<f64>,
    e: &DMatrix<f64>,
) -> Result<Vec<DVector<f64>>> {
    let m = cj.a.len();
    let alg = &theory.algebra;
    let n = alg.dim();
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidMetric("degenerate metric".into()))?;
    let mut out = vec![DVector::zeros(n); m];
    for nu in 0..m {
        let mut acc = DVector::zeros(n);
        for l in 0..m {
            for mu in 0..m {
                let gi = ginv[(l, mu)];
                if gi == 0.0 {
                    continue;
                }
                // ∂_λ F_μν
                let mut d = &dda[l][mu][nu] - &dda[l][nu][mu]
                    + alg.bracket(&cj.da[l][mu], &cj.a[nu])
                    + alg.bracket(&cj.a[mu], &cj.da[l][nu]);
                d += alg.bracket(&cj.a[l], f.component(mu, nu));
                for k in 0..m {
                    let g1 = gamma.get(k, l, mu);
                    if g1 != 0.0 {
                        d -= f.component(k, nu) * g1;
                    }
                    let g2 = gamma.get(k, l, nu);
                    if g2 != 0.0 {
                        d -= f.component(mu, k) * g2;
                    }
                }
                acc -= d * gi;
            }
        }
        out[nu] = acc;
    }
    Ok(to_frame_real(e, &out))
}

/// Source currents in frame components.
#[derive(Clone, Debug, PartialEq)]
pub struct Currents {
    /// `J1(e_a)^c = -Re⟨(∇Φ)_a, ρ(ξ_c) Φ⟩`
    pub j1: Vec<DVector<f64>>,
    /// `J2(e_a)^c = ½ Im⟨e_a·Ψ, χ(ξ_c) Ψ⟩`
    pub j2: Vec<DVector<f64>>,
    pub j3: CVector,
}

pub fn currents(jet: &GaugeJet, theory: &Theory) -> Result<Currents> {
    let m = theory.dimension;
    let n = theory.algebra.dim();
    let mut j1 = vec![DVector::zeros(n); m];
    let mut j2 = vec![DVector::zeros(n); m];
    let mut j3 = CVector::zeros(theory.higgs.dim());
    if let Some(h) = &jet.higgs {
        for c in 0..n {
            let rphi = theory.higgs.image(c) * &h.value;
            for a in 0..m {
                j1[a][c] = -h.first[a].dotc(&rphi).re;
            }
        }
    }
    if let Some(s) = &jet.spinor {
        let model = &theory.twisted;
        for c in 0..n {
            let chi = model.twist(theory.twist.image(c)) * &s.value;
            for a in 0..m {
                let ga = model.gamma(a) * &s.value;
                j2[a][c] = 0.5 * model.pair(&ga, &chi).im;
            }
        }
        j3 = theory.yukawa.dual(model, &s.value)?;
    }
    Ok(Currents { j1, j2, j3 })
}

/// Residuals of the field equations in frame components.
#[derive(Clone, Debug, PartialEq)]
pub struct ElResiduals {
    /// `d*F - J1 - J2`
    pub yang_mills: Vec<DVector<f64>>,
    /// `□Φ - ½ grad U - J3`
    pub higgs: Option<CVector>,
    /// `𝔇Ψ + Y_Φ Ψ`
    pub dirac: Option<CVector>,
}

impl ElResiduals {
    pub fn yang_mills_norm(&self) -> f64 {
        self.yang_mills.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        let h = self.higgs.as_ref().map(|v| v.norm()).unwrap_or(0.0);
        let d = self.dirac.as_ref().map(|v| v.norm()).unwrap_or(0.0);
        self.yang_mills_norm().max(h).max(d)
    }
}

pub fn el_residuals(
    config: &FieldConfiguration,
    point: &[f64],
    stencil: &Stencil,
) -> Result<ElResiduals> {
    let theory = &config.theory;
    let jet = covariant_jet(config, point, stencil, 2)?;
    el_residuals_from_jet(&jet, theory)
}

pub(crate) fn el_residuals_from_jet(jet: &GaugeJet, theory: &Theory) -> Result<ElResiduals> {
    let m = theory.dimension;
    let cur = currents(jet, theory)?;
    let dstar = jet
        .codifferential
        .as_ref()
        .ok_or_else(|| Error::InsufficientJet("field equations need a depth-2 jet".into()))?;
    let yang_mills = (0..m).map(|b| &dstar[b] - &cur.j1[b] - &cur.j2[b]).collect();
    let scal = jet.curvature.as_ref().map(|c| c.scal);
    let higgs = match &jet.higgs {
        Some(h) => {
            let (_, grad) = theory.potential.evaluate(&h.value, scal, m)?;
            Some(h.box_op()? - grad * C64::new(0.5, 0.0) - &cur.j3)
        }
        None => None,
    };
    let dirac = match &jet.spinor {
        Some(s) => {
            let phi = jet
                .higgs
                .as_ref()
                .map(|h| h.value.clone())
                .unwrap_or_else(|| CVector::zeros(theory.higgs.dim()));
            let (d, _) = dirac_apply(&theory.twisted, s)?;
            Some(d + theory.yukawa.apply(&phi, &s.value)?)
        }
        None => None,
    };
    Ok(ElResiduals {
        yang_mills,
        higgs,
        dirac,
    })
}
