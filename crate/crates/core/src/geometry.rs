//! Lorentzian backgrounds: ADM data, semi-orthonormal frames, causal
//! directions and curvature assembled from finite-difference metric jets.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{fd_jet, Stencil};

/// `diag(-1, 1, ..., 1)`.
pub fn eta(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| match (i, j) {
        (0, 0) => -1.0,
        (i, j) if i == j => 1.0,
        _ => 0.0,
    })
}

/// A metric given pointwise in coordinates `(t, x1, ..., x_{m-1})`.
pub trait MetricField: Send + Sync {
    fn dimension(&self) -> usize;
    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>>;
}

#[derive(Clone, Copy, Debug)]
pub struct Minkowski {
    pub dimension: usize,
}

impl MetricField for Minkowski {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn metric(&self, _x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(eta(self.dimension))
    }
}

/// Flat slicing `-dt² + e^{2Ht} δ`.
#[derive(Clone, Copy, Debug)]
pub struct DeSitter {
    pub dimension: usize,
    pub hubble: f64,
}

impl MetricField for DeSitter {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let a2 = (2.0 * self.hubble * x[0]).exp();
        let mut g = DMatrix::identity(self.dimension, self.dimension) * a2;
        g[(0, 0)] = -1.0;
        Ok(g)
    }
}

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;

/// Metric assembled from lapse, shift and spatial metric callables.
///
/// `spatial` holds the upper triangle row by row, `(m-1)m/2` entries.
#[derive(Clone)]
pub struct AdmMetric {
    pub dimension: usize,
    pub lapse: ScalarFn,
    pub shift: Vec<ScalarFn>,
    pub spatial: Vec<ScalarFn>,
}

impl AdmMetric {
    pub fn data(&self, x: &[f64]) -> Result<AdmData> {
        let n = self.dimension - 1;
        let lapse = (self.lapse)(x)?;
        let shift = DVector::from_vec(self.shift.iter().map(|f| f(x)).collect::<Result<Vec<_>>>()?);
        let mut spatial = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                let v = (self.spatial[k])(x)?;
                spatial[(i, j)] = v;
                spatial[(j, i)] = v;
                k += 1;
            }
        }
        AdmData::new(lapse, shift, spatial)
    }
}

impl MetricField for AdmMetric {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.data(x)?.metric())
    }
}

/// Wraps a closure returning the full metric matrix.
pub struct MetricFn<F> {
    pub dimension: usize,
    pub f: F,
}

impl<F> MetricField for MetricFn<F>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync,
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        (self.f)(x)
    }
}

/// Lapse `N`, shift `β` and spatial metric `ḡ` at a point, with
/// `g = -N² dt² + 2 β♭ dt + ḡ`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmData {
    lapse: f64,
    shift: DVector<f64>,
    spatial: DMatrix<f64>,
}

impl AdmData {
    pub fn new(lapse: f64, shift: DVector<f64>, spatial: DMatrix<f64>) -> Result<Self> {
        let n = spatial.nrows();
        if spatial.ncols() != n {
            return Err(Error::Shape("spatial metric must be square".into()));
        }
        if n == 0 {
            return Err(Error::Parameter("dimension must be at least 2".into()));
        }
        if shift.len() != n {
            return Err(Error::Shape(format!(
                "shift must have length m-1 = {n}, got {}",
                shift.len()
            )));
        }
        if !(lapse > 0.0) || !lapse.is_finite() {
            return Err(Error::InvalidMetric(format!("lapse must be positive, got {lapse}")));
        }
        let scale = spatial.amax().max(1.0);
        if (&spatial - spatial.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidMetric("spatial metric is not symmetric".into()));
        }
        if spatial.iter().chain(shift.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidMetric("non-finite ADM component".into()));
        }
        if spatial.clone().cholesky().is_none() {
            return Err(Error::InvalidMetric("spatial metric is not positive definite".into()));
        }
        Ok(Self {
            lapse,
            shift,
            spatial,
        })
    }

    /// Reads ADM data off a full metric matrix.
    pub fn from_metric(g: &DMatrix<f64>) -> Result<Self> {
        let m = g.nrows();
        if g.ncols() != m || m < 2 {
            return Err(Error::Shape("metric must be square with m >= 2".into()));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMetric("non-finite metric component".into()));
        }
        let spatial = g.view((1, 1), (m - 1, m - 1)).into_owned();
        let chol = spatial
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidMetric("spatial metric is not positive definite".into()))?;
        let beta_flat = g.view((1, 0), (m - 1, 1)).column(0).into_owned();
        let shift = chol.solve(&beta_flat);
        let n2 = -g[(0, 0)];
        if !(n2 > 0.0) {
            return Err(Error::InvalidMetric(format!(
                "g_00 must be negative, got {}",
                g[(0, 0)]
            )));
        }
        Self::new(n2.sqrt(), shift, spatial)
    }

    pub fn dimension(&self) -> usize {
        self.shift.len() + 1
    }

    pub fn lapse(&self) -> f64 {
        self.lapse
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    pub fn spatial(&self) -> &DMatrix<f64> {
        &self.spatial
    }

    /// `ḡ(β, β)`.
    pub fn shift_norm_sq(&self) -> f64 {
        (&self.spatial * &self.shift).dot(&self.shift)
    }

    /// `α = sqrt(N² + |β|²)`, the normalization of `∂t - β`.
    pub fn alpha(&self) -> f64 {
        (self.lapse * self.lapse + self.shift_norm_sq()).sqrt()
    }

    pub fn metric(&self) -> DMatrix<f64> {
        let m = self.dimension();
        let flat = &self.spatial * &self.shift;
        let mut g = DMatrix::zeros(m, m);
        g[(0, 0)] = -self.lapse * self.lapse;
        for i in 1..m {
            g[(0, i)] = flat[i - 1];
            g[(i, 0)] = flat[i - 1];
            for j in 1..m {
                g[(i, j)] = self.spatial[(i - 1, j - 1)];
            }
        }
        g
    }
}

/// Frame vectors `e_0 = n, e_1, ..., e_{m-1}` as the columns of a matrix of
/// coordinate components.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    vectors: DMatrix<f64>,
}

/// Frame with `e_0` the unit normal and the spatial vectors obtained by
/// Gram-Schmidt on `∂_1, ..., ∂_{m-1}` with respect to `ḡ`.
pub fn build_frame(adm: &AdmData) -> Frame {
    let m = adm.dimension();
    let n = m - 1;
    let mut e = DMatrix::zeros(m, m);
    let alpha = adm.alpha();
    e[(0, 0)] = 1.0 / alpha;
    for i in 0..n {
        e[(i + 1, 0)] = -adm.shift[i] / alpha;
    }
    let gbar = &adm.spatial;
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        for _ in 0..2 {
            for u in &basis {
                let c = (gbar * u).dot(&v);
                v -= u * c;
            }
        }
        let norm = (gbar * &v).dot(&v).sqrt();
        v /= norm;
        basis.push(v);
    }
    for (k, v) in basis.iter().enumerate() {
        for i in 0..n {
            e[(i + 1, k + 1)] = v[i];
        }
    }
    Frame { vectors: e }
}

impl Frame {
    pub fn from_metric(g: &DMatrix<f64>) -> Result<Self> {
        Ok(build_frame(&AdmData::from_metric(g)?))
    }

    /// Wraps explicit frame vectors; the caller is responsible for the Gram
    /// matrix.
    pub fn from_vectors(vectors: DMatrix<f64>) -> Self {
        Self { vectors }
    }

    pub fn dimension(&self) -> usize {
        self.vectors.ncols()
    }

    /// Columns are frame vectors in coordinates.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn vector(&self, a: usize) -> DVector<f64> {
        self.vectors.column(a).into_owned()
    }

    /// Rows are the dual coframe in coordinates.
    pub fn coframe(&self) -> DMatrix<f64> {
        self.vectors
            .clone()
            .try_inverse()
            .expect("frame vectors are linearly independent")
    }

    pub fn gram(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        self.vectors.transpose() * g * &self.vectors
    }

    /// Covariant 2-tensor in coordinates to frame components.
    pub fn tensor_to_frame(&self, t: &DMatrix<f64>) -> DMatrix<f64> {
        self.vectors.transpose() * t * &self.vectors
    }

    /// Covariant 2-tensor in frame components to coordinates.
    pub fn tensor_to_coordinates(&self, t: &DMatrix<f64>) -> DMatrix<f64> {
        let c = self.coframe();
        c.transpose() * t * c
    }

    /// Frame components of a 1-form given in coordinates.
    pub fn covector_to_frame(&self, w: &DVector<f64>) -> DVector<f64> {
        self.vectors.transpose() * w
    }

    /// Spatially rotated frame `e'_i = Σ_j R_ji e_j`, `R` orthogonal of size `m-1`.
    pub fn rotated(&self, r: &DMatrix<f64>) -> Result<Self> {
        let m = self.dimension();
        if r.nrows() != m - 1 || r.ncols() != m - 1 {
            return Err(Error::Shape("rotation must be (m-1)x(m-1)".into()));
        }
        let mut full = DMatrix::identity(m, m);
        full.view_mut((1, 1), (m - 1, m - 1)).copy_from(r);
        Ok(Self {
            vectors: &self.vectors * full,
        })
    }
}

/// Whether a causal direction is timelike or null.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalType {
    Timelike,
    Null,
}

/// Spatial part `ξ` of a causal vector `X = n + ξ`, in frame components.
#[derive(Clone, Debug, PartialEq)]
pub struct CausalDirection {
    xi: DVector<f64>,
}

/// Tolerance on `|ξ| - 1` for null classification.
pub const NULL_TOLERANCE: f64 = 1e-9;

impl CausalDirection {
    pub fn new(xi: DVector<f64>) -> Result<Self> {
        if xi.norm() > 1.0 + 1e-12 {
            return Err(Error::Parameter(format!(
                "causal direction needs |xi| <= 1, got {}",
                xi.norm()
            )));
        }
        Ok(Self { xi })
    }

    pub fn xi(&self) -> &DVector<f64> {
        &self.xi
    }

    pub fn norm(&self) -> f64 {
        self.xi.norm()
    }

    pub fn classify(&self) -> CausalType {
        if (self.norm() - 1.0).abs() <= NULL_TOLERANCE {
            CausalType::Null
        } else {
            CausalType::Timelike
        }
    }

    /// Frame components `(1, ξ)`.
    pub fn frame_components(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.xi.len() + 1);
        v[0] = 1.0;
        v.rows_mut(1, self.xi.len()).copy_from(&self.xi);
        v
    }

    pub fn coordinates(&self, frame: &Frame) -> DVector<f64> {
        frame.matrix() * self.frame_components()
    }
}

/// Metric with first and optionally second coordinate derivatives.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
    pub ddg: Option<Vec<Vec<DMatrix<f64>>>>,
}

pub fn metric_jet(
    metric: &dyn MetricField,
    point: &[f64],
    stencil: &Stencil,
    depth: usize,
) -> Result<MetricJet> {
    let m = metric.dimension();
    if point.len() != m {
        return Err(Error::Shape(format!(
            "point has {} coordinates, metric dimension is {m}",
            point.len()
        )));
    }
    let f = |x: &[f64]| -> Result<Vec<f64>> {
        let g = metric.metric(x)?;
        if g.nrows() != m || g.ncols() != m {
            return Err(Error::Shape("metric callable returned wrong size".into()));
        }
        AdmData::from_metric(&g)?;
        Ok(g.as_slice().to_vec())
    };
    let raw = fd_jet(&f, point, stencil, depth).map_err(|e| match e {
        Error::Evaluation { point, message } if message.contains("invalid metric") => {
            Error::InvalidMetric(format!("{message} at {point:?}"))
        }
        other => other,
    })?;
    let mat = |v: &Vec<f64>| DMatrix::from_column_slice(m, m, v);
    Ok(MetricJet {
        g: mat(&raw.value),
        dg: raw.first.iter().map(mat).collect(),
        ddg: raw
            .second
            .map(|s| s.iter().map(|row| row.iter().map(mat).collect()).collect()),
    })
}

/// `Γ^λ_{μν}` in coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    m: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zero(m: usize) -> Self {
        Self {
            m,
            data: vec![0.0; m * m * m],
        }
    }

    pub fn dimension(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, l: usize, mu: usize, nu: usize) -> f64 {
        self.data[(l * self.m + mu) * self.m + nu]
    }

    fn set(&mut self, l: usize, mu: usize, nu: usize, v: f64) {
        self.data[(l * self.m + mu) * self.m + nu] = v;
    }

    pub fn from_jet(jet: &MetricJet) -> Result<Self> {
        let m = jet.g.nrows();
        let ginv = invert_metric(&jet.g)?;
        let mut out = Self::zero(m);
        for mu in 0..m {
            for nu in 0..m {
                for l in 0..m {
                    let mut s = 0.0;
                    for k in 0..m {
                        s += ginv[(l, k)]
                            * (jet.dg[mu][(k, nu)] + jet.dg[nu][(k, mu)] - jet.dg[k][(mu, nu)]);
                    }
                    out.set(l, mu, nu, 0.5 * s);
                }
            }
        }
        Ok(out)
    }
}

fn invert_metric(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    g.clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidMetric("degenerate metric".into()))
}

/// Curvature of the background at a point; tensors in the frame.
#[derive(Clone, Debug)]
pub struct CurvatureData {
    pub frame: Frame,
    pub metric: DMatrix<f64>,
    /// Coordinate Christoffel symbols.
    pub christoffel: Christoffel,
    /// `R^a_{bcd}` in the frame, flattened `((a m + b) m + c) m + d`.
    pub riemann: Vec<f64>,
    pub ricci: DMatrix<f64>,
    pub scal: f64,
    pub einstein: DMatrix<f64>,
    /// `II_ij = g(n, ∇_{e_i} e_j)` on the spatial frame vectors.
    pub second_fundamental: DMatrix<f64>,
    pub mean_curvature: f64,
}

impl CurvatureData {
    pub fn dimension(&self) -> usize {
        self.metric.nrows()
    }

    pub fn riemann(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let m = self.dimension();
        self.riemann[((a * m + b) * m + c) * m + d]
    }

    /// Ricci tensor in coordinates.
    pub fn ricci_coordinates(&self) -> DMatrix<f64> {
        self.frame.tensor_to_coordinates(&self.ricci)
    }

    pub fn from_jet(jet: &MetricJet) -> Result<Self> {
        let ddg = jet
            .ddg
            .as_ref()
            .ok_or_else(|| Error::InsufficientJet("curvature needs second derivatives".into()))?;
        let g = &jet.g;
        let m = g.nrows();
        let ginv = invert_metric(g)?;
        let dginv: Vec<DMatrix<f64>> = jet.dg.iter().map(|d| -&ginv * d * &ginv).collect();
        let gamma = Christoffel::from_jet(jet)?;

        let i3 = |a: usize, b: usize, c: usize| (a * m + b) * m + c;
        let i4 = |a: usize, b: usize, c: usize, d: usize| ((a * m + b) * m + c) * m + d;

        // Γ_{κμν} with the first index lowered.
        let mut lower = vec![0.0; m * m * m];
        for k in 0..m {
            for mu in 0..m {
                for nu in 0..m {
                    lower[i3(k, mu, nu)] =
                        0.5 * (jet.dg[mu][(k, nu)] + jet.dg[nu][(k, mu)] - jet.dg[k][(mu, nu)]);
                }
            }
        }
        // dgamma[r][l][mu][nu] = ∂_r Γ^l_{μν}
        let mut dgamma = vec![0.0; m * m * m * m];
        for r in 0..m {
            for l in 0..m {
                for mu in 0..m {
                    for nu in 0..m {
                        let mut s = 0.0;
                        for k in 0..m {
                            let dl = 0.5
                                * (ddg[r][mu][(k, nu)] + ddg[r][nu][(k, mu)] - ddg[r][k][(mu, nu)]);
                            s += dginv[r][(l, k)] * lower[i3(k, mu, nu)] + ginv[(l, k)] * dl;
                        }
                        dgamma[i4(r, l, mu, nu)] = s;
                    }
                }
            }
        }
        // R^ρ_{σμν} = ∂_μ Γ^ρ_{νσ} - ∂_ν Γ^ρ_{μσ} + Γ^ρ_{μλ} Γ^λ_{νσ} - Γ^ρ_{νλ} Γ^λ_{μσ}
        let mut riem = vec![0.0; m * m * m * m];
        for rho in 0..m {
            for sigma in 0..m {
                for mu in 0..m {
                    for nu in 0..m {
                        let mut s = dgamma[i4(mu, rho, nu, sigma)] - dgamma[i4(nu, rho, mu, sigma)];
                        for l in 0..m {
                            s += gamma.get(rho, mu, l) * gamma.get(l, nu, sigma)
                                - gamma.get(rho, nu, l) * gamma.get(l, mu, sigma);
                        }
                        riem[i4(rho, sigma, mu, nu)] = s;
                    }
                }
            }
        }
        let mut ric = DMatrix::zeros(m, m);
        for s in 0..m {
            for n in 0..m {
                ric[(s, n)] = (0..m).map(|r| riem[i4(r, s, r, n)]).sum();
            }
        }
        let scal = (&ginv.component_mul(&ric)).sum();

        let frame = Frame::from_metric(g)?;
        let e = frame.matrix();
        let ei = frame.coframe();

        // Frame Riemann by successive contraction of each slot.
        let mut t = riem;
        for slot in 0..4 {
            let mut next = vec![0.0; m * m * m * m];
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        for d in 0..m {
                            let idx = [a, b, c, d];
                            let mut s = 0.0;
                            for k in 0..m {
                                let mut src = idx;
                                src[slot] = k;
                                let w = if slot == 0 {
                                    ei[(idx[0], k)]
                                } else {
                                    e[(k, idx[slot])]
                                };
                                s += w * t[i4(src[0], src[1], src[2], src[3])];
                            }
                            next[i4(a, b, c, d)] = s;
                        }
                    }
                }
            }
            t = next;
        }

        let ricci = frame.tensor_to_frame(&ric);
        let eta_m = eta(m);
        let einstein = &ricci - &eta_m * (0.5 * scal);

        // Unit normal n^c = -g^{c0} / sqrt(-g^{00}) and its covariant derivative.
        let s0 = (-ginv[(0, 0)]).sqrt();
        let n: DVector<f64> = DVector::from_fn(m, |c, _| -ginv[(c, 0)] / s0);
        let mut nabla_n = DMatrix::zeros(m, m); // (c, a) = ∇_a n^c
        for a in 0..m {
            let ds = -dginv[a][(0, 0)] / (2.0 * s0);
            for c in 0..m {
                let mut v = -dginv[a][(c, 0)] / s0 + ginv[(c, 0)] * ds / (s0 * s0);
                for d in 0..m {
                    v += gamma.get(c, a, d) * n[d];
                }
                nabla_n[(c, a)] = v;
            }
        }
        let mut second = DMatrix::zeros(m - 1, m - 1);
        for i in 1..m {
            for j in 1..m {
                let ui = e.column(i);
                let uj = e.column(j);
                // -g(∇_{e_i} n, e_j)
                let dn = &nabla_n * ui;
                second[(i - 1, j - 1)] = -(g * dn).dot(&uj);
            }
        }
        let mean_curvature = second.trace() / (m - 1) as f64;

        Ok(Self {
            frame,
            metric: g.clone(),
            christoffel: gamma,
            riemann: t,
            ricci,
            scal,
            einstein,
            second_fundamental: second,
            mean_curvature,
        })
    }
}

/// Curvature of `metric` at `point` from a second-order metric jet.
pub fn curvature_package(
    metric: &dyn MetricField,
    point: &[f64],
    stencil: &Stencil,
) -> Result<CurvatureData> {
    let jet = metric_jet(metric, point, stencil, 2)?;
    CurvatureData::from_jet(&jet)
}

/// Frame field with its coordinate derivatives `d[μ] = ∂_μ E`.
#[derive(Clone, Debug)]
pub struct FrameJet {
    pub frame: Frame,
    pub d: Vec<DMatrix<f64>>,
}

pub fn frame_jet(metric: &dyn MetricField, point: &[f64], stencil: &Stencil) -> Result<FrameJet> {
    let m = metric.dimension();
    let f = |x: &[f64]| -> Result<Vec<f64>> {
        let fr = Frame::from_metric(&metric.metric(x)?)?;
        Ok(fr.matrix().as_slice().to_vec())
    };
    let raw = fd_jet(&f, point, stencil, 1)?;
    Ok(FrameJet {
        frame: Frame::from_vectors(DMatrix::from_column_slice(m, m, &raw.value)),
        d: raw
            .first
            .iter()
            .map(|v| DMatrix::from_column_slice(m, m, v))
            .collect(),
    })
}

/// Levi-Civita connection forms `ω[a][(b, c)] = g(e_b, ∇_{e_a} e_c)`.
pub fn connection_forms(
    jet: &FrameJet,
    gamma: &Christoffel,
    g: &DMatrix<f64>,
) -> Vec<DMatrix<f64>> {
    let m = g.nrows();
    let e = jet.frame.matrix();
    let ge = g * e;
    (0..m)
        .map(|a| {
            let ea = e.column(a);
            // columns: ∇_{e_a} e_c in coordinates
            let mut nab = DMatrix::zeros(m, m);
            for c in 0..m {
                for nu in 0..m {
                    let mut v = 0.0;
                    for l in 0..m {
                        let mut s = jet.d[l][(nu, c)];
                        for k in 0..m {
                            s += gamma.get(nu, l, k) * e[(k, c)];
                        }
                        v += ea[l] * s;
                    }
                    nab[(nu, c)] = v;
                }
            }
            ge.transpose() * nab
        })
        .collect()
}

/// Frame components of `∇^λ T_{λν}` for a symmetric covariant 2-tensor given
/// in coordinates by `tensor`, differentiated with the `outer` stencil.
pub fn covariant_divergence<F>(
    metric: &dyn MetricField,
    point: &[f64],
    outer: &Stencil,
    inner: &Stencil,
    tensor: F,
) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let m = metric.dimension();
    let jet = metric_jet(metric, point, inner, 1)?;
    let gamma = Christoffel::from_jet(&jet)?;
    let ginv = invert_metric(&jet.g)?;
    let frame = Frame::from_metric(&jet.g)?;
    let flat = |x: &[f64]| -> Result<Vec<f64>> {
        let t = tensor(x)?;
        if t.nrows() != m || t.ncols() != m {
            return Err(Error::Shape("tensor callable returned wrong size".into()));
        }
        Ok(t.as_slice().to_vec())
    };
    let raw = fd_jet(&flat, point, outer, 1)?;
    let t0 = DMatrix::from_column_slice(m, m, &raw.value);
    let dt: Vec<DMatrix<f64>> = raw
        .first
        .iter()
        .map(|v| DMatrix::from_column_slice(m, m, v))
        .collect();
    let mut div = DVector::zeros(m);
    for nu in 0..m {
        let mut s = 0.0;
        for l in 0..m {
            for mu in 0..m {
                let gi = ginv[(l, mu)];
                if gi == 0.0 {
                    continue;
                }
                let mut d = dt[l][(mu, nu)];
                for k in 0..m {
                    d -= gamma.get(k, l, mu) * t0[(k, nu)] + gamma.get(k, l, nu) * t0[(mu, k)];
                }
                s += gi * d;
            }
        }
        div[nu] = s;
    }
    Ok(frame.covector_to_frame(&div))
}

/// Frame components of `∇^μ Ein_{μν}` (contracted Bianchi residual).
pub fn einstein_divergence(
    metric: &dyn MetricField,
    point: &[f64],
    outer: &Stencil,
    inner: &Stencil,
) -> Result<DVector<f64>> {
    covariant_divergence(metric, point, outer, inner, |x| {
        let c = curvature_package(metric, x, inner)?;
        Ok(c.frame.tensor_to_coordinates(&c.einstein))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minkowski_frame_is_coordinate_basis() {
        let adm = AdmData::new(1.0, DVector::zeros(3), DMatrix::identity(3, 3)).unwrap();
        let f = build_frame(&adm);
        assert_eq!(f.matrix(), &DMatrix::<f64>::identity(4, 4));
    }

    #[test]
    fn shifted_normal() {
        let adm = AdmData::new(2.0, DVector::from_vec(vec![1.0, 0.0, 0.0]), DMatrix::identity(3, 3))
            .unwrap();
        let f = build_frame(&adm);
        let e0 = f.vector(0);
        let s5 = 5f64.sqrt();
        assert!((e0[0] - 1.0 / s5).abs() < 1e-15);
        assert!((e0[1] + 1.0 / s5).abs() < 1e-15);
        let g = adm.metric();
        assert!(((g.clone() * &e0).dot(&e0) + 1.0).abs() < 1e-14);
        assert!((f.gram(&g) - eta(4)).amax() < 1e-12);
    }

    #[test]
    fn shift_length_is_checked() {
        let err = AdmData::new(1.0, DVector::zeros(4), DMatrix::identity(3, 3)).unwrap_err();
        assert!(err.to_string().contains("shift must have length m-1"));
    }

    #[test]
    fn rejects_bad_lapse_and_spatial_metric() {
        assert!(matches!(
            AdmData::new(0.0, DVector::zeros(2), DMatrix::identity(2, 2)),
            Err(Error::InvalidMetric(_))
        ));
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            AdmData::new(1.0, DVector::zeros(2), bad),
            Err(Error::InvalidMetric(_))
        ));
    }

    #[test]
    fn adm_round_trip() {
        let spatial = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.5]);
        let adm = AdmData::new(1.3, DVector::from_vec(vec![0.2, -0.4]), spatial).unwrap();
        let back = AdmData::from_metric(&adm.metric()).unwrap();
        assert!((back.lapse() - 1.3).abs() < 1e-14);
        assert!((back.shift() - adm.shift()).amax() < 1e-14);
    }

    #[test]
    fn flat_curvature_vanishes() {
        let s = Stencil::new(4, 1e-3).unwrap();
        let c = curvature_package(&Minkowski { dimension: 4 }, &[0.1, 0.2, 0.3, 0.4], &s).unwrap();
        let worst = c.riemann.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(worst < 1e-12, "{worst}");
        assert!(c.scal.abs() < 1e-12);
    }

    #[test]
    fn de_sitter_constant_curvature() {
        let s = Stencil::new(4, 1e-3).unwrap();
        let h = 0.5;
        let c = curvature_package(&DeSitter { dimension: 4, hubble: h }, &[0.2, 0.0, 0.1, 0.0], &s)
            .unwrap();
        assert!((c.scal - 3.0).abs() < 1e-6, "{}", c.scal);
        assert!((&c.ricci - eta(4) * (3.0 * h * h)).amax() < 1e-6);
        // II = -(ȧ/a) ḡ in this sign convention.
        assert!((&c.second_fundamental + DMatrix::identity(3, 3) * h).amax() < 1e-8);
        assert!((c.mean_curvature + h).abs() < 1e-8);
    }

    #[test]
    fn causal_direction_classification() {
        let d = CausalDirection::new(DVector::from_vec(vec![0.6, 0.8, 0.0])).unwrap();
        assert_eq!(d.classify(), CausalType::Null);
        let d = CausalDirection::new(DVector::from_vec(vec![0.1, 0.0, 0.0])).unwrap();
        assert_eq!(d.classify(), CausalType::Timelike);
        assert!(CausalDirection::new(DVector::from_vec(vec![1.1, 0.0, 0.0])).is_err());
    }
}
