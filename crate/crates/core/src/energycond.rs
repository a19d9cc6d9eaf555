//! Energy conditions decided by exact minimization of `T(n + ξ, n + ξ)` over
//! the unit ball or sphere, closed-form cross-checks and scene classification.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::emt::{evaluate_tensors, EnergyMomentumTensor, Sector};
use crate::error::{Error, Result};
use crate::gauge::{ElectricMagnetic, FieldConfiguration};
use crate::geometry::eta;
use crate::numerics::{Region, Stencil};
use crate::CVector;

/// `q(ξ) = c + 2 b·ξ + ξᵀ A ξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    pub c: f64,
    pub b: DVector<f64>,
    pub a: DMatrix<f64>,
}

impl QuadraticForm {
    pub fn new(c: f64, b: DVector<f64>, a: DMatrix<f64>) -> Self {
        Self { c, b, a }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn value(&self, xi: &DVector<f64>) -> f64 {
        self.c + 2.0 * self.b.dot(xi) + (&self.a * xi).dot(xi)
    }

    /// The form in coordinates `ξ = R ξ'`.
    pub fn rotated(&self, r: &DMatrix<f64>) -> Self {
        Self {
            c: self.c,
            b: r.transpose() * &self.b,
            a: r.transpose() * &self.a * r,
        }
    }

    fn scale(&self) -> f64 {
        self.c.abs().max(self.b.amax()).max(self.a.amax())
    }
}

/// Minimizer of a quadratic form over the ball or sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct BallMinimum {
    pub value: f64,
    pub argmin: DVector<f64>,
    /// `ν` with `(A + ν I) ξ = -b`.
    pub multiplier: f64,
    pub kkt_residual: f64,
    pub on_boundary: bool,
}

const MAX_ITERATIONS: usize = 80;

/// Global minimum of `q` over `|ξ| ≤ 1`, or over `|ξ| = 1` when
/// `boundary_only`, via the eigendecomposition of `A` and the secular
/// equation `|(A + ν I)⁻¹ b| = 1`.
pub fn minimize_quadratic_over_ball(q: &QuadraticForm, boundary_only: bool) -> Result<BallMinimum> {
    let n = q.dim();
    if q.a.nrows() != n || q.a.ncols() != n {
        return Err(Error::Shape("quadratic form blocks have inconsistent sizes".into()));
    }
    let scale = q.scale().max(1.0);
    if (&q.a - q.a.transpose()).amax() > 1e-12 * scale {
        return Err(Error::Contract("quadratic form matrix is not symmetric".into()));
    }
    if n == 0 {
        return Ok(BallMinimum {
            value: q.c,
            argmin: DVector::zeros(0),
            multiplier: 0.0,
            kkt_residual: 0.0,
            on_boundary: false,
        });
    }
    let a = (&q.a + q.a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lam: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs: Vec<DVector<f64>> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    let lmin = lam[0];
    // Shifted eigenvalues d_i = λ_i - λ_min ≥ 0 and rotated b.
    let d: Vec<f64> = lam.iter().map(|l| (l - lmin).max(0.0)).collect();
    let bt: Vec<f64> = vecs.iter().map(|v| v.dot(&q.b)).collect();
    let bnorm = q.b.norm();

    // In the shift s = ν + λ_min: ξ̃_i(s) = -b̃_i / (d_i + s).
    let norm_at = |s: f64| -> f64 {
        bt.iter()
            .zip(&d)
            .map(|(b, di)| {
                let den = di + s;
                if *b == 0.0 {
                    0.0
                } else {
                    (b / den).powi(2)
                }
            })
            .sum::<f64>()
            .sqrt()
    };
    let assemble = |s: f64, extra: Option<f64>| -> DVector<f64> {
        let mut xi = DVector::zeros(n);
        for i in 0..n {
            if bt[i] != 0.0 && d[i] + s > 0.0 {
                xi -= &vecs[i] * (bt[i] / (d[i] + s));
            }
        }
        if let Some(tau) = extra {
            xi += &vecs[0] * tau;
        }
        xi
    };
    let finish = |xi: DVector<f64>, nu: f64, on_boundary: bool| -> BallMinimum {
        let kkt = (&a * &xi + &xi * nu + &q.b).norm();
        BallMinimum {
            value: q.value(&xi),
            argmin: xi,
            multiplier: nu,
            kkt_residual: kkt,
            on_boundary,
        }
    };

    // Interior candidate for the ball.
    let s_lo = if !boundary_only && lmin > 0.0 {
        let s0 = lmin;
        if norm_at(s0) <= 1.0 {
            return Ok(finish(assemble(s0, None), 0.0, false));
        }
        s0
    } else {
        0.0
    };

    // Hard case: b has no component along the bottom eigenspace and the
    // remaining part does not reach the sphere.
    if s_lo == 0.0 {
        let tol = 1e-14 * bnorm.max(scale);
        let bottom: Vec<usize> = (0..n).filter(|&i| d[i] <= 1e-12 * scale).collect();
        if bottom.iter().all(|&i| bt[i].abs() <= tol) {
            let rest = bt
                .iter()
                .zip(&d)
                .enumerate()
                .filter(|(i, _)| !bottom.contains(i))
                .map(|(_, (b, di))| (b / di).powi(2))
                .sum::<f64>()
                .sqrt();
            if rest <= 1.0 {
                let mut xi = DVector::zeros(n);
                for i in 0..n {
                    if !bottom.contains(&i) && bt[i] != 0.0 {
                        xi -= &vecs[i] * (bt[i] / d[i]);
                    }
                }
                let tau = (1.0 - rest * rest).max(0.0).sqrt();
                xi += &vecs[0] * tau;
                return Ok(finish(xi, -lmin, true));
            }
        }
    }

    // Secular equation on (s_lo, s_hi]: |ξ(s)| is decreasing.
    let mut lo = s_lo;
    let mut hi = (bnorm).max(s_lo + bnorm).max(f64::MIN_POSITIVE);
    while norm_at(hi) > 1.0 {
        hi *= 2.0;
    }
    // φ(s) = 1/|ξ(s)| - 1 is increasing and close to linear.
    let mut s = hi;
    for _ in 0..MAX_ITERATIONS {
        let nrm = norm_at(s);
        let phi = 1.0 / nrm - 1.0;
        if phi.abs() <= 1e-16 {
            break;
        }
        if phi > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let dn: f64 = bt
            .iter()
            .zip(&d)
            .map(|(b, di)| b * b / (di + s).powi(3))
            .sum::<f64>();
        let dphi = dn / (nrm * nrm * nrm);
        let newton = s - phi / dphi;
        s = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let xi = assemble(s, None);
    Ok(finish(xi, s - lmin, true))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Condition {
    #[serde(rename = "NEC")]
    Nec,
    #[serde(rename = "WEC")]
    Wec,
    #[serde(rename = "SEC")]
    Sec,
    #[serde(rename = "DEC")]
    Dec,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Condition::Nec, Condition::Wec, Condition::Sec, Condition::Dec];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Nec => "NEC",
            Condition::Wec => "WEC",
            Condition::Sec => "SEC",
            Condition::Dec => "DEC",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NEC" => Ok(Condition::Nec),
            "WEC" => Ok(Condition::Wec),
            "SEC" => Ok(Condition::Sec),
            "DEC" => Ok(Condition::Dec),
            _ => Err(Error::Parameter(format!("unknown energy condition '{s}'"))),
        }
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Holds,
    Violated,
    Inconclusive,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Holds => "holds",
            Status::Violated => "violated",
            Status::Inconclusive => "inconclusive",
        }
    }

    /// Worst of two statuses: violated over inconclusive over holds.
    pub fn combine(self, other: Status) -> Status {
        match (self, other) {
            (Status::Violated, _) | (_, Status::Violated) => Status::Violated,
            (Status::Inconclusive, _) | (_, Status::Inconclusive) => Status::Inconclusive,
            _ => Status::Holds,
        }
    }
}

/// The three parts of the dominant energy condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecMargins {
    /// Minimum of `T(X, X)` over the ball.
    pub weak: f64,
    /// Minimum of `-g(Z, Z)` over the ball.
    pub causal: f64,
    /// Minimum of `-g(Z, n)` over the ball.
    pub future: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionVerdict {
    pub condition: Condition,
    pub status: Status,
    /// Minimized value; negative values beyond the tolerance are violations.
    pub margin: f64,
    /// Spatial part `ξ` of the extremal direction `n + ξ`.
    pub witness: DVector<f64>,
    pub tolerance: f64,
    pub dec: Option<DecMargins>,
}

/// Absolute tolerance used for verdicts on `t`.
pub fn verdict_tolerance(t: &EnergyMomentumTensor) -> f64 {
    1e-10 * t.components.amax().max(1.0)
}

const KKT_TOLERANCE: f64 = 1e-10;

fn status_of(margin: f64, tol: f64, certified: bool) -> Status {
    if !margin.is_finite() || !certified {
        Status::Inconclusive
    } else if margin >= -tol {
        Status::Holds
    } else {
        Status::Violated
    }
}

fn certified(min: &BallMinimum, q: &QuadraticForm) -> bool {
    !min.on_boundary || min.kkt_residual <= KKT_TOLERANCE * q.scale().max(1.0)
}

/// `T - Tr_g(T)/(m-2) g` in frame components.
pub fn trace_reversed(t: &EnergyMomentumTensor) -> Result<EnergyMomentumTensor> {
    let m = t.dimension();
    if m < 3 {
        return Err(Error::Parameter("the SEC needs m >= 3".into()));
    }
    let c = t.trace() / (m as f64 - 2.0);
    Ok(EnergyMomentumTensor {
        components: &t.components - eta(m) * c,
        sector: t.sector,
        on_shell_only: t.on_shell_only,
    })
}

/// Decides one energy condition for a tensor given in a frame with `e_0 = n`.
pub fn check_condition(t: &EnergyMomentumTensor, condition: Condition) -> Result<ConditionVerdict> {
    let m = t.dimension();
    if m < 2 || t.symmetry_defect() > 1e-10 * t.components.amax().max(1.0) {
        return Err(Error::Contract(
            "energy-momentum tensor must be symmetric with m >= 2".into(),
        ));
    }
    let tol = verdict_tolerance(t);
    let solve = |tensor: &EnergyMomentumTensor, sphere: bool| -> Result<(BallMinimum, bool)> {
        let q = tensor.quadratic_form();
        let min = minimize_quadratic_over_ball(&q, sphere)?;
        let ok = certified(&min, &q);
        Ok((min, ok))
    };
    let verdict = |min: BallMinimum, ok: bool, tol: f64| ConditionVerdict {
        condition,
        status: status_of(min.value, tol, ok),
        margin: min.value,
        witness: min.argmin,
        tolerance: tol,
        dec: None,
    };
    match condition {
        Condition::Nec => {
            let (min, ok) = solve(t, true)?;
            Ok(verdict(min, ok, tol))
        }
        Condition::Wec => {
            let (min, ok) = solve(t, false)?;
            Ok(verdict(min, ok, tol))
        }
        Condition::Sec => {
            let s = trace_reversed(t)?;
            let (min, ok) = solve(&s, false)?;
            Ok(verdict(min, ok, verdict_tolerance(&s)))
        }
        Condition::Dec => {
            let (weak, ok_w) = solve(t, false)?;
            // -g(Z, Z) = -Xᵀ (T η T) X
            let s = -(&t.components * eta(m) * &t.components);
            let s = EnergyMomentumTensor::new((&s + s.transpose()) * 0.5, t.sector);
            let (causal, ok_c) = solve(&s, false)?;
            // -g(Z, n) = T_00 + b·ξ, minimized at ξ = -b/|b|.
            let b = t.components.view((1, 0), (m - 1, 1)).column(0).into_owned();
            let bn = b.norm();
            let future = t.components[(0, 0)] - bn;
            let future_arg = if bn > 0.0 { -&b / bn } else { DVector::zeros(m - 1) };
            let tol_c = 1e-10 * t.components.amax().max(1.0).powi(2);
            let parts = [
                (status_of(weak.value, tol, ok_w), weak.value / tol.max(f64::MIN_POSITIVE), weak.argmin.clone()),
                (status_of(causal.value, tol_c, ok_c), causal.value / tol_c, causal.argmin.clone()),
                (status_of(future, tol, true), future / tol, future_arg),
            ];
            let status = parts
                .iter()
                .fold(Status::Holds, |acc, p| acc.combine(p.0));
            // Witness from the most negative part relative to its tolerance.
            let worst = parts
                .iter()
                .enumerate()
                .min_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let margins = [weak.value, causal.value, future];
            Ok(ConditionVerdict {
                condition,
                status,
                margin: margins[worst],
                witness: parts[worst].2.clone(),
                tolerance: if worst == 1 { tol_c } else { tol },
                dec: Some(DecMargins {
                    weak: weak.value,
                    causal: causal.value,
                    future,
                }),
            })
        }
    }
}

fn check_xi(xi: &DVector<f64>) -> Result<f64> {
    let r = xi.norm();
    if r > 1.0 + 1e-12 {
        return Err(Error::Parameter(format!("|xi| = {r} exceeds 1")));
    }
    Ok(r)
}

/// `T^Higgs(n + ξ, n + ξ)` as the completed square with
/// `γ² = (1 + |ξ|²)/2`. `dn = ∇_n Φ`, `d[i] = (DΦ)_i`.
pub fn higgs_txx_closed_form(dn: &CVector, d: &[CVector], u: f64, xi: &DVector<f64>) -> Result<f64> {
    let r = check_xi(xi)?;
    if d.len() != xi.len() {
        return Err(Error::Shape("spatial derivative count differs from xi".into()));
    }
    let gamma = ((1.0 + r * r) / 2.0).sqrt();
    let mut dxi = CVector::zeros(dn.len());
    for (di, x) in d.iter().zip(xi.iter()) {
        dxi += di * crate::C64::new(*x, 0.0);
    }
    let d2: f64 = d.iter().map(|v| v.norm_squared()).sum();
    let square = (dn * crate::C64::new(gamma, 0.0) + &dxi * crate::C64::new(1.0 / gamma, 0.0))
        .norm_squared();
    Ok(square + 0.5 * (1.0 - r * r) * (d2 - dxi.norm_squared() / (gamma * gamma) + u))
}

/// `E(ξ)`, `ξ⌟B` and `H = -ξ/|ξ|² ⊗ E(ξ) + ξ⌟B`.
fn ym_pieces(
    em: &ElectricMagnetic,
    xi: &DVector<f64>,
) -> (DVector<f64>, Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let k = em.electric.len();
    let n = em.electric.first().map(|e| e.len()).unwrap_or(0);
    let mut e_xi = DVector::zeros(n);
    for i in 0..k {
        e_xi += &em.electric[i] * xi[i];
    }
    let xi_b: Vec<DVector<f64>> = (0..k)
        .map(|j| {
            let mut v = DVector::zeros(n);
            for i in 0..k {
                v += &em.magnetic[i][j] * xi[i];
            }
            v
        })
        .collect();
    let r2 = xi.norm_squared();
    let h = (0..k)
        .map(|j| &xi_b[j] - &e_xi * (xi[j] / r2))
        .collect();
    (e_xi, xi_b, h)
}

fn completed(em: &ElectricMagnetic, h: &[DVector<f64>], c: f64) -> f64 {
    em.electric
        .iter()
        .zip(h)
        .map(|(e, hj)| (e * c + hj / c).norm_squared())
        .sum()
}

/// `T^YM(n + ξ, n + ξ)` as the completed square with `γ² = (1 + |ξ|²)/2`.
pub fn ym_txx_closed_form(em: &ElectricMagnetic, xi: &DVector<f64>) -> Result<f64> {
    let r = check_xi(xi)?;
    if r == 0.0 {
        return Ok(0.5 * (em.electric_sq() + em.magnetic_sq()));
    }
    let (e_xi, xi_b, h) = ym_pieces(em, xi);
    let r2 = r * r;
    let g2 = (1.0 + r2) / 2.0;
    let xb2: f64 = xi_b.iter().map(|v| v.norm_squared()).sum();
    Ok(completed(em, &h, g2.sqrt())
        + (1.0 - r2) / (1.0 + r2) * e_xi.norm_squared()
        + 0.5 * (1.0 - r2) * (em.magnetic_sq() - xb2 / g2))
}

/// `(T^YM - Tr T/(m-2) g)(n + ξ, n + ξ)` as the completed square with
/// `κ² = (m - 3 + |ξ|²)/(m - 2)`.
pub fn ym_sec_closed_form(em: &ElectricMagnetic, xi: &DVector<f64>, m: usize) -> Result<f64> {
    let r = check_xi(xi)?;
    if m < 3 {
        return Err(Error::Parameter("the SEC needs m >= 3".into()));
    }
    let md = m as f64;
    if r == 0.0 {
        return Ok((md - 3.0) / (md - 2.0) * em.electric_sq() + em.magnetic_sq() / (md - 2.0));
    }
    let (e_xi, xi_b, h) = ym_pieces(em, xi);
    let r2 = r * r;
    let k2 = (md - 3.0 + r2) / (md - 2.0);
    let xb2: f64 = xi_b.iter().map(|v| v.norm_squared()).sum();
    Ok(completed(em, &h, k2.sqrt())
        + (md - 4.0 + r2) * (1.0 - r2) / (r2 * (md - 3.0 + r2)) * e_xi.norm_squared()
        + (1.0 - r2) / (md - 2.0) * (em.magnetic_sq() - xb2 / k2))
}

/// A violated verdict together with where it was found.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub point: Vec<f64>,
    pub sector: Sector,
    pub verdict: ConditionVerdict,
}

/// Verdicts of all four conditions for every sector at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointVerdicts {
    pub point: Vec<f64>,
    pub tensors: Vec<EnergyMomentumTensor>,
    /// Per tensor, the verdicts in the order of `Condition::ALL`.
    pub verdicts: Vec<Vec<ConditionVerdict>>,
}

/// Aggregate of one (sector, condition) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct TableEntry {
    pub sector: Sector,
    pub condition: Condition,
    pub status: Status,
    /// Smallest margin over all points.
    pub worst_margin: f64,
    /// First violation in point order.
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub points: Vec<PointVerdicts>,
    pub table: Vec<TableEntry>,
}

fn conditions_for(m: usize) -> Vec<Condition> {
    Condition::ALL
        .into_iter()
        .filter(|c| m >= 3 || *c != Condition::Sec)
        .collect()
}

/// Verdicts at one point.
pub fn point_verdicts(
    config: &FieldConfiguration,
    point: &[f64],
    stencil: &Stencil,
) -> Result<PointVerdicts> {
    let tensors = evaluate_tensors(config, point, stencil)?;
    let conds = conditions_for(config.dimension());
    let verdicts = tensors
        .iter()
        .map(|t| conds.iter().map(|c| check_condition(t, *c)).collect())
        .collect::<Result<Vec<_>>>()?;
    Ok(PointVerdicts {
        point: point.to_vec(),
        tensors,
        verdicts,
    })
}

/// Evaluates every condition for every sector at each region sample (in
/// parallel) and aggregates in point order.
pub fn classify(
    config: &FieldConfiguration,
    region: &Region,
    stencil: &Stencil,
) -> Result<Classification> {
    if region.is_empty() {
        return Err(Error::Parameter("empty region".into()));
    }
    if region.dimension() != config.dimension() {
        return Err(Error::Shape("region dimension differs from the scene".into()));
    }
    let points = region.points();
    let results = points
        .par_iter()
        .map(|x| point_verdicts(config, x, stencil))
        .collect::<Result<Vec<_>>>()?;
    let table = aggregate(&results);
    Ok(Classification {
        points: results,
        table,
    })
}

/// Aggregate table of per-point verdicts; cells follow the sector order of
/// the first point and `Condition::ALL`.
pub fn aggregate(points: &[PointVerdicts]) -> Vec<TableEntry> {
    let mut table: Vec<TableEntry> = Vec::new();
    for p in points {
        for (t, verdicts) in p.tensors.iter().zip(&p.verdicts) {
            for v in verdicts {
                let idx = table
                    .iter()
                    .position(|e| e.sector == t.sector && e.condition == v.condition);
                let entry = match idx {
                    Some(i) => &mut table[i],
                    None => {
                        table.push(TableEntry {
                            sector: t.sector,
                            condition: v.condition,
                            status: Status::Holds,
                            worst_margin: f64::INFINITY,
                            witness: None,
                        });
                        table.last_mut().expect("just pushed")
                    }
                };
                entry.status = entry.status.combine(v.status);
                entry.worst_margin = entry.worst_margin.min(v.margin);
                if v.status == Status::Violated && entry.witness.is_none() {
                    entry.witness = Some(Witness {
                        point: p.point.clone(),
                        sector: t.sector,
                        verdict: v.clone(),
                    });
                }
            }
        }
    }
    table
}

/// Scans candidate tensors in order and returns the index and verdict of the
/// first one that violates `condition`.
pub fn search_violation<I>(condition: Condition, candidates: I) -> Result<Option<(usize, ConditionVerdict)>>
where
    I: IntoIterator<Item = Result<EnergyMomentumTensor>>,
{
    for (i, t) in candidates.into_iter().enumerate() {
        let v = check_condition(&t?, condition)?;
        if v.status == Status::Violated {
            return Ok(Some((i, v)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{brute_force_min, brute_force_slack};

    fn fluid(rho: f64, p: f64) -> QuadraticForm {
        QuadraticForm::new(rho, DVector::zeros(3), DMatrix::identity(3, 3) * p)
    }

    #[test]
    fn perfect_fluid() {
        let m = minimize_quadratic_over_ball(&fluid(1.0, 0.5), false).unwrap();
        assert!((m.value - 1.0).abs() < 1e-15);
        assert!(!m.on_boundary);
        let m = minimize_quadratic_over_ball(&fluid(1.0, -0.4), false).unwrap();
        assert!((m.value - 0.6).abs() < 1e-14);
        assert!((m.argmin.norm() - 1.0).abs() < 1e-14);
        let m = minimize_quadratic_over_ball(&fluid(1.0, 0.5), true).unwrap();
        assert!((m.value - 1.5).abs() < 1e-14);
    }

    #[test]
    fn interior_minimizer() {
        let q = QuadraticForm::new(0.0, DVector::from_vec(vec![0.3, 0.0, 0.0]), DMatrix::identity(3, 3));
        let m = minimize_quadratic_over_ball(&q, false).unwrap();
        assert!((m.value + 0.09).abs() < 1e-15);
        assert!((m.argmin[0] + 0.3).abs() < 1e-15);
    }

    #[test]
    fn hard_case() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 2.0, 3.0]));
        let q = QuadraticForm::new(0.0, DVector::from_vec(vec![0.0, 0.5, 0.0]), a);
        let m = minimize_quadratic_over_ball(&q, true).unwrap();
        assert!((m.argmin.norm() - 1.0).abs() < 1e-14);
        assert!(m.kkt_residual < 1e-12);
        let (bf, _) = brute_force_min(&q, 20000, 2, true, 1);
        assert!(m.value <= bf + 1e-12);
        assert!(bf - m.value <= brute_force_slack(&q, 20000, 2, true));
    }

    #[test]
    fn rejects_asymmetric() {
        let mut a = DMatrix::identity(2, 2);
        a[(0, 1)] = 1.0;
        let q = QuadraticForm::new(0.0, DVector::zeros(2), a);
        assert!(matches!(minimize_quadratic_over_ball(&q, false), Err(Error::Contract(_))));
    }

    #[test]
    fn constant_potential_violates_sec() {
        let u = 0.7;
        for m in 3..7 {
            let t = EnergyMomentumTensor::new(eta(m) * (-0.5 * u), Sector::Higgs);
            let sec = check_condition(&t, Condition::Sec).unwrap();
            assert_eq!(sec.status, Status::Violated);
            assert!((sec.margin + u / (m as f64 - 2.0)).abs() < 1e-14);
            for c in [Condition::Nec, Condition::Wec, Condition::Dec] {
                assert_eq!(check_condition(&t, c).unwrap().status, Status::Holds, "{c}");
            }
        }
    }

    #[test]
    fn status_combination() {
        assert_eq!(Status::Holds.combine(Status::Inconclusive), Status::Inconclusive);
        assert_eq!(Status::Inconclusive.combine(Status::Violated), Status::Violated);
    }
}
