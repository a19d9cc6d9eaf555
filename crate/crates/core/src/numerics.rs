//! Finite-difference jets, sampling regions and the brute-force quadratic oracle.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::energycond::QuadraticForm;
use crate::error::{Error, Result};

/// Seed used for every randomized test and search unless overridden.
pub const DEFAULT_SEED: u64 = 0x5EED;

const FIRST_2: [(i32, f64); 2] = [(-1, -0.5), (1, 0.5)];
const FIRST_4: [(i32, f64); 4] = [
    (-2, 1.0 / 12.0),
    (-1, -8.0 / 12.0),
    (1, 8.0 / 12.0),
    (2, -1.0 / 12.0),
];
const SECOND_2: [(i32, f64); 3] = [(-1, 1.0), (0, -2.0), (1, 1.0)];
const SECOND_4: [(i32, f64); 5] = [
    (-2, -1.0 / 12.0),
    (-1, 16.0 / 12.0),
    (0, -30.0 / 12.0),
    (1, 16.0 / 12.0),
    (2, -1.0 / 12.0),
];

/// Central difference stencil of order 2 or 4 with step `h`.
///
/// First derivatives are exact on polynomials of degree `order`, pure second
/// derivatives on degree `order + 1`. Mixed second derivatives use the tensor
/// product of the first-derivative weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stencil {
    order: usize,
    h: f64,
}

impl Stencil {
    pub fn new(order: usize, h: f64) -> Result<Self> {
        if order != 2 && order != 4 {
            return Err(Error::Parameter(format!(
                "stencil order must be 2 or 4, got {order}"
            )));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Parameter(format!("step must be positive, got {h}")));
        }
        Ok(Self { order, h })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn with_h(&self, h: f64) -> Result<Self> {
        Self::new(self.order, h)
    }

    /// Offsets (in units of `h`) and weights; divide the sum by `h`.
    pub fn first_weights(&self) -> &'static [(i32, f64)] {
        if self.order == 2 {
            &FIRST_2
        } else {
            &FIRST_4
        }
    }

    /// Offsets and weights; divide the sum by `h²`.
    pub fn second_weights(&self) -> &'static [(i32, f64)] {
        if self.order == 2 {
            &SECOND_2
        } else {
            &SECOND_4
        }
    }

    /// First derivative of a vector-valued function of one real variable.
    pub fn derivative<F>(&self, f: F) -> Result<Vec<f64>>
    where
        F: Fn(f64) -> Result<Vec<f64>>,
    {
        let mut acc: Option<Vec<f64>> = None;
        for &(k, w) in self.first_weights() {
            let v = f(k as f64 * self.h)?;
            accumulate(&mut acc, &v, w / self.h)?;
        }
        Ok(acc.unwrap_or_default())
    }
}

fn minus(mut v: Vec<f64>, c: &[f64]) -> Result<Vec<f64>> {
    if v.len() != c.len() {
        return Err(Error::Shape(format!(
            "field returned {} components, expected {}",
            v.len(),
            c.len()
        )));
    }
    for (a, b) in v.iter_mut().zip(c) {
        *a -= b;
    }
    Ok(v)
}

fn accumulate(acc: &mut Option<Vec<f64>>, v: &[f64], w: f64) -> Result<()> {
    match acc {
        None => *acc = Some(v.iter().map(|x| w * x).collect()),
        Some(a) => {
            if a.len() != v.len() {
                return Err(Error::Shape(format!(
                    "field returned {} components, expected {}",
                    v.len(),
                    a.len()
                )));
            }
            for (ai, vi) in a.iter_mut().zip(v) {
                *ai += w * vi;
            }
        }
    }
    Ok(())
}

/// Coordinate derivatives of a vector-valued field at a point.
#[derive(Clone, Debug)]
pub struct RawJet {
    pub value: Vec<f64>,
    /// `first[mu][k] = ∂_mu f_k`
    pub first: Vec<Vec<f64>>,
    /// `second[mu][nu][k] = ∂_mu ∂_nu f_k`, present for depth 2
    pub second: Option<Vec<Vec<Vec<f64>>>>,
}

fn eval_at<F>(f: &F, x: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    match f(x) {
        Ok(v) => Ok(v),
        Err(e @ Error::Evaluation { .. }) => Err(e),
        Err(e) => Err(Error::Evaluation {
            point: x.to_vec(),
            message: e.to_string(),
        }),
    }
}

/// Finite-difference jet of `f` at `point` to `depth` 1 or 2.
pub fn fd_jet<F>(f: &F, point: &[f64], stencil: &Stencil, depth: usize) -> Result<RawJet>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    if depth == 0 || depth > 2 {
        return Err(Error::Parameter(format!("jet depth must be 1 or 2, got {depth}")));
    }
    let m = point.len();
    let h = stencil.h();
    let value = eval_at(f, point)?;
    let mut x = point.to_vec();

    let mut first = Vec::with_capacity(m);
    for mu in 0..m {
        let mut acc = None;
        // Antisymmetric pairs so constants cancel exactly.
        for &(k, w) in stencil.first_weights().iter().filter(|p| p.0 > 0) {
            x[mu] = point[mu] + k as f64 * h;
            let plus = eval_at(f, &x)?;
            x[mu] = point[mu] - k as f64 * h;
            let v = minus(plus, &eval_at(f, &x)?)?;
            accumulate(&mut acc, &v, w / h)?;
        }
        x[mu] = point[mu];
        first.push(acc.unwrap_or_default());
    }

    let second = if depth == 2 {
        let n = value.len();
        let mut second = vec![vec![vec![0.0; n]; m]; m];
        let h2 = h * h;
        for mu in 0..m {
            let mut acc = None;
            // Differences against the centre value so constants cancel exactly.
            for &(k, w) in stencil.second_weights() {
                if k == 0 {
                    continue;
                }
                x[mu] = point[mu] + k as f64 * h;
                let v = minus(eval_at(f, &x)?, &value)?;
                accumulate(&mut acc, &v, w / h2)?;
            }
            x[mu] = point[mu];
            second[mu][mu] = acc.unwrap_or_default();
            for nu in 0..mu {
                let mut acc = None;
                for &(k, wk) in stencil.first_weights() {
                    for &(l, wl) in stencil.first_weights() {
                        x[mu] = point[mu] + k as f64 * h;
                        x[nu] = point[nu] + l as f64 * h;
                        let v = minus(eval_at(f, &x)?, &value)?;
                        accumulate(&mut acc, &v, wk * wl / h2)?;
                    }
                }
                x[mu] = point[mu];
                x[nu] = point[nu];
                let d = acc.unwrap_or_default();
                second[nu][mu] = d.clone();
                second[mu][nu] = d;
            }
        }
        Some(second)
    } else {
        None
    };

    Ok(RawJet { value, first, second })
}

/// Observed convergence order from errors at steps `h` and `h / ratio`.
pub fn observed_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse / fine).ln() / ratio.ln()
}

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Axis-aligned box of sample points.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub center: Vec<f64>,
    pub half_widths: Vec<f64>,
    pub samples: Vec<usize>,
}

impl Region {
    pub fn new(center: Vec<f64>, half_widths: Vec<f64>, samples: Vec<usize>) -> Result<Self> {
        if center.len() != half_widths.len() || center.len() != samples.len() {
            return Err(Error::Shape(
                "region center, half_widths and samples must have equal length".into(),
            ));
        }
        if half_widths.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Parameter("region half-widths must be non-negative".into()));
        }
        Ok(Self {
            center,
            half_widths,
            samples,
        })
    }

    pub fn dimension(&self) -> usize {
        self.center.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.iter().any(|&n| n == 0)
    }

    fn axes(&self) -> Vec<Vec<f64>> {
        self.center
            .iter()
            .zip(&self.half_widths)
            .zip(&self.samples)
            .map(|((c, w), &n)| {
                if n == 1 {
                    vec![*c]
                } else {
                    linspace(c - w, c + w, n)
                }
            })
            .collect()
    }

    /// Sample points in lexicographic order, last axis fastest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let axes = self.axes();
        let mut out = vec![vec![]];
        for axis in &axes {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for p in &out {
                for &v in axis {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            out = next;
        }
        if axes.is_empty() {
            vec![]
        } else {
            out
        }
    }

    /// Tensor-product trapezoid weights matching [`Region::points`].
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let axis_w: Vec<Vec<f64>> = self
            .half_widths
            .iter()
            .zip(&self.samples)
            .map(|(w, &n)| {
                if n < 2 {
                    return vec![2.0 * w; n];
                }
                let dx = 2.0 * w / (n - 1) as f64;
                (0..n)
                    .map(|i| if i == 0 || i == n - 1 { 0.5 * dx } else { dx })
                    .collect()
            })
            .collect();
        let mut out = vec![1.0];
        for ws in &axis_w {
            let mut next = Vec::with_capacity(out.len() * ws.len());
            for p in &out {
                for w in ws {
                    next.push(p * w);
                }
            }
            out = next;
        }
        out
    }
}

/// Deterministic unit directions in `dim` dimensions.
///
/// Dimension 3 uses a Fibonacci lattice; other dimensions normalize seeded
/// Gaussian draws.
pub fn sample_directions(dim: usize, n: usize, seed: u64) -> Vec<DVector<f64>> {
    match dim {
        0 => vec![],
        1 => (0..n.max(2))
            .map(|i| DVector::from_element(1, if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * i as f64;
                    DVector::from_vec(vec![r * phi.cos(), r * phi.sin(), z])
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let v = DVector::<f64>::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
                let norm = v.norm();
                if norm > 1e-12 {
                    out.push(v / norm);
                }
            }
            out
        }
    }
}

/// Approximate covering radius of `n` well-spread points on the unit sphere
/// in `dim` dimensions.
pub fn covering_radius(dim: usize, n: usize) -> f64 {
    match dim {
        0 | 1 => 0.0,
        2 => std::f64::consts::PI / n as f64,
        3 => 2.0 * (2.0 / n as f64).sqrt(),
        d => 3.0 * (1.0 / n as f64).powf(1.0 / (d as f64 - 1.0)),
    }
}

/// Sampled minimum of `q` over radii `linspace(0, 1, n_radii)` times
/// deterministic directions (or the unit sphere only).
pub fn brute_force_min(
    q: &QuadraticForm,
    n_dirs: usize,
    n_radii: usize,
    boundary_only: bool,
    seed: u64,
) -> (f64, DVector<f64>) {
    let dim = q.dim();
    if dim == 0 {
        return (q.c, DVector::zeros(0));
    }
    let radii = if boundary_only {
        vec![1.0]
    } else {
        linspace(0.0, 1.0, n_radii.max(2))
    };
    let mut best = f64::INFINITY;
    let mut arg = DVector::zeros(dim);
    for d in sample_directions(dim, n_dirs, seed) {
        let bd = q.b.dot(&d);
        let dad = (&q.a * &d).dot(&d);
        for &r in &radii {
            let v = q.c + 2.0 * r * bd + r * r * dad;
            if v < best {
                best = v;
                arg = &d * r;
            }
        }
    }
    (best, arg)
}

/// Upper bound for `brute_force_min - exact_min` given the sampling density.
pub fn brute_force_slack(q: &QuadraticForm, n_dirs: usize, n_radii: usize, boundary_only: bool) -> f64 {
    let dim = q.dim();
    let angular = covering_radius(dim, n_dirs);
    let radial = if boundary_only {
        0.0
    } else {
        0.5 / (n_radii.max(2) - 1) as f64
    };
    let delta = angular + radial;
    // Interior minimizers have zero gradient; boundary ones have multiplier at
    // most |b| + |A| and the sphere itself is sampled at radius 1.
    2.0 * (2.0 * q.a.norm() + q.b.norm()) * delta * delta
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![3.0 + 2.0 * x[1], x[1] * x[2], x[0] * x[0] * x[0]])
    }

    #[test]
    fn affine_and_bilinear_are_exact() {
        // Dyadic point and step keep every intermediate exact.
        for order in [2, 4] {
            let s = Stencil::new(order, 0.125).unwrap();
            let j = fd_jet(&poly, &[0.375, -0.25, 0.75], &s, 2).unwrap();
            assert_eq!(j.first[1][0], 2.0);
            let mixed = j.second.as_ref().unwrap()[1][2][1];
            assert!((mixed - 1.0).abs() < 1e-13, "{mixed}");
        }
    }

    #[test]
    fn cubic_second_derivative_exact_at_order_two() {
        let s = Stencil::new(2, 0.1).unwrap();
        let j = fd_jet(&poly, &[0.3, 0.0, 0.0], &s, 2).unwrap();
        let d2 = j.second.unwrap()[0][0][2];
        assert!((d2 - 6.0 * 0.3).abs() < 1e-12);
    }

    #[test]
    fn sine_converges_at_second_order() {
        let s = Stencil::new(2, 0.1).unwrap();
        let f = |x: &[f64]| Ok(vec![x[0].sin()]);
        let err = |st: &Stencil| (fd_jet(&f, &[0.4], st, 1).unwrap().first[0][0] - 0.4f64.cos()).abs();
        let ratio = err(&s) / err(&s.with_h(0.05).unwrap());
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn rejects_bad_stencils() {
        assert!(Stencil::new(3, 0.1).is_err());
        assert!(Stencil::new(2, 0.0).is_err());
        assert!(Stencil::new(2, -1.0).is_err());
    }

    #[test]
    fn evaluation_failure_carries_location() {
        let s = Stencil::new(2, 0.5).unwrap();
        let f = |x: &[f64]| {
            if x[0] > 1.2 {
                Err(Error::Parameter("outside".into()))
            } else {
                Ok(vec![x[0]])
            }
        };
        match fd_jet(&f, &[1.0], &s, 1) {
            Err(Error::Evaluation { point, .. }) => assert_eq!(point, vec![1.5]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn region_weights_integrate_constants() {
        let r = Region::new(vec![0.0, 1.0], vec![0.5, 2.0], vec![5, 3]).unwrap();
        assert_eq!(r.points().len(), 15);
        let total: f64 = r.trapezoid_weights().iter().sum();
        assert!((total - 4.0).abs() < 1e-14);
    }

    #[test]
    fn directions_are_unit_and_deterministic() {
        for dim in [2, 3, 5] {
            let a = sample_directions(dim, 200, DEFAULT_SEED);
            let b = sample_directions(dim, 200, DEFAULT_SEED);
            assert_eq!(a, b);
            assert!(a.iter().all(|d| (d.norm() - 1.0).abs() < 1e-14));
        }
    }
}
