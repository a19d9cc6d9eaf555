#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use emtlab_core::clifford::{Chirality, TwistedModel, TwistedSpinorJet};
use emtlab_core::gauge::{
    build_lie_algebra, FieldConfiguration, FieldFn, FieldStrength, GaugeJet, HiggsJet, Potential,
    RepresentationModel, Theory, YukawaKind,
};
use emtlab_core::geometry::{
    eta, Christoffel, CurvatureData, DeSitter, Frame, MetricField, MetricFn, Minkowski,
};
use emtlab_core::{CMatrix, CVector, C64};

pub const SEED: u64 = 0x5EED;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

pub fn rvec(r: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| normal(r))
}

pub fn cvec(r: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| C64::new(normal(r), normal(r)))
}

pub fn symmetric(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| normal(r));
    (&a + a.transpose()) * 0.5
}

/// Orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn rotation(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| normal(r));
    a.qr().q()
}

pub fn random_f(r: &mut ChaCha8Rng, m: usize, n: usize) -> FieldStrength {
    let mut f = FieldStrength::zeros(m, n);
    for a in 0..m {
        for b in (a + 1)..m {
            f.set(a, b, rvec(r, n));
        }
    }
    f
}

pub fn random_higgs_jet(r: &mut ChaCha8Rng, m: usize, w: usize, depth: usize) -> HiggsJet {
    HiggsJet {
        value: cvec(r, w),
        first: (0..m).map(|_| cvec(r, w)).collect(),
        second: (depth == 2).then(|| {
            (0..m)
                .map(|_| (0..m).map(|_| cvec(r, w)).collect())
                .collect()
        }),
    }
}

pub fn random_spinor_jet(r: &mut ChaCha8Rng, model: &TwistedModel) -> TwistedSpinorJet {
    let n = model.dim();
    let m = model.clifford().dimension();
    TwistedSpinorJet {
        value: cvec(r, n),
        derivs: (0..m).map(|_| cvec(r, n)).collect(),
        chirality: Chirality::Full,
    }
}

/// Curvature data with a random symmetric Ricci tensor and matching scalar.
pub fn random_curvature(r: &mut ChaCha8Rng, m: usize) -> CurvatureData {
    let ricci = symmetric(r, m);
    let scal = (&ricci * eta(m)).trace();
    CurvatureData {
        frame: Frame::from_vectors(DMatrix::identity(m, m)),
        metric: eta(m),
        christoffel: Christoffel::zero(m),
        riemann: vec![0.0; m * m * m * m],
        ricci,
        scal,
        einstein: DMatrix::zeros(m, m),
        second_fundamental: DMatrix::zeros(m - 1, m - 1),
        mean_curvature: 0.0,
    }
}

/// A pointwise jet on flat data assembled from given sector inputs.
pub fn flat_jet(
    m: usize,
    f: FieldStrength,
    higgs: Option<HiggsJet>,
    spinor: Option<TwistedSpinorJet>,
    curvature: Option<CurvatureData>,
) -> GaugeJet {
    let n = f.algebra_dim();
    GaugeJet {
        point: vec![0.0; m],
        metric: eta(m),
        frame: Frame::from_vectors(DMatrix::identity(m, m)),
        christoffel: Christoffel::zero(m),
        curvature,
        connection: vec![DVector::zeros(n); m],
        field_strength: f,
        codifferential: None,
        higgs,
        spinor,
    }
}

/// Theory with the given algebra, Higgs representation and potential, a
/// trivial rank-one twist and no Yukawa coupling.
pub fn theory(m: usize, algebra: &str, higgs: Higgs, potential: Potential, yukawa: YukawaKind) -> Theory {
    let alg = build_lie_algebra(algebra).unwrap();
    let rho = match higgs {
        Higgs::Trivial(d) => RepresentationModel::trivial(&alg, d),
        Higgs::Charge(q) => RepresentationModel::u1_charge(&alg, q, 1).unwrap(),
        Higgs::Su2 => RepresentationModel::su2_fundamental(&alg).unwrap(),
    };
    let twist = match higgs {
        Higgs::Charge(q) => RepresentationModel::u1_charge(&alg, 0.5 * q, 1).unwrap(),
        _ => RepresentationModel::trivial(&alg, 1),
    };
    Theory::new(m, alg, rho, twist, None, potential, yukawa).unwrap()
}

#[derive(Clone, Copy, Debug)]
pub enum Higgs {
    Trivial(usize),
    Charge(f64),
    Su2,
}

/// `f_j(x) = a_j + b_j·x + c_j sin(k_j·x + φ_j)` for `j < len`.
pub fn analytic_field(r: &mut ChaCha8Rng, m: usize, len: usize, amplitude: f64) -> FieldFn {
    let terms: Vec<(f64, DVector<f64>, f64, DVector<f64>, f64)> = (0..len)
        .map(|_| {
            (
                amplitude * normal(r),
                rvec(r, m) * (0.3 * amplitude),
                amplitude * normal(r),
                rvec(r, m),
                r.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    Arc::new(move |x: &[f64]| {
        let x = DVector::from_column_slice(x);
        Ok(terms
            .iter()
            .map(|(a, b, c, k, p)| a + b.dot(&x) + c * (k.dot(&x) + p).sin())
            .collect())
    })
}

/// Smooth Lorentzian perturbation `η + ε S(x)` of Minkowski space.
pub fn perturbed_metric(r: &mut ChaCha8Rng, m: usize, eps: f64) -> Arc<dyn MetricField> {
    let s0 = symmetric(r, m);
    let s1 = symmetric(r, m);
    let k = rvec(r, m);
    Arc::new(MetricFn {
        dimension: m,
        f: move |x: &[f64]| {
            let phase = k.dot(&DVector::from_column_slice(x));
            Ok(eta(m) + (&s0 * phase.sin() + &s1 * (0.5 * phase).cos()) * eps)
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Background {
    Flat,
    DeSitter,
    Perturbed,
}

pub fn background(r: &mut ChaCha8Rng, kind: Background, m: usize) -> Arc<dyn MetricField> {
    match kind {
        Background::Flat => Arc::new(Minkowski { dimension: m }),
        Background::DeSitter => Arc::new(DeSitter {
            dimension: m,
            hubble: 0.3 + 0.4 * r.random::<f64>(),
        }),
        Background::Perturbed => perturbed_metric(r, m, 0.05),
    }
}

/// Random off-shell gauge and Higgs scene: u(1) with a charged Higgs or su(2)
/// with the fundamental, Mexican-hat potential.
pub fn random_gauge_higgs_scene(seed: u64, m: usize, kind: Background) -> FieldConfiguration {
    let mut r = rng(seed);
    let su2 = seed % 2 == 1;
    let lambda = 0.5 + r.random::<f64>();
    let mu = 0.5 + r.random::<f64>();
    let (alg, higgs) = if su2 {
        ("su2", Higgs::Su2)
    } else {
        ("u1", Higgs::Charge(0.5 + r.random::<f64>()))
    };
    let th = theory(
        m,
        alg,
        higgs,
        Potential::mexican_hat(lambda, mu).unwrap(),
        YukawaKind::Zero,
    );
    let n = th.algebra.dim();
    let w = th.higgs.dim();
    let metric = background(&mut r, kind, m);
    let a = analytic_field(&mut r, m, m * n, 0.5);
    let phi = analytic_field(&mut r, m, 2 * w, 0.5);
    FieldConfiguration::new(Arc::new(th), metric)
        .unwrap()
        .with_connection(a)
        .with_higgs(phi)
}

/// Random charged Dirac field coupled to a random u(1) connection.
pub fn random_dirac_scene(seed: u64, m: usize, kind: Background) -> FieldConfiguration {
    let mut r = rng(seed);
    let alg = build_lie_algebra("u1").unwrap();
    let q = 0.5 + r.random::<f64>();
    let th = Theory::new(
        m,
        alg.clone(),
        RepresentationModel::trivial(&alg, 1),
        RepresentationModel::u1_charge(&alg, q, 1).unwrap(),
        None,
        Potential::None,
        YukawaKind::Mass { mass: 1.0 },
    )
    .unwrap();
    let n = th.twisted.dim();
    let metric = background(&mut r, kind, m);
    let a = analytic_field(&mut r, m, m, 0.5);
    let psi = analytic_field(&mut r, m, 2 * n, 0.5);
    FieldConfiguration::new(Arc::new(th), metric)
        .unwrap()
        .with_connection(a)
        .with_spinor(psi, Chirality::Full)
}

pub fn random_point(r: &mut ChaCha8Rng, m: usize, half: f64) -> Vec<f64> {
    (0..m).map(|_| r.random_range(-half..half)).collect()
}

pub fn complex_identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}
