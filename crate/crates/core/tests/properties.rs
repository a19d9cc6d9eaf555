mod common;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use common::*;
use emtlab_core::clifford::{build_clifford_model, dirac_apply, Chirality, TwistedModel, TwistedSpinorJet};
use emtlab_core::emt::{
    divergence_identity_check, emt_higgs, emt_yang_mills, evaluate_tensors, tensor_divergence,
    EnergyMomentumTensor, Sector,
};
use emtlab_core::energycond::{
    check_condition, minimize_quadratic_over_ball, Condition, QuadraticForm, Status,
};
use emtlab_core::gauge::{
    build_lie_algebra, covariant_jet, currents, FieldConfiguration, FieldFn, Potential,
    YukawaKind, YukawaModel,
};
use emtlab_core::geometry::{
    build_frame, curvature_package, eta, AdmData, CausalDirection, DeSitter,
};
use emtlab_core::numerics::{brute_force_min, fd_jet, observed_order, sample_directions, Stencil};
use emtlab_core::{CMatrix, CVector, C64};

fn full_rotation(r: &DMatrix<f64>) -> DMatrix<f64> {
    let m = r.nrows() + 1;
    let mut full = DMatrix::identity(m, m);
    full.view_mut((1, 1), (m - 1, m - 1)).copy_from(r);
    full
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn frame_gram_is_eta(seed in any::<u64>(), m in 2usize..=6) {
        let mut r = rng(seed);
        let k = m - 1;
        let l = DMatrix::from_fn(k, k, |_, _| normal(&mut r));
        let spatial = &l * l.transpose() + DMatrix::identity(k, k) * 0.1;
        let adm = AdmData::new(0.2 + normal(&mut r).abs(), rvec(&mut r, k), spatial).unwrap();
        let g = adm.metric();
        let gram = build_frame(&adm).gram(&g);
        let scale = g.amax().max(1.0);
        prop_assert!((gram - eta(m)).amax() <= 1e-12 * scale);
    }

    #[test]
    fn causal_type_is_rotation_invariant(seed in any::<u64>(), k in 1usize..=5, radius in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let dir = rvec(&mut r, k);
        let radius = if seed % 3 == 0 { 1.0 } else { radius };
        let xi = &dir / dir.norm() * radius;
        let rot = rotation(&mut r, k);
        let a = CausalDirection::new(xi.clone()).unwrap();
        let b = CausalDirection::new(&rot * xi).unwrap();
        prop_assert_eq!(a.classify(), b.classify());
    }

    #[test]
    fn clifford_multiplication_squares_and_pairs(seed in any::<u64>(), m in 2usize..=6) {
        let mut r = rng(seed);
        let c = build_clifford_model(m).unwrap();
        let n = c.spinor_dim();
        let x: Vec<f64> = (0..m).map(|_| normal(&mut r)).collect();
        let xv = DVector::from_column_slice(&x);
        let gx = (eta(m) * &xv).dot(&xv);
        let cx = c.clifford_vector(&x);
        let id = CMatrix::identity(n, n);
        prop_assert!((&cx * &cx + &id * C64::new(gx, 0.0)).norm() <= 1e-13 * (1.0 + gx.abs()));
        let psi = cvec(&mut r, n);
        let phi = cvec(&mut r, n);
        let d = c.pair(&(&cx * &psi), &phi) - c.pair(&psi, &(&cx * &phi));
        prop_assert!(d.norm() <= 1e-13 * psi.norm() * phi.norm() * xv.norm());
    }

    #[test]
    fn i_times_clifford_is_skew(seed in any::<u64>(), m in 2usize..=6) {
        let mut r = rng(seed);
        let c = build_clifford_model(m).unwrap();
        let psi = cvec(&mut r, c.spinor_dim());
        for a in 0..m {
            let v = c.gamma(a) * &psi * C64::new(0.0, 1.0);
            prop_assert!(c.pair(&psi, &v).re.abs() <= 1e-13 * psi.norm_squared());
        }
    }

    #[test]
    fn mexican_hat_is_non_negative(seed in any::<u64>(), lambda in 0.01f64..5.0, mu in 0.0f64..5.0, w in 1usize..4) {
        let mut r = rng(seed);
        let phi = cvec(&mut r, w);
        let (u, _) = Potential::mexican_hat(lambda, mu).unwrap().evaluate(&phi, None, 4).unwrap();
        prop_assert!(u >= 0.0);
    }

    #[test]
    fn potential_gradient_matches_directional_derivative(seed in any::<u64>(), lambda in 0.1f64..3.0, mu in 0.0f64..3.0) {
        let mut r = rng(seed);
        let pot = Potential::mexican_hat(lambda, mu).unwrap();
        let phi = cvec(&mut r, 2);
        let alpha = cvec(&mut r, 2);
        let h = 1e-5;
        let u = |t: f64| pot.evaluate(&(&phi + &alpha * C64::new(t, 0.0)), None, 4).unwrap().0;
        let fd = (u(h) - u(-h)) / (2.0 * h);
        let (_, grad) = pot.evaluate(&phi, None, 4).unwrap();
        let exact = alpha.dotc(&grad).re;
        prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()));
    }

    #[test]
    fn yukawa_duality(seed in any::<u64>(), w in 1usize..3, vp in 1usize..3, vm in 1usize..3, antilinear in any::<bool>(), m in prop::sample::select(vec![2usize, 4, 6])) {
        let mut r = rng(seed);
        let t = TwistedModel::new(build_clifford_model(m).unwrap(), vp, vm).unwrap();
        let couplings: Vec<CMatrix> = (0..w)
            .map(|_| CMatrix::from_fn(vm, vp, |_, _| C64::new(normal(&mut r), normal(&mut r))))
            .collect();
        for kind in [YukawaKind::Zero, YukawaKind::Block { couplings, antilinear }] {
            let y = YukawaModel::new(kind, w, &t).unwrap();
            let psi = cvec(&mut r, t.dim());
            let phi = cvec(&mut r, w);
            let j3 = y.dual(&t, &psi).unwrap();
            let lhs = 2.0 * phi.dotc(&j3).re;
            let rhs = y.pairing(&t, &phi, &psi).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            // i Y is self-adjoint for the pairing
            let iy = y.matrix(&phi).unwrap() * C64::new(0.0, 1.0);
            let chi = cvec(&mut r, t.dim());
            let d = t.pair(&(&iy * &psi), &chi) - t.pair(&psi, &(&iy * &chi));
            prop_assert!(d.norm() <= 1e-12 * (1.0 + psi.norm() * chi.norm() * iy.norm()));
        }
    }

    #[test]
    fn solver_is_certified(seed in any::<u64>(), k in 1usize..=5, sphere in any::<bool>()) {
        let mut r = rng(seed);
        let q = QuadraticForm::new(normal(&mut r), rvec(&mut r, k), symmetric(&mut r, k));
        let m = minimize_quadratic_over_ball(&q, sphere).unwrap();
        prop_assert!((q.value(&m.argmin) - m.value).abs() <= 1e-12 * (1.0 + q.c.abs()));
        prop_assert!(m.argmin.norm() <= 1.0 + 1e-9);
        if m.on_boundary {
            let lmin = q.a.clone().symmetric_eigen().eigenvalues.min();
            let floor = if sphere { -lmin } else { (-lmin).max(0.0) };
            prop_assert!(m.kkt_residual <= 1e-10);
            prop_assert!(m.multiplier >= floor - 1e-10);
        }
        let (bf, _) = brute_force_min(&q, 2000, 20, sphere, seed);
        prop_assert!(bf >= m.value - 1e-12);
    }

    #[test]
    fn sphere_minimum_dominates_ball_minimum(seed in any::<u64>(), k in 1usize..=5) {
        let mut r = rng(seed);
        let q = QuadraticForm::new(normal(&mut r), rvec(&mut r, k), symmetric(&mut r, k));
        let ball = minimize_quadratic_over_ball(&q, false).unwrap();
        let sphere = minimize_quadratic_over_ball(&q, true).unwrap();
        prop_assert!(sphere.value >= ball.value - 1e-12);
    }

    #[test]
    fn minima_are_rotation_invariant(seed in any::<u64>(), k in 1usize..=5, sphere in any::<bool>()) {
        let mut r = rng(seed);
        let q = QuadraticForm::new(normal(&mut r), rvec(&mut r, k), symmetric(&mut r, k));
        let rot = rotation(&mut r, k);
        let a = minimize_quadratic_over_ball(&q, sphere).unwrap();
        let b = minimize_quadratic_over_ball(&q.rotated(&rot), sphere).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-12 * (1.0 + a.value.abs()));
    }

    #[test]
    fn yang_mills_sec_equals_wec_in_four_dimensions(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let t = emt_yang_mills(&random_f(&mut r, 4, n));
        let w = check_condition(&t, Condition::Wec).unwrap();
        let s = check_condition(&t, Condition::Sec).unwrap();
        prop_assert_eq!(w.status, s.status);
        prop_assert!((w.margin - s.margin).abs() <= 1e-12 * (1.0 + t.components.amax()));
    }

    #[test]
    fn verdicts_and_scalars_are_frame_independent(seed in any::<u64>(), m in 3usize..=6) {
        let mut r = rng(seed);
        let rot = rotation(&mut r, m - 1);
        let full = full_rotation(&rot);
        let f = random_f(&mut r, m, 2);
        let jet = random_higgs_jet(&mut r, m, 2, 1);
        let pot = Potential::mexican_hat(1.0, 0.5).unwrap();
        let pairs = [
            (emt_yang_mills(&f), emt_yang_mills(&f.transform(&full))),
            (emt_higgs(&jet, &pot).unwrap(), emt_higgs(&jet.transform(&full), &pot).unwrap()),
        ];
        prop_assert!((f.norm_sq() - f.transform(&full).norm_sq()).abs() <= 1e-10);
        let x = rvec(&mut r, m);
        let x_rot = full.transpose() * &x;
        for (t, t_rot) in &pairs {
            let scale = t.components.amax().max(1.0);
            prop_assert!((t.rotated(&rot).unwrap().components - &t_rot.components).amax() <= 1e-10 * scale);
            prop_assert!((t.trace() - t_rot.trace()).abs() <= 1e-10 * scale);
            prop_assert!((t.value(&x) - t_rot.value(&x_rot)).abs() <= 1e-10 * scale * x.norm_squared());
            for c in Condition::ALL {
                let a = check_condition(t, c).unwrap();
                let b = check_condition(t_rot, c).unwrap();
                prop_assert_eq!(a.status, b.status);
                prop_assert!((a.margin - b.margin).abs() <= 1e-10 * scale * scale);
            }
        }
    }
}

fn dec_sampled(t: &EnergyMomentumTensor, dirs: &[DVector<f64>]) -> (f64, f64) {
    let m = t.dimension();
    let g = eta(m);
    let (mut causal, mut future) = (f64::INFINITY, f64::INFINITY);
    for d in dirs {
        for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let mut x = DVector::zeros(m);
            x[0] = 1.0;
            x.rows_mut(1, m - 1).copy_from(&(d * s));
            // Z^a = -η^{ab} T_bc X^c
            let z = -(&g * &t.components * &x);
            causal = causal.min(-(&g * &z).dot(&z));
            future = future.min(z[0]);
        }
    }
    (causal, future)
}

#[test]
fn dec_agrees_with_sampling() {
    let mut r = rng(SEED);
    let dirs = sample_directions(3, 4000, SEED);
    let mut decided = 0;
    for i in 0..200 {
        let rho = normal(&mut r).abs() + 0.1;
        let p = rho * (2.4 * normal(&mut r).tanh());
        let mut c = DMatrix::identity(4, 4) * p;
        c[(0, 0)] = rho;
        let noise = symmetric(&mut r, 4) * (0.3 * rho * (i % 3) as f64);
        let t = EnergyMomentumTensor::new(c + noise, Sector::Total);
        let v = check_condition(&t, Condition::Dec).unwrap();
        let dec = v.dec.clone().unwrap();
        let (causal, future) = dec_sampled(&t, &dirs);
        assert!(causal >= dec.causal - 1e-12, "{causal} {}", dec.causal);
        assert!(future >= dec.future - 1e-12, "{future} {}", dec.future);
        let clear = |exact: f64, sampled: f64| exact.abs() > 1e-2 && sampled.abs() > 1e-2;
        if clear(dec.causal, causal) {
            assert_eq!(dec.causal < 0.0, causal < 0.0, "tensor {i}");
            decided += 1;
        }
        if clear(dec.future, future) {
            assert_eq!(dec.future < 0.0, future < 0.0, "tensor {i}");
        }
        let sampled_violation = causal < -v.tolerance.max(1e-9) || future < -1e-9;
        if sampled_violation {
            assert_eq!(v.status, Status::Violated);
        }
    }
    assert!(decided > 100);
}

#[test]
fn ad_invariance_of_built_algebras() {
    for spec in ["u1", "su2", "su3", "su2+u1", "su3+su2+u1"] {
        let a = build_lie_algebra(spec).unwrap();
        assert!(a.ad_invariance_residual() <= 1e-14, "{spec}");
    }
}

#[test]
fn sector_tensors_are_symmetric_and_add_up() {
    let mut r = rng(SEED);
    for i in 0..8u64 {
        let mut config = random_gauge_higgs_scene(SEED + i, 4, Background::Perturbed);
        if i % 2 == 0 {
            let psi = analytic_field(&mut r, 4, 2 * config.theory.twisted.dim(), 0.5);
            config = config.with_spinor(psi, Chirality::Full);
        }
        let x = random_point(&mut r, 4, 0.3);
        let ts = evaluate_tensors(&config, &x, &Stencil::new(4, 1e-3).unwrap()).unwrap();
        let (total, parts) = ts.split_last().unwrap();
        assert_eq!(total.sector, Sector::Total);
        let mut sum = DMatrix::zeros(4, 4);
        for t in parts {
            assert!(t.symmetry_defect() <= 1e-12 * t.components.amax().max(1.0));
            sum += &t.components;
        }
        assert_eq!(sum, total.components);
    }
}

#[test]
fn abelian_gauge_covariance() {
    let stencil = Stencil::new(4, 1e-3).unwrap();
    let mut r = rng(SEED);
    for i in 0..4u64 {
        let base = random_gauge_higgs_scene(2 * i, 4, Background::Flat);
        let q = base.theory.higgs.image(0)[(0, 0)].im;
        let theta = analytic_field(&mut r, 4, 1, 0.8);
        let dtheta = {
            let theta = theta.clone();
            move |x: &[f64]| -> Vec<f64> {
                let raw = fd_jet(&|y: &[f64]| theta(y), x, &Stencil::new(4, 1e-3).unwrap(), 1).unwrap();
                raw.first.iter().map(|d| d[0]).collect()
            }
        };
        let a0 = base.connection.clone().unwrap();
        let p0 = base.higgs.clone().unwrap();
        let a1: FieldFn = Arc::new(move |x: &[f64]| {
            let a = a0(x)?;
            Ok(a.iter().zip(dtheta(x)).map(|(a, d)| a - d).collect())
        });
        let th = theta.clone();
        let p1: FieldFn = Arc::new(move |x: &[f64]| {
            let v = p0(x)?;
            let phase = C64::from_polar(1.0, q * th(x)?[0]);
            let z = C64::new(v[0], v[1]) * phase;
            Ok(vec![z.re, z.im])
        });
        let gauged = FieldConfiguration::new(base.theory.clone(), base.metric.clone())
            .unwrap()
            .with_connection(a1)
            .with_higgs(p1);
        let x = random_point(&mut r, 4, 0.3);
        let j0 = covariant_jet(&base, &x, &stencil, 1).unwrap();
        let j1 = covariant_jet(&gauged, &x, &stencil, 1).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let d = j0.field_strength.component(a, b) - j1.field_strength.component(a, b);
                assert!(d.norm() <= 1e-7, "F {a}{b}: {}", d.norm());
            }
        }
        let c0 = currents(&j0, &base.theory).unwrap();
        let c1 = currents(&j1, &gauged.theory).unwrap();
        for a in 0..4 {
            assert!((&c0.j1[a] - &c1.j1[a]).norm() <= 1e-7);
        }
    }
}

#[test]
fn flipped_divergence_sign_fails() {
    let config = random_gauge_higgs_scene(SEED, 4, Background::Flat);
    let x = [0.1, -0.2, 0.05, 0.15];
    let s = Stencil::new(4, 1e-3).unwrap();
    let res = divergence_identity_check(&config, &x, &s, &s, false).unwrap();
    let ym = res.yang_mills.unwrap();
    let div = tensor_divergence(&config, &x, &s, &s, Sector::YangMills).unwrap();
    // residual = div - rhs; the opposite convention gives div + rhs
    let flipped = 2.0 * &div - &ym;
    assert!(ym.norm() <= 1e-8, "{}", ym.norm());
    assert!(flipped.norm() > 1e-2, "{}", flipped.norm());
    // the negated divergence operator fails as well
    let negated = -&div - (&div - &ym);
    assert!(negated.norm() > 1e-2);
}

#[test]
fn stencils_are_exact_on_polynomials() {
    // Integer coefficients on dyadic points keep every sum exact.
    let point = [0.375, -0.25, 0.5];
    for order in [2usize, 4] {
        let s = Stencil::new(order, 0.125).unwrap();
        let f = |x: &[f64]| -> emtlab_core::Result<Vec<f64>> {
            let (a, b, c) = (x[0], x[1], x[2]);
            Ok(vec![
                3.0 + 2.0 * a - b + 4.0 * a * b - c * c,
                a * a * a - 2.0 * a * b * c + b * b * c,
            ])
        };
        let j = fd_jet(&f, &point, &s, 2).unwrap();
        let (a, b, c) = (point[0], point[1], point[2]);
        let tol = if order == 2 { 0.0 } else { 1e-13 };
        let first0 = [2.0 + 4.0 * b, -1.0 + 4.0 * a, -2.0 * c];
        for mu in 0..3 {
            assert!((j.first[mu][0] - first0[mu]).abs() <= tol, "{order} {mu}");
        }
        let second = j.second.unwrap();
        let hess1 = [
            [6.0 * a, -2.0 * c, -2.0 * b],
            [-2.0 * c, 2.0 * c, -2.0 * a + 2.0 * b],
            [-2.0 * b, -2.0 * a + 2.0 * b, 0.0],
        ];
        for mu in 0..3 {
            for nu in 0..3 {
                assert!((second[mu][nu][1] - hess1[mu][nu]).abs() <= tol.max(1e-13), "{order} {mu}{nu}");
            }
        }
    }
}

#[test]
fn curvature_converges_on_de_sitter() {
    let metric = DeSitter { dimension: 4, hubble: 0.7 };
    let x = [0.2, 0.1, -0.3, 0.4];
    let exact = 12.0 * 0.7 * 0.7;
    let err: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|h| {
            let c = curvature_package(&metric, &x, &Stencil::new(2, *h).unwrap()).unwrap();
            let bianchi = (0..4)
                .flat_map(|a| (0..4).flat_map(move |b| (0..4).flat_map(move |cc| (0..4).map(move |d| (a, b, cc, d)))))
                .map(|(a, b, cc, d)| (c.riemann(a, b, cc, d) + c.riemann(a, cc, d, b) + c.riemann(a, d, b, cc)).abs())
                .fold(0.0, f64::max);
            assert!(bianchi <= 1e-9);
            assert!((&c.ricci - c.ricci.transpose()).amax() <= 1e-9);
            (c.scal - exact).abs()
        })
        .collect();
    let p = observed_order(err[1], err[2], 2.0);
    assert!((1.7..=2.3).contains(&p), "order {p}");
}

#[test]
fn dirac_operator_is_symmetric_on_a_periodic_grid() {
    // Central differences with periodic wrap satisfy summation by parts, so
    // ⟨i𝔇Ψ, Φ⟩ = ⟨Ψ, i𝔇Φ⟩ for the discrete L² pairing.
    let m = 3;
    let n = 12;
    let model = TwistedModel::new(build_clifford_model(m).unwrap(), 1, 0).unwrap();
    let k = model.dim();
    let mut r = rng(SEED);
    let h = std::f64::consts::TAU / n as f64;
    let idx = |i: [usize; 3]| (i[0] * n + i[1]) * n + i[2];
    let random_field = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<CVector> {
        let modes: Vec<([f64; 3], CVector)> = (0..4)
            .map(|_| {
                let w = [normal(r).round(), normal(r).round(), normal(r).round()];
                (w, cvec(r, k))
            })
            .collect();
        let mut out = vec![CVector::zeros(k); n * n * n];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let x = [i as f64 * h, j as f64 * h, l as f64 * h];
                    let mut v = CVector::zeros(k);
                    for (w, c) in &modes {
                        v += c * C64::from_polar(1.0, w[0] * x[0] + w[1] * x[1] + w[2] * x[2]);
                    }
                    out[idx([i, j, l])] = v;
                }
            }
        }
        out
    };
    let i_dirac = |f: &[CVector]| -> Vec<CVector> {
        let mut out = vec![CVector::zeros(k); f.len()];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let p = [i, j, l];
                    let derivs: Vec<CVector> = (0..m)
                        .map(|mu| {
                            let mut up = p;
                            let mut dn = p;
                            up[mu] = (p[mu] + 1) % n;
                            dn[mu] = (p[mu] + n - 1) % n;
                            (&f[idx(up)] - &f[idx(dn)]) / C64::new(2.0 * h, 0.0)
                        })
                        .collect();
                    let jet = TwistedSpinorJet { value: f[idx(p)].clone(), derivs, chirality: Chirality::Full };
                    out[idx(p)] = dirac_apply(&model, &jet).unwrap().0 * C64::new(0.0, 1.0);
                }
            }
        }
        out
    };
    let pair = |a: &[CVector], b: &[CVector]| -> C64 { a.iter().zip(b).map(|(x, y)| model.pair(x, y)).sum() };
    let psi = random_field(&mut r);
    let phi = random_field(&mut r);
    let lhs = pair(&i_dirac(&psi), &phi);
    let rhs = pair(&psi, &i_dirac(&phi));
    let scale = pair(&psi, &psi).norm().max(pair(&phi, &phi).norm());
    assert!((lhs - rhs).norm() <= 1e-12 * scale, "{} vs {}", lhs, rhs);
}
