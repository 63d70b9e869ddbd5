//! Structural invariants of the Fourier-space model, checked through the public API.

use ewkv_core::data::{make_data, DataKind, InitialData};
use ewkv_core::elastic::{
    a_eta, assemble_matrices, from_first_order, m_eta, phi, to_first_order, FrequencyPoint, Mat4,
    Vec2, Vec4,
};
use ewkv_core::fit::fit_decay;
use ewkv_core::propagator::{block_propagator, Propagator};
use ewkv_core::radial::{solve_linear_radial, RadialGrid, RadialProfile};
use ewkv_core::spectra::{decompose, log_grid, rho};
use ewkv_core::{make_params, StateVector, SystemParams, C64};
use proptest::prelude::*;

fn p12() -> SystemParams {
    make_params(1.0, 2.0).unwrap()
}

fn cvec4(v: [f64; 8]) -> Vec4 {
    Vec4::new(
        C64::new(v[0], v[1]),
        C64::new(v[2], v[3]),
        C64::new(v[4], v[5]),
        C64::new(v[6], v[7]),
    )
}

fn frob(m: &Mat4) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn reflection_is_an_involution_and_diagonalizes(
        theta in 0.0..std::f64::consts::TAU,
        a in 0.2f64..3.0,
        gap in 0.01f64..3.0,
    ) {
        let b = a + gap;
        let p = make_params(a, b).unwrap();
        let eta = [theta.cos(), theta.sin()];
        let m = m_eta(eta);
        prop_assert!((m * m - nalgebra::Matrix2::identity()).norm() <= 1e-14);
        let mut ev: Vec<f64> = a_eta(&p, eta).symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        prop_assert!((ev[0] - a * a).abs() <= 1e-12 * b * b);
        prop_assert!((ev[1] - b * b).abs() <= 1e-12 * b * b);
    }

    #[test]
    fn system_matrix_depends_only_on_radius(theta in 0.0..std::f64::consts::TAU, lr in -3.0f64..3.0) {
        let p = p12();
        let r = 10f64.powf(lr);
        let rotated = assemble_matrices(&p, &FrequencyPoint::polar(r, theta));
        let axis = assemble_matrices(&p, &FrequencyPoint::new([r, 0.0]));
        prop_assert_eq!(rotated.phi, axis.phi);
    }

    #[test]
    fn first_order_transform_roundtrips(
        theta in 0.0..std::f64::consts::TAU,
        lr in -3.0f64..3.0,
        v in prop::array::uniform8(-1.0f64..1.0),
    ) {
        let p = p12();
        let f = FrequencyPoint::polar(10f64.powf(lr), theta);
        let u = Vec2::new(C64::new(v[0], v[1]), C64::new(v[2], v[3]));
        let ut = Vec2::new(C64::new(v[4], v[5]), C64::new(v[6], v[7]));
        let w = to_first_order(&p, &f, &u, &ut).unwrap();
        let (u2, ut2) = from_first_order(&p, &f, &w).unwrap();
        let scale = ut.norm() + f.r * u.norm();
        prop_assert!(f.r * (u2 - u).norm() <= 1e-12 * scale);
        prop_assert!((ut2 - ut).norm() <= 1e-12 * scale);
        let back = to_first_order(&p, &f, &u2, &ut2).unwrap();
        prop_assert!((back.0 - w.0).norm() <= 1e-12 * w.0.norm());
    }

    #[test]
    fn eigenvalues_are_dissipative(lr in -3.0f64..3.0) {
        let p = p12();
        let r = 10f64.powf(lr);
        // decompose rejects roots whose residual exceeds the tolerance
        let d = decompose(&p, r).unwrap();
        for z in d.lambdas {
            // for a = 1, b = 2 the infimum of −max Re λ/ρ is 1/2, approached as r → 0
            prop_assert!(z.re <= -0.5 * rho(r) * (1.0 - 1e-9));
        }
    }

    #[test]
    fn projections_are_complete_and_orthogonal(lr in -3.0f64..3.0) {
        let d = decompose(&p12(), 10f64.powf(lr)).unwrap();
        prop_assume!(!d.degenerate);
        let ps = d.projections.unwrap();
        let sum: Mat4 = ps.iter().sum();
        prop_assert!(frob(&(sum - Mat4::identity())) <= 1e-8);
        for j in 0..4 {
            for k in 0..4 {
                let prod = ps[j] * ps[k];
                let err = if j == k { frob(&(prod - ps[j])) } else { frob(&prod) };
                prop_assert!(err <= 1e-6, "j={} k={} err={:e}", j, k, err);
            }
        }
    }

    #[test]
    fn spectral_and_block_propagators_agree(
        lr in -3.0f64..3.0,
        t in 0.0f64..50.0,
        v in prop::array::uniform8(-1.0f64..1.0),
    ) {
        let p = p12();
        let r = 10f64.powf(lr);
        let w = cvec4(v);
        let spectral = Propagator::new(&p, r).apply(t, &StateVector(w)).0;
        let block = block_propagator(&p, r, t) * w;
        prop_assert!((spectral - block).norm() <= 1e-10 * w.norm());
    }

    #[test]
    fn semigroup_property(
        lr in -3.0f64..3.0,
        t1 in 0.0f64..10.0,
        t2 in 0.0f64..10.0,
        v in prop::array::uniform8(-1.0f64..1.0),
    ) {
        let prop = Propagator::new(&p12(), 10f64.powf(lr));
        let w = StateVector(cvec4(v));
        let whole = prop.apply(t1 + t2, &w).0;
        let split = prop.apply(t1, &prop.apply(t2, &w)).0;
        prop_assert!((whole - split).norm() <= 1e-8 * whole.norm() + 1e-15 * w.0.norm());
    }

    // |W|² is twice the mode energy |v'|² + c²r²|v|², whose derivative is −2c²r²|v'|².
    #[test]
    fn mode_energy_never_increases(
        lr in -3.0f64..3.0,
        t1 in 0.0f64..20.0,
        dt in 0.0f64..20.0,
        v in prop::array::uniform8(-1.0f64..1.0),
    ) {
        let prop = Propagator::new(&p12(), 10f64.powf(lr));
        let w = StateVector(cvec4(v));
        let early = prop.apply(t1, &w).0.norm();
        let late = prop.apply(t1 + dt, &w).0.norm();
        prop_assert!(late <= early * (1.0 + 1e-12) + 1e-300);
    }
}

#[test]
fn phi_is_the_assembled_matrix() {
    let p = p12();
    let f = FrequencyPoint::polar(0.7, 1.1);
    assert_eq!(assemble_matrices(&p, &f).phi, phi(&p, 0.7));
}

#[test]
fn fitted_slope_ignores_amplitude() {
    let p = p12();
    let grid = RadialGrid::new(1e-4, 100.0, 512, 2).unwrap();
    let times = log_grid(50.0, 500.0, 16);
    let slope = |amp: f64| {
        let d = make_data(DataKind::Gaussian, 1.0)
            .unwrap()
            .with_amplitude(amp);
        let data = InitialData::velocity(d, [0.6, 0.8]);
        let prof = RadialProfile::from_data(&p, &grid, &data, 4).unwrap();
        let sol = solve_linear_radial(&p, &prof, &times, &[0.0]).unwrap();
        fit_decay(&times, &sol.table.columns[0].values, (50.0, 500.0))
            .unwrap()
            .slope
    };
    let base = slope(1.0);
    for amp in [1e-3, 7.3, 1e4] {
        assert!((slope(amp) - base).abs() < 1e-12, "amplitude {amp}");
    }
}
