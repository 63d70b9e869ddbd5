//! The solution operator `e^{tΦ(r)}`, the explicit profiles at both ends of
//! the frequency axis, and remainder certificates.

use nalgebra::Matrix2;
use serde::Serialize;

use crate::elastic::{phi, Mat4, StateVector, SystemParams, C64};
use crate::error::{Error, Result};
use crate::oscillator::DampedOscillator;
use crate::spectra::{decompose, Branch, ModeDecomposition, EPS_ZONE};

/// W-component carrying each branch at low frequency: (+b, +a, −b, −a).
pub fn component(b: Branch) -> usize {
    match b {
        Branch::PPlus => 0,
        Branch::SPlus => 1,
        Branch::PMinus => 2,
        Branch::SMinus => 3,
    }
}

/// Dense `exp(tΦ)` by Padé scaling-and-squaring.
pub fn dense_propagator(p: &SystemParams, r: f64, t: f64) -> Mat4 {
    (phi(p, r) * C64::new(t, 0.0)).exp()
}

/// `exp(tΦ)` assembled from the closed-form 2×2 exponentials of the two speed blocks.
pub fn block_propagator(p: &SystemParams, r: f64, t: f64) -> Mat4 {
    let mut out = Mat4::zeros();
    for (blk, c) in p.speeds().into_iter().enumerate() {
        let e = DampedOscillator::new(c, r).w_block(t);
        let idx = [blk, blk + 2];
        for i in 0..2 {
            for j in 0..2 {
                out[(idx[i], idx[j])] = e[i][j];
            }
        }
    }
    out
}

/// Evaluator of `e^{tΦ(r)}` at one frequency for many times: spectral sum when
/// the decomposition is well conditioned, dense exponential otherwise.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Propagator {
    Identity,
    Spectral(ModeDecomposition),
    Dense(Mat4),
}

impl Propagator {
    pub fn new(p: &SystemParams, r: f64) -> Self {
        if r == 0.0 {
            return Propagator::Identity;
        }
        match decompose(p, r) {
            Ok(d) if !d.degenerate && d.projections.is_some() => Propagator::Spectral(d),
            _ => Propagator::Dense(phi(p, r)),
        }
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self, Propagator::Spectral(_))
    }

    pub fn matrix(&self, t: f64) -> Mat4 {
        match self {
            Propagator::Identity => Mat4::identity(),
            Propagator::Spectral(d) => {
                let ps = d.projections.as_ref().expect("checked at construction");
                let mut m = Mat4::zeros();
                for (pj, lam) in ps.iter().zip(&d.lambdas) {
                    m += pj * (lam * t).exp();
                }
                m
            }
            Propagator::Dense(phi) => (phi * C64::new(t, 0.0)).exp(),
        }
    }

    pub fn apply(&self, t: f64, w0: &StateVector) -> StateVector {
        StateVector(self.matrix(t) * w0.0)
    }
}

pub fn propagator_matrix(p: &SystemParams, r: f64, t: f64) -> Mat4 {
    Propagator::new(p, r).matrix(t)
}

/// `W(t) = e^{tΦ(r)}W₀`. At `r = 0`, `Φ = 0` and the state is returned unchanged;
/// callers working with `(û, û_t)` handle that mode with `dc_evolve`.
pub fn propagate(p: &SystemParams, r: f64, t: f64, w0: &StateVector) -> StateVector {
    Propagator::new(p, r).apply(t, w0)
}

pub fn s0_profile(p: &SystemParams, r: f64, t: f64) -> Mat4 {
    let mut m = Mat4::zeros();
    for b in Branch::ALL {
        let c = b.speed(p);
        let lam = C64::new(-0.5 * c * c * r * r, b.sign() * c * r);
        m[(component(b), component(b))] = (lam * t).exp();
    }
    m
}

/// The constant high-frequency limits of the eigenprojections.
pub fn limit_projection(b: Branch) -> Mat4 {
    let blk = match b {
        Branch::PPlus | Branch::PMinus => 0,
        Branch::SPlus | Branch::SMinus => 1,
    };
    let off = if b.sign() > 0.0 { -0.5 } else { 0.5 };
    let q = Matrix2::new(0.5, off, off, 0.5);
    let idx = [blk, blk + 2];
    let mut m = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            m[(idx[i], idx[j])] = C64::new(q[(i, j)], 0.0);
        }
    }
    m
}

pub fn lambda_inf(p: &SystemParams, r: f64, b: Branch) -> f64 {
    let c = b.speed(p);
    let inv = 1.0 / (c * c * r * r);
    if b.sign() > 0.0 {
        -1.0 - inv
    } else {
        -c * c * r * r + 1.0 + inv
    }
}

pub fn s_inf_profile(p: &SystemParams, r: f64, t: f64) -> Mat4 {
    let mut m = Mat4::zeros();
    for b in Branch::ALL {
        m += limit_projection(b) * C64::new((lambda_inf(p, r, b) * t).exp(), 0.0);
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSample {
    pub r: f64,
    pub t: f64,
    pub exact: Mat4,
    pub s0: Mat4,
    pub s_inf: Mat4,
}

pub fn sample(p: &SystemParams, r: f64, t: f64) -> PropagatorSample {
    PropagatorSample {
        r,
        t,
        exact: propagator_matrix(p, r, t),
        s0: s0_profile(p, r, t),
        s_inf: s_inf_profile(p, r, t),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Zone {
    Small,
    Large,
}

/// Largest tolerated log-log growth rate of the normalized remainder's
/// envelope heading toward the zone's limit.
pub const SHAPE_TOL: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderCertificate {
    pub zone: Zone,
    pub c: f64,
    /// Smallest constant making the bound hold on the grid.
    pub c_fit: f64,
    /// Largest log-log tail slope of the two grid envelopes.
    pub worst_slope: f64,
    pub pass: bool,
    pub offending: Option<(f64, f64)>,
}

fn tail_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let start = n - (n.div_ceil(2)).max(3).min(n);
    let lx: Vec<f64> = x[start..].iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y[start..].iter().map(|v| v.max(1e-300).ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Certifies `|R₀| ≲ r e^{−c r² t}` (small zone) or `|R_∞| ≲ e^{−ct}` (large zone)
/// on a grid: the constant is fitted, and the normalized remainder must not
/// grow toward `r → 0` / `r → ∞` or `t → ∞` (checked on the grid envelopes).
pub fn remainder_certify(
    p: &SystemParams,
    zone: Zone,
    r_grid: &[f64],
    t_grid: &[f64],
    c: f64,
) -> Result<RemainderCertificate> {
    let in_zone = |r: f64| match zone {
        Zone::Small => r > 0.0 && r <= EPS_ZONE,
        Zone::Large => r >= 1.0 / EPS_ZONE && r.is_finite(),
    };
    if r_grid.len() < 3
        || !r_grid.iter().all(|&r| in_zone(r))
        || r_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidArgument(format!(
            "{zone:?}-zone grid must be ascending, inside the zone, with ≥ 3 points"
        )));
    }
    let ts: Vec<f64> = t_grid.iter().copied().filter(|&t| t > 0.0).collect();
    if ts.len() < 3 || ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "time grid must hold ≥ 3 ascending positive times".into(),
        ));
    }
    // ratio[i][k] at (r_grid[i], ts[k])
    let ratio: Vec<Vec<f64>> = r_grid
        .iter()
        .map(|&r| {
            let prop = Propagator::new(p, r);
            ts.iter()
                .map(|&t| match zone {
                    Zone::Small => {
                        (prop.matrix(t) - s0_profile(p, r, t)).norm() / (r * (-c * r * r * t).exp())
                    }
                    Zone::Large => (prop.matrix(t) - s_inf_profile(p, r, t)).norm() * (c * t).exp(),
                })
                .collect()
        })
        .collect();
    let c_fit = ratio.iter().flatten().copied().fold(0.0, f64::max);
    // Envelopes: the worst ratio at each r (over t) and at each t (over r).
    // A bounded remainder makes both flatten out toward the limit; a bound
    // with the wrong power of r or the wrong exponent makes one of them grow.
    let argmax = |vals: &mut dyn Iterator<Item = (f64, (f64, f64))>| {
        vals.fold((f64::NEG_INFINITY, (f64::NAN, f64::NAN)), |a, b| {
            if b.0 > a.0 {
                b
            } else {
                a
            }
        })
    };
    let env_r: Vec<(f64, (f64, f64))> = r_grid
        .iter()
        .enumerate()
        .map(|(i, &r)| argmax(&mut ts.iter().enumerate().map(|(k, &t)| (ratio[i][k], (r, t)))))
        .collect();
    let env_t: Vec<(f64, (f64, f64))> = ts
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            argmax(
                &mut r_grid
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| (ratio[i][k], (r, t))),
            )
        })
        .collect();
    let (x_r, y_r, at_r): (Vec<f64>, Vec<f64>, (f64, f64)) = match zone {
        Zone::Small => (
            r_grid.iter().rev().map(|r| 1.0 / r).collect(),
            env_r.iter().rev().map(|e| e.0).collect(),
            env_r[0].1,
        ),
        Zone::Large => (
            r_grid.to_vec(),
            env_r.iter().map(|e| e.0).collect(),
            env_r[env_r.len() - 1].1,
        ),
    };
    let slope_r = tail_slope(&x_r, &y_r);
    let slope_t = tail_slope(&ts, &env_t.iter().map(|e| e.0).collect::<Vec<_>>());
    let worst = if slope_r >= slope_t {
        (slope_r, Some(at_r))
    } else {
        (slope_t, Some(env_t[env_t.len() - 1].1))
    };
    let pass = c_fit.is_finite() && worst.0 <= SHAPE_TOL;
    Ok(RemainderCertificate {
        zone,
        c,
        c_fit,
        worst_slope: worst.0,
        pass,
        offending: if pass { None } else { worst.1 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elastic::{make_params, Vec4};
    use crate::spectra::{dissipativity_scan, log_grid, rho};

    fn p12() -> SystemParams {
        make_params(1.0, 2.0).unwrap()
    }

    fn rel(a: &Mat4, b: &Mat4) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn identity_at_time_zero() {
        let p = p12();
        let w = StateVector(Vec4::new(
            C64::new(1.0, 2.0),
            C64::new(0.0, -1.0),
            C64::new(3.0, 0.0),
            C64::new(0.5, 0.5),
        ));
        for r in [0.0, 1e-3, 1.0, 50.0] {
            assert!((propagate(&p, r, 0.0, &w).0 - w.0).norm() < 1e-14);
        }
        assert_eq!(s0_profile(&p, 0.4, 0.0), Mat4::identity());
    }

    #[test]
    fn spectral_dense_and_block_agree_at_unit_frequency() {
        let p = p12();
        let s = propagator_matrix(&p, 1.0 + 1e-3, 1.0);
        let d = dense_propagator(&p, 1.0 + 1e-3, 1.0);
        let b = block_propagator(&p, 1.0 + 1e-3, 1.0);
        assert!(rel(&s, &d) < 1e-8);
        assert!(rel(&b, &d) < 1e-12);
        // exactly at the exceptional point the dense fallback is used
        let prop = Propagator::new(&p, 1.0);
        assert!(!prop.is_spectral());
        assert!(rel(&prop.matrix(1.0), &block_propagator(&p, 1.0, 1.0)) < 1e-12);
    }

    #[test]
    fn s0_entries() {
        let p = p12();
        let s = s0_profile(&p, 1.0, 1.0);
        assert!((s[(0, 0)] - C64::new(-2.0, 2.0).exp()).norm() < 1e-15);
        let s = s0_profile(&p, 0.3, 2.0);
        for b in Branch::ALL {
            let c = b.speed(&p);
            let m = s[(component(b), component(b))].norm();
            assert!((m - (-0.5 * c * c * 0.09 * 2.0f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn limit_projections_sum_to_identity() {
        let s: Mat4 = Branch::ALL.iter().map(|&b| limit_projection(b)).sum();
        assert_eq!(s, Mat4::identity());
        assert_eq!(s_inf_profile(&p12(), 10.0, 0.0), Mat4::identity());
    }

    #[test]
    fn large_remainder_at_r10() {
        let p = p12();
        for t in [0.5, 1.0, 2.0, 5.0] {
            let r = (propagator_matrix(&p, 10.0, t) - s_inf_profile(&p, 10.0, t)).norm();
            assert!(r <= 0.2 * (-t).exp(), "t={t} r={r}");
        }
        let s = s_inf_profile(&p, 10.0, 1.0);
        assert!(s[(0, 0)].norm() > 0.1);
    }

    #[test]
    fn pointwise_decay_bound() {
        let p = p12();
        let c = dissipativity_scan(&p, &log_grid(1e-3, 1e3, 200))
            .unwrap()
            .c_best;
        let w = StateVector(Vec4::new(
            C64::new(1.0, 0.0),
            C64::new(0.3, 0.0),
            C64::new(-0.2, 0.4),
            C64::new(0.0, 1.0),
        ));
        let mut cal: f64 = 1.0;
        for r in [0.01, 1.0, 100.0] {
            for t in [1.0, 10.0, 100.0] {
                let ratio = propagate(&p, r, t, &w).norm() / ((-c * rho(r) * t).exp() * w.norm());
                cal = cal.max(ratio);
            }
        }
        assert!(cal < 5.0, "{cal}");
    }

    #[test]
    fn certificates_on_reference_grids() {
        let p = p12();
        let c_best = dissipativity_scan(&p, &log_grid(1e-3, 1e3, 200))
            .unwrap()
            .c_best;
        let small = remainder_certify(
            &p,
            Zone::Small,
            &log_grid(1e-3, 1e-1, 15),
            &log_grid(1.0, 1e3, 15),
            c_best / 2.0,
        )
        .unwrap();
        assert!(small.pass, "{small:?}");
        let large = remainder_certify(
            &p,
            Zone::Large,
            &log_grid(10.0, 1e3, 15),
            &log_grid(0.1, 50.0, 15),
            0.5,
        )
        .unwrap();
        assert!(large.pass, "{large:?}");
        assert!(
            remainder_certify(&p, Zone::Small, &[0.01, 0.05, 0.2], &[1.0, 2.0, 3.0], 0.25).is_err()
        );
    }

    #[test]
    fn certificate_rejects_a_bound_that_is_too_strong() {
        // demanding e^{-2t} decay of the large-zone remainder must fail
        let p = p12();
        let cert = remainder_certify(
            &p,
            Zone::Large,
            &log_grid(10.0, 1e3, 10),
            &log_grid(0.1, 50.0, 10),
            2.0,
        )
        .unwrap();
        assert!(!cert.pass);
        assert!(cert.offending.is_some());
    }
}
