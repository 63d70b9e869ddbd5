//! Asymptotic-profile certificates: the refinement gain of subtracting `Ŝ₀`
//! and the extra decay for weighted, zero-moment data.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{weighted_l1_norm, DataKind, InitialData};
use crate::elastic::{SystemParams, Vec4};
use crate::error::{Error, Result};
use crate::fit::{fit_decay, DecayFit};
use crate::propagator::{s0_profile, Propagator};
use crate::radial::RadialProfile;
use crate::table::pairwise_sum;

/// Slope tolerance on every profile fit.
pub const PROFILE_SLOPE_TOL: f64 = 0.1;
/// Tolerance of the unrefined slope against the linear rate.
pub const REFERENCE_SLOPE_TOL: f64 = 0.05;
pub const MIN_R2: f64 = 0.99;
pub const MOMENT_TOL: f64 = 1e-10;
/// Fraction of the zone edge where the interior cutoff starts to fall.
const BRIDGE_START: f64 = 0.8;

/// Smooth radial partition of unity `χ_int + χ_mid + χ_ext = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZoneCutoffs {
    pub eps: f64,
}

/// `C²` step: 0 for `x ≤ 0`, 1 for `x ≥ 1`.
fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
}

impl ZoneCutoffs {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "zone parameter must lie in (0, 1), got {eps}"
            )));
        }
        Ok(Self { eps })
    }

    /// 1 on `r ≤ 0.8ε`, 0 on `r ≥ ε`.
    pub fn chi_int(&self, r: f64) -> f64 {
        let lo = BRIDGE_START * self.eps;
        1.0 - smoothstep((r - lo) / (self.eps - lo))
    }

    /// 0 on `r ≤ 1/ε`, 1 on `r ≥ 1/(0.8ε)`.
    pub fn chi_ext(&self, r: f64) -> f64 {
        let lo = 1.0 / self.eps;
        let hi = lo / BRIDGE_START;
        smoothstep((r - lo) / (hi - lo))
    }

    pub fn chi_mid(&self, r: f64) -> f64 {
        1.0 - self.chi_int(r) - self.chi_ext(r)
    }
}

fn sq_norm(v: &Vec4) -> f64 {
    v.norm_squared()
}

/// Squared-norm contributions of one node: `(‖χ(W − Ŝ₀W₀)‖², ‖χW‖²)` per time.
fn node_series(
    p: &SystemParams,
    profile: &RadialProfile,
    i: usize,
    times: &[f64],
    s: f64,
    cut: &ZoneCutoffs,
) -> Vec<(f64, f64)> {
    let g = &profile.grid;
    let r = g.nodes[i];
    let chi = cut.chi_int(r);
    if chi == 0.0 {
        return vec![(0.0, 0.0); times.len()];
    }
    let weight = g.weights[i] * r.powf(2.0 * s) * chi * chi * g.sphere() / profile.n_theta as f64;
    let prop = Propagator::new(p, r);
    let w0 = profile.node_values(i);
    times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                let full: f64 = w0.iter().map(sq_norm).sum();
                return (0.0, weight * full);
            }
            let e = prop.matrix(t);
            let s0 = s0_profile(p, r, t);
            let (mut rem, mut full) = (0.0, 0.0);
            for w in w0 {
                let wt = e * w;
                rem += sq_norm(&(wt - s0 * w));
                full += sq_norm(&wt);
            }
            (weight * rem, weight * full)
        })
        .collect()
}

/// `‖χ_int(|ξ|)|ξ|ˢ(W(t) − Ŝ₀(t)W₀)‖_{L²}` and `‖χ_int|ξ|ˢW(t)‖_{L²}` for each time.
pub fn profile_remainder_series(
    p: &SystemParams,
    profile: &RadialProfile,
    times: &[f64],
    s: f64,
    cutoffs: &ZoneCutoffs,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if times.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidArgument(
            "times must be finite and nonnegative".into(),
        ));
    }
    let per_node: Vec<Vec<(f64, f64)>> = (0..profile.grid.nodes.len())
        .into_par_iter()
        .map(|i| node_series(p, profile, i, times, s, cutoffs))
        .collect();
    let scale = profile.grid.plancherel();
    let reduce = |pick: fn(&(f64, f64)) -> f64| -> Vec<f64> {
        (0..times.len())
            .map(|k| {
                let col: Vec<f64> = per_node.iter().map(|v| pick(&v[k])).collect();
                (scale * pairwise_sum(&col)).sqrt()
            })
            .collect()
    };
    Ok((reduce(|x| x.0), reduce(|x| x.1)))
}

/// The remainder norm at a single time; exactly zero at `t = 0`.
pub fn profile_remainder_norm(
    p: &SystemParams,
    profile: &RadialProfile,
    t: f64,
    s: f64,
    cutoffs: &ZoneCutoffs,
) -> Result<f64> {
    Ok(profile_remainder_series(p, profile, &[t], s, cutoffs)?.0[0])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileReport {
    pub data_kind: DataKind,
    pub s: f64,
    pub gamma: f64,
    pub base_slope: DecayFit,
    pub reference_slope: DecayFit,
    pub gain: f64,
    /// Transform of `|D|u₀ + u₁` at the origin, as `[re, im]`.
    pub moment: [f64; 2],
    pub pass: bool,
}

fn data_kind(data: &InitialData) -> DataKind {
    data.u1.or(data.u0).map_or(DataKind::Gaussian, |d| d.kind)
}

fn fits(
    p: &SystemParams,
    profile: &RadialProfile,
    times: &[f64],
    window: (f64, f64),
    s: f64,
    cutoffs: &ZoneCutoffs,
) -> Result<(DecayFit, DecayFit)> {
    let (rem, full) = profile_remainder_series(p, profile, times, s, cutoffs)?;
    Ok((
        fit_decay(times, &rem, window)?,
        fit_decay(times, &full, window)?,
    ))
}

/// Refinement for `m = 1` data: the unrefined slope should be `−(1+s)/2`,
/// the refined one `−(1+s)/2 − 1/2`.
pub fn refinement_experiment(
    p: &SystemParams,
    data: &InitialData,
    profile: &RadialProfile,
    times: &[f64],
    window: (f64, f64),
    s: f64,
    cutoffs: &ZoneCutoffs,
) -> Result<ProfileReport> {
    let (base, reference) = fits(p, profile, times, window, s, cutoffs)?;
    let linear = -(1.0 + s) / 2.0;
    let gain = reference.slope - base.slope;
    let pass = base.r2 >= MIN_R2
        && reference.r2 >= MIN_R2
        && (base.slope - (linear - 0.5)).abs() <= PROFILE_SLOPE_TOL
        && (reference.slope - linear).abs() <= REFERENCE_SLOPE_TOL
        && (gain - 0.5).abs() <= PROFILE_SLOPE_TOL;
    let m = data.moment();
    Ok(ProfileReport {
        data_kind: data_kind(data),
        s,
        gamma: 0.0,
        base_slope: base,
        reference_slope: reference,
        gain,
        moment: [m.re, m.im],
        pass,
    })
}

/// Refined decay for zero-moment data in `L^{1,γ}`; passes when the refined
/// slope is at most `−(1+s)/2 − (1+γ)/2 + 0.1`.
#[allow(clippy::too_many_arguments)]
pub fn weighted_profile_experiment(
    p: &SystemParams,
    data: &InitialData,
    profile: &RadialProfile,
    gamma: f64,
    times: &[f64],
    window: (f64, f64),
    s: f64,
    cutoffs: &ZoneCutoffs,
) -> Result<ProfileReport> {
    let m = data.moment();
    if m.norm() > MOMENT_TOL {
        return Err(Error::NonzeroMoment(m.norm()));
    }
    for d in [data.u0, data.u1].into_iter().flatten() {
        weighted_l1_norm(&d, gamma)?;
    }
    let (base, reference) = fits(p, profile, times, window, s, cutoffs)?;
    let target = -(1.0 + s) / 2.0 - (1.0 + gamma) / 2.0;
    let pass =
        base.r2 >= MIN_R2 && reference.r2 >= MIN_R2 && base.slope <= target + PROFILE_SLOPE_TOL;
    Ok(ProfileReport {
        data_kind: data_kind(data),
        s,
        gamma,
        base_slope: base,
        reference_slope: reference,
        gain: reference.slope - base.slope,
        moment: [m.re, m.im],
        pass,
    })
}
