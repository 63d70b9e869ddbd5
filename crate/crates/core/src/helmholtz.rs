//! 3D treatment: the Fourier-space Helmholtz split diagonalizes
//! `A₃(η) = a²I + (b²−a²)ηηᵀ`, so potential parts (along `ξ`) are scalar
//! damped oscillators at speed `b` and solenoidal parts (across `ξ`) at speed `a`.

use nalgebra::{Matrix6, Vector3, Vector6};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::DataDescriptor;
use crate::elastic::{SystemParams, C64};
use crate::error::{Error, Result};
use crate::fit::{fit_decay, DecayFit};
use crate::oscillator::DampedOscillator;
use crate::radial::RadialGrid;
use crate::table::{column_name, pairwise_sum, Lebesgue, NormTable};

pub type Vec3c = Vector3<C64>;

pub const DECAY_3D_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelmholtzParts {
    pub potential: Vec3c,
    pub solenoidal: Vec3c,
}

impl HelmholtzParts {
    pub fn total(&self) -> Vec3c {
        self.potential + self.solenoidal
    }
}

fn radius(xi: [f64; 3]) -> f64 {
    (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt()
}

/// `potential = (ξ·û/|ξ|²)ξ`, `solenoidal = û − potential`.
pub fn helmholtz_split(xi: [f64; 3], u: &Vec3c) -> Result<HelmholtzParts> {
    let r = radius(xi);
    if r == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    let eta = Vector3::new(xi[0] / r, xi[1] / r, xi[2] / r).map(|x| C64::new(x, 0.0));
    let potential = eta * eta.dot(u);
    Ok(HelmholtzParts {
        potential,
        solenoidal: u - potential,
    })
}

fn evolve_part(osc: &DampedOscillator, y: &Vec3c, yt: &Vec3c, t: f64) -> (Vec3c, Vec3c) {
    let e = osc.exp_matrix(t);
    let c = |x: f64| C64::new(x, 0.0);
    (
        y * c(e[0][0]) + yt * c(e[0][1]),
        y * c(e[1][0]) + yt * c(e[1][1]),
    )
}

/// Evolves each part with its scalar oscillator; returns displacement and velocity parts at `t`.
pub fn solve_decoupled(
    p: &SystemParams,
    xi: [f64; 3],
    u: &HelmholtzParts,
    ut: &HelmholtzParts,
    t: f64,
) -> Result<(HelmholtzParts, HelmholtzParts)> {
    let r = radius(xi);
    if r == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time {t}")));
    }
    let (pu, put) = evolve_part(
        &DampedOscillator::new(p.b(), r),
        &u.potential,
        &ut.potential,
        t,
    );
    let (su, sut) = evolve_part(
        &DampedOscillator::new(p.a(), r),
        &u.solenoidal,
        &ut.solenoidal,
        t,
    );
    Ok((
        HelmholtzParts {
            potential: pu,
            solenoidal: su,
        },
        HelmholtzParts {
            potential: put,
            solenoidal: sut,
        },
    ))
}

/// Generator of `(û, û_t)' = [[0, I], [−r²A₃, −r²A₃]](û, û_t)`.
pub fn full_system_matrix(p: &SystemParams, xi: [f64; 3]) -> Matrix6<f64> {
    let (a2, b2) = (p.a() * p.a(), p.b() * p.b());
    let mut m = Matrix6::zeros();
    for i in 0..3 {
        m[(i, i + 3)] = 1.0;
        for j in 0..3 {
            // r²A₃ = a²r²I + (b²−a²)ξξᵀ
            let v = (b2 - a2) * xi[i] * xi[j] + if i == j { a2 * radius(xi).powi(2) } else { 0.0 };
            m[(i + 3, j)] = -v;
            m[(i + 3, j + 3)] = -v;
        }
    }
    m
}

/// Split-evolve-recombine against the dense 6×6 exponential, relative to `‖(û₀, û₁)‖`.
pub fn verify_decoupling(
    p: &SystemParams,
    xi: [f64; 3],
    u0: &Vec3c,
    u1: &Vec3c,
    t: f64,
) -> Result<f64> {
    let (u, ut) = solve_decoupled(
        p,
        xi,
        &helmholtz_split(xi, u0)?,
        &helmholtz_split(xi, u1)?,
        t,
    )?;
    let e = (full_system_matrix(p, xi) * t)
        .exp()
        .map(|x| C64::new(x, 0.0));
    let y0 = Vector6::from_iterator(u0.iter().chain(u1.iter()).copied());
    let y = e * y0;
    let got = Vector6::from_iterator(u.total().iter().chain(ut.total().iter()).copied());
    let scale = y0.norm();
    Ok(if scale == 0.0 {
        (got - y).norm()
    } else {
        (got - y).norm() / scale
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decay3dReport {
    pub table: NormTable,
    pub m: f64,
    pub s: f64,
    pub solution_fit: DecayFit,
    pub energy_fit: DecayFit,
    /// `−(6−5m)/(4m)`.
    pub predicted_solution: f64,
    /// `−(6−3m+2sm)/(4m)`.
    pub predicted_energy: f64,
    pub pass: bool,
}

/// Linear 3D decay for data `u_j = f_j(x)d` with `|d| = 1`: the direction average
/// puts weight 1/3 on the potential oscillator (speed `b`) and 2/3 on the
/// solenoidal one (speed `a`), so norms reduce to radial integrals in `r²dr`.
/// Gaussian profiles realize the `m = 1` class.
#[allow(clippy::too_many_arguments)]
pub fn decay_3d_linear(
    p: &SystemParams,
    u0: Option<&DataDescriptor>,
    u1: Option<&DataDescriptor>,
    grid: &RadialGrid,
    times: &[f64],
    window: (f64, f64),
    m: f64,
    s: f64,
) -> Result<Decay3dReport> {
    if grid.dim != 3 {
        return Err(Error::InvalidArgument(
            "3D decay needs a grid with measure r² dr".into(),
        ));
    }
    if !(1.0..1.2).contains(&m) {
        return Err(Error::InvalidArgument("m must lie in [1, 6/5)".into()));
    }
    if times.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::InvalidArgument("times must be nonnegative".into()));
    }
    let f = |d: Option<&DataDescriptor>, r: f64| d.map_or(Ok(0.0), |d| d.fourier_3d(r));
    let weights = [(p.b(), 1.0 / 3.0), (p.a(), 2.0 / 3.0)];
    // per node, per time: (|ŷ|², |ξ|^{2s}(|ξ|²|ŷ|² + |ŷ'|²)), already weighted
    let per_node: Vec<Vec<(f64, f64)>> = grid
        .nodes
        .par_iter()
        .zip(grid.weights.par_iter())
        .map(|(&r, &w)| -> Result<Vec<(f64, f64)>> {
            let (y0, y1) = (f(u0, r)?, f(u1, r)?);
            let oscs = weights.map(|(c, frac)| (DampedOscillator::new(c, r), frac));
            Ok(times
                .iter()
                .map(|&t| {
                    let (mut sol, mut en) = (0.0, 0.0);
                    for (osc, frac) in &oscs {
                        let e = osc.exp_matrix(t);
                        let y = e[0][0] * y0 + e[0][1] * y1;
                        let yt = e[1][0] * y0 + e[1][1] * y1;
                        sol += frac * y * y;
                        en += frac * r.powf(2.0 * s) * (r * r * y * y + yt * yt);
                    }
                    (w * sol, w * en)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let scale = grid.sphere() * grid.plancherel();
    let column = |pick: fn(&(f64, f64)) -> f64| -> Vec<f64> {
        (0..times.len())
            .map(|k| {
                let terms: Vec<f64> = per_node.iter().map(|v| pick(&v[k])).collect();
                (scale * pairwise_sum(&terms)).sqrt()
            })
            .collect()
    };
    let (sol, en) = (column(|x| x.0), column(|x| x.1));
    let solution_fit = fit_decay(times, &sol, window)?;
    let energy_fit = fit_decay(times, &en, window)?;
    let mut table = NormTable::new(times.to_vec());
    table.push_column(column_name("u", 0.0, Lebesgue::L2), sol);
    table.push_column(column_name("energy", s, Lebesgue::L2), en);
    let predicted_solution = -(6.0 - 5.0 * m) / (4.0 * m);
    let predicted_energy = -(6.0 - 3.0 * m + 2.0 * s * m) / (4.0 * m);
    let pass = (solution_fit.slope - predicted_solution).abs() <= DECAY_3D_TOL
        && (energy_fit.slope - predicted_energy).abs() <= DECAY_3D_TOL;
    Ok(Decay3dReport {
        table,
        m,
        s,
        solution_fit,
        energy_fit,
        predicted_solution,
        predicted_energy,
        pass,
    })
}
