//! Radial quadrature realization of the W-level evolution: the propagator
//! depends on the frequency only through `r`, so norms reduce to 1D integrals
//! (with an exact trapezoid rule in the angle when the data are anisotropic).

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use crate::data::InitialData;
use crate::elastic::{
    from_first_order, to_first_order, FrequencyPoint, StateVector, SystemParams, Vec4,
};
use crate::error::{Error, Result};
use crate::propagator::Propagator;
use crate::table::{column_name, pairwise_sum, Lebesgue, NormTable};

pub const DEFAULT_R_MIN: f64 = 1e-4;
pub const DEFAULT_R_MAX: f64 = 1e3;
pub const DEFAULT_NODES: usize = 2048;
pub const PANEL_ORDER: usize = 16;
pub const DEFAULT_ANGLES: usize = 8;

/// Composite Gauss–Legendre rule on log-spaced panels for `∫ f(r) r^{dim−1} dr`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub dim: usize,
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, nodes: usize, dim: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "radial range [{r_min}, {r_max}]"
            )));
        }
        if r_min > 1e-3 || r_max < 1e2 {
            return Err(Error::InvalidArgument(
                "radial grid must cover [1e-3, 1e2]".into(),
            ));
        }
        if nodes == 0 || !nodes.is_multiple_of(PANEL_ORDER) {
            return Err(Error::InvalidArgument(format!(
                "node count must be a positive multiple of {PANEL_ORDER}"
            )));
        }
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidArgument(format!("dimension {dim}")));
        }
        let rule = GaussLegendre::new(NonZeroUsize::new(PANEL_ORDER).expect("nonzero"));
        let panels = nodes / PANEL_ORDER;
        let (l0, l1) = (r_min.ln(), r_max.ln());
        let mut xs = Vec::with_capacity(nodes);
        let mut ws = Vec::with_capacity(nodes);
        for k in 0..panels {
            let a = (l0 + (l1 - l0) * k as f64 / panels as f64).exp();
            let b = (l0 + (l1 - l0) * (k + 1) as f64 / panels as f64).exp();
            let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
            pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
            for (x, w) in pairs {
                let r = 0.5 * (a + b) + 0.5 * (b - a) * x;
                xs.push(r);
                ws.push(0.5 * (b - a) * w * r.powi(dim as i32 - 1));
            }
        }
        Ok(Self {
            nodes: xs,
            weights: ws,
            dim,
        })
    }

    pub fn default_2d() -> Self {
        Self::new(DEFAULT_R_MIN, DEFAULT_R_MAX, DEFAULT_NODES, 2).expect("defaults are valid")
    }

    pub fn default_3d() -> Self {
        Self::new(DEFAULT_R_MIN, DEFAULT_R_MAX, DEFAULT_NODES, 3).expect("defaults are valid")
    }

    /// `∫ f(r) r^{dim−1} dr` over the grid's range.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| w * f(r))
            .collect();
        pairwise_sum(&terms)
    }

    /// Measure of the unit sphere in this dimension.
    pub fn sphere(&self) -> f64 {
        if self.dim == 2 {
            2.0 * PI
        } else {
            4.0 * PI
        }
    }

    /// Plancherel factor `(2π)^{−dim}` relating `‖f‖²` to `‖f̂‖²`.
    pub fn plancherel(&self) -> f64 {
        (2.0 * PI).powi(-(self.dim as i32))
    }
}

/// W-level samples on a radial grid; `n_theta` equispaced angles per node
/// (1 for isotropic data), stored node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub grid: RadialGrid,
    pub n_theta: usize,
    pub values: Vec<Vec4>,
}

pub fn angle(m: usize, n_theta: usize) -> f64 {
    2.0 * PI * (m as f64 + 0.5) / n_theta as f64
}

impl RadialProfile {
    pub fn from_fn(grid: &RadialGrid, f: impl Fn(f64) -> Vec4) -> Self {
        Self {
            grid: grid.clone(),
            n_theta: 1,
            values: grid.nodes.iter().map(|&r| f(r)).collect(),
        }
    }

    /// Samples `W₀(r, θ)` built from `(û₀, û₁)` of vector data (2D grids only).
    pub fn from_data(
        p: &SystemParams,
        grid: &RadialGrid,
        data: &InitialData,
        n_theta: usize,
    ) -> Result<Self> {
        if grid.dim != 2 || n_theta == 0 {
            return Err(Error::InvalidArgument(
                "polar sampling needs a 2D grid and n_theta ≥ 1".into(),
            ));
        }
        let mut values = Vec::with_capacity(grid.nodes.len() * n_theta);
        for &r in &grid.nodes {
            for m in 0..n_theta {
                let f = FrequencyPoint::polar(r, angle(m, n_theta));
                let (u0, u1) = data.fourier(f.xi);
                values.push(to_first_order(p, &f, &u0, &u1)?.0);
            }
        }
        Ok(Self {
            grid: grid.clone(),
            n_theta,
            values,
        })
    }

    pub fn node_values(&self, i: usize) -> &[Vec4] {
        &self.values[i * self.n_theta..(i + 1) * self.n_theta]
    }

    /// `‖|ξ|ˢ W‖_{L²}` with an extra radial multiplier.
    pub fn weighted_norm(&self, s: f64, multiplier: impl Fn(f64) -> f64) -> f64 {
        let g = &self.grid;
        let per_angle = g.sphere() / self.n_theta as f64;
        let terms: Vec<f64> = (0..g.nodes.len())
            .map(|i| {
                let r = g.nodes[i];
                let m = multiplier(r);
                let sq: f64 = self.node_values(i).iter().map(|v| v.norm_squared()).sum();
                g.weights[i] * r.powf(2.0 * s) * m * m * per_angle * sq
            })
            .collect();
        (g.plancherel() * pairwise_sum(&terms)).sqrt()
    }

    /// `(‖|ξ|^{1+s}û‖, ‖|ξ|ˢû_t‖)` recovered from the samples (2D polar profiles).
    pub fn displacement_norms(&self, p: &SystemParams, s: f64) -> Result<(f64, f64)> {
        let g = &self.grid;
        let per_angle = g.sphere() / self.n_theta as f64;
        let mut du = Vec::with_capacity(self.values.len());
        let mut dut = Vec::with_capacity(self.values.len());
        for i in 0..g.nodes.len() {
            let r = g.nodes[i];
            let w = g.weights[i] * per_angle * r.powf(2.0 * s);
            for (m, v) in self.node_values(i).iter().enumerate() {
                let f = FrequencyPoint::polar(r, angle(m, self.n_theta));
                let (u, ut) = from_first_order(p, &f, &StateVector(*v))?;
                du.push(w * r * r * u.norm_squared());
                dut.push(w * ut.norm_squared());
            }
        }
        let k = g.plancherel();
        Ok((
            (k * pairwise_sum(&du)).sqrt(),
            (k * pairwise_sum(&dut)).sqrt(),
        ))
    }

    pub fn norm(&self, s: f64, q: Lebesgue) -> Result<f64> {
        match q {
            Lebesgue::L2 => Ok(self.weighted_norm(s, |_| 1.0)),
            Lebesgue::Inf => Err(Error::Unsupported(
                "L^∞ norms need physical-space samples; use the lattice solver".into(),
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub times: Vec<f64>,
    pub profiles: Vec<RadialProfile>,
    pub table: NormTable,
}

/// Propagates every node's samples with `e^{tΦ(r)}` and tabulates `‖|ξ|ˢW(t)‖_{L²}`
/// as columns `W_Hs{s}_L2`.
pub fn solve_linear_radial(
    p: &SystemParams,
    profile: &RadialProfile,
    times: &[f64],
    s_list: &[f64],
) -> Result<RadialSolution> {
    if times.iter().any(|&t| !(t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "times must be nonnegative and ascending".into(),
        ));
    }
    let nodes = profile.grid.nodes.len();
    let per_node: Vec<Vec<Vec4>> = (0..nodes)
        .into_par_iter()
        .map(|i| {
            let prop = Propagator::new(p, profile.grid.nodes[i]);
            let w0 = profile.node_values(i);
            let mut out = Vec::with_capacity(times.len() * w0.len());
            for &t in times {
                let e = prop.matrix(t);
                out.extend(w0.iter().map(|w| e * w));
            }
            out
        })
        .collect();
    let nt = profile.n_theta;
    let profiles: Vec<RadialProfile> = (0..times.len())
        .map(|k| RadialProfile {
            grid: profile.grid.clone(),
            n_theta: nt,
            values: per_node
                .iter()
                .flat_map(|v| v[k * nt..(k + 1) * nt].iter().copied())
                .collect(),
        })
        .collect();
    let mut table = NormTable::new(times.to_vec());
    for &s in s_list {
        table.push_column(
            column_name("W", s, Lebesgue::L2),
            profiles
                .iter()
                .map(|pr| pr.weighted_norm(s, |_| 1.0))
                .collect(),
        );
    }
    Ok(RadialSolution {
        times: times.to_vec(),
        profiles,
        table,
    })
}

/// Convenience: a single-state propagation at one frequency, used by tests.
pub fn propagate_node(p: &SystemParams, r: f64, t: f64, w: &Vec4) -> Vec4 {
    Propagator::new(p, r).apply(t, &StateVector(*w)).0
}
