//! Pseudo-spectral solver for the weakly coupled system
//! `u_tt + L(u + u_t) = (|u⁽²⁾|^{p₁}, |u⁽¹⁾|^{p₂})` on the periodic lattice.
//!
//! First-order exponential time differencing in the speed blocks: per mode
//! `(y, y') ← e^{hA}(y, y') + ∫₀ʰ e^{sA}e₂ ds · F`, with `F = M(η)f̂` frozen
//! over the step. The zero mode integrates `û'' = f̂(0)` exactly for constant
//! forcing. Products are dealiased by 3/2 zero-padding, and both components
//! share one complex transform each way.

use rayon::prelude::*;
use serde::Serialize;

use crate::elastic::{SystemParams, C64};
use crate::error::{Error, Result};
use crate::exponents::{ExponentReport, Gate};
use crate::fit::{fit_decay, DecayFit};
use crate::lattice::{rotate, wavenumber, Fft2, LatticeState};
use crate::oscillator::DampedOscillator;
use crate::table::{column_name, Lebesgue, NormTable};

/// Abort once a norm exceeds this multiple of the initial size.
pub const BLOW_UP_FACTOR: f64 = 1e6;
pub const LOSS_SLOPE_TOL: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemilinearSetup {
    pub p1: f64,
    pub p2: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Each must be a whole number of steps in `[0, t_end]`.
    pub output_times: Vec<f64>,
    /// With `false` the nonlinearity is switched off.
    pub forcing: bool,
}

#[derive(Debug, Clone)]
pub struct SemilinearResult {
    pub table: NormTable,
    pub final_state: LatticeState,
    pub steps: usize,
}

/// Column names of component `k ∈ {1, 2}`: `‖u‖`, `‖|D|u‖`, `‖u_t‖`, and the energy `(‖|D|u‖² + ‖u_t‖²)^{1/2}`.
pub fn component_columns(k: usize) -> [String; 4] {
    [
        column_name(&format!("u{k}"), 0.0, Lebesgue::L2),
        column_name(&format!("u{k}"), 1.0, Lebesgue::L2),
        column_name(&format!("u{k}t"), 0.0, Lebesgue::L2),
        energy_column(k),
    ]
}

pub fn energy_column(k: usize) -> String {
    column_name(&format!("energy{k}"), 0.0, Lebesgue::L2)
}

fn component_norms(st: &LatticeState, comp: usize) -> [f64; 4] {
    let u0 = st.u.component_norm(comp, 0.0);
    let u1 = st.u.component_norm(comp, 1.0);
    let ut = st.ut.component_norm(comp, 0.0);
    [u0, u1, ut, u1.hypot(ut)]
}

/// Per-mode step data: rotation and, per speed block, `e^{hA}` and the forcing vector.
#[derive(Clone, Copy)]
struct ModeStep {
    eta: [f64; 2],
    e: [[[f64; 2]; 2]; 2],
    psi: [[f64; 2]; 2],
}

fn mode_steps(p: &SystemParams, st: &LatticeState, h: f64) -> Vec<Option<ModeStep>> {
    let f = &st.u;
    (0..f.coeffs.len())
        .into_par_iter()
        .map(|k| {
            let xi = f.xi(k);
            let r = xi[0].hypot(xi[1]);
            if r == 0.0 {
                return None;
            }
            let mut e = [[[0.0; 2]; 2]; 2];
            let mut psi = [[0.0; 2]; 2];
            for (blk, c) in p.speeds().into_iter().enumerate() {
                let osc = DampedOscillator::new(c, r);
                e[blk] = osc.exp_matrix(h);
                psi[blk] = osc.forcing_vector(h);
            }
            Some(ModeStep {
                eta: [xi[0] / r, xi[1] / r],
                e,
                psi,
            })
        })
        .collect()
}

/// `f̂` of `(|u₂|^{p₁}, |u₁|^{p₂})` via the padded grid.
struct Nonlinearity {
    n: usize,
    m: usize,
    half_length: f64,
    p1: f64,
    p2: f64,
    fft: Fft2,
    buf: Vec<C64>,
}

impl Nonlinearity {
    fn new(n: usize, half_length: f64, p1: f64, p2: f64) -> Self {
        let m = 3 * n / 2;
        Self {
            n,
            m,
            half_length,
            p1,
            p2,
            fft: Fft2::new(m),
            buf: vec![C64::default(); m * m],
        }
    }

    fn pad(&self, i: usize) -> usize {
        let k = wavenumber(self.n, i);
        if k >= 0 {
            k as usize
        } else {
            (self.m as i64 + k) as usize
        }
    }

    fn eval(&mut self, u: &[[C64; 2]], out: &mut [[C64; 2]]) {
        let (n, m) = (self.n, self.m);
        let scale = 1.0 / (4.0 * self.half_length * self.half_length);
        self.buf.iter_mut().for_each(|z| *z = C64::default());
        for i in (0..n).filter(|&i| i != n / 2) {
            let pi = self.pad(i);
            for j in (0..n).filter(|&j| j != n / 2) {
                let c = u[i * n + j];
                let pj = self.pad(j);
                self.buf[pi * m + pj] = (c[0] + C64::i() * c[1]) * scale;
            }
        }
        self.fft.inverse(&mut self.buf);
        let (p1, p2) = (Power::new(self.p1), Power::new(self.p2));
        self.buf
            .par_iter_mut()
            .for_each(|z| *z = C64::new(p1.apply(z.im.abs()), p2.apply(z.re.abs())));
        self.fft.forward(&mut self.buf);
        let dx = 2.0 * self.half_length / m as f64;
        let w = 0.5 * dx * dx;
        for i in 0..n {
            let pi = self.pad(i);
            let ci = (m - pi) % m;
            for j in 0..n {
                if i == n / 2 || j == n / 2 {
                    out[i * n + j] = [C64::default(); 2];
                    continue;
                }
                let pj = self.pad(j);
                let g = self.buf[pi * m + pj];
                let gc = self.buf[ci * m + (m - pj) % m].conj();
                out[i * n + j] = [(g + gc) * w, (g - gc) * C64::new(0.0, -w)];
            }
        }
    }
}

/// `x^p` for `x ≥ 0`, by repeated squaring when `p` is a small integer.
#[derive(Clone, Copy)]
enum Power {
    Int(i32),
    Real(f64),
}

impl Power {
    fn new(p: f64) -> Self {
        if p.fract() == 0.0 && p.abs() <= 64.0 {
            Power::Int(p as i32)
        } else {
            Power::Real(p)
        }
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Power::Int(k) => x.powi(k),
            Power::Real(p) => x.powf(p),
        }
    }
}

/// Squared `‖u‖² + ‖|D|u‖² + ‖u_t‖²` of both components, up to the Parseval factor.
fn size_sq(st: &LatticeState, r2: &[f64]) -> f64 {
    st.u.coeffs
        .par_iter()
        .zip(st.ut.coeffs.par_iter())
        .zip(r2.par_iter())
        .map(|((u, ut), r2)| {
            (1.0 + r2) * (u[0].norm_sqr() + u[1].norm_sqr()) + ut[0].norm_sqr() + ut[1].norm_sqr()
        })
        .sum()
}

/// Steps between blow-up checks.
const CHECK_EVERY: usize = 10;

fn output_steps(setup: &SemilinearSetup) -> Result<(usize, Vec<usize>)> {
    let SemilinearSetup {
        p1, p2, dt, t_end, ..
    } = *setup;
    if !(p1 > 1.0 && p2 > 1.0) {
        return Err(Error::InvalidArgument("exponents must exceed 1".into()));
    }
    if !(dt > 0.0 && t_end >= 0.0 && dt.is_finite() && t_end.is_finite()) {
        return Err(Error::InvalidArgument(
            "need dt > 0 and a finite t_end ≥ 0".into(),
        ));
    }
    let to_step = |t: f64| -> Result<usize> {
        let k = (t / dt).round();
        if !(k >= 0.0) || (k * dt - t).abs() > 1e-9 * dt.max(t) {
            return Err(Error::InvalidArgument(format!(
                "time {t} is not a whole number of steps of {dt}"
            )));
        }
        Ok(k as usize)
    };
    let total = to_step(t_end)?;
    let outs = setup
        .output_times
        .iter()
        .map(|&t| to_step(t))
        .collect::<Result<Vec<_>>>()?;
    if outs.is_empty() || outs.windows(2).any(|w| w[1] <= w[0]) || *outs.last().unwrap() > total {
        return Err(Error::InvalidArgument(
            "output times must be strictly ascending within [0, t_end]".into(),
        ));
    }
    Ok((total, outs))
}

/// Runs the ETD scheme; fails with [`Error::BlowUp`] once the total norm
/// `(‖u‖² + ‖|D|u‖² + ‖u_t‖²)^{1/2}`, which bounds every tracked norm, exceeds
/// [`BLOW_UP_FACTOR`] times its initial value (checked every few steps).
pub fn solve_semilinear(
    p: &SystemParams,
    init: &LatticeState,
    setup: &SemilinearSetup,
) -> Result<SemilinearResult> {
    let (total, outs) = output_steps(setup)?;
    let h = setup.dt;
    let n = init.n();
    let steps = mode_steps(p, init, h);
    let mut nl = Nonlinearity::new(n, init.u.half_length, setup.p1, setup.p2);
    let mut st = init.clone();
    let mut forcing = vec![[C64::default(); 2]; n * n];
    let r2: Vec<f64> = (0..n * n).map(|k| init.u.radius(k).powi(2)).collect();
    let limit = BLOW_UP_FACTOR * BLOW_UP_FACTOR * size_sq(init, &r2).max(f64::MIN_POSITIVE);
    let mut rows: Vec<[f64; 8]> = Vec::with_capacity(outs.len());
    let mut next = 0;
    for step in 0..=total {
        if next < outs.len() && outs[next] == step {
            let [a, b] = [0, 1].map(|c| component_norms(&st, c));
            rows.push([a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3]]);
            next += 1;
        }
        if step == total {
            break;
        }
        if setup.forcing {
            nl.eval(&st.u.coeffs, &mut forcing);
        }
        st.u.coeffs
            .par_iter_mut()
            .zip(st.ut.coeffs.par_iter_mut())
            .zip(forcing.par_iter())
            .zip(steps.par_iter())
            .for_each(|(((u, ut), f), ms)| match ms {
                None => {
                    for c in 0..2 {
                        u[c] += ut[c] * h + f[c] * (0.5 * h * h);
                        ut[c] += f[c] * h;
                    }
                }
                Some(ms) => {
                    let v = rotate(ms.eta, *u);
                    let vt = rotate(ms.eta, *ut);
                    let g = rotate(ms.eta, *f);
                    let mut nv = [C64::default(); 2];
                    let mut nvt = [C64::default(); 2];
                    for b in 0..2 {
                        let (e, psi) = (ms.e[b], ms.psi[b]);
                        nv[b] = v[b] * e[0][0] + vt[b] * e[0][1] + g[b] * psi[0];
                        nvt[b] = v[b] * e[1][0] + vt[b] * e[1][1] + g[b] * psi[1];
                    }
                    *u = rotate(ms.eta, nv);
                    *ut = rotate(ms.eta, nvt);
                }
            });
        if setup.forcing
            && ((step + 1) % CHECK_EVERY == 0 || step + 1 == total)
            && !(size_sq(&st, &r2) <= limit)
        {
            return Err(Error::BlowUp((step + 1) as f64 * h));
        }
    }
    let times: Vec<f64> = outs.iter().map(|&k| k as f64 * h).collect();
    let mut table = NormTable::new(times);
    for k in 1..=2 {
        for (j, name) in component_columns(k).into_iter().enumerate() {
            table.push_column(name, rows.iter().map(|r| r[4 * (k - 1) + j]).collect());
        }
    }
    Ok(SemilinearResult {
        table,
        final_state: st,
        steps: total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossCheck {
    pub component: usize,
    pub fit: DecayFit,
    /// `−(2−m)/(2m) + ℓ_k + tolerance`.
    pub bound: f64,
    pub pass: bool,
}

/// Energy slope of each component against the predicted rate with loss.
pub fn decay_with_loss_check(
    report: &ExponentReport,
    table: &NormTable,
    window: (f64, f64),
) -> Result<[LossCheck; 2]> {
    if report.gate == Gate::Fail {
        return Err(Error::InvalidArgument(
            "gate failed: no decay rate is claimed".into(),
        ));
    }
    if !(window.0 > 0.0 && window.1 >= 10.0 * window.0) {
        return Err(Error::InvalidArgument(format!(
            "fit window [{}, {}] spans less than a decade",
            window.0, window.1
        )));
    }
    let check = |k: usize| -> Result<LossCheck> {
        let col = table.column(&energy_column(k)).ok_or_else(|| {
            Error::InvalidArgument(format!("missing column {}", energy_column(k)))
        })?;
        let fit = fit_decay(&table.times, col, window)?;
        let bound = report.energy_rate(k).expect("gate passed") + LOSS_SLOPE_TOL;
        Ok(LossCheck {
            component: k,
            fit,
            bound,
            pass: fit.slope <= bound,
        })
    };
    Ok([check(1)?, check(2)?])
}
