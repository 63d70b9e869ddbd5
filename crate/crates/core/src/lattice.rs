//! Periodic N×N lattice realization at the (û, û_t) level.
//!
//! Coefficients are samples of the continuum transform `û(ξ_k)` at
//! `ξ_k = (π/L)k` in FFT order, so that `u(x_j) = (2L)^{−2} Σ_k û_k e^{iξ_k·x_j}`
//! on the grid `x_j = j·dx`, `dx = 2L/n` (also in FFT order, origin at index 0).

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::data::InitialData;
use crate::elastic::{dc_evolve, to_first_order, FrequencyPoint, SystemParams, Vec2, C64};
use crate::error::{Error, Result};
use crate::oscillator::DampedOscillator;
use crate::table::{column_name, pairwise_sum, Lebesgue, NormTable};

/// Unnormalized 2D FFT on row-major square arrays.
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn rows(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [C64]) {
        let n = self.n;
        let rows_per_task = (n / rayon::current_num_threads().max(1)).clamp(1, n);
        data.par_chunks_mut(n * rows_per_task).for_each(|chunk| {
            let mut scratch = vec![C64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(chunk, &mut scratch);
        });
    }

    fn apply(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [C64]) {
        assert_eq!(data.len(), self.n * self.n);
        self.rows(fft, data);
        transpose(data, self.n);
        self.rows(fft, data);
        transpose(data, self.n);
    }

    /// `Σ_j a_j e^{−2πi jk/n}`.
    pub fn forward(&self, data: &mut [C64]) {
        self.apply(&self.fwd, data)
    }

    /// `Σ_k a_k e^{+2πi jk/n}` (no `1/n²`).
    pub fn inverse(&self, data: &mut [C64]) {
        self.apply(&self.inv, data)
    }
}

fn transpose(a: &mut [C64], n: usize) {
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (ib..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                let j0 = if ib == jb { i + 1 } else { jb };
                for j in j0..(jb + B).min(n) {
                    a.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

pub fn wavenumber(n: usize, i: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Lattice Fourier coefficients of a 2-component field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField2D {
    pub n: usize,
    pub half_length: f64,
    pub coeffs: Vec<[C64; 2]>,
}

impl SpectralField2D {
    pub fn zeros(n: usize, half_length: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "lattice size {n} must be a power of two ≥ 4"
            )));
        }
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "box half-length {half_length}"
            )));
        }
        Ok(Self {
            n,
            half_length,
            coeffs: vec![[C64::default(); 2]; n * n],
        })
    }

    /// Samples a continuum transform; the unpaired Nyquist row and column are
    /// left at zero so real fields stay exactly Hermitian.
    pub fn from_fourier(
        n: usize,
        half_length: f64,
        f: impl Fn([f64; 2]) -> [C64; 2] + Sync,
    ) -> Result<Self> {
        let mut out = Self::zeros(n, half_length)?;
        let dk = out.dk();
        out.coeffs.par_iter_mut().enumerate().for_each(|(idx, c)| {
            let (i, j) = (idx / n, idx % n);
            if i == n / 2 || j == n / 2 {
                return;
            }
            *c = f([dk * wavenumber(n, i) as f64, dk * wavenumber(n, j) as f64]);
        });
        Ok(out)
    }

    pub fn dk(&self) -> f64 {
        std::f64::consts::PI / self.half_length
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    pub fn xi(&self, idx: usize) -> [f64; 2] {
        let dk = self.dk();
        [
            dk * wavenumber(self.n, idx / self.n) as f64,
            dk * wavenumber(self.n, idx % self.n) as f64,
        ]
    }

    pub fn radius(&self, idx: usize) -> f64 {
        let x = self.xi(idx);
        x[0].hypot(x[1])
    }

    /// `‖|D|ˢ u^{(comp)}‖_{L²}` by Parseval on the lattice.
    pub fn component_norm(&self, comp: usize, s: f64) -> f64 {
        let terms: Vec<f64> = (0..self.coeffs.len())
            .map(|k| multiplier(self.radius(k), s).powi(2) * self.coeffs[k][comp].norm_sqr())
            .collect();
        (pairwise_sum(&terms) / (4.0 * self.half_length * self.half_length)).sqrt()
    }

    pub fn norm_l2(&self, s: f64) -> f64 {
        (self.component_norm(0, s).powi(2) + self.component_norm(1, s).powi(2)).sqrt()
    }

    /// Physical samples of `|D|ˢ u`, one array per component.
    pub fn to_physical(&self, fft: &Fft2, s: f64) -> [Vec<C64>; 2] {
        let scale = 1.0 / (4.0 * self.half_length * self.half_length);
        [0, 1].map(|comp| {
            let mut a: Vec<C64> = (0..self.coeffs.len())
                .map(|k| self.coeffs[k][comp] * (multiplier(self.radius(k), s) * scale))
                .collect();
            fft.inverse(&mut a);
            a
        })
    }

    pub fn from_physical(
        n: usize,
        half_length: f64,
        fft: &Fft2,
        samples: [Vec<C64>; 2],
    ) -> Result<Self> {
        let mut out = Self::zeros(n, half_length)?;
        let dx2 = out.dx() * out.dx();
        for (comp, mut a) in samples.into_iter().enumerate() {
            if a.len() != n * n {
                return Err(Error::InvalidArgument(
                    "sample count does not match the lattice".into(),
                ));
            }
            fft.forward(&mut a);
            for (c, v) in out.coeffs.iter_mut().zip(a) {
                c[comp] = v * dx2;
            }
        }
        Ok(out)
    }

    pub fn norm(&self, fft: &Fft2, s: f64, q: Lebesgue) -> f64 {
        match q {
            Lebesgue::L2 => self.norm_l2(s),
            Lebesgue::Inf => {
                let [a, b] = self.to_physical(fft, s);
                a.iter()
                    .zip(&b)
                    .map(|(x, y)| (x.norm_sqr() + y.norm_sqr()).sqrt())
                    .fold(0.0, f64::max)
            }
        }
    }
}

/// `|ξ|ˢ`, with `0⁰ = 1`.
fn multiplier(r: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        r.powf(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub u: SpectralField2D,
    pub ut: SpectralField2D,
}

/// Rotation into the speed blocks: `v = M(η)û`, with `M` its own inverse.
#[inline]
pub(crate) fn rotate(eta: [f64; 2], u: [C64; 2]) -> [C64; 2] {
    [u[0] * eta[0] + u[1] * eta[1], u[0] * eta[1] - u[1] * eta[0]]
}

/// Exact evolution of one lattice mode through time `t`.
pub fn evolve_mode(
    p: &SystemParams,
    xi: [f64; 2],
    u: [C64; 2],
    ut: [C64; 2],
    t: f64,
) -> ([C64; 2], [C64; 2]) {
    let r = xi[0].hypot(xi[1]);
    if r == 0.0 {
        let (a, b) = dc_evolve(&Vec2::new(u[0], u[1]), &Vec2::new(ut[0], ut[1]), t);
        return ([a[0], a[1]], [b[0], b[1]]);
    }
    let eta = [xi[0] / r, xi[1] / r];
    let v = rotate(eta, u);
    let vt = rotate(eta, ut);
    let mut nv = [C64::default(); 2];
    let mut nvt = [C64::default(); 2];
    for (blk, c) in p.speeds().into_iter().enumerate() {
        let e = DampedOscillator::new(c, r).exp_matrix(t);
        nv[blk] = v[blk] * e[0][0] + vt[blk] * e[0][1];
        nvt[blk] = v[blk] * e[1][0] + vt[blk] * e[1][1];
    }
    (rotate(eta, nv), rotate(eta, nvt))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    /// The displacement `u`.
    U,
    /// The velocity `u_t`.
    Ut,
    /// The pair `(|D|u, u_t)`.
    Energy,
}

impl Quantity {
    pub fn label(self) -> &'static str {
        match self {
            Quantity::U => "u",
            Quantity::Ut => "ut",
            Quantity::Energy => "energy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSpec {
    pub quantity: Quantity,
    pub s: f64,
    pub q: Lebesgue,
}

impl NormSpec {
    pub fn new(quantity: Quantity, s: f64, q: Lebesgue) -> Self {
        Self { quantity, s, q }
    }

    pub fn column(&self) -> String {
        column_name(self.quantity.label(), self.s, self.q)
    }
}

impl LatticeState {
    pub fn from_data(n: usize, half_length: f64, data: &InitialData) -> Result<Self> {
        let u = SpectralField2D::from_fourier(n, half_length, |xi| {
            let (a, _) = data.fourier(xi);
            [a[0], a[1]]
        })?;
        let ut = SpectralField2D::from_fourier(n, half_length, |xi| {
            let (_, b) = data.fourier(xi);
            [b[0], b[1]]
        })?;
        Ok(Self { u, ut })
    }

    pub fn n(&self) -> usize {
        self.u.n
    }

    pub fn evolve(&self, p: &SystemParams, t: f64) -> LatticeState {
        let mut out = self.clone();
        let field = &self.u;
        out.u
            .coeffs
            .par_iter_mut()
            .zip(out.ut.coeffs.par_iter_mut())
            .enumerate()
            .for_each(|(k, (u, ut))| {
                let (a, b) = evolve_mode(p, field.xi(k), *u, *ut, t);
                *u = a;
                *ut = b;
            });
        out
    }

    /// `(|D|^{1+s}u, |D|^s u_t)` in physical space, four arrays.
    fn energy_physical(&self, fft: &Fft2, s: f64) -> [Vec<C64>; 4] {
        let [a, b] = self.u.to_physical(fft, 1.0 + s);
        let [c, d] = self.ut.to_physical(fft, s);
        [a, b, c, d]
    }

    pub fn norm(&self, fft: &Fft2, spec: &NormSpec) -> f64 {
        match spec.quantity {
            Quantity::U => self.u.norm(fft, spec.s, spec.q),
            Quantity::Ut => self.ut.norm(fft, spec.s, spec.q),
            Quantity::Energy => match spec.q {
                Lebesgue::L2 => {
                    (self.u.norm_l2(1.0 + spec.s).powi(2) + self.ut.norm_l2(spec.s).powi(2)).sqrt()
                }
                Lebesgue::Inf => {
                    let f = self.energy_physical(fft, spec.s);
                    (0..f[0].len())
                        .map(|j| f.iter().map(|a| a[j].norm_sqr()).sum::<f64>().sqrt())
                        .fold(0.0, f64::max)
                }
            },
        }
    }

    /// `‖|ξ|ˢ W‖_{L²}` of the first-order state (the zero mode carries `W = (û_t, û_t)`).
    pub fn w_norm(&self, p: &SystemParams, s: f64) -> f64 {
        let terms: Vec<f64> = (0..self.u.coeffs.len())
            .map(|k| {
                let xi = self.u.xi(k);
                let f = FrequencyPoint::new(xi);
                let (u, ut) = (self.u.coeffs[k], self.ut.coeffs[k]);
                let w2 = if f.r == 0.0 {
                    2.0 * (ut[0].norm_sqr() + ut[1].norm_sqr())
                } else {
                    to_first_order(p, &f, &Vec2::new(u[0], u[1]), &Vec2::new(ut[0], ut[1]))
                        .expect("r > 0")
                        .0
                        .norm_squared()
                };
                multiplier(f.r, s).powi(2) * w2
            })
            .collect();
        (pairwise_sum(&terms) / (4.0 * self.u.half_length * self.u.half_length)).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct LatticeSolution {
    pub table: NormTable,
    pub final_state: LatticeState,
}

/// Evaluates the exact lattice solution at each requested time and tabulates
/// the requested norms. Use [`LatticeState::evolve`] for the fields themselves.
pub fn solve_linear_lattice(
    p: &SystemParams,
    state: &LatticeState,
    times: &[f64],
    norms: &[NormSpec],
) -> Result<LatticeSolution> {
    if times.is_empty()
        || times.iter().any(|&t| !(t >= 0.0))
        || times.windows(2).any(|w| w[1] < w[0])
    {
        return Err(Error::InvalidArgument(
            "times must be nonempty, nonnegative and ascending".into(),
        ));
    }
    let fft = Fft2::new(state.n());
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); norms.len()];
    let mut last = state.clone();
    for &t in times {
        last = state.evolve(p, t);
        for (col, spec) in cols.iter_mut().zip(norms) {
            col.push(last.norm(&fft, spec));
        }
    }
    let mut table = NormTable::new(times.to_vec());
    for (spec, col) in norms.iter().zip(cols) {
        table.push_column(spec.column(), col);
    }
    Ok(LatticeSolution {
        table,
        final_state: last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_data, DataKind};
    use crate::elastic::{from_first_order, make_params};
    use crate::propagator::dense_propagator;
    use std::f64::consts::PI;

    fn p12() -> SystemParams {
        make_params(1.0, 2.0).unwrap()
    }

    #[test]
    fn fft_roundtrip_and_transpose() {
        let n = 16;
        let fft = Fft2::new(n);
        let orig: Vec<C64> = (0..n * n)
            .map(|k| C64::new((k as f64).sin(), (k as f64 * 0.3).cos()))
            .collect();
        let mut a = orig.clone();
        fft.forward(&mut a);
        fft.inverse(&mut a);
        for (x, y) in a.iter().zip(&orig) {
            assert!((x / (n * n) as f64 - y).norm() < 1e-13);
        }
        let mut t = orig.clone();
        transpose(&mut t, n);
        assert_eq!(t[3 * n + 5], orig[5 * n + 3]);
    }

    #[test]
    fn zero_field_norms() {
        let f = SpectralField2D::zeros(16, 5.0).unwrap();
        let fft = Fft2::new(16);
        for s in [0.0, 1.0] {
            for q in [Lebesgue::L2, Lebesgue::Inf] {
                assert_eq!(f.norm(&fft, s, q), 0.0);
            }
        }
        assert!(SpectralField2D::zeros(12, 5.0).is_err());
    }

    #[test]
    fn gaussian_l2_matches_closed_form() {
        // ‖g‖² = 1/(4πσ²) for the unit-mass Gaussian
        let data = InitialData::velocity(make_data(DataKind::Gaussian, 1.0).unwrap(), [1.0, 0.0]);
        let st = LatticeState::from_data(512, 40.0, &data).unwrap();
        let exact = (1.0 / (4.0 * PI)).sqrt();
        assert!((st.ut.norm_l2(0.0) / exact - 1.0).abs() < 1e-6);
        // physical samples reproduce the Gaussian at the origin
        let fft = Fft2::new(512);
        let [a, _] = st.ut.to_physical(&fft, 0.0);
        assert!((a[0].re - 1.0 / (2.0 * PI)).abs() < 1e-10);
    }

    #[test]
    fn single_mode_multiplier() {
        let mut f = SpectralField2D::zeros(32, PI).unwrap();
        // |ξ| = 2 at k = (2, 0) with L = π
        let idx = 2 * 32;
        f.coeffs[idx] = [C64::new(1.0, 0.0), C64::new(0.0, 0.5)];
        assert!((f.norm_l2(1.0) - 2.0 * f.norm_l2(0.0)).abs() < 1e-14);
    }

    #[test]
    fn single_conjugate_mode_matches_dense_oracle() {
        let p = p12();
        let n = 32;
        let mut st = LatticeState {
            u: SpectralField2D::zeros(n, 10.0).unwrap(),
            ut: SpectralField2D::zeros(n, 10.0).unwrap(),
        };
        let k = 3 * n + 2;
        let kc = (n - 3) * n + (n - 2);
        let amp = [C64::new(0.7, 0.2), C64::new(-0.1, 0.4)];
        st.u.coeffs[k] = amp;
        st.u.coeffs[kc] = [amp[0].conj(), amp[1].conj()];
        for t in [0.5, 3.0, 40.0] {
            let out = st.evolve(&p, t);
            let f = FrequencyPoint::new(st.u.xi(k));
            let w = to_first_order(&p, &f, &Vec2::new(amp[0], amp[1]), &Vec2::zeros()).unwrap();
            let w1 = crate::elastic::StateVector(dense_propagator(&p, f.r, t) * w.0);
            let (u, ut) = from_first_order(&p, &f, &w1).unwrap();
            for c in 0..2 {
                assert!((out.u.coeffs[k][c] - u[c]).norm() < 1e-10);
                assert!((out.ut.coeffs[k][c] - ut[c]).norm() < 1e-10);
                assert!((out.u.coeffs[kc][c] - u[c].conj()).norm() < 1e-10);
            }
            let others: f64 = out
                .u
                .coeffs
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k && *i != kc)
                .map(|(_, c)| c[0].norm() + c[1].norm())
                .sum();
            assert_eq!(others, 0.0);
        }
    }

    #[test]
    fn smallest_frequency_approaches_dc_evolution() {
        let p = p12();
        let u = [C64::new(0.3, 0.0), C64::new(-0.2, 0.1)];
        let ut = [C64::new(1.0, 0.0), C64::new(0.5, -0.5)];
        let (a, b) = evolve_mode(&p, [1e-6, 0.0], u, ut, 2.0);
        let (c, d) = evolve_mode(&p, [0.0, 0.0], u, ut, 2.0);
        for i in 0..2 {
            assert!((a[i] - c[i]).norm() <= 1e-6 * c[i].norm());
            assert!((b[i] - d[i]).norm() <= 1e-6 * d[i].norm());
        }
    }

    #[test]
    fn spectral_convergence_in_n() {
        let p = p12();
        let data = InitialData::velocity(make_data(DataKind::Gaussian, 1.0).unwrap(), [1.0, 0.5]);
        let specs = [
            NormSpec::new(Quantity::U, 0.0, Lebesgue::L2),
            NormSpec::new(Quantity::Energy, 1.0, Lebesgue::L2),
        ];
        let a = solve_linear_lattice(
            &p,
            &LatticeState::from_data(512, 40.0, &data).unwrap(),
            &[2.0],
            &specs,
        )
        .unwrap();
        let b = solve_linear_lattice(
            &p,
            &LatticeState::from_data(1024, 40.0, &data).unwrap(),
            &[2.0],
            &specs,
        )
        .unwrap();
        for (x, y) in a.table.columns.iter().zip(&b.table.columns) {
            assert!((x.values[0] / y.values[0] - 1.0).abs() < 1e-8, "{}", x.name);
        }
    }

    #[test]
    fn physical_roundtrip() {
        let data =
            InitialData::displacement(make_data(DataKind::DGaussian, 1.5).unwrap(), [0.3, -1.0]);
        let st = LatticeState::from_data(64, 20.0, &data).unwrap();
        let fft = Fft2::new(64);
        let phys = st.u.to_physical(&fft, 0.0);
        let back = SpectralField2D::from_physical(64, 20.0, &fft, phys).unwrap();
        for (x, y) in back.coeffs.iter().zip(&st.u.coeffs) {
            assert!((x[0] - y[0]).norm() < 1e-12 && (x[1] - y[1]).norm() < 1e-12);
        }
    }

    #[test]
    fn lattice_agrees_with_radial_quadrature() {
        use crate::radial::{solve_linear_radial, RadialGrid, RadialProfile, DEFAULT_ANGLES};
        let p = p12();
        let data = InitialData::velocity(make_data(DataKind::Gaussian, 1.0).unwrap(), [0.6, 0.8]);
        let st = LatticeState::from_data(256, 40.0, &data).unwrap();
        let pr =
            RadialProfile::from_data(&p, &RadialGrid::default_2d(), &data, DEFAULT_ANGLES).unwrap();
        let times = [0.0, 5.0, 20.0];
        let rad = solve_linear_radial(&p, &pr, &times, &[0.0, 1.0]).unwrap();
        for (k, &t) in times.iter().enumerate() {
            let lat = st.evolve(&p, t);
            for s in [0.0, 1.0] {
                let a = lat.w_norm(&p, s);
                let b = rad
                    .table
                    .column(&column_name("W", s, Lebesgue::L2))
                    .unwrap()[k];
                assert!((a / b - 1.0).abs() < 1e-2, "t={t} s={s}: {a} vs {b}");
            }
        }
    }
}
