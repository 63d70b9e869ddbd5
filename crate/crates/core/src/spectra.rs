//! Spectrum of `Φ(r)`: labeled quartic roots, eigenprojections, asymptotic
//! expansions at both ends of the frequency axis, and the dissipativity bound.
//!
//! The quartic factors into one quadratic per speed block,
//! `λ² + c²r²λ + c²r²` with `c ∈ {b, a}`; each root belongs to exactly one
//! block, and the block pair is either a complex-conjugate pair (`cr < 2`) or a
//! real slow/fast pair (`cr > 2`).

use nalgebra::Matrix4;
use num_complex::Complex;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::dd::{self, Cdd};
use crate::elastic::{phi, Mat4, SystemParams, C64};
use crate::error::{Error, Result};

/// Zone boundary separating the small (`r ≤ ε`) and large (`r ≥ 1/ε`) regimes.
pub const EPS_ZONE: f64 = 0.1;

/// A spectrum is flagged degenerate when an eigenprojection's Frobenius norm
/// exceeds this bound, i.e. when the eigenbasis is too ill-conditioned for the
/// product formula to be trusted.
pub const PROJECTOR_NORM_LIMIT: f64 = 1e6;

/// Eigenvalue branch. `P` branches belong to speed `b`, `S` branches to speed `a`.
/// `Plus` is the `+icr` root at low frequency, which continues into the slow
/// real root beyond the exceptional point `r = 2/c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    PPlus,
    PMinus,
    SPlus,
    SMinus,
}

impl Branch {
    /// Storage order, equal to the low-frequency numbering 1..4.
    pub const ALL: [Branch; 4] = [Branch::PPlus, Branch::PMinus, Branch::SPlus, Branch::SMinus];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Low-frequency numbering: 1 = +ib, 2 = −ib, 3 = +ia, 4 = −ia.
    pub fn small_label(self) -> usize {
        self.index() + 1
    }

    /// High-frequency numbering: 1, 2 = slow roots (b, a); 3, 4 = fast roots (b, a).
    pub fn large_label(self) -> usize {
        match self {
            Branch::PPlus => 1,
            Branch::SPlus => 2,
            Branch::PMinus => 3,
            Branch::SMinus => 4,
        }
    }

    pub fn from_small_label(j: usize) -> Option<Branch> {
        Branch::ALL.get(j.checked_sub(1)?).copied()
    }

    pub fn from_large_label(j: usize) -> Option<Branch> {
        Branch::ALL.into_iter().find(|b| b.large_label() == j)
    }

    pub fn speed(self, p: &SystemParams) -> f64 {
        match self {
            Branch::PPlus | Branch::PMinus => p.b(),
            Branch::SPlus | Branch::SMinus => p.a(),
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Branch::PPlus | Branch::SPlus => 1.0,
            Branch::PMinus | Branch::SMinus => -1.0,
        }
    }

    /// Frequency of the double root of this branch's block.
    pub fn exceptional_point(self, p: &SystemParams) -> f64 {
        2.0 / self.speed(p)
    }
}

pub fn char_poly_coeffs(p: &SystemParams, r: f64) -> [f64; 5] {
    let (a2, b2, r2) = (p.a() * p.a(), p.b() * p.b(), r * r);
    [
        1.0,
        (a2 + b2) * r2,
        (a2 + b2) * r2 + a2 * b2 * r2 * r2,
        2.0 * a2 * b2 * r2 * r2,
        a2 * b2 * r2 * r2,
    ]
}

fn char_poly_dd(p: &SystemParams, r: f64) -> [TwoFloat; 5] {
    let a2 = dd::dd(p.a()) * dd::dd(p.a());
    let b2 = dd::dd(p.b()) * dd::dd(p.b());
    let r2 = dd::dd(r) * dd::dd(r);
    let r4 = r2 * r2;
    [
        dd::dd(1.0),
        (a2 + b2) * r2,
        (a2 + b2) * r2 + a2 * b2 * r4,
        dd::dd(2.0) * a2 * b2 * r4,
        a2 * b2 * r4,
    ]
}

pub fn residual_tolerance(p: &SystemParams, r: f64) -> f64 {
    let s = p.a() * p.a() + p.b() * p.b();
    1e-10 * (s * s * r.powi(4)).max(1.0)
}

fn companion_roots(coeffs: &[f64; 5]) -> [C64; 4] {
    let c = Matrix4::new(
        -coeffs[1], -coeffs[2], -coeffs[3], -coeffs[4], //
        1.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0,
    );
    let ev = c.complex_eigenvalues();
    [ev[0], ev[1], ev[2], ev[3]]
}

/// Simultaneous (Aberth–Ehrlich) refinement in double-double; the mutual
/// repulsion keeps nearly coincident roots from collapsing onto one another.
fn aberth_polish(coeffs: &[TwoFloat; 5], seeds: [C64; 4]) -> [Cdd; 4] {
    let mut z: [Cdd; 4] = seeds.map(dd::cdd);
    // Break exact ties in the seeds so the repulsion term is finite.
    for i in 0..4 {
        for j in 0..i {
            if z[i] == z[j] {
                let bump = 1e-9 * (1.0 + dd::abs(z[i]));
                z[i] += Complex::new(dd::dd(bump), dd::dd(bump * 0.5));
            }
        }
    }
    let one = Complex::new(dd::dd(1.0), dd::dd(0.0));
    for _ in 0..200 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            let (f, df) = dd::horner(coeffs, z[i]);
            if dd::abs(f) == 0.0 || dd::abs(df) == 0.0 {
                continue;
            }
            let w = f / df;
            let mut s = dd::zero();
            for j in 0..4 {
                if j != i {
                    s += one / (z[i] - z[j]);
                }
            }
            let corr = w / (one - w * s);
            z[i] -= corr;
            worst = worst.max(dd::abs(corr) / (1e-300 + dd::abs(z[i])));
        }
        if worst < 1e-30 {
            break;
        }
    }
    z
}

fn block_residual(c: f64, r: f64, z: Cdd) -> f64 {
    let k = dd::dd(c) * dd::dd(c) * dd::dd(r) * dd::dd(r);
    let kc = Complex::new(k, dd::dd(0.0));
    let q = z * z + kc * z + kc;
    let az = dd::abs(z);
    let kf = f64::from(k);
    dd::abs(q) / (az * az + kf * az + kf)
}

fn plus_key(z: Cdd) -> TwoFloat {
    z.re + z.im
}

/// Labels four unordered roots: two per speed block (by block residual), and
/// within a block the larger `Re + Im` is the `Plus` branch.
fn classify(p: &SystemParams, r: f64, roots: [Cdd; 4]) -> [Cdd; 4] {
    let mut score: Vec<(f64, usize)> = roots
        .iter()
        .enumerate()
        .map(|(i, &z)| (block_residual(p.b(), r, z) - block_residual(p.a(), r, z), i))
        .collect();
    score.sort_by(|x, y| x.0.total_cmp(&y.0));
    let pick = |i: usize, j: usize| {
        let (x, y) = (roots[score[i].1], roots[score[j].1]);
        if plus_key(x) >= plus_key(y) {
            (x, y)
        } else {
            (y, x)
        }
    };
    let (pp, pm) = pick(0, 1);
    let (sp, sm) = pick(2, 3);
    [pp, pm, sp, sm]
}

pub(crate) fn roots_dd(p: &SystemParams, r: f64) -> Result<[Cdd; 4]> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::ZeroFrequency);
    }
    let coeffs = char_poly_coeffs(p, r);
    let cdd = char_poly_dd(p, r);
    let z = aberth_polish(&cdd, companion_roots(&coeffs));
    let tol = residual_tolerance(p, r);
    for &zi in &z {
        let res = dd::abs(dd::horner(&cdd, zi).0);
        if !(res <= tol) {
            return Err(Error::RootResidual {
                r,
                residual: res,
                tol,
            });
        }
    }
    Ok(classify(p, r, z))
}

/// Branch-labeled eigenvalues in [`Branch::ALL`] order.
pub fn eigenvalues(p: &SystemParams, r: f64) -> Result<[C64; 4]> {
    Ok(roots_dd(p, r)?.map(dd::to_c64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeDecomposition {
    pub r: f64,
    /// Indexed by [`Branch::index`].
    pub lambdas: [C64; 4],
    /// `None` when two eigenvalues coincide exactly.
    pub projections: Option<[Mat4; 4]>,
    pub degenerate: bool,
    pub min_gap: f64,
    pub max_projector_norm: f64,
}

impl ModeDecomposition {
    pub fn lambda(&self, b: Branch) -> C64 {
        self.lambdas[b.index()]
    }

    pub fn projection(&self, b: Branch) -> Result<&Mat4> {
        match (&self.projections, self.degenerate) {
            (Some(ps), false) => Ok(&ps[b.index()]),
            _ => Err(Error::Degenerate {
                r: self.r,
                gap: self.min_gap,
            }),
        }
    }

    pub fn spectral_radius(&self) -> f64 {
        self.lambdas.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_real_part(&self) -> f64 {
        self.lambdas
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn decompose(p: &SystemParams, r: f64) -> Result<ModeDecomposition> {
    let z = roots_dd(p, r)?;
    let lambdas = z.map(dd::to_c64);
    let mut min_gap = f64::INFINITY;
    for i in 0..4 {
        for j in 0..i {
            min_gap = min_gap.min(dd::abs(z[i] - z[j]));
        }
    }
    if !(min_gap > 0.0) {
        return Ok(ModeDecomposition {
            r,
            lambdas,
            projections: None,
            degenerate: true,
            min_gap,
            max_projector_norm: f64::INFINITY,
        });
    }
    // Φ is block diagonal (components {0, 2} carry speed b, {1, 3} speed a), so
    // each projector is the 2×2 factor of its own block. The full four-root
    // product agrees in exact arithmetic but divides by the cross-block gap,
    // which closes like 0.75/r² at high frequency.
    let phi_dd = dd::from_mat(&phi(p, r));
    let mut projections = [Mat4::zeros(); 4];
    let mut max_norm: f64 = 0.0;
    for b in Branch::ALL {
        let j = b.index();
        let partner = j ^ 1;
        let comps = if matches!(b, Branch::PPlus | Branch::PMinus) {
            [0, 2]
        } else {
            [1, 3]
        };
        let shifted = dd::shift(&phi_dd, z[partner]);
        let inv = Complex::new(dd::dd(1.0), dd::dd(0.0)) / (z[j] - z[partner]);
        let mut pj = Mat4::zeros();
        for &row in &comps {
            for &col in &comps {
                pj[(row, col)] = dd::to_c64(shifted[row][col] * inv);
            }
        }
        max_norm = max_norm.max(pj.norm());
        projections[j] = pj;
    }
    let degenerate = !(max_norm <= PROJECTOR_NORM_LIMIT);
    Ok(ModeDecomposition {
        r,
        lambdas,
        projections: Some(projections),
        degenerate,
        min_gap,
        max_projector_norm: max_norm,
    })
}

pub fn eigenprojection(p: &SystemParams, r: f64, j: Branch) -> Result<Mat4> {
    decompose(p, r)?.projection(j).copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Small,
    Large,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionResult {
    pub r: f64,
    /// Indexed by [`Branch::index`].
    pub approx_lambdas: [C64; 4],
    pub regime: Regime,
    pub order: u8,
}

impl ExpansionResult {
    pub fn in_validity_zone(&self) -> bool {
        match self.regime {
            Regime::Small => self.r <= EPS_ZONE,
            Regime::Large => self.r >= 1.0 / EPS_ZONE,
        }
    }
}

fn small_dd(p: &SystemParams, r: f64, order: u8, b: Branch) -> Cdd {
    let c = dd::dd(b.speed(p));
    let r = dd::dd(r);
    let im = dd::dd(b.sign()) * c * r;
    let re = if order >= 2 {
        -(c * c * r * r) / dd::dd(2.0)
    } else {
        dd::dd(0.0)
    };
    Complex::new(re, im)
}

fn large_dd(p: &SystemParams, r: f64, b: Branch) -> Cdd {
    let c = dd::dd(b.speed(p));
    let r = dd::dd(r);
    let inv = dd::dd(1.0) / (c * c * r * r);
    let re = if b.sign() > 0.0 {
        dd::dd(-1.0) - inv
    } else {
        -(c * c * r * r) + dd::dd(1.0) + inv
    };
    Complex::new(re, dd::dd(0.0))
}

pub fn expand_small(p: &SystemParams, r: f64, order: u8) -> Result<ExpansionResult> {
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "expansion order {order} (expected 1 or 2)"
        )));
    }
    Ok(ExpansionResult {
        r,
        approx_lambdas: Branch::ALL.map(|b| dd::to_c64(small_dd(p, r, order, b))),
        regime: Regime::Small,
        order,
    })
}

pub fn expand_large(p: &SystemParams, r: f64) -> ExpansionResult {
    ExpansionResult {
        r,
        approx_lambdas: Branch::ALL.map(|b| dd::to_c64(large_dd(p, r, b))),
        regime: Regime::Large,
        order: 2,
    }
}

/// `|exact − expansion|` per branch, evaluated in double-double so the error
/// is resolved even where it falls far below the ulp of the eigenvalue.
pub fn expansion_error(p: &SystemParams, r: f64, regime: Regime) -> Result<[f64; 4]> {
    let exact = roots_dd(p, r)?;
    Ok(Branch::ALL.map(|b| {
        let approx = match regime {
            Regime::Small => small_dd(p, r, 2, b),
            Regime::Large => large_dd(p, r, b),
        };
        dd::abs(exact[b.index()] - approx)
    }))
}

pub fn rho(r: f64) -> f64 {
    r * r / (1.0 + r * r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipativityReport {
    pub c_best: f64,
    pub worst_r: f64,
}

pub fn dissipativity_scan(p: &SystemParams, r_grid: &[f64]) -> Result<DissipativityReport> {
    let mut best = DissipativityReport {
        c_best: f64::INFINITY,
        worst_r: f64::NAN,
    };
    for &r in r_grid {
        let z = roots_dd(p, r)?;
        let max_re = z
            .iter()
            .map(|z| f64::from(z.re))
            .fold(f64::NEG_INFINITY, f64::max);
        let ratio = -max_re / rho(r);
        if ratio < best.c_best {
            best = DissipativityReport {
                c_best: ratio,
                worst_r: r,
            };
        }
    }
    if !(best.c_best > 0.0) {
        return Err(Error::NotDissipative {
            c_best: best.c_best,
            r: best.worst_r,
        });
    }
    Ok(best)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..n)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
        .collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

/// Branch labels obtained by nearest-neighbor continuation along an ascending grid,
/// seeded from the low-frequency expansion at the first node.
#[derive(Debug, Clone)]
pub struct BranchTracker {
    grid: Vec<f64>,
    lambdas: Vec<[C64; 4]>,
}

const PERMUTATIONS: [[usize; 4]; 24] = {
    let mut out = [[0; 4]; 24];
    let mut n = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = 0;
        while b < 4 {
            let mut c = 0;
            while c < 4 {
                if a != b && a != c && b != c {
                    out[n] = [a, b, c, 6 - a - b - c];
                    n += 1;
                }
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
};

fn best_match(prev: &[C64; 4], current: &[C64; 4]) -> [C64; 4] {
    // `current` is already classified; identity is preferred on ties, which
    // happen exactly at the symmetric exceptional-point crossings.
    let cost =
        |perm: &[usize; 4]| -> f64 { (0..4).map(|j| (current[perm[j]] - prev[j]).norm()).sum() };
    let identity = [0, 1, 2, 3];
    let base = cost(&identity);
    let mut best = (base, identity);
    for perm in PERMUTATIONS.iter() {
        let c = cost(perm);
        if c < best.0 * (1.0 - 1e-6) {
            best = (c, *perm);
        }
    }
    best.1.map(|k| current[k])
}

impl BranchTracker {
    pub fn new(p: &SystemParams, grid: &[f64]) -> Result<Self> {
        if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > 0.0) {
            return Err(Error::InvalidArgument(
                "tracker grid must be positive and strictly ascending".into(),
            ));
        }
        let seed = expand_small(p, grid[0], 2)?.approx_lambdas;
        let first = best_match(&seed, &eigenvalues(p, grid[0])?);
        let mut lambdas = vec![first];
        for &r in &grid[1..] {
            let prev = *lambdas.last().expect("nonempty");
            lambdas.push(best_match(&prev, &eigenvalues(p, r)?));
        }
        let last_r = *grid.last().expect("nonempty");
        if last_r >= 1.0 / EPS_ZONE {
            let large = expand_large(p, last_r).approx_lambdas;
            let end = lambdas.last().expect("nonempty");
            if best_match(&large, end) != *end {
                return Err(Error::InvalidArgument(format!(
                    "branch continuation disagrees with the high-frequency expansion at r = {last_r}"
                )));
            }
        }
        Ok(Self {
            grid: grid.to_vec(),
            lambdas,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn lambdas(&self) -> &[[C64; 4]] {
        &self.lambdas
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elastic::make_params;

    fn p12() -> SystemParams {
        make_params(1.0, 2.0).unwrap()
    }

    #[test]
    fn coefficients() {
        assert_eq!(char_poly_coeffs(&p12(), 1.0), [1.0, 5.0, 9.0, 8.0, 4.0]);
        assert_eq!(char_poly_coeffs(&p12(), 0.0), [1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn label_tables() {
        for b in Branch::ALL {
            assert_eq!(Branch::from_small_label(b.small_label()), Some(b));
            assert_eq!(Branch::from_large_label(b.large_label()), Some(b));
        }
        assert_eq!(Branch::from_small_label(0), None);
        assert_eq!(Branch::from_large_label(5), None);
    }

    #[test]
    fn low_frequency_branch_one() {
        let l = eigenvalues(&p12(), 1e-3).unwrap();
        let expect = C64::new(-2e-6, 2e-3);
        assert!((l[0] - expect).norm() <= 8.0 * 1e-9);
        assert!(l[0].im > 0.0 && l[1].im < 0.0 && l[2].im > 0.0 && l[3].im < 0.0);
        assert!((l[2].im - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn high_frequency_branches() {
        let p = p12();
        let l = eigenvalues(&p, 100.0).unwrap();
        let b1 = Branch::from_large_label(1).unwrap();
        let b3 = Branch::from_large_label(3).unwrap();
        assert!((l[b1.index()] - C64::new(-1.0 - 0.25e-4, 0.0)).norm() < 1e-8);
        assert!((l[b3.index()] - C64::new(-4e4 + 1.0 + 0.25e-4, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn expansion_example() {
        let e = expand_small(&p12(), 0.01, 2).unwrap();
        let l3 = e.approx_lambdas[Branch::from_small_label(3).unwrap().index()];
        assert!((l3 - C64::new(-5e-5, 0.01)).norm() < 1e-18);
        assert!(e.in_validity_zone());
        assert!(expand_small(&p12(), 0.01, 3).is_err());
        assert!(!expand_large(&p12(), 2.0).in_validity_zone());
    }

    #[test]
    fn projection_limits() {
        let p = p12();
        let p1 = eigenprojection(&p, 1e-3, Branch::PPlus).unwrap();
        let mut d = Mat4::zeros();
        d[(0, 0)] = C64::new(1.0, 0.0);
        assert!((p1 - d).norm() < 1e-2);
        let p1 = eigenprojection(&p, 1e3, Branch::PPlus).unwrap();
        let mut q = Mat4::zeros();
        for (i, j, v) in [(0, 0, 0.5), (0, 2, -0.5), (2, 0, -0.5), (2, 2, 0.5)] {
            q[(i, j)] = C64::new(v, 0.0);
        }
        assert!((p1 - q).norm() < 1e-2);
    }

    #[test]
    fn completeness_at_sample_points() {
        for r in [0.01, 0.5, 3.0, 200.0] {
            let d = decompose(&p12(), r).unwrap();
            assert!(!d.degenerate);
            let s: Mat4 = d.projections.unwrap().iter().sum();
            assert!((s - Mat4::identity()).norm() <= 1e-8, "r={r}");
        }
    }

    #[test]
    fn exceptional_point_is_flagged() {
        let p = p12();
        let d = decompose(&p, 1.0).unwrap();
        assert!(d.degenerate);
        assert!(matches!(
            d.projection(Branch::PPlus),
            Err(Error::Degenerate { .. })
        ));
        assert!(matches!(
            eigenprojection(&p, 2.0, Branch::SMinus),
            Err(Error::Degenerate { .. })
        ));
        // well away from both exceptional points, cross-block near-coincidence is harmless
        assert!(!decompose(&p, 1e3).unwrap().degenerate);
    }

    #[test]
    fn zero_frequency_rejected() {
        assert_eq!(eigenvalues(&p12(), 0.0), Err(Error::ZeroFrequency));
    }

    #[test]
    fn rho_and_small_r_ratio() {
        assert_eq!(rho(1.0), 0.5);
        let rep = dissipativity_scan(&p12(), &[1e-4]).unwrap();
        assert!((rep.c_best - 0.5).abs() < 1e-6);
        let grid = log_grid(1e-3, 1e3, 200);
        let rep = dissipativity_scan(&p12(), &grid).unwrap();
        assert!(rep.c_best > 0.0 && rep.c_best <= 0.5 * (1.0 + 1e-6));
        assert_eq!(rep.worst_r, grid[0]);
    }

    #[test]
    fn tracker_agrees_with_classification() {
        let p = p12();
        let grid = log_grid(1e-3, 1e3, 1000);
        let tr = BranchTracker::new(&p, &grid).unwrap();
        for (i, &r) in grid.iter().enumerate() {
            assert_eq!(tr.lambdas()[i], eigenvalues(&p, r).unwrap(), "r={r}");
        }
    }

    #[test]
    fn branches_are_continuous_away_from_exceptional_points() {
        let p = p12();
        let grid = log_grid(1e-3, 1e3, 1000);
        let tr = BranchTracker::new(&p, &grid).unwrap();
        // distance from branch j to its nearest neighbour
        let gap = |l: &[C64; 4], j: usize| {
            (0..4)
                .filter(|&k| k != j)
                .map(|k| (l[j] - l[k]).norm())
                .fold(f64::INFINITY, f64::min)
        };
        let eps = [2.0 / p.b(), 2.0 / p.a()];
        for i in 1..grid.len() {
            if eps.iter().any(|&e| grid[i - 1] <= e && e <= grid[i]) {
                continue;
            }
            let (l0, l1) = (&tr.lambdas()[i - 1], &tr.lambdas()[i]);
            for j in 0..4 {
                let local = gap(l0, j).max(gap(l1, j));
                assert!((l1[j] - l0[j]).norm() < local, "r={} branch {j}", grid[i]);
            }
        }
    }
}
