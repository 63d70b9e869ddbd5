//! Closed-form propagation of one speed block, `y'' + k(y' + y) = f` with
//! `k = (c r)²`, via divided differences of the exponential. The formula
//! `f(A) = f(μ₂)I + f[μ₁, μ₂](A − μ₂I)` stays exact through the double root
//! `cr = 2`, where `f[μ, μ] = f'(μ)` is the confluent limit.

use crate::elastic::C64;

pub type Mat2c = [[C64; 2]; 2];
pub type Mat2 = [[f64; 2]; 2];

/// `(e^z − 1)/z`, continuous (= 1) at `z = 0`.
pub fn exprel(z: C64) -> C64 {
    if z.norm() < 0.5 {
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for n in 2..30 {
            term = term * z / n as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Roots of `λ² + kλ + k`, returned as (plus, minus): plus has the larger
/// `Re + Im` (the `+i` root below `k = 4`, the slow real root above it).
pub fn block_roots(c: f64, r: f64) -> (C64, C64) {
    let k = c * c * r * r;
    if k <= 4.0 {
        let im = 0.5 * (k * (4.0 - k)).sqrt();
        (C64::new(-0.5 * k, im), C64::new(-0.5 * k, -im))
    } else {
        let fast = -0.5 * k - 0.5 * (k * (k - 4.0)).sqrt();
        (C64::new(k / fast, 0.0), C64::new(fast, 0.0))
    }
}

/// `exp(tA)` for a 2×2 matrix with eigenvalues `mu_hi` (larger real part) and `mu_lo`.
pub fn exp2(a: &Mat2c, mu_hi: C64, mu_lo: C64, t: f64) -> Mat2c {
    let e = (mu_hi * t).exp();
    let dd = e * t * exprel((mu_lo - mu_hi) * t);
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let shifted = a[i][j] - if i == j { mu_hi } else { C64::new(0.0, 0.0) };
            out[i][j] = dd * shifted + if i == j { e } else { C64::new(0.0, 0.0) };
        }
    }
    out
}

/// One speed block with `k = (c r)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedOscillator {
    pub c: f64,
    pub r: f64,
    plus: C64,
    minus: C64,
}

impl DampedOscillator {
    pub fn new(c: f64, r: f64) -> Self {
        let (plus, minus) = block_roots(c, r);
        Self { c, r, plus, minus }
    }

    pub fn k(&self) -> f64 {
        self.c * self.c * self.r * self.r
    }

    pub fn roots(&self) -> (C64, C64) {
        (self.plus, self.minus)
    }

    fn companion(&self) -> Mat2c {
        let k = self.k();
        [
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(-k, 0.0), C64::new(-k, 0.0)],
        ]
    }

    /// Propagator of `(y, y')`.
    pub fn exp_matrix(&self, t: f64) -> Mat2 {
        let e = exp2(&self.companion(), self.plus, self.minus, t);
        [[e[0][0].re, e[0][1].re], [e[1][0].re, e[1][1].re]]
    }

    /// Propagator of the first-order pair `(y' + icr y, y' − icr y)`.
    pub fn w_block(&self, t: f64) -> Mat2c {
        let k = self.k();
        let cr = self.c * self.r;
        let phi = [
            [C64::new(-0.5 * k, cr), C64::new(-0.5 * k, 0.0)],
            [C64::new(-0.5 * k, 0.0), C64::new(-0.5 * k, -cr)],
        ];
        exp2(&phi, self.plus, self.minus, t)
    }

    /// `∫₀ʰ E(s) e₂ ds`: the response of `(y, y')` to a unit forcing held
    /// constant over one step of length `h`.
    pub fn forcing_vector(&self, h: f64) -> [f64; 2] {
        let k = self.k();
        let z = [[0.0, h], [-k * h, -k * h]];
        let norm1 = (h * k).max(h + h * k);
        if norm1 <= 1.0 {
            // φ₁(Z)e₂ with φ₁(Z) = Σ Zⁿ/(n+1)!
            let mut term = [0.0, h];
            let mut sum = term;
            for n in 2..40 {
                let next = [
                    z[0][0] * term[0] + z[0][1] * term[1],
                    z[1][0] * term[0] + z[1][1] * term[1],
                ];
                term = [next[0] / n as f64, next[1] / n as f64];
                sum = [sum[0] + term[0], sum[1] + term[1]];
                if term[0].abs() + term[1].abs() < 1e-18 * (sum[0].abs() + sum[1].abs()) {
                    break;
                }
            }
            sum
        } else {
            // A⁻¹(E(h) − I)e₂ with A⁻¹ = (1/k)[[−k, −1], [k, 0]]
            let e = self.exp_matrix(h);
            let v = [e[0][1], e[1][1] - 1.0];
            [(-k * v[0] - v[1]) / k, v[0]]
        }
    }
}
