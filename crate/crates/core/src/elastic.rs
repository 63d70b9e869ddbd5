//! Physical parameters, the (u, u_t) <-> (v, v_t) <-> W coordinate changes and
//! the first-order system matrix.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat4 = Matrix4<C64>;
pub type Vec4 = Vector4<C64>;
pub type Vec2 = Vector2<C64>;

/// Wave speeds with `b > a > 0` (a transverse, b longitudinal).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    a: f64,
    b: f64,
}

impl SystemParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Constraint("a, b finite violated"));
        }
        if a <= 0.0 {
            return Err(Error::Constraint("a>0 violated"));
        }
        if b <= a {
            return Err(Error::Constraint("b>a violated"));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Speeds in W-block order: the first block travels at `b`, the second at `a`.
    pub fn speeds(&self) -> [f64; 2] {
        [self.b, self.a]
    }
}

impl<'de> Deserialize<'de> for SystemParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            a: f64,
            b: f64,
        }
        let raw = Raw::deserialize(d)?;
        SystemParams::new(raw.a, raw.b).map_err(serde::de::Error::custom)
    }
}

pub fn make_params(a: f64, b: f64) -> Result<SystemParams> {
    SystemParams::new(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyPoint {
    pub xi: [f64; 2],
    pub r: f64,
    /// `None` at the origin where the direction is undefined.
    pub eta: Option<[f64; 2]>,
}

impl FrequencyPoint {
    pub fn new(xi: [f64; 2]) -> Self {
        let r = xi[0].hypot(xi[1]);
        let eta = (r > 0.0).then(|| [xi[0] / r, xi[1] / r]);
        Self { xi, r, eta }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        if r == 0.0 {
            return Self::new([0.0, 0.0]);
        }
        Self {
            xi: [r * c, r * s],
            r,
            eta: Some([c, s]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub a_eta: Option<Matrix2<f64>>,
    pub m_eta: Option<Matrix2<f64>>,
    pub a_diag: Matrix2<f64>,
    pub b0: Matrix4<f64>,
    pub b1: Matrix4<f64>,
    pub phi: Mat4,
}

/// `A(η) = a²I + (b²−a²)ηηᵀ`.
pub fn a_eta(p: &SystemParams, eta: [f64; 2]) -> Matrix2<f64> {
    let d = p.b * p.b - p.a * p.a;
    let a2 = p.a * p.a;
    Matrix2::new(
        a2 + d * eta[0] * eta[0],
        d * eta[0] * eta[1],
        d * eta[0] * eta[1],
        a2 + d * eta[1] * eta[1],
    )
}

/// The symmetric reflection diagonalizing `A(η)`; it is its own inverse.
pub fn m_eta(eta: [f64; 2]) -> Matrix2<f64> {
    Matrix2::new(eta[0], eta[1], eta[1], -eta[0])
}

pub fn b0(p: &SystemParams) -> Matrix4<f64> {
    let (a2, b2) = (p.a * p.a, p.b * p.b);
    Matrix4::new(
        b2, 0.0, b2, 0.0, //
        0.0, a2, 0.0, a2, //
        b2, 0.0, b2, 0.0, //
        0.0, a2, 0.0, a2,
    )
}

pub fn b1(p: &SystemParams) -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(p.b, p.a, -p.b, -p.a))
}

/// `Φ(r) = −½r²B₀ + i r B₁`; depends on the frequency only through `r`.
pub fn phi(p: &SystemParams, r: f64) -> Mat4 {
    let b0 = b0(p);
    let b1 = b1(p);
    Mat4::from_fn(|i, j| C64::new(-0.5 * r * r * b0[(i, j)], r * b1[(i, j)]))
}

pub fn assemble_matrices(p: &SystemParams, freq: &FrequencyPoint) -> SystemMatrices {
    let r = freq.r;
    SystemMatrices {
        a_eta: freq.eta.map(|e| a_eta(p, e)),
        m_eta: freq.eta.map(m_eta),
        a_diag: Matrix2::new(r * r * p.b * p.b, 0.0, 0.0, r * r * p.a * p.a),
        b0: b0(p),
        b1: b1(p),
        phi: phi(p, r),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector(pub Vec4);

impl StateVector {
    pub fn zeros() -> Self {
        Self(Vec4::zeros())
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

fn apply_m(m: &Matrix2<f64>, v: &Vec2) -> Vec2 {
    Vec2::new(
        v[0] * m[(0, 0)] + v[1] * m[(0, 1)],
        v[0] * m[(1, 0)] + v[1] * m[(1, 1)],
    )
}

fn direction(freq: &FrequencyPoint) -> Result<[f64; 2]> {
    match freq.eta {
        Some(e) if freq.r > 0.0 => Ok(e),
        _ => Err(Error::ZeroFrequency),
    }
}

pub fn to_first_order(
    p: &SystemParams,
    freq: &FrequencyPoint,
    u_hat: &Vec2,
    ut_hat: &Vec2,
) -> Result<StateVector> {
    let m = m_eta(direction(freq)?);
    let v = apply_m(&m, u_hat);
    let vt = apply_m(&m, ut_hat);
    let lam = [freq.r * p.b, freq.r * p.a];
    let i = C64::i();
    Ok(StateVector(Vec4::new(
        vt[0] + i * lam[0] * v[0],
        vt[1] + i * lam[1] * v[1],
        vt[0] - i * lam[0] * v[0],
        vt[1] - i * lam[1] * v[1],
    )))
}

pub fn from_first_order(
    p: &SystemParams,
    freq: &FrequencyPoint,
    w: &StateVector,
) -> Result<(Vec2, Vec2)> {
    let m = m_eta(direction(freq)?);
    let w = &w.0;
    let lam = [freq.r * p.b, freq.r * p.a];
    let two_i = C64::new(0.0, 2.0);
    let vt = Vec2::new((w[0] + w[2]) * 0.5, (w[1] + w[3]) * 0.5);
    let v = Vec2::new(
        (w[0] - w[2]) / (two_i * lam[0]),
        (w[1] - w[3]) / (two_i * lam[1]),
    );
    Ok((apply_m(&m, &v), apply_m(&m, &vt)))
}

/// Exact evolution of the zero frequency, where the system reduces to `û_tt = 0`.
pub fn dc_evolve(u0: &Vec2, u1: &Vec2, t: f64) -> (Vec2, Vec2) {
    (u0 + u1 * C64::from(t), *u1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p12() -> SystemParams {
        make_params(1.0, 2.0).unwrap()
    }

    #[test]
    fn params_validation() {
        assert_eq!(p12().a(), 1.0);
        assert_eq!(p12().b(), 2.0);
        for (a, b) in [(2.0, 1.0), (1.0, 1.0)] {
            let e = make_params(a, b).unwrap_err();
            assert!(e.to_string().contains("b>a violated"), "{e}");
        }
        assert!(make_params(0.0, 1.0)
            .unwrap_err()
            .to_string()
            .contains("a>0"));
        assert!(make_params(f64::NAN, 1.0).is_err());
        assert!(make_params(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn matrices_match_displays() {
        let p = p12();
        let m = assemble_matrices(&p, &FrequencyPoint::new([1.0, 0.0]));
        assert_eq!(m.a_eta.unwrap(), Matrix2::new(4.0, 0.0, 0.0, 1.0));
        assert_eq!(m.phi[(0, 0)], C64::new(-2.0, 2.0));
        assert_eq!(m.phi[(1, 1)], C64::new(-0.5, 1.0));
        assert_eq!(m.phi[(0, 2)], C64::new(-2.0, 0.0));
        assert_eq!(m.phi[(0, 1)], C64::new(0.0, 0.0));
        assert_eq!(m.a_diag, Matrix2::new(4.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn phi_is_direction_free() {
        let p = p12();
        let a = assemble_matrices(&p, &FrequencyPoint::polar(0.7, 0.0)).phi;
        let b = assemble_matrices(&p, &FrequencyPoint::polar(0.7, 2.1)).phi;
        assert_eq!(a, b);
    }

    #[test]
    fn first_order_examples() {
        let p = p12();
        let f = FrequencyPoint::new([1.0, 0.0]);
        let w = to_first_order(
            &p,
            &f,
            &Vec2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            &Vec2::zeros(),
        )
        .unwrap();
        let expect = Vec4::new(
            C64::new(0.0, 2.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, -2.0),
            C64::new(0.0, 0.0),
        );
        assert!((w.0 - expect).norm() < 1e-15);
        let (u, ut) = from_first_order(&p, &f, &w).unwrap();
        assert!((u - Vec2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))).norm() < 1e-15);
        assert!(ut.norm() < 1e-15);
        let z = to_first_order(&p, &f, &Vec2::zeros(), &Vec2::zeros()).unwrap();
        assert_eq!(z.norm(), 0.0);
        let (u0, u1) = from_first_order(&p, &f, &StateVector::zeros()).unwrap();
        assert_eq!(u0.norm() + u1.norm(), 0.0);
    }

    #[test]
    fn zero_frequency_rejected() {
        let p = p12();
        let f = FrequencyPoint::new([0.0, 0.0]);
        assert_eq!(
            to_first_order(&p, &f, &Vec2::zeros(), &Vec2::zeros()),
            Err(Error::ZeroFrequency)
        );
        assert_eq!(
            from_first_order(&p, &f, &StateVector::zeros()),
            Err(Error::ZeroFrequency)
        );
    }

    #[test]
    fn inverse_amplifies_like_one_over_r() {
        let p = p12();
        let w = StateVector(Vec4::new(
            C64::new(0.3, -0.2),
            C64::new(1.0, 0.5),
            C64::new(-0.7, 0.1),
            C64::new(0.2, 0.9),
        ));
        let small = from_first_order(&p, &FrequencyPoint::polar(1e-3, 0.4), &w)
            .unwrap()
            .0
            .norm();
        let smaller = from_first_order(&p, &FrequencyPoint::polar(1e-4, 0.4), &w)
            .unwrap()
            .0
            .norm();
        assert!((smaller / small - 10.0).abs() < 1e-9);
        assert!(small > 100.0 * w.norm());
    }

    #[test]
    fn dc_examples() {
        let u0 = Vec2::new(C64::new(1.5, 0.0), C64::new(0.0, -1.0));
        let (a, b) = dc_evolve(&u0, &Vec2::zeros(), 7.0);
        assert_eq!((a, b), (u0, Vec2::zeros()));
        let (a, b) = dc_evolve(
            &Vec2::zeros(),
            &Vec2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            3.0,
        );
        assert_eq!(a, Vec2::new(C64::new(3.0, 0.0), C64::new(0.0, 0.0)));
        assert_eq!(b, Vec2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)));
    }
}
