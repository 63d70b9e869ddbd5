//! Analytic initial-data families with closed-form Fourier transforms.
//! Convention: `f̂(ξ) = ∫ e^{−ix·ξ} f(x) dx`, so `f̂(0)` is the integral of `f`.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::elastic::{Vec2, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    /// Unit-mass Gaussian; transform positive at the origin.
    Gaussian,
    /// `∂ₓ₁` of the unit-mass Gaussian; transform vanishes linearly at the origin.
    DGaussian,
    /// Fourier-space annulus around `|ξ| = 1/scale`.
    Ring,
}

/// Relative width of the ring annulus.
const RING_WIDTH: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DataDescriptor {
    pub kind: DataKind,
    pub scale: f64,
    pub amplitude: f64,
}

pub fn make_data(kind: DataKind, scale: f64) -> Result<DataDescriptor> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "data scale must be positive, got {scale}"
        )));
    }
    Ok(DataDescriptor {
        kind,
        scale,
        amplitude: 1.0,
    })
}

impl DataDescriptor {
    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn fourier(&self, xi: [f64; 2]) -> C64 {
        let s = self.scale;
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        let g = (-0.5 * s * s * r2).exp();
        let v = match self.kind {
            DataKind::Gaussian => C64::new(g, 0.0),
            DataKind::DGaussian => C64::new(0.0, xi[0] * g),
            DataKind::Ring => {
                let w = RING_WIDTH / s;
                C64::new((-(r2.sqrt() - 1.0 / s).powi(2) / (2.0 * w * w)).exp(), 0.0)
            }
        };
        v * self.amplitude
    }

    /// Transform of the isotropic 3D analogue (Gaussian family only).
    pub fn fourier_3d(&self, r: f64) -> Result<f64> {
        match self.kind {
            DataKind::Gaussian => {
                Ok(self.amplitude * (-0.5 * self.scale * self.scale * r * r).exp())
            }
            _ => Err(Error::Unsupported(format!("{:?} data in 3D", self.kind))),
        }
    }

    /// Physical-space value in 2D.
    pub fn physical(&self, x: [f64; 2]) -> Result<f64> {
        let s2 = self.scale * self.scale;
        let g = (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * s2)).exp() / (2.0 * PI * s2);
        match self.kind {
            DataKind::Gaussian => Ok(self.amplitude * g),
            DataKind::DGaussian => Ok(-self.amplitude * x[0] / s2 * g),
            DataKind::Ring => Err(Error::Unsupported(
                "ring data has no closed-form physical representation".into(),
            )),
        }
    }

    /// Angular integral `∫|f(ρ, θ)| dθ` as a function of the radius.
    fn angular_abs(&self, rho: f64) -> Result<f64> {
        let s2 = self.scale * self.scale;
        let g = (-rho * rho / (2.0 * s2)).exp() / (2.0 * PI * s2);
        let a = self.amplitude.abs();
        match self.kind {
            DataKind::Gaussian => Ok(2.0 * PI * a * g),
            // ∫|cos θ| dθ = 4
            DataKind::DGaussian => Ok(4.0 * a * rho / s2 * g),
            DataKind::Ring => Err(Error::Unsupported(
                "ring data has no closed-form physical representation".into(),
            )),
        }
    }
}

const MAX_TAIL_PANELS: usize = 200;

/// `∫₀^∞ (1+ρ)^γ D(ρ) ρ dρ` for a radial density `D` (already integrated over angle),
/// summed panel by panel: unit panels near the origin, then geometrically growing
/// panels. A tail that is still contributing after the panel budget is reported
/// as divergent.
pub fn weighted_l1_radial(
    density: impl Fn(f64) -> f64,
    gamma: f64,
    length_scale: f64,
) -> Result<f64> {
    let gl = GaussLegendre::new(std::num::NonZeroUsize::new(24).expect("nonzero"));
    let integrand = |rho: f64| (1.0 + rho).powf(gamma) * density(rho) * rho;
    let mut total = 0.0f64;
    let mut lo = 0.0;
    let mut quiet = 0;
    for panel in 0..MAX_TAIL_PANELS {
        let hi = if panel < 16 {
            lo + length_scale
        } else {
            2.0 * lo
        };
        let part = gl.integrate(lo, hi, integrand);
        total += part;
        lo = hi;
        if part.abs() <= 1e-17 * total.abs() {
            quiet += 1;
            if quiet >= 3 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::DivergentTail {
        panels: MAX_TAIL_PANELS,
        tail: total,
    })
}

/// `‖g‖_{L^{1,γ}} = ∫(1+|x|)^γ |g(x)| dx`.
pub fn weighted_l1_norm(data: &DataDescriptor, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    data.angular_abs(1.0)?;
    weighted_l1_radial(
        |rho| data.angular_abs(rho).expect("checked above"),
        gamma,
        data.scale,
    )
}

/// The transform at the origin of `|D|u₀ + u₁`. The `|ξ|û₀` term vanishes in
/// the limit since every family here has a transform bounded at the origin.
pub fn moment_check(u0: Option<&DataDescriptor>, u1: Option<&DataDescriptor>) -> C64 {
    let _ = u0;
    u1.map_or(C64::new(0.0, 0.0), |d| d.fourier([0.0, 0.0]))
}

/// Vector data `u₀ = f₀(x)d`, `u₁ = f₁(x)d` with a fixed direction `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialData {
    pub u0: Option<DataDescriptor>,
    pub u1: Option<DataDescriptor>,
    pub direction: [f64; 2],
}

impl InitialData {
    pub fn velocity(profile: DataDescriptor, direction: [f64; 2]) -> Self {
        Self {
            u0: None,
            u1: Some(profile),
            direction,
        }
    }

    pub fn displacement(profile: DataDescriptor, direction: [f64; 2]) -> Self {
        Self {
            u0: Some(profile),
            u1: None,
            direction,
        }
    }

    pub fn moment(&self) -> C64 {
        moment_check(self.u0.as_ref(), self.u1.as_ref())
    }

    pub fn fourier(&self, xi: [f64; 2]) -> (Vec2, Vec2) {
        let d = Vec2::new(
            C64::new(self.direction[0], 0.0),
            C64::new(self.direction[1], 0.0),
        );
        let f0 = self.u0.map_or(C64::new(0.0, 0.0), |g| g.fourier(xi));
        let f1 = self.u1.map_or(C64::new(0.0, 0.0), |g| g.fourier(xi));
        (d * f0, d * f1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::num::NonZeroUsize;

    #[test]
    fn transforms_at_origin() {
        let g = make_data(DataKind::Gaussian, 1.0).unwrap();
        assert_eq!(g.fourier([0.0, 0.0]), C64::new(1.0, 0.0));
        let d = make_data(DataKind::DGaussian, 1.0).unwrap();
        assert_eq!(d.fourier([0.0, 0.0]), C64::new(0.0, 0.0));
        assert!(make_data(DataKind::Gaussian, 0.0).is_err());
    }

    #[test]
    fn gaussian_mass_matches_transform() {
        let g = make_data(DataKind::Gaussian, 1.3)
            .unwrap()
            .with_amplitude(2.5);
        let mass = weighted_l1_norm(&g, 0.0).unwrap();
        assert!((mass - g.fourier([0.0, 0.0]).re).abs() < 1e-12);
    }

    #[test]
    fn ring_mass_is_mid_frequency() {
        let ring = make_data(DataKind::Ring, 1.0).unwrap();
        let gl = GaussLegendre::new(NonZeroUsize::new(64).unwrap());
        let dens = |r: f64| ring.fourier([r, 0.0]).norm_sqr() * r;
        let inside = gl.integrate(0.5, 2.0, dens);
        let total = gl.integrate(0.0, 0.5, dens) + inside + gl.integrate(2.0, 6.0, dens);
        assert!(inside / total >= 0.99);
        assert!(weighted_l1_norm(&ring, 0.5).is_err());
    }

    #[test]
    fn gaussian_first_moment_closed_form() {
        // 1 + E|x| with |x| Rayleigh-distributed: E|x| = σ√(π/2)
        for sigma in [0.5, 1.0, 2.0] {
            let g = make_data(DataKind::Gaussian, sigma).unwrap();
            let v = weighted_l1_norm(&g, 1.0).unwrap();
            assert!(
                (v - (1.0 + sigma * (PI / 2.0).sqrt())).abs() < 1e-8,
                "σ={sigma}"
            );
        }
    }

    #[test]
    fn d_gaussian_weighted_norm_is_finite() {
        let d = make_data(DataKind::DGaussian, 1.0).unwrap();
        let l1 = weighted_l1_norm(&d, 0.0).unwrap();
        // ∫|∂₁g| = E|X₁|/σ² = √(2/π)/σ
        assert!((l1 - (2.0 / PI).sqrt()).abs() < 1e-10);
        assert!(weighted_l1_norm(&d, 1.0).unwrap() > l1);
    }

    #[test]
    fn divergent_tail_detected() {
        // (1+ρ)^{-3} weighted by (1+ρ)ρ decays like ρ^{-1}
        let r = weighted_l1_radial(|rho| (1.0 + rho).powi(-3), 1.0, 1.0);
        assert!(matches!(r, Err(Error::DivergentTail { .. })));
        let ok = weighted_l1_radial(|rho| (1.0 + rho).powi(-5), 1.0, 1.0).unwrap();
        assert!(ok.is_finite());
    }

    #[test]
    fn moments() {
        let g = make_data(DataKind::Gaussian, 1.0)
            .unwrap()
            .with_amplitude(3.0);
        let d = make_data(DataKind::DGaussian, 1.0).unwrap();
        assert_eq!(moment_check(None, Some(&d)), C64::new(0.0, 0.0));
        assert_eq!(moment_check(None, Some(&g)), C64::new(3.0, 0.0));
        assert_eq!(moment_check(Some(&g), None), C64::new(0.0, 0.0));
    }
}
