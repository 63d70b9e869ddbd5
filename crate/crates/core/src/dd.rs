//! Double-double complex arithmetic for root polishing and the projection
//! product formula, where plain `f64` loses too many digits to cancellation.

use num_complex::Complex;
use twofloat::TwoFloat;

use crate::elastic::{Mat4, C64};

pub(crate) type Cdd = Complex<TwoFloat>;
pub(crate) type Mdd = [[Cdd; 4]; 4];

pub(crate) fn dd(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

pub(crate) fn cdd(z: C64) -> Cdd {
    Complex::new(dd(z.re), dd(z.im))
}

pub(crate) fn to_c64(z: Cdd) -> C64 {
    C64::new(f64::from(z.re), f64::from(z.im))
}

pub(crate) fn zero() -> Cdd {
    Complex::new(dd(0.0), dd(0.0))
}

pub(crate) fn abs(z: Cdd) -> f64 {
    f64::from(z.re).hypot(f64::from(z.im))
}

pub(crate) fn from_mat(m: &Mat4) -> Mdd {
    let mut out = [[zero(); 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = cdd(m[(i, j)]);
        }
    }
    out
}

pub(crate) fn shift(a: &Mdd, z: Cdd) -> Mdd {
    let mut out = *a;
    for (i, row) in out.iter_mut().enumerate() {
        row[i] -= z;
    }
    out
}

/// Horner evaluation of a real polynomial (descending coefficients) and its derivative.
pub(crate) fn horner(coeffs: &[TwoFloat], z: Cdd) -> (Cdd, Cdd) {
    let mut p = zero();
    let mut dp = zero();
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + Complex::new(c, dd(0.0));
    }
    (p, dp)
}
