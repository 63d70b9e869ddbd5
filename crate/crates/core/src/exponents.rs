//! Balanced-exponent calculus for the weakly coupled semilinear systems in
//! 2D (`f = (|u⁽²⁾|^{p₁}, |u⁽¹⁾|^{p₂})`) and 3D (three components).
//!
//! Formulas are generic over the scalar so that `Ratio<i128>` gives exact
//! answers; [`exponent_gate`] and [`exponent_gate_3d`] are the `f64` faces.

use std::fmt;

use num_traits::Num;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Numeric stand-in for the arbitrarily small loss at exact balance.
pub const EPSILON0: f64 = 0.05;

fn int<T: Num + Clone>(k: u32) -> T {
    (0..k).fold(T::zero(), |acc, _| acc + T::one())
}

/// `p_bal(m) = 2(m+2)/(2−m)`.
pub fn p_bal<T: Num + Clone>(m: T) -> T {
    int::<T>(2) * (m.clone() + int(2)) / (int::<T>(2) - m)
}

/// `α_k(m) = (2(1+m) + (3m+2)p_k + m p₁p₂) / (2(p₁p₂−1))`.
pub fn alpha<T: Num + Clone>(m: T, p1: T, p2: T, k: usize) -> T {
    let pk = if k == 1 { p1.clone() } else { p2.clone() };
    let prod = p1 * p2;
    (int::<T>(2) * (T::one() + m.clone())
        + (int::<T>(3) * m.clone() + int(2)) * pk
        + m * prod.clone())
        / (int::<T>(2) * (prod - T::one()))
}

/// `p̃_bal(m) = (3+2m)/(3−m)`.
pub fn p_bal_3d<T: Num + Clone>(m: T) -> T {
    (int::<T>(3) + int::<T>(2) * m.clone()) / (int::<T>(3) - m)
}

/// `α̃₁ = m(2 + 3p₂ + p₁p₂) / (2(p₁p₂−1))`.
pub fn alpha1_3d<T: Num + Clone>(m: T, p1: T, p2: T) -> T {
    let prod = p1 * p2.clone();
    m * (int::<T>(2) + int::<T>(3) * p2 + prod.clone()) / (int::<T>(2) * (prod - T::one()))
}

/// `α̃̃₁ = m(2 + 3(p₂+1)p₃ + p₁p₂p₃) / (2(p₁p₂p₃−1))`.
pub fn alpha2_3d<T: Num + Clone>(m: T, p1: T, p2: T, p3: T) -> T {
    let prod = p1 * p2.clone() * p3.clone();
    m * (int::<T>(2) + int::<T>(3) * (p2 + T::one()) * p3 + prod.clone())
        / (int::<T>(2) * (prod - T::one()))
}

/// Loss of decay relative to the linear rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss<T> {
    Value(T),
    /// The arbitrarily small loss at exact balance.
    Epsilon0,
}

impl Loss<f64> {
    pub fn numeric(&self) -> f64 {
        match self {
            Loss::Value(v) => *v,
            Loss::Epsilon0 => EPSILON0,
        }
    }
}

impl Serialize for Loss<f64> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Loss::Value(v) => s.serialize_f64(*v),
            Loss::Epsilon0 => s.serialize_str("epsilon0"),
        }
    }
}

/// `ℓ = 0` above balance, `ε₀` at balance, `rate·deficit` below.
fn loss<T: Num + Clone + PartialOrd>(p: T, bal: T, below: impl FnOnce() -> T) -> Loss<T> {
    if p > bal {
        Loss::Value(T::zero())
    } else if p == bal {
        Loss::Epsilon0
    } else {
        Loss::Value(below())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Gate {
    #[serde(rename = "case-1")]
    Case1,
    #[serde(rename = "case-2")]
    Case2,
    #[serde(rename = "case-3")]
    Case3,
    #[serde(rename = "fail")]
    Fail,
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gate::Case1 => "case-1",
            Gate::Case2 => "case-2",
            Gate::Case3 => "case-3",
            Gate::Fail => "fail",
        })
    }
}

/// Gate evaluation in an arbitrary ordered field.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOutcome<T> {
    pub p_bal: T,
    pub alphas: [T; 2],
    pub gate: Gate,
    pub condition: &'static str,
    /// Absent when the gate fails.
    pub losses: Option<Vec<Loss<T>>>,
}

pub fn gate_2d<T: Num + Clone + PartialOrd>(m: T, p1: T, p2: T) -> Result<GateOutcome<T>> {
    if !(m >= T::one() && m < int(2)) {
        return Err(Error::InvalidArgument("m must lie in [1, 2)".into()));
    }
    if !(p1 > T::one() && p2 > T::one()) {
        return Err(Error::InvalidArgument("exponents must exceed 1".into()));
    }
    let bal = p_bal(m.clone());
    let alphas = [
        alpha(m.clone(), p1.clone(), p2.clone(), 1),
        alpha(m.clone(), p1.clone(), p2.clone(), 2),
    ];
    let floor = int::<T>(2) / m.clone();
    let rate = (int::<T>(2) - m.clone()) / (int::<T>(2) * m);
    let l = |p: &T| {
        let (p, bal2, rate) = (p.clone(), bal.clone(), rate.clone());
        loss(p.clone(), bal2.clone(), move || rate * (bal2 - p))
    };
    let (gate, condition, losses) = if bal < p1 && bal < p2 {
        (
            Gate::Case1,
            "p_bal < min(p1, p2)",
            Some(vec![l(&p1), l(&p2)]),
        )
    } else if floor <= p2 && p2 <= bal && bal < p1 && alphas[0] < T::one() {
        (
            Gate::Case2,
            "alpha1 < 1 with 2/m <= p2 <= p_bal < p1",
            Some(vec![Loss::Value(T::zero()), l(&p2)]),
        )
    } else if floor <= p1 && p1 <= bal && bal < p2 && alphas[1] < T::one() {
        (
            Gate::Case3,
            "alpha2 < 1 with 2/m <= p1 <= p_bal < p2",
            Some(vec![l(&p1), Loss::Value(T::zero())]),
        )
    } else {
        (Gate::Fail, "no case applies", None)
    };
    Ok(GateOutcome {
        p_bal: bal,
        alphas,
        gate,
        condition,
        losses,
    })
}

pub fn gate_3d<T: Num + Clone + PartialOrd>(m: T, p1: T, p2: T, p3: T) -> Result<GateOutcome<T>> {
    let upper = int::<T>(6) / int::<T>(5);
    if !(m >= T::one() && m < upper) {
        return Err(Error::InvalidArgument("m must lie in [1, 6/5)".into()));
    }
    if !(T::one() < p1 && p1 < p2 && p2 < p3) {
        return Err(Error::Ordering);
    }
    let bal = p_bal_3d(m.clone());
    let alphas = [
        alpha1_3d(m.clone(), p1.clone(), p2.clone()),
        alpha2_3d(m.clone(), p1.clone(), p2.clone(), p3.clone()),
    ];
    let three = int::<T>(3);
    let three_halves = three.clone() / int(2);
    let floor = int::<T>(2) / m.clone();
    let rate = (three.clone() - m.clone()) / (int::<T>(2) * m);
    let l1 = {
        let (b, r, p) = (bal.clone(), rate.clone(), p1.clone());
        loss(p1.clone(), bal.clone(), move || r * (b - p))
    };
    let l2 = {
        let (b, r, q1, q2) = (bal.clone(), rate.clone(), p1.clone(), p2.clone());
        loss(p2.clone(), bal.clone(), move || {
            r * ((b.clone() - q1) * q2.clone() + (b - q2))
        })
    };
    let zero = Loss::Value(T::zero());
    let (gate, condition) = if bal < p1 && p3 <= three {
        (Gate::Case1, "p_bal_3d < p1 < p2 < p3 <= 3")
    } else if floor <= p1 && p1 <= bal && bal < p2 && p3 <= three && alphas[0] < three_halves {
        (
            Gate::Case2,
            "alpha1_3d < 3/2 with 2/m <= p1 <= p_bal_3d < p2 < p3 <= 3",
        )
    } else if floor <= p1 && p2 <= bal && bal < p3 && p3 <= three && alphas[1] < three_halves {
        (
            Gate::Case3,
            "alpha2_3d < 3/2 with 2/m <= p1 < p2 <= p_bal_3d < p3 <= 3",
        )
    } else {
        (Gate::Fail, "no case applies")
    };
    let losses = (gate != Gate::Fail).then(|| vec![l1, l2, zero]);
    Ok(GateOutcome {
        p_bal: bal,
        alphas,
        gate,
        condition,
        losses,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentReport {
    pub m: f64,
    pub p1: f64,
    pub p2: f64,
    pub p_bal: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub gate: Gate,
    pub condition: String,
    pub ell1: Option<Loss<f64>>,
    pub ell2: Option<Loss<f64>>,
}

impl ExponentReport {
    /// Linear energy rate `−(2−m)/(2m)` shifted by the loss of component `k ∈ {1, 2}`.
    pub fn energy_rate(&self, k: usize) -> Option<f64> {
        let l = if k == 1 { self.ell1 } else { self.ell2 }?;
        Some(-(2.0 - self.m) / (2.0 * self.m) + l.numeric())
    }
}

pub fn exponent_gate(m: f64, p1: f64, p2: f64) -> Result<ExponentReport> {
    let g = gate_2d(m, p1, p2)?;
    let (ell1, ell2) = match &g.losses {
        Some(l) => (Some(l[0]), Some(l[1])),
        None => (None, None),
    };
    Ok(ExponentReport {
        m,
        p1,
        p2,
        p_bal: g.p_bal,
        alpha1: g.alphas[0],
        alpha2: g.alphas[1],
        gate: g.gate,
        condition: g.condition.into(),
        ell1,
        ell2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentReport3D {
    pub m: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p_bal_3d: f64,
    pub alpha1_3d: f64,
    pub alpha2_3d: f64,
    pub gate: Gate,
    pub condition: String,
    pub ell1: Option<Loss<f64>>,
    pub ell2: Option<Loss<f64>>,
    pub ell3: Option<Loss<f64>>,
}

pub fn exponent_gate_3d(m: f64, p1: f64, p2: f64, p3: f64) -> Result<ExponentReport3D> {
    let g = gate_3d(m, p1, p2, p3)?;
    let l = |i: usize| g.losses.as_ref().map(|v| v[i]);
    Ok(ExponentReport3D {
        m,
        p1,
        p2,
        p3,
        p_bal_3d: g.p_bal,
        alpha1_3d: g.alphas[0],
        alpha2_3d: g.alphas[1],
        gate: g.gate,
        condition: g.condition.into(),
        ell1: l(0),
        ell2: l(1),
        ell3: l(2),
    })
}

/// Scans `p = k/4` for `k ∈ [5, 160]` and returns the pairs whose gate is `wanted`.
pub fn gate_search(m: f64, wanted: Gate) -> Result<Vec<ExponentReport>> {
    let grid: Vec<f64> = (5..=160).map(|k| k as f64 / 4.0).collect();
    let mut out = Vec::new();
    for &p1 in &grid {
        for &p2 in &grid {
            let r = exponent_gate(m, p1, p2)?;
            if r.gate == wanted {
                out.push(r);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Q = Ratio<i128>;

    fn q(n: i128, d: i128) -> Q {
        Q::new(n, d)
    }

    #[test]
    fn balanced_exponents_exact() {
        assert_eq!(p_bal(q(1, 1)), q(6, 1));
        assert_eq!(p_bal(q(3, 2)), q(14, 1));
        assert_eq!(p_bal_3d(q(1, 1)), q(5, 2));
        assert_eq!(alpha(q(1, 1), q(7, 1), q(7, 1), 1), q(11, 12));
        assert_eq!(alpha(q(1, 1), q(30, 1), q(11, 2), 1), q(319, 328));
    }

    #[test]
    fn gate_examples() {
        let r = exponent_gate(1.0, 7.0, 7.0).unwrap();
        assert_eq!((r.gate, r.p_bal), (Gate::Case1, 6.0));
        assert_eq!(
            (r.ell1, r.ell2),
            (Some(Loss::Value(0.0)), Some(Loss::Value(0.0)))
        );
        let r = exponent_gate(1.0, 30.0, 5.5).unwrap();
        assert_eq!(r.gate, Gate::Case2);
        assert_eq!(r.ell2, Some(Loss::Value(0.25)));
        let r = exponent_gate(1.0, 30.0, 6.0).unwrap();
        assert_eq!((r.gate, r.ell2), (Gate::Case2, Some(Loss::Epsilon0)));
        assert_eq!(serde_json::to_string(&r.ell2).unwrap(), "\"epsilon0\"");
        // both below balance with α₁ ≥ 1
        assert_eq!(exponent_gate(1.0, 20.0, 4.0).unwrap().gate, Gate::Fail);
        assert_eq!(exponent_gate(1.0, 20.0, 4.0).unwrap().ell1, None);
        assert!(exponent_gate(2.0, 7.0, 7.0).is_err());
        assert!(exponent_gate(1.0, 1.0, 7.0).is_err());
    }

    #[test]
    fn gate_search_cases() {
        let c1 = gate_search(1.0, Gate::Case1).unwrap();
        assert!(c1.iter().any(|r| r.p1 == 7.0 && r.p2 == 7.0));
        assert!(!gate_search(1.0, Gate::Case2).unwrap().is_empty());
        assert!(gate_search(1.5, Gate::Case1)
            .unwrap()
            .iter()
            .all(|r| r.p1 > 14.0 && r.p2 > 14.0));
    }

    #[test]
    fn gate_3d_examples() {
        let r = exponent_gate_3d(1.0, 2.6, 2.8, 3.0).unwrap();
        assert_eq!(r.gate, Gate::Case1);
        assert!([r.ell1, r.ell2, r.ell3]
            .iter()
            .all(|l| *l == Some(Loss::Value(0.0))));
        assert_eq!(
            exponent_gate_3d(1.0, 2.8, 2.6, 3.0).unwrap_err(),
            Error::Ordering
        );
        let g = gate_3d(q(1, 1), q(12, 5), q(29, 10), q(3, 1)).unwrap();
        assert_eq!(g.gate, Gate::Case2);
        assert_eq!(g.losses.unwrap()[0], Loss::Value(q(1, 10)));
    }

    fn random_q(rng: &mut ChaCha8Rng, lo: i128, hi: i128, den: i128) -> Q {
        q(rng.gen_range(lo * den + 1..hi * den), den)
    }

    #[test]
    fn remark_equivalences_on_rational_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let one = q(1, 1);
        for _ in 0..10_000 {
            let m = one + q(rng.gen_range(0..100), 100);
            let (p1, p2) = (random_q(&mut rng, 1, 40, 8), random_q(&mut rng, 1, 40, 8));
            let b = p_bal(m);
            assert_eq!(alpha(m, p1, p2, 1) < one, p1 * (p2 + one - b) > b);
            assert_eq!(alpha(m, p1, p2, 2) < one, p2 * (p1 + one - b) > b);
        }
        let three_halves = q(3, 2);
        for _ in 0..10_000 {
            let m = one + q(rng.gen_range(0..120), 600);
            let (p1, p2, p3) = (
                random_q(&mut rng, 1, 6, 16),
                random_q(&mut rng, 1, 6, 16),
                random_q(&mut rng, 1, 6, 16),
            );
            let b = p_bal_3d(m);
            assert_eq!(alpha1_3d(m, p1, p2) < three_halves, p2 * (p1 + one - b) > b);
            assert_eq!(
                alpha2_3d(m, p1, p2, p3) < three_halves,
                p3 * (p2 * (p1 + one - b) + one - b) > b
            );
        }
    }

    proptest! {
        #[test]
        fn losses_nonnegative_and_zero_above_balance(mk in 0u32..100, a in 5u32..200, b in 5u32..200) {
            let m = 1.0 + mk as f64 / 100.0;
            let (p1, p2) = (a as f64 / 4.0, b as f64 / 4.0);
            let r = exponent_gate(m, p1, p2).unwrap();
            if r.gate == Gate::Fail {
                prop_assert!(r.ell1.is_none() && r.ell2.is_none());
            } else {
                for (l, p) in [(r.ell1.unwrap(), p1), (r.ell2.unwrap(), p2)] {
                    prop_assert!(l.numeric() >= 0.0);
                    if p > r.p_bal { prop_assert_eq!(l, Loss::Value(0.0)); }
                }
            }
        }

        #[test]
        fn float_gate_agrees_with_exact(a in 5i128..200, b in 5i128..200) {
            let e = gate_2d(q(1, 1), q(a, 4), q(b, 4)).unwrap();
            let f = exponent_gate(1.0, a as f64 / 4.0, b as f64 / 4.0).unwrap();
            prop_assert_eq!(e.gate, f.gate);
        }
    }
}
