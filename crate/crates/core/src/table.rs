use std::fmt;

use serde::Serialize;

/// Lebesgue exponent of a norm: `L²` or `L^∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Lebesgue {
    L2,
    Inf,
}

impl fmt::Display for Lebesgue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lebesgue::L2 => "L2",
            Lebesgue::Inf => "Linf",
        })
    }
}

/// Column name such as `u_Hs1_L2`.
pub fn column_name(quantity: &str, s: f64, q: Lebesgue) -> String {
    format!("{quantity}_Hs{s}_{q}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormColumn {
    pub name: String,
    pub values: Vec<f64>,
}

/// Norms against time, one column per (quantity, s, q).
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct NormTable {
    pub times: Vec<f64>,
    pub columns: Vec<NormColumn>,
}

impl NormTable {
    pub fn new(times: Vec<f64>) -> Self {
        Self {
            times,
            columns: Vec::new(),
        }
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) {
        assert_eq!(
            values.len(),
            self.times.len(),
            "column length must match the time axis"
        );
        self.columns.push(NormColumn {
            name: name.into(),
            values,
        });
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty() || self.columns.is_empty()
    }
}

/// Pairwise summation with a fixed split order, so reductions are reproducible
/// regardless of how the terms were produced.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
