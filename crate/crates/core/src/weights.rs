//! Weight sets `W_h`: the Hamming weights a symmetric function maps to 1.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct WeightSet {
    pub k: usize,
    members: BTreeSet<usize>,
}

impl WeightSet {
    /// Nonempty proper subset of `{0, .., k}`.
    pub fn new(k: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let members: BTreeSet<usize> = members.into_iter().collect();
        if let Some(&bad) = members.iter().find(|&&w| w > k) {
            return domain(format!("weight {bad} exceeds k = {k}"));
        }
        if members.is_empty() || members.len() == k + 1 {
            return domain("weight set must be a nonempty proper subset of {0..k} (constant h)");
        }
        Ok(WeightSet { k, members })
    }

    /// Builds without the non-constant check; block operations tolerate constant sets.
    pub fn unchecked(k: usize, members: impl IntoIterator<Item = usize>) -> Self {
        WeightSet { k, members: members.into_iter().filter(|&w| w <= k).collect() }
    }

    /// `h = OR`: weights `1..=k`.
    pub fn or(k: usize) -> Result<Self> {
        Self::new(k, 1..=k)
    }

    /// Weight exactly `floor(k/2)`.
    pub fn exact_half(k: usize) -> Result<Self> {
        Self::new(k, [k / 2])
    }

    /// Weights at least `k/2`.
    pub fn majority(k: usize) -> Result<Self> {
        Self::new(k, k.div_ceil(2)..=k)
    }

    /// Parses `or`, `exact-half`, `majority` or `custom:<w1,w2,..>`.
    pub fn parse(spec: &str, k: usize) -> Result<Self> {
        match spec {
            "or" => Self::or(k),
            "exact-half" => Self::exact_half(k),
            "majority" => Self::majority(k),
            _ => match spec.strip_prefix("custom:") {
                Some(list) => {
                    let mut ws = Vec::new();
                    for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        match part.parse::<usize>() {
                            Ok(w) => ws.push(w),
                            Err(_) => return domain(format!("bad weight `{part}`")),
                        }
                    }
                    Self::new(k, ws)
                }
                None => domain(format!("unknown weight set `{spec}`")),
            },
        }
    }

    pub fn contains(&self, w: usize) -> bool {
        self.members.contains(&w)
    }

    pub fn members(&self) -> Vec<usize> {
        self.members.iter().copied().collect()
    }

    pub fn is_constant(&self) -> bool {
        self.members.is_empty() || self.members.len() == self.k + 1
    }
}

impl fmt::Display for WeightSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members.iter().map(|w| w.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}
