//! JSON parameter files.
//!
//! Rationals are strings, either `"353/500"` or a decimal such as `"0.706"`,
//! read as exact base-10 fractions. `t` holds `t_1..t_{k+1}` (a trailing
//! `"0"` for `t_{k+2}` is accepted), `Delta` holds `Δ_0..Δ_K` and the
//! optional `delta` holds the per-type `δ_i`.

use std::path::Path;

use harmpack_core::params::{builtin_shplus, validate, ParamParts, ParamTable};
use harmpack_core::rational::{parse_rational, render_fraction};
use harmpack_core::Rational;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamFile {
    pub k: usize,
    #[serde(rename = "K")]
    pub big_k: usize,
    pub t: Vec<String>,
    pub alpha: Vec<String>,
    pub beta: Vec<u32>,
    pub gamma: Vec<u32>,
    pub phi: Vec<usize>,
    pub varphi: Vec<usize>,
    #[serde(rename = "Delta")]
    pub spaces: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<String>>,
}

impl ParamFile {
    pub fn from_table(table: &ParamTable) -> Self {
        let p = table.parts();
        let strings = |v: &[Rational]| v.iter().map(render_fraction).collect::<Vec<_>>();
        ParamFile {
            k: p.k,
            big_k: p.big_k,
            t: strings(&p.t),
            alpha: strings(&p.alpha),
            beta: p.beta.clone(),
            gamma: p.gamma.clone(),
            phi: p.phi.clone(),
            varphi: p.varphi.clone(),
            spaces: strings(&p.spaces),
            delta: p.delta.as_deref().map(strings),
        }
    }

    /// Builds the table and checks every definitional invariant.
    pub fn to_table(&self) -> Result<ParamTable, HarnessError> {
        let parse = |field: &str, v: &[String]| -> Result<Vec<Rational>, HarnessError> {
            v.iter().map(|s| parse_rational(s).map_err(|e| HarnessError::Input(format!("{field}: {e}")))).collect()
        };
        let table = ParamTable::from_parts(ParamParts {
            k: self.k,
            big_k: self.big_k,
            t: parse("t", &self.t)?,
            alpha: parse("alpha", &self.alpha)?,
            beta: self.beta.clone(),
            delta: self.delta.as_deref().map(|d| parse("delta", d)).transpose()?,
            spaces: parse("Delta", &self.spaces)?,
            phi: self.phi.clone(),
            varphi: self.varphi.clone(),
            gamma: self.gamma.clone(),
        })?;
        let violations = validate(&table);
        if violations.is_empty() {
            Ok(table)
        } else {
            Err(HarnessError::Validation(violations.iter().map(|v| v.describe()).collect()))
        }
    }
}

/// Reads a parameter file, or returns the builtin SH+ table for `None`.
pub fn load_table(path: Option<&Path>) -> Result<ParamTable, HarnessError> {
    match path {
        None => Ok(builtin_shplus()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let file: ParamFile = serde_json::from_str(&text)?;
            file.to_table()
        }
    }
}
