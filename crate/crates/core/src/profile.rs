use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::rational::{self, Rational};
use num_traits::{Signed, Zero};

/// Per-coordinate Lipschitz coefficients `c_1..c_n`, held exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzProfile {
    exact: Vec<Rational>,
    approx: Vec<f64>,
}

impl LipschitzProfile {
    pub fn new(coefficients: Vec<Rational>) -> Result<Self> {
        if let Some((i, c)) = coefficients.iter().enumerate().find(|(_, c)| c.is_negative()) {
            return input(format!("Lipschitz coefficient c_{} = {} is negative", i + 1, c));
        }
        let approx = coefficients.iter().map(rational::to_f64).collect();
        Ok(Self { exact: coefficients, approx })
    }

    pub fn uniform(n: usize, value: Rational) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn from_integers(values: &[i64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| rational::int(v)).collect())
    }

    /// Doubles are converted exactly; prefer [`LipschitzProfile::parse`] for
    /// user-supplied decimals.
    pub fn from_f64(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| rational::from_f64(v)).collect::<Result<_>>()?)
    }

    /// Parses `uniform:<value>` or a comma separated list of exact numbers.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let text = text.trim();
        let profile = if let Some(value) = text.strip_prefix("uniform:") {
            Self::uniform(n, rational::parse(value)?)?
        } else {
            let values = text
                .split(',')
                .map(rational::parse)
                .collect::<Result<Vec<_>>>()?;
            Self::new(values)?
        };
        profile.check_len(n)?;
        Ok(profile)
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::Input(format!(
                "Lipschitz profile has {} entries but the graph has {} vertices",
                self.len(),
                n
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.exact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty()
    }

    /// Coefficient of the 1-based vertex `v`.
    pub fn get(&self, v: usize) -> &Rational {
        &self.exact[v - 1]
    }

    pub fn get_f64(&self, v: usize) -> f64 {
        self.approx[v - 1]
    }

    pub fn exact(&self) -> &[Rational] {
        &self.exact
    }

    pub fn as_f64(&self) -> &[f64] {
        &self.approx
    }

    pub fn is_all_zero(&self) -> bool {
        self.exact.iter().all(Zero::is_zero)
    }

    pub fn squared_norm(&self) -> Rational {
        self.exact.iter().map(|c| c * c).fold(Rational::zero(), |a, b| a + b)
    }

    pub fn scaled(&self, factor: &Rational) -> Result<Self> {
        Self::new(self.exact.iter().map(|c| c * factor).collect())
    }

    /// Smallest coefficient over the given 1-based vertices.
    pub fn min_over(&self, vertices: &[usize]) -> Option<&Rational> {
        vertices.iter().map(|&v| self.get(v)).min()
    }
}

/// Serialized form: a list of exact numbers as strings or JSON numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileJson {
    Spec(String),
    List(Vec<serde_json::Value>),
}

impl ProfileJson {
    pub fn resolve(&self, n: usize) -> Result<LipschitzProfile> {
        match self {
            ProfileJson::Spec(text) => LipschitzProfile::parse(text, n),
            ProfileJson::List(values) => {
                let coefficients = values
                    .iter()
                    .map(json_number)
                    .collect::<Result<Vec<_>>>()?;
                let profile = LipschitzProfile::new(coefficients)?;
                profile.check_len(n)?;
                Ok(profile)
            }
        }
    }
}

/// Reads a JSON number or numeric string exactly, using its decimal text.
pub fn json_number(value: &serde_json::Value) -> Result<Rational> {
    match value {
        serde_json::Value::Number(num) => rational::parse(&num.to_string()),
        serde_json::Value::String(text) => rational::parse(text),
        other => input(format!("expected a number, found {other}")),
    }
}
