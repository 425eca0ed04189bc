//! Density profiles on `[0, 1]` and the smooth test functions used to probe
//! empirical measures.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// An affine profile `u ↦ slope·u + intercept`.
///
/// All stationary profiles of the model (and of the three limiting heat
/// equations) are of this form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearProfile {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearProfile {
    pub fn constant(c: f64) -> Self {
        LinearProfile {
            slope: 0.0,
            intercept: c,
        }
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        self.slope * u + self.intercept
    }
}

/// Named initial profiles `γ: [0,1] → [0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    Linear { slope: f64, intercept: f64 },
    /// `sin(πu)`.
    Sine,
    /// `u(1−u)`.
    Parabola,
}

impl Profile {
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::Linear { slope, intercept } => slope * u + intercept,
            Profile::Sine => (PI * u).sin(),
            Profile::Parabola => u * (1.0 - u),
        }
    }
}

impl From<LinearProfile> for Profile {
    fn from(p: LinearProfile) -> Self {
        Profile::Linear {
            slope: p.slope,
            intercept: p.intercept,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant { value } => write!(f, "const:{value}"),
            Profile::Linear { slope, intercept } => write!(f, "linear:{slope}:{intercept}"),
            Profile::Sine => f.write_str("sin"),
            Profile::Parabola => f.write_str("parabola"),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    /// Accepts `const:<c>`, `linear:<slope>:<intercept>`, `sin` and `parabola`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || {
            Error::invalid(
                "gamma",
                format!("expected const:<c>, linear:<slope>:<intercept>, sin or parabola, got `{s}`"),
            )
        };
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        match parts.as_slice() {
            ["sin"] => Ok(Profile::Sine),
            ["parabola"] => Ok(Profile::Parabola),
            ["const", c] => Ok(Profile::Constant { value: num(c)? }),
            ["linear", a, b] => Ok(Profile::Linear {
                slope: num(a)?,
                intercept: num(b)?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Smooth test functions `H ∈ C²[0,1]` with closed-form derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    One,
    Identity,
    Square,
    SinPi,
    CosPi,
}

impl TestFunction {
    /// `{1, u, u², sin(πu), cos(πu)}`.
    pub const DEFAULT_FAMILY: [TestFunction; 5] = [
        TestFunction::One,
        TestFunction::Identity,
        TestFunction::Square,
        TestFunction::SinPi,
        TestFunction::CosPi,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            TestFunction::One => "one",
            TestFunction::Identity => "u",
            TestFunction::Square => "u2",
            TestFunction::SinPi => "sin_pi_u",
            TestFunction::CosPi => "cos_pi_u",
        }
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::Identity => u,
            TestFunction::Square => u * u,
            TestFunction::SinPi => (PI * u).sin(),
            TestFunction::CosPi => (PI * u).cos(),
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            TestFunction::One => 0.0,
            TestFunction::Identity => 1.0,
            TestFunction::Square => 2.0 * u,
            TestFunction::SinPi => PI * (PI * u).cos(),
            TestFunction::CosPi => -PI * (PI * u).sin(),
        }
    }

    pub fn second_derivative(&self, u: f64) -> f64 {
        match self {
            TestFunction::One | TestFunction::Identity => 0.0,
            TestFunction::Square => 2.0,
            TestFunction::SinPi => -PI * PI * (PI * u).sin(),
            TestFunction::CosPi => -PI * PI * (PI * u).cos(),
        }
    }

    /// `‖H‖∞` on `[0,1]`.
    pub fn sup_norm(&self) -> f64 {
        1.0
    }

    /// `‖H′‖∞` on `[0,1]`.
    pub fn derivative_sup_norm(&self) -> f64 {
        match self {
            TestFunction::One => 0.0,
            TestFunction::Identity => 1.0,
            TestFunction::Square => 2.0,
            TestFunction::SinPi | TestFunction::CosPi => PI,
        }
    }

    /// Whether `H(0) = H(1) = 0`, as required of Dirichlet-regime test functions.
    pub fn vanishes_at_boundary(&self) -> bool {
        matches!(self, TestFunction::SinPi)
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TestFunction::DEFAULT_FAMILY
            .into_iter()
            .find(|h| h.id() == s.trim())
            .ok_or_else(|| {
                Error::invalid(
                    "test_function",
                    format!("unknown test function `{s}` (one, u, u2, sin_pi_u, cos_pi_u)"),
                )
            })
    }
}

/// Composite Simpson rule for `∫₀¹ f`, with `intervals` rounded up to even.
pub fn integrate_unit(f: impl Fn(f64) -> f64, intervals: usize) -> f64 {
    let n = (intervals.max(2) + 1) & !1;
    let h = 1.0 / n as f64;
    let mut acc = f(0.0) + f(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_parsing_round_trips() {
        for s in ["const:0.5", "linear:0.25:0.1", "sin", "parabola"] {
            let p: Profile = s.parse().unwrap();
            assert_eq!(p.to_string().parse::<Profile>().unwrap(), p);
        }
        assert!("cubic".parse::<Profile>().is_err());
        assert!("const:x".parse::<Profile>().is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for f in TestFunction::DEFAULT_FAMILY {
            for &u in &[0.1, 0.37, 0.8] {
                let d = (f.value(u + h) - f.value(u - h)) / (2.0 * h);
                let dd = (f.value(u + h) - 2.0 * f.value(u) + f.value(u - h)) / (h * h);
                assert!((d - f.derivative(u)).abs() < 1e-8, "{f:?}");
                assert!((dd - f.second_derivative(u)).abs() < 1e-4, "{f:?}");
            }
        }
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let v = integrate_unit(|u| u * u * u - u, 10);
        assert!((v - (0.25 - 0.5)).abs() < 1e-15);
    }
}
