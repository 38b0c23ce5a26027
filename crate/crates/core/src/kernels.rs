//! Kernel functions for MMD.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Linear,
    Polynomial,
    Rbf,
    Laplacian,
}

/// Kernel bandwidth / scale. `Auto` resolves to `1/d` for the data at hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    Auto,
    Value(f64),
}

impl Gamma {
    pub fn resolve(self, dim: usize) -> f64 {
        match self {
            Gamma::Auto => 1.0 / dim as f64,
            Gamma::Value(g) => g,
        }
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Auto => f.write_str("auto"),
            Gamma::Value(g) => write!(f, "{g}"),
        }
    }
}

impl std::str::FromStr for Gamma {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            Ok(Gamma::Auto)
        } else {
            s.parse::<f64>()
                .map(Gamma::Value)
                .map_err(|e| format!("gamma must be a number or 'auto': {e}"))
        }
    }
}

/// A kernel family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// Polynomial degree; ignored by other families.
    pub degree: u32,
    pub gamma: Gamma,
    /// Polynomial offset; ignored by other families.
    pub coef: f64,
}

impl KernelSpec {
    pub fn linear() -> Self {
        Self {
            family: KernelFamily::Linear,
            degree: 1,
            gamma: Gamma::Value(1.0),
            coef: 0.0,
        }
    }

    /// `(γ·xᵀy + coef)^degree`.
    pub fn polynomial(degree: u32, gamma: f64, coef: f64) -> Self {
        Self {
            family: KernelFamily::Polynomial,
            degree,
            gamma: Gamma::Value(gamma),
            coef,
        }
    }

    /// `exp(−γ‖x − y‖²)`, default γ = 1/d.
    pub fn rbf(gamma: Gamma) -> Self {
        Self {
            family: KernelFamily::Rbf,
            degree: 1,
            gamma,
            coef: 0.0,
        }
    }

    /// `exp(−γ‖x − y‖₁)`, default γ = 1/d.
    pub fn laplacian(gamma: Gamma) -> Self {
        Self {
            family: KernelFamily::Laplacian,
            degree: 1,
            gamma,
            coef: 0.0,
        }
    }

    /// Degree 2, γ = 1, coef = 0: the JEDi kernel.
    pub fn jedi() -> Self {
        Self::polynomial(2, 1.0, 0.0)
    }

    /// Fixes `gamma` for inputs of dimension `dim` and validates parameters.
    pub fn resolve(&self, dim: usize) -> Result<ResolvedKernel> {
        if dim == 0 {
            return Err(invalid("kernel dimension must be positive"));
        }
        let gamma = self.gamma.resolve(dim);
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(invalid(format!("kernel gamma must be positive, got {gamma}")));
        }
        if self.family == KernelFamily::Polynomial && self.degree < 1 {
            return Err(invalid("polynomial degree must be at least 1"));
        }
        if !self.coef.is_finite() {
            return Err(invalid("kernel coef must be finite"));
        }
        Ok(ResolvedKernel {
            family: self.family,
            degree: self.degree,
            gamma,
            coef: self.coef,
        })
    }
}

/// A kernel with all parameters fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedKernel {
    pub family: KernelFamily,
    pub degree: u32,
    pub gamma: f64,
    pub coef: f64,
}

impl ResolvedKernel {
    /// Whether the kernel is a function of `xᵀy` alone.
    pub(crate) fn is_dot_product(&self) -> bool {
        matches!(self.family, KernelFamily::Linear | KernelFamily::Polynomial)
    }

    #[inline]
    pub(crate) fn from_dot(&self, dot: f64) -> f64 {
        match self.family {
            KernelFamily::Linear => dot,
            KernelFamily::Polynomial => {
                (self.gamma * dot + self.coef).powi(self.degree as i32)
            }
            _ => unreachable!("not a dot-product kernel"),
        }
    }

    #[inline]
    pub(crate) fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Linear | KernelFamily::Polynomial => self.from_dot(dot(x, y)),
            KernelFamily::Rbf => (-self.gamma * sq_dist(x, y)).exp(),
            KernelFamily::Laplacian => (-self.gamma * l1_dist(x, y)).exp(),
        }
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let t = a - b;
            t * t
        })
        .sum()
}

#[inline]
pub(crate) fn l1_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

/// Evaluates `k(x, y)`.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x.len(), y.len())?;
    Ok(spec.resolve(x.len())?.eval(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_by_hand() {
        let v = kernel_eval(&KernelSpec::jedi(), &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(v, 4.0);
        let k = KernelSpec::polynomial(3, 0.5, 1.0);
        assert_eq!(kernel_eval(&k, &[2.0], &[3.0]).unwrap(), 64.0);
    }

    #[test]
    fn rbf_of_equal_points_is_one() {
        for g in [Gamma::Auto, Gamma::Value(0.3), Gamma::Value(10.0)] {
            let x = [0.3, -2.0, 5.0];
            assert_eq!(kernel_eval(&KernelSpec::rbf(g), &x, &x).unwrap(), 1.0);
        }
    }

    #[test]
    fn laplacian_by_hand() {
        let v = kernel_eval(&KernelSpec::laplacian(Gamma::Value(0.5)), &[0.0], &[2.0]).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn linear_is_dot() {
        assert_eq!(
            kernel_eval(&KernelSpec::linear(), &[1.0, 2.0], &[3.0, -1.0]).unwrap(),
            1.0
        );
    }

    #[test]
    fn auto_gamma_is_inverse_dim() {
        let r = KernelSpec::rbf(Gamma::Auto).resolve(8).unwrap();
        assert_eq!(r.gamma, 0.125);
    }

    #[test]
    fn invalid_parameters() {
        assert!(kernel_eval(&KernelSpec::linear(), &[1.0], &[1.0, 2.0]).is_err());
        assert!(KernelSpec::polynomial(0, 1.0, 0.0).resolve(2).is_err());
        assert!(KernelSpec::rbf(Gamma::Value(-1.0)).resolve(2).is_err());
        assert!(KernelSpec::rbf(Gamma::Value(0.0)).resolve(2).is_err());
    }

    #[test]
    fn gamma_parsing() {
        assert_eq!("auto".parse::<Gamma>().unwrap(), Gamma::Auto);
        assert_eq!("0.25".parse::<Gamma>().unwrap(), Gamma::Value(0.25));
        assert!("fast".parse::<Gamma>().is_err());
    }
}
