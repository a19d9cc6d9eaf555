use crate::error::{Error, Result};
use crate::CVector;

/// Higgs self-interaction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Potential {
    None,
    /// `λ/2 (|Φ|² - μ/λ)²`
    MexicanHat { lambda: f64, mu: f64 },
    /// `c Scal |Φ|² + λ/2 |Φ|⁴` with `c = (m-2)/(4(m-1))`
    Conformal { lambda: f64 },
}

/// `(m-2) / (4(m-1))`.
pub fn conformal_coupling(m: usize) -> f64 {
    (m as f64 - 2.0) / (4.0 * (m as f64 - 1.0))
}

impl Potential {
    pub fn mexican_hat(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !(mu >= 0.0) {
            return Err(Error::Parameter(format!(
                "potential parameters must be non-negative, got lambda={lambda}, mu={mu}"
            )));
        }
        if lambda == 0.0 && mu > 0.0 {
            return Err(Error::Parameter(
                "mexican hat with lambda = 0 needs mu = 0".into(),
            ));
        }
        Ok(Potential::MexicanHat { lambda, mu })
    }

    pub fn conformal(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::Parameter(format!(
                "lambda must be non-negative, got {lambda}"
            )));
        }
        Ok(Potential::Conformal { lambda })
    }

    pub fn is_conformal(&self) -> bool {
        matches!(self, Potential::Conformal { .. })
    }

    /// `(U, grad U)` with `Re⟨α, grad U⟩ = dU(α)`. The conformal kind needs the
    /// scalar curvature and the dimension.
    pub fn evaluate(&self, phi: &CVector, scal: Option<f64>, m: usize) -> Result<(f64, CVector)> {
        let r2 = phi.norm_squared();
        match *self {
            Potential::None => Ok((0.0, CVector::zeros(phi.len()))),
            Potential::MexicanHat { lambda, mu } => {
                if lambda == 0.0 {
                    return Ok((0.0, CVector::zeros(phi.len())));
                }
                let d = r2 - mu / lambda;
                Ok((0.5 * lambda * d * d, phi * crate::C64::new(2.0 * lambda * d, 0.0)))
            }
            Potential::Conformal { lambda } => {
                let s = scal.ok_or_else(|| {
                    Error::InsufficientJet("conformal potential needs the scalar curvature".into())
                })?;
                let c = conformal_coupling(m);
                let u = c * s * r2 + 0.5 * lambda * r2 * r2;
                let g = phi * crate::C64::new(2.0 * c * s + 2.0 * lambda * r2, 0.0);
                Ok((u, g))
            }
        }
    }
}

/// Free-function form of [`Potential::evaluate`].
pub fn potential_eval(
    potential: &Potential,
    phi: &CVector,
    scal: Option<f64>,
    m: usize,
) -> Result<(f64, CVector)> {
    potential.evaluate(phi, scal, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn vacuum_manifold() {
        let p = Potential::mexican_hat(2.0, 2.0).unwrap();
        let phi = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let (u, g) = p.evaluate(&phi, None, 4).unwrap();
        assert!(u.abs() < 1e-15);
        assert!(g.norm() < 1e-15);
    }

    #[test]
    fn off_vacuum_value() {
        let p = Potential::mexican_hat(2.0, 2.0).unwrap();
        let phi = CVector::from_vec(vec![C64::new(2f64.sqrt(), 0.0), C64::new(0.0, 0.0)]);
        let (u, g) = p.evaluate(&phi, None, 4).unwrap();
        assert!((u - 1.0).abs() < 1e-14);
        assert!((g - &phi * C64::new(4.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn conformal_coefficient() {
        let p = Potential::conformal(0.0).unwrap();
        let h: f64 = 0.5;
        let phi = CVector::from_vec(vec![C64::new(0.3, -0.2)]);
        let (u, _) = p.evaluate(&phi, Some(12.0 * h * h), 4).unwrap();
        assert!((u - 2.0 * h * h * phi.norm_squared()).abs() < 1e-15);
        assert!(p.evaluate(&phi, None, 4).is_err());
    }

    #[test]
    fn invalid_parameters() {
        assert!(Potential::mexican_hat(0.0, 1.0).is_err());
        assert!(Potential::mexican_hat(-1.0, 1.0).is_err());
        assert!(Potential::conformal(-0.1).is_err());
    }
}
