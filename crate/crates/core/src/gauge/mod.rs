//! Gauge algebra, representations, potentials, Yukawa couplings, covariant
//! jets of the fields and the field equations.

mod algebra;
pub(crate) mod jet;
mod potential;
mod representation;
mod yukawa;

use std::sync::Arc;

pub use algebra::{build_lie_algebra, LieAlgebraModel, SimpleFactor};
pub use jet::{
    covariant_jet, currents, eb_split, el_residuals, field_strength, spinor_covariant_derivative,
    ElectricMagnetic,
    Currents, ElResiduals, FieldStrength, GaugeJet, HiggsJet, SpinorCovariant,
};
pub use potential::{conformal_coupling, potential_eval, Potential};
pub use representation::RepresentationModel;
pub use yukawa::{yukawa_apply, yukawa_dual, YukawaKind, YukawaModel};

use crate::clifford::{build_clifford_model, Chirality, TwistedModel};
use crate::error::{Error, Result};
use crate::geometry::MetricField;

/// A vector-valued field of the coordinates.
pub type FieldFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// Models shared by every point of a configuration.
#[derive(Clone, Debug)]
pub struct Theory {
    pub dimension: usize,
    pub algebra: LieAlgebraModel,
    /// `ρ` on the Higgs space `W`.
    pub higgs: RepresentationModel,
    /// `χ = χ₊ ⊕ χ₋` on the twist space `V`.
    pub twist: RepresentationModel,
    pub twisted: TwistedModel,
    pub potential: Potential,
    pub yukawa: YukawaModel,
}

impl Theory {
    /// `twist_plus` and `twist_minus` act on `V₊` and `V₋`; in odd
    /// dimensions `twist_minus` must be absent.
    pub fn new(
        dimension: usize,
        algebra: LieAlgebraModel,
        higgs: RepresentationModel,
        twist_plus: RepresentationModel,
        twist_minus: Option<RepresentationModel>,
        potential: Potential,
        yukawa: YukawaKind,
    ) -> Result<Self> {
        let clifford = build_clifford_model(dimension)?;
        let v_minus = twist_minus.as_ref().map(|r| r.dim()).unwrap_or(0);
        let twist = match &twist_minus {
            Some(r) => twist_plus.direct_sum(r),
            None => twist_plus.clone(),
        };
        let twisted = TwistedModel::new(clifford, twist_plus.dim(), v_minus)?;
        let yukawa = YukawaModel::new(yukawa, higgs.dim(), &twisted)?;
        if higgs.images().len() != algebra.dim() || twist.images().len() != algebra.dim() {
            return Err(Error::Shape(
                "representations do not match the Lie algebra".into(),
            ));
        }
        Ok(Self {
            dimension,
            algebra,
            higgs,
            twist,
            twisted,
            potential,
            yukawa,
        })
    }
}

#[derive(Clone)]
pub struct SpinorField {
    /// Interleaved real and imaginary parts of the `Σ ⊗ V` components.
    pub field: FieldFn,
    pub chirality: Chirality,
}

/// Background metric together with the gauge, Higgs and spinor fields.
///
/// Connection values are `A_μ^a` at index `μ * dim(g) + a`; Higgs and spinor
/// values interleave real and imaginary parts.
#[derive(Clone)]
pub struct FieldConfiguration {
    pub theory: Arc<Theory>,
    pub metric: Arc<dyn MetricField>,
    pub connection: Option<FieldFn>,
    pub higgs: Option<FieldFn>,
    pub spinor: Option<SpinorField>,
    /// Whether the fields solve the field equations exactly.
    pub solution: bool,
}

impl FieldConfiguration {
    pub fn new(theory: Arc<Theory>, metric: Arc<dyn MetricField>) -> Result<Self> {
        if metric.dimension() != theory.dimension {
            return Err(Error::Shape(format!(
                "metric dimension {} does not match theory dimension {}",
                metric.dimension(),
                theory.dimension
            )));
        }
        Ok(Self {
            theory,
            metric,
            connection: None,
            higgs: None,
            spinor: None,
            solution: false,
        })
    }

    pub fn dimension(&self) -> usize {
        self.theory.dimension
    }

    pub fn with_connection(mut self, f: FieldFn) -> Self {
        self.connection = Some(f);
        self
    }

    pub fn with_higgs(mut self, f: FieldFn) -> Self {
        self.higgs = Some(f);
        self
    }

    pub fn with_spinor(mut self, f: FieldFn, chirality: Chirality) -> Self {
        self.spinor = Some(SpinorField {
            field: f,
            chirality,
        });
        self
    }

    pub fn with_solution(mut self, solution: bool) -> Self {
        self.solution = solution;
        self
    }
}
