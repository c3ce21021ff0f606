use rand::Rng;

use super::{CopulaModel, Family, MarginalModel};
use crate::{Error, Result, SampleMatrix};

/// A standard heavy-tailed random field: one marginal per location, all with
/// the same tail index, tied together by a Gumbel copula.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldModel {
    marginals: Vec<MarginalModel>,
    copula: CopulaModel,
}

impl FieldModel {
    pub fn new(marginals: Vec<MarginalModel>, copula: CopulaModel) -> Result<Self> {
        let first = marginals
            .first()
            .ok_or_else(|| Error::invalid("a field needs at least one location"))?;
        let alpha = first.alpha();
        if let Some(m) = marginals
            .iter()
            .find(|m| (m.alpha() - alpha).abs() > 1e-12 * alpha)
        {
            return Err(Error::invalid(format!(
                "all locations must share the tail index ({} vs {alpha})",
                m.alpha()
            )));
        }
        Ok(FieldModel { marginals, copula })
    }

    /// `l` copies of the same marginal.
    pub fn homogeneous(marginal: MarginalModel, l: usize, copula: CopulaModel) -> Result<Self> {
        Self::new(vec![marginal; l], copula)
    }

    /// `l` locations whose families cycle through `families`, all with tail
    /// index `alpha`.
    pub fn cycled(families: &[Family], alpha: f64, l: usize, copula: CopulaModel) -> Result<Self> {
        if families.is_empty() {
            return Err(Error::invalid("no marginal families given"));
        }
        let marginals = (0..l)
            .map(|i| MarginalModel::new(families[i % families.len()], alpha))
            .collect::<Result<Vec<_>>>()?;
        Self::new(marginals, copula)
    }

    pub fn marginals(&self) -> &[MarginalModel] {
        &self.marginals
    }

    pub fn copula(&self) -> &CopulaModel {
        &self.copula
    }

    pub fn locations(&self) -> usize {
        self.marginals.len()
    }

    pub fn alpha(&self) -> f64 {
        self.marginals[0].alpha()
    }

    /// Draws `n` independent events. Column `i` is `Fᵢ⁻¹(Uᵢ)` where `U` is a
    /// row of the copula.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SampleMatrix> {
        if n == 0 {
            return Err(Error::invalid("sample size must be positive"));
        }
        let l = self.locations();
        let mut columns = vec![Vec::with_capacity(n); l];
        let mut row = vec![(0.0, 0.0); l];
        for _ in 0..n {
            self.copula.sample_row_into(rng, &mut row);
            for ((col, m), &(u, v)) in columns.iter_mut().zip(&self.marginals).zip(&row) {
                col.push(m.invert(u, v)?);
            }
        }
        SampleMatrix::from_columns(columns)
    }
}
