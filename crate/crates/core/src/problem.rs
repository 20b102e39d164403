//! A grid together with `g`, `f` and the quantities every solver reuses.

use std::sync::Arc;

use crate::eigen::{principal_eigenpair, EigenPair};
use crate::error::Result;
use crate::grid::{Field, GridDomain};
use crate::model::{
    check_hypotheses, ForcingProfile, ForcingStats, HypothesisReport, NonlinearityProfile,
};

#[derive(Debug, Clone)]
pub struct Problem {
    grid: Arc<GridDomain>,
    g: NonlinearityProfile,
    f: ForcingProfile,
    f_values: Field,
    stats: ForcingStats,
    hypotheses: HypothesisReport,
    eigen: EigenPair,
}

impl Problem {
    pub fn new(grid: Arc<GridDomain>, g: NonlinearityProfile, f: ForcingProfile) -> Result<Self> {
        let f_values = f.sample(&grid);
        let stats = f.stats(&grid);
        let hypotheses = check_hypotheses(&g, &f, &grid);
        let eigen = principal_eigenpair(&grid)?;
        Ok(Self {
            grid,
            g,
            f,
            f_values,
            stats,
            hypotheses,
            eigen,
        })
    }

    /// Same grid and `g`, different forcing.
    pub fn with_forcing(&self, f: ForcingProfile) -> Self {
        let f_values = f.sample(&self.grid);
        let stats = f.stats(&self.grid);
        let hypotheses = check_hypotheses(&self.g, &f, &self.grid);
        Self {
            f,
            f_values,
            stats,
            hypotheses,
            ..self.clone()
        }
    }

    /// Same grid and `f`, different `g`.
    pub fn with_gap(&self, g: NonlinearityProfile) -> Self {
        let hypotheses = check_hypotheses(&g, &self.f, &self.grid);
        Self {
            g,
            hypotheses,
            ..self.clone()
        }
    }

    pub fn grid(&self) -> &Arc<GridDomain> {
        &self.grid
    }

    pub fn gap(&self) -> &NonlinearityProfile {
        &self.g
    }

    pub fn forcing(&self) -> &ForcingProfile {
        &self.f
    }

    /// `f` at the interior nodes.
    pub fn forcing_values(&self) -> &Field {
        &self.f_values
    }

    pub fn forcing_stats(&self) -> &ForcingStats {
        &self.stats
    }

    pub fn hypotheses(&self) -> &HypothesisReport {
        &self.hypotheses
    }

    /// `(μ₁, φ₁)` with `∫φ₁ = 1`.
    pub fn eigen(&self) -> &EigenPair {
        &self.eigen
    }

    /// `∫ f φ₁`.
    pub fn forcing_moment(&self) -> f64 {
        self.grid
            .inner_values(self.f_values.values(), self.eigen.phi.values())
    }

    /// `λ f_i / g(u_i)` written into `out`.
    pub(crate) fn reaction(&self, lambda: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        for ((o, &fi), &ui) in out.iter_mut().zip(self.f_values.values()).zip(u) {
            *o = if lambda == 0.0 || fi == 0.0 {
                0.0
            } else {
                lambda * fi * self.g.reciprocal(ui)?
            };
        }
        Ok(())
    }
}
