//! The full pipeline for one polygon: CM classes, maximal modifying sets,
//! quivers, affine classes and dimers.

use rayon::prelude::*;
use thiserror::Error;

use crate::cm::{enumerate_cm_with, CmError, DEFAULT_MAX_STEPS};
use crate::dimer::{extract_dimer, type_label, DimerError, DimerModel};
use crate::lattice::{BVector, ToricData};
use crate::modmax::{enumerate_mm, CompatibilityGraph, ModifyingSet};
use crate::mutation::MutationError;
use crate::quiver::{build_quiver, dedup_nccrs, EmbeddedQuiver, NccrClasses, QuiverError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Cm(#[from] CmError),
    #[error(transparent)]
    Quiver(#[from] QuiverError),
    #[error(transparent)]
    Dimer(#[from] DimerError),
    #[error(transparent)]
    Mutation(#[from] MutationError),
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub data: ToricData,
    pub cm: Vec<BVector>,
    pub graph: CompatibilityGraph,
    pub sets: Vec<ModifyingSet>,
    pub quivers: Vec<EmbeddedQuiver>,
    pub classes: NccrClasses,
}

impl Analysis {
    pub fn run(data: &ToricData) -> Result<Self, AnalysisError> {
        Self::run_with(data, DEFAULT_MAX_STEPS)
    }

    pub fn run_with(data: &ToricData, max_steps: usize) -> Result<Self, AnalysisError> {
        let cm = enumerate_cm_with(data, max_steps)?;
        let graph = CompatibilityGraph::new(data, &cm);
        let sets = enumerate_mm(&graph);
        let quivers = sets
            .par_iter()
            .map(|s| build_quiver(data, s))
            .collect::<Result<Vec<_>, _>>()?;
        let classes = dedup_nccrs(data, &sets, &quivers)?;
        Ok(Analysis {
            data: data.clone(),
            cm,
            graph,
            sets,
            quivers,
            classes,
        })
    }

    /// Listed classes as `(raw class, differs from its opposite)`.
    pub fn listed_classes(&self, mod_opposite: bool) -> Vec<(usize, bool)> {
        if mod_opposite {
            self.classes.mod_opposite()
        } else {
            (0..self.classes.raw_count())
                .map(|c| (c, self.classes.opposite[c] != c))
                .collect()
        }
    }

    pub fn representative(&self, class: usize) -> (&ModifyingSet, &EmbeddedQuiver) {
        let i = self.classes.representatives[class];
        (&self.sets[i], &self.quivers[i])
    }

    pub fn dimer(&self, class: usize) -> Result<DimerModel, DimerError> {
        extract_dimer(self.representative(class).1)
    }

    /// Type label of a class, when the polygon is reflexive.
    pub fn type_label(&self, class: usize) -> Result<Option<&'static str>, DimerError> {
        let seq = self.dimer(class)?.type_sequence()?;
        Ok(type_label(&seq))
    }
}
