use std::collections::HashMap;

use serde::Serialize;

use crate::error::Result;
use crate::spectral::{check_stoquastic_local, LocalOperator, ProductBasis, SparseOperator, StoqReport};

/// Sparse state vector over a product basis.
pub type State = HashMap<u64, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Init,
    Prop,
    Penalty,
    Final,
}

impl TermKind {
    pub fn name(self) -> &'static str {
        match self {
            TermKind::Init => "init",
            TermKind::Prop => "prop",
            TermKind::Penalty => "penalty",
            TermKind::Final => "final",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Term {
    pub kind: TermKind,
    pub weight: f64,
    pub op: LocalOperator,
}

/// Named Hamiltonian terms kept apart for term-wise checks, plus their weights.
#[derive(Debug, Clone, Serialize)]
pub struct Bundle {
    pub construction: &'static str,
    pub basis: ProductBasis,
    pub terms: Vec<Term>,
    /// Number of clock steps `T`; the history state has `T + 1` snapshots.
    pub steps: usize,
}

impl Bundle {
    pub fn term(&self, kind: TermKind) -> Option<&Term> {
        self.terms.iter().find(|t| t.kind == kind)
    }

    /// Weighted sum of all terms.
    pub fn total(&self) -> LocalOperator {
        self.total_of(&self.terms.iter().map(|t| t.kind).collect::<Vec<_>>())
    }

    /// Weighted sum of the selected terms.
    pub fn total_of(&self, kinds: &[TermKind]) -> LocalOperator {
        let parts: Vec<(&LocalOperator, f64)> = self.terms.iter().filter(|t| kinds.contains(&t.kind)).map(|t| (&t.op, t.weight)).collect();
        if parts.is_empty() {
            return LocalOperator::zero(self.basis);
        }
        LocalOperator::combine(&parts)
    }

    pub fn assemble_terms(&self, cap: u64) -> Result<Vec<(TermKind, SparseOperator)>> {
        self.terms.iter().map(|t| Ok((t.kind, t.op.assemble(cap)?))).collect()
    }

    pub fn stoquasticity(&self) -> StoqReport {
        let named: Vec<(&str, &LocalOperator)> = self.terms.iter().map(|t| (t.kind.name(), &t.op)).collect();
        check_stoquastic_local(&named)
    }

    /// Weighted energy of a normalized state, per term and in total.
    pub fn energies(&self, v: &State) -> Vec<(TermKind, f64)> {
        self.terms.iter().map(|t| (t.kind, t.weight * t.op.energy(v))).collect()
    }

    pub fn energy(&self, v: &State) -> f64 {
        self.energies(v).iter().map(|e| e.1).sum()
    }
}

pub fn norm(v: &State) -> f64 {
    v.values().map(|x| x * x).sum::<f64>().sqrt()
}
