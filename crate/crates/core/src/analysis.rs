//! Spectral questions asked of a built Hamiltonian: lowest energy on the
//! full space or the legal sector, history-state energy, and the angle bound.

use std::path::Path;

use serde::Serialize;

use crate::bundle::{Bundle, TermKind};
use crate::circuit::{normalize, Bits, LayeredCircuit, RawCircuit};
use crate::construction::{history_state, legal_sector, Construction};
use crate::error::{Error, Result};
use crate::spectral::eigen::DENSE_BLOCK_CAP;
use crate::spectral::{geometric_bound, lowest_blockwise, EigenSolver, GeometricBound, SparseOperator, SpectrumResult};

pub fn load_circuit(path: &Path) -> Result<(RawCircuit, LayeredCircuit)> {
    let raw: RawCircuit = std::fs::read_to_string(path)?.parse()?;
    let layered = normalize(&raw)?;
    Ok((raw, layered))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Full,
    Legal,
}

impl std::str::FromStr for Sector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Sector::Full),
            "legal" | "restricted" => Ok(Sector::Legal),
            other => Err(Error::Unknown { kind: "sector", name: other.into() }),
        }
    }
}

/// Weighted sum of `kinds` on the chosen sector, with the squared weight of
/// entries leaving the sector (zero for the full space). A nonzero leak means
/// the legal-sector matrix is a compression, not an exact block.
pub fn sector_operator(bundle: &Bundle, con: &dyn Construction, c: &LayeredCircuit, sector: Sector, kinds: &[TermKind], cap: u64) -> Result<(SparseOperator, f64)> {
    let op = bundle.total_of(kinds);
    match sector {
        Sector::Full => Ok((op.assemble(cap)?, 0.0)),
        Sector::Legal => {
            let states = legal_sector(con, c)?;
            if states.len() as u64 > cap {
                return Err(Error::TooLarge { dim: states.len() as u128, cap: cap as u128 });
            }
            let r = op.restrict(&states);
            Ok((r.op, r.leak))
        }
    }
}

fn all_kinds(bundle: &Bundle) -> Vec<TermKind> {
    bundle.terms.iter().map(|t| t.kind).collect()
}

/// Lowest eigenvalues of the full Hamiltonian on a sector. On the full space
/// beyond the assembly cap, dense and auto fall back to block-wise diagonalization.
pub fn lowest(bundle: &Bundle, con: &dyn Construction, c: &LayeredCircuit, sector: Sector, solver: &dyn EigenSolver, cap: u64) -> Result<SpectrumResult> {
    let too_big = bundle.basis.dim().map_or(true, |d| d > cap);
    if sector == Sector::Full && too_big && solver.name() != "lanczos" {
        return lowest_blockwise(&bundle.total(), DENSE_BLOCK_CAP);
    }
    let (h, _) = sector_operator(bundle, con, c, sector, &all_kinds(bundle), cap)?;
    solver.lowest(&h)
}

/// Energy of the normalized history state for the given witness.
pub fn history_energy(bundle: &Bundle, con: &dyn Construction, c: &LayeredCircuit, witness: Bits) -> Result<f64> {
    Ok(bundle.energy(&history_state(con, c, witness)?))
}

/// Angle bound with `A1` the checks (init, penalty, final) and `A2` the
/// propagation, both on the legal sector.
pub fn angle_bound(bundle: &Bundle, con: &dyn Construction, c: &LayeredCircuit, cap: u64) -> Result<GeometricBound> {
    let checks: Vec<TermKind> = all_kinds(bundle).into_iter().filter(|&k| k != TermKind::Prop).collect();
    let (a1, _) = sector_operator(bundle, con, c, Sector::Legal, &checks, cap)?;
    let (a2, _) = sector_operator(bundle, con, c, Sector::Legal, &[TermKind::Prop], cap)?;
    geometric_bound(&a1.to_dense(), &a2.to_dense())
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub construction: &'static str,
    pub sector: Sector,
    pub solver: &'static str,
    pub dim: u128,
    /// Weight of the propagation leaving the legal sector.
    pub leak: f64,
    pub steps: usize,
    pub delta: f64,
    pub p_accept: f64,
    pub spectrum: SpectrumResult,
    /// `lambda_min * T^3`.
    pub c_const: f64,
    pub history_energy: f64,
    /// `delta * (1 - p_accept) / (T + 1)`, the history-state energy predicted for the best witness.
    pub history_expected: f64,
    pub geometric: Option<GeometricBound>,
    pub seconds: f64,
}

/// Lowest energy, history energy and (when the legal sector is small) the angle bound.
pub fn spectrum_report(bundle: &Bundle, con: &dyn Construction, c: &LayeredCircuit, sector: Sector, solver: &dyn EigenSolver, cap: u64, delta: f64) -> Result<SpectrumReport> {
    let started = std::time::Instant::now();
    let best = c.best_acceptance()?;
    let spectrum = lowest(bundle, con, c, sector, solver, cap)?;
    let (dim, leak) = match sector {
        Sector::Full => (bundle.basis.dim_u128(), 0.0),
        Sector::Legal => {
            let states = legal_sector(con, c)?;
            (states.len() as u128, bundle.total().restrict(&states).leak)
        }
    };
    let history = history_energy(bundle, con, c, best.witness)?;
    let geometric = match legal_sector(con, c) {
        // the bound needs both null spaces nonempty; skip it when one is trivial
        Ok(s) if s.len() <= 4000 => angle_bound(bundle, con, c, cap).ok(),
        _ => None,
    };
    let configs = bundle.steps as f64 + 1.0;
    Ok(SpectrumReport {
        construction: bundle.construction,
        sector,
        solver: solver.name(),
        dim,
        leak,
        steps: bundle.steps,
        delta,
        p_accept: best.p_accept(),
        c_const: spectrum.lambda_min * (bundle.steps as f64).powi(3),
        spectrum,
        history_energy: history,
        history_expected: delta * (1.0 - best.p_accept()) / configs,
        geometric,
        seconds: started.elapsed().as_secs_f64(),
    })
}
