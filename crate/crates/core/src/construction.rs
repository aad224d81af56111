//! Circuit-to-Hamiltonian constructions behind one trait, registered by name.

use std::collections::HashMap;

use serde::Serialize;

use crate::bundle::{Bundle, State};
use crate::circuit::{Bits, LayeredCircuit};
use crate::error::{Error, Result};
use crate::grid2d::Grid2d;
use crate::kitaev::Kitaev;
use crate::line1d::Line1d;
use crate::spectral::ProductBasis;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BuildOptions {
    /// Weight of the output check.
    pub delta: f64,
    /// Extra factor on the propagation term, on top of the construction's own weight.
    pub prop_scale: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { delta: 1.0, prop_scale: 1.0 }
    }
}

pub trait Construction: Send + Sync {
    fn name(&self) -> &'static str;
    fn site_dim(&self) -> usize;
    fn basis(&self, c: &LayeredCircuit) -> ProductBasis;
    /// Clock steps `T`.
    fn steps(&self, c: &LayeredCircuit) -> usize;
    fn build(&self, c: &LayeredCircuit, opts: &BuildOptions) -> Result<Bundle>;
    /// Encoded basis state at every clock step of the run on initial data `x0`.
    fn trace(&self, c: &LayeredCircuit, x0: Bits) -> Result<Vec<u64>>;
}

pub fn construction_names() -> &'static [&'static str] {
    &["kitaev", "grid2d", "line1d"]
}

pub fn construction_by_name(name: &str) -> Result<Box<dyn Construction>> {
    match name {
        "kitaev" => Ok(Box::new(Kitaev)),
        "grid2d" => Ok(Box::new(Grid2d)),
        "line1d" => Ok(Box::new(Line1d)),
        other => Err(Error::Unknown { kind: "construction", name: other.to_string() }),
    }
}

/// Uniform superposition over clock steps of the encoded computation, with
/// coin wires in `|+>` and the given witness.
pub fn history_state(con: &dyn Construction, c: &LayeredCircuit, witness: Bits) -> Result<State> {
    let coins = c.coin_wires().len();
    if coins > 20 {
        return Err(Error::Circuit(format!("{coins} coins exceed the enumeration cap")));
    }
    let mut out: State = HashMap::new();
    let amp_coin = (0.5f64).powf(coins as f64 / 2.0);
    for cs in 0..(1u64 << coins) {
        let trace = con.trace(c, c.initial_bits(witness, cs))?;
        let amp = amp_coin / (trace.len() as f64).sqrt();
        for s in trace {
            *out.entry(s).or_insert(0.0) += amp;
        }
    }
    Ok(out)
}

/// All encoded states reachable from any initial data string: the legal sector.
pub fn legal_sector(con: &dyn Construction, c: &LayeredCircuit) -> Result<Vec<u64>> {
    if c.n_prime > 20 {
        return Err(Error::Circuit("legal sector enumeration limited to 20 wires".into()));
    }
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for x in 0..(1u64 << c.n_prime) {
        for s in con.trace(c, x)? {
            if seen.insert(s, ()).is_none() {
                out.push(s);
            }
        }
    }
    Ok(out)
}
