//! Reversible verification circuits in alternating computational/identity layer form.
//!
//! A computational layer on `n'` wires holds a 1-qubit identity, a 2-qubit
//! identity, and then `n' - 2` window slots; slot `i` acts on wires
//! `i, i+1, i+2`. Each slot carries a [`WindowOp`], a classical reversible
//! permutation of its three wires assembled from Toffoli, X and routing swaps.
//! Identity layers hold `n'/2` two-qubit identities and never change the data.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Bit string over at most 64 wires; wire `w` is bit `w`.
pub type Bits = u64;

pub const DEFAULT_COIN_CAP: u32 = 20;
const SAMPLES_BEYOND_CAP: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum GateKind {
    Toffoli,
    X,
    /// Routing swap inserted by [`normalize`]; never present in raw circuits.
    Swap,
    Identity1,
    Identity2,
    Identity3,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::X | GateKind::Identity1 => 1,
            GateKind::Swap | GateKind::Identity2 => 2,
            GateKind::Toffoli | GateKind::Identity3 => 3,
        }
    }
}

/// A gate with ordered wires. For Toffoli the first two wires are controls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Gate {
    pub kind: GateKind,
    pub wires: Vec<usize>,
}

impl Gate {
    pub fn toffoli(c1: usize, c2: usize, target: usize) -> Self {
        Gate { kind: GateKind::Toffoli, wires: vec![c1, c2, target] }
    }

    pub fn x(w: usize) -> Self {
        Gate { kind: GateKind::X, wires: vec![w] }
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Gate { kind: GateKind::Swap, wires: vec![a, b] }
    }

    pub fn identity(wires: Vec<usize>) -> Self {
        let kind = match wires.len() {
            1 => GateKind::Identity1,
            2 => GateKind::Identity2,
            _ => GateKind::Identity3,
        };
        Gate { kind, wires }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.wires.len() != self.kind.arity() {
            return Err(Error::Circuit(format!("{:?} expects {} wires", self.kind, self.kind.arity())));
        }
        for (i, &w) in self.wires.iter().enumerate() {
            if w >= n {
                return Err(Error::Circuit(format!("wire {w} out of range for {n} qubits")));
            }
            if self.wires[..i].contains(&w) {
                return Err(Error::Circuit(format!("repeated wire {w} in {:?}", self.kind)));
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: Bits) -> Bits {
        let bit = |w: usize| (x >> w) & 1;
        match self.kind {
            GateKind::Toffoli => {
                let (c1, c2, t) = (self.wires[0], self.wires[1], self.wires[2]);
                x ^ ((bit(c1) & bit(c2)) << t)
            }
            GateKind::X => x ^ (1 << self.wires[0]),
            GateKind::Swap => {
                let (a, b) = (self.wires[0], self.wires[1]);
                if bit(a) != bit(b) {
                    x ^ (1 << a) ^ (1 << b)
                } else {
                    x
                }
            }
            GateKind::Identity1 | GateKind::Identity2 | GateKind::Identity3 => x,
        }
    }
}

/// Initial-state role of a wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WireRole {
    Input(bool),
    Witness,
    Coin,
    Ancilla,
}

/// Circuit as written by the user: arbitrary Toffoli/X gates on `n` wires.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCircuit {
    pub n: usize,
    pub gates: Vec<Gate>,
    pub roles: Vec<WireRole>,
    pub output: usize,
}

impl RawCircuit {
    pub fn new(n: usize, gates: Vec<Gate>, roles: Vec<WireRole>, output: usize) -> Result<Self> {
        let c = RawCircuit { n, gates, roles, output };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > 60 {
            return Err(Error::Circuit(format!("unsupported qubit count {}", self.n)));
        }
        if self.roles.len() != self.n {
            return Err(Error::Circuit("roles must cover every wire".into()));
        }
        if self.output >= self.n {
            return Err(Error::Circuit("output wire out of range".into()));
        }
        for g in &self.gates {
            match g.kind {
                GateKind::Toffoli | GateKind::X => g.validate(self.n)?,
                other => {
                    return Err(Error::Circuit(format!("{other:?} is not a raw classical gate")));
                }
            }
        }
        Ok(())
    }

    pub fn simulate(&self, x: Bits) -> Bits {
        self.gates.iter().fold(x, |acc, g| g.apply(acc))
    }
}

impl FromStr for RawCircuit {
    type Err = Error;

    /// Parses the line format: `QUBITS n`, `ROLE w <role>`, `TOF a b c`,
    /// `X a`, `ID a [b [c]]`; `#` starts a comment.
    fn from_str(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut gates = Vec::new();
        let mut role_lines: Vec<(usize, usize, String)> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: line_no, msg };
            let mut tokens = line.split_whitespace();
            let head = tokens.next().unwrap_or_default().to_ascii_uppercase();
            let args: Vec<&str> = tokens.collect();
            let wires = |args: &[&str]| -> Result<Vec<usize>> {
                args.iter()
                    .map(|a| a.parse::<usize>().map_err(|_| parse_err(format!("bad wire index `{a}`"))))
                    .collect()
            };
            match head.as_str() {
                "QUBITS" => {
                    let [v] = args.as_slice() else {
                        return Err(parse_err("QUBITS takes one argument".into()));
                    };
                    n = Some(v.parse().map_err(|_| parse_err(format!("bad qubit count `{v}`")))?);
                }
                "ROLE" => {
                    let [w, r] = args.as_slice() else {
                        return Err(parse_err("ROLE takes a wire and a role".into()));
                    };
                    let w = wires(&[w])?[0];
                    role_lines.push((line_no, w, r.to_ascii_lowercase()));
                }
                "TOF" => {
                    let w = wires(&args)?;
                    if w.len() != 3 {
                        return Err(parse_err("TOF takes three wires".into()));
                    }
                    gates.push((line_no, Gate::toffoli(w[0], w[1], w[2])));
                }
                "X" => {
                    let w = wires(&args)?;
                    if w.len() != 1 {
                        return Err(parse_err("X takes one wire".into()));
                    }
                    gates.push((line_no, Gate::x(w[0])));
                }
                "ID" => {
                    let w = wires(&args)?;
                    if w.is_empty() || w.len() > 3 {
                        return Err(parse_err("ID takes one to three wires".into()));
                    }
                }
                other => return Err(parse_err(format!("unknown directive `{other}`"))),
            }
        }
        let n = n.ok_or(Error::Parse { line: 0, msg: "missing QUBITS header".into() })?;
        let mut roles = vec![WireRole::Ancilla; n];
        let mut output = None;
        for (line, w, r) in role_lines {
            if w >= n {
                return Err(Error::Parse { line, msg: format!("wire {w} out of range") });
            }
            match r.as_str() {
                "input0" => roles[w] = WireRole::Input(false),
                "input1" => roles[w] = WireRole::Input(true),
                "witness" => roles[w] = WireRole::Witness,
                "coin" => roles[w] = WireRole::Coin,
                "ancilla" => roles[w] = WireRole::Ancilla,
                "output" => {
                    if output.replace(w).is_some() {
                        return Err(Error::Parse { line, msg: "more than one output wire".into() });
                    }
                }
                other => return Err(Error::Parse { line, msg: format!("unknown role `{other}`") }),
            }
        }
        for (line, g) in &gates {
            g.validate(n).map_err(|e| Error::Parse { line: *line, msg: e.to_string() })?;
        }
        let output = output.ok_or(Error::Parse { line: 0, msg: "no output wire declared".into() })?;
        RawCircuit::new(n, gates.into_iter().map(|(_, g)| g).collect(), roles, output)
    }
}

/// Classical reversible operation on the window of wires `start..start+3`.
///
/// `table[v]` is the image of the local value `v`, where the wire `start`
/// is the most significant of the three local bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindowOp {
    pub start: usize,
    pub gates: Vec<Gate>,
    pub table: [u8; 8],
}

impl WindowOp {
    pub fn identity(start: usize) -> Self {
        WindowOp { start, gates: Vec::new(), table: [0, 1, 2, 3, 4, 5, 6, 7] }
    }

    pub fn from_gates(start: usize, gates: Vec<Gate>) -> Self {
        let mut table = [0u8; 8];
        for (v, slot) in table.iter_mut().enumerate() {
            let x = Self::spread(start, v as u8);
            let y = gates.iter().fold(x, |acc, g| g.apply(acc));
            *slot = Self::gather(start, y);
        }
        WindowOp { start, gates, table }
    }

    pub fn is_identity(&self) -> bool {
        self.table.iter().enumerate().all(|(i, &v)| i as u8 == v)
    }

    fn spread(start: usize, v: u8) -> Bits {
        let v = v as Bits;
        (((v >> 2) & 1) << start) | (((v >> 1) & 1) << (start + 1)) | ((v & 1) << (start + 2))
    }

    fn gather(start: usize, x: Bits) -> u8 {
        ((((x >> start) & 1) << 2) | (((x >> (start + 1)) & 1) << 1) | ((x >> (start + 2)) & 1)) as u8
    }

    pub fn apply(&self, x: Bits) -> Bits {
        let local = Self::gather(self.start, x);
        let mask = Self::spread(self.start, 7);
        (x & !mask) | Self::spread(self.start, self.table[local as usize])
    }

    /// Image of a local 3-bit value (MSB = wire `start`).
    pub fn map_local(&self, v: u8) -> u8 {
        self.table[v as usize]
    }

    pub fn inverse(&self) -> WindowOp {
        let mut table = [0u8; 8];
        for (i, &v) in self.table.iter().enumerate() {
            table[v as usize] = i as u8;
        }
        WindowOp { start: self.start, gates: Vec::new(), table }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComputationalLayer {
    /// `n' - 2` window slots; slot `i` starts at wire `i`.
    pub windows: Vec<WindowOp>,
}

impl ComputationalLayer {
    fn identity(n_prime: usize) -> Self {
        ComputationalLayer { windows: (0..n_prime.saturating_sub(2)).map(WindowOp::identity).collect() }
    }

    /// The full gate list of the layer: identity on wire 0, identity on
    /// wires 0 and 1, then one 3-qubit entry per window slot.
    pub fn gates(&self) -> Vec<Gate> {
        let mut out = vec![Gate::identity(vec![0]), Gate::identity(vec![0, 1])];
        for w in &self.windows {
            let ws = vec![w.start, w.start + 1, w.start + 2];
            match w.gates.as_slice() {
                [g] if g.kind == GateKind::Toffoli => out.push(g.clone()),
                _ if w.is_identity() => out.push(Gate::identity(ws)),
                _ => out.push(Gate { kind: GateKind::Toffoli, wires: ws }),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityLayer {
    /// Wire pairs `(2i, 2i+1)`, zero-based.
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Layer {
    Computational(ComputationalLayer),
    Identity(IdentityLayer),
}

/// Normalized circuit with `R` computational layers, each followed by an identity layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayeredCircuit {
    pub n_prime: usize,
    pub layers: Vec<Layer>,
    pub roles: Vec<WireRole>,
    /// Wire whose final value is the accept bit; always `n' - 1`.
    pub output: usize,
    /// `wire_map[w]` is the normalized wire holding raw wire `w`.
    pub wire_map: Vec<usize>,
}

impl LayeredCircuit {
    pub fn rounds(&self) -> usize {
        self.computational_layers().count()
    }

    pub fn computational_layers(&self) -> impl Iterator<Item = &ComputationalLayer> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Computational(c) => Some(c),
            Layer::Identity(_) => None,
        })
    }

    pub fn layer(&self, round: usize) -> &ComputationalLayer {
        self.computational_layers().nth(round).expect("round index out of range")
    }

    /// Gate count of the layered form: `R (n' + n'/2)`.
    pub fn gate_count(&self) -> usize {
        self.rounds() * (self.n_prime + self.n_prime / 2)
    }

    /// Per-step operations in layer order, one entry per gate of the layered
    /// form; identities appear as `None`.
    pub fn steps(&self) -> Vec<Option<&WindowOp>> {
        let mut out = Vec::with_capacity(self.gate_count());
        for layer in &self.layers {
            match layer {
                Layer::Computational(c) => {
                    out.push(None);
                    out.push(None);
                    out.extend(c.windows.iter().map(|w| if w.is_identity() { None } else { Some(w) }));
                }
                Layer::Identity(l) => out.extend(l.pairs.iter().map(|_| None)),
            }
        }
        out
    }

    pub fn simulate(&self, x: Bits) -> Bits {
        self.computational_layers()
            .flat_map(|l| l.windows.iter())
            .fold(x, |acc, w| w.apply(acc))
    }

    pub fn simulate_inverse(&self, y: Bits) -> Bits {
        let windows: Vec<&WindowOp> = self.computational_layers().flat_map(|l| l.windows.iter()).collect();
        windows.iter().rev().fold(y, |acc, w| w.inverse().apply(acc))
    }

    pub fn wires_with(&self, pred: impl Fn(WireRole) -> bool) -> Vec<usize> {
        (0..self.n_prime).filter(|&w| pred(self.roles[w])).collect()
    }

    pub fn coin_wires(&self) -> Vec<usize> {
        self.wires_with(|r| r == WireRole::Coin)
    }

    pub fn witness_wires(&self) -> Vec<usize> {
        self.wires_with(|r| r == WireRole::Witness)
    }

    /// Initial bit string: inputs as declared, ancillas 0, witness and coins from arguments.
    pub fn initial_bits(&self, witness: Bits, coins: Bits) -> Bits {
        let mut x = 0;
        let (mut wi, mut ci) = (0, 0);
        for w in 0..self.n_prime {
            let b = match self.roles[w] {
                WireRole::Input(b) => b as Bits,
                WireRole::Ancilla => 0,
                WireRole::Witness => {
                    wi += 1;
                    (witness >> (wi - 1)) & 1
                }
                WireRole::Coin => {
                    ci += 1;
                    (coins >> (ci - 1)) & 1
                }
            };
            x |= b << w;
        }
        x
    }

    /// Maps a raw input assignment onto the normalized wires (padding wires 0).
    pub fn embed(&self, raw: Bits) -> Bits {
        self.wire_map.iter().enumerate().fold(0, |acc, (w, &nw)| acc | (((raw >> w) & 1) << nw))
    }

    pub fn project(&self, y: Bits) -> Bits {
        self.wire_map.iter().enumerate().fold(0, |acc, (w, &nw)| acc | (((y >> nw) & 1) << w))
    }

    pub fn accepts(&self, x: Bits) -> bool {
        (self.simulate(x) >> self.output) & 1 == 1
    }

    /// Exact acceptance probability for `witness`, enumerating all coin strings.
    pub fn acceptance_probability(&self, witness: Bits) -> Result<AcceptanceReport> {
        self.acceptance_probability_capped(witness, DEFAULT_COIN_CAP, 0)
    }

    /// Like [`Self::acceptance_probability`], but with `2^cap` enumerated coin
    /// strings at most; beyond that a seeded uniform sample is drawn and the
    /// report is flagged as an estimate.
    pub fn acceptance_probability_capped(&self, witness: Bits, cap: u32, seed: u64) -> Result<AcceptanceReport> {
        let k = self.coin_wires().len() as u32;
        if k <= cap {
            let total = 1u64 << k;
            let accepting = (0..total).filter(|&c| self.accepts(self.initial_bits(witness, c))).count() as u64;
            return Ok(AcceptanceReport { accepting, total, witness, estimate: None });
        }
        if k > 63 {
            return Err(Error::Circuit(format!("{k} coins exceed the sampler width")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = SAMPLES_BEYOND_CAP;
        let accepting = (0..total)
            .filter(|_| {
                let c: u64 = rng.gen::<u64>() & ((1u64 << k) - 1);
                self.accepts(self.initial_bits(witness, c))
            })
            .count() as u64;
        let p = accepting as f64 / total as f64;
        let half = 1.96 * (p * (1.0 - p) / total as f64).sqrt();
        Ok(AcceptanceReport {
            accepting,
            total,
            witness,
            estimate: Some(((p - half).max(0.0), (p + half).min(1.0))),
        })
    }

    /// Maximizes the acceptance probability over all witness strings.
    pub fn best_acceptance(&self) -> Result<AcceptanceReport> {
        let m = self.witness_wires().len();
        if m > 20 {
            return Err(Error::Circuit(format!("{m} witness wires exceed the enumeration cap")));
        }
        let mut best: Option<AcceptanceReport> = None;
        for w in 0..(1u64 << m) {
            let r = self.acceptance_probability(w)?;
            if best.as_ref().map_or(true, |b| r.p_accept() > b.p_accept()) {
                best = Some(r);
            }
        }
        Ok(best.expect("at least one witness"))
    }
}

/// Result of enumerating (or sampling) the coin strings for one witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptanceReport {
    pub accepting: u64,
    pub total: u64,
    /// Witness bits, in increasing witness-wire order.
    pub witness: Bits,
    /// 95% interval when the probability was sampled rather than enumerated.
    pub estimate: Option<(f64, f64)>,
}

impl AcceptanceReport {
    pub fn p_accept(&self) -> f64 {
        self.accepting as f64 / self.total as f64
    }
}

impl fmt::Display for AcceptanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.accepting, self.total)?;
        if let Some((lo, hi)) = self.estimate {
            write!(f, " (estimate, 95% CI [{lo:.4}, {hi:.4}])")?;
        }
        Ok(())
    }
}

/// Rewrites a raw circuit into layered form.
///
/// Wires are padded to an even count (and to at least four when there are
/// gates, since only window slots carry gates), and the output wire is
/// relabelled to `n' - 1`. Toffolis on non-adjacent wires are routed with
/// adjacent swaps that are undone right after the gate.
pub fn normalize(raw: &RawCircuit) -> Result<LayeredCircuit> {
    raw.validate()?;
    let mut n_prime = raw.n;
    if !raw.gates.is_empty() && n_prime < 4 {
        n_prime = 4;
    }
    if n_prime % 2 == 1 {
        n_prime += 1;
    }
    let mut wire_map: Vec<usize> = (0..raw.n).collect();
    let last = n_prime - 1;
    // Relabel: raw output <-> last wire.
    let relabel = |w: usize| -> usize {
        if w == raw.output {
            last
        } else if w == last {
            raw.output
        } else {
            w
        }
    };
    for m in wire_map.iter_mut() {
        *m = relabel(*m);
    }
    let mut roles = vec![WireRole::Ancilla; n_prime];
    for (w, &r) in raw.roles.iter().enumerate() {
        roles[relabel(w)] = r;
    }

    let mut ops: Vec<WindowOp> = Vec::new();
    for g in &raw.gates {
        let wires: Vec<usize> = g.wires.iter().map(|&w| relabel(w)).collect();
        match g.kind {
            GateKind::X => {
                let start = wires[0].min(n_prime - 3);
                ops.push(WindowOp::from_gates(start, vec![Gate::x(wires[0])]));
            }
            GateKind::Toffoli => route_toffoli(&wires, n_prime, &mut ops),
            _ => unreachable!("validated raw circuit"),
        }
    }

    let mut layers_ops: Vec<Vec<WindowOp>> = Vec::new();
    for op in ops {
        let fits = layers_ops
            .last()
            .and_then(|l| l.last())
            .map_or(false, |prev| op.start > prev.start);
        if fits {
            layers_ops.last_mut().unwrap().push(op);
        } else {
            layers_ops.push(vec![op]);
        }
    }
    if layers_ops.is_empty() {
        layers_ops.push(Vec::new());
    }
    let mut layers = Vec::new();
    for ops in layers_ops {
        let mut layer = ComputationalLayer::identity(n_prime);
        for op in ops {
            let s = op.start;
            layer.windows[s] = op;
        }
        layers.push(Layer::Computational(layer));
        layers.push(Layer::Identity(IdentityLayer { pairs: (0..n_prime / 2).map(|i| (2 * i, 2 * i + 1)).collect() }));
    }
    Ok(LayeredCircuit { n_prime, layers, roles, output: last, wire_map })
}

fn route_toffoli(wires: &[usize], n_prime: usize, ops: &mut Vec<WindowOp>) {
    // at[p] = which original wire's value currently sits at position p.
    let mut at: Vec<usize> = (0..n_prime).collect();
    let mut sorted = wires.to_vec();
    sorted.sort_unstable();
    let a = sorted[0];
    let mut swaps: Vec<usize> = Vec::new();
    for (offset, &w) in sorted.iter().enumerate().skip(1) {
        let mut p = at.iter().position(|&x| x == w).unwrap();
        while p > a + offset {
            swaps.push(p - 1);
            at.swap(p - 1, p);
            p -= 1;
        }
    }
    let swap_op = |p: usize| WindowOp::from_gates(p.min(n_prime - 3), vec![Gate::swap(p, p + 1)]);
    for &p in &swaps {
        ops.push(swap_op(p));
    }
    let pos = |w: usize| at.iter().position(|&x| x == w).unwrap();
    let start = a.min(n_prime - 3);
    ops.push(WindowOp::from_gates(start, vec![Gate::toffoli(pos(wires[0]), pos(wires[1]), pos(wires[2]))]));
    for &p in swaps.iter().rev() {
        ops.push(swap_op(p));
    }
}

/// Parses a bit string written wire 0 first, e.g. `"1101"`.
pub fn bits_from_str(s: &str) -> Bits {
    s.chars().enumerate().fold(0, |acc, (i, c)| acc | (((c == '1') as Bits) << i))
}

pub fn bits_to_string(x: Bits, n: usize) -> String {
    (0..n).map(|i| if (x >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roles(n: usize) -> Vec<WireRole> {
        vec![WireRole::Ancilla; n]
    }

    #[test]
    fn empty_circuit_is_one_identity_round() {
        let c = normalize(&RawCircuit::new(4, vec![], roles(4), 3).unwrap()).unwrap();
        assert_eq!(c.rounds(), 1);
        assert_eq!(c.layers.len(), 2);
        assert_eq!(c.simulate(bits_from_str("0110")), bits_from_str("0110"));
    }

    #[test]
    fn single_toffoli_truth_table() {
        let raw = RawCircuit::new(4, vec![Gate::toffoli(0, 1, 2)], roles(4), 3).unwrap();
        let c = normalize(&raw).unwrap();
        assert_eq!(c.rounds(), 1);
        assert_eq!(c.simulate(bits_from_str("1101")), bits_from_str("1111"));
    }

    #[test]
    fn x_flips_last_wire() {
        let raw = RawCircuit::new(4, vec![Gate::x(3)], roles(4), 3).unwrap();
        let c = normalize(&raw).unwrap();
        assert_eq!(c.simulate(bits_from_str("0000")), bits_from_str("0001"));
    }

    #[test]
    fn odd_circuit_is_padded() {
        let raw = RawCircuit::new(3, vec![Gate::toffoli(0, 1, 2)], roles(3), 2).unwrap();
        let c = normalize(&raw).unwrap();
        assert_eq!(c.n_prime, 4);
        for x in 0..8u64 {
            let y = c.simulate(c.embed(x));
            assert_eq!(c.project(y), raw.simulate(x));
            // the padding wire never changes
            let pad = (0..4).find(|w| !c.wire_map.contains(w)).unwrap();
            assert_eq!((y >> pad) & 1, 0);
        }
    }

    #[test]
    fn layer_shapes() {
        let raw = RawCircuit::new(6, vec![Gate::toffoli(5, 0, 3), Gate::x(1), Gate::toffoli(2, 4, 0)], roles(6), 4).unwrap();
        let c = normalize(&raw).unwrap();
        for (i, layer) in c.layers.iter().enumerate() {
            match layer {
                Layer::Computational(l) => {
                    assert_eq!(i % 2, 0);
                    assert_eq!(l.gates().len(), c.n_prime);
                    for (s, w) in l.windows.iter().enumerate() {
                        assert_eq!(w.start, s);
                    }
                }
                Layer::Identity(l) => {
                    assert_eq!(i % 2, 1);
                    assert_eq!(l.pairs.len(), c.n_prime / 2);
                }
            }
        }
        assert_eq!(c.output, c.n_prime - 1);
    }

    #[test]
    fn parses_circuit_file() {
        let text = "# toy\nQUBITS 4\nROLE 0 input1\nROLE 1 witness\nROLE 3 output\nTOF 0 1 3\nID 2\n";
        let raw: RawCircuit = text.parse().unwrap();
        assert_eq!(raw.gates, vec![Gate::toffoli(0, 1, 3)]);
        assert_eq!(raw.roles[0], WireRole::Input(true));
        assert_eq!(raw.output, 3);
    }

    #[test]
    fn parse_error_reports_line() {
        let err = "QUBITS 4\nROLE 3 output\nTOF 0 1\n".parse::<RawCircuit>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = "QUBITS 4\nROLE 3 output\nCNOT 0 1\n".parse::<RawCircuit>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn rejects_non_classical_raw_gate() {
        let raw = RawCircuit::new(4, vec![Gate::swap(0, 1)], roles(4), 3);
        assert!(raw.is_err());
    }

    #[test]
    fn coin_copy_is_half() {
        let mut r = roles(2);
        r[1] = WireRole::Coin;
        let c = normalize(&RawCircuit::new(2, vec![], r, 1).unwrap()).unwrap();
        let rep = c.acceptance_probability(0).unwrap();
        assert_eq!((rep.accepting, rep.total), (1, 2));
    }

    #[test]
    fn hardwired_outputs() {
        let c = normalize(&RawCircuit::new(4, vec![Gate::x(3)], roles(4), 3).unwrap()).unwrap();
        assert_eq!(c.acceptance_probability(0).unwrap().p_accept(), 1.0);
        let c = normalize(&RawCircuit::new(4, vec![], roles(4), 3).unwrap()).unwrap();
        assert_eq!(c.acceptance_probability(0).unwrap().p_accept(), 0.0);
    }

    #[test]
    fn sampling_beyond_cap_is_flagged() {
        let mut r = roles(4);
        r[0] = WireRole::Coin;
        r[1] = WireRole::Coin;
        let raw = RawCircuit::new(4, vec![Gate::toffoli(0, 1, 3)], r, 3).unwrap();
        let c = normalize(&raw).unwrap();
        let rep = c.acceptance_probability_capped(0, 1, 7).unwrap();
        let (lo, hi) = rep.estimate.unwrap();
        assert!(lo <= 0.25 && 0.25 <= hi);
    }
}
