//! One-dimensional construction on a chain of 19-level particles.
//!
//! The chain has `R` blocks of `n' - 1` particles. A gate flag (`CC`) sweeps
//! right through a block applying the window gates; the block is then copied
//! into the next one particle by particle by left/right sweeping flags.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bundle::{Bundle, Term, TermKind};
use crate::circuit::{Bits, LayeredCircuit, WireRole};
use crate::construction::{BuildOptions, Construction};
use crate::error::{Error, Result};
use crate::spectral::{LocalBuilder, LocalOperator, ProductBasis};

pub const SITE_DIM: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Tag {
    Unborn,
    Dead,
    Turn,
    BBdata,
    CCgate,
    QRight,
    QLeft,
    RFlag,
    LFlag,
}

impl Tag {
    pub const ALL: [Tag; 9] = [Tag::Unborn, Tag::Dead, Tag::Turn, Tag::BBdata, Tag::CCgate, Tag::QRight, Tag::QLeft, Tag::RFlag, Tag::LFlag];

    pub fn mnemonic(self) -> &'static str {
        match self {
            Tag::Unborn => "U",
            Tag::Dead => "D",
            Tag::Turn => "T",
            Tag::BBdata => "BB",
            Tag::CCgate => "CC",
            Tag::QRight => "QR",
            Tag::QLeft => "QL",
            Tag::RFlag => "RF",
            Tag::LFlag => "LF",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Tag> {
        Tag::ALL.iter().copied().find(|t| t.mnemonic() == s)
    }

    pub fn is_active(self) -> bool {
        matches!(self, Tag::CCgate | Tag::RFlag | Tag::LFlag | Tag::Turn)
    }

    pub fn payload_bits(self) -> u32 {
        match self {
            Tag::BBdata | Tag::CCgate => 2,
            Tag::QRight | Tag::QLeft | Tag::RFlag | Tag::LFlag => 1,
            Tag::Unborn | Tag::Dead | Tag::Turn => 0,
        }
    }

    /// Wires of circuit data held; the left flag's level is never used for data.
    fn qubits(self) -> usize {
        match self {
            Tag::LFlag => 0,
            t => t.payload_bits() as usize,
        }
    }

    fn offset(self) -> usize {
        match self {
            Tag::Unborn => 0,
            Tag::Dead => 1,
            Tag::Turn => 2,
            Tag::BBdata => 3,
            Tag::CCgate => 7,
            Tag::QRight => 11,
            Tag::QLeft => 13,
            Tag::RFlag => 15,
            Tag::LFlag => 17,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ParticleState1D {
    pub tag: Tag,
    pub payload: u8,
}

impl ParticleState1D {
    pub fn new(tag: Tag, payload: u8) -> Self {
        debug_assert!((payload as u32) < (1 << tag.payload_bits()));
        ParticleState1D { tag, payload }
    }

    pub fn index(self) -> usize {
        self.tag.offset() + self.payload as usize
    }

    pub fn from_index(i: usize) -> Self {
        let tag = *Tag::ALL.iter().rev().find(|t| t.offset() <= i).expect("index in range");
        assert!(i < SITE_DIM, "particle index {i} out of range");
        ParticleState1D { tag, payload: (i - tag.offset()) as u8 }
    }
}

fn st(tag: Tag, payload: u8) -> usize {
    ParticleState1D::new(tag, payload).index()
}

pub fn site_basis() -> Vec<ParticleState1D> {
    (0..SITE_DIM).map(ParticleState1D::from_index).collect()
}

/// Chain geometry: `rounds` blocks of `n' - 1` particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ChainLayout {
    pub n_prime: usize,
    pub rounds: usize,
}

impl ChainLayout {
    pub fn for_circuit(c: &LayeredCircuit) -> Self {
        ChainLayout { n_prime: c.n_prime, rounds: c.rounds() }
    }

    pub fn block(&self) -> usize {
        self.n_prime - 1
    }

    pub fn len(&self) -> usize {
        self.block() * self.rounds
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether a block boundary sits between sites `s` and `s + 1`.
    pub fn boundary_after(&self, s: usize) -> bool {
        (s + 1) % self.block() == 0
    }

    /// Configurations visited by a full run.
    pub fn configurations(&self) -> usize {
        let n = self.n_prime;
        (2 * n - 1) * (n - 1) * (self.rounds - 1) + (n - 1)
    }

    pub fn steps(&self) -> usize {
        self.configurations() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RuleId {
    GateApplication,
    RightTurn,
    LeftSweep,
    LeftSweepBoundary,
    LeftTurn,
    TurnRelease,
    RightSweep,
    RightSweepBoundary,
    RightTurnFlag,
    NewRound,
}

/// Boundary condition between the two sites of a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bd {
    With,
    Without,
    Either,
}

impl Bd {
    fn accepts(self, boundary: bool) -> bool {
        match self {
            Bd::With => boundary,
            Bd::Without => !boundary,
            Bd::Either => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TransitionRule1D {
    pub id: RuleId,
    pub lhs: (Tag, Tag),
    pub rhs: (Tag, Tag),
    pub boundary: Bd,
}

pub const RULES: [TransitionRule1D; 10] = {
    use Tag::*;
    const fn r(id: RuleId, l: (Tag, Tag), rr: (Tag, Tag), boundary: Bd) -> TransitionRule1D {
        TransitionRule1D { id, lhs: l, rhs: rr, boundary }
    }
    [
        r(RuleId::GateApplication, (CCgate, QRight), (QLeft, CCgate), Bd::Without),
        r(RuleId::RightTurn, (CCgate, Unborn), (LFlag, BBdata), Bd::With),
        r(RuleId::LeftSweep, (QLeft, LFlag), (LFlag, QRight), Bd::Without),
        r(RuleId::LeftSweepBoundary, (BBdata, LFlag), (LFlag, BBdata), Bd::With),
        r(RuleId::LeftTurn, (Dead, LFlag), (Dead, Turn), Bd::Either),
        r(RuleId::TurnRelease, (Turn, QRight), (Dead, RFlag), Bd::Without),
        r(RuleId::RightSweep, (RFlag, QRight), (QLeft, RFlag), Bd::Without),
        r(RuleId::RightSweepBoundary, (RFlag, BBdata), (BBdata, RFlag), Bd::With),
        r(RuleId::RightTurnFlag, (RFlag, Unborn), (LFlag, QRight), Bd::Without),
        r(RuleId::NewRound, (Turn, BBdata), (Dead, CCgate), Bd::With),
    ]
};

/// Payload map of a rule. `window` is the gate table for gate application.
fn rule_payload(id: RuleId, l: u8, r: u8, window: &dyn Fn(u8) -> u8) -> (u8, u8) {
    match id {
        RuleId::GateApplication => {
            let v = window((l << 1) | r);
            (v >> 2, v & 3)
        }
        RuleId::RightTurn => (0, l),
        RuleId::LeftSweep => (0, l),
        RuleId::LeftSweepBoundary => (0, l),
        RuleId::LeftTurn => (0, 0),
        RuleId::TurnRelease => (0, r),
        RuleId::RightSweep => (l, r),
        RuleId::RightSweepBoundary => ((l << 1) | (r >> 1), r & 1),
        RuleId::RightTurnFlag => (0, l),
        RuleId::NewRound => (0, r),
    }
}

/// Payload values a site of this tag may take as a rule input. The left
/// flag only ever appears with level 0.
fn rule_inputs(t: Tag) -> Vec<u8> {
    match t {
        Tag::LFlag => vec![0],
        t => (0..1u8 << t.payload_bits()).collect(),
    }
}

/// A configuration of the chain; payloads may be ignored (all zero) when only tags matter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChainConfiguration {
    pub sites: Vec<(Tag, u8)>,
}

impl ChainConfiguration {
    pub fn tags(&self) -> Vec<Tag> {
        self.sites.iter().map(|s| s.0).collect()
    }

    pub fn from_tags(tags: &[Tag]) -> Self {
        ChainConfiguration { sites: tags.iter().map(|&t| (t, 0)).collect() }
    }

    pub fn digits(&self) -> Vec<usize> {
        self.sites.iter().map(|&(t, p)| st(t, p)).collect()
    }

    pub fn from_digits(d: &[usize]) -> Self {
        ChainConfiguration {
            sites: d.iter().map(|&i| ParticleState1D::from_index(i)).map(|s| (s.tag, s.payload)).collect(),
        }
    }

    /// One row of the cycle table: leading `D |`, block bars, trailing `| U`.
    pub fn render(&self, layout: ChainLayout) -> String {
        let mut out = String::from("D |");
        for (s, (t, _)) in self.sites.iter().enumerate() {
            out.push(' ');
            out.push_str(t.mnemonic());
            if layout.boundary_after(s) {
                out.push_str(" |");
            }
        }
        out.push_str(" U");
        out
    }
}

impl fmt::Display for ChainConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tags: Vec<&str> = self.sites.iter().map(|s| s.0.mnemonic()).collect();
        write!(f, "{}", tags.join(" "))
    }
}

/// Sites `(s, s+1)` with a boundary flag, plus the two virtual ends:
/// a Dead particle left of site 0 and an Unborn one right of the last site,
/// each across a boundary.
fn neighbor_pairs(layout: ChainLayout, tags: &[Tag]) -> Vec<(Option<usize>, Tag, Tag, bool)> {
    let n = tags.len();
    let mut out = Vec::with_capacity(n + 1);
    out.push((None, Tag::Dead, tags[0], true));
    for s in 0..n - 1 {
        out.push((Some(s), tags[s], tags[s + 1], layout.boundary_after(s)));
    }
    out.push((Some(n - 1), tags[n - 1], Tag::Unborn, true));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    Forward,
    Backward,
}

/// Rule matches on a tag skeleton as `(rule, left site)`; `None` for the
/// virtual Dead left of site 0.
fn matches(layout: ChainLayout, tags: &[Tag], dir: Dir) -> Vec<(TransitionRule1D, Option<usize>)> {
    let n = tags.len();
    let mut out = Vec::new();
    for (left, a, b, bd) in neighbor_pairs(layout, tags) {
        for rule in RULES {
            let (from, to) = match dir {
                Dir::Forward => (rule.lhs, rule.rhs),
                Dir::Backward => (rule.rhs, rule.lhs),
            };
            if from != (a, b) || !rule.boundary.accepts(bd) {
                continue;
            }
            // virtual ends must stay Dead / Unborn
            let left_ok = left.is_some() || to.0 == Tag::Dead;
            let right_ok = left.map_or(true, |s| s + 1 < n) || to.1 == Tag::Unborn;
            if left_ok && right_ok {
                out.push((rule, left));
            }
        }
    }
    out
}

fn apply_tags(tags: &mut [Tag], rule: TransitionRule1D, left: Option<usize>, dir: Dir) {
    let to = match dir {
        Dir::Forward => rule.rhs,
        Dir::Backward => rule.lhs,
    };
    match left {
        Some(s) => {
            tags[s] = to.0;
            if s + 1 < tags.len() {
                tags[s + 1] = to.1;
            }
        }
        None => tags[0] = to.1,
    }
}

/// Successor of a configuration, applying the gate of layer `s / (n'-1)`,
/// slot `s % (n'-1)` on gate application at site `s`.
pub fn step_forward(c: &LayeredCircuit, cfg: &ChainConfiguration) -> Result<ChainConfiguration> {
    let layout = ChainLayout::for_circuit(c);
    let tags = cfg.tags();
    let found = matches(layout, &tags, Dir::Forward);
    let (rule, left) = match found.as_slice() {
        [] => return Err(Error::Circuit("no rule applies".into())),
        [one] => *one,
        _ => return Err(Error::Circuit(format!("{} rules apply to {cfg}", found.len()))),
    };
    let mut next = cfg.clone();
    match left {
        None => next.sites[0] = (rule.rhs.1, 0),
        Some(s) => {
            let (l, r) = (cfg.sites[s].1, cfg.sites.get(s + 1).map_or(0, |x| x.1));
            let window = |v: u8| {
                let layer = c.layer(s / layout.block());
                layer.windows[s % layout.block()].map_local(v)
            };
            let (pl, pr) = rule_payload(rule.id, l, r, &window);
            next.sites[s] = (rule.rhs.0, pl);
            next.sites[s + 1] = (rule.rhs.1, pr);
        }
    }
    Ok(next)
}

pub fn initial_configuration(layout: ChainLayout, x0: Bits) -> ChainConfiguration {
    let bit = |w: usize| ((x0 >> w) & 1) as u8;
    let mut sites = vec![(Tag::Unborn, 0); layout.len()];
    sites[0] = (Tag::CCgate, (bit(0) << 1) | bit(1));
    for w in 2..layout.n_prime {
        sites[w - 1] = (Tag::QRight, bit(w));
    }
    ChainConfiguration { sites }
}

/// Data bits of the final configuration (`QL ... QL CC` in the last block).
pub fn read_final(layout: ChainLayout, cfg: &ChainConfiguration) -> Option<Bits> {
    let start = layout.len() - layout.block();
    let mut x = 0;
    for (j, &(t, p)) in cfg.sites[start..].iter().enumerate() {
        let p = p as Bits;
        match t {
            Tag::QLeft if j + 1 < layout.block() => x |= p << j,
            Tag::CCgate if j + 1 == layout.block() => x |= ((p >> 1) << j) | ((p & 1) << (j + 1)),
            _ => return None,
        }
    }
    Some(x)
}

/// Every configuration of the run on `x0`.
pub fn trace(c: &LayeredCircuit, x0: Bits) -> Result<Vec<ChainConfiguration>> {
    let layout = ChainLayout::for_circuit(c);
    let mut cfg = initial_configuration(layout, x0);
    let mut out = vec![cfg.clone()];
    loop {
        match step_forward(c, &cfg) {
            Ok(next) => {
                cfg = next;
                out.push(cfg.clone());
            }
            Err(_) if read_final(layout, &cfg).is_some() => break,
            Err(e) => return Err(e),
        }
        if out.len() > layout.configurations() {
            return Err(Error::Circuit("chain run exceeds its configuration count".into()));
        }
    }
    Ok(out)
}

/// One gate-plus-reset cycle from the initial block to the start of the next.
pub fn run_cycle(n_prime: usize) -> Result<Vec<ChainConfiguration>> {
    if n_prime < 2 || n_prime % 2 == 1 {
        return Err(Error::Circuit("cycle needs an even wire count".into()));
    }
    let c = identity_circuit(n_prime, 2);
    let cycle = (n_prime - 1) * (2 * n_prime - 1);
    let mut t = trace(&c, 0)?;
    t.truncate(cycle + 1);
    Ok(t)
}

fn identity_circuit(n_prime: usize, rounds: usize) -> LayeredCircuit {
    use crate::circuit::{ComputationalLayer, IdentityLayer, Layer, WindowOp};
    let mut layers = Vec::new();
    for _ in 0..rounds {
        layers.push(Layer::Computational(ComputationalLayer { windows: (0..n_prime - 2).map(WindowOp::identity).collect() }));
        layers.push(Layer::Identity(IdentityLayer { pairs: (0..n_prime / 2).map(|i| (2 * i, 2 * i + 1)).collect() }));
    }
    LayeredCircuit {
        n_prime,
        layers,
        roles: vec![WireRole::Ancilla; n_prime],
        output: n_prime - 1,
        wire_map: (0..n_prime).collect(),
    }
}

/// Reference cycle for four wires, one row per configuration.
pub const CYCLE_N4: [&str; 22] = [
    "D | CC QR QR | U U U | U",
    "D | QL CC QR | U U U | U",
    "D | QL QL CC | U U U | U",
    "D | QL QL LF | BB U U | U",
    "D | QL LF QR | BB U U | U",
    "D | LF QR QR | BB U U | U",
    "D | T QR QR | BB U U | U",
    "D | D RF QR | BB U U | U",
    "D | D QL RF | BB U U | U",
    "D | D QL BB | RF U U | U",
    "D | D QL BB | LF QR U | U",
    "D | D QL LF | BB QR U | U",
    "D | D LF QR | BB QR U | U",
    "D | D T QR | BB QR U | U",
    "D | D D RF | BB QR U | U",
    "D | D D BB | RF QR U | U",
    "D | D D BB | QL RF U | U",
    "D | D D BB | QL LF QR | U",
    "D | D D BB | LF QR QR | U",
    "D | D D LF | BB QR QR | U",
    "D | D D T | BB QR QR | U",
    "D | D D D | CC QR QR | U",
];

/// Allowed neighbor pairs `(left, right, boundary)` of legal configurations;
/// everything else is penalized. The virtual ends count as Dead and Unborn
/// across a boundary.
pub const ALLOWED_PAIRS: [(Tag, Tag, Bd); 30] = {
    use Bd::*;
    use Tag::*;
    [
        (Dead, Dead, Either),
        (Dead, LFlag, Either),
        (Dead, QLeft, Either),
        (Dead, Turn, Either),
        (QRight, Unborn, Either),
        (BBdata, Unborn, Either),
        (Unborn, Unborn, Either),
        (BBdata, LFlag, With),
        (BBdata, QLeft, With),
        (BBdata, RFlag, With),
        (CCgate, Unborn, With),
        (Dead, CCgate, With),
        (LFlag, BBdata, With),
        (QRight, BBdata, With),
        (RFlag, BBdata, With),
        (Turn, BBdata, With),
        (BBdata, QRight, Without),
        (CCgate, QRight, Without),
        (Dead, BBdata, Without),
        (Dead, RFlag, Without),
        (LFlag, QRight, Without),
        (QLeft, BBdata, Without),
        (QLeft, CCgate, Without),
        (QLeft, LFlag, Without),
        (QLeft, QLeft, Without),
        (QLeft, RFlag, Without),
        (QRight, QRight, Without),
        (RFlag, QRight, Without),
        (RFlag, Unborn, Without),
        (Turn, QRight, Without),
    ]
};

pub fn pair_allowed(a: Tag, b: Tag, boundary: bool) -> bool {
    ALLOWED_PAIRS.iter().any(|&(x, y, bd)| x == a && y == b && bd.accepts(boundary))
}

/// Forbidden neighbor pattern; the full list is the complement of [`ALLOWED_PAIRS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PenaltyRule1D {
    pub left: Tag,
    pub right: Tag,
    pub boundary: bool,
}

pub fn penalty_rules_1d() -> Vec<PenaltyRule1D> {
    let mut out = Vec::new();
    for boundary in [false, true] {
        for a in Tag::ALL {
            for b in Tag::ALL {
                if !pair_allowed(a, b, boundary) {
                    out.push(PenaltyRule1D { left: a, right: b, boundary });
                }
            }
        }
    }
    out
}

/// Pairs occurring at each placement of the legal runs of one chain.
/// Placement 0 is the virtual Dead end with site 0, placement `s + 1` is
/// sites `s` and `s + 1`, the last is site `n - 1` with the virtual Unborn end.
///
/// The boundary-only table lets through skeletons with no active particle
/// (`D | D BB U | U`), which no rule moves and so would sit at zero energy.
/// Tying each pair to its position rules them out.
pub fn placement_table(layout: ChainLayout) -> Arc<Vec<HashSet<(Tag, Tag)>>> {
    static CACHE: OnceLock<Mutex<HashMap<ChainLayout, Arc<Vec<HashSet<(Tag, Tag)>>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("table cache").get(&layout) {
        return t.clone();
    }
    let mut table = vec![HashSet::new(); layout.len() + 1];
    let run = trace(&identity_circuit(layout.n_prime, layout.rounds), 0).expect("identity run");
    for cfg in &run {
        for (k, (_, a, b, _)) in neighbor_pairs(layout, &cfg.tags()).into_iter().enumerate() {
            table[k].insert((a, b));
        }
    }
    let table = Arc::new(table);
    cache.lock().expect("table cache").insert(layout, table.clone());
    table
}

/// Number of forbidden neighbor patterns in a skeleton.
pub fn pattern_count(layout: ChainLayout, tags: &[Tag]) -> usize {
    let table = placement_table(layout);
    neighbor_pairs(layout, tags).into_iter().zip(table.iter()).filter(|((_, a, b, _), ok)| !ok.contains(&(*a, *b))).count()
}

fn states_of(t: Tag) -> Vec<usize> {
    (0..1u8 << t.payload_bits()).map(|p| st(t, p)).collect()
}

pub fn build_penalty_1d(layout: ChainLayout) -> LocalOperator {
    let n = layout.len();
    let mut b = LocalBuilder::new(ProductBasis::new(SITE_DIM, n));
    let table = placement_table(layout);
    for (k, ok) in table.iter().enumerate() {
        for l in Tag::ALL {
            for r in Tag::ALL {
                if ok.contains(&(l, r)) {
                    continue;
                }
                if k == 0 {
                    if l == Tag::Dead {
                        for x in states_of(r) {
                            b.add(&[0], &[x], &[x], 1.0);
                        }
                    }
                } else if k == n {
                    if r == Tag::Unborn {
                        for x in states_of(l) {
                            b.add(&[n - 1], &[x], &[x], 1.0);
                        }
                    }
                } else {
                    for x in states_of(l) {
                        for y in states_of(r) {
                            b.add(&[k - 1, k], &[x, y], &[x, y], 1.0);
                        }
                    }
                }
            }
        }
    }
    // the unused left-flag level
    for s in 0..n {
        b.add(&[s], &[st(Tag::LFlag, 1)], &[st(Tag::LFlag, 1)], 1.0);
    }
    b.build()
}

/// `1/2 (|l><l| + |r><r| - |r><l| U - U^dag |l><r|)` for every rule placement.
pub fn build_prop_1d(c: &LayeredCircuit) -> LocalOperator {
    let layout = ChainLayout::for_circuit(c);
    let n = layout.len();
    let mut b = LocalBuilder::new(ProductBasis::new(SITE_DIM, n));
    let mut hop = |sites: &[usize], x: &[usize], y: &[usize]| {
        b.add(sites, x, x, 0.5);
        b.add(sites, y, y, 0.5);
        b.add(sites, y, x, -0.5);
        b.add(sites, x, y, -0.5);
    };
    for rule in RULES {
        // virtual Dead left of site 0
        if rule.lhs.0 == Tag::Dead && rule.rhs.0 == Tag::Dead && rule.boundary.accepts(true) {
            for l in rule_inputs(rule.lhs.1) {
                let (_, r) = rule_payload(rule.id, 0, l, &|v| v);
                hop(&[0], &[st(rule.lhs.1, l)], &[st(rule.rhs.1, r)]);
            }
        }
        for s in 0..n.saturating_sub(1) {
            if !rule.boundary.accepts(layout.boundary_after(s)) {
                continue;
            }
            let window = |v: u8| c.layer(s / layout.block()).windows[s % layout.block()].map_local(v);
            for l in rule_inputs(rule.lhs.0) {
                for r in rule_inputs(rule.lhs.1) {
                    let (pl, pr) = rule_payload(rule.id, l, r, &window);
                    hop(&[s, s + 1], &[st(rule.lhs.0, l), st(rule.lhs.1, r)], &[st(rule.rhs.0, pl), st(rule.rhs.1, pr)]);
                }
            }
        }
    }
    b.build()
}

/// Input checks on the first block while the gate flag has not yet passed:
/// wires 0 and 1 on the initial `CC` at site 0, wire `s + 2` on the `QR`
/// right of the gate flag at site `s`.
pub fn build_init_1d(c: &LayeredCircuit) -> LocalOperator {
    let layout = ChainLayout::for_circuit(c);
    let mut b = LocalBuilder::new(ProductBasis::new(SITE_DIM, layout.len()));
    let check = |role: WireRole, bit: u8| -> Option<f64> {
        match role {
            WireRole::Input(v) if bit != v as u8 => Some(1.0),
            WireRole::Ancilla if bit == 1 => Some(1.0),
            _ => None,
        }
    };
    for p in 0..4u8 {
        let here = st(Tag::CCgate, p);
        for (w, shift) in [(0usize, 1u8), (1, 0)] {
            let bit = (p >> shift) & 1;
            if let Some(v) = check(c.roles[w], bit) {
                b.add(&[0], &[here], &[here], v);
            }
            if c.roles[w] == WireRole::Coin {
                b.add(&[0], &[here], &[here], 0.5);
                b.add(&[0], &[st(Tag::CCgate, p ^ (1 << shift))], &[here], -0.5);
            }
        }
    }
    for w in 2..c.n_prime {
        let s = w - 2;
        for p in 0..4u8 {
            let cc = st(Tag::CCgate, p);
            for q in 0..2u8 {
                let qr = st(Tag::QRight, q);
                if let Some(v) = check(c.roles[w], q) {
                    b.add(&[s, s + 1], &[cc, qr], &[cc, qr], v);
                }
                if c.roles[w] == WireRole::Coin {
                    b.add(&[s, s + 1], &[cc, qr], &[cc, qr], 0.5);
                    b.add(&[s, s + 1], &[cc, st(Tag::QRight, q ^ 1)], &[cc, qr], -0.5);
                }
            }
        }
    }
    b.build()
}

/// Projector onto a rejecting output on the gate flag at the last site.
pub fn build_final_1d(c: &LayeredCircuit) -> LocalOperator {
    let layout = ChainLayout::for_circuit(c);
    let mut b = LocalBuilder::new(ProductBasis::new(SITE_DIM, layout.len()));
    for p in [0u8, 2] {
        b.add(&[layout.len() - 1], &[st(Tag::CCgate, p)], &[st(Tag::CCgate, p)], 1.0);
    }
    b.build()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    LocallyCheckable,
    LengthViolating,
    Legal,
}

/// Length and content of the qudit string: the sites between the Dead
/// prefix and the Unborn suffix must hold exactly `n'` wires, one active
/// particle, and span `n' - 1` sites (gate or right flag) or `n'` (left or turn flag).
pub fn length_legal(layout: ChainLayout, tags: &[Tag]) -> bool {
    let start = tags.iter().position(|&t| t != Tag::Dead).unwrap_or(tags.len());
    let end = tags.iter().rposition(|&t| t != Tag::Unborn).map_or(0, |e| e + 1);
    if start >= end {
        return false;
    }
    let body = &tags[start..end];
    let active: Vec<Tag> = body.iter().copied().filter(|t| t.is_active()).collect();
    let [a] = active.as_slice() else { return false };
    let want = match a {
        Tag::CCgate | Tag::RFlag => layout.n_prime - 1,
        _ => layout.n_prime,
    };
    body.len() == want && body.iter().map(|t| t.qubits()).sum::<usize>() == layout.n_prime
}

pub fn classify_illegal(layout: ChainLayout, tags: &[Tag]) -> Classification {
    if pattern_count(layout, tags) > 0 {
        Classification::LocallyCheckable
    } else if !length_legal(layout, tags) {
        Classification::LengthViolating
    } else {
        Classification::Legal
    }
}

/// Steps needed to reach a locally checkable skeleton from `tags`,
/// following forward moves and, separately, backward moves; `None` if
/// neither direction gets there within `limit` steps.
pub fn steps_to_detection(layout: ChainLayout, tags: &[Tag], limit: usize) -> Option<usize> {
    let mut best: Option<usize> = None;
    for dir in [Dir::Forward, Dir::Backward] {
        let mut cur = tags.to_vec();
        let mut seen = HashSet::new();
        for k in 0..=limit {
            if pattern_count(layout, &cur) > 0 {
                best = Some(best.map_or(k, |b: usize| b.min(k)));
                break;
            }
            if !seen.insert(cur.clone()) {
                break;
            }
            let m = matches(layout, &cur, dir);
            let Some(&(rule, left)) = m.first() else { break };
            apply_tags(&mut cur, rule, left, dir);
        }
    }
    best
}

/// Randomly corrupted copies of trace skeletons that differ from every legal one.
pub fn random_corruptions(layout: ChainLayout, legal: &[Vec<Tag>], count: usize, seed: u64) -> Vec<Vec<Tag>> {
    let legal_set: HashSet<&Vec<Tag>> = legal.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut t = legal[rng.gen_range(0..legal.len())].clone();
        let edits = rng.gen_range(1..=3);
        for _ in 0..edits {
            let s = rng.gen_range(0..layout.len());
            t[s] = Tag::ALL[rng.gen_range(0..Tag::ALL.len())];
        }
        if !legal_set.contains(&t) {
            out.push(t);
        }
    }
    out
}

pub struct Line1d;

impl Construction for Line1d {
    fn name(&self) -> &'static str {
        "line1d"
    }

    fn site_dim(&self) -> usize {
        SITE_DIM
    }

    fn basis(&self, c: &LayeredCircuit) -> ProductBasis {
        ProductBasis::new(SITE_DIM, ChainLayout::for_circuit(c).len())
    }

    fn steps(&self, c: &LayeredCircuit) -> usize {
        ChainLayout::for_circuit(c).steps()
    }

    fn build(&self, c: &LayeredCircuit, opts: &BuildOptions) -> Result<Bundle> {
        let layout = ChainLayout::for_circuit(c);
        Ok(Bundle {
            construction: self.name(),
            basis: self.basis(c),
            terms: vec![
                Term { kind: TermKind::Init, weight: 1.0, op: build_init_1d(c) },
                Term { kind: TermKind::Prop, weight: opts.prop_scale, op: build_prop_1d(c) },
                Term { kind: TermKind::Penalty, weight: 1.0, op: build_penalty_1d(layout) },
                Term { kind: TermKind::Final, weight: opts.delta, op: build_final_1d(c) },
            ],
            steps: layout.steps(),
        })
    }

    fn trace(&self, c: &LayeredCircuit, x0: Bits) -> Result<Vec<u64>> {
        let basis = self.basis(c);
        Ok(trace(c, x0)?.iter().map(|cfg| basis.encode(&cfg.digits())).collect())
    }
}
