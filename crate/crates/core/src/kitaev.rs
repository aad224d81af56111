//! Non-geometric clock construction with an explicit clock index, used as an oracle.
//!
//! Basis index `t * 2^n' + x` for clock step `t` and data string `x`; the
//! whole space is a single "site" so the factored operator machinery applies.

use crate::bundle::{Bundle, Term, TermKind};
use crate::circuit::{Bits, LayeredCircuit, WireRole};
use crate::construction::{BuildOptions, Construction};
use crate::error::{Error, Result};
use crate::spectral::{LocalBuilder, LocalOperator, ProductBasis};

pub struct Kitaev;

/// Propagation term for a list of data permutations on `n` bits:
/// `sum_t 1/2 (|t><t| + |t-1><t-1| - U_t |t><t-1| - U_t^dag |t-1><t|)`.
pub fn prop_term(n: usize, perms: &[Vec<usize>]) -> LocalOperator {
    let d = 1usize << n;
    let basis = ProductBasis::new(d * (perms.len() + 1), 1);
    let mut b = LocalBuilder::new(basis);
    for (k, p) in perms.iter().enumerate() {
        let t = k + 1;
        for x in 0..d {
            let (src, dst) = ((t - 1) * d + x, t * d + p[x]);
            b.add(&[0], &[src], &[src], 0.5);
            b.add(&[0], &[dst], &[dst], 0.5);
            b.add(&[0], &[dst], &[src], -0.5);
            b.add(&[0], &[src], &[dst], -0.5);
        }
    }
    b.build()
}

fn permutations(c: &LayeredCircuit) -> Vec<Vec<usize>> {
    let d = 1usize << c.n_prime;
    c.steps()
        .into_iter()
        .map(|op| (0..d).map(|x| op.map_or(x, |w| w.apply(x as Bits) as usize)).collect())
        .collect()
}

/// Checks the data register at clock step 0: declared inputs, ancillas at 0,
/// and coins in `|+>` (via `1 - |+><+|` on each coin wire).
pub fn init_term(c: &LayeredCircuit, basis: ProductBasis) -> LocalOperator {
    let mut b = LocalBuilder::new(basis);
    for x in 0..(1usize << c.n_prime) {
        for (w, &role) in c.roles.iter().enumerate() {
            let bit = (x >> w) & 1;
            match role {
                WireRole::Input(v) if bit != v as usize => b.add(&[0], &[x], &[x], 1.0),
                WireRole::Ancilla if bit == 1 => b.add(&[0], &[x], &[x], 1.0),
                WireRole::Coin => {
                    b.add(&[0], &[x], &[x], 0.5);
                    b.add(&[0], &[x ^ (1 << w)], &[x], -0.5);
                }
                _ => {}
            }
        }
    }
    b.build()
}

/// Projector onto output bit 0 at the last clock step.
pub fn final_term(c: &LayeredCircuit, basis: ProductBasis, steps: usize) -> LocalOperator {
    let d = 1usize << c.n_prime;
    let mut b = LocalBuilder::new(basis);
    for x in (0..d).filter(|x| (x >> c.output) & 1 == 0) {
        b.add(&[0], &[steps * d + x], &[steps * d + x], 1.0);
    }
    b.build()
}

impl Construction for Kitaev {
    fn name(&self) -> &'static str {
        "kitaev"
    }

    fn site_dim(&self) -> usize {
        2
    }

    fn basis(&self, c: &LayeredCircuit) -> ProductBasis {
        ProductBasis::new((1usize << c.n_prime) * (self.steps(c) + 1), 1)
    }

    fn steps(&self, c: &LayeredCircuit) -> usize {
        c.gate_count()
    }

    fn build(&self, c: &LayeredCircuit, opts: &BuildOptions) -> Result<Bundle> {
        if c.n_prime > 16 {
            return Err(Error::Circuit("clock oracle limited to 16 wires".into()));
        }
        let steps = self.steps(c);
        let basis = self.basis(c);
        let prop = prop_term(c.n_prime, &permutations(c));
        Ok(Bundle {
            construction: self.name(),
            basis,
            terms: vec![
                Term { kind: TermKind::Init, weight: 1.0, op: init_term(c, basis) },
                Term { kind: TermKind::Prop, weight: opts.prop_scale, op: prop },
                Term { kind: TermKind::Final, weight: opts.delta, op: final_term(c, basis, steps) },
            ],
            steps,
        })
    }

    fn trace(&self, c: &LayeredCircuit, x0: Bits) -> Result<Vec<u64>> {
        let d = 1u64 << c.n_prime;
        let mut x = x0;
        let mut out = vec![x];
        for (t, op) in c.steps().into_iter().enumerate() {
            if let Some(w) = op {
                x = w.apply(x);
            }
            out.push((t as u64 + 1) * d + x);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigen::dense_spectrum;

    #[test]
    fn single_identity_step_on_one_qubit() {
        let h = prop_term(1, &[vec![0, 1]]).assemble(100).unwrap();
        // clock-major order: |t=0,x=0>, |0,1>, |1,0>, |1,1>
        let expect = [[0.5, 0.0, -0.5, 0.0], [0.0, 0.5, 0.0, -0.5], [-0.5, 0.0, 0.5, 0.0], [0.0, -0.5, 0.0, 0.5]];
        for (i, row) in expect.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(h.get(i, j), v);
            }
        }
        let ev = dense_spectrum(&h.to_dense());
        assert_eq!(ev.len(), 4);
        for (a, b) in ev.iter().zip([0.0, 0.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn permutation_step_is_psd() {
        let h = prop_term(2, &[vec![1, 0, 3, 2], vec![0, 1, 3, 2]]).assemble(100).unwrap();
        assert!(dense_spectrum(&h.to_dense())[0] > -1e-12);
    }
}
