use serde::Serialize;

use super::operator::{LocalOperator, SparseOperator};

/// Slack for float assembly noise.
pub const STOQ_TOL: f64 = 1e-12;

/// Location of a positive off-diagonal entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Offender {
    pub value: f64,
    pub row: u64,
    pub col: u64,
    /// Site tuple for entries found in a local term.
    pub sites: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermVerdict {
    pub name: String,
    pub pass: bool,
    /// Largest off-diagonal value seen (`-inf` if the term has none).
    pub max_off_diagonal: f64,
    pub worst: Option<Offender>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoqReport {
    pub terms: Vec<TermVerdict>,
}

impl StoqReport {
    pub fn pass(&self) -> bool {
        self.terms.iter().all(|t| t.pass)
    }

    pub fn max_off_diagonal(&self) -> f64 {
        self.terms.iter().map(|t| t.max_off_diagonal).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn verdict(name: &str, entries: impl Iterator<Item = (u64, u64, f64, Option<Vec<usize>>)>) -> TermVerdict {
    let mut max = f64::NEG_INFINITY;
    let mut worst: Option<Offender> = None;
    for (row, col, value, sites) in entries {
        if row == col {
            continue;
        }
        if value > max {
            max = value;
            if value > STOQ_TOL {
                worst = Some(Offender { value, row, col, sites });
            }
        }
    }
    TermVerdict { name: name.to_string(), pass: max <= STOQ_TOL, max_off_diagonal: max, worst }
}

/// Exact scan of stored triples of each named assembled term.
pub fn check_stoquastic(terms: &[(&str, &SparseOperator)]) -> StoqReport {
    StoqReport { terms: terms.iter().map(|(n, op)| verdict(n, op.triples.iter().map(|&(i, j, v)| (i, j, v, None)))).collect() }
}

/// Scan of the local matrices of each named factored term.
///
/// Embedding a local matrix with identities keeps off-diagonal entries
/// off-diagonal and diagonal entries diagonal, so the local scan decides
/// stoquasticity of the full operator without assembling it.
pub fn check_stoquastic_local(terms: &[(&str, &LocalOperator)]) -> StoqReport {
    StoqReport {
        terms: terms
            .iter()
            .map(|(n, op)| {
                verdict(
                    n,
                    op.terms.iter().flat_map(|t| t.entries.iter().map(move |&(r, c, v)| (r as u64, c as u64, v, Some(t.sites.clone())))),
                )
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_hop_passes() {
        let h = SparseOperator::from_triples(2, vec![(0, 1, -1.0), (1, 0, -1.0)]);
        assert!(check_stoquastic(&[("hop", &h)]).pass());
    }

    #[test]
    fn diagonal_projector_passes() {
        let p = SparseOperator::from_triples(4, vec![(1, 1, 1.0), (3, 3, 1.0)]);
        assert!(check_stoquastic(&[("proj", &p)]).pass());
    }

    #[test]
    fn plus_projector_fails_its_complement_passes() {
        // |+><+| has +1/2 off-diagonals; 1 - |+><+| has -1/2
        let plus = SparseOperator::from_triples(2, vec![(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)]);
        let minus = SparseOperator::from_triples(2, vec![(0, 0, 0.5), (0, 1, -0.5), (1, 0, -0.5), (1, 1, 0.5)]);
        assert!(!check_stoquastic(&[("plus", &plus)]).pass());
        assert!(check_stoquastic(&[("minus", &minus)]).pass());
    }

    #[test]
    fn positive_entry_is_located() {
        let h = SparseOperator::from_triples(3, vec![(0, 2, 0.5), (2, 0, 0.5), (1, 1, 4.0)]);
        let r = check_stoquastic(&[("bad", &h)]);
        assert!(!r.pass());
        let w = r.terms[0].worst.as_ref().unwrap();
        assert_eq!((w.row, w.col, w.value), (0, 2, 0.5));
    }
}
