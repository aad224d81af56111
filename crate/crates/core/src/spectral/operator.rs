use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default cap on assembled basis size.
pub const DEFAULT_ASSEMBLY_CAP: u64 = 10_000_000;

/// Tensor product of `sites` copies of a `site_dim`-level system.
/// Site 0 is the most significant digit of a basis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProductBasis {
    pub site_dim: usize,
    pub sites: usize,
}

impl ProductBasis {
    pub fn new(site_dim: usize, sites: usize) -> Self {
        ProductBasis { site_dim, sites }
    }

    /// Total dimension, or `None` if it overflows 64 bits.
    pub fn dim(&self) -> Option<u64> {
        (self.site_dim as u64).checked_pow(self.sites as u32)
    }

    pub fn dim_u128(&self) -> u128 {
        (self.site_dim as u128).pow(self.sites as u32)
    }

    fn stride(&self, site: usize) -> u64 {
        (self.site_dim as u64).pow((self.sites - 1 - site) as u32)
    }

    pub fn digit(&self, index: u64, site: usize) -> usize {
        ((index / self.stride(site)) % self.site_dim as u64) as usize
    }

    pub fn encode(&self, digits: &[usize]) -> u64 {
        debug_assert_eq!(digits.len(), self.sites);
        digits.iter().fold(0u64, |acc, &d| acc * self.site_dim as u64 + d as u64)
    }

    pub fn decode(&self, mut index: u64) -> Vec<usize> {
        let mut out = vec![0; self.sites];
        for slot in out.iter_mut().rev() {
            *slot = (index % self.site_dim as u64) as usize;
            index /= self.site_dim as u64;
        }
        out
    }

    fn with_digit(&self, index: u64, site: usize, value: usize) -> u64 {
        let s = self.stride(site);
        let old = (index / s) % self.site_dim as u64;
        index - old * s + value as u64 * s
    }
}

/// Matrix acting on an ordered tuple of sites. Local indices put the first
/// site of the tuple in the most significant position.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalTerm {
    pub sites: Vec<usize>,
    /// `(row, col, value)` in local indices, sorted by `(col, row)`.
    pub entries: Vec<(u32, u32, f64)>,
    #[serde(skip)]
    by_col: HashMap<u32, (usize, usize)>,
}

impl LocalTerm {
    fn new(sites: Vec<usize>, map: BTreeMap<(u32, u32), f64>) -> Self {
        let mut entries: Vec<(u32, u32, f64)> = map.into_iter().filter(|(_, v)| *v != 0.0).map(|((c, r), v)| (r, c, v)).collect();
        entries.sort_by_key(|&(r, c, _)| (c, r));
        let mut by_col = HashMap::new();
        let mut i = 0;
        while i < entries.len() {
            let c = entries[i].1;
            let mut j = i;
            while j < entries.len() && entries[j].1 == c {
                j += 1;
            }
            by_col.insert(c, (i, j));
            i = j;
        }
        LocalTerm { sites, entries, by_col }
    }

    fn local_index(&self, basis: &ProductBasis, index: u64) -> u32 {
        self.sites.iter().fold(0u32, |acc, &s| acc * basis.site_dim as u32 + basis.digit(index, s) as u32)
    }

    fn place(&self, basis: &ProductBasis, mut index: u64, local: u32) -> u64 {
        let mut l = local;
        for &s in self.sites.iter().rev() {
            index = basis.with_digit(index, s, (l % basis.site_dim as u32) as usize);
            l /= basis.site_dim as u32;
        }
        index
    }
}

/// Sum of local terms over a product basis, kept in factored form so that
/// operators far beyond the assembly cap can still be applied column by column.
#[derive(Debug, Clone, Serialize)]
pub struct LocalOperator {
    pub basis: ProductBasis,
    pub terms: Vec<LocalTerm>,
}

/// Accumulates local matrix entries, merging entries on the same site tuple.
#[derive(Debug, Clone)]
pub struct LocalBuilder {
    basis: ProductBasis,
    acc: BTreeMap<Vec<usize>, BTreeMap<(u32, u32), f64>>,
}

impl LocalBuilder {
    pub fn new(basis: ProductBasis) -> Self {
        LocalBuilder { basis, acc: BTreeMap::new() }
    }

    /// Adds `value * |row><col|` where `row`/`col` list one local state per site.
    pub fn add(&mut self, sites: &[usize], row: &[usize], col: &[usize], value: f64) {
        debug_assert!(sites.iter().all(|&s| s < self.basis.sites));
        let d = self.basis.site_dim as u32;
        let r = row.iter().fold(0u32, |a, &x| a * d + x as u32);
        let c = col.iter().fold(0u32, |a, &x| a * d + x as u32);
        *self.acc.entry(sites.to_vec()).or_default().entry((c, r)).or_insert(0.0) += value;
    }

    /// Adds `value * |v><v|` for a local vector given as sparse amplitudes.
    pub fn add_projector(&mut self, sites: &[usize], v: &[(Vec<usize>, f64)], value: f64) {
        for (a, x) in v {
            for (b, y) in v {
                self.add(sites, a, b, value * x * y);
            }
        }
    }

    pub fn build(self) -> LocalOperator {
        let terms = self.acc.into_iter().map(|(s, m)| LocalTerm::new(s, m)).filter(|t| !t.entries.is_empty()).collect();
        LocalOperator { basis: self.basis, terms }
    }
}

impl LocalOperator {
    pub fn zero(basis: ProductBasis) -> Self {
        LocalOperator { basis, terms: Vec::new() }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in out.terms.iter_mut() {
            for e in t.entries.iter_mut() {
                e.2 *= s;
            }
        }
        out
    }

    /// Nonzero entries of column `j`, i.e. `H|j>`, with duplicates summed.
    pub fn column(&self, j: u64) -> Vec<(u64, f64)> {
        let mut out: Vec<(u64, f64)> = Vec::new();
        for t in &self.terms {
            let lc = t.local_index(&self.basis, j);
            if let Some(&(a, b)) = t.by_col.get(&lc) {
                for &(lr, _, v) in &t.entries[a..b] {
                    out.push((t.place(&self.basis, j, lr), v));
                }
            }
        }
        out.sort_unstable_by_key(|e| e.0);
        let mut merged: Vec<(u64, f64)> = Vec::with_capacity(out.len());
        for (i, v) in out {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        merged
    }

    /// `<v|H|v>` for a sparse vector.
    pub fn energy(&self, v: &HashMap<u64, f64>) -> f64 {
        v.par_iter()
            .map(|(&j, &x)| self.column(j).into_iter().map(|(i, h)| v.get(&i).map_or(0.0, |&y| y * h * x)).sum::<f64>())
            .sum()
    }

    pub fn assemble(&self, cap: u64) -> Result<SparseOperator> {
        let dim = self.basis.dim().filter(|&d| d <= cap).ok_or(Error::TooLarge { dim: self.basis.dim_u128(), cap: cap as u128 })?;
        let triples: Vec<(u64, u64, f64)> = (0..dim)
            .into_par_iter()
            .flat_map_iter(|j| self.column(j).into_iter().map(move |(i, v)| (i, j, v)))
            .collect();
        Ok(SparseOperator::from_triples(dim as usize, triples))
    }

    /// Projects onto the span of `states`, returning the matrix in that order.
    /// Entries leaving the span are dropped; `leak` reports their squared weight.
    pub fn restrict(&self, states: &[u64]) -> Restricted {
        let index: HashMap<u64, usize> = states.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        let mut triples = Vec::new();
        let mut leak = 0.0;
        for (k, &s) in states.iter().enumerate() {
            for (i, v) in self.column(s) {
                match index.get(&i) {
                    Some(&r) => triples.push((r as u64, k as u64, v)),
                    None => leak += v * v,
                }
            }
        }
        Restricted { op: SparseOperator::from_triples(states.len(), triples), states: states.to_vec(), leak }
    }

    /// Breadth-first closure of `seeds` under nonzero off-diagonal entries.
    pub fn closure(&self, seeds: &[u64], limit: usize) -> Result<Vec<u64>> {
        let mut seen: HashMap<u64, ()> = HashMap::new();
        let mut order = Vec::new();
        let mut queue: VecDeque<u64> = VecDeque::new();
        for &s in seeds {
            if seen.insert(s, ()).is_none() {
                queue.push_back(s);
                order.push(s);
            }
        }
        while let Some(j) = queue.pop_front() {
            for (i, _) in self.column(j) {
                if i != j && seen.insert(i, ()).is_none() {
                    if order.len() >= limit {
                        return Err(Error::TooLarge { dim: limit as u128 + 1, cap: limit as u128 });
                    }
                    queue.push_back(i);
                    order.push(i);
                }
            }
        }
        Ok(order)
    }

    /// Sum of several operators on the same basis with weights.
    pub fn combine(parts: &[(&LocalOperator, f64)]) -> LocalOperator {
        let basis = parts.first().map(|p| p.0.basis).expect("at least one operator");
        let mut b = LocalBuilder::new(basis);
        for (op, w) in parts {
            assert_eq!(op.basis, basis, "operators live on different bases");
            for t in &op.terms {
                let acc = b.acc.entry(t.sites.clone()).or_default();
                for &(r, c, v) in &t.entries {
                    *acc.entry((c, r)).or_insert(0.0) += w * v;
                }
            }
        }
        b.build()
    }
}

/// An operator restricted to an explicit list of product-basis states.
#[derive(Debug, Clone)]
pub struct Restricted {
    pub op: SparseOperator,
    pub states: Vec<u64>,
    pub leak: f64,
}

/// Real operator stored as canonical coordinate triples plus CSR rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    pub dim: usize,
    /// Sorted by `(row, col)`, duplicates summed, zeros dropped.
    pub triples: Vec<(u64, u64, f64)>,
    row_ptr: Vec<usize>,
}

impl SparseOperator {
    pub fn from_triples(dim: usize, mut triples: Vec<(u64, u64, f64)>) -> Self {
        triples.par_sort_unstable_by_key(|t| (t.0, t.1));
        let mut merged: Vec<(u64, u64, f64)> = Vec::with_capacity(triples.len());
        for (r, c, v) in triples {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        let mut row_ptr = vec![0usize; dim + 1];
        for t in &merged {
            row_ptr[t.0 as usize + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseOperator { dim, triples: merged, row_ptr }
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_triples(dim, Vec::new())
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i as u64, j as u64, m[(i, j)]));
                }
            }
        }
        Self::from_triples(m.nrows(), t)
    }

    pub fn nnz(&self) -> usize {
        self.triples.len()
    }

    pub fn row(&self, i: usize) -> &[(u64, u64, f64)] {
        &self.triples[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = self.row(i);
        row.binary_search_by_key(&(j as u64), |t| t.1).map_or(0.0, |k| row[k].2)
    }

    /// Largest `|H_ij - H_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        self.triples.par_iter().map(|&(i, j, v)| (v - self.get(j as usize, i as usize)).abs()).reduce(|| 0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        self.asymmetry() == 0.0
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).into_par_iter().map(|i| self.row(i).iter().map(|&(_, j, v)| v * x[j as usize]).sum()).collect()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim).map(|i| self.row(i).iter().map(|t| t.2.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.triples {
            m[(i as usize, j as usize)] += v;
        }
        m
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_triples(self.dim, self.triples.iter().map(|&(i, j, v)| (i, j, v * s)).collect())
    }

    pub fn sum(parts: &[(&SparseOperator, f64)]) -> Self {
        let dim = parts.first().map_or(0, |p| p.0.dim);
        let mut t = Vec::new();
        for (op, w) in parts {
            assert_eq!(op.dim, dim, "dimension mismatch");
            t.extend(op.triples.iter().map(|&(i, j, v)| (i, j, v * w)));
        }
        Self::from_triples(dim, t)
    }

    /// Connected components of the graph with an edge for each nonzero entry.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.dim).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(i, j, _) in &self.triples {
            let (a, b) = (find(&mut parent, i as usize), find(&mut parent, j as usize));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..self.dim {
            let r = find(&mut parent, x);
            groups.entry(r).or_default().push(x);
        }
        groups.into_values().collect()
    }

    /// Principal submatrix on `idx` as a dense matrix.
    pub fn dense_block(&self, idx: &[usize]) -> DMatrix<f64> {
        let pos: HashMap<usize, usize> = idx.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut m = DMatrix::zeros(idx.len(), idx.len());
        for (k, &i) in idx.iter().enumerate() {
            for &(_, j, v) in self.row(i) {
                if let Some(&l) = pos.get(&(j as usize)) {
                    m[(k, l)] = v;
                }
            }
        }
        m
    }
}
