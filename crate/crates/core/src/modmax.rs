//! Maximal modifying sets: maximal families of CM classes containing `0` whose
//! pairwise differences are again CM.

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::lattice::{BVector, ToricData};

/// Sorted normalized vectors, one of which is zero.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ModifyingSet {
    members: Vec<BVector>,
}

impl ModifyingSet {
    pub fn new(mut members: Vec<BVector>) -> Self {
        members.sort();
        members.dedup();
        ModifyingSet { members }
    }

    pub fn members(&self) -> &[BVector] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, b: &BVector) -> bool {
        self.members.binary_search(b).is_ok()
    }

    /// The same NCCR seen from another summand: `{normalize(c - base)}`.
    pub fn rebased(&self, data: &ToricData, base: &BVector) -> ModifyingSet {
        ModifyingSet::new(
            self.members
                .iter()
                .map(|c| data.normalized(&(c - base)))
                .collect(),
        )
    }

    /// The set of duals `{normalize(-b)}`, whose quiver is the opposite quiver.
    pub fn dual(&self, data: &ToricData) -> ModifyingSet {
        ModifyingSet::new(self.members.iter().map(|c| data.normalized(&-c)).collect())
    }
}

/// CM classes indexed with `0` first and the rest in lexicographic order,
/// together with the symmetric compatibility relation.
#[derive(Clone, Debug)]
pub struct CompatibilityGraph {
    classes: Vec<BVector>,
    adjacent: Vec<Vec<bool>>,
}

impl CompatibilityGraph {
    pub fn new(data: &ToricData, cm: &[BVector]) -> Self {
        let zero = BVector::zero(data.k());
        assert!(cm.contains(&zero), "the CM list always contains 0");
        let mut rest: Vec<BVector> = cm.iter().filter(|b| !b.is_zero()).cloned().collect();
        rest.sort();
        rest.dedup();
        let mut classes = vec![zero];
        classes.extend(rest);
        let lookup: HashSet<&BVector> = classes.iter().collect();
        let n = classes.len();
        let adjacent = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| {
                        i != j
                            && lookup.contains(&data.normalized(&(&classes[i] - &classes[j])))
                            && lookup.contains(&data.normalized(&(&classes[j] - &classes[i])))
                    })
                    .collect()
            })
            .collect();
        CompatibilityGraph { classes, adjacent }
    }

    pub fn classes(&self) -> &[BVector] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacent[i][j]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacent[i][j])
            .collect()
    }

    fn to_set(&self, idx: &[usize]) -> ModifyingSet {
        ModifyingSet::new(idx.iter().map(|&i| self.classes[i].clone()).collect())
    }

    fn neighbours(&self, v: usize, among: &[usize]) -> Vec<usize> {
        among
            .iter()
            .copied()
            .filter(|&u| self.adjacent[v][u])
            .collect()
    }

    /// Bron–Kerbosch with pivoting, restricted to cliques through vertex 0.
    fn maximal_cliques_through_zero(&self) -> Vec<Vec<usize>> {
        let candidates: Vec<usize> = (1..self.len()).filter(|&j| self.adjacent[0][j]).collect();
        let mut out = Vec::new();
        let mut clique = vec![0];
        self.bron_kerbosch(&mut clique, candidates, Vec::new(), &mut out);
        out
    }

    fn bron_kerbosch(
        &self,
        clique: &mut Vec<usize>,
        mut p: Vec<usize>,
        mut x: Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if p.is_empty() {
            if x.is_empty() {
                out.push(clique.clone());
            }
            return;
        }
        let pivot = p
            .iter()
            .chain(&x)
            .copied()
            .max_by_key(|&u| p.iter().filter(|&&w| self.adjacent[u][w]).count())
            .unwrap();
        let branch: Vec<usize> = p
            .iter()
            .copied()
            .filter(|&v| !self.adjacent[pivot][v])
            .collect();
        for v in branch {
            clique.push(v);
            self.bron_kerbosch(clique, self.neighbours(v, &p), self.neighbours(v, &x), out);
            clique.pop();
            p.retain(|&u| u != v);
            x.push(v);
        }
    }
}

/// Every modifying set of the largest cardinality, sorted.
pub fn enumerate_mm(graph: &CompatibilityGraph) -> Vec<ModifyingSet> {
    let cliques = graph.maximal_cliques_through_zero();
    let best = cliques.iter().map(Vec::len).max().unwrap_or(1);
    let sets: BTreeSet<ModifyingSet> = cliques
        .iter()
        .filter(|c| c.len() == best)
        .map(|c| graph.to_set(c))
        .collect();
    sets.into_iter().collect()
}

/// Sizes of all inclusion-maximal modifying sets; a single value for every
/// Gorenstein input.
pub fn maximal_set_sizes(graph: &CompatibilityGraph) -> BTreeSet<usize> {
    graph
        .maximal_cliques_through_zero()
        .iter()
        .map(Vec::len)
        .collect()
}

/// Generation-by-generation construction: each pair `(S, T)` is extended by a
/// member of `T` of larger index than everything in `S`, and the first entries
/// of the last nonempty generation are returned. Exponentially slower than
/// [`enumerate_mm`]; kept as an independent check.
pub fn enumerate_mm_by_generations(graph: &CompatibilityGraph) -> Vec<ModifyingSet> {
    let start = (1..graph.len()).filter(|&j| graph.adjacent[0][j]).collect();
    let mut generation: Vec<(Vec<usize>, Vec<usize>)> = vec![(vec![0], start)];
    loop {
        let mut next = Vec::new();
        for (s, t) in &generation {
            let top = *s.iter().max().unwrap();
            for &e in t.iter().filter(|&&e| e > top) {
                let mut s2 = s.clone();
                s2.push(e);
                let t2: Vec<usize> = t
                    .iter()
                    .copied()
                    .filter(|&c| c != e && graph.adjacent[e][c])
                    .collect();
                next.push((s2, t2));
            }
        }
        if next.is_empty() {
            break;
        }
        generation = next;
    }
    let sets: BTreeSet<ModifyingSet> = generation.iter().map(|(s, _)| graph.to_set(s)).collect();
    sets.into_iter().collect()
}
