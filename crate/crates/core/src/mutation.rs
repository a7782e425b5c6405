//! Toric mutation at 2-in/2-out vertices, both on modifying sets (the
//! production path) and as a combinatorial rewrite of dimer faces, plus the
//! mutation graph on NCCR classes.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::cm::is_cm;
use crate::dimer::DimerModel;
use crate::lattice::{BVector, ToricData};
use crate::modmax::ModifyingSet;
use crate::quiver::{EmbeddedQuiver, NccrClasses};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MutationError {
    #[error(
        "vertex {vertex} has {incoming} incoming and {outgoing} outgoing arrows (need 2 and 2)"
    )]
    BadVertexDegree {
        vertex: usize,
        incoming: usize,
        outgoing: usize,
    },
    #[error("vertex {0} carries a loop")]
    LoopOrTwoCycle(usize),
    #[error("the zero vertex cannot be mutated")]
    MutatedZeroVertex,
    #[error("mutation at vertex {vertex} produced {set:?}, which is not a modifying set")]
    NotModifying { vertex: usize, set: Vec<BVector> },
    #[error(
        "mutation at vertex {vertex} of class {class} produced a set outside the computed list"
    )]
    UnknownClass { class: usize, vertex: usize },
    #[error("face rewrite failed: {0}")]
    BrokenFaces(String),
}

/// Incoming and outgoing arrows of a mutable vertex.
fn local_arrows(
    arrows: &[(usize, usize)],
    v: usize,
) -> Result<([usize; 2], [usize; 2]), MutationError> {
    if arrows.iter().any(|&(t, h)| t == v && h == v) {
        return Err(MutationError::LoopOrTwoCycle(v));
    }
    let incoming: Vec<usize> = (0..arrows.len()).filter(|&a| arrows[a].1 == v).collect();
    let outgoing: Vec<usize> = (0..arrows.len()).filter(|&a| arrows[a].0 == v).collect();
    if incoming.len() != 2 || outgoing.len() != 2 {
        return Err(MutationError::BadVertexDegree {
            vertex: v,
            incoming: incoming.len(),
            outgoing: outgoing.len(),
        });
    }
    Ok(([incoming[0], incoming[1]], [outgoing[0], outgoing[1]]))
}

fn endpoints(q: &EmbeddedQuiver) -> Vec<(usize, usize)> {
    q.arrows().iter().map(|a| (a.tail, a.head)).collect()
}

/// Whether vertex `v` of `q` can be mutated.
pub fn is_mutable(q: &EmbeddedQuiver, v: usize) -> bool {
    !q.vertices()[v].b.is_zero() && local_arrows(&endpoints(q), v).is_ok()
}

/// Replaces `T(b_v)` by the intersection of the images of its two incoming
/// arrows, `T(max(r + φᵀ(m₁), s + φᵀ(m₂)))`, and normalizes.
pub fn mutate(
    data: &ToricData,
    set: &ModifyingSet,
    q: &EmbeddedQuiver,
    v: usize,
) -> Result<ModifyingSet, MutationError> {
    if q.vertices()[v].b.is_zero() {
        return Err(MutationError::MutatedZeroVertex);
    }
    let (incoming, _) = local_arrows(&endpoints(q), v)?;
    let image = |a: usize| {
        let arrow = &q.arrows()[a];
        &q.vertices()[arrow.tail].b + &data.phi_t(&arrow.monomial)
    };
    let replacement = data.normalized(&image(incoming[0]).componentwise_max(&image(incoming[1])));
    let old = &q.vertices()[v].b;
    let mut members: Vec<BVector> = set
        .members()
        .iter()
        .filter(|b| *b != old)
        .cloned()
        .collect();
    members.push(replacement.clone());
    let out = ModifyingSet::new(members);
    let modifying = out.len() == set.len()
        && out.members().iter().all(|b| {
            b == &replacement
                || (is_cm(data, &data.normalized(&(b - &replacement))).is_cm()
                    && is_cm(data, &data.normalized(&(&replacement - b))).is_cm())
        });
    if !modifying {
        return Err(MutationError::NotModifying {
            vertex: v,
            set: out.members().to_vec(),
        });
    }
    Ok(out)
}

/// A dimer as bare combinatorics: arrows and oriented face cycles, with no
/// embedding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FaceData {
    pub vertex_count: usize,
    pub arrows: Vec<(usize, usize)>,
    pub faces_pos: Vec<Vec<usize>>,
    pub faces_neg: Vec<Vec<usize>>,
}

impl From<&DimerModel> for FaceData {
    fn from(d: &DimerModel) -> Self {
        FaceData {
            vertex_count: d.quiver().vertices().len(),
            arrows: endpoints(d.quiver()),
            faces_pos: d.faces_pos().to_vec(),
            faces_neg: d.faces_neg().to_vec(),
        }
    }
}

impl FaceData {
    /// Successor of every arrow in its positive and negative face.
    fn successors(&self) -> Result<(Vec<usize>, Vec<usize>), String> {
        let m = self.arrows.len();
        let walk = |faces: &[Vec<usize>]| -> Result<Vec<usize>, String> {
            let mut next = vec![usize::MAX; m];
            for f in faces {
                for (i, &a) in f.iter().enumerate() {
                    let b = f[(i + 1) % f.len()];
                    if a >= m || next[a] != usize::MAX {
                        return Err(format!("arrow {a} is not in exactly one face of a sign"));
                    }
                    if self.arrows[a].1 != self.arrows[b].0 {
                        return Err(format!("face {f:?} is not a cycle"));
                    }
                    next[a] = b;
                }
            }
            match next.iter().position(|&x| x == usize::MAX) {
                Some(a) => Err(format!("arrow {a} is in no face of a sign")),
                None => Ok(next),
            }
        };
        Ok((walk(&self.faces_pos)?, walk(&self.faces_neg)?))
    }

    /// Orientation- and sign-preserving isomorphism of the two face structures.
    pub fn isomorphic(&self, other: &FaceData) -> bool {
        if self.vertex_count != other.vertex_count
            || self.arrows.len() != other.arrows.len()
            || self.faces_pos.len() != other.faces_pos.len()
            || self.faces_neg.len() != other.faces_neg.len()
        {
            return false;
        }
        let (Ok((sp, sn)), Ok((op, on))) = (self.successors(), other.successors()) else {
            return false;
        };
        let m = self.arrows.len();
        if m == 0 {
            return true;
        }
        // the face structure is connected, so the image of arrow 0 fixes everything
        'candidate: for start in 0..m {
            let mut map = vec![usize::MAX; m];
            let mut used = vec![false; m];
            let mut vmap = vec![usize::MAX; self.vertex_count];
            let mut queue = VecDeque::from([(0usize, start)]);
            while let Some((a, b)) = queue.pop_front() {
                if map[a] != usize::MAX {
                    if map[a] != b {
                        continue 'candidate;
                    }
                    continue;
                }
                if used[b] {
                    continue 'candidate;
                }
                map[a] = b;
                used[b] = true;
                for (x, y) in [
                    (self.arrows[a].0, other.arrows[b].0),
                    (self.arrows[a].1, other.arrows[b].1),
                ] {
                    if vmap[x] == usize::MAX {
                        vmap[x] = y;
                    } else if vmap[x] != y {
                        continue 'candidate;
                    }
                }
                queue.push_back((sp[a], op[b]));
                queue.push_back((sn[a], on[b]));
            }
            if map.iter().all(|&x| x != usize::MAX) {
                let mut hit = vec![false; self.vertex_count];
                for &y in &vmap {
                    if y == usize::MAX || hit[y] {
                        continue 'candidate;
                    }
                    hit[y] = true;
                }
                return true;
            }
        }
        false
    }
}

/// The four-step face rewrite: reverse the arrows at `v`, add a composite
/// arrow for every path through `v`, split off triangles, then collapse
/// faces of length 2. Vertex indices are kept.
pub fn mutate_faces(dimer: &FaceData, v: usize) -> Result<FaceData, MutationError> {
    let ([b1, b2], [a1, a2]) = local_arrows(&dimer.arrows, v)?;
    let mut arrows: Vec<Option<(usize, usize)>> = dimer.arrows.iter().copied().map(Some).collect();
    for a in [a1, a2] {
        let (t, h) = dimer.arrows[a];
        arrows[a] = Some((h, t));
    }
    for b in [b1, b2] {
        let (t, h) = dimer.arrows[b];
        arrows[b] = Some((h, t));
    }
    let is_in = |x: usize| x == b1 || x == b2;
    let is_out = |x: usize| x == a1 || x == a2;
    // (sign, cycle) with sign true for positive faces
    let mut faces: Vec<(bool, Vec<usize>)> = Vec::new();
    let mut triangles = Vec::new();
    for (sign, list) in [(true, &dimer.faces_pos), (false, &dimer.faces_neg)] {
        for f in list {
            let n = f.len();
            // start where no path through v is split by the rotation
            let r = (0..n)
                .find(|&i| !(is_out(f[i]) && is_in(f[(i + n - 1) % n])))
                .unwrap_or(0);
            let f: Vec<usize> = f[r..].iter().chain(&f[..r]).copied().collect();
            let mut out = Vec::new();
            let mut i = 0;
            while i < n {
                let x = f[i];
                if i + 1 < n && is_in(x) && is_out(f[i + 1]) {
                    let y = f[i + 1];
                    let u = arrows.len();
                    arrows.push(Some((dimer.arrows[x].0, dimer.arrows[y].1)));
                    out.push(u);
                    triangles.push((!sign, vec![u, y, x]));
                    i += 2;
                } else {
                    out.push(x);
                    i += 1;
                }
            }
            faces.push((sign, out));
        }
    }
    faces.extend(triangles);
    while let Some(pos) = faces.iter().position(|(_, f)| f.len() == 2) {
        let (sign, digon) = faces.swap_remove(pos);
        let (x, y) = (digon[0], digon[1]);
        let other = |arrow: usize, faces: &[(bool, Vec<usize>)]| {
            faces
                .iter()
                .position(|(s, f)| *s != sign && f.contains(&arrow))
        };
        let (Some(i), Some(j)) = (other(x, &faces), other(y, &faces)) else {
            return Err(MutationError::BrokenFaces(format!(
                "digon {digon:?} has a missing neighbour"
            )));
        };
        if i == j {
            return Err(MutationError::BrokenFaces(format!(
                "digon {digon:?} bounds a single face"
            )));
        }
        let cut = |f: &[usize], a: usize| {
            let p = f.iter().position(|&z| z == a).unwrap();
            f[p + 1..]
                .iter()
                .chain(&f[..p])
                .copied()
                .collect::<Vec<_>>()
        };
        let mut merged = cut(&faces[i].1, x);
        merged.extend(cut(&faces[j].1, y));
        let (hi, lo) = (i.max(j), i.min(j));
        faces.swap_remove(hi);
        faces.swap_remove(lo);
        if merged.is_empty() {
            return Err(MutationError::BrokenFaces(
                "collapse left an empty face".into(),
            ));
        }
        faces.push((!sign, merged));
        arrows[x] = None;
        arrows[y] = None;
    }
    // compact arrow indices
    let mut renumber = vec![usize::MAX; arrows.len()];
    let mut kept = Vec::new();
    for (i, a) in arrows.iter().enumerate() {
        if let Some(e) = a {
            renumber[i] = kept.len();
            kept.push(*e);
        }
    }
    let mut faces_pos = Vec::new();
    let mut faces_neg = Vec::new();
    for (sign, f) in faces {
        let mut cycle: Vec<usize> = f.iter().map(|&a| renumber[a]).collect();
        if cycle.contains(&usize::MAX) {
            return Err(MutationError::BrokenFaces(
                "a face kept a removed arrow".into(),
            ));
        }
        let p = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap();
        cycle.rotate_left(p);
        if sign {
            faces_pos.push(cycle);
        } else {
            faces_neg.push(cycle);
        }
    }
    faces_pos.sort();
    faces_neg.sort();
    let out = FaceData {
        vertex_count: dimer.vertex_count,
        arrows: kept,
        faces_pos,
        faces_neg,
    };
    out.successors().map_err(MutationError::BrokenFaces)?;
    Ok(out)
}

/// Face rewrite of an extracted dimer at `v`.
pub fn mutate_dimer(dimer: &DimerModel, v: usize) -> Result<FaceData, MutationError> {
    if dimer.quiver().vertices()[v].b.is_zero() {
        return Err(MutationError::MutatedZeroVertex);
    }
    mutate_faces(&FaceData::from(dimer), v)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MutationEdge {
    pub from: usize,
    pub vertex: usize,
    pub to: usize,
}

/// Mutation graph on NCCR classes (mod opposite when requested).
#[derive(Clone, Debug, Serialize)]
pub struct MutationGraph {
    /// Raw class index of each node.
    pub nodes: Vec<usize>,
    /// Whether each node differs from its opposite (only meaningful mod opposite).
    pub asterisk: Vec<bool>,
    pub edges: Vec<MutationEdge>,
    /// Connected component of each node (ignoring edge directions).
    pub component: Vec<usize>,
    pub connected: bool,
}

impl MutationGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes reachable from `start`.
    pub fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(x) = queue.pop_front() {
            for e in &self.edges {
                for (a, b) in [(e.from, e.to), (e.to, e.from)] {
                    if a == x && !seen[b] {
                        seen[b] = true;
                        queue.push_back(b);
                    }
                }
            }
        }
        seen
    }
}

/// Mutates every class representative at every vertex that admits it. The
/// zero vertex is reached by first rebasing at another summand, which only
/// translates the quiver.
pub fn mutation_graph(
    data: &ToricData,
    sets: &[ModifyingSet],
    quivers: &[EmbeddedQuiver],
    classes: &NccrClasses,
    mod_opposite: bool,
) -> Result<MutationGraph, MutationError> {
    let (nodes, asterisk): (Vec<usize>, Vec<bool>) = if mod_opposite {
        classes.mod_opposite().into_iter().unzip()
    } else {
        (0..classes.raw_count())
            .map(|c| (c, classes.opposite[c] != c))
            .unzip()
    };
    let node_of_class = |c: usize| {
        let c = if mod_opposite {
            c.min(classes.opposite[c])
        } else {
            c
        };
        nodes
            .iter()
            .position(|&x| x == c)
            .expect("every class has a node")
    };
    let index: HashMap<&ModifyingSet, usize> =
        sets.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut edges = Vec::new();
    for (from, &class) in nodes.iter().enumerate() {
        let rep = classes.representatives[class];
        let q = &quivers[rep];
        for w in 0..q.vertices().len() {
            if local_arrows(&endpoints(q), w).is_err() {
                continue;
            }
            let (set, quiver, target) = if q.vertices()[w].b.is_zero() {
                let Some(base) = q.vertices().iter().map(|x| &x.b).find(|b| !b.is_zero()) else {
                    continue;
                };
                let moved = sets[rep].rebased(data, base);
                let j = *index
                    .get(&moved)
                    .ok_or(MutationError::UnknownClass { class, vertex: w })?;
                let image = data.normalized(&-base);
                let target = quivers[j]
                    .vertex_of(&image)
                    .expect("rebasing maps summands to summands");
                (&sets[j], &quivers[j], target)
            } else {
                (&sets[rep], q, w)
            };
            let result = mutate(data, set, quiver, target)?;
            let j = *index
                .get(&result)
                .ok_or(MutationError::UnknownClass { class, vertex: w })?;
            edges.push(MutationEdge {
                from,
                vertex: w,
                to: node_of_class(classes.class_of[j]),
            });
        }
    }
    let mut graph = MutationGraph {
        component: vec![usize::MAX; nodes.len()],
        nodes,
        asterisk,
        edges,
        connected: true,
    };
    let mut next = 0;
    for s in 0..graph.node_count() {
        if graph.component[s] != usize::MAX {
            continue;
        }
        for (x, hit) in graph.reachable_from(s).into_iter().enumerate() {
            if hit {
                graph.component[x] = next;
            }
        }
        next += 1;
    }
    graph.connected = next <= 1;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cm::enumerate_cm;
    use crate::dimer::extract_dimer;
    use crate::modmax::{enumerate_mm, CompatibilityGraph};
    use crate::quiver::{build_quiver, dedup_nccrs};

    fn setup(points: &[[i64; 2]]) -> (ToricData, Vec<ModifyingSet>, Vec<EmbeddedQuiver>) {
        let d = ToricData::from_points(points).unwrap();
        let cm = enumerate_cm(&d).unwrap();
        let mm = enumerate_mm(&CompatibilityGraph::new(&d, &cm));
        let qs = mm.iter().map(|s| build_quiver(&d, s).unwrap()).collect();
        (d, mm, qs)
    }

    #[test]
    fn conifold_mutation() {
        let (d, mm, qs) = setup(&[[0, 0], [1, 0], [1, 1], [0, 1]]);
        assert_eq!(mm[0].members()[1], BVector(vec![0, 1, 1, 1]));
        let out = mutate(&d, &mm[0], &qs[0], 1).unwrap();
        assert_eq!(out, mm[1]);
        assert_eq!(
            mutate(&d, &mm[0], &qs[0], 0),
            Err(MutationError::MutatedZeroVertex)
        );
        let dimer = extract_dimer(&qs[0]).unwrap();
        let faces = mutate_dimer(&dimer, 1).unwrap();
        assert!(faces.isomorphic(&FaceData::from(&dimer)));
        assert!(faces.isomorphic(&FaceData::from(&extract_dimer(&qs[1]).unwrap())));
    }

    #[test]
    fn conifold_graph_has_self_edges() {
        let (d, mm, qs) = setup(&[[0, 0], [1, 0], [1, 1], [0, 1]]);
        let classes = dedup_nccrs(&d, &mm, &qs).unwrap();
        let g = mutation_graph(&d, &mm, &qs, &classes, true).unwrap();
        assert_eq!(g.node_count(), 1);
        assert!(g.connected);
        assert_eq!(g.edges.len(), 2);
        assert!(g.edges.iter().all(|e| e.from == 0 && e.to == 0));
    }

    #[test]
    fn degree_errors() {
        // the vertex of C^3 has three loops
        let (d, mm, qs) = setup(&[[0, 0], [1, 0], [0, 1]]);
        assert_eq!(
            mutate(&d, &mm[0], &qs[0], 0),
            Err(MutationError::MutatedZeroVertex)
        );
        assert_eq!(
            local_arrows(&endpoints(&qs[0]), 0),
            Err(MutationError::LoopOrTwoCycle(0))
        );
        let arrows = [(0, 1), (0, 1), (0, 1), (1, 0), (1, 0), (1, 0)];
        assert_eq!(
            local_arrows(&arrows, 1),
            Err(MutationError::BadVertexDegree {
                vertex: 1,
                incoming: 3,
                outgoing: 3
            })
        );
    }
}
