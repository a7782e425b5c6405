//! Dimer models on the 2-torus obtained by projecting an NCCR quiver along the
//! Gorenstein direction.
//!
//! Projected arrows cut the torus into polygons. Walking each polygon with the
//! face on the left gives either a cycle of arrows traversed forwards (a
//! counterclockwise face, `Q₂⁺`) or backwards (a clockwise face, `Q₂⁻`).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{dot, strict_hull, ToricData, Vec3};
use crate::quiver::EmbeddedQuiver;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DimerError {
    #[error("vertices {0} and {1} project to the same point of the 2-torus")]
    VertexCollision(usize, usize),
    #[error("arrow {0} projects to a point")]
    DegenerateArrow(usize),
    #[error("arrows {0} and {1} cross away from their endpoints")]
    SegmentCrossing(usize, usize),
    #[error("arrows {0} and {1} overlap along a segment")]
    OverlappingSegments(usize, usize),
    #[error("arrow {arrow} passes through vertex {vertex}")]
    VertexOnSegment { arrow: usize, vertex: usize },
    #[error("a face has length {0}; faces need at least 3 arrows")]
    FaceTooShort(usize),
    #[error("a face boundary mixes forward and backward arrows")]
    OrientabilityFailure,
    #[error("faces and arrows around vertex {0} do not form a connected link")]
    ManifoldFailure(usize),
    #[error("Euler characteristic is {0}, expected 0")]
    EulerFailure(i64),
    #[error("slack vectors of face {0:?} do not sum to (1,...,1)")]
    FaceSlack(Vec<usize>),
    #[error("covector must pair positively with every ray and have nonzero last coordinate")]
    NotInterior,
    #[error("no positive R-charge from a linear form; offending arrows {0:?}")]
    Infeasible(Vec<usize>),
    #[error("quiver cycles span a degree lattice of rank {0} < 3")]
    DegenerateCycles(usize),
    #[error("perfect matching {0} has no integral solution")]
    NonIntegralMatching(usize),
    #[error("recovered polygon {recovered:?} differs from the input {expected:?}")]
    PolygonMismatch {
        recovered: Vec<[i64; 2]>,
        expected: Vec<[i64; 2]>,
    },
    #[error("dimer has no perfect matching")]
    NoMatchings,
    #[error("polygon is not reflexive ({0} interior lattice points)")]
    NotReflexive(usize),
}

#[derive(Clone, Debug)]
pub struct DimerModel {
    quiver: EmbeddedQuiver,
    faces_pos: Vec<Vec<usize>>,
    faces_neg: Vec<Vec<usize>>,
    /// Counterclockwise order of half-edges around each vertex.
    rotation: Vec<Vec<usize>>,
}

/// Half-edge `2a` runs along arrow `a`, half-edge `2a + 1` against it.
fn twin(h: usize) -> usize {
    h ^ 1
}

fn cross(a: [i64; 2], b: [i64; 2]) -> i64 {
    a[0] * b[1] - a[1] * b[0]
}

fn angle_cmp(a: [i64; 2], b: [i64; 2]) -> Ordering {
    let half = |d: [i64; 2]| {
        if d[1] > 0 || (d[1] == 0 && d[0] > 0) {
            0
        } else {
            1
        }
    };
    half(a).cmp(&half(b)).then_with(|| 0.cmp(&cross(a, b)))
}

fn rotate_to_min(cycle: &mut [usize]) {
    if let Some(pos) = cycle
        .iter()
        .enumerate()
        .min_by_key(|(_, a)| **a)
        .map(|(i, _)| i)
    {
        cycle.rotate_left(pos);
    }
}

/// Planar geometry of the projection, in coordinates scaled by the Gram determinant.
struct Projection {
    d: i64,
    points: Vec<[i64; 2]>,
    /// start point and displacement of each arrow
    segments: Vec<([i64; 2], [i64; 2])>,
}

impl Projection {
    fn new(q: &EmbeddedQuiver) -> Self {
        let d = q.data().gram_det();
        let points = (0..q.vertices().len())
            .map(|v| {
                let p = q.point_scaled(v);
                [p[0], p[1]]
            })
            .collect::<Vec<_>>();
        let segments = (0..q.arrows().len())
            .map(|a| {
                let l = q.lift_scaled(a);
                (points[q.arrows()[a].tail], [l[0], l[1]])
            })
            .collect();
        Projection {
            d,
            points,
            segments,
        }
    }

    /// Translates `t` (in multiples of `d`) for which the boxes of two segments can meet.
    fn translates(&self, a: ([i64; 2], [i64; 2]), b: ([i64; 2], [i64; 2])) -> Vec<[i64; 2]> {
        let bx = |s: ([i64; 2], [i64; 2]), i: usize| {
            let (p, u) = s;
            (p[i].min(p[i] + u[i]), p[i].max(p[i] + u[i]))
        };
        let range = |i: usize| {
            let (alo, ahi) = bx(a, i);
            let (blo, bhi) = bx(b, i);
            ((alo - bhi).div_euclid(self.d) - 1)..=((ahi - blo).div_euclid(self.d) + 1)
        };
        let mut out = Vec::new();
        for tx in range(0) {
            for ty in range(1) {
                out.push([tx, ty]);
            }
        }
        out
    }

    fn check(&self) -> Result<(), DimerError> {
        let n = self.points.len();
        for i in 0..n {
            for j in i + 1..n {
                if self.points[i] == self.points[j] {
                    return Err(DimerError::VertexCollision(i, j));
                }
            }
        }
        for (a, s) in self.segments.iter().enumerate() {
            if s.1 == [0, 0] {
                return Err(DimerError::DegenerateArrow(a));
            }
        }
        let m = self.segments.len();
        for a in 0..m {
            let sa = self.segments[a];
            for (v, p) in self.points.iter().enumerate() {
                for t in self.translates(sa, (*p, [0, 0])) {
                    let q = [p[0] + t[0] * self.d, p[1] + t[1] * self.d];
                    if strictly_inside(sa, q) {
                        return Err(DimerError::VertexOnSegment {
                            arrow: a,
                            vertex: v,
                        });
                    }
                }
            }
            for b in a..m {
                let sb = self.segments[b];
                for t in self.translates(sa, sb) {
                    if a == b && t == [0, 0] {
                        continue;
                    }
                    let moved = ([sb.0[0] + t[0] * self.d, sb.0[1] + t[1] * self.d], sb.1);
                    match segment_relation(sa, moved) {
                        SegmentRelation::Disjoint => {}
                        SegmentRelation::Crossing => return Err(DimerError::SegmentCrossing(a, b)),
                        SegmentRelation::Overlapping => {
                            return Err(DimerError::OverlappingSegments(a, b))
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn strictly_inside(s: ([i64; 2], [i64; 2]), q: [i64; 2]) -> bool {
    let (p, u) = s;
    let r = [q[0] - p[0], q[1] - p[1]];
    if cross(u, r) != 0 {
        return false;
    }
    let along = u[0] * r[0] + u[1] * r[1];
    along > 0 && along < u[0] * u[0] + u[1] * u[1]
}

enum SegmentRelation {
    Disjoint,
    Crossing,
    Overlapping,
}

/// Relation between two segments, ignoring contact at endpoints (which the
/// vertex-on-segment test handles separately).
fn segment_relation(a: ([i64; 2], [i64; 2]), b: ([i64; 2], [i64; 2])) -> SegmentRelation {
    let (p, u) = a;
    let (q, w) = b;
    let sub = |x: [i64; 2], y: [i64; 2]| [x[0] - y[0], x[1] - y[1]];
    let p2 = [p[0] + u[0], p[1] + u[1]];
    let q2 = [q[0] + w[0], q[1] + w[1]];
    let o1 = cross(u, sub(q, p)).signum();
    let o2 = cross(u, sub(q2, p)).signum();
    let o3 = cross(w, sub(p, q)).signum();
    let o4 = cross(w, sub(p2, q)).signum();
    if o1 == 0 && o2 == 0 {
        // collinear: overlap length along u
        let proj = |x: [i64; 2]| u[0] * (x[0] - p[0]) + u[1] * (x[1] - p[1]);
        let (lo, hi) = (proj(q).min(proj(q2)), proj(q).max(proj(q2)));
        let len = u[0] * u[0] + u[1] * u[1];
        return if lo.max(0) < hi.min(len) {
            SegmentRelation::Overlapping
        } else {
            SegmentRelation::Disjoint
        };
    }
    if o1 * o2 < 0 && o3 * o4 < 0 {
        SegmentRelation::Crossing
    } else {
        SegmentRelation::Disjoint
    }
}

/// Projects an NCCR quiver to the 2-torus and reads off its faces.
pub fn extract_dimer(quiver: &EmbeddedQuiver) -> Result<DimerModel, DimerError> {
    let proj = Projection::new(quiver);
    proj.check()?;
    let arrows = quiver.arrows();
    let n = quiver.vertices().len();
    let start = |h: usize| {
        if h.is_multiple_of(2) {
            arrows[h / 2].tail
        } else {
            arrows[h / 2].head
        }
    };
    let direction = |h: usize| {
        let u = proj.segments[h / 2].1;
        if h.is_multiple_of(2) {
            u
        } else {
            [-u[0], -u[1]]
        }
    };
    let mut rotation: Vec<Vec<usize>> = vec![Vec::new(); n];
    for h in 0..2 * arrows.len() {
        rotation[start(h)].push(h);
    }
    let mut position = vec![0usize; 2 * arrows.len()];
    for rot in rotation.iter_mut() {
        rot.sort_by(|&a, &b| angle_cmp(direction(a), direction(b)));
        for (i, &h) in rot.iter().enumerate() {
            position[h] = i;
        }
    }
    // next half-edge with the face on the left: clockwise neighbour of the twin
    let next = |h: usize| {
        let t = twin(h);
        let rot = &rotation[start(t)];
        rot[(position[t] + rot.len() - 1) % rot.len()]
    };
    let mut seen = vec![false; 2 * arrows.len()];
    let mut faces_pos = Vec::new();
    let mut faces_neg = Vec::new();
    for h0 in 0..2 * arrows.len() {
        if seen[h0] {
            continue;
        }
        let mut orbit = Vec::new();
        let mut h = h0;
        while !seen[h] {
            seen[h] = true;
            orbit.push(h);
            h = next(h);
        }
        if h != h0 {
            return Err(DimerError::OrientabilityFailure);
        }
        if orbit.len() < 3 {
            return Err(DimerError::FaceTooShort(orbit.len()));
        }
        if orbit.iter().all(|h| h % 2 == 0) {
            let mut cycle: Vec<usize> = orbit.iter().map(|h| h / 2).collect();
            rotate_to_min(&mut cycle);
            faces_pos.push(cycle);
        } else if orbit.iter().all(|h| h % 2 == 1) {
            let mut cycle: Vec<usize> = orbit.iter().rev().map(|h| h / 2).collect();
            rotate_to_min(&mut cycle);
            faces_neg.push(cycle);
        } else {
            return Err(DimerError::OrientabilityFailure);
        }
    }
    faces_pos.sort();
    faces_neg.sort();
    let dimer = DimerModel {
        quiver: quiver.clone(),
        faces_pos,
        faces_neg,
        rotation,
    };
    dimer.check_axioms()?;
    Ok(dimer)
}

/// Positive R-charge `R_a = 2<x, κ(s_a)> / <x, (0,0,1)>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RCharge {
    pub x: Vec3,
    pub charges: Vec<Ratio<i64>>,
}

/// A set of arrows meeting every face exactly once, with its lattice point in `N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PerfectMatching {
    pub arrows: Vec<usize>,
    #[serde(rename = "n")]
    pub nvec: Vec3,
}

impl DimerModel {
    pub fn quiver(&self) -> &EmbeddedQuiver {
        &self.quiver
    }

    pub fn data(&self) -> &ToricData {
        self.quiver.data()
    }

    pub fn faces_pos(&self) -> &[Vec<usize>] {
        &self.faces_pos
    }

    pub fn faces_neg(&self) -> &[Vec<usize>] {
        &self.faces_neg
    }

    pub fn faces(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.faces_pos.iter().chain(&self.faces_neg)
    }

    pub fn face_count(&self) -> usize {
        self.faces_pos.len() + self.faces_neg.len()
    }

    /// Counterclockwise half-edges at `v`; `2a` leaves along arrow `a`, `2a+1` against it.
    pub fn rotation(&self, v: usize) -> &[usize] {
        &self.rotation[v]
    }

    /// Projected vertex positions and arrow displacements, as exact fractions of the torus.
    pub fn projected_points(&self) -> Vec<[Ratio<i64>; 2]> {
        let d = self.data().gram_det();
        Projection::new(&self.quiver)
            .points
            .iter()
            .map(|p| [Ratio::new(p[0], d), Ratio::new(p[1], d)])
            .collect()
    }

    pub fn projected_displacements(&self) -> Vec<[Ratio<i64>; 2]> {
        let d = self.data().gram_det();
        Projection::new(&self.quiver)
            .segments
            .iter()
            .map(|(_, u)| [Ratio::new(u[0], d), Ratio::new(u[1], d)])
            .collect()
    }

    /// Face conditions: every arrow once in each orientation, faces of length
    /// at least 3, connected vertex links, Euler characteristic 0 and slack
    /// sum `(1,…,1)` around each face.
    pub fn check_axioms(&self) -> Result<(), DimerError> {
        let arrows = self.quiver.arrows();
        let m = arrows.len();
        let k = self.data().k();
        for faces in [&self.faces_pos, &self.faces_neg] {
            let mut count = vec![0; m];
            for f in faces.iter() {
                if f.len() < 3 {
                    return Err(DimerError::FaceTooShort(f.len()));
                }
                for w in 0..f.len() {
                    count[f[w]] += 1;
                    if arrows[f[w]].head != arrows[f[(w + 1) % f.len()]].tail {
                        return Err(DimerError::OrientabilityFailure);
                    }
                }
            }
            if count.iter().any(|&c| c != 1) {
                return Err(DimerError::OrientabilityFailure);
            }
        }
        for f in self.faces() {
            let mut total = vec![0i64; k];
            for &a in f {
                for (t, s) in total.iter_mut().zip(arrows[a].slack.iter()) {
                    *t += s;
                }
            }
            if total.iter().any(|&t| t != 1) {
                return Err(DimerError::FaceSlack(f.clone()));
            }
        }
        let nv = self.quiver.vertices().len();
        for v in 0..nv {
            // union-find over local faces and incident arrows
            let incident: Vec<usize> = (0..m)
                .filter(|&a| arrows[a].tail == v || arrows[a].head == v)
                .collect();
            let local_faces: Vec<&Vec<usize>> = self
                .faces()
                .filter(|f| f.iter().any(|&a| arrows[a].tail == v))
                .collect();
            let total = incident.len() + local_faces.len();
            let mut parent: Vec<usize> = (0..total).collect();
            fn root(p: &mut [usize], x: usize) -> usize {
                let mut r = x;
                while p[r] != r {
                    r = p[r];
                }
                p[x] = r;
                r
            }
            for (fi, f) in local_faces.iter().enumerate() {
                for (ai, a) in incident.iter().enumerate() {
                    if f.contains(a) {
                        let (x, y) = (
                            root(&mut parent, ai),
                            root(&mut parent, incident.len() + fi),
                        );
                        parent[x] = y;
                    }
                }
            }
            let r0 = root(&mut parent, 0);
            if (0..total).any(|i| root(&mut parent, i) != r0) {
                return Err(DimerError::ManifoldFailure(v));
            }
        }
        let euler = nv as i64 - m as i64 + self.face_count() as i64;
        if euler != 0 {
            return Err(DimerError::EulerFailure(euler));
        }
        Ok(())
    }

    /// `2<x, κ(s_a)> / <x, (0,0,1)>` for every arrow, with no positivity
    /// filter. Faces and vertices satisfy the charge identities for any such `x`.
    pub fn linear_charges(&self, x: &Vec3) -> Result<Vec<Ratio<i64>>, DimerError> {
        let data = self.data();
        if x[2] == 0 || data.rays().iter().any(|v| dot(x, v) <= 0) {
            return Err(DimerError::NotInterior);
        }
        let d = data.gram_det();
        Ok(self
            .quiver
            .arrows()
            .iter()
            .map(|a| Ratio::new(2 * dot(x, &data.kappa_scaled(&a.slack)), d * x[2]))
            .collect())
    }

    /// `R_a` for the covector `x`; requires `<x, v_i> > 0` for every ray and
    /// every charge in `(0, 2)`.
    pub fn rcharge_for(&self, x: &Vec3) -> Result<RCharge, DimerError> {
        let arrows = self.quiver.arrows();
        if x[2] < 0 {
            return Err(DimerError::Infeasible((0..arrows.len()).collect()));
        }
        let charges = self.linear_charges(x)?;
        let zero = Ratio::from_integer(0);
        let two = Ratio::from_integer(2);
        let bad: Vec<usize> = (0..arrows.len())
            .filter(|&a| charges[a] <= zero || charges[a] >= two)
            .collect();
        if !bad.is_empty() {
            return Err(DimerError::Infeasible(bad));
        }
        Ok(RCharge { x: *x, charges })
    }

    /// Searches for a covector giving a charge in `(0, 2)` on every arrow.
    pub fn find_rcharge(&self, x: Option<Vec3>) -> Result<RCharge, DimerError> {
        if let Some(x) = x {
            return self.rcharge_for(&x);
        }
        let data = self.data();
        let ones = vec![1i64; data.k()];
        let mut rows: BTreeSet<Vec3> = data.rays().iter().copied().collect();
        rows.insert([0, 0, 1]);
        for a in self.quiver.arrows() {
            let complement: Vec<i64> = ones
                .iter()
                .zip(a.slack.iter())
                .map(|(o, s)| o - s)
                .collect();
            rows.insert(data.kappa_scaled(&a.slack));
            rows.insert(data.kappa_scaled(&complement));
        }
        let rows: Vec<Vec3> = rows.into_iter().collect();
        match positive_point(&rows) {
            Some(x) => self.rcharge_for(&x),
            None => {
                let arrows = self.quiver.arrows();
                let bad = (0..arrows.len())
                    .filter(|&a| data.kappa_scaled(&arrows[a].slack).iter().all(|&c| c <= 0))
                    .collect();
                Err(DimerError::Infeasible(bad))
            }
        }
    }

    /// `Σ_{a∈F} R_a = 2` per face and `Σ (1 - R_a) = 2` over arrow ends at each vertex.
    pub fn check_rcharge(&self, r: &RCharge) -> Result<(), String> {
        self.check_charge_identities(&r.charges)
    }

    pub fn check_charge_identities(&self, charges: &[Ratio<i64>]) -> Result<(), String> {
        let two = Ratio::from_integer(2);
        let one = Ratio::from_integer(1);
        for f in self.faces() {
            let s: Ratio<i64> = f.iter().map(|&a| charges[a]).sum();
            if s != two {
                return Err(format!("face {f:?} has charge {s}"));
            }
        }
        let arrows = self.quiver.arrows();
        for v in 0..self.quiver.vertices().len() {
            let mut s = Ratio::from_integer(0);
            for (a, arrow) in arrows.iter().enumerate() {
                if arrow.head == v {
                    s += one - charges[a];
                }
                if arrow.tail == v {
                    s += one - charges[a];
                }
            }
            if s != two {
                return Err(format!("vertex {v} has charge sum {s}"));
            }
        }
        Ok(())
    }

    /// All perfect matchings, as sorted arrow sets in lexicographic order.
    pub fn perfect_matchings(&self) -> Result<Vec<PerfectMatching>, DimerError> {
        let m = self.quiver.arrows().len();
        let mut neg_of = vec![0usize; m];
        for (i, f) in self.faces_neg.iter().enumerate() {
            for &a in f {
                neg_of[a] = i;
            }
        }
        let mut sets = Vec::new();
        let mut used = vec![false; self.faces_neg.len()];
        let mut chosen = Vec::new();
        fn search(
            faces: &[Vec<usize>],
            neg_of: &[usize],
            i: usize,
            used: &mut [bool],
            chosen: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if i == faces.len() {
                let mut s = chosen.clone();
                s.sort();
                out.push(s);
                return;
            }
            for &a in &faces[i] {
                if !used[neg_of[a]] {
                    used[neg_of[a]] = true;
                    chosen.push(a);
                    search(faces, neg_of, i + 1, used, chosen, out);
                    chosen.pop();
                    used[neg_of[a]] = false;
                }
            }
        }
        if self.faces_pos.len() == self.faces_neg.len() {
            search(
                &self.faces_pos,
                &neg_of,
                0,
                &mut used,
                &mut chosen,
                &mut sets,
            );
        }
        if sets.is_empty() {
            return Err(DimerError::NoMatchings);
        }
        sets.sort();
        let cycles = self.cycle_basis()?;
        sets.into_iter()
            .enumerate()
            .map(|(i, arrows)| {
                let nvec = self
                    .solve_matching(&cycles, &arrows)
                    .ok_or(DimerError::NonIntegralMatching(i))?;
                Ok(PerfectMatching { arrows, nvec })
            })
            .collect()
    }

    /// Signed arrow multiplicities of the fundamental cycles of a spanning tree,
    /// plus one face.
    fn cycle_basis(&self) -> Result<Vec<Vec<i64>>, DimerError> {
        let arrows = self.quiver.arrows();
        let n = self.quiver.vertices().len();
        let m = arrows.len();
        // parent arrow and sign of the tree path from the root
        let mut via: Vec<Option<(usize, i64)>> = vec![None; n];
        let mut reached = vec![false; n];
        let mut tree = vec![false; m];
        reached[0] = true;
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            for (a, arrow) in arrows.iter().enumerate() {
                let (w, sign) = if arrow.tail == v {
                    (arrow.head, 1)
                } else if arrow.head == v {
                    (arrow.tail, -1)
                } else {
                    continue;
                };
                if !reached[w] {
                    reached[w] = true;
                    via[w] = Some((a, sign));
                    tree[a] = true;
                    stack.push(w);
                }
            }
        }
        let path_to = |mut v: usize| {
            let mut c = vec![0i64; m];
            while let Some((a, sign)) = via[v] {
                c[a] += sign;
                v = if sign == 1 {
                    arrows[a].tail
                } else {
                    arrows[a].head
                };
            }
            c
        };
        let mut cycles = Vec::new();
        for (a, arrow) in arrows.iter().enumerate() {
            if tree[a] {
                continue;
            }
            let mut c = path_to(arrow.tail);
            c[a] += 1;
            for (x, y) in c.iter_mut().zip(path_to(arrow.head)) {
                *x -= y;
            }
            cycles.push(c);
        }
        let mut face = vec![0i64; m];
        for &a in &self.faces_pos[0] {
            face[a] += 1;
        }
        cycles.push(face);
        let degrees: Vec<Vec3> = cycles.iter().map(|c| self.cycle_degree(c)).collect();
        let independent = independent_triple(&degrees);
        if independent.is_none() {
            return Err(DimerError::DegenerateCycles(rank_of(&degrees)));
        }
        Ok(cycles)
    }

    /// `Σ ε_a m_a`, the `M`-degree of a signed cycle.
    fn cycle_degree(&self, c: &[i64]) -> Vec3 {
        let mut deg = [0i64; 3];
        for (a, &e) in c.iter().enumerate() {
            for j in 0..3 {
                deg[j] += e * self.quiver.arrows()[a].monomial[j];
            }
        }
        deg
    }

    fn solve_matching(&self, cycles: &[Vec<i64>], matching: &[usize]) -> Option<Vec3> {
        let degrees: Vec<Vec3> = cycles.iter().map(|c| self.cycle_degree(c)).collect();
        let counts: Vec<i64> = cycles
            .iter()
            .map(|c| matching.iter().map(|&a| c[a]).sum())
            .collect();
        let [i, j, l] = independent_triple(&degrees)?;
        let mat = [degrees[i], degrees[j], degrees[l]];
        let det = crate::lattice::det3(&mat);
        let adj = crate::lattice::adj3(&mat);
        let rhs = [counts[i], counts[j], counts[l]];
        let num = crate::lattice::mat_vec(&adj, &rhs);
        if num.iter().any(|x| x % det != 0) {
            return None;
        }
        let n = num.map(|x| x / det);
        let consistent = degrees
            .iter()
            .zip(&counts)
            .all(|(deg, c)| dot(deg, &n) == *c);
        (consistent && n[2] == 1).then_some(n)
    }

    /// Corners of the convex hull of the matching vectors.
    pub fn recovered_polygon(&self, matchings: &[PerfectMatching]) -> Vec<[i64; 2]> {
        let pts: Vec<[i64; 2]> = matchings.iter().map(|p| [p.nvec[0], p.nvec[1]]).collect();
        strict_hull(&pts)
    }

    pub fn check_polygon(&self, matchings: &[PerfectMatching]) -> Result<(), DimerError> {
        let mut recovered = self.recovered_polygon(matchings);
        let mut expected = self.data().points();
        recovered.sort();
        expected.sort();
        if recovered != expected {
            return Err(DimerError::PolygonMismatch {
                recovered,
                expected,
            });
        }
        Ok(())
    }

    /// For each ray, the matchings whose vector is that ray.
    pub fn extremal_matchings<'a>(
        &self,
        matchings: &'a [PerfectMatching],
    ) -> Vec<Vec<&'a PerfectMatching>> {
        self.data()
            .rays()
            .iter()
            .map(|v| matchings.iter().filter(|p| p.nvec == *v).collect())
            .collect()
    }

    /// Type sequence of a reflexive polygon, read off the vertices sorted by
    /// height. Vertices of equal height sit over a (-2)-curve: no arrow of
    /// height zero joins them, and their relative order does not change the
    /// sequence, so ties keep index order.
    pub fn type_sequence(&self) -> Result<Vec<i64>, DimerError> {
        self.type_sequence_ordered(false)
    }

    fn type_sequence_ordered(&self, reverse_ties: bool) -> Result<Vec<i64>, DimerError> {
        let data = self.data();
        let interior = data.interior_points();
        if interior.len() != 1 {
            return Err(DimerError::NotReflexive(interior.len()));
        }
        let p = [interior[0][0], interior[0][1], 1];
        let d = data.gram_det();
        let q = &self.quiver;
        let n = q.vertices().len();
        // heights scaled by d, reduced to [0, d)
        let height: Vec<i64> = (0..n)
            .map(|v| dot(&q.point_scaled(v), &p).rem_euclid(d))
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| (height[v], if reverse_ties { n - v } else { v }));
        let mut seq = Vec::with_capacity(n);
        for i in 0..n {
            let upper = order[i];
            let (lower, diff) = if i == 0 {
                (order[n - 1], height[upper] + d - height[order[n - 1]])
            } else {
                (order[i - 1], height[upper] - height[order[i - 1]])
            };
            let count = (0..q.arrows().len())
                .filter(|&a| {
                    let arrow = &q.arrows()[a];
                    arrow.tail == upper
                        && arrow.head == lower
                        && dot(&q.lift_scaled(a), &p) == -diff
                })
                .count();
            seq.push(count as i64 - 2);
        }
        Ok(seq)
    }

    /// Faces cut out by the straight arrows alone (one nonzero slack entry),
    /// as cycles of half-edges. For a parallelogram these form a square grid.
    pub fn straight_faces(&self) -> Vec<Vec<usize>> {
        let arrows = self.quiver.arrows();
        let start = |h: usize| {
            if h.is_multiple_of(2) {
                arrows[h / 2].tail
            } else {
                arrows[h / 2].head
            }
        };
        let rotation: Vec<Vec<usize>> = self
            .rotation
            .iter()
            .map(|r| {
                r.iter()
                    .copied()
                    .filter(|&h| arrows[h / 2].weight() == 1)
                    .collect()
            })
            .collect();
        let mut position = vec![usize::MAX; 2 * arrows.len()];
        for rot in &rotation {
            for (i, &h) in rot.iter().enumerate() {
                position[h] = i;
            }
        }
        let mut seen = vec![false; 2 * arrows.len()];
        let mut faces = Vec::new();
        for h0 in (0..2 * arrows.len()).filter(|&h| position[h] != usize::MAX) {
            let mut face = Vec::new();
            let mut h = h0;
            while !seen[h] {
                seen[h] = true;
                face.push(h);
                let t = twin(h);
                let rot = &rotation[start(t)];
                h = rot[(position[t] + rot.len() - 1) % rot.len()];
            }
            if !face.is_empty() {
                faces.push(face);
            }
        }
        faces
    }

    /// `Σ_{D⁺} a − Σ_{D⁻} a` over the diagonal arrows of a four-ray polygon,
    /// where `D⁺` has slack `(1,1,0,0)` or `(0,0,1,1)` and `D⁻` has `(0,1,1,0)`
    /// or `(1,0,0,1)`. Returns `None` for other polygons.
    pub fn diagonal_homology(&self) -> Option<[Ratio<i64>; 2]> {
        if self.data().k() != 4 {
            return None;
        }
        let displacement = self.projected_displacements();
        let mut total = [Ratio::from_integer(0); 2];
        for (a, arrow) in self.quiver.arrows().iter().enumerate() {
            let sign = match arrow.slack.entries() {
                [1, 1, 0, 0] | [0, 0, 1, 1] => 1,
                [0, 1, 1, 0] | [1, 0, 0, 1] => -1,
                _ => continue,
            };
            for i in 0..2 {
                total[i] += displacement[a][i] * sign;
            }
        }
        Some(total)
    }
}

fn independent_triple(vectors: &[Vec3]) -> Option<[usize; 3]> {
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            for l in j + 1..vectors.len() {
                if crate::lattice::det3(&[vectors[i], vectors[j], vectors[l]]) != 0 {
                    return Some([i, j, l]);
                }
            }
        }
    }
    None
}

fn rank_of(vectors: &[Vec3]) -> usize {
    let c = |a: &Vec3, b: &Vec3| {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    if independent_triple(vectors).is_some() {
        3
    } else if vectors
        .iter()
        .any(|a| vectors.iter().any(|b| c(a, b) != [0, 0, 0]))
    {
        2
    } else if vectors.iter().any(|v| *v != [0, 0, 0]) {
        1
    } else {
        0
    }
}

/// A primitive integral `x` with `<r, x> > 0` for every row, if one exists:
/// the average of the vertices of `{x : <r, x> >= 1}`.
fn positive_point(rows: &[Vec3]) -> Option<Vec3> {
    let mut vertices: BTreeSet<[Ratio<i64>; 3]> = BTreeSet::new();
    let n = rows.len();
    for i in 0..n {
        for j in i + 1..n {
            for l in j + 1..n {
                let mat = [rows[i], rows[j], rows[l]];
                let det = crate::lattice::det3(&mat);
                if det == 0 {
                    continue;
                }
                let num = crate::lattice::mat_vec(&crate::lattice::adj3(&mat), &[1, 1, 1]);
                let x = num.map(|c| Ratio::new(c, det));
                let feasible = rows
                    .iter()
                    .all(|r| x[0] * r[0] + x[1] * r[1] + x[2] * r[2] >= Ratio::from_integer(1));
                if feasible {
                    vertices.insert(x);
                }
            }
        }
    }
    if vertices.is_empty() {
        return None;
    }
    let count = vertices.len() as i64;
    let mut sum = [Ratio::from_integer(0); 3];
    for v in &vertices {
        for c in 0..3 {
            sum[c] += v[c];
        }
    }
    let avg = sum.map(|s| s / count);
    let lcm = avg
        .iter()
        .fold(1i64, |acc, c| num_integer::lcm(acc, *c.denom()));
    let ints = avg.map(|c| (c * lcm).to_integer());
    let g = ints.iter().fold(0i64, |acc, c| num_integer::gcd(acc, *c));
    Some(ints.map(|c| c / g))
}

/// Type sequence of each reflexive polygon: `v_{i-1} + a_i v_i + v_{i+1} = 0`
/// over its boundary lattice points.
pub fn polygon_a_sequence(data: &ToricData) -> Vec<i64> {
    let pts = data.boundary_points();
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, v, b) = (pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]);
            let s = [a[0] + b[0], a[1] + b[1]];
            // s = -a_i v
            if v[0] != 0 {
                -s[0] / v[0]
            } else {
                -s[1] / v[1]
            }
        })
        .collect()
}

/// Least rotation or reflection of a cyclic sequence.
pub fn canonical_cycle(seq: &[i64]) -> Vec<i64> {
    let n = seq.len();
    let mut best: Option<Vec<i64>> = None;
    let mut rev = seq.to_vec();
    rev.reverse();
    for s in [seq.to_vec(), rev] {
        for r in 0..n.max(1) {
            let mut c = s.clone();
            c.rotate_left(r);
            if best.as_ref().is_none_or(|b| c < *b) {
                best = Some(c);
            }
        }
    }
    best.unwrap_or_default()
}

/// The 16 reflexive polygons by name, as corner lists.
pub fn reflexive_polygons() -> Vec<(&'static str, Vec<[i64; 2]>)> {
    vec![
        ("3a", vec![[-1, -1], [1, 0], [0, 1]]),
        ("4a", vec![[0, -1], [1, 0], [0, 1], [-1, 0]]),
        ("4b", vec![[1, -1], [0, 1], [-1, 0], [0, -1]]),
        ("4c", vec![[1, -1], [0, 1], [-1, -1]]),
        ("5a", vec![[1, 0], [0, 1], [-1, 1], [-1, 0], [0, -1]]),
        ("5b", vec![[1, -1], [0, 1], [-1, 0], [-1, -1]]),
        (
            "6a",
            vec![[1, 0], [0, 1], [-1, 1], [-1, 0], [0, -1], [1, -1]],
        ),
        ("6b", vec![[1, 0], [0, 1], [-1, 1], [-1, -1], [0, -1]]),
        ("6c", vec![[1, 0], [0, 1], [-2, -1], [0, -1]]),
        ("6d", vec![[0, 1], [-2, -1], [1, -1]]),
        ("7a", vec![[1, 0], [0, 1], [-1, 1], [-1, -1], [1, -1]]),
        ("7b", vec![[1, 0], [0, 1], [-2, -1], [1, -1]]),
        ("8a", vec![[1, 1], [-1, 1], [-1, -1], [1, -1]]),
        ("8b", vec![[0, 1], [-1, 1], [-1, -1], [2, -1]]),
        ("8c", vec![[0, 1], [2, -1], [-2, -1]]),
        ("9a", vec![[-1, 2], [-1, -1], [2, -1]]),
    ]
}

/// Name of the reflexive polygon whose boundary sequence matches `seq` up to
/// rotation and reflection.
pub fn type_label(seq: &[i64]) -> Option<&'static str> {
    let key = canonical_cycle(seq);
    let table: BTreeMap<Vec<i64>, &'static str> = reflexive_polygons()
        .into_iter()
        .map(|(name, pts)| {
            let d = ToricData::from_points(&pts).expect("reflexive table is valid");
            (canonical_cycle(&polygon_a_sequence(&d)), name)
        })
        .collect();
    table.get(&key).copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cm::enumerate_cm;
    use crate::modmax::{enumerate_mm, CompatibilityGraph};
    use crate::quiver::build_quiver;

    fn dimers(points: &[[i64; 2]]) -> Vec<DimerModel> {
        let d = ToricData::from_points(points).unwrap();
        let cm = enumerate_cm(&d).unwrap();
        enumerate_mm(&CompatibilityGraph::new(&d, &cm))
            .iter()
            .map(|s| extract_dimer(&build_quiver(&d, s).unwrap()).unwrap())
            .collect()
    }

    #[test]
    fn conifold_dimer() {
        let dm = &dimers(&[[0, 0], [1, 0], [1, 1], [0, 1]])[0];
        assert_eq!(dm.faces_pos().len(), 1);
        assert_eq!(dm.faces_neg().len(), 1);
        assert!(dm.faces().all(|f| f.len() == 4));
        let pms = dm.perfect_matchings().unwrap();
        assert_eq!(pms.len(), 4);
        assert!(pms.iter().all(|p| p.arrows.len() == 1));
        let mut vecs: Vec<Vec3> = pms.iter().map(|p| p.nvec).collect();
        vecs.sort();
        assert_eq!(vecs, vec![[0, 0, 1], [0, 1, 1], [1, 0, 1], [1, 1, 1]]);
        dm.check_polygon(&pms).unwrap();
    }

    #[test]
    fn conifold_charges() {
        let dm = &dimers(&[[0, 0], [1, 0], [1, 1], [0, 1]])[0];
        let r = dm.find_rcharge(Some([1, 1, 3])).unwrap();
        let by_slack: Vec<(Vec<i64>, Ratio<i64>)> = dm
            .quiver()
            .arrows()
            .iter()
            .zip(&r.charges)
            .map(|(a, c)| (a.slack.0.clone(), *c))
            .collect();
        assert!(by_slack.contains(&(vec![1, 0, 0, 0], Ratio::new(5, 6))));
        assert!(by_slack.contains(&(vec![0, 1, 0, 0], Ratio::new(1, 2))));
        assert!(by_slack.contains(&(vec![0, 0, 1, 0], Ratio::new(1, 6))));
        assert!(by_slack.contains(&(vec![0, 0, 0, 1], Ratio::new(1, 2))));
        dm.check_rcharge(&r).unwrap();
        assert!(matches!(
            dm.find_rcharge(Some([0, 0, 1])),
            Err(DimerError::Infeasible(_))
        ));
        assert_eq!(
            dm.find_rcharge(Some([-1, 0, 1])),
            Err(DimerError::NotInterior)
        );
        let auto = dm.find_rcharge(None).unwrap();
        dm.check_rcharge(&auto).unwrap();
    }

    #[test]
    fn c3_dimer() {
        let dm = &dimers(&[[0, 0], [1, 0], [0, 1]])[0];
        assert_eq!(dm.face_count(), 2);
        assert!(dm.faces().all(|f| f.len() == 3));
        let pms = dm.perfect_matchings().unwrap();
        assert_eq!(pms.len(), 3);
        dm.check_polygon(&pms).unwrap();
    }

    #[test]
    fn a_sequences() {
        let seq = |pts: &[[i64; 2]]| {
            canonical_cycle(&polygon_a_sequence(&ToricData::from_points(pts).unwrap()))
        };
        assert_eq!(seq(&[[-1, -1], [1, 0], [0, 1]]), vec![1, 1, 1]);
        assert_eq!(seq(&[[0, -1], [1, 0], [0, 1], [-1, 0]]), vec![0, 0, 0, 0]);
        assert_eq!(
            seq(&[[1, -1], [0, 1], [-1, -1]]),
            canonical_cycle(&[-2, 0, 2, 0])
        );
        assert_eq!(type_label(&[1, 1, 1]), Some("3a"));
        assert_eq!(type_label(&[0, 2, 0, -2]), Some("4c"));
        // all 16 labels are distinct
        let keys: BTreeSet<Vec<i64>> = reflexive_polygons()
            .iter()
            .map(|(_, p)| canonical_cycle(&polygon_a_sequence(&ToricData::from_points(p).unwrap())))
            .collect();
        assert_eq!(keys.len(), 16);
    }

    #[test]
    fn p2_type() {
        let dm = &dimers(&[[-1, -1], [1, 0], [0, 1]])[0];
        assert_eq!(dm.type_sequence().unwrap(), vec![1, 1, 1]);
        let conifold = &dimers(&[[0, 0], [1, 0], [1, 1], [0, 1]])[0];
        assert_eq!(conifold.type_sequence(), Err(DimerError::NotReflexive(0)));
    }

    #[test]
    fn tied_heights_do_not_change_the_sequence() {
        let mut ties = 0;
        for (_, points) in reflexive_polygons() {
            for dm in dimers(&points) {
                let seq = dm.type_sequence_ordered(false).unwrap();
                assert_eq!(seq, dm.type_sequence_ordered(true).unwrap());
                ties += seq.iter().filter(|&&a| a == -2).count();
            }
        }
        assert!(ties > 0, "some polygon should have tied heights");
    }
}
