//! Quivers of toric NCCRs embedded in the 3-torus `M ⊗ R / M`, and their
//! classification up to affine equivalence.
//!
//! Arrows `b → c` are graded generators of `Hom(T(b), T(c)) = T(c - b)`. A
//! homogeneous element `m` has slack `s_i = <m, v_i> - (c_i - b_i) ≥ 0` and then
//! `c = normalize(b - s)`, so candidate arrows are indexed by their slack vector.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{adj3, det3, mat_vec, BVector, Mat3, RationalVec3, ToricData, Vec3};
use crate::modmax::ModifyingSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuiverError {
    #[error("arrow {tail} -> {head} has slack {slack} with {weight} nonzero entries (at most k-2 allowed)")]
    SlackBoundViolated {
        tail: usize,
        head: usize,
        slack: BVector,
        weight: usize,
    },
    #[error("quiver is not strongly connected")]
    Disconnected,
    #[error("arrow lifts span a subspace of rank {0}; no affine frame can be fixed")]
    DegenerateLifts(usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct Vertex {
    pub b: BVector,
    pub kappa: RationalVec3,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Arrow {
    pub tail: usize,
    pub head: usize,
    pub slack: BVector,
    #[serde(rename = "m")]
    pub monomial: Vec3,
    pub lift: RationalVec3,
}

impl Arrow {
    pub fn weight(&self) -> usize {
        self.slack.iter().filter(|&&x| x != 0).count()
    }

    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }
}

#[derive(Clone, Debug)]
pub struct EmbeddedQuiver {
    data: ToricData,
    vertices: Vec<Vertex>,
    arrows: Vec<Arrow>,
}

fn mask_slack(k: usize, mask: u32) -> Vec<i64> {
    (0..k).map(|i| ((mask >> i) & 1) as i64).collect()
}

/// Builds the embedded quiver of `End(⊕_{b ∈ S} T(b))`.
pub fn build_quiver(data: &ToricData, set: &ModifyingSet) -> Result<EmbeddedQuiver, QuiverError> {
    let k = data.k();
    assert!(k < 32);
    let vertices: Vec<Vertex> = set
        .members()
        .iter()
        .map(|b| Vertex {
            b: b.clone(),
            kappa: data.kappa(b),
        })
        .collect();
    let index: HashMap<&BVector, usize> = vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (&v.b, i))
        .collect();
    let full = (1u32 << k) - 1;
    let mut arrows = Vec::new();
    for (tail, v) in vertices.iter().enumerate() {
        // landing[mask] = index of normalize(b - s) when it is a summand
        let landing: Vec<Option<(usize, Vec3)>> = (0..=full)
            .map(|mask| {
                let s = mask_slack(k, mask);
                let shifted: Vec<i64> = v.b.iter().zip(&s).map(|(b, s)| b - s).collect();
                let (c, m) = data.normalize(&shifted);
                index.get(&c).map(|&h| (h, m))
            })
            .collect();
        for mask in 1..full {
            let Some((head, m)) = landing[mask as usize] else {
                continue;
            };
            let mut sub = (mask - 1) & mask;
            let mut reducible = false;
            while sub != 0 {
                if landing[sub as usize].is_some() {
                    reducible = true;
                    break;
                }
                sub = (sub - 1) & mask;
            }
            if reducible {
                continue;
            }
            let slack = BVector(mask_slack(k, mask));
            let lift =
                RationalVec3::from_scaled(data.kappa_scaled(&slack).map(|x| -x), data.gram_det());
            let arrow = Arrow {
                tail,
                head,
                slack,
                monomial: m,
                lift,
            };
            if arrow.weight() > k - 2 {
                return Err(QuiverError::SlackBoundViolated {
                    tail,
                    head,
                    weight: arrow.weight(),
                    slack: arrow.slack,
                });
            }
            arrows.push(arrow);
        }
    }
    arrows.sort_by(|a, b| (a.tail, &a.slack).cmp(&(b.tail, &b.slack)));
    let q = EmbeddedQuiver {
        data: data.clone(),
        vertices,
        arrows,
    };
    if !q.is_strongly_connected() {
        return Err(QuiverError::Disconnected);
    }
    Ok(q)
}

impl EmbeddedQuiver {
    pub fn data(&self) -> &ToricData {
        &self.data
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn vertex_of(&self, b: &BVector) -> Option<usize> {
        self.vertices.iter().position(|v| &v.b == b)
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.arrows.iter().filter(|a| a.head == v).count()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.arrows.iter().filter(|a| a.tail == v).count()
    }

    /// Vertex points as numerators over the Gram determinant.
    pub(crate) fn point_scaled(&self, v: usize) -> Vec3 {
        self.data.kappa_scaled(&self.vertices[v].b)
    }

    /// Lift numerators over the Gram determinant.
    pub(crate) fn lift_scaled(&self, a: usize) -> Vec3 {
        let d = self.data.gram_det();
        self.arrows[a].lift.coords().map(|c| (c * d).to_integer())
    }

    /// The same vertices with every arrow reversed (lift and monomial negated).
    /// The result is a bare embedded quiver; arrow invariants refer to the
    /// original orientation and do not hold for it.
    pub fn reversed(&self) -> EmbeddedQuiver {
        let zero = RationalVec3::from_integers([0, 0, 0]);
        let arrows = self
            .arrows
            .iter()
            .map(|a| Arrow {
                tail: a.head,
                head: a.tail,
                slack: a.slack.clone(),
                monomial: a.monomial.map(|x| -x),
                lift: zero - a.lift,
            })
            .collect();
        EmbeddedQuiver {
            data: self.data.clone(),
            vertices: self.vertices.clone(),
            arrows,
        }
    }

    pub fn is_strongly_connected(&self) -> bool {
        let n = self.vertices.len();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(v) = queue.pop_front() {
                for a in &self.arrows {
                    let (from, to) = if forward {
                        (a.tail, a.head)
                    } else {
                        (a.head, a.tail)
                    };
                    if from == v && !seen[to] {
                        seen[to] = true;
                        queue.push_back(to);
                    }
                }
            }
            seen.into_iter().all(|x| x)
        };
        n > 0 && reach(true) && reach(false)
    }

    /// Checks every arrow invariant; returns a description of the first failure.
    pub fn check_arrow_invariants(&self) -> Result<(), String> {
        let data = &self.data;
        let k = data.k();
        for (i, a) in self.arrows.iter().enumerate() {
            let b = &self.vertices[a.tail].b;
            let c = &self.vertices[a.head].b;
            if &data.normalized(&(b - &a.slack)) != c {
                return Err(format!("arrow {i}: head is not normalize(tail - slack)"));
            }
            let kappa_m = data.kappa(&(&(c - b) + &a.slack));
            if kappa_m != RationalVec3::from_integers(a.monomial) {
                return Err(format!(
                    "arrow {i}: monomial differs from kappa(head - tail + slack)"
                ));
            }
            let pairing = data.phi_t(&a.monomial);
            if (0..k).any(|j| pairing[j] < c[j] - b[j]) {
                return Err(format!("arrow {i}: monomial is not a homomorphism"));
            }
            let expected = data.kappa(c) - data.kappa(b) - RationalVec3::from_integers(a.monomial);
            if expected != a.lift {
                return Err(format!(
                    "arrow {i}: lift differs from kappa(head) - kappa(tail) - m"
                ));
            }
            if !(data.kappa(&(c - b)) - a.lift).is_integral() {
                return Err(format!(
                    "arrow {i}: lift is not congruent to kappa(head - tail)"
                ));
            }
            if a.weight() < 1 || a.weight() > k - 2 {
                return Err(format!(
                    "arrow {i}: slack weight {} outside [1, {}]",
                    a.weight(),
                    k - 2
                ));
            }
            if a.lift == RationalVec3::from_integers([0, 0, 0]) {
                return Err(format!("arrow {i}: zero lift"));
            }
        }
        Ok(())
    }
}

/// `x ↦ A x + t` on `M ⊗ R`, compatible with the lattice `M`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AffineMap {
    pub a: Mat3,
    pub t: RationalVec3,
}

impl AffineMap {
    pub fn apply(&self, p: &RationalVec3) -> RationalVec3 {
        let c = p.coords();
        let row = |r: usize| c[0] * self.a[r][0] + c[1] * self.a[r][1] + c[2] * self.a[r][2];
        RationalVec3([row(0), row(1), row(2)]) + self.t
    }

    pub fn apply_linear(&self, p: &RationalVec3) -> RationalVec3 {
        let c = p.coords();
        let row = |r: usize| c[0] * self.a[r][0] + c[1] * self.a[r][1] + c[2] * self.a[r][2];
        RationalVec3([row(0), row(1), row(2)])
    }
}

fn reduce_mod(v: Vec3, d: i64) -> Vec3 {
    v.map(|x| x.rem_euclid(d))
}

fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn rank(vectors: &[Vec3]) -> usize {
    if find_frame(vectors).is_some() {
        3
    } else if vectors
        .iter()
        .any(|a| vectors.iter().any(|b| cross(a, b) != [0, 0, 0]))
    {
        2
    } else if vectors.iter().any(|v| *v != [0, 0, 0]) {
        1
    } else {
        0
    }
}

/// Arrow profile `(tail point, lift)` in scaled coordinates, sorted.
fn arrow_profile(q: &EmbeddedQuiver, map: Option<(&Mat3, &Vec3)>) -> Vec<(Vec3, Vec3)> {
    let d = q.data.gram_det();
    let mut out: Vec<(Vec3, Vec3)> = (0..q.arrows.len())
        .map(|i| {
            let p = q.point_scaled(q.arrows[i].tail);
            let l = q.lift_scaled(i);
            match map {
                None => (p, l),
                Some((a, t)) => {
                    let ap = mat_vec(a, &p);
                    (
                        reduce_mod([ap[0] + t[0], ap[1] + t[1], ap[2] + t[2]], d),
                        mat_vec(a, &l),
                    )
                }
            }
        })
        .collect();
    out.sort();
    out
}

/// Searches for an affine map carrying `q` onto `r`, arrows onto arrows.
pub fn affine_equivalent(
    q: &EmbeddedQuiver,
    r: &EmbeddedQuiver,
) -> Result<Option<AffineMap>, QuiverError> {
    affine_equivalent_where(q, r, |_| true)
}

pub fn affine_equivalent_where(
    q: &EmbeddedQuiver,
    r: &EmbeddedQuiver,
    accept: impl Fn(&Mat3) -> bool,
) -> Result<Option<AffineMap>, QuiverError> {
    assert_eq!(q.data, r.data, "quivers must share their toric data");
    let d = q.data.gram_det();
    if q.vertices.len() != r.vertices.len() || q.arrows.len() != r.arrows.len() {
        return Ok(None);
    }
    let lift_counts = |x: &EmbeddedQuiver| {
        let mut m: BTreeMap<Vec3, usize> = BTreeMap::new();
        for i in 0..x.arrows.len() {
            *m.entry(x.lift_scaled(i)).or_default() += 1;
        }
        m
    };
    let lq = lift_counts(q);
    let lr = lift_counts(r);
    let mut mult_q: Vec<usize> = lq.values().copied().collect();
    let mut mult_r: Vec<usize> = lr.values().copied().collect();
    mult_q.sort();
    mult_r.sort();
    if mult_q != mult_r {
        return Ok(None);
    }
    let distinct: Vec<Vec3> = lq.keys().copied().collect();
    let frame =
        find_frame(&distinct).ok_or_else(|| QuiverError::DegenerateLifts(rank(&distinct)))?;
    let dm: Mat3 = [
        [frame[0][0], frame[1][0], frame[2][0]],
        [frame[0][1], frame[1][1], frame[2][1]],
        [frame[0][2], frame[1][2], frame[2][2]],
    ];
    let dm_det = det3(&dm) as i128;
    let dm_adj = adj3(&dm);
    let targets: Vec<Vec3> = lr.keys().copied().collect();
    let profile_r = arrow_profile(r, None);
    let vertices_r: HashSet<Vec3> = (0..r.vertices.len()).map(|v| r.point_scaled(v)).collect();
    // arrow of q realising the first frame lift, used to pin down the translation
    let anchor = (0..q.arrows.len())
        .find(|&i| q.lift_scaled(i) == frame[0])
        .unwrap();
    let anchor_point = q.point_scaled(q.arrows[anchor].tail);
    for e0 in &targets {
        if lr[e0] != lq[&frame[0]] {
            continue;
        }
        for e1 in &targets {
            if e1 == e0 || lr[e1] != lq[&frame[1]] {
                continue;
            }
            for e2 in &targets {
                if e2 == e0 || e2 == e1 || lr[e2] != lq[&frame[2]] {
                    continue;
                }
                let em: Mat3 = [
                    [e0[0], e1[0], e2[0]],
                    [e0[1], e1[1], e2[1]],
                    [e0[2], e1[2], e2[2]],
                ];
                let Some(a) = solve_linear(&em, &dm_adj, dm_det) else {
                    continue;
                };
                let det = det3(&a);
                if (det != 1 && det != -1) || !accept(&a) {
                    continue;
                }
                if lq.iter().any(|(l, n)| lr.get(&mat_vec(&a, l)) != Some(n)) {
                    continue;
                }
                let ap = mat_vec(&a, &anchor_point);
                let image_lift = mat_vec(&a, &frame[0]);
                for j in 0..r.arrows.len() {
                    if r.lift_scaled(j) != image_lift {
                        continue;
                    }
                    let target = r.point_scaled(r.arrows[j].tail);
                    let t =
                        reduce_mod([target[0] - ap[0], target[1] - ap[1], target[2] - ap[2]], d);
                    let image_vertices: HashSet<Vec3> = (0..q.vertices.len())
                        .map(|v| {
                            let p = mat_vec(&a, &q.point_scaled(v));
                            reduce_mod([p[0] + t[0], p[1] + t[1], p[2] + t[2]], d)
                        })
                        .collect();
                    if image_vertices != vertices_r {
                        continue;
                    }
                    if arrow_profile(q, Some((&a, &t))) == profile_r {
                        return Ok(Some(AffineMap {
                            a,
                            t: RationalVec3::from_scaled(t, d),
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}

fn find_frame(lifts: &[Vec3]) -> Option<[Vec3; 3]> {
    for (i, a) in lifts.iter().enumerate() {
        for (j, b) in lifts.iter().enumerate().skip(i + 1) {
            for c in lifts.iter().skip(j + 1) {
                if det3(&[*a, *b, *c]) != 0 {
                    return Some([*a, *b, *c]);
                }
            }
        }
    }
    None
}

/// `E · Dm⁻¹` when integral, given `adj(Dm)` and `det(Dm)`.
fn solve_linear(em: &Mat3, dm_adj: &Mat3, dm_det: i128) -> Option<Mat3> {
    let mut a = [[0i64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let num: i128 = (0..3)
                .map(|l| em[i][l] as i128 * dm_adj[l][j] as i128)
                .sum();
            if num % dm_det != 0 {
                return None;
            }
            a[i][j] = i64::try_from(num / dm_det).ok()?;
        }
    }
    Some(a)
}

/// Canonical key of the rebasing orbit of a modifying set. Rebasing at any
/// member translates the quiver, so equal keys imply affine equivalence.
pub fn rebasing_key(data: &ToricData, set: &ModifyingSet) -> ModifyingSet {
    set.members()
        .iter()
        .map(|b| set.rebased(data, b))
        .min()
        .expect("modifying sets are nonempty")
}

/// Partition of the maximal modifying sets into affine equivalence classes.
#[derive(Clone, Debug, Serialize)]
pub struct NccrClasses {
    /// Raw class index of each modifying set.
    pub class_of: Vec<usize>,
    /// For each raw class, the index of its first modifying set.
    pub representatives: Vec<usize>,
    /// For each raw class, the raw class of its opposite quiver.
    pub opposite: Vec<usize>,
}

impl NccrClasses {
    pub fn raw_count(&self) -> usize {
        self.representatives.len()
    }

    /// Raw classes after identifying each class with its opposite; the flag is
    /// set when a class differs from its opposite.
    pub fn mod_opposite(&self) -> Vec<(usize, bool)> {
        (0..self.raw_count())
            .filter(|&c| self.opposite[c] >= c)
            .map(|c| (c, self.opposite[c] != c))
            .collect()
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Classifies the quivers of all modifying sets up to affine equivalence.
/// `sets[i]` must have quiver `quivers[i]`, and the list must be closed under
/// taking duals (as the full list of maximal modifying sets is).
pub fn dedup_nccrs(
    data: &ToricData,
    sets: &[ModifyingSet],
    quivers: &[EmbeddedQuiver],
) -> Result<NccrClasses, QuiverError> {
    let n = sets.len();
    let keys: Vec<ModifyingSet> = sets.par_iter().map(|s| rebasing_key(data, s)).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut first_of_key: HashMap<&ModifyingSet, usize> = HashMap::new();
    let mut orbit_reps = Vec::new();
    for (i, key) in keys.iter().enumerate() {
        match first_of_key.get(key) {
            Some(&j) => parent[i] = j,
            None => {
                first_of_key.insert(key, i);
                orbit_reps.push(i);
            }
        }
    }
    // class representatives among orbit representatives
    let mut class_reps: Vec<usize> = Vec::new();
    for &i in &orbit_reps {
        let hits: Vec<bool> = class_reps
            .par_iter()
            .map(|&j| affine_equivalent(&quivers[i], &quivers[j]).map(|m| m.is_some()))
            .collect::<Result<_, _>>()?;
        match hits.iter().position(|&h| h) {
            Some(p) => parent[i] = class_reps[p],
            None => class_reps.push(i),
        }
    }
    let mut class_index: HashMap<usize, usize> = HashMap::new();
    let mut representatives = Vec::new();
    let mut class_of = vec![0; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        let next = class_index.len();
        let c = *class_index.entry(root).or_insert_with(|| {
            representatives.push(i);
            next
        });
        class_of[i] = c;
    }
    let index_of: HashMap<&ModifyingSet, usize> =
        sets.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let opposite = representatives
        .iter()
        .map(|&i| {
            let dual = sets[i].dual(data);
            let j = *index_of
                .get(&dual)
                .expect("the dual of a maximal modifying set is listed");
            debug_assert_eq!(quivers[j].arrows().len(), quivers[i].arrows().len());
            class_of[j]
        })
        .collect();
    Ok(NccrClasses {
        class_of,
        representatives,
        opposite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cm::enumerate_cm;
    use crate::modmax::{enumerate_mm, CompatibilityGraph};

    fn setup(points: &[[i64; 2]]) -> (ToricData, Vec<ModifyingSet>, Vec<EmbeddedQuiver>) {
        let d = ToricData::from_points(points).unwrap();
        let cm = enumerate_cm(&d).unwrap();
        let mm = enumerate_mm(&CompatibilityGraph::new(&d, &cm));
        let qs = mm.iter().map(|s| build_quiver(&d, s).unwrap()).collect();
        (d, mm, qs)
    }

    #[test]
    fn conifold_quiver() {
        let (_, mm, qs) = setup(&[[0, 0], [1, 0], [1, 1], [0, 1]]);
        assert_eq!(mm[0].members()[1], BVector(vec![0, 1, 1, 1]));
        let q = &qs[0];
        let summary: Vec<(usize, usize, Vec<i64>, Vec3)> = q
            .arrows()
            .iter()
            .map(|a| (a.tail, a.head, a.slack.0.clone(), a.monomial))
            .collect();
        assert_eq!(
            summary,
            vec![
                (0, 1, vec![0, 0, 1, 0], [1, 1, 0]),
                (0, 1, vec![1, 0, 0, 0], [0, 0, 1]),
                (1, 0, vec![0, 0, 0, 1], [-1, 0, 0]),
                (1, 0, vec![0, 1, 0, 0], [0, -1, 0]),
            ]
        );
        q.check_arrow_invariants().unwrap();
    }

    #[test]
    fn c3_quiver() {
        let (_, _, qs) = setup(&[[0, 0], [1, 0], [0, 1]]);
        assert_eq!(qs[0].arrows().len(), 3);
        assert!(qs[0]
            .arrows()
            .iter()
            .all(|a| a.is_loop() && a.weight() == 1));
    }

    #[test]
    fn conifold_is_unique() {
        let (d, mm, qs) = setup(&[[0, 0], [1, 0], [1, 1], [0, 1]]);
        let id = affine_equivalent(&qs[0], &qs[0]).unwrap().unwrap();
        assert_eq!(id.a, [[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        assert!(affine_equivalent(&qs[0], &qs[1]).unwrap().is_some());
        let classes = dedup_nccrs(&d, &mm, &qs).unwrap();
        assert_eq!(classes.raw_count(), 1);
        assert_eq!(classes.mod_opposite(), vec![(0, false)]);
    }

    #[test]
    fn c3_lifts_are_degenerate_free() {
        let (_, _, qs) = setup(&[[0, 0], [1, 0], [0, 1]]);
        assert!(affine_equivalent(&qs[0], &qs[0]).unwrap().is_some());
    }
}
