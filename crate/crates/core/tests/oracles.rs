//! Slow, independent recomputations checked against the fast algorithms.

use std::collections::{BTreeMap, HashSet};

use toric_nccr::cm::{enumerate_cm, is_cm, is_cm_by_cells};
use toric_nccr::dimer::reflexive_polygons;
use toric_nccr::modmax::{
    enumerate_mm, enumerate_mm_by_generations, CompatibilityGraph, ModifyingSet,
};
use toric_nccr::quiver::build_quiver;
use toric_nccr::{BVector, ToricData, Vec3};

fn small_polygons() -> Vec<(String, ToricData)> {
    let mut out: Vec<(String, ToricData)> = reflexive_polygons()
        .into_iter()
        .filter(|(name, _)| name.as_bytes()[0] <= b'6')
        .map(|(name, p)| (name.to_string(), ToricData::from_points(&p).unwrap()))
        .collect();
    for (name, p) in [
        ("conifold", vec![[0, 0], [1, 0], [1, 1], [0, 1]]),
        ("c3", vec![[0, 0], [1, 0], [0, 1]]),
        ("quot_3", vec![[0, 0], [3, 0], [0, 1]]),
        ("para", vec![[0, 0], [2, 0], [2, 1], [0, 1]]),
    ] {
        out.push((name.to_string(), ToricData::from_points(&p).unwrap()));
    }
    out
}

fn each_box_vector(k: usize, r: i64, mut f: impl FnMut(&[i64])) {
    let mut b = vec![-r; k];
    loop {
        f(&b);
        let mut i = 0;
        while i < k && b[i] == r {
            b[i] = -r;
            i += 1;
        }
        if i == k {
            return;
        }
        b[i] += 1;
    }
}

#[test]
fn cm_test_agrees_with_cell_oracle_on_a_box() {
    for (name, data) in small_polygons() {
        let r = if data.k() <= 4 { 3 } else { 2 };
        each_box_vector(data.k(), r, |b| {
            assert_eq!(
                is_cm(&data, b).is_cm(),
                is_cm_by_cells(&data, b).is_cm(),
                "{name} {b:?}"
            );
        });
    }
}

#[test]
fn cm_list_is_the_set_of_normalized_cm_vectors_in_a_box() {
    for (name, data) in small_polygons() {
        let listed: HashSet<BVector> = enumerate_cm(&data).unwrap().into_iter().collect();
        let mut seen = HashSet::new();
        each_box_vector(data.k(), 2, |b| {
            if is_cm_by_cells(&data, b).is_cm() {
                let n = data.normalized(b);
                assert!(
                    listed.contains(&n),
                    "{name}: {b:?} normalizes to unlisted {n:?}"
                );
                seen.insert(n);
            }
        });
        assert!(seen.len() <= listed.len());
    }
}

#[test]
fn clique_search_agrees_with_generations() {
    for (name, data) in small_polygons() {
        let graph = CompatibilityGraph::new(&data, &enumerate_cm(&data).unwrap());
        let mut a = enumerate_mm(&graph);
        let mut b = enumerate_mm_by_generations(&graph);
        a.sort();
        b.sort();
        assert_eq!(a, b, "{name}");
        assert!(
            a.iter().all(|s| s.len() as i64 == data.normalized_area()),
            "{name}"
        );
    }
}

fn hom(data: &ToricData, b: &BVector, c: &BVector, r: i64) -> Vec<Vec3> {
    let mut out = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            for z in -r..=r {
                let m = [x, y, z];
                let pairing = data.phi_t(&m);
                if (0..data.k()).all(|i| pairing[i] >= c[i] - b[i]) {
                    out.push(m);
                }
            }
        }
    }
    out
}

/// Irreducible maps between summands: monomials that are not a composite of
/// two maps through summands, neither of which is an identity.
fn irreducible(
    data: &ToricData,
    set: &ModifyingSet,
    inner: i64,
    outer: i64,
) -> BTreeMap<(usize, usize), Vec<Vec3>> {
    let members = set.members();
    let n = members.len();
    let homs: Vec<Vec<HashSet<Vec3>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    hom(data, &members[i], &members[j], outer)
                        .into_iter()
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut out = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            let mut arrows: Vec<Vec3> = hom(data, &members[i], &members[j], inner)
                .into_iter()
                .filter(|&m| {
                    if i == j && m == [0, 0, 0] {
                        return false;
                    }
                    let factors = (0..n).any(|d| {
                        homs[i][d].iter().any(|&m1| {
                            let m2 = [m[0] - m1[0], m[1] - m1[1], m[2] - m1[2]];
                            let trivial =
                                (d == i && m1 == [0, 0, 0]) || (d == j && m2 == [0, 0, 0]);
                            !trivial && homs[d][j].contains(&m2)
                        })
                    });
                    !factors
                })
                .collect();
            arrows.sort();
            if !arrows.is_empty() {
                out.insert((i, j), arrows);
            }
        }
    }
    out
}

#[test]
fn quiver_arrows_are_the_irreducible_maps() {
    for (name, data) in small_polygons() {
        let graph = CompatibilityGraph::new(&data, &enumerate_cm(&data).unwrap());
        for set in enumerate_mm(&graph) {
            let q = build_quiver(&data, &set).unwrap();
            let mut arrows: BTreeMap<(usize, usize), Vec<Vec3>> = BTreeMap::new();
            for a in q.arrows() {
                arrows.entry((a.tail, a.head)).or_default().push(a.monomial);
            }
            arrows.values_mut().for_each(|v| v.sort());
            let inner = q
                .arrows()
                .iter()
                .flat_map(|a| a.monomial)
                .map(i64::abs)
                .max()
                .unwrap_or(0)
                + 1;
            let oracle = irreducible(&data, &set, inner, 3 * inner + 2);
            assert_eq!(arrows, oracle, "{name} {:?}", set.members());
        }
    }
}
