use num_rational::Ratio;
use toric_nccr::analysis::Analysis;
use toric_nccr::dimer::{extract_dimer, reflexive_polygons};
use toric_nccr::mutation::{is_mutable, mutate, mutate_dimer, mutation_graph, FaceData};
use toric_nccr::quiver::build_quiver;
use toric_nccr::verify::check_parallelogram_dimer;
use toric_nccr::ToricData;

fn parallelograms() -> Vec<ToricData> {
    [
        vec![[0, 0], [2, 1], [1, 3], [-1, 2]],
        vec![[0, 0], [2, 0], [2, 1], [0, 1]],
        vec![[0, 0], [1, 0], [2, 3], [1, 3]],
    ]
    .iter()
    .map(|p| ToricData::from_points(p).unwrap())
    .collect()
}

#[test]
fn parallelogram_mutations_move_height_by_one_half() {
    let half = Ratio::new(1, 2);
    for data in parallelograms() {
        let a = Analysis::run(&data).unwrap();
        let mut count = 0;
        for (set, q) in a.sets.iter().zip(&a.quivers) {
            for v in (0..q.vertices().len()).filter(|&v| is_mutable(q, v)) {
                let next = mutate(&data, set, q, v).unwrap();
                let added = next.members().iter().find(|b| !set.contains(b)).unwrap();
                let moved = data.kappa(added) - data.kappa(&q.vertices()[v].b);
                let [x, y, z] = *moved.coords();
                assert!(x.is_integer() && y.is_integer(), "{:?}", moved);
                assert!((z - half).is_integer(), "{:?}", moved);
                count += 1;
            }
        }
        assert!(count > 0);
    }
}

#[test]
fn every_parallelogram_dimer_has_the_square_structure() {
    for data in parallelograms() {
        let a = Analysis::run(&data).unwrap();
        for q in &a.quivers {
            check_parallelogram_dimer(&data, &extract_dimer(q).unwrap()).unwrap();
        }
    }
}

#[test]
fn square_tiling_is_reachable_from_every_class() {
    let data = &parallelograms()[0];
    let a = Analysis::run(data).unwrap();
    assert_eq!(a.classes.raw_count(), 5);
    let squares: Vec<usize> = (0..a.classes.raw_count())
        .filter(|&c| {
            let d = a.dimer(c).unwrap();
            d.face_count() == 10 && d.faces().all(|f| f.len() == 4)
        })
        .collect();
    assert_eq!(squares.len(), 1);
    let g = mutation_graph(data, &a.sets, &a.quivers, &a.classes, false).unwrap();
    let start = g.nodes.iter().position(|&c| c == squares[0]).unwrap();
    assert!(g.reachable_from(start).iter().all(|&r| r));
}

#[test]
fn reflexive_mutation_graphs_are_connected() {
    for (name, points) in reflexive_polygons() {
        let data = ToricData::from_points(&points).unwrap();
        let a = Analysis::run(&data).unwrap();
        for mod_opposite in [true, false] {
            let g = mutation_graph(&data, &a.sets, &a.quivers, &a.classes, mod_opposite).unwrap();
            assert!(g.connected, "{name}");
        }
    }
}

#[test]
fn face_rewrite_matches_module_rule_on_every_maximal_set() {
    let mut count = 0;
    for (_, points) in reflexive_polygons()
        .into_iter()
        .filter(|(n, _)| n.as_bytes()[0] <= b'7')
    {
        let data = ToricData::from_points(&points).unwrap();
        let a = Analysis::run(&data).unwrap();
        for (set, q) in a.sets.iter().zip(&a.quivers) {
            let dimer = extract_dimer(q).unwrap();
            for v in (0..q.vertices().len()).filter(|&v| is_mutable(q, v)) {
                let next = build_quiver(&data, &mutate(&data, set, q, v).unwrap()).unwrap();
                let rewritten = mutate_dimer(&dimer, v).unwrap();
                assert!(rewritten.isomorphic(&FaceData::from(&extract_dimer(&next).unwrap())));
                count += 1;
            }
        }
    }
    assert!(count > 100);
}
