//! Every invariant suite for one polygon, collected into a report.

use std::collections::HashSet;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::Analysis;
use crate::cm::{cm_interval, is_cm, is_cm_by_cells, DEFAULT_MAX_STEPS};
use crate::dimer::{extract_dimer, DimerModel, PerfectMatching};
use crate::lattice::{adj3, det3, dot, mat_vec, BVector, RationalVec3, ToricData, Vec3};
use crate::mutation::{is_mutable, mutate, mutate_dimer, mutation_graph, FaceData};
use crate::quiver::build_quiver;

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random vectors for the CM oracle comparison.
    pub cm_samples: usize,
    /// Random covectors for the charge identities.
    pub covectors: usize,
    pub x: Option<Vec3>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            cm_samples: 10_000,
            covectors: 100,
            x: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

fn record(checks: &mut Vec<Check>, name: &'static str, result: Result<String, String>) {
    let (passed, detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    checks.push(Check {
        name,
        passed,
        detail,
    });
}

/// Runs the pipeline and every suite. Suites that depend on a failed stage
/// are reported as failing with the upstream error.
pub fn verify(data: &ToricData, analysis: &Analysis, opts: &VerifyOptions) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = Vec::new();
    record(
        &mut checks,
        "cm_oracle",
        cm_oracle(data, analysis, opts.cm_samples, &mut rng),
    );
    record(
        &mut checks,
        "cm_laws",
        cm_laws(data, analysis, opts.cm_samples / 10, &mut rng),
    );
    record(&mut checks, "mm_maximality", mm_maximality(data, analysis));
    record(&mut checks, "arrow_invariants", arrow_invariants(analysis));
    let dimers: Result<Vec<DimerModel>, String> = (0..analysis.classes.raw_count())
        .map(|c| analysis.dimer(c).map_err(|e| format!("class {c}: {e}")))
        .collect();
    match dimers {
        Err(e) => {
            for name in [
                "dimer_axioms",
                "rcharge",
                "charge_identities",
                "polygon_recovery",
                "extremal_matchings",
            ] {
                record(&mut checks, name, Err(e.clone()));
            }
        }
        Ok(dimers) => {
            record(
                &mut checks,
                "dimer_axioms",
                Ok(format!("{} class dimers", dimers.len())),
            );
            record(&mut checks, "rcharge", rcharge(&dimers, opts.x));
            record(
                &mut checks,
                "charge_identities",
                charge_identities(data, &dimers, opts.covectors, &mut rng),
            );
            let matchings: Result<Vec<Vec<PerfectMatching>>, String> = dimers
                .iter()
                .map(|d| d.perfect_matchings().map_err(|e| e.to_string()))
                .collect();
            match matchings {
                Err(e) => {
                    record(&mut checks, "polygon_recovery", Err(e.clone()));
                    record(&mut checks, "extremal_matchings", Err(e));
                }
                Ok(m) => {
                    record(
                        &mut checks,
                        "polygon_recovery",
                        polygon_recovery(&dimers, &m),
                    );
                    record(
                        &mut checks,
                        "extremal_matchings",
                        extremal_matchings(&dimers, &m),
                    );
                }
            }
            if data.interior_points().len() == 1 {
                record(&mut checks, "type_labels", type_labels(analysis));
            }
            if parallelogram_index(data).is_some() {
                record(&mut checks, "parallelogram", parallelogram(data, &dimers));
            }
        }
    }
    record(
        &mut checks,
        "mutation_closure",
        mutation_closure(data, analysis),
    );
    VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

fn cm_oracle(
    data: &ToricData,
    a: &Analysis,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<String, String> {
    let known: HashSet<&BVector> = a.cm.iter().collect();
    for b in &a.cm {
        if !data.is_normalized(b) || !is_cm(data, b).is_cm() {
            return Err(format!("listed class {b} is not a normalized CM vector"));
        }
    }
    let k = data.k();
    let mut found = 0;
    for _ in 0..samples {
        let b: Vec<i64> = (0..k).map(|_| rng.gen_range(-5..=5)).collect();
        let fast = is_cm(data, &b).is_cm();
        if fast != is_cm_by_cells(data, &b).is_cm() {
            return Err(format!("CM tests disagree on {}", BVector(b)));
        }
        if fast {
            found += 1;
            if !known.contains(&data.normalized(&b)) {
                return Err(format!(
                    "CM vector {} normalizes outside the class list",
                    BVector(b)
                ));
            }
        }
    }
    Ok(format!(
        "{} classes; {samples} samples agree ({found} CM)",
        a.cm.len()
    ))
}

/// Integer basis of `ker φ`: for `j ≥ 3`, `D e_j - Σ_{i<3} c_i e_i` with
/// `Σ c_i v_i = D v_j`, `D = det[v_0 v_1 v_2]`.
fn kernel_basis(data: &ToricData) -> Vec<Vec<i64>> {
    let r = data.rays();
    let columns = [
        [r[0][0], r[1][0], r[2][0]],
        [r[0][1], r[1][1], r[2][1]],
        [r[0][2], r[1][2], r[2][2]],
    ];
    let d = det3(&columns);
    let adj = adj3(&columns);
    (3..data.k())
        .map(|j| {
            let c = mat_vec(&adj, &r[j]);
            let mut w = vec![0; data.k()];
            w[..3].copy_from_slice(&[-c[0], -c[1], -c[2]]);
            w[j] = d;
            w
        })
        .collect()
}

/// Normalize and shift laws on random vectors, the removal and interval
/// properties on random CM vectors, and non-CM kernel vectors.
fn cm_laws(
    data: &ToricData,
    a: &Analysis,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<String, String> {
    let k = data.k();
    let random_m = |rng: &mut ChaCha8Rng| -> Vec3 { [0; 3].map(|_| rng.gen_range(-4..=4)) };
    for _ in 0..samples {
        let b = BVector((0..k).map(|_| rng.gen_range(-6..=6)).collect());
        let m = random_m(rng);
        let n = data.normalized(&b);
        let shifted = &b + &data.phi_t(&m);
        if data.normalized(&n) != n
            || data.normalized(&shifted) != n
            || !data.kappa(&n).in_unit_cube()
        {
            return Err(format!("normalize laws fail at {b}, m = {m:?}"));
        }
        if data.kappa(&shifted) != data.kappa(&b) + RationalVec3::from_integers(m) {
            return Err(format!("kappa is not affine at {b}"));
        }
        if is_cm(data, &b).is_cm() != is_cm(data, &shifted).is_cm() {
            return Err(format!("CM depends on the representative at {b}"));
        }
    }
    let corollaries = if k > 3 { samples / 10 } else { 0 };
    for _ in 0..corollaries {
        let base = &a.cm[rng.gen_range(0..a.cm.len())];
        let b = base + &data.phi_t(&random_m(rng));
        let j = rng.gen_range(0..k);
        let mut rest = b.0.clone();
        rest.remove(j);
        if !is_cm(&data.without(j), &rest).is_cm() {
            return Err(format!("removing ray {j} from CM vector {b} breaks CM"));
        }
        let interval = cm_interval(data, j, &rest, rng.gen_range(-20..=20), DEFAULT_MAX_STEPS)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("empty interval around CM vector {b}"))?;
        for z in -20..=20 {
            let mut v = rest.clone();
            v.insert(j, z);
            if is_cm(data, &v).is_cm() != interval.contains(&z) {
                return Err(format!(
                    "interval {interval:?} at ray {j} of {b} disagrees with the scan at {z}"
                ));
            }
        }
    }
    let basis = kernel_basis(data);
    let mut kernel = 0;
    for _ in 0..if basis.is_empty() { 0 } else { samples } {
        let mut b = vec![0; k];
        for w in &basis {
            let c = rng.gen_range(-2..=2);
            b.iter_mut().zip(w).for_each(|(x, y)| *x += c * y);
        }
        let g = b.iter().fold(0, |acc, &x| num_integer::gcd(acc, x));
        if g == 0 {
            continue;
        }
        b.iter_mut().for_each(|x| *x /= g);
        if data.phi(&b) != [0, 0, 0] {
            return Err(format!(
                "kernel basis vector {} is not in the kernel",
                BVector(b)
            ));
        }
        if is_cm(data, &b).is_cm() {
            return Err(format!("nonzero kernel vector {} is CM", BVector(b)));
        }
        kernel += 1;
    }
    Ok(format!(
        "{samples} normalize samples, {corollaries} removal and interval samples, {kernel} kernel vectors"
    ))
}

fn mm_maximality(data: &ToricData, a: &Analysis) -> Result<String, String> {
    let known: HashSet<&BVector> = a.cm.iter().collect();
    let compatible = |x: &BVector, y: &BVector| {
        known.contains(&data.normalized(&(x - y))) && known.contains(&data.normalized(&(y - x)))
    };
    let size = a.sets.first().map_or(0, |s| s.len());
    for s in &a.sets {
        if s.len() != size || !s.contains(&BVector::zero(data.k())) {
            return Err(format!(
                "set {:?} has the wrong size or misses 0",
                s.members()
            ));
        }
        for (i, x) in s.members().iter().enumerate() {
            if s.members()[i + 1..].iter().any(|y| !compatible(x, y)) {
                return Err(format!("set {:?} is not modifying", s.members()));
            }
        }
        if let Some(c) =
            a.cm.iter()
                .find(|c| !s.contains(c) && s.members().iter().all(|x| compatible(x, c)))
        {
            return Err(format!("set {:?} extends by {c}", s.members()));
        }
    }
    if size as i64 != data.normalized_area() {
        return Err(format!(
            "sets have {size} members, polygon area is {}",
            data.normalized_area()
        ));
    }
    Ok(format!("{} sets of size {size}", a.sets.len()))
}

fn arrow_invariants(a: &Analysis) -> Result<String, String> {
    for (i, q) in a.quivers.iter().enumerate() {
        q.check_arrow_invariants()
            .map_err(|e| format!("set {i}: {e}"))?;
    }
    let arrows: usize = a.quivers.iter().map(|q| q.arrows().len()).sum();
    Ok(format!("{arrows} arrows in {} quivers", a.quivers.len()))
}

fn rcharge(dimers: &[DimerModel], x: Option<Vec3>) -> Result<String, String> {
    for (c, d) in dimers.iter().enumerate() {
        let r = d.find_rcharge(x).map_err(|e| format!("class {c}: {e}"))?;
        d.check_rcharge(&r).map_err(|e| format!("class {c}: {e}"))?;
    }
    Ok(format!("positive charges on {} dimers", dimers.len()))
}

/// A covector pairing positively with every ray.
pub fn random_covector(data: &ToricData, rng: &mut impl Rng) -> Vec3 {
    loop {
        let x = [
            rng.gen_range(-20..=20),
            rng.gen_range(-20..=20),
            rng.gen_range(1..=40),
        ];
        if data.rays().iter().all(|v| dot(&x, v) > 0) {
            return x;
        }
    }
}

fn charge_identities(
    data: &ToricData,
    dimers: &[DimerModel],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<String, String> {
    for _ in 0..count {
        let x = random_covector(data, rng);
        for (c, d) in dimers.iter().enumerate() {
            let charges = d.linear_charges(&x).map_err(|e| e.to_string())?;
            d.check_charge_identities(&charges)
                .map_err(|e| format!("class {c}, x = {x:?}: {e}"))?;
        }
    }
    Ok(format!("{count} covectors"))
}

fn polygon_recovery(
    dimers: &[DimerModel],
    matchings: &[Vec<PerfectMatching>],
) -> Result<String, String> {
    for (c, (d, m)) in dimers.iter().zip(matchings).enumerate() {
        d.check_polygon(m).map_err(|e| format!("class {c}: {e}"))?;
    }
    Ok(format!("{} dimers recover the polygon", dimers.len()))
}

fn extremal_matchings(
    dimers: &[DimerModel],
    matchings: &[Vec<PerfectMatching>],
) -> Result<String, String> {
    for (c, (d, m)) in dimers.iter().zip(matchings).enumerate() {
        let q = d.quiver();
        let k = d.data().k();
        let extremal = d.extremal_matchings(m);
        for (i, corner) in extremal.iter().enumerate() {
            if corner.len() != 1 {
                return Err(format!(
                    "class {c}: corner {i} has {} matchings",
                    corner.len()
                ));
            }
        }
        for (a, arrow) in q.arrows().iter().enumerate() {
            let hits: Vec<bool> = extremal.iter().map(|e| e[0].arrows.contains(&a)).collect();
            let from_slack: Vec<bool> = arrow.slack.iter().map(|&s| s == 1).collect();
            if hits != from_slack {
                return Err(format!(
                    "class {c}: arrow {a} lies in extremal matchings {hits:?}, slack {}",
                    arrow.slack
                ));
            }
            let n = hits.iter().filter(|&&h| h).count();
            if n < 1 || n > k - 2 {
                return Err(format!(
                    "class {c}: arrow {a} lies in {n} extremal matchings"
                ));
            }
        }
        for v in 0..q.vertices().len() {
            for i in 0..k {
                // a loop counts once as incoming and once as outgoing
                let total: i64 = q
                    .arrows()
                    .iter()
                    .map(|a| a.slack[i] * ((a.tail == v) as i64 + (a.head == v) as i64))
                    .sum();
                if total != q.in_degree(v) as i64 - 1 {
                    return Err(format!(
                        "class {c}: vertex {v}, corner {i}: slack sum {total}"
                    ));
                }
            }
        }
    }
    Ok(format!("{} dimers", dimers.len()))
}

fn type_labels(a: &Analysis) -> Result<String, String> {
    let mut labels = Vec::new();
    for (c, _) in a.classes.mod_opposite() {
        match a.type_label(c) {
            Ok(Some(l)) => labels.push(l),
            Ok(None) => {
                return Err(format!(
                    "class {c}: type sequence matches no reflexive polygon"
                ))
            }
            Err(e) => return Err(format!("class {c}: {e}")),
        }
    }
    Ok(labels.join(","))
}

/// `|det|` of the edge vectors when the polygon is a parallelogram.
pub fn parallelogram_index(data: &ToricData) -> Option<i64> {
    let r = data.rays();
    if r.len() != 4 || (0..2).any(|i| r[0][i] + r[2][i] != r[1][i] + r[3][i]) {
        return None;
    }
    let u = [r[1][0] - r[0][0], r[1][1] - r[0][1]];
    let w = [r[3][0] - r[0][0], r[3][1] - r[0][1]];
    Some((u[0] * w[1] - u[1] * w[0]).abs())
}

/// Straight arrows of a parallelogram dimer tile the torus by `2|det|`
/// squares, four per vertex, and the diagonal arrows have zero total homology.
pub fn check_parallelogram_dimer(data: &ToricData, d: &DimerModel) -> Result<(), String> {
    let det = parallelogram_index(data).ok_or("not a parallelogram")?;
    let q = d.quiver();
    for v in 0..q.vertices().len() {
        let straight = q
            .arrows()
            .iter()
            .filter(|a| a.weight() == 1 && (a.tail == v || a.head == v))
            .count();
        if straight != 4 {
            return Err(format!("vertex {v} has {straight} straight arrows"));
        }
    }
    let faces = d.straight_faces();
    if faces.len() as i64 != 2 * det || faces.iter().any(|f| f.len() != 4) {
        let lengths: Vec<usize> = faces.iter().map(Vec::len).collect();
        return Err(format!(
            "straight faces have lengths {lengths:?}, expected {} squares",
            2 * det
        ));
    }
    let zero = Ratio::from_integer(0);
    match d.diagonal_homology() {
        Some([x, y]) if x == zero && y == zero => Ok(()),
        h => Err(format!("diagonal homology {h:?}")),
    }
}

fn parallelogram(data: &ToricData, dimers: &[DimerModel]) -> Result<String, String> {
    for (c, d) in dimers.iter().enumerate() {
        check_parallelogram_dimer(data, d).map_err(|e| format!("class {c}: {e}"))?;
    }
    Ok(format!("{} dimers", dimers.len()))
}

fn mutation_closure(data: &ToricData, a: &Analysis) -> Result<String, String> {
    let graph =
        mutation_graph(data, &a.sets, &a.quivers, &a.classes, true).map_err(|e| e.to_string())?;
    let mut count = 0;
    for class in 0..a.classes.raw_count() {
        let (set, q) = a.representative(class);
        let dimer = extract_dimer(q).map_err(|e| format!("class {class}: {e}"))?;
        for v in (0..q.vertices().len()).filter(|&v| is_mutable(q, v)) {
            let fail = |e: String| format!("class {class}, vertex {v}: {e}");
            let next = mutate(data, set, q, v).map_err(|e| fail(e.to_string()))?;
            let next_q = build_quiver(data, &next).map_err(|e| fail(e.to_string()))?;
            let next_dimer = extract_dimer(&next_q).map_err(|e| fail(e.to_string()))?;
            let rewritten = mutate_dimer(&dimer, v).map_err(|e| fail(e.to_string()))?;
            if !rewritten.isomorphic(&FaceData::from(&next_dimer)) {
                return Err(fail("face rewrite disagrees with the module rule".into()));
            }
            let added = next
                .members()
                .iter()
                .find(|b| !set.contains(b))
                .expect("mutation changes one summand");
            let w = next_q.vertex_of(added).expect("new summand is a vertex");
            let back = mutate(data, &next, &next_q, w).map_err(|e| fail(e.to_string()))?;
            if &back != set {
                return Err(fail("double mutation does not return".into()));
            }
            count += 1;
        }
    }
    Ok(format!(
        "{count} mutations; graph on {} nodes, {} edges, {}",
        graph.node_count(),
        graph.edges.len(),
        if graph.connected {
            "connected"
        } else {
            "disconnected"
        }
    ))
}
