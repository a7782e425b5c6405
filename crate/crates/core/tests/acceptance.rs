//! Acceptance harness: one PASS/FAIL line per criterion.
//!
//! A failing criterion is always printed as FAIL. The process exits nonzero
//! when a failure is not on the `KNOWN` list, when a known failure's observed
//! value changes, or when a known failure starts passing (so the list must be
//! kept current). Set `ACCEPTANCE_STRICT=1` to exit nonzero on any FAIL.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use toric_nccr::analysis::Analysis;
use toric_nccr::dimer::{extract_dimer, reflexive_polygons};
use toric_nccr::mutation::mutation_graph;
use toric_nccr::verify::{check_parallelogram_dimer, verify, VerifyOptions};
use toric_nccr::ToricData;

/// Rows expected per reflexive polygon: the type label of each listed dimer,
/// with `*` where the dimer is not isomorphic to its opposite.
const CENSUS: &[(&str, &[&str])] = &[
    ("3a", &["3a"]),
    ("4a", &["4a", "4c"]),
    ("4b", &["4b"]),
    ("4c", &["4a"]),
    ("5a", &["5a", "5b*"]),
    ("5b", &["5a"]),
    ("6a", &["6b", "6a", "6c", "6c", "6d*"]),
    ("6b", &["6c*", "6b", "6a"]),
    ("6c", &["6b", "6a"]),
    ("6d", &["6a"]),
    ("7a", &["7b*", "7a*", "7a"]),
    ("7b", &["7a"]),
    ("8a", &["8a", "8b", "8c", "8a"]),
    ("8b", &["8b", "8a"]),
    ("8c", &["8a"]),
    ("9a", &["9a"]),
];

/// Failing rows that are understood, with the exact observed value.
const KNOWN: &[(u32, &str, &str)] = &[(4, "6a", "4 [6a 6b 6c* 6d*]"), (5, "6a", "[6a 6b 6c 6d]")];

struct Report {
    criterion: u32,
    title: &'static str,
    rows: Vec<(String, String)>,
    detail: String,
    elapsed: Duration,
    limit: Duration,
}

impl Report {
    fn passed(&self) -> bool {
        self.rows.is_empty() && self.elapsed <= self.limit
    }
}

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(name: &str) -> ToricData {
    let path = fixtures_dir().join(format!("{name}.json"));
    ToricData::from_json(&std::fs::read_to_string(&path).expect("fixture exists"))
        .expect("fixture is valid")
}

fn all_fixtures() -> Vec<(String, ToricData)> {
    let mut names: Vec<String> = std::fs::read_dir(fixtures_dir())
        .expect("fixtures directory")
        .filter_map(|e| {
            e.ok()?
                .path()
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| (n.clone(), fixture(&n)))
        .collect()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn sorted_row(items: impl IntoIterator<Item = String>) -> String {
    let mut v: Vec<String> = items.into_iter().collect();
    v.sort();
    v.join(" ")
}

fn conifold() -> Report {
    let ((rows, detail), elapsed) = timed(|| {
        let a = Analysis::run(&fixture("conifold")).unwrap();
        let listed = a.listed_classes(true);
        let d = a.dimer(listed[0].0).unwrap();
        let q = d.quiver();
        let shape = (
            listed.len(),
            q.vertices().len(),
            q.arrows().len(),
            d.face_count(),
        );
        let squares = d.faces().all(|f| f.len() == 4);
        let detail = format!(
            "{} class, {} vertices, {} arrows, {} faces",
            shape.0, shape.1, shape.2, shape.3
        );
        let rows = if shape == (1, 2, 4, 2) && squares {
            vec![]
        } else {
            vec![("conifold".into(), detail.clone())]
        };
        (rows, detail)
    });
    Report {
        criterion: 1,
        title: "conifold",
        rows,
        detail,
        elapsed,
        limit: Duration::from_secs(1),
    }
}

fn c3() -> Report {
    let ((rows, detail), elapsed) = timed(|| {
        let a = Analysis::run(&fixture("c3")).unwrap();
        let listed = a.listed_classes(true);
        let d = a.dimer(listed[0].0).unwrap();
        let q = d.quiver();
        let loops = q.arrows().iter().filter(|a| a.is_loop()).count();
        let triangles = d.faces().all(|f| f.len() == 3);
        let detail = format!(
            "{} class, {} vertex, {loops} loops of {} arrows, {} faces",
            listed.len(),
            q.vertices().len(),
            q.arrows().len(),
            d.face_count()
        );
        let ok =
            listed.len() == 1 && q.vertices().len() == 1 && loops == 3 && q.arrows().len() == 3;
        let rows = if ok && d.face_count() == 2 && triangles {
            vec![]
        } else {
            vec![("c3".into(), detail.clone())]
        };
        (rows, detail)
    });
    Report {
        criterion: 2,
        title: "C3",
        rows,
        detail,
        elapsed,
        limit: Duration::from_secs(1),
    }
}

fn parallelogram() -> Report {
    let ((rows, detail), elapsed) = timed(|| {
        let data = fixture("para_2_1_m1_2");
        let a = Analysis::run(&data).unwrap();
        let raw = a.classes.raw_count();
        let squares: Vec<usize> = (0..raw)
            .filter(|&c| {
                let d = a.dimer(c).unwrap();
                d.face_count() == 10 && d.faces().all(|f| f.len() == 4)
            })
            .collect();
        let g = mutation_graph(&data, &a.sets, &a.quivers, &a.classes, false).unwrap();
        let reachable = squares.len() == 1 && {
            let start = g.nodes.iter().position(|&c| c == squares[0]).unwrap();
            g.reachable_from(start).iter().all(|&r| r)
        };
        let detail = format!(
            "{raw} classes ({} mod opposite), {} square tiling(s) with 10 faces, graph {}",
            a.listed_classes(true).len(),
            squares.len(),
            if reachable {
                "connected from the squares"
            } else {
                "not connected from the squares"
            }
        );
        let rows = if raw == 5 && reachable {
            vec![]
        } else {
            vec![("para_2_1_m1_2".into(), detail.clone())]
        };
        (rows, detail)
    });
    Report {
        criterion: 3,
        title: "parallelogram",
        rows,
        detail,
        elapsed,
        limit: Duration::from_secs(300),
    }
}

fn reflexive_analyses() -> Vec<(&'static str, Analysis)> {
    reflexive_polygons()
        .into_iter()
        .map(|(name, _)| {
            (
                name,
                Analysis::run(&fixture(&format!("refl_{name}"))).unwrap(),
            )
        })
        .collect()
}

fn labels(a: &Analysis) -> Vec<(String, bool)> {
    a.listed_classes(true)
        .into_iter()
        .map(|(c, star)| (a.type_label(c).unwrap().unwrap_or("?").to_string(), star))
        .collect()
}

fn census(analyses: &[(&'static str, Analysis)], elapsed: Duration) -> Report {
    let mut rows = Vec::new();
    for ((name, a), (row_name, expected)) in analyses.iter().zip(CENSUS) {
        assert_eq!(name, row_name);
        let observed = sorted_row(
            labels(a)
                .into_iter()
                .map(|(l, s)| if s { l + "*" } else { l }),
        );
        let want = sorted_row(expected.iter().map(|s| s.to_string()));
        if observed != want {
            rows.push((
                name.to_string(),
                format!("{} [{observed}]", a.listed_classes(true).len()),
            ));
        }
    }
    let detail = format!("{}/16 rows match counts and asterisks", 16 - rows.len());
    Report {
        criterion: 4,
        title: "reflexive census",
        rows,
        detail,
        elapsed,
        limit: Duration::from_secs(1800),
    }
}

fn type_sequences(analyses: &[(&'static str, Analysis)]) -> Report {
    let (rows, elapsed) = timed(|| {
        let mut rows = Vec::new();
        for ((name, a), (_, expected)) in analyses.iter().zip(CENSUS) {
            let observed = sorted_row(labels(a).into_iter().map(|(l, _)| l));
            let want = sorted_row(expected.iter().map(|s| s.trim_end_matches('*').to_string()));
            if observed != want {
                rows.push((name.to_string(), format!("[{observed}]")));
            }
        }
        rows
    });
    let detail = format!("{}/16 label multisets match", 16 - rows.len());
    Report {
        criterion: 5,
        title: "type sequences",
        rows,
        detail,
        elapsed,
        limit: Duration::MAX,
    }
}

fn connectivity(analyses: &[(&'static str, Analysis)]) -> Report {
    let (rows, elapsed) = timed(|| {
        let mut rows = Vec::new();
        for (name, a) in analyses {
            let g = mutation_graph(&a.data, &a.sets, &a.quivers, &a.classes, true).unwrap();
            if !g.connected {
                rows.push((name.to_string(), format!("components {:?}", g.component)));
            }
        }
        rows
    });
    let detail = format!("{}/16 mutation graphs connected", 16 - rows.len());
    Report {
        criterion: 6,
        title: "mutation connectivity",
        rows,
        detail,
        elapsed,
        limit: Duration::MAX,
    }
}

fn polygon_recovery(fixtures: &[(String, ToricData)]) -> Report {
    let ((rows, count), elapsed) = timed(|| {
        let mut rows = Vec::new();
        let mut count = 0;
        for (name, data) in fixtures {
            let a = Analysis::run(data).unwrap();
            for q in &a.quivers {
                let d = extract_dimer(q).unwrap();
                let result = d
                    .perfect_matchings()
                    .map_err(|e| e.to_string())
                    .and_then(|m| {
                        d.check_polygon(&m).map_err(|e| e.to_string())?;
                        let corners = d.extremal_matchings(&m);
                        if corners.len() == data.k() && corners.iter().all(|c| !c.is_empty()) {
                            Ok(())
                        } else {
                            Err("missing extremal matching".to_string())
                        }
                    });
                count += 1;
                if let Err(e) = result {
                    rows.push((name.clone(), e));
                }
            }
        }
        (rows, count)
    });
    let detail = format!(
        "{} of {count} dimers recover their polygon",
        count - rows.len()
    );
    Report {
        criterion: 7,
        title: "polygon recovery",
        rows,
        detail,
        elapsed,
        limit: Duration::MAX,
    }
}

fn property_suites(fixtures: &[(String, ToricData)]) -> Report {
    let ((rows, checks), elapsed) = timed(|| {
        let mut rows = Vec::new();
        let mut checks = 0;
        for (name, data) in fixtures {
            let a = Analysis::run(data).unwrap();
            let report = verify(data, &a, &VerifyOptions::default());
            checks += report.checks.len();
            if let Some(c) = report.first_failure() {
                rows.push((name.clone(), format!("{}: {}", c.name, c.detail)));
            }
        }
        (rows, checks)
    });
    let detail = format!(
        "{checks} suites over {} fixtures (10^4 CM samples, 100 covectors each)",
        fixtures.len()
    );
    Report {
        criterion: 8,
        title: "property suites",
        rows,
        detail,
        elapsed,
        limit: Duration::from_secs(600),
    }
}

fn parallelogram_structure() -> Report {
    let ((rows, count), elapsed) = timed(|| {
        let mut rows = Vec::new();
        let mut count = 0;
        for name in ["para_2_1_m1_2", "para_2_0_0_1", "para_1_0_1_3"] {
            let data = fixture(name);
            let a = Analysis::run(&data).unwrap();
            for (i, q) in a.quivers.iter().enumerate() {
                count += 1;
                if let Err(e) = check_parallelogram_dimer(&data, &extract_dimer(q).unwrap()) {
                    rows.push((name.to_string(), format!("set {i}: {e}")));
                }
            }
        }
        (rows, count)
    });
    let detail = format!(
        "{} of {count} dimers: squares and zero diagonal homology",
        count - rows.len()
    );
    Report {
        criterion: 9,
        title: "parallelogram structure",
        rows,
        detail,
        elapsed,
        limit: Duration::MAX,
    }
}

fn main() -> ExitCode {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let fixtures = all_fixtures();
    let (analyses, census_time) = timed(reflexive_analyses);
    let reports = vec![
        conifold(),
        c3(),
        parallelogram(),
        census(&analyses, census_time),
        type_sequences(&analyses),
        connectivity(&analyses),
        polygon_recovery(&fixtures),
        property_suites(&fixtures),
        parallelogram_structure(),
    ];
    let mut unexpected = Vec::new();
    for r in &reports {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        let mut line = format!(
            "{status} {} {}: {} ({:.2?})",
            r.criterion, r.title, r.detail, r.elapsed
        );
        if r.elapsed > r.limit {
            line += &format!("; over the {:?} limit", r.limit);
            unexpected.push(format!("criterion {} took {:.2?}", r.criterion, r.elapsed));
        }
        for (key, observed) in &r.rows {
            let known = KNOWN
                .iter()
                .any(|&(c, k, o)| c == r.criterion && k == key && o == observed);
            line += &format!("; {key}: {observed}{}", if known { " (known)" } else { "" });
            if !known {
                unexpected.push(format!("criterion {} row {key}: {observed}", r.criterion));
            }
        }
        println!("{line}");
    }
    for &(c, key, _) in KNOWN {
        let still_failing = reports
            .iter()
            .any(|r| r.criterion == c && r.rows.iter().any(|(k, _)| k == key));
        if !still_failing {
            unexpected.push(format!(
                "known failure {c}/{key} no longer fails; update KNOWN"
            ));
        }
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    println!("{} passed, {failed} failed", reports.len() - failed);
    for u in &unexpected {
        println!("unexpected: {u}");
    }
    if !unexpected.is_empty() || (strict && failed > 0) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
