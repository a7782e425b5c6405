use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use toric_nccr::analysis::Analysis;
use toric_nccr::cm::{enumerate_cm_with, DEFAULT_MAX_STEPS};
use toric_nccr::dimer::{extract_dimer, type_label, DimerModel};
use toric_nccr::lattice::ratio_string;
use toric_nccr::mutation::{is_mutable, mutate, mutate_dimer, mutation_graph, FaceData};
use toric_nccr::quiver::build_quiver;
use toric_nccr::render::{dimer_svg, mutation_dot};
use toric_nccr::verify::{verify, VerifyOptions};
use toric_nccr::{is_cm, CmWitness, Mat3, ToricData, Vec3};

#[derive(Parser)]
#[command(
    name = "toric-nccr",
    version,
    about = "Toric NCCRs and dimer models of 3-dimensional Gorenstein cones"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Polygon file, `{"points": [[x, y], ...]}`.
    input: PathBuf,
    /// Write JSON to this file instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Identify every NCCR class with its opposite.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    mod_opposite: bool,
    /// Cap on CM tests per interval search.
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,
    /// Seed for randomized checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// R-charge covector `a,b,c`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<i64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Normalized graded CM classes.
    CmList {
        #[command(flatten)]
        common: Common,
        /// Test one vector `b1,...,bk` and print its witness.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        witness: Option<Vec<i64>>,
    },
    /// Maximal modifying sets.
    MmSets {
        #[command(flatten)]
        common: Common,
    },
    /// NCCR quivers up to affine equivalence.
    Nccrs {
        #[command(flatten)]
        common: Common,
    },
    /// Dimer models of every NCCR class.
    Dimers {
        #[command(flatten)]
        common: Common,
        /// Directory for `<input>-nccr<i>.svg` drawings.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Mutate one listed NCCR at one vertex.
    Mutate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        nccr: usize,
        #[arg(long)]
        vertex: usize,
    },
    /// Mutation graph on NCCR classes.
    MutationGraph {
        #[command(flatten)]
        common: Common,
        /// Write a DOT graph here.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Run every invariant suite; exit 1 on the first failure.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Random vectors for the CM oracle comparison.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Quotient cone `U·σ`, optionally followed by another command.
    Quotient {
        #[command(flatten)]
        common: Common,
        /// Row-major 3×3 integer matrix.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        u: Vec<i64>,
        #[arg(long, value_enum)]
        then: Option<Then>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Then {
    CmList,
    MmSets,
    Nccrs,
    Dimers,
    MutationGraph,
    Verify,
}

/// Bad files, flags or indices (exit status 2).
#[derive(Debug)]
struct InputError(String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(InputError(msg.into()))
}

/// JSON output plus the first failed check, if any.
struct Outcome {
    json: Value,
    failure: Option<String>,
}

impl Outcome {
    fn ok(json: Value) -> Self {
        Outcome {
            json,
            failure: None,
        }
    }
}

fn load(path: &Path) -> Result<ToricData> {
    let text =
        fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    ToricData::from_json(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn covector(common: &Common) -> Result<Option<Vec3>> {
    match &common.x {
        None => Ok(None),
        Some(v) if v.len() == 3 => Ok(Some([v[0], v[1], v[2]])),
        Some(v) => Err(input_error(format!(
            "--x needs 3 integers, got {}",
            v.len()
        ))),
    }
}

fn analyse(data: &ToricData, common: &Common) -> Result<Analysis> {
    Ok(Analysis::run_with(data, common.max_steps)?)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "polygon".into())
}

fn cm_list(data: &ToricData, common: &Common, witness: Option<&[i64]>) -> Result<Outcome> {
    if let Some(b) = witness {
        if b.len() != data.k() {
            return Err(input_error(format!(
                "--witness needs {} entries, got {}",
                data.k(),
                b.len()
            )));
        }
        let w = match is_cm(data, b) {
            CmWitness::Cm => Value::Null,
            CmWitness::NotCm { point, signature } => {
                json!({"point": point, "signature": signature.to_string()})
            }
        };
        let cm = w.is_null();
        return Ok(Outcome::ok(
            json!({"b": b, "normalized": data.normalized(b), "cm": cm, "witness": w}),
        ));
    }
    let mut classes = enumerate_cm_with(data, common.max_steps)?;
    classes.sort();
    Ok(Outcome::ok(json!({ "classes": classes })))
}

fn mm_sets(data: &ToricData, common: &Common) -> Result<Outcome> {
    let a = analyse(data, common)?;
    let size = a.sets.first().map_or(0, |s| s.len());
    Ok(Outcome::ok(json!({"size": size, "sets": a.sets})))
}

fn nccrs(data: &ToricData, common: &Common) -> Result<Outcome> {
    let a = analyse(data, common)?;
    let listed = a.listed_classes(common.mod_opposite);
    let classes: Vec<Value> = listed
        .iter()
        .map(|&(c, star)| {
            let (set, q) = a.representative(c);
            json!({
                "class": c,
                "asterisk": star,
                "opposite": a.classes.opposite[c],
                "set": set,
                "vertices": q.vertices(),
                "arrows": q.arrows(),
            })
        })
        .collect();
    Ok(Outcome::ok(json!({
        "mod_opposite": common.mod_opposite,
        "count": listed.len(),
        "raw_count": a.classes.raw_count(),
        "classes": classes,
    })))
}

fn dimer_json(d: &DimerModel, x: Option<Vec3>) -> (Value, Option<String>) {
    let mut failure = None;
    let rcharge = match d.find_rcharge(x) {
        Ok(r) => match d.check_rcharge(&r) {
            Ok(()) => {
                json!({"x": r.x, "charges": r.charges.iter().map(ratio_string).collect::<Vec<_>>()})
            }
            Err(e) => {
                failure.get_or_insert(format!("R-charge: {e}"));
                json!({ "error": e })
            }
        },
        Err(e) => {
            failure.get_or_insert(format!("R-charge: {e}"));
            json!({ "error": e.to_string() })
        }
    };
    let (matchings, polygon) = match d.perfect_matchings() {
        Ok(m) => {
            if let Err(e) = d.check_polygon(&m) {
                failure.get_or_insert(e.to_string());
            }
            let polygon = d.recovered_polygon(&m);
            (json!(m), json!(polygon))
        }
        Err(e) => {
            failure.get_or_insert(e.to_string());
            (Value::Null, Value::Null)
        }
    };
    let (sequence, label) = match d.type_sequence() {
        Ok(s) => (json!(s), json!(type_label(&s))),
        Err(_) => (Value::Null, Value::Null),
    };
    let value = json!({
        "vertices": d.quiver().vertices(),
        "arrows": d.quiver().arrows(),
        "faces_pos": d.faces_pos(),
        "faces_neg": d.faces_neg(),
        "rcharge": rcharge,
        "matchings": matchings,
        "polygon": polygon,
        "type_sequence": sequence,
        "type_label": label,
    });
    (value, failure)
}

fn dimers(data: &ToricData, common: &Common, svg: Option<&Path>) -> Result<Outcome> {
    let x = covector(common)?;
    if let Some(x) = x {
        if data
            .rays()
            .iter()
            .any(|v| v[0] * x[0] + v[1] * x[1] + v[2] * x[2] <= 0)
            || x[2] == 0
        {
            return Err(input_error("--x must pair positively with every ray"));
        }
    }
    let a = analyse(data, common)?;
    if let Some(dir) = svg {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut failure = None;
    let mut out = Vec::new();
    for (i, &(c, star)) in a.listed_classes(common.mod_opposite).iter().enumerate() {
        let d = a.dimer(c)?;
        let (mut value, fail) = dimer_json(&d, x);
        if let Some(f) = fail {
            failure.get_or_insert(format!("class {c}: {f}"));
        }
        value["class"] = json!(c);
        value["asterisk"] = json!(star);
        value["set"] = json!(a.representative(c).0);
        if let Some(dir) = svg {
            let path = dir.join(format!("{}-nccr{i}.svg", stem(&common.input)));
            fs::write(&path, dimer_svg(&d))
                .with_context(|| format!("writing {}", path.display()))?;
            value["svg"] = json!(path.file_name().map(|n| n.to_string_lossy().into_owned()));
        }
        out.push(value);
    }
    Ok(Outcome {
        json: json!({ "classes": out }),
        failure,
    })
}

fn mutate_cmd(data: &ToricData, common: &Common, nccr: usize, vertex: usize) -> Result<Outcome> {
    let a = analyse(data, common)?;
    let listed = a.listed_classes(common.mod_opposite);
    let &(class, _) = listed
        .get(nccr)
        .ok_or_else(|| input_error(format!("--nccr {nccr}: only {} classes", listed.len())))?;
    let (set, q) = a.representative(class);
    if vertex >= q.vertices().len() {
        return Err(input_error(format!(
            "--vertex {vertex}: the quiver has {} vertices",
            q.vertices().len()
        )));
    }
    // The zero vertex is mutated after rebasing at another summand, which only translates the quiver.
    let (set, q, target_vertex) = if q.vertices()[vertex].b.is_zero() {
        let base = q
            .vertices()
            .iter()
            .map(|x| &x.b)
            .find(|b| !b.is_zero())
            .ok_or_else(|| input_error("the quiver has a single vertex"))?;
        let moved = set.rebased(data, base);
        let moved_q = build_quiver(data, &moved)?;
        let image = data.normalized(&-base);
        let w = moved_q
            .vertex_of(&image)
            .ok_or_else(|| anyhow!("rebasing lost a summand"))?;
        (moved, moved_q, w)
    } else {
        (set.clone(), q.clone(), vertex)
    };
    if !is_mutable(&q, target_vertex) {
        let why = mutate(data, &set, &q, target_vertex)
            .err()
            .map(|e| e.to_string())
            .unwrap_or_default();
        return Err(input_error(format!(
            "vertex {vertex} cannot be mutated: {why}"
        )));
    }
    let next = mutate(data, &set, &q, target_vertex)?;
    let index = a
        .sets
        .iter()
        .position(|s| *s == next)
        .ok_or_else(|| anyhow!("mutated set is not listed"))?;
    let target = a.classes.class_of[index];
    let node = if common.mod_opposite {
        target.min(a.classes.opposite[target])
    } else {
        target
    };
    let listed_index = listed.iter().position(|&(c, _)| c == node);
    let next_dimer = extract_dimer(&build_quiver(data, &next)?)?;
    let agrees =
        mutate_dimer(&extract_dimer(&q)?, target_vertex)?.isomorphic(&FaceData::from(&next_dimer));
    let failure = (!agrees).then(|| "face rewrite disagrees with the module rule".to_string());
    Ok(Outcome {
        json: json!({
            "nccr": nccr,
            "class": class,
            "vertex": vertex,
            "set": a.representative(class).0,
            "mutated": next,
            "target_class": target,
            "target_nccr": listed_index,
            "face_rewrite_agrees": agrees,
        }),
        failure,
    })
}

fn graph_cmd(data: &ToricData, common: &Common, dot: Option<&Path>) -> Result<Outcome> {
    let a = analyse(data, common)?;
    let g = mutation_graph(data, &a.sets, &a.quivers, &a.classes, common.mod_opposite)?;
    let labels: Vec<String> = g
        .nodes
        .iter()
        .map(|&c| {
            a.type_label(c)
                .ok()
                .flatten()
                .unwrap_or_default()
                .to_string()
        })
        .collect();
    if let Some(path) = dot {
        fs::write(path, mutation_dot(&g, &labels))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let nodes: Vec<Value> = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let label = if labels[i].is_empty() { Value::Null } else { json!(labels[i]) };
            json!({"node": i, "class": c, "asterisk": g.asterisk[i], "label": label, "component": g.component[i]})
        })
        .collect();
    Ok(Outcome::ok(
        json!({"nodes": nodes, "edges": g.edges, "connected": g.connected}),
    ))
}

fn verify_cmd(data: &ToricData, common: &Common, samples: usize) -> Result<Outcome> {
    let opts = VerifyOptions {
        seed: common.seed,
        cm_samples: samples,
        x: covector(common)?,
        ..Default::default()
    };
    let a = analyse(data, common)?;
    let report = verify(data, &a, &opts);
    let failure = report
        .first_failure()
        .map(|c| format!("{}: {}", c.name, c.detail));
    Ok(Outcome {
        json: json!({"input": common.input, "passed": report.passed, "checks": report.checks}),
        failure,
    })
}

fn run_then(then: Then, data: &ToricData, common: &Common) -> Result<Outcome> {
    match then {
        Then::CmList => cm_list(data, common, None),
        Then::MmSets => mm_sets(data, common),
        Then::Nccrs => nccrs(data, common),
        Then::Dimers => dimers(data, common, None),
        Then::MutationGraph => graph_cmd(data, common, None),
        Then::Verify => verify_cmd(data, common, 10_000),
    }
}

fn run(command: &Command) -> Result<(Outcome, &Common)> {
    let (outcome, common) = match command {
        Command::CmList { common, witness } => (
            cm_list(&load(&common.input)?, common, witness.as_deref())?,
            common,
        ),
        Command::MmSets { common } => (mm_sets(&load(&common.input)?, common)?, common),
        Command::Nccrs { common } => (nccrs(&load(&common.input)?, common)?, common),
        Command::Dimers { common, svg } => (
            dimers(&load(&common.input)?, common, svg.as_deref())?,
            common,
        ),
        Command::Mutate {
            common,
            nccr,
            vertex,
        } => (
            mutate_cmd(&load(&common.input)?, common, *nccr, *vertex)?,
            common,
        ),
        Command::MutationGraph { common, dot } => (
            graph_cmd(&load(&common.input)?, common, dot.as_deref())?,
            common,
        ),
        Command::Verify { common, samples } => {
            (verify_cmd(&load(&common.input)?, common, *samples)?, common)
        }
        Command::Quotient { common, u, then } => {
            if u.len() != 9 {
                return Err(input_error(format!(
                    "--u needs 9 integers, got {}",
                    u.len()
                )));
            }
            let m: Mat3 = [[u[0], u[1], u[2]], [u[3], u[4], u[5]], [u[6], u[7], u[8]]];
            let data = load(&common.input)?;
            let quotient = data
                .quotient_cone(&m)
                .map_err(|e| input_error(e.to_string()))?;
            let outcome = match then {
                Some(t) => run_then(*t, &quotient, common)?,
                None => Outcome::ok(json!({"u": m, "points": quotient.points()})),
            };
            (outcome, common)
        }
    };
    Ok((outcome, common))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok((outcome, common)) => {
            let text =
                serde_json::to_string_pretty(&outcome.json).expect("JSON values serialize") + "\n";
            match &common.json {
                Some(path) => {
                    if let Err(e) = fs::write(path, text) {
                        eprintln!("error: writing {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            match outcome.failure {
                None => ExitCode::SUCCESS,
                Some(f) => {
                    eprintln!("check failed: {f}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<InputError>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
