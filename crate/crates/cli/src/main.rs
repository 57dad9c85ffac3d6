use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use num_traits::Zero;
use serde_json::{json, Value as Json};

use ruelle_weyl::invariants::{
    calabi, calabi_tree, chi_weighted_sum, hofer_norm, mean_value, morse_points_of_tree, ruelle_levelcount,
    ruelle_morse, ruelle_numeric, ruelle_tree, HoferNorm,
};
use ruelle_weyl::model::{fixtures, MeshDoc, ProfileDoc};
use ruelle_weyl::rational::{fmt_f64, fmt_q, parse_q, q, to_f64, Q};
use ruelle_weyl::reeb::{tree_from_mesh, tree_from_profile, TreeDoc};
use ruelle_weyl::spectral::{audit, extrapolate_limit, fk, place_link, weyl_sequence, WeylInput, WeylMode};
use ruelle_weyl::twists::{prescribe_fk_sequence, sphere_twist_table, twist_t_sequence, Verdict};
use ruelle_weyl::{AxisymmetricProfile, Error, MeasuredReebTree, Result, Support, TriangleMesh, Value};

#[derive(Parser)]
#[command(name = "ruelle-weyl", version, about = "Calabi, Ruelle and link spectral invariants of autonomous Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Output file; `-` writes to stdout.
    #[arg(long, short, global = true, default_value = "-")]
    output: String,
    /// Acceptance tolerance for checked comparisons.
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = positive)]
    tolerance: f64,
    /// Fail with exit code 3 unless every reported inequality is certified.
    #[arg(long, global = true)]
    certify: bool,
    /// Seed for randomized inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

/// A profile, tree or mesh given as a JSON file or a built-in fixture.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct Origin {
    /// JSON profile, tree or mesh.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Built-in profile: ramp, tent, height, zero, smooth-ramp, smooth-tent,
    /// offset-bump, twist, sphere-twist.
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Args)]
struct Source {
    #[command(flatten)]
    origin: Origin,
    /// Treat a mesh or boundaryless tree as disc-supported: its heaviest
    /// vertex at value 0 becomes the boundary.
    #[arg(long)]
    disc: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Disc,
    Sphere,
}

#[derive(Subcommand)]
enum Cmd {
    /// Calabi, Hofer, mean value and every applicable Ruelle route.
    Invariants(Source),
    /// Measured Reeb tree of a profile or mesh.
    Reeb(Source),
    /// Weyl sequence `k f_k - (k+1) Cal` (disc) or `k μ_k - (k+1) ∫H` (sphere) as CSV.
    Weyl {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1)]
        k_min: usize,
        #[arg(long)]
        k_max: usize,
        #[arg(long, default_value_t = 1)]
        k_step: usize,
        /// Defaults to disc for disc-supported inputs.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Use link-placement bounds on the tree instead of exact evaluation.
        #[arg(long)]
        via_tree: bool,
    },
    /// Monotone link placement with audit, as JSON.
    LinkPlace {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        k: usize,
    },
    /// Disc twist certificate `2(k f_k - (k+1) Cal) ≤ -sqrt(k+1)` as CSV.
    TwistDemo {
        #[arg(long, default_value_t = 7)]
        k_min: usize,
        #[arg(long, default_value_t = 1000)]
        k_max: usize,
    },
    /// Sphere twist growth of `(2^k - 1) g_k` as CSV.
    SphereTwist {
        #[arg(long, default_value_t = 2)]
        k_min: u32,
        #[arg(long, default_value_t = 40)]
        k_max: u32,
    },
    /// Profile with prescribed `f_2, ..., f_K`.
    Prescribe {
        /// JSON array of rationals `[s_2, ..., s_K]`.
        #[arg(long, group = "seq")]
        input: Option<PathBuf>,
        /// Comma-separated rationals `s_2,...,s_K`.
        #[arg(long, group = "seq", allow_hyphen_values = true)]
        values: Option<String>,
        /// `N` random rationals drawn with `--seed`.
        #[arg(long, group = "seq")]
        random: Option<usize>,
    },
    /// Ruelle invariant by integrating the linearized flow.
    RuelleNumeric {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 64)]
        depth: u32,
        #[arg(long, default_value_t = 4)]
        panels: usize,
    },
}

enum Input {
    Profile(AxisymmetricProfile),
    Tree(MeasuredReebTree, bool),
    Mesh(TriangleMesh, bool),
}

/// The disc `{z ≥ 0}` collapses to a vertex at value 0 of mass at least 1/2.
fn with_disc_boundary(t: MeasuredReebTree) -> Result<MeasuredReebTree> {
    if t.boundary().is_some() {
        return Ok(t);
    }
    let b = t
        .vertices()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.h.is_zero() && v.mass >= q(1, 2))
        .max_by(|a, b| a.1.mass.cmp(&b.1.mass))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Domain("no vertex at value 0 with mass ≥ 1/2; the field is not disc-supported".into()))?;
    t.with_boundary(Some(b))
}

impl Input {
    fn tree(&self) -> Result<MeasuredReebTree> {
        let (t, disc) = match self {
            Input::Profile(p) => return tree_from_profile(p),
            Input::Tree(t, disc) => (t.clone(), *disc),
            Input::Mesh(m, disc) => (tree_from_mesh(m)?, *disc),
        };
        if disc { with_disc_boundary(t) } else { Ok(t) }
    }

    fn profile(&self, what: &str) -> Result<&AxisymmetricProfile> {
        match self {
            Input::Profile(p) => Ok(p),
            _ => Err(Error::Domain(format!("{what} needs an axisymmetric profile"))),
        }
    }
}

fn schema(msg: impl std::fmt::Display) -> Error {
    Error::Schema(msg.to_string())
}

fn read_json(path: &PathBuf) -> Result<Json> {
    let text = fs::read_to_string(path).map_err(|e| schema(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| schema(format!("{}: {e}", path.display())))
}

/// Shape is checked first (exit 2), then the mathematical invariants (exit 1).
fn load(src: &Source) -> Result<Input> {
    if let Some(name) = &src.origin.fixture {
        return fixtures::by_name(name)
            .map(Input::Profile)
            .ok_or_else(|| schema(format!("unknown fixture `{name}`; known: {}", fixtures::NAMES.join(", "))));
    }
    let path = src.origin.input.as_ref().expect("clap enforces one source");
    let v = read_json(path)?;
    let has = |k: &str| v.get(k).is_some();
    if has("pieces") {
        let d: ProfileDoc = serde_json::from_value(v).map_err(schema)?;
        Ok(Input::Profile(d.try_into()?))
    } else if has("triangles") {
        let d: MeshDoc = serde_json::from_value(v).map_err(schema)?;
        Ok(Input::Mesh(d.try_into()?, src.disc))
    } else if has("edges") {
        let d: TreeDoc = serde_json::from_value(v).map_err(schema)?;
        Ok(Input::Tree(d.try_into()?, src.disc))
    } else {
        Err(schema("input is neither a profile (`pieces`), a tree (`edges`) nor a mesh (`triangles`)"))
    }
}

fn value_json(v: &Value) -> Json {
    match v {
        Value::Exact(x) => json!(fmt_q(x)),
        Value::Approx(x) => json!(x),
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn tree_report(t: &MeasuredReebTree) -> Result<Json> {
    let mut r = json!({
        "vertices": t.vertices().len(),
        "edges": t.edges().len(),
        "integral": fmt_q(&t.integral()),
        "chi_weighted_sum": fmt_q(&chi_weighted_sum(t)),
        "critical_values": t.critical_values().iter().map(fmt_q).collect::<Vec<_>>(),
    });
    if t.boundary().is_some() {
        r["calabi"] = json!(fmt_q(&calabi_tree(t)?));
        let mut routes = vec![serde_json::to_value(ruelle_tree(t)?).expect("serializable")];
        if let Ok(m) = morse_points_of_tree(t).and_then(|pts| ruelle_morse(&pts)) {
            routes.push(serde_json::to_value(m).expect("serializable"));
        }
        r["ruelle"] = json!(routes);
    }
    Ok(r)
}

fn invariants(input: &Input) -> Result<String> {
    let report = match input {
        Input::Profile(p) => {
            let mut r = json!({
                "support": p.support(),
                "mean": value_json(&mean_value(p)),
                "hofer": match hofer_norm(p) {
                    HoferNorm::Finite(v) => value_json(&v),
                    HoferNorm::Unbounded => json!("unbounded"),
                },
            });
            if p.support() == Support::Disc {
                r["calabi"] = value_json(&calabi(p)?);
            }
            if !p.is_singular() {
                let t = tree_from_profile(p)?;
                r["tree"] = tree_report(&t)?;
                if p.support() == Support::Disc {
                    let lc = serde_json::to_value(ruelle_levelcount(p)?).expect("serializable");
                    r["tree"]["ruelle"].as_array_mut().expect("disc trees report Ruelle").push(lc);
                }
            }
            r
        }
        other => tree_report(&other.tree()?)?,
    };
    Ok(pretty(&report))
}

fn check_range(k_min: usize, k_max: usize) -> Result<()> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::Domain(format!("need 1 ≤ k_min ≤ k_max, got {k_min}..{k_max}")));
    }
    Ok(())
}

fn verdict_label(v: Verdict, certify: bool) -> &'static str {
    if certify { v.label("certified-divergent") } else { "unchecked" }
}

fn run(cli: &Cli) -> Result<String> {
    match &cli.cmd {
        Cmd::Invariants(src) => invariants(&load(src)?),
        Cmd::Reeb(src) => Ok(pretty(&load(src)?.tree()?)),
        Cmd::Weyl { source, k_min, k_max, k_step, mode, via_tree } => {
            check_range(*k_min, *k_max)?;
            if *k_step == 0 {
                return Err(Error::Domain("k_step must be positive".into()));
            }
            let input = load(source)?;
            let ks: Vec<usize> = (*k_min..=*k_max).step_by(*k_step).collect();
            let tree;
            let (winput, disc) = match (&input, via_tree) {
                (Input::Profile(p), false) => (WeylInput::Profile(p), p.support() == Support::Disc),
                _ => {
                    tree = input.tree()?;
                    (WeylInput::Tree(&tree), tree.boundary().is_some())
                }
            };
            let mode = match mode.unwrap_or(if disc { Mode::Disc } else { Mode::Sphere }) {
                Mode::Disc => WeylMode::Disc,
                Mode::Sphere => WeylMode::Sphere,
            };
            let seq = weyl_sequence(winput, &ks, mode)?;
            if seq.entries.len() >= 4 {
                let ex = extrapolate_limit(&seq.entries)?;
                let target = to_f64(&seq.target);
                log::info!("limit {} ± {} (target {})", fmt_f64(ex.limit), fmt_f64(ex.error), fmt_f64(target));
                if cli.certify && (!ex.converged || (ex.limit - target).abs() > ex.error + cli.tolerance) {
                    return Err(Error::Certification(format!(
                        "extrapolated limit {} ± {} does not reach the target {}",
                        ex.limit, ex.error, target
                    )));
                }
            } else if cli.certify {
                return Err(Error::Certification("at least four terms are needed to extrapolate".into()));
            }
            Ok(seq.to_csv())
        }
        Cmd::LinkPlace { source, k } => {
            let t = load(source)?.tree()?;
            let lp = place_link(&t, *k)?;
            audit(&t, &lp).map_err(|m| Error::Structural(format!("placement audit: {m}")))?;
            Ok(pretty(&lp))
        }
        Cmd::TwistDemo { k_min, k_max } => {
            check_range((*k_min).max(7), *k_max)?;
            let rows = twist_t_sequence(*k_max)?;
            let mut out = String::from("k,value,bound,verdict\n");
            let mut failed = Vec::new();
            for r in rows.iter().filter(|r| r.k >= *k_min) {
                if r.verdict == Verdict::Failed {
                    failed.push(r.k);
                }
                let value = if cli.certify { r.value.hi } else { r.value.mid() };
                let label = verdict_label(r.verdict, cli.certify);
                out.push_str(&format!("{},{},{},{}\n", r.k, fmt_f64(value), fmt_f64(r.bound), label));
            }
            certified(cli, out, &failed)
        }
        Cmd::SphereTwist { k_min, k_max } => {
            check_range((*k_min).max(2) as usize, *k_max as usize)?;
            let rows = sphere_twist_table(*k_max)?;
            let mut out = String::from("k,value,bound,verdict\n");
            let mut failed = Vec::new();
            for r in rows.iter().filter(|r| r.k >= *k_min) {
                if r.verdict == Verdict::Failed {
                    failed.push(r.k as usize);
                }
                let value = if cli.certify { r.value.lo } else { r.value.mid() };
                let label = verdict_label(r.verdict, cli.certify);
                out.push_str(&format!("{},{},{},{}\n", r.k, fmt_f64(value), fmt_f64(r.bound), label));
            }
            certified(cli, out, &failed)
        }
        Cmd::Prescribe { input, values, random } => {
            let seq: Vec<Q> = if let Some(path) = input {
                let raw: Vec<ruelle_weyl::rational::RatStr> =
                    serde_json::from_value(read_json(path)?).map_err(schema)?;
                raw.into_iter().map(|r| r.0).collect()
            } else if let Some(s) = values {
                s.split(',').map(|x| parse_q(x.trim()).map_err(schema)).collect::<Result<_>>()?
            } else if let Some(n) = random {
                let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                (0..*n).map(|_| q(rng.gen_range(-20..=20), rng.gen_range(1..=8))).collect()
            } else {
                return Err(schema("prescribe needs --input, --values or --random"));
            };
            if seq.is_empty() {
                return Err(Error::Domain("the prescribed sequence is empty".into()));
            }
            let p = prescribe_fk_sequence(&seq)?;
            for (j, s) in seq.iter().enumerate() {
                let got = fk(&p, j + 2)?;
                if got.exact() != Some(s) {
                    return Err(Error::Structural(format!("f_{} came out as {:?}, not {}", j + 2, got, fmt_q(s))));
                }
            }
            Ok(pretty(&p))
        }
        Cmd::RuelleNumeric { source, depth, panels } => {
            let input = load(source)?;
            let p = input.profile("the numeric route")?;
            let est = ruelle_numeric(p, *panels, *depth)?;
            let mut r = json!({ "numeric": est });
            if let Ok(exact) = tree_from_profile(p).and_then(|t| ruelle_tree(&t)) {
                let dev = est.value - exact.value;
                r["tree"] = serde_json::to_value(&exact).expect("serializable");
                r["deviation"] = json!(dev);
                if cli.certify && dev.abs() > est.error_bound + cli.tolerance {
                    return Err(Error::Certification(format!(
                        "numeric value deviates from the tree route by {dev:e}, beyond its bound {:e}",
                        est.error_bound
                    )));
                }
            }
            Ok(pretty(&r))
        }
    }
}

/// Writes `out` first so a failed certificate still leaves its table.
fn certified(cli: &Cli, out: String, failed: &[usize]) -> Result<String> {
    if cli.certify && !failed.is_empty() {
        emit(&cli.output, &out)?;
        return Err(Error::Certification(format!("inequality not certified for k in {failed:?}")));
    }
    Ok(out)
}

fn emit(target: &str, text: &str) -> Result<()> {
    let res = if target == "-" {
        std::io::stdout().lock().write_all(text.as_bytes())
    } else {
        fs::write(target, text)
    };
    res.map_err(|e| Error::Domain(format!("cannot write {target}: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli).and_then(|out| emit(&cli.output, &out)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
