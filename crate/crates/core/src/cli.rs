//! Command-line front end. Every command prints one JSON document on stdout;
//! failures print `{"error": {...}}` and map onto the exit codes of
//! [`Error::exit_code`].

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::analysis::{
    asymptotic_limits, gauss_sign_probe, locus_expansion, rank_one_points, trace, trajectory_geometry, GeometricGrid,
    RankOnePoint,
};
use crate::error::{Error, Result};
use crate::germ::{apply_equivalence, random_rotation, rank_of, DiffeoSpec, GermKind, MapGerm};
use crate::normal_form::{classify, monomial_coefficients, reduce, scalar_coefficients, NormalFormData};
use crate::pointwise::{curvature_parabola, focal_conic, form_bundle, umbrella_invariants, whitney_test, Surface};
use crate::report::{conic_svg, jet_terms, mesh_obj, sign_lines, to_json, trace_csv, MeshGrid};

#[derive(Parser, Debug)]
#[command(name = "s1geom", version, about = "Normal forms and invariants of deformations of S1 singularities")]
pub struct Cli {
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GermArgs {
    /// Three expressions in u, v, s separated by `;`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "file")]
    germ: Option<String>,
    /// File holding the three expressions (`;` or newline separated, `#` comments).
    #[arg(long)]
    file: Option<PathBuf>,
    /// Jet order of the normal-form series.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(4..=12))]
    order: u32,
}

impl GermArgs {
    fn load(&self) -> Result<MapGerm> {
        let text = match (&self.germ, &self.file) {
            (Some(t), _) => t.clone(),
            (None, Some(p)) => fs::read_to_string(p)?,
            (None, None) => return Err(Error::Usage("one of --germ or --file is required".into())),
        };
        MapGerm::parse(&text)
    }

    fn order(&self) -> usize {
        self.order as usize
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rank, classification and invariants at one point.
    Analyze {
        #[command(flatten)]
        germ: GermArgs,
        /// Source point `u,v`.
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s: f64,
    },
    /// Reduction to normal form with coefficient tables.
    NormalForm {
        #[command(flatten)]
        germ: GermArgs,
        /// Number of random equivalences applied to test invariance of the coefficients.
        #[arg(long, default_value_t = 0)]
        check_invariance: usize,
    },
    /// Umbrella invariants along `s = -s~^2` and their limits.
    Trace {
        #[command(flatten)]
        germ: GermArgs,
        /// Geometric grid `start:ratio:count` of s~ values.
        #[arg(long, default_value = "0.1:0.5:7", allow_hyphen_values = true)]
        s_tilde_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Focal conics at the rank-one points for one parameter value.
    Focal {
        #[command(flatten)]
        germ: GermArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s: f64,
        /// Use this source point instead of searching `[-2, 2]^2`.
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gaussian curvature signs around the origin.
    GaussProbe {
        #[command(flatten)]
        germ: GermArgs,
        #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
        s_tilde: f64,
        #[arg(long, default_value_t = 16)]
        n_theta: usize,
        #[arg(long, default_value_t = 8)]
        n_k: usize,
    },
    /// Triangulated image of a source rectangle.
    Mesh {
        #[command(flatten)]
        germ: GermArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, default_value = "-1:1", allow_hyphen_values = true)]
        u_range: String,
        #[arg(long, default_value = "-1:1", allow_hyphen_values = true)]
        v_range: String,
        /// Vertex counts `NxM` along u and v.
        #[arg(long, default_value = "50x50")]
        resolution: String,
        /// Also write the sign of the Gaussian curvature at each vertex.
        #[arg(long)]
        k_sign: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_pair(text: &str, sep: char, what: &str) -> Result<[f64; 2]> {
    let bad = || Error::Usage(format!("expected {what}, got {text:?}"));
    let (a, b) = text.split_once(sep).ok_or_else(bad)?;
    Ok([a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?])
}

fn parse_resolution(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::Usage(format!("expected NxM, got {text:?}"));
    let (a, b) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable report")
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<String> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path.display().to_string())
}

fn normal_form_json(nf: &NormalFormData) -> Result<Value> {
    let c = nf.components();
    let rot: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| nf.rotation()[(i, j)]).collect()).collect();
    Ok(json!({
        "order": nf.order(),
        "rotation": rot,
        "source_changes": nf.source_log().iter().map(|s| s.label()).collect::<Vec<_>>(),
        "parameter_normalized": nf.parameter_normalized(),
        "parameter_reversed": nf.parameter_reversed(),
        "classification": value(&classify(nf)),
        "coefficients": value(&scalar_coefficients(nf)),
        "monomials": value(&monomial_coefficients(nf)?),
        "components": {
            "f21": jet_terms(&c.f21),
            "f24": jet_terms(&c.f24),
            "f31": jet_terms(&c.f31),
            "f32": jet_terms(&c.f32),
            "f33": jet_terms(&c.f33),
            "f34": jet_terms(&c.f34),
        },
        "normal_form": nf.to_map_germ().to_string(),
    }))
}

fn reduce_normalized(f: &MapGerm, order: usize) -> Result<NormalFormData> {
    reduce(f, order)?.normalize_parameter()
}

/// Rank, classification and invariants of `f(., ., s)` at `point`.
pub fn analyze_report(f: &MapGerm, order: usize, point: [f64; 2], s: f64) -> Result<Value> {
    let [u, v] = point;
    let fr = f.frame(u, v, s)?;
    let rank = rank_of(&fr.fu, &fr.fv);
    let mut out = Map::new();
    let mut notes: Vec<String> = Vec::new();
    out.insert("germ".into(), json!(f.to_string()));
    out.insert("point".into(), json!([u, v]));
    out.insert("s".into(), json!(s));
    out.insert("rank".into(), json!(rank));
    let status = match rank {
        2 => {
            notes.push("regular point: no singular point here".into());
            out.insert("forms".into(), value(&form_bundle(&fr)));
            "regular".to_string()
        }
        0 => "rank0".to_string(),
        _ => {
            let whitney = whitney_test(&fr)?;
            out.insert("whitney".into(), json!(whitney));
            out.insert("parabola".into(), value(&curvature_parabola(&fr)?));
            out.insert("conic".into(), value(&focal_conic(&fr)?));
            if whitney {
                let (scalars, inv) = umbrella_invariants(&fr)?;
                out.insert("fundamental_scalars".into(), value(&scalars));
                out.insert("umbrella".into(), value(&inv));
                "umbrella".to_string()
            } else {
                let at_origin = u == 0.0 && v == 0.0 && s == 0.0;
                let g = if at_origin { f.clone() } else { f.translated(u, v, s)? };
                let nf = reduce(&g, order)?;
                let class = classify(&nf);
                out.insert("classification".into(), value(&class));
                out.insert("coefficients".into(), value(&scalar_coefficients(&nf)));
                if at_origin && f.kind() == GermKind::Deformation {
                    match nf.normalize_parameter() {
                        Ok(n) => {
                            out.insert("normalized_coefficients".into(), value(&scalar_coefficients(&n)));
                            if n.parameter_reversed() {
                                notes.push("normalizing the parameter reverses the direction of s".into());
                            }
                        }
                        Err(e) => notes.push(format!("parameter not normalized: {e}")),
                    }
                }
                class.kind.label().to_string()
            }
        }
    };
    out.insert("status".into(), json!(status));
    out.insert("notes".into(), json!(notes));
    Ok(Value::Object(out))
}

/// Normal form, coefficient tables and an optional seeded invariance check.
pub fn normal_form_report(f: &MapGerm, order: usize, checks: usize, seed: u64) -> Result<Value> {
    let base = reduce(f, order)?;
    let mut notes = Vec::new();
    let nf = match base.normalize_parameter() {
        Ok(n) => n,
        Err(e) => {
            notes.push(format!("parameter not normalized: {e}"));
            base
        }
    };
    let mut out = normal_form_json(&nf)?;
    out["germ"] = json!(f.to_string());
    if checks > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reference = scalar_coefficients(&nf);
        let mut worst = 0.0_f64;
        for _ in 0..checks {
            let d = DiffeoSpec::random(&mut rng, 3, 0.5);
            let g = apply_equivalence(f, &d, &random_rotation(&mut rng))?;
            let mut m = reduce(&g, order)?;
            if nf.parameter_normalized() {
                m = m.normalize_parameter()?;
            }
            worst = worst.max(reference.max_abs_diff(&scalar_coefficients(&m)));
        }
        if !nf.parameter_normalized() {
            notes.push("invariance check without parameter normalization compares parametrization-dependent values".into());
        }
        out["invariance"] = json!({ "samples": checks, "seed": seed, "max_deviation": worst });
    }
    out["notes"] = json!(notes);
    Ok(out)
}

/// Invariants along the branch of singular points, with limits. Writes
/// `trace.csv` and `trace.json` when `out_dir` is given.
pub fn trace_report(f: &MapGerm, order: usize, grid: &str, out_dir: Option<&Path>) -> Result<Value> {
    let grid = GeometricGrid::parse(grid)?;
    let nf = reduce_normalized(f, order)?;
    let cs = scalar_coefficients(&nf);
    let table = trace(&nf, &grid.values())?;
    let mut notes = Vec::new();
    let asymptotics = match asymptotic_limits(&table, &cs) {
        Ok(r) => value(&r),
        Err(e @ (Error::Domain(_) | Error::Usage(_))) => {
            notes.push(format!("no extrapolation: {e}"));
            Value::Null
        }
        Err(e) => return Err(e),
    };
    let mut out = json!({
        "germ": f.to_string(),
        "grid": value(&grid),
        "coefficients": value(&cs),
        "expansion": value(&locus_expansion(&cs, &nf)?),
        "trajectory": value(&trajectory_geometry(&nf, &cs)?),
        "rows": value(&table.rows),
        "asymptotics": asymptotics,
        "empty": table.rows.iter().all(|r| r.point.is_none()),
    });
    if let Some(dir) = out_dir {
        let csv = write_file(dir, "trace.csv", &trace_csv(&table))?;
        out["files"] = json!([csv]);
        let report = write_file(dir, "trace.json", &to_json(&out)?)?;
        out["files"] = json!([csv, report]);
    }
    out["notes"] = json!(notes);
    Ok(out)
}

/// Focal conics at the rank-one points of `f(., ., s)`.
pub fn focal_report(f: &MapGerm, s: f64, point: Option<[f64; 2]>, out_dir: Option<&Path>) -> Result<Value> {
    let points = match point {
        Some([u, v]) => {
            let fr = f.frame(u, v, s)?;
            if rank_of(&fr.fu, &fr.fv) != 1 {
                return Err(Error::Domain(format!("({u}, {v}) is not a rank-one point at s = {s}")));
            }
            vec![RankOnePoint {
                u,
                v,
                residual: fr.fu.cross(&fr.fv).norm(),
            }]
        }
        None => rank_one_points(f, s, 2.0, 17)?,
    };
    if points.is_empty() {
        return Err(Error::Domain(format!("no singular point in [-2, 2]^2 at s = {s}")));
    }
    let mut entries = Vec::new();
    let mut conics = Vec::new();
    for p in &points {
        let fr = f.frame(p.u, p.v, s)?;
        let conic = focal_conic(&fr)?;
        let umbrella = whitney_test(&fr)?;
        let mut e = json!({ "point": [p.u, p.v], "residual": p.residual, "umbrella": umbrella, "conic": value(&conic) });
        if umbrella {
            e["invariants"] = value(&umbrella_invariants(&fr)?.1);
        }
        entries.push(e);
        conics.push(conic);
    }
    let selected = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.u.hypot(a.1.v).total_cmp(&b.1.u.hypot(b.1.v)))
        .map(|(i, _)| i)
        .expect("nonempty");
    let mut out = json!({
        "germ": f.to_string(),
        "s": s,
        "points": entries,
        "selected": selected,
        "kind": conics[selected].kind.label(),
    });
    if let Some(dir) = out_dir {
        let title = format!("focal conic at ({}, {}), s = {}", points[selected].u, points[selected].v, s);
        let svg = write_file(dir, "focal.svg", &conic_svg(&conics[selected], &title))?;
        out["files"] = json!([svg]);
        let report = write_file(dir, "focal.json", &to_json(&out)?)?;
        out["files"] = json!([svg, report]);
    }
    Ok(out)
}

pub fn gauss_probe_report(f: &MapGerm, order: usize, s_tilde: f64, n_theta: usize, n_k: usize) -> Result<Value> {
    let nf = reduce_normalized(f, order)?;
    let cs = scalar_coefficients(&nf);
    Ok(value(&gauss_sign_probe(&nf, &cs, s_tilde, n_theta, n_k)?))
}

/// Curvature and torsion of the trajectory of singular points.
pub fn trajectory_report(f: &MapGerm, order: usize) -> Result<Value> {
    let nf = reduce_normalized(f, order)?;
    let cs = scalar_coefficients(&nf);
    Ok(value(&trajectory_geometry(&nf, &cs)?))
}

fn mesh_cmd(
    f: &MapGerm,
    s: f64,
    grid: MeshGrid,
    k_sign: bool,
    out_dir: Option<&Path>,
) -> Result<(Value, Option<String>)> {
    let pts = grid.points();
    let mut verts = Vec::with_capacity(pts.len());
    let mut signs = Vec::new();
    for &(u, v) in &pts {
        verts.push(f.eval(u, v, s)?);
        if k_sign {
            let k = form_bundle(&f.frame(u, v, s)?).k;
            signs.push(if k > 0.0 { 1 } else if k < 0.0 { -1 } else { 0 });
        }
    }
    let obj = mesh_obj(&grid, &verts);
    let Some(dir) = out_dir else {
        if k_sign {
            return Err(Error::Usage("--k-sign needs --out".into()));
        }
        return Ok((Value::Null, Some(obj)));
    };
    let mut files = vec![write_file(dir, "mesh.obj", &obj)?];
    if k_sign {
        files.push(write_file(dir, "k_sign.txt", &sign_lines(&signs))?);
    }
    let out = json!({
        "germ": f.to_string(),
        "s": s,
        "grid": value(&grid),
        "vertices": verts.len(),
        "faces": 2 * (grid.nu - 1) * (grid.nv - 1),
        "files": files,
    });
    Ok((out, None))
}

fn dispatch(cli: Cli) -> Result<String> {
    let seed = cli.seed;
    let doc = match cli.command {
        Command::Analyze { germ, point, s } => {
            analyze_report(&germ.load()?, germ.order(), parse_pair(&point, ',', "u,v")?, s)?
        }
        Command::NormalForm { germ, check_invariance } => {
            normal_form_report(&germ.load()?, germ.order(), check_invariance, seed)?
        }
        Command::Trace { germ, s_tilde_grid, out } => {
            trace_report(&germ.load()?, germ.order(), &s_tilde_grid, out.as_deref())?
        }
        Command::Focal { germ, s, point, out } => {
            let point = point.as_deref().map(|p| parse_pair(p, ',', "u,v")).transpose()?;
            focal_report(&germ.load()?, s, point, out.as_deref())?
        }
        Command::GaussProbe { germ, s_tilde, n_theta, n_k } => {
            gauss_probe_report(&germ.load()?, germ.order(), s_tilde, n_theta, n_k)?
        }
        Command::Mesh { germ, s, u_range, v_range, resolution, k_sign, out } => {
            let (nu, nv) = parse_resolution(&resolution)?;
            let grid = MeshGrid::new(
                parse_pair(&u_range, ':', "a:b")?,
                parse_pair(&v_range, ':', "a:b")?,
                nu,
                nv,
            )?;
            match mesh_cmd(&germ.load()?, s, grid, k_sign, out.as_deref())? {
                (_, Some(obj)) => return Ok(obj),
                (doc, None) => doc,
            }
        }
    };
    to_json(&doc)
}

fn error_json(kind: &str, message: &str, code: i32) -> String {
    let doc = json!({ "error": { "kind": kind, "message": message, "exit_code": code } });
    to_json(&doc).unwrap_or_else(|_| format!("{doc}\n"))
}

/// Runs the CLI with `args` (including the program name), writing to `out`.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let _ = out.write_all(error_json("usage", e.to_string().trim(), 2).as_bytes());
            return 2;
        }
    };
    match dispatch(cli) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let code = e.exit_code();
            let _ = out.write_all(error_json(e.kind(), &e.to_string(), code).as_bytes());
            code
        }
    }
}
