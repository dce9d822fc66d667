//! `rotodeg` — scenario runner and report emitter.
//!
//! One JSON report per analysis lands in the output directory; exit status
//! is 0 exactly when every requested verification holds and every degree is
//! certified, 1 when a verification fails, 2 on malformed input.

mod svg;

use clap::{Args, Parser, Subcommand};
use rotodeg::report::{round_sig, DegreeReportJson, OrbitJson, SCHEMA_VERSION};
use rotodeg::{
    GeneralizedAnnulus, IntegratorConfig, Region, ScenarioName, ScenarioSpec, TimeVaryingField,
    Vec2,
};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rotodeg", version, about = "Rotation-aware degree analyses for planar periodic ODEs")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run analyses for a scenario and emit machine-checkable reports.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario name (rigid_rotation, example51, linear_system,
    /// duffing_superlinear, asymlin_hamiltonian) or a JSON object
    /// {"name": "...", "params": {...}}.
    scenario: String,

    /// Parameter override `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,

    /// Comma-separated analyses: degree, dee, sigma, decomposition, twist,
    /// locate, maslov, asymptotic_radius.
    #[arg(long, value_delimiter = ',', default_value = "degree,sigma,decomposition")]
    analyses: Vec<String>,

    /// Region specs `ball:cx,cy,r` or `annulus:r_in,r_out` (origin-centered
    /// annulus). Space separated; defaults depend on the scenario.
    #[arg(long, num_args = 0.., value_name = "SPEC")]
    regions: Vec<String>,

    /// Rotation numbers for the dee analysis; defaults to each region's
    /// sigma set.
    #[arg(long, value_delimiter = ',', value_name = "I", allow_hyphen_values = true)]
    rotations: Vec<i64>,

    /// Output directory for reports.
    #[arg(long, default_value = "reports")]
    out: PathBuf,

    /// Comma-separated output formats: json, csv, svg.
    #[arg(long, value_delimiter = ',', default_value = "json")]
    formats: Vec<String>,

    /// Dump the lifted trajectory from `x,y` over one period as CSV;
    /// repeatable. Requires the csv format.
    #[arg(long = "dump-trajectory", value_name = "X,Y")]
    dump_trajectory: Vec<String>,
}

enum CliError {
    /// Malformed input: exit 2.
    Usage(String),
    /// A computation failed outright: exit 1.
    Run(String),
}

impl From<rotodeg::Error> for CliError {
    fn from(e: rotodeg::Error) -> Self {
        match e {
            rotodeg::Error::UnknownScenario(_) | rotodeg::Error::InvalidParams(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Run(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("ROTODEG_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match cli.cmd {
        Command::Run(args) => match run(&args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(CliError::Usage(msg)) => {
                emit_error("usage", &msg);
                ExitCode::from(2)
            }
            Err(CliError::Run(msg)) => {
                emit_error("run", &msg);
                ExitCode::from(1)
            }
        },
    }
}

fn emit_error(kind: &str, message: &str) {
    let doc = json!({"schema": SCHEMA_VERSION, "error": {"kind": kind, "message": message}});
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
}

fn parse_scenario(args: &RunArgs) -> Result<ScenarioSpec, CliError> {
    let mut spec = ScenarioSpec::parse(&args.scenario).map_err(CliError::from)?;
    for pair in &args.params {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--param expects key=value, got `{pair}`")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::Usage(format!("--param {key}: `{value}` is not a number")))?;
        spec.params.insert(key.to_string(), value);
    }
    Ok(spec)
}

fn parse_region(spec: &str) -> Result<Region, CliError> {
    let bad = |why: &str| CliError::Usage(format!("region `{spec}`: {why}"));
    let (kind, rest) = spec.split_once(':').ok_or_else(|| bad("expected kind:args"))?;
    let nums: Vec<f64> = rest
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad("arguments must be numbers"))?;
    match kind {
        "ball" => {
            if nums.len() != 3 {
                return Err(bad("ball takes cx,cy,r"));
            }
            Region::ball(Vec2::new(nums[0], nums[1]), nums[2]).map_err(CliError::from)
        }
        "annulus" => {
            if nums.len() != 2 {
                return Err(bad("annulus takes r_in,r_out"));
            }
            Region::annulus(nums[0], nums[1]).map_err(CliError::from)
        }
        other => Err(bad(&format!("unknown region kind `{other}`"))),
    }
}

fn default_regions(name: ScenarioName) -> Vec<&'static str> {
    match name {
        ScenarioName::RigidRotation => vec!["ball:0,0,2", "ball:5,3,1", "annulus:1,3"],
        ScenarioName::Example51 => vec!["ball:0,0,1", "ball:0,0,4", "annulus:1,4"],
        ScenarioName::LinearSystem => vec!["ball:0,0,1"],
        ScenarioName::DuffingSuperlinear => vec!["ball:0,0,1"],
        ScenarioName::AsymlinHamiltonian => vec!["ball:0,0,1", "ball:0,0,3", "annulus:1,3"],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Analysis {
    Degree,
    Dee,
    Sigma,
    Decomposition,
    Twist,
    Locate,
    Maslov,
    AsymptoticRadius,
}

impl Analysis {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "degree" => Ok(Self::Degree),
            "dee" => Ok(Self::Dee),
            "sigma" => Ok(Self::Sigma),
            "decomposition" => Ok(Self::Decomposition),
            "twist" => Ok(Self::Twist),
            "locate" => Ok(Self::Locate),
            "maslov" => Ok(Self::Maslov),
            "asymptotic_radius" => Ok(Self::AsymptoticRadius),
            other => Err(CliError::Usage(format!("unknown analysis `{other}`"))),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::Degree => "degree",
            Self::Dee => "dee",
            Self::Sigma => "sigma",
            Self::Decomposition => "decomposition",
            Self::Twist => "twist",
            Self::Locate => "locate",
            Self::Maslov => "maslov",
            Self::AsymptoticRadius => "asymptotic_radius",
        }
    }
}

struct AnalysisOutput {
    ok: bool,
    body: Value,
    /// Extra CSV artifacts as (file name, contents).
    csv: Vec<(String, String)>,
}

fn region_label(spec: &str) -> String {
    spec.to_string()
}

fn run(args: &RunArgs) -> Result<bool, CliError> {
    let spec = parse_scenario(args)?;
    let field = rotodeg::build_scenario(&spec).map_err(CliError::from)?;
    let cfg = IntegratorConfig::default();

    let mut analyses: Vec<Analysis> =
        args.analyses.iter().map(|s| Analysis::parse(s)).collect::<Result<_, _>>()?;
    analyses.sort_unstable();
    analyses.dedup();
    if analyses.is_empty() {
        return Err(CliError::Usage("at least one analysis is required".into()));
    }

    let region_specs: Vec<String> = if args.regions.is_empty() {
        default_regions(spec.name).into_iter().map(String::from).collect()
    } else {
        args.regions.clone()
    };
    let regions: Vec<(String, Region)> = region_specs
        .iter()
        .map(|s| Ok((region_label(s), parse_region(s)?)))
        .collect::<Result<_, CliError>>()?;

    let annuli: Vec<(String, GeneralizedAnnulus)> = regions
        .iter()
        .filter_map(|(label, r)| match r {
            Region::Annulus(a) => Some((label.clone(), a.clone())),
            Region::Ball { .. } => None,
        })
        .collect();
    if annuli.is_empty()
        && analyses.iter().any(|a| matches!(a, Analysis::Twist | Analysis::Locate))
    {
        return Err(CliError::Usage(
            "the twist and locate analyses need an annulus region (annulus:r_in,r_out)".into(),
        ));
    }

    let scenario_json = scenario_json(&spec);

    // Analyses run in parallel; results are collected positionally so the
    // report ordering (by analysis name) is deterministic.
    let outputs: Vec<Result<AnalysisOutput, rotodeg::Error>> = {
        use rayon::prelude::*;
        analyses
            .par_iter()
            .map(|a| run_analysis(*a, &field, &cfg, &regions, &annuli, &args.rotations))
            .collect()
    };

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Run(format!("cannot create {}: {e}", args.out.display())))?;

    let want_csv = args.formats.iter().any(|f| f == "csv");
    let want_svg = args.formats.iter().any(|f| f == "svg");

    let mut all_ok = true;
    for (analysis, output) in analyses.iter().zip(outputs) {
        match output {
            Ok(out) => {
                let doc = json!({
                    "schema": SCHEMA_VERSION,
                    "op": analysis.name(),
                    "scenario": scenario_json,
                    "ok": out.ok,
                    "results": out.body,
                });
                write_text(
                    &args.out.join(format!("{}.json", analysis.name())),
                    &serde_json::to_string_pretty(&doc).unwrap(),
                )?;
                if want_csv {
                    for (name, contents) in &out.csv {
                        write_text(&args.out.join(name), contents)?;
                    }
                }
                println!("{}: {}", analysis.name(), if out.ok { "ok" } else { "FAILED" });
                all_ok &= out.ok;
            }
            Err(e) => {
                let doc = json!({
                    "schema": SCHEMA_VERSION,
                    "op": analysis.name(),
                    "scenario": scenario_json,
                    "ok": false,
                    "error": e.to_string(),
                });
                write_text(
                    &args.out.join(format!("{}.json", analysis.name())),
                    &serde_json::to_string_pretty(&doc).unwrap(),
                )?;
                println!("{}: ERROR {e}", analysis.name());
                all_ok = false;
            }
        }
    }

    if want_svg {
        let only_regions: Vec<Region> = regions.iter().map(|(_, r)| r.clone()).collect();
        for (which, file) in [
            (svg::SnapshotMap::DisplacementPlane, "snapshot_ft.svg"),
            (svg::SnapshotMap::DisplacementChart, "snapshot_big_ft.svg"),
        ] {
            let doc = svg::render_snapshot(&field, &only_regions, which, &cfg)
                .map_err(|e| CliError::Run(e.to_string()))?;
            write_text(&args.out.join(file), &doc)?;
        }
    }

    if want_csv {
        for (k, spec_str) in args.dump_trajectory.iter().enumerate() {
            let nums: Vec<f64> = spec_str
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Usage(format!("--dump-trajectory expects x,y, got `{spec_str}`")))?;
            if nums.len() != 2 {
                return Err(CliError::Usage("--dump-trajectory expects x,y".into()));
            }
            let path = rotodeg::evolve_lifted(
                &field,
                Vec2::new(nums[0], nums[1]),
                field.period(),
                &cfg,
            )
            .map_err(CliError::from)?;
            let mut csv = String::from("t,x,y,theta,r\n");
            for i in 0..path.times.len() {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    round_sig(path.times[i], 12),
                    round_sig(path.points[i].x, 12),
                    round_sig(path.points[i].y, 12),
                    round_sig(path.theta[i], 12),
                    round_sig(path.r[i], 12),
                ));
            }
            write_text(&args.out.join(format!("trajectory_{k}.csv")), &csv)?;
        }
    }

    println!("overall: {}", if all_ok { "ok" } else { "FAILED" });
    Ok(all_ok)
}

fn scenario_json(spec: &ScenarioSpec) -> Value {
    let params: serde_json::Map<String, Value> =
        spec.params.iter().map(|(k, v)| (k.clone(), json!(round_sig(*v, 12)))).collect();
    let mut doc = json!({"name": spec.name.as_str(), "params": params});
    if spec.name == ScenarioName::Example51
        && !spec.params.contains_key("tau")
        && !spec.params.contains_key("period")
    {
        doc["notes"] =
            json!(["tau and period defaults are a reconstruction; override with --param"]);
    }
    doc
}

fn write_text(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))
}

fn summary_json(s: &rotodeg::RotationSummary) -> Value {
    json!({
        "min_rot": round_sig(s.min_rot, 12),
        "max_rot": round_sig(s.max_rot, 12),
        "sigma": s.sigma,
        "clearance_to_integers": round_sig(s.clearance_to_integers, 12),
        "grazing": s.grazing(),
    })
}

fn run_analysis(
    analysis: Analysis,
    field: &TimeVaryingField,
    cfg: &IntegratorConfig,
    regions: &[(String, Region)],
    annuli: &[(String, GeneralizedAnnulus)],
    rotations: &[i64],
) -> Result<AnalysisOutput, rotodeg::Error> {
    let mut ok = true;
    let mut csv = Vec::new();
    let body = match analysis {
        Analysis::Degree => {
            let mut rows = Vec::new();
            for (label, region) in regions {
                let report = rotodeg::brouwer_deg_ft(field, region, cfg)?;
                ok &= report.certified;
                rows.push(json!(DegreeReportJson::new("degree", label, &report)));
            }
            json!(rows)
        }
        Analysis::Dee => {
            let mut rows = Vec::new();
            for (label, region) in regions {
                let targets: Vec<i64> = if rotations.is_empty() {
                    rotodeg::degree::sigma_of_region(field, region, cfg)?.sigma
                } else {
                    rotations.to_vec()
                };
                for i in targets {
                    let report = rotodeg::dee_degree(field, region, i, cfg)?;
                    ok &= report.certified;
                    let mut row =
                        serde_json::to_value(DegreeReportJson::new("dee", label, &report)).unwrap();
                    row["rotation"] = json!(i);
                    rows.push(row);
                }
            }
            json!(rows)
        }
        Analysis::Sigma => {
            let mut rows = Vec::new();
            for (label, region) in regions {
                for (k, (curve, _)) in region.boundary_components()?.iter().enumerate() {
                    let summary = rotodeg::sigma_set(field, curve, cfg)?;
                    rows.push(json!({
                        "region": label,
                        "component": k,
                        "summary": summary_json(&summary),
                    }));
                }
            }
            json!(rows)
        }
        Analysis::Decomposition => {
            let mut rows = Vec::new();
            for (label, region) in regions {
                let report = rotodeg::verify_decomposition(field, region, cfg)?;
                ok &= report.holds;
                rows.push(json!({
                    "region": label,
                    "lhs": report.lhs,
                    "rhs": report.rhs,
                    "holds": report.holds,
                    "origin_inside": report.origin_inside,
                    "sigma": summary_json(&report.sigma),
                    "per_i": report.per_i.iter().map(|(i, r)| {
                        json!({"rotation": i, "value": r.value, "certified": r.certified})
                    }).collect::<Vec<_>>(),
                }));
            }
            json!(rows)
        }
        Analysis::Twist => {
            let mut rows = Vec::new();
            for (label, annulus) in annuli {
                let report = rotodeg::check_twist(field, annulus, cfg)?;
                ok &= !report.indeterminate;
                rows.push(json!({
                    "region": label,
                    "twist": report.twist,
                    "indeterminate": report.indeterminate,
                    "sigma_in": summary_json(&report.sigma_in),
                    "sigma_out": summary_json(&report.sigma_out),
                }));
            }
            json!(rows)
        }
        Analysis::Locate => {
            let mut rows = Vec::new();
            for (label, annulus) in annuli {
                let report = rotodeg::find_all(field, annulus, cfg)?;
                ok &= report.inner_obligation_met != Some(false)
                    && report.outer_obligation_met != Some(false)
                    && report.unresolved_cells.is_empty();
                let orbits: Vec<OrbitJson> = report.orbits.iter().map(OrbitJson::from).collect();
                rows.push(json!({
                    "region": label,
                    "twist": report.twist.twist,
                    "deg_inner": report.deg_inner.value,
                    "deg_outer": report.deg_outer.value,
                    "inner_obligation_met": report.inner_obligation_met,
                    "outer_obligation_met": report.outer_obligation_met,
                    "orbits": orbits,
                }));
                // Cell-tree CSV for the candidate rotations, for plotting.
                let mut cells = String::from("rotation,depth,min_x,min_y,max_x,max_y,degree,certified,pruned\n");
                let mut sigma_union: Vec<i64> = report
                    .twist
                    .sigma_in
                    .sigma
                    .iter()
                    .chain(report.twist.sigma_out.sigma.iter())
                    .copied()
                    .collect();
                sigma_union.sort_unstable();
                sigma_union.dedup();
                for i in sigma_union {
                    let tree = rotodeg::localize(
                        field,
                        &Region::Annulus(annulus.clone()),
                        i,
                        12,
                        cfg,
                    )?;
                    let mut stack: Vec<&rotodeg::CellNode> = tree.roots.iter().collect();
                    while let Some(node) = stack.pop() {
                        cells.push_str(&format!(
                            "{},{},{},{},{},{},{},{},{}\n",
                            i,
                            node.depth,
                            round_sig(node.cell.min_x, 12),
                            round_sig(node.cell.min_y, 12),
                            round_sig(node.cell.max_x, 12),
                            round_sig(node.cell.max_y, 12),
                            node.degree,
                            node.certified,
                            node.pruned,
                        ));
                        stack.extend(node.children.iter());
                    }
                }
                csv.push((format!("cells_{}.csv", label.replace(':', "_").replace(',', "_")), cells));
            }
            json!(rows)
        }
        Analysis::Maslov => {
            let l0 = field.lin_zero().ok_or(rotodeg::Error::MissingLinearization("zero"))?;
            // Probe Hamiltonian structure before handing off.
            let sys = {
                let mats: Vec<(f64, rotodeg::Mat2)> =
                    (0..16).map(|k| (field.period() * k as f64 / 16.0, l0(field.period() * k as f64 / 16.0))).collect();
                let j = rotodeg::Mat2::new(0.0, -1.0, 1.0, 0.0);
                let hamiltonian = mats.iter().all(|(_, m)| {
                    let jl = j * m;
                    (jl[(0, 1)] - jl[(1, 0)]).abs() <= 1e-10 * (1.0 + jl.norm())
                });
                if !hamiltonian {
                    return Err(rotodeg::Error::NotHamiltonian);
                }
                let arc = field.clone();
                rotodeg::LinearSystem::new(
                    field.period(),
                    move |t| arc.lin_zero().expect("checked above")(t),
                    true,
                )?
                .with_jump_times(field.jump_times().to_vec())
            };
            let index = rotodeg::maslov_index(&sys, cfg)?;
            let m = rotodeg::monodromy(&sys, cfg)?;
            let degree = rotodeg::linear_degree(&m)?;
            let (lo, hi) = rotodeg::rotation_interval(&sys, cfg)?;
            json!({
                "maslov_index": index,
                "degree": degree,
                "rot_interval": [round_sig(lo, 12), round_sig(hi, 12)],
                "convention": "clockwise rotations counted positive",
            })
        }
        Analysis::AsymptoticRadius => {
            let mut rows = Vec::new();
            for (end, name) in [
                (rotodeg::AsymptoticEnd::Zero, "zero"),
                (rotodeg::AsymptoticEnd::Infinity, "infinity"),
            ] {
                let available = match end {
                    rotodeg::AsymptoticEnd::Zero => field.lin_zero().is_some(),
                    rotodeg::AsymptoticEnd::Infinity => field.lin_inf().is_some(),
                };
                if !available {
                    continue;
                }
                let found = rotodeg::asymptotic_radius(field, end, cfg)?;
                rows.push(json!({
                    "end": name,
                    "radius": round_sig(found.radius, 12),
                    "sigma": found.sigma,
                    "degree": found.degree,
                    "probes": found.trace.len(),
                }));
            }
            if rows.is_empty() {
                return Err(rotodeg::Error::MissingLinearization("zero or infinity"));
            }
            json!(rows)
        }
    };
    Ok(AnalysisOutput { ok, body, csv })
}
