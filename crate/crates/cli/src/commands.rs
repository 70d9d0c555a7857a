use std::path::{Path, PathBuf};
use std::time::Instant;

use kpos_core::certify::{
    certify_kpos, marciniak_bound, tensor_spectral_bound, thm31_bound, CertifyOptions,
};
use kpos_core::linalg::ky_fan_norm;
use kpos_core::qmaps::{MapJson, ReprKind};
use kpos_core::rng::{fork, seeded};
use kpos_core::sdp::{decomposability_d, kyfan_sdp, ppt2_joint, ppt2_scan_random, SolverOptions};
use kpos_core::seeds::{catalog, lookup, verify_appendix_d};
use kpos_core::semigroup::{ccp_test, run_workflow, WorkflowConfig};
use kpos_core::{Budget, Tolerances};
use serde_json::{json, Value};

use crate::args::{Command, GlobalArgs, Ppt2Mode, SeedsAction};
use crate::fail::{CliResult, Failure};
use crate::mapref::{resolve_map, resolve_matrix, MapRef};
use crate::report::{ReportBuilder, RunConfig};

/// What a command produced: a full report, or a bare document (`seeds get`).
pub enum Output {
    Report(Value),
    Raw(Value),
}

struct Ctx {
    config: RunConfig,
    report: ReportBuilder,
}

impl Ctx {
    fn tols(&self) -> Tolerances {
        self.config.tolerances
    }

    fn budget(&self) -> Budget {
        self.config.budget
    }

    fn seed(&self) -> u64 {
        self.config.master_seed
    }
}

fn default_samples(cmd: &Command) -> usize {
    match cmd {
        Command::Ppt2 { .. } => 100,
        Command::VerifyAppendixD { .. } => 100_000,
        _ => Budget::default().samples,
    }
}

fn positive<T: PartialOrd + Default + Copy + std::fmt::Display>(flag: &str, v: Option<T>) -> CliResult<Option<T>> {
    match v {
        Some(x) if x <= T::default() => Err(Failure::usage(format!("--{flag} must be positive, got {x}"))),
        other => Ok(other),
    }
}

fn build_config(g: &GlobalArgs, cmd: &Command, master_seed: u64) -> CliResult<RunConfig> {
    let mut tolerances = Tolerances::default();
    if let Some(t) = positive("tol", g.tol)? {
        tolerances.solver_tol = t;
    }
    if let Some(t) = positive("eps-d", g.eps_d)? {
        tolerances.eps_d_rel = t;
    }
    if let Some(t) = positive("eps-psd", g.eps_psd)? {
        tolerances.eps_psd = t;
    }
    let mut budget = Budget::default();
    if let Some(r) = positive("restarts", g.restarts)? {
        budget.restarts = r;
    }
    budget.samples = positive("samples", g.samples)?.unwrap_or_else(|| default_samples(cmd));
    if let Some(n) = positive("grid", g.grid)? {
        budget.grid_points = n;
    }
    Ok(RunConfig {
        master_seed,
        tolerances,
        budget,
        output_path: g.out.clone(),
        threads: positive("threads", g.threads)?,
    })
}

/// Splits `--seed` into the master seed and, for `workflow`, an optional map reference.
fn split_seed(g: &GlobalArgs, cmd: &Command) -> CliResult<(u64, Option<String>)> {
    if let Ok(s) = g.seed.parse::<u64>() {
        return Ok((s, None));
    }
    if matches!(cmd, Command::Workflow { .. }) && MapRef::is_map_ref(&g.seed) {
        return Ok((0, Some(g.seed.clone())));
    }
    Err(Failure::usage(format!("--seed expects an unsigned 64-bit integer, got {:?}", g.seed)))
}

pub fn run(cmd: &Command, g: &GlobalArgs, argv: &[String]) -> CliResult<Output> {
    let (master_seed, seed_map) = split_seed(g, cmd)?;
    let config = build_config(g, cmd, master_seed)?;
    if let Some(n) = config.threads {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let report = ReportBuilder::new(cmd.name(), argv, &config);
    let mut ctx = Ctx { config, report };
    let results = match cmd {
        Command::Test { map, k, reference, inverse } => {
            let m = resolve_map(&map.map, map.d)?;
            ctx.report.input_map("map", &map.map, &m)?;
            let mut opts = CertifyOptions::new(ctx.tols(), ctx.budget());
            if let (Some(r), Some(i)) = (reference, inverse) {
                let rm = resolve_map(r, Some(m.dim()))?;
                let im = resolve_map(i, Some(m.dim()))?;
                ctx.report.input_map("reference", r, &rm)?;
                ctx.report.input_map("inverse", i, &im)?;
                opts.reference = Some((rm, im));
            }
            let verdict = certify_kpos(&m, *k, &opts, &mut seeded(ctx.seed()))?;
            json!({ "verdict": verdict })
        }
        Command::Decomp { map } => {
            let m = resolve_map(&map.map, map.d)?;
            ctx.report.input_map("map", &map.map, &m)?;
            json!({ "decomposition": decomposability_d(&m, &ctx.tols())? })
        }
        Command::Ccp { map } => {
            let m = resolve_map(&map.map, map.d)?;
            ctx.report.input_map("map", &map.map, &m)?;
            json!({ "ccp": ccp_test(&m, ctx.tols().eps_psd)? })
        }
        Command::Kyfan { matrix, map, d, k } => {
            let b = match (matrix, map) {
                (Some(r), None) => {
                    let b = resolve_matrix(r)?;
                    ctx.report
                        .input_value("matrix", json!({ "ref": r, "matrix": kpos_core::qmaps::matrix_to_json(&b) }));
                    b
                }
                (None, Some(r)) => {
                    let m = resolve_map(r, *d)?;
                    ctx.report.input_map("map", r, &m)?;
                    m.choi().clone()
                }
                _ => return Err(Failure::usage("kyfan needs exactly one of --matrix or --map")),
            };
            let sdp = kyfan_sdp(&b, *k, SolverOptions::with_tol(ctx.tols().solver_tol))?;
            let direct = ky_fan_norm(&b, *k)?;
            json!({ "k": k, "sdp": sdp, "direct": direct, "absDiff": (sdp - direct).abs() })
        }
        Command::Workflow { map, d, k, nk, tmax } => {
            let reference = match (map, seed_map) {
                (Some(m), None) => m.clone(),
                (None, Some(s)) => s,
                (Some(_), Some(_)) => {
                    return Err(Failure::usage("give the seed map with either --map or --seed, not both"))
                }
                (None, None) => return Err(Failure::usage("workflow needs a seed map (--map or --seed)")),
            };
            workflow(&mut ctx, &reference, *d, *k, *nk, *tmax)?
        }
        Command::Ppt2 { psi, d, mode } => {
            let m = resolve_map(psi, *d)?;
            ctx.report.input_map("psi", psi, &m)?;
            let tols = ctx.tols();
            let mut out = serde_json::Map::new();
            if matches!(mode, Ppt2Mode::Joint | Ppt2Mode::Both) {
                let j = ppt2_joint(&m, m.dim() as f64, &tols)?;
                out.insert("joint".into(), json!(j));
            }
            if matches!(mode, Ppt2Mode::Scan | Ppt2Mode::Both) {
                let samples = ppt2_scan_random(&m, ctx.budget().samples, &mut seeded(ctx.seed()), &tols)?;
                let max_d = samples.iter().filter_map(|s| s.d_value).fold(None, |a: Option<f64>, v| {
                    Some(a.map_or(v, |a| a.max(v)))
                });
                let failed = samples.iter().filter(|s| s.error.is_some()).count();
                out.insert(
                    "scan".into(),
                    json!({ "samples": samples, "maxDValue": max_d, "failed": failed }),
                );
            }
            Value::Object(out)
        }
        Command::Seeds { action } => match action {
            SeedsAction::List => {
                let entries: Vec<Value> = catalog()
                    .iter()
                    .map(|e| {
                        json!({
                            "name": e.name,
                            "param": e.param,
                            "dim": e.map.dim(),
                            "knownProperties": e.properties,
                        })
                    })
                    .collect();
                json!({ "seeds": entries })
            }
            SeedsAction::Get { name, param } => {
                let e = lookup(name, *param)?;
                let mut v = serde_json::to_value(MapJson::from_map(&e.map, ReprKind::Choi, 1e-12)?)
                    .expect("map json serializes");
                v["name"] = json!(e.name);
                v["param"] = json!(e.param);
                v["knownProperties"] = json!(e.properties);
                return Ok(Output::Raw(v));
            }
        },
        Command::VerifyAppendixD { alpha } => {
            let r = verify_appendix_d(*alpha, ctx.budget().samples, &mut seeded(ctx.seed()))?;
            json!({ "pass": r.pass(), "report": r })
        }
        Command::Bench { map, k } => {
            let m = resolve_map(&map.map, map.d)?;
            ctx.report.input_map("map", &map.map, &m)?;
            let budget = ctx.budget();
            let mut rows = Vec::new();
            for (i, name) in ["marciniak", "thm31", "tensor-spectral"].iter().enumerate() {
                let mut rng = fork(ctx.seed(), i as u64);
                let start = Instant::now();
                let r = match i {
                    0 => marciniak_bound(&m, *k, &budget, &mut rng)?,
                    1 => thm31_bound(&m, *k, &budget, &mut rng)?,
                    _ => tensor_spectral_bound(&m, *k, &budget, &mut rng)?,
                };
                ctx.report.timing(name, start.elapsed().as_secs_f64());
                rows.push(json!({ "method": name, "bounds": r }));
            }
            json!({ "k": k, "methods": rows })
        }
    };
    Ok(Output::Report(ctx.report.finish(results)))
}

fn sibling(out: &Path, index: usize) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    out.with_file_name(format!("{stem}.map{index}.json"))
}

fn workflow(ctx: &mut Ctx, reference: &str, d: Option<usize>, k: usize, nk: usize, tmax: f64) -> CliResult<Value> {
    if !(tmax > 0.0 && tmax.is_finite()) {
        return Err(Failure::usage(format!("--tmax must be positive, got {tmax}")));
    }
    let seed = resolve_map(reference, d)?;
    ctx.report.input_map("seed", reference, &seed)?;
    let cfg = WorkflowConfig {
        k,
        n_k: nk,
        t_max: tmax,
        grid_points: ctx.budget().grid_points,
        certify: CertifyOptions::new(ctx.tols(), ctx.budget()),
    };
    let outputs = run_workflow(&seed, reference, &cfg, &mut seeded(ctx.seed()))?;
    let mut rows = Vec::with_capacity(outputs.len());
    for (i, o) in outputs.iter().enumerate() {
        let mut row = o.trajectory_json()?;
        row["validSeed"] = json!(o.is_valid_seed());
        if let Some(out) = &ctx.config.output_path {
            let path = sibling(out, i);
            let text = serde_json::to_string_pretty(&MapJson::from_map(&o.map, ReprKind::Choi, 1e-12)?)
                .expect("map json serializes");
            std::fs::write(&path, text + "\n")
                .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
            let name = path.file_name().and_then(|s| s.to_str()).unwrap_or_default();
            row["mapFile"] = json!(name);
        }
        rows.push(row);
    }
    let valid = outputs.iter().filter(|o| o.is_valid_seed()).count();
    Ok(json!({ "rows": rows, "validSeeds": valid }))
}
