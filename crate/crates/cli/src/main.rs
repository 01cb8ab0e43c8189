//! Batch driver for the 3D-IC placement engine.
//!
//! Subcommands: `transform` turns a planar Bookshelf bundle into a tiered 3D
//! instance, `place` runs the full placement flow, `eval` re-derives metrics
//! and legality from a placement file, and `heatmap` dumps per-slice density
//! and field-magnitude grids. Every `place` run writes a manifest that,
//! together with the inputs, reproduces the run.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fieldplace_core::bookshelf::{
    parse_bookshelf, transform_2d_to_3d, write_bundle_3d, write_placement_3d, ParsedInput,
    Transform3DSpec,
};
use fieldplace_core::density::{solve_field, splat_density_3d, DensityMap3};
use fieldplace_core::eval::evaluate;
use fieldplace_core::flow::{run_flow, FlowConfig, FlowObserver, StageReport};
use fieldplace_core::model::{size_bin_grid, BinGrid3, Instance, Placement};
use fieldplace_core::optim::IterRecord;

#[derive(Parser)]
#[command(
    name = "fieldplace",
    version,
    about = "Electrostatics-driven analytic placement for 3D integrated circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transform a planar Bookshelf bundle into a tiered 3D instance.
    Transform(TransformArgs),
    /// Run the full placement flow on a bundle.
    Place(PlaceArgs),
    /// Evaluate wirelength, vertical interconnects, overflow, and legality.
    Eval(EvalArgs),
    /// Dump per-slice density and field-magnitude matrices.
    Heatmap(HeatmapArgs),
}

#[derive(Args)]
struct TransformArgs {
    /// Input .aux file of a planar bundle.
    input: PathBuf,
    /// Number of silicon tiers to insert.
    #[arg(long, default_value_t = 4)]
    tiers: usize,
    /// Extra whitespace fraction added per tier.
    #[arg(long, default_value_t = 0.10)]
    whitespace: f64,
    /// Output directory for the 3D bundle.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlaceArgs {
    /// Input .aux file (planar or already 3D).
    input: PathBuf,
    /// Tier count for planar inputs; must match tiered inputs when given.
    #[arg(long)]
    tiers: Option<usize>,
    /// Extra whitespace fraction when transforming a planar input.
    #[arg(long, default_value_t = 0.10)]
    whitespace: f64,
    /// Target placement density in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    target_density: f64,
    /// Override the vertical-interconnect weight (capacitance ratio rule
    /// otherwise).
    #[arg(long)]
    vi_weight: Option<f64>,
    /// Standard cells per density bin.
    #[arg(long, default_value_t = 1.0)]
    bin_k: f64,
    #[arg(long, env = "FIELDPLACE_SEED", default_value_t = 1)]
    seed: u64,
    /// Overflow stop for both the 3D and 2D global stages.
    #[arg(long, default_value_t = 0.10)]
    tau_stop: f64,
    /// Write per-stage placement snapshots and density slices.
    #[arg(long)]
    snapshots: bool,
    /// Disable the wirelength force and stop after 3D spreading.
    #[arg(long)]
    density_only: bool,
    /// Preconditioner: "3d" (volume only) or "2d" (nets plus volume).
    #[arg(long, default_value = "3d")]
    precond: String,
    #[arg(long, env = "FIELDPLACE_THREADS", default_value_t = 1)]
    threads: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Input .aux file (3D bundle or planar bundle with --tiers).
    input: PathBuf,
    /// Placement file to evaluate (defaults to the bundle's own .pl).
    #[arg(long)]
    placement: Option<PathBuf>,
    #[arg(long)]
    tiers: Option<usize>,
    #[arg(long, default_value_t = 0.10)]
    whitespace: f64,
    #[arg(long, default_value_t = 1.0)]
    target_density: f64,
    /// Density grid side (sizing rule default).
    #[arg(long)]
    grid: Option<usize>,
    /// Report output directory (stdout too).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HeatmapArgs {
    /// Input .aux file.
    input: PathBuf,
    #[arg(long)]
    placement: Option<PathBuf>,
    #[arg(long)]
    tiers: Option<usize>,
    #[arg(long, default_value_t = 0.10)]
    whitespace: f64,
    #[arg(long, default_value_t = 1.0)]
    target_density: f64,
    #[arg(long)]
    grid: Option<usize>,
    /// Replace the density with a single cosine mode "j,k,l" (test hook).
    #[arg(long)]
    inject_mode: Option<String>,
    /// Output directory for the matrices.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Transform(a) => run(cmd_transform(a)),
        Command::Place(a) => run(cmd_place(a)),
        Command::Eval(a) => run(cmd_eval(a)),
        Command::Heatmap(a) => run(cmd_heatmap(a)),
    };
    std::process::exit(code);
}

fn run(r: Result<i32>) -> i32 {
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

/// Load an instance, transforming planar inputs on the fly.
fn load_instance(
    aux: &Path,
    tiers: Option<usize>,
    whitespace: f64,
    rho_t: f64,
    vi_weight: Option<f64>,
) -> Result<(Instance, Placement)> {
    if !(0.0..1.0).contains(&whitespace) {
        bail!("whitespace fraction {whitespace} outside [0, 1)");
    }
    let parsed = parse_bookshelf(aux, rho_t)?;
    match parsed {
        ParsedInput::Planar(bundle) => {
            let spec = Transform3DSpec {
                tiers: tiers.unwrap_or(1),
                extra_whitespace: whitespace,
                rho_t,
                vi_weight,
            };
            Ok(transform_2d_to_3d(&bundle, &spec)?)
        }
        ParsedInput::ThreeD {
            mut instance,
            placement,
        } => {
            if let Some(t) = tiers {
                if t != instance.region.tiers {
                    bail!(
                        "--tiers {t} conflicts with the input's {} tiers",
                        instance.region.tiers
                    );
                }
            }
            instance.region.rho_t = rho_t;
            if let Some(vi) = vi_weight {
                instance.region.beta.z = vi;
            }
            Ok((instance, placement))
        }
    }
}

fn cmd_transform(a: TransformArgs) -> Result<i32> {
    let parsed = parse_bookshelf(&a.input, 1.0)?;
    let ParsedInput::Planar(bundle) = parsed else {
        bail!("input is already a 3D bundle");
    };
    let spec = Transform3DSpec {
        tiers: a.tiers,
        extra_whitespace: a.whitespace,
        rho_t: 1.0,
        vi_weight: None,
    };
    let (instance, placement) = transform_2d_to_3d(&bundle, &spec)?;
    let files = write_bundle_3d(&a.out, &bundle.name, &instance, &placement)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(0)
}

#[derive(serde::Serialize)]
struct RunManifest<'a> {
    tool: &'a str,
    version: &'a str,
    input: String,
    out_dir: String,
    seed: u64,
    tiers: usize,
    whitespace: f64,
    target_density: f64,
    vi_weight: f64,
    config: &'a FlowConfig,
    stage_wall_ms: Vec<(String, f64)>,
}

struct CliObserver {
    out: PathBuf,
    snapshots: bool,
    logs: std::collections::BTreeMap<String, String>,
    reports: Vec<StageReport>,
}

impl FlowObserver for CliObserver {
    fn iteration(&mut self, stage: &str, rec: &IterRecord) {
        let entry = self.logs.entry(stage.to_string()).or_default();
        entry.push_str(&rec.log_line());
        entry.push('\n');
    }

    fn stage_done(&mut self, report: &StageReport, instance: &Instance, placement: &Placement) {
        self.reports.push(report.clone());
        if self.snapshots {
            let pl_path = self.out.join(format!("snap_{}.pl", report.stage));
            let _ = write_placement_3d(&pl_path, instance, placement);
            if let Ok(grid) = size_bin_grid(1.0 / 4096.0, instance.region.rho_t, 1.0) {
                if let Ok(map) = splat_density_3d(&instance.netlist, placement, &instance.region, grid)
                {
                    let _ = write_density_slices(
                        &self.out,
                        &format!("snap_{}_density", report.stage),
                        &map.rho,
                        grid.m,
                    );
                }
            }
        }
    }
}

fn cmd_place(a: PlaceArgs) -> Result<i32> {
    let precond_nets_plus_volume = match a.precond.as_str() {
        "3d" => false,
        "2d" => true,
        other => bail!("--precond must be '3d' or '2d', got '{other}'"),
    };
    if !(0.0 < a.target_density && a.target_density <= 1.0) {
        bail!("--target-density must lie in (0, 1]");
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;

    let (instance, seed_positions) = load_instance(
        &a.input,
        a.tiers,
        a.whitespace,
        a.target_density,
        a.vi_weight,
    )?;

    let cfg = FlowConfig {
        seed: a.seed,
        tau_stop_3d: a.tau_stop,
        tau_stop_2d: a.tau_stop,
        bin_k: a.bin_k,
        precond_nets_plus_volume,
        density_only: a.density_only,
        threads: a.threads.max(1),
        ..Default::default()
    };

    let mut obs = CliObserver {
        out: a.out.clone(),
        snapshots: a.snapshots,
        logs: Default::default(),
        reports: Vec::new(),
    };
    let started = Instant::now();
    let (placement, reports) = run_flow(&instance, &seed_positions, &cfg, &mut obs)?;
    let wall = started.elapsed().as_secs_f64();

    // Deterministic outputs.
    write_placement_3d(&a.out.join("placement.pl"), &instance, &placement)?;
    for (stage, log) in &obs.logs {
        fs::write(a.out.join(format!("{stage}.log")), log)?;
    }
    let stages_json: Vec<serde_json::Value> = reports
        .iter()
        .map(|r| {
            serde_json::json!({
                "stage": r.stage,
                "hpwl": r.hpwl,
                "vi": r.vi,
                "tau": r.tau,
                "macro_overlap": r.macro_overlap,
                "iterations": r.iterations,
            })
        })
        .collect();
    fs::write(
        a.out.join("stages.json"),
        serde_json::to_string_pretty(&stages_json)?,
    )?;

    let mut legal = true;
    if !a.density_only {
        let grid = eval_grid(&instance, None)?;
        let report = evaluate(&instance, &placement, grid)?;
        fs::write(a.out.join("eval.txt"), report.to_kv_text())?;
        fs::write(
            a.out.join("eval.json"),
            serde_json::to_string_pretty(&report)?,
        )?;
        legal = report.legal;
    }

    // Timing lives only in the manifest so every other artifact is
    // byte-reproducible.
    let manifest = RunManifest {
        tool: "fieldplace",
        version: env!("CARGO_PKG_VERSION"),
        input: a.input.display().to_string(),
        out_dir: a.out.display().to_string(),
        seed: a.seed,
        tiers: instance.region.tiers,
        whitespace: a.whitespace,
        target_density: a.target_density,
        vi_weight: instance.region.beta.z,
        config: &cfg,
        stage_wall_ms: reports
            .iter()
            .map(|r| (r.stage.clone(), r.wall_ms))
            .collect(),
    };
    fs::write(
        a.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;

    let mut stdout = std::io::stdout().lock();
    for r in &reports {
        writeln!(
            stdout,
            "stage {:<12} hpwl {:>14.2} vi {:>8} tau {:.4} om {:.3e} iters {}",
            r.stage,
            r.hpwl,
            r.vi.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
            r.tau,
            r.macro_overlap,
            r.iterations
        )?;
    }
    writeln!(stdout, "total wall time {wall:.2}s")?;
    if !legal {
        eprintln!("final placement is not legal");
        return Ok(3);
    }
    Ok(0)
}

fn eval_grid(instance: &Instance, requested: Option<usize>) -> Result<BinGrid3> {
    if let Some(m) = requested {
        if !m.is_power_of_two() || !(8..=256).contains(&m) {
            bail!("--grid must be a power of two in [8, 256]");
        }
        return Ok(BinGrid3 { m });
    }
    let depth = instance.region.tier_depth();
    let avg = instance
        .netlist
        .average_stdcell_dims()
        .map(|(w, h)| w * h * depth)
        .unwrap_or(1.0 / 4096.0);
    Ok(size_bin_grid(avg, instance.region.rho_t, 1.0)?)
}

fn cmd_eval(a: EvalArgs) -> Result<i32> {
    let (instance, bundled_pl) = load_instance(
        &a.input,
        a.tiers,
        a.whitespace,
        a.target_density,
        None,
    )?;
    let placement = match &a.placement {
        Some(p) => fieldplace_core::bookshelf::read_placement_3d(p, &instance)?,
        None => {
            let mut pl = bundled_pl;
            if pl.tier.is_none() {
                bail!("bundle has no tiered placement; pass --placement");
            }
            pl
        }
    };
    let grid = eval_grid(&instance, a.grid)?;
    let report = evaluate(&instance, &placement, grid)?;
    print!("{}", report.to_kv_text());
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("eval.txt"), report.to_kv_text())?;
        fs::write(dir.join("eval.json"), serde_json::to_string_pretty(&report)?)?;
    }
    Ok(0)
}

fn write_density_slices(dir: &Path, stem: &str, values: &[f64], m: usize) -> Result<()> {
    for l in 0..m {
        let mut text = String::new();
        for j in 0..m {
            let row: Vec<String> = (0..m)
                .map(|k| format!("{:.6e}", values[(j * m + k) * m + l]))
                .collect();
            text.push_str(&row.join(" "));
            text.push('\n');
        }
        fs::write(dir.join(format!("{stem}_z{l}.txt")), text)?;
    }
    Ok(())
}

fn cmd_heatmap(a: HeatmapArgs) -> Result<i32> {
    let (instance, bundled_pl) = load_instance(
        &a.input,
        a.tiers,
        a.whitespace,
        a.target_density,
        None,
    )?;
    let placement = match &a.placement {
        Some(p) => fieldplace_core::bookshelf::read_placement_3d(p, &instance)?,
        None => bundled_pl,
    };
    let grid = eval_grid(&instance, a.grid)?;
    fs::create_dir_all(&a.out)?;

    let mut map = if let Some(mode) = &a.inject_mode {
        let idx: Vec<usize> = mode
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| anyhow!("--inject-mode expects 'j,k,l'"))?;
        if idx.len() != 3 || idx.iter().any(|&v| v >= grid.m) {
            bail!("--inject-mode expects three indices below {}", grid.m);
        }
        let m = grid.m;
        let mut rho = vec![0.0; grid.bins()];
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let at = |b: usize| (b as f64 + 0.5) / m as f64;
                    rho[(j * m + k) * m + l] = (std::f64::consts::PI * idx[0] as f64 * at(j)).cos()
                        * (std::f64::consts::PI * idx[1] as f64 * at(k)).cos()
                        * (std::f64::consts::PI * idx[2] as f64 * at(l)).cos();
                }
            }
        }
        DensityMap3 {
            grid,
            rho,
            mean_removed: true,
        }
    } else {
        splat_density_3d(&instance.netlist, &placement, &instance.region, grid)?
    };

    write_density_slices(&a.out, "density", &map.rho, grid.m)?;
    if !map.mean_removed {
        map.remove_mean();
    }
    let field = solve_field(&map)?;
    let m = grid.m;
    let emag: Vec<f64> = (0..grid.bins())
        .map(|i| {
            (field.ex[i] * field.ex[i] + field.ey[i] * field.ey[i] + field.ez[i] * field.ez[i])
                .sqrt()
        })
        .collect();
    write_density_slices(&a.out, "emag", &emag, m)?;
    println!("wrote {} density and field slices under {}", m, a.out.display());
    Ok(0)
}
