//! The staged placement pipeline.
//!
//! Initial quadratic placement, 3D mixed-size global placement, tier
//! assignment, simultaneous per-tier 2D mixed-size placement, annealing
//! macro legalization, standard-cell refinement placement (3D then 2D with
//! macros frozen as obstacles), and finally per-tier row legalization with
//! one detailed-placement pass. Fillers are inserted before the first
//! global stage, re-balanced per tier whenever tiers change, and dropped
//! before legalization.

pub mod gp;
pub mod initial;
pub mod legalize;
pub mod sa;

pub use initial::initial_placement;
pub use legalize::{legalize_and_detail, legalize_tier, refine_tier};
pub use sa::{legalize_macros_sa, SaConfig, SaStats};

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::macro_overlap_volume;
use crate::model::{
    size_bin_grid, size_bin_grid_2d, BinGrid2, BinGrid3, Cell, CellKind, Instance, Netlist,
    Placement, Region3D,
};
use crate::optim::{nesterov_solve, IterRecord, NesterovConfig, PrecondMode};
use crate::wirelength::vi_count;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowConfig {
    pub seed: u64,
    pub tau_stop_3d: f64,
    pub tau_stop_2d: f64,
    pub bin_k: f64,
    pub max_iters_3d: usize,
    pub max_iters_2d: usize,
    /// Volume-only preconditioning by default; the nets-plus-volume variant
    /// exists for the ablation comparison.
    pub precond_nets_plus_volume: bool,
    /// Disable the wirelength force and stop after the 3D spreading stage.
    pub density_only: bool,
    pub threads: usize,
    /// Filler dimensions override (normalized); average standard-cell
    /// dimensions otherwise.
    pub filler_dims: Option<(f64, f64)>,
    pub sa_cooling: f64,
    pub sa_moves_per_macro: usize,
    pub sa_t_final_frac: f64,
    pub sa_max_retries: usize,
    /// Stage toggles for ablation runs.
    pub skip_gp2d: bool,
    pub skip_detail: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            seed: 1,
            tau_stop_3d: 0.10,
            tau_stop_2d: 0.10,
            bin_k: 1.0,
            max_iters_3d: 1000,
            max_iters_2d: 1000,
            precond_nets_plus_volume: false,
            density_only: false,
            threads: 1,
            filler_dims: None,
            sa_cooling: 0.95,
            sa_moves_per_macro: 100,
            sa_t_final_frac: 1e-4,
            sa_max_retries: 3,
            skip_gp2d: false,
            skip_detail: false,
        }
    }
}

impl FlowConfig {
    pub fn precond_mode(&self) -> PrecondMode {
        if self.precond_nets_plus_volume {
            PrecondMode::NetsPlusVolume
        } else {
            PrecondMode::VolumeOnly
        }
    }

    fn sa_config(&self) -> SaConfig {
        SaConfig {
            cooling: self.sa_cooling,
            moves_per_macro: self.sa_moves_per_macro,
            t_final_frac: self.sa_t_final_frac,
            initial_accept: 0.5,
            max_retries: self.sa_max_retries,
        }
    }
}

/// Metrics of one completed stage.
#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub stage: String,
    /// Weighted planar wirelength, physical units.
    pub hpwl: f64,
    pub vi: Option<u64>,
    pub tau: f64,
    pub macro_overlap: f64,
    pub iterations: usize,
    pub wall_ms: f64,
}

/// Callbacks for iteration logs and stage snapshots.
pub trait FlowObserver {
    fn iteration(&mut self, _stage: &str, _rec: &IterRecord) {}
    fn stage_done(&mut self, _report: &StageReport, _instance: &Instance, _placement: &Placement) {}
}

/// Ignores everything.
pub struct NoObserver;

impl FlowObserver for NoObserver {}

/// Weighted planar wirelength in physical units.
pub fn physical_hpwl(instance: &Instance, placement: &Placement) -> f64 {
    let beta = &instance.region.beta;
    let (sx, sy) = (instance.scale.sx, instance.scale.sy);
    let mut total = 0.0;
    for net in &instance.netlist.nets {
        if net.pins.is_empty() {
            continue;
        }
        let (mut lx, mut hx) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut ly, mut hy) = (f64::INFINITY, f64::NEG_INFINITY);
        for pin in &net.pins {
            let (px, py) = placement.pin_xy(pin);
            lx = lx.min(px);
            hx = hx.max(px);
            ly = ly.min(py);
            hy = hy.max(py);
        }
        total += net.weight * (beta.x * (hx - lx) * sx + beta.y * (hy - ly) * sy);
    }
    total
}

/// Snap selected movable objects to their closest tier; exact boundary
/// coordinates go to the lower tier. Unselected movables keep any existing
/// assignment; fixed objects always derive their tier from z.
pub fn assign_tiers(
    region: &Region3D,
    netlist: &Netlist,
    placement: &mut Placement,
    select: impl Fn(&Cell) -> bool,
) {
    let n = netlist.cells.len();
    let mut tiers = placement.tier.take().unwrap_or_else(|| vec![0; n]);
    tiers.resize(n, 0);
    for (i, c) in netlist.cells.iter().enumerate() {
        if c.movable {
            if select(c) {
                let t = region.tier_of_z(placement.z[i]);
                tiers[i] = t;
                placement.z[i] = region.tier_center(t);
            }
        } else {
            tiers[i] = region.tier_of_z(placement.z[i]);
        }
    }
    placement.tier = Some(tiers);
}

/// Move standard cells from over-capacity tiers to adjacent tiers until
/// every tier fits its row capacity. Nearest-tier assignment alone can
/// overload a tier: the field equalizes total density but is indifferent to
/// which objects (cells or fillers) provide the mass, so connected cells can
/// crowd the tiers closest to the fixed pads. Cells whose pre-snap z sat
/// closest to the crossing boundary move first, so the displacement stays
/// minimal and deterministic.
pub fn balance_tiers(
    instance: &Instance,
    placement: &mut Placement,
    pre_snap_z: &[f64],
    capacity_margin: f64,
) {
    let nl = &instance.netlist;
    let region = &instance.region;
    let rows = &instance.rows;
    let tiers = region.tiers;
    if tiers < 2 {
        return;
    }
    let tier_of = placement.tier.as_mut().expect("tiers assigned");

    let row_area = (rows.x_max - rows.x_min) * rows.num_rows as f64 * rows.row_height;
    let mut used = vec![0.0; tiers];
    let mut blocked = vec![0.0; tiers];
    let mut std_by_tier: Vec<Vec<usize>> = vec![Vec::new(); tiers];
    for (i, c) in nl.cells.iter().enumerate() {
        let t = tier_of[i].min(tiers - 1);
        if c.movable && c.kind == CellKind::StdCell {
            used[t] += c.area();
            std_by_tier[t].push(i);
        } else if !c.is_filler() && c.area() > 0.0 {
            blocked[t] += c.area();
        }
    }
    let capacity =
        |t: usize, blocked: &[f64]| (capacity_margin * (row_area - blocked[t])).max(0.0);

    loop {
        // Most overloaded tier.
        let Some((src, excess)) = (0..tiers)
            .map(|t| (t, used[t] - capacity(t, &blocked)))
            .filter(|(_, e)| *e > 0.0)
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        else {
            break;
        };
        // Adjacent tier with the most headroom.
        let mut dst = None;
        for cand in [src.wrapping_sub(1), src + 1] {
            if cand >= tiers {
                continue;
            }
            let head = capacity(cand, &blocked) - used[cand];
            if head > 0.0 && dst.map(|(_, h)| head > h).unwrap_or(true) {
                dst = Some((cand, head));
            }
        }
        let Some((dst, _)) = dst else {
            break; // nowhere to move; legalization will report it
        };

        // Candidates sorted by how close their continuous z already was to
        // the destination tier.
        let boundary = region.tier_center(dst);
        std_by_tier[src].sort_by(|&a, &b| {
            let da = (pre_snap_z[a] - boundary).abs();
            let db = (pre_snap_z[b] - boundary).abs();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        let mut moved = 0.0;
        let mut k = 0;
        while moved < excess && k < std_by_tier[src].len() {
            let i = std_by_tier[src][k];
            let a = nl.cells[i].area();
            tier_of[i] = dst;
            placement.z[i] = region.tier_center(dst);
            used[src] -= a;
            used[dst] += a;
            moved += a;
            k += 1;
        }
        let moved_ids: Vec<usize> = std_by_tier[src].drain(..k).collect();
        std_by_tier[dst].extend(moved_ids);
        if k == 0 {
            break;
        }
    }
}

/// Number of fillers for the given whitespace; dimensions of the average
/// standard cell unless overridden.
fn filler_cell(netlist: &Netlist, region: &Region3D, dims: Option<(f64, f64)>) -> Cell {
    let (w, h) = dims
        .or_else(|| netlist.average_stdcell_dims())
        .unwrap_or((region.tier_depth(), region.tier_depth()));
    Cell {
        name: String::new(),
        width: w,
        height: h,
        kind: CellKind::Filler,
        movable: true,
    }
}

/// Insert pin-less filler cells so that total movable volume approaches the
/// target-density share of the placeable volume. Returns the filler count.
pub fn insert_fillers(
    instance: &mut Instance,
    placement: &mut Placement,
    dims: Option<(f64, f64)>,
    rng: &mut ChaCha8Rng,
) -> usize {
    let region = instance.region.clone();
    let depth = region.tier_depth();
    let netlist = &mut instance.netlist;
    let fixed_volume: f64 = netlist
        .cells
        .iter()
        .filter(|c| !c.movable)
        .map(|c| c.volume(depth))
        .sum();
    let movable_volume: f64 = netlist
        .cells
        .iter()
        .filter(|c| c.movable && !c.is_filler())
        .map(|c| c.volume(depth))
        .sum();
    let proto = filler_cell(netlist, &region, dims);
    let filler_volume = proto.volume(depth);
    if filler_volume <= 0.0 {
        return 0;
    }
    let placeable = (1.0 - fixed_volume).max(0.0);
    let target = region.rho_t * placeable - movable_volume;
    let count = if target > 0.0 {
        (target / filler_volume).floor() as usize
    } else {
        0
    };
    let (hw, hh, hd) = (proto.width / 2.0, proto.height / 2.0, depth / 2.0);
    for _ in 0..count {
        let mut c = proto.clone();
        c.name = format!("fill{}", netlist.cells.len());
        netlist.cells.push(c);
        placement.x.push(rng.random_range(hw..=(1.0 - hw).max(hw)));
        placement.y.push(rng.random_range(hh..=(1.0 - hh).max(hh)));
        placement.z.push(rng.random_range(hd..=(1.0 - hd).max(hd)));
        if let Some(t) = placement.tier.as_mut() {
            t.push(0);
        }
    }
    if let Some(t) = placement.tier.as_mut() {
        let region = &instance.region;
        for i in (placement.x.len() - count)..placement.x.len() {
            t[i] = region.tier_of_z(placement.z[i]);
        }
    }
    count
}

/// Adjust filler population per tier after a tier change: fillers keep
/// their positions; deficits are topped up with new fillers on that tier
/// and surpluses drop the most recently added ones.
pub fn rebalance_fillers_per_tier(
    instance: &mut Instance,
    placement: &mut Placement,
    num_real: usize,
    dims: Option<(f64, f64)>,
    rng: &mut ChaCha8Rng,
) {
    let region = instance.region.clone();
    let tiers = region.tiers;
    let netlist = &mut instance.netlist;
    let tier_of = placement.tier.as_ref().expect("tiers assigned").clone();

    let mut fixed_area = vec![0.0; tiers];
    let mut movable_area = vec![0.0; tiers];
    let mut fillers_by_tier: Vec<Vec<usize>> = vec![Vec::new(); tiers];
    for (i, c) in netlist.cells.iter().enumerate() {
        let t = tier_of[i].min(tiers - 1);
        if c.is_filler() {
            fillers_by_tier[t].push(i);
        } else if c.movable {
            movable_area[t] += c.area();
        } else {
            fixed_area[t] += c.area();
        }
    }

    let proto = filler_cell(netlist, &region, dims);
    let fa = proto.area();
    if fa <= 0.0 {
        return;
    }

    let mut remove: Vec<usize> = Vec::new();
    let mut add: Vec<(usize, usize)> = Vec::new(); // (tier, how many)
    for t in 0..tiers {
        let placeable = (1.0 - fixed_area[t]).max(0.0);
        let target = (region.rho_t * placeable - movable_area[t]).max(0.0);
        let want = (target / fa).floor() as usize;
        let have = fillers_by_tier[t].len();
        if have > want {
            // Drop the newest fillers on this tier.
            let surplus = have - want;
            let doomed = &fillers_by_tier[t][have - surplus..];
            remove.extend_from_slice(doomed);
        } else if want > have {
            add.push((t, want - have));
        }
    }

    if !remove.is_empty() {
        remove.sort_unstable();
        let keep = |i: usize| remove.binary_search(&i).is_err();
        let mut new_cells: Vec<Cell> = netlist.cells[..num_real].to_vec();
        let mut nx = placement.x[..num_real].to_vec();
        let mut ny = placement.y[..num_real].to_vec();
        let mut nz = placement.z[..num_real].to_vec();
        let mut nt = tier_of[..num_real].to_vec();
        for i in num_real..netlist.cells.len() {
            if keep(i) {
                new_cells.push(netlist.cells[i].clone());
                nx.push(placement.x[i]);
                ny.push(placement.y[i]);
                nz.push(placement.z[i]);
                nt.push(tier_of[i]);
            }
        }
        netlist.cells = new_cells;
        placement.x = nx;
        placement.y = ny;
        placement.z = nz;
        placement.tier = Some(nt);
    }

    let (hw, hh) = (proto.width / 2.0, proto.height / 2.0);
    for (t, count) in add {
        for _ in 0..count {
            let mut c = proto.clone();
            c.name = format!("fill{}", netlist.cells.len());
            netlist.cells.push(c);
            placement.x.push(rng.random_range(hw..=(1.0 - hw).max(hw)));
            placement.y.push(rng.random_range(hh..=(1.0 - hh).max(hh)));
            placement.z.push(region.tier_center(t));
            placement.tier.as_mut().unwrap().push(t);
        }
    }
}

/// Shared per-tier 2D resolution: the maximum of the per-tier grid sizes.
fn grid_2d_for(instance: &Instance, placement: &Placement, k: f64) -> Result<BinGrid2> {
    let nl = &instance.netlist;
    let tier_of = placement
        .tier
        .as_ref()
        .ok_or_else(|| Error::State("2D sizing requires tiers".into()))?;
    let mut m = 8usize;
    for t in 0..instance.region.tiers {
        let (mut area, mut n) = (0.0, 0usize);
        for (i, c) in nl.cells.iter().enumerate() {
            if c.kind == CellKind::StdCell && c.movable && tier_of[i] == t {
                area += c.area();
                n += 1;
            }
        }
        if n == 0 {
            continue;
        }
        let g = size_bin_grid_2d(area / n as f64, instance.region.rho_t, k)?;
        m = m.max(g.m);
    }
    Ok(BinGrid2 { m })
}

struct StageTimer {
    start: Instant,
}

impl StageTimer {
    fn new() -> Self {
        StageTimer {
            start: Instant::now(),
        }
    }

    fn ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }
}

fn report_stage(
    name: &str,
    instance: &Instance,
    placement: &Placement,
    grid: BinGrid3,
    iterations: usize,
    wall_ms: f64,
) -> Result<StageReport> {
    let vi = if placement.tier.is_some() {
        Some(vi_count(&instance.netlist, placement, &instance.region)?)
    } else {
        None
    };
    Ok(StageReport {
        stage: name.to_string(),
        hpwl: physical_hpwl(instance, placement),
        vi,
        tau: crate::density::overflow_3d(&instance.netlist, placement, &instance.region, grid)?,
        macro_overlap: macro_overlap_volume(instance, placement),
        iterations,
        wall_ms,
    })
}

/// Execute the full pipeline. The returned placement indexes the cells of
/// the input instance (fillers are internal) and is tier-assigned and legal
/// unless `density_only` stops the flow after 3D spreading.
pub fn run_flow(
    instance: &Instance,
    seed_positions: &Placement,
    cfg: &FlowConfig,
    obs: &mut dyn FlowObserver,
) -> Result<(Placement, Vec<StageReport>)> {
    let mut work = instance.clone();
    let num_real = work.netlist.cells.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut reports: Vec<StageReport> = Vec::new();

    let depth = work.region.tier_depth();
    let avg_volume = work
        .netlist
        .average_stdcell_dims()
        .map(|(w, h)| w * h * depth)
        .or_else(|| {
            let mv: Vec<f64> = work
                .netlist
                .cells
                .iter()
                .filter(|c| c.movable)
                .map(|c| c.volume(depth))
                .collect();
            if mv.is_empty() {
                None
            } else {
                Some(mv.iter().sum::<f64>() / mv.len() as f64)
            }
        })
        .unwrap_or(1.0 / 4096.0);
    let grid3 = size_bin_grid(avg_volume, work.region.rho_t, cfg.bin_k)?;

    macro_rules! stage {
        ($name:expr, $iters:expr, $timer:expr, $pl:expr) => {{
            let rep = report_stage($name, &work, $pl, grid3, $iters, $timer.ms())?;
            obs.stage_done(&rep, &work, $pl);
            reports.push(rep);
        }};
    }

    // Initial placement.
    let timer = StageTimer::new();
    let mut placement = initial_placement(&work, seed_positions, cfg.seed)?;
    stage!("initial", 0, timer, &placement);

    // 3D mixed-size global placement.
    let timer = StageTimer::new();
    insert_fillers(&mut work, &mut placement, cfg.filler_dims, &mut rng);
    let iters = {
        let mut obj = gp::Gp3d::new(&work, &placement, grid3, cfg.precond_mode())?;
        let x0 = obj.pack(&placement);
        let ncfg = NesterovConfig {
            max_iters: cfg.max_iters_3d,
            tau_stop: cfg.tau_stop_3d,
            wirelength: !cfg.density_only,
            ..Default::default()
        };
        let mut log = |r: &IterRecord| obs.iteration("gp3d-mixed", r);
        let out = nesterov_solve(&mut obj, &x0, &ncfg, &mut log)
            .map_err(|e| stage_err("gp3d-mixed", e))?;
        obj.unpack(&out.x, &mut placement);
        out.iters
    };
    stage!("gp3d-mixed", iters, timer, &placement);

    if cfg.density_only {
        work.netlist.cells.truncate(num_real);
        placement.truncate(num_real);
        return Ok((placement, reports));
    }

    // Tier assignment with capacity balancing.
    let timer = StageTimer::new();
    let pre_snap_z = placement.z.clone();
    placement.tier = None;
    assign_tiers(&work.region, &work.netlist, &mut placement, |_| true);
    balance_tiers(&work, &mut placement, &pre_snap_z, 0.85);
    stage!("tier-assign", 0, timer, &placement);

    // Simultaneous per-tier 2D mixed-size placement.
    if !cfg.skip_gp2d {
        let timer = StageTimer::new();
        rebalance_fillers_per_tier(&mut work, &mut placement, num_real, cfg.filler_dims, &mut rng);
        let grid2 = grid_2d_for(&work, &placement, cfg.bin_k)?;
        let iters = {
            let mut obj =
                gp::Gp2dMultiTier::new(&work, &placement, grid2, cfg.precond_mode(), cfg.threads)?;
            let x0 = obj.pack(&placement);
            let ncfg = NesterovConfig {
                max_iters: cfg.max_iters_2d,
                tau_stop: cfg.tau_stop_2d,
                ..Default::default()
            };
            let mut log = |r: &IterRecord| obs.iteration("gp2d-mixed", r);
            let out = nesterov_solve(&mut obj, &x0, &ncfg, &mut log)
                .map_err(|e| stage_err("gp2d-mixed", e))?;
            obj.unpack(&out.x, &mut placement);
            out.iters
        };
        stage!("gp2d-mixed", iters, timer, &placement);
    }

    // Macro legalization.
    let timer = StageTimer::new();
    let sa_stats = legalize_macros_sa(&work, &mut placement, &cfg.sa_config(), cfg.seed)
        .map_err(|e| stage_err("macro-lg", e))?;
    stage!("macro-lg", sa_stats.moves, timer, &placement);

    // Standard-cell placement with macros frozen as obstacles.
    let has_macros = work
        .netlist
        .cells
        .iter()
        .any(|c| c.kind == CellKind::Macro);
    if has_macros {
        for c in work.netlist.cells.iter_mut() {
            if c.kind == CellKind::Macro {
                c.movable = false;
            }
        }

        let timer = StageTimer::new();
        let iters = {
            let mut obj = gp::Gp3d::new(&work, &placement, grid3, cfg.precond_mode())?;
            let x0 = obj.pack(&placement);
            let ncfg = NesterovConfig {
                max_iters: cfg.max_iters_3d,
                tau_stop: cfg.tau_stop_3d,
                ..Default::default()
            };
            let mut log = |r: &IterRecord| obs.iteration("gp3d-cells", r);
            let out = nesterov_solve(&mut obj, &x0, &ncfg, &mut log)
                .map_err(|e| stage_err("gp3d-cells", e))?;
            obj.unpack(&out.x, &mut placement);
            out.iters
        };
        // Cells move to their closest tiers again; macros keep theirs.
        let pre_snap_z = placement.z.clone();
        assign_tiers(&work.region, &work.netlist, &mut placement, |c| {
            c.kind != CellKind::Macro
        });
        balance_tiers(&work, &mut placement, &pre_snap_z, 0.85);
        stage!("gp3d-cells", iters, timer, &placement);

        if !cfg.skip_gp2d {
            let timer = StageTimer::new();
            rebalance_fillers_per_tier(
                &mut work,
                &mut placement,
                num_real,
                cfg.filler_dims,
                &mut rng,
            );
            let grid2 = grid_2d_for(&work, &placement, cfg.bin_k)?;
            let iters = {
                let mut obj = gp::Gp2dMultiTier::new(
                    &work,
                    &placement,
                    grid2,
                    cfg.precond_mode(),
                    cfg.threads,
                )?;
                let x0 = obj.pack(&placement);
                let ncfg = NesterovConfig {
                    max_iters: cfg.max_iters_2d,
                    tau_stop: cfg.tau_stop_2d,
                    ..Default::default()
                };
                let mut log = |r: &IterRecord| obs.iteration("gp2d-cells", r);
                let out = nesterov_solve(&mut obj, &x0, &ncfg, &mut log)
                    .map_err(|e| stage_err("gp2d-cells", e))?;
                obj.unpack(&out.x, &mut placement);
                out.iters
            };
            stage!("gp2d-cells", iters, timer, &placement);
        }

        for c in work.netlist.cells.iter_mut() {
            if c.kind == CellKind::Macro {
                c.movable = true;
            }
        }
    }

    // Drop fillers, then legalize bottom-up and refine.
    work.netlist.cells.truncate(num_real);
    placement.truncate(num_real);

    let timer = StageTimer::new();
    for tier in 0..work.region.tiers {
        legalize_tier(&work, &mut placement, tier).map_err(|e| stage_err("legalize", e))?;
    }
    stage!("legalize", 0, timer, &placement);

    if !cfg.skip_detail {
        let timer = StageTimer::new();
        let incident = work.netlist.nets_per_cell();
        for tier in 0..work.region.tiers {
            refine_tier(&work, &mut placement, &incident, tier)
                .map_err(|e| stage_err("detail", e))?;
        }
        stage!("detail", 0, timer, &placement);
    }

    Ok((placement, reports))
}

fn stage_err(stage: &str, e: Error) -> Error {
    match e {
        Error::Divergence(msg) => Error::Divergence(format!("[{stage}] {msg}")),
        Error::Legalization(msg) => Error::Legalization(format!("[{stage}] {msg}")),
        Error::State(msg) => Error::State(format!("[{stage}] {msg}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthSpec};

    #[test]
    fn tier_assignment_snaps_and_ties_down() {
        let spec = SynthSpec {
            cells: 60,
            tiers: 2,
            ..Default::default()
        };
        let (inst, mut pl) = generate(&spec).unwrap();
        for (i, c) in inst.netlist.cells.iter().enumerate() {
            if c.movable {
                pl.z[i] = 0.49;
            }
        }
        pl.z[0] = 0.5; // exact boundary
        assign_tiers(&inst.region, &inst.netlist, &mut pl, |_| true);
        let t = pl.tier.as_ref().unwrap();
        assert_eq!(t[0], 0);
        for (i, c) in inst.netlist.cells.iter().enumerate() {
            if c.movable {
                assert_eq!(pl.z[i], inst.region.tier_center(t[i]));
            }
        }
    }

    #[test]
    fn tier_histogram_near_uniform() {
        use rand::prelude::*;
        let spec = SynthSpec {
            cells: 10_000,
            tiers: 4,
            ..Default::default()
        };
        let (inst, mut pl) = generate(&spec).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut movable = 0usize;
        for (i, c) in inst.netlist.cells.iter().enumerate() {
            if c.movable {
                pl.z[i] = rng.random_range(0.0..1.0);
                movable += 1;
            }
        }
        assign_tiers(&inst.region, &inst.netlist, &mut pl, |_| true);
        let t = pl.tier.as_ref().unwrap();
        let mut hist = vec![0usize; 4];
        for (i, c) in inst.netlist.cells.iter().enumerate() {
            if c.movable {
                hist[t[i]] += 1;
            }
        }
        for h in hist {
            let frac = h as f64 / movable as f64;
            assert!((frac - 0.25).abs() < 0.05 * 1.0, "tier fraction {frac}");
        }
    }

    #[test]
    fn filler_count_matches_whitespace() {
        let spec = SynthSpec {
            cells: 400,
            tiers: 2,
            utilization: 0.6,
            ..Default::default()
        };
        let (inst, pl) = generate(&spec).unwrap();
        let mut work = inst.clone();
        let mut placement = pl.clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let count = insert_fillers(&mut work, &mut placement, None, &mut rng);
        assert!(count > 0);
        let depth = work.region.tier_depth();
        let total: f64 = work
            .netlist
            .cells
            .iter()
            .filter(|c| c.movable)
            .map(|c| c.volume(depth))
            .sum();
        let fixed: f64 = work
            .netlist
            .cells
            .iter()
            .filter(|c| !c.movable)
            .map(|c| c.volume(depth))
            .sum();
        let placeable = 1.0 - fixed;
        let filler_vol = filler_cell(&inst.netlist, &work.region, None).volume(depth);
        // Total movable volume approaches the target within one filler.
        assert!(total <= work.region.rho_t * placeable + 1e-12);
        assert!(total >= work.region.rho_t * placeable - filler_vol - 1e-12);
    }

    #[test]
    fn fillers_zero_when_full() {
        let spec = SynthSpec {
            cells: 300,
            tiers: 1,
            utilization: 0.95,
            whitespace: 0.0,
            rho_t: 0.5,
            ..Default::default()
        };
        // rho_t 0.5 with utilization ~0.95: already over target, no fillers.
        let (inst, pl) = generate(&spec).unwrap();
        let mut work = inst.clone();
        let mut placement = pl.clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let count = insert_fillers(&mut work, &mut placement, None, &mut rng);
        assert_eq!(count, 0);
    }

    #[test]
    fn explicit_filler_volume_count() {
        // Empty netlist, unit region, filler volume 0.1 -> exactly 10.
        use crate::model::{Beta, DomainScale, RowGrid};
        let region = Region3D {
            tiers: 2,
            beta: Beta::default(),
            rho_t: 1.0,
        };
        let mut inst = Instance {
            netlist: Netlist::default(),
            region,
            rows: RowGrid {
                y0: 0.0,
                row_height: 0.125,
                num_rows: 8,
                x_min: 0.0,
                x_max: 1.0,
                site_width: 0.0,
            },
            scale: DomainScale::identity(),
        };
        let mut pl = Placement::zeroed(0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        // tier_depth = 0.5 -> area 0.2 per filler -> volume 0.1.
        let count = insert_fillers(&mut inst, &mut pl, Some((0.5, 0.4)), &mut rng);
        assert_eq!(count, 10);
    }
}
