//! Stochastic 3D macro legalization.
//!
//! Simulated annealing over macro positions only: translations within a tier
//! (range shrinking with temperature), single-tier retier hops, and pairwise
//! swaps. The cost is the wirelength of macro-incident nets (planar spans
//! plus the weighted tier spans) plus a penalty on total macro overlap and
//! out-of-bounds volume. The run keeps the best overlap-free state seen and
//! only replaces the input when that state is strictly better; if no
//! overlap-free state appears, the penalty doubles and the anneal retries.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::model::{CellKind, Instance, Placement};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SaConfig {
    pub cooling: f64,
    pub moves_per_macro: usize,
    pub t_final_frac: f64,
    /// Target acceptance probability of the mean uphill move at T_init.
    pub initial_accept: f64,
    pub max_retries: usize,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            cooling: 0.95,
            moves_per_macro: 100,
            t_final_frac: 1e-4,
            initial_accept: 0.5,
            max_retries: 3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SaStats {
    pub moves: usize,
    pub accepted: usize,
    pub retries: usize,
    pub final_overlap: f64,
}

struct MacroState {
    /// Macro cell ids.
    ids: Vec<usize>,
    /// Macro position per cell id (usize::MAX for non-macros).
    pos_of: Vec<usize>,
    x: Vec<f64>,
    y: Vec<f64>,
    tier: Vec<usize>,
    /// Nets incident to at least one macro, with cached wirelength cost.
    nets: Vec<usize>,
    net_cost: Vec<f64>,
    /// Incident net list per macro (positions into `nets`).
    incident: Vec<Vec<usize>>,
}

struct Ctx<'a> {
    instance: &'a Instance,
    /// Frozen snapshot of non-macro coordinates.
    placement: Placement,
    beta_z: f64,
}

impl Ctx<'_> {
    /// Wirelength of one tracked net under the trial macro coordinates.
    fn net_cost(&self, state: &MacroState, net_pos: usize) -> f64 {
        let net = &self.instance.netlist.nets[state.nets[net_pos]];
        let beta = &self.instance.region.beta;
        let (mut lx, mut hx) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut ly, mut hy) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lt, mut ht) = (usize::MAX, 0usize);
        for pin in &net.pins {
            let (px, py, pt) = match pin {
                crate::model::Pin::OnCell { cell, dx, dy } => {
                    let pos = state.pos_of[*cell];
                    if pos != usize::MAX {
                        (state.x[pos] + dx, state.y[pos] + dy, state.tier[pos])
                    } else {
                        let t = self
                            .placement
                            .tier
                            .as_ref()
                            .map(|t| t[*cell])
                            .unwrap_or_else(|| {
                                self.instance.region.tier_of_z(self.placement.z[*cell])
                            });
                        (
                            self.placement.x[*cell] + dx,
                            self.placement.y[*cell] + dy,
                            t,
                        )
                    }
                }
                crate::model::Pin::Fixed { x, y, z } => {
                    (*x, *y, self.instance.region.tier_of_z(*z))
                }
            };
            lx = lx.min(px);
            hx = hx.max(px);
            ly = ly.min(py);
            hy = hy.max(py);
            lt = lt.min(pt);
            ht = ht.max(pt);
        }
        let span_t = if ht > lt { (ht - lt) as f64 } else { 0.0 };
        net.weight * (beta.x * (hx - lx) + beta.y * (hy - ly) + self.beta_z * span_t)
    }

    /// Overlap volume of macro `pos` against all others plus its
    /// out-of-bounds volume.
    fn overlap_of(&self, state: &MacroState, pos: usize) -> f64 {
        let nl = &self.instance.netlist;
        let depth = self.instance.region.tier_depth();
        let a = state.ids[pos];
        let (aw, ah) = (nl.cells[a].width / 2.0, nl.cells[a].height / 2.0);
        let (ax, ay) = (state.x[pos], state.y[pos]);
        let in_x = ((ax + aw).min(1.0) - (ax - aw).max(0.0)).max(0.0);
        let in_y = ((ay + ah).min(1.0) - (ay - ah).max(0.0)).max(0.0);
        let mut om = (nl.cells[a].area() - in_x * in_y).max(0.0) * depth;
        for (q, &b) in state.ids.iter().enumerate() {
            if q == pos || state.tier[q] != state.tier[pos] {
                continue;
            }
            let (bw, bh) = (nl.cells[b].width / 2.0, nl.cells[b].height / 2.0);
            let dx = (ax + aw).min(state.x[q] + bw) - (ax - aw).max(state.x[q] - bw);
            let dy = (ay + ah).min(state.y[q] + bh) - (ay - ah).max(state.y[q] - bh);
            if dx > 0.0 && dy > 0.0 {
                om += dx * dy * depth;
            }
        }
        om
    }

    fn total_overlap(&self, state: &MacroState) -> f64 {
        let mut om = 0.0;
        for pos in 0..state.ids.len() {
            om += self.overlap_of(state, pos);
        }
        // Pairwise terms counted twice, out-of-bounds once; reconstruct.
        let nl = &self.instance.netlist;
        let depth = self.instance.region.tier_depth();
        let mut oob = 0.0;
        for (pos, &a) in state.ids.iter().enumerate() {
            let (aw, ah) = (nl.cells[a].width / 2.0, nl.cells[a].height / 2.0);
            let in_x = ((state.x[pos] + aw).min(1.0) - (state.x[pos] - aw).max(0.0)).max(0.0);
            let in_y = ((state.y[pos] + ah).min(1.0) - (state.y[pos] - ah).max(0.0)).max(0.0);
            oob += (nl.cells[a].area() - in_x * in_y).max(0.0) * depth;
        }
        (om - oob) / 2.0 + oob
    }

    fn snap(&self, cell: usize, x: f64, y: f64) -> (f64, f64) {
        let rows = &self.instance.rows;
        let c = &self.instance.netlist.cells[cell];
        let (hw, hh) = (c.width / 2.0, c.height / 2.0);
        let left = rows.snap_site((x - hw).clamp(rows.x_min, (rows.x_max - c.width).max(rows.x_min)));
        let bottom_max = rows.y0 + (rows.num_rows as f64 * rows.row_height - c.height).max(0.0);
        let k = (((y - hh) - rows.y0) / rows.row_height).round().max(0.0);
        let bottom = (rows.y0 + k * rows.row_height).min(bottom_max);
        (left + hw, bottom + hh)
    }
}

/// Legalize macro positions in place: on success every macro sits on a row-
/// and site-aligned position inside the domain with zero macro overlap.
pub fn legalize_macros_sa(
    instance: &Instance,
    placement: &mut Placement,
    cfg: &SaConfig,
    seed: u64,
) -> Result<SaStats> {
    let nl = &instance.netlist;
    let region = &instance.region;
    let tier_of_in = placement
        .tier
        .clone()
        .ok_or_else(|| Error::State("macro legalization requires tier assignment".into()))?;

    let ids: Vec<usize> = (0..nl.cells.len())
        .filter(|&i| nl.cells[i].kind == CellKind::Macro && nl.cells[i].movable)
        .collect();
    if ids.is_empty() {
        return Ok(SaStats {
            moves: 0,
            accepted: 0,
            retries: 0,
            final_overlap: 0.0,
        });
    }

    let ctx = Ctx {
        instance,
        placement: placement.clone(),
        beta_z: region.beta.z,
    };

    // Tracked nets: those with a pin on any macro.
    let incident_all = nl.nets_per_cell();
    let mut nets: Vec<usize> = Vec::new();
    for &m in &ids {
        for &e in &incident_all[m] {
            if !nets.contains(&e) {
                nets.push(e);
            }
        }
    }
    nets.sort_unstable();
    let incident: Vec<Vec<usize>> = ids
        .iter()
        .map(|&m| {
            incident_all[m]
                .iter()
                .map(|e| nets.binary_search(e).unwrap())
                .collect()
        })
        .collect();

    let mut pos_of = vec![usize::MAX; nl.cells.len()];
    for (pos, &cell) in ids.iter().enumerate() {
        pos_of[cell] = pos;
    }
    let mut state = MacroState {
        x: ids.iter().map(|&i| placement.x[i]).collect(),
        y: ids.iter().map(|&i| placement.y[i]).collect(),
        tier: ids.iter().map(|&i| tier_of_in[i]).collect(),
        ids,
        pos_of,
        net_cost: vec![0.0; nets.len()],
        nets,
        incident,
    };

    // Snap everything onto the row/site grid first; annealing moves stay on
    // the grid afterwards.
    for pos in 0..state.ids.len() {
        let (sx, sy) = ctx.snap(state.ids[pos], state.x[pos], state.y[pos]);
        state.x[pos] = sx;
        state.y[pos] = sy;
    }

    for i in 0..state.nets.len() {
        state.net_cost[i] = ctx.net_cost(&state, i);
    }
    let mut wl: f64 = state.net_cost.iter().sum();
    let mut om = ctx.total_overlap(&state);

    let total_macro_volume: f64 = state
        .ids
        .iter()
        .map(|&i| nl.cells[i].volume(region.tier_depth()))
        .sum();
    let mut penalty = 10.0 * (wl + 1e-9) / total_macro_volume.max(1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a_0001);
    let mut stats = SaStats {
        moves: 0,
        accepted: 0,
        retries: 0,
        final_overlap: om,
    };

    // Best strictly-improving overlap-free state; the input counts when it
    // is already overlap-free.
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, Vec<usize>)> = if om <= 0.0 {
        Some((wl, state.x.clone(), state.y.clone(), state.tier.clone()))
    } else {
        None
    };

    for retry in 0..=cfg.max_retries {
        stats.retries = retry;
        let n_macros = state.ids.len();
        let cost_of = |wl: f64, om: f64, penalty: f64| wl + penalty * om;

        // Temperature prologue: sample uphill deltas from random moves.
        let mut uphill = Vec::new();
        {
            let mut probe_rng = ChaCha8Rng::seed_from_u64(seed ^ (0xbeef + retry as u64));
            for _ in 0..(50 * n_macros).max(50) {
                let (pos, mv) = propose(&ctx, &state, &mut probe_rng, 1.0);
                let delta = trial_delta(&ctx, &mut state, pos, &mv, penalty);
                if delta > 0.0 {
                    uphill.push(delta);
                }
            }
        }
        let t_init = if uphill.is_empty() {
            (wl + penalty * om).max(1e-9) * 1e-3
        } else {
            let mean = uphill.iter().sum::<f64>() / uphill.len() as f64;
            mean / (1.0 / cfg.initial_accept).ln()
        };

        let mut t = t_init;
        let t_final = cfg.t_final_frac * t_init;
        while t > t_final {
            let range = (t / t_init).clamp(0.05, 1.0);
            for _ in 0..cfg.moves_per_macro * n_macros {
                stats.moves += 1;
                let (pos, mv) = propose(&ctx, &state, &mut rng, range);
                let delta = trial_delta(&ctx, &mut state, pos, &mv, penalty);
                let accept = delta <= 0.0 || rng.random_range(0.0..1.0) < (-delta / t).exp();
                if accept {
                    stats.accepted += 1;
                    apply_move(&ctx, &mut state, pos, &mv, &mut wl, &mut om);
                    if om <= 1e-15 {
                        let better = best
                            .as_ref()
                            .map(|(bw, ..)| wl < bw - 1e-15)
                            .unwrap_or(true);
                        if better {
                            best = Some((wl, state.x.clone(), state.y.clone(), state.tier.clone()));
                        }
                    }
                }
            }
            t *= cfg.cooling;
        }
        let _ = cost_of;

        if best.is_some() {
            break;
        }
        penalty *= 2.0;
    }

    let Some((_, bx, by, bt)) = best else {
        return Err(Error::Legalization(format!(
            "macro annealing left overlap volume {om:.3e} after {} retries",
            cfg.max_retries
        )));
    };

    for (pos, &cell) in state.ids.iter().enumerate() {
        placement.x[cell] = bx[pos];
        placement.y[cell] = by[pos];
        placement.z[cell] = region.tier_center(bt[pos]);
        placement.tier.as_mut().unwrap()[cell] = bt[pos];
    }
    state.x = bx;
    state.y = by;
    state.tier = bt;
    stats.final_overlap = ctx.total_overlap(&state);
    Ok(stats)
}

enum Move {
    Translate { x: f64, y: f64 },
    Retier { tier: usize },
    Swap { other: usize },
}

fn propose(ctx: &Ctx, state: &MacroState, rng: &mut ChaCha8Rng, range: f64) -> (usize, Move) {
    let n = state.ids.len();
    let pos = rng.random_range(0..n);
    let tiers = ctx.instance.region.tiers;
    let roll = rng.random_range(0..10);
    if roll < 2 && tiers > 1 {
        let t = state.tier[pos];
        let up = rng.random_range(0..2) == 1;
        let new_t = if up {
            (t + 1).min(tiers - 1)
        } else {
            t.saturating_sub(1)
        };
        (pos, Move::Retier { tier: new_t })
    } else if roll < 4 && n > 1 {
        let mut other = rng.random_range(0..n - 1);
        if other >= pos {
            other += 1;
        }
        (pos, Move::Swap { other })
    } else {
        let span = range * 0.5;
        let dx = rng.random_range(-span..span);
        let dy = rng.random_range(-span..span);
        let (sx, sy) = ctx.snap(state.ids[pos], state.x[pos] + dx, state.y[pos] + dy);
        (pos, Move::Translate { x: sx, y: sy })
    }
}

fn affected(state: &MacroState, pos: usize, mv: &Move) -> Vec<usize> {
    let mut nets: Vec<usize> = state.incident[pos].clone();
    if let Move::Swap { other } = mv {
        for &e in &state.incident[*other] {
            if !nets.contains(&e) {
                nets.push(e);
            }
        }
    }
    nets
}

fn with_move<T>(
    ctx: &Ctx,
    state: &mut MacroState,
    pos: usize,
    mv: &Move,
    f: impl FnOnce(&Ctx, &MacroState) -> T,
) -> T {
    let saved = (state.x[pos], state.y[pos], state.tier[pos]);
    let saved_other = if let Move::Swap { other } = mv {
        Some((*other, state.x[*other], state.y[*other], state.tier[*other]))
    } else {
        None
    };
    match mv {
        Move::Translate { x, y } => {
            state.x[pos] = *x;
            state.y[pos] = *y;
        }
        Move::Retier { tier } => {
            state.tier[pos] = *tier;
        }
        Move::Swap { other } => {
            let o = *other;
            let (sx, sy) = ctx.snap(state.ids[pos], state.x[o], state.y[o]);
            let (ox, oy) = ctx.snap(state.ids[o], saved.0, saved.1);
            state.x[pos] = sx;
            state.y[pos] = sy;
            state.tier.swap(pos, o);
            state.x[o] = ox;
            state.y[o] = oy;
        }
    }
    let out = f(ctx, state);
    state.x[pos] = saved.0;
    state.y[pos] = saved.1;
    state.tier[pos] = saved.2;
    if let Some((o, x, y, t)) = saved_other {
        state.x[o] = x;
        state.y[o] = y;
        state.tier[o] = t;
    }
    out
}

fn pair_overlap(ctx: &Ctx, state: &MacroState, a: usize, b: usize) -> f64 {
    if state.tier[a] != state.tier[b] {
        return 0.0;
    }
    let nl = &ctx.instance.netlist;
    let (ca, cb) = (&nl.cells[state.ids[a]], &nl.cells[state.ids[b]]);
    let dx = (state.x[a] + ca.width / 2.0).min(state.x[b] + cb.width / 2.0)
        - (state.x[a] - ca.width / 2.0).max(state.x[b] - cb.width / 2.0);
    let dy = (state.y[a] + ca.height / 2.0).min(state.y[b] + cb.height / 2.0)
        - (state.y[a] - ca.height / 2.0).max(state.y[b] - cb.height / 2.0);
    if dx > 0.0 && dy > 0.0 {
        dx * dy * ctx.instance.region.tier_depth()
    } else {
        0.0
    }
}

/// Cost delta of a trial move without committing it.
fn trial_delta(ctx: &Ctx, state: &mut MacroState, pos: usize, mv: &Move, penalty: f64) -> f64 {
    let nets = affected(state, pos, mv);
    let old_wl: f64 = nets.iter().map(|&e| state.net_cost[e]).sum();
    // A swap counts the moved pair's mutual overlap twice; subtract it once
    // to keep the delta exact.
    let om_around = |ctx: &Ctx, state: &MacroState| match mv {
        Move::Swap { other } => {
            ctx.overlap_of(state, pos) + ctx.overlap_of(state, *other)
                - pair_overlap(ctx, state, pos, *other)
        }
        _ => ctx.overlap_of(state, pos),
    };
    let old_om = om_around(ctx, state);
    with_move(ctx, state, pos, mv, |ctx, state| {
        let new_wl: f64 = nets.iter().map(|&e| ctx.net_cost(state, e)).sum();
        let new_om = om_around(ctx, state);
        (new_wl - old_wl) + penalty * (new_om - old_om)
    })
}

fn apply_move(
    ctx: &Ctx,
    state: &mut MacroState,
    pos: usize,
    mv: &Move,
    wl: &mut f64,
    om: &mut f64,
) {
    // Recompute the running totals from the committed state; cheap since
    // only incident nets change and overlap is recomputed globally only on
    // acceptance of a move touching few pairs.
    let nets = affected(state, pos, mv);
    let old_wl: f64 = nets.iter().map(|&e| state.net_cost[e]).sum();
    match mv {
        Move::Translate { x, y } => {
            state.x[pos] = *x;
            state.y[pos] = *y;
        }
        Move::Retier { tier } => {
            state.tier[pos] = *tier;
        }
        Move::Swap { other } => {
            let o = *other;
            let (sx, sy) = ctx.snap(state.ids[pos], state.x[o], state.y[o]);
            let (ox, oy) = ctx.snap(state.ids[o], state.x[pos], state.y[pos]);
            state.x[pos] = sx;
            state.y[pos] = sy;
            state.tier.swap(pos, o);
            state.x[o] = ox;
            state.y[o] = oy;
        }
    }
    let mut new_wl = 0.0;
    for &e in &nets {
        let c = ctx.net_cost(state, e);
        state.net_cost[e] = c;
        new_wl += c;
    }
    *wl += new_wl - old_wl;
    *om = ctx.total_overlap(state);
}
