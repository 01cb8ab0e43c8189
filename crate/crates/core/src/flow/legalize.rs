//! Row-based standard-cell legalization and detailed placement.
//!
//! Legalization is greedy left-to-right packing: cells are processed in
//! order of preferred x, each placed into the row segment (rows split by
//! macro obstacles) minimizing displacement, with per-segment cursors that
//! only advance. Detailed placement is one pass of equal-width adjacent
//! swaps plus per-cell optimal-interval shifts, each accepted only when the
//! weighted planar wirelength strictly improves, so quality is monotone and
//! tier assignments never change.

use crate::model::{CellKind, Instance, NetId, Placement};
use crate::{Error, Result};

struct Segment {
    row: usize,
    lo: f64,
    hi: f64,
}

/// Free x-intervals of one row, kept sorted and disjoint.
struct RowFree {
    intervals: Vec<(f64, f64)>,
}

impl RowFree {
    /// Best legal left edge for a cell of width `w` preferring `x_left`,
    /// with the resulting displacement; considers every interval that fits.
    fn best_fit(
        &self,
        rows: &crate::model::RowGrid,
        w: f64,
        x_left: f64,
    ) -> Option<(f64, usize, f64)> {
        let mut best: Option<(f64, usize, f64)> = None; // cost, interval, x
        for (k, &(lo, hi)) in self.intervals.iter().enumerate() {
            if hi - lo < w - 1e-12 {
                continue;
            }
            let snapped_lo = snap_up(rows, lo);
            if snapped_lo + w > hi + 1e-12 {
                continue;
            }
            let hi_left = snap_down(rows, hi - w).max(snapped_lo);
            let cand = snap_up(rows, x_left.clamp(snapped_lo, hi_left)).min(hi_left);
            let cost = (cand - x_left).abs();
            if best.map(|(bc, ..)| cost < bc).unwrap_or(true) {
                best = Some((cost, k, cand));
            }
        }
        best
    }

    fn occupy(&mut self, k: usize, x_left: f64, w: f64) {
        let (lo, hi) = self.intervals[k];
        let mut repl = Vec::with_capacity(2);
        if x_left - lo > 1e-12 {
            repl.push((lo, x_left));
        }
        if hi - (x_left + w) > 1e-12 {
            repl.push((x_left + w, hi));
        }
        self.intervals.splice(k..=k, repl);
    }
}

fn row_segments(instance: &Instance, placement: &Placement, tier: usize) -> Vec<Segment> {
    let rows = &instance.rows;
    let nl = &instance.netlist;
    // Obstacles: macros and any immovable object with area on this tier.
    let mut blocks: Vec<(f64, f64, f64, f64)> = Vec::new(); // x0,x1,y0,y1
    let tier_of = placement.tier.as_ref();
    for (i, c) in nl.cells.iter().enumerate() {
        let obstacle = c.kind == CellKind::Macro || (!c.movable && c.area() > 0.0);
        if !obstacle {
            continue;
        }
        let t = tier_of
            .map(|t| t[i])
            .unwrap_or_else(|| instance.region.tier_of_z(placement.z[i]));
        if t != tier {
            continue;
        }
        blocks.push((
            placement.x[i] - c.width / 2.0,
            placement.x[i] + c.width / 2.0,
            placement.y[i] - c.height / 2.0,
            placement.y[i] + c.height / 2.0,
        ));
    }

    let mut segments = Vec::new();
    for r in 0..rows.num_rows {
        let y0 = rows.row_bottom(r);
        let y1 = y0 + rows.row_height;
        let mut cuts: Vec<(f64, f64)> = blocks
            .iter()
            .filter(|b| b.3 > y0 + 1e-12 && b.2 < y1 - 1e-12)
            .map(|b| (b.0, b.1))
            .collect();
        cuts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut lo = rows.x_min;
        for (c0, c1) in cuts {
            if c0 > lo {
                segments.push(Segment {
                    row: r,
                    lo,
                    hi: c0.min(rows.x_max),
                });
            }
            lo = lo.max(c1);
        }
        if lo < rows.x_max {
            segments.push(Segment {
                row: r,
                lo,
                hi: rows.x_max,
            });
        }
    }
    segments
}

fn snap_up(rows: &crate::model::RowGrid, x: f64) -> f64 {
    if rows.site_width <= 0.0 {
        return x;
    }
    let k = ((x - rows.x_min) / rows.site_width - 1e-9).ceil();
    rows.x_min + k.max(0.0) * rows.site_width
}

fn snap_down(rows: &crate::model::RowGrid, x: f64) -> f64 {
    if rows.site_width <= 0.0 {
        return x;
    }
    let k = ((x - rows.x_min) / rows.site_width + 1e-9).floor();
    rows.x_min + k.max(0.0) * rows.site_width
}

/// Pack the movable standard cells of one tier into legal row positions.
pub fn legalize_tier(instance: &Instance, placement: &mut Placement, tier: usize) -> Result<()> {
    let nl = &instance.netlist;
    let rows = &instance.rows;
    let tier_of = placement
        .tier
        .as_ref()
        .ok_or_else(|| Error::State("legalization requires tier assignment".into()))?;

    let mut cells: Vec<usize> = (0..nl.cells.len())
        .filter(|&i| {
            nl.cells[i].movable
                && nl.cells[i].kind == CellKind::StdCell
                && tier_of[i] == tier
        })
        .collect();
    cells.sort_by(|&a, &b| {
        let ax = placement.x[a] - nl.cells[a].width / 2.0;
        let bx = placement.x[b] - nl.cells[b].width / 2.0;
        ax.partial_cmp(&bx).unwrap().then(a.cmp(&b))
    });

    let segments = row_segments(instance, placement, tier);
    if segments.is_empty() && !cells.is_empty() {
        return Err(Error::Legalization(format!(
            "tier {tier} has no free row segments"
        )));
    }
    // Free-interval ledger per row; placements split intervals so earlier
    // gaps stay available to later cells.
    let mut free: Vec<RowFree> = (0..rows.num_rows)
        .map(|r| RowFree {
            intervals: segments
                .iter()
                .filter(|s| s.row == r)
                .map(|s| (s.lo, s.hi))
                .collect(),
        })
        .collect();

    for &i in &cells {
        let c = &nl.cells[i];
        let (w, hh) = (c.width, c.height / 2.0);
        let x_pref_left = placement.x[i] - w / 2.0;
        let y_pref = placement.y[i];
        let mut best: Option<(f64, usize, usize, f64)> = None; // cost, row, interval, x_left
        for (r, row_free) in free.iter().enumerate() {
            let y_c = rows.row_bottom(r) + hh;
            let y_cost = (y_c - y_pref).abs();
            if let Some((bc, ..)) = best {
                if y_cost >= bc {
                    continue;
                }
            }
            if let Some((x_cost, k, x_left)) = row_free.best_fit(rows, w, x_pref_left) {
                let cost = x_cost + y_cost;
                if best.map(|(bc, ..)| cost < bc).unwrap_or(true) {
                    best = Some((cost, r, k, x_left));
                }
            }
        }
        let Some((_, r, k, x_left)) = best else {
            return Err(Error::Legalization(format!(
                "tier {tier}: no row capacity for cell {}",
                c.name
            )));
        };
        free[r].occupy(k, x_left, w);
        placement.x[i] = x_left + w / 2.0;
        placement.y[i] = rows.row_bottom(r) + hh;
        placement.z[i] = instance.region.tier_center(tier);
    }
    Ok(())
}

/// Weighted planar span of one net.
fn net_hpwl(instance: &Instance, placement: &Placement, e: NetId) -> f64 {
    let net = &instance.netlist.nets[e];
    let beta = &instance.region.beta;
    let (mut lx, mut hx) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ly, mut hy) = (f64::INFINITY, f64::NEG_INFINITY);
    for pin in &net.pins {
        let (px, py) = placement.pin_xy(pin);
        lx = lx.min(px);
        hx = hx.max(px);
        ly = ly.min(py);
        hy = hy.max(py);
    }
    if hx < lx {
        return 0.0;
    }
    net.weight * (beta.x * (hx - lx) + beta.y * (hy - ly))
}

fn incident_hpwl(
    instance: &Instance,
    placement: &Placement,
    nets: &[NetId],
) -> f64 {
    nets.iter().map(|&e| net_hpwl(instance, placement, e)).sum()
}

/// One pass of local refinement on the rows of `tier`: adjacent equal-width
/// swaps, then per-cell best shifts within the free interval. Both accept
/// only strict improvements.
pub fn refine_tier(
    instance: &Instance,
    placement: &mut Placement,
    incident: &[Vec<NetId>],
    tier: usize,
) -> Result<()> {
    let nl = &instance.netlist;
    let rows = &instance.rows;
    let tier_of = placement
        .tier
        .as_ref()
        .ok_or_else(|| Error::State("refinement requires tier assignment".into()))?
        .clone();

    // Group std cells by row.
    let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); rows.num_rows];
    for (i, c) in nl.cells.iter().enumerate() {
        if !c.movable || c.kind != CellKind::StdCell || tier_of[i] != tier {
            continue;
        }
        let r = (((placement.y[i] - c.height / 2.0) - rows.y0) / rows.row_height).round();
        let r = (r.max(0.0) as usize).min(rows.num_rows.saturating_sub(1));
        by_row[r].push(i);
    }
    for row in by_row.iter_mut() {
        row.sort_by(|&a, &b| placement.x[a].partial_cmp(&placement.x[b]).unwrap());
    }

    // Adjacent equal-width swaps.
    for row in &by_row {
        for w in row.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (nl.cells[a].width - nl.cells[b].width).abs() > 1e-12 {
                continue;
            }
            let mut nets: Vec<NetId> = incident[a].clone();
            for &e in &incident[b] {
                if !nets.contains(&e) {
                    nets.push(e);
                }
            }
            let before = incident_hpwl(instance, placement, &nets);
            placement.x.swap(a, b);
            let after = incident_hpwl(instance, placement, &nets);
            if after >= before - 1e-15 {
                placement.x.swap(a, b);
            }
        }
    }
    for row in by_row.iter_mut() {
        row.sort_by(|&a, &b| placement.x[a].partial_cmp(&placement.x[b]).unwrap());
    }

    // Optimal-interval shifts: slide each cell inside the slack between its
    // neighbors to the best evaluated candidate.
    let obstacles = row_segments(instance, placement, tier);
    for (r, row) in by_row.iter().enumerate() {
        for (k, &i) in row.iter().enumerate() {
            let c = &nl.cells[i];
            let hw = c.width / 2.0;
            // Free interval for the left edge.
            let prev_end = if k > 0 {
                let p = row[k - 1];
                placement.x[p] + nl.cells[p].width / 2.0
            } else {
                f64::NEG_INFINITY
            };
            let next_start = if k + 1 < row.len() {
                let nx = row[k + 1];
                placement.x[nx] - nl.cells[nx].width / 2.0
            } else {
                f64::INFINITY
            };
            // Constrain to the segment containing the cell.
            let seg = obstacles.iter().find(|s| {
                s.row == r
                    && placement.x[i] - hw >= s.lo - 1e-9
                    && placement.x[i] + hw <= s.hi + 1e-9
            });
            let (seg_lo, seg_hi) = seg.map(|s| (s.lo, s.hi)).unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
            let lo = prev_end.max(seg_lo);
            let hi = next_start.min(seg_hi) - c.width;
            if hi < lo - 1e-12 {
                continue;
            }

            // Candidate left edges: interval ends plus the positions that
            // align this cell's pins with the span ends of its nets.
            let mut cands = vec![snap_up(rows, lo), rows.snap_site(hi.max(lo))];
            for &e in &incident[i] {
                let net = &instance.netlist.nets[e];
                let (mut l, mut h) = (f64::INFINITY, f64::NEG_INFINITY);
                let mut offs: Vec<f64> = Vec::new();
                for pin in &net.pins {
                    match pin {
                        crate::model::Pin::OnCell { cell, dx, .. } if *cell == i => {
                            offs.push(*dx);
                        }
                        _ => {
                            let (px, _) = placement.pin_xy(pin);
                            l = l.min(px);
                            h = h.max(px);
                        }
                    }
                }
                if l.is_finite() {
                    for &o in &offs {
                        for target in [l - o, h - o] {
                            let left = target - hw;
                            if left >= lo - 1e-9 && left <= hi + 1e-9 {
                                cands.push(rows.snap_site(left.clamp(lo, hi)));
                            }
                        }
                    }
                }
            }

            let cur_left = placement.x[i] - hw;
            let before = incident_hpwl(instance, placement, &incident[i]);
            let mut best = (before, cur_left);
            for cand in cands {
                if cand < lo - 1e-9 || cand > hi + 1e-9 || (cand - cur_left).abs() < 1e-15 {
                    continue;
                }
                placement.x[i] = cand + hw;
                let cost = incident_hpwl(instance, placement, &incident[i]);
                if cost < best.0 - 1e-15 {
                    best = (cost, cand);
                }
            }
            placement.x[i] = best.1 + hw;
        }
    }
    Ok(())
}

/// Legalize and refine every tier from the bottom up. Tier assignments are
/// untouched, so the vertical interconnect count is exactly invariant.
pub fn legalize_and_detail(instance: &Instance, placement: &mut Placement) -> Result<()> {
    let incident = instance.netlist.nets_per_cell();
    for tier in 0..instance.region.tiers {
        legalize_tier(instance, placement, tier)?;
    }
    for tier in 0..instance.region.tiers {
        refine_tier(instance, placement, &incident, tier)?;
    }
    Ok(())
}
