//! Independent solution checking and metric reporting.
//!
//! The checker re-derives every metric from the placement alone: weighted
//! planar wirelength in the input's physical units, tier-crossing counts,
//! density overflow at a stated grid, and a full legality scan (bounds, row
//! and site alignment, tier snapping, pairwise overlaps). Violations are
//! data, not errors; the verdict is legal exactly when the list is empty.

use serde::Serialize;

use crate::density::overflow_3d;
use crate::model::{BinGrid3, CellKind, Instance, Placement};
use crate::wirelength::{hpwl_per_dim, vi_count};
use crate::{Error, Result};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    OutOfBounds {
        cell: String,
    },
    Overlap {
        a: String,
        b: String,
        volume: f64,
    },
    OffRow {
        cell: String,
    },
    OffSite {
        cell: String,
    },
    OffTier {
        cell: String,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    /// Weighted planar wirelength in physical units.
    pub hpwl: f64,
    pub hpwl_x: f64,
    pub hpwl_y: f64,
    pub vi: u64,
    pub tau: f64,
    pub grid_m: usize,
    pub legal: bool,
    pub violations: Vec<Violation>,
    pub tier_utilization: Vec<f64>,
}

impl EvalReport {
    /// Line-oriented `key=value` rendering.
    pub fn to_kv_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("hpwl={:.6e}\n", self.hpwl));
        s.push_str(&format!("hpwl_x={:.6e}\n", self.hpwl_x));
        s.push_str(&format!("hpwl_y={:.6e}\n", self.hpwl_y));
        s.push_str(&format!("vi={}\n", self.vi));
        s.push_str(&format!("tau={:.6}\n", self.tau));
        s.push_str(&format!("grid_m={}\n", self.grid_m));
        s.push_str(&format!("legal={}\n", self.legal));
        s.push_str(&format!("violations={}\n", self.violations.len()));
        for (t, u) in self.tier_utilization.iter().enumerate() {
            s.push_str(&format!("tier{}_util={:.6}\n", t, u));
        }
        s
    }
}

/// Scan a tier-assigned placement for legality violations. Fillers are
/// ignored; fixed objects are input data and exempt.
pub fn check_legality(instance: &Instance, placement: &Placement) -> Result<Vec<Violation>> {
    let nl = &instance.netlist;
    let region = &instance.region;
    let rows = &instance.rows;
    let Some(tier_of) = placement.tier.as_ref() else {
        return Err(Error::State("legality check requires tier assignment".into()));
    };

    let mut violations = Vec::new();
    let mut per_tier: Vec<Vec<usize>> = vec![Vec::new(); region.tiers];

    for (i, c) in nl.cells.iter().enumerate() {
        if !c.movable || c.is_filler() {
            continue;
        }
        let (hw, hh) = (c.width / 2.0, c.height / 2.0);
        let (x, y) = (placement.x[i], placement.y[i]);

        if x - hw < -EPS || x + hw > 1.0 + EPS || y - hh < -EPS || y + hh > 1.0 + EPS {
            violations.push(Violation::OutOfBounds {
                cell: c.name.clone(),
            });
        }

        let t = tier_of[i];
        if t >= region.tiers || (placement.z[i] - region.tier_center(t)).abs() > EPS {
            violations.push(Violation::OffTier {
                cell: c.name.clone(),
            });
        } else {
            per_tier[t].push(i);
        }

        // Rows run the full x range of the row region; a legal object sits
        // with its bottom edge on a row boundary inside the row span.
        let bottom = y - hh;
        let k = ((bottom - rows.y0) / rows.row_height).round();
        let aligned = (bottom - (rows.y0 + k * rows.row_height)).abs() <= EPS && k >= -1e-12;
        let top_ok = y + hh <= rows.y0 + rows.num_rows as f64 * rows.row_height + EPS;
        let x_ok = x - hw >= rows.x_min - EPS && x + hw <= rows.x_max + EPS;
        if !aligned || !top_ok || !x_ok {
            violations.push(Violation::OffRow {
                cell: c.name.clone(),
            });
        } else if rows.site_width > 0.0 {
            let s = ((x - hw) - rows.x_min) / rows.site_width;
            if (s - s.round()).abs() > 1e-6 {
                violations.push(Violation::OffSite {
                    cell: c.name.clone(),
                });
            }
        }
    }

    // Pairwise overlaps per tier: sweep over x-sorted intervals, half-open
    // so abutting cells do not collide.
    for members in &per_tier {
        let mut order: Vec<usize> = members.clone();
        order.sort_by(|&a, &b| {
            let ax = placement.x[a] - nl.cells[a].width / 2.0;
            let bx = placement.x[b] - nl.cells[b].width / 2.0;
            ax.partial_cmp(&bx).unwrap().then(a.cmp(&b))
        });
        for (idx, &a) in order.iter().enumerate() {
            let (aw, ah) = (nl.cells[a].width / 2.0, nl.cells[a].height / 2.0);
            let a_hi = placement.x[a] + aw;
            for &b in &order[idx + 1..] {
                let (bw, bh) = (nl.cells[b].width / 2.0, nl.cells[b].height / 2.0);
                let b_lo = placement.x[b] - bw;
                if b_lo >= a_hi - EPS {
                    break;
                }
                let dx = (a_hi).min(placement.x[b] + bw) - b_lo.max(placement.x[a] - aw);
                let dy = (placement.y[a] + ah).min(placement.y[b] + bh)
                    - (placement.y[a] - ah).max(placement.y[b] - bh);
                if dx > EPS && dy > EPS {
                    violations.push(Violation::Overlap {
                        a: nl.cells[a].name.clone(),
                        b: nl.cells[b].name.clone(),
                        volume: dx * dy * region.tier_depth(),
                    });
                }
            }
        }
    }

    Ok(violations)
}

/// Total pairwise macro overlap volume plus macro out-of-bounds volume.
pub fn macro_overlap_volume(instance: &Instance, placement: &Placement) -> f64 {
    let nl = &instance.netlist;
    let depth = instance.region.tier_depth();
    let macros: Vec<usize> = (0..nl.cells.len())
        .filter(|&i| nl.cells[i].kind == CellKind::Macro)
        .collect();
    let tier_of = placement.tier.as_ref();
    let mut om = 0.0;
    for (ai, &a) in macros.iter().enumerate() {
        let (aw, ah) = (nl.cells[a].width / 2.0, nl.cells[a].height / 2.0);
        let (ax, ay) = (placement.x[a], placement.y[a]);
        // Out-of-bounds volume.
        let in_x = (ax + aw).min(1.0) - (ax - aw).max(0.0);
        let in_y = (ay + ah).min(1.0) - (ay - ah).max(0.0);
        let inside = in_x.max(0.0) * in_y.max(0.0);
        om += (nl.cells[a].area() - inside).max(0.0) * depth;
        for &b in &macros[ai + 1..] {
            if let Some(t) = tier_of {
                if t[a] != t[b] {
                    continue;
                }
            }
            let (bw, bh) = (nl.cells[b].width / 2.0, nl.cells[b].height / 2.0);
            let dx = (ax + aw).min(placement.x[b] + bw) - (ax - aw).max(placement.x[b] - bw);
            let dy = (ay + ah).min(placement.y[b] + bh) - (ay - ah).max(placement.y[b] - bh);
            if dx > 0.0 && dy > 0.0 {
                om += dx * dy * depth;
            }
        }
    }
    om
}

/// Full metric report at the given density grid.
pub fn evaluate(instance: &Instance, placement: &Placement, grid: BinGrid3) -> Result<EvalReport> {
    let nl = &instance.netlist;
    let region = &instance.region;
    let scale = &instance.scale;

    // Weighted physical planar wirelength: per-net weighted spans scaled to
    // physical units per dimension.
    let (mut hx, mut hy) = (0.0, 0.0);
    for net in &nl.nets {
        if net.pins.is_empty() {
            continue;
        }
        let (mut lo_x, mut hi_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY);
        for pin in &net.pins {
            let (px, py) = placement.pin_xy(pin);
            lo_x = lo_x.min(px);
            hi_x = hi_x.max(px);
            lo_y = lo_y.min(py);
            hi_y = hi_y.max(py);
        }
        hx += net.weight * (hi_x - lo_x).max(0.0) * scale.sx;
        hy += net.weight * (hi_y - lo_y).max(0.0) * scale.sy;
    }
    let hpwl = region.beta.x * hx + region.beta.y * hy;

    let vi = if placement.tier.is_some() {
        vi_count(nl, placement, region)?
    } else {
        0
    };
    let tau = overflow_3d(nl, placement, region, grid)?;
    let violations = if placement.tier.is_some() {
        check_legality(instance, placement)?
    } else {
        Vec::new()
    };

    let mut tier_utilization = vec![0.0; region.tiers];
    if let Some(tier_of) = placement.tier.as_ref() {
        for (i, c) in nl.cells.iter().enumerate() {
            if c.movable && !c.is_filler() {
                tier_utilization[tier_of[i].min(region.tiers - 1)] += c.area();
            }
        }
    }

    Ok(EvalReport {
        hpwl,
        hpwl_x: hx,
        hpwl_y: hy,
        vi,
        tau,
        grid_m: grid.m,
        legal: violations.is_empty(),
        violations,
        tier_utilization,
    })
}

/// Unweighted per-dimension spans in normalized units, for logging.
pub fn raw_spans(instance: &Instance, placement: &Placement) -> (f64, f64, f64) {
    hpwl_per_dim(&instance.netlist, placement)
}
