//! Seeded synthetic placement instances for tests and benchmarks.
//!
//! Instances are generated as planar row-based circuits (IBM-like geometry:
//! unit sites, 12-unit rows) and pushed through the standard planar-to-3D
//! transformation, so they exercise the same code path as file-based inputs.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::bookshelf::{transform_2d_to_3d, Bundle2D, Rows2D, Transform3DSpec};
use crate::model::{Cell, CellKind, Instance, Net, Netlist, Pin, Placement};
use crate::Result;

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub cells: usize,
    pub macros: usize,
    pub tiers: usize,
    pub seed: u64,
    pub rho_t: f64,
    /// Fraction of the planar placement area covered by cells.
    pub utilization: f64,
    /// Nets per standard cell; degrees are mostly 2..4.
    pub nets_per_cell: f64,
    pub whitespace: f64,
    pub vi_weight: Option<f64>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            cells: 1000,
            macros: 0,
            tiers: 2,
            seed: 1,
            rho_t: 1.0,
            utilization: 0.7,
            nets_per_cell: 1.2,
            whitespace: 0.10,
            vi_weight: None,
        }
    }
}

const ROW_H: f64 = 12.0;

/// Generate the planar bundle for `spec` (before the 3D transformation).
pub fn generate_planar(spec: &SynthSpec) -> Bundle2D {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut netlist = Netlist::default();
    let mut area = 0.0;
    for i in 0..spec.cells {
        let w = rng.random_range(3..=10) as f64;
        netlist.cells.push(Cell {
            name: format!("c{i}"),
            width: w,
            height: ROW_H,
            kind: CellKind::StdCell,
            movable: true,
        });
        area += w * ROW_H;
    }
    for i in 0..spec.macros {
        let rows_tall = rng.random_range(2..=5);
        let w = rng.random_range(24..=72) as f64;
        let h = rows_tall as f64 * ROW_H;
        netlist.cells.push(Cell {
            name: format!("m{i}"),
            width: w,
            height: h,
            kind: CellKind::Macro,
            movable: true,
        });
        area += w * h;
    }

    // Square-ish region sized for the requested utilization.
    let target = (area / spec.utilization).max(ROW_H * ROW_H);
    let num_rows = ((target.sqrt() / ROW_H).ceil() as usize).max(2);
    let width = (target / (num_rows as f64 * ROW_H)).ceil().max(16.0);
    let rows = Rows2D {
        y0: 0.0,
        row_height: ROW_H,
        num_rows,
        x_min: 0.0,
        x_max: width,
        site_width: 1.0,
    };

    // Boundary pads: zero-area fixed terminals around the perimeter.
    let n_pads = 16.max(spec.cells / 250);
    let first_pad = netlist.cells.len();
    for p in 0..n_pads {
        netlist.cells.push(Cell {
            name: format!("p{p}"),
            width: 0.0,
            height: 0.0,
            kind: CellKind::Io,
            movable: false,
        });
    }

    let n = netlist.cells.len();
    let mut positions = Placement::zeroed(n);
    for i in 0..first_pad {
        let c = &netlist.cells[i];
        positions.x[i] = rng.random_range(c.width / 2.0..=(width - c.width / 2.0).max(c.width));
        let h = rows.height();
        positions.y[i] = rng.random_range(c.height / 2.0..=(h - c.height / 2.0).max(c.height));
    }
    for p in 0..n_pads {
        let i = first_pad + p;
        let t = p as f64 / n_pads as f64;
        // Walk the perimeter.
        let (x, y) = match p % 4 {
            0 => (t * width, 0.0),
            1 => (width, t * rows.height()),
            2 => ((1.0 - t) * width, rows.height()),
            _ => (0.0, (1.0 - t) * rows.height()),
        };
        positions.x[i] = x;
        positions.y[i] = y;
    }

    // Random hyperedges, mostly short; a handful anchor to pads.
    let num_nets = ((spec.cells as f64 * spec.nets_per_cell) as usize).max(1);
    let movable_count = first_pad;
    let mut pinned = vec![false; movable_count];
    for e in 0..num_nets {
        let degree = match rng.random_range(0..10) {
            0..=5 => 2,
            6..=7 => 3,
            8 => rng.random_range(4..=6),
            _ => rng.random_range(4..=9),
        };
        let mut pins = Vec::with_capacity(degree);
        let mut used = Vec::with_capacity(degree);
        for _ in 0..degree {
            let cell = rng.random_range(0..movable_count);
            if used.contains(&cell) {
                continue;
            }
            used.push(cell);
            pinned[cell] = true;
            let c = &netlist.cells[cell];
            let dx = rng.random_range(-0.25..0.25) * c.width;
            let dy = rng.random_range(-0.25..0.25) * c.height;
            pins.push(Pin::OnCell { cell, dx, dy });
        }
        if rng.random_range(0..20) == 0 || e < n_pads {
            let pad = first_pad + rng.random_range(0..n_pads);
            pins.push(Pin::OnCell {
                cell: pad,
                dx: 0.0,
                dy: 0.0,
            });
        }
        if pins.len() >= 2 {
            netlist.nets.push(Net {
                name: format!("n{e}"),
                pins,
                weight: 1.0,
            });
        }
    }
    // Tie any unconnected cell to a random neighbor so the quadratic system
    // sees every object.
    for i in 0..movable_count {
        if !pinned[i] {
            let j = rng.random_range(0..movable_count);
            let name = format!("n_fix{i}");
            netlist.nets.push(Net {
                name,
                pins: vec![
                    Pin::OnCell { cell: i, dx: 0.0, dy: 0.0 },
                    Pin::OnCell { cell: j, dx: 0.0, dy: 0.0 },
                ],
                weight: 1.0,
            });
        }
    }

    Bundle2D {
        name: format!("synth_{}_{}", spec.cells, spec.seed),
        netlist,
        positions,
        rows,
    }
}

/// Generate a normalized 3D instance. Whitespace automatically grows in 10%
/// steps (up to 50%) when the largest macro cannot fit a tier.
pub fn generate(spec: &SynthSpec) -> Result<(Instance, Placement)> {
    let bundle = generate_planar(spec);
    let mut ws = spec.whitespace;
    loop {
        let t = Transform3DSpec {
            tiers: spec.tiers,
            extra_whitespace: ws,
            rho_t: spec.rho_t,
            vi_weight: spec.vi_weight,
        };
        match transform_2d_to_3d(&bundle, &t) {
            Ok(out) => return Ok(out),
            Err(crate::Error::InfeasibleTransform(_)) if ws < 0.5 => {
                ws = (ws + 0.10).min(0.5);
            }
            Err(e) => return Err(e),
        }
    }
}
