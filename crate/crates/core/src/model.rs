//! Core domain types shared by every stage of the placer.
//!
//! All geometry inside the engine lives in a normalized domain: the placement
//! cuboid is `[0,1]^3`, coordinates are cell centers, and a [`DomainScale`]
//! maps back to the input's physical units at the I/O boundary.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type CellId = usize;
pub type NetId = usize;

/// Role of a placement object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    StdCell,
    Macro,
    Filler,
    Fixed,
    Io,
}

/// One placement object. Dimensions are planar; the vertical extent of every
/// object is one tier depth, so `volume = width * height * tier_depth`.
#[derive(Debug, Clone)]
pub struct Cell {
    pub name: String,
    pub width: f64,
    pub height: f64,
    pub kind: CellKind,
    pub movable: bool,
}

impl Cell {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn volume(&self, tier_depth: f64) -> f64 {
        self.width * self.height * tier_depth
    }

    pub fn is_filler(&self) -> bool {
        self.kind == CellKind::Filler
    }
}

/// A net pin: either an offset from an owning cell's center, or an absolute
/// fixed location (pads that were folded away as cell-less terminals).
#[derive(Debug, Clone)]
pub enum Pin {
    OnCell { cell: CellId, dx: f64, dy: f64 },
    Fixed { x: f64, y: f64, z: f64 },
}

impl Pin {
    pub fn cell(&self) -> Option<CellId> {
        match self {
            Pin::OnCell { cell, .. } => Some(*cell),
            Pin::Fixed { .. } => None,
        }
    }
}

/// A weighted hyperedge over pins.
#[derive(Debug, Clone)]
pub struct Net {
    pub name: String,
    pub pins: Vec<Pin>,
    pub weight: f64,
}

/// The circuit: cells plus nets. Filler cells, when present, are always a
/// suffix of `cells` so they can be dropped in O(1).
#[derive(Debug, Clone, Default)]
pub struct Netlist {
    pub cells: Vec<Cell>,
    pub nets: Vec<Net>,
}

impl Netlist {
    pub fn num_movable(&self) -> usize {
        self.cells.iter().filter(|c| c.movable).count()
    }

    /// Indices of movable cells, in cell order.
    pub fn movable_ids(&self) -> Vec<CellId> {
        (0..self.cells.len())
            .filter(|&i| self.cells[i].movable)
            .collect()
    }

    /// Net incidence per cell: `|N_i|` counts each net once even if the cell
    /// carries several of its pins.
    pub fn nets_per_cell(&self) -> Vec<Vec<NetId>> {
        let mut incident = vec![Vec::new(); self.cells.len()];
        for (e, net) in self.nets.iter().enumerate() {
            let mut last: Option<CellId> = None;
            let mut seen: Vec<CellId> = Vec::new();
            for pin in &net.pins {
                if let Some(c) = pin.cell() {
                    if last == Some(c) || seen.contains(&c) {
                        last = Some(c);
                        continue;
                    }
                    seen.push(c);
                    incident[c].push(e);
                    last = Some(c);
                }
            }
        }
        incident
    }

    pub fn average_stdcell_dims(&self) -> Option<(f64, f64)> {
        let mut n = 0usize;
        let (mut w, mut h) = (0.0, 0.0);
        for c in &self.cells {
            if c.kind == CellKind::StdCell {
                w += c.width;
                h += c.height;
                n += 1;
            }
        }
        if n == 0 {
            None
        } else {
            Some((w / n as f64, h / n as f64))
        }
    }
}

/// Dimensional weights of the wirelength objective.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Beta {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Beta {
    fn default() -> Self {
        Beta {
            x: 1.0,
            y: 1.0,
            z: 1.0,
        }
    }
}

/// The normalized placement cuboid: unit extents, `tiers` equal slices along
/// z, a target density, and the dimensional wirelength weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Region3D {
    pub tiers: usize,
    pub beta: Beta,
    pub rho_t: f64,
}

impl Region3D {
    pub fn new(tiers: usize, rho_t: f64) -> Result<Self> {
        if tiers == 0 {
            return Err(Error::InvalidRegion("tier count must be >= 1".into()));
        }
        if !(rho_t > 0.0 && rho_t <= 1.0) {
            return Err(Error::InvalidRegion(format!(
                "target density {rho_t} outside (0, 1]"
            )));
        }
        Ok(Region3D {
            tiers,
            beta: Beta::default(),
            rho_t,
        })
    }

    pub fn tier_depth(&self) -> f64 {
        1.0 / self.tiers as f64
    }

    /// Center z coordinate of tier `t`.
    pub fn tier_center(&self, t: usize) -> f64 {
        (t as f64 + 0.5) * self.tier_depth()
    }

    /// Tier whose slab contains `z`; exact boundary values go to the lower
    /// tier.
    pub fn tier_of_z(&self, z: f64) -> usize {
        let d = self.tier_depth();
        let raw = z / d;
        let mut t = raw.floor();
        // A coordinate exactly on a boundary (raw integral, > 0) ties down.
        if raw > 0.0 && raw == t {
            t -= 1.0;
        }
        (t.max(0.0) as usize).min(self.tiers - 1)
    }
}

/// Mapping between physical input units and the normalized domain.
/// `x_phys = x0 + x_norm * sx`, and z maps tier indices only.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DomainScale {
    pub x0: f64,
    pub y0: f64,
    pub sx: f64,
    pub sy: f64,
}

impl DomainScale {
    pub fn identity() -> Self {
        DomainScale {
            x0: 0.0,
            y0: 0.0,
            sx: 1.0,
            sy: 1.0,
        }
    }

    pub fn to_phys(&self, x: f64, y: f64) -> (f64, f64) {
        (self.x0 + x * self.sx, self.y0 + y * self.sy)
    }

    pub fn to_norm(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.x0) / self.sx, (y - self.y0) / self.sy)
    }
}

/// Normalize a physical cuboid to the unit cube, recording scale factors.
pub fn normalize_region(
    x_min: f64,
    y_min: f64,
    width: f64,
    height: f64,
    tiers: usize,
    rho_t: f64,
) -> Result<(Region3D, DomainScale)> {
    if !(width > 0.0) || !(height > 0.0) {
        return Err(Error::InvalidRegion(format!(
            "nonpositive extent {width} x {height}"
        )));
    }
    let region = Region3D::new(tiers, rho_t)?;
    let scale = DomainScale {
        x0: x_min,
        y0: y_min,
        sx: width,
        sy: height,
    };
    Ok((region, scale))
}

/// Row geometry shared by all tiers, in normalized units. Rows run along x.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowGrid {
    pub y0: f64,
    pub row_height: f64,
    pub num_rows: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub site_width: f64,
}

impl RowGrid {
    pub fn row_bottom(&self, r: usize) -> f64 {
        self.y0 + r as f64 * self.row_height
    }

    /// Snap a left edge onto the site grid (toward the nearest site).
    pub fn snap_site(&self, x: f64) -> f64 {
        if self.site_width <= 0.0 {
            return x;
        }
        let k = ((x - self.x_min) / self.site_width).round();
        self.x_min + k * self.site_width
    }

    /// Snap a bottom edge onto the row grid.
    pub fn snap_row(&self, y: f64) -> f64 {
        if self.row_height <= 0.0 {
            return y;
        }
        let k = ((y - self.y0) / self.row_height)
            .round()
            .clamp(0.0, (self.num_rows.max(1) - 1) as f64);
        self.y0 + k * self.row_height
    }
}

/// Continuous center coordinates for every cell, plus discrete tier indices
/// once assignment has run. Fixed cells carry their (immutable) coordinates
/// in the same arrays.
#[derive(Debug, Clone, Default)]
pub struct Placement {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub tier: Option<Vec<usize>>,
}

impl Placement {
    pub fn zeroed(n: usize) -> Self {
        Placement {
            x: vec![0.0; n],
            y: vec![0.0; n],
            z: vec![0.0; n],
            tier: None,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn truncate(&mut self, n: usize) {
        self.x.truncate(n);
        self.y.truncate(n);
        self.z.truncate(n);
        if let Some(t) = &mut self.tier {
            t.truncate(n);
        }
    }

    /// Position of a pin given the current coordinates.
    pub fn pin_xy(&self, pin: &Pin) -> (f64, f64) {
        match pin {
            Pin::OnCell { cell, dx, dy } => (self.x[*cell] + dx, self.y[*cell] + dy),
            Pin::Fixed { x, y, .. } => (*x, *y),
        }
    }

    pub fn pin_z(&self, pin: &Pin) -> f64 {
        match pin {
            Pin::OnCell { cell, .. } => self.z[*cell],
            Pin::Fixed { z, .. } => *z,
        }
    }

    pub fn pin_tier(&self, pin: &Pin, region: &Region3D) -> Option<usize> {
        match pin {
            Pin::OnCell { cell, .. } => self.tier.as_ref().map(|t| t[*cell]),
            Pin::Fixed { z, .. } => Some(region.tier_of_z(*z)),
        }
    }
}

/// Cubic bin grid for the 3D density stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinGrid3 {
    pub m: usize,
}

impl BinGrid3 {
    pub fn bins(&self) -> usize {
        self.m * self.m * self.m
    }

    pub fn bin_width(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn bin_volume(&self) -> f64 {
        let w = self.bin_width();
        w * w * w
    }
}

/// Square bin grid for a per-tier 2D density stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinGrid2 {
    pub m: usize,
}

impl BinGrid2 {
    pub fn bins(&self) -> usize {
        self.m * self.m
    }

    pub fn bin_width(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn bin_area(&self) -> f64 {
        let w = self.bin_width();
        w * w
    }
}

fn pow2_at_least(r: f64, lo: usize, hi: usize) -> usize {
    let mut m = lo;
    while (m as f64) < r - 1e-9 && m < hi {
        m *= 2;
    }
    m
}

/// Size the cubic 3D bin grid so that, at target density, every `k` average
/// standard cells share one bin: `|B| = V_R / (k * V_avg / rho_t)`. The side
/// is rounded up to a power of two and clamped to `[8, 256]`.
pub fn size_bin_grid(avg_std_cell_volume: f64, rho_t: f64, k: f64) -> Result<BinGrid3> {
    if !(avg_std_cell_volume > 0.0) {
        return Err(Error::InvalidInput(format!(
            "average cell volume {avg_std_cell_volume} must be positive"
        )));
    }
    if !(rho_t > 0.0 && rho_t <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "target density {rho_t} outside (0, 1]"
        )));
    }
    let bins = 1.0 / (k * avg_std_cell_volume / rho_t);
    let m = pow2_at_least(bins.max(1.0).cbrt(), 8, 256);
    Ok(BinGrid3 { m })
}

/// Size a square per-tier 2D bin grid by the planar analogue of the rule
/// above, clamped to `[8, 512]`.
pub fn size_bin_grid_2d(avg_std_cell_area: f64, rho_t: f64, k: f64) -> Result<BinGrid2> {
    if !(avg_std_cell_area > 0.0) {
        return Err(Error::InvalidInput(format!(
            "average cell area {avg_std_cell_area} must be positive"
        )));
    }
    if !(rho_t > 0.0 && rho_t <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "target density {rho_t} outside (0, 1]"
        )));
    }
    let bins = 1.0 / (k * avg_std_cell_area / rho_t);
    let m = pow2_at_least(bins.max(1.0).sqrt(), 8, 512);
    Ok(BinGrid2 { m })
}

/// Weight of one tier crossing relative to one unit of planar wirelength in
/// the normalized domain, from the capacitance ratio of a vertical
/// interconnect versus a one-row-height wire.
pub fn compute_vi_weight(tiers: usize, rows: usize, c_vi: f64, c_row: f64) -> Result<f64> {
    if rows == 0 {
        return Err(Error::InvalidInput("row count must be positive".into()));
    }
    if !(c_vi > 0.0) || !(c_row > 0.0) {
        return Err(Error::InvalidInput(
            "capacitances must be positive".into(),
        ));
    }
    Ok(tiers as f64 * c_vi / (rows as f64 * c_row))
}

/// Default vertical-interconnect capacitance (fF), a 45nm through-silicon via.
pub const C_VI_DEFAULT: f64 = 30.0;
/// Default capacitance (fF) of planar wire spanning one row height at 45nm.
pub const C_ROW_DEFAULT: f64 = 0.3;

/// A complete placement instance in normalized coordinates.
#[derive(Debug, Clone)]
pub struct Instance {
    pub netlist: Netlist,
    pub region: Region3D,
    pub rows: RowGrid,
    pub scale: DomainScale,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normalize_unit_tiers() {
        let (region, scale) = normalize_region(0.0, 0.0, 1000.0, 1000.0, 4, 1.0).unwrap();
        assert_eq!(region.tiers, 4);
        assert_relative_eq!(region.tier_depth(), 0.25);
        assert_relative_eq!(scale.sx, 1000.0);
        assert_relative_eq!(scale.sy, 1000.0);
    }

    #[test]
    fn normalize_records_aspect() {
        let (region, scale) = normalize_region(0.0, 0.0, 800.0, 400.0, 2, 1.0).unwrap();
        assert_relative_eq!(region.tier_depth(), 0.5);
        assert_relative_eq!(scale.sx / scale.sy, 2.0);
    }

    #[test]
    fn normalize_roundtrip_exact() {
        let (_, scale) = normalize_region(17.0, -4.0, 800.0, 400.0, 2, 1.0).unwrap();
        let (xn, yn) = (0.3, 0.7);
        let (xp, yp) = scale.to_phys(xn, yn);
        let (xb, yb) = scale.to_norm(xp, yp);
        assert!((xb - xn).abs() <= 1e-12 * xn.abs());
        assert!((yb - yn).abs() <= 1e-12 * yn.abs());
    }

    #[test]
    fn normalize_rejects_bad_extent() {
        assert!(matches!(
            normalize_region(0.0, 0.0, 0.0, 5.0, 1, 1.0),
            Err(Error::InvalidRegion(_))
        ));
        assert!(matches!(
            normalize_region(0.0, 0.0, 10.0, 10.0, 0, 1.0),
            Err(Error::InvalidRegion(_))
        ));
    }

    #[test]
    fn grid_sizing_examples() {
        // |B| = 4096 -> m = 16.
        assert_eq!(size_bin_grid(1.0 / 4096.0, 1.0, 1.0).unwrap().m, 16);
        // |B| = 500 -> cbrt ~ 7.94 -> 8.
        assert_eq!(size_bin_grid(1.0 / 1000.0, 0.5, 1.0).unwrap().m, 8);
        // One cell filling the region: clamped at the floor.
        assert_eq!(size_bin_grid(1.0, 1.0, 1.0).unwrap().m, 8);
    }

    #[test]
    fn grid_sizing_clamps_high() {
        assert_eq!(size_bin_grid(1e-12, 1.0, 1.0).unwrap().m, 256);
        assert_eq!(size_bin_grid_2d(1e-12, 1.0, 1.0).unwrap().m, 512);
    }

    #[test]
    fn grid_is_cubic_power_of_two() {
        for &v in &[1e-2, 1e-3, 3.7e-4, 1e-5, 1e-7] {
            let g = size_bin_grid(v, 0.9, 1.0).unwrap();
            assert!(g.m.is_power_of_two());
            assert!((8..=256).contains(&g.m));
        }
    }

    #[test]
    fn vi_weight_examples() {
        let w = compute_vi_weight(4, 100, C_VI_DEFAULT, C_ROW_DEFAULT).unwrap();
        assert_relative_eq!(w, 4.0);
        let w = compute_vi_weight(2, 200, C_VI_DEFAULT, C_ROW_DEFAULT).unwrap();
        assert_relative_eq!(w, 1.0);
        // Single tier: value exists, callers ignore it.
        assert!(compute_vi_weight(1, 10, C_VI_DEFAULT, C_ROW_DEFAULT).unwrap() > 0.0);
        assert!(compute_vi_weight(2, 0, C_VI_DEFAULT, C_ROW_DEFAULT).is_err());
    }

    #[test]
    fn tier_boundary_ties_go_down() {
        let region = Region3D::new(2, 1.0).unwrap();
        assert_eq!(region.tier_of_z(0.49), 0);
        assert_eq!(region.tier_of_z(0.5), 0);
        assert_eq!(region.tier_of_z(0.51), 1);
        assert_eq!(region.tier_of_z(0.0), 0);
        assert_eq!(region.tier_of_z(1.0), 1);
    }

    #[test]
    fn volume_is_area_times_tier_depth() {
        let c = Cell {
            name: "a".into(),
            width: 2.0,
            height: 3.0,
            kind: CellKind::StdCell,
            movable: true,
        };
        assert_relative_eq!(c.volume(0.25), 1.5);
    }
}
