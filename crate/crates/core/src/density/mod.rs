//! The electrostatic density model.
//!
//! Every placement object is a positive charge whose quantity is its volume
//! (its planar area in the per-tier 2D stages). Objects are splatted onto a
//! uniform bin grid proportionally to geometric overlap, the potential and
//! field follow from the spectral Poisson solve, and the density cost is the
//! total potential energy `U = sum_i q_i Phi_i`. The spreading force on an
//! object is its charge times the field averaged over its footprint with the
//! same weights used for splatting.
//!
//! Objects smaller than a bin along some axis are inflated to bin size along
//! that axis with their density scaled down, preserving total charge; this
//! keeps the coarse-grid field defined for tiny cells. Density overflow, the
//! global-placement stopping metric, is computed from exact (uninflated)
//! overlaps of movable non-filler objects.

pub mod spectral;

pub use spectral::{FieldState2, FieldState3, SpectralSolver2, SpectralSolver3};

use crate::model::{BinGrid2, BinGrid3, CellKind, Netlist, Placement, Region3D};
use crate::{Error, Result};

/// How per-object potential and field are read off the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleMode {
    /// Overlap-weighted average over the object's (inflated) footprint.
    #[default]
    OverlapWeighted,
    /// Value of the bin containing the object center.
    Center,
}

/// Binned density in units of charge per bin volume.
#[derive(Debug, Clone)]
pub struct DensityMap3 {
    pub grid: BinGrid3,
    pub rho: Vec<f64>,
    pub mean_removed: bool,
}

impl DensityMap3 {
    pub fn remove_mean(&mut self) {
        let mean = self.rho.iter().sum::<f64>() / self.rho.len() as f64;
        for v in self.rho.iter_mut() {
            *v -= mean;
        }
        self.mean_removed = true;
    }
}

/// Planar density for one tier.
#[derive(Debug, Clone)]
pub struct DensityMap2 {
    pub grid: BinGrid2,
    pub rho: Vec<f64>,
    pub mean_removed: bool,
}

impl DensityMap2 {
    pub fn remove_mean(&mut self) {
        let mean = self.rho.iter().sum::<f64>() / self.rho.len() as f64;
        for v in self.rho.iter_mut() {
            *v -= mean;
        }
        self.mean_removed = true;
    }
}

/// Potential, field, and charge sampled at one object.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChargeSample {
    pub q: f64,
    pub phi: f64,
    pub e: [f64; 3],
}

#[derive(Clone, Copy)]
struct Span {
    lo: f64,
    hi: f64,
}

impl Span {
    fn around(center: f64, half: f64) -> Span {
        Span {
            lo: center - half,
            hi: center + half,
        }
    }

    fn len(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    /// Inflate to at least one bin width, then shift back inside [0,1] and
    /// clip, so the span never leaves the domain.
    fn inflate_and_fit(mut self, min_len: f64) -> Span {
        if self.len() < min_len {
            let c = 0.5 * (self.lo + self.hi);
            self.lo = c - 0.5 * min_len;
            self.hi = c + 0.5 * min_len;
        }
        if self.lo < 0.0 {
            self.hi -= self.lo;
            self.lo = 0.0;
        }
        if self.hi > 1.0 {
            self.lo -= self.hi - 1.0;
            self.hi = 1.0;
        }
        self.lo = self.lo.max(0.0);
        self.hi = self.hi.min(1.0);
        self
    }

    fn clip_unit(mut self) -> Span {
        self.lo = self.lo.max(0.0);
        self.hi = self.hi.min(1.0);
        self
    }
}

/// Visit the bins overlapped by `span` on an `m`-bin axis, yielding the bin
/// index and the absolute overlap length.
fn for_each_bin(span: Span, m: usize, mut f: impl FnMut(usize, f64)) {
    if span.len() <= 0.0 {
        return;
    }
    let w = 1.0 / m as f64;
    let first = ((span.lo / w).floor() as isize).clamp(0, m as isize - 1) as usize;
    let last = ((span.hi / w).floor() as isize).clamp(0, m as isize - 1) as usize;
    for b in first..=last {
        let lo = span.lo.max(b as f64 * w);
        let hi = span.hi.min((b + 1) as f64 * w);
        if hi > lo {
            f(b, hi - lo);
        }
    }
}

fn charge_of(kind: CellKind, area: f64, tier_depth: f64) -> f64 {
    match kind {
        CellKind::Io => 0.0,
        _ => area * tier_depth,
    }
}

struct Footprint3 {
    sx: Span,
    sy: Span,
    sz: Span,
    volume: f64,
}

fn footprint_3d(
    netlist: &Netlist,
    placement: &Placement,
    region: &Region3D,
    grid: BinGrid3,
    ci: usize,
    inflate: bool,
) -> Option<Result<Footprint3>> {
    let cell = &netlist.cells[ci];
    let q = charge_of(cell.kind, cell.area(), region.tier_depth());
    if q <= 0.0 {
        return None;
    }
    let hd = 0.5 * region.tier_depth();
    let raw_x = Span::around(placement.x[ci], 0.5 * cell.width);
    let raw_y = Span::around(placement.y[ci], 0.5 * cell.height);
    let raw_z = Span::around(placement.z[ci], hd);
    let eps = 1e-9;
    if raw_x.lo < -eps || raw_x.hi > 1.0 + eps || raw_y.lo < -eps || raw_y.hi > 1.0 + eps {
        return Some(Err(Error::State(format!(
            "object {} out of bounds at ({}, {}, {})",
            cell.name, placement.x[ci], placement.y[ci], placement.z[ci]
        ))));
    }
    let bw = grid.bin_width();
    let (sx, sy, sz) = if inflate {
        (
            raw_x.inflate_and_fit(bw),
            raw_y.inflate_and_fit(bw),
            raw_z.inflate_and_fit(bw),
        )
    } else {
        (raw_x.clip_unit(), raw_y.clip_unit(), raw_z.clip_unit())
    };
    let volume = sx.len() * sy.len() * sz.len();
    if volume <= 0.0 {
        return Some(Err(Error::State(format!(
            "object {} has empty in-domain footprint",
            cell.name
        ))));
    }
    Some(Ok(Footprint3 { sx, sy, sz, volume }))
}

/// Splat every charged object onto the 3D grid: each object's volume is
/// distributed over the bins its (inflated) cuboid overlaps, proportionally
/// to overlap, then converted to density by the bin volume.
pub fn splat_density_3d(
    netlist: &Netlist,
    placement: &Placement,
    region: &Region3D,
    grid: BinGrid3,
) -> Result<DensityMap3> {
    let mut rho = vec![0.0; grid.bins()];
    for ci in 0..netlist.cells.len() {
        let Some(fp) = footprint_3d(netlist, placement, region, grid, ci, true) else {
            continue;
        };
        let fp = fp?;
        let cell = &netlist.cells[ci];
        let q = charge_of(cell.kind, cell.area(), region.tier_depth());
        splat_box_3d(&fp, q, grid, &mut rho);
    }
    let inv = 1.0 / grid.bin_volume();
    for v in rho.iter_mut() {
        *v *= inv;
    }
    Ok(DensityMap3 {
        grid,
        rho,
        mean_removed: false,
    })
}

fn splat_box_3d(fp: &Footprint3, q: f64, grid: BinGrid3, out: &mut [f64]) {
    let m = grid.m;
    let scale = q / fp.volume;
    for_each_bin(fp.sx, m, |bx, ox| {
        for_each_bin(fp.sy, m, |by, oy| {
            let base = (bx * m + by) * m;
            for_each_bin(fp.sz, m, |bz, oz| {
                out[base + bz] += scale * ox * oy * oz;
            });
        });
    });
}

/// Exact (uninflated) volume accumulation for the overflow metric.
/// Returns total accumulated volume.
pub fn splat_exact_volume_3d(
    netlist: &Netlist,
    placement: &Placement,
    region: &Region3D,
    grid: BinGrid3,
    select: impl Fn(&crate::model::Cell) -> bool,
    out: &mut [f64],
) -> Result<f64> {
    let m = grid.m;
    let mut total = 0.0;
    for ci in 0..netlist.cells.len() {
        if !select(&netlist.cells[ci]) {
            continue;
        }
        let Some(fp) = footprint_3d(netlist, placement, region, grid, ci, false) else {
            continue;
        };
        let fp = fp?;
        total += fp.volume;
        for_each_bin(fp.sx, m, |bx, ox| {
            for_each_bin(fp.sy, m, |by, oy| {
                let base = (bx * m + by) * m;
                for_each_bin(fp.sz, m, |bz, oz| {
                    out[base + bz] += ox * oy * oz;
                });
            });
        });
    }
    Ok(total)
}

/// Density overflow: the movable non-filler volume exceeding the
/// target-density share of each bin's whitespace, normalized by the total
/// movable non-filler volume. An empty instance overflows by zero.
pub fn overflow_from_bins(
    movable_vol: &[f64],
    fixed_vol: &[f64],
    grid: BinGrid3,
    rho_t: f64,
    total_movable: f64,
) -> f64 {
    if total_movable <= 0.0 {
        return 0.0;
    }
    let bin_vol = grid.bin_volume();
    let mut acc = 0.0;
    for (vm, vf) in movable_vol.iter().zip(fixed_vol) {
        let ws = (bin_vol - vf).max(0.0);
        acc += (vm - rho_t * ws).max(0.0);
    }
    acc / total_movable
}

/// Convenience: overflow of a placement measured on a fresh grid.
pub fn overflow_3d(
    netlist: &Netlist,
    placement: &Placement,
    region: &Region3D,
    grid: BinGrid3,
) -> Result<f64> {
    let mut movable = vec![0.0; grid.bins()];
    let mut fixed = vec![0.0; grid.bins()];
    let total = splat_exact_volume_3d(
        netlist,
        placement,
        region,
        grid,
        |c| c.movable && !c.is_filler(),
        &mut movable,
    )?;
    splat_exact_volume_3d(netlist, placement, region, grid, |c| !c.movable, &mut fixed)?;
    Ok(overflow_from_bins(
        &movable,
        &fixed,
        grid,
        region.rho_t,
        total,
    ))
}

/// Sample potential and field at every object with the splat weights.
pub fn sample_charges_3d(
    netlist: &Netlist,
    placement: &Placement,
    region: &Region3D,
    field: &FieldState3,
    mode: SampleMode,
) -> Result<Vec<ChargeSample>> {
    let grid = field.grid;
    let m = grid.m;
    let mut samples = vec![ChargeSample::default(); netlist.cells.len()];
    for ci in 0..netlist.cells.len() {
        let Some(fp) = footprint_3d(netlist, placement, region, grid, ci, true) else {
            continue;
        };
        let fp = fp?;
        let cell = &netlist.cells[ci];
        let q = charge_of(cell.kind, cell.area(), region.tier_depth());
        let mut s = ChargeSample {
            q,
            ..Default::default()
        };
        match mode {
            SampleMode::OverlapWeighted => {
                let inv = 1.0 / fp.volume;
                for_each_bin(fp.sx, m, |bx, ox| {
                    for_each_bin(fp.sy, m, |by, oy| {
                        let base = (bx * m + by) * m;
                        for_each_bin(fp.sz, m, |bz, oz| {
                            let w = ox * oy * oz * inv;
                            let i = base + bz;
                            s.phi += w * field.phi[i];
                            s.e[0] += w * field.ex[i];
                            s.e[1] += w * field.ey[i];
                            s.e[2] += w * field.ez[i];
                        });
                    });
                });
            }
            SampleMode::Center => {
                let at = |c: f64| ((c * m as f64).floor() as isize).clamp(0, m as isize - 1) as usize;
                let i = (at(placement.x[ci]) * m + at(placement.y[ci])) * m + at(placement.z[ci]);
                s.phi = field.phi[i];
                s.e = [field.ex[i], field.ey[i], field.ez[i]];
            }
        }
        samples[ci] = s;
    }
    Ok(samples)
}

/// Total potential energy `U = sum_i q_i Phi_i` over all charged objects.
pub fn energy(samples: &[ChargeSample]) -> f64 {
    samples.iter().map(|s| s.q * s.phi).sum()
}

/// Spreading force per object: `q_i * E_i`, pointing from dense regions
/// toward sparse ones. Descending the combined objective uses `-q_i * E_i`
/// as the density-gradient contribution.
pub fn density_forces(samples: &[ChargeSample]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let mut fx = vec![0.0; n];
    let mut fy = vec![0.0; n];
    let mut fz = vec![0.0; n];
    for (i, s) in samples.iter().enumerate() {
        fx[i] = s.q * s.e[0];
        fy[i] = s.q * s.e[1];
        fz[i] = s.q * s.e[2];
    }
    (fx, fy, fz)
}

/// One-shot field solve from a mean-removed density map.
pub fn solve_field(density: &DensityMap3) -> Result<FieldState3> {
    if !density.mean_removed {
        return Err(Error::State(
            "solve_field requires a mean-removed density".into(),
        ));
    }
    let mut solver = SpectralSolver3::new(density.grid);
    let mut out = FieldState3::zeroed(density.grid);
    solver.solve_into(&density.rho, &mut out);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Planar (per-tier) variants used by the 2D placement stages.
// ---------------------------------------------------------------------------

struct Footprint2 {
    sx: Span,
    sy: Span,
    area: f64,
}

fn footprint_2d(
    netlist: &Netlist,
    placement: &Placement,
    grid: BinGrid2,
    ci: usize,
    inflate: bool,
) -> Option<Result<Footprint2>> {
    let cell = &netlist.cells[ci];
    if cell.kind == CellKind::Io || cell.area() <= 0.0 {
        return None;
    }
    let raw_x = Span::around(placement.x[ci], 0.5 * cell.width);
    let raw_y = Span::around(placement.y[ci], 0.5 * cell.height);
    let eps = 1e-9;
    if raw_x.lo < -eps || raw_x.hi > 1.0 + eps || raw_y.lo < -eps || raw_y.hi > 1.0 + eps {
        return Some(Err(Error::State(format!(
            "object {} out of bounds at ({}, {})",
            cell.name, placement.x[ci], placement.y[ci]
        ))));
    }
    let bw = grid.bin_width();
    let (sx, sy) = if inflate {
        (raw_x.inflate_and_fit(bw), raw_y.inflate_and_fit(bw))
    } else {
        (raw_x.clip_unit(), raw_y.clip_unit())
    };
    let area = sx.len() * sy.len();
    if area <= 0.0 {
        return Some(Err(Error::State(format!(
            "object {} has empty in-domain footprint",
            cell.name
        ))));
    }
    Some(Ok(Footprint2 { sx, sy, area }))
}

/// Splat the charges of `cells` (planar charge = area) onto one tier's grid.
pub fn splat_density_2d(
    netlist: &Netlist,
    placement: &Placement,
    grid: BinGrid2,
    cells: &[usize],
) -> Result<DensityMap2> {
    let m = grid.m;
    let mut rho = vec![0.0; grid.bins()];
    for &ci in cells {
        let Some(fp) = footprint_2d(netlist, placement, grid, ci, true) else {
            continue;
        };
        let fp = fp?;
        let q = netlist.cells[ci].area();
        let scale = q / fp.area;
        for_each_bin(fp.sx, m, |bx, ox| {
            for_each_bin(fp.sy, m, |by, oy| {
                rho[bx * m + by] += scale * ox * oy;
            });
        });
    }
    let inv = 1.0 / grid.bin_area();
    for v in rho.iter_mut() {
        *v *= inv;
    }
    Ok(DensityMap2 {
        grid,
        rho,
        mean_removed: false,
    })
}

/// Exact per-bin area accumulation on one tier. Returns total accumulated.
pub fn splat_exact_area_2d(
    netlist: &Netlist,
    placement: &Placement,
    grid: BinGrid2,
    cells: &[usize],
    out: &mut [f64],
) -> Result<f64> {
    let m = grid.m;
    let mut total = 0.0;
    for &ci in cells {
        let Some(fp) = footprint_2d(netlist, placement, grid, ci, false) else {
            continue;
        };
        let fp = fp?;
        total += fp.area;
        for_each_bin(fp.sx, m, |bx, ox| {
            for_each_bin(fp.sy, m, |by, oy| {
                out[bx * m + by] += ox * oy;
            });
        });
    }
    Ok(total)
}

/// Per-object planar field samples on one tier.
pub fn sample_charges_2d(
    netlist: &Netlist,
    placement: &Placement,
    field: &FieldState2,
    cells: &[usize],
    mode: SampleMode,
) -> Result<Vec<(usize, ChargeSample)>> {
    let grid = field.grid;
    let m = grid.m;
    let mut samples = Vec::with_capacity(cells.len());
    for &ci in cells {
        let Some(fp) = footprint_2d(netlist, placement, grid, ci, true) else {
            continue;
        };
        let fp = fp?;
        let q = netlist.cells[ci].area();
        let mut s = ChargeSample {
            q,
            ..Default::default()
        };
        match mode {
            SampleMode::OverlapWeighted => {
                let inv = 1.0 / fp.area;
                for_each_bin(fp.sx, m, |bx, ox| {
                    for_each_bin(fp.sy, m, |by, oy| {
                        let w = ox * oy * inv;
                        let i = bx * m + by;
                        s.phi += w * field.phi[i];
                        s.e[0] += w * field.ex[i];
                        s.e[1] += w * field.ey[i];
                    });
                });
            }
            SampleMode::Center => {
                let at = |c: f64| ((c * m as f64).floor() as isize).clamp(0, m as isize - 1) as usize;
                let i = at(placement.x[ci]) * m + at(placement.y[ci]);
                s.phi = field.phi[i];
                s.e = [field.ex[i], field.ey[i], 0.0];
            }
        }
        samples.push((ci, s));
    }
    Ok(samples)
}
