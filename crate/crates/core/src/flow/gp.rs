//! Global-placement objectives: smoothed wirelength plus the electrostatic
//! density penalty, posed over a flat variable vector for the solver.
//!
//! The 3D stage optimizes (x, y, z) of every movable object against one
//! cubic grid. The multi-tier 2D stage freezes z and optimizes (x, y)
//! against one planar grid per tier, all tiers sharing the resolution and
//! the smoothing width; nets still pull across tiers since wirelength is
//! evaluated over all pins regardless of tier.

use crate::density::{
    sample_charges_2d, sample_charges_3d, splat_exact_area_2d, splat_exact_volume_3d,
    FieldState2, FieldState3, SampleMode, SpectralSolver2, SpectralSolver3,
};
use crate::model::{BinGrid2, BinGrid3, CellKind, Instance, Placement};
use crate::optim::{EvalOut, PlacementObjective, PrecondMode, Preconditioner};
use crate::wirelength::{hpwl, wa_gradient, Smoothing};
use crate::Result;

fn net_degrees(instance: &Instance) -> Vec<f64> {
    instance
        .netlist
        .nets_per_cell()
        .iter()
        .map(|nets| nets.len() as f64)
        .collect()
}

/// 3D mixed-size global placement objective.
pub struct Gp3d<'a> {
    instance: &'a Instance,
    movables: Vec<usize>,
    grid: BinGrid3,
    solver: SpectralSolver3,
    field: FieldState3,
    /// Charge and exact volume of immovable objects, accumulated once.
    fixed_charge: Vec<f64>,
    fixed_volume: Vec<f64>,
    rho: Vec<f64>,
    movable_volume: Vec<f64>,
    pre: Preconditioner,
    pl: Placement,
    /// Netlist view with immovable footprints zeroed, built once.
    movable_view: crate::model::Netlist,
    gx: Vec<f64>,
    gy: Vec<f64>,
    gz: Vec<f64>,
    include_z: bool,
}

impl<'a> Gp3d<'a> {
    pub fn new(
        instance: &'a Instance,
        placement: &Placement,
        grid: BinGrid3,
        precond: PrecondMode,
    ) -> Result<Self> {
        let nl = &instance.netlist;
        let region = &instance.region;
        let movables = nl.movable_ids();
        let bins = grid.bins();

        let mut fixed_charge_map = vec![0.0; bins];
        let mut fixed_volume = vec![0.0; bins];
        // Immovable charge: the same inflated splat used for movables.
        let fixed_pl = placement.clone();
        let fixed_density = crate::density::splat_density_3d(
            &filtered_netlist(nl, |c| !c.movable),
            &fixed_pl,
            region,
            grid,
        )?;
        let bin_vol = grid.bin_volume();
        for (dst, &rho) in fixed_charge_map.iter_mut().zip(&fixed_density.rho) {
            *dst = rho * bin_vol;
        }
        splat_exact_volume_3d(nl, placement, region, grid, |c| !c.movable, &mut fixed_volume)?;

        let depth = region.tier_depth();
        let degrees_all = net_degrees(instance);
        let mut volumes = Vec::with_capacity(movables.len() * 3);
        let mut degrees = Vec::with_capacity(movables.len() * 3);
        for &c in &movables {
            let v = nl.cells[c].volume(depth);
            for _ in 0..3 {
                volumes.push(v);
                degrees.push(degrees_all[c]);
            }
        }

        let n = nl.cells.len();
        Ok(Gp3d {
            instance,
            movables,
            grid,
            solver: SpectralSolver3::new(grid),
            field: FieldState3::zeroed(grid),
            fixed_charge: fixed_charge_map,
            fixed_volume,
            rho: vec![0.0; bins],
            movable_volume: vec![0.0; bins],
            pre: Preconditioner::new(precond, volumes, degrees),
            pl: placement.clone(),
            movable_view: filtered_netlist(nl, |c| c.movable),
            gx: vec![0.0; n],
            gy: vec![0.0; n],
            gz: vec![0.0; n],
            include_z: instance.region.tiers > 1,
        })
    }

    pub fn pack(&self, placement: &Placement) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.movables.len() * 3);
        for &c in &self.movables {
            x.push(placement.x[c]);
            x.push(placement.y[c]);
            x.push(placement.z[c]);
        }
        x
    }

    pub fn unpack(&self, x: &[f64], placement: &mut Placement) {
        for (k, &c) in self.movables.iter().enumerate() {
            placement.x[c] = x[3 * k];
            placement.y[c] = x[3 * k + 1];
            placement.z[c] = x[3 * k + 2];
        }
    }

    pub fn grid(&self) -> BinGrid3 {
        self.grid
    }

    fn write_positions(&mut self, x: &[f64]) {
        for (k, &c) in self.movables.iter().enumerate() {
            self.pl.x[c] = x[3 * k];
            self.pl.y[c] = x[3 * k + 1];
            self.pl.z[c] = x[3 * k + 2];
        }
    }
}

/// Shallow netlist view keeping only cells accepted by `keep` (pins and nets
/// are irrelevant for density splatting).
fn filtered_netlist(
    nl: &crate::model::Netlist,
    keep: impl Fn(&crate::model::Cell) -> bool,
) -> crate::model::Netlist {
    let mut out = crate::model::Netlist::default();
    out.cells = nl
        .cells
        .iter()
        .map(|c| {
            let mut c = c.clone();
            if !keep(&c) {
                // Zero the footprint so it contributes nothing.
                c.width = 0.0;
                c.height = 0.0;
                c.kind = CellKind::Io;
            }
            c
        })
        .collect();
    out
}

impl PlacementObjective for Gp3d<'_> {
    fn num_vars(&self) -> usize {
        self.movables.len() * 3
    }

    fn eval(
        &mut self,
        x: &[f64],
        gamma: &Smoothing,
        wl_grad: &mut [f64],
        dens_grad: &mut [f64],
    ) -> Result<EvalOut> {
        self.write_positions(x);
        let nl = &self.instance.netlist;
        let region = &self.instance.region;

        // Wirelength part.
        self.gx.iter_mut().for_each(|g| *g = 0.0);
        self.gy.iter_mut().for_each(|g| *g = 0.0);
        self.gz.iter_mut().for_each(|g| *g = 0.0);
        let wa = wa_gradient(
            nl,
            &self.pl,
            gamma,
            &region.beta,
            self.include_z,
            &mut self.gx,
            &mut self.gy,
            &mut self.gz,
        );
        let exact = hpwl(nl, &self.pl, &region.beta);
        for (k, &c) in self.movables.iter().enumerate() {
            wl_grad[3 * k] = self.gx[c];
            wl_grad[3 * k + 1] = self.gy[c];
            wl_grad[3 * k + 2] = self.gz[c];
        }

        // Density part: movable charges on top of the static ones.
        self.rho.copy_from_slice(&self.fixed_charge);
        self.movable_volume.iter_mut().for_each(|v| *v = 0.0);
        {
            let charge =
                crate::density::splat_density_3d(&self.movable_view, &self.pl, region, self.grid)?;
            let bin_vol = self.grid.bin_volume();
            for (dst, &r) in self.rho.iter_mut().zip(&charge.rho) {
                *dst += r * bin_vol;
            }
        }
        let total_movable = splat_exact_volume_3d(
            nl,
            &self.pl,
            region,
            self.grid,
            |c| c.movable && !c.is_filler(),
            &mut self.movable_volume,
        )?;
        let tau = crate::density::overflow_from_bins(
            &self.movable_volume,
            &self.fixed_volume,
            self.grid,
            region.rho_t,
            total_movable,
        );

        // Convert accumulated charge to density and solve.
        let inv = 1.0 / self.grid.bin_volume();
        for v in self.rho.iter_mut() {
            *v *= inv;
        }
        let mean = self.rho.iter().sum::<f64>() / self.rho.len() as f64;
        for v in self.rho.iter_mut() {
            *v -= mean;
        }
        self.solver.solve_into(&self.rho, &mut self.field);

        let samples =
            sample_charges_3d(nl, &self.pl, region, &self.field, SampleMode::OverlapWeighted)?;
        let energy = crate::density::energy(&samples);
        for (k, &c) in self.movables.iter().enumerate() {
            let s = &samples[c];
            // Gradient of U: minus the spreading force.
            dens_grad[3 * k] = -s.q * s.e[0];
            dens_grad[3 * k + 1] = -s.q * s.e[1];
            dens_grad[3 * k + 2] = -s.q * s.e[2];
        }

        Ok(EvalOut {
            hpwl: exact,
            wa,
            energy,
            overflow: tau,
        })
    }

    fn preconditioner(&self) -> &Preconditioner {
        &self.pre
    }

    fn clamp(&self, x: &mut [f64]) {
        let depth = self.instance.region.tier_depth();
        for (k, &c) in self.movables.iter().enumerate() {
            let cell = &self.instance.netlist.cells[c];
            let hw = (cell.width / 2.0).min(0.5);
            let hh = (cell.height / 2.0).min(0.5);
            let hd = (depth / 2.0).min(0.5);
            x[3 * k] = x[3 * k].clamp(hw, 1.0 - hw);
            x[3 * k + 1] = x[3 * k + 1].clamp(hh, 1.0 - hh);
            x[3 * k + 2] = x[3 * k + 2].clamp(hd, 1.0 - hd);
        }
    }

    fn bin_width(&self) -> f64 {
        self.grid.bin_width()
    }

    fn gamma_base(&self) -> Smoothing {
        let bw = self.grid.bin_width();
        Smoothing {
            gamma_x: bw,
            gamma_y: bw,
            gamma_z: self.instance.region.tier_depth(),
        }
    }
}

/// Per-tier planar state of the multi-tier 2D stage.
struct TierState {
    cells: Vec<usize>,
    fixed_charge: Vec<f64>,
    fixed_area: Vec<f64>,
    rho: Vec<f64>,
    movable_area: Vec<f64>,
    field: FieldState2,
}

/// Simultaneous per-tier 2D global placement objective.
pub struct Gp2dMultiTier<'a> {
    instance: &'a Instance,
    movables: Vec<usize>,
    grid: BinGrid2,
    solver: SpectralSolver2,
    tiers: Vec<TierState>,
    pre: Preconditioner,
    pl: Placement,
    gx: Vec<f64>,
    gy: Vec<f64>,
    threads: usize,
}

impl<'a> Gp2dMultiTier<'a> {
    pub fn new(
        instance: &'a Instance,
        placement: &Placement,
        grid: BinGrid2,
        precond: PrecondMode,
        threads: usize,
    ) -> Result<Self> {
        let nl = &instance.netlist;
        let region = &instance.region;
        let tier_of = placement
            .tier
            .as_ref()
            .ok_or_else(|| crate::Error::State("2D stage requires tier assignment".into()))?;
        let movables = nl.movable_ids();

        let bins = grid.bins();
        let mut tiers = Vec::with_capacity(region.tiers);
        for t in 0..region.tiers {
            let members: Vec<usize> = (0..nl.cells.len())
                .filter(|&i| {
                    if nl.cells[i].movable {
                        tier_of[i] == t
                    } else {
                        false
                    }
                })
                .collect();
            let fixed_members: Vec<usize> = (0..nl.cells.len())
                .filter(|&i| !nl.cells[i].movable && nl.cells[i].area() > 0.0)
                .filter(|&i| region.tier_of_z(placement.z[i]) == t)
                .collect();
            let mut fixed_charge = vec![0.0; bins];
            let mut fixed_area = vec![0.0; bins];
            if !fixed_members.is_empty() {
                let map = crate::density::splat_density_2d(nl, placement, grid, &fixed_members)?;
                let ba = grid.bin_area();
                for (dst, &r) in fixed_charge.iter_mut().zip(&map.rho) {
                    *dst = r * ba;
                }
                splat_exact_area_2d(nl, placement, grid, &fixed_members, &mut fixed_area)?;
            }
            tiers.push(TierState {
                cells: members,
                fixed_charge,
                fixed_area,
                rho: vec![0.0; bins],
                movable_area: vec![0.0; bins],
                field: FieldState2::zeroed(grid),
            });
        }

        let degrees_all = net_degrees(instance);
        let mut volumes = Vec::with_capacity(movables.len() * 2);
        let mut degrees = Vec::with_capacity(movables.len() * 2);
        for &c in &movables {
            let a = nl.cells[c].area();
            for _ in 0..2 {
                volumes.push(a);
                degrees.push(degrees_all[c]);
            }
        }

        let n = nl.cells.len();
        Ok(Gp2dMultiTier {
            instance,
            movables,
            grid,
            solver: SpectralSolver2::new(grid),
            tiers,
            pre: Preconditioner::new(precond, volumes, degrees),
            pl: placement.clone(),
            gx: vec![0.0; n],
            gy: vec![0.0; n],
            threads: threads.max(1),
        })
    }

    pub fn pack(&self, placement: &Placement) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.movables.len() * 2);
        for &c in &self.movables {
            x.push(placement.x[c]);
            x.push(placement.y[c]);
        }
        x
    }

    pub fn unpack(&self, x: &[f64], placement: &mut Placement) {
        for (k, &c) in self.movables.iter().enumerate() {
            placement.x[c] = x[2 * k];
            placement.y[c] = x[2 * k + 1];
        }
    }

    pub fn grid(&self) -> BinGrid2 {
        self.grid
    }
}

impl PlacementObjective for Gp2dMultiTier<'_> {
    fn num_vars(&self) -> usize {
        self.movables.len() * 2
    }

    fn eval(
        &mut self,
        x: &[f64],
        gamma: &Smoothing,
        wl_grad: &mut [f64],
        dens_grad: &mut [f64],
    ) -> Result<EvalOut> {
        for (k, &c) in self.movables.iter().enumerate() {
            self.pl.x[c] = x[2 * k];
            self.pl.y[c] = x[2 * k + 1];
        }
        let nl = &self.instance.netlist;
        let region = &self.instance.region;

        self.gx.iter_mut().for_each(|g| *g = 0.0);
        self.gy.iter_mut().for_each(|g| *g = 0.0);
        let mut gz = Vec::new();
        let wa = wa_gradient(
            nl,
            &self.pl,
            gamma,
            &region.beta,
            false,
            &mut self.gx,
            &mut self.gy,
            &mut gz,
        );
        let exact = hpwl(nl, &self.pl, &region.beta);
        for (k, &c) in self.movables.iter().enumerate() {
            wl_grad[2 * k] = self.gx[c];
            wl_grad[2 * k + 1] = self.gy[c];
        }

        // Independent planar field solve per tier.
        let mut overflow_num = 0.0;
        let mut total_area = 0.0;
        let mut energy = 0.0;
        let grid = self.grid;
        let pl = &self.pl;

        if self.threads > 1 && self.tiers.len() > 1 {
            let workers = self.threads.min(self.tiers.len());
            let chunks = self.tiers.len().div_ceil(workers);
            std::thread::scope(|scope| -> Result<()> {
                let mut handles = Vec::new();
                for chunk in self.tiers.chunks_mut(chunks) {
                    handles.push(scope.spawn(move || -> Result<()> {
                        let mut solver = SpectralSolver2::new(grid);
                        for state in chunk.iter_mut() {
                            solve_tier(nl, pl, grid, &mut solver, state)?;
                        }
                        Ok(())
                    }));
                }
                for h in handles {
                    h.join().expect("tier solver panicked")?;
                }
                Ok(())
            })?;
        } else {
            for state in self.tiers.iter_mut() {
                solve_tier(nl, pl, grid, &mut self.solver, state)?;
            }
        }

        let ba = grid.bin_area();
        let mut var_of_cell = vec![usize::MAX; nl.cells.len()];
        for (k, &c) in self.movables.iter().enumerate() {
            var_of_cell[c] = k;
        }
        for state in &self.tiers {
            for (vm, vf) in state.movable_area.iter().zip(&state.fixed_area) {
                let ws = (ba - vf).max(0.0);
                overflow_num += (vm - region.rho_t * ws).max(0.0);
            }
            let samples = sample_charges_2d(
                nl,
                &self.pl,
                &state.field,
                &state.cells,
                SampleMode::OverlapWeighted,
            )?;
            for (ci, s) in samples {
                energy += s.q * s.phi;
                let k = var_of_cell[ci];
                if k != usize::MAX {
                    dens_grad[2 * k] = -s.q * s.e[0];
                    dens_grad[2 * k + 1] = -s.q * s.e[1];
                }
            }
        }
        for &c in &self.movables {
            if !nl.cells[c].is_filler() {
                total_area += nl.cells[c].area();
            }
        }
        let tau = if total_area > 0.0 {
            overflow_num / total_area
        } else {
            0.0
        };

        Ok(EvalOut {
            hpwl: exact,
            wa,
            energy,
            overflow: tau,
        })
    }

    fn preconditioner(&self) -> &Preconditioner {
        &self.pre
    }

    fn clamp(&self, x: &mut [f64]) {
        for (k, &c) in self.movables.iter().enumerate() {
            let cell = &self.instance.netlist.cells[c];
            let hw = (cell.width / 2.0).min(0.5);
            let hh = (cell.height / 2.0).min(0.5);
            x[2 * k] = x[2 * k].clamp(hw, 1.0 - hw);
            x[2 * k + 1] = x[2 * k + 1].clamp(hh, 1.0 - hh);
        }
    }

    fn bin_width(&self) -> f64 {
        self.grid.bin_width()
    }

    fn gamma_base(&self) -> Smoothing {
        Smoothing::uniform(self.grid.bin_width())
    }
}

fn solve_tier(
    nl: &crate::model::Netlist,
    pl: &Placement,
    grid: BinGrid2,
    solver: &mut SpectralSolver2,
    state: &mut TierState,
) -> Result<()> {
    state.rho.copy_from_slice(&state.fixed_charge);
    state.movable_area.iter_mut().for_each(|v| *v = 0.0);
    if !state.cells.is_empty() {
        let map = crate::density::splat_density_2d(nl, pl, grid, &state.cells)?;
        let ba = grid.bin_area();
        for (dst, &r) in state.rho.iter_mut().zip(&map.rho) {
            *dst += r * ba;
        }
        let non_filler: Vec<usize> = state
            .cells
            .iter()
            .copied()
            .filter(|&c| !nl.cells[c].is_filler())
            .collect();
        splat_exact_area_2d(nl, pl, grid, &non_filler, &mut state.movable_area)?;
    }
    let inv = 1.0 / grid.bin_area();
    for v in state.rho.iter_mut() {
        *v *= inv;
    }
    let mean = state.rho.iter().sum::<f64>() / state.rho.len() as f64;
    for v in state.rho.iter_mut() {
        *v -= mean;
    }
    solver.solve_into(&state.rho, &mut state.field);
    Ok(())
}
