//! Quadratic initial placement.
//!
//! Minimizes quadratic wirelength independently per axis with conjugate
//! gradients. Nets of up to three pins become cliques with the usual
//! `1/(p-1)` weighting; larger nets use a star whose center is eliminated at
//! its optimum, which is algebraically a clique scaled by `1/p` and keeps
//! the operator application linear in pin count. Fixed objects anchor the
//! system; a netlist with no fixed pins collapses to the region center and
//! is jittered slightly so downstream stages see distinct coordinates.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::model::{Instance, Pin, Placement};
use crate::Result;

struct QuadNet {
    /// Pairwise weight of the equivalent clique.
    gamma: f64,
    /// (cell-or-fixed, per-axis offsets): cell pins carry (Some(id), dx, dy, 0),
    /// fixed pins carry (None, x, y, z).
    pins: Vec<(Option<usize>, [f64; 3])>,
}

struct QuadSystem {
    nets: Vec<QuadNet>,
    movable: Vec<usize>,
    /// Dense index per cell (usize::MAX for fixed cells).
    index: Vec<usize>,
    /// Fixed coordinate per cell and axis (valid where not movable).
    fixed_pos: Vec<[f64; 3]>,
    has_fixed_pin: bool,
}

fn build_system(instance: &Instance, placement: &Placement) -> QuadSystem {
    let nl = &instance.netlist;
    let movable = nl.movable_ids();
    let mut index = vec![usize::MAX; nl.cells.len()];
    for (k, &c) in movable.iter().enumerate() {
        index[c] = k;
    }
    let mut fixed_pos = vec![[0.0; 3]; nl.cells.len()];
    for (i, c) in nl.cells.iter().enumerate() {
        if !c.movable {
            fixed_pos[i] = [placement.x[i], placement.y[i], placement.z[i]];
        }
    }
    let mut nets = Vec::new();
    let mut has_fixed_pin = false;
    for net in &nl.nets {
        let p = net.pins.len();
        if p < 2 || net.weight <= 0.0 {
            continue;
        }
        let gamma = if p <= 3 {
            net.weight / (p - 1) as f64
        } else {
            net.weight / p as f64
        };
        let mut pins = Vec::with_capacity(p);
        for pin in &net.pins {
            match pin {
                Pin::OnCell { cell, dx, dy } => {
                    if nl.cells[*cell].movable {
                        pins.push((Some(index[*cell]), [*dx, *dy, 0.0]));
                    } else {
                        has_fixed_pin = true;
                        pins.push((
                            None,
                            [
                                fixed_pos[*cell][0] + dx,
                                fixed_pos[*cell][1] + dy,
                                fixed_pos[*cell][2],
                            ],
                        ));
                    }
                }
                Pin::Fixed { x, y, z } => {
                    has_fixed_pin = true;
                    pins.push((None, [*x, *y, *z]));
                }
            }
        }
        nets.push(QuadNet { gamma, pins });
    }
    QuadSystem {
        nets,
        movable,
        index,
        fixed_pos,
        has_fixed_pin,
    }
}

impl QuadSystem {
    /// Gradient of the quadratic wirelength along one axis at `x` (dense
    /// movable coordinates). `homogeneous` zeroes offsets and fixed pins,
    /// turning this into the pure Laplacian application.
    fn gradient(&self, axis: usize, x: &[f64], homogeneous: bool, out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        for net in &self.nets {
            let p = net.pins.len() as f64;
            let mut sum = 0.0;
            for (cell, off) in &net.pins {
                sum += match cell {
                    Some(k) => x[*k] + if homogeneous { 0.0 } else { off[axis] },
                    None => {
                        if homogeneous {
                            0.0
                        } else {
                            off[axis]
                        }
                    }
                };
            }
            for (cell, off) in &net.pins {
                if let Some(k) = cell {
                    let xi = x[*k] + if homogeneous { 0.0 } else { off[axis] };
                    out[*k] += 2.0 * net.gamma * (p * xi - sum);
                }
            }
        }
    }

    fn diagonal(&self, out: &mut [f64]) {
        out.iter_mut().for_each(|d| *d = 0.0);
        for net in &self.nets {
            let p = net.pins.len() as f64;
            // Count pins per movable cell inside this net.
            for (cell, _) in &net.pins {
                if let Some(k) = cell {
                    let dup = net
                        .pins
                        .iter()
                        .filter(|(c, _)| *c == Some(*k))
                        .count() as f64;
                    out[*k] += 2.0 * net.gamma * (p - dup);
                }
            }
        }
        for d in out.iter_mut() {
            if *d <= 0.0 {
                *d = 1.0;
            }
        }
    }
}

fn cg_solve(sys: &QuadSystem, axis: usize, x: &mut [f64], max_iters: usize, tol: f64) {
    let n = x.len();
    if n == 0 {
        return;
    }
    // b = -gradient at 0 with offsets/fixed terms; A p = homogeneous gradient.
    let mut b = vec![0.0; n];
    sys.gradient(axis, &vec![0.0; n], false, &mut b);
    for v in b.iter_mut() {
        *v = -*v;
    }
    let mut diag = vec![0.0; n];
    sys.diagonal(&mut diag);

    let mut ax = vec![0.0; n];
    sys.gradient(axis, x, true, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-30);

    let mut ap = vec![0.0; n];
    for _ in 0..max_iters {
        let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r_norm <= tol * b_norm {
            break;
        }
        sys.gradient(axis, &p, true, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 || !pap.is_finite() {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
}

/// Overlap-tolerant minimum-quadratic-wirelength placement. Fixed objects
/// keep their coordinates from `placement`.
pub fn initial_placement(
    instance: &Instance,
    placement: &Placement,
    seed: u64,
) -> Result<Placement> {
    let nl = &instance.netlist;
    let sys = build_system(instance, placement);
    let mut out = placement.clone();
    out.tier = None;

    if !sys.has_fixed_pin {
        // Nothing anchors the system: centroid plus a small seeded jitter.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1b9a_77f3);
        for &c in &sys.movable {
            out.x[c] = 0.5 + rng.random_range(-1e-3..1e-3);
            out.y[c] = 0.5 + rng.random_range(-1e-3..1e-3);
            out.z[c] = 0.5 + rng.random_range(-1e-3..1e-3);
        }
    } else {
        let n = sys.movable.len();
        for axis in 0..3 {
            let mut x = vec![0.5; n];
            cg_solve(&sys, axis, &mut x, 600, 1e-10);
            for (k, &c) in sys.movable.iter().enumerate() {
                match axis {
                    0 => out.x[c] = x[k],
                    1 => out.y[c] = x[k],
                    _ => out.z[c] = x[k],
                }
            }
        }
    }

    // Keep centers inside the domain.
    let depth = instance.region.tier_depth();
    for &c in &sys.movable {
        let cell = &nl.cells[c];
        let hw = (cell.width / 2.0).min(0.5);
        let hh = (cell.height / 2.0).min(0.5);
        let hd = (depth / 2.0).min(0.5);
        out.x[c] = out.x[c].clamp(hw, 1.0 - hw);
        out.y[c] = out.y[c].clamp(hh, 1.0 - hh);
        out.z[c] = out.z[c].clamp(hd, 1.0 - hd);
    }
    let _ = &sys.index;
    let _ = &sys.fixed_pos;
    Ok(out)
}
