//! Spectral solution of the Neumann Poisson problem on the unit cuboid.
//!
//! The density on an `m^3` (or `m^2`) grid of bin centers is expanded in
//! cosine modes `cos(w_j x) cos(w_k y) cos(w_l z)` with continuous-domain
//! frequencies `w_j = pi * j` (unit extents), so the potential follows by
//! dividing each coefficient by `w_j^2 + w_k^2 + w_l^2` and the field
//! components by one extra frequency factor with a cosine-to-sine swap along
//! the differentiated axis. Fields built from sines vanish identically on the
//! boundary planes, which is exactly the no-penetration condition.
//!
//! With samples at bin centers `x_b = (b + 0.5)/m`, analysis is a DCT-II per
//! axis and synthesis a DCT-III (potential) or a shifted DST-III (field along
//! the differentiated axis). One forward transform plus four inverse
//! transforms are performed per solve.

use std::f64::consts::PI;
use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};

use crate::model::{BinGrid2, BinGrid3};

/// Potential, field, and frequency coefficients on the 3D grid.
///
/// `coeffs[j,k,l]` stores `2^3/m^3` times the raw per-axis DCT-II output;
/// under the DCT-III synthesis convention (which halves index-zero terms per
/// axis) this reconstructs the density exactly, and entries with all indices
/// nonzero equal the mode amplitudes `a_{j,k,l}` directly.
#[derive(Debug, Clone)]
pub struct FieldState3 {
    pub grid: BinGrid3,
    pub coeffs: Vec<f64>,
    pub phi: Vec<f64>,
    pub ex: Vec<f64>,
    pub ey: Vec<f64>,
    pub ez: Vec<f64>,
}

impl FieldState3 {
    pub fn zeroed(grid: BinGrid3) -> Self {
        let n = grid.bins();
        FieldState3 {
            grid,
            coeffs: vec![0.0; n],
            phi: vec![0.0; n],
            ex: vec![0.0; n],
            ey: vec![0.0; n],
            ez: vec![0.0; n],
        }
    }
}

/// 2D analogue of [`FieldState3`] for per-tier planar solves.
#[derive(Debug, Clone)]
pub struct FieldState2 {
    pub grid: BinGrid2,
    pub coeffs: Vec<f64>,
    pub phi: Vec<f64>,
    pub ex: Vec<f64>,
    pub ey: Vec<f64>,
}

impl FieldState2 {
    pub fn zeroed(grid: BinGrid2) -> Self {
        let n = grid.bins();
        FieldState2 {
            grid,
            coeffs: vec![0.0; n],
            phi: vec![0.0; n],
            ex: vec![0.0; n],
            ey: vec![0.0; n],
        }
    }
}

struct Transforms {
    m: usize,
    dct2: Arc<dyn TransformType2And3<f64>>,
    dct3: Arc<dyn TransformType2And3<f64>>,
    dst3: Arc<dyn TransformType2And3<f64>>,
    lane: Vec<f64>,
}

impl Transforms {
    fn new(m: usize) -> Self {
        let mut planner = DctPlanner::new();
        Transforms {
            m,
            dct2: planner.plan_dct2(m),
            dct3: planner.plan_dct3(m),
            dst3: planner.plan_dst3(m),
            lane: vec![0.0; m],
        }
    }
}

enum Kind {
    Dct2,
    Dct3,
    Dst3,
}

impl Transforms {
    fn apply_lane(&mut self, kind: &Kind) {
        match kind {
            Kind::Dct2 => self.dct2.process_dct2(&mut self.lane),
            Kind::Dct3 => self.dct3.process_dct3(&mut self.lane),
            Kind::Dst3 => self.dst3.process_dst3(&mut self.lane),
        }
    }

    /// Apply a 1D transform along `axis` of a dense array with shape
    /// `dims` (row-major, last axis contiguous).
    fn along_axis(&mut self, data: &mut [f64], dims: &[usize], axis: usize, kind: Kind) {
        let m = self.m;
        debug_assert_eq!(dims[axis], m);
        let stride: usize = dims[axis + 1..].iter().product();
        let outer: usize = dims[..axis].iter().product();
        let block: usize = dims[axis..].iter().product();
        for o in 0..outer {
            let base_o = o * block;
            for s in 0..stride {
                let base = base_o + s;
                for i in 0..m {
                    self.lane[i] = data[base + i * stride];
                }
                self.apply_lane(&kind);
                for i in 0..m {
                    data[base + i * stride] = self.lane[i];
                }
            }
        }
    }
}

/// Reusable 3D solver; plans transforms once per grid size.
pub struct SpectralSolver3 {
    grid: BinGrid3,
    tf: Transforms,
    w: Vec<f64>,
    w2: Vec<f64>,
    scratch: Vec<f64>,
}

impl SpectralSolver3 {
    pub fn new(grid: BinGrid3) -> Self {
        let m = grid.m;
        let w: Vec<f64> = (0..m).map(|j| PI * j as f64).collect();
        let w2: Vec<f64> = w.iter().map(|v| v * v).collect();
        SpectralSolver3 {
            grid,
            tf: Transforms::new(m),
            w,
            w2,
            scratch: vec![0.0; grid.bins()],
        }
    }

    pub fn grid(&self) -> BinGrid3 {
        self.grid
    }

    /// Solve for potential and field from a mean-zero density sampled at bin
    /// centers. `rho` is untouched; results land in `out`.
    pub fn solve_into(&mut self, rho: &[f64], out: &mut FieldState3) {
        let m = self.grid.m;
        let dims = [m, m, m];
        assert_eq!(rho.len(), self.grid.bins());

        // Analysis: per-axis DCT-II, scaled to synthesis-ready coefficients.
        out.coeffs.copy_from_slice(rho);
        for axis in 0..3 {
            self.tf.along_axis(&mut out.coeffs, &dims, axis, Kind::Dct2);
        }
        let norm = 8.0 / (m * m * m) as f64;
        for c in out.coeffs.iter_mut() {
            *c *= norm;
        }
        out.coeffs[0] = 0.0; // zero-frequency component removed

        let idx = |j: usize, k: usize, l: usize| (j * m + k) * m + l;

        // Potential: divide by w^2, inverse cosine transform on all axes.
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let d = self.w2[j] + self.w2[k] + self.w2[l];
                    self.scratch[idx(j, k, l)] = if d > 0.0 {
                        out.coeffs[idx(j, k, l)] / d
                    } else {
                        0.0
                    };
                }
            }
        }
        out.phi.copy_from_slice(&self.scratch);
        for axis in 0..3 {
            self.tf.along_axis(&mut out.phi, &dims, axis, Kind::Dct3);
        }

        // Field components: one extra frequency factor, sine synthesis along
        // the differentiated axis (coefficients shift down by one index).
        for (comp, target) in [(0usize, 0usize), (1, 1), (2, 2)] {
            let dst = match target {
                0 => &mut out.ex,
                1 => &mut out.ey,
                _ => &mut out.ez,
            };
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let (fj, fk, fl) = match comp {
                            0 => (j + 1, k, l),
                            1 => (j, k + 1, l),
                            _ => (j, k, l + 1),
                        };
                        let v = if fj < m && fk < m && fl < m {
                            let d = self.w2[fj] + self.w2[fk] + self.w2[fl];
                            let wd = self.w[match comp {
                                0 => fj,
                                1 => fk,
                                _ => fl,
                            }];
                            out.coeffs[idx(fj, fk, fl)] * wd / d
                        } else {
                            0.0
                        };
                        dst[idx(j, k, l)] = v;
                    }
                }
            }
            self.tf.along_axis(dst, &dims, comp, Kind::Dst3);
            for axis in 0..3 {
                if axis != comp {
                    self.tf.along_axis(dst, &dims, axis, Kind::Dct3);
                }
            }
        }
    }
}

/// Reusable 2D solver for per-tier planar densities.
pub struct SpectralSolver2 {
    grid: BinGrid2,
    tf: Transforms,
    w: Vec<f64>,
    w2: Vec<f64>,
    scratch: Vec<f64>,
}

impl SpectralSolver2 {
    pub fn new(grid: BinGrid2) -> Self {
        let m = grid.m;
        let w: Vec<f64> = (0..m).map(|j| PI * j as f64).collect();
        let w2: Vec<f64> = w.iter().map(|v| v * v).collect();
        SpectralSolver2 {
            grid,
            tf: Transforms::new(m),
            w,
            w2,
            scratch: vec![0.0; grid.bins()],
        }
    }

    pub fn grid(&self) -> BinGrid2 {
        self.grid
    }

    pub fn solve_into(&mut self, rho: &[f64], out: &mut FieldState2) {
        let m = self.grid.m;
        let dims = [m, m];
        assert_eq!(rho.len(), self.grid.bins());

        out.coeffs.copy_from_slice(rho);
        for axis in 0..2 {
            self.tf.along_axis(&mut out.coeffs, &dims, axis, Kind::Dct2);
        }
        let norm = 4.0 / (m * m) as f64;
        for c in out.coeffs.iter_mut() {
            *c *= norm;
        }
        out.coeffs[0] = 0.0;

        let idx = |j: usize, k: usize| j * m + k;

        for j in 0..m {
            for k in 0..m {
                let d = self.w2[j] + self.w2[k];
                self.scratch[idx(j, k)] = if d > 0.0 {
                    out.coeffs[idx(j, k)] / d
                } else {
                    0.0
                };
            }
        }
        out.phi.copy_from_slice(&self.scratch);
        for axis in 0..2 {
            self.tf.along_axis(&mut out.phi, &dims, axis, Kind::Dct3);
        }

        for comp in 0..2usize {
            let dst = if comp == 0 { &mut out.ex } else { &mut out.ey };
            for j in 0..m {
                for k in 0..m {
                    let (fj, fk) = if comp == 0 { (j + 1, k) } else { (j, k + 1) };
                    let v = if fj < m && fk < m {
                        let d = self.w2[fj] + self.w2[fk];
                        let wd = self.w[if comp == 0 { fj } else { fk }];
                        out.coeffs[idx(fj, fk)] * wd / d
                    } else {
                        0.0
                    };
                    dst[idx(j, k)] = v;
                }
            }
            self.tf.along_axis(dst, &dims, comp, Kind::Dst3);
            self.tf.along_axis(dst, &dims, 1 - comp, Kind::Dct3);
        }
    }
}

/// Evaluate the cosine/sine series for potential and field at an arbitrary
/// point of the unit cuboid. Intended for verification: O(m^3) per call.
pub fn series_at(coeffs: &[f64], grid: BinGrid3, x: f64, y: f64, z: f64) -> (f64, [f64; 3]) {
    let m = grid.m;
    let idx = |j: usize, k: usize, l: usize| (j * m + k) * m + l;
    let mut phi = 0.0;
    let mut e = [0.0f64; 3];
    for j in 0..m {
        let wj = PI * j as f64;
        for k in 0..m {
            let wk = PI * k as f64;
            for l in 0..m {
                let wl = PI * l as f64;
                if j == 0 && k == 0 && l == 0 {
                    continue;
                }
                // Index-zero axes carry an implicit half weight.
                let mut a = coeffs[idx(j, k, l)];
                if j == 0 {
                    a *= 0.5;
                }
                if k == 0 {
                    a *= 0.5;
                }
                if l == 0 {
                    a *= 0.5;
                }
                let d = wj * wj + wk * wk + wl * wl;
                let (cx, sx) = ((wj * x).cos(), (wj * x).sin());
                let (cy, sy) = ((wk * y).cos(), (wk * y).sin());
                let (cz, sz) = ((wl * z).cos(), (wl * z).sin());
                phi += a / d * cx * cy * cz;
                e[0] += a * wj / d * sx * cy * cz;
                e[1] += a * wk / d * cx * sy * cz;
                e[2] += a * wl / d * cx * cy * sz;
            }
        }
    }
    (phi, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn naive_dct2(x: &[f64]) -> Vec<f64> {
        let m = x.len();
        (0..m)
            .map(|j| {
                (0..m)
                    .map(|b| x[b] * (PI * j as f64 * (b as f64 + 0.5) / m as f64).cos())
                    .sum()
            })
            .collect()
    }

    fn naive_dct3(x: &[f64]) -> Vec<f64> {
        let m = x.len();
        (0..m)
            .map(|b| {
                x[0] / 2.0
                    + (1..m)
                        .map(|j| x[j] * (PI * j as f64 * (b as f64 + 0.5) / m as f64).cos())
                        .sum::<f64>()
            })
            .collect()
    }

    fn naive_dst3(x: &[f64]) -> Vec<f64> {
        let m = x.len();
        (0..m)
            .map(|b| {
                let mut acc = if b % 2 == 0 { 1.0 } else { -1.0 } * x[m - 1] / 2.0;
                for i in 0..m - 1 {
                    acc += x[i] * (PI * (i as f64 + 1.0) * (b as f64 + 0.5) / m as f64).sin();
                }
                acc
            })
            .collect()
    }

    /// Pin the library's transform conventions to the formulas the solver
    /// assumes; everything above depends on these identities.
    #[test]
    fn rustdct_conventions_match() {
        let m = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut tf = Transforms::new(m);

        tf.lane.copy_from_slice(&x);
        tf.apply_lane(&Kind::Dct2);
        let got = tf.lane.clone();
        for (g, e) in got.iter().zip(naive_dct2(&x)) {
            assert_relative_eq!(*g, e, epsilon = 1e-10);
        }

        tf.lane.copy_from_slice(&x);
        tf.apply_lane(&Kind::Dct3);
        let got = tf.lane.clone();
        for (g, e) in got.iter().zip(naive_dct3(&x)) {
            assert_relative_eq!(*g, e, epsilon = 1e-10);
        }

        tf.lane.copy_from_slice(&x);
        tf.apply_lane(&Kind::Dst3);
        let got = tf.lane.clone();
        for (g, e) in got.iter().zip(naive_dst3(&x)) {
            assert_relative_eq!(*g, e, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_density_gives_zero_field() {
        let grid = BinGrid3 { m: 8 };
        let mut solver = SpectralSolver3::new(grid);
        let mut out = FieldState3::zeroed(grid);
        solver.solve_into(&vec![0.0; grid.bins()], &mut out);
        assert!(out.phi.iter().all(|&v| v == 0.0));
        assert!(out.ex.iter().all(|&v| v == 0.0));
        assert!(out.ey.iter().all(|&v| v == 0.0));
        assert!(out.ez.iter().all(|&v| v == 0.0));
    }

    /// rho = cos(pi x): Phi = cos(pi x)/pi^2, E_x = sin(pi x)/pi, E_y = E_z = 0.
    #[test]
    fn single_mode_analytic() {
        let grid = BinGrid3 { m: 16 };
        let m = grid.m;
        let mut rho = vec![0.0; grid.bins()];
        for j in 0..m {
            let x = (j as f64 + 0.5) / m as f64;
            for k in 0..m {
                for l in 0..m {
                    rho[(j * m + k) * m + l] = (PI * x).cos();
                }
            }
        }
        let mut solver = SpectralSolver3::new(grid);
        let mut out = FieldState3::zeroed(grid);
        solver.solve_into(&rho, &mut out);

        let mut max_err_phi = 0.0f64;
        let mut max_err_e = 0.0f64;
        for j in 0..m {
            let x = (j as f64 + 0.5) / m as f64;
            for k in 0..m {
                for l in 0..m {
                    let i = (j * m + k) * m + l;
                    max_err_phi = max_err_phi.max((out.phi[i] - (PI * x).cos() / (PI * PI)).abs());
                    max_err_e = max_err_e.max((out.ex[i] - (PI * x).sin() / PI).abs());
                    max_err_e = max_err_e.max(out.ey[i].abs());
                    max_err_e = max_err_e.max(out.ez[i].abs());
                }
            }
        }
        assert!(max_err_phi < 1e-10, "phi err {max_err_phi}");
        assert!(max_err_e < 1e-10, "field err {max_err_e}");
    }

    /// Spectral field values agree with direct series evaluation at centers,
    /// and the normal field component vanishes on the boundary planes.
    #[test]
    fn matches_series_and_neumann_boundary() {
        let grid = BinGrid3 { m: 8 };
        let m = grid.m;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rho: Vec<f64> = (0..grid.bins()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = rho.iter().sum::<f64>() / rho.len() as f64;
        for v in rho.iter_mut() {
            *v -= mean;
        }
        let mut solver = SpectralSolver3::new(grid);
        let mut out = FieldState3::zeroed(grid);
        solver.solve_into(&rho, &mut out);

        for &(bx, by, bz) in &[(0usize, 3usize, 5usize), (2, 0, 7), (7, 7, 0)] {
            let at = |b: usize| (b as f64 + 0.5) / m as f64;
            let (phi, e) = series_at(&out.coeffs, grid, at(bx), at(by), at(bz));
            let i = (bx * m + by) * m + bz;
            assert_relative_eq!(out.phi[i], phi, epsilon = 1e-10);
            assert_relative_eq!(out.ex[i], e[0], epsilon = 1e-10);
            assert_relative_eq!(out.ey[i], e[1], epsilon = 1e-10);
            assert_relative_eq!(out.ez[i], e[2], epsilon = 1e-10);
        }

        // Normal component on each boundary plane is identically zero.
        for &(x, y, z, comp) in &[
            (0.0, 0.37, 0.81, 0usize),
            (1.0, 0.37, 0.81, 0),
            (0.5, 0.0, 0.25, 1),
            (0.5, 1.0, 0.25, 1),
            (0.11, 0.93, 0.0, 2),
            (0.11, 0.93, 1.0, 2),
        ] {
            let (_, e) = series_at(&out.coeffs, grid, x, y, z);
            assert!(e[comp].abs() < 1e-12, "normal field {} at boundary", e[comp]);
        }
    }

    /// Round trip: synthesizing the analyzed coefficients reproduces rho.
    #[test]
    fn analysis_synthesis_roundtrip() {
        let grid = BinGrid3 { m: 8 };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut rho: Vec<f64> = (0..grid.bins()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = rho.iter().sum::<f64>() / rho.len() as f64;
        for v in rho.iter_mut() {
            *v -= mean;
        }
        let mut solver = SpectralSolver3::new(grid);
        let mut out = FieldState3::zeroed(grid);
        solver.solve_into(&rho, &mut out);

        let m = grid.m;
        let mut back = out.coeffs.clone();
        let dims = [m, m, m];
        for axis in 0..3 {
            solver.tf.along_axis(&mut back, &dims, axis, Kind::Dct3);
        }
        for (b, r) in back.iter().zip(&rho) {
            assert_relative_eq!(*b, *r, epsilon = 1e-10);
        }
    }

    #[test]
    fn two_d_single_mode() {
        let grid = BinGrid2 { m: 16 };
        let m = grid.m;
        let mut rho = vec![0.0; grid.bins()];
        for j in 0..m {
            let x = (j as f64 + 0.5) / m as f64;
            for k in 0..m {
                rho[j * m + k] = (PI * x).cos();
            }
        }
        let mut solver = SpectralSolver2::new(grid);
        let mut out = FieldState2::zeroed(grid);
        solver.solve_into(&rho, &mut out);
        for j in 0..m {
            let x = (j as f64 + 0.5) / m as f64;
            for k in 0..m {
                let i = j * m + k;
                assert_relative_eq!(out.phi[i], (PI * x).cos() / (PI * PI), epsilon = 1e-10);
                assert_relative_eq!(out.ex[i], (PI * x).sin() / PI, epsilon = 1e-10);
                assert!(out.ey[i].abs() < 1e-10);
            }
        }
    }
}
