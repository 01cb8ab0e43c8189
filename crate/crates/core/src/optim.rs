//! Preconditioned Nesterov solver with penalty and smoothing schedules.
//!
//! The solver maintains a major solution `v` and a reference solution `u`;
//! each step descends the preconditioned gradient at `u`, then extrapolates.
//! The steplength is the inverse of a local Lipschitz estimate with
//! halving backtracks validated against the post-move gradient. The density
//! penalty multiplier ramps geometrically, slowed by wirelength growth, and
//! the wirelength smoothing width tracks the density overflow so the
//! estimator sharpens as the placement spreads.

use crate::wirelength::Smoothing;
use crate::{Error, Result};

/// Which diagonal Hessian approximation scales the gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrecondMode {
    /// `H_i = lambda * V_i`: every object experiences the same density step
    /// regardless of its connectivity.
    #[default]
    VolumeOnly,
    /// `H_i = |N_i| + lambda * V_i`: the planar-placement rule, retained for
    /// the ablation comparison.
    NetsPlusVolume,
}

/// Per-variable gradient scaling. `volumes` and `degrees` hold one entry per
/// optimization variable (an object's entries repeat across its axes).
#[derive(Debug, Clone)]
pub struct Preconditioner {
    pub mode: PrecondMode,
    volumes: Vec<f64>,
    degrees: Vec<f64>,
    median_volume: f64,
}

impl Preconditioner {
    pub fn new(mode: PrecondMode, volumes: Vec<f64>, degrees: Vec<f64>) -> Self {
        assert_eq!(volumes.len(), degrees.len());
        let mut sorted: Vec<f64> = volumes.iter().copied().filter(|v| *v > 0.0).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median_volume = if sorted.is_empty() {
            0.0
        } else {
            sorted[sorted.len() / 2]
        };
        Preconditioner {
            mode,
            volumes,
            degrees,
            median_volume,
        }
    }

    /// Divisor floor: a small fraction of the median density diagonal, so
    /// degenerate volumes cannot blow the step up.
    pub fn h_min(&self, lambda: f64) -> f64 {
        (1e-4 * lambda * self.median_volume).max(1e-12)
    }

    pub fn apply(&self, lambda: f64, grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.volumes.len());
        let h_min = self.h_min(lambda);
        match self.mode {
            PrecondMode::VolumeOnly => {
                for (g, &v) in grad.iter_mut().zip(&self.volumes) {
                    *g /= (lambda * v).max(h_min);
                }
            }
            PrecondMode::NetsPlusVolume => {
                for ((g, &v), &d) in grad.iter_mut().zip(&self.volumes).zip(&self.degrees) {
                    *g /= (d + lambda * v).max(h_min);
                }
            }
        }
    }
}

/// Penalty multiplier for one iteration: wirelength growth slows the ramp.
pub fn lambda_multiplier(delta_hpwl: f64, hpwl_ref: f64, clamp: (f64, f64)) -> f64 {
    let r = if hpwl_ref > 0.0 {
        delta_hpwl / hpwl_ref
    } else {
        0.0
    };
    1.1f64.powf(-r + 1.0).clamp(clamp.0, clamp.1)
}

/// Smoothing width from overflow: spans `[1x, 100x]` of the base width as
/// the overflow goes from 0 to 1.
pub fn gamma_from_overflow(tau: f64, base: f64) -> f64 {
    base * 10f64.powf(2.0 * tau.clamp(0.0, 1.0))
}

/// Inverse local Lipschitz estimate from two points and their gradients.
pub fn inverse_lipschitz(du: &[f64], dg: &[f64]) -> Option<f64> {
    let nu = l2_norm(du);
    let ng = l2_norm(dg);
    if ng > 0.0 && nu.is_finite() && ng.is_finite() {
        Some(nu / ng)
    } else {
        None
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Metric values of one objective evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOut {
    pub hpwl: f64,
    pub wa: f64,
    pub energy: f64,
    pub overflow: f64,
}

/// A placement stage as seen by the solver: smoothed wirelength plus density
/// penalty over a flat variable vector.
pub trait PlacementObjective {
    fn num_vars(&self) -> usize;

    /// Evaluate at `x`, writing the wirelength gradient and the density
    /// gradient (both pre-zeroed by the solver) separately so the penalty
    /// factor can be re-applied without re-evaluation.
    fn eval(
        &mut self,
        x: &[f64],
        gamma: &Smoothing,
        wl_grad: &mut [f64],
        dens_grad: &mut [f64],
    ) -> Result<EvalOut>;

    fn preconditioner(&self) -> &Preconditioner;

    /// Project positions into the feasible box (centers within half-extents).
    fn clamp(&self, x: &mut [f64]);

    /// Bin width of the stage's density grid, the step and smoothing unit.
    fn bin_width(&self) -> f64;

    /// Per-dimension smoothing base widths (planar bin width; tier depth for z).
    fn gamma_base(&self) -> Smoothing;
}

#[derive(Debug, Clone)]
pub struct NesterovConfig {
    pub max_iters: usize,
    pub tau_stop: f64,
    /// Clamp interval of the per-iteration penalty multiplier.
    pub mu_clamp: (f64, f64),
    /// Reference wirelength delta as a fraction of the initial wirelength.
    pub hpwl_ref_frac: f64,
    /// Backtracking acceptance: the used step must not exceed the measured
    /// inverse Lipschitz step divided by this factor.
    pub bt_tol: f64,
    pub max_backtracks: usize,
    pub max_restarts: usize,
    /// Disable the wirelength force (density-only spreading).
    pub wirelength: bool,
}

impl Default for NesterovConfig {
    fn default() -> Self {
        NesterovConfig {
            max_iters: 1000,
            tau_stop: 0.10,
            mu_clamp: (0.75, 1.1),
            hpwl_ref_frac: 3.5e-3,
            bt_tol: 0.95,
            max_backtracks: 10,
            max_restarts: 3,
            wirelength: true,
        }
    }
}

/// One line of the iteration log.
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    pub iter: usize,
    pub hpwl: f64,
    pub wa: f64,
    pub energy: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub tau: f64,
    pub alpha: f64,
}

impl IterRecord {
    pub fn log_line(&self) -> String {
        format!(
            "iter={} hpwl={:.6e} w={:.6e} u={:.6e} lambda={:.6e} gamma={:.6e} tau={:.6} alpha={:.6e}",
            self.iter, self.hpwl, self.wa, self.energy, self.lambda, self.gamma, self.tau, self.alpha
        )
    }
}

/// Result of a solved stage.
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub iters: usize,
    pub final_tau: f64,
    pub final_hpwl: f64,
    pub reached_stop: bool,
}

struct GradParts {
    wl: Vec<f64>,
    dens: Vec<f64>,
}

/// Run the solver from `x0` until the overflow target or iteration cap.
pub fn nesterov_solve(
    obj: &mut dyn PlacementObjective,
    x0: &[f64],
    cfg: &NesterovConfig,
    log: &mut dyn FnMut(&IterRecord),
) -> Result<SolveOutcome> {
    let n = obj.num_vars();
    assert_eq!(x0.len(), n);

    let mut u = x0.to_vec();
    obj.clamp(&mut u);
    let mut v = u.clone();

    let base = obj.gamma_base();
    let gamma_of = move |tau: f64| -> Smoothing {
        Smoothing {
            gamma_x: gamma_from_overflow(tau, base.gamma_x),
            gamma_y: gamma_from_overflow(tau, base.gamma_y),
            gamma_z: gamma_from_overflow(tau, base.gamma_z),
        }
    };

    // First evaluation with the coarsest smoothing.
    let mut gamma = gamma_of(1.0);
    let mut cur = GradParts {
        wl: vec![0.0; n],
        dens: vec![0.0; n],
    };
    let mut out = obj.eval(&u, &gamma, &mut cur.wl, &mut cur.dens)?;
    gamma = gamma_of(out.overflow);

    // Penalty init: balance the raw force magnitudes.
    let wl_l1 = if cfg.wirelength { l1_norm(&cur.wl) } else { 0.0 };
    let dens_l1 = l1_norm(&cur.dens);
    let mut lambda = if cfg.wirelength && wl_l1 > 0.0 && dens_l1 > 0.0 {
        wl_l1 / dens_l1
    } else {
        1.0
    };
    let hpwl_init = out.hpwl;

    let combine = |parts: &GradParts, lambda: f64, use_wl: bool, g: &mut Vec<f64>| {
        g.clear();
        g.extend(
            parts
                .wl
                .iter()
                .zip(&parts.dens)
                .map(|(w, d)| if use_wl { w + lambda * d } else { lambda * d }),
        );
    };

    let mut g = Vec::with_capacity(n);
    combine(&cur, lambda, cfg.wirelength, &mut g);
    obj.preconditioner().apply(lambda, &mut g);

    // First move displaces at most one bin width.
    let gmax = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut alpha = if gmax > 0.0 {
        obj.bin_width() / gmax
    } else {
        obj.bin_width()
    };

    let mut a_k = 1.0f64;
    let mut iters = 0usize;
    let mut restarts = 0usize;
    let mut tau = out.overflow;
    let mut hpwl_prev = out.hpwl;

    log(&IterRecord {
        iter: 0,
        hpwl: out.hpwl,
        wa: out.wa,
        energy: out.energy,
        lambda,
        gamma: gamma.gamma_x,
        tau,
        alpha,
    });

    if tau <= cfg.tau_stop {
        return Ok(SolveOutcome {
            x: v,
            iters: 0,
            final_tau: tau,
            final_hpwl: out.hpwl,
            reached_stop: true,
        });
    }

    let mut new = GradParts {
        wl: vec![0.0; n],
        dens: vec![0.0; n],
    };
    let mut g_new = Vec::with_capacity(n);
    let mut u_new = vec![0.0; n];
    let mut v_new = vec![0.0; n];
    let mut du = vec![0.0; n];
    let mut dg = vec![0.0; n];

    'outer: for k in 0..cfg.max_iters {
        let mut accepted = false;
        let mut a_next = a_k;
        let mut alpha_hat = alpha;

        for bt in 0..=cfg.max_backtracks {
            for i in 0..n {
                v_new[i] = u[i] - alpha * g[i];
            }
            obj.clamp(&mut v_new);
            a_next = 0.5 * (1.0 + (4.0 * a_k * a_k + 1.0).sqrt());
            let coef = (a_k - 1.0) / a_next;
            for i in 0..n {
                u_new[i] = v_new[i] + coef * (v_new[i] - v[i]);
            }
            obj.clamp(&mut u_new);

            new.wl.iter_mut().for_each(|x| *x = 0.0);
            new.dens.iter_mut().for_each(|x| *x = 0.0);
            out = obj.eval(&u_new, &gamma, &mut new.wl, &mut new.dens)?;

            let finite = out.hpwl.is_finite() && all_finite(&new.wl) && all_finite(&new.dens);
            if !finite {
                // Divergence guard: restart from the last finite major
                // solution with a much smaller step.
                restarts += 1;
                if restarts > cfg.max_restarts {
                    return Err(Error::Divergence(format!(
                        "non-finite objective after {restarts} restarts at iteration {k}"
                    )));
                }
                u.copy_from_slice(&v);
                a_k = 1.0;
                alpha *= 0.1;
                combine(&cur, lambda, cfg.wirelength, &mut g);
                obj.preconditioner().apply(lambda, &mut g);
                continue 'outer;
            }

            combine(&new, lambda, cfg.wirelength, &mut g_new);
            obj.preconditioner().apply(lambda, &mut g_new);

            for i in 0..n {
                du[i] = u_new[i] - u[i];
                dg[i] = g_new[i] - g[i];
            }
            alpha_hat = inverse_lipschitz(&du, &dg).unwrap_or(alpha);
            if alpha <= alpha_hat / cfg.bt_tol || bt == cfg.max_backtracks {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        debug_assert!(accepted);

        std::mem::swap(&mut v, &mut v_new);
        std::mem::swap(&mut u, &mut u_new);
        std::mem::swap(&mut cur.wl, &mut new.wl);
        std::mem::swap(&mut cur.dens, &mut new.dens);
        a_k = a_next;
        iters = k + 1;
        tau = out.overflow;

        // Schedules: penalty ramp slowed by wirelength growth, smoothing
        // sharpened as overflow falls, steplength predicted from the
        // accepted Lipschitz estimate. The growth reference scales with the
        // wirelength itself so the ramp behaves uniformly across instances.
        if cfg.wirelength {
            let hpwl_ref = (cfg.hpwl_ref_frac * out.hpwl.max(hpwl_init)).max(1e-12);
            let mu = lambda_multiplier(out.hpwl - hpwl_prev, hpwl_ref, cfg.mu_clamp);
            lambda *= mu;
        }
        hpwl_prev = out.hpwl;
        gamma = gamma_of(tau);
        alpha = alpha_hat;

        combine(&cur, lambda, cfg.wirelength, &mut g);
        obj.preconditioner().apply(lambda, &mut g);

        log(&IterRecord {
            iter: iters,
            hpwl: out.hpwl,
            wa: out.wa,
            energy: out.energy,
            lambda,
            gamma: gamma.gamma_x,
            tau,
            alpha,
        });

        if tau <= cfg.tau_stop {
            break;
        }
    }

    Ok(SolveOutcome {
        x: v,
        iters,
        final_tau: tau,
        final_hpwl: hpwl_prev,
        reached_stop: tau <= cfg.tau_stop,
    })
}
