//! Exact and smoothed wirelength.
//!
//! HPWL is the per-net sum of coordinate spans; the z dimension is reported
//! separately as the vertical-interconnect count. The weighted-average (WA)
//! estimator replaces max/min with exponentially weighted means controlled by
//! a smoothing width per dimension, which makes the objective differentiable
//! everywhere. Exponentials are shifted by the per-net extremum before
//! evaluation, which is exact and keeps them finite for coordinates far
//! larger than the smoothing width.

use crate::model::{Beta, Net, Netlist, Placement, Region3D};
use crate::{Error, Result};

/// Smoothing widths for the WA estimator, one per dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothing {
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub gamma_z: f64,
}

impl Smoothing {
    pub fn uniform(gamma: f64) -> Self {
        Smoothing {
            gamma_x: gamma,
            gamma_y: gamma,
            gamma_z: gamma,
        }
    }
}

fn net_span(net: &Net, placement: &Placement, pick: impl Fn(&Placement, &crate::model::Pin) -> f64) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for pin in &net.pins {
        let c = pick(placement, pin);
        lo = lo.min(c);
        hi = hi.max(c);
    }
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Planar half-perimeter wirelength, weighted per net and per dimension.
pub fn hpwl(netlist: &Netlist, placement: &Placement, beta: &Beta) -> f64 {
    let mut total = 0.0;
    for net in &netlist.nets {
        if net.pins.is_empty() {
            continue;
        }
        let sx = net_span(net, placement, |p, pin| p.pin_xy(pin).0);
        let sy = net_span(net, placement, |p, pin| p.pin_xy(pin).1);
        total += net.weight * (beta.x * sx + beta.y * sy);
    }
    total
}

/// Unweighted per-dimension span sums (x, y, z).
pub fn hpwl_per_dim(netlist: &Netlist, placement: &Placement) -> (f64, f64, f64) {
    let (mut tx, mut ty, mut tz) = (0.0, 0.0, 0.0);
    for net in &netlist.nets {
        if net.pins.is_empty() {
            continue;
        }
        tx += net_span(net, placement, |p, pin| p.pin_xy(pin).0);
        ty += net_span(net, placement, |p, pin| p.pin_xy(pin).1);
        tz += net_span(net, placement, |p, pin| p.pin_z(pin));
    }
    (tx, ty, tz)
}

/// Number of tier boundaries penetrated, summed over nets: a net spanning
/// tiers `lo..=hi` contributes `hi - lo`.
pub fn vi_count(netlist: &Netlist, placement: &Placement, region: &Region3D) -> Result<u64> {
    if placement.tier.is_none() {
        return Err(Error::State("vi_count requires tier assignment".into()));
    }
    let mut total = 0u64;
    for net in &netlist.nets {
        let mut lo = usize::MAX;
        let mut hi = 0usize;
        let mut any = false;
        for pin in &net.pins {
            let t = placement
                .pin_tier(pin, region)
                .ok_or_else(|| Error::State("pin without tier".into()))?;
            lo = lo.min(t);
            hi = hi.max(t);
            any = true;
        }
        if any && hi > lo {
            total += (hi - lo) as u64;
        }
    }
    Ok(total)
}

/// One dimension of the WA estimator for a single net.
///
/// Returns the smoothed span; when `grad` is given, writes the derivative
/// with respect to each pin coordinate.
fn wa_dim(coords: &[f64], gamma: f64, mut grad: Option<&mut [f64]>) -> f64 {
    debug_assert!(gamma > 0.0);
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for &c in coords {
        hi = hi.max(c);
        lo = lo.min(c);
    }
    // Max estimator: weights e^{(c-hi)/g}; min estimator: weights e^{(lo-c)/g}.
    let (mut se, mut sce, mut sf, mut scf) = (0.0, 0.0, 0.0, 0.0);
    for &c in coords {
        let e = ((c - hi) / gamma).exp();
        let f = ((lo - c) / gamma).exp();
        se += e;
        sce += c * e;
        sf += f;
        scf += c * f;
    }
    let w_max = sce / se;
    let w_min = scf / sf;
    if let Some(g) = grad.as_deref_mut() {
        for (gi, &c) in g.iter_mut().zip(coords) {
            let e = ((c - hi) / gamma).exp();
            let f = ((lo - c) / gamma).exp();
            let d_max = (e / se) * (1.0 + (c - w_max) / gamma);
            let d_min = (f / sf) * (1.0 - (c - w_min) / gamma);
            *gi = d_max - d_min;
        }
    }
    w_max - w_min
}

/// Smoothed wirelength over all nets. `include_z` selects whether the
/// vertical dimension participates (it does not once tiers are frozen).
pub fn wa_wirelength(
    netlist: &Netlist,
    placement: &Placement,
    smoothing: &Smoothing,
    beta: &Beta,
    include_z: bool,
) -> f64 {
    let mut scratch = Vec::new();
    let mut total = 0.0;
    for net in &netlist.nets {
        if net.pins.is_empty() {
            continue;
        }
        total += net.weight * wa_net(net, placement, smoothing, beta, include_z, &mut scratch, None);
    }
    total
}

struct GradSink<'a> {
    gx: &'a mut [f64],
    gy: &'a mut [f64],
    gz: &'a mut [f64],
}

fn wa_net(
    net: &Net,
    placement: &Placement,
    smoothing: &Smoothing,
    beta: &Beta,
    include_z: bool,
    scratch: &mut Vec<f64>,
    mut sink: Option<(&mut GradSink, f64)>,
) -> f64 {
    let n = net.pins.len();
    scratch.clear();
    scratch.resize(2 * n, 0.0);
    let (coords, pin_grad) = scratch.split_at_mut(n);

    let mut w = 0.0;
    for (dim, (gamma, b)) in [
        (smoothing.gamma_x, beta.x),
        (smoothing.gamma_y, beta.y),
        (smoothing.gamma_z, beta.z),
    ]
    .into_iter()
    .enumerate()
    {
        if dim == 2 && !include_z {
            continue;
        }
        for (slot, pin) in coords.iter_mut().zip(&net.pins) {
            *slot = match dim {
                0 => placement.pin_xy(pin).0,
                1 => placement.pin_xy(pin).1,
                _ => placement.pin_z(pin),
            };
        }
        let need_grad = sink.is_some();
        let wd = wa_dim(coords, gamma, need_grad.then_some(&mut pin_grad[..]));
        w += b * wd;
        if let Some((sink, weight)) = sink.as_mut() {
            let scale = b * *weight;
            for (pin, &g) in net.pins.iter().zip(pin_grad.iter()) {
                if let Some(c) = pin.cell() {
                    match dim {
                        0 => sink.gx[c] += scale * g,
                        1 => sink.gy[c] += scale * g,
                        _ => sink.gz[c] += scale * g,
                    }
                }
            }
        }
    }
    w
}

/// Smoothed wirelength and its gradient with respect to every cell center.
/// Gradients accumulate into per-cell arrays (callers zero them first); pins
/// ride on their owner through fixed offsets, so a cell collects the sum of
/// its pins' derivatives. Returns the total smoothed wirelength.
pub fn wa_gradient(
    netlist: &Netlist,
    placement: &Placement,
    smoothing: &Smoothing,
    beta: &Beta,
    include_z: bool,
    gx: &mut [f64],
    gy: &mut [f64],
    gz: &mut [f64],
) -> f64 {
    let mut scratch = Vec::new();
    let mut total = 0.0;
    let mut sink = GradSink { gx, gy, gz };
    for net in &netlist.nets {
        if net.pins.is_empty() {
            continue;
        }
        total += net.weight
            * wa_net(
                net,
                placement,
                smoothing,
                beta,
                include_z,
                &mut scratch,
                Some((&mut sink, net.weight)),
            );
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cell, CellKind, Pin};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cell(name: &str) -> Cell {
        Cell {
            name: name.into(),
            width: 0.01,
            height: 0.01,
            kind: CellKind::StdCell,
            movable: true,
        }
    }

    fn net_of_points(points: &[(f64, f64, f64)]) -> (Netlist, Placement) {
        let mut nl = Netlist::default();
        let mut pl = Placement::zeroed(points.len());
        let mut pins = Vec::new();
        for (i, &(x, y, z)) in points.iter().enumerate() {
            nl.cells.push(cell(&format!("c{i}")));
            pl.x[i] = x;
            pl.y[i] = y;
            pl.z[i] = z;
            pins.push(Pin::OnCell {
                cell: i,
                dx: 0.0,
                dy: 0.0,
            });
        }
        nl.nets.push(Net {
            name: "n0".into(),
            pins,
            weight: 1.0,
        });
        (nl, pl)
    }

    #[test]
    fn hpwl_two_pin() {
        let (nl, pl) = net_of_points(&[(0.0, 0.0, 0.0), (3.0, 4.0, 0.0)]);
        assert_relative_eq!(hpwl(&nl, &pl, &Beta::default()), 7.0);
    }

    #[test]
    fn hpwl_degenerate_nets() {
        let (nl, pl) = net_of_points(&[(2.0, 5.0, 0.0)]);
        assert_eq!(hpwl(&nl, &pl, &Beta::default()), 0.0);
        let (nl, pl) = net_of_points(&[(1.0, 1.0, 0.0), (1.0, 1.0, 0.0), (1.0, 1.0, 0.0)]);
        assert_eq!(hpwl(&nl, &pl, &Beta::default()), 0.0);
    }

    #[test]
    fn vi_counts_boundaries_penetrated() {
        let region = Region3D::new(4, 1.0).unwrap();
        let (nl, mut pl) = net_of_points(&[(0.0, 0.0, 0.0), (1.0, 1.0, 0.0)]);
        pl.tier = Some(vec![1, 3]);
        assert_eq!(vi_count(&nl, &pl, &region).unwrap(), 2);

        pl.tier = Some(vec![2, 2]);
        assert_eq!(vi_count(&nl, &pl, &region).unwrap(), 0);
    }

    #[test]
    fn vi_sums_over_nets() {
        let region = Region3D::new(4, 1.0).unwrap();
        let mut nl = Netlist::default();
        for i in 0..3 {
            nl.cells.push(cell(&format!("c{i}")));
        }
        let pin = |c| Pin::OnCell {
            cell: c,
            dx: 0.0,
            dy: 0.0,
        };
        nl.nets.push(Net {
            name: "a".into(),
            pins: vec![pin(0), pin(1)],
            weight: 1.0,
        });
        nl.nets.push(Net {
            name: "b".into(),
            pins: vec![pin(0), pin(2)],
            weight: 1.0,
        });
        let mut pl = Placement::zeroed(3);
        pl.tier = Some(vec![0, 1, 2]);
        assert_eq!(vi_count(&nl, &pl, &region).unwrap(), 3);
    }

    #[test]
    fn vi_requires_tiers() {
        let region = Region3D::new(2, 1.0).unwrap();
        let (nl, pl) = net_of_points(&[(0.0, 0.0, 0.0), (1.0, 1.0, 0.0)]);
        assert!(matches!(
            vi_count(&nl, &pl, &region),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn wa_coincident_pins_zero() {
        let (nl, pl) = net_of_points(&[(0.4, 0.4, 0.1), (0.4, 0.4, 0.1)]);
        let s = Smoothing::uniform(0.5);
        assert_relative_eq!(
            wa_wirelength(&nl, &pl, &s, &Beta::default(), true),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn wa_two_pin_closed_form() {
        // Pins at x in {0,1}, gamma 0.5: W_x = e^2/(1+e^2) - e^-2/(1+e^-2).
        let (nl, pl) = net_of_points(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)]);
        let s = Smoothing::uniform(0.5);
        let e2 = 2.0f64.exp();
        let em2 = (-2.0f64).exp();
        let expect = e2 / (1.0 + e2) - em2 / (1.0 + em2);
        let got = wa_wirelength(&nl, &pl, &s, &Beta::default(), false);
        assert_relative_eq!(got, expect, max_relative = 1e-12);
    }

    #[test]
    fn wa_approaches_hpwl_as_gamma_shrinks() {
        let (nl, pl) = net_of_points(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)]);
        let s = Smoothing::uniform(0.01);
        let got = wa_wirelength(&nl, &pl, &s, &Beta::default(), false);
        assert!((got - 1.0).abs() < 1e-6, "W_x = {got}");
    }

    #[test]
    fn gradient_zero_for_single_pin() {
        let (nl, pl) = net_of_points(&[(0.3, 0.3, 0.3)]);
        let s = Smoothing::uniform(0.2);
        let mut gx = vec![0.0; 1];
        let mut gy = vec![0.0; 1];
        let mut gz = vec![0.0; 1];
        wa_gradient(&nl, &pl, &s, &Beta::default(), true, &mut gx, &mut gy, &mut gz);
        assert_eq!(gx[0], 0.0);
        assert_eq!(gy[0], 0.0);
        assert_eq!(gz[0], 0.0);
    }

    #[test]
    fn gradient_antisymmetric_for_symmetric_pair() {
        let (nl, pl) = net_of_points(&[(-0.5, 0.0, 0.0), (0.5, 0.0, 0.0)]);
        let s = Smoothing::uniform(0.3);
        let mut gx = vec![0.0; 2];
        let mut gy = vec![0.0; 2];
        let mut gz = vec![0.0; 2];
        wa_gradient(&nl, &pl, &s, &Beta::default(), false, &mut gx, &mut gy, &mut gz);
        assert_relative_eq!(gx[0], -gx[1], max_relative = 1e-12);
        assert!(gx[1] > 0.0);
    }

    fn finite_diff_net(points: &[(f64, f64, f64)], gamma: f64) -> (Vec<f64>, Vec<f64>) {
        let (nl, mut pl) = net_of_points(points);
        let s = Smoothing::uniform(gamma);
        let beta = Beta::default();
        let n = points.len();
        let mut gx = vec![0.0; n];
        let mut gy = vec![0.0; n];
        let mut gz = vec![0.0; n];
        wa_gradient(&nl, &pl, &s, &beta, true, &mut gx, &mut gy, &mut gz);

        let h = 1e-6;
        let mut fd = Vec::new();
        let mut an = Vec::new();
        fn arr(pl: &mut Placement, dim: usize) -> &mut Vec<f64> {
            match dim {
                0 => &mut pl.x,
                1 => &mut pl.y,
                _ => &mut pl.z,
            }
        }
        for i in 0..n {
            for dim in 0..3 {
                let orig = arr(&mut pl, dim)[i];
                arr(&mut pl, dim)[i] = orig + h;
                let up = wa_wirelength(&nl, &pl, &s, &beta, true);
                arr(&mut pl, dim)[i] = orig - h;
                let dn = wa_wirelength(&nl, &pl, &s, &beta, true);
                arr(&mut pl, dim)[i] = orig;
                fd.push((up - dn) / (2.0 * h));
                an.push(match dim {
                    0 => gx[i],
                    1 => gy[i],
                    _ => gz[i],
                });
            }
        }
        (an, fd)
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.random_range(2..=5);
            let pts: Vec<(f64, f64, f64)> = (0..n)
                .map(|_| {
                    (
                        rng.random_range(0.0..1.0),
                        rng.random_range(0.0..1.0),
                        rng.random_range(0.0..1.0),
                    )
                })
                .collect();
            let gamma = rng.random_range(0.05..0.5);
            let (an, fd) = finite_diff_net(&pts, gamma);
            let num: f64 = an
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = fd.iter().map(|b| b * b).sum::<f64>().sqrt();
            assert!(
                num <= 1e-6 * den.max(1e-9),
                "rel err {} too large",
                num / den.max(1e-12)
            );
        }
    }

    proptest! {
        #[test]
        fn wa_bounded_by_hpwl_and_translation_covariant(
            xs in proptest::collection::vec(-10.0f64..10.0, 2..6),
            shift in -5.0f64..5.0,
            gamma in 0.05f64..2.0,
        ) {
            let pts: Vec<(f64, f64, f64)> = xs.iter().map(|&x| (x, 0.0, 0.0)).collect();
            let (nl, pl) = net_of_points(&pts);
            let s = Smoothing::uniform(gamma);
            let beta = Beta::default();
            let w = wa_wirelength(&nl, &pl, &s, &beta, false);
            let h = hpwl(&nl, &pl, &beta);
            prop_assert!(w >= -1e-12);
            prop_assert!(w <= h + 1e-9);

            let shifted: Vec<(f64, f64, f64)> = xs.iter().map(|&x| (x + shift, 0.0, 0.0)).collect();
            let (nl2, pl2) = net_of_points(&shifted);
            let w2 = wa_wirelength(&nl2, &pl2, &s, &beta, false);
            prop_assert!((w - w2).abs() <= 1e-9 * w.abs().max(1.0));
        }

        #[test]
        fn gradient_sums_to_zero_per_net(
            xs in proptest::collection::vec(-3.0f64..3.0, 2..6),
            gamma in 0.05f64..1.0,
        ) {
            let pts: Vec<(f64, f64, f64)> = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| (x, x * 0.5 + i as f64 * 0.1, 0.0))
                .collect();
            let (nl, pl) = net_of_points(&pts);
            let s = Smoothing::uniform(gamma);
            let n = pts.len();
            let mut gx = vec![0.0; n];
            let mut gy = vec![0.0; n];
            let mut gz = vec![0.0; n];
            wa_gradient(&nl, &pl, &s, &Beta::default(), true, &mut gx, &mut gy, &mut gz);
            prop_assert!(gx.iter().sum::<f64>().abs() < 1e-9);
            prop_assert!(gy.iter().sum::<f64>().abs() < 1e-9);
            prop_assert!(gz.iter().sum::<f64>().abs() < 1e-9);
        }
    }
}
