//! End-to-end flow checks on small synthetic instances.

use fieldplace_core::eval::{check_legality, evaluate};
use fieldplace_core::flow::{run_flow, FlowConfig, FlowObserver, NoObserver, StageReport};
use fieldplace_core::model::{BinGrid3, Instance, Placement};
use fieldplace_core::optim::IterRecord;
use fieldplace_core::synth::{generate, SynthSpec};
use fieldplace_core::wirelength::vi_count;

struct Capture {
    reports: Vec<StageReport>,
    iters: Vec<(String, IterRecord)>,
}

impl FlowObserver for Capture {
    fn iteration(&mut self, stage: &str, rec: &IterRecord) {
        self.iters.push((stage.to_string(), *rec));
    }
    fn stage_done(&mut self, report: &StageReport, _i: &Instance, _p: &Placement) {
        self.reports.push(report.clone());
    }
}

#[test]
fn small_flow_produces_legal_placement() {
    let spec = SynthSpec {
        cells: 400,
        macros: 2,
        tiers: 2,
        seed: 11,
        ..Default::default()
    };
    let (inst, seed_pl) = generate(&spec).unwrap();
    let cfg = FlowConfig {
        seed: 11,
        ..Default::default()
    };
    let mut cap = Capture {
        reports: Vec::new(),
        iters: Vec::new(),
    };
    let (pl, reports) = run_flow(&inst, &seed_pl, &cfg, &mut cap).unwrap();

    for r in &reports {
        eprintln!(
            "stage {:<12} hpwl {:>12.1} vi {:?} tau {:.4} om {:.3e} iters {}",
            r.stage, r.hpwl, r.vi, r.tau, r.macro_overlap, r.iterations
        );
    }
    let violations = check_legality(&inst, &pl).unwrap();
    assert!(violations.is_empty(), "violations: {violations:?}");

    // VI must be exactly invariant through legalization and detailing.
    let vi_after_gp2d = reports
        .iter()
        .find(|r| r.stage == "gp2d-cells" || r.stage == "macro-lg")
        .and_then(|r| r.vi);
    let vi_final = vi_count(&inst.netlist, &pl, &inst.region).unwrap();
    if let Some(v) = reports.iter().rev().find(|r| r.stage == "legalize") {
        assert_eq!(v.vi.unwrap(), vi_final);
    }
    let _ = vi_after_gp2d;

    // Detailed placement never worsens wirelength.
    let lg = reports.iter().find(|r| r.stage == "legalize").unwrap();
    let dp = reports.iter().find(|r| r.stage == "detail").unwrap();
    assert!(dp.hpwl <= lg.hpwl + 1e-9, "{} > {}", dp.hpwl, lg.hpwl);
}

#[test]
fn single_tier_flow_degenerates_to_planar() {
    let spec = SynthSpec {
        cells: 250,
        macros: 0,
        tiers: 1,
        seed: 5,
        ..Default::default()
    };
    let (inst, seed_pl) = generate(&spec).unwrap();
    let cfg = FlowConfig {
        seed: 5,
        ..Default::default()
    };
    let (pl, reports) = run_flow(&inst, &seed_pl, &cfg, &mut NoObserver).unwrap();
    for r in &reports {
        eprintln!(
            "stage {:<12} hpwl {:>12.1} vi {:?} tau {:.4} iters {}",
            r.stage, r.hpwl, r.vi, r.tau, r.iterations
        );
    }
    assert!(check_legality(&inst, &pl).unwrap().is_empty());
    assert_eq!(vi_count(&inst.netlist, &pl, &inst.region).unwrap(), 0);
}

#[test]
fn seeded_flow_is_reproducible() {
    let spec = SynthSpec {
        cells: 300,
        macros: 3,
        tiers: 3,
        seed: 9,
        ..Default::default()
    };
    let (inst, seed_pl) = generate(&spec).unwrap();
    let cfg = FlowConfig {
        seed: 9,
        ..Default::default()
    };
    let (a, ra) = run_flow(&inst, &seed_pl, &cfg, &mut NoObserver).unwrap();
    let (b, rb) = run_flow(&inst, &seed_pl, &cfg, &mut NoObserver).unwrap();
    assert_eq!(a.x, b.x);
    assert_eq!(a.y, b.y);
    assert_eq!(a.tier, b.tier);
    assert_eq!(ra.len(), rb.len());
    for (x, y) in ra.iter().zip(&rb) {
        assert_eq!(x.hpwl.to_bits(), y.hpwl.to_bits());
        assert_eq!(x.vi, y.vi);
    }
}

#[test]
fn evaluate_agrees_with_flow_output() {
    let spec = SynthSpec {
        cells: 200,
        macros: 1,
        tiers: 2,
        seed: 21,
        ..Default::default()
    };
    let (inst, seed_pl) = generate(&spec).unwrap();
    let cfg = FlowConfig {
        seed: 21,
        ..Default::default()
    };
    let (pl, reports) = run_flow(&inst, &seed_pl, &cfg, &mut NoObserver).unwrap();
    let report = evaluate(&inst, &pl, BinGrid3 { m: 16 }).unwrap();
    assert!(report.legal);
    let last = reports.last().unwrap();
    assert!((report.hpwl - last.hpwl).abs() <= 1e-9 * last.hpwl.max(1.0));
}
