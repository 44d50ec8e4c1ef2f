use phalanx_core::design::{
    self, compute_normalization, enumerate_feasible_designs, group_cases, run_case_table,
    NormalizationMode, PairTable, SensitivitySource, Weights,
};
use phalanx_core::metrics::EvalContext;
use phalanx_core::model::{ModelConfig, PoseConfig};
use phalanx_core::HandModel;

fn main() {
    let bases = [0.18, 0.0, -0.18, -0.36].map(|y| PoseConfig {
        translation: [0.0, y, 0.55],
        rotation: None,
    });
    let cfg = ModelConfig {
        finger_bases: Some(bases),
        ..Default::default()
    };
    let model = HandModel::from_config(&cfg).unwrap();
    let ctx = EvalContext::new(model, 5.0, 3.0, 0.05).unwrap();

    let relaxed_thumb: Vec<_> = enumerate_feasible_designs(51, 10, false)
        .iter()
        .map(|d| ctx.evaluate_thumb(d).unwrap())
        .collect();
    let relaxed_finger: Vec<_> = enumerate_feasible_designs(45, 10, false)
        .iter()
        .map(|d| ctx.evaluate_finger(d).unwrap())
        .collect();
    let norms = compute_normalization(
        &relaxed_thumb,
        &relaxed_finger,
        NormalizationMode::SumOfMaxima,
        SensitivitySource::Both,
    )
    .unwrap();
    println!("norms: {norms:?}");
    let ot: Vec<_> = relaxed_thumb.iter().filter(|r| r.design.is_ordered()).cloned().collect();
    let of: Vec<_> = relaxed_finger.iter().filter(|r| r.index.design.is_ordered()).cloned().collect();
    let table = PairTable::build(&ot, &of, SensitivitySource::Both).unwrap();

    for (name, swap) in [("literal c1->z1", false), ("prose c1->z2", true)] {
        let cases: Vec<Weights> = design::default_weight_cases()
            .iter()
            .map(|w| {
                if swap {
                    Weights::normalized(w.c2(), w.c1(), w.c3()).unwrap()
                } else {
                    *w
                }
            })
            .collect();
        let results = run_case_table(&table, &cases, &norms).unwrap();
        println!("=== {name}");
        for (i, r) in results.iter().enumerate() {
            println!(
                "  case {}: {} | {}  f={:.6} Vt={:.5} Vi={:.5} ovr={:.5} Wt={:.6} Wi={:.6}",
                i + 1,
                r.thumb,
                r.finger,
                r.objective,
                r.winner.thumb_workspace_volume,
                r.winner.index_workspace_volume,
                r.winner.overlap_volume_total,
                r.winner.thumb_manipulability,
                r.winner.index_manipulability
            );
        }
        for g in group_cases(&results) {
            println!("  group {}: {} | {} cases {:?}", g.label, g.thumb, g.finger, g.cases);
        }
        let pct = |a: f64, b: f64| 100.0 * (a - b) / b;
        let c1 = &results[0].winner;
        let c2 = &results[1].winner;
        let c3 = &results[2].winner;
        println!(
            "  case2 vs case1: thumb V {:+.2}% finger V {:+.2}% overlap {:+.2}% (paper +8.27 +3.21 +20.96)",
            pct(c2.thumb_workspace_volume, c1.thumb_workspace_volume),
            pct(c2.index_workspace_volume, c1.index_workspace_volume),
            pct(c2.overlap_volume_total, c1.overlap_volume_total)
        );
        println!(
            "  case3 vs case1: thumb W {:+.2}% finger W {:+.2}% (paper +0.82 +3.30)",
            pct(c3.thumb_manipulability, c1.thumb_manipulability),
            pct(c3.index_manipulability, c1.index_manipulability)
        );
    }
}
