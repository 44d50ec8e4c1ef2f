use anyhow::{bail, Context};

use phalanx_core::cache::RecordCache;
use phalanx_core::config::RunConfig;
use phalanx_core::design::{
    compute_normalization, enumerate_feasible_designs, run_case_table, search_optimal_pair,
    NormalizationConstants, PairTable, PhalanxTriple, Weights, FINGER_TOTAL_HUNDREDTHS,
    MIN_PHALANX_HUNDREDTHS, THUMB_TOTAL_HUNDREDTHS,
};
use phalanx_core::model::FingerId;
use phalanx_core::report;
use phalanx_core::sweep::{ensure_records, resolution_study as run_study, Progress, RecordStore};

fn ordered_designs() -> (Vec<PhalanxTriple>, Vec<PhalanxTriple>) {
    (
        enumerate_feasible_designs(THUMB_TOTAL_HUNDREDTHS, MIN_PHALANX_HUNDREDTHS, true),
        enumerate_feasible_designs(FINGER_TOTAL_HUNDREDTHS, MIN_PHALANX_HUNDREDTHS, true),
    )
}

fn relaxed_designs() -> (Vec<PhalanxTriple>, Vec<PhalanxTriple>) {
    (
        enumerate_feasible_designs(THUMB_TOTAL_HUNDREDTHS, MIN_PHALANX_HUNDREDTHS, false),
        enumerate_feasible_designs(FINGER_TOTAL_HUNDREDTHS, MIN_PHALANX_HUNDREDTHS, false),
    )
}

fn open_cache(config: &RunConfig) -> anyhow::Result<RecordCache> {
    let path = config.cache_path();
    let cache = RecordCache::open(&path)
        .with_context(|| format!("opening cache {}", path.display()))?;
    for w in cache.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(cache)
}

fn progress_line(p: Progress) {
    eprintln!(
        "[{} {}/{}] {} {}",
        p.chain,
        p.index,
        p.total,
        p.design,
        if p.cached { "(cached)" } else { "computed" }
    );
}

/// Records for the relaxed sets (normalization) plus the ordered subsets
/// (the search), served from one cache.
fn gather_records(config: &RunConfig) -> anyhow::Result<RecordStore> {
    let ctx = config.eval_context()?;
    let mut cache = open_cache(config)?;
    let (thumb, finger) = relaxed_designs();
    let store = ensure_records(&ctx, &mut cache, &thumb, &finger, progress_line)?;
    Ok(store)
}

fn normalization_and_table(
    config: &RunConfig,
    store: &RecordStore,
) -> anyhow::Result<(NormalizationConstants, PairTable)> {
    let norms = compute_normalization(
        &store.thumb_records(),
        &store.finger_records(),
        config.normalization,
        config.z3_source,
    )?;
    let (ordered_thumb, ordered_finger) = ordered_designs();
    let table = PairTable::build(
        &store.thumb_subset(&ordered_thumb),
        &store.finger_subset(&ordered_finger),
        config.z3_source,
    )?;
    Ok((norms, table))
}

pub fn print_model(config: &RunConfig) -> anyhow::Result<()> {
    let model = config.hand_model()?;
    print!("{}", report::model_dump(&model));
    Ok(())
}

pub fn resolution_study(config: &RunConfig, echo: &RunConfig) -> anyhow::Result<()> {
    let ctx = config.eval_context()?;
    let study = run_study(&ctx, &config.study_resolutions_deg, &config.study_voxel_sizes)?;
    let text = report::resolution_study_text(echo, &study);
    print!("{text}");
    let path = config.out_dir.join("resolution_study.txt");
    std::fs::create_dir_all(&config.out_dir)?;
    std::fs::write(&path, text)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn sweep(config: &RunConfig, relaxed: bool) -> anyhow::Result<()> {
    let ctx = config.eval_context()?;
    let mut cache = open_cache(config)?;
    let (thumb, finger) = if relaxed { relaxed_designs() } else { ordered_designs() };
    let store = ensure_records(&ctx, &mut cache, &thumb, &finger, progress_line)?;
    println!(
        "swept {} thumb and {} finger designs (cache: {})",
        store.thumb.len(),
        store.finger.len(),
        config.cache_path().display()
    );
    Ok(())
}

pub fn optimize(config: &RunConfig, echo: &RunConfig, weights: [f64; 3]) -> anyhow::Result<()> {
    let weights = Weights::normalized(weights[0], weights[1], weights[2])?;
    let store = gather_records(config)?;
    let (norms, table) = normalization_and_table(config, &store)?;
    let result = search_optimal_pair(&table, &weights, &norms)?;

    std::fs::create_dir_all(&config.out_dir)?;
    let csv_path = config.out_dir.join("scored_pairs.csv");
    report::write_scored_pairs_csv(&csv_path, &result)?;
    let winner_path = config.out_dir.join("winner.json");
    report::write_winner_json(&winner_path, &report::WinnerReport::new(echo, &norms, &result))?;

    // Winner voxel sets for plotting: thumb, index, and their overlap.
    let thumb_voxels = &store.thumb[&result.thumb].voxels;
    let index_voxels = &store.finger[&result.finger].index.voxels;
    let (overlap, _) = phalanx_core::overlap_volume(thumb_voxels, index_voxels)?;
    report::write_point_cloud(&config.out_dir.join("cloud_thumb.xyz"), thumb_voxels)?;
    report::write_point_cloud(&config.out_dir.join("cloud_index.xyz"), index_voxels)?;
    report::write_point_cloud(&config.out_dir.join("cloud_overlap.xyz"), &overlap)?;

    println!(
        "optimal pair: thumb {} finger {} (f = {}, {} of {} pairs excluded)",
        result.thumb,
        result.finger,
        report::fmt6(result.objective),
        result.excluded_pairs,
        result.table.len()
    );
    println!("wrote {}", csv_path.display());
    println!("wrote {}", winner_path.display());
    Ok(())
}

pub fn cases(config: &RunConfig, echo: &RunConfig) -> anyhow::Result<()> {
    let cases = config.weight_cases()?;
    let store = gather_records(config)?;
    let (norms, table) = normalization_and_table(config, &store)?;
    let results = run_case_table(&table, &cases, &norms)?;
    let case_report = report::CaseReport::new(echo, &norms, &results);

    std::fs::create_dir_all(&config.out_dir)?;
    let json_path = config.out_dir.join("case_report.json");
    report::write_case_report_json(&json_path, &case_report)?;
    let groups_text = case_report.group_table();
    let groups_path = config.out_dir.join("case_groups.txt");
    std::fs::write(&groups_path, &groups_text)?;

    print!("{groups_text}");
    println!("wrote {}", json_path.display());
    println!("wrote {}", groups_path.display());
    Ok(())
}

pub fn export_workspace(
    config: &RunConfig,
    chain: &str,
    design: [u32; 3],
    finger: &str,
) -> anyhow::Result<()> {
    let design = PhalanxTriple::new(design[0], design[1], design[2]);
    let ctx = config.eval_context()?;
    let mut cache = open_cache(config)?;

    let (voxels, label) = match chain {
        "thumb" => {
            if design.total() != THUMB_TOTAL_HUNDREDTHS {
                bail!(
                    "thumb design {design} must total {THUMB_TOTAL_HUNDREDTHS} hundredths"
                );
            }
            let store = ensure_records(&ctx, &mut cache, &[design], &[], progress_line)?;
            (store.thumb[&design].voxels.clone(), "thumb".to_string())
        }
        "finger" => {
            if design.total() != FINGER_TOTAL_HUNDREDTHS {
                bail!(
                    "finger design {design} must total {FINGER_TOTAL_HUNDREDTHS} hundredths"
                );
            }
            let id = match finger {
                "index" => FingerId::Index,
                "middle" => FingerId::Middle,
                "ring" => FingerId::Ring,
                "little" => FingerId::Little,
                other => bail!("unknown finger {other:?} (index|middle|ring|little)"),
            };
            let store = ensure_records(&ctx, &mut cache, &[], &[design], progress_line)?;
            (store.finger[&design].voxels_for(id).clone(), format!("finger_{finger}"))
        }
        other => bail!("unknown chain {other:?} (thumb|finger)"),
    };

    std::fs::create_dir_all(&config.out_dir)?;
    let stem = format!("workspace_{label}_{design}");
    let csv_path = config.out_dir.join(format!("{stem}.csv"));
    let cloud_path = config.out_dir.join(format!("{stem}.xyz"));
    report::write_voxels_csv(&csv_path, &voxels)?;
    report::write_point_cloud(&cloud_path, &voxels)?;
    println!(
        "exported {} cells (volume {})",
        voxels.len(),
        report::fmt6(voxels.volume())
    );
    println!("wrote {}", csv_path.display());
    println!("wrote {}", cloud_path.display());
    Ok(())
}

pub fn verify_cache(config: &RunConfig, fraction: f64) -> anyhow::Result<()> {
    if !(0.0..=1.0).contains(&fraction) || fraction == 0.0 {
        bail!("--fraction must be in (0, 1]");
    }
    let ctx = config.eval_context()?;
    let cache = open_cache(config)?;
    if cache.is_empty() {
        println!("cache {} is empty; nothing to verify", config.cache_path().display());
        return Ok(());
    }
    let (checked, mismatches) =
        phalanx_core::sweep::verify_cache(&ctx, &cache, fraction, |m| eprintln!("{m}"))?;
    println!(
        "verified {checked} of {} cached records: {mismatches} mismatch(es)",
        cache.len()
    );
    if mismatches > 0 {
        bail!("{mismatches} cached record(s) differ from fresh computation");
    }
    Ok(())
}
