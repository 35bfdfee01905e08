use std::fs;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reason_eval::analysis::SimplexGrid;
use reason_eval::*;

fn config_in(dir: &std::path::Path) -> RunConfig {
    let mut c = RunConfig::default();
    c.output.dir = dir.to_path_buf();
    c
}

#[test]
fn sweep_reuse_matches_direct_scoring() {
    let config = RunConfig::default();
    let prepared = run::prepare(&config).unwrap();
    let sweep = run::sweep(&config).unwrap();
    let grid = SimplexGrid::new(3, 100).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let i = rng.gen_range(0..grid.len());
        let w = grid.weights(i, prepared.weights.w_star()).unwrap();
        for (k, traj) in prepared.candidates.iter().enumerate() {
            let direct = total_score(
                &prepared.context,
                traj,
                &prepared.environment,
                &prepared.agents,
                &w,
            )
            .unwrap();
            assert!((direct - sweep.cells[i].scores[k]).abs() <= 1e-12);
        }
    }
}

#[test]
fn evaluate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (report, summary) = run::run_evaluate(&config_in(dir.path())).unwrap();
    assert!(summary.warnings.is_empty());
    for f in [
        "report.json",
        "report.csv",
        "timeline.csv",
        "effective_config.toml",
        "manifest.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "candidate,rank,S,S_w,B,S_policymaker,S_driver,S_cyclist,\
         F_policymaker_policymaker_lane,F_driver_driver_efficiency,\
         F_cyclist_cyclist_safety_comfort,tie_group"
    );
    assert!(lines.next().unwrap().starts_with("T1,1,"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["B"], 1.0);
    assert_eq!(json["ranking"][0], "T1");
    assert_eq!(report.candidates.len(), 4);

    let timeline = fs::read_to_string(dir.path().join("timeline.csv")).unwrap();
    assert_eq!(timeline.lines().count(), 202);
}

#[test]
fn effective_config_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_in(dir.path());
    run::run_generate(&config).unwrap();
    let back = load_config(dir.path().join("effective_config.toml")).unwrap();
    assert_eq!(back, config);
}

#[test]
fn zero_weight_warns_and_ties() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = config_in(dir.path());
    config.weights.w = Some(vec![0.0, 0.5, 0.5]);
    let (report, summary) = run::run_evaluate(&config).unwrap();
    assert_eq!(summary.warnings.len(), 1);
    assert!(report.candidates.iter().all(|c| c.total == 0.0));
    assert_eq!(report.ties.len(), 1);
    assert_eq!(report.ties[0].len(), 4);
}

#[test]
fn exported_candidates_round_trip_through_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_in(&dir.path().join("gen"));
    run::run_generate(&config).unwrap();
    let (direct, _) = run::run_evaluate(&config_in(&dir.path().join("a"))).unwrap();

    let mut external = config_in(&dir.path().join("b"));
    external.scenario.candidates.clear();
    external.inputs.candidates = Some(dir.path().join("gen/candidates.csv"));
    external.inputs.environment = Some(dir.path().join("gen/environment.csv"));
    let (imported, _) = run::run_evaluate(&external).unwrap();
    assert_eq!(direct.ranking, imported.ranking);
    for (a, b) in direct.candidates.iter().zip(&imported.candidates) {
        assert_eq!(a.total.to_bits(), b.total.to_bits());
    }
}

#[test]
fn external_candidate_replaces_generated_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_in(dir.path());
    let prepared = run::prepare(&config).unwrap();
    // Swap T1 and T4 under each other's labels.
    let swapped = vec![
        prepared.candidates[3].relabeled("T1"),
        prepared.candidates[0].relabeled("T9"),
    ];
    let path = dir.path().join("ext.csv");
    fs::write(&path, formats::trajectories_to_csv(&swapped)).unwrap();
    let mut c = config.clone();
    c.inputs.candidates = Some(path);
    let p = run::prepare(&c).unwrap();
    let ids: Vec<&str> = p.candidates.iter().map(|t| t.id()).collect();
    assert_eq!(ids, ["T1", "T2", "T3", "T4", "T9"]);
    assert_eq!(p.candidates[0].states(), prepared.candidates[3].states());
}

#[test]
fn sweep_and_invert_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = config_in(dir.path());
    config.analysis.resolution = 10;
    let (sweep, _) = run::run_sweep(&config).unwrap();
    assert_eq!(sweep.cells.len(), 66);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "w1,w2,w3,B,S_T1,S_T2,S_T3,S_T4,best"
    );
    assert_eq!(csv.lines().count(), 67);

    config.analysis.candidate = Some("T1".into());
    let (count, _) = run::run_invert(&config).unwrap();
    assert!(count > 0);
    let inv = fs::read_to_string(dir.path().join("invert_T1.csv")).unwrap();
    assert_eq!(inv.lines().count(), count + 1);

    config.analysis.candidate = Some("T7".into());
    assert!(run::run_invert(&config).is_err());
}

#[test]
fn monitor_reads_series() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("s.csv");
    fs::write(&series, "t,score\n0,0.9\n0.1,0.8\n0.2,0.65\n0.3,0.4\n").unwrap();
    let mut config = config_in(dir.path());
    config.analysis.series = Some(series);
    let (trigger, _) = run::run_monitor(&config).unwrap();
    assert_eq!(trigger, Some(2));
    assert_eq!(
        fs::read_to_string(dir.path().join("trigger.txt")).unwrap(),
        "2\n"
    );
}

#[test]
fn preference_flips_between_regions() {
    let sweep = run::sweep(&RunConfig::default()).unwrap();
    let label = |l: [usize; 3]| {
        let cell = sweep.cells.iter().find(|c| c.lattice == l).unwrap();
        cell.best.label().to_owned()
    };
    // Straight line from the driver corner (T1) to the policymaker corner (T4).
    let walk: Vec<String> = (0..=97).map(|k| label([1 + k, 98 - k, 1])).collect();
    assert_eq!(walk.first().unwrap(), "T1");
    assert_eq!(walk.last().unwrap(), "T4");
    let changes = walk.windows(2).filter(|w| w[0] != w[1]).count();
    assert!(changes >= 1);
}
