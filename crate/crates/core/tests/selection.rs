use std::collections::BTreeMap;

use omvid::datamodel::{CostKind, CostTable, DatasetSplit, Dims, UncertaintyVolume};
use omvid::selection::{
    fit_cost_table, frame_uncertainty, mix_cost, pick_frames, plan_cost, select, video_uncertainty, AnnotationMix,
    Bucket, BudgetConfig, DatasetProfile, Geometry, PlanEntry, Policy, SelectionPlan,
};
use omvid::Error;
use proptest::prelude::*;

const UCF: DatasetProfile = DatasetProfile { videos: 2284, mean_frames_per_video: 187.0 };
const JHMDB: DatasetProfile = DatasetProfile { videos: 666, mean_frames_per_video: 34.0 };

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i:02}")).collect()
}

fn flat_frames(videos: &[String], t: usize) -> BTreeMap<String, Vec<f64>> {
    videos.iter().map(|v| (v.clone(), (0..t).map(|f| f as f64).collect())).collect()
}

fn budget(b: f64, s: f64, t: f64) -> BudgetConfig {
    BudgetConfig { box_pct: b, scribble_pct: s, tag_pct: t, ..Default::default() }
}

#[test]
fn frame_score_is_additive_over_regions() {
    let u: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin().abs()).collect();
    let (a, b) = u.split_at(7);
    let whole = frame_uncertainty(&u).unwrap();
    assert!((frame_uncertainty(a).unwrap() + frame_uncertainty(b).unwrap() - whole).abs() < 1e-12);
}

#[test]
fn video_score_is_mean_of_frame_sums() {
    let uv = UncertaintyVolume::new("v", Dims::new(2, 2, 1).unwrap(), vec![0.25, 0.75, 1.0, 2.0f32]).unwrap();
    assert_eq!(video_uncertainty(&uv).unwrap(), 2.0);
}

#[test]
fn bucket_sizes_follow_percentages() {
    let v = ids(10);
    let scores: BTreeMap<_, _> = v.iter().enumerate().map(|(i, id)| (id.clone(), i as f64)).collect();
    let plan = select(
        &DatasetSplit::fresh(v.clone()),
        &scores,
        &flat_frames(&v, 32),
        &budget(20.0, 30.0, 50.0),
        Policy::Bucket,
        Geometry::Box,
        &CostTable::default(),
    )
    .unwrap();
    let buckets: Vec<Bucket> = plan.entries.iter().map(|e| e.bucket).collect();
    let mut expect = vec![Bucket::Box; 2];
    expect.extend([Bucket::Scribble; 3]);
    expect.extend([Bucket::Tag; 5]);
    assert_eq!(buckets, expect);
    let order: Vec<&str> = plan.videos().collect();
    assert_eq!(order, ["v09", "v08", "v07", "v06", "v05", "v04", "v03", "v02", "v01", "v00"]);
    assert_eq!(plan.entries[0].frames, vec![23, 31]);
}

#[test]
fn equal_scores_rank_lexicographically() {
    let v = vec!["b".to_string(), "a".to_string()];
    let scores: BTreeMap<_, _> = v.iter().map(|id| (id.clone(), 1.0)).collect();
    let plan = select(
        &DatasetSplit::fresh(v.clone()),
        &scores,
        &flat_frames(&v, 4),
        &budget(50.0, 0.0, 50.0),
        Policy::Bucket,
        Geometry::Box,
        &CostTable::default(),
    )
    .unwrap();
    assert_eq!(plan.entries[0].video_id, "a");
    assert_eq!(plan.entries[0].bucket, Bucket::Box);
}

#[test]
fn random_policy_is_seeded() {
    let v = ids(30);
    let scores = BTreeMap::new();
    let run = |seed| {
        select(
            &DatasetSplit::fresh(v.clone()),
            &scores,
            &flat_frames(&v, 40),
            &budget(10.0, 20.0, 30.0),
            Policy::Random { seed },
            Geometry::Box,
            &CostTable::default(),
        )
        .unwrap()
    };
    assert_eq!(run(7), run(7));
    assert_ne!(run(7).entries, run(8).entries);
    assert_eq!(run(7).policy, "random");
}

#[test]
fn infeasible_budgets_are_budget_errors() {
    let v = ids(10);
    let split = DatasetSplit::new(v[..4].to_vec(), v[4..].to_vec(), 2).unwrap();
    let scores: BTreeMap<_, _> = v.iter().map(|id| (id.clone(), 0.0)).collect();
    let frames = flat_frames(&v, 8);
    let ct = CostTable::default();
    let err = select(&split, &scores, &frames, &budget(60.0, 60.0, 0.0), Policy::Bucket, Geometry::Box, &ct);
    assert!(matches!(err, Err(Error::Budget(_))));
    let err = select(&split, &scores, &frames, &budget(40.0, 30.0, 0.0), Policy::Bucket, Geometry::Box, &ct);
    assert!(matches!(err, Err(Error::Budget(_))));
    assert!(select(&split, &scores, &frames, &budget(30.0, 30.0, 0.0), Policy::Bucket, Geometry::Box, &ct).is_ok());
}

#[test]
fn missing_score_under_bucket_policy_is_rejected() {
    let v = ids(3);
    let scores: BTreeMap<_, _> = v[..2].iter().map(|id| (id.clone(), 0.0)).collect();
    let r = select(
        &DatasetSplit::fresh(v.clone()),
        &scores,
        &flat_frames(&v, 8),
        &budget(10.0, 0.0, 0.0),
        Policy::Bucket,
        Geometry::Box,
        &CostTable::default(),
    );
    assert!(matches!(r, Err(Error::Validation(_))));
}

#[test]
fn empty_plan_costs_nothing() {
    assert_eq!(plan_cost(&SelectionPlan::empty(1, "bucket"), &CostTable::default()), 0.0);
}

#[test]
fn plan_cost_matches_hand_count() {
    let ct = CostTable::default();
    let entry = |id: &str, bucket, frames: Vec<u32>| PlanEntry {
        video_id: id.into(),
        score: 0.0,
        bucket,
        frames,
        uniform_fallback: false,
    };
    let mut plan = SelectionPlan::empty(1, "bucket");
    plan.entries = vec![
        entry("a", Bucket::Box, vec![0, 10, 20]),
        entry("b", Bucket::Scribble, vec![4, 12]),
        entry("c", Bucket::Tag, vec![]),
    ];
    let secs = 3.0 * ct.tag_s + 3.0 * ct.box_s + 2.0 * ct.scribble_s;
    assert!((plan_cost(&plan, &ct) - secs / 3600.0).abs() < 1e-12);
    plan.geometry = Geometry::Mask;
    let secs = 3.0 * ct.tag_s + 3.0 * ct.mask_s + 2.0 * ct.scribble_s;
    assert!((plan_cost(&plan, &ct) - secs / 3600.0).abs() < 1e-12);
}

/// The 100% totals fix one unknown each; every other cost cell follows from
/// proportional scaling. The oracle below solves that by hand.
#[test]
fn published_cost_cells_are_reproduced() {
    let prior = CostTable::default();

    let ucf = fit_cost_table(&[(UCF.video_fraction(CostKind::Box, 100.0), 4686.0)], &prior, &[CostKind::Box]).unwrap();
    let box_s = (4686.0 * 3600.0 - 2284.0 * prior.tag_s) / (2284.0 * 187.0);
    assert!((ucf.table.box_s - box_s).abs() < 1e-9);
    let tag_h = 2284.0 * prior.tag_s / 3600.0;
    for (pct, want) in [(1.1, 52.0), (2.8, 132.0), (5.0, 235.0)] {
        let got = mix_cost(&UCF.frame_fraction(CostKind::Box, pct), &ucf.table);
        let oracle = tag_h + pct / 100.0 * 2284.0 * 187.0 * box_s / 3600.0;
        assert!((got - oracle).abs() < 1e-9);
        assert!((got - want).abs() <= 1.5, "{pct}%: {got} vs {want}");
    }
    let s20 = mix_cost(&UCF.video_fraction(CostKind::Box, 20.0), &ucf.table);
    assert!((s20 - 937.2).abs() < 1e-9);
    assert!((s20 - 938.0).abs() <= 1.5);

    let jh = fit_cost_table(&[(JHMDB.video_fraction(CostKind::Mask, 100.0), 487.0)], &prior, &[CostKind::Mask]).unwrap();
    for (pct, want) in [(6.0, 30.0), (15.0, 74.0)] {
        let got = mix_cost(&JHMDB.frame_fraction(CostKind::Mask, pct), &jh.table);
        assert!((got - want).abs() <= 1.5, "{pct}%: {got} vs {want}");
    }
    for (pct, want) in [(20.0, 97.0), (30.0, 146.0)] {
        let got = mix_cost(&JHMDB.video_fraction(CostKind::Mask, pct), &jh.table);
        assert!((got - want).abs() <= 1.5, "{pct}%: {got} vs {want}");
    }
}

#[test]
fn multi_anchor_fits_are_linear_in_percentage() {
    let prior = CostTable::default();
    let obs: Vec<(AnnotationMix, f64)> = [(1.1, 52.0), (2.8, 132.0), (5.0, 235.0), (100.0, 4686.0)]
        .iter()
        .map(|&(p, h)| (UCF.video_fraction(CostKind::Box, p), h))
        .collect();
    let fit = fit_cost_table(&obs, &prior, &[CostKind::Box]).unwrap();
    assert!(fit.residuals.iter().all(|r| r.abs() <= 1.5), "{:?}", fit.residuals);
    let p20 = mix_cost(&UCF.video_fraction(CostKind::Box, 20.0), &fit.table);
    assert!((p20 - 938.0).abs() <= 1.5, "{p20}");

    let obs: Vec<(AnnotationMix, f64)> = [(30.0, 146.0), (20.0, 97.0), (6.0, 30.0), (100.0, 487.0)]
        .iter()
        .map(|&(p, h)| (JHMDB.video_fraction(CostKind::Mask, p), h))
        .collect();
    let fit = fit_cost_table(&obs, &prior, &[CostKind::Mask]).unwrap();
    assert!(fit.residuals.iter().all(|r| r.abs() <= 1.0), "{:?}", fit.residuals);
    let p15 = mix_cost(&JHMDB.video_fraction(CostKind::Mask, 15.0), &fit.table);
    assert!((p15 - 74.0).abs() <= 1.5, "{p15}");
}

#[test]
fn two_unknowns_from_two_mixes() {
    let truth = CostTable { box_s: 30.0, scribble_s: 9.0, ..CostTable::default() };
    let a = AnnotationMix { tags: 10.0, box_frames: 40.0, scribble_frames: 5.0, ..Default::default() };
    let b = AnnotationMix { tags: 4.0, box_frames: 3.0, scribble_frames: 70.0, ..Default::default() };
    let obs = [(a, mix_cost(&a, &truth)), (b, mix_cost(&b, &truth))];
    let fit = fit_cost_table(&obs, &CostTable::default(), &[CostKind::Scribble, CostKind::Box]).unwrap();
    assert!((fit.table.box_s - 30.0).abs() < 1e-9);
    assert!((fit.table.scribble_s - 9.0).abs() < 1e-9);
}

#[test]
fn proportional_columns_are_unidentifiable() {
    let a = AnnotationMix { box_frames: 10.0, mask_frames: 20.0, ..Default::default() };
    let b = AnnotationMix { box_frames: 5.0, mask_frames: 10.0, ..Default::default() };
    let err = fit_cost_table(&[(a, 1.0), (b, 0.5)], &CostTable::default(), &[CostKind::Box, CostKind::Mask]);
    match err {
        Err(Error::Calibration(kinds)) => assert_eq!(kinds, vec!["mask".to_string()]),
        other => panic!("{other:?}"),
    }
}

fn entry_strategy() -> impl Strategy<Value = PlanEntry> {
    (0u8..3, prop::collection::btree_set(0u32..200, 0..6), 0.0f64..100.0).prop_map(|(b, frames, score)| {
        let bucket = [Bucket::Box, Bucket::Scribble, Bucket::Tag][b as usize];
        let frames = if bucket == Bucket::Tag { vec![] } else { frames.into_iter().collect() };
        PlanEntry { video_id: String::new(), score, bucket, frames, uniform_fallback: false }
    })
}

fn plan_of(entries: Vec<PlanEntry>, offset: usize) -> SelectionPlan {
    let mut plan = SelectionPlan::empty(1, "bucket");
    plan.entries = entries
        .into_iter()
        .enumerate()
        .map(|(i, mut e)| {
            e.video_id = format!("v{}", i + offset);
            e
        })
        .collect();
    plan
}

proptest! {
    #[test]
    fn cost_is_additive_and_monotone(
        a in prop::collection::vec(entry_strategy(), 0..8),
        b in prop::collection::vec(entry_strategy(), 0..8),
    ) {
        let ct = CostTable::default();
        let pa = plan_of(a.clone(), 0);
        let pb = plan_of(b.clone(), 100);
        let mut union = pa.clone();
        union.entries.extend(pb.entries.clone());
        let (ca, cb, cu) = (plan_cost(&pa, &ct), plan_cost(&pb, &ct), plan_cost(&union, &ct));
        prop_assert!((cu - ca - cb).abs() <= 1e-9 * cu.max(1.0));
        prop_assert!(cu >= ca && cu >= cb);
    }

    #[test]
    fn bucket_plans_are_ordered_and_gapped(
        scores in prop::collection::vec(0.0f64..10.0, 5..30),
        frame_len in 1usize..60,
        pcts in (0u32..40, 0u32..30, 0u32..30),
        gap in 1usize..10,
        n in 1usize..5,
    ) {
        let v = ids(scores.len());
        let score_map: BTreeMap<_, _> = v.iter().cloned().zip(scores.iter().copied()).collect();
        let frames: BTreeMap<_, _> = v
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), (0..frame_len).map(|f| ((i * 31 + f * 17) % 13) as f64).collect()))
            .collect();
        let bc = BudgetConfig {
            box_pct: pcts.0 as f64,
            scribble_pct: pcts.1 as f64,
            tag_pct: pcts.2 as f64,
            frames_per_video_box: n,
            frames_per_video_scribble: n,
            min_frame_gap: gap,
        };
        let plan = select(&DatasetSplit::fresh(v.clone()), &score_map, &frames, &bc, Policy::Bucket, Geometry::Box, &CostTable::default()).unwrap();
        plan.validate(Some(gap)).unwrap();
        let min_of = |b| plan.entries.iter().filter(|e| e.bucket == b).map(|e| e.score).fold(f64::INFINITY, f64::min);
        let max_of = |b| plan.entries.iter().filter(|e| e.bucket == b).map(|e| e.score).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(min_of(Bucket::Box) >= max_of(Bucket::Scribble));
        prop_assert!(min_of(Bucket::Scribble) >= max_of(Bucket::Tag));
        prop_assert!(min_of(Bucket::Box) >= max_of(Bucket::Tag));
        for e in &plan.entries {
            if e.bucket != Bucket::Tag {
                prop_assert_eq!(e.frames.len(), n.min(frame_len));
                prop_assert!(e.frames.iter().all(|&f| (f as usize) < frame_len));
            }
        }
        prop_assert!((plan.projected_cost_hours - plan_cost(&plan, &CostTable::default())).abs() < 1e-12);
    }

    #[test]
    fn greedy_choice_keeps_gap_and_best_frame(scores in prop::collection::vec(0u8..5, 1..14), gap in 1usize..5, n in 1usize..4) {
        let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
        let (frames, fallback) = pick_frames(&scores, n, gap);
        if !fallback {
            prop_assert!(frames.windows(2).all(|w| (w[1] - w[0]) as usize >= gap));
            // The first pick is always a global maximum.
            let best = scores.iter().cloned().fold(f64::MIN, f64::max);
            prop_assert!(frames.iter().any(|&f| scores[f as usize] == best));
        } else {
            prop_assert_eq!(frames.len(), n.min(scores.len()));
        }
    }
}
