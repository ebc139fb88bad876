use omvid::datamodel::annotation::parse_annotations_from;
use omvid::datamodel::{
    read_labels, read_pseudolabels, read_uncertainty, write_annotations, write_labels, write_pseudolabels,
    write_uncertainty, AnnotationKind, AnnotationRecord, BBox, Bitmap, Cluster, Dims, Entry, Payload, Pixel,
    Provenance, PseudoFrame, PseudoLabelSet, SuperpixelLabels, Target, UncertaintyVolume,
};
use omvid::selection::{Bucket, Geometry, PlanEntry, SelectionPlan};
use proptest::prelude::*;

const H: u32 = 6;
const W: u32 = 9;
const T: u32 = 5;

fn arb_box() -> impl Strategy<Value = BBox> {
    (0..W as i64, 0..H as i64, 0..W as i64, 0..H as i64)
        .prop_map(|(a, b, c, d)| BBox::new(a.min(c), b.min(d), a.max(c), b.max(d)).unwrap())
}

fn arb_mask() -> impl Strategy<Value = Bitmap> {
    prop::collection::vec(any::<bool>(), (H * W) as usize)
        .prop_filter("non-empty", |b| b.iter().any(|v| *v))
        .prop_map(|b| Bitmap::from_bits(H as usize, W as usize, b).unwrap())
}

fn arb_pixel() -> impl Strategy<Value = Pixel> {
    (0..W, 0..H).prop_map(|(x, y)| Pixel::new(x, y))
}

fn arb_payload() -> impl Strategy<Value = Payload> {
    prop_oneof![
        arb_pixel().prop_map(Payload::Point),
        prop::collection::vec(arb_pixel(), 1..8).prop_map(Payload::Scribble),
        arb_box().prop_map(Payload::Box),
        arb_mask().prop_map(Payload::Mask),
    ]
}

fn arb_record(id: usize) -> impl Strategy<Value = AnnotationRecord> {
    (0u32..24, prop::collection::vec((0..T, arb_payload()), 0..6)).prop_map(move |(class, raw)| {
        let mut entries: Vec<Entry> = Vec::new();
        for (frame, payload) in raw {
            if !entries.iter().any(|e| e.frame == frame && e.payload.kind() == payload.kind()) {
                entries.push(Entry { frame, payload });
            }
        }
        AnnotationRecord { video_id: format!("vid_{id}"), class, entries }
    })
}

fn arb_score() -> impl Strategy<Value = f64> {
    prop_oneof![0.0f64..1e6, (0u64..1 << 52).prop_map(|m| m as f64 * f64::EPSILON), Just(0.0)]
}

fn arb_plan() -> impl Strategy<Value = SelectionPlan> {
    let entry = (
        "[a-z][a-z0-9_]{0,7}",
        arb_score(),
        prop_oneof![Just(Bucket::Box), Just(Bucket::Scribble), Just(Bucket::Tag)],
        prop::collection::btree_set(0u32..200, 0..4),
        any::<bool>(),
    )
        .prop_map(|(video_id, score, bucket, frames, uniform_fallback)| PlanEntry {
            video_id,
            score,
            bucket,
            frames: if bucket == Bucket::Tag { Vec::new() } else { frames.into_iter().collect() },
            uniform_fallback,
        });
    (
        1u32..50,
        prop_oneof![Just("bucket"), Just("random")],
        prop_oneof![Just(Geometry::Box), Just(Geometry::Mask)],
        prop::collection::vec(entry, 0..6).prop_map(|mut v| {
            let mut seen = std::collections::HashSet::new();
            v.retain(|e: &PlanEntry| seen.insert(e.video_id.clone()));
            v
        }),
        arb_score(),
    )
        .prop_map(|(round, policy, geometry, entries, projected_cost_hours)| SelectionPlan {
            round,
            policy: policy.to_string(),
            geometry,
            entries,
            projected_cost_hours,
        })
}

fn arb_pseudo() -> impl Strategy<Value = PseudoLabelSet> {
    let frame = (
        prop_oneof![arb_mask().prop_map(Target::Mask), arb_box().prop_map(Target::Box)],
        0.1f64..1.0,
        prop_oneof![
            Just((Provenance::Superpixel, AnnotationKind::Scribble)),
            Just((Provenance::BoxInterp, AnnotationKind::Box)),
            Just((Provenance::MaskInterp, AnnotationKind::Mask)),
            Just((Provenance::ScribbleBox, AnnotationKind::Point)),
        ],
    );
    prop::collection::vec(frame, 1..(T as usize)).prop_map(|frames| PseudoLabelSet {
        video_id: "clip".into(),
        height: H as usize,
        width: W as usize,
        frames: frames
            .into_iter()
            .enumerate()
            .map(|(i, (target, weight, (provenance, source)))| PseudoFrame {
                frame: i as u32,
                target,
                weight,
                provenance,
                source,
            })
            .collect(),
    })
}

proptest! {
    #[test]
    fn annotation_json_round_trips(a in arb_record(0), b in arb_record(1)) {
        let records = vec![a, b];
        let mut buf = Vec::new();
        write_annotations(&records, &mut buf).unwrap();
        let dims = Dims::new(T as usize, H as usize, W as usize).unwrap();
        let back = parse_annotations_from(buf.as_slice(), |_| Some(dims)).unwrap();
        prop_assert_eq!(back, records);
    }

    #[test]
    fn plan_json_round_trips(plan in arb_plan()) {
        let text = plan.to_json();
        let back = SelectionPlan::from_json(&text).unwrap();
        prop_assert_eq!(&back, &plan);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn pseudolabel_lines_round_trip(set in arb_pseudo()) {
        let mut buf = Vec::new();
        write_pseudolabels(std::slice::from_ref(&set), &mut buf).unwrap();
        let back = read_pseudolabels(buf.as_slice()).unwrap();
        prop_assert_eq!(back, vec![set]);
    }

    #[test]
    fn spv_files_round_trip(
        (t, h, w) in (1usize..4, 1usize..7, 1usize..7),
        k in 1u32..5,
        raw in prop::collection::vec(any::<u32>(), 200),
        feats in prop::collection::vec(-100.0f32..100.0, 12 * 5),
    ) {
        let dims = Dims::new(t, h, w).unwrap();
        let labels: Vec<u32> = (0..dims.len()).map(|i| raw[i % raw.len()] % k).collect();
        let clusters = (0..k as usize)
            .map(|c| {
                let f = &feats[c * 12..(c + 1) * 12];
                Cluster { position: [f[0], f[1], f[2]], feature: std::array::from_fn(|i| f[3 + i]) }
            })
            .collect();
        let sp = SuperpixelLabels { video_id: "seg".into(), dims, labels, clusters };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seg.spv");
        write_labels(&sp, &path).unwrap();
        prop_assert_eq!(read_labels::<f32>(&path).unwrap(), sp);
    }

    #[test]
    fn unc_files_round_trip(
        (t, h, w) in (1usize..4, 1usize..7, 1usize..7),
        raw in prop::collection::vec(0.0f32..10.0, 150),
    ) {
        let dims = Dims::new(t, h, w).unwrap();
        let u = UncertaintyVolume::new("heat", dims, raw[..dims.len()].to_vec()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("heat.unc");
        write_uncertainty(&u, &path).unwrap();
        prop_assert_eq!(read_uncertainty::<f32>(&path).unwrap(), u);
    }
}
