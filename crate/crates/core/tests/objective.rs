use omvid::datamodel::{AnnotationKind, BBox, Bitmap, Provenance, PseudoFrame, PseudoLabelSet, Target};
use omvid::objective::{
    classification_loss, detection_losses, frame_loss, frame_loss_gradient, total_loss, weighted_detection_loss, Gates,
    KindLosses, PredictionMap, ProbMap,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_case(rng: &mut ChaCha8Rng, h: usize, w: usize) -> (ProbMap<f64>, Bitmap) {
    let p: Vec<f64> = (0..h * w).map(|_| rng.random_range(0.02..0.98)).collect();
    let t: Vec<bool> = (0..h * w).map(|_| rng.random_bool(0.5)).collect();
    (ProbMap::new(h, w, p).unwrap(), Bitmap::from_bits(h, w, t).unwrap())
}

#[test]
fn bce_matches_hand_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (p, t) = random_case(&mut rng, 3, 3);
    let mut sum = 0.0;
    for i in 0..9 {
        let pi = p.values()[i];
        sum += if t.bits()[i] { -(pi.ln()) } else { -((1.0 - pi).ln()) };
    }
    assert!((frame_loss(&p, &t).unwrap() - sum / 9.0).abs() < 1e-9);
}

#[test]
fn bce_half_is_ln2_for_any_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let (_, t) = random_case(&mut rng, 4, 5);
        let p = ProbMap::constant(4, 5, 0.5).unwrap();
        assert!((frame_loss(&p, &t).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    }
}

#[test]
fn shape_mismatch_is_rejected() {
    let p = ProbMap::constant(2, 2, 0.5f64).unwrap();
    assert!(frame_loss(&p, &Bitmap::empty(2, 3)).is_err());
    assert!(frame_loss_gradient(&p, &Bitmap::empty(3, 2)).is_err());
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    for _ in 0..100 {
        let (p, t) = random_case(&mut rng, 4, 4);
        let g = frame_loss_gradient(&p, &t).unwrap();
        for i in 0..16 {
            let mut up = p.values().to_vec();
            let mut dn = p.values().to_vec();
            up[i] += h;
            dn[i] -= h;
            let fu = frame_loss(&ProbMap::new(4, 4, up).unwrap(), &t).unwrap();
            let fd = frame_loss(&ProbMap::new(4, 4, dn).unwrap(), &t).unwrap();
            let numeric = (fu - fd) / (2.0 * h);
            let rel = (g[i] - numeric).abs() / g[i].abs().max(numeric.abs());
            assert!(rel < 1e-4, "pixel {i}: analytic {} numeric {numeric}", g[i]);
        }
    }
}

#[test]
fn gradient_vanishes_at_target() {
    let t = Bitmap::from_bits(1, 2, vec![true, false]).unwrap();
    let p = ProbMap::new(1, 2, vec![1.0, 0.0]).unwrap();
    assert!(frame_loss_gradient(&p, &t).unwrap().iter().all(|g: &f64| g.abs() < 1e-5));
}

#[test]
fn bce_is_minimised_at_target_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let (_, t) = random_case(&mut rng, 5, 5);
        let mean = t.count() as f64 / 25.0;
        let best = (1..1000)
            .map(|k| k as f64 / 1000.0)
            .min_by(|a, b| {
                let la = frame_loss(&ProbMap::constant(5, 5, *a).unwrap(), &t).unwrap();
                let lb = frame_loss(&ProbMap::constant(5, 5, *b).unwrap(), &t).unwrap();
                la.total_cmp(&lb)
            })
            .unwrap();
        assert!((best - mean).abs() <= 1e-3 + 1e-12, "best {best} mean {mean}");
    }
}

proptest! {
    #[test]
    fn weighted_loss_is_linear_in_weights(
        pairs in prop::collection::vec((0.0f64..10.0, 0.0f64..1.0), 0..12),
        alpha in 0.0f64..1.0,
    ) {
        let (l, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let base = weighted_detection_loss(&l, &w).unwrap();
        let scaled: Vec<f64> = w.iter().map(|x| alpha * x).collect();
        let s = weighted_detection_loss(&l, &scaled).unwrap();
        prop_assert!((s - alpha * base).abs() <= 1e-9 * base.max(1.0));
        prop_assert!(base >= 0.0);
    }

    #[test]
    fn ungated_terms_do_not_matter(a in 0.0f64..50.0, b in 0.0f64..50.0, cls in 0.0f64..5.0) {
        let gates = Gates { box_: true, ..Default::default() };
        let x = KindLosses { box_: Some(1.0), scribble: Some(a), point: Some(a), pixel: None };
        let y = KindLosses { box_: Some(1.0), scribble: Some(b), point: None, pixel: Some(b) };
        let lx = total_loss(cls, &x, gates, 10.0, 100).unwrap();
        let ly = total_loss(cls, &y, gates, 10.0, 100).unwrap();
        prop_assert_eq!(lx.total, ly.total);
        prop_assert!(lx.total >= 0.0);
    }
}

#[test]
fn classification_of_uniform_distribution() {
    assert!((classification_loss(&[0.25f64; 4], 0).unwrap() - 4f64.ln()).abs() < 1e-12);
    let probs = [0.25, 0.5, 0.125, 0.125f64];
    assert!((classification_loss(&probs, 0).unwrap() - 4f64.ln()).abs() < 1e-12);
}

#[test]
fn prediction_map_requires_normalised_classes() {
    assert!(PredictionMap::<f64>::new(vec![], vec![0.5, 0.4]).is_err());
    assert!(PredictionMap::<f64>::new(vec![], vec![0.5, 0.5]).is_ok());
}

#[test]
fn box_and_scribble_frames_enable_both_terms() {
    let b = BBox::new(0, 0, 1, 1).unwrap();
    let mut m = Bitmap::empty(4, 4);
    m.set(3, 3, true);
    let labels = PseudoLabelSet {
        video_id: "v".into(),
        height: 4,
        width: 4,
        frames: vec![
            PseudoFrame { frame: 0, target: Target::Box(b), weight: 1.0, provenance: Provenance::Real, source: AnnotationKind::Box },
            PseudoFrame {
                frame: 2,
                target: Target::Mask(m.clone()),
                weight: 0.9,
                provenance: Provenance::Superpixel,
                source: AnnotationKind::Scribble,
            },
        ],
    };
    let frames: Vec<ProbMap<f64>> = (0..3).map(|_| ProbMap::constant(4, 4, 0.3).unwrap()).collect();
    let pred = PredictionMap::new(frames.clone(), vec![0.5, 0.5]).unwrap();
    let det = detection_losses(&pred, &labels).unwrap();
    let gates = Gates::from_labels(&labels);
    assert!(gates.box_ && gates.scribble && !gates.pixel && !gates.point);

    let box_oracle = frame_loss(&frames[0], &Bitmap::from_box(4, 4, &b)).unwrap();
    let scribble_oracle = 0.9 * frame_loss(&frames[2], &m).unwrap();
    assert!((det.box_.unwrap() - box_oracle).abs() < 1e-12);
    assert!((det.scribble.unwrap() - scribble_oracle).abs() < 1e-12);

    let cls = classification_loss(&pred.class_probs, 1).unwrap();
    let total = total_loss(cls, &det, gates, 32.0, 48).unwrap();
    let expect = cls + box_oracle + scribble_oracle + 32.0 / 48.0;
    assert!((total.total - expect).abs() < 1e-12);
}

#[test]
fn f32_losses_track_f64() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (p, t) = random_case(&mut rng, 6, 6);
    let p32 = ProbMap::new(6, 6, p.values().iter().map(|&v| v as f32).collect()).unwrap();
    let a = frame_loss(&p, &t).unwrap();
    let b = frame_loss(&p32, &t).unwrap() as f64;
    assert!((a - b).abs() < 1e-5);
}
