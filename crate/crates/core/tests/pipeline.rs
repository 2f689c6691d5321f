use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use thermotouch::eval::{detect_corpus, score_clip, score_corpus};
use thermotouch::frames_io::read_sequence;
use thermotouch::synth::{
    generate, hover_scene, make_corpus, touch_scene, write_clip, ClipCategory, CorpusRecipe, FingerLayout,
    SynthSceneConfig,
};
use thermotouch::touch_events::{detect_events, PipelineConfig};

fn scene(seed: u64, f: impl Fn(&SynthSceneConfig, &mut ChaCha8Rng) -> SynthSceneConfig) -> SynthSceneConfig {
    f(&SynthSceneConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn single_touch_is_found_where_it_happened() {
    let clip = generate(&scene(3, |b, r| touch_scene(b, r, FingerLayout::Single))).unwrap();
    let det = detect_events(&clip.frames, &PipelineConfig::default()).unwrap();
    let touches: Vec<_> = det.events.iter().filter(|e| e.is_touch()).collect();
    assert_eq!(touches.len(), 1, "{:?}", det.events);
    let truth = clip.truth.touch_events().next().unwrap();
    let roi = det.rois[touches[0].roi_id];
    for p in &truth.contact_points {
        assert!(roi.contains_f(p[0], p[1]), "{p:?} outside {roi:?}");
    }
    let (on, off) = truth.contact_span.unwrap();
    let iv = touches[0].interval;
    assert!(iv.enter_frame <= off && iv.exit_frame >= on, "{iv:?} vs {on}..{off}");
    assert!(score_clip(&det.events, &det.rois, &clip.truth).correct);
}

#[test]
fn hover_is_never_a_touch() {
    for seed in 0..4 {
        let clip = generate(&scene(seed, hover_scene)).unwrap();
        let det = detect_events(&clip.frames, &PipelineConfig::default()).unwrap();
        assert!(det.events.iter().all(|e| !e.is_touch()), "seed {seed}: {:?}", det.events);
        assert!(!det.events.is_empty(), "seed {seed}: the hover itself should be seen");
    }
}

#[test]
fn splayed_fingers_get_two_regions() {
    let clip = generate(&scene(8, |b, r| touch_scene(b, r, FingerLayout::Wide))).unwrap();
    let det = detect_events(&clip.frames, &PipelineConfig::default()).unwrap();
    let mut touched: Vec<usize> = det.events.iter().filter(|e| e.is_touch()).map(|e| e.roi_id).collect();
    touched.dedup();
    assert!(touched.len() >= 2, "{:?}", det.events);
    assert!(score_clip(&det.events, &det.rois, &clip.truth).correct);
}

#[test]
fn empty_scene_yields_nothing() {
    let clip = generate(&SynthSceneConfig { duration_s: 3.0, ..SynthSceneConfig::default() }).unwrap();
    let det = detect_events(&clip.frames, &PipelineConfig::default()).unwrap();
    assert!(det.rois.is_empty() && det.events.is_empty());
}

#[test]
fn written_clip_reads_back_identically() {
    let dir = tempfile::tempdir().unwrap();
    let clip = generate(&scene(4, |b, r| touch_scene(b, r, FingerLayout::Single))).unwrap();
    write_clip(dir.path(), &clip).unwrap();
    let seq = read_sequence(dir.path()).unwrap();
    assert_eq!(seq.thermal, clip.frames);
    assert_eq!(seq.meta, clip.meta);
}

#[test]
fn corpus_on_disk_scores_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, results) = (dir.path().join("corpus"), dir.path().join("results"));
    let recipe = CorpusRecipe {
        touch: 3,
        multi_finger: 1,
        hover: 2,
        negative: 2,
        seed: 12,
        ..CorpusRecipe::default()
    };
    make_corpus(&recipe, &corpus).unwrap();
    detect_corpus(&corpus, &results, &PipelineConfig::default()).unwrap();
    let report = score_corpus(&corpus, &results).unwrap();
    assert_eq!(report.clips.len(), 7);
    assert_eq!(report.counts.iter().flatten().sum::<usize>(), 7);
    assert_eq!(report.counts[0].iter().sum::<usize>(), 3);
    assert!(report.accuracy >= 6.0 / 7.0, "{report}");
    assert_eq!(report.false_positive_rate(ClipCategory::Hover), 0.0);
}

#[test]
fn missing_results_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let recipe = CorpusRecipe {
        touch: 1,
        seed: 1,
        ..CorpusRecipe::default()
    };
    make_corpus(&recipe, dir.path().join("c")).unwrap();
    assert!(score_corpus(dir.path().join("c"), dir.path().join("nothing")).is_err());
}
