//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Run with `cargo test --test acceptance`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::ThreadPoolBuilder;

use thermotouch::eval::{score_clip, ClipVerdict, ConfusionReport};
use thermotouch::hand_detect::{analyze_sequence, FingertipConfig, PreprocessConfig};
use thermotouch::imgproc::{convex_hull, gaussian_blur};
use thermotouch::roi::{select_rois, FingertipHistory, Roi, TipSample};
use thermotouch::stabilize::{stabilize_sequence, DEFAULT_REF_TOL};
use thermotouch::synth::{
    corpus_scenes, generate, stroke_scene, touch_scene, ClipCategory, CorpusRecipe, FingerLayout, JitterSpec,
    MarkerSpec, SynthSceneConfig,
};
use thermotouch::touch_events::{detect_events, write_events_jsonl, write_rois_json, PipelineConfig};
use thermotouch::trace::{decaying_traces, write_traces_json, TraceConfig};
use thermotouch::{GrayImage, Point};

struct Outcome {
    pass: bool,
    name: &'static str,
    detail: String,
}

fn report(outcomes: &[Outcome]) -> bool {
    for o in outcomes {
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    outcomes.iter().all(|o| o.pass)
}

// ---- corpus accuracy -------------------------------------------------------

fn run_corpus(recipe: &CorpusRecipe) -> (ConfusionReport, usize, f64) {
    let cfg = PipelineConfig::default();
    let mut verdicts = Vec::new();
    let mut hover_touches = 0;
    let mut detect_secs = 0.0;
    for (entry, scene) in corpus_scenes(recipe).unwrap() {
        let clip = generate(&scene).unwrap();
        let start = Instant::now();
        let det = detect_events(&clip.frames, &cfg).unwrap();
        let verdict = score_clip(&det.events, &det.rois, &clip.truth);
        detect_secs += start.elapsed().as_secs_f64();
        if entry.category == ClipCategory::Hover {
            hover_touches += det.events.iter().filter(|e| e.is_touch()).count();
        }
        verdicts.push(ClipVerdict {
            name: entry.name,
            category: entry.category,
            verdict,
        });
    }
    (ConfusionReport::from_verdicts(verdicts), hover_touches, detect_secs)
}

fn corpus_checks() -> Vec<Outcome> {
    let start = Instant::now();
    let (small, _, small_secs) = run_corpus(&CorpusRecipe::split25(7));
    let total = start.elapsed().as_secs_f64();
    let (large, hover_touches, _) = run_corpus(&CorpusRecipe::corpus100(7));
    let fp_neg = large.false_positive_rate(ClipCategory::Negative);
    vec![
        Outcome {
            pass: small.accuracy >= 0.92,
            name: "25-clip accuracy >= 0.92",
            detail: format!("{:.3} ({}/{})", small.accuracy, small.correct(), small.clips.len()),
        },
        Outcome {
            pass: total < 120.0,
            name: "25-clip runtime < 120 s",
            detail: format!("{total:.1} s including synthesis, {small_secs:.1} s detection and scoring"),
        },
        Outcome {
            pass: large.accuracy >= 0.90,
            name: "100-clip accuracy >= 0.90",
            detail: format!("{:.3} ({}/{})", large.accuracy, large.correct(), large.clips.len()),
        },
        Outcome {
            pass: fp_neg <= 0.10,
            name: "false positive rate on negatives <= 10%",
            detail: format!("{:.1}%", 100.0 * fp_neg),
        },
        Outcome {
            pass: hover_touches == 0,
            name: "no touch events in 20 hover clips",
            detail: format!("{hover_touches} touch events"),
        },
    ]
}

// ---- ROI selection vs brute force -------------------------------------------

fn greedy_oracle(points: &[Point], size: i32, w: i32, h: i32) -> Vec<(i32, i32)> {
    let window = |p: Point| ((p.x - size / 2).clamp(0, w - size), (p.y - size / 2).clamp(0, h - size));
    let inside = |(x, y): (i32, i32), p: Point| p.x >= x && p.x < x + size && p.y >= y && p.y < y + size;
    let disjoint = |a: (i32, i32), b: (i32, i32)| {
        a.0 + size <= b.0 || b.0 + size <= a.0 || a.1 + size <= b.1 || b.1 + size <= a.1
    };
    let mut remaining = vec![true; points.len()];
    let mut chosen: Vec<(i32, i32)> = Vec::new();
    loop {
        let mut best: Option<((i32, i32), usize)> = None;
        for (i, &p) in points.iter().enumerate() {
            if !remaining[i] {
                continue;
            }
            let win = window(p);
            if !chosen.iter().all(|&c| disjoint(c, win)) {
                continue;
            }
            let n = points
                .iter()
                .zip(&remaining)
                .filter(|(q, r)| **r && inside(win, **q))
                .count();
            if best.is_none_or(|(_, b)| n > b) {
                best = Some((win, n));
            }
        }
        let Some((win, _)) = best else { break };
        for (i, &p) in points.iter().enumerate() {
            if inside(win, p) {
                remaining[i] = false;
            }
        }
        chosen.push(win);
    }
    chosen
}

fn roi_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = 0;
    for _ in 0..200 {
        let (w, h) = (rng.random_range(20..=60), rng.random_range(20..=60));
        let size = rng.random_range(4..=16);
        let n = rng.random_range(0..=15);
        let points: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.random_range(0..w), rng.random_range(0..h)))
            .collect();
        let history = FingertipHistory {
            points: points.iter().map(|p| TipSample { x: p.x, y: p.y, frame: 0 }).collect(),
        };
        let got: Vec<(i32, i32)> = select_rois(&history, size as u32, (w as u32, h as u32))
            .unwrap()
            .iter()
            .map(|r: &Roi| (r.x as i32, r.y as i32))
            .collect();
        if got != greedy_oracle(&points, size, w, h) {
            mismatches += 1;
        }
    }
    Outcome {
        pass: mismatches == 0,
        name: "select_rois matches brute-force greedy on 200 instances",
        detail: format!("{mismatches} mismatches"),
    }
}

// ---- convex hull vs half-plane test -----------------------------------------

fn cross(o: Point, a: Point, b: Point) -> i64 {
    i64::from(a.x - o.x) * i64::from(b.y - o.y) - i64::from(a.y - o.y) * i64::from(b.x - o.x)
}

fn hull_oracle(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() < 2 {
        return pts;
    }
    let between = |a: Point, b: Point, c: Point| {
        c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
    };
    let mut vertices = Vec::new();
    for &a in &pts {
        for &b in &pts {
            if a == b {
                continue;
            }
            let edge = pts.iter().all(|&c| {
                let s = cross(a, b, c);
                s > 0 || (s == 0 && between(a, b, c))
            });
            if edge {
                vertices.push(a);
                vertices.push(b);
            }
        }
    }
    vertices.sort();
    vertices.dedup();
    vertices
}

fn hull_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut bad = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=50);
        let span = rng.random_range(2..=40);
        let pts: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.random_range(-span..=span), rng.random_range(-span..=span)))
            .collect();
        let hull = convex_hull(&pts);
        let mut sorted = hull.clone();
        sorted.sort();
        let ccw = hull.len() < 3
            || (0..hull.len()).all(|i| {
                cross(hull[i], hull[(i + 1) % hull.len()], hull[(i + 2) % hull.len()]) > 0
            });
        if sorted != hull_oracle(&pts) || !ccw {
            bad += 1;
        }
    }
    Outcome {
        pass: bad == 0,
        name: "convex_hull equals half-plane oracle on 500 sets",
        detail: format!("{bad} mismatches"),
    }
}

// ---- blur vs direct convolution ---------------------------------------------

fn direct_blur(img: &GrayImage, sigma: f64, r: i64) -> Vec<f64> {
    let (w, h) = (i64::from(img.width), i64::from(img.height));
    let mut weights = Vec::new();
    for j in -r..=r {
        for i in -r..=r {
            weights.push(((i, j), (-((i * i + j * j) as f64) / (2.0 * sigma * sigma)).exp()));
        }
    }
    let total: f64 = weights.iter().map(|(_, wt)| wt).sum();
    let mut out = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let acc: f64 = weights
                .iter()
                .map(|&((i, j), wt)| {
                    wt * img.get((x + i).clamp(0, w - 1) as u32, (y + j).clamp(0, h - 1) as u32)
                })
                .sum();
            out.push(acc / total);
        }
    }
    out
}

fn blur_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (w, h) = (rng.random_range(1..=40), rng.random_range(1..=40));
        let sigma = rng.random_range(0.3..=4.0);
        let radius = rng.random_range(1..=6u32);
        let img = GrayImage::new(w, h, (0..w * h).map(|_| rng.random_range(0.0..=1.0)).collect());
        let fast = gaussian_blur(&img, sigma, radius).unwrap();
        let slow = direct_blur(&img, sigma, i64::from(radius));
        for (a, b) in fast.values.iter().zip(&slow) {
            worst = worst.max((a - b).abs());
        }
    }
    Outcome {
        pass: worst <= 1e-6,
        name: "gaussian_blur equals direct 2-D convolution within 1e-6",
        detail: format!("max abs difference {worst:.2e}"),
    }
}

// ---- stabilization -----------------------------------------------------------

fn stabilize_check() -> Outcome {
    let marker = MarkerSpec::default();
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut lost = 0;
    for seed in 0..50 {
        let clip = generate(&SynthSceneConfig {
            jitter: Some(JitterSpec::Random {
                max_translation_px: 4.0,
                max_rotation_deg: 5.0,
                max_scale_dev: 0.05,
            }),
            marker: Some(marker),
            duration_s: 2.0,
            seed,
            ..SynthSceneConfig::default()
        })
        .unwrap();
        let out = stabilize_sequence(&clip.frames, clip.rgb.as_ref().unwrap(), marker.color, DEFAULT_REF_TOL).unwrap();
        for (est, truth) in out.transforms.iter().zip(&clip.truth.jitter) {
            lost += usize::from(!est.tracked);
            worst.0 = worst.0.max((est.tx - truth.tx).abs()).max((est.ty - truth.ty).abs());
            worst.1 = worst.1.max((est.theta - truth.theta).abs().to_degrees());
            worst.2 = worst.2.max((est.scale / truth.scale - 1.0).abs());
        }
    }
    Outcome {
        pass: lost == 0 && worst.0 <= 1.0 && worst.1 <= 1.0 && worst.2 <= 0.02,
        name: "jitter recovered within 1 px, 1 deg, 2% on 50 sequences",
        detail: format!(
            "worst {:.2} px, {:.2} deg, {:.2}%, {lost} frames lost",
            worst.0,
            worst.1,
            100.0 * worst.2
        ),
    }
}

// ---- traces -------------------------------------------------------------------

fn segment_distance(p: (f64, f64), a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a[0]) * dx + (p.1 - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a[0] - t * dx).hypot(p.1 - a[1] - t * dy)
}

fn trace_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut worst_dist, mut worst_len, mut sum_dist, mut missing) = (0.0f64, 0.0f64, 0.0, 0);
    for _ in 0..30 {
        let length = rng.random_range(30.0..=70.0);
        let clip = generate(&stroke_scene(&SynthSceneConfig::default(), &mut rng, length)).unwrap();
        let stroke = &clip.truth.events[0].stroke;
        let truth_len: f64 = stroke.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum();
        let analyses =
            analyze_sequence(&clip.frames, &PreprocessConfig::default(), &FingertipConfig::default()).unwrap();
        let traces = decaying_traces(&analyses, &TraceConfig::default()).unwrap();
        let Some(t) = traces.iter().max_by(|a, b| a.length.total_cmp(&b.length)) else {
            missing += 1;
            continue;
        };
        let dist = t
            .points
            .iter()
            .map(|p| {
                stroke
                    .windows(2)
                    .map(|w| segment_distance((p.x, p.y), w[0], w[1]))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / t.points.len() as f64;
        sum_dist += dist;
        worst_dist = worst_dist.max(dist);
        worst_len = worst_len.max((t.length - truth_len).abs() / truth_len);
    }
    Outcome {
        pass: missing == 0 && worst_dist <= 3.0 && worst_len <= 0.20,
        name: "traces of 30 strokes within 3 px and 20% length",
        detail: format!(
            "mean distance {:.2} px (worst {worst_dist:.2}), worst length error {:.1}%, {missing} missing",
            sum_dist / 30.0,
            100.0 * worst_len
        ),
    }
}

// ---- throughput and determinism ---------------------------------------------------

fn long_clip() -> SynthSceneConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    SynthSceneConfig {
        duration_s: 30.0,
        ..touch_scene(&SynthSceneConfig::default(), &mut rng, FingerLayout::Single)
    }
}

fn throughput_check() -> Outcome {
    let clip = generate(&long_clip()).unwrap();
    let n = clip.frames.len();
    let time_with = |threads: usize| {
        let pool = ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let start = Instant::now();
            analyze_sequence(&clip.frames, &PreprocessConfig::default(), &FingertipConfig::default()).unwrap();
            start.elapsed().as_secs_f64()
        })
    };
    let single = time_with(1);
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).max(2);
    let multi = time_with(threads);
    Outcome {
        pass: n == 270 && single <= 30.0,
        name: "first pass >= 9 fps single-threaded on 270 frames at 160x120",
        detail: format!(
            "{single:.2} s ({:.0} fps); {threads} threads {multi:.2} s, speedup {:.2}x",
            n as f64 / single,
            single / multi
        ),
    }
}

fn outputs(threads: usize, clips: &[SynthSceneConfig]) -> Vec<Vec<u8>> {
    let pool = ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let dir = tempfile::tempdir().unwrap();
    pool.install(|| {
        let mut bytes = Vec::new();
        for scene in clips {
            let clip = generate(scene).unwrap();
            let det = detect_events(&clip.frames, &PipelineConfig::default()).unwrap();
            let analyses =
                analyze_sequence(&clip.frames, &PreprocessConfig::default(), &FingertipConfig::default()).unwrap();
            let traces = decaying_traces(&analyses, &TraceConfig::default()).unwrap();
            let (e, r, t) = (dir.path().join("e"), dir.path().join("r"), dir.path().join("t"));
            write_events_jsonl(&e, &det.events).unwrap();
            write_rois_json(&r, &det.rois).unwrap();
            write_traces_json(&t, &traces).unwrap();
            for p in [e, r, t] {
                bytes.push(std::fs::read(p).unwrap());
            }
            bytes.push(clip.frames.iter().flat_map(|f| f.counts.iter().flat_map(|c| c.to_le_bytes())).collect());
        }
        bytes
    })
}

fn determinism_check() -> Outcome {
    let mut clips: Vec<SynthSceneConfig> = corpus_scenes(&CorpusRecipe::split25(9))
        .unwrap()
        .into_iter()
        .step_by(4)
        .map(|(_, s)| s)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    clips.push(stroke_scene(&SynthSceneConfig::default(), &mut rng, 45.0));
    let a = outputs(1, &clips);
    let b = outputs(1, &clips);
    let c = outputs(4, &clips);
    Outcome {
        pass: a == b && a == c,
        name: "byte-identical outputs across runs and thread counts",
        detail: format!(
            "{} clips; repeat {}, 1 vs 4 threads {}",
            clips.len(),
            if a == b { "identical" } else { "differs" },
            if a == c { "identical" } else { "differs" }
        ),
    }
}

fn main() {
    let mut outcomes = corpus_checks();
    outcomes.push(roi_check());
    outcomes.push(hull_check());
    outcomes.push(blur_check());
    outcomes.push(stabilize_check());
    outcomes.push(trace_check());
    outcomes.push(throughput_check());
    outcomes.push(determinism_check());
    if !report(&outcomes) {
        std::process::exit(1);
    }
}
