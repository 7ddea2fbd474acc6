use std::f64::consts::PI;

use proptest::prelude::*;
use rand::Rng;
use soundweave::corpus::AudioBuffer;
use soundweave::musicseg::{
    argmax, chroma, key_profiles, keystrength, label_segment, novelty, novelty_raw, pick_boundaries, segment_track,
    KeystrengthSeries, Mode, MusicSegConfig, PeakPicking, SquareMatrix,
};
use soundweave::synth::{self, random_track};

fn sine(freq: f64, seconds: f64, sr: u32) -> AudioBuffer {
    let n = (seconds * f64::from(sr)) as usize;
    AudioBuffer::new(
        (0..n)
            .map(|i| (0.5 * (2.0 * PI * freq * i as f64 / f64::from(sr)).sin()) as f32)
            .collect(),
        sr,
    )
}

/// Pitch-class energy of one frame by a direct (slow) DFT over the
/// 55-1760 Hz range.
fn dft_pitch_classes(samples: &[f32], sr: u32) -> [f64; 12] {
    let n = samples.len();
    let mut pcs = [0.0; 12];
    for k in 1..n / 2 {
        let hz = k as f64 * f64::from(sr) / n as f64;
        if !(55.0..=1760.0).contains(&hz) {
            continue;
        }
        let (mut re, mut im) = (0.0, 0.0);
        for (t, &x) in samples.iter().enumerate() {
            let w = 0.5 - 0.5 * (2.0 * PI * t as f64 / n as f64).cos();
            let phase = -2.0 * PI * (k * t) as f64 / n as f64;
            re += f64::from(x) * w * phase.cos();
            im += f64::from(x) * w * phase.sin();
        }
        let midi = (69.0 + 12.0 * (hz / 440.0).log2()).round() as i64;
        pcs[midi.rem_euclid(12) as usize] += (re * re + im * im).sqrt();
    }
    pcs
}

#[test]
fn a440_dominates_its_chroma() {
    let audio = sine(440.0, 2.0, 11025);
    let c = chroma(&audio).unwrap();
    for frame in &c.frames {
        let a = frame[9];
        for (pc, &v) in frame.iter().enumerate() {
            if pc != 9 {
                assert!(a >= 5.0 * v, "A={a} pc{pc}={v}");
            }
        }
    }
    let oracle = dft_pitch_classes(&audio.samples[..c.n_fft], 11025);
    assert_eq!(argmax(&oracle), 9);
}

#[test]
fn white_noise_chroma_is_flat_on_average() {
    let mut ratios = Vec::new();
    for seed in 0..10 {
        let mut r = synth::rng(seed);
        let samples: Vec<f32> = (0..11025 * 3).map(|_| r.random_range(-0.5f32..0.5)).collect();
        let c = chroma(&AudioBuffer::new(samples, 11025)).unwrap();
        for f in &c.frames {
            let max = f.iter().cloned().fold(f64::MIN, f64::max);
            let min = f.iter().cloned().fold(f64::MAX, f64::min);
            ratios.push(max / min);
        }
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!(mean < 2.0, "mean max/min ratio {mean}");
}

/// Direct evaluation of the checkerboard sum with mirrored borders.
fn novelty_oracle(s: &SquareMatrix, kernel: usize, taper_ratio: f64) -> Vec<f64> {
    let n = s.side() as isize;
    let half = (kernel / 2) as isize;
    let sigma = taper_ratio * half as f64;
    let mirror = |i: isize| -> usize {
        let mut i = i;
        if i < 0 {
            i = -i - 1;
        }
        if i >= n {
            i = 2 * n - i - 1;
        }
        i as usize
    };
    let g = |u: isize| {
        // distance from the kernel centre, which sits between -1 and 0
        let d = if u >= 0 { u as f64 + 0.5 } else { -(u as f64) - 0.5 };
        (-(d * d) / (2.0 * sigma * sigma)).exp()
    };
    let sign = |u: isize| if u >= 0 { 1.0 } else { -1.0 };
    (0..n)
        .map(|t| {
            let mut acc = 0.0;
            for u in -half..half {
                for v in -half..half {
                    acc += sign(u) * sign(v) * g(u) * g(v) * s.get(mirror(t + u), mirror(t + v));
                }
            }
            acc
        })
        .collect()
}

#[test]
fn two_block_novelty_peaks_at_the_edge() {
    let s = SquareMatrix::from_fn(200, |a, b| if (a < 100) == (b < 100) { 1.0 } else { 0.0 });
    let (raw, _) = novelty_raw(&s, 64, 0.4).unwrap();
    let oracle = novelty_oracle(&s, 64, 0.4);
    let peak = argmax(&oracle);
    assert!(peak.abs_diff(100) <= 1);
    let max = oracle[peak];
    assert_eq!(oracle.iter().filter(|&&v| v == max).count(), 1);
    // same argmax, and the same curve up to the taper's normalization
    assert_eq!(argmax(&raw), peak);
    let scale = raw[peak] / oracle[peak];
    for (a, b) in raw.iter().zip(&oracle) {
        assert!((a - scale * b).abs() < 1e-9 * raw[peak].abs().max(1.0));
    }
}

fn ks_frame(key: usize) -> [f64; 24] {
    keystrength(&key_profiles().rotated(key))
}

#[test]
fn mixed_frames_take_the_mode_of_their_mean() {
    // frames leaning on D minor (key 14) with a few F major and A minor ones
    let mut r = synth::rng(11);
    let mut frames = Vec::new();
    for _ in 0..30 {
        let k = match r.random_range(0..10) {
            0..=5 => 14,
            6 | 7 => 5,
            _ => 21,
        };
        let mut f = ks_frame(k);
        for x in f.iter_mut() {
            *x += r.random_range(-0.05..0.05);
        }
        frames.push(f);
    }
    let mean: Vec<f64> = (0..24).map(|k| frames.iter().map(|f| f[k]).sum::<f64>() / 30.0).collect();
    let oracle = (0..24).fold(0, |b, k| if mean[k] > mean[b] { k } else { b });
    assert_eq!(oracle, 14);
    let series = KeystrengthSeries {
        hop_s: 1.5,
        window_s: 10.0,
        duration_s: 10.0 + 29.0 * 1.5,
        silent: vec![false; 30],
        frames,
    };
    let seg = label_segment(0, 0, 0.0, series.duration_s, &series).unwrap();
    assert_eq!(seg.mode, Some(Mode::Minor));
    assert_eq!(argmax(&seg.mean_keystrength), oracle);
}

fn chroma_vec() -> impl Strategy<Value = [f64; 12]> {
    prop::array::uniform12(0.0f64..10.0).prop_filter("not flat", |c| {
        let max = c.iter().cloned().fold(f64::MIN, f64::max);
        let min = c.iter().cloned().fold(f64::MAX, f64::min);
        max - min > 1e-3
    })
}

proptest! {
    #[test]
    fn keystrength_argmax_ignores_positive_scaling(c in chroma_vec(), scale in 1e-3f64..1e3) {
        let scaled = c.map(|x| x * scale);
        prop_assert_eq!(argmax(&keystrength(&scaled)), argmax(&keystrength(&c)));
    }

    #[test]
    fn transposing_chroma_rotates_keystrength(c in chroma_vec(), shift in 0usize..12) {
        let rotated: [f64; 12] = std::array::from_fn(|pc| c[(pc + 12 - shift) % 12]);
        let a = keystrength(&c);
        let b = keystrength(&rotated);
        for key in 0..24 {
            let mode = key / 12;
            let moved = mode * 12 + (key % 12 + shift) % 12;
            prop_assert!((a[key] - b[moved]).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_similarity_has_zero_novelty(
        side in 4usize..80,
        half in 1usize..32,
        value in -2.0f64..2.0,
    ) {
        let s = SquareMatrix::from_fn(side, |_, _| value);
        let (raw, _) = novelty_raw(&s, 2 * half, 0.4).unwrap();
        prop_assert!(raw.iter().all(|&v| v == 0.0));
        let (scaled, _) = novelty(&s, 2 * half, 0.4).unwrap();
        prop_assert!(scaled.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn boundaries_are_spaced_and_inside(
        curve in prop::collection::vec(0.0f64..1.0, 3..200),
        min_len in 2.0f64..20.0,
    ) {
        let p = PeakPicking { hop_s: 1.5, window_s: 10.0, min_len_s: min_len, threshold_k: 0.5 };
        let duration = (curve.len() - 1) as f64 * 1.5 + 10.0;
        let b = pick_boundaries(&curve, &p, duration);
        prop_assert!(b.windows(2).all(|w| w[1] - w[0] >= min_len - 1e-9));
        prop_assert!(b.iter().all(|&t| t >= min_len - 1e-9 && duration - t >= min_len - 1e-9));
        for &t in &b {
            let frame = ((t - 5.0) / 1.5).round() as usize;
            prop_assert!((frame as f64 * 1.5 + 5.0 - t).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 4, ..ProptestConfig::default() })]

    #[test]
    fn track_segments_partition_the_track(seed in 0u64..1000) {
        let audio = random_track(3, 20.0, 11025, seed);
        let config = MusicSegConfig::default();
        let a = segment_track(1, &audio, &config).unwrap();
        prop_assert_eq!(a.segments.first().unwrap().start_s, 0.0);
        prop_assert_eq!(a.segments.last().unwrap().end_s, a.duration_s);
        prop_assert!(a.segments.windows(2).all(|w| w[0].end_s == w[1].start_s));
        prop_assert!(a.segments.iter().all(|s| s.start_s < s.end_s));
        prop_assert!(a.segments.iter().all(|s| s.duration_s() >= config.min_len_s - 1e-9));
        let b = segment_track(1, &audio, &config).unwrap();
        prop_assert_eq!(a, b);
    }
}
