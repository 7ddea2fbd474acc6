use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;
use soundweave::corpus::AudioBuffer;
use soundweave::fingerprint::{
    build_index, fingerprint_audio, pack_hash, query, read_index, scan_movie, unpack_hash, write_index,
    FingerprintIndex, FingerprintParams,
};
use soundweave::synth::{self, random_track, speech_like};

const SR: u32 = 11025;

fn album() -> &'static (Vec<(u32, AudioBuffer)>, FingerprintIndex) {
    static ALBUM: OnceLock<(Vec<(u32, AudioBuffer)>, FingerprintIndex)> = OnceLock::new();
    ALBUM.get_or_init(|| {
        let tracks: Vec<(u32, AudioBuffer)> = (1..=3u32)
            .map(|id| (id, random_track(3, 15.0, SR, 40 + u64::from(id))))
            .collect();
        let index = build_index(&tracks, &FingerprintParams::default()).unwrap();
        (tracks, index)
    })
}

fn rms(samples: &[f32]) -> f64 {
    (samples.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>() / samples.len() as f64).sqrt()
}

/// Linear sweep from 200 Hz to 3 kHz.
fn chirp(seconds: f64) -> AudioBuffer {
    let sr = f64::from(SR);
    let rate = 2800.0 / seconds;
    let n = (seconds * sr) as usize;
    AudioBuffer::new(
        (0..n)
            .map(|i| {
                let t = i as f64 / sr;
                (0.5 * (2.0 * PI * (200.0 * t + 0.5 * rate * t * t)).sin()) as f32
            })
            .collect(),
        SR,
    )
}

#[test]
fn chirp_hash_count_matches_reference() {
    // reference run of the default parameters
    const REFERENCE: f64 = 2132.0;
    let p = FingerprintParams::default();
    let index = build_index(&[(1, chirp(30.0))], &p).unwrap();
    let count = index.hash_count() as f64;
    assert!((count - REFERENCE).abs() <= 0.1 * REFERENCE, "{count} hashes");
}

#[test]
fn indexing_twice_gives_the_same_hashes() {
    let p = FingerprintParams::default();
    let (tracks, index) = album();
    let again = build_index(tracks, &p).unwrap();
    assert_eq!(again.entries(), index.entries());
    let mut bytes = Vec::new();
    write_index(index, &mut bytes).unwrap();
    assert_eq!(&bytes[..4], b"SWFP");
    let read = read_index(&mut bytes.as_slice()).unwrap();
    assert_eq!(read.entries(), index.entries());
}

#[test]
fn speech_alone_logs_nothing() {
    let p = FingerprintParams::default();
    let (_, index) = album();
    let mut r = synth::rng(9);
    let speech: Vec<f32> = speech_like(60.0, SR, 0.1, &mut r).into_iter().map(|x| x as f32).collect();
    let log = scan_movie(index, &AudioBuffer::new(speech, SR), &p);
    assert!(log.entries.is_empty(), "{:?}", log.entries);
}

#[test]
fn track_under_equal_level_dialogue_is_mostly_found() {
    let p = FingerprintParams::default();
    let (tracks, index) = album();
    let track = &tracks[1].1;
    let mut r = synth::rng(5);
    let level = rms(&track.samples);
    let speech = speech_like(track.duration_s(), SR, level, &mut r);
    let mixed: Vec<f32> = track.samples.iter().zip(&speech).map(|(&m, &s)| m + s as f32).collect();
    let log = scan_movie(index, &AudioBuffer::new(mixed, SR), &p);
    let windows = ((track.duration_s() - p.scan_window_s) / p.scan_stride_s).floor() as usize + 1;
    let hits = log.entries.iter().filter(|e| e.track_id == tracks[1].0).count();
    assert!(2 * hits >= windows, "{hits}/{windows} windows matched");
}

#[test]
fn consecutive_windows_advance_by_the_stride() {
    let p = FingerprintParams::default();
    let (tracks, index) = album();
    let (id, track) = &tracks[0];
    let log = scan_movie(index, track, &p);
    assert!(log.entries.len() >= 2);
    assert!(log.entries.iter().all(|e| e.track_id == *id));
    assert!(log.entries.windows(2).all(|w| w[0].movie_ms < w[1].movie_ms));
    for w in log.entries.windows(2) {
        let dt = (w[1].movie_ms - w[0].movie_ms) as f64 / 1000.0;
        assert!((w[1].offset_s - w[0].offset_s - dt).abs() <= 0.2, "{w:?}");
    }
}

proptest! {
    #[test]
    fn hash_fields_survive_packing(b1 in 0u32..2048, b2 in 0u32..2048, dt in 0u32..(1 << 14)) {
        let p = FingerprintParams::default();
        prop_assert_eq!(unpack_hash(pack_hash(b1, b2, dt, &p)), (b1 >> p.bin_shift, b2 >> p.bin_shift, dt));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn excerpts_identify_their_track(track in 0usize..3, start in 0.0f64..40.0, len in 5.0f64..10.0) {
        let p = FingerprintParams::default();
        let (tracks, index) = album();
        let (id, audio) = &tracks[track];
        let start = start.min(audio.duration_s() - len);
        let m = query(index, &audio.slice_seconds(start, start + len), &p);
        prop_assert!(m.is_some_and(|m| m.track_id == *id), "{:?}", m);
        prop_assert!((m.unwrap().offset_s - start).abs() <= 0.2);
    }

    #[test]
    fn gain_does_not_change_the_answer(track in 0usize..3, start in 0.0f64..30.0, gain in 0.25f32..4.0) {
        let p = FingerprintParams::default();
        let (tracks, index) = album();
        let clip = tracks[track].1.slice_seconds(start, start + 10.0);
        let base = query(index, &clip, &p);
        let scaled = query(index, &clip.scaled(gain), &p);
        prop_assert_eq!(base.map(|m| m.track_id), scaled.map(|m| m.track_id));
        let (a, _) = fingerprint_audio(&clip, &p);
        let (b, _) = fingerprint_audio(&clip.scaled(gain), &p);
        let count = |lms: &[soundweave::fingerprint::Landmark]| {
            let mut m: BTreeMap<(u32, u32), usize> = BTreeMap::new();
            for l in lms {
                *m.entry((l.hash, l.frame)).or_default() += 1;
            }
            m
        };
        prop_assert_eq!(count(&a), count(&b));
    }
}
