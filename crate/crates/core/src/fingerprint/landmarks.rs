use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::FingerprintParams;
use crate::corpus::AudioBuffer;

/// A spectrogram peak: frame index and frequency bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Peak {
    pub frame: u32,
    pub bin: u32,
}

/// A landmark hash anchored at a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Landmark {
    pub hash: u32,
    pub frame: u32,
}

/// Log-compressed magnitude spectrogram, one row per frame.
pub fn spectrogram(audio: &AudioBuffer, p: &FingerprintParams) -> Vec<Vec<f32>> {
    let n = p.window;
    if audio.samples.len() < n {
        return Vec::new();
    }
    let window: Vec<f32> = (0..n)
        .map(|i| (0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()) as f32)
        .collect();
    let fft = FftPlanner::<f32>::new().plan_fft_forward(n);
    let frames = (audio.samples.len() - n) / p.hop + 1;
    let mut buf = vec![Complex::new(0.0f32, 0.0); n];
    (0..frames)
        .map(|f| {
            let chunk = &audio.samples[f * p.hop..f * p.hop + n];
            for ((slot, &x), &w) in buf.iter_mut().zip(chunk).zip(&window) {
                *slot = Complex::new(x * w, 0.0);
            }
            fft.process(&mut buf);
            buf[..=n / 2].iter().map(|c| (1.0 + c.norm()).ln()).collect()
        })
        .collect()
}

/// Running maximum over `radius` cells on either side.
fn max_filter(values: &[f32], radius: usize) -> Vec<f32> {
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius + 1).min(values.len());
            values[lo..hi].iter().cloned().fold(f32::NEG_INFINITY, f32::max)
        })
        .collect()
}

fn percentile(values: &[f32], q: f64) -> f32 {
    let mut v = values.to_vec();
    v.sort_by(f32::total_cmp);
    v[((v.len() - 1) as f64 * q).round() as usize]
}

/// Constellation peaks: cells equal to the maximum of their neighbourhood
/// and strictly above the frame's percentile threshold. Sorted by frame,
/// then bin.
pub fn find_peaks(spec: &[Vec<f32>], p: &FingerprintParams) -> Vec<Peak> {
    if spec.is_empty() {
        return Vec::new();
    }
    let rt = p.neighbourhood_frames / 2;
    let rf = p.neighbourhood_bins / 2;
    let along_freq: Vec<Vec<f32>> = spec.iter().map(|row| max_filter(row, rf)).collect();
    let bins = spec[0].len();
    let thresholds: Vec<f32> = spec.iter().map(|row| percentile(row, p.percentile)).collect();
    let mut peaks = Vec::new();
    for t in 0..spec.len() {
        let lo = t.saturating_sub(rt);
        let hi = (t + rt + 1).min(spec.len());
        // skip DC
        for f in 1..bins {
            let v = spec[t][f];
            if v <= thresholds[t] || v <= 0.0 {
                continue;
            }
            if (lo..hi).all(|u| along_freq[u][f] <= v) {
                peaks.push(Peak {
                    frame: t as u32,
                    bin: f as u32,
                });
            }
        }
    }
    peaks
}

/// Packs two quantized frequencies and a frame delta into 9/9/14 bits.
pub fn pack_hash(bin1: u32, bin2: u32, dt: u32, p: &FingerprintParams) -> u32 {
    let q = |b: u32| (b >> p.bin_shift).min(511);
    (q(bin1) << 23) | (q(bin2) << 14) | dt.min(0x3fff)
}

pub fn unpack_hash(h: u32) -> (u32, u32, u32) {
    (h >> 23, (h >> 14) & 0x1ff, h & 0x3fff)
}

/// Pairs every peak with up to `fan_out` later peaks inside the target
/// zone.
pub fn landmarks(peaks: &[Peak], p: &FingerprintParams) -> Vec<Landmark> {
    let max_dt = p.max_dt_frames();
    let mut out = Vec::new();
    for (i, a) in peaks.iter().enumerate() {
        let mut paired = 0;
        for b in &peaks[i + 1..] {
            let dt = b.frame - a.frame;
            if dt > max_dt {
                break;
            }
            if dt == 0 || a.bin.abs_diff(b.bin) > p.max_df_bins {
                continue;
            }
            out.push(Landmark {
                hash: pack_hash(a.bin, b.bin, dt, p),
                frame: a.frame,
            });
            paired += 1;
            if paired == p.fan_out {
                break;
            }
        }
    }
    out
}

/// Resamples to the fingerprint rate and hashes.
pub fn fingerprint_audio(audio: &AudioBuffer, p: &FingerprintParams) -> (Vec<Landmark>, u32) {
    let resampled = audio.resample(p.sample_rate);
    let spec = spectrogram(&resampled, p);
    let frames = spec.len() as u32;
    (landmarks(&find_peaks(&spec, p), p), frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_packing() {
        let p = FingerprintParams::default();
        let h = pack_hash(400, 420, 17, &p);
        assert_eq!(unpack_hash(h), (100, 105, 17));
        assert_eq!(unpack_hash(pack_hash(4000, 0, 99999, &p)), (511, 0, 0x3fff));
    }

    #[test]
    fn silence_has_no_peaks() {
        let p = FingerprintParams::default();
        let (lm, frames) = fingerprint_audio(&AudioBuffer::new(vec![0.0; 11025], 11025), &p);
        assert!(frames > 0);
        assert!(lm.is_empty());
    }

    #[test]
    fn isolated_peak_is_found() {
        let p = FingerprintParams::default();
        let mut spec = vec![vec![0.1f32; 64]; 20];
        spec[10][30] = 5.0;
        spec[10][31] = 5.0; // plateau neighbour also qualifies
        let peaks = find_peaks(&spec, &p);
        assert_eq!(peaks, vec![Peak { frame: 10, bin: 30 }, Peak { frame: 10, bin: 31 }]);
    }

    #[test]
    fn target_zone_limits() {
        let p = FingerprintParams::default();
        let peaks = vec![
            Peak { frame: 0, bin: 100 },
            Peak { frame: 0, bin: 110 },  // same frame: skipped
            Peak { frame: 3, bin: 140 },  // |df| = 40: skipped
            Peak { frame: 4, bin: 120 },
            Peak { frame: 40, bin: 100 }, // beyond 5 s
        ];
        let lm = landmarks(&peaks, &p);
        let from_first: Vec<_> = lm.iter().filter(|l| l.frame == 0).collect();
        assert_eq!(from_first.len(), 3);
        assert!(lm.iter().all(|l| unpack_hash(l.hash).2 > 0));
    }
}
