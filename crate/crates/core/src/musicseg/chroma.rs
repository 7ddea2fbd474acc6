use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::MusicSegError;
use crate::corpus::AudioBuffer;

/// Lowest and highest MIDI pitch covered: A1 (55 Hz) up to the semitone
/// below A6 (1760 Hz), five octaves.
const MIDI_LOW: i32 = 33;
const MIDI_HIGH: i32 = 92;

/// Short-time pitch-class profile of a track.
#[derive(Debug, Clone, PartialEq)]
pub struct ChromaFrames {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
    /// One 12-vector per analysis frame, C = 0.
    pub frames: Vec<[f64; 12]>,
    /// Mean squared sample value per analysis frame.
    pub power: Vec<f64>,
}

impl ChromaFrames {
    pub fn centre_s(&self, frame: usize) -> f64 {
        (frame * self.hop + self.n_fft / 2) as f64 / f64::from(self.sample_rate)
    }
}

fn midi_of(freq: f64) -> i32 {
    (69.0 + 12.0 * (freq / 440.0).log2()).round() as i32
}

fn midi_freq(midi: i32) -> f64 {
    440.0 * 2f64.powf(f64::from(midi - 69) / 12.0)
}

/// Analysis frame length: the power of two nearest above 0.37 s.
pub fn frame_length(sample_rate: u32) -> usize {
    ((f64::from(sample_rate) * 0.37).round() as usize).next_power_of_two()
}

/// Per-frame chroma from a Hann-windowed magnitude spectrum. Each semitone
/// band between 55 and 1760 Hz contributes its mean bin magnitude (the bin
/// nearest the band centre when no bin falls inside) to its pitch class.
pub fn chroma(audio: &AudioBuffer) -> Result<ChromaFrames, MusicSegError> {
    if audio.sample_rate < 8000 {
        return Err(MusicSegError::SampleRate(audio.sample_rate));
    }
    let sr = f64::from(audio.sample_rate);
    let n_fft = frame_length(audio.sample_rate);
    let hop = n_fft / 2;
    let window: Vec<f64> = (0..n_fft)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n_fft as f64).cos())
        .collect();

    let bin_hz = sr / n_fft as f64;
    let n_bands = (MIDI_HIGH - MIDI_LOW + 1) as usize;
    let mut band_bins: Vec<Vec<usize>> = vec![Vec::new(); n_bands];
    for k in 1..n_fft / 2 {
        let m = midi_of(k as f64 * bin_hz);
        if (MIDI_LOW..=MIDI_HIGH).contains(&m) {
            band_bins[(m - MIDI_LOW) as usize].push(k);
        }
    }
    for (b, bins) in band_bins.iter_mut().enumerate() {
        if bins.is_empty() {
            let f = midi_freq(MIDI_LOW + b as i32);
            bins.push(((f / bin_hz).round() as usize).clamp(1, n_fft / 2 - 1));
        }
    }

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let samples = &audio.samples;
    let n_frames = if samples.len() <= n_fft {
        1
    } else {
        (samples.len() - n_fft) / hop + 1
    };
    let mut frames = Vec::with_capacity(n_frames);
    let mut power = Vec::with_capacity(n_frames);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    for f in 0..n_frames {
        let start = f * hop;
        let mut energy = 0.0;
        for (i, slot) in buf.iter_mut().enumerate() {
            let x = samples.get(start + i).map_or(0.0, |&s| f64::from(s));
            energy += x * x;
            *slot = Complex::new(x * window[i], 0.0);
        }
        power.push(energy / n_fft as f64);
        fft.process(&mut buf);
        let mut c = [0.0; 12];
        for (b, bins) in band_bins.iter().enumerate() {
            let mean = bins.iter().map(|&k| buf[k].norm()).sum::<f64>() / bins.len() as f64;
            c[((MIDI_LOW + b as i32) % 12) as usize] += mean;
        }
        frames.push(c);
    }
    Ok(ChromaFrames {
        sample_rate: audio.sample_rate,
        n_fft,
        hop,
        frames,
        power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, sr: u32, seconds: f64) -> AudioBuffer {
        let n = (f64::from(sr) * seconds) as usize;
        AudioBuffer::new(
            (0..n)
                .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / f64::from(sr)).sin() as f32)
                .collect(),
            sr,
        )
    }

    #[test]
    fn band_mapping() {
        assert_eq!(midi_of(440.0), 69);
        assert_eq!(midi_of(55.0), MIDI_LOW);
        assert_eq!(midi_of(1760.0), MIDI_HIGH + 1);
        assert_eq!(frame_length(11025), 4096);
        assert_eq!(frame_length(8000), 4096);
        assert_eq!(frame_length(44100), 16384);
    }

    #[test]
    fn silence_is_zero() {
        let c = chroma(&AudioBuffer::new(vec![0.0; 20000], 8000)).unwrap();
        assert!(c.frames.iter().all(|f| f.iter().all(|&x| x == 0.0)));
        assert!(c.power.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn rejects_low_sample_rate() {
        assert!(matches!(
            chroma(&AudioBuffer::new(vec![0.0; 100], 4000)),
            Err(MusicSegError::SampleRate(4000))
        ));
    }

    #[test]
    fn c_major_triad_lights_c_e_g() {
        let sr = 11025;
        let mut a = tone(261.63, sr, 2.0);
        for f in [329.63, 392.0] {
            for (s, t) in a.samples.iter_mut().zip(tone(f, sr, 2.0).samples) {
                *s += t;
            }
        }
        let c = chroma(&a).unwrap();
        let f = c.frames[1];
        for other in [1, 2, 3, 5, 6, 8, 9, 10, 11] {
            assert!(f[0] > 3.0 * f[other] && f[4] > 3.0 * f[other] && f[7] > 3.0 * f[other]);
        }
    }
}
