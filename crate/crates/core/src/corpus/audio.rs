use std::f64::consts::PI;
use std::path::Path;

use super::CorpusError;

/// Mono PCM audio in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> AudioBuffer {
        AudioBuffer {
            samples,
            sample_rate,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Samples between two times, clamped to the buffer.
    pub fn slice_seconds(&self, start_s: f64, end_s: f64) -> AudioBuffer {
        let sr = f64::from(self.sample_rate);
        let a = ((start_s * sr).round().max(0.0) as usize).min(self.samples.len());
        let b = ((end_s * sr).round().max(0.0) as usize).clamp(a, self.samples.len());
        AudioBuffer::new(self.samples[a..b].to_vec(), self.sample_rate)
    }

    /// Band-limited resampling with a Hann-windowed sinc kernel.
    pub fn resample(&self, target_rate: u32) -> AudioBuffer {
        if target_rate == self.sample_rate || self.samples.is_empty() {
            return AudioBuffer::new(self.samples.clone(), target_rate);
        }
        let ratio = f64::from(target_rate) / f64::from(self.sample_rate);
        // cutoff as a fraction of the input rate, a little under the lower Nyquist
        let cutoff = ratio.min(1.0) * 0.97;
        let half_width = (16.0 / cutoff).ceil() as isize;
        let out_len = (self.samples.len() as f64 * ratio).floor() as usize;
        let n_in = self.samples.len() as isize;
        let mut out = Vec::with_capacity(out_len);
        for n in 0..out_len {
            let t = n as f64 / ratio;
            let centre = t.floor() as isize;
            let mut acc = 0.0;
            for k in (centre - half_width + 1)..=(centre + half_width) {
                if k < 0 || k >= n_in {
                    continue;
                }
                let d = t - k as f64;
                let w = 0.5 + 0.5 * (PI * d / half_width as f64).cos();
                acc += f64::from(self.samples[k as usize]) * cutoff * sinc(cutoff * d) * w;
            }
            out.push(acc as f32);
        }
        AudioBuffer::new(out, target_rate)
    }

    pub fn scaled(&self, gain: f32) -> AudioBuffer {
        AudioBuffer::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate,
        )
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Reads a PCM WAV file (integer or float), averaging channels to mono.
pub fn read_wav(path: &Path) -> Result<AudioBuffer, CorpusError> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels.max(1));
    let interleaved: Vec<f32> = match spec.sample_format {
        hound::SampleFormat::Float => reader.samples::<f32>().collect::<Result<_, _>>()?,
        hound::SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f32;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f32 * scale))
                .collect::<Result<_, _>>()?
        }
    };
    let samples = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f32>() / channels as f32)
        .collect();
    Ok(AudioBuffer::new(samples, spec.sample_rate))
}

/// Writes 16-bit mono PCM.
pub fn write_wav(path: &Path, audio: &AudioBuffer) -> Result<(), CorpusError> {
    std::fs::write(path, wav_bytes(audio)?)?;
    Ok(())
}

/// Encodes 16-bit mono PCM in memory.
pub fn wav_bytes(audio: &AudioBuffer) -> Result<Vec<u8>, CorpusError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut cursor = std::io::Cursor::new(Vec::new());
    let mut writer = hound::WavWriter::new(&mut cursor, spec)?;
    for &s in &audio.samples {
        writer.write_sample((s.clamp(-1.0, 1.0) * 32767.0).round() as i16)?;
    }
    writer.finalize()?;
    Ok(cursor.into_inner())
}
