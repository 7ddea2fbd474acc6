use super::{KeystrengthSeries, MusicSegError};
use crate::vecmath::cosine;

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    side: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn from_fn(side: usize, f: impl Fn(usize, usize) -> f64) -> SquareMatrix {
        let mut data = Vec::with_capacity(side * side);
        for a in 0..side {
            for b in 0..side {
                data.push(f(a, b));
            }
        }
        SquareMatrix { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.side + b]
    }

    pub fn transpose(&self) -> SquareMatrix {
        SquareMatrix::from_fn(self.side, |a, b| self.get(b, a))
    }
}

/// Cosine self-similarity of keystrength frames; rows and columns of silent
/// frames are zero.
pub fn self_similarity(series: &KeystrengthSeries) -> Result<SquareMatrix, MusicSegError> {
    let live = series.silent.iter().filter(|s| !**s).count();
    if live < 2 {
        return Err(MusicSegError::AllSilent);
    }
    let n = series.frames.len();
    let mut data = vec![0.0; n * n];
    for a in 0..n {
        if series.silent[a] {
            continue;
        }
        data[a * n + a] = 1.0;
        for b in a + 1..n {
            if series.silent[b] {
                continue;
            }
            let s = cosine(&series.frames[a], &series.frames[b]);
            data[a * n + b] = s;
            data[b * n + a] = s;
        }
    }
    Ok(SquareMatrix { side: n, data })
}

/// Reflects an out-of-range index back into `0..n` (`-1 -> 0`, `n -> n-1`).
fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i - 1
    } else if i >= n {
        2 * n - 1 - i
    } else {
        i
    };
    r.clamp(0, n - 1) as usize
}

/// Gaussian taper for half-kernel offsets `0..half`, evaluated at the cell
/// centres `d + 0.5` so both halves of the kernel carry identical weights.
fn taper(half: usize, ratio: f64) -> Vec<f64> {
    let sigma = ratio * half as f64;
    (0..half)
        .map(|d| (-0.5 * ((d as f64 + 0.5) / sigma).powi(2)).exp())
        .collect()
}

/// Effective kernel size for a matrix side: even, and no larger than the
/// side.
pub fn effective_kernel(side: usize, kernel: usize) -> Result<usize, MusicSegError> {
    if kernel < 2 || kernel % 2 != 0 {
        return Err(MusicSegError::InvalidKernel(kernel));
    }
    if side >= kernel {
        return Ok(kernel);
    }
    let shrunk = side - side % 2;
    if shrunk < 2 {
        return Err(MusicSegError::MatrixTooSmall { side, kernel });
    }
    log::warn!("similarity matrix side {side} is below kernel size {kernel}; using {shrunk}");
    Ok(shrunk)
}

/// Checkerboard-kernel correlation along the diagonal, unscaled. Returns the
/// curve and the kernel size actually used.
pub fn novelty_raw(
    s: &SquareMatrix,
    kernel: usize,
    taper_ratio: f64,
) -> Result<(Vec<f64>, usize), MusicSegError> {
    let n = s.side();
    let kernel = effective_kernel(n, kernel)?;
    let half = kernel / 2;
    let g = taper(half, taper_ratio);
    let values = (0..n as isize)
        .map(|t| {
            let mut acc = 0.0;
            for a in 0..half {
                let fwd_a = mirror(t + a as isize, n);
                let back_a = mirror(t - 1 - a as isize, n);
                for b in 0..half {
                    let fwd_b = mirror(t + b as isize, n);
                    let back_b = mirror(t - 1 - b as isize, n);
                    let cell = s.get(fwd_a, fwd_b) + s.get(back_a, back_b)
                        - s.get(fwd_a, back_b)
                        - s.get(back_a, fwd_b);
                    acc += g[a] * g[b] * cell;
                }
            }
            acc
        })
        .collect();
    Ok((values, kernel))
}

/// Novelty curve clamped at zero and scaled so its maximum is 1 (an all-zero
/// curve stays zero).
pub fn novelty(
    s: &SquareMatrix,
    kernel: usize,
    taper_ratio: f64,
) -> Result<(Vec<f64>, usize), MusicSegError> {
    let (raw, used) = novelty_raw(s, kernel, taper_ratio)?;
    let clamped: Vec<f64> = raw.iter().map(|v| v.max(0.0)).collect();
    let max = clamped.iter().cloned().fold(0.0, f64::max);
    let scaled = if max > 0.0 {
        clamped.iter().map(|v| v / max).collect()
    } else {
        clamped
    };
    Ok((scaled, used))
}

/// Peak-picking parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakPicking {
    pub hop_s: f64,
    pub window_s: f64,
    pub min_len_s: f64,
    /// Peaks must reach `mean + threshold_k * std`.
    pub threshold_k: f64,
}

/// Boundary times from a scaled novelty curve.
///
/// Candidates are strict-left local maxima above the threshold whose time
/// `t * hop + window / 2` leaves at least `min_len_s` to both track ends;
/// they are accepted greedily by height (earlier first on ties), dropping any
/// candidate closer than `min_len_s` to an accepted one.
pub fn pick_boundaries(novelty: &[f64], p: &PeakPicking, duration_s: f64) -> Vec<f64> {
    let n = novelty.len();
    if n < 3 {
        return Vec::new();
    }
    let mean = novelty.iter().sum::<f64>() / n as f64;
    let std = (novelty.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let threshold = mean + p.threshold_k * std;
    let mut candidates: Vec<(usize, f64)> = (1..n - 1)
        .filter(|&t| {
            let v = novelty[t];
            v > 0.0 && v > novelty[t - 1] && v >= novelty[t + 1] && v >= threshold
        })
        .map(|t| (t, t as f64 * p.hop_s + p.window_s / 2.0))
        .filter(|&(_, time)| time >= p.min_len_s && duration_s - time >= p.min_len_s)
        .collect();
    candidates.sort_by(|a, b| novelty[b.0].total_cmp(&novelty[a.0]).then(a.0.cmp(&b.0)));
    let mut accepted: Vec<f64> = Vec::new();
    for (_, time) in candidates {
        if accepted.iter().all(|&a| (a - time).abs() >= p.min_len_s) {
            accepted.push(time);
        }
    }
    accepted.sort_by(f64::total_cmp);
    accepted
}
