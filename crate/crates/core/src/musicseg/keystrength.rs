use std::sync::OnceLock;

/// Pitch-class names, C = 0.
pub const PITCH_CLASSES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

/// Major then minor tonal-hierarchy profiles, tonic first.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyProfiles {
    pub major: [f64; 12],
    pub minor: [f64; 12],
}

impl KeyProfiles {
    /// Profile of key `k` (0–11 major C..B, 12–23 minor C..B) indexed by
    /// pitch class.
    pub fn rotated(&self, key: usize) -> [f64; 12] {
        let (base, tonic) = if key < 12 {
            (&self.major, key)
        } else {
            (&self.minor, key - 12)
        };
        std::array::from_fn(|pc| base[(pc + 12 - tonic) % 12])
    }
}

fn parse_profiles(raw: &str) -> KeyProfiles {
    let mut major = None;
    let mut minor = None;
    for line in raw.lines().filter(|l| !l.starts_with('#')) {
        let mut cells = line.split('\t');
        let name = cells.next().unwrap_or("");
        let values: Vec<f64> = cells.filter_map(|c| c.trim().parse().ok()).collect();
        if values.len() != 12 {
            continue;
        }
        let arr: [f64; 12] = values.try_into().expect("length checked");
        match name {
            "major" => major = Some(arr),
            "minor" => minor = Some(arr),
            _ => {}
        }
    }
    KeyProfiles {
        major: major.expect("major profile in data file"),
        minor: minor.expect("minor profile in data file"),
    }
}

/// Krumhansl–Kessler profiles shipped in `data/key_profiles.tsv`.
pub fn key_profiles() -> &'static KeyProfiles {
    static PROFILES: OnceLock<KeyProfiles> = OnceLock::new();
    PROFILES.get_or_init(|| parse_profiles(include_str!("../../data/key_profiles.tsv")))
}

fn pearson(a: &[f64; 12], b: &[f64; 12]) -> Option<f64> {
    let ma = a.iter().sum::<f64>() / 12.0;
    let mb = b.iter().sum::<f64>() / 12.0;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    (va > 0.0 && vb > 0.0).then(|| (cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of a chroma vector with all 24 key profiles.
///
/// A flat (e.g. silent) chroma has no defined correlation and yields the zero
/// vector.
pub fn keystrength(chroma: &[f64; 12]) -> [f64; 24] {
    let profiles = key_profiles();
    let mut out = [0.0; 24];
    for (k, slot) in out.iter_mut().enumerate() {
        match pearson(chroma, &profiles.rotated(k)) {
            Some(r) => *slot = r,
            None => return [0.0; 24],
        }
    }
    out
}

/// Index of the largest entry; ties resolve to the smaller index.
pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}

/// Human-readable key name such as `"A minor"`.
pub fn key_name(key: usize) -> String {
    let mode = if key < 12 { "major" } else { "minor" };
    format!("{} {mode}", PITCH_CLASSES[key % 12])
}
