use super::{AlignError, ChapterSceneSimilarity};

/// Monotone scene-to-chapter assignment from the cheapest path through the
/// chapter-by-scene grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathAssignment {
    /// Chapter of every scene, non-decreasing.
    pub scene_to_chapter: Vec<usize>,
    /// Summed node cost `1 - similarity` along the path.
    pub cost: f64,
    /// Scenes whose path node lies below the 10th percentile of all cells.
    pub low_similarity: Vec<usize>,
}

/// Cheapest path from `(0, 0)` to `(L-1, Q-1)`; each step moves to the next
/// scene and either stays in the chapter or advances one. Ties stay.
pub fn shortest_path_align(sim: &ChapterSceneSimilarity) -> Result<PathAssignment, AlignError> {
    let l = sim.chapters();
    let q = sim.scenes();
    if l == 0 || q < l {
        return Err(AlignError::InfeasibleShape { chapters: l, scenes: q });
    }
    let node = |i: usize, s: usize| 1.0 - sim.matrix[i][s];
    // Cost-to-go from (i, s) to (L-1, Q-1), filled backwards so the forward
    // trace can apply the stay-on-tie rule at every decision.
    let mut togo = vec![vec![f64::INFINITY; q]; l];
    togo[l - 1][q - 1] = node(l - 1, q - 1);
    for s in (0..q - 1).rev() {
        // chapter i is feasible at scene s when i <= s and the chapters after
        // it fit into the scenes after s
        let lo = (l - 1).saturating_sub(q - 1 - s);
        for i in lo..l.min(s + 1) {
            let stay = togo[i][s + 1];
            let adv = if i + 1 < l { togo[i + 1][s + 1] } else { f64::INFINITY };
            togo[i][s] = stay.min(adv) + node(i, s);
        }
    }
    let mut scene_to_chapter = vec![0; q];
    let mut i = 0;
    for s in 1..q {
        let stay = togo[i][s];
        let adv = if i + 1 < l { togo[i + 1][s] } else { f64::INFINITY };
        if adv < stay {
            i += 1;
        }
        scene_to_chapter[s] = i;
    }
    let cost = togo[0][0];
    let mut cells: Vec<f64> = sim.matrix.iter().flatten().copied().collect();
    cells.sort_by(f64::total_cmp);
    let p10 = cells[((cells.len() - 1) as f64 * 0.1).floor() as usize];
    let low_similarity = (0..q)
        .filter(|&s| sim.matrix[scene_to_chapter[s]][s] < p10)
        .collect();
    Ok(PathAssignment {
        scene_to_chapter,
        cost,
        low_similarity,
    })
}

/// Fraction of shots whose scene is assigned to their true chapter.
/// `scene_of_shot[k]` is the scene of shot `k`, `truth[k]` its chapter.
pub fn shot_accuracy(scene_to_chapter: &[usize], scene_of_shot: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = scene_of_shot
        .iter()
        .zip(truth)
        .filter(|(&s, &t)| scene_to_chapter[s] == t)
        .count();
    hits as f64 / truth.len() as f64
}
