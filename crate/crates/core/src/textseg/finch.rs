use serde::{Deserialize, Serialize};

use super::TextSegError;
use crate::vecmath::{dot, mean_direction, normalized};

/// Clusters of point indices, ordered by first index; every cluster is a
/// sorted, contiguous index run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub clusters: Vec<Vec<usize>>,
}

/// Successively coarser partitions; the last one is a single cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionHierarchy {
    pub levels: Vec<Partition>,
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet((0..n).collect())
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

/// Temporally weighted distance between two unit vectors at two positions.
fn distance(fa: &[f64], fb: &[f64], pa: f64, pb: f64, n: f64) -> f64 {
    (1.0 - dot(fa, fb)) * ((pa - pb).abs() / n)
}

/// First neighbour of every point; ties go to the smallest index.
fn first_neighbours(features: &[Vec<f64>], positions: &[f64]) -> Vec<(usize, f64)> {
    let n = features.len();
    let scale = n as f64;
    (0..n)
        .map(|i| {
            let mut best = (usize::MAX, f64::INFINITY);
            for j in (0..n).filter(|&j| j != i) {
                let d = distance(&features[i], &features[j], positions[i], positions[j], scale);
                if d < best.1 {
                    best = (j, d);
                }
            }
            best
        })
        .collect()
}

/// Groups the (temporally ordered) points by first-neighbour adjacency and
/// returns maximal contiguous runs of equal component label.
fn link_level(features: &[Vec<f64>], positions: &[f64]) -> Vec<Vec<usize>> {
    let n = features.len();
    let kappa = first_neighbours(features, positions);
    let mut sets = DisjointSet::new(n);
    // i~kappa(i) covers both directed cases; kappa(i)=kappa(j) is implied
    // transitively through the shared neighbour.
    for (i, &(k, _)) in kappa.iter().enumerate() {
        sets.union(i, k);
    }
    let labels: Vec<usize> = (0..n).map(|i| sets.find(i)).collect();
    contiguous_runs(&labels)
}

fn contiguous_runs(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut runs: Vec<Vec<usize>> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if labels[run[0]] == l => run.push(i),
            _ => runs.push(vec![i]),
        }
    }
    runs
}

/// Fallback when first-neighbour linking makes no progress (possible only
/// after contiguity splitting): merge the temporally adjacent pair with the
/// smallest distance.
fn merge_closest_adjacent(features: &[Vec<f64>], positions: &[f64]) -> Vec<Vec<usize>> {
    let n = features.len();
    let scale = n as f64;
    let best = (0..n - 1)
        .map(|i| {
            (
                i,
                distance(&features[i], &features[i + 1], positions[i], positions[i + 1], scale),
            )
        })
        .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc })
        .0;
    let mut runs: Vec<Vec<usize>> = (0..n).filter(|&i| i != best + 1).map(|i| vec![i]).collect();
    runs[best].push(best + 1);
    runs
}

/// Temporally weighted first-neighbour hierarchical clustering.
///
/// Points are the rows of `features` at positions `1..=N`. The distance
/// between two points is `(1 - cos) * |pos_a - pos_b| / N`; every point links
/// to its nearest other point and connected components, split into maximal
/// contiguous runs, form the next partition. The procedure repeats on cluster
/// means (re-normalized mean feature, mean position) until one cluster is
/// left. A single point yields the one-cluster hierarchy.
pub fn tw_finch(features: &[Vec<f64>]) -> Result<PartitionHierarchy, TextSegError> {
    let n = features.len();
    if n == 0 {
        return Err(TextSegError::DegenerateInput);
    }
    let unit: Vec<Vec<f64>> = features.iter().map(|f| normalized(f)).collect();
    let dim = unit[0].len();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut levels = Vec::new();
    if n == 1 {
        levels.push(Partition {
            clusters: members,
        });
        return Ok(PartitionHierarchy { levels });
    }
    let mut points = unit.clone();
    let mut positions: Vec<f64> = (1..=n).map(|p| p as f64).collect();
    while members.len() > 1 {
        let mut groups = link_level(&points, &positions);
        if groups.len() == members.len() {
            groups = merge_closest_adjacent(&points, &positions);
        }
        members = groups
            .iter()
            .map(|g| g.iter().flat_map(|&c| members[c].iter().copied()).collect())
            .collect();
        points = members
            .iter()
            .map(|m: &Vec<usize>| mean_direction(m.iter().map(|&i| unit[i].as_slice()), dim))
            .collect();
        positions = members
            .iter()
            .map(|m| m.iter().map(|&i| (i + 1) as f64).sum::<f64>() / m.len() as f64)
            .collect();
        levels.push(Partition {
            clusters: members.clone(),
        });
    }
    Ok(PartitionHierarchy { levels })
}
