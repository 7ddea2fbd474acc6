use proptest::prelude::*;
use soundweave::align::{dtw_path, shortest_path_align, ChapterSceneSimilarity};
use soundweave::scenes::partition_shots;

fn matrix(l: std::ops::RangeInclusive<usize>, q_max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    l.prop_flat_map(move |l| (Just(l), l..=q_max))
        .prop_flat_map(|(l, q)| prop::collection::vec(prop::collection::vec(0.0f64..1.0, q), l))
}

fn exhaustive_path(m: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let (l, q) = (m.len(), m[0].len());
    let mut best = (f64::INFINITY, Vec::new());
    let mut cur = vec![0usize];
    fn rec(m: &[Vec<f64>], l: usize, q: usize, cur: &mut Vec<usize>, best: &mut (f64, Vec<usize>)) {
        if cur.len() == q {
            if *cur.last().unwrap() == l - 1 {
                let c: f64 = cur.iter().enumerate().map(|(s, &i)| 1.0 - m[i][s]).sum();
                if c < best.0 {
                    *best = (c, cur.clone());
                }
            }
            return;
        }
        let last = *cur.last().unwrap();
        for next in [last, last + 1] {
            if next < l {
                cur.push(next);
                rec(m, l, q, cur, best);
                cur.pop();
            }
        }
    }
    rec(m, l, q, &mut cur, &mut best);
    best
}

fn exhaustive_dtw(cost: &[Vec<f64>], r: usize, c: usize) -> f64 {
    let here = cost[r][c];
    if r + 1 == cost.len() && c + 1 == cost[0].len() {
        return here;
    }
    let mut best = f64::INFINITY;
    for (dr, dc) in [(1, 1), (1, 0), (0, 1)] {
        if r + dr < cost.len() && c + dc < cost[0].len() {
            best = best.min(exhaustive_dtw(cost, r + dr, c + dc));
        }
    }
    here + best
}

/// Average pairwise `1 - cos` of a group, computed directly.
fn group_cost(f: &[Vec<f64>]) -> f64 {
    let m = f.len();
    if m < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                sum += f[i].iter().zip(&f[j]).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }
    (1.0 - sum / (m * (m - 1)) as f64).max(0.0)
}

fn exhaustive_partition(f: &[Vec<f64>], q: usize) -> f64 {
    fn rec(f: &[Vec<f64>], start: usize, q: usize) -> f64 {
        if q == 1 {
            return group_cost(&f[start..]);
        }
        (start + 1..=f.len() - (q - 1))
            .map(|end| group_cost(&f[start..end]) + rec(f, end, q - 1))
            .fold(f64::INFINITY, f64::min)
    }
    rec(f, 0, q)
}

fn unit_rows(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    n.prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), n))
        .prop_filter("non-zero rows", |rows| rows.iter().all(|r| r.iter().map(|x| x * x).sum::<f64>() > 1e-4))
        .prop_map(|rows| {
            rows.into_iter()
                .map(|r| {
                    let n = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                    r.into_iter().map(|x| x / n).collect()
                })
                .collect()
        })
}

proptest! {
    #[test]
    fn path_is_monotone_and_optimal(m in matrix(1..=5, 12)) {
        let got = shortest_path_align(&ChapterSceneSimilarity::from_matrix(m.clone())).unwrap();
        let a = &got.scene_to_chapter;
        prop_assert_eq!(a[0], 0);
        prop_assert_eq!(*a.last().unwrap(), m.len() - 1);
        prop_assert!(a.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
        let (best, _) = exhaustive_path(&m);
        prop_assert!((got.cost - best).abs() < 1e-9);
    }

    #[test]
    fn constant_shift_keeps_the_path(m in matrix(1..=5, 15), shift in 0.0f64..3.0) {
        let shifted: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|x| x + shift).collect()).collect();
        let a = shortest_path_align(&ChapterSceneSimilarity::from_matrix(m)).unwrap();
        let b = shortest_path_align(&ChapterSceneSimilarity::from_matrix(shifted)).unwrap();
        prop_assert_eq!(a.scene_to_chapter, b.scene_to_chapter);
    }

    #[test]
    fn dtw_equals_exhaustive_search(
        cost in (1usize..=8, 1usize..=8)
            .prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(0.0f64..1.0, c), r)),
    ) {
        let (path, total) = dtw_path(&cost);
        let oracle = exhaustive_dtw(&cost, 0, 0);
        prop_assert!((total - oracle).abs() < 1e-9);
        let sum: f64 = path.iter().map(|&(r, c)| cost[r][c]).sum();
        prop_assert!((sum - total).abs() < 1e-9);
        prop_assert_eq!(path[0], (0, 0));
        prop_assert_eq!(*path.last().unwrap(), (cost.len() - 1, cost[0].len() - 1));
    }

    #[test]
    fn scene_partition_is_optimal_and_ordered(
        (f, q) in unit_rows(1..=14).prop_flat_map(|f| { let n = f.len(); (Just(f), 1..=n.min(4)) }),
    ) {
        let (ends, cost) = partition_shots(&f, q).unwrap();
        prop_assert_eq!(ends.len(), q);
        prop_assert_eq!(*ends.last().unwrap(), f.len());
        prop_assert!(ends.windows(2).all(|w| w[0] < w[1]) && ends[0] > 0);
        let oracle = exhaustive_partition(&f, q);
        prop_assert!((cost - oracle).abs() < 1e-9, "dp {cost} exhaustive {oracle}");

        let mut start = 0;
        let mut uniform = 0.0;
        for k in 0..q {
            let end = (k + 1) * f.len() / q;
            uniform += group_cost(&f[start..end]);
            start = end;
        }
        prop_assert!(cost <= uniform + 1e-9);
    }
}

#[test]
fn block_diagonal_similarity_assigns_two_scenes_per_chapter() {
    let m: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..6).map(|s| if s / 2 == i { 0.9 } else { 0.1 }).collect())
        .collect();
    let got = shortest_path_align(&ChapterSceneSimilarity::from_matrix(m.clone())).unwrap();
    assert_eq!(got.scene_to_chapter, vec![0, 0, 1, 1, 2, 2]);
    assert_eq!(exhaustive_path(&m).1, vec![0, 0, 1, 1, 2, 2]);
}
