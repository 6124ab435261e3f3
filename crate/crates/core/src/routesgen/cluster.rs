//! Density-based clustering of request feature vectors.

pub type Point = [f64; 5];

/// Groups points into clusters of indices; points left out are noise.
pub trait Clusterer: Send + Sync {
    /// Clusters, each sorted ascending, ordered by their smallest index.
    fn cluster(&self, points: &[Point]) -> Vec<Vec<usize>>;
}

fn dist(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

const MIN_DIST: f64 = 1e-9;

/// HDBSCAN: core distances, mutual-reachability minimum spanning tree,
/// condensed cluster tree and excess-of-mass selection. The root may be
/// selected as a single cluster.
#[derive(Debug, Clone, Copy)]
pub struct Hdbscan {
    pub min_cluster_size: usize,
    /// Neighbors counted for the core distance, the point itself included.
    pub min_samples: usize,
}

impl Default for Hdbscan {
    fn default() -> Self {
        Hdbscan { min_cluster_size: 2, min_samples: 2 }
    }
}

struct Condensed {
    parent: usize,
    child: usize,
    lambda: f64,
    size: usize,
}

impl Hdbscan {
    fn core_distances(&self, points: &[Point]) -> Vec<f64> {
        let k = self.min_samples.max(1);
        points
            .iter()
            .map(|p| {
                let mut d: Vec<f64> = points.iter().map(|q| dist(p, q)).collect();
                d.sort_by(f64::total_cmp);
                d[(k - 1).min(d.len() - 1)]
            })
            .collect()
    }

    /// Prim's algorithm on the dense mutual-reachability graph.
    fn mst(&self, points: &[Point]) -> Vec<(usize, usize, f64)> {
        let n = points.len();
        let core = self.core_distances(points);
        let mr = |a: usize, b: usize| dist(&points[a], &points[b]).max(core[a]).max(core[b]);
        let mut in_tree = vec![false; n];
        let mut best = vec![(f64::INFINITY, 0usize); n];
        let mut edges = Vec::with_capacity(n.saturating_sub(1));
        let mut cur = 0;
        in_tree[0] = true;
        for _ in 1..n {
            for v in 0..n {
                if !in_tree[v] {
                    let d = mr(cur, v);
                    if d < best[v].0 {
                        best[v] = (d, cur);
                    }
                }
            }
            let (v, &(d, u)) = best
                .iter()
                .enumerate()
                .filter(|(v, _)| !in_tree[*v])
                .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
                .expect("a vertex remains");
            in_tree[v] = true;
            edges.push((u, v, d));
            cur = v;
        }
        edges.sort_by(|a, b| a.2.total_cmp(&b.2));
        edges
    }

    /// Single-linkage merges as `(left, right, distance, size)`, nodes
    /// `n..2n-1` being the merged clusters.
    fn linkage(n: usize, mst: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64, usize)> {
        let mut parent: Vec<usize> = (0..2 * n).collect();
        let mut size = vec![1usize; 2 * n];
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut out = Vec::with_capacity(n.saturating_sub(1));
        for (i, &(a, b, d)) in mst.iter().enumerate() {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            let node = n + i;
            parent[ra] = node;
            parent[rb] = node;
            size[node] = size[ra] + size[rb];
            out.push((ra, rb, d, size[node]));
        }
        out
    }

    fn condense(&self, n: usize, link: &[(usize, usize, f64, usize)]) -> Vec<Condensed> {
        let root = 2 * n - 2;
        let node_size = |x: usize| if x < n { 1 } else { link[x - n].3 };
        let mut label = vec![usize::MAX; 2 * n - 1];
        let mut next_label = n + 1;
        label[root] = n;
        let mut out = Vec::new();
        let collect_leaves = |x: usize, acc: &mut Vec<usize>| {
            let mut stack = vec![x];
            while let Some(y) = stack.pop() {
                if y < n {
                    acc.push(y);
                } else {
                    stack.push(link[y - n].0);
                    stack.push(link[y - n].1);
                }
            }
        };
        // internal nodes in top-down order
        for node in (n..=root).rev() {
            let cl = label[node];
            if cl == usize::MAX {
                continue;
            }
            let (left, right, d, _) = link[node - n];
            let lambda = 1.0 / d.max(MIN_DIST);
            let (ls, rs) = (node_size(left), node_size(right));
            let big = self.min_cluster_size;
            if ls >= big && rs >= big {
                for (child, s) in [(left, ls), (right, rs)] {
                    label[child] = next_label;
                    out.push(Condensed { parent: cl, child: next_label, lambda, size: s });
                    next_label += 1;
                }
            } else {
                for (child, s) in [(left, ls), (right, rs)] {
                    if s >= big {
                        label[child] = cl;
                    } else {
                        let mut pts = Vec::new();
                        collect_leaves(child, &mut pts);
                        for p in pts {
                            out.push(Condensed { parent: cl, child: p, lambda, size: 1 });
                        }
                    }
                }
            }
        }
        out
    }
}

impl Clusterer for Hdbscan {
    fn cluster(&self, points: &[Point]) -> Vec<Vec<usize>> {
        let n = points.len();
        if n < self.min_cluster_size.max(2) {
            return Vec::new();
        }
        let link = Self::linkage(n, &self.mst(points));
        let tree = self.condense(n, &link);
        let root = n;
        let n_clusters = tree.iter().map(|c| c.child).filter(|&c| c >= n).max().map_or(1, |m| m - n + 1);
        let idx = |c: usize| c - n;

        let mut birth = vec![0.0f64; n_clusters];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
        for c in tree.iter().filter(|c| c.child >= n) {
            birth[idx(c.child)] = c.lambda;
            children[idx(c.parent)].push(c.child);
        }
        let mut stability = vec![0.0f64; n_clusters];
        for c in &tree {
            stability[idx(c.parent)] += (c.lambda - birth[idx(c.parent)]) * c.size as f64;
        }

        // excess of mass, leaves first; cluster labels grow with depth
        let mut selected = vec![false; n_clusters];
        let mut subtree = stability.clone();
        for c in (0..n_clusters).rev() {
            if children[c].is_empty() {
                selected[c] = true;
                continue;
            }
            let sum: f64 = children[c].iter().map(|&k| subtree[idx(k)]).sum();
            if stability[c] >= sum {
                selected[c] = true;
                subtree[c] = stability[c];
                let mut stack = children[c].clone();
                while let Some(k) = stack.pop() {
                    selected[idx(k)] = false;
                    stack.extend(children[idx(k)].iter().copied());
                }
            } else {
                selected[c] = false;
                subtree[c] = sum;
            }
        }

        let mut up = vec![usize::MAX; n_clusters];
        for c in tree.iter().filter(|c| c.child >= n) {
            up[idx(c.child)] = c.parent;
        }
        let root_max = tree.iter().filter(|c| c.parent == root).map(|c| c.lambda).fold(f64::NEG_INFINITY, f64::max);
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
        for c in tree.iter().filter(|c| c.child < n) {
            let mut k = c.parent;
            while !selected[idx(k)] && k != root {
                k = up[idx(k)];
            }
            if !selected[idx(k)] {
                continue;
            }
            if k == root && c.parent == root && c.lambda < root_max {
                continue;
            }
            groups[idx(k)].push(c.child);
        }
        let mut out: Vec<Vec<usize>> = groups.into_iter().filter(|g| g.len() >= self.min_cluster_size).collect();
        for g in &mut out {
            g.sort_unstable();
        }
        out.sort();
        out
    }
}

/// Connected components of the graph joining points closer than `threshold`.
#[derive(Debug, Clone, Copy)]
pub struct SingleLinkage {
    pub threshold: f64,
    pub min_cluster_size: usize,
}

impl Clusterer for SingleLinkage {
    fn cluster(&self, points: &[Point]) -> Vec<Vec<usize>> {
        let n = points.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for a in 0..n {
            for b in a + 1..n {
                if dist(&points[a], &points[b]) <= self.threshold {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        groups.into_values().filter(|g| g.len() >= self.min_cluster_size.max(2)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        [x, y, 0.0, 0.0, 0.0]
    }

    #[test]
    fn too_few_points() {
        let h = Hdbscan::default();
        assert!(h.cluster(&[]).is_empty());
        assert!(h.cluster(&[p(0.0, 0.0)]).is_empty());
    }

    #[test]
    fn identical_pair_is_one_cluster() {
        assert_eq!(Hdbscan::default().cluster(&[p(1.0, 1.0), p(1.0, 1.0)]), vec![vec![0, 1]]);
    }

    #[test]
    fn two_separated_pairs() {
        let pts = [p(0.0, 0.0), p(10.0, 10.0), p(0.1, 0.0), p(10.0, 10.1)];
        assert_eq!(Hdbscan::default().cluster(&pts), vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn outlier_is_noise() {
        let pts = [p(0.0, 0.0), p(0.0, 0.1), p(0.1, 0.0), p(50.0, 50.0)];
        assert_eq!(Hdbscan::default().cluster(&pts), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn three_blobs() {
        let mut pts = Vec::new();
        for (cx, cy) in [(0.0, 0.0), (20.0, 0.0), (0.0, 20.0)] {
            for i in 0..4 {
                pts.push(p(cx + 0.1 * i as f64, cy + 0.05 * (i % 2) as f64));
            }
        }
        let c = Hdbscan::default().cluster(&pts);
        assert_eq!(c, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7], vec![8, 9, 10, 11]]);
    }

    #[test]
    fn single_linkage_threshold() {
        let pts = [p(0.0, 0.0), p(0.5, 0.0), p(5.0, 0.0), p(9.0, 0.0)];
        let s = SingleLinkage { threshold: 1.0, min_cluster_size: 2 };
        assert_eq!(s.cluster(&pts), vec![vec![0, 1]]);
        let wide = SingleLinkage { threshold: 4.5, min_cluster_size: 2 };
        assert_eq!(wide.cluster(&pts), vec![vec![0, 1, 2, 3]]);
    }
}
