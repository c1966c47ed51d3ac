//! Fill-reducing orderings on the symmetrized pattern of a square matrix.

use super::CsrMatrix;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

fn symmetric_adjacency(a: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in 0..n {
        for &c in a.neighbors(r) {
            if c != r {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    adj
}

/// Minimum-degree ordering on the elimination graph of A + A^T.
/// Returns `perm` with `perm[k]` = original index eliminated at step k.
/// Ties are broken by the smaller index, so the result is deterministic.
pub fn minimum_degree(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj = symmetric_adjacency(a);
    let mut eliminated = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..n).map(|i| Reverse((adj[i].len(), i))).collect();
    let mut perm = Vec::with_capacity(n);
    let mut mark = vec![usize::MAX; n];
    while let Some(Reverse((deg, v))) = heap.pop() {
        if eliminated[v] || deg != adj[v].len() {
            continue;
        }
        eliminated[v] = true;
        perm.push(v);
        let nbrs = std::mem::take(&mut adj[v]);
        for &u in &nbrs {
            let list = &mut adj[u];
            list.retain(|&w| w != v);
            for &w in list.iter() {
                mark[w] = u;
            }
            for &w in &nbrs {
                if w != u && mark[w] != u {
                    mark[w] = u;
                    list.push(w);
                }
            }
            heap.push(Reverse((list.len(), u)));
        }
    }
    perm
}

/// Reverse Cuthill-McKee ordering, one pseudo-peripheral start per connected component.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj = symmetric_adjacency(a);
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    // Breadth-first sweep returning the lowest-degree node of the deepest level.
    let farthest = |start: usize, seen: &mut Vec<bool>| -> usize {
        let mut q = vec![start];
        seen[start] = true;
        let mut head = 0;
        let mut depth = vec![0usize; n];
        while head < q.len() {
            let v = q[head];
            head += 1;
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    depth[w] = depth[v] + 1;
                    q.push(w);
                }
            }
        }
        let max_depth = q.iter().map(|&v| depth[v]).max().unwrap_or(0);
        for &v in &q {
            seen[v] = false;
        }
        let last = *q
            .iter()
            .filter(|&&v| depth[v] == max_depth)
            .min_by_key(|&&v| (adj[v].len(), v))
            .unwrap();
        last
    };
    for s in 0..n {
        if visited[s] {
            continue;
        }
        let mut seen = visited.clone();
        let far = farthest(s, &mut seen);
        let start = farthest(far, &mut seen);
        let mut q = vec![start];
        visited[start] = true;
        let mut head = 0;
        while head < q.len() {
            let v = q[head];
            head += 1;
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (adj[w].len(), w));
            for w in next {
                visited[w] = true;
                q.push(w);
            }
        }
        order.extend(q);
    }
    order.reverse();
    order
}
