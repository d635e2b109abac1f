//! Dense reference implementation used only by tests: builds `Â`, `f(A)` and
//! `RowNorm(f(A)) L` as full matrices straight from an edge list.

#![allow(dead_code)]

pub type Mat = Vec<Vec<f64>>;

pub fn zeros(n: usize, m: usize) -> Mat {
    vec![vec![0.0; m]; n]
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut out = zeros(n, m);
    for i in 0..n {
        for t in 0..k {
            if a[i][t] == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += a[i][t] * b[t][j];
            }
        }
    }
    out
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}`.
pub fn normalized_adjacency(n: usize, edges: &[(usize, usize)]) -> Mat {
    let mut a = zeros(n, n);
    for &(u, v) in edges {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let deg: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    for i in 0..n {
        for j in 0..n {
            a[i][j] /= (deg[i] * deg[j]).sqrt();
        }
    }
    a
}

pub fn filter_matrix(n: usize, edges: &[(usize, usize)], gamma: &[f64]) -> Mat {
    let a = normalized_adjacency(n, edges);
    let mut power = zeros(n, n);
    for (i, row) in power.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut f = zeros(n, n);
    for &g in gamma {
        for i in 0..n {
            for j in 0..n {
                f[i][j] += g * power[i][j];
            }
        }
        power = matmul(&a, &power);
    }
    f
}

pub fn row_normalize(m: &Mat) -> Mat {
    m.iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|x| x / s).collect()
        })
        .collect()
}

/// Per-node `I(v)` for hard labels.
pub fn influences(n: usize, edges: &[(usize, usize)], gamma: &[f64], labels: &[usize], c: usize) -> Vec<f64> {
    let f = row_normalize(&filter_matrix(n, edges, gamma));
    let mut l = zeros(n, c);
    for (v, &y) in labels.iter().enumerate() {
        l[v][y] = 1.0;
    }
    let lbar = matmul(&f, &l);
    (0..n).map(|v| lbar[v][labels[v]]).collect()
}

/// Compatibility over `target`; `None` when a target is isolated and lambda > 0.
pub fn compatibility(
    n: usize,
    edges: &[(usize, usize)],
    gamma: &[f64],
    labels: &[usize],
    c: usize,
    target: &[usize],
    lambda: f64,
) -> Option<f64> {
    let i = influences(n, edges, gamma, labels, c);
    let mut deg = vec![0usize; n];
    for &(u, v) in edges {
        deg[u] += 1;
        deg[v] += 1;
    }
    let mut total = 0.0;
    for &v in target {
        total += i[v];
        if lambda > 0.0 {
            if deg[v] == 0 {
                return None;
            }
            total -= lambda / deg[v] as f64;
        }
    }
    Some(total)
}

/// `C(A without edge) - C(A)` by dense recomputation.
#[allow(clippy::too_many_arguments)]
pub fn topoinf(
    n: usize,
    edges: &[(usize, usize)],
    remove: (usize, usize),
    gamma: &[f64],
    labels: &[usize],
    c: usize,
    target: &[usize],
    lambda: f64,
) -> Option<f64> {
    let kept: Vec<_> = edges.iter().copied().filter(|&e| e != remove).collect();
    Some(
        compatibility(n, &kept, gamma, labels, c, target, lambda)?
            - compatibility(n, edges, gamma, labels, c, target, lambda)?,
    )
}
