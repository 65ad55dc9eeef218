//! Return probabilities of simple random walks.
//!
//! Scale `k` (1-based, `k = 1..=K`) holds the probability that a walk from
//! vertex `i` is back at `i` after `k + 1` steps, i.e. `diag(P^(k+1))` with
//! `P = D^-1 A`. One-step returns are identically zero on a simple graph, so
//! the scales start at two hops. Isolated vertices have no walk and get 0.

use nalgebra::{DMatrix, RealField, SymmetricEigen};
use num_traits::Float;

use crate::graph_io::Graph;
use crate::{Error, Result, Scalar};

/// Walk length used for 1-based scale `k`.
pub fn hop_of_scale(k: usize) -> usize {
    k + 1
}

/// Per-vertex return probabilities, `n` rows by `K` scales, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureMatrix<T> {
    n: usize,
    scales: usize,
    values: Vec<T>,
}

impl<T: Scalar> SignatureMatrix<T> {
    fn zeros(n: usize, scales: usize) -> Self {
        SignatureMatrix {
            n,
            scales,
            values: vec![T::zero(); n * scales],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scales(&self) -> usize {
        self.scales
    }

    /// Value for vertex `i` at 0-based scale column `col`.
    pub fn get(&self, i: usize, col: usize) -> T {
        self.values[i * self.scales + col]
    }

    fn set(&mut self, i: usize, col: usize, v: T) {
        self.values[i * self.scales + col] = v;
    }

    /// The descriptor of 0-based scale column `col`, one value per vertex.
    pub fn column(&self, col: usize) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, col)).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    /// Reorders rows so that row `perm[i]` of the result is row `i` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let mut out = Self::zeros(self.n, self.scales);
        for i in 0..self.n {
            for c in 0..self.scales {
                out.set(perm[i], c, self.get(i, c));
            }
        }
        out
    }
}

/// Row-stochastic `P = D^-1 A`; zero rows for isolated vertices.
pub fn transition_matrix<T: Scalar + RealField>(g: &Graph) -> DMatrix<T> {
    let n = g.n();
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let d = g.degree()[i];
        if d == 0 {
            continue;
        }
        let w = <T as Float>::recip(T::from_usize_lossy(d));
        for &j in g.neighbors(i) {
            p[(i, j)] = w;
        }
    }
    p
}

fn check_scales(scales: usize) -> Result<()> {
    if scales == 0 {
        Err(Error::arg("number of scales K must be at least 1"))
    } else {
        Ok(())
    }
}

/// Reference path: repeated dense multiplication by `P`.
pub fn return_probabilities_naive<T: Scalar + RealField>(
    g: &Graph,
    scales: usize,
) -> Result<SignatureMatrix<T>> {
    check_scales(scales)?;
    let p = transition_matrix::<T>(g);
    let mut out = SignatureMatrix::zeros(g.n(), scales);
    let mut power = &p * &p;
    for col in 0..scales {
        if col > 0 {
            power = &power * &p;
        }
        for i in 0..g.n() {
            out.set(i, col, power[(i, i)]);
        }
    }
    Ok(out)
}

/// Marks the vertices whose connected component is bipartite.
fn bipartite_vertices(g: &Graph) -> Vec<bool> {
    let mut color = vec![u8::MAX; g.n()];
    let mut out = vec![false; g.n()];
    for s in 0..g.n() {
        if color[s] != u8::MAX {
            continue;
        }
        color[s] = 0;
        let mut members = vec![s];
        let mut ok = true;
        let mut head = 0;
        while head < members.len() {
            let u = members[head];
            head += 1;
            for &w in g.neighbors(u) {
                if color[w] == u8::MAX {
                    color[w] = 1 - color[u];
                    members.push(w);
                } else if color[w] == color[u] {
                    ok = false;
                }
            }
        }
        for v in members {
            out[v] = ok;
        }
    }
    out
}

/// Spectral path: one symmetric eigendecomposition, then `O(n^2)` per scale.
///
/// On the non-isolated vertices `S = D^-1/2 A D^-1/2` is similar to `P`, so
/// `diag(P^h) = diag(S^h) = sum_j lambda_j^h U[i, j]^2`. Vertices of
/// bipartite components have no closed walk of odd length; their odd-hop
/// entries are set to exactly 0 rather than left at rounding noise.
pub fn return_probabilities_spectral<T: Scalar + RealField>(
    g: &Graph,
    scales: usize,
) -> Result<SignatureMatrix<T>> {
    check_scales(scales)?;
    let mut out = SignatureMatrix::zeros(g.n(), scales);
    let active: Vec<usize> = (0..g.n()).filter(|&i| g.degree()[i] > 0).collect();
    if active.is_empty() {
        return Ok(out);
    }
    let mut slot = vec![usize::MAX; g.n()];
    for (a, &v) in active.iter().enumerate() {
        slot[v] = a;
    }
    let inv_sqrt: Vec<T> = active
        .iter()
        .map(|&v| <T as Float>::recip(<T as Float>::sqrt(T::from_usize_lossy(g.degree()[v]))))
        .collect();
    let m = active.len();
    let mut s = DMatrix::<T>::zeros(m, m);
    for &(u, v) in g.edges() {
        let (a, b) = (slot[u], slot[v]);
        let w = inv_sqrt[a] * inv_sqrt[b];
        s[(a, b)] = w;
        s[(b, a)] = w;
    }
    let bipartite = bipartite_vertices(g);
    let eig = SymmetricEigen::new(s);
    let weights = eig.eigenvectors.map(|x| x * x);
    let mut lambda_pow: Vec<T> = eig.eigenvalues.iter().map(|&l| l * l).collect();
    for col in 0..scales {
        if col > 0 {
            for (lp, &l) in lambda_pow.iter_mut().zip(eig.eigenvalues.iter()) {
                *lp *= l;
            }
        }
        let odd_hop = hop_of_scale(col + 1) % 2 == 1;
        for (a, &v) in active.iter().enumerate() {
            if odd_hop && bipartite[v] {
                continue;
            }
            let mut acc = T::zero();
            for (j, &lp) in lambda_pow.iter().enumerate() {
                acc += lp * weights[(a, j)];
            }
            out.set(v, col, Float::min(Float::max(acc, T::zero()), T::one()));
        }
    }
    Ok(out)
}
