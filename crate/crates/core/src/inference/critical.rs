//! Monte Carlo critical values for maxima of studentized linear
//! functionals of a Gaussian vector.
//!
//! Every statistic used here has the form `t = aᵀZ / sd(aᵀZ)` with
//! `Z = L·u`, `u ~ N(0, I)`. Writing `b = Lᵀa / sd` gives `t = bᵀu` with
//! `‖b‖ = 1`, so a critical value is the `(1−α)` quantile of
//! `max_r |b_rᵀ u|` over a fixed set of unit rows. The sup-t statistic
//! uses the `H` rows of the identity model; the PoSI statistic uses every
//! non-degenerate row of every model in the universe.
//!
//! Large universes contain hundreds of thousands of rows, most of them
//! near-duplicates. The maximum per draw is found exactly with a ball
//! tree over the rows and branch-and-bound on `|cᵀu| + r‖u‖`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{order_statistic_index, RngStream, SpdMatrix};
use crate::par;
use crate::path_model::{FittedSurrogate, PathEstimate, Smoother};

/// Draws per RNG block. Blocks are the unit of parallel work; the draw
/// sequence does not depend on how they are scheduled.
const DRAWS_PER_BLOCK: usize = 1024;

pub const MIN_DRAWS: usize = 1000;

pub const DEFAULT_DRAWS: usize = 100_000;

/// Diagonal entries of `V_M` below this multiple of `σ²` are excluded
/// from the PoSI maximum.
pub const DEGENERATE_VARIANCE_RATIO: f64 = 1e-12;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    SupT,
    PoSI,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalValueReport {
    pub value: f64,
    pub n_draws: usize,
    pub alpha: f64,
    pub kind: CriticalKind,
    pub seed: u64,
    pub stream_id: u64,
    /// The simulated maxima, in draw order.
    pub max_statistics: Vec<f64>,
}

/// Unit rows `b_r` (row-major, `dim` columns).
#[derive(Debug, Clone)]
pub struct StudentizedRows {
    dim: usize,
    rows: Vec<f64>,
}

impl StudentizedRows {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.rows[r * self.dim..(r + 1) * self.dim]
    }

    /// Rows `e_hᵀ L / sd_h` of the identity model (the sup-t statistic).
    pub fn identity_model(cov: &SpdMatrix) -> Self {
        let h = cov.dim();
        let l = cov.factor().matrix();
        let mut rows = Vec::with_capacity(h * h);
        for i in 0..h {
            let sd = cov.matrix()[(i, i)].sqrt();
            rows.extend(l.row(i).iter().map(|v| v / sd));
        }
        StudentizedRows { dim: h, rows }
    }

    /// Rows `e_hᵀ P(M) L / √V_M(h,h)` for every model and every
    /// non-degenerate horizon.
    pub fn universe(cov: &SpdMatrix, smoothers: &[Arc<Smoother>]) -> Result<Self> {
        let h = cov.dim();
        let sigma2 = cov.diagonal().sum() / h as f64;
        let threshold = DEGENERATE_VARIANCE_RATIO * sigma2;
        let l = cov.factor().matrix();
        let blocks = par::map_range(smoothers.len(), |m| -> Result<Vec<f64>> {
            let s = &smoothers[m];
            if s.horizon() != h {
                return Err(Error::DimensionMismatch {
                    expected: h,
                    actual: s.horizon(),
                });
            }
            let pl: DMatrix<f64> = &s.projector * l;
            let mut out = Vec::with_capacity(h * h);
            for i in 0..h {
                let var = s.v_m[(i, i)];
                if var < threshold {
                    continue;
                }
                let sd = var.sqrt();
                out.extend(pl.row(i).iter().map(|v| v / sd));
            }
            if out.is_empty() {
                return Err(Error::DegenerateModel { index: m });
            }
            Ok(out)
        });
        let mut rows = Vec::new();
        for b in blocks {
            rows.extend(b?);
        }
        Ok(StudentizedRows { dim: h, rows })
    }

    /// `max_r |b_rᵀ u|` by exhaustive scan.
    pub fn brute_force_max(&self, u: &[f64]) -> f64 {
        self.rows
            .chunks_exact(self.dim)
            .map(|r| dot(r, u).abs())
            .fold(0.0, f64::max)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
    radius: f64,
}

/// Ball tree over sign-canonicalized unit rows.
#[derive(Debug, Clone)]
pub struct RowTree {
    dim: usize,
    rows: Vec<f64>,
    centers: Vec<f64>,
    nodes: Vec<Node>,
}

impl RowTree {
    pub fn build(rows: &StudentizedRows) -> Self {
        let dim = rows.dim;
        let n = rows.len();
        let mut data = rows.rows.clone();
        // |bᵀu| is invariant to b → −b; orient each row so near-duplicates
        // of opposite sign land in the same ball.
        for r in data.chunks_exact_mut(dim) {
            let lead = r.iter().cloned().fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
            if lead < 0.0 {
                r.iter_mut().for_each(|v| *v = -*v);
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut nodes: Vec<Node> = Vec::new();
        let mut centers: Vec<f64> = Vec::new();
        if n > 0 {
            Self::build_node(&data, dim, &mut order, 0, n, &mut nodes, &mut centers);
        }
        let mut sorted = Vec::with_capacity(data.len());
        for &i in &order {
            sorted.extend_from_slice(&data[i * dim..(i + 1) * dim]);
        }
        RowTree {
            dim,
            rows: sorted,
            centers,
            nodes,
        }
    }

    fn build_node(
        data: &[f64],
        dim: usize,
        order: &mut [usize],
        start: usize,
        end: usize,
        nodes: &mut Vec<Node>,
        centers: &mut Vec<f64>,
    ) -> usize {
        let row = |i: usize| &data[i * dim..(i + 1) * dim];
        let ids = &order[start..end];
        let mut c = vec![0.0; dim];
        for &i in ids {
            for (cj, v) in c.iter_mut().zip(row(i)) {
                *cj += v;
            }
        }
        let inv = 1.0 / ids.len() as f64;
        c.iter_mut().for_each(|v| *v *= inv);
        let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        let far_from = |p: &[f64]| -> (usize, f64) {
            ids.iter()
                .map(|&i| (i, dist2(row(i), p)))
                .fold((ids[0], -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
        };
        let (a, r2) = far_from(&c);
        let radius = r2.sqrt();

        let idx = nodes.len();
        nodes.push(Node {
            start,
            end,
            children: None,
            radius,
        });
        centers.extend_from_slice(&c);

        if end - start <= LEAF_SIZE || radius < 1e-12 {
            return idx;
        }
        let pa = row(a).to_vec();
        let (b, _) = far_from(&pa);
        let pb = row(b).to_vec();

        let slice = &mut order[start..end];
        let mut left = 0;
        for j in 0..slice.len() {
            let r = row(slice[j]);
            if dist2(r, &pa) <= dist2(r, &pb) {
                slice.swap(left, j);
                left += 1;
            }
        }
        if left == 0 || left == slice.len() {
            left = slice.len() / 2;
        }
        let mid = start + left;
        let l = Self::build_node(data, dim, order, start, mid, nodes, centers);
        let r = Self::build_node(data, dim, order, mid, end, nodes, centers);
        nodes[idx].children = Some((l, r));
        idx
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn upper_bound(&self, node: usize, u: &[f64], norm_u: f64) -> f64 {
        let c = &self.centers[node * self.dim..(node + 1) * self.dim];
        let b = dot(c, u).abs() + self.nodes[node].radius * norm_u;
        // slack so rounding never prunes a node holding the maximizer
        b * (1.0 + 1e-12) + 1e-12
    }

    /// Exact `max_r |b_rᵀ u|`.
    pub fn max_abs_dot(&self, u: &[f64], stack: &mut Vec<(usize, f64)>) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        let norm_u = dot(u, u).sqrt();
        let mut best = 0.0_f64;
        stack.clear();
        stack.push((0, f64::INFINITY));
        while let Some((n, bound)) = stack.pop() {
            if bound <= best {
                continue;
            }
            let node = &self.nodes[n];
            match node.children {
                None => {
                    for r in self.rows[node.start * self.dim..node.end * self.dim].chunks_exact(self.dim) {
                        best = best.max(dot(r, u).abs());
                    }
                }
                Some((l, r)) => {
                    let bl = self.upper_bound(l, u, norm_u);
                    let br = self.upper_bound(r, u, norm_u);
                    // the child with the larger bound is popped first
                    let (weak, strong) = if bl >= br { ((r, br), (l, bl)) } else { ((l, bl), (r, br)) };
                    if weak.1 > best {
                        stack.push(weak);
                    }
                    if strong.1 > best {
                        stack.push(strong);
                    }
                }
            }
        }
        best
    }
}

/// Simulated `max_r |b_rᵀ u|` for `n_draws` standard normal `u`, drawn
/// block-wise from `rng`'s key.
pub fn simulate_max_statistics(tree: &RowTree, n_draws: usize, rng: &RngStream) -> Vec<f64> {
    let dim = tree.dim;
    let n_blocks = n_draws.div_ceil(DRAWS_PER_BLOCK);
    let blocks = par::map_range(n_blocks, |b| {
        let mut stream = rng.block(b as u64);
        let count = DRAWS_PER_BLOCK.min(n_draws - b * DRAWS_PER_BLOCK);
        let mut u = vec![0.0; dim];
        let mut stack = Vec::with_capacity(64);
        (0..count)
            .map(|_| {
                stream.fill_standard_normal(&mut u);
                tree.max_abs_dot(&u, &mut stack)
            })
            .collect::<Vec<f64>>()
    });
    blocks.concat()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("alpha = {alpha} outside (0, 1)")))
    }
}

fn check_draws(n_draws: usize) -> Result<()> {
    if n_draws >= MIN_DRAWS {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("n_draws = {n_draws} below the minimum {MIN_DRAWS}")))
    }
}

fn report(max_statistics: Vec<f64>, alpha: f64, kind: CriticalKind, rng: &RngStream) -> CriticalValueReport {
    let mut sorted = max_statistics.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let value = sorted[order_statistic_index(sorted.len(), 1.0 - alpha)];
    CriticalValueReport {
        value,
        n_draws: max_statistics.len(),
        alpha,
        kind,
        seed: rng.seed(),
        stream_id: rng.stream_id(),
        max_statistics,
    }
}

/// Sup-t critical value for covariance `cov`. Only the key of `rng` is
/// used; calls with equal keys see identical draws.
pub fn supt_critical_for_cov(cov: &SpdMatrix, alpha: f64, n_draws: usize, rng: &RngStream) -> Result<CriticalValueReport> {
    check_alpha(alpha)?;
    check_draws(n_draws)?;
    let tree = RowTree::build(&StudentizedRows::identity_model(cov));
    Ok(report(simulate_max_statistics(&tree, n_draws, rng), alpha, CriticalKind::SupT, rng))
}

pub fn supt_critical(est: &PathEstimate, alpha: f64, n_draws: usize, rng: &RngStream) -> Result<CriticalValueReport> {
    supt_critical_for_cov(est.cov(), alpha, n_draws, rng)
}

/// PoSI constant over `smoothers` for covariance `cov`.
pub fn posi_constant_for(
    cov: &SpdMatrix,
    smoothers: &[Arc<Smoother>],
    alpha: f64,
    n_draws: usize,
    rng: &RngStream,
) -> Result<CriticalValueReport> {
    check_alpha(alpha)?;
    check_draws(n_draws)?;
    if smoothers.is_empty() {
        return Err(Error::InvalidInput("PoSI constant needs a nonempty universe".into()));
    }
    let tree = RowTree::build(&StudentizedRows::universe(cov, smoothers)?);
    Ok(report(simulate_max_statistics(&tree, n_draws, rng), alpha, CriticalKind::PoSI, rng))
}

pub fn posi_constant(
    est: &PathEstimate,
    universe: &[FittedSurrogate],
    alpha: f64,
    n_draws: usize,
    rng: &RngStream,
) -> Result<CriticalValueReport> {
    let smoothers: Vec<Arc<Smoother>> = universe.iter().map(|s| Arc::clone(s.smoother())).collect();
    posi_constant_for(est.cov(), &smoothers, alpha, n_draws, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path_model::ModelUniverse;

    fn toeplitz(h: usize, rho: f64) -> SpdMatrix {
        SpdMatrix::new(DMatrix::from_fn(h, h, |i, j| rho.powi((i as i32 - j as i32).abs()))).unwrap()
    }

    #[test]
    fn rows_are_unit_norm() {
        let cov = SpdMatrix::new(toeplitz(8, 0.7).matrix() * 0.3).unwrap();
        let u = ModelUniverse::build(&cov, 4).unwrap();
        let rows = StudentizedRows::universe(&cov, u.smoothers()).unwrap();
        for r in 0..rows.len() {
            let n = dot(rows.row(r), rows.row(r)).sqrt();
            assert!((n - 1.0).abs() < 1e-9, "row {r} norm {n}");
        }
    }

    #[test]
    fn tree_max_equals_brute_force() {
        let cov = toeplitz(10, 0.5);
        let u = ModelUniverse::build(&cov, 6).unwrap();
        let rows = StudentizedRows::universe(&cov, u.smoothers()).unwrap();
        let tree = RowTree::build(&rows);
        assert_eq!(tree.len(), rows.len());
        let mut rng = RngStream::new(42, 0);
        let mut stack = Vec::new();
        let mut x = vec![0.0; 10];
        for _ in 0..500 {
            rng.fill_standard_normal(&mut x);
            let fast = tree.max_abs_dot(&x, &mut stack);
            let slow = rows.brute_force_max(&x);
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn draw_blocks_do_not_depend_on_scheduling() {
        let cov = toeplitz(4, 0.2);
        let tree = RowTree::build(&StudentizedRows::identity_model(&cov));
        let rng = RngStream::new(9, 3);
        let a = simulate_max_statistics(&tree, 3000, &rng);
        let b = simulate_max_statistics(&tree, 3000, &rng);
        assert_eq!(a, b);
        // prefix property: the first 2048 draws are shared
        let c = simulate_max_statistics(&tree, 2048, &rng);
        assert_eq!(&a[..2048], &c[..]);
    }

    #[test]
    fn report_value_is_type1_quantile() {
        let cov = toeplitz(3, 0.0);
        let r = supt_critical_for_cov(&cov, 0.05, 2000, &RngStream::new(1, 0)).unwrap();
        let mut s = r.max_statistics.clone();
        s.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(r.value, s[1899]);
        assert_eq!(r.n_draws, 2000);
        assert_eq!(r.kind, CriticalKind::SupT);
    }

    #[test]
    fn argument_checks() {
        let cov = toeplitz(3, 0.0);
        let rng = RngStream::new(1, 0);
        assert!(supt_critical_for_cov(&cov, 0.0, 2000, &rng).is_err());
        assert!(supt_critical_for_cov(&cov, 0.05, 999, &rng).is_err());
        assert!(posi_constant_for(&cov, &[], 0.05, 2000, &rng).is_err());
    }

    #[test]
    fn degenerate_model_is_reported() {
        let cov = toeplitz(5, 0.0);
        let zero = Smoother {
            spec: crate::path_model::ModelSpec::Unrestricted,
            projector: DMatrix::zeros(5, 5),
            v_m: DMatrix::zeros(5, 5),
            df: 0.0,
        };
        let err = StudentizedRows::universe(&cov, &[Arc::new(zero)]).unwrap_err();
        assert_eq!(err, Error::DegenerateModel { index: 0 });
    }
}
