//! Limits of determinant ratios `det[f_i(x_j)] / Δ(x)` at coincident or
//! infinite nodes.
//!
//! Every closed form in the crate is a ratio of a determinant built from
//! special-function entries to one or two Vandermonde products. Those
//! ratios are finite when nodes coincide (e.g. `T = I`) but the naive
//! evaluation is `0/0`. The evaluator here replaces each cluster of `p`
//! coincident nodes by the columns `f, f', f''/2!, …, f^{(p−1)}/(p−1)!` and
//! the Vandermonde product by its confluent counterpart
//! `∏_{c<c'} (x_{c'} − x_c)^{p_c p_{c'}}`, which is the finite limit.
//!
//! [`BorderedRatio`] generalises this to two-sided ratios
//! `det[K(x_i, y_j) | border] / (Δ(x) Δ(y))`, which is the shape of every
//! density and MGF formula (kernel block plus monomial/constant borders).

use super::{binomial, det, det_log_scaled, factorial, falling_factorial, Cluster, LogValue, Mat, Spectrum};
use crate::{Error, Result, Scalar, C64};

/// A function of one node with derivative access: `f(x, k) = f^{(k)}(x)`.
///
/// Returns `None` when the requested derivative order is unavailable.
pub type NodeFn<'a, T> = Box<dyn Fn(&T, usize) -> Option<T> + 'a>;

/// A kernel of a row node and a column node with mixed partials:
/// `K(x, a, y, b) = ∂_x^a ∂_y^b K(x, y)`.
pub type KernelFn<'a, T> = Box<dyn Fn(&T, usize, &T, usize) -> Option<T> + 'a>;

/// Converts a real spectrum's clusters to clusters over another scalar.
pub fn clusters_as<T: Scalar>(s: &Spectrum) -> Vec<Cluster<T>> {
    s.clusters()
        .iter()
        .map(|c| Cluster::new(T::from_f64(c.value).expect("finite node"), c.multiplicity))
        .collect()
}

/// Confluent Vandermonde product `∏_{c<c'} (x_{c'} − x_c)^{p_c p_{c'}}`.
///
/// This is the determinant of the Vandermonde matrix whose repeated columns
/// have been replaced by scaled derivative columns `(d/dx)^k x^{i−1} / k!`;
/// with all multiplicities one it is the ordinary `Δ(x)`.
pub fn confluent_vandermonde<T: Scalar>(nodes: &[Cluster<T>]) -> T {
    let mut acc = T::one();
    for (i, ci) in nodes.iter().enumerate() {
        for cj in &nodes[..i] {
            let d = ci.value.clone() - cj.value.clone();
            for _ in 0..(ci.multiplicity * cj.multiplicity) {
                acc = acc * d.clone();
            }
        }
    }
    acc
}

fn total_multiplicity<T>(nodes: &[Cluster<T>]) -> usize {
    nodes.iter().map(|c| c.multiplicity).sum()
}

fn inv_factorial<T: Scalar>(k: usize) -> T {
    T::one() / T::from_f64(factorial(k)).expect("factorial representable")
}

/// Input of the one-sided evaluator: functions `f_i` and (clustered) nodes.
pub struct ConfluentRatioProblem<'a, T> {
    functions: Vec<NodeFn<'a, T>>,
    nodes: Vec<Cluster<T>>,
}

impl<'a, T: Scalar> ConfluentRatioProblem<'a, T> {
    /// Pairs `M` column functions with nodes of total multiplicity `M`.
    pub fn new(functions: Vec<NodeFn<'a, T>>, nodes: Vec<Cluster<T>>) -> Result<Self> {
        let m = total_multiplicity(&nodes);
        if functions.len() != m {
            return Err(Error::DimensionMismatch {
                what: "column functions vs total node multiplicity",
                expected: m,
                found: functions.len(),
            });
        }
        Ok(Self { functions, nodes })
    }

    /// Like [`new`](Self::new) but with nodes that will partly be sent to
    /// infinity: the functions must number `finite multiplicity + p_inf`.
    fn new_with_infinite(functions: Vec<NodeFn<'a, T>>, nodes: Vec<Cluster<T>>, p_inf: usize) -> Result<Self> {
        let m = total_multiplicity(&nodes) + p_inf;
        if functions.len() != m {
            return Err(Error::DimensionMismatch {
                what: "column functions vs finite plus infinite nodes",
                expected: m,
                found: functions.len(),
            });
        }
        Ok(Self { functions, nodes })
    }

    /// Total dimension `M`.
    pub fn dimension(&self) -> usize {
        self.functions.len()
    }

    /// Clustered nodes.
    pub fn nodes(&self) -> &[Cluster<T>] {
        &self.nodes
    }

    /// Matrix with rows = functions and columns = scaled derivative columns
    /// of each cluster (the first `lead` columns are supplied by `leading`).
    fn matrix(&self, lead: usize, leading: impl Fn(usize, usize) -> T) -> Result<Mat<T>> {
        let m = self.functions.len();
        let mut a = Mat::zeros(m, m);
        for i in 0..m {
            for k in 0..lead {
                a[(i, k)] = leading(i, k);
            }
        }
        let mut col = lead;
        for c in &self.nodes {
            for k in 0..c.multiplicity {
                let s: T = inv_factorial(k);
                for (i, f) in self.functions.iter().enumerate() {
                    let v = f(&c.value, k).ok_or(Error::DerivativeUnavailable { function: i, order: k })?;
                    a[(i, col)] = v * s.clone();
                }
                col += 1;
            }
        }
        Ok(a)
    }
}

/// `lim det[f_i(x_j)] / Δ(x)` with coincident nodes resolved confluently.
///
/// Reduces to the plain `det/Δ` when every multiplicity is one.
pub fn confluent_ratio<T: Scalar>(p: &ConfluentRatioProblem<'_, T>) -> Result<T> {
    let a = p.matrix(0, |_, _| T::zero())?;
    let den = confluent_vandermonde(&p.nodes);
    if den.is_zero() {
        return Err(Error::Singular("confluent Vandermonde denominator"));
    }
    Ok(det(&a)? / den)
}

/// Builds the one-sided problem for nodes that include `p_inf` nodes at
/// infinity (see [`asymptotic_ratio`]).
pub fn asymptotic_problem<'a, T: Scalar>(
    functions: Vec<NodeFn<'a, T>>,
    finite_nodes: Vec<Cluster<T>>,
    p_inf: usize,
) -> Result<ConfluentRatioProblem<'a, T>> {
    ConfluentRatioProblem::new_with_infinite(functions, finite_nodes, p_inf)
}

/// Limit of `det[f_i(x_j)] / Δ(x)` when `p_inf` of the nodes go to infinity.
///
/// Each `f_i` must behave as `x^{M−1} Σ_k f̂_i^{(k)} x^{−k}` for large `x`;
/// `tails[i]` lists `f̂_i^{(0)}, f̂_i^{(1)}, …` (at least `p_inf` entries).
/// The infinite nodes' columns become `f̂^{(0)}, …, f̂^{(p_inf−1)}` and the
/// remaining finite nodes are handled confluently.
///
/// The limit carries the sign `(−1)^{p(p−1)/2 + p(M−p)}`: the Vandermonde
/// factors pairing an infinite node with a finite one contribute `−x` each,
/// and reading the leading coefficients off the reciprocal-argument
/// Vandermonde reverses `p` columns. (Checked against direct evaluation at
/// staggered large nodes in the tests.)
pub fn asymptotic_ratio<T: Scalar>(p: &ConfluentRatioProblem<'_, T>, tails: &[Vec<T>], p_inf: usize) -> Result<T> {
    let m = p.dimension();
    if tails.len() != m {
        return Err(Error::DimensionMismatch {
            what: "tail coefficient lists vs functions",
            expected: m,
            found: tails.len(),
        });
    }
    for (i, t) in tails.iter().enumerate() {
        if t.len() < p_inf {
            return Err(Error::InsufficientTail {
                function: i,
                supplied: t.len(),
                required: p_inf,
            });
        }
    }
    if total_multiplicity(&p.nodes) + p_inf != m {
        return Err(Error::DimensionMismatch {
            what: "finite plus infinite nodes vs functions",
            expected: m,
            found: total_multiplicity(&p.nodes) + p_inf,
        });
    }
    let a = p.matrix(p_inf, |i, k| tails[i][k].clone())?;
    let den = confluent_vandermonde(&p.nodes);
    if den.is_zero() {
        return Err(Error::Singular("confluent Vandermonde denominator"));
    }
    let flips = p_inf * p_inf.saturating_sub(1) / 2 + p_inf * (m - p_inf);
    let v = det(&a)? / den;
    Ok(if flips % 2 == 1 { -v } else { v })
}

/// Two-sided bordered ratio
/// `det [[K(x_i, y_j), g_f(x_i)], [h_e(y_j), C_ef]] / (Δ(x) Δ(y))`.
///
/// * rows: the row-node derivative rows, then one extra row per
///   `col_border` function (`h_e`, a function of the column node);
/// * columns: the column-node derivative columns, then one extra column per
///   `row_border` function (`g_f`, a function of the row node);
/// * the corner block `C` (extra rows × extra columns) is constant.
///
/// Coincident nodes on either side are resolved confluently with the
/// `1/k!` scaling, and `Δ` is the confluent Vandermonde of that side (empty
/// side ⇒ 1).
pub struct BorderedRatio<'a, T> {
    /// Row nodes `x`.
    pub row_nodes: Vec<Cluster<T>>,
    /// Column nodes `y`.
    pub col_nodes: Vec<Cluster<T>>,
    /// Kernel block `K(x, y)`; required when both node sets are nonempty.
    pub kernel: Option<KernelFn<'a, T>>,
    /// Extra columns as functions of the row node.
    pub row_border: Vec<NodeFn<'a, T>>,
    /// Extra rows as functions of the column node.
    pub col_border: Vec<NodeFn<'a, T>>,
    /// Constant corner block, `col_border.len() × row_border.len()`.
    pub corner: Mat<T>,
}

impl<'a, T: Scalar> BorderedRatio<'a, T> {
    /// Number of columns contributed by column nodes (they come first).
    pub fn node_column_count(&self) -> usize {
        total_multiplicity(&self.col_nodes)
    }

    /// The derivative-expanded, factorial-scaled matrix.
    pub fn matrix(&self) -> Result<Mat<T>> {
        let nr = total_multiplicity(&self.row_nodes) + self.col_border.len();
        let nc = total_multiplicity(&self.col_nodes) + self.row_border.len();
        if nr != nc {
            return Err(Error::DimensionMismatch {
                what: "bordered ratio rows vs columns",
                expected: nr,
                found: nc,
            });
        }
        if self.corner.rows() != self.col_border.len() || self.corner.cols() != self.row_border.len() {
            return Err(Error::DimensionMismatch {
                what: "bordered ratio corner block",
                expected: self.col_border.len() * self.row_border.len(),
                found: self.corner.rows() * self.corner.cols(),
            });
        }
        let row_labels: Vec<(&T, usize)> = self
            .row_nodes
            .iter()
            .flat_map(|c| (0..c.multiplicity).map(move |a| (&c.value, a)))
            .collect();
        let col_labels: Vec<(&T, usize)> = self
            .col_nodes
            .iter()
            .flat_map(|c| (0..c.multiplicity).map(move |b| (&c.value, b)))
            .collect();
        let (nrn, ncn) = (row_labels.len(), col_labels.len());
        let mut m = Mat::zeros(nr, nc);
        if nrn > 0 && ncn > 0 {
            let k = self
                .kernel
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("bordered ratio needs a kernel".into()))?;
            for (i, &(x, a)) in row_labels.iter().enumerate() {
                let sa: T = inv_factorial(a);
                for (j, &(y, b)) in col_labels.iter().enumerate() {
                    let v = k(x, a, y, b).ok_or(Error::DerivativeUnavailable {
                        function: j,
                        order: a.max(b),
                    })?;
                    m[(i, j)] = v * sa.clone() * inv_factorial(b);
                }
            }
        }
        for (i, &(x, a)) in row_labels.iter().enumerate() {
            let sa: T = inv_factorial(a);
            for (f, g) in self.row_border.iter().enumerate() {
                let v = g(x, a).ok_or(Error::DerivativeUnavailable {
                    function: ncn + f,
                    order: a,
                })?;
                m[(i, ncn + f)] = v * sa.clone();
            }
        }
        for (e, h) in self.col_border.iter().enumerate() {
            for (j, &(y, b)) in col_labels.iter().enumerate() {
                let v = h(y, b).ok_or(Error::DerivativeUnavailable { function: j, order: b })?;
                m[(nrn + e, j)] = v * inv_factorial(b);
            }
            for f in 0..self.row_border.len() {
                m[(nrn + e, ncn + f)] = self.corner[(e, f)].clone();
            }
        }
        Ok(m)
    }

    /// Product of the two confluent Vandermonde denominators.
    pub fn denominator(&self) -> T {
        confluent_vandermonde(&self.row_nodes) * confluent_vandermonde(&self.col_nodes)
    }

    /// The ratio itself.
    pub fn ratio(&self) -> Result<T> {
        let den = self.denominator();
        if den.is_zero() {
            return Err(Error::Singular("confluent Vandermonde denominator"));
        }
        Ok(det(&self.matrix()?)? / den)
    }
}

/// Log-scaled confluent Vandermonde product for complex nodes.
pub fn confluent_vandermonde_log(nodes: &[Cluster<C64>]) -> LogValue {
    let mut acc = LogValue::ONE;
    for (i, ci) in nodes.iter().enumerate() {
        for cj in &nodes[..i] {
            let d = LogValue::from_c64(ci.value - cj.value);
            for _ in 0..(ci.multiplicity * cj.multiplicity) {
                acc = acc.times(d);
            }
        }
    }
    acc
}

impl BorderedRatio<'_, C64> {
    /// The ratio composed in log space with per-column scaled determinant.
    pub fn ratio_log(&self) -> Result<LogValue> {
        let num = det_log_scaled(&self.matrix()?)?;
        let den = confluent_vandermonde_log(&self.row_nodes).times(confluent_vandermonde_log(&self.col_nodes));
        num.try_div(den)
    }
}

/// A run of nearby nodes evaluated as one block of Newton divided
/// differences.
///
/// When nodes are close but not equal, `det/Δ` is a ratio of two tiny
/// numbers and loses every digit the nodes have in common. Replacing the
/// block's rows `f(x_0), f(x_1), …` by the divided differences
/// `f[x_0], f[x_0, x_1], …` divides the determinant by exactly the
/// Vandermonde factors inside the block, so only the well-separated
/// inter-group factors remain in the denominator. The divided differences
/// are summed from Taylor coefficients at the block centre,
/// `f[x_0..x_i] = Σ_{m≥i} f^{(m)}(c)/m! · h_{m−i}(x_0−c, …, x_i−c)`
/// (`h_j` the complete homogeneous symmetric polynomial), which involves no
/// differences of nearly equal numbers. Repeated nodes are the special case
/// of zero spread, where the rows reduce to `f^{(i)}(c)/i!`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeGroup<T> {
    /// Expansion centre (mean of the nodes).
    pub center: T,
    /// Nodes with multiplicities expanded, in input order.
    pub nodes: Vec<T>,
}

/// Relative spread below which [`group_nodes`] joins clusters.
pub const NEAR_NODE_RADIUS: f64 = 0.15;

/// Taylor terms are summed until `C(k+g−1, g−1) q^k` drops below this,
/// with `q` the spread relative to the distance of the centre from zero.
const TAYLOR_TOL: f64 = 1e-17;

/// Hard cap on Taylor terms beyond the group size.
const MAX_TAYLOR_EXTRA: usize = 120;

/// Joins consecutive clusters whose distance to the first cluster of the
/// current group is at most `rel_radius` times the larger magnitude.
/// `rel_radius = 0` reproduces the exact clusters.
pub fn group_nodes<T: Scalar>(clusters: &[Cluster<T>], rel_radius: f64) -> Vec<NodeGroup<T>> {
    let mut groups = Vec::new();
    let mut current: Vec<&Cluster<T>> = Vec::new();
    let flush = |current: &mut Vec<&Cluster<T>>, groups: &mut Vec<NodeGroup<T>>| {
        if current.is_empty() {
            return;
        }
        let nodes: Vec<T> = current
            .iter()
            .flat_map(|c| std::iter::repeat_n(c.value.clone(), c.multiplicity))
            .collect();
        let center = if current.len() == 1 {
            current[0].value.clone()
        } else {
            nodes.iter().cloned().fold(T::zero(), |a, b| a + b) / T::from_int(nodes.len() as i64)
        };
        groups.push(NodeGroup { center, nodes });
        current.clear();
    };
    for c in clusters {
        if let Some(first) = current.first() {
            let scale = first.value.magnitude().max(c.value.magnitude());
            if (first.value.clone() - c.value.clone()).magnitude() > rel_radius * scale {
                flush(&mut current, &mut groups);
            }
        }
        current.push(c);
    }
    flush(&mut current, &mut groups);
    groups
}

impl<T: Scalar> NodeGroup<T> {
    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn shifts(&self) -> Vec<T> {
        self.nodes.iter().map(|x| x.clone() - self.center.clone()).collect()
    }

    /// Number of Taylor coefficients needed at the centre.
    fn taylor_terms(&self) -> Result<usize> {
        let g = self.len();
        let rho = self.shifts().iter().map(Scalar::magnitude).fold(0.0, f64::max);
        if rho == 0.0 {
            return Ok(g);
        }
        let q = rho / self.center.magnitude();
        if !(q < 1.0) {
            return Err(Error::NonConvergence(format!(
                "node group spread {rho:e} reaches the expansion singularity at zero"
            )));
        }
        let mut weight = 1.0;
        for k in 1..=MAX_TAYLOR_EXTRA {
            weight *= q * (k + g - 1) as f64 / k as f64;
            if weight < TAYLOR_TOL {
                return Ok(g + k);
            }
        }
        Err(Error::NonConvergence(format!(
            "Taylor expansion over a node group of relative spread {q:e} needs more than {MAX_TAYLOR_EXTRA} terms"
        )))
    }

    /// `H[i][j] = h_j(u_0, …, u_i)` for `j < terms`.
    fn homogeneous(&self, terms: usize) -> Vec<Vec<T>> {
        let mut prev = vec![T::zero(); terms];
        prev[0] = T::one();
        let mut out = Vec::with_capacity(self.len());
        for u in self.shifts() {
            let mut next = prev.clone();
            for j in 1..terms {
                next[j] = prev[j].clone() + u.clone() * next[j - 1].clone();
            }
            out.push(next.clone());
            prev = next;
        }
        out
    }

    /// `Σ_{m ≥ i} a_m h_{m−i}(u_0..u_i)` for each row `i` of the group.
    fn newton_rows(&self, coeffs: &[T], h: &[Vec<T>]) -> Vec<T> {
        (0..self.len())
            .map(|i| (i..coeffs.len()).fold(T::zero(), |acc, m| acc + coeffs[m].clone() * h[i][m - i].clone()))
            .collect()
    }
}

/// `∏` over node pairs in different groups of `(later − earlier)`: the
/// Vandermonde factors left after the within-group Newton reduction.
pub fn grouped_vandermonde<T: Scalar>(groups: &[NodeGroup<T>]) -> T {
    let mut acc = T::one();
    for (i, gi) in groups.iter().enumerate() {
        for gj in &groups[..i] {
            for x in &gi.nodes {
                for y in &gj.nodes {
                    acc = acc * (x.clone() - y.clone());
                }
            }
        }
    }
    acc
}

/// Log-space [`grouped_vandermonde`] for complex nodes.
pub fn grouped_vandermonde_log(groups: &[NodeGroup<C64>]) -> LogValue {
    let mut acc = LogValue::ONE;
    for (i, gi) in groups.iter().enumerate() {
        for gj in &groups[..i] {
            for x in &gi.nodes {
                for y in &gj.nodes {
                    acc = acc.times(LogValue::from_c64(x - y));
                }
            }
        }
    }
    acc
}

/// Newton-block form of a [`BorderedRatio`]: the matrix and the node groups
/// of each side. `det(matrix) / (grouped_vandermonde(rows) ·
/// grouped_vandermonde(cols))` equals the bordered ratio.
pub struct GroupedMatrix<T> {
    /// Determinant matrix with Newton-block rows and columns.
    pub matrix: Mat<T>,
    /// Row-node groups.
    pub row_groups: Vec<NodeGroup<T>>,
    /// Column-node groups.
    pub col_groups: Vec<NodeGroup<T>>,
}

impl<T: Scalar> GroupedMatrix<T> {
    /// Product of the inter-group Vandermonde factors of both sides.
    pub fn denominator(&self) -> T {
        grouped_vandermonde(&self.row_groups) * grouped_vandermonde(&self.col_groups)
    }
}

impl<'a, T: Scalar> BorderedRatio<'a, T> {
    /// The matrix with nodes closer than `rel_radius` (relative) evaluated as
    /// Newton blocks; see [`NodeGroup`]. Exactly repeated nodes are always
    /// merged, so `rel_radius = 0` gives the same determinant ratio as
    /// [`matrix`](Self::matrix).
    pub fn grouped_matrix(&self, rel_radius: f64) -> Result<GroupedMatrix<T>> {
        let row_groups = group_nodes(&self.row_nodes, rel_radius);
        let col_groups = group_nodes(&self.col_nodes, rel_radius);
        let nrn = total_multiplicity(&self.row_nodes);
        let ncn = total_multiplicity(&self.col_nodes);
        let nr = nrn + self.col_border.len();
        let nc = ncn + self.row_border.len();
        if nr != nc {
            return Err(Error::DimensionMismatch {
                what: "bordered ratio rows vs columns",
                expected: nr,
                found: nc,
            });
        }
        if self.corner.rows() != self.col_border.len() || self.corner.cols() != self.row_border.len() {
            return Err(Error::DimensionMismatch {
                what: "bordered ratio corner block",
                expected: self.col_border.len() * self.row_border.len(),
                found: self.corner.rows() * self.corner.cols(),
            });
        }
        let prep = |groups: &[NodeGroup<T>]| -> Result<Vec<(usize, Vec<Vec<T>>)>> {
            groups
                .iter()
                .map(|g| {
                    let terms = g.taylor_terms()?;
                    Ok((terms, g.homogeneous(terms)))
                })
                .collect()
        };
        let (row_prep, col_prep) = (prep(&row_groups)?, prep(&col_groups)?);
        let mut m = Mat::zeros(nr, nc);
        if nrn > 0 && ncn > 0 {
            let k = self
                .kernel
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("bordered ratio needs a kernel".into()))?;
            let mut r0 = 0;
            for (gx, (tx, hx)) in row_groups.iter().zip(&row_prep) {
                let mut c0 = 0;
                for (gy, (ty, hy)) in col_groups.iter().zip(&col_prep) {
                    // a[m][n] = ∂_x^m ∂_y^n K(c_x, c_y) / (m! n!)
                    let mut a = vec![vec![T::zero(); *ty]; *tx];
                    for (mi, row) in a.iter_mut().enumerate() {
                        for (ni, v) in row.iter_mut().enumerate() {
                            let d = k(&gx.center, mi, &gy.center, ni).ok_or(Error::DerivativeUnavailable {
                                function: c0,
                                order: mi.max(ni),
                            })?;
                            *v = d * inv_factorial(mi) * inv_factorial(ni);
                        }
                    }
                    // Reduce over m for each Newton row, then over n.
                    for i in 0..gx.len() {
                        let b: Vec<T> = (0..*ty)
                            .map(|n| (i..*tx).fold(T::zero(), |acc, mm| acc + a[mm][n].clone() * hx[i][mm - i].clone()))
                            .collect();
                        let row = gy.newton_rows(&b, hy);
                        for (j, v) in row.into_iter().enumerate() {
                            m[(r0 + i, c0 + j)] = v;
                        }
                    }
                    c0 += gy.len();
                }
                r0 += gx.len();
            }
        }
        let mut r0 = 0;
        for (gx, (tx, hx)) in row_groups.iter().zip(&row_prep) {
            for (f, g) in self.row_border.iter().enumerate() {
                let coeffs: Vec<T> = (0..*tx)
                    .map(|mi| {
                        g(&gx.center, mi)
                            .map(|v| v * inv_factorial(mi))
                            .ok_or(Error::DerivativeUnavailable {
                                function: ncn + f,
                                order: mi,
                            })
                    })
                    .collect::<Result<_>>()?;
                for (i, v) in gx.newton_rows(&coeffs, hx).into_iter().enumerate() {
                    m[(r0 + i, ncn + f)] = v;
                }
            }
            r0 += gx.len();
        }
        for (e, h) in self.col_border.iter().enumerate() {
            let mut c0 = 0;
            for (gy, (ty, hy)) in col_groups.iter().zip(&col_prep) {
                let coeffs: Vec<T> = (0..*ty)
                    .map(|ni| {
                        h(&gy.center, ni)
                            .map(|v| v * inv_factorial(ni))
                            .ok_or(Error::DerivativeUnavailable {
                                function: c0,
                                order: ni,
                            })
                    })
                    .collect::<Result<_>>()?;
                for (j, v) in gy.newton_rows(&coeffs, hy).into_iter().enumerate() {
                    m[(nrn + e, c0 + j)] = v;
                }
                c0 += gy.len();
            }
            for f in 0..self.row_border.len() {
                m[(nrn + e, ncn + f)] = self.corner[(e, f)].clone();
            }
        }
        Ok(GroupedMatrix {
            matrix: m,
            row_groups,
            col_groups,
        })
    }
}

/// Mixed partial `∂_x^a ∂_y^b φ(x y)` of a product kernel.
///
/// `phi(n)` must return `φ^{(n)}(x y)`. Uses
/// `∂_x^a [y^b φ^{(b)}(xy)] = Σ_l C(a,l) (b)_{a−l} x^{b−a+l} y^l φ^{(b+l)}(xy)`,
/// where `(b)_{a−l}` is the falling factorial.
pub fn product_kernel_partial<T: Scalar>(
    x: f64,
    a: usize,
    y: f64,
    b: usize,
    mut phi: impl FnMut(usize) -> Option<T>,
) -> Option<T> {
    let mut acc = T::zero();
    for l in 0..=a {
        if a - l > b {
            continue;
        }
        let c = binomial(a, l) * falling_factorial(b, a - l) * x.powi((b + l - a) as i32) * y.powi(l as i32);
        acc = acc + phi(b + l)? * T::from_f64(c)?;
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn powers<'a>(m: usize) -> Vec<NodeFn<'a, f64>> {
        (0..m)
            .map(|i| {
                Box::new(move |x: &f64, k: usize| {
                    if k > i {
                        Some(0.0)
                    } else {
                        Some(factorial(i) / factorial(i - k) * x.powi((i - k) as i32))
                    }
                }) as NodeFn<'a, f64>
            })
            .collect()
    }

    fn exps<'a>(a: &'a [f64]) -> Vec<NodeFn<'a, f64>> {
        a.iter()
            .map(|&ai| Box::new(move |x: &f64, k: usize| Some(ai.powi(k as i32) * (ai * x).exp())) as NodeFn<'a, f64>)
            .collect()
    }

    fn plain_ratio(a: &[f64], x: &[f64]) -> f64 {
        let m = Mat::from_fn(a.len(), x.len(), |i, j| (a[i] * x[j]).exp());
        det(&m).unwrap() / super::super::vandermonde(x)
    }

    #[test]
    fn grouping_joins_only_near_nodes() {
        let c = |v: f64, m: usize| Cluster::new(v, m);
        let g = group_nodes(&[c(3.0, 1), c(1.01, 2), c(1.0, 1), c(0.5, 1)], 0.05);
        assert_eq!(g.len(), 3);
        assert_eq!(g[1].nodes, vec![1.01, 1.01, 1.0]);
        assert!((g[1].center - 3.02 / 3.0).abs() < 1e-15);
        assert_eq!(group_nodes(&[c(1.01, 1), c(1.0, 1)], 0.0).len(), 2);
    }

    #[test]
    fn grouped_ratio_matches_plain_and_survives_near_coincidence() {
        // det[e^{a_i x_j}] / (Δ(a) Δ(x)) with a and x both nearly degenerate.
        let ratio = |a: &[f64], x: &[f64], radius: f64| -> f64 {
            let kernel: KernelFn<'_, f64> = Box::new(|x: &f64, p: usize, y: &f64, q: usize| {
                product_kernel_partial(*x, p, *y, q, |_| Some((x * y).exp()))
            });
            let br = BorderedRatio {
                row_nodes: a.iter().map(|&v| Cluster::new(v, 1)).collect(),
                col_nodes: x.iter().map(|&v| Cluster::new(v, 1)).collect(),
                kernel: Some(kernel),
                row_border: Vec::new(),
                col_border: Vec::new(),
                corner: Mat::zeros(0, 0),
            };
            let gm = br.grouped_matrix(radius).unwrap();
            det(&gm.matrix).unwrap() / gm.denominator()
        };
        let (a, x) = ([1.3, 0.9, 0.4], [2.0, 1.1, 0.3]);
        let plain = ratio(&a, &x, 0.0);
        let direct = {
            let m = Mat::from_fn(3, 3, |i, j| (a[i] * x[j]).exp());
            det(&m).unwrap() / (super::super::vandermonde(&a) * super::super::vandermonde(&x))
        };
        assert!((plain - direct).abs() < 1e-12 * direct.abs());
        assert!((ratio(&a, &x, 0.4) - direct).abs() < 1e-10 * direct.abs());
        // Near-coincident limit: a = 1 ± ε, x = 1 ± ε tends to the confluent value.
        let eps = 1e-7;
        let near = ratio(
            &[1.0 + eps, 1.0, 1.0 - eps],
            &[1.0 + eps, 1.0, 1.0 - eps],
            NEAR_NODE_RADIUS,
        );
        let kernel: KernelFn<'_, f64> = Box::new(|x: &f64, p: usize, y: &f64, q: usize| {
            product_kernel_partial(*x, p, *y, q, |_| Some((x * y).exp()))
        });
        let confluent = BorderedRatio {
            row_nodes: vec![Cluster::new(1.0, 3)],
            col_nodes: vec![Cluster::new(1.0, 3)],
            kernel: Some(kernel),
            row_border: Vec::new(),
            col_border: Vec::new(),
            corner: Mat::zeros(0, 0),
        }
        .ratio()
        .unwrap();
        assert!(
            (near - confluent).abs() < 1e-5 * confluent.abs(),
            "{near} vs {confluent}"
        );
    }

    #[test]
    fn powers_give_one_even_with_repeats() {
        for nodes in [
            vec![Cluster::new(0.7, 1), Cluster::new(1.3, 1), Cluster::new(-2.0, 1)],
            vec![Cluster::new(0.7, 3)],
            vec![Cluster::new(0.7, 2), Cluster::new(2.0, 1)],
        ] {
            let p = ConfluentRatioProblem::new(powers(3), nodes).unwrap();
            assert!((confluent_ratio(&p).unwrap() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn double_node_matches_richardson_oracle() {
        let a = [0.4, 1.1];
        let x0 = 0.8;
        let p = ConfluentRatioProblem::new(exps(&a), vec![Cluster::new(x0, 2)]).unwrap();
        let got = confluent_ratio(&p).unwrap();
        let r = |h: f64| plain_ratio(&a, &[x0, x0 + h]);
        let oracle = 2.0 * r(5e-4) - r(1e-3);
        assert!((got - oracle).abs() <= 1e-6 * oracle.abs(), "{got} vs {oracle}");
    }

    #[test]
    fn mixed_cluster_matches_oracle() {
        let a = [0.4, 1.1, -0.6, 0.9];
        let x0 = 0.5;
        let p = ConfluentRatioProblem::new(
            exps(&a),
            vec![Cluster::new(x0, 2), Cluster::new(1.7, 1), Cluster::new(-0.9, 1)],
        )
        .unwrap();
        let got = confluent_ratio(&p).unwrap();
        let r = |h: f64| plain_ratio(&a, &[x0, x0 + h, 1.7, -0.9]);
        let oracle = 2.0 * r(5e-4) - r(1e-3);
        assert!((got - oracle).abs() <= 1e-6 * oracle.abs(), "{got} vs {oracle}");
    }

    #[test]
    fn dimension_mismatch_and_missing_derivative() {
        assert!(ConfluentRatioProblem::new(powers(2), vec![Cluster::new(1.0, 3)]).is_err());
        let f: Vec<NodeFn<f64>> = vec![
            Box::new(|x: &f64, k| if k == 0 { Some(*x) } else { None }),
            Box::new(|_: &f64, k| if k == 0 { Some(1.0) } else { None }),
        ];
        let p = ConfluentRatioProblem::new(f, vec![Cluster::new(1.0, 2)]).unwrap();
        assert!(matches!(
            confluent_ratio(&p),
            Err(Error::DerivativeUnavailable { order: 1, .. })
        ));
    }

    #[test]
    fn continuity_slope_is_first_order() {
        let a = [0.3, 0.8, 1.4];
        let x0 = 0.6;
        let p = ConfluentRatioProblem::new(exps(&a), vec![Cluster::new(x0, 2), Cluster::new(1.5, 1)]).unwrap();
        let lim = confluent_ratio(&p).unwrap();
        let errs: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&h| (plain_ratio(&a, &[x0, x0 + h, 1.5]) - lim).abs())
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((5.0..20.0).contains(&ratio), "errors {errs:?}");
        }
    }

    #[test]
    fn asymptotic_with_no_infinite_nodes_is_confluent() {
        let a = [0.2, 0.5];
        let nodes = vec![Cluster::new(0.3, 1), Cluster::new(0.9, 1)];
        let p = asymptotic_problem(exps(&a), nodes.clone(), 0).unwrap();
        let tails = vec![vec![], vec![]];
        let q = ConfluentRatioProblem::new(exps(&a), nodes).unwrap();
        assert_eq!(asymptotic_ratio(&p, &tails, 0).unwrap(), confluent_ratio(&q).unwrap());
    }

    #[test]
    fn two_infinite_nodes_polynomial_tails() {
        // f_i(x) = x^2 (c_i0 + c_i1/x + c_i2/x^2) + e^{-x} d_i, M = 3: exact polynomial tails.
        let c = [[1.0, 0.5, -0.3], [0.2, -1.0, 0.7], [0.4, 0.1, 2.0]];
        let d = [0.3, -0.2, 0.5];
        let f = |i: usize, x: f64| c[i][0] * x * x + c[i][1] * x + c[i][2] + d[i] * (-x).exp();
        let funcs: Vec<NodeFn<f64>> = (0..3)
            .map(|i| {
                Box::new(move |x: &f64, k: usize| match k {
                    0 => Some(f(i, *x)),
                    _ => None,
                }) as NodeFn<f64>
            })
            .collect();
        let x3 = 0.8;
        let p = asymptotic_problem(funcs, vec![Cluster::new(x3, 1)], 2).unwrap();
        let tails: Vec<Vec<f64>> = c.iter().map(|r| r.to_vec()).collect();
        let lim = asymptotic_ratio(&p, &tails, 2).unwrap();
        let x = [1e6, 1e7, x3];
        let m = Mat::from_fn(3, 3, |i, j| f(i, x[j]));
        let direct = det(&m).unwrap() / super::super::vandermonde(&x);
        assert!((lim - direct).abs() <= 1e-4 * direct.abs(), "{lim} vs {direct}");
    }

    #[test]
    fn bordered_matches_one_sided_when_rows_are_functions() {
        let a = [0.4, 1.1, -0.3];
        let nodes = vec![Cluster::new(0.2, 2), Cluster::new(1.0, 1)];
        let one = confluent_ratio(&ConfluentRatioProblem::new(exps(&a), nodes.clone()).unwrap()).unwrap();
        let b = BorderedRatio {
            row_nodes: vec![],
            col_nodes: nodes,
            kernel: None,
            row_border: vec![],
            col_border: exps(&a),
            corner: Mat::zeros(3, 0),
        };
        assert!((b.ratio().unwrap() - one).abs() < 1e-13);
    }

    #[test]
    fn two_sided_exponential_kernel_confluent_both_sides() {
        // det[e^{x_i y_j}]/(Δ(x)Δ(y)) at x = y = (0,0) equals 1 (HCIZ at the origin).
        let k: KernelFn<f64> = Box::new(|x: &f64, a, y: &f64, b| {
            // ∂x^a ∂y^b e^{xy} evaluated by its series at the point.
            let mut s = 0.0;
            for n in a.max(b)..40 {
                let c = factorial(n) / factorial(n - a) * factorial(n) / factorial(n - b) / factorial(n);
                s += c * x.powi((n - a) as i32) * y.powi((n - b) as i32);
            }
            Some(s)
        });
        let b = BorderedRatio {
            row_nodes: vec![Cluster::new(0.0, 2)],
            col_nodes: vec![Cluster::new(0.0, 2)],
            kernel: Some(k),
            row_border: vec![],
            col_border: vec![],
            corner: Mat::zeros(0, 0),
        };
        assert!((b.ratio().unwrap() - 1.0).abs() < 1e-14);
    }
}
