//! Dense rank-≤2 tensors with reverse-mode automatic differentiation.
//!
//! A [`Tape`] owns every node of one computation. Ops append nodes and
//! return lightweight [`Var`] handles; [`Tape::backward`] runs the recorded
//! program in reverse, accumulating exact adjoints. Each backward pass uses
//! fresh internal adjoints and then adds them into the persistent per-node
//! gradients, so repeated passes accumulate.
//!
//! Everything is 64-bit: the datasets are desk-scale and double precision
//! makes finite-difference gradient checks decisive. Matrix products go
//! through `matrixmultiply`; all other kernels are straightforward loops.

use crate::rng::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TensorError {
    #[error("shape mismatch in {op}: {details}")]
    ShapeMismatch { op: &'static str, details: String },
    #[error("segment id {id} out of range for {num_segments} segments")]
    InvalidSegmentId { id: usize, num_segments: usize },
    #[error("gather index {id} out of range for {rows} rows")]
    InvalidGatherIndex { id: usize, rows: usize },
    #[error("backward needs a scalar (1x1) loss, got {rows}x{cols}")]
    NotScalar { rows: usize, cols: usize },
    #[error("variable id {0} is not on this tape")]
    DetachedNode(usize),
}

/// Handle to a tape node: an id plus its shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var {
    pub id: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Var {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

enum Op {
    Leaf,
    Matmul(usize, usize),
    Add(usize, usize),
    /// `[m x n] + [1 x n]` broadcast over rows.
    AddRow(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Relu(usize),
    Sigmoid(usize),
    Softplus(usize),
    /// Mask entries are 0 or 1/(1-p), applied multiplicatively.
    Dropout { parent: usize, mask: Vec<f64> },
    Concat { parents: Vec<usize>, axis: usize },
    SegmentSum { parent: usize, ids: Vec<usize> },
    GatherRows { parent: usize, ids: Vec<usize> },
    SumAll(usize),
}

struct Node {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    grad: Vec<f64>,
    op: Op,
}

/// Append-only computation record. Single-threaded by design; run parallel
/// work on separate tapes with copied parameters.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, rows: usize, cols: usize, value: Vec<f64>, op: Op) -> Var {
        debug_assert_eq!(value.len(), rows * cols);
        let id = self.nodes.len();
        self.nodes.push(Node {
            rows,
            cols,
            value,
            grad: vec![0.0; rows * cols],
            op,
        });
        Var { id, rows, cols }
    }

    fn check(&self, v: Var) -> Result<(), TensorError> {
        if v.id >= self.nodes.len() {
            return Err(TensorError::DetachedNode(v.id));
        }
        Ok(())
    }

    /// Tracked input. Gradients accumulate here across backward passes.
    pub fn leaf(&mut self, rows: usize, cols: usize, value: Vec<f64>) -> Var {
        assert_eq!(value.len(), rows * cols, "leaf data does not match shape");
        self.push(rows, cols, value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.id].value
    }

    pub fn grad(&self, v: Var) -> &[f64] {
        &self.nodes[v.id].grad
    }

    pub fn zero_grad(&mut self) {
        for node in &mut self.nodes {
            node.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.check(a)?;
        self.check(b)?;
        if a.cols != b.rows {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                details: format!("{}x{} . {}x{}", a.rows, a.cols, b.rows, b.cols),
            });
        }
        let (m, k, n) = (a.rows, a.cols, b.cols);
        let mut out = vec![0.0; m * n];
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                self.nodes[a.id].value.as_ptr(),
                k as isize,
                1,
                self.nodes[b.id].value.as_ptr(),
                n as isize,
                1,
                0.0,
                out.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        Ok(self.push(m, n, out, Op::Matmul(a.id, b.id)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.check(a)?;
        self.check(b)?;
        if a.rows == b.rows && a.cols == b.cols {
            let value: Vec<f64> = self.nodes[a.id]
                .value
                .iter()
                .zip(&self.nodes[b.id].value)
                .map(|(x, y)| x + y)
                .collect();
            return Ok(self.push(a.rows, a.cols, value, Op::Add(a.id, b.id)));
        }
        if b.rows == 1 && a.cols == b.cols {
            let mut value = self.nodes[a.id].value.clone();
            let brow = &self.nodes[b.id].value;
            for r in 0..a.rows {
                for c in 0..a.cols {
                    value[r * a.cols + c] += brow[c];
                }
            }
            return Ok(self.push(a.rows, a.cols, value, Op::AddRow(a.id, b.id)));
        }
        Err(TensorError::ShapeMismatch {
            op: "add",
            details: format!("{}x{} + {}x{}", a.rows, a.cols, b.rows, b.cols),
        })
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.check(a)?;
        self.check(b)?;
        if a.rows != b.rows || a.cols != b.cols {
            return Err(TensorError::ShapeMismatch {
                op: "sub",
                details: format!("{}x{} - {}x{}", a.rows, a.cols, b.rows, b.cols),
            });
        }
        let value: Vec<f64> = self.nodes[a.id]
            .value
            .iter()
            .zip(&self.nodes[b.id].value)
            .map(|(x, y)| x - y)
            .collect();
        Ok(self.push(a.rows, a.cols, value, Op::Sub(a.id, b.id)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.check(a)?;
        self.check(b)?;
        if a.rows != b.rows || a.cols != b.cols {
            return Err(TensorError::ShapeMismatch {
                op: "mul",
                details: format!("{}x{} * {}x{}", a.rows, a.cols, b.rows, b.cols),
            });
        }
        let value: Vec<f64> = self.nodes[a.id]
            .value
            .iter()
            .zip(&self.nodes[b.id].value)
            .map(|(x, y)| x * y)
            .collect();
        Ok(self.push(a.rows, a.cols, value, Op::Mul(a.id, b.id)))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var, TensorError> {
        self.check(a)?;
        let value: Vec<f64> = self.nodes[a.id].value.iter().map(|x| x * factor).collect();
        Ok(self.push(a.rows, a.cols, value, Op::Scale(a.id, factor)))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var, TensorError> {
        self.check(a)?;
        let value: Vec<f64> = self.nodes[a.id].value.iter().map(|&x| x.max(0.0)).collect();
        Ok(self.push(a.rows, a.cols, value, Op::Relu(a.id)))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, TensorError> {
        self.check(a)?;
        let value: Vec<f64> = self.nodes[a.id].value.iter().map(|&x| sigmoid(x)).collect();
        Ok(self.push(a.rows, a.cols, value, Op::Sigmoid(a.id)))
    }

    /// Numerically-stable `ln(1 + e^x)`.
    pub fn softplus(&mut self, a: Var) -> Result<Var, TensorError> {
        self.check(a)?;
        let value: Vec<f64> = self.nodes[a.id]
            .value
            .iter()
            .map(|&x| x.max(0.0) + (-x.abs()).exp().ln_1p())
            .collect();
        Ok(self.push(a.rows, a.cols, value, Op::Softplus(a.id)))
    }

    /// Inverted dropout: in training mode surviving entries scale by
    /// 1/(1-p) so the expectation is unchanged and inference needs no
    /// rescaling. With `training == false` or `p == 0` this is the identity.
    pub fn dropout(
        &mut self,
        a: Var,
        p: f64,
        training: bool,
        rng: &mut Rng,
    ) -> Result<Var, TensorError> {
        self.check(a)?;
        assert!((0.0..1.0).contains(&p), "dropout probability must be in [0,1)");
        if !training || p == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 - p;
        let mask: Vec<f64> = (0..a.len())
            .map(|_| if rng.next_f64() < p { 0.0 } else { 1.0 / keep })
            .collect();
        let value: Vec<f64> = self.nodes[a.id]
            .value
            .iter()
            .zip(&mask)
            .map(|(x, m)| x * m)
            .collect();
        Ok(self.push(a.rows, a.cols, value, Op::Dropout { parent: a.id, mask }))
    }

    /// Concatenate along `axis` (0 = stack rows, 1 = widen rows).
    pub fn concat(&mut self, axis: usize, parts: &[Var]) -> Result<Var, TensorError> {
        assert!(!parts.is_empty(), "concat of nothing");
        for &p in parts {
            self.check(p)?;
        }
        match axis {
            0 => {
                let cols = parts[0].cols;
                if parts.iter().any(|p| p.cols != cols) {
                    return Err(TensorError::ShapeMismatch {
                        op: "concat",
                        details: "column counts differ".into(),
                    });
                }
                let rows: usize = parts.iter().map(|p| p.rows).sum();
                let mut value = Vec::with_capacity(rows * cols);
                for &p in parts {
                    value.extend_from_slice(&self.nodes[p.id].value);
                }
                Ok(self.push(
                    rows,
                    cols,
                    value,
                    Op::Concat {
                        parents: parts.iter().map(|p| p.id).collect(),
                        axis: 0,
                    },
                ))
            }
            1 => {
                let rows = parts[0].rows;
                if parts.iter().any(|p| p.rows != rows) {
                    return Err(TensorError::ShapeMismatch {
                        op: "concat",
                        details: "row counts differ".into(),
                    });
                }
                let cols: usize = parts.iter().map(|p| p.cols).sum();
                let mut value = vec![0.0; rows * cols];
                let mut offset = 0;
                for &p in parts {
                    let pv = &self.nodes[p.id].value;
                    for r in 0..rows {
                        value[r * cols + offset..r * cols + offset + p.cols]
                            .copy_from_slice(&pv[r * p.cols..(r + 1) * p.cols]);
                    }
                    offset += p.cols;
                }
                Ok(self.push(
                    rows,
                    cols,
                    value,
                    Op::Concat {
                        parents: parts.iter().map(|p| p.id).collect(),
                        axis: 1,
                    },
                ))
            }
            _ => Err(TensorError::ShapeMismatch {
                op: "concat",
                details: format!("axis {axis} out of range"),
            }),
        }
    }

    /// Row-wise scatter-add: `out[ids[i]] += values[i]`.
    pub fn segment_sum(
        &mut self,
        values: Var,
        ids: &[usize],
        num_segments: usize,
    ) -> Result<Var, TensorError> {
        self.check(values)?;
        if ids.len() != values.rows {
            return Err(TensorError::ShapeMismatch {
                op: "segment_sum",
                details: format!("{} ids for {} rows", ids.len(), values.rows),
            });
        }
        for &id in ids {
            if id >= num_segments {
                return Err(TensorError::InvalidSegmentId {
                    id,
                    num_segments,
                });
            }
        }
        let cols = values.cols;
        let mut out = vec![0.0; num_segments * cols];
        let v = &self.nodes[values.id].value;
        for (row, &seg) in ids.iter().enumerate() {
            let src = &v[row * cols..(row + 1) * cols];
            let dst = &mut out[seg * cols..(seg + 1) * cols];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
        Ok(self.push(
            num_segments,
            cols,
            out,
            Op::SegmentSum {
                parent: values.id,
                ids: ids.to_vec(),
            },
        ))
    }

    /// Row gather: `out[i] = values[ids[i]]`.
    pub fn gather_rows(&mut self, values: Var, ids: &[usize]) -> Result<Var, TensorError> {
        self.check(values)?;
        for &id in ids {
            if id >= values.rows {
                return Err(TensorError::InvalidGatherIndex {
                    id,
                    rows: values.rows,
                });
            }
        }
        let cols = values.cols;
        let v = &self.nodes[values.id].value;
        let mut out = vec![0.0; ids.len() * cols];
        for (row, &src) in ids.iter().enumerate() {
            out[row * cols..(row + 1) * cols].copy_from_slice(&v[src * cols..(src + 1) * cols]);
        }
        Ok(self.push(
            ids.len(),
            cols,
            out,
            Op::GatherRows {
                parent: values.id,
                ids: ids.to_vec(),
            },
        ))
    }

    pub fn sum_all(&mut self, a: Var) -> Result<Var, TensorError> {
        self.check(a)?;
        let s: f64 = self.nodes[a.id].value.iter().sum();
        Ok(self.push(1, 1, vec![s], Op::SumAll(a.id)))
    }

    /// Reverse pass from a scalar loss. Adjoints computed in this pass are
    /// added into each node's stored gradient.
    pub fn backward(&mut self, loss: Var) -> Result<(), TensorError> {
        self.check(loss)?;
        if loss.rows != 1 || loss.cols != 1 {
            return Err(TensorError::NotScalar {
                rows: loss.rows,
                cols: loss.cols,
            });
        }

        let mut adj: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.rows * n.cols])
            .collect();
        adj[loss.id][0] = 1.0;

        for id in (0..=loss.id).rev() {
            if adj[id].iter().all(|&g| g == 0.0) {
                continue;
            }
            let upstream = std::mem::take(&mut adj[id]);
            match &self.nodes[id].op {
                Op::Leaf => {
                    adj[id] = upstream;
                    continue;
                }
                Op::Matmul(a, b) => {
                    let (a, b) = (*a, *b);
                    let (m, k) = (self.nodes[a].rows, self.nodes[a].cols);
                    let n = self.nodes[b].cols;
                    unsafe {
                        // dA += dC . B^T
                        matrixmultiply::dgemm(
                            m,
                            n,
                            k,
                            1.0,
                            upstream.as_ptr(),
                            n as isize,
                            1,
                            self.nodes[b].value.as_ptr(),
                            1,
                            n as isize,
                            1.0,
                            adj[a].as_mut_ptr(),
                            k as isize,
                            1,
                        );
                        // dB += A^T . dC
                        matrixmultiply::dgemm(
                            k,
                            m,
                            n,
                            1.0,
                            self.nodes[a].value.as_ptr(),
                            1,
                            k as isize,
                            upstream.as_ptr(),
                            n as isize,
                            1,
                            1.0,
                            adj[b].as_mut_ptr(),
                            n as isize,
                            1,
                        );
                    }
                }
                Op::Add(a, b) => {
                    let (a, b) = (*a, *b);
                    for (g, u) in adj[a].iter_mut().zip(&upstream) {
                        *g += u;
                    }
                    for (g, u) in adj[b].iter_mut().zip(&upstream) {
                        *g += u;
                    }
                }
                Op::AddRow(a, b) => {
                    let (a, b) = (*a, *b);
                    let cols = self.nodes[b].cols;
                    for (g, u) in adj[a].iter_mut().zip(&upstream) {
                        *g += u;
                    }
                    for (i, u) in upstream.iter().enumerate() {
                        adj[b][i % cols] += u;
                    }
                }
                Op::Sub(a, b) => {
                    let (a, b) = (*a, *b);
                    for (g, u) in adj[a].iter_mut().zip(&upstream) {
                        *g += u;
                    }
                    for (g, u) in adj[b].iter_mut().zip(&upstream) {
                        *g -= u;
                    }
                }
                Op::Mul(a, b) => {
                    let (a, b) = (*a, *b);
                    for i in 0..upstream.len() {
                        adj[a][i] += upstream[i] * self.nodes[b].value[i];
                    }
                    for i in 0..upstream.len() {
                        adj[b][i] += upstream[i] * self.nodes[a].value[i];
                    }
                }
                Op::Scale(a, c) => {
                    let (a, c) = (*a, *c);
                    for (g, u) in adj[a].iter_mut().zip(&upstream) {
                        *g += c * u;
                    }
                }
                Op::Relu(a) => {
                    let a = *a;
                    for i in 0..upstream.len() {
                        if self.nodes[a].value[i] > 0.0 {
                            adj[a][i] += upstream[i];
                        }
                    }
                }
                Op::Sigmoid(a) => {
                    let a = *a;
                    for i in 0..upstream.len() {
                        let y = self.nodes[id].value[i];
                        adj[a][i] += upstream[i] * y * (1.0 - y);
                    }
                }
                Op::Softplus(a) => {
                    let a = *a;
                    for i in 0..upstream.len() {
                        adj[a][i] += upstream[i] * sigmoid(self.nodes[a].value[i]);
                    }
                }
                Op::Dropout { parent, mask } => {
                    let parent = *parent;
                    for i in 0..upstream.len() {
                        adj[parent][i] += upstream[i] * mask[i];
                    }
                }
                Op::Concat { parents, axis } => match axis {
                    0 => {
                        let mut row0 = 0;
                        for &p in parents.clone().iter() {
                            let len = self.nodes[p].rows * self.nodes[p].cols;
                            let start = row0;
                            for i in 0..len {
                                adj[p][i] += upstream[start + i];
                            }
                            row0 += len;
                        }
                    }
                    _ => {
                        let cols: usize = self.nodes[id].cols;
                        let rows = self.nodes[id].rows;
                        let mut offset = 0;
                        for &p in parents.clone().iter() {
                            let pc = self.nodes[p].cols;
                            for r in 0..rows {
                                for c in 0..pc {
                                    adj[p][r * pc + c] += upstream[r * cols + offset + c];
                                }
                            }
                            offset += pc;
                        }
                    }
                },
                Op::SegmentSum { parent, ids } => {
                    let parent = *parent;
                    let cols = self.nodes[parent].cols;
                    for (row, &seg) in ids.clone().iter().enumerate() {
                        for c in 0..cols {
                            adj[parent][row * cols + c] += upstream[seg * cols + c];
                        }
                    }
                }
                Op::GatherRows { parent, ids } => {
                    let parent = *parent;
                    let cols = self.nodes[parent].cols;
                    for (row, &src) in ids.clone().iter().enumerate() {
                        for c in 0..cols {
                            adj[parent][src * cols + c] += upstream[row * cols + c];
                        }
                    }
                }
                Op::SumAll(a) => {
                    let a = *a;
                    for g in adj[a].iter_mut() {
                        *g += upstream[0];
                    }
                }
            }
            adj[id] = upstream;
        }

        for (node, a) in self.nodes.iter_mut().zip(adj) {
            for (g, u) in node.grad.iter_mut().zip(a) {
                *g += u;
            }
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central-difference gradient check: builds the graph twice per probe.
    fn grad_check<F>(build: F, leaf_data: &[Vec<(usize, usize)>], seed: u64) -> f64
    where
        F: Fn(&mut Tape, &[Var]) -> Var,
    {
        let mut rng = Rng::new(seed);
        let shapes: Vec<(usize, usize)> = leaf_data.iter().map(|s| s[0]).collect();
        let data: Vec<Vec<f64>> = shapes
            .iter()
            .map(|&(r, c)| (0..r * c).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .collect();

        // Analytic gradients.
        let mut tape = Tape::new();
        let leaves: Vec<Var> = shapes
            .iter()
            .zip(&data)
            .map(|(&(r, c), d)| tape.leaf(r, c, d.clone()))
            .collect();
        let out = build(&mut tape, &leaves);
        let loss = tape.sum_all(out).unwrap();
        tape.backward(loss).unwrap();
        let analytic: Vec<Vec<f64>> = leaves.iter().map(|&v| tape.grad(v).to_vec()).collect();

        // Numeric gradients.
        let eval = |data: &[Vec<f64>]| -> f64 {
            let mut tape = Tape::new();
            let leaves: Vec<Var> = shapes
                .iter()
                .zip(data)
                .map(|(&(r, c), d)| tape.leaf(r, c, d.clone()))
                .collect();
            let out = build(&mut tape, &leaves);
            let loss = tape.sum_all(out).unwrap();
            tape.value(loss)[0]
        };
        let step = 1e-5;
        let mut max_rel = 0.0f64;
        for (li, d) in data.iter().enumerate() {
            for i in 0..d.len() {
                let mut plus = data.to_vec();
                plus[li][i] += step;
                let mut minus = data.to_vec();
                minus[li][i] -= step;
                let numeric = (eval(&plus) - eval(&minus)) / (2.0 * step);
                let a = analytic[li][i];
                let denom = a.abs().max(numeric.abs()).max(1e-8);
                max_rel = max_rel.max((a - numeric).abs() / denom);
            }
        }
        max_rel
    }

    #[test]
    fn relu_forward_and_backward() {
        let mut tape = Tape::new();
        let x = tape.leaf(1, 3, vec![-1.0, 0.0, 2.0]);
        let y = tape.relu(x).unwrap();
        assert_eq!(tape.value(y), &[0.0, 0.0, 2.0]);
        let s = tape.sum_all(y).unwrap();
        tape.backward(s).unwrap();
        // Subgradient at exactly 0 is 0.
        assert_eq!(tape.grad(x), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn segment_sum_forward() {
        let mut tape = Tape::new();
        let x = tape.leaf(3, 1, vec![1.0, 2.0, 3.0]);
        let y = tape.segment_sum(x, &[0, 0, 1], 2).unwrap();
        assert_eq!(tape.value(y), &[3.0, 3.0]);
        let bad = tape.segment_sum(x, &[0, 0, 5], 2);
        assert_eq!(
            bad.unwrap_err(),
            TensorError::InvalidSegmentId { id: 5, num_segments: 2 }
        );
    }

    #[test]
    fn matmul_gradient_matches_finite_differences() {
        let rel = grad_check(
            |tape, leaves| tape.matmul(leaves[0], leaves[1]).unwrap(),
            &[vec![(4, 3)], vec![(3, 2)]],
            1,
        );
        assert!(rel < 1e-6, "max relative error {rel}");
    }

    #[test]
    fn elementwise_op_gradients() {
        for (seed, op) in [(2u64, "mix")] {
            let _ = op;
            let rel = grad_check(
                |tape, leaves| {
                    let a = tape.relu(leaves[0]).unwrap();
                    let b = tape.sigmoid(leaves[1]).unwrap();
                    let c = tape.mul(a, b).unwrap();
                    let d = tape.softplus(c).unwrap();
                    tape.scale(d, 1.7).unwrap()
                },
                &[vec![(3, 4)], vec![(3, 4)]],
                seed,
            );
            assert!(rel < 1e-4, "max relative error {rel}");
        }
    }

    #[test]
    fn randomized_gradient_checks_over_compound_graphs() {
        // 20+ random instances across the op set, as one guardrail.
        let mut worst = 0.0f64;
        for seed in 0..24u64 {
            let rel = grad_check(
                |tape, leaves| {
                    let w = tape.matmul(leaves[0], leaves[1]).unwrap();
                    let s = tape.segment_sum(w, &[0, 1, 0, 1, 2], 3).unwrap();
                    let g = tape.gather_rows(s, &[2, 0, 1, 1, 0]).unwrap();
                    let a = tape.add(g, w).unwrap();
                    let r = tape.relu(a).unwrap();
                    let cat = tape.concat(1, &[r, w]).unwrap();
                    tape.matmul(cat, leaves[2]).unwrap()
                },
                &[vec![(5, 3)], vec![(3, 2)], vec![(4, 3)]],
                100 + seed,
            );
            worst = worst.max(rel);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn bias_broadcast_gradient() {
        let rel = grad_check(
            |tape, leaves| {
                let y = tape.matmul(leaves[0], leaves[1]).unwrap();
                let z = tape.add(y, leaves[2]).unwrap();
                tape.sigmoid(z).unwrap()
            },
            &[vec![(4, 3)], vec![(3, 2)], vec![(1, 2)]],
            7,
        );
        assert!(rel < 1e-4, "max relative error {rel}");
    }

    #[test]
    fn segment_then_gather_adjoint_is_exact() {
        // Linear maps: the adjoint is the transpose, checked by hand.
        let mut tape = Tape::new();
        let x = tape.leaf(4, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let s = tape.segment_sum(x, &[1, 0, 1, 1], 2).unwrap();
        let g = tape.gather_rows(s, &[0, 1, 1]).unwrap();
        let loss = tape.sum_all(g).unwrap();
        tape.backward(loss).unwrap();
        // Row 1 of x feeds segment 0 (gathered once); rows 0,2,3 feed
        // segment 1 (gathered twice).
        assert_eq!(tape.grad(x), &[2.0, 2.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn backward_accumulates_on_repeat() {
        let mut tape = Tape::new();
        let x = tape.leaf(1, 3, vec![1.0, -2.0, 3.0]);
        let loss = tape.sum_all(x).unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x), &[1.0, 1.0, 1.0]);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x), &[2.0, 2.0, 2.0]);
        tape.zero_grad();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_and_detached() {
        let mut tape = Tape::new();
        let x = tape.leaf(2, 2, vec![1.0; 4]);
        assert_eq!(
            tape.backward(x).unwrap_err(),
            TensorError::NotScalar { rows: 2, cols: 2 }
        );
        let ghost = Var { id: 99, rows: 1, cols: 1 };
        assert_eq!(tape.backward(ghost).unwrap_err(), TensorError::DetachedNode(99));
    }

    #[test]
    fn dropout_contract() {
        let mut rng = Rng::new(3);
        let mut tape = Tape::new();
        let x = tape.leaf(1, 1000, vec![1.0; 1000]);
        // p = 0 and eval mode are both the identity (same node).
        let same = tape.dropout(x, 0.0, true, &mut rng).unwrap();
        assert_eq!(same.id, x.id);
        let same = tape.dropout(x, 0.5, false, &mut rng).unwrap();
        assert_eq!(same.id, x.id);
        // Training mode preserves the expectation via 1/(1-p) scaling.
        let dropped = tape.dropout(x, 0.25, true, &mut rng).unwrap();
        let mean: f64 = tape.value(dropped).iter().sum::<f64>() / 1000.0;
        assert!((mean - 1.0).abs() < 0.1, "mean {mean}");
        let kept: Vec<f64> = tape
            .value(dropped)
            .iter()
            .copied()
            .filter(|&v| v != 0.0)
            .collect();
        assert!(kept.iter().all(|&v| (v - 1.0 / 0.75).abs() < 1e-12));
    }

    #[test]
    fn dropout_masks_reproducible_by_stream() {
        let run = |seed, epoch, batch| {
            let mut rng = Rng::stream(seed, &[epoch, batch]);
            let mut tape = Tape::new();
            let x = tape.leaf(1, 64, vec![1.0; 64]);
            let d = tape.dropout(x, 0.3, true, &mut rng).unwrap();
            tape.value(d).to_vec()
        };
        assert_eq!(run(1, 2, 3), run(1, 2, 3));
        assert_ne!(run(1, 2, 3), run(1, 2, 4));
    }

    #[test]
    fn shape_errors() {
        let mut tape = Tape::new();
        let a = tape.leaf(2, 3, vec![0.0; 6]);
        let b = tape.leaf(2, 2, vec![0.0; 4]);
        assert!(matches!(
            tape.matmul(a, b),
            Err(TensorError::ShapeMismatch { .. })
        ));
        assert!(matches!(tape.add(a, b), Err(TensorError::ShapeMismatch { .. })));
        assert!(matches!(
            tape.concat(0, &[a, b]),
            Err(TensorError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn zero_sized_edges_flow_through() {
        // A molecule with no bonds produces 0-row matrices; every op must
        // tolerate them.
        let mut tape = Tape::new();
        let empty = tape.leaf(0, 5, vec![]);
        let w = tape.leaf(5, 4, vec![0.5; 20]);
        let h = tape.matmul(empty, w).unwrap();
        assert_eq!(h.rows, 0);
        let s = tape.segment_sum(h, &[], 3).unwrap();
        assert_eq!(tape.value(s), &[0.0; 12]);
        let loss = tape.sum_all(s).unwrap();
        tape.backward(loss).unwrap();
    }
}
