use super::kernels;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddRowBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Relu(Var),
    Square(Var),
    Scale(Var, f64),
    Sum(Var),
    Mean(Var),
    /// Picks `x[r, cols[r]]` for every row `r`.
    GatherRows(Var, Vec<usize>),
    SquaredNorm(Vec<Var>),
    /// Scalar `f(x)` with a precomputed slope `f'(x)`.
    ScalarMap(Var, f64),
    Sqrt(Var),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Ordered record of operations. Node ids are assigned in creation order, so
/// every node's inputs precede it and the backward sweep is a plain reverse
/// iteration.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Adjoints produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Gradient of `v`, or zeros of `len` when the loss does not reach it.
    pub fn get_or_zeros(&self, v: Var, len: usize) -> Vec<f64> {
        self.get(v).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; len])
    }

    /// Adds the gradient of `v` into `target`'s grad buffer.
    pub fn accumulate_into(&self, v: Var, target: &mut Tensor) -> Result<()> {
        let g = self.get_or_zeros(v, target.len());
        target.accumulate_grad(&g)
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Result<Var> {
        value.ensure_finite("tape operation")?;
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Records a differentiable leaf (a parameter).
    pub fn param(&mut self, t: &Tensor) -> Var {
        let mut value = t.clone();
        value.zero_grad();
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records a leaf that receives no gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        let mut value = t;
        value.zero_grad();
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.value(a).dims2()?;
        let (k2, n) = self.value(b).dims2()?;
        if k != k2 {
            return Err(Error::shape(format!(
                "matmul of {m}×{k} by {k2}×{n}: inner dimensions differ"
            )));
        }
        let data = kernels::matmul(self.value(a).data(), self.value(b).data(), m, k, n);
        let rg = self.rg(a) || self.rg(b);
        self.push(Tensor::new(vec![m, n], data)?, Op::MatMul(a, b), rg)
    }

    /// `x[m×n] + bias[n]` broadcast over rows.
    pub fn add_row_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (m, n) = self.value(x).dims2()?;
        if self.value(bias).len() != n {
            return Err(Error::shape(format!(
                "bias of length {} for {m}×{n} input",
                self.value(bias).len()
            )));
        }
        let mut data = self.value(x).data().to_vec();
        kernels::add_row_bias(&mut data, self.value(bias).data());
        let rg = self.rg(x) || self.rg(bias);
        self.push(Tensor::new(vec![m, n], data)?, Op::AddRowBias(x, bias), rg)
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::shape(format!(
                "{what}: shapes {:?} and {:?} differ",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        let rg = self.rg(a) || self.rg(b);
        self.push(Tensor::new(shape, data)?, Op::Add(a, b), rg)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x - y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        let rg = self.rg(a) || self.rg(b);
        self.push(Tensor::new(shape, data)?, Op::Sub(a, b), rg)
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x);
        let out = Tensor::new(v.shape().to_vec(), kernels::relu(v.data()))?;
        let rg = self.rg(x);
        self.push(out, Op::Relu(x), rg)
    }

    pub fn square(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x);
        let out = Tensor::new(v.shape().to_vec(), v.data().iter().map(|a| a * a).collect())?;
        let rg = self.rg(x);
        self.push(out, Op::Square(x), rg)
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var> {
        let v = self.value(x);
        let out = Tensor::new(v.shape().to_vec(), v.data().iter().map(|a| a * c).collect())?;
        let rg = self.rg(x);
        self.push(out, Op::Scale(x, c), rg)
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let s = self.value(x).data().iter().sum();
        let rg = self.rg(x);
        self.push(Tensor::scalar(s), Op::Sum(x), rg)
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x);
        if v.is_empty() {
            return Err(Error::shape("mean of an empty tensor"));
        }
        let s = v.data().iter().sum::<f64>() / v.len() as f64;
        let rg = self.rg(x);
        self.push(Tensor::scalar(s), Op::Mean(x), rg)
    }

    /// Selects one column per row of a matrix, producing a vector.
    pub fn gather_rows(&mut self, x: Var, cols: &[usize]) -> Result<Var> {
        let (m, n) = self.value(x).dims2()?;
        if cols.len() != m {
            return Err(Error::shape(format!(
                "gather with {} indices on {m} rows",
                cols.len()
            )));
        }
        let v = self.value(x).data();
        let mut data = Vec::with_capacity(m);
        for (r, &c) in cols.iter().enumerate() {
            if c >= n {
                return Err(Error::shape(format!("column {c} out of range for width {n}")));
            }
            data.push(v[r * n + c]);
        }
        let rg = self.rg(x);
        self.push(Tensor::vector(data), Op::GatherRows(x, cols.to_vec()), rg)
    }

    /// Σ w² over every entry of every tensor in `params`.
    pub fn squared_l2_norm(&mut self, params: &[Var]) -> Result<Var> {
        if params.is_empty() {
            return Err(Error::domain("squared_l2_norm of an empty parameter list"));
        }
        let s = params.iter().map(|&p| self.value(p).squared_norm()).sum();
        let rg = params.iter().any(|&p| self.rg(p));
        self.push(Tensor::scalar(s), Op::SquaredNorm(params.to_vec()), rg)
    }

    pub fn sqrt(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x).item()?;
        if v <= 0.0 {
            return Err(Error::domain("sqrt of a non-positive scalar"));
        }
        let rg = self.rg(x);
        self.push(Tensor::scalar(v.sqrt()), Op::Sqrt(x), rg)
    }

    /// Records a scalar function whose value and derivative at the current
    /// input were computed elsewhere.
    pub fn scalar_map(&mut self, x: Var, value: f64, slope: f64) -> Result<Var> {
        self.value(x).item()?;
        if !slope.is_finite() {
            return Err(Error::NonFinite("scalar_map slope"));
        }
        let rg = self.rg(x);
        self.push(Tensor::scalar(value), Op::ScalarMap(x, slope), rg)
    }

    /// Propagates d`loss`/d· back through every recorded node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::shape(format!(
                "backward from non-scalar of shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);

        for id in (0..=loss.0).rev() {
            // Leaves keep their adjoint for the caller.
            if matches!(self.nodes[id].op, Op::Leaf) {
                continue;
            }
            let Some(upstream) = grads[id].take() else {
                continue;
            };
            let node = &self.nodes[id];
            if !node.requires_grad {
                continue;
            }
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (m, k) = self.value(*a).dims2()?;
                    let n = self.value(*b).dims2()?.1;
                    if self.rg(*a) {
                        let da = slot(&mut grads, *a, m * k);
                        kernels::matmul_grad_a(&upstream, self.value(*b).data(), da, m, k, n);
                    }
                    if self.rg(*b) {
                        let db = slot(&mut grads, *b, k * n);
                        kernels::matmul_grad_b(self.value(*a).data(), &upstream, db, m, k, n);
                    }
                }
                Op::AddRowBias(x, bias) => {
                    let n = self.value(*bias).len();
                    if self.rg(*x) {
                        add_into(slot(&mut grads, *x, upstream.len()), &upstream);
                    }
                    if self.rg(*bias) {
                        let db = slot(&mut grads, *bias, n);
                        for row in upstream.chunks_exact(n) {
                            add_into(db, row);
                        }
                    }
                }
                Op::Add(a, b) => {
                    for v in [a, b] {
                        if self.rg(*v) {
                            add_into(slot(&mut grads, *v, upstream.len()), &upstream);
                        }
                    }
                }
                Op::Sub(a, b) => {
                    if self.rg(*a) {
                        add_into(slot(&mut grads, *a, upstream.len()), &upstream);
                    }
                    if self.rg(*b) {
                        let db = slot(&mut grads, *b, upstream.len());
                        db.iter_mut().zip(&upstream).for_each(|(d, g)| *d -= g);
                    }
                }
                Op::Relu(x) => {
                    let xs = self.value(*x).data();
                    let dx = slot(&mut grads, *x, xs.len());
                    for ((d, &g), &xv) in dx.iter_mut().zip(&upstream).zip(xs) {
                        if xv > 0.0 {
                            *d += g;
                        }
                    }
                }
                Op::Square(x) => {
                    let xs = self.value(*x).data();
                    let dx = slot(&mut grads, *x, xs.len());
                    for ((d, &g), &xv) in dx.iter_mut().zip(&upstream).zip(xs) {
                        *d += 2.0 * xv * g;
                    }
                }
                Op::Scale(x, c) => {
                    let dx = slot(&mut grads, *x, upstream.len());
                    dx.iter_mut().zip(&upstream).for_each(|(d, g)| *d += c * g);
                }
                Op::Sum(x) => {
                    let n = self.value(*x).len();
                    let g = upstream[0];
                    slot(&mut grads, *x, n).iter_mut().for_each(|d| *d += g);
                }
                Op::Mean(x) => {
                    let n = self.value(*x).len();
                    let g = upstream[0] / n as f64;
                    slot(&mut grads, *x, n).iter_mut().for_each(|d| *d += g);
                }
                Op::GatherRows(x, cols) => {
                    let (m, n) = self.value(*x).dims2()?;
                    let dx = slot(&mut grads, *x, m * n);
                    for (r, (&c, &g)) in cols.iter().zip(&upstream).enumerate() {
                        dx[r * n + c] += g;
                    }
                }
                Op::SquaredNorm(params) => {
                    let g = upstream[0];
                    for &p in params {
                        if !self.rg(p) {
                            continue;
                        }
                        let ws = self.value(p).data();
                        let dp = slot(&mut grads, p, ws.len());
                        for (d, &w) in dp.iter_mut().zip(ws) {
                            *d += 2.0 * w * g;
                        }
                    }
                }
                Op::ScalarMap(x, slope) => {
                    slot(&mut grads, *x, 1)[0] += slope * upstream[0];
                }
                Op::Sqrt(x) => {
                    let y = node.value.data()[0];
                    slot(&mut grads, *x, 1)[0] += upstream[0] / (2.0 * y);
                }
            }
        }
        Ok(Gradients { grads })
    }
}

fn slot(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut [f64] {
    grads[v.0].get_or_insert_with(|| vec![0.0; len])
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}
