//! Scalar tape with reverse-mode gradients and exact Hessian-vector
//! products.
//!
//! A [`Tape`] is a fixed, topologically ordered list of primitive scalar
//! operations with one scalar output. It is built once per objective
//! structure and re-evaluated with new parameter (and per-example data)
//! values; the graph is never mutated during optimization.
//!
//! Gradients come from a single reverse sweep. Hessian-vector products run
//! the *same* forward and reverse sweeps in [`Dual`] arithmetic
//! (forward-over-reverse): parameters carry tangent `v`, and the tangent
//! part of the accumulated gradient is exactly `H v`. One reverse pass,
//! cost a small constant times the gradient.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::Float;

use crate::error::{Error, Result};
use crate::numkit::Vector;
use crate::scalar::Real;

/// Handle to a node in a [`TapeBuilder`]; only valid for the tape it came
/// from.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Clone, Debug)]
enum Op<R> {
    Const(R),
    Param(usize),
    /// Per-evaluation data slot (batch features, targets); constant with
    /// respect to differentiation.
    Input(usize),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Neg(NodeId),
    Exp(NodeId),
    Log(NodeId),
    Tanh(NodeId),
    /// max(x, 0); the derivative at exactly 0 is defined as 0.
    Relu(NodeId),
    /// Power with a constant exponent.
    Pow(NodeId, R),
    Sum(Vec<NodeId>),
    Dot(Vec<NodeId>, Vec<NodeId>),
}

/// First-order dual number; arithmetic satisfies the chain rule exactly
/// for every primitive the tape supports.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Dual<R> {
    pub re: R,
    pub du: R,
}

impl<R: Real> Dual<R> {
    pub fn new(re: R, du: R) -> Self {
        Dual { re, du }
    }

    pub fn constant(re: R) -> Self {
        Dual { re, du: R::zero() }
    }
}

impl<R: Real> Add for Dual<R> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.du + o.du)
    }
}

impl<R: Real> Sub for Dual<R> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.du - o.du)
    }
}

impl<R: Real> Mul for Dual<R> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.du + self.du * o.re)
    }
}

impl<R: Real> Div for Dual<R> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.re / o.re;
        Dual::new(q, (self.du - q * o.du) / o.re)
    }
}

impl<R: Real> Neg for Dual<R> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.du)
    }
}

/// Scalar type the sweeps are generic over: the working real type for
/// values/gradients, and [`Dual`] for Hessian-vector products.
pub trait AdScalar<R: Real>:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_real(r: R) -> Self;
    fn zero() -> Self {
        Self::from_real(R::zero())
    }
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn tanh(self) -> Self;
    fn relu(self) -> Self;
    /// Local derivative factor of `relu`: 1 on the positive side, 0 at and
    /// below zero. Piecewise constant, so its tangent part is zero.
    fn relu_factor(self) -> Self;
    fn powc(self, c: R) -> Self;
    fn is_finite(self) -> bool;
    fn is_zero(self) -> bool;
}

impl<R: Real> AdScalar<R> for R {
    fn from_real(r: R) -> Self {
        r
    }
    fn exp(self) -> Self {
        Float::exp(self)
    }
    fn ln(self) -> Self {
        Float::ln(self)
    }
    fn tanh(self) -> Self {
        Float::tanh(self)
    }
    fn relu(self) -> Self {
        self.max(R::zero())
    }
    fn relu_factor(self) -> Self {
        if self > R::zero() {
            R::one()
        } else {
            R::zero()
        }
    }
    fn powc(self, c: R) -> Self {
        Float::powf(self, c)
    }
    fn is_finite(self) -> bool {
        Float::is_finite(self)
    }
    fn is_zero(self) -> bool {
        self == R::zero()
    }
}

impl<R: Real> AdScalar<R> for Dual<R> {
    fn from_real(r: R) -> Self {
        Dual::constant(r)
    }
    fn exp(self) -> Self {
        let e = Float::exp(self.re);
        Dual::new(e, e * self.du)
    }
    fn ln(self) -> Self {
        Dual::new(Float::ln(self.re), self.du / self.re)
    }
    fn tanh(self) -> Self {
        let t = Float::tanh(self.re);
        Dual::new(t, (R::one() - t * t) * self.du)
    }
    fn relu(self) -> Self {
        if self.re > R::zero() {
            self
        } else {
            Dual::constant(R::zero())
        }
    }
    fn relu_factor(self) -> Self {
        Dual::constant(if self.re > R::zero() {
            R::one()
        } else {
            R::zero()
        })
    }
    fn powc(self, c: R) -> Self {
        let v = Float::powf(self.re, c);
        Dual::new(v, c * Float::powf(self.re, c - R::one()) * self.du)
    }
    fn is_finite(self) -> bool {
        Float::is_finite(self.re) && Float::is_finite(self.du)
    }
    fn is_zero(self) -> bool {
        self.re == R::zero() && self.du == R::zero()
    }
}

/// Incrementally records operations; node inputs always precede the node,
/// so the finished tape is topologically ordered by construction.
pub struct TapeBuilder<R> {
    n_params: usize,
    n_inputs: usize,
    nodes: Vec<Op<R>>,
}

impl<R: Real> TapeBuilder<R> {
    pub fn new(n_params: usize, n_inputs: usize) -> Self {
        TapeBuilder {
            n_params,
            n_inputs,
            nodes: Vec::new(),
        }
    }

    fn push(&mut self, op: Op<R>) -> NodeId {
        self.nodes.push(op);
        NodeId(self.nodes.len() - 1)
    }

    fn check(&self, id: NodeId) {
        assert!(id.0 < self.nodes.len(), "node id from another tape");
    }

    pub fn constant(&mut self, c: R) -> NodeId {
        self.push(Op::Const(c))
    }

    pub fn param(&mut self, i: usize) -> NodeId {
        assert!(i < self.n_params, "parameter index out of range");
        self.push(Op::Param(i))
    }

    pub fn input(&mut self, i: usize) -> NodeId {
        assert!(i < self.n_inputs, "input index out of range");
        self.push(Op::Input(i))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.check(a);
        self.check(b);
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.check(a);
        self.check(b);
        self.push(Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.check(a);
        self.check(b);
        self.push(Op::Mul(a, b))
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.check(a);
        self.check(b);
        self.push(Op::Div(a, b))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        self.check(a);
        self.push(Op::Neg(a))
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        self.check(a);
        self.push(Op::Exp(a))
    }

    pub fn log(&mut self, a: NodeId) -> NodeId {
        self.check(a);
        self.push(Op::Log(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.check(a);
        self.push(Op::Tanh(a))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.check(a);
        self.push(Op::Relu(a))
    }

    pub fn pow(&mut self, a: NodeId, c: R) -> NodeId {
        self.check(a);
        self.push(Op::Pow(a, c))
    }

    pub fn sum(&mut self, ids: &[NodeId]) -> NodeId {
        for &id in ids {
            self.check(id);
        }
        self.push(Op::Sum(ids.to_vec()))
    }

    pub fn dot(&mut self, a: &[NodeId], b: &[NodeId]) -> NodeId {
        assert_eq!(a.len(), b.len(), "dot: length mismatch");
        for &id in a.iter().chain(b) {
            self.check(id);
        }
        self.push(Op::Dot(a.to_vec(), b.to_vec()))
    }

    pub fn finish(self, output: NodeId) -> Tape<R> {
        assert!(output.0 < self.nodes.len(), "output id from another tape");
        Tape {
            n_params: self.n_params,
            n_inputs: self.n_inputs,
            nodes: self.nodes,
            output,
        }
    }
}

/// Reusable evaluation buffers; one per caller keeps concurrent evaluation
/// of a shared tape safe.
#[derive(Default)]
pub struct Workspace<R: Real> {
    real_values: Vec<R>,
    real_adjoints: Vec<R>,
    dual_values: Vec<Dual<R>>,
    dual_adjoints: Vec<Dual<R>>,
    param_buf: Vec<Dual<R>>,
    input_buf: Vec<Dual<R>>,
}

impl<R: Real> Workspace<R> {
    pub fn new() -> Self {
        Workspace {
            real_values: Vec::new(),
            real_adjoints: Vec::new(),
            dual_values: Vec::new(),
            dual_adjoints: Vec::new(),
            param_buf: Vec::new(),
            input_buf: Vec::new(),
        }
    }
}

/// Immutable computation graph with a single scalar output.
#[derive(Clone, Debug)]
pub struct Tape<R> {
    n_params: usize,
    n_inputs: usize,
    nodes: Vec<Op<R>>,
    output: NodeId,
}

impl<R: Real> Tape<R> {
    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn check_dims(&self, x: &[R], data: &[R]) -> Result<()> {
        if x.len() != self.n_params {
            return Err(Error::DimMismatch {
                context: "tape parameters",
                expected: self.n_params,
                got: x.len(),
            });
        }
        if data.len() != self.n_inputs {
            return Err(Error::DimMismatch {
                context: "tape inputs",
                expected: self.n_inputs,
                got: data.len(),
            });
        }
        Ok(())
    }

    /// Deterministic forward evaluation. NaN/Inf propagate through the
    /// sweep and are flagged on the output.
    pub fn value(&self, x: &Vector<R>, data: &[R]) -> Result<R> {
        self.check_dims(x.as_slice(), data)?;
        let mut values = Vec::new();
        let v = self.forward::<R>(x.as_slice(), data, &mut values);
        if !AdScalar::<R>::is_finite(v) {
            return Err(Error::non_finite("tape value"));
        }
        Ok(v)
    }

    /// Value and gradient in one reverse sweep.
    pub fn value_grad(&self, x: &Vector<R>, data: &[R]) -> Result<(R, Vector<R>)> {
        self.check_dims(x.as_slice(), data)?;
        let mut ws = Workspace::new();
        let mut grad = vec![R::zero(); self.n_params];
        let v = self.grad_into(x.as_slice(), data, R::one(), &mut grad, &mut ws)?;
        let grad = Vector::from_vec(grad);
        if !Float::is_finite(v) || !grad.all_finite() {
            return Err(Error::non_finite("tape gradient"));
        }
        Ok((v, grad))
    }

    pub fn grad(&self, x: &Vector<R>, data: &[R]) -> Result<Vector<R>> {
        Ok(self.value_grad(x, data)?.1)
    }

    /// Exact `H(x) v` by running the reverse sweep in dual arithmetic.
    pub fn hvp(&self, x: &Vector<R>, v: &Vector<R>, data: &[R]) -> Result<Vector<R>> {
        self.check_dims(x.as_slice(), data)?;
        if v.len() != self.n_params {
            return Err(Error::DimMismatch {
                context: "tape hvp direction",
                expected: self.n_params,
                got: v.len(),
            });
        }
        let mut ws = Workspace::new();
        let mut out = vec![R::zero(); self.n_params];
        self.hvp_into(x.as_slice(), v.as_slice(), data, R::one(), &mut out, &mut ws)?;
        let out = Vector::from_vec(out);
        if !out.all_finite() {
            return Err(Error::non_finite("tape hvp"));
        }
        Ok(out)
    }

    /// Forward value using caller-owned buffers; flags a non-finite result.
    pub fn value_with(&self, x: &[R], data: &[R], ws: &mut Workspace<R>) -> Result<R> {
        self.check_dims(x, data)?;
        let v = self.forward::<R>(x, data, &mut ws.real_values);
        if !AdScalar::<R>::is_finite(v) {
            return Err(Error::non_finite("tape value"));
        }
        Ok(v)
    }

    /// Accumulate `weight * grad` into `out`; returns the value. Finiteness
    /// of the accumulated gradient is the caller's check (non-finite
    /// contributions cannot cancel back to finite).
    pub fn grad_into(
        &self,
        x: &[R],
        data: &[R],
        weight: R,
        out: &mut [R],
        ws: &mut Workspace<R>,
    ) -> Result<R> {
        self.check_dims(x, data)?;
        assert_eq!(out.len(), self.n_params);
        let value = self.forward::<R>(x, data, &mut ws.real_values);
        if !AdScalar::<R>::is_finite(value) {
            return Err(Error::non_finite("tape value"));
        }
        let values = std::mem::take(&mut ws.real_values);
        self.backward::<R>(&values, &mut ws.real_adjoints, |i, adj| {
            out[i] += weight * adj;
        });
        ws.real_values = values;
        Ok(value)
    }

    /// Accumulate `weight * H v` into `out`.
    pub fn hvp_into(
        &self,
        x: &[R],
        v: &[R],
        data: &[R],
        weight: R,
        out: &mut [R],
        ws: &mut Workspace<R>,
    ) -> Result<()> {
        self.check_dims(x, data)?;
        assert_eq!(v.len(), self.n_params);
        assert_eq!(out.len(), self.n_params);

        ws.param_buf.clear();
        ws.param_buf
            .extend(x.iter().zip(v).map(|(&xi, &vi)| Dual::new(xi, vi)));
        ws.input_buf.clear();
        ws.input_buf.extend(data.iter().map(|&d| Dual::constant(d)));

        let params = std::mem::take(&mut ws.param_buf);
        let inputs = std::mem::take(&mut ws.input_buf);
        let value = self.forward::<Dual<R>>(&params, &inputs, &mut ws.dual_values);
        if !Float::is_finite(value.re) {
            ws.param_buf = params;
            ws.input_buf = inputs;
            return Err(Error::non_finite("tape value"));
        }
        let values = std::mem::take(&mut ws.dual_values);
        self.backward::<Dual<R>>(&values, &mut ws.dual_adjoints, |i, adj| {
            out[i] += weight * adj.du;
        });
        ws.dual_values = values;
        ws.param_buf = params;
        ws.input_buf = inputs;
        Ok(())
    }

    fn forward<A: AdScalar<R>>(&self, params: &[A], data: &[A], values: &mut Vec<A>) -> A {
        values.clear();
        values.reserve(self.nodes.len());
        for op in &self.nodes {
            let v = match op {
                Op::Const(c) => A::from_real(*c),
                Op::Param(i) => params[*i],
                Op::Input(i) => data[*i],
                Op::Add(a, b) => values[a.0] + values[b.0],
                Op::Sub(a, b) => values[a.0] - values[b.0],
                Op::Mul(a, b) => values[a.0] * values[b.0],
                Op::Div(a, b) => values[a.0] / values[b.0],
                Op::Neg(a) => -values[a.0],
                Op::Exp(a) => values[a.0].exp(),
                Op::Log(a) => values[a.0].ln(),
                Op::Tanh(a) => values[a.0].tanh(),
                Op::Relu(a) => values[a.0].relu(),
                Op::Pow(a, c) => values[a.0].powc(*c),
                Op::Sum(ids) => ids.iter().fold(A::zero(), |acc, id| acc + values[id.0]),
                Op::Dot(xs, ys) => xs
                    .iter()
                    .zip(ys)
                    .fold(A::zero(), |acc, (a, b)| acc + values[a.0] * values[b.0]),
            };
            values.push(v);
        }
        values[self.output.0]
    }

    fn backward<A: AdScalar<R>>(
        &self,
        values: &[A],
        adjoints: &mut Vec<A>,
        mut sink: impl FnMut(usize, A),
    ) {
        adjoints.clear();
        adjoints.resize(self.nodes.len(), A::zero());
        adjoints[self.output.0] = A::from_real(R::one());

        for (k, op) in self.nodes.iter().enumerate().rev() {
            let adj = adjoints[k];
            if adj.is_zero() {
                continue;
            }
            match op {
                Op::Const(_) | Op::Input(_) => {}
                Op::Param(i) => sink(*i, adj),
                Op::Add(a, b) => {
                    adjoints[a.0] = adjoints[a.0] + adj;
                    adjoints[b.0] = adjoints[b.0] + adj;
                }
                Op::Sub(a, b) => {
                    adjoints[a.0] = adjoints[a.0] + adj;
                    adjoints[b.0] = adjoints[b.0] - adj;
                }
                Op::Mul(a, b) => {
                    adjoints[a.0] = adjoints[a.0] + adj * values[b.0];
                    adjoints[b.0] = adjoints[b.0] + adj * values[a.0];
                }
                Op::Div(a, b) => {
                    adjoints[a.0] = adjoints[a.0] + adj / values[b.0];
                    adjoints[b.0] = adjoints[b.0] - adj * values[k] / values[b.0];
                }
                Op::Neg(a) => {
                    adjoints[a.0] = adjoints[a.0] - adj;
                }
                Op::Exp(a) => {
                    adjoints[a.0] = adjoints[a.0] + adj * values[k];
                }
                Op::Log(a) => {
                    adjoints[a.0] = adjoints[a.0] + adj / values[a.0];
                }
                Op::Tanh(a) => {
                    let t = values[k];
                    let one = A::from_real(R::one());
                    adjoints[a.0] = adjoints[a.0] + adj * (one - t * t);
                }
                Op::Relu(a) => {
                    adjoints[a.0] = adjoints[a.0] + adj * values[a.0].relu_factor();
                }
                Op::Pow(a, c) => {
                    let factor = values[a.0].powc(*c - R::one());
                    adjoints[a.0] = adjoints[a.0] + adj * A::from_real(*c) * factor;
                }
                Op::Sum(ids) => {
                    for id in ids {
                        adjoints[id.0] = adjoints[id.0] + adj;
                    }
                }
                Op::Dot(xs, ys) => {
                    for (a, b) in xs.iter().zip(ys) {
                        adjoints[a.0] = adjoints[a.0] + adj * values[b.0];
                        adjoints[b.0] = adjoints[b.0] + adj * values[a.0];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// f(x) = 0.5 * ||x||^2 over d parameters.
    fn half_sq_norm(d: usize) -> Tape<f64> {
        let mut tb = TapeBuilder::new(d, 0);
        let params: Vec<NodeId> = (0..d).map(|i| tb.param(i)).collect();
        let dot = tb.dot(&params, &params);
        let half = tb.constant(0.5);
        let out = tb.mul(half, dot);
        tb.finish(out)
    }

    /// f(x) = x0^2 * x1, gradient (2 x0 x1, x0^2), Hessian [[2 x1, 2 x0], [2 x0, 0]].
    fn x0_sq_x1() -> Tape<f64> {
        let mut tb = TapeBuilder::new(2, 0);
        let x0 = tb.param(0);
        let x1 = tb.param(1);
        let sq = tb.mul(x0, x0);
        let out = tb.mul(sq, x1);
        tb.finish(out)
    }

    #[test]
    fn eval_closed_forms() {
        let x = Vector::from_vec(vec![3.0, 4.0]);
        assert_eq!(half_sq_norm(2).value(&x, &[]).unwrap(), 12.5);

        let x = Vector::from_vec(vec![1.0, 2.0]);
        assert_eq!(x0_sq_x1().value(&x, &[]).unwrap(), 2.0);

        let mut tb = TapeBuilder::new(1, 0);
        let p = tb.param(0);
        let out = tb.tanh(p);
        let tape = tb.finish(out);
        assert_eq!(tape.value(&Vector::from_vec(vec![0.0]), &[]).unwrap(), 0.0);
    }

    #[test]
    fn grad_closed_forms() {
        let x = Vector::from_vec(vec![3.0, -4.0]);
        let g = half_sq_norm(2).grad(&x, &[]).unwrap();
        assert_eq!(g.as_slice(), x.as_slice());

        let g = x0_sq_x1().grad(&Vector::from_vec(vec![1.0, 2.0]), &[]).unwrap();
        assert_eq!(g.as_slice(), &[4.0, 1.0]);

        let mut tb = TapeBuilder::new(2, 0);
        let c = tb.constant(7.0);
        let tape = tb.finish(c);
        let g = tape.grad(&Vector::from_vec(vec![1.0, 2.0]), &[]).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn hvp_closed_forms() {
        let v = Vector::from_vec(vec![0.3, -0.7]);
        let x = Vector::from_vec(vec![5.0, 6.0]);
        let hv = half_sq_norm(2).hvp(&x, &v, &[]).unwrap();
        assert_eq!(hv.as_slice(), v.as_slice());

        let hv = x0_sq_x1()
            .hvp(
                &Vector::from_vec(vec![1.0, 2.0]),
                &Vector::from_vec(vec![1.0, 0.0]),
                &[],
            )
            .unwrap();
        assert_eq!(hv.as_slice(), &[4.0, 2.0]);

        let zero = Vector::from_vec(vec![0.0, 0.0]);
        let hv = x0_sq_x1()
            .hvp(&Vector::from_vec(vec![1.0, 2.0]), &zero, &[])
            .unwrap();
        assert_eq!(hv.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn relu_derivative_at_zero_is_zero() {
        let mut tb = TapeBuilder::new(1, 0);
        let p = tb.param(0);
        let out = tb.relu(p);
        let tape = tb.finish(out);
        let g = tape.grad(&Vector::from_vec(vec![0.0]), &[]).unwrap();
        assert_eq!(g.as_slice(), &[0.0]);
        let g = tape.grad(&Vector::from_vec(vec![2.0]), &[]).unwrap();
        assert_eq!(g.as_slice(), &[1.0]);
    }

    #[test]
    fn non_finite_output_is_flagged() {
        let mut tb = TapeBuilder::new(1, 0);
        let p = tb.param(0);
        let out = tb.log(p);
        let tape = tb.finish(out);
        let err = tape.value(&Vector::from_vec(vec![0.0]), &[]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let tape = half_sq_norm(3);
        let err = tape.value(&Vector::from_vec(vec![1.0]), &[]).unwrap_err();
        assert!(matches!(err, Error::DimMismatch { .. }));
    }

    #[test]
    fn inputs_are_constants_for_differentiation() {
        // f(x; a) = a * x^2 with data input a.
        let mut tb = TapeBuilder::new(1, 1);
        let x = tb.param(0);
        let a = tb.input(0);
        let sq = tb.mul(x, x);
        let out = tb.mul(a, sq);
        let tape = tb.finish(out);
        let xs = Vector::from_vec(vec![3.0]);
        assert_eq!(tape.value(&xs, &[2.0]).unwrap(), 18.0);
        assert_eq!(tape.grad(&xs, &[2.0]).unwrap().as_slice(), &[12.0]);
        let hv = tape
            .hvp(&xs, &Vector::from_vec(vec![1.0]), &[2.0])
            .unwrap();
        assert_eq!(hv.as_slice(), &[4.0]);
    }

    #[test]
    fn hvp_is_linear() {
        let tape = x0_sq_x1();
        let x = Vector::from_vec(vec![0.8, -1.3]);
        let u = Vector::from_vec(vec![0.2, 0.5]);
        let v = Vector::from_vec(vec![-1.0, 0.4]);
        let alpha = 0.7;
        let beta = -2.2;
        let combo = u.scaled(alpha).add(&v.scaled(beta));
        let lhs = tape.hvp(&x, &combo, &[]).unwrap();
        let rhs = tape
            .hvp(&x, &u, &[])
            .unwrap()
            .scaled(alpha)
            .add(&tape.hvp(&x, &v, &[]).unwrap().scaled(beta));
        assert!(lhs.rel_err(&rhs) <= 1e-12);
    }

    #[test]
    fn hvp_is_symmetric() {
        let tape = x0_sq_x1();
        let x = Vector::from_vec(vec![1.4, 0.3]);
        let u = Vector::from_vec(vec![0.9, -0.2]);
        let v = Vector::from_vec(vec![0.1, 1.7]);
        let uhv = u.dot(&tape.hvp(&x, &v, &[]).unwrap());
        let vhu = v.dot(&tape.hvp(&x, &u, &[]).unwrap());
        assert!((uhv - vhu).abs() <= 1e-10 * uhv.abs().max(1.0));
    }
}
