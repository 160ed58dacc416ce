//! Reverse-mode automatic differentiation over a flat Wengert tape.
//!
//! Every operation records its value and the local partial derivatives with
//! respect to its parents at forward time, so the backward sweep is a single
//! reverse pass over the node list. Values are evaluated eagerly: a [`Var`]
//! always carries a finished forward value, which makes "backward before
//! forward" unrepresentable.
//!
//! The supported primitive set is fixed by the [`Scalar`] trait: add,
//! subtract, multiply, divide, negate, exp, log, power, absolute value,
//! digamma, plus the reductions [`sum_on`], [`dot_on`] and [`sq_dist_on`].
//! Anything else fails to compile rather than erroring at run time.
//!
//! Algorithms in this crate are written once, generic over [`Scalar`], and
//! instantiated with `f64` for plain evaluation and with [`Var`] for the
//! differentiable unfolded run. Both instantiations execute the same
//! monomorphized operation sequence, so their values agree bit for bit.
//!
//! A tape is confined to one thread (interior mutability via `RefCell`);
//! independent tapes can run on independent threads.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::numerics::{digamma_raw, trigamma_raw};

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Node {
    pa: u32,
    pb: u32,
    /// d(node)/d(parent a), evaluated at forward time.
    da: f64,
    /// d(node)/d(parent b).
    db: f64,
    val: f64,
}

/// Recording tape. Nodes are stored in topological (creation) order.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Record an input leaf. Leaves are both trainable inputs and constants;
    /// the distinction only matters to the caller querying gradients.
    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.push(value, NONE, 0.0, NONE, 0.0);
        Var { tape: self, idx }
    }

    fn push(&self, val: f64, pa: u32, da: f64, pb: u32, db: f64) -> u32 {
        assert!(
            val.is_finite(),
            "non-finite value {val} recorded on tape (division by zero, log of a \
             non-positive value, or overflow in the forward pass)"
        );
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len();
        assert!(idx < NONE as usize, "tape overflow");
        nodes.push(Node { pa, pb, da, db, val });
        idx as u32
    }

    /// Reverse sweep from a scalar seed. Visits each node at most once, in
    /// reverse topological order; nodes recorded after the seed cannot
    /// influence it and are skipped.
    pub fn backward(&self, seed: Var<'_>) -> Gradients {
        assert!(
            std::ptr::eq(self, seed.tape),
            "backward seeded with a variable from a different tape"
        );
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0f64; seed.idx as usize + 1];
        adj[seed.idx as usize] = 1.0;
        for i in (0..=seed.idx as usize).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let n = nodes[i];
            if n.pa != NONE {
                adj[n.pa as usize] += n.da * a;
            }
            if n.pb != NONE {
                adj[n.pb as usize] += n.db * a;
            }
        }
        Gradients { tape_addr: self as *const Tape as usize, adj }
    }
}

/// Adjoints produced by one backward sweep.
pub struct Gradients {
    tape_addr: usize,
    adj: Vec<f64>,
}

impl Gradients {
    /// Gradient of the seed with respect to `v`. Variables recorded after the
    /// seed have gradient zero.
    pub fn wrt(&self, v: Var<'_>) -> f64 {
        assert!(
            v.tape as *const Tape as usize == self.tape_addr,
            "gradient queried with a variable from a different tape"
        );
        self.adj.get(v.idx as usize).copied().unwrap_or(0.0)
    }
}

/// A scalar recorded on a [`Tape`]. Copyable; the tape outlives all its vars.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
}

impl<'t> Var<'t> {
    fn node_val(self) -> f64 {
        self.tape.nodes.borrow()[self.idx as usize].val
    }

    fn unary(self, val: f64, d: f64) -> Self {
        let idx = self.tape.push(val, self.idx, d, NONE, 0.0);
        Var { tape: self.tape, idx }
    }

    fn binary(self, rhs: Self, val: f64, da: f64, db: f64) -> Self {
        assert!(
            std::ptr::eq(self.tape, rhs.tape),
            "operation mixes variables from two tapes"
        );
        let idx = self.tape.push(val, self.idx, da, rhs.idx, db);
        Var { tape: self.tape, idx }
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, self.node_val() + rhs.node_val(), 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, self.node_val() - rhs.node_val(), 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (self.node_val(), rhs.node_val());
        self.binary(rhs, a * b, b, a)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Self) -> Self {
        let (a, b) = (self.node_val(), rhs.node_val());
        self.binary(rhs, a / b, 1.0 / b, -a / (b * b))
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Self {
        self.unary(-self.node_val(), -1.0)
    }
}

/// The scalar field shared by plain evaluation and tape recording.
///
/// Implementations must keep the forward value computations identical so the
/// two instantiations stay bitwise equal.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Current forward value.
    fn val(self) -> f64;
    /// A constant in the same evaluation context as `self`.
    fn lit(self, c: f64) -> Self;
    /// `self + c` for a constant `c` (one node on tape).
    fn add_c(self, c: f64) -> Self;
    /// `self * c` for a constant `c` (one node on tape).
    fn mul_c(self, c: f64) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    /// Absolute value; the subgradient at exactly 0 is 0.
    fn abs(self) -> Self;
    /// Digamma of a positive scalar; d/dx is trigamma.
    fn digamma(self) -> Self;
    /// Clamp into `[lo, hi]`; the derivative is 0 outside the interval.
    fn clamp(self, lo: f64, hi: f64) -> Self;

    fn sq(self) -> Self {
        self * self
    }

    /// Integer power by repeated multiplication (fixed operation order).
    fn powi(self, n: u32) -> Self {
        if n == 0 {
            return self.lit(1.0);
        }
        let mut acc = self;
        for _ in 1..n {
            acc = acc * self;
        }
        acc
    }

    fn sigmoid(self) -> Self {
        let denom = (-self).exp().add_c(1.0);
        denom.lit(1.0) / denom
    }

    fn tanh(self) -> Self {
        self.mul_c(2.0).sigmoid().mul_c(2.0).add_c(-1.0)
    }
}

impl Scalar for f64 {
    fn val(self) -> f64 {
        self
    }
    fn lit(self, c: f64) -> Self {
        c
    }
    fn add_c(self, c: f64) -> Self {
        self + c
    }
    fn mul_c(self, c: f64) -> Self {
        self * c
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn digamma(self) -> Self {
        debug_assert!(self > 0.0, "digamma of non-positive value {self}");
        digamma_raw(self)
    }
    fn clamp(self, lo: f64, hi: f64) -> Self {
        f64::clamp(self, lo, hi)
    }
}

impl<'t> Scalar for Var<'t> {
    fn val(self) -> f64 {
        self.node_val()
    }
    fn lit(self, c: f64) -> Self {
        self.tape.var(c)
    }
    fn add_c(self, c: f64) -> Self {
        self.unary(self.node_val() + c, 1.0)
    }
    fn mul_c(self, c: f64) -> Self {
        self.unary(self.node_val() * c, c)
    }
    fn exp(self) -> Self {
        let v = f64::exp(self.node_val());
        self.unary(v, v)
    }
    fn ln(self) -> Self {
        let x = self.node_val();
        self.unary(f64::ln(x), 1.0 / x)
    }
    fn abs(self) -> Self {
        let x = self.node_val();
        let sign = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.unary(f64::abs(x), sign)
    }
    fn digamma(self) -> Self {
        let x = self.node_val();
        assert!(x > 0.0, "digamma of non-positive value {x} on tape");
        self.unary(digamma_raw(x), trigamma_raw(x))
    }
    fn clamp(self, lo: f64, hi: f64) -> Self {
        let x = self.node_val();
        if x < lo {
            self.lit(lo)
        } else if x > hi {
            self.lit(hi)
        } else {
            self
        }
    }
}

/// Sum of a non-empty slice, folded left to right.
pub fn sum_on<R: Scalar>(xs: &[R]) -> R {
    assert!(!xs.is_empty(), "sum of an empty slice");
    let mut acc = xs[0];
    for x in &xs[1..] {
        acc = acc + *x;
    }
    acc
}

/// Dot product of two equal-length, non-empty slices.
pub fn dot_on<R: Scalar>(a: &[R], b: &[R]) -> R {
    assert_eq!(a.len(), b.len(), "dot product length mismatch");
    assert!(!a.is_empty(), "dot product of empty slices");
    let mut acc = a[0] * b[0];
    for i in 1..a.len() {
        acc = acc + a[i] * b[i];
    }
    acc
}

/// Dot product against a constant vector (cheaper on tape than lifting `b`).
pub fn dot_const_on<R: Scalar>(a: &[R], b: &[f64]) -> R {
    assert_eq!(a.len(), b.len(), "dot product length mismatch");
    assert!(!a.is_empty(), "dot product of empty slices");
    let mut acc = a[0].mul_c(b[0]);
    for i in 1..a.len() {
        acc = acc + a[i].mul_c(b[i]);
    }
    acc
}

/// Squared Euclidean distance Σ (a_i - b_i)².
pub fn sq_dist_on<R: Scalar>(a: &[R], b: &[R]) -> R {
    assert_eq!(a.len(), b.len(), "squared distance length mismatch");
    assert!(!a.is_empty(), "squared distance of empty slices");
    let mut acc = (a[0] - b[0]).sq();
    for i in 1..a.len() {
        acc = acc + (a[i] - b[i]).sq();
    }
    acc
}
