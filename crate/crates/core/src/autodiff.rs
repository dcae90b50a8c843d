//! Minimal reverse-mode differentiation over a scalar expression tape.
//!
//! Forward evaluation appends nodes carrying the local partial derivatives
//! with respect to their parents (a Wengert list); [`backward`] then sweeps
//! the tape once in reverse insertion order. Parents always precede children,
//! so a single reverse pass propagates every adjoint. A tape is single-owner
//! and not shareable across threads while being written; independent tapes
//! run in parallel freely.

use std::cell::RefCell;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

static TAPE_IDS: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Error, PartialEq)]
pub enum TapeError {
    #[error("variables live on different tapes")]
    TapeMismatch,
    #[error("domain error in {op} on value {value}")]
    DomainError { op: &'static str, value: f64 },
}

#[derive(Clone, Copy)]
struct Node {
    parents: [u32; 2],
    partials: [f64; 2],
    arity: u8,
}

/// Append-only expression tape.
pub struct Tape {
    id: u64,
    nodes: RefCell<Vec<Node>>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            id: TAPE_IDS.fetch_add(1, Ordering::Relaxed),
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops all nodes but keeps the allocation; existing `Var`s become
    /// invalid and must not be used afterwards.
    pub fn clear(&self) {
        self.nodes.borrow_mut().clear();
    }

    /// Records a leaf holding `value`.
    pub fn lift(&self, value: f64) -> Var<'_> {
        self.push(
            Node {
                parents: [0, 0],
                partials: [0.0, 0.0],
                arity: 0,
            },
            value,
        )
    }

    fn push(&self, node: Node, value: f64) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let index = nodes.len();
        assert!(index <= u32::MAX as usize, "tape overflow");
        nodes.push(node);
        Var {
            tape: self,
            index,
            value,
        }
    }

    fn unary(&self, a: usize, value: f64, partial: f64) -> Var<'_> {
        self.push(
            Node {
                parents: [a as u32, 0],
                partials: [partial, 0.0],
                arity: 1,
            },
            value,
        )
    }

    fn binary(&self, a: usize, b: usize, value: f64, pa: f64, pb: f64) -> Var<'_> {
        self.push(
            Node {
                parents: [a as u32, b as u32],
                partials: [pa, pb],
                arity: 2,
            },
            value,
        )
    }
}

/// Handle to a tape node; carries the forward value. Cheap to copy;
/// arithmetic records new nodes.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    index: usize,
    value: f64,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Var")
            .field("index", &self.index)
            .field("value", &self.value)
            .finish()
    }
}

impl<'t> Var<'t> {
    pub fn value(self) -> f64 {
        self.value
    }

    pub fn index(self) -> usize {
        self.index
    }

    fn same_tape(self, other: Var<'t>) -> Result<(), TapeError> {
        if self.tape.id == other.tape.id {
            Ok(())
        } else {
            Err(TapeError::TapeMismatch)
        }
    }

    pub fn checked_add(self, rhs: Var<'t>) -> Result<Var<'t>, TapeError> {
        self.same_tape(rhs)?;
        Ok(self
            .tape
            .binary(self.index, rhs.index, self.value() + rhs.value(), 1.0, 1.0))
    }

    pub fn checked_sub(self, rhs: Var<'t>) -> Result<Var<'t>, TapeError> {
        self.same_tape(rhs)?;
        Ok(self
            .tape
            .binary(self.index, rhs.index, self.value() - rhs.value(), 1.0, -1.0))
    }

    pub fn checked_mul(self, rhs: Var<'t>) -> Result<Var<'t>, TapeError> {
        self.same_tape(rhs)?;
        let (a, b) = (self.value(), rhs.value());
        Ok(self.tape.binary(self.index, rhs.index, a * b, b, a))
    }

    pub fn checked_div(self, rhs: Var<'t>) -> Result<Var<'t>, TapeError> {
        self.same_tape(rhs)?;
        let (a, b) = (self.value(), rhs.value());
        if b == 0.0 {
            return Err(TapeError::DomainError {
                op: "div",
                value: b,
            });
        }
        Ok(self
            .tape
            .binary(self.index, rhs.index, a / b, 1.0 / b, -a / (b * b)))
    }

    /// ReLU with the subgradient at 0 defined as 0.
    pub fn relu(self) -> Var<'t> {
        let a = self.value();
        let (v, p) = if a > 0.0 { (a, 1.0) } else { (0.0, 0.0) };
        self.tape.unary(self.index, v, p)
    }

    pub fn square(self) -> Var<'t> {
        let a = self.value();
        self.tape.unary(self.index, a * a, 2.0 * a)
    }

    pub fn sqrt(self) -> Result<Var<'t>, TapeError> {
        let a = self.value();
        if a < 0.0 {
            return Err(TapeError::DomainError {
                op: "sqrt",
                value: a,
            });
        }
        let s = a.sqrt();
        Ok(self.tape.unary(self.index, s, 0.5 / s))
    }

    /// Multiplication by a plain constant (records the constant as a leaf).
    pub fn scale(self, c: f64) -> Var<'t> {
        let cv = self.tape.lift(c);
        self * cv
    }
}

/// Sum of `vars`, all on `tape`; the empty sum is the constant 0.
pub fn sum<'t>(tape: &'t Tape, vars: &[Var<'t>]) -> Result<Var<'t>, TapeError> {
    let mut acc = tape.lift(0.0);
    for &v in vars {
        acc = acc.checked_add(v)?;
    }
    Ok(acc)
}

macro_rules! impl_op {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl<'t> std::ops::$trait for Var<'t> {
            type Output = Var<'t>;
            fn $method(self, rhs: Var<'t>) -> Var<'t> {
                self.$checked(rhs).expect(concat!(stringify!($method), " failed"))
            }
        }
    };
}

impl_op!(Add, add, checked_add);
impl_op!(Sub, sub, checked_sub);
impl_op!(Mul, mul, checked_mul);
impl_op!(Div, div, checked_div);

impl<'t> std::ops::Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.tape.unary(self.index, -self.value, -1.0)
    }
}

/// Adjoints of every tape node with respect to one scalar output.
pub struct Gradients {
    tape_id: u64,
    adjoints: Vec<f64>,
}

impl Gradients {
    /// Gradient of the output with respect to `v`.
    pub fn wrt(&self, v: Var<'_>) -> f64 {
        assert_eq!(self.tape_id, v.tape.id, "gradient queried on foreign tape");
        self.adjoints[v.index]
    }
}

/// Single reverse sweep seeding `d output / d output = 1`. Deterministic:
/// nodes are visited in strict reverse insertion order.
pub fn backward(output: Var<'_>) -> Gradients {
    let nodes = output.tape.nodes.borrow();
    let mut adjoints = vec![0.0; nodes.len()];
    adjoints[output.index] = 1.0;
    for idx in (0..=output.index).rev() {
        let a = adjoints[idx];
        if a == 0.0 {
            continue;
        }
        let node = &nodes[idx];
        for p in 0..node.arity as usize {
            adjoints[node.parents[p] as usize] += node.partials[p] * a;
        }
    }
    Gradients {
        tape_id: output.tape.id,
        adjoints,
    }
}
