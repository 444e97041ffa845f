//! Piecewise vector-valued expressions.
//!
//! A [`FieldExpr`] is a list of expression trees, one per output component,
//! over the variables `u1..uM`. Discontinuities are introduced only through
//! `piecewise(uj, t, left, right)` nodes, which switch on a single variable
//! against a constant threshold. The value at the threshold belongs to the
//! right branch unless an optional fifth argument overrides it.
//!
//! ```
//! use coindeg::exprfield::FieldExpr;
//! let f = FieldExpr::parse("piecewise(u1, 1.0, 0, 1)", 1).unwrap();
//! assert_eq!(f.eval(&[0.5]).unwrap(), vec![0.0]);
//! assert_eq!(f.eval(&[1.0]).unwrap(), vec![1.0]);
//! assert_eq!(f.jump_points().len(), 1);
//! ```

mod parser;

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Binary arithmetic operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Built-in functions other than `piecewise`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
    Abs,
    Exp,
    Sqrt,
    Pow,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
        }
    }
}

/// Expression tree. Variable indices are 0-based (`u1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    Piecewise {
        /// Preorder index of this node within the whole field.
        id: usize,
        var: usize,
        threshold: f64,
        left: Box<Expr>,
        right: Box<Expr>,
        /// Value taken exactly at the threshold; `None` means the right branch.
        at: Option<Box<Expr>>,
    },
}

/// Which branch a piecewise node evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Left,
    Right,
    /// The pointwise value at the threshold.
    At,
}

/// One discontinuity of a field: component `component` jumps when variable
/// `var` crosses `threshold` (both 0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct JumpDescriptor {
    pub node: usize,
    pub component: usize,
    pub var: usize,
    pub threshold: f64,
    pub left: Expr,
    pub right: Expr,
    pub at: Option<Expr>,
}

/// Parsed piecewise vector field `R^arity -> R^components`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldExpr {
    components: Vec<Expr>,
    arity: usize,
    jumps: Vec<JumpDescriptor>,
}

impl FieldExpr {
    /// Parses one component per non-empty line (or `;`-separated segment).
    pub fn parse(text: &str, arity: usize) -> Result<Self> {
        let components = parser::parse_components(text, arity)?;
        Ok(Self::from_trees(components, arity))
    }

    /// Parses each string as one component.
    pub fn parse_components<S: AsRef<str>>(parts: &[S], arity: usize) -> Result<Self> {
        let mut trees = Vec::with_capacity(parts.len());
        for (k, part) in parts.iter().enumerate() {
            let mut parsed = parser::parse_components(part.as_ref(), arity).map_err(|e| match e {
                Error::Syntax {
                    column, message, ..
                } => Error::Syntax {
                    line: k + 1,
                    column,
                    message,
                },
                other => other,
            })?;
            if parsed.len() != 1 {
                return Err(Error::Arity(format!(
                    "component {} must contain exactly one expression, found {}",
                    k + 1,
                    parsed.len()
                )));
            }
            trees.push(parsed.pop().unwrap());
        }
        Ok(Self::from_trees(trees, arity))
    }

    /// Builds a field from trees; piecewise ids are renumbered in preorder.
    pub fn from_trees(mut components: Vec<Expr>, arity: usize) -> Self {
        let mut next = 0;
        for c in components.iter_mut() {
            renumber(c, &mut next);
        }
        let mut jumps = Vec::new();
        for (k, c) in components.iter().enumerate() {
            collect_jumps(c, k, &mut jumps);
        }
        Self {
            components,
            arity,
            jumps,
        }
    }

    /// The identity map on `R^m`.
    pub fn identity(m: usize) -> Self {
        Self::from_trees((0..m).map(Expr::Var).collect(), m)
    }

    /// The linear map `u -> D u`.
    pub fn linear(d: &DMatrix<f64>) -> Self {
        let comps = (0..d.nrows())
            .map(|i| {
                let mut acc: Option<Expr> = None;
                for j in 0..d.ncols() {
                    let c = d[(i, j)];
                    if c == 0.0 {
                        continue;
                    }
                    let term = Expr::Bin(BinOp::Mul, Box::new(Expr::Num(c)), Box::new(Expr::Var(j)));
                    acc = Some(match acc {
                        None => term,
                        Some(a) => Expr::Bin(BinOp::Add, Box::new(a), Box::new(term)),
                    });
                }
                acc.unwrap_or(Expr::Num(0.0))
            })
            .collect();
        Self::from_trees(comps, d.ncols())
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Output dimension.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn jump_points(&self) -> &[JumpDescriptor] {
        &self.jumps
    }

    pub fn has_jumps(&self) -> bool {
        !self.jumps.is_empty()
    }

    /// Componentwise evaluation with the default branch rule.
    pub fn eval(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.eval_forced(u, &|_| None)
    }

    /// Evaluation where `force(node_id)` may override the branch of a
    /// piecewise node. Nodes returning `None` follow the default rule.
    pub fn eval_forced(&self, u: &[f64], force: &dyn Fn(usize) -> Option<Branch>) -> Result<Vec<f64>> {
        if u.len() != self.arity {
            return Err(Error::Dimension {
                expected: self.arity,
                got: u.len(),
            });
        }
        self.components
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let v = eval_expr(e, u, force).map_err(|message| Error::Domain { component: k, message })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Domain {
                        component: k,
                        message: format!("non-finite value {v}"),
                    })
                }
            })
            .collect()
    }

    /// Evaluates a single component.
    pub fn eval_component(&self, k: usize, u: &[f64], force: &dyn Fn(usize) -> Option<Branch>) -> Result<f64> {
        let v = eval_expr(&self.components[k], u, force).map_err(|message| Error::Domain { component: k, message })?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain {
                component: k,
                message: format!("non-finite value {v}"),
            })
        }
    }
}

/// Free-function form of [`FieldExpr::parse`].
pub fn parse_field(text: &str, arity: usize) -> Result<FieldExpr> {
    FieldExpr::parse(text, arity)
}

/// Free-function form of [`FieldExpr::eval`].
pub fn eval_field(fe: &FieldExpr, u: &[f64]) -> Result<Vec<f64>> {
    fe.eval(u)
}

/// Free-function form of [`FieldExpr::jump_points`].
pub fn jump_points(fe: &FieldExpr) -> Vec<JumpDescriptor> {
    fe.jump_points().to_vec()
}

fn renumber(e: &mut Expr, next: &mut usize) {
    match e {
        Expr::Num(_) | Expr::Var(_) => {}
        Expr::Neg(a) => renumber(a, next),
        Expr::Bin(_, a, b) => {
            renumber(a, next);
            renumber(b, next);
        }
        Expr::Call(_, args) => args.iter_mut().for_each(|a| renumber(a, next)),
        Expr::Piecewise {
            id, left, right, at, ..
        } => {
            *id = *next;
            *next += 1;
            renumber(left, next);
            renumber(right, next);
            if let Some(a) = at {
                renumber(a, next);
            }
        }
    }
}

fn collect_jumps(e: &Expr, component: usize, out: &mut Vec<JumpDescriptor>) {
    match e {
        Expr::Num(_) | Expr::Var(_) => {}
        Expr::Neg(a) => collect_jumps(a, component, out),
        Expr::Bin(_, a, b) => {
            collect_jumps(a, component, out);
            collect_jumps(b, component, out);
        }
        Expr::Call(_, args) => args.iter().for_each(|a| collect_jumps(a, component, out)),
        Expr::Piecewise {
            id,
            var,
            threshold,
            left,
            right,
            at,
        } => {
            out.push(JumpDescriptor {
                node: *id,
                component,
                var: *var,
                threshold: *threshold,
                left: (**left).clone(),
                right: (**right).clone(),
                at: at.as_ref().map(|a| (**a).clone()),
            });
            collect_jumps(left, component, out);
            collect_jumps(right, component, out);
            if let Some(a) = at {
                collect_jumps(a, component, out);
            }
        }
    }
}

fn eval_expr(e: &Expr, u: &[f64], force: &dyn Fn(usize) -> Option<Branch>) -> std::result::Result<f64, String> {
    Ok(match e {
        Expr::Num(x) => *x,
        Expr::Var(j) => u[*j],
        Expr::Neg(a) => -eval_expr(a, u, force)?,
        Expr::Bin(op, a, b) => {
            let x = eval_expr(a, u, force)?;
            let y = eval_expr(b, u, force)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err("division by zero".into());
                    }
                    x / y
                }
            }
        }
        Expr::Call(f, args) => {
            let vals = args
                .iter()
                .map(|a| eval_expr(a, u, force))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            match f {
                Func::Min => vals.iter().copied().fold(f64::INFINITY, f64::min),
                Func::Max => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Func::Abs => vals[0].abs(),
                Func::Exp => vals[0].exp(),
                Func::Sqrt => {
                    if vals[0] < 0.0 {
                        return Err(format!("sqrt of negative value {}", vals[0]));
                    }
                    vals[0].sqrt()
                }
                Func::Pow => {
                    let r = vals[0].powf(vals[1]);
                    if r.is_nan() {
                        return Err(format!("pow({}, {}) is undefined", vals[0], vals[1]));
                    }
                    r
                }
            }
        }
        Expr::Piecewise {
            id,
            var,
            threshold,
            left,
            right,
            at,
        } => {
            let branch = force(*id).unwrap_or_else(|| {
                let x = u[*var];
                if x < *threshold {
                    Branch::Left
                } else if x == *threshold && at.is_some() {
                    Branch::At
                } else {
                    Branch::Right
                }
            });
            match branch {
                Branch::Left => eval_expr(left, u, force)?,
                Branch::Right => eval_expr(right, u, force)?,
                Branch::At => match at {
                    Some(a) => eval_expr(a, u, force)?,
                    None => eval_expr(right, u, force)?,
                },
            }
        }
    })
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x:?}");
    if x < 0.0 {
        format!("({s})")
    } else {
        s
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{}", fmt_num(*x)),
            Expr::Var(j) => write!(f, "u{}", j + 1),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Expr::Piecewise {
                var,
                threshold,
                left,
                right,
                at,
                ..
            } => {
                write!(f, "piecewise(u{}, {:?}, {left}, {right}", var + 1, threshold)?;
                if let Some(a) = at {
                    write!(f, ", {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn smoke_rational() {
        let f = FieldExpr::parse("2*u1/(1+u1)", 1).unwrap();
        assert_eq!(f.len(), 1);
        assert!(f.jump_points().is_empty());
        assert_eq!(f.eval(&[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn piecewise_branches() {
        let f = FieldExpr::parse("piecewise(u1, 1.0, 0, 1)", 1).unwrap();
        let j = f.jump_points();
        assert_eq!(j.len(), 1);
        assert_eq!((j[0].component, j[0].var, j[0].threshold), (0, 0, 1.0));
        assert_eq!(j[0].left, Expr::Num(0.0));
        assert_eq!(j[0].right, Expr::Num(1.0));
        assert_eq!(f.eval(&[0.5]).unwrap(), vec![0.0]);
        assert_eq!(f.eval(&[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn point_override() {
        let f = FieldExpr::parse("piecewise(u1, 1, 0, 1, 5)", 1).unwrap();
        assert_eq!(f.eval(&[1.0]).unwrap(), vec![5.0]);
        assert_eq!(f.eval(&[1.0 + 1e-12]).unwrap(), vec![1.0]);
    }

    #[test]
    fn nested_jumps_counted() {
        let f = FieldExpr::parse("piecewise(u1, 1, piecewise(u2, 0.5, 1, 2), 3)", 2).unwrap();
        assert_eq!(f.jump_points().len(), 2);
        assert!(FieldExpr::parse("u1*u1", 1).unwrap().jump_points().is_empty());
    }

    #[test]
    fn stray_operator_reports_position() {
        match FieldExpr::parse("u1 + * u2", 2) {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 6)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_and_arity() {
        assert!(matches!(FieldExpr::parse("sin(u1)", 1), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(FieldExpr::parse("foo", 1), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(FieldExpr::parse("u3", 2), Err(Error::Arity(_))));
        assert!(matches!(FieldExpr::parse("u0", 2), Err(Error::Arity(_))));
        assert!(matches!(FieldExpr::parse("pow(u1)", 1), Err(Error::Arity(_))));
    }

    #[test]
    fn piecewise_switch_must_be_variable() {
        assert!(FieldExpr::parse("piecewise(u1+1, 1, 0, 1)", 1).is_err());
        assert!(FieldExpr::parse("piecewise(u1, u1, 0, 1)", 1).is_err());
        assert!(FieldExpr::parse("piecewise((u1), -0.5, 0, 1)", 1).is_ok());
    }

    #[test]
    fn multi_component_lines() {
        let f = FieldExpr::parse("u1 + u2\n u1 * u2 ; 3", 2).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.eval(&[2.0, 3.0]).unwrap(), vec![5.0, 6.0, 3.0]);
        let g = FieldExpr::parse("max(u1,\n u2)", 2).unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn domain_errors_name_component() {
        let f = FieldExpr::parse("u1\n1/u1\nsqrt(u1 - 2)", 1).unwrap();
        assert!(matches!(f.eval(&[0.0]), Err(Error::Domain { component: 1, .. })));
        assert!(matches!(f.eval(&[1.0]), Err(Error::Domain { component: 2, .. })));
        assert!(f.eval(&[3.0]).is_ok());
    }

    #[test]
    fn functions_and_exponents() {
        let f = FieldExpr::parse("min(u1, 2, 3) + max(u1, -1) + abs(-u1) + exp(0) + sqrt(4) + pow(2, 3) + 1.5e1", 1).unwrap();
        assert_eq!(f.eval(&[1.0]).unwrap(), vec![1.0 + 1.0 + 1.0 + 1.0 + 2.0 + 8.0 + 15.0]);
    }

    #[test]
    fn linear_constructor() {
        let d = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.0, 3.0]);
        let f = FieldExpr::linear(&d);
        assert_eq!(f.eval(&[1.0, 1.0]).unwrap(), vec![-1.0, 3.0]);
        let g = FieldExpr::parse(&f.to_string(), 2).unwrap();
        assert_eq!(g.eval(&[0.5, 2.0]).unwrap(), f.eval(&[0.5, 2.0]).unwrap());
    }

    fn arb_expr(depth: u32) -> BoxedStrategy<String> {
        let leaf = prop_oneof![
            (0u32..50).prop_map(|n| format!("{}.{}", n / 10, n % 10)),
            (1usize..=2).prop_map(|j| format!("u{j}")),
        ];
        leaf.prop_recursive(depth, 24, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*"]))
                    .prop_map(|(a, b, op)| format!("({a} {op} {b})")),
                inner.clone().prop_map(|a| format!("-{a}")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("max({a}, {b})")),
                (inner.clone(), inner.clone(), 0u32..20, 1usize..=2)
                    .prop_map(|(a, b, t, j)| format!("piecewise(u{j}, {}, {a}, {b})", t as f64 / 10.0)),
            ]
        })
        .boxed()
    }

    proptest! {
        #[test]
        fn print_reparse_idempotent(s in arb_expr(4)) {
            let a = FieldExpr::parse(&s, 2).unwrap();
            let b = FieldExpr::parse(&a.to_string(), 2).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn branch_consistency(s in arb_expr(3), x in 0.0f64..2.0, y in 0.0f64..2.0) {
            let f = FieldExpr::parse(&s, 2).unwrap();
            let u = [x, y];
            let v = f.eval(&u).unwrap()[0];
            prop_assert_eq!(v.to_bits(), f.eval(&u).unwrap()[0].to_bits());
            for j in f.jump_points() {
                // Forcing the branch the default rule would choose changes nothing.
                let b = if u[j.var] < j.threshold { Branch::Left } else { Branch::Right };
                let node = j.node;
                let forced = f.eval_forced(&u, &|id| (id == node).then_some(b)).unwrap()[0];
                prop_assert_eq!(forced.to_bits(), v.to_bits());
            }
        }
    }
}
