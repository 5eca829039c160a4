//! Built-in test problems.
//!
//! Network variants scale their inputs to roughly `[-1, 1]` before the first
//! layer: `x / 3` on the Peaks box and `(x - 6) / 3` on the Alpine box.
//! The weight files shipped in `data/` are seeded random stand-ins, not
//! trained surrogates.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::arith::UnaryOp;
use crate::dag::mlp::build_mlp;
use crate::dag::{load_ann_weights, Dag, MlpError, NodeId, Problem};
use crate::interval::IntervalBox;

#[derive(Debug, Error)]
pub enum BuiltinError {
    #[error("unknown builtin problem '{0}' (see `list`)")]
    Unknown(String),
    #[error("builtin '{0}' needs a weights file")]
    MissingWeights(String),
    #[error("builtin '{0}' is not bundled: it needs the model and measurement data of the kinetic parameter estimation case study in Mitsos, Chachuat and Barton, \"McCormick-based relaxations of algorithms\", SIAM J. Optim. 20(2), 2009")]
    NotBundled(String),
    #[error("weights for '{name}': {source}")]
    Weights { name: String, source: MlpError },
    #[error("weights for '{name}' must map {inputs} inputs to 1 output")]
    WeightsShape { name: String, inputs: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Peaks,
    PeaksAnn,
    PeaksAnnErr,
    Alpine(usize),
    AlpineAnn(usize),
    AlpineAnnErr(usize),
    StybTang(usize),
    KineticOde,
}

impl Kind {
    fn needs_weights(self) -> bool {
        matches!(self, Kind::PeaksAnn | Kind::PeaksAnnErr | Kind::AlpineAnn(_) | Kind::AlpineAnnErr(_))
    }
}

/// `prefix<d>` or `prefix-<d>` with `d >= 1`.
fn dimension(name: &str, prefix: &str) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    let rest = rest.strip_prefix('-').unwrap_or(rest);
    rest.parse().ok().filter(|&d| d >= 1)
}

fn kind(name: &str) -> Option<Kind> {
    Some(match name {
        "peaks" => Kind::Peaks,
        "peaks-ann" => Kind::PeaksAnn,
        "peaks-ann-err" => Kind::PeaksAnnErr,
        "kinetic-ode" => Kind::KineticOde,
        _ => {
            if let Some(d) = dimension(name, "alpine-ann-err") {
                Kind::AlpineAnnErr(d)
            } else if let Some(d) = dimension(name, "alpine-ann") {
                Kind::AlpineAnn(d)
            } else if let Some(d) = dimension(name, "alpine") {
                Kind::Alpine(d)
            } else if let Some(d) = dimension(name, "stybtang") {
                Kind::StybTang(d)
            } else {
                return None;
            }
        }
    })
}

pub fn is_builtin(name: &str) -> bool {
    kind(name).is_some()
}

pub fn needs_weights(name: &str) -> bool {
    kind(name).is_some_and(Kind::needs_weights)
}

/// Names and one-line descriptions for listing.
pub fn builtin_catalog() -> Vec<(&'static str, &'static str)> {
    vec![
        ("peaks", "min Peaks on [-3,3]^2"),
        ("peaks-ann", "min ANN(x) on [-3,3]^2, 2-10-8-1 tanh network (weights required)"),
        ("peaks-ann-err", "min ANN(x) - Peaks(x) on [-3,3]^2 (weights required)"),
        ("alpine<d>", "max prod sqrt(x_i) sin(x_i) on [3,9]^d, posed as min of the negation"),
        ("alpine-ann-<d>", "max ANN(x) on [3,9]^d, d-60-1 network, posed as min of -ANN (weights required)"),
        ("alpine-ann-err-<d>", "min Alpine(x) - ANN(x) on [3,9]^d (weights required)"),
        ("stybtang<d>", "min 1/2 sum x_i^4 - 16 x_i^2 + 5 x_i on [-5,5]^d"),
        ("kinetic-ode", "not bundled (needs external data)"),
    ]
}

/// Stand-in weights shipped with the crate for a network builtin.
pub fn bundled_weights(name: &str) -> Option<PathBuf> {
    let file = match kind(name)? {
        Kind::PeaksAnn | Kind::PeaksAnnErr => "peaks-ann.json".to_string(),
        Kind::AlpineAnn(d) | Kind::AlpineAnnErr(d) if (2..=6).contains(&d) => format!("alpine-ann-{d}.json"),
        _ => return None,
    };
    Some(Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(file))
}

pub fn builtin_problem(name: &str, weights: Option<&Path>) -> Result<Problem, BuiltinError> {
    let k = kind(name).ok_or_else(|| BuiltinError::Unknown(name.to_string()))?;
    let net = if k.needs_weights() {
        let path = weights.ok_or_else(|| BuiltinError::MissingWeights(name.to_string()))?;
        Some(load_ann_weights(path).map_err(|source| BuiltinError::Weights { name: name.to_string(), source })?)
    } else {
        None
    };
    let mut dag = Dag::new();
    let (n, lo, hi) = match k {
        Kind::Peaks | Kind::PeaksAnn | Kind::PeaksAnnErr => (2, -3.0, 3.0),
        Kind::Alpine(d) | Kind::AlpineAnn(d) | Kind::AlpineAnnErr(d) => (d, 3.0, 9.0),
        Kind::StybTang(d) => (d, -5.0, 5.0),
        Kind::KineticOde => return Err(BuiltinError::NotBundled(name.to_string())),
    };
    let xs: Vec<NodeId> = (0..n).map(|i| dag.var(i)).collect();
    let ann = |dag: &mut Dag, shift: f64, scale: f64| -> Result<NodeId, BuiltinError> {
        let layers = net.as_deref().expect("weights loaded");
        let c = dag.constant(shift);
        let s = dag.constant(scale);
        let inputs: Vec<NodeId> = xs.iter().map(|&x| {
            let t = dag.sub(x, c);
            dag.div(t, s)
        }).collect();
        let out = build_mlp(dag, layers, &inputs).map_err(|source| BuiltinError::Weights { name: name.to_string(), source })?;
        match out[..] {
            [o] => Ok(o),
            _ => Err(BuiltinError::WeightsShape { name: name.to_string(), inputs: n }),
        }
    };
    let obj = match k {
        Kind::Peaks => peaks(&mut dag, xs[0], xs[1]),
        Kind::PeaksAnn => ann(&mut dag, 0.0, 3.0)?,
        Kind::PeaksAnnErr => {
            let a = ann(&mut dag, 0.0, 3.0)?;
            let p = peaks(&mut dag, xs[0], xs[1]);
            dag.sub(a, p)
        }
        Kind::Alpine(_) => {
            let f = alpine(&mut dag, &xs);
            dag.unary(UnaryOp::Neg, f)
        }
        Kind::AlpineAnn(_) => {
            let a = ann(&mut dag, 6.0, 3.0)?;
            dag.unary(UnaryOp::Neg, a)
        }
        Kind::AlpineAnnErr(_) => {
            let a = ann(&mut dag, 6.0, 3.0)?;
            let f = alpine(&mut dag, &xs);
            dag.sub(f, a)
        }
        Kind::StybTang(_) => stybtang(&mut dag, &xs),
        Kind::KineticOde => unreachable!(),
    };
    let names = (1..=n).map(|i| format!("x{i}")).collect();
    let domain = IntervalBox::from_bounds(&vec![(lo, hi); n]).expect("valid box");
    Ok(Problem::new(names, domain, dag, obj, vec![], vec![]).expect("well-formed builtin"))
}

fn sq(dag: &mut Dag, x: NodeId) -> NodeId {
    dag.unary(UnaryOp::Powi(2), x)
}

fn peaks(dag: &mut Dag, x: NodeId, y: NodeId) -> NodeId {
    let one = dag.constant(1.0);
    let three = dag.constant(3.0);
    let five = dag.constant(5.0);
    let ten = dag.constant(10.0);
    let x2 = sq(dag, x);
    let y2 = sq(dag, y);
    let nx2 = dag.unary(UnaryOp::Neg, x2);

    // 3 (1 - x)^2 exp(-x^2 - (y + 1)^2)
    let omx = dag.sub(one, x);
    let omx2 = sq(dag, omx);
    let a = dag.mul(three, omx2);
    let yp1 = dag.add(y, one);
    let yp12 = sq(dag, yp1);
    let ea = dag.sub(nx2, yp12);
    let ea = dag.unary(UnaryOp::Exp, ea);
    let t1 = dag.mul(a, ea);

    // 10 (x / 5 - x^3 - y^5) exp(-x^2 - y^2)
    let x5 = dag.div(x, five);
    let x3 = dag.unary(UnaryOp::Powi(3), x);
    let y5 = dag.unary(UnaryOp::Powi(5), y);
    let p = dag.sub(x5, x3);
    let p = dag.sub(p, y5);
    let b = dag.mul(ten, p);
    let eb = dag.sub(nx2, y2);
    let eb = dag.unary(UnaryOp::Exp, eb);
    let t2 = dag.mul(b, eb);

    // exp(-(x + 1)^2 - y^2) / 3
    let xp1 = dag.add(x, one);
    let xp12 = sq(dag, xp1);
    let nxp12 = dag.unary(UnaryOp::Neg, xp12);
    let ec = dag.sub(nxp12, y2);
    let ec = dag.unary(UnaryOp::Exp, ec);
    let t3 = dag.div(ec, three);

    let f = dag.sub(t1, t2);
    dag.sub(f, t3)
}

fn alpine(dag: &mut Dag, xs: &[NodeId]) -> NodeId {
    let factors: Vec<NodeId> = xs
        .iter()
        .map(|&x| {
            let r = dag.unary(UnaryOp::Sqrt, x);
            let s = dag.unary(UnaryOp::Sin, x);
            dag.mul(r, s)
        })
        .collect();
    factors.into_iter().reduce(|a, b| dag.mul(a, b)).expect("d >= 1")
}

fn stybtang(dag: &mut Dag, xs: &[NodeId]) -> NodeId {
    let half = dag.constant(0.5);
    let sixteen = dag.constant(16.0);
    let five = dag.constant(5.0);
    let terms: Vec<NodeId> = xs
        .iter()
        .map(|&x| {
            let x4 = dag.unary(UnaryOp::Powi(4), x);
            let x2 = sq(dag, x);
            let a = dag.mul(sixteen, x2);
            let b = dag.mul(five, x);
            let t = dag.sub(x4, a);
            dag.add(t, b)
        })
        .collect();
    let sum = terms.into_iter().reduce(|a, b| dag.add(a, b)).expect("d >= 1");
    dag.mul(half, sum)
}
