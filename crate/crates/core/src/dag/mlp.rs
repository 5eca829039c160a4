//! Feed-forward networks (trained weights ingested from JSON) as DAG nodes.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::UnaryOp;

use super::{Dag, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Linear,
}

/// One dense layer: `act(W x + b)`, `W` row-major with one row per neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    #[serde(rename = "W")]
    pub weights: Vec<Vec<f64>>,
    #[serde(rename = "b")]
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn outputs(&self) -> usize {
        self.weights.len()
    }

    pub fn inputs(&self) -> Option<usize> {
        self.weights.first().map(Vec::len)
    }
}

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("cannot read weights file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed weights file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("network has no layers")]
    Empty,
    #[error("layer {layer}: {detail}")]
    DimensionMismatch { layer: usize, detail: String },
}

/// Checks that layer shapes chain, starting from `inputs` features.
pub fn validate_layers(layers: &[LayerSpec], inputs: Option<usize>) -> Result<(), MlpError> {
    if layers.is_empty() {
        return Err(MlpError::Empty);
    }
    let mut width = inputs;
    for (k, layer) in layers.iter().enumerate() {
        let mismatch = |detail: String| MlpError::DimensionMismatch { layer: k, detail };
        if layer.weights.is_empty() {
            return Err(mismatch("no neurons".into()));
        }
        if layer.bias.len() != layer.weights.len() {
            return Err(mismatch(format!("{} rows in W but {} biases", layer.weights.len(), layer.bias.len())));
        }
        let cols = layer.weights[0].len();
        if cols == 0 {
            return Err(mismatch("empty weight row".into()));
        }
        for (r, row) in layer.weights.iter().enumerate() {
            let expect = width.unwrap_or(cols);
            if row.len() != expect {
                return Err(mismatch(format!("W row {r} has length {} but the layer input size is {expect}", row.len())));
            }
        }
        if layer.weights.iter().flatten().chain(&layer.bias).any(|v| !v.is_finite()) {
            return Err(mismatch("non-finite weight".into()));
        }
        width = Some(layer.weights.len());
    }
    Ok(())
}

pub fn parse_ann_weights(text: &str) -> Result<Vec<LayerSpec>, MlpError> {
    let layers: Vec<LayerSpec> = serde_json::from_str(text)?;
    validate_layers(&layers, None)?;
    Ok(layers)
}

pub fn load_ann_weights(path: &Path) -> Result<Vec<LayerSpec>, MlpError> {
    let text = std::fs::read_to_string(path).map_err(|source| MlpError::Io { path: path.display().to_string(), source })?;
    parse_ann_weights(&text)
}

/// Emits the network on `inputs` and returns the output node ids.
///
/// Each neuron is `((w1*x1 + w2*x2) + ...) + b`, followed by a `tanh` node
/// unless the layer is linear.
pub fn build_mlp(dag: &mut Dag, layers: &[LayerSpec], inputs: &[NodeId]) -> Result<Vec<NodeId>, MlpError> {
    validate_layers(layers, Some(inputs.len()))?;
    let mut current = inputs.to_vec();
    for layer in layers {
        let mut next = Vec::with_capacity(layer.outputs());
        for (row, &b) in layer.weights.iter().zip(&layer.bias) {
            let mut acc: Option<NodeId> = None;
            for (&w, &x) in row.iter().zip(&current) {
                let wn = dag.constant(w);
                let term = dag.mul(wn, x);
                acc = Some(match acc {
                    Some(a) => dag.add(a, term),
                    None => term,
                });
            }
            let bn = dag.constant(b);
            let affine = dag.add(acc.expect("validated non-empty row"), bn);
            next.push(match layer.activation {
                Activation::Tanh => dag.unary(UnaryOp::Tanh, affine),
                Activation::Linear => affine,
            });
        }
        current = next;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::BinaryOp;
    use crate::dag::DagNode;

    fn layer(w: Vec<Vec<f64>>, b: Vec<f64>, activation: Activation) -> LayerSpec {
        LayerSpec { weights: w, bias: b, activation }
    }

    #[test]
    fn single_tanh_neuron() {
        let mut d = Dag::new();
        let x = d.var(0);
        let out = build_mlp(&mut d, &[layer(vec![vec![2.0]], vec![-1.0], Activation::Tanh)], &[x]).unwrap();
        let DagNode::Unary(UnaryOp::Tanh, a) = d.node(out[0]) else { panic!() };
        let DagNode::Binary(BinaryOp::Add, m, b) = d.node(a) else { panic!() };
        assert_eq!(d.node(b), DagNode::Const(-1.0));
        assert!(matches!(d.node(m), DagNode::Binary(BinaryOp::Mul, _, _)));
        let v = crate::dag::eval::eval_nodes(&d, &[0.75f64], &mut false);
        assert_eq!(v[out[0].index()].unwrap(), (2.0f64 * 0.75 - 1.0).tanh());
    }

    #[test]
    fn linear_layer_skips_activation() {
        let mut d = Dag::new();
        let x = d.var(0);
        let y = d.var(1);
        let id = layer(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0], Activation::Linear);
        let out = build_mlp(&mut d, &[id], &[x, y]).unwrap();
        for o in out {
            assert!(matches!(d.node(o), DagNode::Binary(BinaryOp::Add, _, _)));
        }
    }

    #[test]
    fn two_hidden_layer_structure() {
        let l1 = layer(vec![vec![0.1, 0.2]; 10], vec![0.0; 10], Activation::Tanh);
        let l2 = layer(vec![vec![0.3; 10]; 8], vec![0.1; 8], Activation::Tanh);
        let l3 = layer(vec![vec![0.5; 8]], vec![0.2], Activation::Tanh);
        let mut d = Dag::without_sharing();
        let (x, y) = (d.var(0), d.var(1));
        let out = build_mlp(&mut d, &[l1, l2, l3], &[x, y]).unwrap();
        assert_eq!(out.len(), 1);
        let tanh = d.nodes().iter().filter(|n| matches!(n, DagNode::Unary(UnaryOp::Tanh, _))).count();
        assert_eq!(tanh, 10 + 8 + 1);
        let muls = d.nodes().iter().filter(|n| matches!(n, DagNode::Binary(BinaryOp::Mul, _, _))).count();
        assert_eq!(muls, 10 * 2 + 8 * 10 + 8);
    }

    #[test]
    fn dimension_errors() {
        let bad = vec![
            layer(vec![vec![1.0, 2.0]; 3], vec![0.0; 3], Activation::Tanh),
            layer(vec![vec![1.0, 2.0]], vec![0.0], Activation::Linear),
        ];
        assert!(matches!(validate_layers(&bad, None), Err(MlpError::DimensionMismatch { layer: 1, .. })));
        assert!(matches!(validate_layers(&[], None), Err(MlpError::Empty)));
        let mut d = Dag::new();
        let x = d.var(0);
        let two_in = layer(vec![vec![1.0, 2.0]], vec![0.0], Activation::Tanh);
        assert!(build_mlp(&mut d, &[two_in], &[x]).is_err());
    }

    #[test]
    fn json_schema() {
        let text = r#"[{"W": [[1.0, 2.0]], "b": [0.5], "activation": "tanh"},
                       {"W": [[3.0]], "b": [0.0], "activation": "linear"}]"#;
        let layers = parse_ann_weights(text).unwrap();
        assert_eq!(layers.len(), 2);
        assert_eq!(layers[0].inputs(), Some(2));
        assert_eq!(layers[1].activation, Activation::Linear);
        assert!(parse_ann_weights("[]").is_err());
        assert!(parse_ann_weights(r#"[{"W": [[1]], "b": [0], "activation": "relu"}]"#).is_err());
    }
}
