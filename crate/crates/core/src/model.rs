//! Fixed-point classifiers: ReLU multilayer perceptrons and random forests.
//!
//! Model files are JSON with an explicit scale and raw integer arrays:
//!
//! ```json
//! {"version":1,"scale":10000,"input_dim":2,"kind":"mlp",
//!  "layers":[{"weights":[[10000,0]],"bias":[0]}]}
//! ```
//!
//! A forest stores each tree as a node array rooted at index 0:
//! `{"split":{"feature":0,"threshold":0,"left":1,"right":2}}` or `{"leaf":1}`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{dot_raw, FixedPoint, FixedVec, NumericError};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("input has {found} features, model expects {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("input scale {found} does not match model scale {expected}")]
    Scale { expected: i64, found: i64 },
    #[error("bad architecture descriptor `{0}`")]
    Architecture(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Binary class id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u8);

impl Label {
    pub const ZERO: Label = Label(0);
    pub const ONE: Label = Label(1);

    pub fn flipped(self) -> Label {
        Label(1 - self.0.min(1))
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layer {
    /// Row-major `out x in` matrix.
    pub weights: Vec<Vec<i64>>,
    pub bias: Vec<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: i64,
        left: usize,
        right: usize,
    },
    Leaf(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Walk from the root; `x[feature] <= threshold` goes left.
    fn predict(&self, x: &[i64]) -> Label {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(label) => return Label(label),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    Mlp { layers: Vec<Layer> },
    Forest { trees: Vec<Tree> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelWeights {
    pub version: u32,
    pub scale: i64,
    pub input_dim: usize,
    #[serde(flatten)]
    pub kind: ModelKind,
}

impl ModelWeights {
    pub fn mlp(scale: i64, input_dim: usize, layers: Vec<Layer>) -> Result<Self, ModelError> {
        let m = Self {
            version: MODEL_VERSION,
            scale,
            input_dim,
            kind: ModelKind::Mlp { layers },
        };
        m.validate()?;
        Ok(m)
    }

    pub fn forest(scale: i64, input_dim: usize, trees: Vec<Tree>) -> Result<Self, ModelError> {
        let m = Self {
            version: MODEL_VERSION,
            scale,
            input_dim,
            kind: ModelKind::Forest { trees },
        };
        m.validate()?;
        Ok(m)
    }

    /// Single-logit linear classifier: label 1 iff `coef . x + bias > 0`.
    pub fn linear(coef: &[f64], bias: f64, scale: i64) -> Result<Self, ModelError> {
        let weights = vec![FixedVec::quantize(coef, scale)?.raw];
        let bias = vec![FixedPoint::quantize(bias, scale)?.raw];
        Self::mlp(scale, coef.len(), vec![Layer { weights, bias }])
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::Invalid(msg));
        if self.version != MODEL_VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        if self.scale <= 0 {
            return bad(format!("scale must be positive, got {}", self.scale));
        }
        if self.input_dim == 0 {
            return bad("input_dim must be at least 1".into());
        }
        match &self.kind {
            ModelKind::Mlp { layers } => {
                if layers.is_empty() {
                    return bad("mlp has no layers".into());
                }
                let mut width = self.input_dim;
                for (li, layer) in layers.iter().enumerate() {
                    if layer.weights.is_empty() {
                        return bad(format!("layers[{li}]: no output units"));
                    }
                    for (ri, row) in layer.weights.iter().enumerate() {
                        if row.len() != width {
                            return bad(format!(
                                "layers[{li}].weights[{ri}]: expected {width} entries, found {}",
                                row.len()
                            ));
                        }
                    }
                    if layer.bias.len() != layer.weights.len() {
                        return bad(format!(
                            "layers[{li}].bias: expected {} entries, found {}",
                            layer.weights.len(),
                            layer.bias.len()
                        ));
                    }
                    width = layer.weights.len();
                }
                if width > 2 {
                    return bad(format!(
                        "output layer has {width} units; binary models need 1 or 2"
                    ));
                }
            }
            ModelKind::Forest { trees } => {
                if trees.is_empty() {
                    return bad("forest has no trees".into());
                }
                for (ti, tree) in trees.iter().enumerate() {
                    self.validate_tree(ti, tree)?;
                }
            }
        }
        Ok(())
    }

    fn validate_tree(&self, ti: usize, tree: &Tree) -> Result<(), ModelError> {
        let n = tree.nodes.len();
        if n == 0 {
            return Err(ModelError::Invalid(format!("trees[{ti}]: empty")));
        }
        // every node reachable from the root must be visited at most once,
        // which rules out cycles and shared subtrees
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        while let Some(at) = stack.pop() {
            if seen[at] {
                return Err(ModelError::Invalid(format!(
                    "trees[{ti}]: node {at} reached twice (cycle or shared child)"
                )));
            }
            seen[at] = true;
            match tree.nodes[at] {
                Node::Leaf(label) => {
                    if label > 1 {
                        return Err(ModelError::Invalid(format!(
                            "trees[{ti}].nodes[{at}]: label {label} is not binary"
                        )));
                    }
                }
                Node::Split {
                    feature, left, right, ..
                } => {
                    if feature >= self.input_dim {
                        return Err(ModelError::Invalid(format!(
                            "trees[{ti}].nodes[{at}]: feature {feature} >= input_dim {}",
                            self.input_dim
                        )));
                    }
                    for child in [left, right] {
                        if child >= n {
                            return Err(ModelError::Invalid(format!(
                                "trees[{ti}].nodes[{at}]: child {child} out of range ({n} nodes)"
                            )));
                        }
                        stack.push(child);
                    }
                }
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &[i64]) -> Result<(), ModelError> {
        if x.len() != self.input_dim {
            return Err(ModelError::Dimension {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Classify a raw input at the model's scale.
    pub fn infer(&self, x: &[i64]) -> Result<Label, ModelError> {
        self.check_input(x)?;
        match &self.kind {
            ModelKind::Mlp { layers } => {
                let mut h = x.to_vec();
                for (li, layer) in layers.iter().enumerate() {
                    let last = li + 1 == layers.len();
                    let mut next = Vec::with_capacity(layer.weights.len());
                    for (row, &b) in layer.weights.iter().zip(&layer.bias) {
                        let mut v = dot_raw(row, &h, self.scale)?.checked_add(b).ok_or_else(|| {
                            NumericError::Overflow {
                                value: "layer pre-activation".into(),
                                scale: self.scale,
                            }
                        })?;
                        if !last {
                            v = v.max(0);
                        }
                        next.push(v);
                    }
                    h = next;
                }
                Ok(match h.as_slice() {
                    [logit] => Label((*logit > 0) as u8),
                    // ties go to the lower class
                    [l0, l1] => Label((l1 > l0) as u8),
                    _ => unreachable!("validated output width"),
                })
            }
            ModelKind::Forest { trees } => {
                let ones = trees.iter().filter(|t| t.predict(x) == Label::ONE).count();
                // ties go to class 0
                Ok(Label((2 * ones > trees.len()) as u8))
            }
        }
    }

    pub fn infer_fixed(&self, x: &FixedVec) -> Result<Label, ModelError> {
        if x.scale != self.scale {
            return Err(ModelError::Scale {
                expected: self.scale,
                found: x.scale,
            });
        }
        self.infer(&x.raw)
    }

    /// Classify each row; order preserving.
    pub fn infer_batch<R: AsRef<[i64]> + Sync>(&self, xs: &[R]) -> Result<Vec<Label>, ModelError> {
        if xs.len() >= 64 {
            xs.par_iter().map(|x| self.infer(x.as_ref())).collect()
        } else {
            xs.iter().map(|x| self.infer(x.as_ref())).collect()
        }
    }

    /// Classify `rows` stored contiguously, `input_dim` values per row.
    pub fn infer_rows(&self, flat: &[i64]) -> Result<Vec<Label>, ModelError> {
        let rows: Vec<&[i64]> = flat.chunks(self.input_dim).collect();
        self.infer_batch(&rows)
    }

    pub fn architecture(&self) -> Architecture {
        match &self.kind {
            ModelKind::Mlp { layers } => {
                let mut dims = vec![self.input_dim];
                dims.extend(layers.iter().map(|l| l.weights.len()));
                Architecture::Mlp { dims }
            }
            ModelKind::Forest { trees } => Architecture::Forest {
                input_dim: self.input_dim,
                trees: trees.len(),
                depth: trees.iter().map(tree_depth).max().unwrap_or(0),
            },
        }
    }
}

fn tree_depth(tree: &Tree) -> usize {
    fn go(tree: &Tree, at: usize) -> usize {
        match tree.nodes[at] {
            Node::Leaf(_) => 0,
            Node::Split { left, right, .. } => 1 + go(tree, left).max(go(tree, right)),
        }
    }
    go(tree, 0)
}

/// Public shape of a model: `mlp:14,16,16,2` or `forest:14,5,4`
/// (input dimension, tree count, depth).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Architecture {
    Mlp {
        dims: Vec<usize>,
    },
    Forest {
        input_dim: usize,
        trees: usize,
        depth: usize,
    },
}

impl Architecture {
    pub fn input_dim(&self) -> usize {
        match self {
            Architecture::Mlp { dims } => dims[0],
            Architecture::Forest { input_dim, .. } => *input_dim,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Architecture::Mlp { dims } => {
                let dims: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
                write!(f, "mlp:{}", dims.join(","))
            }
            Architecture::Forest {
                input_dim,
                trees,
                depth,
            } => write!(f, "forest:{input_dim},{trees},{depth}"),
        }
    }
}

impl FromStr for Architecture {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ModelError::Architecture(s.to_string());
        let (kind, rest) = s.split_once(':').ok_or_else(err)?;
        let nums: Vec<usize> = rest
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| err())?;
        if nums.contains(&0) {
            return Err(err());
        }
        match (kind, nums.as_slice()) {
            ("mlp", dims) if dims.len() >= 2 && *dims.last().unwrap() <= 2 => {
                Ok(Architecture::Mlp { dims: dims.to_vec() })
            }
            ("forest", &[input_dim, trees, depth]) => Ok(Architecture::Forest {
                input_dim,
                trees,
                depth,
            }),
            _ => Err(err()),
        }
    }
}

/// Reproducible pseudo-random model with the given shape.
pub fn synthesize_model(arch: &Architecture, seed: u64, scale: i64) -> Result<ModelWeights, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match arch {
        Architecture::Mlp { dims } => {
            let mut layers = Vec::with_capacity(dims.len() - 1);
            for w in dims.windows(2) {
                let (fan_in, fan_out) = (w[0], w[1]);
                let std = (2.0 / fan_in as f64).sqrt();
                let normal = Normal::new(0.0, std).expect("positive std");
                let bias_normal = Normal::new(0.0, 0.1).expect("positive std");
                let weights = (0..fan_out)
                    .map(|_| {
                        (0..fan_in)
                            .map(|_| FixedPoint::quantize(normal.sample(&mut rng), scale).map(|v| v.raw))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let bias = (0..fan_out)
                    .map(|_| FixedPoint::quantize(bias_normal.sample(&mut rng), scale).map(|v| v.raw))
                    .collect::<Result<Vec<_>, _>>()?;
                layers.push(Layer { weights, bias });
            }
            ModelWeights::mlp(scale, dims[0], layers)
        }
        Architecture::Forest {
            input_dim,
            trees,
            depth,
        } => {
            let thr = Normal::new(0.0, 0.5).expect("positive std");
            let trees = (0..*trees)
                .map(|_| {
                    let mut nodes = Vec::new();
                    grow(&mut nodes, *depth, *input_dim, scale, &thr, &mut rng)?;
                    Ok(Tree { nodes })
                })
                .collect::<Result<Vec<_>, ModelError>>()?;
            ModelWeights::forest(scale, *input_dim, trees)
        }
    }
}

fn grow(
    nodes: &mut Vec<Node>,
    depth: usize,
    input_dim: usize,
    scale: i64,
    thr: &Normal<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<usize, ModelError> {
    let at = nodes.len();
    if depth == 0 {
        nodes.push(Node::Leaf(rng.random_range(0..=1)));
        return Ok(at);
    }
    nodes.push(Node::Leaf(0));
    let feature = rng.random_range(0..input_dim);
    let threshold = FixedPoint::quantize(thr.sample(rng), scale)?.raw;
    let left = grow(nodes, depth - 1, input_dim, scale, thr, rng)?;
    let right = grow(nodes, depth - 1, input_dim, scale, thr, rng)?;
    nodes[at] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    Ok(at)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::DEFAULT_SCALE;

    const S: i64 = DEFAULT_SCALE;

    fn q(x: f64) -> i64 {
        FixedPoint::quantize(x, S).unwrap().raw
    }

    fn stump() -> ModelWeights {
        ModelWeights::forest(
            S,
            2,
            vec![Tree {
                nodes: vec![
                    Node::Split {
                        feature: 0,
                        threshold: 0,
                        left: 1,
                        right: 2,
                    },
                    Node::Leaf(0),
                    Node::Leaf(1),
                ],
            }],
        )
        .unwrap()
    }

    #[test]
    fn sign_network() {
        let m = ModelWeights::linear(&[1.0], 0.0, S).unwrap();
        assert_eq!(m.infer(&[q(0.5)]).unwrap(), Label::ONE);
        assert_eq!(m.infer(&[q(-0.5)]).unwrap(), Label::ZERO);
        assert_eq!(m.infer(&[0]).unwrap(), Label::ZERO);
        assert_eq!(
            m.infer_batch(&[vec![q(0.5)], vec![q(-0.5)], vec![0]]).unwrap(),
            vec![Label::ONE, Label::ZERO, Label::ZERO]
        );
    }

    #[test]
    fn decision_stump() {
        let m = stump();
        assert_eq!(m.infer(&[q(0.3), q(-7.0)]).unwrap(), Label::ONE);
        assert_eq!(m.infer(&[0, 0]).unwrap(), Label::ZERO);
        assert_eq!(
            m.infer_rows(&[q(0.3), 0, q(-0.3), 0, q(1.0), 0]).unwrap(),
            vec![Label::ONE, Label::ZERO, Label::ONE]
        );
    }

    #[test]
    fn two_logit_tie_goes_low() {
        let layer = Layer {
            weights: vec![vec![S], vec![S]],
            bias: vec![0, 0],
        };
        let m = ModelWeights::mlp(S, 1, vec![layer]).unwrap();
        assert_eq!(m.infer(&[q(3.0)]).unwrap(), Label::ZERO);
    }

    #[test]
    fn forest_vote_tie_goes_to_zero() {
        let leaf = |l| Tree {
            nodes: vec![Node::Leaf(l)],
        };
        let m = ModelWeights::forest(S, 1, vec![leaf(0), leaf(1)]).unwrap();
        assert_eq!(m.infer(&[0]).unwrap(), Label::ZERO);
        let m = ModelWeights::forest(S, 1, vec![leaf(1), leaf(1), leaf(0)]).unwrap();
        assert_eq!(m.infer(&[0]).unwrap(), Label::ONE);
    }

    #[test]
    fn dimension_and_scale_errors() {
        let m = stump();
        assert!(matches!(
            m.infer(&[0]),
            Err(ModelError::Dimension {
                expected: 2,
                found: 1
            })
        ));
        assert!(matches!(
            m.infer_fixed(&FixedVec::new(vec![0, 0], 100)),
            Err(ModelError::Scale { .. })
        ));
    }

    #[test]
    fn loader_rejects_malformed() {
        let bad_chain = r#"{"version":1,"scale":10000,"input_dim":2,"kind":"mlp",
            "layers":[{"weights":[[1,2],[3,4]],"bias":[0,0]},{"weights":[[1,2,3]],"bias":[0]}]}"#;
        let err = ModelWeights::from_json(bad_chain).unwrap_err().to_string();
        assert!(err.contains("layers[1].weights[0]"), "{err}");

        let cycle = r#"{"version":1,"scale":10000,"input_dim":1,"kind":"forest",
            "trees":[{"nodes":[{"split":{"feature":0,"threshold":0,"left":0,"right":1}},{"leaf":1}]}]}"#;
        let err = ModelWeights::from_json(cycle).unwrap_err().to_string();
        assert!(err.contains("reached twice"), "{err}");

        let feat = r#"{"version":1,"scale":10000,"input_dim":1,"kind":"forest",
            "trees":[{"nodes":[{"split":{"feature":3,"threshold":0,"left":1,"right":2}},{"leaf":1},{"leaf":0}]}]}"#;
        let err = ModelWeights::from_json(feat).unwrap_err().to_string();
        assert!(err.contains("feature 3"), "{err}");

        let wide = r#"{"version":1,"scale":10000,"input_dim":1,"kind":"mlp",
            "layers":[{"weights":[[1],[1],[1]],"bias":[0,0,0]}]}"#;
        assert!(ModelWeights::from_json(wide).is_err());
        assert!(ModelWeights::from_json("{").is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = synthesize_model(&"forest:4,3,3".parse().unwrap(), 9, S).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(ModelWeights::from_json(&text).unwrap(), m);
        let m = synthesize_model(&"mlp:4,8,2".parse().unwrap(), 9, S).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains(r#""kind":"mlp""#));
        assert_eq!(ModelWeights::from_json(&text).unwrap(), m);
    }

    #[test]
    fn synthesize_is_seeded() {
        let arch: Architecture = "mlp:14,16,16,2".parse().unwrap();
        let a = synthesize_model(&arch, 1, S).unwrap();
        assert_eq!(a, synthesize_model(&arch, 1, S).unwrap());
        assert_ne!(a, synthesize_model(&arch, 2, S).unwrap());
        assert_eq!(a.input_dim, 14);
        assert_eq!(a.architecture(), arch);
        let f: Architecture = "forest:20,5,4".parse().unwrap();
        assert_eq!(synthesize_model(&f, 3, S).unwrap().architecture(), f);
    }

    #[test]
    fn architecture_parsing() {
        assert_eq!(
            "mlp:14,16,16,2".parse::<Architecture>().unwrap().to_string(),
            "mlp:14,16,16,2"
        );
        for bad in [
            "mlp:14",
            "mlp:3,3",
            "forest:1,2",
            "tree:1,2,3",
            "mlp:0,2",
            "mlp:a,2",
        ] {
            assert!(bad.parse::<Architecture>().is_err(), "{bad}");
        }
    }

    #[test]
    fn mlp_is_deterministic() {
        let m = synthesize_model(&"mlp:2,16,16,2".parse().unwrap(), 42, S).unwrap();
        let x = [q(0.37), q(-1.2)];
        let first = m.infer(&x).unwrap();
        for _ in 0..1000 {
            assert_eq!(m.infer(&x).unwrap(), first);
        }
    }

    /// Exact integer evaluation of one layer from the same quantized input:
    /// the fixed-point output must be within half an ulp of the rational value.
    #[test]
    fn mlp_layers_match_rational_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..50 {
            let m = synthesize_model(&"mlp:2,4,2".parse().unwrap(), seed, S).unwrap();
            let ModelKind::Mlp { layers } = &m.kind else {
                unreachable!()
            };
            let x: Vec<i64> = (0..2).map(|_| rng.random_range(-30_000..30_000)).collect();
            let mut ours = x.clone();
            let mut exact: Vec<f64> = x.iter().map(|&v| v as f64 / S as f64).collect();
            for (li, layer) in layers.iter().enumerate() {
                let last = li + 1 == layers.len();
                let mut next_ours = vec![];
                let mut next_exact = vec![];
                for (row, &b) in layer.weights.iter().zip(&layer.bias) {
                    // numerators are small integers, so f64 sums are exact here
                    let num: f64 = row.iter().zip(&ours).map(|(&w, &h)| (w * h) as f64).sum();
                    let ref_from_ours = num / (S * S) as f64 + b as f64 / S as f64;
                    let mut got = dot_raw(row, &ours, S).unwrap() + b;
                    let mut want = ref_from_ours;
                    if !last {
                        got = got.max(0);
                        want = want.max(0.0);
                    }
                    assert!((got as f64 / S as f64 - want).abs() <= 0.5 / S as f64 + 1e-12);
                    let full: f64 = row
                        .iter()
                        .zip(&exact)
                        .map(|(&w, &h)| w as f64 / S as f64 * h)
                        .sum::<f64>()
                        + b as f64 / S as f64;
                    next_exact.push(if last { full } else { full.max(0.0) });
                    next_ours.push(got);
                }
                // accumulated drift stays within a few ulps per layer
                for (o, e) in next_ours.iter().zip(&next_exact) {
                    assert!((*o as f64 / S as f64 - e).abs() <= (li + 1) as f64 * 4.0 / S as f64);
                }
                ours = next_ours;
                exact = next_exact;
            }
        }
    }

    /// Independent forest oracle: explicit vote counting with class-0 ties.
    #[test]
    fn forest_matches_vote_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..20 {
            let m = synthesize_model(&"forest:5,5,4".parse().unwrap(), seed, S).unwrap();
            let ModelKind::Forest { trees } = &m.kind else {
                unreachable!()
            };
            for _ in 0..50 {
                let x: Vec<i64> = (0..5).map(|_| rng.random_range(-20_000..20_000)).collect();
                let mut votes = [0usize; 2];
                for t in trees {
                    let mut at = 0;
                    let label = loop {
                        match &t.nodes[at] {
                            Node::Leaf(l) => break *l,
                            Node::Split {
                                feature,
                                threshold,
                                left,
                                right,
                            } => {
                                at = if x[*feature] > *threshold { *right } else { *left };
                            }
                        }
                    };
                    votes[label as usize] += 1;
                }
                let want = if votes[1] > votes[0] { 1 } else { 0 };
                assert_eq!(m.infer(&x).unwrap(), Label(want));
            }
        }
    }
}
