//! Scene-graph data model and the target-conditioned encoder.
//!
//! Nodes carry a 3D bounding box (position + extent) and a unit text
//! embedding. Real open-vocabulary encoders are out of scope here: the
//! embedding provider is a deterministic stand-in that hashes the label
//! into a seeded Gaussian draw and normalizes it. Distinct labels land
//! nearly orthogonal, identical labels land identical, so similarity
//! carries exact-match information and nothing else. Labels that should
//! alias can be mapped together through the scene's synonym table before
//! embedding.
//!
//! The encoder pools per-node features with softmax weights over the
//! cosine similarity between each node embedding and the target
//! embedding, collapsing a variable-size graph into one fixed vector.

use crate::rng::substream;
use crate::scene::Scene;
use rand::Rng;
use rand_distr::StandardNormal;
use std::path::Path;
use thiserror::Error;

/// Default embedding dimension for full-scale runs.
pub const D_EMB_DEFAULT: usize = 512;

/// Extent assigned to target-object nodes (the scene file stores only a
/// placement point for candidates).
pub const TARGET_EXTENT: [f64; 3] = [0.24, 0.24, 0.12];

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("label must be nonempty")]
    EmptyLabel,
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("cannot encode an empty graph")]
    EmptyGraph,
    #[error("graph parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

/// Encoder configuration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GraphConfig {
    /// Text-embedding dimension.
    pub d_emb: usize,
    /// Softmax temperature applied to cosine similarities.
    pub tau: f64,
    /// Positional jitter applied by [`graph_noise`].
    pub noise_sigma_pos: f64,
    /// Per-node drop probability applied by [`graph_noise`].
    pub noise_p_drop: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            d_emb: D_EMB_DEFAULT,
            tau: 0.1,
            noise_sigma_pos: 0.0,
            noise_p_drop: 0.0,
        }
    }
}

/// One object in the scene graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectNode {
    pub label: String,
    pub bbox_position: [f64; 3],
    pub bbox_extent: [f64; 3],
    /// Unit text embedding of the label.
    pub text_embedding: Vec<f64>,
    /// Marks the node standing in for the target object; never dropped
    /// by noise injection.
    pub is_target: bool,
}

impl ObjectNode {
    /// Per-node feature: position (3) + extent (3) + embedding (D).
    pub fn feature(&self) -> Vec<f64> {
        let mut f = Vec::with_capacity(6 + self.text_embedding.len());
        f.extend_from_slice(&self.bbox_position);
        f.extend_from_slice(&self.bbox_extent);
        f.extend_from_slice(&self.text_embedding);
        f
    }
}

/// Edge-free scene graph: an ordered list of object nodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneGraph {
    pub nodes: Vec<ObjectNode>,
}

/// Pooled graph feature, dimension `d_emb + 6`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphEncoding(pub Vec<f64>);

impl GraphEncoding {
    pub fn dim(d_emb: usize) -> usize {
        d_emb + 6
    }
}

/// Deterministic unit embedding of a label: seeded hash of the bytes,
/// expanded into a Gaussian vector, L2-normalized. Unrelated labels are
/// near-orthogonal for large `d_emb`; identical labels are identical.
pub fn pseudo_embed(label: &str, d_emb: usize) -> Result<Vec<f64>, GraphError> {
    if label.is_empty() {
        return Err(GraphError::EmptyLabel);
    }
    let mut rng = substream(0x6e6f6465, &format!("embed:{label}"));
    loop {
        let v: Vec<f64> = (0..d_emb).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // A Gaussian draw of norm ~0 is astronomically unlikely but would
        // otherwise break normalization; redraw.
        if norm > 1e-12 {
            return Ok(v.into_iter().map(|x| x / norm).collect());
        }
    }
}

/// Cosine similarity of two equal-length vectors.
pub fn cosine_sim(a: &[f64], b: &[f64]) -> Result<f64, GraphError> {
    assert_eq!(a.len(), b.len(), "cosine_sim dimension mismatch");
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(GraphError::ZeroVector);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Softmax pooling weights over node-target cosine similarities.
pub fn pooling_weights(
    graph: &SceneGraph,
    target_embedding: &[f64],
    tau: f64,
) -> Result<Vec<f64>, GraphError> {
    if graph.nodes.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    let sims = graph
        .nodes
        .iter()
        .map(|n| cosine_sim(&n.text_embedding, target_embedding))
        .collect::<Result<Vec<_>, _>>()?;
    let max = sims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = sims.iter().map(|s| ((s - max) / tau).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Pools node features into a single `d_emb + 6` vector with
/// similarity-softmax weights.
pub fn encode_graph(
    graph: &SceneGraph,
    target_embedding: &[f64],
    tau: f64,
) -> Result<GraphEncoding, GraphError> {
    let weights = pooling_weights(graph, target_embedding, tau)?;
    let dim = 6 + graph.nodes[0].text_embedding.len();
    let mut out = vec![0.0; dim];
    for (node, w) in graph.nodes.iter().zip(&weights) {
        for (o, f) in out.iter_mut().zip(node.feature()) {
            *o += w * f;
        }
    }
    Ok(GraphEncoding(out))
}

/// Builds the ground-truth graph of a scene: one node per obstacle plus
/// one node for the object actually present (the active target). Labels
/// pass through the scene's synonym table before embedding.
pub fn ground_truth_graph(scene: &Scene, d_emb: usize) -> SceneGraph {
    let mut nodes = Vec::with_capacity(scene.obstacles.len() + 1);
    for o in &scene.obstacles {
        let text = o.node_text();
        let canonical = scene.canonical_label(&text).to_string();
        let (pos, ext) = o.bbox3();
        nodes.push(ObjectNode {
            text_embedding: pseudo_embed(&canonical, d_emb).expect("obstacle labels validated"),
            label: canonical,
            bbox_position: pos,
            bbox_extent: ext,
            is_target: false,
        });
    }
    let t = scene.active();
    let canonical = scene.canonical_label(&t.label).to_string();
    nodes.push(ObjectNode {
        text_embedding: pseudo_embed(&canonical, d_emb).expect("target labels validated"),
        label: canonical,
        bbox_position: t.position,
        bbox_extent: TARGET_EXTENT,
        is_target: true,
    });
    SceneGraph { nodes }
}

/// Models imperfect graph construction: each non-target node is dropped
/// independently with probability `p_drop`, and Gaussian jitter of scale
/// `sigma_pos` is added to every surviving position component.
pub fn graph_noise<R: Rng>(
    graph: &SceneGraph,
    rng: &mut R,
    sigma_pos: f64,
    p_drop: f64,
) -> SceneGraph {
    assert!((0.0..1.0).contains(&p_drop), "p_drop must be in [0, 1)");
    let mut nodes = Vec::with_capacity(graph.nodes.len());
    for node in &graph.nodes {
        if !node.is_target && rng.random::<f64>() < p_drop {
            continue;
        }
        let mut n = node.clone();
        if sigma_pos > 0.0 {
            for c in n.bbox_position.iter_mut() {
                let eps: f64 = rng.sample(StandardNormal);
                *c += sigma_pos * eps;
            }
        }
        nodes.push(n);
    }
    SceneGraph { nodes }
}

// ---------------------------------------------------------------------
// Graph file format: line-oriented text, one record per node.
//
//   graph-format 1
//   node "red wall" pos 1.2 5 1 extent 0.24 6.4 2 target 0
//   node "bowl" pos 7.5 1 0.7 extent 0.24 0.24 0.12 target 1 emb 3fe...
//
// Numbers are written with Rust's shortest round-trip float formatting,
// so load(save(g)) == g bit for bit. The optional `emb` field stores the
// embedding as base-16 IEEE-754 bit patterns (16 hex digits per
// component); when absent the embedding is re-derived from the label.

const GRAPH_FORMAT_VERSION: u32 = 1;

fn hex_f64(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

fn parse_hex_f64(s: &str) -> Option<f64> {
    if s.len() != 16 {
        return None;
    }
    u64::from_str_radix(s, 16).ok().map(f64::from_bits)
}

/// Serializes a graph to the line-oriented text format.
pub fn graph_to_string(graph: &SceneGraph, explicit_embeddings: bool) -> String {
    let mut out = String::new();
    out.push_str(&format!("graph-format {GRAPH_FORMAT_VERSION}\n"));
    for node in &graph.nodes {
        out.push_str(&format!("node {:?}", node.label));
        out.push_str(&format!(
            " pos {} {} {}",
            node.bbox_position[0], node.bbox_position[1], node.bbox_position[2]
        ));
        out.push_str(&format!(
            " extent {} {} {}",
            node.bbox_extent[0], node.bbox_extent[1], node.bbox_extent[2]
        ));
        out.push_str(&format!(" target {}", u8::from(node.is_target)));
        if explicit_embeddings {
            out.push_str(" emb ");
            for x in &node.text_embedding {
                out.push_str(&hex_f64(*x));
            }
        }
        out.push('\n');
    }
    out
}

/// Splits a record line into tokens, honoring double-quoted strings with
/// `\"` and `\\` escapes.
fn tokenize(line: &str) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some('\\') => match chars.next() {
                        Some('"') => s.push('"'),
                        Some('\\') => s.push('\\'),
                        other => return Err(format!("bad escape {other:?}")),
                    },
                    Some(ch) => s.push(ch),
                    None => return Err("unterminated string".into()),
                }
            }
            tokens.push(s);
        } else {
            let mut s = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() {
                    break;
                }
                s.push(ch);
                chars.next();
            }
            tokens.push(s);
        }
    }
    Ok(tokens)
}

/// Parses the text format produced by [`graph_to_string`].
pub fn graph_from_str(text: &str, d_emb: usize) -> Result<SceneGraph, GraphError> {
    let err = |line: usize, message: &str| GraphError::Parse {
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((i, l)) => {
                let t = l.trim();
                if t.is_empty() || t.starts_with('#') {
                    continue;
                }
                break (i, t.to_string());
            }
            None => return Err(err(0, "empty file")),
        }
    };
    let (hline, htext) = header;
    let expect = format!("graph-format {GRAPH_FORMAT_VERSION}");
    if htext != expect {
        return Err(err(hline + 1, &format!("expected header {expect:?}")));
    }
    let mut nodes = Vec::new();
    for (i, raw) in lines {
        let line_no = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens = tokenize(trimmed).map_err(|m| err(line_no, &m))?;
        if tokens.first().map(String::as_str) != Some("node") {
            return Err(err(line_no, "expected 'node' record"));
        }
        let label = tokens
            .get(1)
            .ok_or_else(|| err(line_no, "missing label"))?
            .clone();
        if label.is_empty() {
            return Err(GraphError::EmptyLabel);
        }
        let mut pos = None;
        let mut extent = None;
        let mut is_target = false;
        let mut emb: Option<Vec<f64>> = None;
        let mut k = 2;
        let take3 = |tokens: &[String], k: usize| -> Option<[f64; 3]> {
            let a = tokens.get(k)?.parse().ok()?;
            let b = tokens.get(k + 1)?.parse().ok()?;
            let c = tokens.get(k + 2)?.parse().ok()?;
            Some([a, b, c])
        };
        while k < tokens.len() {
            match tokens[k].as_str() {
                "pos" => {
                    pos = Some(take3(&tokens, k + 1).ok_or_else(|| err(line_no, "bad pos"))?);
                    k += 4;
                }
                "extent" => {
                    extent =
                        Some(take3(&tokens, k + 1).ok_or_else(|| err(line_no, "bad extent"))?);
                    k += 4;
                }
                "target" => {
                    let flag = tokens
                        .get(k + 1)
                        .and_then(|t| t.parse::<u8>().ok())
                        .ok_or_else(|| err(line_no, "bad target flag"))?;
                    is_target = flag != 0;
                    k += 2;
                }
                "emb" => {
                    let blob = tokens
                        .get(k + 1)
                        .ok_or_else(|| err(line_no, "missing emb payload"))?;
                    if blob.len() % 16 != 0 {
                        return Err(err(line_no, "emb payload length not a multiple of 16"));
                    }
                    let mut v = Vec::with_capacity(blob.len() / 16);
                    for chunk in 0..blob.len() / 16 {
                        let s = &blob[chunk * 16..(chunk + 1) * 16];
                        v.push(
                            parse_hex_f64(s)
                                .ok_or_else(|| err(line_no, "bad hex float in emb"))?,
                        );
                    }
                    emb = Some(v);
                    k += 2;
                }
                other => return Err(err(line_no, &format!("unknown field {other:?}"))),
            }
        }
        let bbox_position = pos.ok_or_else(|| err(line_no, "missing pos"))?;
        let bbox_extent = extent.ok_or_else(|| err(line_no, "missing extent"))?;
        let text_embedding = match emb {
            Some(v) => v,
            None => pseudo_embed(&label, d_emb)?,
        };
        nodes.push(ObjectNode {
            label,
            bbox_position,
            bbox_extent,
            text_embedding,
            is_target,
        });
    }
    Ok(SceneGraph { nodes })
}

pub fn save_graph(graph: &SceneGraph, path: &Path) -> Result<(), GraphError> {
    std::fs::write(path, graph_to_string(graph, true)).map_err(|e| GraphError::Io(e.to_string()))
}

pub fn load_graph(path: &Path, d_emb: usize) -> Result<SceneGraph, GraphError> {
    let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io(e.to_string()))?;
    graph_from_str(&text, d_emb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::scene::{Bounds, Obstacle, ObstacleShape, TargetCandidate, SCENE_FORMAT_VERSION};
    use rand::seq::SliceRandom;

    fn unit_graph(labels: &[&str], d: usize) -> SceneGraph {
        SceneGraph {
            nodes: labels
                .iter()
                .enumerate()
                .map(|(i, l)| ObjectNode {
                    label: l.to_string(),
                    bbox_position: [i as f64, 2.0 * i as f64, 0.5],
                    bbox_extent: [1.0, 1.0, 1.0],
                    text_embedding: pseudo_embed(l, d).unwrap(),
                    is_target: false,
                })
                .collect(),
        }
    }

    #[test]
    fn pseudo_embed_is_deterministic_and_unit() {
        let a = pseudo_embed("bowl", 512).unwrap();
        let b = pseudo_embed("bowl", 512).unwrap();
        assert_eq!(a, b);
        let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-6);
        assert_eq!(pseudo_embed("", 512), Err(GraphError::EmptyLabel));
    }

    #[test]
    fn distinct_labels_are_nearly_orthogonal() {
        // Concentration of random unit vectors in 512-d: |cos| stays small.
        let labels: Vec<String> = (0..100).map(|i| format!("object-{i}")).collect();
        let embs: Vec<Vec<f64>> =
            labels.iter().map(|l| pseudo_embed(l, 512).unwrap()).collect();
        let mut max_abs: f64 = 0.0;
        for i in 0..embs.len() {
            for j in (i + 1)..embs.len() {
                max_abs = max_abs.max(cosine_sim(&embs[i], &embs[j]).unwrap().abs());
            }
        }
        assert!(max_abs < 0.2, "max |cos| = {max_abs}");
    }

    #[test]
    fn cosine_basics() {
        let v = pseudo_embed("chair", 64).unwrap();
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        assert!((cosine_sim(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine_sim(&v, &neg).unwrap() + 1.0).abs() < 1e-12);
        let e1 = {
            let mut e = vec![0.0; 8];
            e[0] = 1.0;
            e
        };
        let e2 = {
            let mut e = vec![0.0; 8];
            e[1] = 1.0;
            e
        };
        assert_eq!(cosine_sim(&e1, &e2).unwrap(), 0.0);
        assert_eq!(cosine_sim(&e1, &vec![0.0; 8]), Err(GraphError::ZeroVector));
    }

    #[test]
    fn single_node_encoding_is_identity() {
        let g = unit_graph(&["bowl"], 32);
        let t = pseudo_embed("anything", 32).unwrap();
        let enc = encode_graph(&g, &t, 0.1).unwrap();
        assert_eq!(enc.0, g.nodes[0].feature());
    }

    #[test]
    fn identical_embeddings_pool_to_mean() {
        let mut g = unit_graph(&["bowl", "bowl"], 32);
        g.nodes[1].bbox_position = [9.0, 9.0, 9.0];
        let t = pseudo_embed("target", 32).unwrap();
        let enc = encode_graph(&g, &t, 0.1).unwrap();
        let f0 = g.nodes[0].feature();
        let f1 = g.nodes[1].feature();
        for (k, e) in enc.0.iter().enumerate() {
            assert!((e - 0.5 * (f0[k] + f1[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn low_temperature_selects_matching_node() {
        // Brute-force softmax oracle at tau = 1e-3: weight of the exact
        // match saturates and the encoding converges to its feature.
        let g = unit_graph(&["table", "bowl", "red wall"], 32);
        let t = pseudo_embed("bowl", 32).unwrap();
        let enc = encode_graph(&g, &t, 1e-3).unwrap();
        let f = g.nodes[1].feature();
        for (a, b) in enc.0.iter().zip(&f) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn weights_normalize_and_argmax_tracks_similarity() {
        let g = unit_graph(&["table", "bowl", "red wall", "chair"], 48);
        let t = pseudo_embed("bowl", 48).unwrap();
        let w = pooling_weights(&g, &t, 0.1).unwrap();
        let sum: f64 = w.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-9);
        let argmax_w = w
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let sims: Vec<f64> = g
            .nodes
            .iter()
            .map(|n| cosine_sim(&n.text_embedding, &t).unwrap())
            .collect();
        let argmax_s = sims
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax_w, argmax_s);
        assert_eq!(argmax_w, 1);
    }

    #[test]
    fn encoding_is_permutation_invariant() {
        let g = unit_graph(&["a", "b", "c", "d", "e"], 24);
        let t = pseudo_embed("c", 24).unwrap();
        let base = encode_graph(&g, &t, 0.1).unwrap();
        let mut rng = substream(5, "perm");
        for _ in 0..20 {
            let mut shuffled = g.clone();
            shuffled.nodes.shuffle(&mut rng);
            let enc = encode_graph(&shuffled, &t, 0.1).unwrap();
            for (a, b) in enc.0.iter().zip(&base.0) {
                assert!((a - b).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn empty_graph_rejected() {
        let g = SceneGraph { nodes: vec![] };
        let t = pseudo_embed("bowl", 8).unwrap();
        assert_eq!(
            encode_graph(&g, &t, 0.1).unwrap_err(),
            GraphError::EmptyGraph
        );
    }

    fn two_object_scene() -> Scene {
        Scene {
            version: SCENE_FORMAT_VERSION,
            bounds: Bounds {
                min: [0.0, 0.0],
                max: [10.0, 10.0],
            },
            obstacles: vec![Obstacle {
                label: "table".into(),
                color: String::new(),
                center: [5.0, 8.0],
                height: 0.8,
                shape: ObstacleShape::Box {
                    half_extents: [1.5, 0.5],
                },
            }],
            target_candidates: vec![TargetCandidate {
                label: "bowl".into(),
                position: [5.0, 7.6, 0.7],
            }],
            active_target: 0,
            synonyms: Default::default(),
        }
    }

    #[test]
    fn ground_truth_graph_has_one_node_per_object() {
        let scene = two_object_scene();
        let g = ground_truth_graph(&scene, 16);
        assert_eq!(g.nodes.len(), 2);
        assert!(g.nodes[1].is_target);
        assert_eq!(g.nodes[1].bbox_position, [5.0, 7.6, 0.7]);
        assert_eq!(g.nodes[0].bbox_extent, [3.0, 1.0, 0.8]);

        let mut no_obstacles = scene.clone();
        no_obstacles.obstacles.clear();
        assert_eq!(ground_truth_graph(&no_obstacles, 16).nodes.len(), 1);
    }

    #[test]
    fn graph_noise_identity_and_target_retention() {
        let scene = two_object_scene();
        let g = ground_truth_graph(&scene, 16);
        let mut rng = substream(9, "noise");
        assert_eq!(graph_noise(&g, &mut rng, 0.0, 0.0), g);

        let mut five = g.clone();
        for i in 0..4 {
            let mut n = g.nodes[0].clone();
            n.label = format!("extra-{i}");
            five.nodes.insert(0, n);
        }
        let mut survivors_total = 0;
        for _ in 0..200 {
            let noisy = graph_noise(&five, &mut rng, 0.0, 0.999);
            assert!(noisy.nodes.iter().any(|n| n.is_target), "target dropped");
            survivors_total += noisy.nodes.len() - 1;
        }
        // 5 non-target nodes * 200 trials * 0.001 keep rate ~= 1 survivor.
        assert!(survivors_total < 20, "non-target survivors: {survivors_total}");
    }

    #[test]
    fn graph_noise_displacement_rms() {
        // Gaussian norm statistics: E[|delta|^2] = 3 sigma^2.
        let scene = two_object_scene();
        let g = ground_truth_graph(&scene, 8);
        let mut rng = substream(11, "noise-rms");
        let sigma = 0.1;
        let n = 1000;
        let mut sq = 0.0;
        for _ in 0..n {
            let noisy = graph_noise(&g, &mut rng, sigma, 0.0);
            for (a, b) in noisy.nodes.iter().zip(&g.nodes) {
                let d: f64 = a
                    .bbox_position
                    .iter()
                    .zip(&b.bbox_position)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                sq += d;
            }
        }
        let rms = (sq / (n as f64 * g.nodes.len() as f64)).sqrt();
        let expected = sigma * 3.0_f64.sqrt();
        assert!(
            (rms - expected).abs() < 0.015,
            "rms {rms} vs expected {expected}"
        );
    }

    #[test]
    fn file_round_trip_is_bit_identical() {
        let scene = two_object_scene();
        let mut g = ground_truth_graph(&scene, 32);
        g.nodes[0].bbox_position = [0.1 + 0.2, -3.7e-13, 9.999999999];
        let text = graph_to_string(&g, true);
        let back = graph_from_str(&text, 32).unwrap();
        assert_eq!(g, back);
        // Without explicit embeddings the label re-derives the same vector.
        let text = graph_to_string(&g, false);
        let back = graph_from_str(&text, 32).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "graph-format 1\nnode \"a\" pos 1 2\n";
        match graph_from_str(bad, 8) {
            Err(GraphError::Parse { line: 2, .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        assert!(graph_from_str("graph-format 7\n", 8).is_err());
    }

    #[test]
    fn labels_with_quotes_round_trip() {
        let mut g = unit_graph(&["bowl"], 8);
        g.nodes[0].label = "shelf \"A\" \\ corner".into();
        let text = graph_to_string(&g, true);
        let back = graph_from_str(&text, 8).unwrap();
        assert_eq!(back.nodes[0].label, g.nodes[0].label);
    }
}
