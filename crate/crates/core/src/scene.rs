//! Geometry primitives, scene descriptions, and the collision /
//! admissibility predicates that define the set of valid robot states.
//!
//! A scene is a 2D top-down world: an axis-aligned rectangular room with
//! axis-aligned box and circle obstacles. Object positions keep a z
//! coordinate because the scene-graph features are 3D, but navigation is
//! planar. The robot footprint is a disc, which keeps every collision
//! test rotation-invariant and closed-form.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use thiserror::Error;

/// Scene file format version accepted by this build.
pub const SCENE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("scene parse error: {0}")]
    Parse(String),
    #[error("unsupported scene format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("invalid scene: {0}")]
    Invalid(String),
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let wrapped = a - two_pi * ((a + PI) / two_pi).floor();
    // floor() rounding can land exactly on pi; fold it back.
    if wrapped >= PI {
        wrapped - two_pi
    } else {
        wrapped
    }
}

/// Planar robot configuration. `theta` is kept normalized to `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn distance_to(&self, point: [f64; 2]) -> f64 {
        (self.x - point[0]).hypot(self.y - point[1])
    }

    /// Bearing from this pose to `point`; `atan2(0, 0) = 0` when coincident.
    pub fn bearing_to(&self, point: [f64; 2]) -> f64 {
        (point[1] - self.y).atan2(point[0] - self.x)
    }
}

/// 2-DoF velocity command: linear and angular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Twist {
    pub v: f64,
    pub w: f64,
}

impl Twist {
    pub const ZERO: Twist = Twist { v: 0.0, w: 0.0 };

    pub fn new(v: f64, w: f64) -> Self {
        Twist { v, w }
    }

    /// Membership in the admissible command set is a checked predicate,
    /// never silently enforced by the type.
    pub fn is_admissible(&self, limits: &VelocityLimits) -> bool {
        self.v.abs() <= limits.v_max && self.w.abs() <= limits.w_max
    }

    pub fn clamped(&self, limits: &VelocityLimits) -> Twist {
        Twist {
            v: self.v.clamp(-limits.v_max, limits.v_max),
            w: self.w.clamp(-limits.w_max, limits.w_max),
        }
    }
}

/// Bounds of the admissible command set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityLimits {
    pub v_max: f64,
    pub w_max: f64,
}

impl Default for VelocityLimits {
    fn default() -> Self {
        VelocityLimits {
            v_max: 1.0,
            w_max: 1.5,
        }
    }
}

/// Disc approximation of the robot base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotFootprint {
    pub radius: f64,
}

impl Default for RobotFootprint {
    fn default() -> Self {
        RobotFootprint { radius: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds {
    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ObstacleShape {
    Box { half_extents: [f64; 2] },
    Circle { radius: f64 },
}

/// A static obstacle: axis-aligned box or circle, with a semantic label
/// and color tag that feed the scene graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub label: String,
    #[serde(default)]
    pub color: String,
    pub center: [f64; 2],
    /// Full vertical size; obstacles stand on the floor.
    pub height: f64,
    #[serde(flatten)]
    pub shape: ObstacleShape,
}

impl Obstacle {
    /// Distance from a point to the obstacle's planar outline
    /// (negative-free: 0 when inside).
    pub fn distance_to_point(&self, p: [f64; 2]) -> f64 {
        match &self.shape {
            ObstacleShape::Box { half_extents } => {
                let cx = (p[0] - self.center[0])
                    .clamp(-half_extents[0], half_extents[0]);
                let cy = (p[1] - self.center[1])
                    .clamp(-half_extents[1], half_extents[1]);
                (p[0] - self.center[0] - cx).hypot(p[1] - self.center[1] - cy)
            }
            ObstacleShape::Circle { radius } => {
                let d = (p[0] - self.center[0]).hypot(p[1] - self.center[1]);
                (d - radius).max(0.0)
            }
        }
    }

    /// Semantic text of this obstacle: color-qualified label.
    pub fn node_text(&self) -> String {
        if self.color.is_empty() {
            self.label.clone()
        } else {
            format!("{} {}", self.color, self.label)
        }
    }

    /// 3D bounding-box position (base on the floor) and full extent.
    pub fn bbox3(&self) -> ([f64; 3], [f64; 3]) {
        match &self.shape {
            ObstacleShape::Box { half_extents } => (
                [self.center[0], self.center[1], self.height / 2.0],
                [2.0 * half_extents[0], 2.0 * half_extents[1], self.height],
            ),
            ObstacleShape::Circle { radius } => (
                [self.center[0], self.center[1], self.height / 2.0],
                [2.0 * radius, 2.0 * radius, self.height],
            ),
        }
    }
}

/// A possible target-object placement. Only the active candidate is
/// physically present in an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetCandidate {
    pub label: String,
    pub position: [f64; 3],
}

impl TargetCandidate {
    pub fn ground(&self) -> [f64; 2] {
        [self.position[0], self.position[1]]
    }
}

/// Full scene description: room bounds, obstacles, target candidates,
/// active target index, and an optional label-synonym table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub version: u32,
    pub bounds: Bounds,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub target_candidates: Vec<TargetCandidate>,
    pub active_target: usize,
    /// Optional map from raw label text to the canonical text used for
    /// embedding; the only mechanism by which distinct labels can share
    /// an embedding.
    #[serde(default)]
    pub synonyms: BTreeMap<String, String>,
}

impl Scene {
    pub fn active(&self) -> &TargetCandidate {
        &self.target_candidates[self.active_target]
    }

    /// Applies the synonym table, if any, to a label.
    pub fn canonical_label<'a>(&'a self, label: &'a str) -> &'a str {
        self.synonyms.get(label).map(String::as_str).unwrap_or(label)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.version != SCENE_FORMAT_VERSION {
            return Err(SceneError::Version {
                found: self.version,
                expected: SCENE_FORMAT_VERSION,
            });
        }
        let b = &self.bounds;
        if !(b.min[0] < b.max[0] && b.min[1] < b.max[1]) {
            return Err(SceneError::Invalid("bounds must have positive area".into()));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if o.label.trim().is_empty() {
                return Err(SceneError::Invalid(format!("obstacle {i} has empty label")));
            }
            if !(o.height > 0.0) {
                return Err(SceneError::Invalid(format!(
                    "obstacle {i} ({}) has non-positive height",
                    o.label
                )));
            }
            let inside = match &o.shape {
                ObstacleShape::Box { half_extents } => {
                    if !(half_extents[0] > 0.0 && half_extents[1] > 0.0) {
                        return Err(SceneError::Invalid(format!(
                            "obstacle {i} ({}) has non-positive extents",
                            o.label
                        )));
                    }
                    b.contains([o.center[0] - half_extents[0], o.center[1] - half_extents[1]])
                        && b.contains([
                            o.center[0] + half_extents[0],
                            o.center[1] + half_extents[1],
                        ])
                }
                ObstacleShape::Circle { radius } => {
                    if !(*radius > 0.0) {
                        return Err(SceneError::Invalid(format!(
                            "obstacle {i} ({}) has non-positive radius",
                            o.label
                        )));
                    }
                    b.contains([o.center[0] - radius, o.center[1] - radius])
                        && b.contains([o.center[0] + radius, o.center[1] + radius])
                }
            };
            if !inside {
                return Err(SceneError::Invalid(format!(
                    "obstacle {i} ({}) extends outside bounds",
                    o.label
                )));
            }
        }
        if self.target_candidates.is_empty() {
            return Err(SceneError::Invalid("no target candidates".into()));
        }
        for (i, t) in self.target_candidates.iter().enumerate() {
            if t.label.trim().is_empty() {
                return Err(SceneError::Invalid(format!("target {i} has empty label")));
            }
            if !b.contains(t.ground()) {
                return Err(SceneError::Invalid(format!(
                    "target {i} ({}) outside bounds",
                    t.label
                )));
            }
        }
        if self.active_target >= self.target_candidates.len() {
            return Err(SceneError::Invalid(format!(
                "active_target {} out of range ({} candidates)",
                self.active_target,
                self.target_candidates.len()
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Scene, SceneError> {
        let scene: Scene = toml::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scene serializes")
    }

    pub fn load(path: &Path) -> Result<Scene, SceneError> {
        let text = std::fs::read_to_string(path)?;
        Scene::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), SceneError> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    /// Content hash over everything that affects navigation geometry and
    /// the planner's target set. The active target index is excluded so
    /// that episodes which merely move the target reuse the same cache.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        let f = |h: &mut Sha256, x: f64| h.update(x.to_le_bytes());
        f(&mut h, self.bounds.min[0]);
        f(&mut h, self.bounds.min[1]);
        f(&mut h, self.bounds.max[0]);
        f(&mut h, self.bounds.max[1]);
        h.update((self.obstacles.len() as u64).to_le_bytes());
        for o in &self.obstacles {
            h.update(o.label.as_bytes());
            h.update([0u8]);
            h.update(o.color.as_bytes());
            h.update([0u8]);
            f(&mut h, o.center[0]);
            f(&mut h, o.center[1]);
            f(&mut h, o.height);
            match &o.shape {
                ObstacleShape::Box { half_extents } => {
                    h.update([1u8]);
                    f(&mut h, half_extents[0]);
                    f(&mut h, half_extents[1]);
                }
                ObstacleShape::Circle { radius } => {
                    h.update([2u8]);
                    f(&mut h, *radius);
                }
            }
        }
        h.update((self.target_candidates.len() as u64).to_le_bytes());
        for t in &self.target_candidates {
            h.update(t.label.as_bytes());
            h.update([0u8]);
            f(&mut h, t.position[0]);
            f(&mut h, t.position[1]);
            f(&mut h, t.position[2]);
        }
        let digest = h.finalize();
        let mut out = [0u8; 32];
        out.copy_from_slice(&digest);
        out
    }
}

/// True iff the footprint disc at `pose` intersects any obstacle or
/// exits the room. Total, and strict at the boundary: a disc at distance
/// exactly `radius` from an obstacle face does not collide.
pub fn collides(pose: &Pose, footprint: &RobotFootprint, scene: &Scene) -> bool {
    let p = pose.position();
    let r = footprint.radius;
    let b = &scene.bounds;
    if !(p[0] >= b.min[0] + r && p[0] <= b.max[0] - r && p[1] >= b.min[1] + r && p[1] <= b.max[1] - r)
    {
        return true;
    }
    scene.obstacles.iter().any(|o| o.distance_to_point(p) < r)
}

/// Collision-free and strictly inside the inset room.
pub fn admissible(pose: &Pose, footprint: &RobotFootprint, scene: &Scene) -> bool {
    !collides(pose, footprint, scene)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    pub(crate) fn empty_room(w: f64, h: f64) -> Scene {
        Scene {
            version: SCENE_FORMAT_VERSION,
            bounds: Bounds {
                min: [0.0, 0.0],
                max: [w, h],
            },
            obstacles: vec![],
            target_candidates: vec![TargetCandidate {
                label: "bowl".into(),
                position: [w / 2.0, h / 2.0, 0.7],
            }],
            active_target: 0,
            synonyms: BTreeMap::new(),
        }
    }

    fn boxed_room() -> Scene {
        let mut scene = empty_room(10.0, 10.0);
        scene.obstacles.push(Obstacle {
            label: "table".into(),
            color: String::new(),
            center: [5.0, 5.0],
            height: 0.8,
            shape: ObstacleShape::Box {
                half_extents: [1.0, 0.5],
            },
        });
        scene.obstacles.push(Obstacle {
            label: "pole".into(),
            color: "red".into(),
            center: [2.0, 8.0],
            height: 1.2,
            shape: ObstacleShape::Circle { radius: 0.25 },
        });
        scene
    }

    #[test]
    fn wrap_angle_range() {
        for k in -20..20 {
            let a = 0.37 * k as f64;
            let w = wrap_angle(a);
            assert!((-PI..PI).contains(&w), "{a} wrapped to {w}");
            let diff = wrap_angle(w - a);
            assert!(diff.abs() < 1e-9);
        }
        assert_eq!(wrap_angle(PI), -PI);
    }

    #[test]
    fn empty_room_center_is_free() {
        let scene = empty_room(10.0, 10.0);
        let fp = RobotFootprint { radius: 0.3 };
        assert!(!collides(&Pose::new(5.0, 5.0, 0.0), &fp, &scene));
        assert!(admissible(&Pose::new(5.0, 5.0, 0.0), &fp, &scene));
    }

    #[test]
    fn pose_inside_obstacle_collides() {
        let scene = boxed_room();
        let fp = RobotFootprint { radius: 0.3 };
        assert!(collides(&Pose::new(5.0, 5.0, 0.0), &fp, &scene));
    }

    #[test]
    fn pose_outside_bounds_inadmissible() {
        let scene = empty_room(10.0, 10.0);
        let fp = RobotFootprint { radius: 0.3 };
        assert!(!admissible(&Pose::new(-1.0, 5.0, 0.0), &fp, &scene));
        assert!(!admissible(&Pose::new(5.0, 10.2, 0.0), &fp, &scene));
    }

    // Closed-form disc-AABB distance oracle: classification flips within
    // +/- epsilon of the exact clearance radius.
    #[test]
    fn boundary_classification_near_box_face() {
        let scene = boxed_room();
        let r = 0.3;
        let fp = RobotFootprint { radius: r };
        let eps = 1e-6;
        // Box face at x = 6.0 (center 5.0, half extent 1.0), approached
        // from the right along y = 5.0.
        let clear = Pose::new(6.0 + r + eps, 5.0, 0.0);
        let hit = Pose::new(6.0 + r - eps, 5.0, 0.0);
        assert!(!collides(&clear, &fp, &scene));
        assert!(collides(&hit, &fp, &scene));
        // Same at a box corner (6.0, 5.5), along the diagonal.
        let d = std::f64::consts::FRAC_1_SQRT_2;
        let clear = Pose::new(6.0 + (r + eps) * d, 5.5 + (r + eps) * d, 0.0);
        let hit = Pose::new(6.0 + (r - eps) * d, 5.5 + (r - eps) * d, 0.0);
        assert!(!collides(&clear, &fp, &scene));
        assert!(collides(&hit, &fp, &scene));
        // And against the circle obstacle.
        let clear = Pose::new(2.0 + 0.25 + r + eps, 8.0, 0.0);
        let hit = Pose::new(2.0 + 0.25 + r - eps, 8.0, 0.0);
        assert!(!collides(&clear, &fp, &scene));
        assert!(collides(&hit, &fp, &scene));
    }

    #[test]
    fn wall_inset_boundary_is_strict() {
        let scene = empty_room(10.0, 10.0);
        let r = 0.3;
        let fp = RobotFootprint { radius: r };
        let eps = 1e-6;
        assert!(admissible(&Pose::new(r + eps, 5.0, 0.0), &fp, &scene));
        assert!(!admissible(&Pose::new(r - eps, 5.0, 0.0), &fp, &scene));
    }

    /// Brute-force oracle: sample the disc boundary (and center) densely
    /// and test point membership against every obstacle and the bounds.
    fn collides_sampling_oracle(
        pose: &Pose,
        footprint: &RobotFootprint,
        scene: &Scene,
        samples: usize,
    ) -> bool {
        let point_hits = |p: [f64; 2]| -> bool {
            if !scene.bounds.contains(p) {
                return true;
            }
            scene.obstacles.iter().any(|o| o.distance_to_point(p) <= 0.0)
        };
        if point_hits(pose.position()) {
            return true;
        }
        (0..samples).any(|i| {
            let a = 2.0 * PI * i as f64 / samples as f64;
            point_hits([
                pose.x + footprint.radius * a.cos(),
                pose.y + footprint.radius * a.sin(),
            ])
        })
    }

    #[test]
    fn collides_matches_sampling_oracle_on_random_poses() {
        let scene = boxed_room();
        let fp = RobotFootprint { radius: 0.3 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut checked = 0;
        for _ in 0..1000 {
            let pose = Pose::new(
                rng.random_range(-0.5..10.5),
                rng.random_range(-0.5..10.5),
                0.0,
            );
            // Skip poses within the tolerance band of a decision surface,
            // where the dense-sampling oracle is not exact.
            let margin = scene
                .obstacles
                .iter()
                .map(|o| (o.distance_to_point(pose.position()) - fp.radius).abs())
                .fold(f64::INFINITY, f64::min);
            let b = &scene.bounds;
            let wall_margin = [
                pose.x - (b.min[0] + fp.radius),
                (b.max[0] - fp.radius) - pose.x,
                pose.y - (b.min[1] + fp.radius),
                (b.max[1] - fp.radius) - pose.y,
            ]
            .into_iter()
            .map(f64::abs)
            .fold(f64::INFINITY, f64::min);
            if margin.min(wall_margin) < 1e-3 {
                continue;
            }
            checked += 1;
            assert_eq!(
                collides(&pose, &fp, &scene),
                collides_sampling_oracle(&pose, &fp, &scene, 4096),
                "disagreement at {pose:?}"
            );
        }
        assert!(checked > 900);
    }

    proptest! {
        // Growing the footprint can only add collisions.
        #[test]
        fn collides_monotone_in_radius(
            x in -1.0..11.0f64,
            y in -1.0..11.0f64,
            r1 in 0.05..0.8f64,
            grow in 0.0..0.8f64,
        ) {
            let scene = boxed_room();
            let small = RobotFootprint { radius: r1 };
            let big = RobotFootprint { radius: r1 + grow };
            let pose = Pose::new(x, y, 0.0);
            if collides(&pose, &small, &scene) {
                prop_assert!(collides(&pose, &big, &scene));
            }
        }

        #[test]
        fn admissible_implies_not_collides(
            x in -1.0..11.0f64,
            y in -1.0..11.0f64,
            r in 0.05..0.8f64,
        ) {
            let scene = boxed_room();
            let fp = RobotFootprint { radius: r };
            let pose = Pose::new(x, y, 0.0);
            if admissible(&pose, &fp, &scene) {
                prop_assert!(!collides(&pose, &fp, &scene));
            }
        }
    }

    #[test]
    fn toml_round_trip_is_exact() {
        let scene = boxed_room();
        let text = scene.to_toml_string();
        let back = Scene::from_toml_str(&text).unwrap();
        assert_eq!(scene, back);
    }

    #[test]
    fn version_mismatch_rejected() {
        let mut scene = empty_room(4.0, 4.0);
        scene.version = 99;
        let text = toml::to_string(&scene).unwrap();
        match Scene::from_toml_str(&text) {
            Err(SceneError::Version { found: 99, .. }) => {}
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn validation_catches_bad_scenes() {
        let mut scene = boxed_room();
        scene.obstacles[0].label = String::new();
        assert!(scene.validate().is_err());

        let mut scene = boxed_room();
        scene.active_target = 5;
        assert!(scene.validate().is_err());

        let mut scene = boxed_room();
        scene.obstacles[0].center = [9.9, 5.0];
        assert!(scene.validate().is_err(), "obstacle partly outside bounds");
    }

    #[test]
    fn content_hash_ignores_active_target_only() {
        let scene = boxed_room();
        let mut other = scene.clone();
        other.active_target = 0; // same index, same hash
        assert_eq!(scene.content_hash(), other.content_hash());
        let mut moved = scene.clone();
        moved.obstacles[0].center[0] += 0.01;
        assert_ne!(scene.content_hash(), moved.content_hash());
    }
}
