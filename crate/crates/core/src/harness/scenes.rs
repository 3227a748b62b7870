//! Scene generators for the three experiment families.
//!
//! All three share the same construction: fixed furniture, a set of
//! candidate bowl placements along table front edges, and a seed that
//! picks the active placement (and, for the chair family, one of nine
//! fixed obstacle configurations). Geometry is deliberately asymmetric
//! so the ray fan carries pose information.

use crate::scene::{Bounds, Obstacle, ObstacleShape, Scene, TargetCandidate, SCENE_FORMAT_VERSION};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneFamily {
    /// One table with five bowl slots and a red pole in front.
    Simple,
    /// Two colored walls with adjacent tables, three slots each; the
    /// goal text names the wall color.
    TwoWall,
    /// Two tables, six slots, and 0-3 red/black chairs drawn from nine
    /// fixed configurations.
    RandomChairs,
}

impl std::str::FromStr for SceneFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Ok(SceneFamily::Simple),
            "two_wall" | "two-wall" | "twowall" => Ok(SceneFamily::TwoWall),
            "random_chairs" | "random-chairs" | "randomchairs" => Ok(SceneFamily::RandomChairs),
            other => Err(format!("unknown scene family {other:?}")),
        }
    }
}

fn obstacle_box(label: &str, color: &str, center: [f64; 2], he: [f64; 2], height: f64) -> Obstacle {
    Obstacle {
        label: label.into(),
        color: color.into(),
        center,
        height,
        shape: ObstacleShape::Box { half_extents: he },
    }
}

fn obstacle_circle(label: &str, color: &str, center: [f64; 2], radius: f64, height: f64) -> Obstacle {
    Obstacle {
        label: label.into(),
        color: color.into(),
        center,
        height,
        shape: ObstacleShape::Circle { radius },
    }
}

fn bowl(label: &str, x: f64, y: f64) -> TargetCandidate {
    TargetCandidate {
        label: label.into(),
        position: [x, y, 0.7],
    }
}

/// Builds the scene for a family. The same seed always yields the same
/// scene; varying the seed varies the active target slot (and the chair
/// configuration for [`SceneFamily::RandomChairs`]) but never the room.
pub fn gen_scene(family: SceneFamily, seed: u64) -> Scene {
    match family {
        SceneFamily::Simple => simple(seed),
        SceneFamily::TwoWall => two_wall(seed),
        SceneFamily::RandomChairs => random_chairs(seed),
    }
}

fn simple(seed: u64) -> Scene {
    let obstacles = vec![
        obstacle_box("table", "", [5.0, 8.8], [2.5, 0.55], 0.8),
        obstacle_circle("pole", "red", [5.0, 6.3], 0.25, 1.2),
    ];
    let target_candidates = (0..5)
        .map(|i| bowl("bowl", 3.0 + i as f64, 8.35))
        .collect::<Vec<_>>();
    Scene {
        version: SCENE_FORMAT_VERSION,
        bounds: Bounds {
            min: [0.0, 0.0],
            max: [10.0, 10.0],
        },
        obstacles,
        active_target: (seed % 5) as usize,
        target_candidates,
        synonyms: BTreeMap::new(),
    }
}

fn two_wall(seed: u64) -> Scene {
    let obstacles = vec![
        obstacle_box("wall", "red", [1.2, 5.0], [0.12, 3.2], 2.0),
        obstacle_box("wall", "green", [10.8, 5.0], [0.12, 2.4], 2.0),
        obstacle_box("table", "", [2.2, 5.0], [0.6, 2.4], 0.8),
        obstacle_box("table", "", [9.8, 5.0], [0.6, 2.0], 0.8),
        obstacle_circle("pole", "black", [6.0, 2.2], 0.35, 1.2),
    ];
    let mut target_candidates = Vec::with_capacity(6);
    for y in [3.0, 5.0, 7.0] {
        target_candidates.push(bowl("bowl near red wall", 2.7, y));
    }
    for y in [3.2, 5.0, 6.8] {
        target_candidates.push(bowl("bowl near green wall", 9.3, y));
    }
    let wall = (seed % 2) as usize;
    let slot = ((seed / 2) % 3) as usize;
    Scene {
        version: SCENE_FORMAT_VERSION,
        bounds: Bounds {
            min: [0.0, 0.0],
            max: [12.0, 10.0],
        },
        obstacles,
        active_target: wall * 3 + slot,
        target_candidates,
        synonyms: BTreeMap::new(),
    }
}

/// Chair placements per configuration index: (x, y, color).
const CHAIR_CONFIGS: [&[(f64, f64, &str)]; 9] = [
    &[],
    &[(3.0, 5.5, "red")],
    &[(7.0, 4.5, "black")],
    &[(2.0, 4.0, "red"), (8.0, 5.5, "black")],
    &[(5.0, 5.0, "black"), (3.5, 6.5, "red")],
    &[(6.5, 6.0, "red"), (4.5, 3.5, "black")],
    &[(2.5, 5.5, "red"), (5.0, 4.0, "black"), (7.5, 6.0, "red")],
    &[(3.0, 3.0, "black"), (6.0, 5.5, "red"), (8.5, 3.5, "black")],
    &[(4.0, 5.0, "red"), (5.5, 6.5, "black"), (7.0, 3.0, "red")],
];

fn random_chairs(seed: u64) -> Scene {
    let config = (seed % 9) as usize;
    let mut obstacles = vec![
        obstacle_box("table", "", [2.5, 8.6], [2.0, 0.55], 0.8),
        obstacle_box("table", "", [7.6, 8.6], [1.6, 0.5], 0.8),
    ];
    for (x, y, color) in CHAIR_CONFIGS[config] {
        obstacles.push(obstacle_box("chair", color, [*x, *y], [0.22, 0.22], 0.9));
    }
    let mut target_candidates = Vec::with_capacity(6);
    for x in [0.9, 2.5, 4.1] {
        target_candidates.push(bowl("bowl", x, 8.15));
    }
    for x in [6.4, 7.6, 8.8] {
        target_candidates.push(bowl("bowl", x, 8.2));
    }
    Scene {
        version: SCENE_FORMAT_VERSION,
        bounds: Bounds {
            min: [0.0, 0.0],
            max: [10.0, 10.0],
        },
        obstacles,
        active_target: ((seed / 9) % 6) as usize,
        target_candidates,
        synonyms: BTreeMap::new(),
    }
}

/// Number of chairs in a chair-family scene.
pub fn chair_count(scene: &Scene) -> usize {
    scene.obstacles.iter().filter(|o| o.label == "chair").count()
}
