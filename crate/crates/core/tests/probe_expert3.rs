use graphnav::env::{Mode, NavEnv};
use graphnav::graph::pseudo_embed;
use graphnav::harness::scenes::{gen_scene, SceneFamily};
use graphnav::harness::ExpertDriver;
use graphnav::planner::{build_grid, dijkstra_all, PlannerConfig, PurePursuitConfig};
use graphnav::rng::substream_indexed;
use rand::Rng;

fn run_family(family: SceneFamily, pcfg: &PlannerConfig, episodes: u64) -> (usize, usize, usize) {
    let mut env_cfg = graphnav::EnvConfig::default();
    env_cfg.d_emb = 8;
    let (mut ok, mut collisions, mut timeouts) = (0, 0, 0);
    for e in 0..episodes {
        let mut rng = substream_indexed(99, "probe", e);
        let scene = gen_scene(family, rng.random::<u64>());
        let grid = build_grid(&scene, &env_cfg.footprint, pcfg.resolution).unwrap();
        let targets: Vec<[f64; 2]> = scene.target_candidates.iter().map(|t| t.ground()).collect();
        let table = dijkstra_all(&grid, &targets, pcfg.connection_radius).unwrap();
        let goal_emb = pseudo_embed(&scene.active().label, 8).unwrap();
        let mut env = NavEnv::new(scene.clone(), env_cfg);
        let r = 2.0 + (e % 3) as f64 * 0.5;
        let phi = rng.random_range(0.0..std::f64::consts::PI);
        env.reset(r, phi, Mode::Control, goal_emb, vec![0.0; 14], &mut rng).unwrap();
        let mut expert = ExpertDriver::new(&grid, &table, scene.active_target, scene.active().ground(), &env.state().pose, PurePursuitConfig::from(pcfg), 0.85 * 1.1).unwrap();
        loop {
            let twist = expert.action(&env.state().pose, &env_cfg.limits);
            let res = env.step_twist(twist);
            if res.terminated || res.truncated {
                if res.info.success { ok += 1; } else if res.info.collision { collisions += 1; } else { timeouts += 1; }
                break;
            }
        }
    }
    (ok, collisions, timeouts)
}

#[test]
fn sweep_pp_params() {
    for lookahead in [0.35, 0.45, 0.6] {
        for cruise in [0.3, 0.4, 0.5] {
            let pcfg = PlannerConfig { lookahead, cruise_speed: cruise, ..PlannerConfig::default() };
            let (ok_s, col_s, to_s) = run_family(SceneFamily::Simple, &pcfg, 150);
            let (ok_t, col_t, to_t) = run_family(SceneFamily::TwoWall, &pcfg, 150);
            println!("la={lookahead} v={cruise}: Simple ok={ok_s} col={col_s} to={to_s} | TwoWall ok={ok_t} col={col_t} to={to_t}");
        }
    }
}
