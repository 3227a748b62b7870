use graphnav::env::{Mode, NavEnv};
use graphnav::graph::pseudo_embed;
use graphnav::harness::scenes::{gen_scene, SceneFamily};
use graphnav::harness::ExpertDriver;
use graphnav::planner::{build_grid, dijkstra_all, PlannerConfig, PurePursuitConfig};
use graphnav::rng::substream_indexed;
use rand::Rng;

#[test]
fn trace_one_timeout() {
    let pcfg = PlannerConfig { lookahead: 0.45, cruise_speed: 0.4, ..PlannerConfig::default() };
    let mut env_cfg = graphnav::EnvConfig::default();
    env_cfg.d_emb = 8;
    for e in 0..40u64 {
        let mut rng = substream_indexed(99, "probe", e);
        let scene = gen_scene(SceneFamily::Simple, rng.random::<u64>());
        let grid = build_grid(&scene, &env_cfg.footprint, pcfg.resolution).unwrap();
        let targets: Vec<[f64; 2]> = scene.target_candidates.iter().map(|t| t.ground()).collect();
        let table = dijkstra_all(&grid, &targets, pcfg.connection_radius).unwrap();
        let goal_emb = pseudo_embed(&scene.active().label, 8).unwrap();
        let mut env = NavEnv::new(scene.clone(), env_cfg);
        let r = 2.0 + (e % 3) as f64 * 0.5;
        let phi = rng.random_range(0.0..std::f64::consts::PI);
        env.reset(r, phi, Mode::Control, goal_emb, vec![0.0; 14], &mut rng).unwrap();
        let mut expert = ExpertDriver::new(&grid, &table, scene.active_target, scene.active().ground(), &env.state().pose, PurePursuitConfig::from(&pcfg), 0.935).unwrap();
        let start = env.state().pose;
        let mut n = 0;
        loop {
            let twist = expert.action(&env.state().pose, &env_cfg.limits);
            let res = env.step_twist(twist);
            n += 1;
            if res.terminated || res.truncated {
                if res.truncated {
                    println!("TIMEOUT ep={e} R={r} start=({:.2},{:.2},{:.2}) target={:?}", start.x, start.y, start.theta, scene.active().ground());
                    // re-run with tracing
                    let mut env2 = NavEnv::new(scene.clone(), env_cfg);
                    let mut rng2 = substream_indexed(99, "probe", e);
                    let _s = gen_scene(SceneFamily::Simple, rng2.random::<u64>());
                    let _phi: f64 = rng2.random_range(0.0..std::f64::consts::PI);
                    env2.reset(r, phi, Mode::Control, pseudo_embed(&scene.active().label, 8).unwrap(), vec![0.0; 14], &mut rng2).unwrap();
                    let mut exp2 = ExpertDriver::new(&grid, &table, scene.active_target, scene.active().ground(), &env2.state().pose, PurePursuitConfig::from(&pcfg), 0.935).unwrap();
                    for step in 0..300 {
                        let tw = exp2.action(&env2.state().pose, &env_cfg.limits);
                        let rr = env2.step_twist(tw);
                        if step % 25 == 0 || step > 290 {
                            let p = env2.state().pose;
                            println!("  step {step}: pose ({:.2},{:.2},{:.2}) twist ({:.2},{:.2}) d_target={:.2}", p.x, p.y, p.theta, tw.v, tw.w, p.distance_to(scene.active().ground()));
                        }
                        if rr.terminated || rr.truncated { break; }
                    }
                    return;
                }
                break;
            }
            if n > 400 { break; }
        }
    }
    println!("no timeout found in 40 episodes");
}
