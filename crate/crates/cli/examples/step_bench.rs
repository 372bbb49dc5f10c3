// temporary: time the training-loop pieces separately
use lexi_morl_core::envsim::{Env, EnvConfig, MapSpec};
use lexi_morl_core::observe::{encode_grid, GridSpec};
use lexi_morl_core::qfunc::{CnnQ, ParamNet};
use lexi_morl_core::Action;
use std::time::Instant;

fn main() {
    let grid = GridSpec::desk();
    let env_cfg = EnvConfig::default();
    let mut env = Env::reset(env_cfg, MapSpec::training(), 1).unwrap();
    let net = CnnQ::new(40, 30, 0, 1).unwrap();
    let mut cache = net.new_cache();
    let mut q = Vec::new();

    let n = 2000;
    let mut t_step = 0.0;
    let mut t_encode = 0.0;
    let mut t_fwd = 0.0;
    let mut t_conv = 0.0;
    let mut sink = 0.0;
    for i in 0..n {
        if env.is_done() {
            env = Env::reset(EnvConfig::default(), MapSpec::training(), i as u64).unwrap();
        }
        let t = Instant::now();
        env.step(Action::ALL[i % 4]).unwrap();
        t_step += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let obs = encode_grid(&env, &grid);
        t_encode += t.elapsed().as_secs_f64();

        let t = Instant::now();
        net.forward_batch(&obs.data, 1, &mut q, &mut cache);
        t_fwd += t.elapsed().as_secs_f64();
        sink += q[0];

        let t = Instant::now();
        let rc: std::rc::Rc<[f32]> = obs.data.iter().map(|&x| x as f32).collect();
        sink += rc[0] as f64;
        t_conv += t.elapsed().as_secs_f64();
    }
    println!(
        "per step: env.step {:.2} ms, encode {:.2} ms, cnn fwd {:.2} ms, f32 conv {:.3} ms (sink {sink:.1})",
        t_step / n as f64 * 1e3,
        t_encode / n as f64 * 1e3,
        t_fwd / n as f64 * 1e3,
        t_conv / n as f64 * 1e3
    );
}
