// scratch: tune constant_1d desk preset for the error-budget criterion
use nsl_core::driver::{self, nsl_error};
use nsl_core::scenarios::{make_scenario, ScenarioOptions};

fn main() {
    let s = make_scenario("constant_1d", 1, &ScenarioOptions::default()).unwrap();
    let which: usize = std::env::args().nth(1).unwrap().parse().unwrap();
    let (layers, nc, ne, resample) = match which {
        0 => (vec![20usize, 20], 4000usize, 150usize, true),
        1 => (vec![20, 20], 3000, 200, true),
        2 => (vec![20, 20], 4000, 200, true),
        3 => (vec![24, 24], 3000, 200, true),
        _ => unreachable!(),
    };
    let mut cfg = s.defaults.clone().unwrap();
    cfg.network = nsl_core::network::NetworkSpec::new(1, layers.clone(), nsl_core::network::ActivationKind::Tanh).unwrap();
    cfg.iter.n_collocation = nc;
    cfg.iter.n_epochs = ne;
    cfg.iter.resample_each_epoch = resample;
    let t0 = std::time::Instant::now();
    let traj = driver::run(&s, &cfg, 7).unwrap();
    let init = nsl_error(&s, &cfg, &traj.entries[0].params, 0.0, 20000, 7).unwrap();
    let fin = nsl_error(&s, &cfg, traj.final_params().unwrap(), s.t_final, 20000, 7).unwrap();
    let losses: Vec<String> = traj.entries.iter().map(|e| format!("{:.1e}", e.diagnostics.final_loss)).collect();
    println!(
        "layers {:?} nc {} ne {} resample {}: init {:.2e} final {:.2e} ratio {:.2} | losses {} | {:.0?}",
        layers, nc, ne, resample, init.e_l2, fin.e_l2, fin.e_l2 / init.e_l2, losses.join(" "), t0.elapsed()
    );
}
