// scratch: NSL accuracy probes for the acceptance criteria
use nsl_core::driver::{self, nsl_error};
use nsl_core::scenarios::{make_scenario, ScenarioOptions};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("c4");
    match which {
        "c4" => {
            // constant_1d, 4 steps of 0.25, exact characteristics
            let s = make_scenario("constant_1d", 1, &ScenarioOptions::default()).unwrap();
            let cfg = s.defaults.clone().unwrap();
            let t0 = std::time::Instant::now();
            let traj = driver::run(&s, &cfg, 7).unwrap();
            let init = nsl_error(&s, &cfg, &traj.entries[0].params, 0.0, 20000, 7).unwrap();
            let fin = nsl_error(&s, &cfg, traj.final_params().unwrap(), s.t_final, 20000, 7).unwrap();
            println!("constant_1d: init e_l2 {:.3e}, final e_l2 {:.3e} (ratio {:.2}), linf {:.3e}, init loss {:.3e}, {:.1?}",
                init.e_l2, fin.e_l2, fin.e_l2/init.e_l2, fin.e_linf, traj.entries[0].diagnostics.final_loss, t0.elapsed());
        }
        "c3" => {
            // ad_periodic d=2 convergence: n_t in {4, 16, 64}, T = 1
            let opts = ScenarioOptions { t_final: Some(1.0), ..Default::default() };
            let s = make_scenario("ad_periodic", 2, &opts).unwrap();
            let mut pairs = Vec::new();
            for n_t in [4usize, 16, 64] {
                let mut cfg = s.defaults.clone().unwrap();
                cfg.n_t = n_t;
                let t0 = std::time::Instant::now();
                let traj = driver::run(&s, &cfg, 7).unwrap();
                let fin = nsl_error(&s, &cfg, traj.final_params().unwrap(), s.t_final, 40000, 7).unwrap();
                println!("ad_periodic d=2 n_t={n_t}: e_l2 {:.4e} e_linf {:.4e} init_loss {:.2e} ({:.1?})",
                    fin.e_l2, fin.e_linf, traj.entries[0].diagnostics.final_loss, t0.elapsed());
                pairs.push((n_t as f64, fin.e_l2));
            }
            let slope = nsl_core::metrics::convergence_slope(&pairs).unwrap();
            println!("slope: {slope:.3}; ratio e(4)/e(64) = {:.1}", pairs[0].1/pairs[2].1);
        }
        _ => eprintln!("unknown probe"),
    }
}
