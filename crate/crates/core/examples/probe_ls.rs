// scratch: level-set volume-conservation probe
use nsl_core::driver::{self};
use nsl_core::metrics;
use nsl_core::numerics::RngStream;
use nsl_core::scenarios::{make_scenario, ScenarioOptions};

fn main() {
    let s = make_scenario("levelset_2d", 2, &ScenarioOptions::default()).unwrap();
    let cfg = s.defaults.clone().unwrap();
    let t0 = std::time::Instant::now();
    let traj = driver::run(&s, &cfg, 11).unwrap();
    let exact_volume = std::f64::consts::PI * 0.15 * 0.15;
    let spec = cfg.network.clone();
    for (i, e) in traj.entries.iter().enumerate() {
        if i % 10 == 0 || i == traj.entries.len() - 1 {
            let theta = e.params.clone();
            let vol = metrics::volume_negative(
                &|b| nsl_core::network::forward(&spec, &theta, &b.input_matrix()).unwrap(),
                &s.domain,
                1_000_000,
                &mut RngStream::new(11, driver::STREAM_METRICS + 7),
            )
            .unwrap();
            println!(
                "t={:.1}: volume {:.6} (exact {:.6}, rel err {:.3}%) loss {:.1e} [{:.0?}]",
                e.time,
                vol,
                exact_volume,
                100.0 * (vol - exact_volume).abs() / exact_volume,
                e.diagnostics.final_loss,
                t0.elapsed()
            );
        }
    }
}
