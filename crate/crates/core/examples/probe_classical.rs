// scratch: check classical-SL errors against the reference comparison values
use nsl_core::classical;
use nsl_core::scenarios::{make_scenario, ScenarioOptions};

fn main() {
    let g = make_scenario("ad_gaussian", 2, &ScenarioOptions::default()).unwrap();
    let t0 = std::time::Instant::now();
    let (_f, rep) = classical::sl_run(&g, 64, 5, classical::DEFAULT_MEM_CAP).unwrap();
    println!("gaussian d=2 nx=64 nt=5: e_l2 {:.4e} (want 9.39e-4), e_linf {:.4e} (want 1.15e-2), {:.2?}", rep.e_l2, rep.e_linf, t0.elapsed());

    let p1 = make_scenario("ad_periodic", 1, &ScenarioOptions::default()).unwrap();
    println!("periodic d=1 T = {}", p1.t_final);
    let (_f, rep) = classical::sl_run(&p1, 36, 20, classical::DEFAULT_MEM_CAP).unwrap();
    println!("periodic d=1 nx=36 nt=20: e_l2 {:.4e} (want 1.57e-3), e_linf {:.4e} (want 2.71e-3)", rep.e_l2, rep.e_linf);

    let p2 = make_scenario("ad_periodic", 2, &ScenarioOptions::default()).unwrap();
    let (_f, rep) = classical::sl_run(&p2, 38, 20, classical::DEFAULT_MEM_CAP).unwrap();
    println!("periodic d=2 nx=38 nt=20: e_l2 {:.4e} (want 1.63e-3), e_linf {:.4e} (want 2.70e-3)", rep.e_l2, rep.e_linf);
}
