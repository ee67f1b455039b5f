// An MLP fits sin well on [-5pi/8, 5pi/8] and badly outside it.
//
// cargo run --release --example mlp_extrapolation -- sin

use pisn::harness::{demo_extrapolation, DemoConfig, DemoFunction};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "sin".into());
    let f = DemoFunction::parse(&name).ok_or("expected linear, exp, log or sin")?;
    let config = DemoConfig { epochs: 1000, schedule: pisn::harness::StepDecay { lr: 1e-2, gamma: 0.1, milestones: vec![600] }, ..DemoConfig::default() };
    let r = demo_extrapolation(f, &config)?;
    println!("{}: rmse inside {:.3e}, outside {:.3e}", f.name(), r.rmse_inside, r.rmse_outside);
    let (lo, hi) = f.train_domain();
    for &(x, t, p) in r.rows.iter().step_by(100) {
        let mark = if x < lo || x > hi { "extrapolated" } else { "" };
        println!("{x:>8.3} {t:>9.4} {p:>9.4} {mark}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
