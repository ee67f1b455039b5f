// Symbolic network for steady Navier-Stokes (Kovasznay flow): three
// outputs u, v, p, each with its own expression.
//
// cargo run --release --example kovasznay_flow -- 5000 475

use pisn::harness::{train, Architecture, TrainConfig};
use pisn::pdelib::catalog_get;
use pisn::physics::{physics_residual, CollocationCounts};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let re = args.next().and_then(|a| a.parse().ok()).unwrap_or(475.0);

    // the exact solution is a zero-residual reference
    let problem = catalog_get("kovasznay", Some(re))?;
    let r = physics_residual(&problem, &problem.exact_jets(&[0.3, 0.7]), &[0.3, 0.7])?;
    println!("exact-solution residuals at (0.3, 0.7): {r:?}");

    let mut config = TrainConfig::desk("kovasznay", Some(re), Architecture::Pisn, epochs, 400)?;
    config.collocation = CollocationCounts { interior: 400, initial: 0, boundary: 160 };
    config.eval_grid = 21;
    let out = train(&config)?;
    for o in &out.final_report().outputs {
        println!("{}: mean {:.3e}, max {:.3e}", o.output, o.mean, o.max);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    run_example()
}
