// Coupled 2D Burgers on twelve boxes, one MLP each, joined by interface
// penalties. Prints the per-box error table.
//
// cargo run --release --example burgers_decomposition -- 2000

use pisn::decomp::{interface_loss_with, interface_points, locate_subdomain, standard_subdomains};
use pisn::harness::{train, Architecture, InterfaceWeights, TrainConfig};
use pisn::pdelib::catalog_get;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    println!("(0.5, 0.3) lies in box {}", locate_subdomain(0.5, 0.3)?);

    let problem = catalog_get("burgers2d-coupled", Some(5e-3))?;
    let faces = interface_points(&problem, &standard_subdomains(), 10);
    let exact = interface_loss_with(&problem, &faces, |_, p| problem.exact_jets(p), InterfaceWeights::default());
    println!("{} faces, interface loss of the exact solution {exact:.1e}", faces.len());

    let mut config = TrainConfig::desk("burgers2d-coupled", Some(5e-3), Architecture::DecompPinn, epochs, 0)?;
    config.collocation.initial = 20;
    config.collocation.boundary = 20;
    config.eval_grid = 11;
    let out = train(&config)?;
    print!("{}", out.domain_csv.as_deref().unwrap_or(""));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    run_example()
}
