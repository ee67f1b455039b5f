// Hand-build a symbolic network equal to x + t, check it solves the
// Fokker-Planck equation, and extract it back as text and JSON.

use pisn::autodiff::{Eval, Jet};
use pisn::pdelib::catalog_get;
use pisn::physics::physics_residual;
use pisn::symnet::{extract_expression, render_named, sum_of_inputs_witness, symnet_forward, Grammar, Var};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grammar = Grammar::new(&[Var::X, Var::T])?;
    let witness = sum_of_inputs_witness(grammar, 2, Var::X, Var::T)?;
    let u = symnet_forward(&witness, &[2.0, 3.0])?;
    println!("u(2, 3) = {}, u_x = {}, u_t = {}", u.value(), u.first(0), u.first(1));

    let fp1 = catalog_get("fp1", None)?;
    let point = [0.25, 0.5];
    let r = physics_residual(&fp1, &[symnet_forward(&witness, &point)?], &point)?;
    println!("FP-1 residual at {point:?}: {:.1e}", r[0]);

    let expr = extract_expression(&witness, 1e-6);
    println!("pruned:   {}", render_named(&expr, "u", 3));
    let full = extract_expression(&witness, 0.0);
    let back = full.eval(&mut Eval, &[(Var::X, Jet::variable(0.1, 0)), (Var::T, Jet::variable(0.7, 1))]);
    println!("unpruned evaluates to {} at (0.1, 0.7)", back.value());
    println!("{}", serde_json::to_string(&expr)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
