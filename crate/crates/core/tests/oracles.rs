// Independent oracles and property tests for the building blocks.

use pisn::autodiff::{jet_eval, Jet, JetAlgebra, Tape};
use pisn::decomp::{interface_loss_with, interface_points, locate_subdomain, standard_subdomains, Interface, InterfacePoints};
use pisn::harness::optim::{adam_step, AdamState};
use pisn::harness::{Architecture, Checkpoint, InterfaceWeights, StepDecay, TrainConfig};
use pisn::mlp::{mlp_forward, Mlp, MlpParams};
use pisn::network::{Network, NetworkSpec};
use pisn::pdelib::{catalog_get, evaluate_errors_with, NAMES};
use pisn::physics::{total_loss, CollocationCounts, CollocationSet, LossWeights, Sampling};
use pisn::symnet::{extract_expression, symnet_forward, symnet_init, Grammar, SymbolicNetParams, Var};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight-line evaluation of a symbolic network written directly from
/// the layer definition: six affine forms per layer feeding sin, exp, a
/// sum and a product, with the raw inputs and a constant carried along.
fn interpret(values: &[f64], n: usize, depth: usize, point: &[f64]) -> f64 {
    let mut pos = 0;
    let mut take = |len: usize| {
        let s = &values[pos..pos + len];
        pos += len;
        s.to_vec()
    };
    let mut state: Vec<f64> = point.to_vec();
    for _ in 0..depth {
        let mut l = [0.0; 6];
        for lk in l.iter_mut() {
            let w = take(state.len() + 1);
            *lk = w[state.len()];
            for (a, b) in w.iter().zip(&state) {
                *lk += a * b;
            }
        }
        let mut next = vec![l[0].sin(), l[1].exp(), l[2] + l[3], l[4] * l[5]];
        next.extend_from_slice(point);
        state = next;
    }
    let w = take(4 + n + 1);
    let mut out = w[4 + n];
    for (a, b) in w.iter().zip(&state) {
        out += a * b;
    }
    out
}

#[test]
fn symbolic_forward_matches_straight_line_interpreter() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (vars, depth) in [(vec![Var::X, Var::T], 2), (vec![Var::X, Var::Y], 3), (vec![Var::X, Var::Y, Var::T], 1)] {
        let n = vars.len();
        for seed in 0..5 {
            let p = symnet_init(depth, Grammar::new(&vars).unwrap(), seed).unwrap();
            for _ in 0..20 {
                let point: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let got = symnet_forward(&p, &point).unwrap().value();
                let want = interpret(&p.values.values, n, depth, &point);
                assert!((got - want).abs() <= 1e-14 * want.abs().max(1.0), "{got} vs {want}");
            }
        }
    }
}

#[test]
fn composite_second_derivatives_match_finite_differences() {
    // f(x, y) = sin(exp(x * y))
    let f = |x: f64, y: f64| (x * y).exp().sin();
    let jet = |x: f64, y: f64| {
        jet_eval(&[x, y], |alg, v| {
            let a = alg.lift(v[0]);
            let b = alg.lift(v[1]);
            let p = alg.mul(a, b);
            let e = alg.exp(p);
            alg.sin(e)
        })
    };
    let h = 1e-4;
    for &(x, y) in &[(0.3, 0.5), (-0.7, 0.2), (1.1, -0.4)] {
        let j = jet(x, y);
        let fxx = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h);
        let fyy = (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h);
        let fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
        let fx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
        assert!((j.first(0) - fx).abs() < 1e-7);
        assert!((j.second(0, 0) - fxx).abs() < 1e-5, "{} {}", j.second(0, 0), fxx);
        assert!((j.second(1, 1) - fyy).abs() < 1e-5);
        assert!((j.second(0, 1) - fxy).abs() < 1e-5);
        assert_eq!(j.second(0, 1), j.second(1, 0));
    }
}

#[test]
fn affine_maps_have_zero_hessian() {
    let j = jet_eval(&[0.4, -1.3, 2.0], |alg, v| {
        let xs: Vec<_> = v.iter().map(|&j| alg.lift(j)).collect();
        let params = [0.5, -2.0, 3.0, 0.25];
        let d = alg.dot(&params, 0, &xs, Some(3));
        alg.affine(d, -1.5, 4.0)
    });
    assert_eq!(j.hessian(), [[0.0; 3]; 3]);
    assert_eq!(j.gradient(), [-0.75, 3.0, -4.5]);
}

#[test]
fn mlp_matches_manual_two_layer_net() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = MlpParams::init(&[2, 3, 1], &mut rng).unwrap();
    let w = &p.values.values;
    let x = [0.2, -0.6];
    let mut out = w[3 * 2 + 3 + 3];
    for o in 0..3 {
        let h = (w[o * 2] * x[0] + w[o * 2 + 1] * x[1] + w[6 + o]).tanh();
        out += w[9 + o] * h;
    }
    let got = mlp_forward(&p, &x).unwrap()[0].value();
    assert!((got - out).abs() < 1e-15);
}

#[test]
fn tape_gradient_of_product_matches_closed_form() {
    // L = (a x + b)^2 at x = 0.5 with params a, b
    let params = [1.5, -0.25];
    let mut tape = Tape::new();
    let x = tape.lift(Jet::constant(0.5));
    let y = tape.dot(&params, 0, &[x], Some(1));
    let l = tape.square(y);
    let mut g = [0.0; 2];
    tape.backward(&params, &[(l, 1.0)], &mut g).unwrap();
    let r = 1.5 * 0.5 - 0.25;
    assert!((g[0] - 2.0 * r * 0.5).abs() < 1e-15);
    assert!((g[1] - 2.0 * r).abs() < 1e-15);
}

fn small_colloc(name: &str, task: Option<f64>, seed: u64) -> (pisn::pdelib::PdeProblem, CollocationSet) {
    let p = catalog_get(name, task).unwrap();
    let c = CollocationSet::sample(&p, CollocationCounts { interior: 12, initial: 4, boundary: 8 }, Sampling::Random, seed);
    (p, c)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn loss_is_nonnegative_and_linear_in_weights(seed in 0u64..1000, scale in 0.0f64..5.0) {
        let (p, c) = small_colloc("heat", None, seed);
        let g = Grammar::new(&p.vars).unwrap();
        let (net, _) = Network::build(&NetworkSpec::pisn(2), &g, &p.outputs, 0, "").unwrap();
        let params = net.init_values(&mut ChaCha8Rng::seed_from_u64(seed));
        let base = LossWeights::default();
        let l1 = total_loss(&p, &net, &params, &c, base).unwrap();
        prop_assert!(l1 >= 0.0);
        let scaled = LossWeights { physics: scale, idc: scale, inc: scale, bc: scale };
        let l2 = total_loss(&p, &net, &params, &c, scaled).unwrap();
        prop_assert!((l2 - scale * l1).abs() <= 1e-12 * l1.max(1.0) * scale.max(1.0));
    }

    #[test]
    fn exact_solution_matches_targets(i in 0usize..NAMES.len(), seed in 0u64..100) {
        let name = NAMES[i];
        let kind = pisn::pdelib::ProblemKind::from_name(name).unwrap();
        let task = kind.task_range().map(|(_, lo, hi)| 0.5 * (lo + hi));
        let (p, c) = small_colloc(name, task, seed);
        let report = evaluate_errors_with(&p, "exact", &c.interior, |x| p.analytical_eval(x));
        prop_assert_eq!(report.mean(), 0.0);
        for t in c.idc.iter().chain(&c.bc) {
            let exact = p.analytical_eval(&t.point);
            for (a, b) in exact.iter().zip(&t.values) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn schedule_is_pure_step_function(lr in 1e-5f64..1.0, e in 0usize..200_000) {
        let s = StepDecay { lr, gamma: 0.1, milestones: vec![40_000, 80_000, 120_000] };
        let passed = s.milestones.iter().filter(|&&m| m <= e).count() as i32;
        prop_assert_eq!(s.lr_at(e), lr * 0.1f64.powi(passed));
        prop_assert_eq!(s.lr_at(e), s.lr_at(e));
    }

    #[test]
    fn zero_gradient_keeps_parameters(values in proptest::collection::vec(-10.0f64..10.0, 1..20), steps in 1usize..5) {
        let mut p = values.clone();
        let mut st = AdamState::new(p.len());
        for _ in 0..steps {
            adam_step(&mut p, &vec![0.0; values.len()], &mut st, 1e-2).unwrap();
        }
        prop_assert_eq!(p, values);
    }

    #[test]
    fn every_point_has_one_box(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let k = locate_subdomain(x, y).unwrap();
        let specs = standard_subdomains();
        let owners = specs.iter().filter(|s| {
            let inx = x >= s.x.0 && (x < s.x.1 || (s.x.1 == 1.0 && x == 1.0));
            let iny = y >= s.y.0 && (y < s.y.1 || (s.y.1 == 1.0 && y == 1.0));
            inx && iny
        }).count();
        prop_assert_eq!(owners, 1);
        prop_assert!((1..=12).contains(&k));
    }

    #[test]
    fn interface_loss_symmetric(shift in -1.0f64..1.0, face in 0usize..17) {
        let p = catalog_get("burgers2d-coupled", Some(5e-3)).unwrap();
        let pts = interface_points(&p, &standard_subdomains(), 3);
        let one = vec![pts[face].clone()];
        let f = one[0].face.clone();
        let swapped = vec![InterfacePoints { face: Interface { low: f.high, high: f.low, ..f.clone() }, points: one[0].points.clone() }];
        let eval = |k: usize, x: &[f64]| {
            let mut j = p.exact_jets(x);
            if k == f.low { for v in &mut j { *v = Jet::from_components({ let mut c = *v.components(); c[0] += shift; c }); } }
            j
        };
        let w = InterfaceWeights::default();
        let a = interface_loss_with(&p, &one, eval, w);
        let b = interface_loss_with(&p, &swapped, eval, w);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn extraction_round_trip(seed in 0u64..10_000, depth in 1usize..4) {
        let g = Grammar::new(&[Var::X, Var::T]).unwrap();
        let p = symnet_init(depth, g, seed).unwrap();
        let e = extract_expression(&p, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let pt = [rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0)];
            let a = e.eval_at(&[Var::X, Var::T], &pt).value();
            let b = symnet_forward(&p, &pt).unwrap().value();
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn checkpoint_round_trips_bitwise(seed in 0u64..1000, n in 1usize..50) {
        let config = TrainConfig::desk("heat", None, Architecture::Pisn, 10, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 1e3 - 5e2).collect();
        let mut layout = pisn::autodiff::ParamLayout::new();
        layout.push("w", n);
        let ck = Checkpoint::new(config, layout, values);
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        prop_assert_eq!(back, ck);
    }
}

#[test]
fn zero_symbolic_network_extracts_to_zero() {
    let p = SymbolicNetParams::zeros(Grammar::new(&[Var::X, Var::T]).unwrap(), 2).unwrap();
    assert_eq!(pisn::symnet::expression_render(&extract_expression(&p, 0.0), 3), "0");
    let m = Mlp::uniform(2, 4, 2, 1, 0).unwrap();
    assert_eq!(m.param_count(), 2 * 4 + 4 + 4 * 4 + 4 + 4 + 1);
}
