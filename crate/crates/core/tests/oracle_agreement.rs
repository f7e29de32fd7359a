mod common;

use common::{connected_graph, finished, rel_err, roomy, BUDGET};
use flowdiff_core::oracle::oracle_solve;
use flowdiff_core::{
    recover_flow, solve_general, solve_q2, DiffusionProblem, Graph, NodeSet, SolverOptions,
    StepRule,
};
use proptest::prelude::*;

const EPS: f64 = 1e-2;

fn problem(g: &Graph, seed: usize, delta: f64, p: f64) -> Option<DiffusionProblem<'_>> {
    let seeds = NodeSet::new(g, [seed % g.node_count()]).unwrap();
    DiffusionProblem::new(g, seeds, delta, p, EPS).ok().and_then(roomy)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn local_and_dense_solvers_agree(
        g in connected_graph(2, 20),
        seed in 0usize..20,
        delta in prop_oneof![Just(2.0), Just(4.0)],
        p in prop_oneof![Just(2.0), Just(4.0), Just(8.0)],
    ) {
        let prob = problem(&g, seed, delta, p);
        prop_assume!(prob.is_some());
        let prob = prob.unwrap();
        let local = finished(if p == 2.0 { solve_q2(&prob) } else { solve_general(&prob) });
        prop_assume!(local.is_some());
        let local = local.unwrap();
        let dense = oracle_solve(&prob, 1e-9).unwrap();
        // Projected gradient can run out of iterations on stiff p = 8
        // instances; only certified dense answers are compared.
        prop_assume!(dense.residual <= 1e-9);
        let a = prob.objective(&local.x);
        let b = prob.objective(&dense.heights());
        prop_assert!(rel_err(a, b) <= 1e-6, "local {a} dense {b}");
    }

    #[test]
    fn quadratic_paths_agree(
        g in connected_graph(2, 20),
        seed in 0usize..20,
        delta in 1.5f64..5.0,
    ) {
        let prob = problem(&g, seed, delta, 2.0);
        prop_assume!(prob.is_some());
        let prob = prob.unwrap();
        let exact = solve_q2(&prob).unwrap();
        let generic = finished(solve_general(&prob));
        prop_assume!(generic.is_some());
        let generic = generic.unwrap();
        let (a, b) = (prob.objective(&exact.x), prob.objective(&generic.x));
        prop_assert!(rel_err(a, b) <= 1e-6, "push {a} line search {b}");
    }

    #[test]
    fn near_quadratic_exponent_approaches_the_push_answer(
        g in connected_graph(2, 15),
        seed in 0usize..15,
    ) {
        let quad = problem(&g, seed, 2.0, 2.0);
        prop_assume!(quad.is_some());
        let quad = quad.unwrap();
        let near = problem(&g, seed, 2.0, 2.0 + 1e-9).unwrap().with_mu(1e-3).unwrap();
        let a = quad.objective(&solve_q2(&quad).unwrap().x);
        let near_sol = finished(solve_general(&near));
        prop_assume!(near_sol.is_some());
        let b = near.objective(&near_sol.unwrap().x);
        prop_assert!(rel_err(a, b) <= 1e-6, "q=2 {a} q→2 {b}");
    }

    #[test]
    fn weak_duality_holds_at_convergence(
        g in connected_graph(2, 20),
        seed in 0usize..20,
        delta in 1.5f64..5.0,
        p in prop_oneof![Just(2.0), Just(3.0), Just(4.0), Just(8.0)],
    ) {
        let prob = problem(&g, seed, delta, p);
        prop_assume!(prob.is_some());
        let prob = prob.unwrap();
        let sol = finished(solve_general(&prob));
        prop_assume!(sol.is_some());
        let sol = sol.unwrap();
        let flow = recover_flow(&prob, &sol).unwrap();
        let (cost, dual) = (flow.cost(p), prob.objective_unsmoothed(&sol.x));
        // Fenchel-Young per edge gives cost + F(x) ≥ Σ x(v)·∂_v F(x), and the
        // partials on the support are at least -term_tol.
        let heights: f64 = sol.x.iter().map(|(_, h)| h).sum();
        let slack = prob.term_tol() * heights + 1e-12 * (cost.abs() + dual.abs());
        prop_assert!(cost + dual >= -slack, "gap {} slack {slack}", cost + dual);
    }

    #[test]
    fn fixed_step_reaches_the_same_optimum(
        g in connected_graph(2, 12),
        seed in 0usize..12,
        p in prop_oneof![Just(3.0), Just(4.0)],
    ) {
        let prob = problem(&g, seed, 2.0, p);
        prop_assume!(prob.is_some());
        let prob = prob.unwrap().with_mu(0.5).unwrap();
        let fixed = prob.clone().with_options(SolverOptions {
            step: StepRule::Fixed,
            max_updates: Some(BUDGET),
            ..Default::default()
        });
        let (a, b) = (finished(solve_general(&prob)), finished(solve_general(&fixed)));
        prop_assume!(a.is_some() && b.is_some());
        let (a, b) = (prob.objective(&a.unwrap().x), prob.objective(&b.unwrap().x));
        prop_assert!(rel_err(a, b) <= 1e-6, "line search {a} fixed {b}");
    }
}
