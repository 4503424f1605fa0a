//! Scratch diagnostics; not part of the suite.

use num::{BigRational, ToPrimitive};

use rcds_core::{
    generate, most_likely_vector, prune, solve_polymatroid_steiner, to_integer_polymatroid,
    Family, FeedbackModel, GeneratorConfig, NodeSet, Obs, PolyKind, Realization, RoundContext,
    SteinerInstance, SubmodularFn,
};

#[test]
#[ignore]
fn probe_stall_rounds() {
    let mut base = 140_000u64;
    let (g, s, seed) = loop {
        let cfg = GeneratorConfig::new(Family::UnitDisk, 40, 30, base);
        if let Ok(pair) = generate(&cfg) {
            break (pair.0, pair.1, base);
        }
        base += 100;
    };
    println!("instance at base seed {seed}, M={}", s.len());
    let hidden = s.scenario(2);
    let n = g.n();
    let root = g.root();
    let f = |r: &BigRational| r.to_f64().unwrap();

    let mut phi = Realization::all_unknown(n, root);
    let mut chosen = NodeSet::empty(n);
    chosen.insert(root);
    let mut live = prune(&g, &s, &phi, &NodeSet::full(n)).unwrap();

    for round in 1..=8 {
        let ctx = RoundContext::new(
            &g,
            &s,
            live.clone(),
            chosen.intersection(&live),
            phi.clone(),
            FeedbackModel::Local,
        )
        .unwrap();
        let domain = ctx.steiner_ground().clone();
        let mut objective_set = domain.clone();
        objective_set.subtract(&chosen);
        println!(
            "round {round}: live={} chosen={:?} domain={:?}",
            live.len(),
            chosen.iter().collect::<Vec<_>>(),
            domain.iter().collect::<Vec<_>>()
        );

        let plt = to_integer_polymatroid(ctx.plt(), PolyKind::Plt, &s, ctx.phi()).unwrap();
        let inst =
            SteinerInstance::new(&g, domain.clone(), objective_set.clone(), &plt, None).unwrap();
        let plt_report = solve_polymatroid_steiner(&inst).unwrap();
        println!(
            "  plt target={} solution={:?} paid={:.4}",
            inst.target(),
            plt_report.solution.iter().collect::<Vec<_>>(),
            f(&plt_report.objective)
        );

        let plr_fn = ctx.plr();
        let consistent_mass: u128 = ctx.mass() as u128;
        let h_star = if plr_fn.numerator(&domain).unwrap() < consistent_mass {
            println!("  plr skipped (cannot reach 1/2)");
            plt_report.solution
        } else {
            let plr = to_integer_polymatroid(plr_fn, PolyKind::Plr, &s, ctx.phi()).unwrap();
            let inst2 = SteinerInstance::new(&g, domain.clone(), objective_set, &plr, None).unwrap();
            let plr_report = solve_polymatroid_steiner(&inst2).unwrap();
            println!(
                "  plr target={} solution={:?} paid={:.4}",
                inst2.target(),
                plr_report.solution.iter().collect::<Vec<_>>(),
                f(&plr_report.objective)
            );
            if plr_report.objective < plt_report.objective {
                plr_report.solution
            } else {
                plt_report.solution
            }
        };
        println!("  h_star={:?}", h_star.iter().collect::<Vec<_>>());

        let mut walked = 0;
        loop {
            let active_chosen: Vec<usize> = chosen
                .iter()
                .filter(|&v| phi.state(v) == Obs::Active && live.contains(v))
                .collect();
            let mut reach_set = NodeSet::empty(n);
            for &u in &active_chosen {
                reach_set.union_with(&g.closed_neighborhood(u).unwrap());
            }
            reach_set.intersect_with(&live);
            reach_set.subtract(&chosen);
            let mut cands = reach_set;
            cands.intersect_with(&h_star);
            let Some(v) = cands.first() else {
                println!("  walk exhausted after {walked} choices");
                break;
            };
            let predicted = most_likely_vector(&ctx, v).unwrap();
            let state = hidden.is_active(v);
            chosen.insert(v);
            phi.observe(v, state);
            walked += 1;
            let expect = predicted.state(v);
            println!(
                "  choose {v} (w={:.3}) active={state} predicted={expect:?}",
                f(g.weight(v))
            );
            if expect != Obs::Unknown && (expect == Obs::Active) != state {
                println!("  CONTRADICTION, round break");
                break;
            }
        }
        live = prune(&g, &s, &phi, &live).unwrap();
        let mut dominated = true;
        for v in live.iter() {
            if !g.closed_neighborhood(v).unwrap().intersection_len(&chosen) > 0 {
                continue;
            }
        }
        let dom_set = g.dominated_set(&chosen);
        for v in live.iter() {
            if !dom_set.contains(v) {
                dominated = false;
                break;
            }
        }
        println!("  after prune: live={} dominated={dominated}", live.len());
        if dominated {
            break;
        }
        if walked == 0 {
            println!("  STALL DETECTED");
            if round >= 2 {
                break;
            }
        }
    }
}
