mod common;

use std::sync::Arc;
use std::time::Instant;

use common::*;
use faircheck::bounds::neuron_bounds;
use faircheck::oracle::brute_force;
use faircheck::report::RunReport;
use faircheck::verifier::{export_pruned, replay, sidecar_path, Verifier, VerifyOptions};
use faircheck::{
    build_predicate, check_counterexample, forward, load_network, save_network, FairnessQuery,
    InputBox, OutputActivation, QueryFile, Status,
};
use rand::Rng;

fn run(net: faircheck::Network, q: &FairnessQuery, opts: VerifyOptions) -> RunReport {
    Verifier::new(net, q.clone(), opts).unwrap().run()
}

#[test]
fn biased_network_is_refuted_quickly() {
    let start = Instant::now();
    let rep = run(credit_network(3.0), &FairnessQuery::individual(1, 10), quick_options());
    assert!(start.elapsed().as_secs_f64() < 5.0);
    assert_eq!(rep.verdict, Status::Sat);
    assert_eq!(rep.exit_code(), 1);
    let id = rep.first_sat.unwrap();
    let c = rep.result(id).unwrap().counterexample.clone().unwrap();
    assert!(c.valid_exact && c.valid_float);
    let net = credit_network(3.0);
    let pred = build_predicate(&FairnessQuery::individual(1, 10), &credit_schema(), &net).unwrap();
    assert!(check_counterexample(&pred, &net, &c.x, &c.xp));
    assert!(rep.result(id).unwrap().region.contains(&c.x));
}

#[test]
fn blind_network_is_certified() {
    let rep = run(credit_network(0.0), &FairnessQuery::individual(1, 10), quick_options());
    assert_eq!(rep.verdict, Status::Unsat);
    assert_eq!(rep.exit_code(), 0);
    assert_eq!(rep.totals.partitions, 10);
    assert_eq!(rep.totals.unsat, 10);
    assert_eq!(rep.coverage_pct, 100.0);
    assert_eq!(rep.domain_coverage_pct, 100.0);
    assert!(rep.results.iter().all(|r| !r.heuristic_attempted));
    let acc = rep.accumulated();
    assert_eq!(acc.status, rep.verdict);
}

#[test]
fn verdicts_match_the_oracle_on_small_networks() {
    for seed in 0..12 {
        let mut r = rng(500 + seed);
        let schema = random_int_schema(&mut r, 3, 300);
        let hidden = random_hidden(&mut r, 2, 5);
        let out = if seed % 3 == 0 { OutputActivation::Softmax } else { OutputActivation::Sigmoid };
        let net = random_network(&mut r, 3, &hidden, out, Some(schema.clone()));
        let q = FairnessQuery::individual(r.gen_range(0..3), 3);
        let pred = build_predicate(&q, &schema, &net).unwrap();
        let truth = brute_force(&net, &pred, &pred.domain_box).unwrap().is_sat();
        let opts = VerifyOptions { heuristic: false, ..quick_options() };
        let rep = run(net, &q, opts);
        let expect = if truth { Status::Sat } else { Status::Unsat };
        assert_eq!(rep.verdict, expect, "seed {seed}");
    }
}

#[test]
fn parallel_runs_agree_with_sequential() {
    let mut r = rng(9);
    let schema = random_int_schema(&mut r, 3, 700);
    let net = random_network(&mut r, 3, &[6, 4], OutputActivation::Sigmoid, Some(schema));
    let q = FairnessQuery::individual(0, 2);
    let seq = run(net.clone(), &q, quick_options());
    let par = run(net, &q, VerifyOptions { jobs: 4, ..quick_options() });
    assert_eq!(seq.verdict, par.verdict);
    assert_eq!(seq.totals.partitions, par.totals.partitions);
    let strip = |rep: &RunReport| -> Vec<(u64, u64, Status)> {
        rep.results.iter().map(|r| (r.id, r.order, r.status)).collect()
    };
    assert_eq!(strip(&seq), strip(&par));
    let orders: Vec<u64> = par.results.iter().map(|r| r.order).collect();
    assert!(orders.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn stop_on_sat_ends_early() {
    let q = FairnessQuery::individual(1, 1);
    let opts = VerifyOptions { stop_on_sat: true, ..quick_options() };
    let rep = run(credit_network(3.0), &q, opts);
    assert_eq!(rep.verdict, Status::Sat);
    assert!(rep.stopped_on_sat);
    assert!(rep.totals.attempted < rep.totals.partitions);
    assert_eq!(rep.results.iter().filter(|r| r.status == Status::Sat).count(), 1);
}

#[test]
fn unresponsive_solver_yields_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let slow = fake_solver(dir.path(), "hang", "exec sleep 100");
    let opts = VerifyOptions {
        solver: slow,
        soft_timeout_s: Some(0.3),
        hard_timeout_s: Some(30.0),
        iv_timeout_s: 0.3,
        profile_size: 50,
        ..quick_options()
    };
    let start = Instant::now();
    let rep = run(credit_network(0.0), &FairnessQuery::individual(1, 50), opts);
    assert_eq!(rep.verdict, Status::Unknown);
    assert_eq!(rep.exit_code(), 2);
    assert_eq!(rep.totals.unknown, 2);
    assert!(rep.results.iter().all(|r| r.killed));
    assert!(start.elapsed().as_secs_f64() < 20.0);
}

#[test]
fn crashing_solver_is_reported_as_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = fake_solver(dir.path(), "crash", "exit 2");
    let opts = VerifyOptions { solver: bad, ..quick_options() };
    let rep = run(credit_network(0.0), &FairnessQuery::individual(1, 50), opts);
    assert_eq!(rep.verdict, Status::Unknown);
    assert!(rep.totals.errors > 0);
    assert_eq!(rep.exit_code(), 3);
}

#[test]
fn hard_timeout_stops_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let slow = fake_solver(dir.path(), "hang", "exec sleep 100");
    let opts = VerifyOptions {
        solver: slow,
        soft_timeout_s: Some(0.5),
        hard_timeout_s: Some(1.5),
        individual_verification: false,
        heuristic: false,
        ..quick_options()
    };
    let start = Instant::now();
    let rep = run(credit_network(0.0), &FairnessQuery::individual(1, 5), opts);
    let wall = start.elapsed().as_secs_f64();
    assert!(rep.hard_timeout_hit);
    assert!(rep.totals.attempted < rep.totals.partitions);
    assert!(wall < 1.5 + 0.5 + 1.5, "took {wall}");
    let acc = rep.accumulated();
    assert_eq!(acc.status, Status::Unknown);
    assert_eq!(rep.domain_coverage_pct, acc.coverage_pct);
}

fn write_inputs(dir: &std::path::Path, w: f64, ms: u64) -> (std::path::PathBuf, std::path::PathBuf) {
    let model = dir.join("model.json");
    save_network(&credit_network(w), &model).unwrap();
    let query = dir.join("query.json");
    let qf = QueryFile::from_query(&FairnessQuery::individual(1, ms), &credit_schema());
    std::fs::write(&query, serde_json::to_string(&qf).unwrap()).unwrap();
    (model, query)
}

#[test]
fn reports_replay_consistently() {
    let dir = tempfile::tempdir().unwrap();
    let (model, query) = write_inputs(dir.path(), 3.0, 25);
    let rep = faircheck::verifier::run(&model, &query, quick_options()).unwrap();
    let path = dir.path().join("report.json");
    rep.save(&path).unwrap();
    let back = RunReport::load(&path).unwrap();
    assert_eq!(back, rep);
    for r in &back.results {
        let out = replay(&back, r.id, None, None).unwrap();
        assert!(out.consistent);
        assert_eq!(out.replayed.status, r.status);
        assert_eq!(out.replayed.removed, r.removed);
        if r.status == Status::Sat {
            assert_eq!(out.stored_counterexample_valid, Some(true));
        }
    }
    // a different model under the same path is detected on SAT partitions
    let sat_id = back.first_sat.unwrap();
    save_network(&credit_network(0.0), &model).unwrap();
    let out = replay(&back, sat_id, None, None).unwrap();
    assert!(!out.consistent);
    assert_eq!(out.stored_counterexample_valid, Some(false));
    std::fs::remove_file(&model).unwrap();
    assert!(replay(&back, sat_id, None, None).is_err());
}

#[test]
fn exported_pruned_network_matches_on_its_region() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(77);
    let schema = random_int_schema(&mut r, 3, 900);
    let net = random_network(&mut r, 3, &[8, 6], OutputActivation::Sigmoid, Some(schema.clone()));
    let model = dir.path().join("model.json");
    save_network(&net, &model).unwrap();
    let query = dir.path().join("query.json");
    let qf = QueryFile::from_query(&FairnessQuery::individual(0, 2), &schema);
    std::fs::write(&query, serde_json::to_string(&qf).unwrap()).unwrap();
    let opts = VerifyOptions { heuristic: false, ..quick_options() };
    let rep = faircheck::verifier::run(&model, &query, opts).unwrap();
    let mut any_removed = false;
    for res in &rep.results {
        let out = dir.path().join(format!("pruned{}.json", res.id));
        let side = export_pruned(&rep, res.id, &out, None).unwrap();
        assert!(sidecar_path(&out).exists());
        assert_eq!(side.removed, res.removed);
        assert!(!side.heuristic);
        any_removed |= !side.removed.is_empty();
        let small = load_network(&out).unwrap();
        for x in grid_points(&res.region) {
            let a = forward(&net, &x).unwrap();
            let b = forward(&small, &x).unwrap();
            assert!((a[0] - b[0]).abs() <= 1e-9 * (1.0 + a[0].abs()));
        }
    }
    assert!(any_removed);
}

#[test]
fn sound_stage_alone_matches_prune_module() {
    let net = Arc::new(credit_network(3.0));
    let v = Verifier::with_shared(Arc::clone(&net), FairnessQuery::individual(1, 10), quick_options()).unwrap();
    let part = v.partitions().get(0).unwrap();
    let p = v.sound_pruning(&part.region, None);
    let direct = faircheck::sound_prune(&net, &part.region, &neuron_bounds(&net, &part.region), None);
    assert_eq!(p.removed, direct.removed);
    assert_eq!(p.region, InputBox::new(part.region.ranges.clone()));
}
