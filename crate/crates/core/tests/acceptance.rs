//! Acceptance suite. Runs every exit criterion in order, prints one
//! `PASS`/`FAIL` line per criterion and exits non-zero if any failed.
//!
//! The oracles here (brute-force assignment search, fitness evaluation,
//! cluster-structure checks) are written against raw node geometry and do
//! not call the library's own fitness or clustering helpers.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gcgsa::assignment::{AssignmentProblem, EligibilityMap, FitnessForm, FitnessWeights};
use gcgsa::clustering::{build_clusters, ClusterMode, ClusterSet};
use gcgsa::experiment::{load_preset, run_scenario, ResultSet, Scenario};
use gcgsa::gsa::{optimize, GsaParams, SearchBox};
use gcgsa::net::{
    deploy_random, distance, rx_energy, tx_energy, DeployOptions, Deployment, GatewayNode, Position, RadioParams,
    SensorNode,
};
use gcgsa::sim::{check_feasibility, run_simulation, Protocol, ProtocolKind, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(id: &'static str, title: &'static str, pass: bool, detail: String) -> Verdict {
    Verdict { id, title, pass, detail }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn radio_exactness() -> Verdict {
    let radio = RadioParams::default();
    let start = Instant::now();
    let tx = tx_energy(4000, 50.0, &radio);
    let rx = rx_energy(4000, &radio);
    let elapsed = start.elapsed();
    let rel = |got: f64, want: f64| ((got - want) / want).abs();
    let pass = rel(tx, 3.0e-4) <= 1e-12 && rel(rx, 2.0e-4) <= 1e-12 && elapsed < Duration::from_millis(1);
    verdict(
        "1",
        "radio model exactness",
        pass,
        format!("tx(4000,50)={tx:e} J, rx(4000)={rx:e} J in {elapsed:?}"),
    )
}

fn gsa_sphere() -> Verdict {
    let params = GsaParams {
        n_agents: 30,
        t_max: 200,
        ..GsaParams::default()
    };
    let bounds = SearchBox::uniform(2, -100.0, 100.0).expect("valid box");
    let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let start = Instant::now();
    let bests: Vec<f64> = (1..=10u64)
        .map(|seed| optimize(&sphere, &params, &bounds, seed).expect("gsa runs").best_fitness)
        .collect();
    let elapsed = start.elapsed();
    let hits = bests.iter().filter(|&&b| b < 1e-2).count();
    let worst = bests.iter().copied().fold(0.0, f64::max);
    verdict(
        "2",
        "GSA sanity on the 2-D sphere",
        hits >= 9 && elapsed < Duration::from_secs(1),
        format!("{hits}/10 seeds below 1e-2 (worst {worst:.2e}) in {elapsed:?}"),
    )
}

/// Fitness of an explicit head → gateway choice, straight from geometry.
fn oracle_fitness(dep: &Deployment, choice: &[(usize, usize)], w: &FitnessWeights) -> f64 {
    let mut energy = 0.0;
    let mut dist = 0.0;
    for &(h, g) in choice {
        let gw = &dep.gateways[g];
        energy += gw.energy;
        dist += distance(dep.sensors[h].pos, gw.pos) + distance(gw.pos, dep.bs_pos);
    }
    match w.form {
        FitnessForm::Ff1 => w.alpha / energy + w.beta * dist,
        FitnessForm::Ff2 => {
            let raw = (w.beta * dist + w.t1) / (w.alpha * energy + w.t2);
            raw / (1.0 + raw)
        }
    }
}

/// Minimum fitness over every assignment, by recursive enumeration.
fn oracle_optimum(dep: &Deployment, options: &[Vec<usize>], w: &FitnessWeights) -> f64 {
    fn walk(
        dep: &Deployment,
        options: &[Vec<usize>],
        w: &FitnessWeights,
        prefix: &mut Vec<(usize, usize)>,
        best: &mut f64,
    ) {
        let h = prefix.len();
        if h == options.len() {
            *best = best.min(oracle_fitness(dep, prefix, w));
            return;
        }
        for &g in &options[h] {
            prefix.push((h, g));
            walk(dep, options, w, prefix, best);
            prefix.pop();
        }
    }
    let mut best = f64::INFINITY;
    walk(dep, options, w, &mut Vec::new(), &mut best);
    best
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    let mut instances = Vec::new();
    while instances.len() < 20 {
        let heads = rng.gen_range(1..=6);
        let gateways = rng.gen_range(1..=4);
        let dep = deploy_random(heads, gateways, 200.0, rng.gen(), &DeployOptions::default());
        let options: Vec<Vec<usize>> = dep
            .sensors
            .iter()
            .map(|s| {
                (0..dep.gateways.len())
                    .filter(|&g| distance(s.pos, dep.gateways[g].pos) <= 150.0)
                    .collect()
            })
            .collect();
        if options.iter().all(|o| !o.is_empty()) {
            instances.push((dep, options));
        }
    }

    let params = GsaParams::default();
    let mut pairs = 0;
    let mut hits = 0;
    let mut worst_gap: f64 = 0.0;
    for (i, (dep, options)) in instances.iter().enumerate() {
        let lists = dep
            .sensors
            .iter()
            .zip(options)
            .map(|(s, o)| (s.id, o.iter().map(|&g| dep.gateways[g].id).collect()))
            .collect();
        let problem = AssignmentProblem::new(EligibilityMap::from_lists(lists).expect("eligible"), dep).expect("problem");
        for form in [FitnessForm::Ff1, FitnessForm::Ff2] {
            let w = FitnessWeights::for_form(form);
            let optimum = oracle_optimum(dep, options, &w);
            for seed in 0..5u64 {
                let outcome = problem
                    .solve_gsa(&w, &params, (i as u64) << 8 | seed)
                    .expect("gsa assignment");
                let choice: Vec<(usize, usize)> = outcome
                    .assignment
                    .iter()
                    .map(|(h, g)| {
                        let hi = dep.sensors.iter().position(|s| s.id == h).expect("head");
                        let gi = dep.gateways.iter().position(|x| x.id == g).expect("gateway");
                        (hi, gi)
                    })
                    .collect();
                let got = oracle_fitness(dep, &choice, &w);
                let gap = (got - optimum) / optimum.abs();
                worst_gap = worst_gap.max(gap);
                pairs += 1;
                if gap <= 0.05 {
                    hits += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let share = hits as f64 / pairs as f64;
    verdict(
        "3",
        "GSA assignment vs exhaustive optimum",
        share >= 0.9 && elapsed < Duration::from_secs(30),
        format!("{hits}/{pairs} within 5% ({:.1}%), worst gap {:.2}% in {elapsed:?}", share * 100.0, worst_gap * 100.0),
    )
}

/// Random deployment with quantized random energies so that ties and
/// plateaus occur, plus a few dead sensors.
fn skewed_deployment(rng: &mut ChaCha8Rng) -> Deployment {
    let n = rng.gen_range(5..=250);
    let side = rng.gen_range(80.0..400.0);
    let mut dep = deploy_random(n, 2, side, rng.gen(), &DeployOptions::default());
    let levels = rng.gen_range(2..=20) as f64;
    for s in &mut dep.sensors {
        if rng.gen_bool(0.05) {
            s.energy = 0.0;
            s.alive = false;
        } else {
            s.energy = (rng.gen_range(1.0..=levels)).floor() / levels;
        }
    }
    dep
}

fn cluster_violations(dep: &Deployment, cs: &ClusterSet) -> Vec<String> {
    let mut bad = Vec::new();
    let by_id: BTreeMap<u32, &SensorNode> = dep.sensors.iter().map(|s| (s.id, s)).collect();
    let alive: BTreeSet<u32> = dep.sensors.iter().filter(|s| s.alive).map(|s| s.id).collect();

    let keys: BTreeSet<u32> = cs.parent.keys().copied().collect();
    if keys != alive {
        bad.push("parent map does not cover exactly the alive sensors".into());
    }
    for (&u, &p) in &cs.parent {
        let mut cur = u;
        let mut steps = 0;
        while let Some(Some(next)) = cs.parent.get(&cur) {
            let (a, b) = (by_id[&cur], by_id[next]);
            if b.energy < a.energy {
                bad.push(format!("energy decreases on edge {cur}->{next}"));
            }
            if distance(a.pos, b.pos) > a.tx_range.min(b.tx_range) + 1e-9 {
                bad.push(format!("edge {cur}->{next} exceeds range"));
            }
            cur = *next;
            steps += 1;
            if steps > dep.sensors.len() {
                bad.push(format!("cycle through {u}"));
                break;
            }
        }
        if p.is_none() && !cs.heads.contains(&u) {
            bad.push(format!("{u} has no parent but is not a head"));
        }
        if steps <= dep.sensors.len() && !cs.heads.contains(&cur) {
            bad.push(format!("{u} ends at non-head {cur}"));
        }
    }
    let mut seen = BTreeSet::new();
    for (h, members) in &cs.members {
        if !members.contains(h) {
            bad.push(format!("head {h} missing from its own cluster"));
        }
        for m in members {
            if !seen.insert(*m) {
                bad.push(format!("{m} appears in two clusters"));
            }
        }
    }
    if seen != alive {
        bad.push("clusters do not partition the alive sensors".into());
    }
    bad
}

fn clustering_invariants() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1A5);
    let mut problems = Vec::new();
    let mut ordered = 0;
    for i in 0..100 {
        let dep = skewed_deployment(&mut rng);
        let gc = build_clusters(&dep, ClusterMode::Gc);
        let wa = build_clusters(&dep, ClusterMode::Wa);
        for (mode, cs) in [("GC", &gc), ("WA", &wa)] {
            for v in cluster_violations(&dep, cs) {
                problems.push(format!("deployment {i} {mode}: {v}"));
            }
        }
        if gc.cluster_count() <= wa.cluster_count() {
            ordered += 1;
        } else {
            problems.push(format!("deployment {i}: GC {} > WA {}", gc.cluster_count(), wa.cluster_count()));
        }
    }
    let elapsed = start.elapsed();
    let detail = match problems.first() {
        None => format!("100 deployments clean, GC <= WA heads in {ordered}/100, in {elapsed:?}"),
        Some(p) => format!("{} violations, first: {p}", problems.len()),
    };
    verdict(
        "4",
        "gradient clustering invariants",
        problems.is_empty() && elapsed < Duration::from_secs(10),
        detail,
    )
}

fn single_sensor_config() -> SimConfig {
    let mut dep = Deployment::empty(100.0);
    dep.sensors.push(SensorNode {
        id: 0,
        pos: Position::new(0.0, 0.0),
        energy: 1.0,
        alive: true,
        tx_range: 100.0,
    });
    dep.gateways.push(GatewayNode {
        id: 1,
        pos: Position::new(50.0, 0.0),
        energy: 5.0,
        alive: true,
        tx_range: 150.0,
    });
    dep.bs_pos = Position::new(50.0, 0.0);
    let mut cfg = SimConfig::new(1, 1, 100.0, Protocol::new(ProtocolKind::GsaEec, FitnessForm::Ff1), 0);
    cfg.deployment = Some(dep);
    cfg
}

fn closed_form_lifetime() -> Verdict {
    let out = run_simulation(&single_sensor_config()).expect("single sensor runs");
    verdict(
        "5",
        "closed-form single-sensor lifetime",
        out.lifetime_rounds == 3333,
        format!("lifetime {} rounds", out.lifetime_rounds),
    )
}

/// First `count` seeds (from 1) whose deployment is feasible for every run
/// of `scenario`.
fn feasible_seeds(scenario: &Scenario, count: usize) -> Vec<u64> {
    let mut seeds = Vec::new();
    let mut seed = 1;
    while seeds.len() < count {
        let ok = scenario
            .sizes
            .iter()
            .all(|&size| scenario.configs(size, seed).iter().all(|c| check_feasibility(c).is_ok()));
        if ok {
            seeds.push(seed);
        }
        seed += 1;
    }
    seeds
}

struct TrendData {
    main: ResultSet,
    ff2: ResultSet,
    elapsed: Duration,
}

fn trend_runs() -> TrendData {
    let start = Instant::now();
    let mut main = load_preset("iv-a", None).expect("preset");
    let mut ff2 = load_preset("iv-e-wa", None).expect("preset");
    ff2.sizes.retain(|s| s.n_sensors == 2500);
    let mut both = main.clone();
    both.protocols.push(ProtocolKind::WaGsa);
    both.fitness_forms.push(FitnessForm::Ff2);
    let seeds = feasible_seeds(&both, 10);
    main.seeds = seeds.clone();
    ff2.seeds = seeds;
    let main = run_scenario(&main, jobs()).expect("main trend runs");
    let ff2 = run_scenario(&ff2, jobs()).expect("fitness and clustering comparison runs");
    TrendData {
        main,
        ff2,
        elapsed: start.elapsed(),
    }
}

fn stat(rs: &ResultSet, n: usize, kind: ProtocolKind, form: FitnessForm) -> (f64, f64, f64) {
    let row = rs.find(n, kind, form).expect("aggregate row present");
    (row.mean_lifetime, row.mean_energy, row.mean_clusters)
}

fn trend_criteria(data: &TrendData) -> Vec<Verdict> {
    use FitnessForm::{Ff1, Ff2};
    use ProtocolKind::{GcGsa, GsaEec, WaGsa};
    let in_budget = data.elapsed < Duration::from_secs(15 * 60);
    let budget = format!("criterion-6 runs took {:.0?}", data.elapsed);
    let mut out = Vec::new();

    let (gc_l, _, _) = stat(&data.main, 500, GcGsa, Ff1);
    let (eec_l, _, _) = stat(&data.main, 500, GsaEec, Ff1);
    let diff = (gc_l - eec_l).abs() / eec_l;
    out.push(verdict(
        "6a",
        "n=500 GC-GSA lifetime within 10% of GSA-EEC",
        diff <= 0.10 && in_budget,
        format!("GC {gc_l:.0} vs EEC {eec_l:.0} rounds, gap {:.1}%", diff * 100.0),
    ));

    let (_, gc_e, _) = stat(&data.main, 1500, GcGsa, Ff1);
    let (_, eec_e, _) = stat(&data.main, 1500, GsaEec, Ff1);
    let saving = 1.0 - gc_e / eec_e;
    out.push(verdict(
        "6b",
        "n=1500 GC-GSA energy at least 8% below GSA-EEC",
        saving >= 0.08 && in_budget,
        format!("GC {gc_e:.3e} vs EEC {eec_e:.3e} J/node/round, {:.1}% lower", saving * 100.0),
    ));

    let (gc_l, gc_e, _) = stat(&data.main, 2500, GcGsa, Ff1);
    let (eec_l, eec_e, _) = stat(&data.main, 2500, GsaEec, Ff1);
    let saving = 1.0 - gc_e / eec_e;
    let gain = gc_l / eec_l - 1.0;
    out.push(verdict(
        "6c",
        "n=2500 GC-GSA energy -15% and lifetime +15% vs GSA-EEC",
        saving >= 0.15 && gain >= 0.15 && in_budget,
        format!("energy {:.1}% lower, lifetime {:.1}% higher ({gc_l:.0} vs {eec_l:.0})", saving * 100.0, gain * 100.0),
    ));

    let (l1, e1, _) = stat(&data.main, 2500, GcGsa, Ff1);
    let (l2, e2, _) = stat(&data.ff2, 2500, GcGsa, Ff2);
    let saving = 1.0 - e2 / e1;
    let gain = l2 / l1 - 1.0;
    out.push(verdict(
        "6d",
        "n=2500 FF2 improves GC-GSA energy by 3% and lifetime by 1.5%",
        saving >= 0.03 && gain >= 0.015 && in_budget,
        format!("energy {:.2}% lower, lifetime {:.2}% higher ({l2:.0} vs {l1:.0})", saving * 100.0, gain * 100.0),
    ));

    let (_, gc_e, gc_c) = stat(&data.ff2, 2500, GcGsa, Ff2);
    let (_, wa_e, wa_c) = stat(&data.ff2, 2500, WaGsa, Ff2);
    let saving = 1.0 - gc_e / wa_e;
    out.push(verdict(
        "6e",
        "n=2500 GC-GSA energy 1.5% below WA-GSA with fewer clusters",
        saving >= 0.015 && gc_c < wa_c && in_budget,
        format!("energy {:.1}% lower, clusters {gc_c:.1} vs {wa_c:.1}; {budget}", saving * 100.0),
    ));
    out
}

fn scalability(reference_lifetime: f64) -> Verdict {
    let scenario = load_preset("iv-c-scale", None).expect("preset");
    let size = *scenario.sizes.iter().find(|s| s.n_sensors == 10_000).expect("10000-node size");
    let cfg = scenario
        .configs(size, 1)
        .into_iter()
        .find(|c| c.protocol.kind == ProtocolKind::GcGsa)
        .expect("GC run");
    let start = Instant::now();
    let result = run_simulation(&cfg);
    let elapsed = start.elapsed();
    match result {
        Ok(out) => verdict(
            "7",
            "n=10000 full lifetime run, lifetime below n=2500",
            elapsed < Duration::from_secs(600) && (out.lifetime_rounds as f64) < reference_lifetime,
            format!(
                "lifetime {} vs n=2500 mean {reference_lifetime:.0} in {elapsed:.0?}",
                out.lifetime_rounds
            ),
        ),
        Err(e) => verdict("7", "n=10000 full lifetime run, lifetime below n=2500", false, e.to_string()),
    }
}

fn determinism() -> Verdict {
    let scenario = load_preset("iv-a-500", None).expect("preset");
    let mut mismatches = Vec::new();
    for kind in [ProtocolKind::GcGsa, ProtocolKind::WaGsa, ProtocolKind::GsaEec] {
        let mut cfg = scenario.configs(scenario.sizes[0], 7).remove(0);
        cfg.protocol.kind = kind;
        cfg.max_rounds = 400;
        cfg.stop_at_first_death = false;
        let a = run_simulation(&cfg).expect("run").to_doc().to_json();
        let b = run_simulation(&cfg).expect("run").to_doc().to_json();
        if a != b {
            mismatches.push(kind.label());
        }
    }
    verdict(
        "8",
        "byte-identical summary JSON on repeat",
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "GC_GSA, WA_GSA, GSA_EEC repeat identically".into()
        } else {
            format!("differs for {}", mismatches.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let report = |v: &Verdict| {
        println!(
            "{} criterion {:<3} {}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.id,
            v.title,
            v.detail
        );
    };
    let mut verdicts = Vec::new();
    for check in [radio_exactness, gsa_sphere, oracle_equivalence, clustering_invariants, closed_form_lifetime] {
        let v = check();
        report(&v);
        verdicts.push(v);
    }
    let trends = trend_runs();
    for v in trend_criteria(&trends) {
        report(&v);
        verdicts.push(v);
    }
    let reference = stat(&trends.main, 2500, ProtocolKind::GcGsa, FitnessForm::Ff1).0;
    for v in [scalability(reference), determinism()] {
        report(&v);
        verdicts.push(v);
    }

    let failed: Vec<&str> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    println!(
        "acceptance: {}/{} criteria passed{}",
        verdicts.len() - failed.len(),
        verdicts.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" (failed: {})", failed.join(", "))
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
