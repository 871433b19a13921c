//! The acceptance gate: eight criteria, one line each.
//!
//! Runs without the libtest harness so that the report is always printed.
//! Set `POLYTHREAD_BLESS=1` to rewrite the golden traces.

use std::collections::{BTreeSet, VecDeque};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use polythread::acp::{
    trace_match, translate_thread, translate_use, use_match, Datum, MatchOptions, ProcAction,
    ProcTerm, Renaming, TlsEncoding,
};
use polythread::config::parse_dist_config;
use polythread::dist::{app, DistEntry, DistMachine, Loc, LocSet};
use polythread::exec::{Environment, RandomReplies, Resolver, Trace};
use polythread::fragsearch::{appfs, iml, iml_prime, pci_fs, pv, FragSet, FsEntry};
use polythread::laws::{run_all, Gen, HashReplies, Kinds};
use polythread::local::{Event, LocalMachine};
use polythread::poly::{
    binary_selector, internalize, internalize_binary, spt, spt_term, switch_replies,
};
use polythread::program::{parse_program, run_architecture, Architecture};
use polythread::service::{parse_services, Reply, Service, ServiceMap};
use polythread::term::{Action, Focus, Thread};

const SEED: u64 = 20_261_016;

type Verdict = Result<String, String>;

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("axiom suites", axiom_suites),
        ("function-definition oracles", function_oracles),
        ("fairness", fairness),
        ("properness preservation", properness),
        ("internalization", internalization),
        ("binary selection bound", binary_bound),
        ("translation shadow", translation_shadow),
        ("golden traces", golden_traces),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let verdict = check();
        let took = started.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}; {took:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}; {took:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {}/8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1

fn axiom_suites() -> Verdict {
    let started = Instant::now();
    let reports = run_all(100, SEED);
    let took = started.elapsed();
    let mut axioms = 0;
    for report in &reports {
        for r in &report.results {
            axioms += 1;
            ensure(r.ok(), || r.to_string())?;
        }
    }
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!("{axioms} axioms x 100 cases"))
}

// 2: literal transcriptions of the defining equations, by structural
// recursion over the vector.

fn app_oracle(l: Loc, x: &Thread, delta: &[DistEntry]) -> Vec<DistEntry> {
    match delta.split_first() {
        None => vec![],
        Some((e, rest)) if e.location == l => {
            let mut gamma = e.threads.clone();
            gamma.push(x.clone());
            let mut out = vec![DistEntry::new(l, gamma)];
            out.extend_from_slice(rest);
            out
        }
        Some((e, rest)) => {
            let mut out = vec![e.clone()];
            out.extend(app_oracle(l, x, rest));
            out
        }
    }
}

fn appfs_oracle(l: Loc, x: &Thread, delta: &[FsEntry]) -> Vec<FsEntry> {
    match delta.split_first() {
        None => vec![],
        Some((e, rest)) if e.location == l => {
            let mut gamma = e.threads.clone();
            gamma.push(x.clone());
            let mut out = vec![FsEntry::new(l, gamma, e.fragments.clone())];
            out.extend_from_slice(rest);
            out
        }
        Some((e, rest)) => {
            let mut out = vec![e.clone()];
            out.extend(appfs_oracle(l, x, rest));
            out
        }
    }
}

fn iml_prime_oracle(i: usize, delta: &[FsEntry], fallback: Loc) -> Loc {
    match delta.split_first() {
        None => fallback,
        Some((e, _)) if e.fragments.contains(&i) => e.location,
        Some((_, rest)) => iml_prime_oracle(i, rest, fallback),
    }
}

fn iml_head(x: &Thread, l: Loc, fragments: &FragSet, rest: &[FsEntry]) -> Loc {
    match x {
        Thread::Switch(i) if !fragments.contains(i) => iml_prime_oracle(*i, rest, l),
        Thread::Rec(_) => iml_head(&x.unfold().expect("closed"), l, fragments, rest),
        _ => l,
    }
}

fn iml_oracle(delta: &[FsEntry]) -> Loc {
    let (e, rest) = delta.split_first().expect("non-empty");
    match e.threads.first() {
        None => e.location,
        Some(x) => iml_head(x, e.location, &e.fragments, rest),
    }
}

fn pv_oracle(delta: &[FsEntry]) -> Vec<FsEntry> {
    match delta.split_first() {
        None => vec![],
        Some((e, _)) if e.threads.is_empty() => delta.to_vec(),
        Some((e, rest)) => {
            let target = iml_oracle(delta);
            let mut rotated = rest.to_vec();
            rotated.push(FsEntry::new(
                e.location,
                e.threads[1..].to_vec(),
                e.fragments.clone(),
            ));
            appfs_oracle(target, &e.threads[0], &rotated)
        }
    }
}

fn oracle_kinds() -> Kinds {
    Kinds {
        switch: Some(5),
        external: true,
        pcs: true,
        choice: true,
        mig: vec![1, 2, 3, 4, 9],
        rec: true,
    }
}

/// Up to four entries over locations 1..=4 (duplicates allowed), up to
/// three threads each, fragment indices in 1..=4.
fn fs_vector(g: &mut Gen) -> Vec<FsEntry> {
    let n = g.rng.gen_range(0..=4);
    (0..n)
        .map(|_| {
            let l = g.rng.gen_range(1..=4);
            let threads = g.vector(0, 3, 3, &oracle_kinds());
            let frags = (1..=4).filter(|_| g.rng.gen_bool(0.4)).collect();
            FsEntry::new(l, threads, frags)
        })
        .collect()
}

fn function_oracles() -> Verdict {
    for case in 0..1000u64 {
        let mut g = Gen::new(SEED ^ case);
        let delta = fs_vector(&mut g);
        let plain: Vec<DistEntry> = delta
            .iter()
            .map(|e| DistEntry::new(e.location, e.threads.clone()))
            .collect();
        let l = g.rng.gen_range(1..=5);
        let x = g.thread(3, &oracle_kinds());
        let i = g.rng.gen_range(0..=5);
        let fallback = g.rng.gen_range(1..=9);
        ensure(
            app(l, x.clone(), &plain) == app_oracle(l, &x, &plain),
            || format!("app, case {case}"),
        )?;
        ensure(
            appfs(l, x.clone(), &delta) == appfs_oracle(l, &x, &delta),
            || format!("appfs, case {case}"),
        )?;
        ensure(
            iml_prime(i, &delta, fallback) == iml_prime_oracle(i, &delta, fallback),
            || format!("iml', case {case}"),
        )?;
        if !delta.is_empty() {
            ensure(iml(&delta) == iml_oracle(&delta), || {
                format!("iml, case {case}")
            })?;
        }
        ensure(pv(&delta) == pv_oracle(&delta), || {
            format!("pv, case {case}")
        })?;
    }
    Ok("app, appfs, iml', iml, pv on 1000 vectors".into())
}

// 3

fn fairness() -> Verdict {
    let kinds = Kinds {
        pcs: true,
        rec: true,
        ..Kinds::default()
    };
    let mut turns = 0;
    for case in 0..200u64 {
        let mut g = Gen::new(SEED + case);
        let beta = g.vector(1, 5, 5, &kinds);
        let mut machine = LocalMachine::new(&beta, &[]);
        let mut expected: VecDeque<usize> = (0..beta.len()).collect();
        let mut replies = HashReplies::new(case);
        let mut resolver = Resolver::scripted([]);
        for _ in 0..500 {
            let event = machine
                .step(&mut replies, &mut resolver, true)
                .map_err(|e| format!("case {case}: {e}"))?;
            match event {
                Event::Turn { tag, .. } => {
                    ensure(expected.front() == Some(&tag), || {
                        format!("case {case}: turn for {tag}, expected {expected:?}")
                    })?;
                    expected.rotate_left(1);
                    turns += 1;
                }
                Event::Removed { tag, .. } => {
                    ensure(expected.pop_front() == Some(tag), || {
                        format!("case {case}: removal of {tag} out of turn")
                    })?;
                }
                Event::Chose { .. } => return Err(format!("case {case}: choice without Extern")),
                Event::Finished(_) => {
                    ensure(expected.is_empty(), || {
                        format!("case {case}: finished with {expected:?} waiting")
                    })?;
                    break;
                }
            }
        }
    }
    Ok(format!("200 vectors, {turns} turns in order"))
}

// 4

fn proper_vector(g: &mut Gen, kinds: &Kinds, locs: &[Loc]) -> Vec<(Loc, Vec<Thread>)> {
    let mut order = locs.to_vec();
    order.shuffle(&mut g.rng);
    order
        .into_iter()
        .map(|l| (l, g.vector(0, 3, 4, kinds)))
        .collect()
}

fn properness() -> Verdict {
    let mut steps = 0;
    for case in 0..200u64 {
        let mut g = Gen::new(SEED.wrapping_mul(3) + case);
        let locs: Vec<Loc> = g.locations();
        let set: LocSet = locs.iter().copied().collect();
        let n = g.rng.gen_range(0..=3);
        let kinds = Kinds {
            switch: Some(n + 1),
            external: true,
            mig: locs.iter().copied().chain([9]).collect(),
            rec: true,
            ..Kinds::default()
        };
        let alpha: Vec<Thread> = (0..n).map(|_| g.thread(3, &kinds)).collect();
        let entries = proper_vector(&mut g, &kinds, &locs);
        let machine = if case % 2 == 0 {
            let delta: Vec<DistEntry> = entries
                .into_iter()
                .map(|(l, ts)| DistEntry::new(l, ts))
                .collect();
            DistMachine::plain(&delta, &alpha, &set)
        } else {
            let delta: Vec<FsEntry> = entries
                .into_iter()
                .map(|(l, ts)| FsEntry::new(l, ts, g.frag_set(n)))
                .collect();
            DistMachine::fragment_search(&delta, &alpha, &set)
        };
        let mut machine = machine;
        let mut replies = HashReplies::new(case);
        let mut resolver = Resolver::scripted(g.choices(n));
        for _ in 0..500 {
            let event = machine
                .step(&mut replies, &mut resolver, true)
                .map_err(|e| format!("case {case}: {e}"))?;
            steps += 1;
            let seen: Vec<Loc> = machine.snapshot().iter().map(|e| e.location).collect();
            let distinct: BTreeSet<Loc> = seen.iter().copied().collect();
            ensure(seen.len() == set.len() && distinct == set, || {
                format!("case {case}: improper vector with locations {seen:?}")
            })?;
            if matches!(event, Event::Finished(_)) {
                break;
            }
        }
    }
    Ok(format!("200 vectors, {steps} steps"))
}

// 5

fn tls_env(extra: ServiceMap, seed: u64) -> Environment {
    let mut services = extra;
    services.insert(Focus::tls(), Service::constant(Reply::True));
    Environment::new(services).with_fallback(Box::new(HashReplies::new(seed)))
}

fn visible(t: &Trace) -> Vec<(Action, Option<Reply>)> {
    t.visible()
        .iter()
        .map(|s| (s.action.clone(), s.reply))
        .collect()
}

fn internalization() -> Verdict {
    const BUDGET: usize = 150;
    let mut cut = 0;
    for case in 0..100u64 {
        let mut g = Gen::new(SEED.wrapping_mul(5) + case);
        let k = g.rng.gen_range(1..=4);
        let kinds = Kinds {
            switch: Some(k + 1),
            external: true,
            pcs: true,
            rec: true,
            ..Kinds::default()
        };
        let p = g.thread(6, &kinds);
        let ps: Vec<Thread> = (0..k).map(|_| g.thread(4, &kinds)).collect();
        let sigma = g.choices(k);

        let original = spt(
            &p,
            &ps,
            &mut tls_env(ServiceMap::new(), case),
            &mut Resolver::scripted(sigma.iter().copied()),
            BUDGET,
        )
        .map_err(|e| format!("case {case}: {e}"))?;

        let (q, qs) = internalize(&p, &ps).map_err(|e| e.to_string())?;
        let ext: ServiceMap = [(Focus::ext(), Service::scripted(switch_replies(&sigma)))]
            .into_iter()
            .collect();
        let internal = spt(
            &q,
            &qs,
            &mut tls_env(ext, case),
            &mut Resolver::scripted([]),
            3 * BUDGET + 3,
        )
        .map_err(|e| format!("case {case}: internalized: {e}"))?;

        let (a, b) = (visible(&original), visible(&internal));
        if original.outcome == polythread::exec::Outcome::Cut {
            cut += 1;
            let n = a.len().min(b.len());
            ensure(a[..n] == b[..n], || format!("case {case}: traces diverge"))?;
        } else {
            ensure(a == b && original.outcome == internal.outcome, || {
                format!(
                    "case {case}: {:?}/{} vs {:?}/{}",
                    a, original.outcome, b, internal.outcome
                )
            })?;
        }
    }
    Ok(format!("100 instances, {cut} compared as prefixes"))
}

// 6

/// Number of selection actions on the way to each fragment.
fn selector_paths(t: &Thread, depth: usize, out: &mut Vec<(usize, usize)>) -> Result<(), String> {
    match t {
        Thread::Switch(i) => out.push((*i, depth)),
        Thread::Pcc(Action::Basic(b), x, y) if b.focus == Focus::ext() => {
            selector_paths(x, depth + 1, out)?;
            selector_paths(y, depth + 1, out)?;
        }
        other => return Err(format!("unexpected selector node {other}")),
    }
    Ok(())
}

fn binary_bound() -> Verdict {
    for k in 1..=64usize {
        let ps = vec![Thread::Stop; k];
        let (_, qs) = internalize_binary(&Thread::Extern, &ps).map_err(|e| e.to_string())?;
        let selector = qs.last().expect("selector appended");
        ensure(*selector == binary_selector(1, k), || {
            format!("k = {k}: selector mismatch")
        })?;
        let mut paths = Vec::new();
        selector_paths(selector, 0, &mut paths)?;
        let lo = (k as f64).log2().floor() as usize;
        let hi = (k as f64).log2().ceil() as usize;
        let targets: Vec<usize> = paths.iter().map(|(i, _)| *i).collect();
        ensure(targets == (1..=k).collect::<Vec<_>>(), || {
            format!("k = {k}: reaches {targets:?}")
        })?;
        for (i, d) in paths {
            ensure((lo..=hi).contains(&d), || {
                format!("k = {k}: fragment {i} after {d} actions")
            })?;
        }
    }
    Ok("k in 1..=64".into())
}

// 7

fn swap_branches(t: &Thread, f: &Focus) -> Thread {
    t.map_bottom_up(&|t| match t {
        Thread::Pcc(Action::Basic(b), x, y) if &b.focus == f => Thread::Pcc(Action::Basic(b), y, x),
        other => other,
    })
}

fn first_focus(t: &Thread) -> Option<Focus> {
    t.actions()
        .into_iter()
        .find_map(|a| a.as_basic().map(|b| b.focus.clone()))
}

fn rcv(f: &Focus, r: Reply) -> ProcAction {
    ProcAction::Rcv(f.clone(), Datum::Reply(r))
}

fn translation_shadow() -> Verdict {
    let opts = MatchOptions::default();
    let mut swap_controls = 0;
    for case in 0..100u64 {
        let mut g = Gen::new(SEED.wrapping_mul(7) + case);
        let n = g.rng.gen_range(0..=3);
        let kinds = Kinds {
            switch: Some(n + 1),
            pcs: true,
            ..Kinds::default()
        };
        let alpha: Vec<Thread> = (0..n).map(|_| g.thread(3, &kinds)).collect();
        let t = g.thread(5, &kinds);
        let p = translate_thread(&t, &alpha, TlsEncoding::Literal).map_err(|e| e.to_string())?;
        ensure(
            trace_match(&t, &alpha, &p, opts).map_err(|e| e.to_string())?,
            || format!("case {case}: {t} does not match its translation"),
        )?;
        if let Some(f) = first_focus(&t) {
            let meaning = |x: &Thread| spt_term(x, &alpha).map_err(|e| e.to_string());
            if !meaning(&swap_branches(&t, &f))?.equivalent(&meaning(&t)?, 32) {
                swap_controls += 1;
                let swapped = ProcTerm::rename(
                    Renaming::Swap(rcv(&f, Reply::True), rcv(&f, Reply::False)),
                    p,
                );
                ensure(
                    !trace_match(&t, &alpha, &swapped, opts).map_err(|e| e.to_string())?,
                    || format!("case {case}: swapped translation of {t} still matches"),
                )?;
            }
        }
    }

    let mut drop_controls = 0;
    for case in 0..50u64 {
        let mut g = Gen::new(SEED.wrapping_mul(11) + case);
        let t = g.thread(5, &Kinds::default());
        let f = first_focus(&t).unwrap_or_else(|| g.focus());
        let h = g.service();
        let parts =
            translate_use(&t, &f, &h, &[], TlsEncoding::Literal).map_err(|e| e.to_string())?;
        ensure(
            use_match(&t, &f, &h, &parts.compose(), opts).map_err(|e| e.to_string())?,
            || format!("use case {case}: {t} /{f} {h:?}"),
        )?;
        if t.actions()
            .iter()
            .any(|a| a.as_basic().is_some_and(|b| b.focus == f))
        {
            drop_controls += 1;
            let loose = parts.compose_unencapsulated();
            ensure(
                !use_match(&t, &f, &h, &loose, opts).map_err(|e| e.to_string())?,
                || format!("use case {case}: composition without encapsulation still matches"),
            )?;
        }
    }
    ensure(swap_controls > 0 && drop_controls > 0, || {
        "no mutation controls exercised".into()
    })?;
    Ok(format!(
        "100 threads, 50 uses; {swap_controls} swap and {drop_controls} dropped-encapsulation controls rejected"
    ))
}

// 8

fn fixture(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join(path)
}

fn read(path: &str) -> Result<String, String> {
    std::fs::read_to_string(fixture(path)).map_err(|e| format!("{path}: {e}"))
}

fn architecture(dir: &str, fragments: &[&str]) -> Result<Architecture, String> {
    let program =
        parse_program(&read(&format!("fixtures/{dir}/program.is"))?).map_err(|e| e.to_string())?;
    let fragments = fragments
        .iter()
        .map(|f| parse_program(&read(&format!("fixtures/{dir}/{f}"))?).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let services = parse_services(&read(&format!("fixtures/{dir}/services.json"))?)
        .map_err(|e| e.to_string())?;
    Ok(Architecture {
        program,
        fragments,
        services,
    })
}

fn run_fixture(name: &str) -> Result<String, String> {
    let trace = match name {
        "single" | "roundtrip" => {
            let arch = if name == "single" {
                architecture("single", &[])?
            } else {
                architecture("roundtrip", &["frag1.is", "frag2.is"])?
            };
            run_architecture(
                &arch,
                Some(Box::new(RandomReplies::new(42))),
                &mut Resolver::seeded(42),
                200,
            )
        }
        _ => {
            let config = parse_dist_config(&read("fixtures/fragsearch/dist.json")?)
                .map_err(|e| e.to_string())?;
            pci_fs(
                &config.vector,
                &config.alpha,
                &config.locations,
                &mut RandomReplies::new(7),
                &mut Resolver::seeded(7),
                200,
            )
        }
    }
    .map_err(|e| format!("{name}: {e}"))?;
    Ok(serde_json::to_string_pretty(&trace.to_json()).expect("serializable") + "\n")
}

fn golden_traces() -> Verdict {
    let bless = std::env::var_os("POLYTHREAD_BLESS").is_some();
    for name in ["single", "roundtrip", "fragsearch"] {
        let first = run_fixture(name)?;
        let second = run_fixture(name)?;
        ensure(first == second, || format!("{name}: runs differ"))?;
        let path = fixture(&format!("golden/{name}.json"));
        if bless {
            std::fs::write(&path, &first).map_err(|e| e.to_string())?;
        }
        let golden = std::fs::read_to_string(&path).map_err(|e| format!("{name}: {e}"))?;
        ensure(golden == first, || {
            format!("{name}: differs from the golden trace")
        })?;
    }
    Ok("3 fixtures byte-identical across runs and with the golden files".into())
}
