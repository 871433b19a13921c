use proptest::prelude::*;
use rand::Rng;

use polythread::acp::{comm, proc_step, translate_use, Datum, Next, ProcAction, TlsEncoding};
use polythread::config::{
    parse_dist_config, parse_thread_vector, print_dist_config, print_thread_vector, DistConfig,
    ThreadVector,
};
use polythread::dist::{pci_d, DistEntry, LocSet};
use polythread::dsl::{parse_thread, print_thread};
use polythread::exec::{run_thread, Environment, Resolver};
use polythread::fragsearch::FsEntry;
use polythread::laws::{Gen, HashReplies, Kinds};
use polythread::local::{pci, std};
use polythread::program::{
    extract, parse_program, print_program, run_architecture, Architecture, Instr,
};
use polythread::service::{Reply, ServiceMap};
use polythread::term::{BasicAction, Focus, Method, Thread};

fn everything() -> Kinds {
    Kinds {
        switch: Some(4),
        external: true,
        pcs: true,
        choice: true,
        mig: vec![1, 2, 9],
        rec: true,
    }
}

fn basic() -> impl Strategy<Value = BasicAction> {
    (
        prop::sample::select(vec!["f", "g", "tls"]),
        prop::sample::select(vec!["a", "b", "init"]),
    )
        .prop_map(|(f, m)| BasicAction::new(Focus::new(f).unwrap(), Method::new(m).unwrap()))
}

fn instr() -> impl Strategy<Value = Instr> {
    prop_oneof![
        basic().prop_map(Instr::Plain),
        basic().prop_map(Instr::PosTest),
        basic().prop_map(Instr::NegTest),
        (0usize..8).prop_map(Instr::Jump),
        Just(Instr::Halt),
        (0usize..4).prop_map(Instr::Swo),
    ]
}

fn reply() -> impl Strategy<Value = Reply> {
    prop_oneof![
        Just(Reply::True),
        Just(Reply::False),
        Just(Reply::Blocked),
        (0u64..4).prop_map(Reply::Nat)
    ]
}

fn proc_action() -> impl Strategy<Value = ProcAction> {
    let focus = prop::sample::select(vec!["f", "g"]).prop_map(|f| Focus::new(f).unwrap());
    let method = prop::sample::select(vec!["a", "b"]).prop_map(|m| Method::new(m).unwrap());
    let datum = prop_oneof![
        method.clone().prop_map(Datum::Method),
        reply().prop_map(Datum::Reply)
    ];
    prop_oneof![
        (focus.clone(), datum.clone()).prop_map(|(f, d)| ProcAction::Snd(f, d)),
        (focus, datum).prop_map(|(f, d)| ProcAction::Rcv(f, d)),
        (1u64..3).prop_map(ProcAction::SndExt),
        (1u64..3).prop_map(ProcAction::RcvExt),
        Just(ProcAction::Stp),
        Just(ProcAction::StpBar),
        Just(ProcAction::StpStar),
        Just(ProcAction::I),
        reply().prop_map(ProcAction::SndServ),
        method.prop_map(ProcAction::RcvServ),
    ]
}

fn no_switch_over(t: &Thread) -> bool {
    !t.has_switch_over()
}

proptest! {
    #[test]
    fn thread_print_parse_round_trip(seed in any::<u64>()) {
        let t = Gen::new(seed).thread(6, &everything());
        let printed = print_thread(&t);
        let back = parse_thread(&printed).unwrap();
        prop_assert_eq!(print_thread(&back), printed);
        prop_assert!(back.equivalent(&t, 32));
    }

    #[test]
    fn program_print_parse_round_trip(p in prop::collection::vec(instr(), 1..12)) {
        prop_assert_eq!(parse_program(&print_program(&p)).unwrap(), p);
    }

    #[test]
    fn config_round_trips(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let v = ThreadVector {
            threads: g.vector(0, 3, 4, &everything()),
            fragments: g.vector(0, 3, 3, &everything()),
        };
        let back = parse_thread_vector(&print_thread_vector(&v)).unwrap();
        prop_assert_eq!(print_thread_vector(&back), print_thread_vector(&v));

        let alpha = g.vector(0, 3, 3, &everything());
        let n = alpha.len();
        let locations: LocSet = g.locations().into_iter().collect();
        let vector = locations
            .iter()
            .map(|&l| FsEntry::new(l, g.vector(0, 2, 3, &everything()), g.frag_set(n)))
            .collect();
        let c = DistConfig { locations, vector, alpha };
        let printed = print_dist_config(&c);
        prop_assert_eq!(print_dist_config(&parse_dist_config(&printed).unwrap()), printed);
    }

    #[test]
    fn comm_is_commutative(a in proc_action(), b in proc_action()) {
        prop_assert_eq!(comm(&a, &b), comm(&b, &a));
    }

    #[test]
    fn std_is_idempotent_and_never_terminates(seed in any::<u64>()) {
        let t = Gen::new(seed).thread(6, &everything());
        let once = std(&t);
        prop_assert!(std(&once).equivalent(&once, 32));
        let mut stops = false;
        once.visit(&mut |x| stops |= *x == Thread::Stop);
        prop_assert!(!stops);
    }

    #[test]
    fn extraction_is_total(p in prop::collection::vec(instr(), 1..12)) {
        let t = extract(&p);
        let printed = print_thread(&t);
        prop_assert!(parse_thread(&printed).is_ok());
        if let Some(Instr::Swo(i)) = p.first() {
            prop_assert_eq!(t, Thread::Switch(*i));
        }
    }

    #[test]
    fn architecture_without_switch_overs_runs_the_program(
        p in prop::collection::vec(instr(), 1..10),
        frags in prop::collection::vec(prop::collection::vec(instr(), 1..4), 0..3),
        seed in any::<u64>(),
    ) {
        let program = extract(&p);
        prop_assume!(no_switch_over(&program));
        let arch = Architecture { program: p, fragments: frags, services: ServiceMap::new() };
        let composed = run_architecture(&arch, Some(Box::new(HashReplies::new(seed))), &mut Resolver::scripted([]), 50).unwrap();
        let mut env = arch.environment().with_fallback(Box::new(HashReplies::new(seed)));
        let alone = run_thread(&program, &mut env, &mut Resolver::scripted([]), 50).unwrap();
        prop_assert!(composed.same_behaviour(&alone));
    }

    #[test]
    fn single_location_collapses_to_local(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let n = g.rng.gen_range(0..=3);
        let kinds = Kinds { switch: Some(n + 1), external: true, rec: true, ..Kinds::default() };
        let alpha = (0..n).map(|_| g.thread(3, &kinds)).collect::<Vec<_>>();
        let beta = g.vector(0, 4, 4, &kinds);
        let choices = g.choices(n);
        let local = pci(&beta, &alpha, &mut HashReplies::new(seed), &mut Resolver::scripted(choices.clone()), 80).unwrap();
        let locs: LocSet = [3].into_iter().collect();
        let dist = pci_d(&[DistEntry::new(3, beta)], &alpha, &locs, &mut HashReplies::new(seed), &mut Resolver::scripted(choices), 80).unwrap();
        prop_assert_eq!(dist.outcome, local.outcome);
        prop_assert!(dist.steps.iter().all(|s| s.location == Some(3)));
        let strip = |t: &polythread::exec::Trace| t.steps.iter().map(|s| (s.action.clone(), s.reply)).collect::<Vec<_>>();
        prop_assert_eq!(strip(&dist), strip(&local));
    }

    #[test]
    fn use_composition_hides_the_focus(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let t = g.thread(4, &Kinds::default());
        let f = g.focus();
        let h = g.service();
        let p = translate_use(&t, &f, &h, &[], TlsEncoding::Literal).unwrap().compose();
        let mut frontier = vec![p];
        let mut seen = 0;
        while let Some(q) = frontier.pop() {
            seen += 1;
            prop_assume!(seen < 2000);
            for (a, next) in proc_step(&q).unwrap() {
                let bare = matches!(&a, ProcAction::Snd(g, _) | ProcAction::Rcv(g, _) if g == &f);
                prop_assert!(!bare, "{} offered", a);
                if let Next::Term(r) = next {
                    frontier.push(r);
                }
            }
        }
    }
}

#[test]
fn environment_defaults_to_true_tls() {
    let arch = Architecture {
        program: parse_program("swo 1").unwrap(),
        fragments: vec![parse_program("!").unwrap()],
        services: ServiceMap::new(),
    };
    let mut env: Environment = arch.environment();
    assert!(env.service(&Focus::tls()).is_some());
    let t = run_thread(&Thread::Stop, &mut env, &mut Resolver::scripted([]), 1).unwrap();
    assert!(t.steps.is_empty());
}
