use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use dynakernel::corpus::{self, COLOR, GREEN, RED};
use dynakernel::mobility::TARGET_KEY;
use dynakernel::session::{ReplayState, Session};
use dynakernel::{
    to_tikz, Behavior, BehaviorFactory, Command, Destination, Envelope, Event, HookResult, Link,
    LinkMode, NodeContext, NodeId, NodeModel, Payload, Point, PropertyValue, RandomWaypoint,
    Simulation, SimulationConfig, TikzOptions, Topology, TopologyListener, DEFAULT_MODEL,
};
use proptest::prelude::*;

fn sim(seed: u64) -> Simulation {
    Simulation::new(SimulationConfig {
        seed,
        ..SimulationConfig::default()
    })
}

#[derive(Debug, Clone)]
enum Op {
    Add(f64, f64, u8),
    Remove(u32),
    Move(u32, f64, f64),
    Range(u32, f64),
    Radio(u32, bool),
    Wire(u32, u32),
    Unwire(u32, u32),
}

fn op() -> impl Strategy<Value = Op> {
    let coord = (0.0..800.0f64, 0.0..600.0f64);
    prop_oneof![
        4 => (coord.clone(), 0..3u8).prop_map(|((x, y), m)| Op::Add(x, y, m)),
        1 => (0..24u32).prop_map(Op::Remove),
        4 => (0..24u32, coord).prop_map(|(i, (x, y))| Op::Move(i, x, y)),
        1 => (0..24u32, 0.0..250.0f64).prop_map(|(i, r)| Op::Range(i, r)),
        1 => (0..24u32, any::<bool>()).prop_map(|(i, on)| Op::Radio(i, on)),
        1 => (0..24u32, 0..24u32).prop_map(|(a, b)| Op::Wire(a, b)),
        1 => (0..24u32, 0..24u32).prop_map(|(a, b)| Op::Unwire(a, b)),
    ]
}

fn with_models(mut s: Simulation) -> Simulation {
    s.set_model("short", NodeModel::default().comm_range(60.0))
        .unwrap();
    s.set_model("deaf", NodeModel::default().wireless(false))
        .unwrap();
    s
}

const MODELS: [&str; 3] = [DEFAULT_MODEL, "short", "deaf"];

fn apply(s: &mut Simulation, op: &Op) {
    // invalid operations are expected and must leave the closure intact
    let _ = match *op {
        Op::Add(x, y, m) => s.add_node(Point::new(x, y), MODELS[m as usize]).map(drop),
        Op::Remove(i) => s.remove_node(NodeId(i)),
        Op::Move(i, x, y) => s.move_to(NodeId(i), Point::new(x, y)),
        Op::Range(i, r) => s.set_comm_range(NodeId(i), r),
        Op::Radio(i, on) => s.set_wireless_enabled(NodeId(i), on),
        Op::Wire(a, b) => s.add_wired_link(NodeId(a), NodeId(b)),
        Op::Unwire(a, b) => s.remove_wired_link(NodeId(a), NodeId(b)),
    };
}

/// The wireless links the disk predicate demands, computed from scratch.
fn wireless_oracle(t: &Topology) -> BTreeSet<(NodeId, NodeId)> {
    let nodes: Vec<_> = t.nodes().collect();
    let mut out = BTreeSet::new();
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            let (dx, dy) = (
                a.position().x - b.position().x,
                a.position().y - b.position().y,
            );
            let range = a.comm_range().min(b.comm_range());
            if a.wireless_enabled() && b.wireless_enabled() && (dx * dx + dy * dy).sqrt() <= range {
                out.insert((a.id(), b.id()));
            }
        }
    }
    out
}

fn links_of(t: &Topology, mode: LinkMode) -> BTreeSet<(NodeId, NodeId)> {
    t.links()
        .filter(|l| l.mode() == mode)
        .map(|l| (l.a(), l.b()))
        .collect()
}

type LinkLog = Arc<Mutex<Vec<(NodeId, bool, Link)>>>;

/// Records every link notification it receives as a node behavior.
struct LinkSpy(LinkLog);

impl Behavior for LinkSpy {
    fn on_attach(&mut self, ctx: &mut NodeContext<'_>) -> HookResult {
        ctx.subscribe_node_events()
    }

    fn on_link_added(&mut self, ctx: &mut NodeContext<'_>, link: &Link) -> HookResult {
        self.0.lock().unwrap().push((ctx.id(), true, *link));
        Ok(())
    }

    fn on_link_removed(&mut self, ctx: &mut NodeContext<'_>, link: &Link) -> HookResult {
        self.0.lock().unwrap().push((ctx.id(), false, *link));
        Ok(())
    }
}

struct TopologySpy(LinkLog);

impl TopologyListener for TopologySpy {
    fn on_link_added(&mut self, _sim: &mut Simulation, link: &Link) -> HookResult {
        self.0.lock().unwrap().push((NodeId(u32::MAX), true, *link));
        Ok(())
    }

    fn on_link_removed(&mut self, _sim: &mut Simulation, link: &Link) -> HookResult {
        self.0
            .lock()
            .unwrap()
            .push((NodeId(u32::MAX), false, *link));
        Ok(())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wireless_closure_holds_after_every_operation(ops in prop::collection::vec(op(), 1..120)) {
        let mut s = with_models(sim(0));
        let mut wired = BTreeSet::new();
        for op in &ops {
            apply(&mut s, op);
            let t = s.topology();
            prop_assert_eq!(links_of(t, LinkMode::Wireless), wireless_oracle(t), "after {:?}", op);
            match *op {
                Op::Wire(a, b) if a != b && t.contains(NodeId(a)) && t.contains(NodeId(b)) => {
                    wired.insert((NodeId(a.min(b)), NodeId(a.max(b))));
                }
                Op::Unwire(a, b) => {
                    wired.remove(&(NodeId(a.min(b)), NodeId(a.max(b))));
                }
                Op::Remove(i) => wired.retain(|&(a, b)| a != NodeId(i) && b != NodeId(i)),
                _ => {}
            }
            prop_assert_eq!(&links_of(t, LinkMode::Wired), &wired);
            for id in t.node_ids() {
                let expected: BTreeSet<_> = t.links().filter_map(|l| l.other(id)).collect();
                prop_assert_eq!(t.neighbors(id).unwrap(), expected);
            }
        }
    }

    #[test]
    fn link_events_are_conserved(ops in prop::collection::vec(op(), 1..120)) {
        let mut s = with_models(sim(0));
        let mut count: BTreeMap<Link, i64> = BTreeMap::new();
        for op in &ops {
            apply(&mut s, op);
            for ev in s.drain_events() {
                match ev.event {
                    Event::LinkAdded(l) => *count.entry(l).or_default() += 1,
                    Event::LinkRemoved(l) => *count.entry(l).or_default() -= 1,
                    _ => {}
                }
            }
            prop_assert!(count.values().all(|&c| c == 0 || c == 1));
            let live: BTreeSet<Link> = count.iter().filter(|(_, &c)| c == 1).map(|(l, _)| *l).collect();
            let current: BTreeSet<Link> = s.topology().links().copied().collect();
            prop_assert_eq!(live, current);
        }
    }

    #[test]
    fn link_notifications_reach_each_party_once(ops in prop::collection::vec(op(), 1..80)) {
        let log: LinkLog = Arc::default();
        let mut s = sim(0);
        let spy_log = log.clone();
        let spy = BehaviorFactory::new("spy", move || Box::new(LinkSpy(spy_log.clone())) as Box<dyn Behavior>);
        s.set_model(DEFAULT_MODEL, NodeModel::with_behavior(spy.clone())).unwrap();
        s.set_model("short", NodeModel::with_behavior(spy.clone()).comm_range(60.0)).unwrap();
        s.set_model("deaf", NodeModel::with_behavior(spy).wireless(false)).unwrap();
        s.add_topology_listener(Box::new(TopologySpy(log.clone())));
        let observer = NodeId(u32::MAX);
        for op in &ops {
            apply(&mut s, op);
            let events = s.drain_events();
            let notes = std::mem::take(&mut *log.lock().unwrap());
            let mut expected = Vec::new();
            for ev in events {
                let (added, link) = match ev.event {
                    Event::LinkAdded(l) => (true, l),
                    Event::LinkRemoved(l) => (false, l),
                    _ => continue,
                };
                expected.push((link.a(), added, link));
                expected.push((link.b(), added, link));
                expected.push((observer, added, link));
            }
            // dispatch order: lower endpoint, higher endpoint, then topology listeners
            prop_assert_eq!(notes, expected, "after {:?}", op);
        }
    }

    #[test]
    fn clock_fires_on_period_multiples(regs in prop::collection::vec((0..40u64, 1..15u64), 1..12)) {
        let fired: FireLog = Arc::default();
        let mut s = sim(0);
        let mut regs = regs;
        regs.sort_by_key(|&(r, _)| r);
        for (i, &(_, p)) in regs.iter().enumerate() {
            let log = fired.clone();
            let f = BehaviorFactory::new("ticker", move || Box::new(Ticker { period: p, log: log.clone() }) as Box<dyn Behavior>);
            s.set_model(&format!("m{i}"), NodeModel::with_behavior(f).wireless(false)).unwrap();
        }
        for t in 0..100u64 {
            for (i, _) in regs.iter().enumerate().filter(|(_, &(r, _))| r == t) {
                s.enqueue(None, Command::AddNode { position: Point::ORIGIN, model: format!("m{i}") });
            }
            s.tick();
        }
        let fired = fired.lock().unwrap();
        for (i, &(r, p)) in regs.iter().enumerate() {
            let want: Vec<u64> = (r..100).filter(|t| (t - r) % p == 0).collect();
            let got: Vec<u64> = fired.iter().filter(|(id, _)| *id == NodeId(i as u32)).map(|&(_, t)| t).collect();
            prop_assert_eq!(got, want, "listener {} registered at {} with period {}", i, r, p);
        }
    }

    #[test]
    fn messages_take_one_tick_and_follow_links(
        start in prop::collection::vec((0.0..300.0f64, 0.0..300.0f64), 2..8),
        moves in prop::collection::vec((0..8u32, 0.0..300.0f64, 0.0..300.0f64), 0..30),
    ) {
        let log: MessageLog = Arc::default();
        let mut s = sim(0);
        let l = log.clone();
        let f = BehaviorFactory::new("chatter", move || Box::new(Chatter(l.clone())) as Box<dyn Behavior>);
        s.set_model(DEFAULT_MODEL, NodeModel::with_behavior(f)).unwrap();
        for &(x, y) in &start {
            s.add_node(Point::new(x, y), DEFAULT_MODEL).unwrap();
        }
        let n = start.len() as u32;
        for t in 0..30u64 {
            if let Some(&(i, x, y)) = moves.get(t as usize) {
                s.enqueue(None, Command::MoveNode { id: NodeId(i % n), position: Point::new(x, y) });
            }
            s.tick();
            for r in log.lock().unwrap().drain(..) {
                prop_assert_eq!(r.now, r.sent_at + 1);
                prop_assert_eq!(r.now, t);
                prop_assert!(r.linked, "{} heard {} without a link", r.receiver, r.sender);
            }
            // everything older than this tick has been delivered or dropped
            prop_assert!(s.mailroom().iter().all(|e| e.sent_at == t));
            prop_assert_eq!(s.mailroom().pending(), start.len());
        }
    }

    #[test]
    fn waypoint_steps_are_exact(seed in any::<u64>(), x in -50.0..450.0f64, y in -50.0..350.0f64) {
        let mut s = sim(seed);
        let id = s.add_node(Point::new(x, y), DEFAULT_MODEL).unwrap();
        s.waypoint_init(id).unwrap();
        let mut prev = Point::new(x, y);
        for _ in 0..300 {
            s.waypoint_move(id).unwrap();
            let p = s.topology().node(id).unwrap().position();
            prop_assert!((prev.distance(&p) - 5.0).abs() <= 1e-9);
            let target = s.property(id, TARGET_KEY).unwrap().and_then(PropertyValue::as_point).unwrap();
            prop_assert!((0.0..400.0).contains(&target.x) && (0.0..300.0).contains(&target.y));
            prev = p;
        }
    }

    #[test]
    fn direction_is_idempotent(x in -1e3..1e3f64, y in -1e3..1e3f64, tx in -1e3..1e3f64, ty in -1e3..1e3f64) {
        let mut s = sim(0);
        let id = s.add_node(Point::new(x, y), DEFAULT_MODEL).unwrap();
        prop_assume!(Point::new(x, y) != Point::new(tx, ty));
        s.set_direction(id, Point::new(tx, ty)).unwrap();
        let d = s.topology().node(id).unwrap().direction();
        s.set_direction(id, Point::new(tx, ty)).unwrap();
        prop_assert_eq!(s.topology().node(id).unwrap().direction().to_bits(), d.to_bits());
    }

    #[test]
    fn quiescent_colors_match_degree(
        seed in any::<u64>(),
        nodes in prop::collection::vec((0.0..400.0f64, 0.0..300.0f64), 1..16),
        variant in 0..5usize,
    ) {
        let mut s = Simulation::new(SimulationConfig {
            seed,
            waypoint: RandomWaypoint::frozen(),
            ..SimulationConfig::default()
        });
        match corpus::BEHAVIOR_NAMES.get(variant) {
            Some(name) => s.set_model(DEFAULT_MODEL, NodeModel::with_behavior(corpus::behavior(name).unwrap())).unwrap(),
            None => s.add_topology_listener(corpus::topology_listener(corpus::RED_GREEN_CENTRALIZED).unwrap()),
        }
        for &(x, y) in &nodes {
            s.add_node(Point::new(x, y), DEFAULT_MODEL).unwrap();
        }
        s.run_ticks(32);
        for id in s.topology().node_ids() {
            let want = if s.topology().degree(id).unwrap() > 0 { GREEN } else { RED };
            let got = s.property(id, COLOR).unwrap().and_then(PropertyValue::as_str);
            prop_assert_eq!(got, Some(want));
        }
    }

    #[test]
    fn tikz_line_counts_match(
        nodes in prop::collection::vec((0.0..800.0f64, 0.0..600.0f64), 0..40),
        scale in 1.0..200.0f64,
        decimals in 0..5usize,
    ) {
        let mut s = sim(0);
        for &(x, y) in &nodes {
            s.add_node(Point::new(x, y), DEFAULT_MODEL).unwrap();
        }
        let opts = TikzOptions { scale, decimal_places: decimals, ..TikzOptions::default() };
        let text = to_tikz(s.topology(), &opts);
        let defined: BTreeSet<&str> = text
            .lines()
            .filter(|l| l.starts_with("  \\path"))
            .map(|l| l.rsplit(' ').nth(1).unwrap())
            .collect();
        let draws: Vec<&str> = text.lines().filter(|l| l.starts_with("  \\draw")).collect();
        prop_assert_eq!(defined.len(), nodes.len());
        prop_assert_eq!(draws.len(), s.topology().link_count());
        for d in draws {
            let (a, b) = d.trim_start_matches("  \\draw ").trim_end_matches(';').split_once("--").unwrap();
            prop_assert!(defined.contains(a) && defined.contains(b));
        }
    }

    #[test]
    fn random_command_streams_replay(script in prop::collection::vec((0..40u64, 0..3u8, 0..14u32, 0.0..400.0f64, 0.0..300.0f64), 0..40)) {
        let mut script = script;
        script.sort_by_key(|c| c.0);
        let text: String = script
            .iter()
            .map(|&(tick, kind, id, x, y)| match kind {
                0 => format!("{{\"tick\":{tick},\"cmd\":\"addNode\",\"x\":{x},\"y\":{y}}}\n"),
                1 => format!("{{\"tick\":{tick},\"cmd\":\"moveNode\",\"id\":{id},\"x\":{x},\"y\":{y}}}\n"),
                _ => format!("{{\"tick\":{tick},\"cmd\":\"removeNode\",\"id\":{id}}}\n"),
            })
            .collect();
        let mut session = Session::from_text(
            "seed = 5\n[models.default]\nbehavior = \"red-green-v4\"\n[[nodes]]\nx = 10\ny = 10\n[[nodes]]\nx = 60\ny = 10\n",
        )
        .unwrap();
        session.load_script(&text).unwrap();
        session.take_outbox();
        let mut state = ReplayState::from_snapshot(&session.snapshot());
        for _ in 0..50 {
            session.tick();
            for out in session.take_outbox() {
                state.apply(&out.event).unwrap();
            }
        }
        prop_assert_eq!(state.to_snapshot(50), session.snapshot());
    }
}

type FireLog = Arc<Mutex<Vec<(NodeId, u64)>>>;

struct Ticker {
    period: u64,
    log: FireLog,
}

impl Behavior for Ticker {
    fn on_attach(&mut self, ctx: &mut NodeContext<'_>) -> HookResult {
        ctx.add_clock_listener(self.period)
    }

    fn on_clock(&mut self, ctx: &mut NodeContext<'_>) -> HookResult {
        let now = ctx.current_time()?;
        self.log.lock().unwrap().push((ctx.id(), now));
        Ok(())
    }
}

struct Reception {
    receiver: NodeId,
    sender: NodeId,
    sent_at: u64,
    now: u64,
    linked: bool,
}

type MessageLog = Arc<Mutex<Vec<Reception>>>;

/// Broadcasts every tick and records what it hears.
struct Chatter(MessageLog);

impl Behavior for Chatter {
    fn on_attach(&mut self, ctx: &mut NodeContext<'_>) -> HookResult {
        ctx.subscribe_messages()?;
        ctx.add_clock_listener(1)
    }

    fn on_clock(&mut self, ctx: &mut NodeContext<'_>) -> HookResult {
        ctx.send(Destination::Broadcast, Payload::Value("HELLO".into()))
    }

    fn on_message(&mut self, ctx: &mut NodeContext<'_>, envelope: &Envelope) -> HookResult {
        let reception = Reception {
            receiver: ctx.id(),
            sender: envelope.sender,
            sent_at: envelope.sent_at,
            now: ctx.current_time()?,
            linked: ctx.neighbors()?.contains(&envelope.sender),
        };
        self.0.lock().unwrap().push(reception);
        Ok(())
    }
}
