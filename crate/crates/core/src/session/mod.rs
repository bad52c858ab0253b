//! A hosted simulation: scenario loading, live commands, delta streaming
//! and trace files.
//!
//! All kernel mutation goes through [`Session::handle_command`], which
//! queues it for phase 1 of the next tick (or applies it straight away via
//! [`Session::apply_pending`] while paused; both orders produce the same
//! event stream). Resulting events collect in an outbox that the caller
//! drains and fans out to clients.

pub mod protocol;
pub mod replay;
pub mod scenario;
pub mod server;

use std::collections::VecDeque;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::clock::Tick;
use crate::simulation::{CommandOutcome, Simulation};

pub use protocol::{parse_script, ClientCommand, ScheduledCommand, ServerEvent, Snapshot};
pub use replay::{ReplayError, ReplayState};
pub use scenario::ScenarioConfig;

pub type ClientId = u64;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },
    #[error("command script line {line}: {message}")]
    Script { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    All,
    Client(ClientId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outgoing {
    pub target: Target,
    pub event: ServerEvent,
}

pub struct Session {
    sim: Simulation,
    default_model: String,
    paused: bool,
    tick_rate: f64,
    run_limit: Option<Tick>,
    script: VecDeque<ScheduledCommand>,
    outbox: Vec<Outgoing>,
    backlog: Vec<ServerEvent>,
    trace: Option<Box<dyn Write + Send>>,
    recorder: Option<Box<dyn Write + Send>>,
}

impl Session {
    /// Builds a paused session at tick 0.
    pub fn new(config: ScenarioConfig) -> Result<Self, SessionError> {
        let sim = config.build()?;
        let mut session = Session {
            sim,
            default_model: config.default_model.clone(),
            paused: true,
            tick_rate: config.tick_rate,
            run_limit: config.run_limit,
            script: VecDeque::new(),
            outbox: Vec::new(),
            backlog: Vec::new(),
            trace: None,
            recorder: None,
        };
        let events: Vec<ServerEvent> = session
            .sim
            .drain_events()
            .into_iter()
            .map(ServerEvent::from)
            .collect();
        for event in events {
            session.backlog.push(event.clone());
            session.outbox.push(Outgoing {
                target: Target::All,
                event,
            });
        }
        Ok(session)
    }

    pub fn from_text(text: &str) -> Result<Self, SessionError> {
        Session::new(ScenarioConfig::parse(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SessionError> {
        Session::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn simulation_mut(&mut self) -> &mut Simulation {
        &mut self.sim
    }

    pub fn current_time(&self) -> Tick {
        self.sim.current_time()
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn tick_rate(&self) -> f64 {
        self.tick_rate
    }

    pub fn run_limit(&self) -> Option<Tick> {
        self.run_limit
    }

    pub fn set_run_limit(&mut self, limit: Option<Tick>) {
        self.run_limit = limit;
    }

    /// Streams every event (including those of scenario loading) to `out`,
    /// one JSON object per line.
    pub fn set_trace(&mut self, mut out: Box<dyn Write + Send>) -> io::Result<()> {
        for event in self.backlog.drain(..) {
            writeln!(out, "{}", event.to_line())?;
        }
        self.trace = Some(out);
        Ok(())
    }

    /// Records every kernel command with the tick it is applied in, in the
    /// format [`Session::load_script`] reads back.
    pub fn set_recorder(&mut self, out: Box<dyn Write + Send>) {
        self.recorder = Some(out);
    }

    pub fn load_script(&mut self, text: &str) -> Result<(), SessionError> {
        let script =
            parse_script(text).map_err(|(line, message)| SessionError::Script { line, message })?;
        self.script.extend(script);
        Ok(())
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::capture(self.sim.topology(), self.current_time())
    }

    pub fn take_outbox(&mut self) -> Vec<Outgoing> {
        std::mem::take(&mut self.outbox)
    }

    pub fn flush(&mut self) -> io::Result<()> {
        if let Some(t) = &mut self.trace {
            t.flush()?;
        }
        if let Some(r) = &mut self.recorder {
            r.flush()?;
        }
        Ok(())
    }

    fn emit(&mut self, target: Target, event: ServerEvent) {
        // the trace holds kernel deltas and command errors, not session control
        let traced = match event {
            ServerEvent::Error { .. } => true,
            ServerEvent::Paused { .. } | ServerEvent::Resumed { .. } | ServerEvent::Snapshot(_) => {
                false
            }
            _ => target == Target::All,
        };
        if traced {
            match &mut self.trace {
                Some(t) => {
                    if let Err(e) = writeln!(t, "{}", event.to_line()) {
                        log::error!("trace write failed: {e}");
                    }
                }
                None => self.backlog.push(event.clone()),
            }
        }
        self.outbox.push(Outgoing { target, event });
    }

    pub fn pause(&mut self) {
        if !self.paused {
            self.paused = true;
            let time = self.current_time();
            self.emit(Target::All, ServerEvent::Paused { time });
        }
    }

    pub fn resume(&mut self) {
        if self.paused {
            self.paused = false;
            let time = self.current_time();
            self.emit(Target::All, ServerEvent::Resumed { time });
        }
    }

    /// Parses and handles one wire line. Malformed input produces an error
    /// event for `client` only.
    pub fn handle_line(&mut self, client: Option<ClientId>, line: &str) {
        let line = line.trim();
        if line.is_empty() {
            return;
        }
        match serde_json::from_str::<ClientCommand>(line) {
            Ok(cmd) => self.handle_command(client, cmd),
            Err(e) => {
                let time = self.current_time();
                let event = ServerEvent::error(time, "malformedCommand", e.to_string());
                self.outbox.push(Outgoing {
                    target: client.map_or(Target::All, Target::Client),
                    event,
                });
            }
        }
    }

    pub fn handle_command(&mut self, client: Option<ClientId>, cmd: ClientCommand) {
        let time = self.current_time();
        match cmd {
            ClientCommand::Pause => self.pause(),
            ClientCommand::Resume => self.resume(),
            ClientCommand::SetRate { ticks_per_second } => {
                if ticks_per_second.is_finite() && ticks_per_second >= 0.0 {
                    self.tick_rate = ticks_per_second;
                } else {
                    let event =
                        ServerEvent::error(time, "invalidArgument", "ticksPerSecond must be ≥ 0");
                    self.outbox.push(Outgoing {
                        target: client.map_or(Target::All, Target::Client),
                        event,
                    });
                }
            }
            ClientCommand::Snapshot => {
                let event = ServerEvent::Snapshot(self.snapshot());
                self.outbox.push(Outgoing {
                    target: client.map_or(Target::All, Target::Client),
                    event,
                });
            }
            ref kernel_cmd => {
                let Some(command) = kernel_cmd.to_kernel(&self.default_model) else {
                    return;
                };
                if let Some(rec) = &mut self.recorder {
                    let line = serde_json::to_string(&ScheduledCommand {
                        tick: time,
                        command: cmd.clone(),
                    })
                    .expect("commands serialize");
                    if let Err(e) = writeln!(rec, "{line}") {
                        log::error!("command record failed: {e}");
                    }
                }
                self.sim.enqueue(client, command);
            }
        }
    }

    fn publish(
        &mut self,
        outcomes: Vec<CommandOutcome>,
        events: Vec<crate::event::TimedEvent>,
        time: Tick,
    ) {
        for outcome in outcomes {
            if let Err(e) = outcome.result {
                let target = outcome.origin.map_or(Target::All, Target::Client);
                self.emit(target, ServerEvent::error(time, e.code(), e.to_string()));
            }
        }
        for event in events {
            self.emit(Target::All, event.into());
        }
    }

    fn feed_script(&mut self) {
        let now = self.current_time();
        while self.script.front().is_some_and(|c| c.tick <= now) {
            let entry = self.script.pop_front().expect("checked");
            self.handle_command(None, entry.command);
        }
    }

    /// Applies queued commands without advancing the clock. Only meaningful
    /// between ticks, typically while paused.
    pub fn apply_pending(&mut self) {
        let outcomes = self.sim.apply_queued();
        let events = self.sim.drain_events();
        let time = self.current_time();
        self.publish(outcomes, events, time);
    }

    /// Advances exactly one tick, regardless of pause state.
    pub fn tick(&mut self) {
        self.feed_script();
        let report = self.sim.tick();
        self.publish(report.commands, report.events, report.time);
    }

    /// Advances exactly `k` ticks synchronously.
    pub fn step(&mut self, k: u64) {
        for _ in 0..k {
            self.tick();
        }
    }

    /// One iteration of the run loop: ticks if running, then auto-pauses on
    /// reaching the run limit. Returns whether a tick happened.
    pub fn run_once(&mut self) -> bool {
        if self.paused {
            return false;
        }
        if self
            .run_limit
            .is_some_and(|limit| self.current_time() >= limit)
        {
            self.pause();
            return false;
        }
        self.tick();
        if self
            .run_limit
            .is_some_and(|limit| self.current_time() >= limit)
        {
            self.pause();
        }
        true
    }

    /// Resumes and runs without pacing until paused or the run limit hits.
    /// Without a run limit this only returns if a command pauses it.
    pub fn run_to_limit(&mut self) {
        self.resume();
        while self.run_once() {}
    }
}
