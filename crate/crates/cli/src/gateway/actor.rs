//! One thread per session. The thread owns the [`Session`]; handlers talk
//! to it through a command queue and read events from a broadcast channel.

use std::sync::mpsc::{self, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use prevent_core::orchestrator::{
    OrchestratorError, RunRecord, Session, SessionConfig, SessionSnapshot, TaskMessage, WireEvent,
};
use prevent_core::skills::ConsentCommand;
use prevent_core::world::HazardSpec;
use tokio::sync::{broadcast, oneshot};

type Reply<T> = oneshot::Sender<Result<T, OrchestratorError>>;

pub(crate) enum Command {
    Submit(TaskMessage, Reply<()>),
    Consent {
        robot_task_id: String,
        command: ConsentCommand,
        user_id: String,
        reply: Reply<()>,
    },
    Inject(HazardSpec, Reply<()>),
    Snapshot(oneshot::Sender<SessionSnapshot>),
    Records(oneshot::Sender<Vec<RunRecord>>),
    /// Events after `after` plus a receiver for everything later, taken
    /// atomically so nothing falls in between.
    Subscribe {
        after: u64,
        reply: oneshot::Sender<(Vec<WireEvent>, broadcast::Receiver<WireEvent>)>,
    },
}

const CHANNEL_CAPACITY: usize = 4096;

/// Starts the session thread and returns its queue and first snapshot.
pub(crate) fn spawn(
    id: String,
    config: SessionConfig,
    tick_interval: Duration,
) -> Result<(mpsc::Sender<Command>, SessionSnapshot), OrchestratorError> {
    let (tx, rx) = mpsc::channel();
    let (ready_tx, ready_rx) = mpsc::channel();
    thread::Builder::new()
        .name(format!("session-{id}"))
        .spawn(move || match Session::new(id, config) {
            Ok(session) => {
                let _ = ready_tx.send(Ok(session.snapshot()));
                run(session, rx, tick_interval);
            }
            Err(e) => {
                let _ = ready_tx.send(Err(e));
            }
        })
        .expect("spawn session thread");
    let snapshot = ready_rx.recv().expect("session thread reports readiness")?;
    Ok((tx, snapshot))
}

fn run(mut session: Session, rx: mpsc::Receiver<Command>, interval: Duration) {
    let (events, _) = broadcast::channel(CHANNEL_CAPACITY);
    let mut published = 0;
    let mut next_tick = Instant::now();
    let mut faulted = false;
    loop {
        let ticking = session.is_busy() && !faulted;
        let received = if ticking {
            rx.recv_timeout(next_tick.saturating_duration_since(Instant::now()))
        } else {
            rx.recv().map_err(|_| RecvTimeoutError::Disconnected)
        };
        match received {
            Ok(cmd) => {
                let was_busy = session.is_busy();
                handle(&mut session, cmd, &events);
                if !was_busy && session.is_busy() {
                    next_tick = Instant::now() + interval;
                }
            }
            Err(RecvTimeoutError::Timeout) => {
                if let Err(e) = session.step() {
                    eprintln!("session {}: stopped ticking: {e}", session.id());
                    faulted = true;
                }
                next_tick += interval;
                let now = Instant::now();
                if next_tick < now {
                    next_tick = now;
                }
            }
            Err(RecvTimeoutError::Disconnected) => return,
        }
        for e in &session.events()[published..] {
            let _ = events.send(e.clone());
        }
        published = session.events().len();
    }
}

fn handle(session: &mut Session, cmd: Command, events: &broadcast::Sender<WireEvent>) {
    match cmd {
        Command::Submit(msg, reply) => {
            let _ = reply.send(session.submit(msg));
        }
        Command::Consent {
            robot_task_id,
            command,
            user_id,
            reply,
        } => {
            let _ = reply.send(session.deliver_consent(&robot_task_id, command, &user_id));
        }
        Command::Inject(spec, reply) => {
            let _ = reply.send(session.inject(&spec));
        }
        Command::Snapshot(reply) => {
            let _ = reply.send(session.snapshot());
        }
        Command::Records(reply) => {
            let _ = reply.send(session.records().to_vec());
        }
        Command::Subscribe { after, reply } => {
            let _ = reply.send((session.events_after(after).to_vec(), events.subscribe()));
        }
    }
}
