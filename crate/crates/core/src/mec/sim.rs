use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::stream::{MoveObservation, Trigger, TriggerKind};
use super::{place, EventCounts, EventKind, MecConfig, MecEvent, Resources, RunSummary};
use crate::error::{Error, Result};
use crate::service::ServiceKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vm {
    pub capacity: Resources,
    pub allocated: Resources,
    pub apps: BTreeSet<u64>,
}

impl Vm {
    fn free(&self) -> Resources {
        self.capacity - self.allocated
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AppRole {
    Dedicated {
        ue: usize,
    },
    /// Target-side reservation of an in-flight migration.
    Reserved {
        ue: usize,
    },
    Shared {
        attached: BTreeSet<usize>,
        last_detach_s: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct App {
    pub service: ServiceKind,
    pub ec: usize,
    pub vm: usize,
    pub requirements: Resources,
    pub role: AppRole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Migration {
    pub generation: u64,
    pub source_ec: usize,
    pub target_ec: usize,
    pub target_app: u64,
    pub start_s: f64,
    pub finish_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum Serving {
    Cloud,
    Dedicated(u64),
    Shared(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Session {
    service: ServiceKind,
    serving: Serving,
    migration: Option<Migration>,
}

/// Predictive pre-placement. `observe` sees every movement row and names a
/// service to pre-warm at the UE's serving edge cloud, if any.
pub trait PrewarmHook {
    fn observe(&mut self, obs: &MoveObservation) -> Option<ServiceKind>;
}

pub struct Prewarm<'a> {
    pub hook: &'a mut dyn PrewarmHook,
    pub share_cap: usize,
    pub ttl_s: f64,
}

#[derive(Debug, Clone, Copy)]
struct SharedParams {
    share_cap: usize,
    ttl_s: f64,
}

/// Resource ledgers and session bookkeeping for one run.
#[derive(Debug, Clone)]
pub struct MecState {
    cfg: MecConfig,
    enb_ec: Vec<usize>,
    pub vms: Vec<Vec<Vm>>,
    pub apps: BTreeMap<u64, App>,
    shared_index: BTreeMap<(usize, ServiceKind), u64>,
    sessions: BTreeMap<usize, Session>,
    ue_enb: BTreeMap<usize, usize>,
    shared: Option<SharedParams>,
    pending: Vec<Trigger>,
    next_app: u64,
    next_generation: u64,
    last_sweep: f64,
    rng: ChaCha8Rng,
    pub events: Vec<MecEvent>,
    pub prewarm_placements: u64,
    pub shared_attachments: u64,
}

impl MecState {
    /// `enb_ec[e]` is the edge cloud owning eNB `e`; edge clouds are numbered
    /// `0..num_ecs`.
    pub fn new(cfg: &MecConfig, enb_ec: Vec<usize>, num_ecs: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if let Some(&bad) = enb_ec.iter().find(|&&ec| ec >= num_ecs) {
            return Err(Error::validation(
                "topology",
                format!("eNB mapped to unknown edge cloud {bad}"),
            ));
        }
        let vm = Vm {
            capacity: cfg.vm_resources,
            allocated: Resources::ZERO,
            apps: BTreeSet::new(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        Ok(Self {
            cfg: cfg.clone(),
            enb_ec,
            vms: vec![vec![vm; cfg.vms_per_ec]; num_ecs],
            apps: BTreeMap::new(),
            shared_index: BTreeMap::new(),
            sessions: BTreeMap::new(),
            ue_enb: BTreeMap::new(),
            shared: None,
            pending: Vec::new(),
            next_app: 0,
            next_generation: 0,
            last_sweep: f64::NEG_INFINITY,
            rng,
            events: Vec::new(),
            prewarm_placements: 0,
            shared_attachments: 0,
        })
    }

    pub fn migrations_in_flight(&self) -> usize {
        self.sessions.values().filter(|s| s.migration.is_some()).count()
    }

    pub fn active_sessions(&self) -> usize {
        self.sessions.len()
    }

    #[allow(clippy::too_many_arguments)]
    fn emit(
        &mut self,
        t: f64,
        kind: EventKind,
        ue: usize,
        service: ServiceKind,
        ec: usize,
        target_ec: Option<usize>,
        cause: &str,
    ) {
        self.events.push(MecEvent {
            t,
            kind,
            ue,
            service,
            ec,
            target_ec,
            cause: Some(cause.to_owned()),
        });
    }

    fn ec_of_ue(&self, ue: usize) -> Result<usize> {
        let enb = self
            .ue_enb
            .get(&ue)
            .ok_or_else(|| Error::validation("stream", format!("UE {ue} starts a session before any position")))?;
        self.enb_ec
            .get(*enb)
            .copied()
            .ok_or_else(|| Error::validation("stream", format!("unknown eNB {enb}")))
    }

    fn allocate(&mut self, ec: usize, service: ServiceKind, role: AppRole) -> Option<u64> {
        let req = self.cfg.app_resources;
        let slots: Vec<(Resources, Resources)> = self.vms[ec].iter().map(|v| (v.free(), v.capacity)).collect();
        let vm = place(self.cfg.policy, &slots, req, &mut self.rng)?;
        let id = self.next_app;
        self.next_app += 1;
        let v = &mut self.vms[ec][vm];
        v.allocated = v.allocated + req;
        v.apps.insert(id);
        self.apps.insert(
            id,
            App {
                service,
                ec,
                vm,
                requirements: req,
                role,
            },
        );
        Some(id)
    }

    fn free(&mut self, id: u64) {
        if let Some(app) = self.apps.remove(&id) {
            let v = &mut self.vms[app.ec][app.vm];
            v.allocated = v.allocated - app.requirements;
            v.apps.remove(&id);
            if matches!(app.role, AppRole::Shared { .. }) {
                self.shared_index.remove(&(app.ec, app.service));
            }
        }
    }

    /// Shared instance of `service` at `ec` that can take one more UE.
    fn shared_with_room(&self, ec: usize, service: ServiceKind) -> Option<u64> {
        let cap = self.shared?.share_cap;
        let id = *self.shared_index.get(&(ec, service))?;
        match &self.apps[&id].role {
            AppRole::Shared { attached, .. } if attached.len() < cap => Some(id),
            _ => None,
        }
    }

    fn attach(&mut self, id: u64, ue: usize) {
        if let Some(App {
            role: AppRole::Shared { attached, .. },
            ..
        }) = self.apps.get_mut(&id)
        {
            attached.insert(ue);
            self.shared_attachments += 1;
        }
    }

    fn release_serving(&mut self, serving: Serving, ue: usize, t: f64) {
        match serving {
            Serving::Cloud => {}
            Serving::Dedicated(id) => self.free(id),
            Serving::Shared(id) => {
                if let Some(App {
                    role:
                        AppRole::Shared {
                            attached,
                            last_detach_s,
                        },
                    ..
                }) = self.apps.get_mut(&id)
                {
                    attached.remove(&ue);
                    *last_detach_s = t;
                }
            }
        }
    }

    fn serving_ec(&self, serving: Serving) -> Option<usize> {
        match serving {
            Serving::Cloud => None,
            Serving::Dedicated(id) | Serving::Shared(id) => Some(self.apps[&id].ec),
        }
    }

    /// Drops idle shared instances whose TTL has run out.
    fn sweep(&mut self, t: f64) {
        if t <= self.last_sweep {
            return;
        }
        self.last_sweep = t;
        let Some(p) = self.shared else { return };
        let expired: Vec<u64> = self
            .shared_index
            .values()
            .copied()
            .filter(|id| match &self.apps[id].role {
                AppRole::Shared {
                    attached,
                    last_detach_s,
                } => attached.is_empty() && *last_detach_s + p.ttl_s <= t,
                _ => false,
            })
            .collect();
        for id in expired {
            self.free(id);
        }
    }

    pub fn on_session_start(&mut self, ue: usize, service: ServiceKind, t: f64) -> Result<()> {
        if self.sessions.contains_key(&ue) {
            return Err(Error::Invariant(format!(
                "UE {ue} starts a second concurrent session at t={t}"
            )));
        }
        let ec = self.ec_of_ue(ue)?;
        self.emit(t, EventKind::OffloadingRequest, ue, service, ec, None, "session_start");
        let serving = if let Some(id) = self.shared_with_room(ec, service) {
            self.attach(id, ue);
            self.emit(t, EventKind::OffloadingSuccess, ue, service, ec, None, "shared");
            Serving::Shared(id)
        } else if let Some(id) = self.allocate(ec, service, AppRole::Dedicated { ue }) {
            self.emit(t, EventKind::OffloadingSuccess, ue, service, ec, None, "placed");
            Serving::Dedicated(id)
        } else {
            self.emit(t, EventKind::OffloadingFailure, ue, service, ec, None, "no_capacity");
            Serving::Cloud
        };
        self.sessions.insert(
            ue,
            Session {
                service,
                serving,
                migration: None,
            },
        );
        Ok(())
    }

    fn abort_migration(&mut self, ue: usize, t: f64, cause: &str) {
        let Some(session) = self.sessions.get_mut(&ue) else {
            return;
        };
        let Some(m) = session.migration.take() else { return };
        let service = session.service;
        self.free(m.target_app);
        self.emit(
            t,
            EventKind::MigrationAborted,
            ue,
            service,
            m.source_ec,
            Some(m.target_ec),
            cause,
        );
    }

    pub fn on_ue_moved(&mut self, obs: &MoveObservation, t: f64, hook: Option<&mut Prewarm<'_>>) {
        self.ue_enb.insert(obs.ue, obs.enb);
        let Some(&new_ec) = self.enb_ec.get(obs.enb) else {
            return;
        };

        if let Some(p) = hook {
            if p.share_cap > 0 {
                if let Some(service) = p.hook.observe(obs) {
                    self.prewarm(new_ec, service, t);
                }
            }
        }

        let ue = obs.ue;
        let Some(session) = self.sessions.get(&ue) else { return };
        let (service, serving) = (session.service, session.serving);
        let Some(current_ec) = self.serving_ec(serving) else {
            return;
        };
        if let Some(m) = &session.migration {
            if m.target_ec == new_ec {
                return;
            }
            self.abort_migration(ue, t, "ue_moved");
        }
        if new_ec == current_ec {
            return;
        }

        self.emit(
            t,
            EventKind::Migration,
            ue,
            service,
            current_ec,
            Some(new_ec),
            "ec_change",
        );
        if let Some(id) = self.shared_with_room(new_ec, service) {
            self.release_serving(serving, ue, t);
            self.attach(id, ue);
            self.sessions.get_mut(&ue).unwrap().serving = Serving::Shared(id);
            self.emit(
                t,
                EventKind::MigrationSuccess,
                ue,
                service,
                current_ec,
                Some(new_ec),
                "shared",
            );
            return;
        }
        let Some(target_app) = self.allocate(new_ec, service, AppRole::Reserved { ue }) else {
            self.emit(
                t,
                EventKind::MigrationFailure,
                ue,
                service,
                current_ec,
                Some(new_ec),
                "no_capacity",
            );
            return;
        };
        let generation = self.next_generation;
        self.next_generation += 1;
        let finish_s = t + self.cfg.migration_duration_s();
        self.pending.push(Trigger {
            t: finish_s,
            ue,
            kind: TriggerKind::MigrationFinish { generation },
        });
        self.sessions.get_mut(&ue).unwrap().migration = Some(Migration {
            generation,
            source_ec: current_ec,
            target_ec: new_ec,
            target_app,
            start_s: t,
            finish_s,
        });
    }

    pub fn on_migration_finish(&mut self, ue: usize, generation: u64, t: f64) {
        let Some(session) = self.sessions.get_mut(&ue) else {
            return;
        };
        if session.migration.as_ref().is_none_or(|m| m.generation != generation) {
            return;
        }
        let m = session.migration.take().unwrap();
        let (service, serving) = (session.service, session.serving);
        session.serving = Serving::Dedicated(m.target_app);
        self.release_serving(serving, ue, t);
        if let Some(app) = self.apps.get_mut(&m.target_app) {
            app.role = AppRole::Dedicated { ue };
        }
        self.emit(
            t,
            EventKind::MigrationSuccess,
            ue,
            service,
            m.source_ec,
            Some(m.target_ec),
            "transfer_complete",
        );
    }

    pub fn on_session_end(&mut self, ue: usize, t: f64) -> Result<()> {
        if !self.sessions.contains_key(&ue) {
            return Err(Error::validation(
                "stream",
                format!("UE {ue} ends a session it never started (t={t})"),
            ));
        }
        self.abort_migration(ue, t, "session_end");
        let session = self.sessions.remove(&ue).unwrap();
        if let Some(ec) = self.serving_ec(session.serving) {
            self.release_serving(session.serving, ue, t);
            self.emit(t, EventKind::Release, ue, session.service, ec, None, "session_end");
        }
        Ok(())
    }

    /// Places a shared instance unless one already exists; failures are silent.
    fn prewarm(&mut self, ec: usize, service: ServiceKind, t: f64) {
        if self.shared.is_none() || self.shared_index.contains_key(&(ec, service)) {
            return;
        }
        let role = AppRole::Shared {
            attached: BTreeSet::new(),
            last_detach_s: t,
        };
        if let Some(id) = self.allocate(ec, service, role) {
            self.shared_index.insert((ec, service), id);
            self.prewarm_placements += 1;
        }
    }

    /// Conservation and referential checks over the whole state.
    pub fn check_invariants(&self) -> Result<()> {
        for (ec, vms) in self.vms.iter().enumerate() {
            for (i, vm) in vms.iter().enumerate() {
                let mut sum = Resources::ZERO;
                for id in &vm.apps {
                    let app = self
                        .apps
                        .get(id)
                        .ok_or_else(|| Error::Invariant(format!("EC {ec} VM {i} lists missing app {id}")))?;
                    if (app.ec, app.vm) != (ec, i) {
                        return Err(Error::Invariant(format!("app {id} misfiled under EC {ec} VM {i}")));
                    }
                    sum = sum + app.requirements;
                }
                if sum != vm.allocated {
                    return Err(Error::Invariant(format!(
                        "EC {ec} VM {i}: allocated {:?} but apps need {:?}",
                        vm.allocated, sum
                    )));
                }
                if !vm.allocated.fits_in(vm.capacity) || !Resources::ZERO.fits_in(vm.allocated) {
                    return Err(Error::Invariant(format!(
                        "EC {ec} VM {i} over capacity: {:?}",
                        vm.allocated
                    )));
                }
            }
        }
        for (id, app) in &self.apps {
            if !self.vms[app.ec][app.vm].apps.contains(id) {
                return Err(Error::Invariant(format!("app {id} not hosted by its VM")));
            }
            if let AppRole::Shared { attached, .. } = &app.role {
                let cap = self.shared.map_or(0, |p| p.share_cap);
                if attached.len() > cap {
                    return Err(Error::Invariant(format!(
                        "shared app {id} has {} > {cap} UEs",
                        attached.len()
                    )));
                }
            }
        }
        for (ue, s) in &self.sessions {
            let ok = match s.serving {
                Serving::Cloud => s.migration.is_none(),
                Serving::Dedicated(id) => {
                    matches!(self.apps.get(&id), Some(App { role: AppRole::Dedicated { ue: u }, .. }) if u == ue)
                }
                Serving::Shared(id) => {
                    matches!(self.apps.get(&id), Some(App { role: AppRole::Shared { attached, .. }, .. }) if attached.contains(ue))
                }
            };
            let mig_ok = s.migration.as_ref().is_none_or(|m| {
                matches!(self.apps.get(&m.target_app), Some(App { role: AppRole::Reserved { ue: u }, ec, .. }) if u == ue && *ec == m.target_ec)
                    && m.source_ec != m.target_ec
            });
            if !ok || !mig_ok {
                return Err(Error::Invariant(format!(
                    "UE {ue} session references inconsistent state"
                )));
            }
        }
        Ok(())
    }

    fn pop_pending_before(&mut self, next: Option<&Trigger>) -> Option<Trigger> {
        let (i, best) = self.pending.iter().enumerate().min_by(|a, b| a.1.key_cmp(b.1))?;
        if next.is_some_and(|n| n.key_cmp(best).is_lt()) {
            return None;
        }
        Some(self.pending.swap_remove(i))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub events: Vec<MecEvent>,
    pub summary: RunSummary,
    pub state: MecState,
}

/// Replays a time-ordered trigger stream through a fresh edge-cloud model.
///
/// Same-instant triggers are processed movement first, then session starts,
/// session ends and migration completions, ties broken by UE id. Nothing
/// after `horizon_s` is processed; migrations still in flight then are
/// reported as ongoing. Invariants are checked after every trigger.
pub fn run(
    cfg: &MecConfig,
    enb_ec: Vec<usize>,
    num_ecs: usize,
    stream: &[Trigger],
    horizon_s: f64,
    seed: u64,
    mut prewarm: Option<Prewarm<'_>>,
) -> Result<RunOutput> {
    for (i, w) in stream.windows(2).enumerate() {
        if w[1].key_cmp(&w[0]).is_lt() {
            return Err(Error::OutOfOrder {
                index: i + 1,
                t: w[1].t,
                previous: w[0].t,
            });
        }
    }
    let mut state = MecState::new(cfg, enb_ec, num_ecs, seed)?;
    state.shared = prewarm.as_ref().map(|p| SharedParams {
        share_cap: p.share_cap,
        ttl_s: p.ttl_s,
    });

    let mut input = stream.iter().take_while(|tr| tr.t <= horizon_s).peekable();
    loop {
        let trigger = match state.pop_pending_before(input.peek().copied()) {
            Some(p) if p.t <= horizon_s => p,
            Some(p) => {
                state.pending.push(p);
                break;
            }
            None => match input.next() {
                Some(tr) => tr.clone(),
                None => break,
            },
        };
        let t = trigger.t;
        state.sweep(t);
        match &trigger.kind {
            TriggerKind::Move(obs) => state.on_ue_moved(obs, t, prewarm.as_mut()),
            TriggerKind::SessionStart { service } => state.on_session_start(trigger.ue, *service, t)?,
            TriggerKind::SessionEnd => state.on_session_end(trigger.ue, t)?,
            TriggerKind::MigrationFinish { generation } => state.on_migration_finish(trigger.ue, *generation, t),
        }
        state.check_invariants()?;
    }

    let mut counts = EventCounts::tally(&state.events);
    counts.migration_ongoing = state.migrations_in_flight() as u64;
    let summary = RunSummary::new(counts, state.prewarm_placements, state.shared_attachments);
    Ok(RunOutput {
        events: state.events.clone(),
        summary,
        state,
    })
}
