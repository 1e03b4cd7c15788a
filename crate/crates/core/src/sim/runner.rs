//! The event loop behind [`run`](super::run).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{
    attack_outcome, sample_arrivals, AnchorPolicy, AttackIds, EventKind, SimConfig, SimError,
    SimTrace, TraceEntry,
};
use crate::bitset::BitSet;
use crate::tangle::{Issuer, Site, SiteId, SpendKey, Tangle};
use crate::tsa::{resolve_conflicts, select_mcmc, select_uniform, TsaKind, TwoStepState};

const GENESIS_ID: &str = "g";
const ATTACK_KEY: &str = "spend";
const TARGET_ID: &str = "za";
const DOUBLE_SPEND_ID: &str = "zb";

fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Events compare by (time, kind order, site id), smallest first.
#[derive(Clone, Debug, PartialEq)]
struct Event {
    time: f64,
    kind: EventKind,
    site: Option<(u32, SiteId)>,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.kind.cmp(&other.kind))
            .then_with(|| {
                self.site
                    .as_ref()
                    .map(|(_, id)| id)
                    .cmp(&other.site.as_ref().map(|(_, id)| id))
            })
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct AttackState {
    target_idx: u32,
    double_idx: u32,
    anchor_idx: u32,
    chain_tip: u32,
    key: SpendKey,
    revealed: bool,
    reveal_scheduled: bool,
    reveal_time: Option<f64>,
    private_sites: Vec<u32>,
    parasite_seq: u64,
    ever_preferred: bool,
}

struct Runner {
    cfg: SimConfig,
    tangle: Tangle,
    /// Sites visible to every node (issue or reveal time plus latency).
    delivered: BitSet,
    /// Publicly issued sites; the adversary reads these without latency.
    broadcast: BitSet,
    own_undelivered: Vec<Vec<u32>>,
    /// Per-node two-step states, kept in sync with each node's view.
    states: Vec<TwoStepState>,
    tsa_rng: ChaCha12Rng,
    events: BinaryHeap<std::cmp::Reverse<Event>>,
    entries: Vec<TraceEntry>,
    honest_seq: u64,
    attack: Option<AttackState>,
}

/// Run one simulation to completion. Deterministic in the config.
pub fn run(config: &SimConfig) -> Result<SimTrace, SimError> {
    config.validate()?;
    let mut runner = Runner::new(config.clone())?;
    runner.schedule_workload();
    while let Some(std::cmp::Reverse(event)) = runner.events.pop() {
        runner.process(event);
    }
    Ok(runner.finish())
}

impl Runner {
    fn new(cfg: SimConfig) -> Result<Self, SimError> {
        let mut tangle = Tangle::new();
        tangle
            .add_site(Site::genesis(GENESIS_ID))
            .expect("fresh tangle accepts the genesis");
        let mut delivered = BitSet::new();
        delivered.set(0);
        let mut broadcast = BitSet::new();
        broadcast.set(0);
        let node_count = cfg.node_count as usize;
        let states = if cfg.tsa == TsaKind::TwoStep {
            let initial = resolve_conflicts(&tangle.full_view());
            vec![initial; node_count]
        } else {
            Vec::new()
        };
        let tsa_rng = ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, 2));
        Ok(Runner {
            cfg,
            tangle,
            delivered,
            broadcast,
            own_undelivered: vec![Vec::new(); node_count],
            states,
            tsa_rng,
            events: BinaryHeap::new(),
            entries: Vec::new(),
            honest_seq: 0,
            attack: None,
        })
    }

    fn schedule_workload(&mut self) {
        let mut honest_rng = ChaCha12Rng::seed_from_u64(derive_seed(self.cfg.seed, 0));
        for t in sample_arrivals(self.cfg.honest_rate, self.cfg.duration, &mut honest_rng) {
            self.events.push(std::cmp::Reverse(Event {
                time: t,
                kind: EventKind::HonestIssue,
                site: None,
            }));
        }

        let Some(attack_cfg) = self.cfg.attack.clone() else {
            return;
        };
        // t = 0: the target transaction goes out publicly on the current
        // public tips (the genesis), and the conflicting double spend starts
        // a private chain on the anchor.
        let target = Site::new(TARGET_ID, (GENESIS_ID, GENESIS_ID), Issuer::Adversary, 0.0)
            .with_label(ATTACK_KEY, "A");
        self.tangle.add_site(target).expect("target site is valid");
        let target_idx = self.tangle.idx_of(&SiteId::from(TARGET_ID)).unwrap();
        self.broadcast.set(target_idx as usize);
        self.schedule_delivery(0.0, target_idx);
        self.log(0.0, EventKind::AdversaryIssue, Some(target_idx));

        let anchor_idx = match attack_cfg.anchor_policy {
            AnchorPolicy::Genesis => 0,
            AnchorPolicy::TargetParent => self.tangle.parents_at(target_idx).unwrap().0,
        };
        let anchor_id = self.tangle.id_at(anchor_idx).clone();
        let double = Site::new(
            DOUBLE_SPEND_ID,
            (anchor_id.clone(), anchor_id),
            Issuer::Adversary,
            0.0,
        )
        .with_label(ATTACK_KEY, "B");
        self.tangle.add_site(double).expect("double spend is valid");
        let double_idx = self.tangle.idx_of(&SiteId::from(DOUBLE_SPEND_ID)).unwrap();
        self.log(0.0, EventKind::AdversaryIssue, Some(double_idx));

        let mut adv_rng = ChaCha12Rng::seed_from_u64(derive_seed(self.cfg.seed, 1));
        for t in sample_arrivals(attack_cfg.adversary_rate, self.cfg.duration, &mut adv_rng) {
            self.events.push(std::cmp::Reverse(Event {
                time: t,
                kind: EventKind::AdversaryIssue,
                site: None,
            }));
        }

        self.attack = Some(AttackState {
            target_idx,
            double_idx,
            anchor_idx,
            chain_tip: double_idx,
            key: SpendKey::new(ATTACK_KEY),
            revealed: false,
            reveal_scheduled: false,
            reveal_time: None,
            private_sites: vec![double_idx],
            parasite_seq: 0,
            ever_preferred: false,
        });

        if let Some(at) = attack_cfg.reveal_at {
            self.events.push(std::cmp::Reverse(Event {
                time: at,
                kind: EventKind::Reveal,
                site: None,
            }));
            self.attack.as_mut().unwrap().reveal_scheduled = true;
        } else {
            self.check_reveal_trigger(0.0);
        }
    }

    fn process(&mut self, event: Event) {
        match event.kind {
            EventKind::HonestIssue => self.honest_issue(event.time),
            EventKind::AdversaryIssue => self.adversary_issue(event.time),
            EventKind::Deliver => {
                let (idx, _) = event.site.expect("deliver events carry a site");
                self.deliver(event.time, idx);
            }
            EventKind::Reveal => self.reveal(event.time),
            EventKind::Evaluate => self.evaluate(event.time),
        }
    }

    fn node_visibility(delivered: &BitSet, own_undelivered: &[Vec<u32>], node: usize) -> BitSet {
        let mut visible = delivered.clone();
        for &own in &own_undelivered[node] {
            visible.set(own as usize);
        }
        visible
    }

    fn honest_issue(&mut self, now: f64) {
        let node = (self.honest_seq % self.cfg.node_count as u64) as usize;
        let visible = Self::node_visibility(&self.delivered, &self.own_undelivered, node);
        let view = self.tangle.view_from_bits_unchecked(visible);
        let pair = match self.cfg.tsa {
            TsaKind::Uniform => select_uniform(&view, &mut self.tsa_rng),
            TsaKind::Mcmc { alpha } => select_mcmc(&view, alpha, &mut self.tsa_rng),
            TsaKind::TwoStep => {
                if let Some(attack) = &mut self.attack {
                    if self.states[node].winner_idx_of(&attack.key) == Some(attack.double_idx) {
                        attack.ever_preferred = true;
                    }
                }
                self.states[node]
                    .dispatch(&self.tangle, &mut self.tsa_rng)
                    .expect("two-step tip set is never empty")
            }
        };
        drop(view);
        let id = format!("h{:06}", self.honest_seq);
        self.honest_seq += 1;
        let site = Site::new(
            id.as_str(),
            (pair.p1.clone(), pair.p2.clone()),
            Issuer::Node(node as u32),
            now,
        );
        self.tangle
            .add_site(site)
            .expect("honest selections always insert cleanly");
        let idx = self.tangle.idx_of(&SiteId::from(id.as_str())).unwrap();
        if self.cfg.tsa == TsaKind::TwoStep {
            self.states[node]
                .record_own_site(&self.tangle, &SiteId::from(id.as_str()), &pair)
                .expect("dispatch returned these parents");
        }
        self.own_undelivered[node].push(idx);
        self.broadcast.set(idx as usize);
        self.schedule_delivery(now, idx);
        self.check_reveal_trigger(now);
        self.log(now, EventKind::HonestIssue, Some(idx));
    }

    fn adversary_issue(&mut self, now: f64) {
        let Some(attack) = self.attack.as_mut() else {
            return;
        };
        let id = format!("zp{:05}", attack.parasite_seq);
        attack.parasite_seq += 1;
        let parents = (
            self.tangle.id_at(attack.chain_tip).clone(),
            self.tangle.id_at(attack.anchor_idx).clone(),
        );
        let site = Site::new(id.as_str(), parents, Issuer::Adversary, now);
        self.tangle
            .add_site(site)
            .expect("parasite chain extensions are valid");
        let idx = self.tangle.idx_of(&SiteId::from(id.as_str())).unwrap();
        let attack = self.attack.as_mut().unwrap();
        attack.chain_tip = idx;
        let revealed = attack.revealed;
        if revealed {
            self.broadcast.set(idx as usize);
            self.schedule_delivery(now, idx);
        } else {
            self.attack.as_mut().unwrap().private_sites.push(idx);
        }
        self.log(now, EventKind::AdversaryIssue, Some(idx));
    }

    fn deliver(&mut self, now: f64, idx: u32) {
        self.delivered.set(idx as usize);
        let issuer = self.tangle.site_at(idx).issuer;
        if let Issuer::Node(n) = issuer {
            self.own_undelivered[n as usize].retain(|&i| i != idx);
        }
        if self.cfg.tsa == TsaKind::TwoStep {
            let id = self.tangle.id_at(idx).clone();
            for node in 0..self.cfg.node_count as usize {
                if issuer == Issuer::Node(node as u32) {
                    continue; // the issuer recorded it at issue time
                }
                let visible = Self::node_visibility(&self.delivered, &self.own_undelivered, node);
                let view = self.tangle.view_from_bits_unchecked(visible);
                self.states[node]
                    .record_incoming_site(&view, &id)
                    .expect("delivered sites are in the tangle");
            }
        }
        self.log(now, EventKind::Deliver, Some(idx));
    }

    fn reveal(&mut self, now: f64) {
        let latency = self.cfg.latency;
        let horizon = self.cfg.attack.as_ref().unwrap().eval_horizon;
        let Some(attack) = self.attack.as_mut() else {
            return;
        };
        if attack.revealed {
            return;
        }
        attack.revealed = true;
        attack.reveal_time = Some(now);
        let private = std::mem::take(&mut attack.private_sites);
        for idx in private {
            self.broadcast.set(idx as usize);
            let event = Event {
                time: now + latency,
                kind: EventKind::Deliver,
                site: Some((idx, self.tangle.id_at(idx).clone())),
            };
            self.events.push(std::cmp::Reverse(event));
        }
        self.events.push(std::cmp::Reverse(Event {
            time: now + horizon,
            kind: EventKind::Evaluate,
            site: None,
        }));
        self.log(now, EventKind::Reveal, None);
    }

    fn evaluate(&mut self, now: f64) {
        self.log(now, EventKind::Evaluate, None);
    }

    fn schedule_delivery(&mut self, issue_time: f64, idx: u32) {
        let event = Event {
            time: issue_time + self.cfg.latency,
            kind: EventKind::Deliver,
            site: Some((idx, self.tangle.id_at(idx).clone())),
        };
        self.events.push(std::cmp::Reverse(event));
    }

    /// Weight-based reveal: the adversary reads the public tangle without
    /// latency and reveals once the target is considered well-confirmed.
    fn check_reveal_trigger(&mut self, now: f64) {
        let Some(attack) = self.attack.as_mut() else {
            return;
        };
        if attack.revealed || attack.reveal_scheduled {
            return;
        }
        let accept_weight = self.cfg.attack.as_ref().unwrap().accept_weight;
        let public_weight = self
            .tangle
            .descendants_at(attack.target_idx)
            .intersection_count(&self.broadcast) as u64
            + 1;
        if public_weight >= accept_weight {
            attack.reveal_scheduled = true;
            self.events.push(std::cmp::Reverse(Event {
                time: now,
                kind: EventKind::Reveal,
                site: None,
            }));
        }
    }

    fn log(&mut self, time: f64, kind: EventKind, site: Option<u32>) {
        let tip_set_size = if self.cfg.tsa == TsaKind::TwoStep {
            Some(self.states[0].tip_count() as u32)
        } else {
            None
        };
        self.entries.push(TraceEntry {
            time,
            kind,
            site: site.map(|i| self.tangle.id_at(i).clone()),
            raw_tip_count: self.tangle.raw_tip_count() as u32,
            tip_set_size,
        });
    }

    fn finish(self) -> SimTrace {
        let (attack_ids, reveal_time, ever_preferred, revealed) = match &self.attack {
            Some(a) => (
                Some(AttackIds {
                    key: a.key.clone(),
                    target: self.tangle.id_at(a.target_idx).clone(),
                    double_spend: self.tangle.id_at(a.double_idx).clone(),
                    anchor: self.tangle.id_at(a.anchor_idx).clone(),
                }),
                a.reveal_time,
                a.ever_preferred,
                a.revealed,
            ),
            None => (None, None, false, false),
        };
        let outcome = self.attack.as_ref().map(|_| {
            let mut out = attack_outcome(&self.tangle).expect("attack runs have a conflict");
            if !revealed {
                // The double spend was never shown to anyone; the attack
                // cannot have succeeded regardless of private weight.
                out.success = false;
            }
            out
        });
        let parasite_ever_preferred = if self.attack.is_some() && self.cfg.tsa == TsaKind::TwoStep {
            Some(ever_preferred)
        } else {
            None
        };
        SimTrace {
            config: self.cfg,
            entries: self.entries,
            tangle: self.tangle,
            attack: attack_ids,
            reveal_time,
            outcome,
            parasite_ever_preferred,
        }
    }
}
