//! Event-driven market simulation.
//!
//! Requests arrive over time and wait in a pool. On arrival the nearest idle
//! driver is offered every policy-admitted ride that contains the new
//! request, whose other members are all waiting, and whose members can all
//! be picked up within their patience; the driver picks one by profit.
//! A driver becoming idle is offered the waiting requests the same way,
//! oldest first. Requests nobody picks up in time expire.

mod log;

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use self::log::{
    DriveLeg, DriverLedger, EventKind, EventLog, Outcome, RequestOutcome, ServedRide, SimEvent,
};
use crate::demand::{generate_demand, DemandConfig, RequestId, TripRequest};
use crate::economics::{choose_ride, price_with_pickup, ChoiceMode, DriverId, DriverProfile, PricingParams, Policy};
use crate::error::{Error, Result};
use crate::network::{Network, NodeId};
use crate::scalar::{total_cmp, Scalar};
use crate::shareability::{enumerate_rides, RideCandidate, RideKind, ShareabilityConfig, StopKind, TravellerPrefs};

/// rng streams derived from the scenario seed
const STREAM_SUPPLY: u64 = 1;
const STREAM_CHOICE: u64 = 2;

#[derive(Clone, Debug, PartialEq)]
pub enum DemandSource<S = f64> {
    /// Poisson arrivals over the horizon, seeded from the scenario seed.
    Poisson { rate_per_hour: S, patience: S },
    Requests(Vec<TripRequest<S>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupplyConfig<S = f64> {
    pub drivers: usize,
    /// Explicit start nodes; drawn uniformly over nodes when `None`.
    pub positions: Option<Vec<NodeId>>,
    pub cost_per_km: S,
    pub value_of_time: S,
    /// Per-driver pooling multiplier is drawn uniformly from this range.
    pub pool_multiplier: (S, S),
    pub choice: ChoiceMode<S>,
    pub decline_allowed: bool,
}

impl<S: Scalar> SupplyConfig<S> {
    pub fn new(drivers: usize) -> Self {
        Self {
            drivers,
            positions: None,
            cost_per_km: S::lit(0.5),
            value_of_time: S::zero(),
            pool_multiplier: (S::one(), S::one()),
            choice: ChoiceMode::Deterministic,
            decline_allowed: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioConfig<S: Scalar = f64> {
    pub network: Arc<Network<S>>,
    pub demand: DemandSource<S>,
    pub supply: SupplyConfig<S>,
    pub pricing: PricingParams<S>,
    pub travellers: TravellerPrefs<S>,
    pub max_degree: usize,
    /// Seconds; see [`ShareabilityConfig::window`].
    pub pooling_window: S,
    /// Seconds; requests arrive in `[0, horizon)`.
    pub horizon: S,
    pub seed: u64,
}

impl<S: Scalar> ScenarioConfig<S> {
    /// Four hours of Poisson demand at 5 min patience with pricing defaults.
    pub fn new(network: Arc<Network<S>>, rate_per_hour: S, drivers: usize, policy: Policy, seed: u64) -> Self {
        Self {
            network,
            demand: DemandSource::Poisson { rate_per_hour, patience: S::lit(300.0) },
            supply: SupplyConfig::new(drivers),
            pricing: PricingParams::new(policy),
            travellers: TravellerPrefs::default(),
            max_degree: 3,
            pooling_window: S::lit(600.0),
            horizon: S::lit(4.0 * 3600.0),
            seed,
        }
    }

    pub fn shareability(&self) -> ShareabilityConfig<S> {
        ShareabilityConfig {
            max_degree: self.max_degree,
            discount: self.pricing.discount,
            fare_per_km: self.pricing.fare_per_km,
            window: self.pooling_window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > S::zero() && self.horizon.is_finite()) {
            return Err(Error::invalid(format!("simulation horizon must be positive, got {}", self.horizon)));
        }
        if self.supply.drivers < 1 {
            return Err(Error::invalid("at least one driver is required"));
        }
        if let Some(pos) = &self.supply.positions {
            if pos.len() != self.supply.drivers {
                return Err(Error::invalid(format!(
                    "{} driver positions given for {} drivers",
                    pos.len(),
                    self.supply.drivers
                )));
            }
            if let Some(p) = pos.iter().find(|p| !self.network.contains(**p)) {
                return Err(Error::invalid(format!("driver position {p} is not a network node")));
            }
        }
        let (lo, hi) = self.supply.pool_multiplier;
        if !(lo > S::zero() && lo <= hi && hi <= S::one()) {
            return Err(Error::invalid(format!("pooling multiplier range must satisfy 0 < min <= max <= 1, got [{lo}, {hi}]")));
        }
        self.pricing.validate()?;
        self.travellers.validate()?;
        self.shareability().validate()?;
        let mut probe = DriverProfile::new(DriverId(0));
        probe.cost_per_km = self.supply.cost_per_km;
        probe.value_of_time = self.supply.value_of_time;
        probe.choice = self.supply.choice;
        probe.validate()?;
        match &self.demand {
            DemandSource::Poisson { rate_per_hour, patience } => DemandConfig {
                rate_per_hour: *rate_per_hour,
                horizon: self.horizon,
                patience: *patience,
                seed: self.seed,
            }
            .validate()?,
            DemandSource::Requests(reqs) => {
                if let Some(r) = reqs.iter().find(|r| !(r.request_time >= S::zero() && r.request_time < self.horizon)) {
                    return Err(Error::invalid(format!(
                        "request {} at {} s lies outside the horizon [0, {})",
                        r.id, r.request_time, self.horizon
                    )));
                }
                let mut ids: Vec<RequestId> = reqs.iter().map(|r| r.id).collect();
                ids.sort();
                if ids.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::invalid("duplicate request id in demand"));
                }
            }
        }
        Ok(())
    }

    /// Materialises the request list.
    pub fn requests(&self) -> Result<Vec<TripRequest<S>>> {
        Ok(match &self.demand {
            DemandSource::Poisson { rate_per_hour, patience } => generate_demand(
                &self.network,
                &DemandConfig { rate_per_hour: *rate_per_hour, horizon: self.horizon, patience: *patience, seed: self.seed },
            )?,
            DemandSource::Requests(reqs) => {
                let mut reqs = reqs.clone();
                reqs.sort_by(|a, b| total_cmp(a.request_time, b.request_time));
                reqs
            }
        })
    }

    /// Driver profiles and start nodes drawn from the supply stream.
    pub fn drivers(&self) -> (Vec<DriverProfile<S>>, Vec<NodeId>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(STREAM_SUPPLY);
        let nodes: Vec<NodeId> = self.network.node_ids().collect();
        let (lo, hi) = self.supply.pool_multiplier;
        let mut profiles = Vec::with_capacity(self.supply.drivers);
        let mut positions = Vec::with_capacity(self.supply.drivers);
        for i in 0..self.supply.drivers {
            let drawn = nodes[rng.random_range(0..nodes.len())];
            positions.push(self.supply.positions.as_ref().map_or(drawn, |p| p[i]));
            let u: f64 = rng.random();
            let mut d = DriverProfile::new(DriverId(i as u32));
            d.cost_per_km = self.supply.cost_per_km;
            d.value_of_time = self.supply.value_of_time;
            d.pool_multiplier = if lo == hi { lo } else { lo + (hi - lo) * S::lit(u) };
            d.choice = self.supply.choice;
            d.decline_allowed = self.supply.decline_allowed;
            profiles.push(d);
        }
        (profiles, positions)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DriverStatus {
    Idle,
    ToPickup,
    Serving,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriverState<S> {
    pub profile: DriverProfile<S>,
    pub position: NodeId,
    pub status: DriverStatus,
    pub busy_until: S,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum RequestState {
    Pending,
    Waiting,
    Assigned,
    Aboard,
    Delivered,
    Expired,
}

#[derive(Copy, Clone, Debug)]
enum Payload {
    Arrival(usize),
    Expiry(usize),
    Dispatch(usize),
    Idle(usize),
    /// Stop `stop` of assignment `assignment`.
    Stop { assignment: usize, stop: usize, kind: StopKind },
}

impl Payload {
    fn kind(self) -> EventKind {
        match self {
            Payload::Arrival(_) => EventKind::RequestArrival,
            Payload::Expiry(_) => EventKind::PatienceExpired,
            Payload::Dispatch(_) | Payload::Idle(_) => EventKind::DriverDecision,
            Payload::Stop { kind: StopKind::Pickup, .. } => EventKind::PickupComplete,
            Payload::Stop { kind: StopKind::Dropoff, .. } => EventKind::DropoffComplete,
        }
    }
}

struct Queued<S> {
    time: S,
    kind: EventKind,
    seq: u64,
    payload: Payload,
}

impl<S: Scalar> Queued<S> {
    fn key(&self) -> (EventKind, u64) {
        (self.kind, self.seq)
    }
}

impl<S: Scalar> PartialEq for Queued<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<S: Scalar> Eq for Queued<S> {}
impl<S: Scalar> PartialOrd for Queued<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for Queued<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        total_cmp(self.time, other.time).then_with(|| self.key().cmp(&other.key()))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Decision {
    NoOptions,
    Declined,
    Taken,
}

/// Per-assignment bookkeeping for the member outcomes.
struct Assignment<S> {
    driver: usize,
    ride: usize,
    /// index into `EventLog::rides`
    served: usize,
    pickup_at: Vec<S>,
    dropoff_at: Vec<S>,
}

struct Sim<'a, S: Scalar> {
    net: &'a Network<S>,
    pricing: &'a PricingParams<S>,
    requests: Vec<TripRequest<S>>,
    state: Vec<RequestState>,
    rides: Vec<RideCandidate<S>>,
    /// ride indices per request index
    rides_of: Vec<Vec<usize>>,
    /// request indices per ride index
    members_of: Vec<Vec<usize>>,
    waiting_members: Vec<usize>,
    available: BTreeSet<usize>,
    /// waiting request indices; index order is request-time order
    waiting: BTreeSet<usize>,
    drivers: Vec<DriverState<S>>,
    ledgers: Vec<DriverLedger<S>>,
    assignments: Vec<Assignment<S>>,
    assignment_of: Vec<Option<usize>>,
    queue: BinaryHeap<Reverse<Queued<S>>>,
    seq: u64,
    now: S,
    rng: ChaCha8Rng,
    legs: HashMap<(NodeId, NodeId), S>,
    log: EventLog<S>,
}

/// Runs one scenario to completion. Identical configs give identical logs.
pub fn run<S: Scalar>(cfg: &ScenarioConfig<S>) -> Result<EventLog<S>> {
    cfg.validate()?;
    let requests = cfg.requests()?;
    let mut share = cfg.shareability();
    if cfg.pricing.policy == Policy::SoloOnly {
        // pooled rides would be filtered out anyway
        share.max_degree = 1;
    }
    let candidates = enumerate_rides(&requests, &cfg.network, &cfg.travellers, &share)?;
    let (profiles, positions) = cfg.drivers();
    ::log::debug!(
        "scenario seed {}: {} requests, {} candidate rides, {} drivers",
        cfg.seed,
        requests.len(),
        candidates.len(),
        profiles.len()
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(STREAM_CHOICE);
    let sim = Sim::new(cfg, requests, candidates, profiles, positions, rng);
    sim.run(cfg.horizon)
}

impl<'a, S: Scalar> Sim<'a, S> {
    fn new(
        cfg: &'a ScenarioConfig<S>,
        requests: Vec<TripRequest<S>>,
        candidates: Vec<RideCandidate<S>>,
        profiles: Vec<DriverProfile<S>>,
        positions: Vec<NodeId>,
        rng: ChaCha8Rng,
    ) -> Self {
        let index: HashMap<RequestId, usize> = requests.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
        let rides: Vec<RideCandidate<S>> = candidates
            .into_iter()
            .filter(|c| cfg.pricing.policy.admits(c.kind))
            .collect();
        let mut rides_of = vec![Vec::new(); requests.len()];
        let mut members_of = Vec::with_capacity(rides.len());
        for (k, r) in rides.iter().enumerate() {
            let members: Vec<usize> = r.members.iter().map(|m| index[m]).collect();
            for &m in &members {
                rides_of[m].push(k);
            }
            members_of.push(members);
        }
        let drivers: Vec<DriverState<S>> = profiles
            .into_iter()
            .zip(&positions)
            .map(|(profile, &position)| DriverState {
                profile,
                position,
                status: DriverStatus::Idle,
                busy_until: S::zero(),
            })
            .collect();
        let ledgers = drivers
            .iter()
            .map(|d| DriverLedger {
                driver: d.profile.id,
                start: d.position,
                n_rides: 0,
                n_pooled: 0,
                revenue: Default::default(),
                cost: Default::default(),
                profit: Default::default(),
                busy: S::zero(),
                idle: S::zero(),
            })
            .collect();
        let n = requests.len();
        let n_rides = rides.len();
        Self {
            net: &cfg.network,
            pricing: &cfg.pricing,
            requests,
            state: vec![RequestState::Pending; n],
            rides,
            rides_of,
            members_of,
            waiting_members: vec![0; n_rides],
            available: BTreeSet::new(),
            waiting: BTreeSet::new(),
            drivers,
            ledgers,
            assignments: Vec::new(),
            assignment_of: vec![None; n],
            queue: BinaryHeap::new(),
            seq: 0,
            now: S::zero(),
            rng,
            legs: HashMap::new(),
            log: EventLog {
                policy: cfg.pricing.policy,
                max_degree: cfg.max_degree,
                events: Vec::new(),
                outcomes: Vec::new(),
                rides: Vec::new(),
                legs: Vec::new(),
                drivers: Vec::new(),
                end_time: S::zero(),
            },
        }
    }

    fn distance(&mut self, a: NodeId, b: NodeId) -> Result<S> {
        if a == b {
            return Ok(S::zero());
        }
        if let Some(&d) = self.legs.get(&(a, b)) {
            return Ok(d);
        }
        let d = self.net.distance(a, b)?;
        self.legs.insert((a, b), d);
        Ok(d)
    }

    fn push(&mut self, time: S, payload: Payload) {
        let kind = payload.kind();
        self.seq += 1;
        self.queue.push(Reverse(Queued { time, kind, seq: self.seq, payload }));
    }

    fn record(&mut self, kind: EventKind, driver: Option<usize>, ride: Option<usize>, requests: Vec<RequestId>) {
        let id = self.log.events.len() as u64;
        self.log.events.push(SimEvent {
            id,
            time: self.now,
            kind,
            driver: driver.map(|d| self.drivers[d].profile.id),
            ride: ride.map(|r| self.rides[r].id),
            requests,
        });
    }

    fn run(mut self, horizon: S) -> Result<EventLog<S>> {
        for i in 0..self.requests.len() {
            self.push(self.requests[i].request_time, Payload::Arrival(i));
        }
        while let Some(Reverse(ev)) = self.queue.pop() {
            debug_assert!(ev.time >= self.now, "event queue went backwards");
            self.now = ev.time;
            match ev.payload {
                Payload::Arrival(i) => self.on_arrival(i),
                Payload::Expiry(i) => self.on_expiry(i),
                Payload::Dispatch(i) => self.on_dispatch(i)?,
                Payload::Idle(d) => {
                    if self.drivers[d].status == DriverStatus::Idle {
                        self.on_idle(d)?;
                    }
                }
                Payload::Stop { assignment, stop, .. } => self.on_stop(assignment, stop),
            }
        }
        self.finish(horizon)
    }

    fn on_arrival(&mut self, i: usize) {
        self.state[i] = RequestState::Waiting;
        self.waiting.insert(i);
        for k in 0..self.rides_of[i].len() {
            let ride = self.rides_of[i][k];
            self.waiting_members[ride] += 1;
            if self.waiting_members[ride] == self.members_of[ride].len() {
                self.available.insert(ride);
            }
        }
        let r = &self.requests[i];
        let (id, expiry) = (r.id, r.request_time + r.patience);
        self.record(EventKind::RequestArrival, None, None, vec![id]);
        self.push(expiry, Payload::Expiry(i));
        self.push(self.now, Payload::Dispatch(i));
    }

    /// Removes a request from the waiting pool.
    fn withdraw(&mut self, i: usize) {
        self.waiting.remove(&i);
        for k in 0..self.rides_of[i].len() {
            let ride = self.rides_of[i][k];
            if self.waiting_members[ride] == self.members_of[ride].len() {
                self.available.remove(&ride);
            }
            self.waiting_members[ride] -= 1;
        }
    }

    fn on_expiry(&mut self, i: usize) {
        if self.state[i] != RequestState::Waiting {
            return;
        }
        self.withdraw(i);
        self.state[i] = RequestState::Expired;
        self.record(EventKind::PatienceExpired, None, None, vec![self.requests[i].id]);
    }

    /// Offers request `i` to the nearest idle driver that has a feasible
    /// ride for it.
    fn on_dispatch(&mut self, i: usize) -> Result<()> {
        if self.state[i] != RequestState::Waiting {
            return Ok(());
        }
        let origin = self.requests[i].origin;
        let mut idle = Vec::new();
        for d in 0..self.drivers.len() {
            if self.drivers[d].status == DriverStatus::Idle {
                let pos = self.drivers[d].position;
                idle.push((self.distance(pos, origin)?, d));
            }
        }
        idle.sort_by(|a, b| total_cmp(a.0, b.0).then(a.1.cmp(&b.1)));
        for (_, d) in idle {
            if self.decide(d, i)? != Decision::NoOptions {
                break;
            }
        }
        Ok(())
    }

    /// Offers the waiting requests, oldest first, to driver `d`.
    fn on_idle(&mut self, d: usize) -> Result<()> {
        let waiting: Vec<usize> = self.waiting.iter().copied().collect();
        for i in waiting {
            if self.drivers[d].status != DriverStatus::Idle {
                break;
            }
            if self.state[i] == RequestState::Waiting {
                self.decide(d, i)?;
            }
        }
        Ok(())
    }

    /// Offers idle driver `d` the available rides containing request `i`.
    fn decide(&mut self, d: usize, i: usize) -> Result<Decision> {
        let pos = self.drivers[d].position;
        let speed = self.net.speed();
        let mut pickups = Vec::new();
        for idx in 0..self.rides_of[i].len() {
            let k = self.rides_of[i][idx];
            if !self.available.contains(&k) {
                continue;
            }
            let first = self.rides[k].first_stop();
            let dist = self.distance(pos, first)?;
            let start = self.now + dist / speed;
            // every member must be picked up within their patience
            let feasible = self.rides[k].timing.iter().zip(&self.members_of[k]).all(|(t, &m)| {
                let r = &self.requests[m];
                start + t.pickup_offset <= r.request_time + r.patience
            });
            if feasible {
                pickups.push((k, dist));
            }
        }
        if pickups.is_empty() {
            return Ok(Decision::NoOptions);
        }
        let profile = &self.drivers[d].profile;
        let priced: Vec<_> = pickups
            .iter()
            .map(|&(k, dist)| price_with_pickup(&self.rides[k], dist, self.pricing, profile, speed))
            .collect();
        let choice = choose_ride(&priced, profile, &mut self.rng)?;
        let Some(c) = choice else {
            let id = self.requests[i].id;
            self.record(EventKind::DriverDecision, Some(d), None, vec![id]);
            return Ok(Decision::Declined);
        };
        let p = &priced[c];
        let served = ServedRide {
            ride: p.candidate.id,
            driver: profile.id,
            kind: p.candidate.kind,
            members: p.candidate.members.clone(),
            fares: p.fares.clone(),
            total_fare: p.total_fare,
            commission: p.commission,
            driver_revenue: p.driver_revenue,
            operating_cost: p.operating_cost,
            profit: p.profit,
            decided_at: self.now,
            pickup_distance: p.pickup_distance,
            pickup_time: p.pickup_time,
            service_distance: p.candidate.service_distance,
            service_time: p.candidate.service_time,
        };
        let ride = pickups[c].0;
        drop(priced);
        self.advance(d, ride, served)?;
        Ok(Decision::Taken)
    }

    /// Commits driver `d` to ride `k`: locks its members and schedules one
    /// event per stop.
    fn advance(&mut self, d: usize, k: usize, served: ServedRide<S>) -> Result<()> {
        for idx in 0..self.members_of[k].len() {
            let m = self.members_of[k][idx];
            if self.state[m] != RequestState::Waiting {
                return Err(Error::Internal(format!(
                    "request {} assigned while not waiting",
                    self.requests[m].id
                )));
            }
            self.withdraw(m);
            self.state[m] = RequestState::Assigned;
        }
        let speed = self.net.speed();
        let driver_id = self.drivers[d].profile.id;
        let members = served.members.clone();
        self.record(EventKind::DriverDecision, Some(d), Some(k), members);

        // pickup leg, then one leg per consecutive stop pair
        let a = self.assignments.len();
        let mut at = self.drivers[d].position;
        let mut t = self.now;
        let mut pickup_at = vec![S::zero(); self.members_of[k].len()];
        let mut dropoff_at = pickup_at.clone();
        let stops = self.rides[k].stops.clone();
        for (j, stop) in stops.iter().enumerate() {
            let length = self.distance(at, stop.node)?;
            let arrive = t + length / speed;
            if at != stop.node {
                self.log.legs.push(DriveLeg { driver: driver_id, from: at, to: stop.node, depart: t, arrive, length });
            }
            self.ledgers[d].busy = self.ledgers[d].busy + length / speed;
            t = arrive;
            at = stop.node;
            let slot = self.rides[k].members.binary_search(&stop.request).expect("stop of a member");
            match stop.kind {
                StopKind::Pickup => pickup_at[slot] = t,
                StopKind::Dropoff => dropoff_at[slot] = t,
            }
            self.push(t, Payload::Stop { assignment: a, stop: j, kind: stop.kind });
        }

        let driver = &mut self.drivers[d];
        driver.status = DriverStatus::ToPickup;
        driver.busy_until = t;

        for &m in &self.members_of[k] {
            self.assignment_of[m] = Some(a);
        }
        self.assignments.push(Assignment { driver: d, ride: k, served: self.log.rides.len(), pickup_at, dropoff_at });
        self.log.rides.push(served);
        Ok(())
    }

    fn on_stop(&mut self, a: usize, j: usize) {
        let (d, k, served) = {
            let asg = &self.assignments[a];
            (asg.driver, asg.ride, asg.served)
        };
        let stop = self.rides[k].stops[j];
        let m = self.members_of[k][self.rides[k].members.binary_search(&stop.request).expect("member")];
        self.drivers[d].position = stop.node;
        match stop.kind {
            StopKind::Pickup => {
                self.drivers[d].status = DriverStatus::Serving;
                self.state[m] = RequestState::Aboard;
                self.record(EventKind::PickupComplete, Some(d), Some(k), vec![stop.request]);
            }
            StopKind::Dropoff => {
                self.state[m] = RequestState::Delivered;
                self.record(EventKind::DropoffComplete, Some(d), Some(k), vec![stop.request]);
                if j + 1 == self.rides[k].stops.len() {
                    let served = &self.log.rides[served];
                    let ledger = &mut self.ledgers[d];
                    ledger.n_rides += 1;
                    ledger.n_pooled += u32::from(served.kind == RideKind::Pooled);
                    ledger.revenue += served.driver_revenue;
                    ledger.cost += served.operating_cost;
                    ledger.profit += served.profit;
                    self.drivers[d].status = DriverStatus::Idle;
                    self.push(self.now, Payload::Idle(d));
                }
            }
        }
    }

    fn finish(mut self, horizon: S) -> Result<EventLog<S>> {
        let end = self.now.max(horizon);
        let mut outcomes = Vec::with_capacity(self.requests.len());
        for (i, r) in self.requests.iter().enumerate() {
            let outcome = match (self.state[i], self.assignment_of[i]) {
                (RequestState::Delivered, Some(a)) => {
                    let a = &self.assignments[a];
                    let ride = &self.rides[a.ride];
                    let slot = ride.members.binary_search(&r.id).expect("member");
                    let served = &self.log.rides[a.served];
                    RequestOutcome {
                        request: r.id,
                        request_time: r.request_time,
                        outcome: Outcome::Served { driver: self.drivers[a.driver].profile.id, ride: ride.id },
                        wait: Some(a.pickup_at[slot] - r.request_time),
                        in_vehicle: Some(a.dropoff_at[slot] - a.pickup_at[slot]),
                        fare: Some(served.fares[slot]),
                    }
                }
                (RequestState::Expired, _) => RequestOutcome {
                    request: r.id,
                    request_time: r.request_time,
                    outcome: Outcome::Expired,
                    wait: None,
                    in_vehicle: None,
                    fare: None,
                },
                (s, _) => {
                    return Err(Error::Internal(format!("request {} ended in state {s:?}", r.id)));
                }
            };
            outcomes.push(outcome);
        }
        outcomes.sort_by_key(|o| o.request);
        for l in &mut self.ledgers {
            l.idle = end - l.busy;
        }
        self.log.outcomes = outcomes;
        self.log.drivers = self.ledgers;
        self.log.end_time = end;
        Ok(self.log)
    }
}
