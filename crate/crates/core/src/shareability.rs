//! Exact enumeration of rides that every member finds attractive.
//!
//! A pooled ride is kept when each traveller's pooled utility is at least
//! their solo utility. Pairs are checked exhaustively; a set of `k > 2`
//! travellers is only examined when it extends an attractive set of size
//! `k - 1`. Dropping a member from an attractive ride never makes the rest
//! worse off (shortest paths obey the triangle inequality), so the
//! extension rule loses nothing.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::demand::{RequestId, TripRequest};
use crate::error::{Error, Result};
use crate::network::{Network, NodeId};
use crate::scalar::{total_cmp, Scalar};

/// Behavioural parameters of travellers.
#[derive(Clone, Debug, PartialEq)]
pub struct TravellerPrefs<S = f64> {
    /// Euro per second of travel or waiting.
    pub value_of_time: S,
    /// Multiplier (>= 1) on time spent in a pooled ride.
    pub sharing_penalty: S,
}

impl<S: Scalar> Default for TravellerPrefs<S> {
    fn default() -> Self {
        Self { value_of_time: S::lit(0.0025), sharing_penalty: S::lit(1.3) }
    }
}

impl<S: Scalar> TravellerPrefs<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.value_of_time >= S::zero() && self.value_of_time.is_finite()) {
            return Err(Error::invalid(format!("value of time must be >= 0, got {}", self.value_of_time)));
        }
        if !(self.sharing_penalty >= S::one() && self.sharing_penalty.is_finite()) {
            return Err(Error::invalid(format!("sharing penalty must be >= 1, got {}", self.sharing_penalty)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShareabilityConfig<S = f64> {
    /// Largest number of travellers in one ride.
    pub max_degree: usize,
    /// Fare discount for pooled travellers, in `[0, 1)`.
    pub discount: S,
    /// Euro per km of direct trip distance.
    pub fare_per_km: S,
    /// Seconds; members' request times may differ by at most this much.
    pub window: S,
}

impl<S: Scalar> Default for ShareabilityConfig<S> {
    fn default() -> Self {
        Self {
            max_degree: 3,
            discount: S::lit(0.25),
            fare_per_km: S::lit(1.5),
            window: S::lit(600.0),
        }
    }
}

impl<S: Scalar> ShareabilityConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.max_degree < 1 {
            return Err(Error::invalid("max pooling degree must be >= 1"));
        }
        if !(self.discount >= S::zero() && self.discount < S::one()) {
            return Err(Error::invalid(format!("discount must be in [0, 1), got {}", self.discount)));
        }
        if !(self.fare_per_km > S::zero() && self.fare_per_km.is_finite()) {
            return Err(Error::invalid(format!("fare per km must be positive, got {}", self.fare_per_km)));
        }
        if self.window.is_nan() || self.window < S::zero() {
            return Err(Error::invalid(format!("pooling window must be >= 0, got {}", self.window)));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RideId(pub u64);

impl fmt::Display for RideId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum RideKind {
    Solo,
    Pooled,
}

impl RideKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RideKind::Solo => "solo",
            RideKind::Pooled => "pooled",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StopKind {
    Pickup,
    Dropoff,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Stop {
    pub request: RequestId,
    pub node: NodeId,
    pub kind: StopKind,
}

/// Per-member schedule inside a ride, relative to the first stop.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct MemberTiming<S> {
    pub request: RequestId,
    /// Seconds from the first stop to this member's pickup.
    pub pickup_offset: S,
    /// Seconds from this member's pickup to their dropoff.
    pub in_vehicle: S,
    /// Seconds between this member's request and pickup if the ride starts
    /// as soon as all members have requested.
    pub departure_offset: S,
    /// Direct shortest-path meters of this member's trip (fare basis).
    pub direct_distance: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RideCandidate<S = f64> {
    pub id: RideId,
    /// Sorted ascending.
    pub members: Vec<RequestId>,
    pub kind: RideKind,
    pub stops: Vec<Stop>,
    /// Meters from the first to the last stop.
    pub service_distance: S,
    pub service_time: S,
    /// Parallel to `members`.
    pub timing: Vec<MemberTiming<S>>,
}

impl<S: Scalar> RideCandidate<S> {
    pub fn degree(&self) -> usize {
        self.members.len()
    }

    pub fn is_pooled(&self) -> bool {
        self.kind == RideKind::Pooled
    }

    pub fn first_stop(&self) -> NodeId {
        self.stops[0].node
    }

    pub fn last_stop(&self) -> NodeId {
        self.stops[self.stops.len() - 1].node
    }

    pub fn timing_of(&self, request: RequestId) -> Option<&MemberTiming<S>> {
        self.members.binary_search(&request).ok().map(|i| &self.timing[i])
    }

    pub fn contains(&self, request: RequestId) -> bool {
        self.members.binary_search(&request).is_ok()
    }

    /// Cumulative seconds from the first stop to each stop.
    pub fn stop_offsets(&self, net: &Network<S>) -> Result<Vec<S>> {
        let mut t = S::zero();
        let mut out = Vec::with_capacity(self.stops.len());
        out.push(t);
        for w in self.stops.windows(2) {
            t = t + net.travel_time(w[0].node, w[1].node)?;
            out.push(t);
        }
        Ok(out)
    }
}

/// Utility of `req` for travelling in `ride`, in euro (higher is better).
///
/// Solo: `-fare_per_km * l - vot * t`.
/// Pooled: `-fare_per_km * (1 - discount) * l - vot * penalty * (in_vehicle + departure_offset)`.
pub fn traveller_utility<S: Scalar>(
    req: &TripRequest<S>,
    prefs: &TravellerPrefs<S>,
    ride: &RideCandidate<S>,
    cfg: &ShareabilityConfig<S>,
) -> Result<S> {
    let timing = ride.timing_of(req.id).ok_or_else(|| {
        Error::invalid(format!("request {} is not a member of ride {}", req.id, ride.id))
    })?;
    Ok(match ride.kind {
        RideKind::Solo => solo_utility(req, prefs, cfg),
        RideKind::Pooled => pooled_utility(req, prefs, cfg, timing.in_vehicle + timing.departure_offset),
    })
}

pub fn solo_utility<S: Scalar>(req: &TripRequest<S>, prefs: &TravellerPrefs<S>, cfg: &ShareabilityConfig<S>) -> S {
    -(cfg.fare_per_km * km(req.distance)) - prefs.value_of_time * req.travel_time
}

fn pooled_utility<S: Scalar>(
    req: &TripRequest<S>,
    prefs: &TravellerPrefs<S>,
    cfg: &ShareabilityConfig<S>,
    perceived_time: S,
) -> S {
    -(cfg.fare_per_km * (S::one() - cfg.discount) * km(req.distance))
        - prefs.value_of_time * prefs.sharing_penalty * perceived_time
}

fn km<S: Scalar>(meters: S) -> S {
    meters / S::lit(1000.0)
}

/// Single-member ride on the direct route.
pub fn solo_ride<S: Scalar>(id: RideId, req: &TripRequest<S>) -> RideCandidate<S> {
    RideCandidate {
        id,
        members: vec![req.id],
        kind: RideKind::Solo,
        stops: vec![
            Stop { request: req.id, node: req.origin, kind: StopKind::Pickup },
            Stop { request: req.id, node: req.destination, kind: StopKind::Dropoff },
        ],
        service_distance: req.distance,
        service_time: req.travel_time,
        timing: vec![MemberTiming {
            request: req.id,
            pickup_offset: S::zero(),
            in_vehicle: req.travel_time,
            departure_offset: S::zero(),
            direct_distance: req.distance,
        }],
    }
}

/// Every stop sequence over `k` members (local indices) in which each
/// member is picked up before being dropped off, in lexicographic order of
/// `(member, kind)` tokens.
pub fn stop_orderings(k: usize) -> Vec<Vec<(usize, StopKind)>> {
    fn rec(k: usize, state: &mut [u8], cur: &mut Vec<(usize, StopKind)>, out: &mut Vec<Vec<(usize, StopKind)>>) {
        if cur.len() == 2 * k {
            out.push(cur.clone());
            return;
        }
        for m in 0..k {
            let kind = match state[m] {
                0 => StopKind::Pickup,
                1 => StopKind::Dropoff,
                _ => continue,
            };
            state[m] += 1;
            cur.push((m, kind));
            rec(k, state, cur, out);
            cur.pop();
            state[m] -= 1;
        }
    }
    let mut out = Vec::new();
    rec(k, &mut vec![0; k], &mut Vec::with_capacity(2 * k), &mut out);
    out
}

struct LegCache<'a, S: Scalar> {
    net: &'a Network<S>,
    legs: RefCell<HashMap<(NodeId, NodeId), S>>,
}

impl<S: Scalar> LegCache<'_, S> {
    fn distance(&self, a: NodeId, b: NodeId) -> Result<S> {
        if a == b {
            return Ok(S::zero());
        }
        if let Some(&d) = self.legs.borrow().get(&(a, b)) {
            return Ok(d);
        }
        let d = self.net.distance(a, b)?;
        self.legs.borrow_mut().insert((a, b), d);
        Ok(d)
    }
}

struct Evaluator<'a, S: Scalar> {
    requests: &'a [&'a TripRequest<S>],
    solo_utils: Vec<S>,
    prefs: &'a TravellerPrefs<S>,
    cfg: &'a ShareabilityConfig<S>,
    legs: LegCache<'a, S>,
    orderings: Vec<Vec<Vec<(usize, StopKind)>>>,
}

impl<S: Scalar> Evaluator<'_, S> {
    /// All attractive orderings of the member set (indices into `requests`,
    /// ascending by request id).
    fn attractive(&self, set: &[usize]) -> Result<Vec<RideCandidate<S>>> {
        let k = set.len();
        let members: Vec<&TripRequest<S>> = set.iter().map(|&i| self.requests[i]).collect();
        let start = members.iter().map(|r| r.request_time).fold(S::neg_infinity(), S::max);
        let earliest = members.iter().map(|r| r.request_time).fold(S::infinity(), S::min);
        if start - earliest > self.cfg.window {
            return Ok(Vec::new());
        }
        let speed = self.legs.net.speed();
        // stop 2m is member m's origin, 2m + 1 its destination
        let slot = |&(m, kind): &(usize, StopKind)| 2 * m + usize::from(kind == StopKind::Dropoff);
        let nodes: Vec<NodeId> = members.iter().flat_map(|r| [r.origin, r.destination]).collect();
        let n = nodes.len();
        let mut leg = vec![S::zero(); n * n];
        for a in 0..n {
            for b in 0..n {
                leg[a * n + b] = self.legs.distance(nodes[a], nodes[b])?;
            }
        }
        let mut out = Vec::new();
        let mut pick = vec![S::zero(); k];
        let mut drop = vec![S::zero(); k];
        'order: for ordering in &self.orderings[k] {
            let node = |tok: &(usize, StopKind)| nodes[slot(tok)];
            let mut dist = S::zero();
            let mut prev = slot(&ordering[0]);
            for tok in ordering {
                let here = slot(tok);
                dist = dist + leg[prev * n + here];
                prev = here;
                let time = dist / speed;
                match tok.1 {
                    StopKind::Pickup => pick[tok.0] = time,
                    StopKind::Dropoff => {
                        drop[tok.0] = time;
                        let m = tok.0;
                        let req = members[m];
                        let trip = (drop[m] - pick[m]) + ((start - req.request_time) + pick[m]);
                        if pooled_utility(req, self.prefs, self.cfg, trip) < self.solo_utils[set[m]] {
                            continue 'order;
                        }
                    }
                }
            }
            let time = dist / speed;
            let mut timing = Vec::with_capacity(k);
            for (m, req) in members.iter().enumerate() {
                let in_vehicle = drop[m] - pick[m];
                let departure_offset = (start - req.request_time) + pick[m];
                timing.push(MemberTiming {
                    request: req.id,
                    pickup_offset: pick[m],
                    in_vehicle,
                    departure_offset,
                    direct_distance: req.distance,
                });
            }
            out.push(RideCandidate {
                id: RideId(0),
                members: members.iter().map(|r| r.id).collect(),
                kind: RideKind::Pooled,
                stops: ordering
                    .iter()
                    .map(|tok| Stop { request: members[tok.0].id, node: node(tok), kind: tok.1 })
                    .collect(),
                service_distance: dist,
                service_time: time,
                timing,
            });
        }
        Ok(out)
    }
}

/// Every solo ride plus every attractive pooled ride (all attractive stop
/// orderings) of at most `cfg.max_degree` members. Output is sorted by
/// (degree, member ids, stop ordering) and ride ids are assigned in that
/// order starting at 0.
pub fn enumerate_rides<S: Scalar>(
    requests: &[TripRequest<S>],
    net: &Network<S>,
    prefs: &TravellerPrefs<S>,
    cfg: &ShareabilityConfig<S>,
) -> Result<Vec<RideCandidate<S>>> {
    prefs.validate()?;
    cfg.validate()?;
    let mut by_id: Vec<&TripRequest<S>> = requests.iter().collect();
    by_id.sort_by_key(|r| r.id);
    if by_id.windows(2).any(|w| w[0].id == w[1].id) {
        return Err(Error::invalid("duplicate request id in batch"));
    }

    let mut rides: Vec<RideCandidate<S>> = by_id.iter().map(|r| solo_ride(RideId(0), r)).collect();

    if cfg.max_degree >= 2 && by_id.len() >= 2 {
        let eval = Evaluator {
            requests: &by_id,
            solo_utils: by_id.iter().map(|r| solo_utility(r, prefs, cfg)).collect(),
            prefs,
            cfg,
            legs: LegCache { net, legs: RefCell::new(HashMap::new()) },
            orderings: (0..=cfg.max_degree).map(stop_orderings).collect(),
        };

        // indices into by_id, ordered by request time
        let mut by_time: Vec<usize> = (0..by_id.len()).collect();
        by_time.sort_by(|&a, &b| total_cmp(by_id[a].request_time, by_id[b].request_time).then(a.cmp(&b)));
        let times: Vec<S> = by_time.iter().map(|&i| by_id[i].request_time).collect();
        // time-sorted candidates whose request time lies in [lo, hi]
        let within = |lo: S, hi: S| {
            let a = times.partition_point(|&t| t < lo);
            let b = times.partition_point(|&t| t <= hi);
            by_time[a..b].iter().copied()
        };

        let mut frontier: BTreeSet<Vec<usize>> = BTreeSet::new();
        for (pos, &i) in by_time.iter().enumerate() {
            let t = times[pos];
            for j in within(t, t + cfg.window) {
                if j == i || (times[pos] == by_id[j].request_time && j < i) {
                    continue;
                }
                let set = if i < j { vec![i, j] } else { vec![j, i] };
                let found = eval.attractive(&set)?;
                if !found.is_empty() {
                    rides.extend(found);
                    frontier.insert(set);
                }
            }
        }

        for _degree in 3..=cfg.max_degree {
            let mut candidates: BTreeSet<Vec<usize>> = BTreeSet::new();
            for set in &frontier {
                let hi = set.iter().map(|&i| by_id[i].request_time).fold(S::neg_infinity(), S::max);
                let lo = set.iter().map(|&i| by_id[i].request_time).fold(S::infinity(), S::min);
                for r in within(hi - cfg.window, lo + cfg.window) {
                    if let Err(at) = set.binary_search(&r) {
                        let mut grown = set.clone();
                        grown.insert(at, r);
                        candidates.insert(grown);
                    }
                }
            }
            let mut next = BTreeSet::new();
            for set in candidates {
                let found = eval.attractive(&set)?;
                if !found.is_empty() {
                    rides.extend(found);
                    next.insert(set);
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
    }

    // stop sequences within a member set were produced in ordering order, so a
    // stable sort on (degree, members) keeps them in that order
    rides.sort_by(|a, b| a.degree().cmp(&b.degree()).then_with(|| a.members.cmp(&b.members)));
    for (i, r) in rides.iter_mut().enumerate() {
        r.id = RideId(i as u64);
    }
    Ok(rides)
}

/// Drops every ride that contains a served traveller.
pub fn prune_served<S: Scalar>(candidates: &[RideCandidate<S>], served: &HashSet<RequestId>) -> Vec<RideCandidate<S>> {
    candidates
        .iter()
        .filter(|r| !r.members.iter().any(|m| served.contains(m)))
        .cloned()
        .collect()
}

/// Writes `ride_id,kind,member_ids,service_distance_m,service_time_s`.
pub fn write_rides<S: Scalar>(path: impl AsRef<Path>, rides: &[RideCandidate<S>]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "ride_id,kind,member_ids,service_distance_m,service_time_s")?;
    for r in rides {
        let members: Vec<String> = r.members.iter().map(ToString::to_string).collect();
        writeln!(
            w,
            "{},{},{},{:.3},{:.3}",
            r.id,
            r.kind.as_str(),
            members.join(";"),
            r.service_distance,
            r.service_time
        )?;
    }
    w.flush()?;
    Ok(())
}
