#![allow(dead_code)]

use std::collections::BTreeSet;

use poolsim::shareability::StopKind;
use poolsim::{Network, NodeId, RequestId, RideCandidate, ShareabilityConfig, TravellerPrefs, TripRequest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// (members, stop sequence as (request, pickup?)) of a pooled ride.
pub type RideKey = (Vec<RequestId>, Vec<(RequestId, bool)>);

pub fn key(r: &RideCandidate) -> RideKey {
    (r.members.clone(), r.stops.iter().map(|s| (s.request, s.kind == StopKind::Pickup)).collect())
}

pub fn random_batch(net: &Network, rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Vec<TripRequest> {
    let ids: Vec<NodeId> = net.node_ids().collect();
    (0..n)
        .map(|i| {
            let o = ids[rng.random_range(0..ids.len())];
            let mut d = o;
            while d == o {
                d = ids[rng.random_range(0..ids.len())];
            }
            let t = (rng.random::<f64>() * spread * 10.0).round() / 10.0;
            TripRequest::new(RequestId(i as u64), o, d, t, 600.0, net).unwrap()
        })
        .collect()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every permutation of the 2k stop tokens in which each pickup precedes
/// its dropoff, deduplicated.
fn valid_sequences(k: usize) -> Vec<Vec<(usize, bool)>> {
    let tokens: Vec<(usize, bool)> = (0..k).flat_map(|m| [(m, true), (m, false)]).collect();
    let mut out = BTreeSet::new();
    let mut perm: Vec<usize> = (0..tokens.len()).collect();
    permute(&mut perm, 0, &mut |p| {
        let seq: Vec<(usize, bool)> = p.iter().map(|&i| tokens[i]).collect();
        let ok = (0..k).all(|m| {
            let pu = seq.iter().position(|&t| t == (m, true)).unwrap();
            let dr = seq.iter().position(|&t| t == (m, false)).unwrap();
            pu < dr
        });
        if ok {
            out.insert(seq);
        }
    });
    out.into_iter().collect()
}

fn permute(p: &mut Vec<usize>, i: usize, f: &mut impl FnMut(&[usize])) {
    if i == p.len() {
        f(p);
        return;
    }
    for j in i..p.len() {
        p.swap(i, j);
        permute(p, i + 1, f);
        p.swap(i, j);
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            out.push((0..n).filter(|i| mask >> i & 1 == 1).collect());
        }
    }
    out
}

/// Exhaustive search for attractive pooled rides.
pub fn brute_force(
    batch: &[TripRequest],
    net: &Network,
    prefs: &TravellerPrefs,
    cfg: &ShareabilityConfig,
) -> BTreeSet<RideKey> {
    let mut sorted: Vec<&TripRequest> = batch.iter().collect();
    sorted.sort_by_key(|r| r.id);
    let speed = net.speed();
    let solo = |r: &TripRequest| -(cfg.fare_per_km * (r.distance / 1000.0)) - prefs.value_of_time * r.travel_time;
    let mut found = BTreeSet::new();
    for k in 2..=cfg.max_degree.min(sorted.len()) {
        let seqs = valid_sequences(k);
        for set in subsets(sorted.len(), k) {
            let m: Vec<&TripRequest> = set.iter().map(|&i| sorted[i]).collect();
            let latest = m.iter().map(|r| r.request_time).fold(f64::MIN, f64::max);
            let earliest = m.iter().map(|r| r.request_time).fold(f64::MAX, f64::min);
            if latest - earliest > cfg.window {
                continue;
            }
            for seq in &seqs {
                let node = |&(i, pu): &(usize, bool)| if pu { m[i].origin } else { m[i].destination };
                let mut at = vec![0.0; 2 * k];
                let mut dist = 0.0;
                for j in 1..seq.len() {
                    dist += net.distance(node(&seq[j - 1]), node(&seq[j])).unwrap();
                    at[j] = dist / speed;
                }
                let when = |t: (usize, bool)| at[seq.iter().position(|&s| s == t).unwrap()];
                let happy = (0..k).all(|i| {
                    let pick = when((i, true));
                    let drop = when((i, false));
                    let perceived = (drop - pick) + ((latest - m[i].request_time) + pick);
                    let pooled = -(cfg.fare_per_km * (1.0 - cfg.discount) * (m[i].distance / 1000.0))
                        - prefs.value_of_time * prefs.sharing_penalty * perceived;
                    pooled >= solo(m[i])
                });
                if happy {
                    found.insert((m.iter().map(|r| r.id).collect(), seq.iter().map(|&(i, pu)| (m[i].id, pu)).collect()));
                }
            }
        }
    }
    found
}

pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Checks a priced ride against the pricing formulas evaluated directly
/// in floating point: exact identities between the cent amounts, and every
/// rounded amount within half a cent of its real value.
pub fn check_priced(
    p: &poolsim::PricedRide,
    members: &[&TripRequest],
    params: &poolsim::PricingParams,
    driver: &poolsim::DriverProfile,
    speed: f64,
) -> Result<(), String> {
    let half = 0.5 + 1e-6;
    let pooled = p.candidate.is_pooled();
    let mut fare_sum = 0;
    for (m, f) in members.iter().zip(&p.fares) {
        let exact = 100.0 * params.fare_per_km * if pooled { 1.0 - params.discount } else { 1.0 } * m.distance / 1000.0;
        if (f.0 as f64 - exact).abs() > half {
            return Err(format!("fare {f} vs {exact} cents"));
        }
        fare_sum += f.0;
    }
    if p.total_fare.0 != fare_sum {
        return Err("total fare is not the sum of member fares".into());
    }
    let revenue = (1.0 - params.commission) * p.total_fare.0 as f64;
    if (p.driver_revenue.0 as f64 - revenue).abs() > half {
        return Err(format!("revenue {} vs {revenue}", p.driver_revenue));
    }
    if p.commission.0 + p.driver_revenue.0 != p.total_fare.0 {
        return Err("commission + revenue != fare".into());
    }
    let dist = p.pickup_distance + p.candidate.service_distance;
    let time = p.pickup_distance / speed + p.candidate.service_time;
    let cost = 100.0 * (driver.cost_per_km * dist / 1000.0 + driver.value_of_time * time);
    if (p.operating_cost.0 as f64 - cost).abs() > half {
        return Err(format!("cost {} vs {cost}", p.operating_cost));
    }
    if p.profit.0 != p.driver_revenue.0 - p.operating_cost.0 {
        return Err("profit != revenue - cost".into());
    }
    let mult = if pooled { driver.pool_multiplier } else { 1.0 };
    if (p.effective_utility - mult * p.profit.0 as f64 / 100.0).abs() > 1e-9 {
        return Err("effective utility".into());
    }
    if !p.identities_hold() {
        return Err("identities_hold() is false".into());
    }
    Ok(())
}

/// Random priced-ride inputs: a batch, its rides, pricing and a driver.
pub struct PricingCase {
    pub net: Network,
    pub batch: Vec<TripRequest>,
    pub rides: Vec<RideCandidate>,
    pub params: poolsim::PricingParams,
    pub driver: poolsim::DriverProfile,
    pub position: NodeId,
}

pub fn pricing_case(rng: &mut ChaCha8Rng) -> PricingCase {
    let net = Network::grid(rng.random_range(2..7), rng.random_range(2..7), rng.random_range(50.0..1500.0)).unwrap();
    let n = rng.random_range(1..6);
    let batch = random_batch(&net, rng, n, 300.0);
    let prefs = TravellerPrefs { value_of_time: rng.random_range(0.0..0.003), sharing_penalty: 1.0 };
    let mut params = poolsim::PricingParams::new(poolsim::Policy::ProfitMax);
    params.fare_per_km = rng.random_range(0.5..3.0);
    params.discount = rng.random_range(0.0..0.6);
    params.commission = rng.random_range(0.0..0.5);
    let cfg = ShareabilityConfig { discount: params.discount, fare_per_km: params.fare_per_km, ..Default::default() };
    let rides = poolsim::enumerate_rides(&batch, &net, &prefs, &cfg).unwrap();
    let mut driver = poolsim::DriverProfile::new(poolsim::DriverId(0));
    driver.cost_per_km = rng.random_range(0.0..1.0);
    driver.value_of_time = rng.random_range(0.0..0.01);
    driver.pool_multiplier = rng.random_range(0.1..=1.0);
    let ids: Vec<NodeId> = net.node_ids().collect();
    let position = ids[rng.random_range(0..ids.len())];
    PricingCase { net, batch, rides, params, driver, position }
}
