//! Traveller requests: Poisson arrivals with uniform origin/destination
//! pairs, or a request file.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, NodeId};
use crate::scalar::{total_cmp, Scalar};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestId(pub u64);

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One traveller's trip. `distance` and `travel_time` are the direct
/// shortest-path values and are always computed from the network.
#[derive(Clone, Debug, PartialEq)]
pub struct TripRequest<S = f64> {
    pub id: RequestId,
    pub origin: NodeId,
    pub destination: NodeId,
    /// Seconds from simulation start.
    pub request_time: S,
    /// Maximum seconds from request to first pickup.
    pub patience: S,
    /// Direct route length in meters.
    pub distance: S,
    /// Direct route duration in seconds.
    pub travel_time: S,
}

impl<S: Scalar> TripRequest<S> {
    pub fn new(
        id: RequestId,
        origin: NodeId,
        destination: NodeId,
        request_time: S,
        patience: S,
        net: &Network<S>,
    ) -> Result<Self> {
        if origin == destination {
            return Err(Error::validation(format!(
                "request {id}: origin equals destination ({origin})"
            )));
        }
        if !(patience > S::zero() && patience.is_finite()) {
            return Err(Error::validation(format!(
                "request {id}: patience must be positive, got {patience}"
            )));
        }
        if !(request_time >= S::zero() && request_time.is_finite()) {
            return Err(Error::validation(format!(
                "request {id}: request time must be non-negative, got {request_time}"
            )));
        }
        for node in [origin, destination] {
            if !net.contains(node) {
                return Err(Error::validation(format!("request {id}: unknown node {node}")));
            }
        }
        let distance = net.distance(origin, destination)?;
        Ok(Self {
            id,
            origin,
            destination,
            request_time,
            patience,
            distance,
            travel_time: distance / net.speed(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemandConfig<S = f64> {
    pub rate_per_hour: S,
    /// Seconds; arrivals fall in `[0, horizon)`.
    pub horizon: S,
    /// Seconds, applied to every generated request.
    pub patience: S,
    pub seed: u64,
}

impl<S: Scalar> DemandConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_per_hour > S::zero() && self.rate_per_hour.is_finite()) {
            return Err(Error::invalid(format!("request rate must be positive, got {}", self.rate_per_hour)));
        }
        if !(self.horizon >= S::zero() && self.horizon.is_finite()) {
            return Err(Error::invalid(format!("demand horizon must be non-negative, got {}", self.horizon)));
        }
        if !(self.patience > S::zero() && self.patience.is_finite()) {
            return Err(Error::invalid(format!("patience must be positive, got {}", self.patience)));
        }
        Ok(())
    }
}

/// Poisson arrivals over `[0, horizon)` with origin and destination drawn
/// uniformly over ordered pairs of distinct nodes.
pub fn generate_demand<S: Scalar>(net: &Network<S>, cfg: &DemandConfig<S>) -> Result<Vec<TripRequest<S>>> {
    cfg.validate()?;
    let ids: Vec<NodeId> = net.node_ids().collect();
    if ids.len() < 2 {
        return Err(Error::invalid("demand generation needs at least two nodes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let gap = Exp::new(cfg.rate_per_hour.as_f64() / 3600.0)
        .map_err(|e| Error::invalid(format!("arrival rate: {e}")))?;
    let horizon = cfg.horizon.as_f64();

    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += gap.sample(&mut rng);
        if t >= horizon {
            break;
        }
        let o = rng.random_range(0..ids.len());
        let mut d = rng.random_range(0..ids.len() - 1);
        if d >= o {
            d += 1;
        }
        let id = RequestId(out.len() as u64);
        out.push(TripRequest::new(id, ids[o], ids[d], S::lit(t), cfg.patience, net)?);
    }
    Ok(out)
}

/// Reads `request_id,origin_id,destination_id,request_time_s,patience_s`.
/// Rows are returned sorted by request time, stable on ties.
pub fn load_demand<S: Scalar>(path: impl AsRef<Path>, net: &Network<S>) -> Result<Vec<TripRequest<S>>> {
    let path = path.as_ref();
    let mut rows = Vec::new();
    let mut failure = None;
    let mut seen = HashSet::new();
    crate::io::read_table(
        path,
        &["request_id", "origin_id", "destination_id", "request_time_s", "patience_s"],
        |line, row| {
            let id = RequestId(row.parse(0)?);
            let origin = NodeId(row.parse(1)?);
            let destination = NodeId(row.parse(2)?);
            let time: f64 = row.parse(3)?;
            let patience: f64 = row.parse(4)?;
            if failure.is_some() {
                return Ok(());
            }
            if !seen.insert(id) {
                failure = Some(Error::validation(format!("{}:{line}: duplicate request id {id}", path.display())));
                return Ok(());
            }
            match TripRequest::new(id, origin, destination, S::lit(time), S::lit(patience), net) {
                Ok(r) => rows.push(r),
                Err(Error::Validation(m)) => {
                    failure = Some(Error::validation(format!("{}:{line}: {m}", path.display())))
                }
                Err(e) => failure = Some(e),
            }
            Ok(())
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    rows.sort_by(|a, b| total_cmp(a.request_time, b.request_time));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rate: f64, hours: f64, seed: u64) -> DemandConfig {
        DemandConfig { rate_per_hour: rate, horizon: hours * 3600.0, patience: 300.0, seed }
    }

    #[test]
    fn zero_horizon_is_empty() {
        let g = Network::grid(3, 3, 500.0).unwrap();
        assert!(generate_demand(&g, &cfg(100.0, 0.0, 1)).unwrap().is_empty());
    }

    #[test]
    fn same_seed_same_requests() {
        let g = Network::grid(4, 4, 500.0).unwrap();
        let a = generate_demand(&g, &cfg(100.0, 4.0, 9)).unwrap();
        let b = generate_demand(&g, &cfg(100.0, 4.0, 9)).unwrap();
        assert_eq!(a, b);
        let c = generate_demand(&g, &cfg(100.0, 4.0, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn requests_are_sorted_distinct_and_routed() {
        let g = Network::grid(4, 4, 500.0).unwrap();
        let reqs = generate_demand(&g, &cfg(200.0, 2.0, 3)).unwrap();
        assert!(reqs.windows(2).all(|w| w[0].request_time <= w[1].request_time));
        for r in &reqs {
            assert_ne!(r.origin, r.destination);
            assert!(r.request_time >= 0.0 && r.request_time < 7200.0);
            let route = g.shortest_path(r.origin, r.destination).unwrap();
            assert_eq!(r.distance, route.length);
            assert_eq!(r.travel_time, route.duration);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let g = Network::grid(3, 3, 500.0).unwrap();
        assert!(generate_demand(&g, &cfg(0.0, 1.0, 1)).is_err());
        let mut c = cfg(10.0, 1.0, 1);
        c.patience = 0.0;
        assert!(generate_demand(&g, &c).is_err());
    }

    fn write(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("demand.csv");
        std::fs::write(&p, content).unwrap();
        (dir, p)
    }

    const HEADER: &str = "request_id,origin_id,destination_id,request_time_s,patience_s\n";

    #[test]
    fn load_single_row() {
        let g = Network::grid(3, 3, 500.0).unwrap();
        let (_d, p) = write(&format!("{HEADER}7,0,8,12.5,300\n"));
        let reqs = load_demand(&p, &g).unwrap();
        assert_eq!(reqs.len(), 1);
        assert_eq!(reqs[0].id, RequestId(7));
        assert_eq!(reqs[0].distance, 2000.0);
        assert_eq!(reqs[0].travel_time, 200.0);
    }

    #[test]
    fn load_sorts_stably() {
        let g = Network::grid(3, 3, 500.0).unwrap();
        let (_d, p) = write(&format!("{HEADER}1,0,1,50,60\n2,0,2,10,60\n3,1,2,50,60\n4,2,1,10,60\n"));
        let ids: Vec<u64> = load_demand(&p, &g).unwrap().iter().map(|r| r.id.0).collect();
        assert_eq!(ids, vec![2, 4, 1, 3]);
    }

    #[test]
    fn load_validation_errors() {
        let g = Network::grid(3, 3, 500.0).unwrap();
        for body in ["1,0,1,0,0\n", "1,4,4,0,60\n", "1,0,42,0,60\n", "1,0,1,0,60\n1,1,2,0,60\n"] {
            let (_d, p) = write(&format!("{HEADER}{body}"));
            let err = load_demand(&p, &g).unwrap_err();
            assert!(matches!(err, Error::Validation(_)), "{body}: {err}");
        }
        let (_d, p) = write(&format!("{HEADER}1,0,1,abc,60\n"));
        assert!(matches!(load_demand(&p, &g).unwrap_err(), Error::Parse { line: 2, .. }));
    }
}
