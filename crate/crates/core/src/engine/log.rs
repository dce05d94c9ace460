//! Simulation record: events, per-request outcomes, served rides, driving
//! legs and per-driver ledgers, plus their tabular exports.

use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::demand::RequestId;
use crate::economics::{Cents, DriverId, Policy};
use crate::error::Result;
use crate::network::NodeId;
use crate::scalar::Scalar;
use crate::shareability::{RideId, RideKind};

/// Event kinds in tie-break priority order at equal times.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    PatienceExpired,
    DropoffComplete,
    PickupComplete,
    RequestArrival,
    DriverDecision,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::PatienceExpired => "patience_expired",
            EventKind::DropoffComplete => "dropoff_complete",
            EventKind::PickupComplete => "pickup_complete",
            EventKind::RequestArrival => "request_arrival",
            EventKind::DriverDecision => "driver_decision",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A processed event. A `DriverDecision` without a ride is a decline.
#[derive(Clone, Debug, PartialEq)]
pub struct SimEvent<S> {
    pub id: u64,
    pub time: S,
    pub kind: EventKind,
    pub driver: Option<DriverId>,
    pub ride: Option<RideId>,
    pub requests: Vec<RequestId>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Served { driver: DriverId, ride: RideId },
    Expired,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RequestOutcome<S> {
    pub request: RequestId,
    pub request_time: S,
    pub outcome: Outcome,
    /// Request to pickup, seconds. `None` when expired.
    pub wait: Option<S>,
    pub in_vehicle: Option<S>,
    pub fare: Option<Cents>,
}

impl<S> RequestOutcome<S> {
    pub fn is_served(&self) -> bool {
        matches!(self.outcome, Outcome::Served { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServedRide<S> {
    pub ride: RideId,
    pub driver: DriverId,
    pub kind: RideKind,
    pub members: Vec<RequestId>,
    pub fares: Vec<Cents>,
    pub total_fare: Cents,
    pub commission: Cents,
    pub driver_revenue: Cents,
    pub operating_cost: Cents,
    pub profit: Cents,
    pub decided_at: S,
    pub pickup_distance: S,
    pub pickup_time: S,
    pub service_distance: S,
    pub service_time: S,
}

/// One shortest-path drive between two nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveLeg<S> {
    pub driver: DriverId,
    pub from: NodeId,
    pub to: NodeId,
    pub depart: S,
    pub arrive: S,
    pub length: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriverLedger<S> {
    pub driver: DriverId,
    pub start: NodeId,
    pub n_rides: u32,
    pub n_pooled: u32,
    pub revenue: Cents,
    pub cost: Cents,
    pub profit: Cents,
    /// Seconds spent driving (pickup and service legs).
    pub busy: S,
    pub idle: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventLog<S = f64> {
    pub policy: Policy,
    pub max_degree: usize,
    pub events: Vec<SimEvent<S>>,
    /// Sorted by request id.
    pub outcomes: Vec<RequestOutcome<S>>,
    /// In decision order.
    pub rides: Vec<ServedRide<S>>,
    /// In departure order.
    pub legs: Vec<DriveLeg<S>>,
    /// Sorted by driver id.
    pub drivers: Vec<DriverLedger<S>>,
    /// Time of the last processed event, or the horizon if later.
    pub end_time: S,
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl<S: Scalar> EventLog<S> {
    pub fn write_events(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "time_s,kind,driver_id,ride_id,request_ids")?;
        for e in &self.events {
            writeln!(
                w,
                "{:.3},{},{},{},{}",
                e.time,
                e.kind,
                opt(e.driver),
                opt(e.ride),
                join(&e.requests)
            )?;
        }
        Ok(())
    }

    pub fn write_outcomes(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "request_id,outcome,wait_s,in_vehicle_s,fare_eur")?;
        for o in &self.outcomes {
            let kind = if o.is_served() { "served" } else { "expired" };
            writeln!(
                w,
                "{},{},{},{},{}",
                o.request,
                kind,
                opt(o.wait.map(|x| format!("{x:.3}"))),
                opt(o.in_vehicle.map(|x| format!("{x:.3}"))),
                opt(o.fare),
            )?;
        }
        Ok(())
    }

    pub fn write_ledger(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "driver_id,n_rides,n_pooled,revenue_eur,cost_eur,profit_eur,busy_s,idle_s")?;
        for d in &self.drivers {
            writeln!(
                w,
                "{},{},{},{},{},{},{:.3},{:.3}",
                d.driver, d.n_rides, d.n_pooled, d.revenue, d.cost, d.profit, d.busy, d.idle
            )?;
        }
        Ok(())
    }

    /// Writes `events.csv`, `outcomes.csv` and `drivers.csv` into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        let open = |name: &str| -> Result<std::io::BufWriter<std::fs::File>> {
            Ok(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?))
        };
        let mut w = open("events.csv")?;
        self.write_events(&mut w)?;
        w.flush()?;
        let mut w = open("outcomes.csv")?;
        self.write_outcomes(&mut w)?;
        w.flush()?;
        let mut w = open("drivers.csv")?;
        self.write_ledger(&mut w)?;
        w.flush()?;
        Ok(())
    }
}
