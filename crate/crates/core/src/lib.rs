//! Discrete-event simulation of a two-sided ride-pooling market.
//!
//! Travellers request trips on a road network, an exact enumerator builds
//! every ride (solo or pooled) that all its members find attractive, and
//! idle drivers pick rides from that set according to the platform's
//! pricing policy and their own profit. The [`kpi`] module turns the
//! resulting [`EventLog`] into service rate, revenue, commission, waiting
//! time and occupancy indicators.
//!
//! All continuous quantities are generic over [`Scalar`] (`f32` or `f64`);
//! the unsuffixed type defaults and the `*F32` aliases below name the two
//! concrete instantiations. Money is always integer [`Cents`].

pub mod config;
pub mod demand;
pub mod economics;
pub mod engine;
mod error;
pub mod io;
pub mod kpi;
pub mod network;
pub mod runner;
mod scalar;
pub mod shareability;

pub use demand::{generate_demand, load_demand, DemandConfig, RequestId, TripRequest};
pub use economics::{
    choose_ride, fare, filter_by_policy, price_ride, Cents, ChoiceMode, DriverId, DriverProfile, Policy, PricedRide,
    PricingParams,
};
pub use engine::{run, DemandSource, EventLog, ScenarioConfig, SupplyConfig};
pub use error::{Error, Result};
pub use config::{LoadedScenario, SweepSpec};
pub use kpi::KpiReport;
pub use runner::{exit_code, run_scenario, run_sweep};
pub use network::{load_network, Network, NodeId, Route};
pub use scalar::Scalar;
pub use shareability::{
    enumerate_rides, prune_served, traveller_utility, RideCandidate, RideId, RideKind, ShareabilityConfig,
    TravellerPrefs,
};

pub type NetworkF32 = Network<f32>;
pub type RouteF32 = Route<f32>;
pub type TripRequestF32 = TripRequest<f32>;
pub type RideCandidateF32 = RideCandidate<f32>;
pub type ScenarioConfigF32 = ScenarioConfig<f32>;
pub type EventLogF32 = EventLog<f32>;
pub type KpiReportF32 = KpiReport<f32>;
