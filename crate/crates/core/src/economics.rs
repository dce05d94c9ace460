//! Fares, commission, driver costs and the driver's ride choice.
//!
//! Money is carried in integer cents. Every ride-level amount is rounded
//! half-up to the cent once, and the remaining identities (total fare is
//! the sum of member fares, commission plus driver revenue is the total
//! fare, profit is revenue minus cost) are then exact integer arithmetic.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::demand::TripRequest;
use crate::error::{Error, Result};
use crate::network::{Network, NodeId};
use crate::scalar::Scalar;
use crate::shareability::{RideCandidate, RideKind};

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cents(pub i64);

impl Cents {
    pub const ZERO: Cents = Cents(0);

    /// Rounds a euro amount half-up to the nearest cent.
    pub fn from_euros<S: Scalar>(euros: S) -> Self {
        Self::round_half_up(euros * S::lit(100.0))
    }

    fn round_half_up<S: Scalar>(cents: S) -> Self {
        let c = (cents + S::lit(0.5)).floor();
        Cents(c.to_i64().expect("money amount fits in i64 cents"))
    }

    pub fn euros<S: Scalar>(self) -> S {
        S::lit(self.0 as f64) / S::lit(100.0)
    }
}

impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::io::fmt_cents(self.0))
    }
}

impl Add for Cents {
    type Output = Cents;
    fn add(self, rhs: Cents) -> Cents {
        Cents(self.0 + rhs.0)
    }
}

impl AddAssign for Cents {
    fn add_assign(&mut self, rhs: Cents) {
        self.0 += rhs.0;
    }
}

impl Sub for Cents {
    type Output = Cents;
    fn sub(self, rhs: Cents) -> Cents {
        Cents(self.0 - rhs.0)
    }
}

impl Neg for Cents {
    type Output = Cents;
    fn neg(self) -> Cents {
        Cents(-self.0)
    }
}

impl Sum for Cents {
    fn sum<I: Iterator<Item = Cents>>(iter: I) -> Cents {
        iter.fold(Cents::ZERO, Add::add)
    }
}

/// Which rides drivers may be offered.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Private rides only.
    SoloOnly,
    /// Pooled rides only; travellers nobody can pool with are not served.
    ForcedPooling,
    /// Everything; the driver takes the most profitable ride.
    ProfitMax,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::SoloOnly, Policy::ForcedPooling, Policy::ProfitMax];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::SoloOnly => "solo_only",
            Policy::ForcedPooling => "forced_pooling",
            Policy::ProfitMax => "profit_max",
        }
    }

    pub fn admits(self, kind: RideKind) -> bool {
        match self {
            Policy::SoloOnly => kind == RideKind::Solo,
            Policy::ForcedPooling => kind == RideKind::Pooled,
            Policy::ProfitMax => true,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown policy {s:?} (expected solo_only, forced_pooling or profit_max)")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PricingParams<S = f64> {
    /// Euro per km of a traveller's direct distance.
    pub fare_per_km: S,
    /// Fare discount for pooled travellers.
    pub discount: S,
    /// Platform share of the total ride fare.
    pub commission: S,
    pub policy: Policy,
}

impl<S: Scalar> PricingParams<S> {
    pub fn new(policy: Policy) -> Self {
        Self {
            fare_per_km: S::lit(1.5),
            discount: S::lit(0.25),
            commission: S::lit(0.25),
            policy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fare_per_km > S::zero() && self.fare_per_km.is_finite()) {
            return Err(Error::invalid(format!("fare per km must be positive, got {}", self.fare_per_km)));
        }
        if !(self.discount >= S::zero() && self.discount < S::one()) {
            return Err(Error::invalid(format!("discount must be in [0, 1), got {}", self.discount)));
        }
        if !(self.commission >= S::zero() && self.commission < S::one()) {
            return Err(Error::invalid(format!("commission must be in [0, 1), got {}", self.commission)));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DriverId(pub u32);

impl fmt::Display for DriverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum ChoiceMode<S = f64> {
    /// Highest effective profit, ties to the smallest ride id.
    Deterministic,
    /// Multinomial logit with the given scale per euro.
    Logit { scale: S },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriverProfile<S = f64> {
    pub id: DriverId,
    /// Operating cost, euro per km driven.
    pub cost_per_km: S,
    /// Euro per second driven.
    pub value_of_time: S,
    /// Multiplier in `(0, 1]` applied to the profit of pooled rides.
    pub pool_multiplier: S,
    pub choice: ChoiceMode<S>,
    /// Adds an outside option worth zero.
    pub decline_allowed: bool,
}

impl<S: Scalar> DriverProfile<S> {
    pub fn new(id: DriverId) -> Self {
        Self {
            id,
            cost_per_km: S::lit(0.5),
            value_of_time: S::zero(),
            pool_multiplier: S::one(),
            choice: ChoiceMode::Deterministic,
            decline_allowed: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cost_per_km >= S::zero() && self.cost_per_km.is_finite()) {
            return Err(Error::invalid(format!("driver {}: cost per km must be >= 0", self.id)));
        }
        if !(self.value_of_time >= S::zero() && self.value_of_time.is_finite()) {
            return Err(Error::invalid(format!("driver {}: value of time must be >= 0", self.id)));
        }
        if !(self.pool_multiplier > S::zero() && self.pool_multiplier <= S::one()) {
            return Err(Error::invalid(format!(
                "driver {}: pooling multiplier must be in (0, 1], got {}",
                self.id, self.pool_multiplier
            )));
        }
        if let ChoiceMode::Logit { scale } = self.choice {
            if !(scale > S::zero() && scale.is_finite()) {
                return Err(Error::invalid(format!("driver {}: logit scale must be positive", self.id)));
            }
        }
        Ok(())
    }

    /// Multiplier on profit for a ride of this kind: 1 for solo rides.
    pub fn multiplier(&self, kind: RideKind) -> S {
        match kind {
            RideKind::Solo => S::one(),
            RideKind::Pooled => self.pool_multiplier,
        }
    }
}

/// Fare of one traveller, based on their direct distance.
pub fn fare<S: Scalar>(req: &TripRequest<S>, kind: RideKind, p: &PricingParams<S>) -> Cents {
    member_fare(req.distance, kind, p)
}

fn member_fare<S: Scalar>(direct_distance: S, kind: RideKind, p: &PricingParams<S>) -> Cents {
    let km = direct_distance / S::lit(1000.0);
    match kind {
        RideKind::Solo => Cents::from_euros(p.fare_per_km * km),
        RideKind::Pooled => Cents::from_euros(p.fare_per_km * (S::one() - p.discount) * km),
    }
}

/// A candidate priced for one driver at one position.
#[derive(Clone, Debug, PartialEq)]
pub struct PricedRide<'a, S: Scalar = f64> {
    pub candidate: &'a RideCandidate<S>,
    /// Parallel to `candidate.members`.
    pub fares: Vec<Cents>,
    pub total_fare: Cents,
    pub commission: Cents,
    pub driver_revenue: Cents,
    pub operating_cost: Cents,
    pub profit: Cents,
    /// Meters from the driver's position to the first stop.
    pub pickup_distance: S,
    pub pickup_time: S,
    /// Profit in euro times the driver's multiplier for this ride kind.
    pub effective_utility: S,
}

impl<S: Scalar> PricedRide<'_, S> {
    /// Total fare is the sum of member fares, fare splits into commission
    /// and driver revenue, profit is revenue minus cost.
    pub fn identities_hold(&self) -> bool {
        self.total_fare == self.fares.iter().copied().sum()
            && self.commission + self.driver_revenue == self.total_fare
            && self.profit == self.driver_revenue - self.operating_cost
    }
}

/// Prices `candidate` for a driver currently idle at `position`.
pub fn price_ride<'a, S: Scalar>(
    candidate: &'a RideCandidate<S>,
    position: NodeId,
    p: &PricingParams<S>,
    driver: &DriverProfile<S>,
    net: &Network<S>,
) -> Result<PricedRide<'a, S>> {
    let pickup_distance = net.distance(position, candidate.first_stop())?;
    Ok(price_with_pickup(candidate, pickup_distance, p, driver, net.speed()))
}

pub(crate) fn price_with_pickup<'a, S: Scalar>(
    candidate: &'a RideCandidate<S>,
    pickup_distance: S,
    p: &PricingParams<S>,
    driver: &DriverProfile<S>,
    speed: S,
) -> PricedRide<'a, S> {
    let pickup_time = pickup_distance / speed;
    let fares: Vec<Cents> = candidate
        .timing
        .iter()
        .map(|t| member_fare(t.direct_distance, candidate.kind, p))
        .collect();
    let total_fare: Cents = fares.iter().copied().sum();
    let driver_revenue = Cents::round_half_up((S::one() - p.commission) * S::lit(total_fare.0 as f64));
    let commission = total_fare - driver_revenue;
    let km = (pickup_distance + candidate.service_distance) / S::lit(1000.0);
    let operating_cost =
        Cents::from_euros(driver.cost_per_km * km + driver.value_of_time * (pickup_time + candidate.service_time));
    let profit = driver_revenue - operating_cost;
    let priced = PricedRide {
        candidate,
        fares,
        total_fare,
        commission,
        driver_revenue,
        operating_cost,
        profit,
        pickup_distance,
        pickup_time,
        effective_utility: driver.multiplier(candidate.kind) * profit.euros::<S>(),
    };
    assert!(priced.identities_hold(), "ride accounting identities violated");
    priced
}

/// Keeps the candidates the policy allows drivers to serve.
pub fn filter_by_policy<'a, S: Scalar>(
    candidates: impl IntoIterator<Item = &'a RideCandidate<S>>,
    policy: Policy,
) -> Vec<&'a RideCandidate<S>> {
    candidates.into_iter().filter(|c| policy.admits(c.kind)).collect()
}

/// Index into `priced` of the chosen ride, or `None` when the driver
/// declines (only possible with `decline_allowed` and no ride worth >= 0).
pub fn choose_ride<S: Scalar, R: Rng + ?Sized>(
    priced: &[PricedRide<'_, S>],
    driver: &DriverProfile<S>,
    rng: &mut R,
) -> Result<Option<usize>> {
    if priced.is_empty() {
        return Err(Error::invalid("empty choice set"));
    }
    if driver.decline_allowed && priced.iter().all(|r| r.effective_utility < S::zero()) {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..priced.len()).collect();
    order.sort_by_key(|&i| priced[i].candidate.id);

    match driver.choice {
        ChoiceMode::Deterministic => {
            let mut best = order[0];
            for &i in &order[1..] {
                if priced[i].effective_utility > priced[best].effective_utility {
                    best = i;
                }
            }
            Ok(Some(best))
        }
        ChoiceMode::Logit { scale } => {
            let top = priced.iter().map(|r| r.effective_utility).fold(S::neg_infinity(), S::max);
            let weights: Vec<f64> = order
                .iter()
                .map(|&i| (scale * (priced[i].effective_utility - top)).as_f64().exp())
                .collect();
            let total: f64 = weights.iter().sum();
            let mut draw = rng.random::<f64>() * total;
            for (k, w) in weights.iter().enumerate() {
                if draw < *w {
                    return Ok(Some(order[k]));
                }
                draw -= w;
            }
            // rounding left the draw past the end; fall back to the mode
            let last = weights
                .iter()
                .enumerate()
                .rev()
                .find(|(_, w)| **w > 0.0)
                .map_or(order[0], |(k, _)| order[k]);
            Ok(Some(last))
        }
    }
}
