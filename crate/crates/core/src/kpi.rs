//! Run-level indicators computed from an [`EventLog`].

use std::fmt::Write as _;

use crate::economics::Cents;
use crate::engine::EventLog;
use crate::io::fmt_cents;
use crate::scalar::{total_cmp, Scalar};
use crate::shareability::RideKind;

/// Fraction of requests served; 0 when there were none.
pub fn service_rate<S: Scalar>(log: &EventLog<S>) -> S {
    let n = log.outcomes.len();
    if n == 0 {
        return S::zero();
    }
    let served = log.outcomes.iter().filter(|o| o.is_served()).count();
    S::lit(served as f64) / S::lit(n as f64)
}

/// Traveller in-vehicle seconds over driver driving seconds; 0 when
/// nobody drove.
pub fn occupancy<S: Scalar>(log: &EventLog<S>) -> S {
    let riding: S = log.outcomes.iter().filter_map(|o| o.in_vehicle).sum();
    let driving: S = log.drivers.iter().map(|d| d.busy).sum();
    if driving > S::zero() {
        riding / driving
    } else {
        S::zero()
    }
}

/// Gini coefficient of non-negative values (sorted cumulative form).
/// All-zero or empty input gives 0.
pub fn gini<S: Scalar>(values: &[S]) -> S {
    let mut v = values.to_vec();
    v.sort_by(|a, b| total_cmp(*a, *b));
    let total: S = v.iter().copied().sum();
    if v.is_empty() || total <= S::zero() {
        return S::zero();
    }
    let n = S::lit(v.len() as f64);
    let weighted: S = v
        .iter()
        .enumerate()
        .map(|(i, &x)| S::lit((i + 1) as f64) * x)
        .sum();
    let g = S::lit(2.0) * weighted / (n * total) - (n + S::one()) / n;
    g.max(S::zero())
}

/// Driver revenues ordered by driver id, with their Gini coefficient.
pub fn revenue_distribution<S: Scalar>(log: &EventLog<S>) -> (Vec<Cents>, S) {
    let revenues: Vec<Cents> = log.drivers.iter().map(|d| d.revenue).collect();
    let as_euros: Vec<S> = revenues.iter().map(|c| c.euros()).collect();
    (revenues, gini(&as_euros))
}

/// Total commission kept by the platform over served rides.
pub fn platform_commission<S: Scalar>(log: &EventLog<S>) -> Cents {
    log.rides.iter().map(|r| r.commission).sum()
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct WaitStats<S> {
    pub mean: S,
    pub median: S,
    pub p90: S,
}

/// Linear-interpolation quantile of sorted data.
fn quantile<S: Scalar>(sorted: &[S], q: f64) -> S {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = S::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Waiting-time statistics over served requests; `None` if none served.
pub fn wait_stats<S: Scalar>(log: &EventLog<S>) -> Option<WaitStats<S>> {
    let mut waits: Vec<S> = log.outcomes.iter().filter_map(|o| o.wait).collect();
    wait_stats_of(&mut waits)
}

pub fn wait_stats_of<S: Scalar>(waits: &mut [S]) -> Option<WaitStats<S>> {
    if waits.is_empty() {
        return None;
    }
    waits.sort_by(|a, b| total_cmp(*a, *b));
    let mean = waits.iter().copied().sum::<S>() / S::lit(waits.len() as f64);
    Some(WaitStats { mean, median: quantile(waits, 0.5), p90: quantile(waits, 0.9) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KpiReport<S = f64> {
    pub n_requests: usize,
    pub n_served: usize,
    pub n_pooled_served: usize,
    pub service_rate: S,
    /// Ordered by driver id.
    pub per_driver_revenue: Vec<Cents>,
    pub revenue_gini: S,
    pub total_fares: Cents,
    pub platform_commission_total: Cents,
    pub waits: Option<WaitStats<S>>,
    pub occupancy: S,
}

impl<S: Scalar> KpiReport<S> {
    pub fn from_log(log: &EventLog<S>) -> Self {
        let (per_driver_revenue, revenue_gini) = revenue_distribution(log);
        let n_pooled_served = log
            .rides
            .iter()
            .filter(|r| r.kind == RideKind::Pooled)
            .map(|r| r.members.len())
            .sum();
        Self {
            n_requests: log.outcomes.len(),
            n_served: log.outcomes.iter().filter(|o| o.is_served()).count(),
            n_pooled_served,
            service_rate: service_rate(log),
            per_driver_revenue,
            revenue_gini,
            total_fares: log.rides.iter().map(|r| r.total_fare).sum(),
            platform_commission_total: platform_commission(log),
            waits: wait_stats(log),
            occupancy: occupancy(log),
        }
    }

    /// `key = value` document, one key per line, fixed order. Wait keys are
    /// omitted when nobody was served.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let revenues: Vec<String> = self.per_driver_revenue.iter().map(|c| fmt_cents(c.0)).collect();
        writeln!(s, "n_requests = {}", self.n_requests).unwrap();
        writeln!(s, "n_served = {}", self.n_served).unwrap();
        writeln!(s, "n_pooled_served = {}", self.n_pooled_served).unwrap();
        writeln!(s, "service_rate = {:.6}", self.service_rate).unwrap();
        writeln!(s, "total_fares_eur = {}", fmt_cents(self.total_fares.0)).unwrap();
        writeln!(s, "platform_commission_eur = {}", fmt_cents(self.platform_commission_total.0)).unwrap();
        writeln!(s, "per_driver_revenue_eur = [{}]", revenues.join(", ")).unwrap();
        writeln!(s, "# Gini of per-driver revenue; summary statistic added by this tool").unwrap();
        writeln!(s, "revenue_gini = {:.6}", self.revenue_gini).unwrap();
        if let Some(w) = &self.waits {
            writeln!(s, "wait_mean_s = {:.3}", w.mean).unwrap();
            writeln!(s, "wait_median_s = {:.3}", w.median).unwrap();
            writeln!(s, "wait_p90_s = {:.3}", w.p90).unwrap();
        }
        writeln!(s, "occupancy = {:.6}", self.occupancy).unwrap();
        s
    }
}
