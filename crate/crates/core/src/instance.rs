//! Immutable problem data, the canonical instance file, and the toy generator.
//!
//! Periods are zero-based: period `t` runs from time point `t` to `t + 1`.
//! Per-period arrays (`rate`, `inv_min`, `inv_max`, `penalty`) have exactly
//! `horizon` entries and bound the inventory at the *end* of each period.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seeding;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed instance file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported format_version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> InstanceError {
    InstanceError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortKind {
    Production,
    Consumption,
}

impl PortKind {
    /// The model's Δ indicator: +1 for production, −1 for consumption.
    pub fn sign(self) -> f64 {
        match self {
            PortKind::Production => 1.0,
            PortKind::Consumption => -1.0,
        }
    }

    pub fn opposite(self) -> PortKind {
        match self {
            PortKind::Production => PortKind::Consumption,
            PortKind::Consumption => PortKind::Production,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Port {
    pub id: usize,
    pub kind: PortKind,
    pub rate: Vec<f64>,
    pub inv_min: Vec<f64>,
    pub inv_max: Vec<f64>,
    pub inv_init: f64,
    pub berth_limit: u32,
    pub port_fee: f64,
    pub penalty: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VesselClass {
    pub id: usize,
    pub capacity: f64,
    pub cost_per_km: f64,
    pub ballast_discount: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadState {
    Empty,
    Loaded,
}

/// A vessel becomes available at `start_port` at time `ready_time`. A vessel
/// that is at sea when the horizon opens is encoded by its destination port
/// and its arrival period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vessel {
    pub id: usize,
    pub class: usize,
    pub start_port: usize,
    pub ready_time: usize,
    pub initial_state: LoadState,
}

impl Vessel {
    /// Port kind of the vessel's first call.
    pub fn first_kind(&self) -> PortKind {
        match self.initial_state {
            LoadState::Empty => PortKind::Production,
            LoadState::Loaded => PortKind::Consumption,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub horizon: usize,
    pub reward_early_finish: f64,
    pub ports: Vec<Port>,
    pub vessel_classes: Vec<VesselClass>,
    pub vessels: Vec<Vessel>,
    pub distance_km: Vec<Vec<f64>>,
    /// `travel_time[class][from][to]` in whole periods.
    pub travel_time: Vec<Vec<Vec<usize>>>,
    #[serde(default = "default_op_duration")]
    pub op_duration: usize,
    #[serde(default)]
    pub meta: Meta,
}

fn default_op_duration() -> usize {
    1
}

#[derive(Serialize)]
struct InstanceFileRef<'a> {
    format_version: u32,
    #[serde(flatten)]
    instance: &'a Instance,
}

impl Instance {
    pub fn num_ports(&self) -> usize {
        self.ports.len()
    }

    pub fn num_vessels(&self) -> usize {
        self.vessels.len()
    }

    pub fn kind(&self, port: usize) -> PortKind {
        self.ports[port].kind
    }

    pub fn class_of(&self, vessel: usize) -> &VesselClass {
        &self.vessel_classes[self.vessels[vessel].class]
    }

    pub fn capacity(&self, vessel: usize) -> f64 {
        self.class_of(vessel).capacity
    }

    pub fn travel(&self, vessel: usize, from: usize, to: usize) -> usize {
        self.travel_time[self.vessels[vessel].class][from][to]
    }

    pub fn ports_of_kind(&self, kind: PortKind) -> impl Iterator<Item = usize> + '_ {
        self.ports
            .iter()
            .filter(move |p| p.kind == kind)
            .map(|p| p.id)
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        let version = value
            .as_object_mut()
            .and_then(|m| m.remove("format_version"))
            .ok_or_else(|| invalid("format_version", "missing"))?;
        let found: u32 = serde_json::from_value(version)?;
        if found != FORMAT_VERSION {
            return Err(InstanceError::Version { found });
        }
        let instance: Instance = serde_json::from_value(value)?;
        instance.validate()?;
        Ok(instance)
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFileRef {
            format_version: FORMAT_VERSION,
            instance: self,
        };
        serde_json::to_string_pretty(&file).expect("instance serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| InstanceError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Checks every structural and numeric invariant of the data model.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let t = self.horizon;
        if t == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if self.op_duration == 0 {
            return Err(invalid("op_duration", "must be at least 1"));
        }
        check_nonneg("reward_early_finish", self.reward_early_finish)?;

        let n = self.ports.len();
        for (j, port) in self.ports.iter().enumerate() {
            let f = |name: &str| format!("ports[{j}].{name}");
            if port.id != j {
                return Err(invalid(f("id"), format!("expected {j}, found {}", port.id)));
            }
            for (name, arr) in [
                ("rate", &port.rate),
                ("inv_min", &port.inv_min),
                ("inv_max", &port.inv_max),
                ("penalty", &port.penalty),
            ] {
                if arr.len() != t {
                    return Err(invalid(
                        f(name),
                        format!("expected {t} entries, found {}", arr.len()),
                    ));
                }
                for (k, &v) in arr.iter().enumerate() {
                    check_nonneg(&format!("ports[{j}].{name}[{k}]"), v)?;
                }
            }
            for k in 0..t {
                if port.inv_min[k] > port.inv_max[k] {
                    return Err(invalid(
                        format!("ports[{j}].inv_min[{k}]"),
                        "exceeds inv_max",
                    ));
                }
            }
            check_nonneg(&f("inv_init"), port.inv_init)?;
            if port.inv_init < port.inv_min[0] || port.inv_init > port.inv_max[0] {
                return Err(invalid(
                    f("inv_init"),
                    format!(
                        "{} outside [{}, {}]",
                        port.inv_init, port.inv_min[0], port.inv_max[0]
                    ),
                ));
            }
            if port.berth_limit == 0 {
                return Err(invalid(f("berth_limit"), "must be at least 1"));
            }
            check_nonneg(&f("port_fee"), port.port_fee)?;
        }
        if !self.ports.iter().any(|p| p.kind == PortKind::Production) {
            return Err(invalid("ports", "no production port"));
        }
        if !self.ports.iter().any(|p| p.kind == PortKind::Consumption) {
            return Err(invalid("ports", "no consumption port"));
        }

        for (c, class) in self.vessel_classes.iter().enumerate() {
            let f = |name: &str| format!("vessel_classes[{c}].{name}");
            if class.id != c {
                return Err(invalid(f("id"), format!("expected {c}, found {}", class.id)));
            }
            if !(class.capacity.is_finite() && class.capacity > 0.0) {
                return Err(invalid(f("capacity"), "must be positive"));
            }
            check_nonneg(&f("cost_per_km"), class.cost_per_km)?;
            if !(0.0..=1.0).contains(&class.ballast_discount) {
                return Err(invalid(f("ballast_discount"), "must lie in [0, 1]"));
            }
        }

        for (v, vessel) in self.vessels.iter().enumerate() {
            let f = |name: &str| format!("vessels[{v}].{name}");
            if vessel.id != v {
                return Err(invalid(f("id"), format!("expected {v}, found {}", vessel.id)));
            }
            if vessel.class >= self.vessel_classes.len() {
                return Err(invalid(f("class"), "unknown vessel class"));
            }
            if vessel.start_port >= n {
                return Err(invalid(f("start_port"), "unknown port"));
            }
            if vessel.ready_time >= t {
                return Err(invalid(f("ready_time"), "must lie in [0, horizon)"));
            }
        }

        if self.distance_km.len() != n || self.distance_km.iter().any(|r| r.len() != n) {
            return Err(invalid("distance_km", format!("expected a {n}x{n} matrix")));
        }
        for a in 0..n {
            for b in 0..n {
                let d = self.distance_km[a][b];
                check_nonneg(&format!("distance_km[{a}][{b}]"), d)?;
                if a == b && d != 0.0 {
                    return Err(invalid(format!("distance_km[{a}][{a}]"), "diagonal must be 0"));
                }
                if d != self.distance_km[b][a] {
                    return Err(invalid(format!("distance_km[{a}][{b}]"), "matrix not symmetric"));
                }
            }
        }

        if self.travel_time.len() != self.vessel_classes.len() {
            return Err(invalid(
                "travel_time",
                format!("expected one matrix per vessel class ({})", self.vessel_classes.len()),
            ));
        }
        for (c, m) in self.travel_time.iter().enumerate() {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(invalid(format!("travel_time[{c}]"), format!("expected a {n}x{n} matrix")));
            }
            for (a, row) in m.iter().enumerate() {
                for (b, &tt) in row.iter().enumerate() {
                    if a == b && tt != 0 {
                        return Err(invalid(format!("travel_time[{c}][{a}][{a}]"), "diagonal must be 0"));
                    }
                    if a != b && tt == 0 {
                        return Err(invalid(format!("travel_time[{c}][{a}][{b}]"), "must be at least 1"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_nonneg(field: &str, v: f64) -> Result<(), InstanceError> {
    if !v.is_finite() {
        return Err(invalid(field, "must be finite"));
    }
    if v < 0.0 {
        return Err(invalid(field, format!("must be nonnegative, found {v}")));
    }
    Ok(())
}

/// Builds a small balanced instance: one production port, `n_consumers`
/// consumption ports, total production equal to total consumption in every
/// period.
///
/// Seed 1 yields the unperturbed reference layout (rate 2 per consumer,
/// bounds [0, 10], capacity 4, 10 km / 2 periods between ports, one empty
/// vessel at the producer); `generate_toy(1, 1, 12)` is the TOY1 fixture.
/// Every other seed draws rates, bounds, distances, fees and a fleet of one
/// or two vessels from a ChaCha stream.
pub fn generate_toy(seed: u64, n_consumers: usize, horizon: usize) -> Result<Instance, InstanceError> {
    if n_consumers == 0 {
        return Err(invalid("n_consumers", "must be at least 1"));
    }
    if horizon < 4 {
        return Err(invalid("horizon", "must be at least 4"));
    }
    let inst = if seed == 1 {
        reference_toy(n_consumers, horizon)
    } else {
        random_toy(seed, n_consumers, horizon)
    };
    inst.validate()?;
    Ok(inst)
}

fn reference_toy(n_consumers: usize, horizon: usize) -> Instance {
    let n = n_consumers + 1;
    let c = n_consumers as f64;
    let mut ports = vec![Port {
        id: 0,
        kind: PortKind::Production,
        rate: vec![2.0 * c; horizon],
        inv_min: vec![0.0; horizon],
        inv_max: vec![10.0 * c; horizon],
        inv_init: 5.0 * c,
        berth_limit: 1,
        port_fee: 0.0,
        penalty: vec![100.0; horizon],
    }];
    for j in 1..n {
        ports.push(Port {
            id: j,
            kind: PortKind::Consumption,
            rate: vec![2.0; horizon],
            inv_min: vec![0.0; horizon],
            inv_max: vec![10.0; horizon],
            inv_init: 5.0,
            berth_limit: 1,
            port_fee: 0.0,
            penalty: vec![100.0; horizon],
        });
    }
    let distance_km = (0..n)
        .map(|a| (0..n).map(|b| if a == b { 0.0 } else { 10.0 }).collect())
        .collect();
    let travel = (0..n)
        .map(|a| (0..n).map(|b| if a == b { 0 } else { 2 }).collect())
        .collect();
    Instance {
        horizon,
        reward_early_finish: 0.0,
        ports,
        vessel_classes: vec![VesselClass {
            id: 0,
            capacity: 4.0,
            cost_per_km: 1.0,
            ballast_discount: 0.05,
        }],
        vessels: vec![Vessel {
            id: 0,
            class: 0,
            start_port: 0,
            ready_time: 0,
            initial_state: LoadState::Empty,
        }],
        distance_km,
        travel_time: vec![travel],
        op_duration: 1,
        meta: Meta {
            name: format!("TOY_s1_c{n_consumers}_T{horizon}"),
            class: "E".to_string(),
        },
    }
}

fn random_toy(seed: u64, n_consumers: usize, horizon: usize) -> Instance {
    let mut rng = seeding::rng(seeding::derive(&[0x70_79, seed, n_consumers as u64, horizon as u64]));
    let n = n_consumers + 1;
    // Even seeds get time-varying consumption.
    let varying = seed.is_multiple_of(2);

    let mut consumer_rates: Vec<Vec<f64>> = Vec::with_capacity(n_consumers);
    for _ in 0..n_consumers {
        let base: u32 = rng.random_range(1..=3);
        let rates = (0..horizon)
            .map(|_| {
                if varying {
                    f64::from(rng.random_range(base.saturating_sub(1).max(1)..=base + 1))
                } else {
                    f64::from(base)
                }
            })
            .collect();
        consumer_rates.push(rates);
    }
    let producer_rate: Vec<f64> = (0..horizon)
        .map(|t| consumer_rates.iter().map(|r| r[t]).sum())
        .collect();
    let peak_total = producer_rate.iter().cloned().fold(0.0, f64::max);

    let capacity = f64::from(rng.random_range(4..=6u32));
    let prod_max = (capacity * 2.0).max(4.0 * peak_total).ceil();
    let mut ports = vec![Port {
        id: 0,
        kind: PortKind::Production,
        rate: producer_rate,
        inv_min: vec![0.0; horizon],
        inv_max: vec![prod_max; horizon],
        inv_init: (prod_max * rng.random_range(0.3..0.7f64)).round(),
        berth_limit: rng.random_range(1..=2),
        port_fee: f64::from(rng.random_range(0..=5u32)),
        penalty: vec![f64::from(rng.random_range(80..=120u32)); horizon],
    }];
    for (k, rates) in consumer_rates.into_iter().enumerate() {
        let peak = rates.iter().cloned().fold(0.0, f64::max);
        let inv_max = (capacity + 2.0 * peak + f64::from(rng.random_range(0..=4u32))).ceil();
        ports.push(Port {
            id: k + 1,
            kind: PortKind::Consumption,
            rate: rates,
            inv_min: vec![0.0; horizon],
            inv_max: vec![inv_max; horizon],
            inv_init: (inv_max * rng.random_range(0.3..0.8f64)).round(),
            berth_limit: 1,
            port_fee: f64::from(rng.random_range(0..=5u32)),
            penalty: vec![f64::from(rng.random_range(80..=150u32)); horizon],
        });
    }

    let mut travel = vec![vec![0usize; n]; n];
    let mut distance_km = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in (a + 1)..n {
            let tt = rng.random_range(1..=3usize);
            travel[a][b] = tt;
            travel[b][a] = tt;
            let d = 5.0 * tt as f64 + f64::from(rng.random_range(0..=4u32));
            distance_km[a][b] = d;
            distance_km[b][a] = d;
        }
    }

    let n_vessels = rng.random_range(1..=2usize);
    let mut vessels = Vec::with_capacity(n_vessels);
    for v in 0..n_vessels {
        let start_port = if v == 0 { 0 } else { rng.random_range(0..n) };
        let initial_state = if start_port == 0 {
            LoadState::Empty
        } else if rng.random_bool(0.5) {
            LoadState::Loaded
        } else {
            LoadState::Empty
        };
        vessels.push(Vessel {
            id: v,
            class: 0,
            start_port,
            ready_time: if v == 0 { 0 } else { rng.random_range(0..=2) },
            initial_state,
        });
    }

    let reward_early_finish = if seed.is_multiple_of(3) { 1.5 } else { 0.0 };
    Instance {
        horizon,
        reward_early_finish,
        ports,
        vessel_classes: vec![VesselClass {
            id: 0,
            capacity,
            cost_per_km: 1.0,
            ballast_discount: f64::from(rng.random_range(5..=20u32)) / 100.0,
        }],
        vessels,
        distance_km,
        travel_time: vec![travel],
        op_duration: 1,
        meta: Meta {
            name: format!("TOY_s{seed}_c{n_consumers}_T{horizon}"),
            class: "E".to_string(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy1() -> Instance {
        generate_toy(1, 1, 12).unwrap()
    }

    #[test]
    fn toy1_matches_fixture() {
        let inst = toy1();
        assert_eq!(inst.horizon, 12);
        assert_eq!(inst.ports.len(), 2);
        assert_eq!(inst.vessels.len(), 1);
        let p0 = &inst.ports[0];
        assert_eq!(p0.kind, PortKind::Production);
        assert_eq!(p0.rate, vec![2.0; 12]);
        assert_eq!((p0.inv_min[0], p0.inv_max[0], p0.inv_init), (0.0, 10.0, 5.0));
        assert_eq!((p0.berth_limit, p0.penalty[0]), (1, 100.0));
        let p1 = &inst.ports[1];
        assert_eq!(p1.kind, PortKind::Consumption);
        assert_eq!((p1.rate[3], p1.inv_max[3], p1.inv_init), (2.0, 10.0, 5.0));
        let class = &inst.vessel_classes[0];
        assert_eq!((class.capacity, class.cost_per_km, class.ballast_discount), (4.0, 1.0, 0.05));
        assert_eq!(inst.distance_km[0][1], 10.0);
        assert_eq!(inst.travel_time[0][0][1], 2);
        let v = &inst.vessels[0];
        assert_eq!((v.start_port, v.ready_time, v.initial_state), (0, 0, LoadState::Empty));
        assert_eq!(inst.reward_early_finish, 0.0);
    }

    #[test]
    fn generator_is_deterministic() {
        assert_eq!(generate_toy(1, 1, 12).unwrap(), generate_toy(1, 1, 12).unwrap());
        assert_eq!(generate_toy(9, 2, 14).unwrap(), generate_toy(9, 2, 14).unwrap());
    }

    #[test]
    fn three_consumer_instance_is_balanced() {
        let inst = generate_toy(2, 3, 24).unwrap();
        let producers: Vec<_> = inst.ports_of_kind(PortKind::Production).collect();
        let consumers: Vec<_> = inst.ports_of_kind(PortKind::Consumption).collect();
        assert_eq!((producers.len(), consumers.len()), (1, 3));
        for t in 0..24 {
            let produced: f64 = producers.iter().map(|&j| inst.ports[j].rate[t]).sum();
            let consumed: f64 = consumers.iter().map(|&j| inst.ports[j].rate[t]).sum();
            assert_eq!(produced, consumed, "period {t}");
        }
    }

    #[test]
    fn generator_rejects_bad_preconditions() {
        assert!(generate_toy(1, 0, 12).is_err());
        assert!(generate_toy(1, 1, 3).is_err());
    }

    #[test]
    fn json_round_trip() {
        let inst = generate_toy(4, 2, 10).unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn rejects_initial_inventory_above_bound() {
        let mut inst = toy1();
        inst.ports[1].inv_init = 11.0;
        let err = Instance::from_json(&inst.to_json()).unwrap_err();
        assert!(err.to_string().contains("ports[1].inv_init"), "{err}");
    }

    #[test]
    fn rejects_negative_rate() {
        let mut inst = toy1();
        inst.ports[0].rate[4] = -1.0;
        let err = Instance::from_json(&inst.to_json()).unwrap_err();
        assert!(err.to_string().contains("ports[0].rate[4]"), "{err}");
    }

    #[test]
    fn rejects_wrong_version_and_garbage() {
        let text = toy1().to_json().replace("\"format_version\": 1", "\"format_version\": 7");
        assert!(matches!(Instance::from_json(&text), Err(InstanceError::Version { found: 7 })));
        assert!(matches!(Instance::from_json("{ nope"), Err(InstanceError::Parse(_))));
    }

    #[test]
    fn rejects_zero_travel_time_between_distinct_ports() {
        let mut inst = toy1();
        inst.travel_time[0][0][1] = 0;
        assert!(inst.validate().is_err());
    }
}
