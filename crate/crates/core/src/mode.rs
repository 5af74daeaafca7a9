//! Shared vocabulary: transport modes, weather states, commute categories and
//! the per-mode vector that carries every mode-indexed quantity.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A commute mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportMode {
    Walk,
    Cycle,
    PublicTransport,
    Car,
}

impl TransportMode {
    /// All modes in canonical order (walk, cycle, public transport, car).
    pub const ALL: [TransportMode; 4] = [
        TransportMode::Walk,
        TransportMode::Cycle,
        TransportMode::PublicTransport,
        TransportMode::Car,
    ];

    pub const fn index(self) -> usize {
        match self {
            TransportMode::Walk => 0,
            TransportMode::Cycle => 1,
            TransportMode::PublicTransport => 2,
            TransportMode::Car => 3,
        }
    }

    pub const fn from_index(i: usize) -> Option<TransportMode> {
        match i {
            0 => Some(TransportMode::Walk),
            1 => Some(TransportMode::Cycle),
            2 => Some(TransportMode::PublicTransport),
            3 => Some(TransportMode::Car),
            _ => None,
        }
    }

    /// Walking and cycling count as active travel.
    pub const fn is_active(self) -> bool {
        matches!(self, TransportMode::Walk | TransportMode::Cycle)
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            TransportMode::Walk => "walk",
            TransportMode::Cycle => "cycle",
            TransportMode::PublicTransport => "public_transport",
            TransportMode::Car => "car",
        }
    }
}

impl fmt::Display for TransportMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransportMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "walk" => Ok(TransportMode::Walk),
            "cycle" => Ok(TransportMode::Cycle),
            "public_transport" | "pt" => Ok(TransportMode::PublicTransport),
            "car" => Ok(TransportMode::Car),
            other => Err(format!("unknown transport mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weather {
    Wet,
    Dry,
}

impl Weather {
    /// Row/column index in a transition matrix (wet first).
    pub const fn index(self) -> usize {
        match self {
            Weather::Wet => 0,
            Weather::Dry => 1,
        }
    }

    pub const fn from_index(i: usize) -> Weather {
        if i == 0 {
            Weather::Wet
        } else {
            Weather::Dry
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Weather::Wet => "wet",
            Weather::Dry => "dry",
        }
    }
}

impl fmt::Display for Weather {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Weather {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wet" | "Wet" => Ok(Weather::Wet),
            "dry" | "Dry" => Ok(Weather::Dry),
            other => Err(format!("unknown weather '{other}'")),
        }
    }
}

/// Straight-line commute length class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommuteCategory {
    Local,
    City,
    Beyond,
}

impl CommuteCategory {
    pub const ALL: [CommuteCategory; 3] =
        [CommuteCategory::Local, CommuteCategory::City, CommuteCategory::Beyond];

    pub const fn as_str(self) -> &'static str {
        match self {
            CommuteCategory::Local => "local",
            CommuteCategory::City => "city",
            CommuteCategory::Beyond => "beyond",
        }
    }
}

impl fmt::Display for CommuteCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CommuteCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local" => Ok(CommuteCategory::Local),
            "city" => Ok(CommuteCategory::City),
            "beyond" | "distant" => Ok(CommuteCategory::Beyond),
            other => Err(format!("unknown commute category '{other}'")),
        }
    }
}

/// One value per transport mode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeVector<V> {
    pub walk: V,
    pub cycle: V,
    pub public_transport: V,
    pub car: V,
}

impl<V> ModeVector<V> {
    pub const fn new(walk: V, cycle: V, public_transport: V, car: V) -> Self {
        ModeVector { walk, cycle, public_transport, car }
    }

    pub fn from_fn(mut f: impl FnMut(TransportMode) -> V) -> Self {
        ModeVector {
            walk: f(TransportMode::Walk),
            cycle: f(TransportMode::Cycle),
            public_transport: f(TransportMode::PublicTransport),
            car: f(TransportMode::Car),
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(TransportMode, &V) -> U) -> ModeVector<U> {
        ModeVector::from_fn(|m| f(m, &self[m]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (TransportMode, &V)> {
        TransportMode::ALL.into_iter().map(move |m| (m, &self[m]))
    }
}

impl<V: Copy> ModeVector<V> {
    pub const fn splat(v: V) -> Self {
        ModeVector { walk: v, cycle: v, public_transport: v, car: v }
    }

    pub fn to_array(&self) -> [V; 4] {
        [self.walk, self.cycle, self.public_transport, self.car]
    }

    pub fn from_array(a: [V; 4]) -> Self {
        ModeVector::new(a[0], a[1], a[2], a[3])
    }
}

impl ModeVector<f64> {
    pub fn sum(&self) -> f64 {
        self.walk + self.cycle + self.public_transport + self.car
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|_, v| v * k)
    }

    /// Pointwise product.
    pub fn hadamard(&self, other: &Self) -> Self {
        ModeVector::from_fn(|m| self[m] * other[m])
    }

    pub fn one_hot(mode: TransportMode) -> Self {
        ModeVector::from_fn(|m| if m == mode { 1.0 } else { 0.0 })
    }
}

impl<V> Index<TransportMode> for ModeVector<V> {
    type Output = V;

    #[inline]
    fn index(&self, m: TransportMode) -> &V {
        match m {
            TransportMode::Walk => &self.walk,
            TransportMode::Cycle => &self.cycle,
            TransportMode::PublicTransport => &self.public_transport,
            TransportMode::Car => &self.car,
        }
    }
}

impl<V> IndexMut<TransportMode> for ModeVector<V> {
    #[inline]
    fn index_mut(&mut self, m: TransportMode) -> &mut V {
        match m {
            TransportMode::Walk => &mut self.walk,
            TransportMode::Cycle => &mut self.cycle,
            TransportMode::PublicTransport => &mut self.public_transport,
            TransportMode::Car => &mut self.car,
        }
    }
}

impl Add for ModeVector<f64> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        ModeVector::from_fn(|m| self[m] + rhs[m])
    }
}

impl Mul<f64> for ModeVector<f64> {
    type Output = Self;

    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

/// Day of week with day 0 a Monday; every day is a commuting day.
pub fn weekday(day: u32) -> u8 {
    (day % 7) as u8
}

pub const WEDNESDAY: u8 = 2;

pub fn weekday_name(w: u8) -> &'static str {
    ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"][w as usize % 7]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn active_classification() {
        let active: Vec<_> = TransportMode::ALL.into_iter().filter(|m| m.is_active()).collect();
        assert_eq!(active, vec![TransportMode::Walk, TransportMode::Cycle]);
    }

    #[test]
    fn index_round_trip() {
        for m in TransportMode::ALL {
            assert_eq!(TransportMode::from_index(m.index()), Some(m));
            assert_eq!(m.as_str().parse::<TransportMode>().unwrap(), m);
        }
        assert_eq!(TransportMode::from_index(4), None);
    }

    #[test]
    fn weekday_anchor() {
        assert_eq!(weekday(0), 0);
        assert_eq!(weekday(2), WEDNESDAY);
        assert_eq!(weekday(365), 1);
        assert_eq!(weekday(366), WEDNESDAY);
    }

    #[test]
    fn mode_vector_serialises_with_named_fields() {
        let v = ModeVector::new(0.7, 0.9, 0.6, 0.8);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"walk":0.7,"cycle":0.9,"public_transport":0.6,"car":0.8}"#);
        assert!(serde_json::from_str::<ModeVector<f64>>(r#"{"walk":1,"cycle":1,"public_transport":1}"#).is_err());
        assert!(serde_json::from_str::<ModeVector<f64>>(
            r#"{"walk":1,"cycle":1,"public_transport":1,"car":1,"bus":2}"#
        )
        .is_err());
    }

    fn mv() -> impl Strategy<Value = ModeVector<f64>> {
        prop::array::uniform4(-1e6f64..1e6).prop_map(ModeVector::from_array)
    }

    proptest! {
        #[test]
        fn sums_commute(a in mv(), b in mv()) {
            prop_assert_eq!(a + b, b + a);
            prop_assert_eq!(a.hadamard(&b), b.hadamard(&a));
        }

        #[test]
        fn scale_is_pointwise(a in mv(), k in -100.0f64..100.0) {
            let s = a * k;
            for m in TransportMode::ALL {
                prop_assert_eq!(s[m], a[m] * k);
            }
        }
    }
}
