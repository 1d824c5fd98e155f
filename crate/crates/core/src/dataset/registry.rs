//! Property channels and the selector encoding.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DatasetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    DetVelocity,
    DetPressure,
    HeatDetonation,
    GurneyEnergy,
    ImpactH50,
    ImpactE50,
    HeatFormCrystal,
    HeatSublimation,
    HeatFormGas,
}

impl Property {
    pub const ALL: [Property; 9] = [
        Property::DetVelocity,
        Property::DetPressure,
        Property::HeatDetonation,
        Property::GurneyEnergy,
        Property::ImpactH50,
        Property::ImpactE50,
        Property::HeatFormCrystal,
        Property::HeatSublimation,
        Property::HeatFormGas,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Property::DetVelocity => "det_velocity",
            Property::DetPressure => "det_pressure",
            Property::HeatDetonation => "heat_detonation",
            Property::GurneyEnergy => "gurney_energy",
            Property::ImpactH50 => "impact_h50",
            Property::ImpactE50 => "impact_e50",
            Property::HeatFormCrystal => "heat_form_crystal",
            Property::HeatSublimation => "heat_sublimation",
            Property::HeatFormGas => "heat_form_gas",
        }
    }

    /// Short label used in reports, e.g. `D` or `H_sub`.
    pub fn symbol(self) -> &'static str {
        match self {
            Property::DetVelocity => "D",
            Property::DetPressure => "P",
            Property::HeatDetonation => "Q_ex",
            Property::GurneyEnergy => "E_G",
            Property::ImpactH50 => "h50",
            Property::ImpactE50 => "E50",
            Property::HeatFormCrystal => "H_F",
            Property::HeatSublimation => "H_sub",
            Property::HeatFormGas => "H_gas",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Property {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL
            .into_iter()
            .find(|p| p.token() == s)
            .ok_or_else(|| format!("unknown property '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    Exp,
    Calc,
}

impl Fidelity {
    pub fn token(self) -> &'static str {
        match self {
            Fidelity::Exp => "exp",
            Fidelity::Calc => "calc",
        }
    }
}

impl fmt::Display for Fidelity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Fidelity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exp" => Ok(Fidelity::Exp),
            "calc" => Ok(Fidelity::Calc),
            other => Err(format!("unknown fidelity '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    None,
    Log10,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyChannel {
    pub property: Property,
    pub fidelity: Fidelity,
    pub unit: String,
    pub transform: Transform,
}

impl PropertyChannel {
    pub fn new(property: Property, fidelity: Fidelity, unit: &str, transform: Transform) -> Self {
        PropertyChannel {
            property,
            fidelity,
            unit: unit.to_string(),
            transform,
        }
    }

    /// `property:fidelity`, unique within a registry.
    pub fn key(&self) -> String {
        format!("{}:{}", self.property, self.fidelity)
    }

    /// Human-readable label such as `P exp` or `log(h50) exp`.
    pub fn label(&self) -> String {
        match self.transform {
            Transform::None => format!("{} {}", self.property.symbol(), self.fidelity),
            Transform::Log10 => format!("log({}) {}", self.property.symbol(), self.fidelity),
        }
    }

    /// Maps a raw value to model units. `None` when the value is outside
    /// the transform's domain.
    pub fn forward(&self, value: f64) -> Option<f64> {
        let y = match self.transform {
            Transform::None => value,
            Transform::Log10 if value > 0.0 => value.log10(),
            Transform::Log10 => return None,
        };
        y.is_finite().then_some(y)
    }

    pub fn inverse(&self, transformed: f64) -> f64 {
        match self.transform {
            Transform::None => transformed,
            Transform::Log10 => 10f64.powf(transformed),
        }
    }
}

/// Ordered channel list. Order fixes the selector encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PropertyChannel>", into = "Vec<PropertyChannel>")]
pub struct PropertyRegistry {
    channels: Vec<PropertyChannel>,
}

impl TryFrom<Vec<PropertyChannel>> for PropertyRegistry {
    type Error = DatasetError;
    fn try_from(channels: Vec<PropertyChannel>) -> Result<Self, Self::Error> {
        PropertyRegistry::new(channels)
    }
}

impl From<PropertyRegistry> for Vec<PropertyChannel> {
    fn from(r: PropertyRegistry) -> Self {
        r.channels
    }
}

impl PropertyRegistry {
    pub fn new(channels: Vec<PropertyChannel>) -> Result<Self, DatasetError> {
        if channels.is_empty() {
            return Err(DatasetError::InvalidRegistry("registry is empty".into()));
        }
        for (i, c) in channels.iter().enumerate() {
            if channels[..i]
                .iter()
                .any(|d| d.property == c.property && d.fidelity == c.fidelity)
            {
                return Err(DatasetError::InvalidRegistry(format!(
                    "channel {} appears twice",
                    c.key()
                )));
            }
            if c.property == Property::ImpactH50 && c.transform != Transform::Log10 {
                return Err(DatasetError::InvalidRegistry(
                    "impact_h50 must use the log10 transform".into(),
                ));
            }
        }
        Ok(PropertyRegistry { channels })
    }

    /// Table of eleven literature channels plus experimental drop energy as
    /// the twelfth.
    pub fn default_registry() -> Self {
        use Fidelity::{Calc, Exp};
        use Property::*;
        let t = Transform::None;
        PropertyRegistry::new(vec![
            PropertyChannel::new(DetVelocity, Exp, "km/s", t),
            PropertyChannel::new(DetPressure, Exp, "GPa", t),
            PropertyChannel::new(HeatDetonation, Exp, "kJ/g", t),
            PropertyChannel::new(ImpactH50, Exp, "cm", Transform::Log10),
            PropertyChannel::new(HeatFormCrystal, Exp, "kJ/mol", t),
            PropertyChannel::new(DetVelocity, Calc, "km/s", t),
            PropertyChannel::new(DetPressure, Calc, "GPa", t),
            PropertyChannel::new(HeatDetonation, Calc, "kJ/g", t),
            PropertyChannel::new(GurneyEnergy, Calc, "kJ/g", t),
            PropertyChannel::new(HeatSublimation, Calc, "kJ/mol", t),
            PropertyChannel::new(HeatFormGas, Calc, "kJ/mol", t),
            PropertyChannel::new(ImpactE50, Exp, "J", t),
        ])
        .expect("default registry is valid")
    }

    pub fn channels(&self) -> &[PropertyChannel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&PropertyChannel> {
        self.channels.get(index)
    }

    pub fn index_of(&self, property: Property, fidelity: Fidelity) -> Option<usize> {
        self.channels
            .iter()
            .position(|c| c.property == property && c.fidelity == fidelity)
    }

    pub fn index_of_key(&self, key: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.key() == key)
    }

    pub fn selector_onehot(&self, index: usize) -> Result<Vec<f64>, DatasetError> {
        if index >= self.len() {
            return Err(DatasetError::UnknownChannel(format!("channel index {index}")));
        }
        let mut v = vec![0.0; self.len()];
        v[index] = 1.0;
        Ok(v)
    }

    pub fn selector_for(&self, property: Property, fidelity: Fidelity) -> Result<Vec<f64>, DatasetError> {
        let index = self
            .index_of(property, fidelity)
            .ok_or_else(|| DatasetError::UnknownChannel(format!("{property}:{fidelity}")))?;
        self.selector_onehot(index)
    }

    /// Registry restricted to the given channels, keeping this registry's
    /// order. Channels absent here are ignored.
    pub fn restrict(&self, keep: &[(Property, Fidelity)]) -> Option<Self> {
        let channels: Vec<PropertyChannel> = self
            .channels
            .iter()
            .filter(|c| keep.contains(&(c.property, c.fidelity)))
            .cloned()
            .collect();
        PropertyRegistry::new(channels).ok()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("registry serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        serde_json::from_str(text).map_err(|e| DatasetError::InvalidRegistry(e.to_string()))
    }
}
