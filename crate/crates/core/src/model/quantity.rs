//! Physical quantities with units, normalized to bits, seconds and bits per
//! second on ingest.

use std::fmt;
use std::str::FromStr;

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Time,
    Data,
    Rate,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Time => "time",
            Dimension::Data => "data",
            Dimension::Rate => "rate",
        })
    }
}

/// Supported units. Scaling to the base unit is exact: small units divide by
/// a power of ten, large ones multiply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    S,
    Ms,
    Us,
    Ns,
    Bit,
    Byte,
    KiloByte,
    MegaByte,
    KiloBit,
    MegaBit,
    Bps,
    Kbps,
    Mbps,
    Gbps,
}

enum Scale {
    Mul(f64),
    Div(f64),
}

impl Unit {
    pub const ALL: [Unit; 14] = [
        Unit::S,
        Unit::Ms,
        Unit::Us,
        Unit::Ns,
        Unit::Bit,
        Unit::Byte,
        Unit::KiloByte,
        Unit::MegaByte,
        Unit::KiloBit,
        Unit::MegaBit,
        Unit::Bps,
        Unit::Kbps,
        Unit::Mbps,
        Unit::Gbps,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Unit::S => "s",
            Unit::Ms => "ms",
            Unit::Us => "us",
            Unit::Ns => "ns",
            Unit::Bit => "b",
            Unit::Byte => "B",
            Unit::KiloByte => "kB",
            Unit::MegaByte => "MB",
            Unit::KiloBit => "kb",
            Unit::MegaBit => "Mb",
            Unit::Bps => "bps",
            Unit::Kbps => "kbps",
            Unit::Mbps => "Mbps",
            Unit::Gbps => "Gbps",
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Unit::S | Unit::Ms | Unit::Us | Unit::Ns => Dimension::Time,
            Unit::Bit
            | Unit::Byte
            | Unit::KiloByte
            | Unit::MegaByte
            | Unit::KiloBit
            | Unit::MegaBit => Dimension::Data,
            Unit::Bps | Unit::Kbps | Unit::Mbps | Unit::Gbps => Dimension::Rate,
        }
    }

    /// The base unit of a dimension.
    pub fn base(dim: Dimension) -> Unit {
        match dim {
            Dimension::Time => Unit::S,
            Dimension::Data => Unit::Bit,
            Dimension::Rate => Unit::Bps,
        }
    }

    fn scale(self) -> Scale {
        match self {
            Unit::S | Unit::Bit | Unit::Bps => Scale::Mul(1.0),
            Unit::Ms => Scale::Div(1e3),
            Unit::Us => Scale::Div(1e6),
            Unit::Ns => Scale::Div(1e9),
            Unit::Byte => Scale::Mul(8.0),
            Unit::KiloByte => Scale::Mul(8e3),
            Unit::MegaByte => Scale::Mul(8e6),
            Unit::KiloBit | Unit::Kbps => Scale::Mul(1e3),
            Unit::MegaBit | Unit::Mbps => Scale::Mul(1e6),
            Unit::Gbps => Scale::Mul(1e9),
        }
    }

    /// Value expressed in this unit, converted to the base unit.
    pub fn to_base(self, value: f64) -> f64 {
        match self.scale() {
            Scale::Mul(k) => value * k,
            Scale::Div(k) => value / k,
        }
    }

    /// Base-unit value expressed in this unit (may round).
    pub fn from_base(self, value: f64) -> f64 {
        match self.scale() {
            Scale::Mul(k) => value / k,
            Scale::Div(k) => value * k,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Unit {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Unit::ALL
            .into_iter()
            .find(|u| u.symbol() == s)
            .ok_or_else(|| ModelError::UnknownUnit(s.to_string()))
    }
}

/// A unit default that must belong to `dim`.
pub fn unit_of_dimension(text: &str, dim: Dimension) -> Result<Unit, ModelError> {
    let unit: Unit = text.trim().parse()?;
    if unit.dimension() != dim {
        return Err(ModelError::DimensionMismatch {
            text: text.to_string(),
            expected: dim,
        });
    }
    Ok(unit)
}

/// Either a bare number or a number followed by a unit, as found in
/// network description files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantityInput<'a> {
    Number(f64),
    Text(&'a str),
}

/// Parses a quantity of dimension `dim` into its base unit. Bare numbers
/// (and unit-less strings) use `default`, which must be in scope.
pub fn parse_quantity(
    input: QuantityInput<'_>,
    dim: Dimension,
    default: Option<Unit>,
) -> Result<f64, ModelError> {
    let (value, unit) = match input {
        QuantityInput::Number(v) => (v, None),
        QuantityInput::Text(text) => split_text(text)?,
    };
    let unit = match unit {
        Some(u) => u,
        None => default.ok_or(ModelError::MissingUnit {
            value,
            dimension: dim,
        })?,
    };
    if unit.dimension() != dim {
        return Err(ModelError::DimensionMismatch {
            text: match input {
                QuantityInput::Number(v) => format!("{v}{unit}"),
                QuantityInput::Text(t) => t.to_string(),
            },
            expected: dim,
        });
    }
    if !value.is_finite() || value < 0.0 {
        return Err(ModelError::InvalidQuantity(match input {
            QuantityInput::Number(v) => v.to_string(),
            QuantityInput::Text(t) => t.to_string(),
        }));
    }
    Ok(unit.to_base(value))
}

fn split_text(text: &str) -> Result<(f64, Option<Unit>), ModelError> {
    let trimmed = text.trim();
    let split = trimmed
        .char_indices()
        .find(|&(i, c)| {
            c.is_ascii_alphabetic()
                && !((c == 'e' || c == 'E')
                    && trimmed[i + 1..]
                        .chars()
                        .next()
                        .is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+'))
        })
        .map_or(trimmed.len(), |(i, _)| i);
    let (num, unit) = trimmed.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| ModelError::InvalidQuantity(text.to_string()))?;
    let unit = unit.trim();
    if unit.is_empty() {
        Ok((value, None))
    } else {
        Ok((value, Some(unit.parse()?)))
    }
}

/// Shortest decimal text for `value` (base unit) in `unit` that parses back
/// to exactly `value`, or `None` when no such rendering exists in `unit`.
pub fn format_exact(value: f64, unit: Unit) -> Option<String> {
    let scaled = unit.from_base(value);
    let candidates = [
        format!("{}", format!("{scaled:.12e}").parse::<f64>().ok()?),
        format!("{scaled}"),
        format!("{}", scaled.next_up()),
        format!("{}", scaled.next_down()),
    ];
    candidates
        .into_iter()
        .filter(|c| c.parse::<f64>().is_ok_and(|v| unit.to_base(v) == value))
        .min_by_key(|c| c.len())
}

/// `value` rendered with a unit suffix, preferring `unit` and falling back to
/// the dimension's base unit so that parsing returns `value` bit-exactly.
pub fn format_with_unit(value: f64, unit: Unit) -> String {
    match format_exact(value, unit) {
        Some(text) => format!("{text}{unit}"),
        None => format!("{value:e}{}", Unit::base(unit.dimension())),
    }
}
