use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Int(u64),
    Text(String),
}

fn split_unit(s: &str) -> (&str, &str) {
    let s = s.trim();
    let at = s.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(s.len());
    let (n, u) = s.split_at(at);
    (n, u.trim())
}

fn scaled(num: &str, scale: f64, whole: &str) -> Result<u64, String> {
    let v: f64 = num.parse().map_err(|_| format!("invalid number in `{whole}`"))?;
    let x = v * scale;
    if !x.is_finite() || x < 0.0 {
        return Err(format!("`{whole}` is out of range"));
    }
    Ok(x.round() as u64)
}

/// Link rate in bits per second; accepts `10000000000`, `"10Gbps"`, `"100Mbps"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Repr", into = "String")]
pub struct BitRate(pub u64);

impl FromStr for BitRate {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, u) = split_unit(s);
        let scale = match u.to_ascii_lowercase().as_str() {
            "" | "bps" => 1.0,
            "k" | "kbps" => 1e3,
            "m" | "mbps" => 1e6,
            "g" | "gbps" => 1e9,
            _ => return Err(format!("unknown rate unit in `{s}` (use bps, Kbps, Mbps or Gbps)")),
        };
        scaled(n, scale, s).map(BitRate)
    }
}

impl TryFrom<Repr> for BitRate {
    type Error = String;
    fn try_from(r: Repr) -> Result<Self, String> {
        match r {
            Repr::Int(v) => Ok(BitRate(v)),
            Repr::Text(s) => s.parse(),
        }
    }
}

impl fmt::Display for BitRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.0;
        if v.is_multiple_of(1_000_000_000) && v > 0 {
            write!(f, "{}Gbps", v / 1_000_000_000)
        } else if v.is_multiple_of(1_000_000) && v > 0 {
            write!(f, "{}Mbps", v / 1_000_000)
        } else {
            write!(f, "{v}bps")
        }
    }
}

impl From<BitRate> for String {
    fn from(r: BitRate) -> String {
        r.to_string()
    }
}

/// Byte count; accepts integers or `"128KB"`, `"19.2MB"` (binary multiples).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Repr", into = "u64")]
pub struct ByteSize(pub u64);

impl FromStr for ByteSize {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, u) = split_unit(s);
        let scale = match u.to_ascii_uppercase().as_str() {
            "" | "B" => 1.0,
            "KB" | "K" | "KIB" => 1024.0,
            "MB" | "M" | "MIB" => 1024.0 * 1024.0,
            "GB" | "G" | "GIB" => 1024.0 * 1024.0 * 1024.0,
            _ => return Err(format!("unknown size unit in `{s}` (use B, KB, MB or GB)")),
        };
        scaled(n, scale, s).map(ByteSize)
    }
}

impl TryFrom<Repr> for ByteSize {
    type Error = String;
    fn try_from(r: Repr) -> Result<Self, String> {
        match r {
            Repr::Int(v) => Ok(ByteSize(v)),
            Repr::Text(s) => s.parse(),
        }
    }
}

impl From<ByteSize> for u64 {
    fn from(b: ByteSize) -> u64 {
        b.0
    }
}
