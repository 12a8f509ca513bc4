// SPDX-License-Identifier: Apache-2.0

//! Link configuration files.
//!
//! One link per line:
//!
//! ```text
//! <src-ipv4> <dst-ipv4> [rate=<number><unit>] [delay=<number><unit>]
//! ```
//!
//! Rate units are `bit`, `Kbit`, `Mbit`, `Gbit` (powers of 1000, bits per
//! second, prefix case-insensitive); delay units are `ns`, `us`, `ms`, `s`.
//! `#` starts a comment and blank lines are skipped.

use std::fmt::Write as _;
use std::net::Ipv4Addr;

use crate::error::{ConfigError, ConfigErrorKind};
use crate::params::{LinkParams, LinkSpec};

const RATE_UNITS: [(&str, u128); 4] = [
    ("Gbit", 1_000_000_000),
    ("Mbit", 1_000_000),
    ("Kbit", 1_000),
    ("bit", 1),
];

const DELAY_UNITS: [(&str, u128); 4] = [
    ("s", 1_000_000_000),
    ("ms", 1_000_000),
    ("us", 1_000),
    ("ns", 1),
];

/// Parses a whole configuration document. Fails on the first bad line.
pub fn parse_link_config(text: &str) -> Result<Vec<LinkSpec>, ConfigError> {
    let mut specs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let spec = parse_line(line).map_err(|kind| ConfigError {
            line: idx + 1,
            kind,
        })?;
        specs.push(spec);
    }
    Ok(specs)
}

fn parse_line(line: &str) -> Result<LinkSpec, ConfigErrorKind> {
    let mut tokens = line.split_whitespace();
    let src = parse_addr(tokens.next())?;
    let dst = parse_addr(tokens.next())?;

    let mut rate = None;
    let mut delay = None;
    for token in tokens {
        let (field, value) = token
            .split_once('=')
            .ok_or_else(|| ConfigErrorKind::UnknownField(token.to_string()))?;
        match field {
            "rate" => {
                if rate.is_some() {
                    return Err(ConfigErrorKind::DuplicateField(field.into()));
                }
                rate = Some(parse_rate(value)?);
            }
            "delay" => {
                if delay.is_some() {
                    return Err(ConfigErrorKind::DuplicateField(field.into()));
                }
                delay = Some(parse_delay(value)?);
            }
            _ => return Err(ConfigErrorKind::UnknownField(field.to_string())),
        }
    }

    let params = LinkParams::new(rate, delay)?;
    Ok(LinkSpec::new(src, dst, params)?)
}

fn parse_addr(token: Option<&str>) -> Result<Ipv4Addr, ConfigErrorKind> {
    let token = token.ok_or(ConfigErrorKind::MissingAddress)?;
    token
        .parse()
        .map_err(|_| ConfigErrorKind::BadAddress(token.to_string()))
}

/// Parses a rate such as `100Mbit` and returns bytes per second.
pub fn parse_rate(text: &str) -> Result<u64, ConfigErrorKind> {
    let bad = || ConfigErrorKind::BadRate(text.to_string());
    let (number, unit) = split_unit(text).ok_or_else(bad)?;
    let multiplier = RATE_UNITS
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(unit))
        .map(|(_, m)| *m)
        .ok_or_else(bad)?;
    let bits = match scale_exact(number, multiplier) {
        Scaled::Exact(bits) => bits,
        Scaled::Fractional => return Err(ConfigErrorKind::FractionalRate(text.to_string())),
        Scaled::Invalid => return Err(bad()),
    };
    if bits % 8 != 0 {
        return Err(ConfigErrorKind::FractionalRate(text.to_string()));
    }
    u64::try_from(bits / 8).map_err(|_| bad())
}

/// Parses a duration such as `5ms` and returns nanoseconds.
pub fn parse_delay(text: &str) -> Result<u64, ConfigErrorKind> {
    let bad = || ConfigErrorKind::BadDelay(text.to_string());
    let (number, unit) = split_unit(text).ok_or_else(bad)?;
    let multiplier = DELAY_UNITS
        .iter()
        .find(|(name, _)| *name == unit)
        .map(|(_, m)| *m)
        .ok_or_else(bad)?;
    match scale_exact(number, multiplier) {
        Scaled::Exact(ns) => u64::try_from(ns).map_err(|_| bad()),
        Scaled::Fractional | Scaled::Invalid => Err(bad()),
    }
}

fn split_unit(text: &str) -> Option<(&str, &str)> {
    let at = text.find(|c: char| !(c.is_ascii_digit() || c == '.'))?;
    let (number, unit) = text.split_at(at);
    (!number.is_empty()).then_some((number, unit))
}

enum Scaled {
    Exact(u128),
    Fractional,
    Invalid,
}

/// Multiplies a decimal literal by `multiplier` without going through
/// floating point.
fn scale_exact(number: &str, multiplier: u128) -> Scaled {
    let (int_part, frac_part) = number.split_once('.').unwrap_or((number, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Scaled::Invalid;
    }
    if frac_part.len() > 18 || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return Scaled::Invalid;
    }
    let digits = format!("{int_part}{frac_part}");
    let Ok(mantissa) = digits.parse::<u128>() else {
        return Scaled::Invalid;
    };
    let Some(scaled) = mantissa.checked_mul(multiplier) else {
        return Scaled::Invalid;
    };
    let divisor = 10u128.pow(frac_part.len() as u32);
    if scaled % divisor != 0 {
        return Scaled::Fractional;
    }
    Scaled::Exact(scaled / divisor)
}

/// Formats bytes per second using the largest unit that divides evenly.
pub fn render_rate(bytes_per_sec: u64) -> String {
    let bits = bytes_per_sec as u128 * 8;
    let (unit, m) = RATE_UNITS
        .iter()
        .find(|(_, m)| bits.is_multiple_of(*m))
        .copied()
        .unwrap_or(("bit", 1));
    format!("{}{unit}", bits / m)
}

/// Formats nanoseconds using the largest unit that divides evenly.
pub fn render_delay(ns: u64) -> String {
    if ns == 0 {
        return "0ms".to_string();
    }
    let ns = ns as u128;
    let (unit, m) = DELAY_UNITS
        .iter()
        .find(|(_, m)| ns.is_multiple_of(*m))
        .copied()
        .unwrap_or(("ns", 1));
    format!("{}{unit}", ns / m)
}

/// Inverse of [`parse_link_config`] for a single record.
pub fn render_link_spec(spec: &LinkSpec) -> String {
    let mut line = format!("{} {}", spec.src(), spec.dst());
    let params = spec.params();
    if let Some(rate) = params.rate() {
        let _ = write!(line, " rate={}", render_rate(rate.get()));
    }
    if let Some(latency) = params.latency() {
        let _ = write!(line, " delay={}", render_delay(latency));
    }
    line
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::error::ParamsError;

    #[test]
    fn rate_and_delay_are_normalized() {
        let specs = parse_link_config("10.0.0.1 10.0.0.2 rate=100Mbit delay=5ms").unwrap();
        assert_eq!(specs.len(), 1);
        let s = specs[0];
        assert_eq!(s.src(), Ipv4Addr::new(10, 0, 0, 1));
        assert_eq!(s.dst(), Ipv4Addr::new(10, 0, 0, 2));
        assert_eq!(s.params().rate().unwrap().get(), 12_500_000);
        assert_eq!(s.params().latency(), Some(5_000_000));
    }

    #[test]
    fn zero_delay_without_rate() {
        let specs = parse_link_config("10.0.0.1 10.0.0.2 delay=0ms").unwrap();
        assert_eq!(specs[0].params().latency(), Some(0));
        assert_eq!(specs[0].params().rate(), None);
    }

    #[test]
    fn self_link_is_an_error() {
        let err = parse_link_config("10.0.0.1 10.0.0.1 delay=1ms").unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(
            err.kind,
            ConfigErrorKind::Params(ParamsError::SelfLink(Ipv4Addr::new(10, 0, 0, 1)))
        );
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let text =
            "# mesh\n\n10.0.0.1 10.0.0.2 delay=1ms # inline\n   \n10.0.0.2 10.0.0.1 rate=1Gbit\n";
        let specs = parse_link_config(text).unwrap();
        assert_eq!(specs.len(), 2);
        assert_eq!(specs[1].params().rate().unwrap().get(), 125_000_000);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "10.0.0.1 10.0.0.2 delay=1ms\n# c\n10.0.0.1 10.0.0.300 delay=1ms\n";
        let err = parse_link_config(text).unwrap_err();
        assert_eq!(err.line, 3);
        assert!(matches!(err.kind, ConfigErrorKind::BadAddress(_)));

        let cases = [
            (
                "10.0.0.1 10.0.0.2",
                ConfigErrorKind::Params(ParamsError::EmptyParams),
            ),
            ("10.0.0.1", ConfigErrorKind::MissingAddress),
            (
                "10.0.0.1 10.0.0.2 rate=fast",
                ConfigErrorKind::BadRate("fast".into()),
            ),
            (
                "10.0.0.1 10.0.0.2 rate=10Mbps",
                ConfigErrorKind::BadRate("10Mbps".into()),
            ),
            (
                "10.0.0.1 10.0.0.2 delay=5min",
                ConfigErrorKind::BadDelay("5min".into()),
            ),
            (
                "10.0.0.1 10.0.0.2 delay=1.5ns",
                ConfigErrorKind::BadDelay("1.5ns".into()),
            ),
            (
                "10.0.0.1 10.0.0.2 rate=12bit",
                ConfigErrorKind::FractionalRate("12bit".into()),
            ),
            (
                "10.0.0.1 10.0.0.2 rate=0bit",
                ConfigErrorKind::Params(ParamsError::ZeroRate),
            ),
            (
                "10.0.0.1 10.0.0.2 loss=1",
                ConfigErrorKind::UnknownField("loss".into()),
            ),
            (
                "10.0.0.1 10.0.0.2 delay=1ms delay=2ms",
                ConfigErrorKind::DuplicateField("delay".into()),
            ),
        ];
        for (line, kind) in cases {
            let err = parse_link_config(line).unwrap_err();
            assert_eq!(err.kind, kind, "{line}");
        }
    }

    #[test]
    fn decimal_values() {
        assert_eq!(parse_rate("1.5Mbit").unwrap(), 187_500);
        assert_eq!(parse_rate("100mbit").unwrap(), 12_500_000);
        assert_eq!(parse_delay("0.5ms").unwrap(), 500_000);
        assert_eq!(parse_delay("2s").unwrap(), 2_000_000_000);
        assert_eq!(parse_delay("7us").unwrap(), 7_000);
    }

    #[test]
    fn rendering_picks_largest_unit() {
        assert_eq!(render_rate(12_500_000), "100Mbit");
        assert_eq!(render_rate(125_000), "1Mbit");
        assert_eq!(render_rate(187_500), "1500Kbit");
        assert_eq!(render_rate(1), "8bit");
        assert_eq!(render_delay(5_000_000), "5ms");
        assert_eq!(render_delay(1_500), "1500ns");
        assert_eq!(render_delay(0), "0ms");
    }

    fn arb_spec() -> impl Strategy<Value = LinkSpec> {
        (
            any::<u32>(),
            any::<u32>(),
            prop::option::of(1u64..=u64::MAX / 8),
            prop::option::of(any::<u64>()),
        )
            .prop_filter_map("valid spec", |(s, d, rate, latency)| {
                let params = LinkParams::new(rate, latency).ok()?;
                LinkSpec::new(Ipv4Addr::from(s), Ipv4Addr::from(d), params).ok()
            })
    }

    proptest! {
        #[test]
        fn render_then_parse_is_identity(specs in prop::collection::vec(arb_spec(), 0..20)) {
            let text: String = specs.iter().map(|s| render_link_spec(s) + "\n").collect();
            prop_assert_eq!(parse_link_config(&text).unwrap(), specs);
        }
    }
}
