//! Scalar inputs that keep the text they were written as, so a spec file
//! serializes back to what the user wrote.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ecs_core::C64;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Complex amplitude such as `2`, `1+1i`, `-0.5i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Amplitude {
    text: String,
    value: C64,
}

/// Phase in radians; accepts multiples of π such as `pi/2`, `-3pi/4`,
/// `2*pi/3`, or a plain number.
#[derive(Clone, Debug, PartialEq)]
pub struct Angle {
    text: String,
    value: f64,
}

impl Amplitude {
    pub fn value(&self) -> C64 {
        self.value
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl Angle {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl FromStr for Amplitude {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let text = s.trim();
        let value: C64 = text.parse().map_err(|_| format!("cannot parse complex number {s:?}"))?;
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(format!("complex number {s:?} is not finite"));
        }
        Ok(Amplitude {
            text: text.to_string(),
            value,
        })
    }
}

impl FromStr for Angle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let text = s.trim();
        let value = parse_angle(text).ok_or_else(|| format!("cannot parse angle {s:?} (try 1.2, pi/2 or -3pi/4)"))?;
        Ok(Angle {
            text: text.to_string(),
            value,
        })
    }
}

fn parse_angle(s: &str) -> Option<f64> {
    let compact: String = s
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_lowercase();
    let Some(at) = compact.find("pi") else {
        return compact.parse::<f64>().ok().filter(|v| v.is_finite());
    };
    let head = compact[..at].trim_end_matches('*');
    let tail = &compact[at + 2..];
    let numerator = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().ok()?,
    };
    let denominator = match tail {
        "" => 1.0,
        t => t.strip_prefix('/')?.parse::<f64>().ok().filter(|d| *d != 0.0)?,
    };
    let v = numerator * PI / denominator;
    v.is_finite().then_some(v)
}

impl fmt::Display for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

macro_rules! text_serde {
    ($ty:ident, $what:literal) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.text)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                struct V;
                impl<'de> Visitor<'de> for V {
                    type Value = $ty;

                    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                        f.write_str($what)
                    }

                    fn visit_str<E: de::Error>(self, v: &str) -> Result<$ty, E> {
                        v.parse().map_err(E::custom)
                    }

                    fn visit_f64<E: de::Error>(self, v: f64) -> Result<$ty, E> {
                        format!("{v:?}").parse().map_err(E::custom)
                    }

                    fn visit_i64<E: de::Error>(self, v: i64) -> Result<$ty, E> {
                        v.to_string().parse().map_err(E::custom)
                    }

                    fn visit_u64<E: de::Error>(self, v: u64) -> Result<$ty, E> {
                        v.to_string().parse().map_err(E::custom)
                    }
                }
                d.deserialize_any(V)
            }
        }
    };
}

text_serde!(Amplitude, "a complex number as a string or a real number");
text_serde!(Angle, "an angle as a number or a string such as \"pi/2\"");

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn angles() {
        assert_eq!("pi/2".parse::<Angle>().unwrap().value(), FRAC_PI_2);
        assert_eq!("-pi".parse::<Angle>().unwrap().value(), -PI);
        assert_eq!("3pi/4".parse::<Angle>().unwrap().value(), 3.0 * PI / 4.0);
        assert_eq!("2*pi/3".parse::<Angle>().unwrap().value(), 2.0 * PI / 3.0);
        assert_eq!("0.25".parse::<Angle>().unwrap().value(), 0.25);
        assert!("pi/0".parse::<Angle>().is_err());
        assert!("tau".parse::<Angle>().is_err());
        assert!("pi2".parse::<Angle>().is_err());
    }

    #[test]
    fn amplitudes() {
        assert_eq!("1+1i".parse::<Amplitude>().unwrap().value(), C64::new(1.0, 1.0));
        assert_eq!("2".parse::<Amplitude>().unwrap().value(), C64::new(2.0, 0.0));
        assert_eq!("-0.5i".parse::<Amplitude>().unwrap().value(), C64::new(0.0, -0.5));
        assert!("1+".parse::<Amplitude>().is_err());
        assert_eq!("1+1i".parse::<Amplitude>().unwrap().to_string(), "1+1i");
    }
}
