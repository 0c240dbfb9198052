//! Scenario files: a TOML document with `[signal]`, `[lo]`, `[detector]`,
//! optional `[noise]` and `[truncation]` tables, and top-level `seed`,
//! `shots` and `max_order`.
//!
//! Parsing keeps byte spans so that every validation error names the field
//! and the line it came from.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Result};
use click_homodyne::fock::DEFAULT_TRUNCATION_BUDGET;
use click_homodyne::lo_noise::LoNoiseModel;
use click_homodyne::{DetectorConfig, LocalOscillator, Signal};
use serde::{Deserialize, Serialize, Serializer};
use toml::Spanned;

/// Evenly spaced phases `start, ..., stop` (both ends included).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl PhaseGrid {
    pub fn single(phi: f64) -> Self {
        PhaseGrid {
            start: phi,
            stop: phi,
            count: 1,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| self.start + i as f64 * step)
            .collect()
    }
}

/// A number, optionally followed by `pi`, or `pi/<d>`: `1.5`, `2pi`, `pi/2`.
fn parse_angle(text: &str) -> Result<f64> {
    let t = text.trim();
    let value = if let Some(den) = t.strip_prefix("pi/") {
        den.parse::<f64>().ok().map(|d| PI / d)
    } else if let Some(factor) = t.strip_suffix("pi") {
        match factor.trim() {
            "" => Some(PI),
            "-" => Some(-PI),
            f => f.parse::<f64>().ok().map(|f| f * PI),
        }
    } else {
        t.parse::<f64>().ok()
    };
    match value {
        Some(v) if v.is_finite() => Ok(v),
        _ => bail!("cannot read {text:?} as an angle (examples: 0.5, 2pi, pi/4)"),
    }
}

impl FromStr for PhaseGrid {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            bail!("phase grid must look like start:stop:count, got {s:?}");
        };
        let count: usize = count.trim().parse().map_err(|_| {
            anyhow::anyhow!("phase grid count must be a positive integer, got {count:?}")
        })?;
        if count == 0 {
            bail!("phase grid count must be at least 1");
        }
        Ok(PhaseGrid {
            start: parse_angle(start)?,
            stop: parse_angle(stop)?,
            count,
        })
    }
}

impl fmt::Display for PhaseGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{:?}:{}", self.start, self.stop, self.count)
    }
}

impl Serialize for PhaseGrid {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    signal: Spanned<Signal>,
    lo: RawLo,
    detector: RawDetector,
    noise: Option<RawNoise>,
    truncation: Option<RawTruncation>,
    seed: Option<Spanned<u64>>,
    shots: Option<Spanned<u64>>,
    max_order: Option<Spanned<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLo {
    r: Spanned<f64>,
    phi: Option<Spanned<f64>>,
    phase_grid: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    n_apds: Spanned<usize>,
    eta: Spanned<f64>,
    nu: Spanned<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    sigma_x: Option<Spanned<f64>>,
    sigma_p: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTruncation {
    budget: Spanned<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoSection {
    pub r: f64,
    pub phase_grid: PhaseGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSection {
    pub sigma_x: f64,
    pub sigma_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationSection {
    pub budget: f64,
}

/// A validated scenario; serializes back to the same TOML schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,
    pub signal: Signal,
    pub lo: LoSection,
    pub detector: DetectorConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    pub truncation: TruncationSection,
}

/// Collects the source position of a span for error messages.
struct Source<'a> {
    name: &'a str,
    text: &'a str,
}

impl Source<'_> {
    fn fail<T>(
        &self,
        span: std::ops::Range<usize>,
        field: &str,
        message: impl fmt::Display,
    ) -> Result<T> {
        let line = self.text[..span.start.min(self.text.len())]
            .matches('\n')
            .count()
            + 1;
        bail!("{}:{line}: invalid `{field}`: {message}", self.name)
    }

    fn check<T: Copy + fmt::Display>(
        &self,
        value: &Spanned<T>,
        field: &str,
        ok: impl Fn(T) -> bool,
        requirement: &str,
    ) -> Result<T> {
        let v = *value.get_ref();
        if ok(v) {
            Ok(v)
        } else {
            self.fail(
                value.span(),
                field,
                format!("must be {requirement}, got {v}"),
            )
        }
    }
}

fn finite_non_negative(v: f64) -> bool {
    v >= 0.0 && v.is_finite()
}

impl ScenarioConfig {
    /// Parses and validates `text`; `name` labels error messages.
    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{name}: {e}"))?;
        let src = Source { name, text };

        let signal = *raw.signal.get_ref();
        match signal {
            Signal::Squeezed { xi } if !finite_non_negative(xi) => {
                return src.fail(
                    raw.signal.span(),
                    "signal.xi",
                    format!("must be finite and >= 0, got {xi}"),
                );
            }
            Signal::Coherent { re, im } if !(re.is_finite() && im.is_finite()) => {
                return src.fail(raw.signal.span(), "signal.re/im", "must be finite");
            }
            Signal::Superposition { n: 0 } => {
                return src.fail(raw.signal.span(), "signal.n", "must be at least 1");
            }
            _ => {}
        }

        let r = src.check(&raw.lo.r, "lo.r", finite_non_negative, "finite and >= 0")?;
        let phase_grid = match (&raw.lo.phi, &raw.lo.phase_grid) {
            (Some(phi), None) => {
                PhaseGrid::single(src.check(phi, "lo.phi", f64::is_finite, "finite")?)
            }
            (None, Some(grid)) => match grid.get_ref().parse() {
                Ok(g) => g,
                Err(e) => return src.fail(grid.span(), "lo.phase_grid", e),
            },
            (Some(phi), Some(_)) => {
                return src.fail(
                    phi.span(),
                    "lo.phi",
                    "give either `phi` or `phase_grid`, not both",
                )
            }
            (None, None) => bail!("{name}: `[lo]` needs `phi` or `phase_grid`"),
        };

        let d = &raw.detector;
        let n_apds = src.check(&d.n_apds, "detector.n_apds", |n| n >= 1, "at least 1")?;
        let eta = src.check(
            &d.eta,
            "detector.eta",
            |v| (0.0..=1.0).contains(&v),
            "in [0, 1]",
        )?;
        let nu = src.check(&d.nu, "detector.nu", finite_non_negative, "finite and >= 0")?;

        let noise = match &raw.noise {
            None => None,
            Some(n) => {
                let mut sigma = [0.0; 2];
                for (s, (field, value)) in sigma
                    .iter_mut()
                    .zip([("noise.sigma_x", &n.sigma_x), ("noise.sigma_p", &n.sigma_p)])
                {
                    if let Some(v) = value {
                        *s = src.check(v, field, finite_non_negative, "finite and >= 0")?;
                    }
                }
                Some(NoiseSection {
                    sigma_x: sigma[0],
                    sigma_p: sigma[1],
                })
            }
        };

        let budget = match &raw.truncation {
            Some(t) => src.check(
                &t.budget,
                "truncation.budget",
                |b| b > 0.0 && b < 1.0,
                "in (0, 1)",
            )?,
            None => DEFAULT_TRUNCATION_BUDGET,
        };
        let shots = match &raw.shots {
            Some(s) => Some(src.check(s, "shots", |s| s >= 1, "at least 1")?),
            None => None,
        };

        Ok(ScenarioConfig {
            seed: raw.seed.map(|s| s.into_inner()).unwrap_or(0),
            shots,
            max_order: raw.max_order.map(|m| m.into_inner()),
            signal,
            lo: LoSection { r, phase_grid },
            detector: DetectorConfig::new(n_apds, eta, nu)?,
            noise,
            truncation: TruncationSection { budget },
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config is always representable as TOML")
    }

    pub fn lo_at(&self, phi: f64) -> Result<LocalOscillator> {
        Ok(LocalOscillator::new(self.lo.r, phi)?)
    }

    pub fn noise_model(&self, phi: f64) -> Result<LoNoiseModel> {
        let n = self.noise.unwrap_or(NoiseSection {
            sigma_x: 0.0,
            sigma_p: 0.0,
        });
        Ok(LoNoiseModel::new(n.sigma_x, n.sigma_p, self.lo.r, phi)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = include_str!("../presets/default.toml");

    #[test]
    fn presets_parse_and_round_trip() {
        for text in [
            GOOD,
            include_str!("../presets/fig1b.toml"),
            include_str!("../presets/fig5.toml"),
        ] {
            let cfg = ScenarioConfig::parse(text, "preset").unwrap();
            let again = ScenarioConfig::parse(&cfg.to_toml(), "round trip").unwrap();
            assert_eq!(cfg, again);
        }
    }

    #[test]
    fn angles_and_grids() {
        assert_eq!(parse_angle("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_angle("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_angle("-pi").unwrap(), -PI);
        assert_eq!(parse_angle(" 0.25 ").unwrap(), 0.25);
        assert!(parse_angle("tau").is_err());
        let g: PhaseGrid = "0:pi:5".parse().unwrap();
        assert_eq!(
            g.points(),
            vec![0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI]
        );
        assert!("0:1".parse::<PhaseGrid>().is_err());
        assert!("0:1:0".parse::<PhaseGrid>().is_err());
        assert_eq!("1:2:1".parse::<PhaseGrid>().unwrap().points(), vec![1.0]);
    }

    #[test]
    fn errors_name_field_and_line() {
        let bad = GOOD.replace("eta = 0.5", "eta = 1.5");
        let err = ScenarioConfig::parse(&bad, "bad.toml")
            .unwrap_err()
            .to_string();
        let line = bad.lines().position(|l| l.starts_with("eta")).unwrap() + 1;
        assert!(
            err.contains("detector.eta") && err.contains(&format!("bad.toml:{line}:")),
            "{err}"
        );

        let err = ScenarioConfig::parse(&GOOD.replace("xi = 0.5", "xi = -1.0"), "x")
            .unwrap_err()
            .to_string();
        assert!(err.contains("signal.xi"), "{err}");

        let err = ScenarioConfig::parse(&GOOD.replace("nu = 0.25", "nu = 0.25\ncolour = 1"), "x")
            .unwrap_err()
            .to_string();
        assert!(err.contains("colour"), "{err}");

        let err = ScenarioConfig::parse(
            &GOOD.replace("phase_grid = \"0:pi:33\"", "phase_grid = \"0:pi\""),
            "x",
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("lo.phase_grid"), "{err}");
    }
}
