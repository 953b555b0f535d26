//! File formats: coincidence histograms with a JSON sidecar, fringe-contrast
//! and visibility CSVs, and the emitter/filter configuration record.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::emitter::{CavityFilter, EmitterParams};
use crate::error::{Error, Result};
use crate::experiment::{CoincidenceHistogram, FringeContrast, FringeSample, HistogramBin, HistogramMeta};
use crate::phonon::MEV_TO_PS_INV;
use crate::tempfit::VisibilityPoint;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = read_text(path)?;
    parse_csv(&text)
}

fn parse_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Debug, Deserialize)]
struct BinRow {
    delay_ns: f64,
    counts: u64,
}

#[derive(Debug, Deserialize)]
struct FringeRow {
    delay_ps: f64,
    contrast: f64,
    sigma: f64,
}

#[derive(Debug, Deserialize)]
struct VisibilityRow {
    #[serde(rename = "temperature_K")]
    temperature_k: f64,
    visibility: f64,
    sigma: f64,
}

/// `delay_ns,counts` CSV plus its JSON metadata record.
pub fn read_histogram(csv_path: &Path, meta_path: &Path) -> Result<CoincidenceHistogram> {
    let bins: Vec<BinRow> = read_csv(csv_path)?;
    let meta: HistogramMeta = serde_json::from_str(&read_text(meta_path)?)?;
    CoincidenceHistogram::new(
        bins.into_iter()
            .map(|b| HistogramBin {
                delay_ns: b.delay_ns,
                counts: b.counts,
            })
            .collect(),
        meta,
    )
}

pub fn write_histogram(hist: &CoincidenceHistogram, csv_path: &Path, meta_path: &Path) -> Result<()> {
    let mut out = String::from("delay_ns,counts\n");
    for b in hist.bins() {
        out.push_str(&format!("{},{}\n", b.delay_ns, b.counts));
    }
    write_text(csv_path, &out)?;
    write_text(meta_path, &serde_json::to_string_pretty(hist.meta())?)
}

/// `delay_ps,contrast,sigma` CSV.
pub fn read_fringe(path: &Path) -> Result<FringeContrast> {
    let rows: Vec<FringeRow> = read_csv(path)?;
    FringeContrast::new(
        rows.into_iter()
            .map(|r| FringeSample {
                delay_ps: r.delay_ps,
                contrast: r.contrast,
                sigma: r.sigma,
            })
            .collect(),
    )
}

pub fn write_fringe(data: &FringeContrast, path: &Path) -> Result<()> {
    let mut out = String::from("delay_ps,contrast,sigma\n");
    for s in data.samples() {
        out.push_str(&format!("{},{},{}\n", s.delay_ps, s.contrast, s.sigma));
    }
    write_text(path, &out)
}

/// `temperature_K,visibility,sigma` CSV.
pub fn read_visibility(path: &Path) -> Result<Vec<VisibilityPoint>> {
    let rows: Vec<VisibilityRow> = read_csv(path)?;
    Ok(rows
        .into_iter()
        .map(|r| VisibilityPoint {
            temperature_k: r.temperature_k,
            visibility: r.visibility,
            sigma: r.sigma,
        })
        .collect())
}

pub fn write_visibility(points: &[VisibilityPoint], path: &Path) -> Result<()> {
    let mut out = String::from("temperature_K,visibility,sigma\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.temperature_k, p.visibility, p.sigma));
    }
    write_text(path, &out)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Emitter/filter configuration: exactly one of each unit alternative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupConfig {
    pub gamma_ps_inv: Option<f64>,
    #[serde(rename = "T1_ps")]
    pub t1_ps: Option<f64>,
    #[serde(rename = "kappa_meV")]
    pub kappa_mev: Option<f64>,
    pub kappa_ps_inv: Option<f64>,
    #[serde(rename = "delta_meV")]
    pub delta_mev: Option<f64>,
    pub delta_ps_inv: Option<f64>,
}

impl SetupConfig {
    /// JSON object, or `key = value` lines (`#` comments allowed).
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return Ok(serde_json::from_str(text)?);
        }
        let mut map = serde_json::Map::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| Error::InvalidInput(format!("config line {}: expected key = value", n + 1)))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("config line {}: {} is not a number", n + 1, value.trim())))?;
            map.insert(key.trim().to_string(), value.into());
        }
        Ok(serde_json::from_value(serde_json::Value::Object(map))?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    pub fn emitter(&self) -> Result<EmitterParams> {
        match (self.gamma_ps_inv, self.t1_ps) {
            (Some(g), None) => EmitterParams::new(g),
            (None, Some(t1)) => EmitterParams::from_t1_ps(t1),
            (Some(_), Some(_)) => Err(Error::InvalidInput("give either gamma_ps_inv or T1_ps, not both".into())),
            (None, None) => Err(Error::InvalidInput("config needs gamma_ps_inv or T1_ps".into())),
        }
    }

    pub fn filter(&self) -> Result<CavityFilter> {
        let kappa = match (self.kappa_mev, self.kappa_ps_inv) {
            (Some(k), None) => k * MEV_TO_PS_INV,
            (None, Some(k)) => k,
            (Some(_), Some(_)) => {
                return Err(Error::InvalidInput("give either kappa_meV or kappa_ps_inv, not both".into()))
            }
            (None, None) => return Err(Error::InvalidInput("config needs kappa_meV or kappa_ps_inv".into())),
        };
        let delta = match (self.delta_mev, self.delta_ps_inv) {
            (Some(d), None) => d * MEV_TO_PS_INV,
            (None, Some(d)) => d,
            (Some(_), Some(_)) => {
                return Err(Error::InvalidInput("give either delta_meV or delta_ps_inv, not both".into()))
            }
            (None, None) => 0.0,
        };
        CavityFilter::new(kappa, delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_and_key_value_agree() {
        let json = SetupConfig::parse(r#"{"T1_ps": 1100, "kappa_meV": 4.5}"#).unwrap();
        let kv = SetupConfig::parse("# QD1\nT1_ps = 1100\nkappa_meV = 4.5\n").unwrap();
        assert_eq!(json, kv);
        assert!((kv.emitter().unwrap().gamma - 1.0 / 1100.0).abs() < 1e-18);
        let f = kv.filter().unwrap();
        assert!((f.kappa - 6.8355).abs() < 1e-12);
        assert_eq!(f.delta, 0.0);
    }

    #[test]
    fn config_rejects_ambiguity_and_unknown_keys() {
        let both = SetupConfig::parse("T1_ps = 1100\ngamma_ps_inv = 0.001\nkappa_ps_inv = 6.84").unwrap();
        assert!(both.emitter().is_err());
        assert!(SetupConfig::parse("kappa = 4.5").is_err());
        assert!(SetupConfig::parse("T1_ps = fast").is_err());
        assert!(SetupConfig::parse("T1_ps = 1100").unwrap().filter().is_err());
    }

    #[test]
    fn csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let pts = vec![
            VisibilityPoint {
                temperature_k: 4.0,
                visibility: 0.79,
                sigma: 0.03,
            },
            VisibilityPoint {
                temperature_k: 10.0,
                visibility: 0.6,
                sigma: 0.04,
            },
        ];
        let p = dir.path().join("v.csv");
        write_visibility(&pts, &p).unwrap();
        assert_eq!(read_visibility(&p).unwrap(), pts);

        let bins = (0..5)
            .map(|k| HistogramBin {
                delay_ns: k as f64 * 0.5,
                counts: k * 3,
            })
            .collect();
        let h = CoincidenceHistogram::new(bins, HistogramMeta::default()).unwrap();
        let (c, m) = (dir.path().join("h.csv"), dir.path().join("h.json"));
        write_histogram(&h, &c, &m).unwrap();
        assert_eq!(read_histogram(&c, &m).unwrap(), h);
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_fringe(Path::new("/nonexistent/fringe.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/fringe.csv"));
    }

    #[test]
    fn bad_column_is_reported() {
        assert!(parse_csv::<FringeRow>("delay_ps,contrast\n1,0.5\n").is_err());
    }
}
