//! Data compression applied to the local data a worker uploads.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cost::LocalData;
use crate::error::{Error, Result};
use crate::model::{Vector, WorkerId};
use crate::seed;

/// Compression scheme `l_f^c`. Configured once per run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Compression {
    #[default]
    Identity,
    /// Midpoint uniform quantizer on `[lo, hi]` with `2^bits` cells;
    /// values outside the range are clamped first.
    Quantize { bits: u32, lo: f64, hi: f64 },
    /// Additive Gaussian noise, deterministic in `(seed, worker, slot)`.
    GaussianNoise { std: f64, seed: u64 },
}

impl Compression {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Compression::Identity => Ok(()),
            Compression::Quantize { bits, lo, hi } => {
                if !(1..=24).contains(&bits) {
                    return Err(Error::InvalidParameter(format!(
                        "quantizer bits must be in 1..=24, got {bits}"
                    )));
                }
                if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                    return Err(Error::InvalidParameter(format!(
                        "quantizer range [{lo}, {hi}] is empty"
                    )));
                }
                Ok(())
            }
            Compression::GaussianNoise { std, .. } => {
                if !(std >= 0.0 && std.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "noise std must be non-negative, got {std}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Largest per-entry recovery error for entries inside the quantizer range.
    pub fn entry_error_bound(&self) -> Option<f64> {
        match *self {
            Compression::Identity => Some(0.0),
            Compression::Quantize { bits, lo, hi } => Some(cell_width(bits, lo, hi) / 2.0),
            Compression::GaussianNoise { std, .. } => (std == 0.0).then_some(0.0),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Compression::Identity)
    }
}

fn cell_width(bits: u32, lo: f64, hi: f64) -> f64 {
    (hi - lo) / f64::from(1u32 << bits)
}

/// What actually travels on the uplink.
#[derive(Debug, Clone, PartialEq)]
pub enum CompressedData {
    Exact(LocalData),
    Quantized {
        rows: usize,
        cols: usize,
        a_codes: Vec<u32>,
        b_codes: Vec<u32>,
        bits: u32,
        lo: f64,
        hi: f64,
    },
    Noisy(LocalData),
}

fn quantize(v: f64, bits: u32, lo: f64, hi: f64) -> u32 {
    let levels = 1u32 << bits;
    let w = cell_width(bits, lo, hi);
    let idx = ((v.clamp(lo, hi) - lo) / w).floor();
    (idx as u32).min(levels - 1)
}

fn dequantize(code: u32, bits: u32, lo: f64, hi: f64) -> f64 {
    lo + (f64::from(code) + 0.5) * cell_width(bits, lo, hi)
}

/// Compresses worker `c`'s data collected at `slot`.
pub fn compress(
    c: WorkerId,
    slot: usize,
    data: &LocalData,
    scheme: &Compression,
) -> Result<CompressedData> {
    scheme.validate()?;
    Ok(match *scheme {
        Compression::Identity => CompressedData::Exact(data.clone()),
        Compression::Quantize { bits, lo, hi } => CompressedData::Quantized {
            rows: data.a.nrows(),
            cols: data.a.ncols(),
            // column-major, matching nalgebra storage
            a_codes: data.a.iter().map(|&v| quantize(v, bits, lo, hi)).collect(),
            b_codes: data.b.iter().map(|&v| quantize(v, bits, lo, hi)).collect(),
            bits,
            lo,
            hi,
        },
        Compression::GaussianNoise { std, seed: base } => {
            if std == 0.0 {
                CompressedData::Noisy(data.clone())
            } else {
                let mut rng = seed::stream(base, &[c.0 as u64, slot as u64]);
                let normal = Normal::new(0.0, std)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                let mut noisy = data.clone();
                noisy.a.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
                noisy.b.iter_mut().for_each(|v| *v += rng.sample(normal));
                CompressedData::Noisy(noisy)
            }
        }
    })
}

/// The master's estimate `d̂` of the original data.
pub fn recover(compressed: &CompressedData) -> LocalData {
    match compressed {
        CompressedData::Exact(d) | CompressedData::Noisy(d) => d.clone(),
        CompressedData::Quantized {
            rows,
            cols,
            a_codes,
            b_codes,
            bits,
            lo,
            hi,
        } => LocalData {
            a: DMatrix::from_iterator(
                *rows,
                *cols,
                a_codes.iter().map(|&q| dequantize(q, *bits, *lo, *hi)),
            ),
            b: Vector::from_iterator(b_codes.len(), b_codes.iter().map(|&q| dequantize(q, *bits, *lo, *hi))),
        },
    }
}

/// `recover(compress(..))` in one call.
pub fn roundtrip(
    c: WorkerId,
    slot: usize,
    data: &LocalData,
    scheme: &Compression,
) -> Result<LocalData> {
    Ok(recover(&compress(c, slot, data, scheme)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(values: &[f64]) -> LocalData {
        let n = values.len();
        LocalData::new(
            DMatrix::from_column_slice(n, 1, values),
            Vector::from_column_slice(values),
        )
        .unwrap()
    }

    #[test]
    fn identity_is_exact() {
        let d = sample(&[0.3, -1.7, 12.0]);
        let back = roundtrip(WorkerId(0), 1, &d, &Compression::Identity).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn eight_bit_quantizer_grid_sweep() {
        let scheme = Compression::Quantize { bits: 8, lo: -1.0, hi: 1.0 };
        let grid: Vec<f64> = (0..=20_000).map(|i| -1.0 + 2.0 * i as f64 / 20_000.0).collect();
        let d = sample(&grid);
        let back = roundtrip(WorkerId(0), 1, &d, &scheme).unwrap();
        let worst = d
            .a
            .iter()
            .zip(back.a.iter())
            .chain(d.b.iter().zip(back.b.iter()))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 2.0 / 256.0);
        assert!(worst <= scheme.entry_error_bound().unwrap() + 1e-15);
    }

    #[test]
    fn quantizer_rejects_bad_parameters() {
        let d = sample(&[0.0]);
        for scheme in [
            Compression::Quantize { bits: 0, lo: -1.0, hi: 1.0 },
            Compression::Quantize { bits: 8, lo: 1.0, hi: 1.0 },
            Compression::GaussianNoise { std: -0.1, seed: 0 },
        ] {
            assert!(compress(WorkerId(0), 1, &d, &scheme).is_err());
        }
    }

    #[test]
    fn zero_noise_is_exact_and_noise_is_seeded() {
        let d = sample(&[0.5, 0.25]);
        let quiet = Compression::GaussianNoise { std: 0.0, seed: 3 };
        assert_eq!(roundtrip(WorkerId(1), 4, &d, &quiet).unwrap(), d);

        let loud = Compression::GaussianNoise { std: 0.1, seed: 3 };
        let a = roundtrip(WorkerId(1), 4, &d, &loud).unwrap();
        assert_eq!(a, roundtrip(WorkerId(1), 4, &d, &loud).unwrap());
        assert_ne!(a, d);
        assert_ne!(a, roundtrip(WorkerId(1), 5, &d, &loud).unwrap());
    }

    #[test]
    fn scheme_serde_shape() {
        let s = Compression::Quantize { bits: 8, lo: -4.0, hi: 4.0 };
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"kind":"quantize","bits":8,"lo":-4.0,"hi":4.0}"#);
        let id: Compression = serde_json::from_str(r#"{"kind":"identity"}"#).unwrap();
        assert_eq!(id, Compression::Identity);
    }

    proptest! {
        #[test]
        fn quantizer_error_within_half_cell(v in -3.0f64..3.0, bits in 1u32..=16) {
            let (lo, hi) = (-3.0, 3.0);
            let back = dequantize(quantize(v, bits, lo, hi), bits, lo, hi);
            prop_assert!((back - v).abs() <= cell_width(bits, lo, hi) / 2.0 + 1e-12);
        }
    }
}
