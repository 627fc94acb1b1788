//! Histograms and the goodness-of-fit test used to compare sampled records
//! with analytic densities.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Equal-width histogram on `[lo, hi)`; values outside are counted separately.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<f64>,
    pub below: f64,
    pub above: f64,
}

impl Histogram {
    pub fn new(bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::invalid("bins", "need at least one bin"));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("range", format!("invalid range [{lo}, {hi})")));
        }
        Ok(Histogram {
            lo,
            hi,
            counts: vec![0.0; bins],
            below: 0.0,
            above: 0.0,
        })
    }

    pub fn from_values(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self> {
        let mut h = Self::new(bins, lo, hi)?;
        for &v in values {
            h.add(v, 1.0);
        }
        Ok(h)
    }

    pub fn from_weighted(values: &[f64], weights: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        let mut h = Self::new(bins, lo, hi)?;
        for (&v, &w) in values.iter().zip(weights) {
            h.add(v, w);
        }
        Ok(h)
    }

    pub fn add(&mut self, value: f64, weight: f64) {
        if value < self.lo {
            self.below += weight;
        } else if value >= self.hi {
            self.above += weight;
        } else {
            let i = ((value - self.lo) / self.width()) as usize;
            let last = self.bins() - 1;
            self.counts[i.min(last)] += weight;
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.bins()).map(|i| self.lo + i as f64 * self.width()).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.bins())
            .map(|i| self.lo + (i as f64 + 0.5) * self.width())
            .collect()
    }

    /// In-range total.
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// True when nothing landed in range, so [`Histogram::density`] is all zero.
    pub fn is_empty(&self) -> bool {
        self.total() == 0.0
    }

    /// Counts divided by `total · width`; integrates to one over the range.
    pub fn density(&self) -> Vec<f64> {
        let norm = self.total() * self.width();
        if norm == 0.0 {
            return vec![0.0; self.bins()];
        }
        self.counts.iter().map(|c| c / norm).collect()
    }
}

/// Result of [`chi_square_gof`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoodnessOfFit {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of cells after merging sparse bins.
    pub cells: usize,
}

/// Pearson chi-square test of samples against a continuous CDF.
///
/// The real line is split into `bins` equal-width bins over `[lo, hi)` plus
/// two open tail cells; neighbouring cells are merged until each expects at
/// least five samples.
pub fn chi_square_gof<F>(samples: &[f64], cdf: F, bins: usize, lo: f64, hi: f64) -> Result<GoodnessOfFit>
where
    F: Fn(f64) -> f64,
{
    let hist = Histogram::from_values(samples, bins, lo, hi)?;
    let n = samples.len() as f64;
    if n == 0.0 {
        return Err(Error::invalid("samples", "goodness of fit needs at least one sample"));
    }
    let edges = hist.edges();
    let mut observed = Vec::with_capacity(bins + 2);
    let mut expected = Vec::with_capacity(bins + 2);
    observed.push(hist.below);
    expected.push(n * cdf(lo));
    for i in 0..bins {
        observed.push(hist.counts[i]);
        expected.push(n * (cdf(edges[i + 1]) - cdf(edges[i])));
    }
    observed.push(hist.above);
    expected.push(n * (1.0 - cdf(hi)));

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (o, e) in observed.into_iter().zip(expected) {
        o_acc += o;
        e_acc += e;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if let Some(last) = cells.last_mut() {
        last.0 += o_acc;
        last.1 += e_acc;
    }
    if cells.len() < 2 {
        return Err(Error::invalid("bins", "too few populated cells for a chi-square test"));
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::invalid("dof", e.to_string()))?;
    Ok(GoodnessOfFit {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
        cells: cells.len(),
    })
}

/// Sample mean and standard error of the mean.
pub fn mean_and_standard_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if n == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Number of crossings of a two-level hysteresis switch: a crossing is
/// counted each time the series goes from below `low` to above `high` or the
/// reverse.
pub fn hysteresis_crossings(series: &[f64], low: f64, high: f64) -> usize {
    let mut state: Option<bool> = None;
    let mut crossings = 0;
    for &x in series {
        let next = if x > high {
            Some(true)
        } else if x < low {
            Some(false)
        } else {
            continue;
        };
        if state.is_some() && state != next {
            crossings += 1;
        }
        state = next;
    }
    crossings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseStream;
    use proptest::prelude::*;
    use statrs::distribution::Normal;

    #[test]
    fn single_value_single_bin() {
        let h = Histogram::from_values(&[0.3], 1, 0.0, 2.0).unwrap();
        assert_eq!(h.density(), vec![0.5]);
        let empty = Histogram::from_values(&[], 4, 0.0, 1.0).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.density(), vec![0.0; 4]);
        assert!(Histogram::new(0, 0.0, 1.0).is_err());
        assert!(Histogram::new(3, 1.0, 1.0).is_err());
    }

    #[test]
    fn generator_passes_normal_gof() {
        let mut noise = NoiseStream::new(2024);
        let samples: Vec<f64> = (0..100_000).map(|_| noise.next_gaussian()).collect();
        let normal = Normal::new(0.0, 1.0).unwrap();
        let gof = chi_square_gof(&samples, |x| normal.cdf(x), 60, -4.0, 4.0).unwrap();
        assert!(gof.p_value > 0.01, "{gof:?}");
        let shifted = chi_square_gof(&samples, |x| normal.cdf(x - 0.05), 60, -4.0, 4.0).unwrap();
        assert!(shifted.p_value < 1e-6);
    }

    #[test]
    fn hysteresis_counts() {
        let s = [0.0, 0.5, 0.9, 0.7, 0.3, 0.1, 0.85, 0.5];
        assert_eq!(hysteresis_crossings(&s, 0.2, 0.8), 3);
        assert_eq!(hysteresis_crossings(&[0.5, 0.6], 0.2, 0.8), 0);
    }

    #[test]
    fn mean_and_se() {
        let (m, se) = mean_and_standard_error(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn density_integrates_to_one(values in prop::collection::vec(-5.0f64..5.0, 1..200), bins in 1usize..40) {
            let h = Histogram::from_values(&values, bins, -5.0, 5.0).unwrap();
            let integral: f64 = h.density().iter().sum::<f64>() * h.width();
            prop_assert!((integral - 1.0).abs() < 1e-12);
            prop_assert_eq!(h.total() + h.below + h.above, values.len() as f64);
        }
    }
}
