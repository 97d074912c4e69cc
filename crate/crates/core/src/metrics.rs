//! Character-distribution realism metrics and run statistics.
//!
//! A printable-ASCII character is a positive at threshold τ when its
//! generated frequency is non-zero and at least τ times its real frequency.
//! Real positives are the characters that occur in the real set at all.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsInputError {
    #[error("no printable ASCII characters to count")]
    NoSymbols,
    #[error("series is empty")]
    EmptySeries,
    #[error("threshold grid needs at least 2 points, got {0}")]
    ShortGrid(usize),
    #[error("thresholds must be strictly increasing")]
    Unsorted,
    #[error("threshold {0} outside [0, 1]")]
    TauOutOfRange(f64),
}

pub const FIRST_PRINTABLE: u8 = 0x20;
pub const LAST_PRINTABLE: u8 = 0x7e;
pub const ALPHABET_SIZE: usize = (LAST_PRINTABLE - FIRST_PRINTABLE + 1) as usize;

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrequencies {
    freqs: [f64; ALPHABET_SIZE],
    total_symbols: u64,
}

impl SymbolFrequencies {
    pub fn get(&self, c: char) -> f64 {
        index_of(c).map_or(0.0, |i| self.freqs[i])
    }

    pub fn total_symbols(&self) -> u64 {
        self.total_symbols
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, f64)> + '_ {
        self.freqs.iter().enumerate().map(|(i, f)| ((FIRST_PRINTABLE + i as u8) as char, *f))
    }

    /// Builds a distribution directly from per-character fractions. Characters
    /// outside the alphabet are ignored.
    pub fn from_fractions(pairs: &[(char, f64)]) -> Self {
        let mut freqs = [0.0; ALPHABET_SIZE];
        for (c, f) in pairs {
            if let Some(i) = index_of(*c) {
                freqs[i] = *f;
            }
        }
        Self { freqs, total_symbols: 0 }
    }
}

fn index_of(c: char) -> Option<usize> {
    let b = u32::from(c);
    (u32::from(FIRST_PRINTABLE)..=u32::from(LAST_PRINTABLE))
        .contains(&b)
        .then(|| (b - u32::from(FIRST_PRINTABLE)) as usize)
}

pub fn symbol_frequencies<S: AsRef<str>>(passwords: &[S]) -> Result<SymbolFrequencies, MetricsInputError> {
    let mut counts = [0u64; ALPHABET_SIZE];
    for pw in passwords {
        for i in pw.as_ref().chars().filter_map(index_of) {
            counts[i] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(MetricsInputError::NoSymbols);
    }
    let mut freqs = [0.0; ALPHABET_SIZE];
    for (f, n) in freqs.iter_mut().zip(counts) {
        *f = n as f64 / total as f64;
    }
    Ok(SymbolFrequencies { freqs, total_symbols: total })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FScorePoint {
    pub tau: f64,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

pub fn harmonic_f(precision: f64, recall: f64) -> f64 {
    let denom = precision + recall;
    if denom > 0.0 {
        2.0 * precision * recall / denom
    } else {
        0.0
    }
}

pub fn fscore_at(gen: &SymbolFrequencies, real: &SymbolFrequencies, tau: f64) -> FScorePoint {
    let mut predicted = 0usize;
    let mut relevant = 0usize;
    let mut hits = 0usize;
    for (g, r) in gen.freqs.iter().zip(real.freqs.iter()) {
        let is_real = *r > 0.0;
        let is_hit = *g > 0.0 && *g >= tau * r;
        relevant += usize::from(is_real);
        predicted += usize::from(is_hit);
        hits += usize::from(is_real && is_hit);
    }
    let precision = if predicted == 0 { 0.0 } else { hits as f64 / predicted as f64 };
    let recall = if relevant == 0 { 0.0 } else { hits as f64 / relevant as f64 };
    FScorePoint { tau, precision, recall, f: harmonic_f(precision, recall) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FScoreCurve {
    pub points: Vec<FScorePoint>,
    pub auc: f64,
}

impl FScoreCurve {
    /// First point with the maximal F value.
    pub fn peak(&self) -> FScorePoint {
        self.points
            .iter()
            .copied()
            .fold(None::<FScorePoint>, |best, p| match best {
                Some(b) if p.f <= b.f => Some(b),
                _ => Some(p),
            })
            .expect("curve has at least two points")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,precision,recall,f\n");
        for p in &self.points {
            let _ = writeln!(out, "{:.6},{:.6},{:.6},{:.6}", p.tau, p.precision, p.recall, p.f);
        }
        out
    }
}

/// τ = 0.00, 0.05, …, 0.95.
pub fn default_tau_grid() -> Vec<f64> {
    (0..20).map(|i| i as f64 / 20.0).collect()
}

fn check_grid(taus: impl Iterator<Item = f64> + Clone) -> Result<(), MetricsInputError> {
    let n = taus.clone().count();
    if n < 2 {
        return Err(MetricsInputError::ShortGrid(n));
    }
    let v: Vec<f64> = taus.collect();
    if v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MetricsInputError::Unsorted);
    }
    Ok(())
}

pub fn fscore_curve(
    gen: &SymbolFrequencies,
    real: &SymbolFrequencies,
    taus: &[f64],
) -> Result<FScoreCurve, MetricsInputError> {
    check_grid(taus.iter().copied())?;
    if let Some(t) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(MetricsInputError::TauOutOfRange(*t));
    }
    let points: Vec<FScorePoint> = taus.iter().map(|t| fscore_at(gen, real, *t)).collect();
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.tau, p.f)).collect();
    let auc = auc_trapezoid(&pairs)?;
    Ok(FScoreCurve { points, auc })
}

/// Trapezoidal area under `(tau, f)` points over the span they cover.
pub fn auc_trapezoid(points: &[(f64, f64)]) -> Result<f64, MetricsInputError> {
    check_grid(points.iter().map(|p| p.0))?;
    Ok(points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum())
}

/// Descriptive statistics of a series of per-iteration cracked rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; absent for fewer than two values.
    pub sd: Option<f64>,
    pub min: f64,
    pub best: f64,
    pub delta_vs_baseline: Option<f64>,
}

pub fn run_stats(series: &[f64], baseline: Option<f64>) -> Result<RunStats, MetricsInputError> {
    if series.is_empty() {
        return Err(MetricsInputError::EmptySeries);
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let sd = (n >= 2).then(|| {
        let ss: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    let best = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let delta_vs_baseline = baseline.filter(|b| *b > 0.0).map(|b| best / b);
    // Summation rounding can push the mean a hair outside [min, best].
    Ok(RunStats { n, mean: mean.clamp(min, best), sd, min, best, delta_vs_baseline })
}

/// Improvement multiplier as printed in reports: two decimals with trailing
/// zeros dropped, so 4.198 → "4.2×" and 3.7525 → "3.75×".
pub fn format_multiplier(m: f64) -> String {
    let s = format!("{:.2}", m);
    let s = s.strip_suffix('0').unwrap_or(&s);
    format!("{s}×")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn frequencies_count_printable_only() {
        let f = symbol_frequencies(&["aab"]).unwrap();
        assert!(close(f.get('a'), 2.0 / 3.0) && close(f.get('b'), 1.0 / 3.0));
        assert_eq!(f.get('c'), 0.0);
        let t = symbol_frequencies(&["a\tb"]).unwrap();
        assert_eq!((t.get('a'), t.get('b'), t.get('\t')), (0.5, 0.5, 0.0));
        assert_eq!(symbol_frequencies(&[""]).unwrap_err(), MetricsInputError::NoSymbols);
        assert_eq!(symbol_frequencies(&["é\u{7f}"]).unwrap_err(), MetricsInputError::NoSymbols);
        let sum: f64 = symbol_frequencies(&["Hello, World! ~"]).unwrap().iter().map(|(_, f)| f).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fscore_identity_and_disjoint() {
        let real = symbol_frequencies(&["abcabd"]).unwrap();
        let p = fscore_at(&real, &real, 0.5);
        assert_eq!((p.precision, p.recall, p.f), (1.0, 1.0, 1.0));
        let other = symbol_frequencies(&["xyz"]).unwrap();
        assert_eq!(fscore_at(&other, &real, 0.5).f, 0.0);
    }

    #[test]
    fn fscore_hand_example() {
        let real = SymbolFrequencies::from_fractions(&[('a', 0.5), ('b', 0.5)]);
        let gen = SymbolFrequencies::from_fractions(&[('a', 0.9), ('c', 0.1)]);
        let p = fscore_at(&gen, &real, 0.5);
        assert_eq!((p.precision, p.recall, p.f), (0.5, 0.5, 0.5));
    }

    #[test]
    fn curve_grid_and_identity() {
        let grid = default_tau_grid();
        assert_eq!(grid.len(), 20);
        assert_eq!((grid[0], grid[19]), (0.0, 0.95));
        let real = symbol_frequencies(&["password123"]).unwrap();
        let curve = fscore_curve(&real, &real, &grid).unwrap();
        assert!(curve.points.iter().all(|p| p.f == 1.0));
        assert!((curve.auc - 0.95).abs() < 1e-12);
        assert_eq!(curve.peak().tau, 0.0);
        assert_eq!(fscore_curve(&real, &real, &[0.5]).unwrap_err(), MetricsInputError::ShortGrid(1));
        assert_eq!(fscore_curve(&real, &real, &[0.5, 1.5]).unwrap_err(), MetricsInputError::TauOutOfRange(1.5));
    }

    #[test]
    fn auc_examples() {
        assert!(close(auc_trapezoid(&[(0.0, 1.0), (0.95, 1.0)]).unwrap(), 0.95));
        assert!(close(auc_trapezoid(&[(0.0, 0.0), (1.0, 1.0)]).unwrap(), 0.5));
        assert_eq!(auc_trapezoid(&[(0.0, 1.0)]).unwrap_err(), MetricsInputError::ShortGrid(1));
        assert_eq!(auc_trapezoid(&[(0.2, 1.0), (0.1, 1.0)]).unwrap_err(), MetricsInputError::Unsorted);
        assert_eq!(auc_trapezoid(&[(0.1, 1.0), (0.1, 1.0)]).unwrap_err(), MetricsInputError::Unsorted);
    }

    #[test]
    fn csv_export() {
        let real = symbol_frequencies(&["ab"]).unwrap();
        let csv = fscore_curve(&real, &real, &default_tau_grid()).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "tau,precision,recall,f");
        assert_eq!(lines.len(), 21);
        assert_eq!(lines[2], "0.050000,1.000000,1.000000,1.000000");
    }

    #[test]
    fn stats_examples() {
        let s = run_stats(&[0.02, 0.04, 0.06], None).unwrap();
        assert!(close(s.mean, 0.04) && close(s.sd.unwrap(), 0.02));
        assert_eq!((s.min, s.best, s.n), (0.02, 0.06, 3));
        let single = run_stats(&[0.05], Some(0.02)).unwrap();
        assert_eq!(single.sd, None);
        assert!(close(single.delta_vs_baseline.unwrap(), 2.5));
        assert_eq!(run_stats(&[], None).unwrap_err(), MetricsInputError::EmptySeries);
        assert_eq!(run_stats(&[0.1], Some(0.0)).unwrap().delta_vs_baseline, None);
    }

    #[test]
    fn multiplier_format() {
        assert_eq!(format_multiplier(0.0848 / 0.0202), "4.2×");
        assert_eq!(format_multiplier(0.0828 / 0.0202), "4.1×");
        assert_eq!(format_multiplier(0.0758 / 0.0202), "3.75×");
        assert_eq!(format_multiplier(2.0), "2.0×");
    }

    fn freq_strategy() -> impl Strategy<Value = SymbolFrequencies> {
        proptest::collection::vec("[ -~]{0,12}", 1..8)
            .prop_filter_map("needs symbols", |v| symbol_frequencies(&v).ok())
    }

    proptest! {
        #[test]
        fn recall_non_increasing(gen in freq_strategy(), real in freq_strategy()) {
            let curve = fscore_curve(&gen, &real, &default_tau_grid()).unwrap();
            for w in curve.points.windows(2) {
                prop_assert!(w[1].recall <= w[0].recall);
            }
            for p in &curve.points {
                prop_assert!((0.0..=1.0).contains(&p.f));
                if p.precision == 0.0 || p.recall == 0.0 {
                    prop_assert_eq!(p.f, 0.0);
                }
            }
        }

        #[test]
        fn auc_is_linear(fs in proptest::collection::vec(0.0f64..1.0, 20), alpha in 0.1f64..4.0) {
            let grid = default_tau_grid();
            let pts: Vec<(f64, f64)> = grid.iter().copied().zip(fs.iter().copied()).collect();
            let scaled: Vec<(f64, f64)> = pts.iter().map(|(t, f)| (*t, f * alpha)).collect();
            let a = auc_trapezoid(&pts).unwrap();
            prop_assert!((auc_trapezoid(&scaled).unwrap() - alpha * a).abs() < 1e-12);
        }

        #[test]
        fn stats_ordering(series in proptest::collection::vec(0.0f64..1.0, 1..50)) {
            let s = run_stats(&series, None).unwrap();
            prop_assert!(s.min <= s.mean && s.mean <= s.best);
            prop_assert_eq!(s.sd.is_none(), series.len() < 2);
        }
    }
}
