use std::fmt::Write as _;

use super::cost::FilterKind;

/// Error statistics at one model order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Normalized error versus model order for one filter kind and test case.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub kind: FilterKind,
    pub case: String,
    pub orders: Vec<usize>,
    pub stats: Vec<OrderStats>,
}

impl ErrorCurve {
    /// Curve of a single run.
    pub fn single(kind: FilterKind, case: &str, orders: &[usize], errors: &[f64]) -> Self {
        let stats = errors
            .iter()
            .map(|&e| OrderStats { mean: e, min: e, max: e })
            .collect();
        Self {
            kind,
            case: case.to_string(),
            orders: orders.to_vec(),
            stats,
        }
    }

    /// Mean, min and max over trials; each trial holds one error per order.
    pub fn aggregate(kind: FilterKind, case: &str, orders: &[usize], trials: &[Vec<f64>]) -> Self {
        let n = trials.len() as f64;
        let stats = (0..orders.len())
            .map(|i| {
                let column = trials.iter().map(|t| t[i]);
                OrderStats {
                    mean: column.clone().sum::<f64>() / n,
                    min: column.clone().fold(f64::INFINITY, f64::min),
                    max: column.fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect();
        Self {
            kind,
            case: case.to_string(),
            orders: orders.to_vec(),
            stats,
        }
    }

    pub fn means(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.mean).collect()
    }

    /// Mean error at `order`, if that order was evaluated.
    pub fn mean_at(&self, order: usize) -> Option<f64> {
        self.orders.iter().position(|o| *o == order).map(|i| self.stats[i].mean)
    }

    /// Smallest evaluated order whose mean error is at or below `error`.
    pub fn first_order_reaching(&self, error: f64) -> Option<usize> {
        self.orders
            .iter()
            .zip(&self.stats)
            .find(|(_, s)| s.mean <= error)
            .map(|(o, _)| *o)
    }
}

/// CSV with header `kind,case,order,mean,min,max`.
pub fn format_error_curves(curves: &[ErrorCurve]) -> String {
    let mut out = String::from("kind,case,order,mean,min,max\n");
    for c in curves {
        for (o, s) in c.orders.iter().zip(&c.stats) {
            writeln!(out, "{},{},{o},{},{},{}", c.kind, c.case, s.mean, s.min, s.max).unwrap();
        }
    }
    out
}

/// Equal-width histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bins: Vec<(f64, f64, usize)>,
}

impl Histogram {
    /// `bins` equal-width bins spanning `[min, max]` of the values; the last bin is closed.
    pub fn new(values: &[f64], bins: usize) -> Self {
        if values.is_empty() || bins == 0 {
            return Self { bins: Vec::new() };
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut counts = vec![0usize; bins];
        for v in values {
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Self {
            bins: counts
                .into_iter()
                .enumerate()
                .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
                .collect(),
        }
    }

    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.2).sum()
    }
}

/// CSV with header `bin_low,bin_high,count`.
pub fn format_histogram(h: &Histogram) -> String {
    let mut out = String::from("bin_low,bin_high,count\n");
    for (lo, hi, c) in &h.bins {
        writeln!(out, "{lo},{hi},{c}").unwrap();
    }
    out
}
