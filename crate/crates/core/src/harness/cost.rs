use std::fmt;

use serde::Deserialize;

/// Filter structure being costed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Fir,
    Kautz,
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterKind::Fir => "fir",
            FilterKind::Kautz => "kautz",
        })
    }
}

/// Per-sample arithmetic and storage of a filter of a given order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostReport {
    pub additions: u64,
    /// Twice the multiplication count; the Kautz formula yields half-integers.
    pub half_multiplications: u64,
    pub divisions: u64,
    pub storage: u64,
    /// False when the count comes from the realization instead of the closed-form table.
    pub from_table: bool,
}

impl CostReport {
    pub fn multiplications(&self) -> f64 {
        self.half_multiplications as f64 / 2.0
    }
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "additions={} multiplications={} divisions={} storage={}",
            self.additions,
            self.multiplications(),
            self.divisions,
            self.storage
        )?;
        if !self.from_table {
            f.write_str(" (counted from realization)")?;
        }
        Ok(())
    }
}

/// Operation and storage counts for a filter of order `n`.
///
/// FIR: `n + 1` additions, `n` multiplications, `n` storage. Kautz for
/// `n >= 3`: `5 + 3 (n - 3)` additions, `3.5 (n - 3) + 8` multiplications,
/// `3n` storage. Kautz orders below 3 are counted from the realization:
/// 4 multiplications and 4 additions per second-order section, a tap
/// addition plus scaling and weight multiplications per output, and `n - 1`
/// combiner additions; storage is two states per section plus the weights.
pub fn cost_model(kind: FilterKind, order: u64) -> CostReport {
    let n = order;
    match kind {
        FilterKind::Fir => CostReport {
            additions: n + 1,
            half_multiplications: 2 * n,
            divisions: 0,
            storage: n,
            from_table: true,
        },
        FilterKind::Kautz if n >= 3 => CostReport {
            additions: 5 + 3 * (n - 3),
            half_multiplications: 7 * (n - 3) + 16,
            divisions: 0,
            storage: 3 * n,
            from_table: true,
        },
        FilterKind::Kautz => {
            let sections = n.div_ceil(2);
            CostReport {
                additions: 4 * sections + n + n.saturating_sub(1),
                half_multiplications: 2 * (4 * sections + 2 * n),
                divisions: 0,
                storage: 2 * sections + n,
                from_table: false,
            }
        }
    }
}
