//! Side-by-side evaluation of two controller configurations with and without
//! measurement noise.

use crate::control::VariantKind;

use super::export::format_number;
use super::scenario::Scenario;
use super::sim::{run_scenario, RunError, RunResult};

/// Percentage reduction of `candidate` relative to `reference`.
///
/// Two zero cells compare as 0%.
pub fn reduction_pct(reference: f64, candidate: f64) -> f64 {
    if reference == 0.0 && candidate == 0.0 {
        0.0
    } else {
        100.0 * (reference - candidate) / reference
    }
}

/// Both noise conditions of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub clean: RunResult,
    pub noisy: RunResult,
}

impl ComparisonRow {
    /// `[itae clean, isu clean, itae noisy, isu noisy]`
    pub fn cells(&self) -> [f64; 4] {
        [
            self.clean.metrics.itae,
            self.clean.metrics.isu,
            self.noisy.metrics.itae,
            self.noisy.metrics.isu,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Reference row (the conventional controller in a variant comparison).
    pub reference: ComparisonRow,
    pub candidate: ComparisonRow,
}

pub const TABLE_COLUMNS: [&str; 4] = ["itae_clean", "isu_clean", "itae_noisy", "isu_noisy"];

impl Comparison {
    /// Reductions of the candidate against the reference, in column order.
    pub fn reductions(&self) -> [f64; 4] {
        let r = self.reference.cells();
        let c = self.candidate.cells();
        std::array::from_fn(|k| reduction_pct(r[k], c[k]))
    }

    pub fn runs(&self) -> [&RunResult; 4] {
        [
            &self.reference.clean,
            &self.candidate.clean,
            &self.reference.noisy,
            &self.candidate.noisy,
        ]
    }

    /// The table as CSV: one row per configuration plus a reduction row.
    pub fn table_csv(&self) -> String {
        let mut out = String::from("row,");
        out.push_str(&TABLE_COLUMNS.join(","));
        out.push('\n');
        let mut line = |label: &str, cells: [f64; 4]| {
            out.push_str(label);
            for v in cells {
                out.push(',');
                out.push_str(&format_number(v));
            }
            out.push('\n');
        };
        line(&self.reference.label, self.reference.cells());
        line(&self.candidate.label, self.candidate.cells());
        line("reduction_pct", self.reductions());
        out
    }

    /// Fixed-width text rendering for terminals.
    pub fn table_text(&self) -> String {
        let mut out = format!(
            "{:<14}{:>14}{:>14}{:>14}{:>14}\n",
            "", "ITAE", "ISU", "ITAE (noise)", "ISU (noise)"
        );
        let rows = [
            (self.reference.label.clone(), self.reference.cells(), ""),
            (self.candidate.label.clone(), self.candidate.cells(), ""),
            ("reduction".to_string(), self.reductions(), "%"),
        ];
        for (label, cells, unit) in rows {
            out.push_str(&format!("{label:<14}"));
            for v in cells {
                out.push_str(&format!("{:>14}", format!("{v:.6}{unit}")));
            }
            out.push('\n');
        }
        out
    }
}

fn label(s: &Scenario) -> String {
    s.variant.label().to_string()
}

/// Runs `reference` and `candidate` with noise off and on (same seed for
/// both), all four runs concurrently.
pub fn compare_pair(reference: &Scenario, candidate: &Scenario) -> Result<Comparison, RunError> {
    let scenarios = [
        reference.with_noise(false),
        candidate.with_noise(false),
        reference.with_noise(true),
        candidate.with_noise(true),
    ];
    let mut results: Vec<RunResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|s| scope.spawn(move || run_scenario(s)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let cand_noisy = results.pop().expect("four runs");
    let ref_noisy = results.pop().expect("four runs");
    let cand_clean = results.pop().expect("four runs");
    let ref_clean = results.pop().expect("four runs");
    Ok(Comparison {
        reference: ComparisonRow {
            label: label(reference),
            clean: ref_clean,
            noisy: ref_noisy,
        },
        candidate: ComparisonRow {
            label: label(candidate),
            clean: cand_clean,
            noisy: cand_noisy,
        },
    })
}

/// C-ADRC against N-ADRC on the same base scenario.
pub fn compare_variants(base: &Scenario) -> Result<Comparison, RunError> {
    compare_pair(
        &base.with_variant(VariantKind::Conventional),
        &base.with_variant(VariantKind::Nested),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> Scenario {
        Scenario {
            horizon: 2.0,
            ..Scenario::default()
        }
    }

    #[test]
    fn reduction_arithmetic() {
        assert_eq!(reduction_pct(2.0, 1.5), 25.0);
        assert_eq!(reduction_pct(0.0, 0.0), 0.0);
        assert!(reduction_pct(1.0, 2.0) < 0.0);
    }

    #[test]
    fn self_comparison_is_zero() {
        let s = short();
        let cmp = compare_pair(&s, &s).unwrap();
        assert_eq!(cmp.reductions(), [0.0; 4]);
    }

    #[test]
    fn reductions_recompute_from_cells() {
        let cmp = compare_variants(&short()).unwrap();
        let r = cmp.reference.cells();
        let c = cmp.candidate.cells();
        for k in 0..4 {
            assert_eq!(cmp.reductions()[k], 100.0 * (r[k] - c[k]) / r[k]);
        }
        assert_eq!(cmp.reference.label, "C-ADRC");
        assert_eq!(cmp.candidate.label, "N-ADRC");
        assert!(!cmp.reference.clean.noisy && cmp.reference.noisy.noisy);
    }

    #[test]
    fn table_csv_shape() {
        let cmp = compare_variants(&short()).unwrap();
        let csv = cmp.table_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "row,itae_clean,isu_clean,itae_noisy,isu_noisy");
        assert!(lines[1].starts_with("C-ADRC,"));
        assert!(lines[3].starts_with("reduction_pct,"));
        assert!(lines.iter().all(|l| l.split(',').count() == 5));
    }
}
