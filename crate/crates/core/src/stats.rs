use serde::Serialize;

use crate::tableau::{Entry, GrowthHistory, Step, Tableau};

/// Per-tableau statistics.
///
/// Pair counts run over adjacent steps `(k-1, k)` for `k = 2..=n`; an SW pair
/// is a corner, a WS pair an inner corner.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StatRecord {
    pub n: usize,
    pub rows: usize,
    pub columns: usize,
    pub unrestricted: usize,
    pub diagonal_ones: usize,
    pub ss_pairs: usize,
    pub ww_pairs: usize,
    pub sw_pairs: usize,
    pub ws_pairs: usize,
    /// Position of the topmost 1 in each west step's free cells; `None` on
    /// south steps.
    pub g_trace: Vec<Option<usize>>,
}

/// Pair counts `(ss, ww, sw, ws)` over adjacent steps.
pub fn pair_counts(steps: &[Step]) -> [usize; 4] {
    let mut counts = [0; 4];
    for w in steps.windows(2) {
        let slot = match (w[0], w[1]) {
            (Step::South, Step::South) => 0,
            (Step::West, Step::West) => 1,
            (Step::South, Step::West) => 2,
            (Step::West, Step::South) => 3,
        };
        counts[slot] += 1;
    }
    counts
}

impl StatRecord {
    /// Statistics read off the realized grid (diagonal ones and `U_n` are
    /// counted on the cells).
    pub fn from_tableau(tableau: &Tableau) -> StatRecord {
        let border = tableau.border();
        let [ss, ww, sw, ws] = pair_counts(border.steps());
        StatRecord {
            n: tableau.size(),
            rows: border.south_count(),
            columns: border.west_count(),
            unrestricted: tableau.grid().unrestricted_count(),
            diagonal_ones: tableau.grid().diagonal_ones(),
            ss_pairs: ss,
            ww_pairs: ww,
            sw_pairs: sw,
            ws_pairs: ws,
            g_trace: g_trace(tableau.history()),
        }
    }

    /// Statistics computed from the history alone. The history must be
    /// valid (as checked by `Tableau::realize`).
    pub fn from_history(history: &GrowthHistory) -> StatRecord {
        let border = history.border();
        let [ss, ww, sw, ws] = pair_counts(border.steps());
        let g_trace = g_trace(history);
        let unrestricted = history
            .unrestricted_trace()
            .ok()
            .and_then(|t| t.last().copied())
            .unwrap_or(0);
        StatRecord {
            n: history.len(),
            rows: border.south_count(),
            columns: border.west_count(),
            unrestricted,
            diagonal_ones: g_trace.iter().filter(|g| **g == Some(1)).count(),
            ss_pairs: ss,
            ww_pairs: ww,
            sw_pairs: sw,
            ws_pairs: ws,
            g_trace,
        }
    }
}

fn g_trace(history: &GrowthHistory) -> Vec<Option<usize>> {
    history
        .entries()
        .iter()
        .map(|e| match e {
            Entry::South => None,
            Entry::West(fill) => fill.topmost_one(),
        })
        .collect()
}

/// Scalar statistics that can be averaged over tableaux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Rows,
    Columns,
    Unrestricted,
    DiagonalOnes,
    SsPairs,
    WwPairs,
    SwPairs,
    WsPairs,
}

impl Statistic {
    pub const ALL: [Statistic; 8] = [
        Statistic::Rows,
        Statistic::Columns,
        Statistic::Unrestricted,
        Statistic::DiagonalOnes,
        Statistic::SsPairs,
        Statistic::WwPairs,
        Statistic::SwPairs,
        Statistic::WsPairs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Rows => "rows",
            Statistic::Columns => "columns",
            Statistic::Unrestricted => "unrestricted",
            Statistic::DiagonalOnes => "diagonal_ones",
            Statistic::SsPairs => "ss_pairs",
            Statistic::WwPairs => "ww_pairs",
            Statistic::SwPairs => "sw_pairs",
            Statistic::WsPairs => "ws_pairs",
        }
    }

    pub fn of(self, record: &StatRecord) -> usize {
        match self {
            Statistic::Rows => record.rows,
            Statistic::Columns => record.columns,
            Statistic::Unrestricted => record.unrestricted,
            Statistic::DiagonalOnes => record.diagonal_ones,
            Statistic::SsPairs => record.ss_pairs,
            Statistic::WwPairs => record.ww_pairs,
            Statistic::SwPairs => record.sw_pairs,
            Statistic::WsPairs => record.ws_pairs,
        }
    }
}

impl std::fmt::Display for Statistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Statistic {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        let stat = match s {
            "rows" => Statistic::Rows,
            "columns" | "cols" => Statistic::Columns,
            "unrestricted" => Statistic::Unrestricted,
            "diagonal_ones" | "diag_ones" => Statistic::DiagonalOnes,
            "ss_pairs" | "ss" => Statistic::SsPairs,
            "ww_pairs" | "ww" => Statistic::WwPairs,
            "sw_pairs" | "sw" | "corners" => Statistic::SwPairs,
            "ws_pairs" | "ws" => Statistic::WsPairs,
            _ => {
                return Err(crate::Error::Parse {
                    position: 0,
                    message: format!("unknown statistic {s:?}"),
                })
            }
        };
        Ok(stat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_step_example() {
        let t: Tableau = "WSSWWS;1;0010;110".parse().unwrap();
        let s = t.stats();
        assert_eq!(
            (s.rows, s.columns, s.unrestricted, s.diagonal_ones),
            (3, 3, 3, 2)
        );
        assert_eq!((s.ss_pairs, s.ww_pairs, s.sw_pairs, s.ws_pairs), (1, 1, 1, 2));
        assert_eq!(s.g_trace, vec![Some(1), None, None, Some(3), Some(1), None]);
        assert_eq!(s, StatRecord::from_history(t.history()));
    }

    #[test]
    fn empty_tableau_is_all_zero() {
        let s = Tableau::empty().stats();
        assert_eq!(s, StatRecord::default());
    }

    #[test]
    fn all_south() {
        let s: StatRecord = "SSSSS".parse::<Tableau>().unwrap().stats();
        assert_eq!((s.rows, s.ss_pairs, s.ww_pairs, s.sw_pairs, s.ws_pairs), (5, 4, 0, 0, 0));
    }
}
