//! Type-B permutation tableaux in their two representations.
//!
//! The canonical form is a [`GrowthHistory`]: one entry per border step,
//! either a south step (a new empty bottom row) or a west step carrying the
//! bits written into the free cells of the new leftmost column. The realized
//! [`Grid`] is derived from it by [`Tableau::realize`], and recovered from a
//! grid by [`grid_to_history`].
//!
//! The text form is `<steps>;<fill_1>;<fill_2>;...`, e.g. `WWW;1;01;10`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridRow};
use crate::stats::StatRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    South,
    West,
}

impl Step {
    pub fn as_char(self) -> char {
        match self {
            Step::South => 'S',
            Step::West => 'W',
        }
    }
}

/// The southeast border, read from the northeast corner.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BorderPath(Vec<Step>);

impl BorderPath {
    pub fn new(steps: Vec<Step>) -> Self {
        BorderPath(steps)
    }

    pub fn steps(&self) -> &[Step] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn south_count(&self) -> usize {
        self.0.iter().filter(|&&s| s == Step::South).count()
    }

    pub fn west_count(&self) -> usize {
        self.0.len() - self.south_count()
    }
}

impl fmt::Display for BorderPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|s| write!(f, "{}", s.as_char()))
    }
}

impl FromStr for BorderPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.char_indices()
            .map(|(i, ch)| match ch {
                'S' | 's' => Ok(Step::South),
                'W' | 'w' => Ok(Step::West),
                _ => Err(Error::Parse {
                    position: i,
                    message: format!("expected S or W, found {ch:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(BorderPath)
    }
}

/// Bits for the free cells of one new column, top to bottom: position 1 is
/// the new diagonal cell, the rest are the rows unrestricted before the step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnFill(Vec<bool>);

impl ColumnFill {
    pub fn new(bits: Vec<bool>) -> Self {
        ColumnFill(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based position of the topmost 1, if any.
    pub fn topmost_one(&self) -> Option<usize> {
        self.0.iter().position(|&b| b).map(|p| p + 1)
    }

    /// Unrestricted rows after inserting this column into a diagram with
    /// `len() - 1` unrestricted rows.
    pub fn resulting_unrestricted(&self) -> usize {
        match self.topmost_one() {
            None => 0,
            Some(g) => {
                let ones_after = self.0[g..].iter().filter(|&&b| b).count();
                // Rows above the first 1 stay unrestricted unless one of them
                // is the new diagonal row (g > 1 means a diagonal 0).
                let above = if g == 1 { 0 } else { g - 2 };
                above + 1 + ones_after
            }
        }
    }
}

impl fmt::Display for ColumnFill {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0
            .iter()
            .try_for_each(|&b| f.write_str(if b { "1" } else { "0" }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Entry {
    South,
    West(ColumnFill),
}

impl Entry {
    pub fn step(&self) -> Step {
        match self {
            Entry::South => Step::South,
            Entry::West(_) => Step::West,
        }
    }

    pub fn fill(&self) -> Option<&ColumnFill> {
        match self {
            Entry::South => None,
            Entry::West(fill) => Some(fill),
        }
    }
}

/// Step-by-step construction record; bijective with tableaux.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct GrowthHistory(Vec<Entry>);

impl GrowthHistory {
    pub fn new(entries: Vec<Entry>) -> Self {
        GrowthHistory(entries)
    }

    pub fn entries(&self) -> &[Entry] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<Entry> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn border(&self) -> BorderPath {
        BorderPath(self.0.iter().map(Entry::step).collect())
    }

    /// Unrestricted counts `U_1..U_n` derived from the fills alone, without
    /// realizing the grid. Fails on the same inputs as [`Tableau::realize`].
    pub fn unrestricted_trace(&self) -> Result<Vec<usize>> {
        let mut u = 0;
        let mut trace = Vec::with_capacity(self.0.len());
        for (i, entry) in self.0.iter().enumerate() {
            u = match entry {
                Entry::South => u + 1,
                Entry::West(fill) => {
                    check_fill(i + 1, fill, u)?;
                    fill.resulting_unrestricted()
                }
            };
            trace.push(u);
        }
        Ok(trace)
    }
}

fn check_fill(step: usize, fill: &ColumnFill, unrestricted: usize) -> Result<()> {
    if fill.len() != unrestricted + 1 {
        return Err(Error::FillLengthMismatch {
            step,
            expected: unrestricted + 1,
            found: fill.len(),
        });
    }
    if fill.topmost_one().is_none() {
        return Err(Error::AllZeroFill { step });
    }
    Ok(())
}

impl fmt::Display for GrowthHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.border())?;
        for fill in self.0.iter().filter_map(Entry::fill) {
            write!(f, ";{fill}")?;
        }
        Ok(())
    }
}

/// Syntax only; lengths and nonzero fills are checked by `realize`.
impl FromStr for GrowthHistory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim_end_matches(['\n', '\r']);
        let mut parts = s.split(';');
        let steps_text = parts.next().unwrap_or("");
        let border: BorderPath = steps_text.parse()?;

        let mut offset = steps_text.len() + 1;
        let mut fills = Vec::new();
        for part in parts {
            let mut bits = Vec::with_capacity(part.len());
            for (i, ch) in part.char_indices() {
                match ch {
                    '0' => bits.push(false),
                    '1' => bits.push(true),
                    _ => {
                        return Err(Error::Parse {
                            position: offset + i,
                            message: format!("expected 0 or 1, found {ch:?}"),
                        })
                    }
                }
            }
            if bits.is_empty() {
                return Err(Error::Parse {
                    position: offset,
                    message: "empty column fill".into(),
                });
            }
            fills.push((offset, ColumnFill(bits)));
            offset += part.len() + 1;
        }

        if fills.len() != border.west_count() {
            return Err(Error::Parse {
                position: fills.get(border.west_count()).map_or(s.len(), |f| f.0),
                message: format!(
                    "{} west steps but {} column fills",
                    border.west_count(),
                    fills.len()
                ),
            });
        }

        let mut fills = fills.into_iter().map(|(_, f)| f);
        let entries = border
            .steps()
            .iter()
            .map(|step| match step {
                Step::South => Entry::South,
                Step::West => Entry::West(fills.next().expect("counted above")),
            })
            .collect();
        Ok(GrowthHistory(entries))
    }
}

/// A realized type-B permutation tableau.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tableau {
    history: GrowthHistory,
    grid: Grid,
    border: BorderPath,
    u_trace: Vec<usize>,
}

impl Tableau {
    /// Builds the grid step by step. A south step appends an empty bottom
    /// row; a west step adds a leftmost column whose cells are forced to 0 in
    /// restricted rows and taken from the fill elsewhere, plus a new top
    /// diagonal row. Unrestricted counts are measured on the grid after
    /// every step.
    pub fn realize(history: GrowthHistory) -> Result<Tableau> {
        let mut rows: Vec<GridRow> = Vec::with_capacity(history.len());
        let mut u_trace = Vec::with_capacity(history.len());
        for (i, entry) in history.entries().iter().enumerate() {
            match entry {
                Entry::South => rows.push(GridRow {
                    cells: Vec::new(),
                    diagonal: false,
                }),
                Entry::West(fill) => {
                    let current = Grid::from_parts(std::mem::take(&mut rows));
                    let flags = current.unrestricted_flags();
                    let free = flags.iter().filter(|&&f| f).count();
                    check_fill(i + 1, fill, free)?;

                    let mut bits = fill.bits().iter().copied();
                    let mut next = Vec::with_capacity(current.rows().len() + 1);
                    next.push(GridRow {
                        cells: vec![bits.next().expect("fill is nonempty")],
                        diagonal: true,
                    });
                    for (row, unrestricted) in current.rows().iter().zip(flags) {
                        let bit = if unrestricted {
                            bits.next().expect("fill length checked")
                        } else {
                            false
                        };
                        let mut cells = Vec::with_capacity(row.cells.len() + 1);
                        cells.push(bit);
                        cells.extend_from_slice(&row.cells);
                        next.push(GridRow {
                            cells,
                            diagonal: row.diagonal,
                        });
                    }
                    rows = next;
                }
            }
            u_trace.push(Grid::from_parts(rows.clone()).unrestricted_count());
        }
        let grid = Grid::from_parts(rows);
        let border = history.border();
        Ok(Tableau {
            history,
            grid,
            border,
            u_trace,
        })
    }

    pub fn empty() -> Tableau {
        Tableau {
            history: GrowthHistory::default(),
            grid: Grid::default(),
            border: BorderPath::default(),
            u_trace: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &GrowthHistory {
        &self.history
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn border(&self) -> &BorderPath {
        &self.border
    }

    /// `U_1..U_n` as measured on the grid after each step.
    pub fn u_trace(&self) -> &[usize] {
        &self.u_trace
    }

    /// `U_n`, or 0 for the empty tableau.
    pub fn unrestricted(&self) -> usize {
        self.u_trace.last().copied().unwrap_or(0)
    }

    pub fn stats(&self) -> StatRecord {
        StatRecord::from_tableau(self)
    }

    /// Appends one entry, re-realizing the result.
    pub fn extend(&self, entry: Entry) -> Result<Tableau> {
        let mut entries = self.history.entries().to_vec();
        entries.push(entry);
        Tableau::realize(GrowthHistory(entries))
    }
}

impl fmt::Display for Tableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.history.fmt(f)
    }
}

impl FromStr for Tableau {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Tableau::realize(s.parse()?)
    }
}

/// Unrestricted counts measured structurally on the grid, one per step.
///
/// Each prefix is re-realized and its rows scanned for restricted zeros, so
/// this does not reuse the trace stored by `realize`.
pub fn unrestricted_trace(tableau: &Tableau) -> Vec<usize> {
    let entries = tableau.history.entries();
    (1..=entries.len())
        .map(|k| {
            let prefix = GrowthHistory(entries[..k].to_vec());
            Tableau::realize(prefix)
                .expect("prefix of a valid history")
                .grid
                .unrestricted_count()
        })
        .collect()
}

/// Recovers the unique growth history of a valid grid.
pub fn grid_to_history(grid: &Grid) -> Result<GrowthHistory> {
    let report = grid
        .validate()
        .map_err(|e| Error::InvalidGrid(e.to_string()))?;
    if !report.is_ok() {
        return Err(Error::InvalidGrid(format!(
            "{} rule violation(s), first: {:?}",
            report.violations.len(),
            report.violations[0]
        )));
    }
    let border = grid.border()?;
    let k = grid.columns();

    // West steps insert columns right to left: the t-th west step (1-based)
    // is column k - t, whose diagonal cell lives in diagonal row k - t.
    let mut west_seen = 0;
    let mut entries = Vec::with_capacity(border.len());
    for step in border.steps() {
        match step {
            Step::South => entries.push(Entry::South),
            Step::West => {
                west_seen += 1;
                let column = k - west_seen;
                let mut bits = vec![grid.rows()[column].cells[column]];
                for row in column + 1..grid.rows().len() {
                    if grid.rows()[row].cells.len() <= column {
                        continue;
                    }
                    if !grid.restricted_from(row, column + 1) {
                        bits.push(grid.rows()[row].cells[column]);
                    }
                }
                entries.push(Entry::West(ColumnFill(bits)));
            }
        }
    }

    let history = GrowthHistory(entries);
    let rebuilt = Tableau::realize(history.clone())
        .map_err(|e| Error::InvalidGrid(format!("history does not realize: {e}")))?;
    if &rebuilt.grid != grid {
        return Err(Error::InvalidGrid(
            "grid has a 1 in a cell forced to 0".into(),
        ));
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Tableau {
        s.parse().unwrap()
    }

    #[test]
    fn six_step_example_trace() {
        let tab = t("WSSWWS;1;0010;110");
        assert_eq!(tab.u_trace(), &[1, 2, 3, 2, 2, 3]);
        assert_eq!(tab.grid().to_string(), "1/00/101/01/00/.");
        assert_eq!(unrestricted_trace(&tab), vec![1, 2, 3, 2, 2, 3]);
        assert_eq!(tab.history().unrestricted_trace().unwrap(), vec![1, 2, 3, 2, 2, 3]);
    }

    #[test]
    fn empty_history() {
        let tab = t("");
        assert_eq!(tab.size(), 0);
        assert!(tab.grid().is_empty());
        assert!(tab.u_trace().is_empty());
        assert_eq!(tab, Tableau::empty());
        assert_eq!(tab.to_string(), "");
    }

    #[test]
    fn size_two_parent() {
        let tab = t("WW;1;01");
        assert_eq!(tab.grid().to_string(), "0/11");
        assert!(tab.grid().validate().unwrap().is_ok());
        assert_eq!(tab.u_trace(), &[1, 1]);
    }

    #[test]
    fn all_south_trace() {
        let tab = t("SSSS");
        assert_eq!(unrestricted_trace(&tab), vec![1, 2, 3, 4]);
    }

    #[test]
    fn realize_errors() {
        assert_eq!(
            "WW;1;00".parse::<Tableau>(),
            Err(Error::AllZeroFill { step: 2 })
        );
        assert_eq!(
            "WW;1;1".parse::<Tableau>(),
            Err(Error::FillLengthMismatch {
                step: 2,
                expected: 2,
                found: 1
            })
        );
        assert_eq!(
            "W;11".parse::<Tableau>(),
            Err(Error::FillLengthMismatch {
                step: 1,
                expected: 1,
                found: 2
            })
        );
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert!(matches!(
            "SX".parse::<GrowthHistory>(),
            Err(Error::Parse { position: 1, .. })
        ));
        assert!(matches!(
            "W;12".parse::<GrowthHistory>(),
            Err(Error::Parse { position: 3, .. })
        ));
        assert!(matches!(
            "W;1;1".parse::<GrowthHistory>(),
            Err(Error::Parse { position: 4, .. })
        ));
        assert!(matches!(
            "WW;1".parse::<GrowthHistory>(),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            "W;".parse::<GrowthHistory>(),
            Err(Error::Parse { position: 2, .. })
        ));
    }

    #[test]
    fn grid_round_trip_examples() {
        assert_eq!(grid_to_history(&Grid::default()).unwrap(), GrowthHistory::default());
        let tab = t("WSSWWS;1;0010;110");
        assert_eq!(&grid_to_history(tab.grid()).unwrap(), tab.history());
    }

    #[test]
    fn unshifted_grid_is_rejected() {
        let g: Grid = "1101/1101/001/0/1".parse().unwrap();
        assert!(matches!(grid_to_history(&g), Err(Error::InvalidGrid(_))));
        let bad: Grid = "0".parse().unwrap();
        assert!(matches!(grid_to_history(&bad), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn resulting_unrestricted_matches_examples() {
        let fill = |s: &str| ColumnFill(s.chars().map(|c| c == '1').collect());
        assert_eq!(fill("1").resulting_unrestricted(), 1);
        assert_eq!(fill("10").resulting_unrestricted(), 1);
        assert_eq!(fill("11").resulting_unrestricted(), 2);
        assert_eq!(fill("01").resulting_unrestricted(), 1);
        assert_eq!(fill("0100").resulting_unrestricted(), 1);
        assert_eq!(fill("0010").resulting_unrestricted(), 2);
        assert_eq!(fill("110").resulting_unrestricted(), 2);
    }
}
