//! The realized shifted Ferrers diagram and the type-B filling rules.
//!
//! Rows are stored top to bottom and left-aligned. The first `k` rows (for a
//! diagram with `k` columns) are the diagonal rows, of lengths `1..=k`; the
//! newest column is the leftmost one and its diagonal cell is the single cell
//! of the top row. The remaining rows belong to the original Ferrers diagram
//! and have weakly decreasing lengths.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tableau::{BorderPath, Step};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridRow {
    pub cells: Vec<bool>,
    pub diagonal: bool,
}

impl GridRow {
    /// Column of the diagonal cell (the rightmost cell) of a diagonal row.
    pub fn diagonal_index(&self) -> Option<usize> {
        if self.diagonal {
            self.cells.len().checked_sub(1)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Grid {
    rows: Vec<GridRow>,
}

/// A single failed filling rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// Column `column` contains no 1.
    EmptyColumn { column: usize },
    /// The 0 at (`row`, `column`) has a 1 above it and a 1 to its left.
    ZeroBelowAndRightOfOnes { row: usize, column: usize },
    /// The 1 at (`row`, `column`) sits in a row whose diagonal cell is 0.
    OneInZeroDiagonalRow { row: usize, column: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::EmptyColumn { column } => write!(f, "column {column} has no 1"),
            Violation::ZeroBelowAndRightOfOnes { row, column } => {
                write!(f, "0 at ({row}, {column}) has a 1 above and a 1 to its left")
            }
            Violation::OneInZeroDiagonalRow { row, column } => {
                write!(f, "1 at ({row}, {column}) in a row with a diagonal 0")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Grid {
    pub(crate) fn from_parts(rows: Vec<GridRow>) -> Self {
        Grid { rows }
    }

    /// Builds a grid from bare row contents. The diagram has as many columns
    /// as its longest row, and that many leading rows are taken as diagonal
    /// rows. No shape check happens here; see [`Grid::check_shape`].
    pub fn from_rows(rows: Vec<Vec<bool>>) -> Self {
        let k = rows.iter().map(Vec::len).max().unwrap_or(0);
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, cells)| GridRow {
                cells,
                diagonal: i < k,
            })
            .collect();
        Grid { rows }
    }

    pub fn rows(&self) -> &[GridRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of columns, equal to the number of diagonal rows.
    pub fn columns(&self) -> usize {
        self.rows.iter().filter(|r| r.diagonal).count()
    }

    /// Number of rows of the original (unshifted) diagram.
    pub fn original_rows(&self) -> usize {
        self.rows.len() - self.columns()
    }

    pub fn cell(&self, row: usize, column: usize) -> Option<bool> {
        self.rows.get(row)?.cells.get(column).copied()
    }

    /// Checks that the row lengths form a shifted Ferrers diagram.
    pub fn check_shape(&self) -> Result<()> {
        let k = self.columns();
        for (i, row) in self.rows.iter().enumerate() {
            if i < k {
                if !row.diagonal {
                    return Err(Error::MalformedShape(format!(
                        "row {i} should be a diagonal row"
                    )));
                }
                if row.cells.len() != i + 1 {
                    return Err(Error::MalformedShape(format!(
                        "diagonal row {i} has length {}, expected {}",
                        row.cells.len(),
                        i + 1
                    )));
                }
            } else {
                if row.diagonal {
                    return Err(Error::MalformedShape(format!(
                        "diagonal row {i} below an original row"
                    )));
                }
                let bound = if i == k { k } else { self.rows[i - 1].cells.len() };
                if row.cells.len() > bound {
                    return Err(Error::MalformedShape(format!(
                        "row {i} has length {}, longer than {bound}",
                        row.cells.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// The southeast border read from the northeast corner.
    pub fn border(&self) -> Result<BorderPath> {
        self.check_shape()?;
        let k = self.columns();
        let lengths: Vec<usize> = self.rows[k..].iter().map(|r| r.cells.len()).collect();
        let mut steps = Vec::with_capacity(self.rows.len());
        for j in (0..=k).rev() {
            steps.extend(lengths.iter().filter(|&&l| l == j).map(|_| Step::South));
            if j > 0 {
                steps.push(Step::West);
            }
        }
        Ok(BorderPath::new(steps))
    }

    /// Checks the three filling rules and reports every violating cell.
    pub fn validate(&self) -> Result<ValidationReport> {
        self.check_shape()?;
        let mut violations = Vec::new();
        let k = self.columns();

        for column in 0..k {
            let has_one = self
                .rows
                .iter()
                .any(|r| r.cells.get(column).copied().unwrap_or(false));
            if !has_one {
                violations.push(Violation::EmptyColumn { column });
            }
        }

        for (row, r) in self.rows.iter().enumerate() {
            for (column, &bit) in r.cells.iter().enumerate() {
                if bit {
                    continue;
                }
                let left = r.cells[..column].iter().any(|&b| b);
                if left && self.one_above(row, column) {
                    violations.push(Violation::ZeroBelowAndRightOfOnes { row, column });
                }
            }
            if let Some(d) = r.diagonal_index() {
                if !r.cells[d] {
                    for (column, &bit) in r.cells.iter().enumerate() {
                        if bit {
                            violations.push(Violation::OneInZeroDiagonalRow { row, column });
                        }
                    }
                }
            }
        }
        Ok(ValidationReport { violations })
    }

    fn one_above(&self, row: usize, column: usize) -> bool {
        self.rows[..row]
            .iter()
            .any(|r| r.cells.get(column).copied().unwrap_or(false))
    }

    /// Whether `row` holds a restricted 0 in some column `>= from_column`:
    /// a 0 with a 1 above it, or a 0 in a diagonal cell.
    pub(crate) fn restricted_from(&self, row: usize, from_column: usize) -> bool {
        let r = &self.rows[row];
        let diag = r.diagonal_index();
        r.cells
            .iter()
            .enumerate()
            .skip(from_column)
            .any(|(c, &bit)| !bit && (Some(c) == diag || self.one_above(row, c)))
    }

    /// Per-row flags: true when the row contains no restricted 0.
    pub fn unrestricted_flags(&self) -> Vec<bool> {
        (0..self.rows.len())
            .map(|i| !self.restricted_from(i, 0))
            .collect()
    }

    pub fn unrestricted_count(&self) -> usize {
        self.unrestricted_flags().into_iter().filter(|&u| u).count()
    }

    /// Number of 1s in diagonal cells.
    pub fn diagonal_ones(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.diagonal_index().is_some_and(|d| r.cells[d]))
            .count()
    }
}

/// Rows joined by `/`, cells as `0`/`1`, an empty row written as `.`.
impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            if row.cells.is_empty() {
                f.write_str(".")?;
            }
            for &b in &row.cells {
                f.write_str(if b { "1" } else { "0" })?;
            }
        }
        Ok(())
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Grid::default());
        }
        let mut rows = Vec::new();
        let mut offset = 0;
        for segment in s.split('/') {
            let mut cells = Vec::with_capacity(segment.len());
            if segment != "." {
                for (i, ch) in segment.char_indices() {
                    match ch {
                        '0' => cells.push(false),
                        '1' => cells.push(true),
                        _ => {
                            return Err(Error::Parse {
                                position: offset + i,
                                message: format!("unexpected {ch:?} in grid row"),
                            })
                        }
                    }
                }
                if segment.is_empty() {
                    return Err(Error::Parse {
                        position: offset,
                        message: "empty grid row must be written as '.'".into(),
                    });
                }
            }
            rows.push(cells);
            offset += segment.len() + 1;
        }
        Ok(Grid::from_rows(rows))
    }
}
