//! Tiny aligned-table renderer. Reports go to two places: a padded
//! human-readable block on standard output and a tab-separated file
//! with identical cells, so nothing has to parse the padded version.

use std::io::Write;
use std::path::Path;

pub(crate) struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub(crate) fn new<const N: usize>(headers: [&str; N]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub(crate) fn row<const N: usize>(&mut self, cells: [String; N]) {
        assert_eq!(N, self.headers.len(), "row width differs from header");
        self.rows.push(cells.into());
    }

    /// Pad every column to its widest cell; first column left-aligned
    /// (names), the rest right-aligned (numbers).
    pub(crate) fn render(&self) -> String {
        let cols = self.headers.len();
        let mut width = vec![0usize; cols];
        for (i, h) in self.headers.iter().enumerate() {
            width[i] = h.chars().count();
        }
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                width[i] = width[i].max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let mut emit = |cells: &[String]| {
            for (i, cell) in cells.iter().enumerate() {
                if i > 0 {
                    out.push_str("  ");
                }
                let pad = " ".repeat(width[i] - cell.chars().count());
                if i == 0 {
                    out.push_str(cell);
                    if i + 1 < cols {
                        out.push_str(&pad);
                    }
                } else {
                    out.push_str(&pad);
                    out.push_str(cell);
                }
            }
            out.push('\n');
        };
        emit(&self.headers);
        for row in &self.rows {
            emit(row);
        }
        out
    }

    pub(crate) fn write_tsv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "{}", self.headers.join("\t"))?;
        for row in &self.rows {
            writeln!(f, "{}", row.join("\t"))?;
        }
        Ok(())
    }
}
