//! Whitespace-separated text grids.
//!
//! Partitioning and circulant-power matrices are stored one row group per
//! line, with `X` marking a dummy (discarded) circulant and integers
//! otherwise. Blank lines and lines starting with `#` are ignored.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Token {
    X,
    Int(u64),
}

/// A parsed grid together with the source position of every cell, so
/// callers can report semantic errors against the offending cell.
#[derive(Debug, Clone)]
pub struct TokenGrid {
    pub rows: usize,
    pub cols: usize,
    cells: Vec<(Token, usize, usize)>,
}

impl TokenGrid {
    pub fn get(&self, row: usize, col: usize) -> Token {
        self.cells[row * self.cols + col].0
    }

    /// 1-based (line, column) of a cell in the source text.
    pub fn position(&self, row: usize, col: usize) -> (usize, usize) {
        let (_, line, column) = self.cells[row * self.cols + col];
        (line, column)
    }

    pub fn error_at(&self, row: usize, col: usize, message: impl Into<String>) -> Error {
        let (line, column) = self.position(row, col);
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}

pub fn parse_grid(text: &str) -> Result<TokenGrid> {
    let mut cells = Vec::new();
    let mut rows = 0;
    let mut cols = None;
    for (line_idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut count = 0;
        let mut offset = 0;
        for word in line.split_whitespace() {
            let start = offset + line[offset..].find(word).unwrap_or(0);
            offset = start + word.len();
            let token = match word {
                "X" | "x" => Token::X,
                _ => word
                    .parse::<u64>()
                    .map(Token::Int)
                    .map_err(|_| Error::Parse {
                        line: line_idx + 1,
                        column: start + 1,
                        message: format!("unexpected token `{word}` in row {rows}, cell {count}"),
                    })?,
            };
            cells.push((token, line_idx + 1, start + 1));
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(Error::Parse {
                    line: line_idx + 1,
                    column: 1,
                    message: format!("row {rows} has {count} cells, expected {c}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Parse {
        line: 1,
        column: 1,
        message: "empty grid".into(),
    })?;
    Ok(TokenGrid { rows, cols, cells })
}

/// Formats rows of cells with single-space separation.
pub fn format_rows<I, R, S>(rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(|s| s.as_ref().to_string()).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_tokens() {
        let g = parse_grid("X 0 1\n# comment\n\n1 X 12\n").unwrap();
        assert_eq!((g.rows, g.cols), (2, 3));
        assert_eq!(g.get(0, 0), Token::X);
        assert_eq!(g.get(1, 2), Token::Int(12));
        assert_eq!(g.position(1, 2), (4, 5));
    }

    #[test]
    fn bad_token_names_cell() {
        let err = parse_grid("0 0\n0 Y\n").unwrap_err();
        match err {
            Error::Parse {
                line,
                column,
                message,
            } => {
                assert_eq!((line, column), (2, 3));
                assert!(message.contains("`Y`"));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(parse_grid("0 0 0\n0 0\n").is_err());
        assert!(parse_grid("\n\n").is_err());
    }
}
