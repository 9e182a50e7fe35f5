//! World text format.
//!
//! ```text
//! # comment
//! name = bw-e
//! palette.marker_green = 0 1 0
//! ....S....
//! ....M....
//! .1.....2.
//! ```
//!
//! Header lines are `key = value` and must precede the grid. Grid rows use
//! `.` (empty), `S` (start), `M` (marker), `1` and `2` (goal cells); each of
//! `S`, `M`, `1`, `2` appears exactly once. Anything else is rejected.

use super::{Cell, Palette, Role, WorldSpec};
use crate::error::{Error, Result};

fn parse_rgb(value: &str, line: usize) -> Result<[f64; 3]> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::WorldParse {
            line,
            msg: format!("expected three numbers, got `{value}`"),
        });
    }
    let mut rgb = [0.0; 3];
    for (slot, p) in rgb.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|_| Error::WorldParse {
            line,
            msg: format!("`{p}` is not a number"),
        })?;
    }
    Ok(rgb)
}

impl WorldSpec {
    pub fn parse(text: &str) -> Result<WorldSpec> {
        let mut name = String::from("world");
        let mut palette = Palette::default();
        let mut rows: Vec<(usize, &str)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                if !rows.is_empty() {
                    return Err(Error::WorldParse {
                        line: line_no,
                        msg: "header line after grid rows".into(),
                    });
                }
                let (key, value) = (key.trim(), value.trim());
                if key == "name" {
                    name = value.to_string();
                } else if let Some(role_key) = key.strip_prefix("palette.") {
                    let role = Role::ALL
                        .into_iter()
                        .find(|r| r.key() == role_key)
                        .ok_or_else(|| Error::WorldParse {
                            line: line_no,
                            msg: format!("unknown palette role `{role_key}`"),
                        })?;
                    palette
                        .set(role, parse_rgb(value, line_no)?)
                        .map_err(|e| Error::WorldParse {
                            line: line_no,
                            msg: e.to_string(),
                        })?;
                } else {
                    return Err(Error::WorldParse {
                        line: line_no,
                        msg: format!("unknown header key `{key}`"),
                    });
                }
                continue;
            }
            rows.push((line_no, line));
        }

        let Some(&(first_line, first)) = rows.first() else {
            return Err(Error::WorldParse {
                line: text.lines().count().max(1),
                msg: "no grid rows".into(),
            });
        };
        let width = first.chars().count();
        let mut found: [Option<Cell>; 4] = [None; 4];
        for (r, &(line_no, row)) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::WorldParse {
                    line: line_no,
                    msg: format!(
                        "row has {} cells, row at line {first_line} has {width}",
                        row.chars().count()
                    ),
                });
            }
            for (c, ch) in row.chars().enumerate() {
                let slot = match ch {
                    '.' => continue,
                    'S' => 0,
                    'M' => 1,
                    '1' => 2,
                    '2' => 3,
                    other => {
                        return Err(Error::WorldParse {
                            line: line_no,
                            msg: format!("unknown cell character `{other}` at column {}", c + 1),
                        })
                    }
                };
                if found[slot].is_some() {
                    return Err(Error::WorldParse {
                        line: line_no,
                        msg: format!("`{ch}` appears more than once"),
                    });
                }
                found[slot] = Some(Cell::new(r, c));
            }
        }
        let missing = |i: usize, what: &str| {
            found[i].ok_or_else(|| Error::WorldParse {
                line: first_line,
                msg: format!("grid has no {what} cell"),
            })
        };
        let start = missing(0, "start (S)")?;
        let marker = missing(1, "marker (M)")?;
        let g1 = missing(2, "goal 1")?;
        let g2 = missing(3, "goal 2")?;
        WorldSpec::new(name, rows.len(), width, start, marker, [g1, g2], palette)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
# tiny
name = tiny
palette.empty = 0.1 0.1 0.1
..S..
.....
..M..
1...2
";

    #[test]
    fn parses_header_and_grid() {
        let w = WorldSpec::parse(SMALL).unwrap();
        assert_eq!(w.name, "tiny");
        assert_eq!((w.height, w.width), (4, 5));
        assert_eq!(w.start, Cell::new(0, 2));
        assert_eq!(w.marker, Cell::new(2, 2));
        assert_eq!(w.goals, [Cell::new(3, 0), Cell::new(3, 4)]);
        assert_eq!(w.palette.color(Role::Empty), [0.1, 0.1, 0.1]);
    }

    #[test]
    fn rejects_unknown_character() {
        let err = WorldSpec::parse(&SMALL.replace("1...2", "1.#.2")).unwrap_err();
        assert!(err.to_string().contains("line 7"), "{err}");
        assert!(err.to_string().contains('#'), "{err}");
    }

    #[test]
    fn rejects_duplicates_and_missing() {
        assert!(WorldSpec::parse(&SMALL.replace(".....", "..S..")).is_err());
        assert!(WorldSpec::parse(&SMALL.replace("..M..", ".....")).is_err());
        assert!(WorldSpec::parse(&SMALL.replace("1...2", "1...")).is_err());
    }

    #[test]
    fn rejects_bad_header() {
        assert!(WorldSpec::parse(&SMALL.replace("name = tiny", "colour = red")).is_err());
        assert!(WorldSpec::parse(&SMALL.replace("0.1 0.1 0.1", "0.1 0.1")).is_err());
        assert!(WorldSpec::parse(&SMALL.replace("0.1 0.1 0.1", "2 0 0")).is_err());
        assert!(WorldSpec::parse(&format!("{SMALL}name = late\n")).is_err());
    }
}
