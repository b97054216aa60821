//! Plain-text game and session files.
//!
//! Game file, one or more blocks:
//! ```text
//! game <id>
//! <row player's payoffs: 4 reals, row-major>
//! <column player's payoffs: 4 reals, row-major>
//! ```
//! Session file, one or more blocks:
//! ```text
//! session <game_id> <session_id> <num_pairs> <T>
//! <row player's T actions>
//! <column player's T actions>
//! ...
//! ```
//! Actions are the digits 0 and 1, optionally separated by whitespace. `#`
//! starts a comment; blank lines are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::game::{Action, Game2x2};

use super::{PlayerPair, Session};

fn read_utf8(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    String::from_utf8(bytes).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        line: 0,
        msg: format!("not valid UTF-8: {e}"),
    })
}

/// Content lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

struct Cursor<'a, I: Iterator<Item = (usize, &'a str)>> {
    lines: std::iter::Peekable<I>,
    file: PathBuf,
    last_line: usize,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Cursor<'a, I> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse { file: self.file.clone(), line, msg: msg.into() }
    }

    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.lines.next() {
            Some((n, l)) => {
                self.last_line = n;
                Ok((n, l))
            }
            None => Err(self.err(self.last_line, format!("unexpected end of file, expected {what}"))),
        }
    }
}

pub fn parse_games(text: &str, file: &Path) -> Result<Vec<Game2x2>> {
    let mut cur = Cursor { lines: content_lines(text).peekable(), file: file.to_path_buf(), last_line: 0 };
    let mut games = Vec::new();
    while cur.lines.peek().is_some() {
        let (n, header) = cur.next_line("game header")?;
        let mut tok = header.split_whitespace();
        if tok.next() != Some("game") {
            return Err(cur.err(n, "expected `game <id>`"));
        }
        let id = tok.next().ok_or_else(|| cur.err(n, "missing game id"))?;
        if tok.next().is_some() {
            return Err(cur.err(n, "trailing tokens after game id"));
        }
        let mut mats = [[[0.0; 2]; 2]; 2];
        for (m, who) in mats.iter_mut().zip(["row", "column"]) {
            let (n, line) = cur.next_line(&format!("{who} payoffs"))?;
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| cur.err(n, format!("bad payoff {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != 4 {
                return Err(cur.err(n, format!("expected 4 {who} payoffs, found {}", vals.len())));
            }
            *m = [[vals[0], vals[1]], [vals[2], vals[3]]];
        }
        let g = Game2x2::new(id, mats[0], mats[1]).map_err(|e| cur.err(n, e.to_string()))?;
        games.push(g);
    }
    Ok(games)
}

pub fn parse_sessions(text: &str, file: &Path) -> Result<Vec<Session>> {
    let mut cur = Cursor { lines: content_lines(text).peekable(), file: file.to_path_buf(), last_line: 0 };
    let mut sessions = Vec::new();
    while cur.lines.peek().is_some() {
        let (n, header) = cur.next_line("session header")?;
        let tok: Vec<&str> = header.split_whitespace().collect();
        if tok.len() != 5 || tok[0] != "session" {
            return Err(cur.err(n, "expected `session <game_id> <session_id> <num_pairs> <T>`"));
        }
        let num_pairs: usize = tok[3].parse().map_err(|_| cur.err(n, format!("bad pair count {:?}", tok[3])))?;
        let periods: usize = tok[4].parse().map_err(|_| cur.err(n, format!("bad period count {:?}", tok[4])))?;
        let mut pairs = Vec::with_capacity(num_pairs);
        for p in 0..num_pairs {
            let mut seqs: [Vec<Action>; 2] = Default::default();
            for (seq, who) in seqs.iter_mut().zip(["row", "column"]) {
                let (n, line) = cur.next_line(&format!("{who} actions of pair {p}"))?;
                for c in line.chars().filter(|c| !c.is_whitespace()) {
                    let a = c
                        .to_digit(10)
                        .and_then(|d| Action::from_index(d as u8))
                        .ok_or_else(|| cur.err(n, format!("invalid action {c:?}")))?;
                    seq.push(a);
                }
            }
            let [row, col] = seqs;
            pairs.push(PlayerPair { row, col });
        }
        let s = Session { game_id: tok[1].into(), session_id: tok[2].into(), pairs, periods };
        s.validate().map_err(|e| match e {
            Error::Validation(m) => Error::Validation(format!("{}:{n}: {m}", file.display())),
            other => other,
        })?;
        sessions.push(s);
    }
    Ok(sessions)
}

/// Files under `path` (or `path` itself) in sorted order.
fn files_under(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|p| p.is_file())
            .collect();
        v.sort();
        Ok(v)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

/// Loads every session from a file, or from every file in a directory.
pub fn load_sessions(path: impl AsRef<Path>) -> Result<Vec<Session>> {
    let mut out = Vec::new();
    for f in files_under(path.as_ref())? {
        out.extend(parse_sessions(&read_utf8(&f)?, &f)?);
    }
    Ok(out)
}

pub fn load_games(path: impl AsRef<Path>) -> Result<Vec<Game2x2>> {
    let mut out = Vec::new();
    for f in files_under(path.as_ref())? {
        out.extend(parse_games(&read_utf8(&f)?, &f)?);
    }
    Ok(out)
}

fn join_actions(seq: &[Action]) -> String {
    let mut s = String::with_capacity(seq.len() * 2);
    for (i, a) in seq.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push(if *a == Action::Zero { '0' } else { '1' });
    }
    s
}

pub fn format_sessions(sessions: &[Session]) -> String {
    let mut out = String::new();
    for s in sessions {
        let _ = writeln!(out, "session {} {} {} {}", s.game_id, s.session_id, s.pairs.len(), s.periods);
        for p in &s.pairs {
            out.push_str(&join_actions(&p.row));
            out.push('\n');
            out.push_str(&join_actions(&p.col));
            out.push('\n');
        }
    }
    out
}

pub fn format_games(games: &[Game2x2]) -> String {
    let mut out = String::new();
    for g in games {
        let _ = writeln!(out, "game {}", g.id);
        for m in [&g.payoff_row, &g.payoff_col] {
            let _ = writeln!(out, "{} {} {} {}", m[0][0], m[0][1], m[1][0], m[1][1]);
        }
    }
    out
}

pub fn write_sessions(path: impl AsRef<Path>, sessions: &[Session]) -> Result<()> {
    fs::write(path, format_sessions(sessions))?;
    Ok(())
}

pub fn write_games(path: impl AsRef<Path>, games: &[Game2x2]) -> Result<()> {
    fs::write(path, format_games(games))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test.txt")
    }

    #[test]
    fn parses_minimal_session() {
        let text = "# one session\nsession g1 s1 1 3\n0 1 0\n1 1 0\n";
        let s = parse_sessions(text, p()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].periods, 3);
        assert_eq!(s[0].pairs[0].row, vec![Action::Zero, Action::One, Action::Zero]);
        assert_eq!(s[0].pairs[0].col, vec![Action::One, Action::One, Action::Zero]);
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        assert!(parse_sessions("", p()).unwrap().is_empty());
        assert!(parse_sessions("# nothing\n\n", p()).unwrap().is_empty());
    }

    #[test]
    fn bad_action_reports_line() {
        let text = "session g1 s1 1 3\n0 1 2\n1 1 0\n";
        match parse_sessions(text, p()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn short_sequence_is_validation_error() {
        let text = "session g1 s1 1 3\n0 1\n1 1 0\n";
        assert!(matches!(parse_sessions(text, p()), Err(Error::Validation(_))));
    }

    #[test]
    fn truncated_file_is_parse_error() {
        let text = "session g1 s1 2 3\n0 1 0\n1 1 0\n";
        assert!(matches!(parse_sessions(text, p()), Err(Error::Parse { .. })));
    }

    #[test]
    fn games_parse_and_format() {
        let text = "game mp # matching pennies\n1 -1 -1 1\n-1 1 1 -1\ngame g2\n0 2 1 0\n2 0 0 1.5\n";
        let g = parse_games(text, p()).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0], Game2x2 { id: "mp".into(), ..Game2x2::matching_pennies() });
        assert_eq!(g[1].payoff_col[1][1], 1.5);
        assert_eq!(parse_games(&format_games(&g), p()).unwrap(), g);
    }

    #[test]
    fn game_with_three_payoffs_is_rejected() {
        let text = "game g\n1 2 3\n1 2 3 4\n";
        assert!(matches!(parse_games(text, p()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn invalid_utf8_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("bad.txt");
        fs::write(&f, [0x73, 0xff, 0xfe]).unwrap();
        assert!(matches!(load_sessions(&f), Err(Error::Parse { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn session() -> impl Strategy<Value = Session> {
            (1usize..4, 1usize..30).prop_flat_map(|(np, t)| {
                let seq = prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { Action::One } else { Action::Zero }), t);
                prop::collection::vec((seq.clone(), seq), np).prop_map(move |v| Session {
                    game_id: "g".into(),
                    session_id: "s".into(),
                    pairs: v.into_iter().map(|(row, col)| PlayerPair { row, col }).collect(),
                    periods: t,
                })
            })
        }

        proptest! {
            #[test]
            fn write_then_load_is_identity(corpus in prop::collection::vec(session(), 0..4)) {
                let dir = tempfile::tempdir().unwrap();
                let f = dir.path().join("s.txt");
                write_sessions(&f, &corpus).unwrap();
                prop_assert_eq!(load_sessions(&f).unwrap(), corpus);
            }
        }
    }
}
