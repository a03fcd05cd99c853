use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{Dataset, DatasetBuilder, UserId};

/// On-disk dataset layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataFormat {
    /// One user per line, items separated by whitespace. The user id is the
    /// zero-based line index.
    UserLines,
    /// Two-column `user_id,item` CSV. Rows are grouped by user in order of
    /// first appearance, keeping file order within each user.
    UserItemCsv { header: bool },
}

pub fn load_dataset(path: &Path, format: DataFormat) -> Result<Dataset> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_dataset(BufReader::new(file), format, path)
}

/// Parses from any reader; `origin` is only used in error messages.
pub fn read_dataset<R: Read>(reader: R, format: DataFormat, origin: &Path) -> Result<Dataset> {
    match format {
        DataFormat::UserLines => read_user_lines(BufReader::new(reader), origin),
        DataFormat::UserItemCsv { header } => read_user_item_csv(reader, header, origin),
    }
}

fn read_user_lines<R: BufRead>(mut reader: R, origin: &Path) -> Result<Dataset> {
    let mut builder = DatasetBuilder::default();
    let mut buf = Vec::new();
    let mut line_no = 0u64;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf).map_err(|source| Error::Io {
            path: origin.to_path_buf(),
            source,
        })?;
        if n == 0 {
            break;
        }
        line_no += 1;
        if buf.last() == Some(&b'\n') {
            buf.pop();
        }
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
        let line = std::str::from_utf8(&buf).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: line_no,
            message: format!("invalid UTF-8: {e}"),
        })?;
        let user = builder.add_user(UserId(line_no - 1))?;
        for token in line.split_ascii_whitespace() {
            builder.push_token(user, token);
        }
    }
    Ok(builder.finish())
}

/// FNV-1a; maps non-numeric CSV user ids onto `UserId`.
fn hash_user(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn read_user_item_csv<R: Read>(reader: R, header: bool, origin: &Path) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .from_reader(reader);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut builder = DatasetBuilder::default();
    let mut users: HashMap<String, usize> = HashMap::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        if !more {
            break;
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, found {}", record.len())));
        }
        let (user, item) = (record[0].trim(), record[1].trim());
        if user.is_empty() || item.is_empty() || item.contains(char::is_whitespace) {
            return Err(parse_err(line, "empty user id or item, or item contains whitespace".into()));
        }
        let idx = match users.get(user) {
            Some(&i) => i,
            None => {
                let id = user.parse::<u64>().unwrap_or_else(|_| hash_user(user));
                let i = builder
                    .add_user(UserId(id))
                    .map_err(|_| parse_err(line, format!("user id {user:?} collides with an earlier user")))?;
                users.insert(user.to_string(), i);
                i
            }
        };
        builder.push_token(idx, item);
    }
    Ok(builder.finish())
}

/// Writes `d` in [`DataFormat::UserLines`] layout.
///
/// User ids are not written; reloading numbers users by line.
pub fn write_user_lines<W: Write>(d: &Dataset, mut w: W) -> io::Result<()> {
    let vocab = d.vocab();
    for user in d.users() {
        let mut first = true;
        for id in &user.items {
            if !first {
                w.write_all(b" ")?;
            }
            first = false;
            write!(w, "{}", vocab.item(*id))?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Item;

    fn lines(s: &str) -> Result<Dataset> {
        read_dataset(s.as_bytes(), DataFormat::UserLines, Path::new("mem"))
    }

    fn csv(s: &str, header: bool) -> Result<Dataset> {
        read_dataset(s.as_bytes(), DataFormat::UserItemCsv { header }, Path::new("mem"))
    }

    fn user_items(d: &Dataset, i: usize) -> Vec<Item> {
        d.resolve(&d.users()[i].items)
    }

    #[test]
    fn user_lines_basic() {
        let d = lines("a b b\nc\n").unwrap();
        assert_eq!(d.num_users(), 2);
        assert_eq!(user_items(&d, 0), vec![Item::from("a"), Item::from("b"), Item::from("b")]);
        assert_eq!(user_items(&d, 1), vec![Item::from("c")]);
        assert_eq!(d.users()[1].user_id, UserId(1));
    }

    #[test]
    fn user_lines_empty_file_and_blank_lines() {
        assert_eq!(lines("").unwrap().num_users(), 0);
        let d = lines("x\n\ny\n").unwrap();
        assert_eq!(d.num_users(), 3);
        assert!(d.users()[1].items.is_empty());
    }

    #[test]
    fn user_lines_numeric_tokens() {
        let d = lines("10 2 007\n").unwrap();
        assert_eq!(user_items(&d, 0), vec![Item::Id(10), Item::Id(2), Item::from("007")]);
    }

    #[test]
    fn user_lines_bad_utf8_reports_line() {
        let mut bytes = b"ok\nfine\n".to_vec();
        bytes.extend_from_slice(&[0xff, 0xfe, b'\n']);
        let err = read_dataset(&bytes[..], DataFormat::UserLines, Path::new("f.txt")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn csv_grouping() {
        let d = csv("1,a\n2,c\n1,b\n", false).unwrap();
        assert_eq!(d.num_users(), 2);
        assert_eq!(d.users()[0].user_id, UserId(1));
        assert_eq!(user_items(&d, 0), vec![Item::from("a"), Item::from("b")]);
        assert_eq!(user_items(&d, 1), vec![Item::from("c")]);
    }

    #[test]
    fn csv_header_and_string_ids() {
        let d = csv("user,item\nalice,x\nbob,y\nalice,x\n", true).unwrap();
        assert_eq!(d.num_users(), 2);
        assert_eq!(user_items(&d, 0).len(), 2);
    }

    #[test]
    fn csv_malformed_row_reports_line() {
        let err = csv("1,a\n2\n", false).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e:?}"),
        }
        assert!(csv("1,a,b\n", false).is_err());
        assert!(csv("1,\n", false).is_err());
    }

    #[test]
    fn csv_empty_file() {
        assert_eq!(csv("", false).unwrap().num_users(), 0);
    }

    #[test]
    fn write_then_read_round_trips() {
        let d = lines("the cat 7\n\ncat dog\n").unwrap();
        let mut out = Vec::new();
        write_user_lines(&d, &mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), "the cat 7\n\ncat dog\n");
        let back = read_dataset(&out[..], DataFormat::UserLines, Path::new("mem")).unwrap();
        assert_eq!(back.users(), d.users());
        assert_eq!(back.vocab(), d.vocab());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_dataset(Path::new("/nonexistent/x.txt"), DataFormat::UserLines).unwrap_err();
        assert!(err.is_data_error());
    }
}
