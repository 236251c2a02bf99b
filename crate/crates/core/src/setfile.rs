//! Plain-text set files: one integer or `p/q` per line, `#` comments and
//! blank lines ignored. Output is sorted canonical form.

use std::path::Path;

use crate::error::{Error, Result};
use crate::sets::{parse_rational, FiniteRealSet};

pub fn parse_set(text: &str) -> Result<FiniteRealSet> {
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = parse_rational(line)
            .ok_or_else(|| Error::Input { line: i + 1, message: format!("not an integer or p/q: `{line}`") })?;
        values.push(v);
    }
    Ok(FiniteRealSet::new(values))
}

pub fn format_set(set: &FiniteRealSet) -> String {
    let mut out = String::new();
    for x in set {
        out.push_str(&x.to_string());
        out.push('\n');
    }
    out
}

pub fn read_set_file(path: &Path) -> Result<FiniteRealSet> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input { line: 0, message: format!("{}: {e}", path.display()) })?;
    parse_set(&text)
}

pub fn write_set_file(path: &Path, set: &FiniteRealSet) -> Result<()> {
    std::fs::write(path, format_set(set))
        .map_err(|e| Error::Input { line: 0, message: format!("{}: {e}", path.display()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::rat;

    #[test]
    fn parsing() {
        assert_eq!(parse_set("1\n2\n3\n").unwrap(), FiniteRealSet::from_integers([1, 2, 3]));
        assert_eq!(parse_set("1/2\n2/4\n").unwrap(), FiniteRealSet::new([rat(1, 2)]));
        assert_eq!(parse_set("# header\n\n  -3 \n3\n-3\n").unwrap(), FiniteRealSet::from_integers([-3, 3]));
        assert!(matches!(parse_set("abc"), Err(Error::Input { line: 1, .. })));
        assert!(matches!(parse_set("1\n\n1/0\n"), Err(Error::Input { line: 3, .. })));
        assert!(matches!(parse_set("1/-2"), Err(Error::Input { line: 1, .. })));
    }

    #[test]
    fn round_trip() {
        let s = FiniteRealSet::new([rat(-7, 3), rat(1, 2), rat(5, 1)]);
        assert_eq!(format_set(&s), "-7/3\n1/2\n5\n");
        assert_eq!(parse_set(&format_set(&s)).unwrap(), s);
    }
}
