//! Streaming parser for Deb822 `Packages` indices and Debian relation fields.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead};

/// Relation fields the parser keeps. Anything else only bumps
/// [`PackageRecord::raw_field_count`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum RelationKind {
    Depends,
    PreDepends,
    Recommends,
    Suggests,
    Conflicts,
}

impl RelationKind {
    pub fn field_name(self) -> &'static str {
        match self {
            RelationKind::Depends => "Depends",
            RelationKind::PreDepends => "Pre-Depends",
            RelationKind::Recommends => "Recommends",
            RelationKind::Suggests => "Suggests",
            RelationKind::Conflicts => "Conflicts",
        }
    }

    fn from_field(lower: &str) -> Option<Self> {
        Some(match lower {
            "depends" => RelationKind::Depends,
            "pre-depends" => RelationKind::PreDepends,
            "recommends" => RelationKind::Recommends,
            "suggests" => RelationKind::Suggests,
            "conflicts" => RelationKind::Conflicts,
            _ => return None,
        })
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.field_name())
    }
}

/// One alternative inside a relation clause: `name (constraint) [archs]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    /// Text inside the parentheses, trimmed, e.g. `>= 2.7`.
    pub version: Option<String>,
    pub arch: Option<Vec<String>>,
}

impl Relation {
    pub fn named(name: &str) -> Self {
        Relation {
            name: name.to_string(),
            version: None,
            arch: None,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if let Some(v) = &self.version {
            write!(f, " ({v})")?;
        }
        if let Some(archs) = &self.arch {
            write!(f, " [{}]", archs.join(" "))?;
        }
        Ok(())
    }
}

/// A single requirement; any one of the alternatives satisfies it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationClause {
    pub alternatives: Vec<Relation>,
}

impl fmt::Display for RelationClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, alt) in self.alternatives.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{alt}")?;
        }
        Ok(())
    }
}

/// Canonical text form of a whole relation field.
pub fn format_relation_field(clauses: &[RelationClause]) -> String {
    clauses
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed relation {clause:?}: {reason}")]
pub struct RelationError {
    pub clause: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PackageRecord {
    pub name: String,
    pub depends: Vec<RelationClause>,
    pub pre_depends: Vec<RelationClause>,
    pub recommends: Vec<RelationClause>,
    pub suggests: Vec<RelationClause>,
    pub conflicts: Vec<RelationClause>,
    pub provides: Vec<String>,
    /// Number of fields in the stanza, recognised or not.
    pub raw_field_count: usize,
}

impl PackageRecord {
    pub fn new(name: &str) -> Self {
        PackageRecord {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn relations(&self, kind: RelationKind) -> &[RelationClause] {
        match kind {
            RelationKind::Depends => &self.depends,
            RelationKind::PreDepends => &self.pre_depends,
            RelationKind::Recommends => &self.recommends,
            RelationKind::Suggests => &self.suggests,
            RelationKind::Conflicts => &self.conflicts,
        }
    }

    fn relations_mut(&mut self, kind: RelationKind) -> &mut Vec<RelationClause> {
        match kind {
            RelationKind::Depends => &mut self.depends,
            RelationKind::PreDepends => &mut self.pre_depends,
            RelationKind::Recommends => &mut self.recommends,
            RelationKind::Suggests => &mut self.suggests,
            RelationKind::Conflicts => &mut self.conflicts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    /// 1-based stanza ordinal.
    MissingPackage {
        stanza: usize,
    },
    DuplicatePackage {
        name: String,
    },
    MalformedRelation {
        package: String,
        field: String,
        error: RelationError,
    },
    InvalidName {
        package: String,
        field: String,
        name: String,
    },
    ArchSuffixStripped {
        package: String,
        name: String,
    },
    InvalidUtf8 {
        line: usize,
    },
    MalformedLine {
        line: usize,
    },
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseWarning::MissingPackage { stanza } => {
                write!(f, "stanza {stanza} has no Package field; skipped")
            }
            ParseWarning::DuplicatePackage { name } => {
                write!(f, "duplicate package {name}; keeping the last stanza")
            }
            ParseWarning::MalformedRelation {
                package,
                field,
                error,
            } => write!(f, "{package}: {field}: {error}; clause dropped"),
            ParseWarning::InvalidName {
                package,
                field,
                name,
            } => write!(f, "{package}: {field}: invalid package name {name:?}"),
            ParseWarning::ArchSuffixStripped { package, name } => {
                write!(f, "{package}: architecture suffix stripped from {name:?}")
            }
            ParseWarning::InvalidUtf8 { line } => {
                write!(f, "line {line}: invalid UTF-8 replaced")
            }
            ParseWarning::MalformedLine { line } => {
                write!(
                    f,
                    "line {line}: neither a field nor a continuation; ignored"
                )
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutput {
    pub records: Vec<PackageRecord>,
    pub warnings: Vec<ParseWarning>,
    /// Stanzas seen, including those skipped for lacking a `Package` field.
    pub stanza_count: usize,
}

/// Debian package name charset, `[a-z0-9][a-z0-9+.-]*`, on already
/// lowercased input.
pub fn is_valid_package_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() || c.is_ascii_digit() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, '+' | '.' | '-'))
}

/// Splits on `sep` outside of `()`, `[]` and `<>` groups.
fn split_top_level(value: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    // Version operators (`>=`, `<<`) live inside parentheses, so angle
    // brackets only open a group outside of one.
    let mut parens = 0i32;
    let mut brackets = 0i32;
    let mut angles = 0i32;
    let mut start = 0;
    for (i, c) in value.char_indices() {
        match c {
            '(' => parens += 1,
            ')' => parens -= 1,
            '[' if parens == 0 => brackets += 1,
            ']' if parens == 0 => brackets -= 1,
            '<' if parens == 0 && brackets == 0 => angles += 1,
            '>' if parens == 0 && brackets == 0 => angles -= 1,
            c if c == sep && parens == 0 && brackets == 0 && angles == 0 => {
                parts.push(&value[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&value[start..]);
    parts
}

struct ParsedClause {
    clause: RelationClause,
    stripped: Vec<String>,
}

fn parse_alternative(
    text: &str,
    clause: &str,
) -> Result<(Relation, Option<String>), RelationError> {
    let err = |reason: &str| RelationError {
        clause: clause.trim().to_string(),
        reason: reason.to_string(),
    };
    let text = text.trim();
    let name_end = text
        .find(|c: char| c.is_whitespace() || matches!(c, '(' | '[' | '<' | ')' | ']' | '>'))
        .unwrap_or(text.len());
    let raw_name = &text[..name_end];
    if raw_name.is_empty() {
        return Err(err("missing package name"));
    }
    let mut name = raw_name.to_ascii_lowercase();
    let mut stripped = None;
    if let Some(colon) = name.find(':') {
        stripped = Some(name.clone());
        name.truncate(colon);
    }
    if !is_valid_package_name(&name) {
        return Err(err(&format!("invalid package name {raw_name:?}")));
    }

    let mut rest = text[name_end..].trim_start();
    let mut version = None;
    let mut arch = None;
    if let Some(after) = rest.strip_prefix('(') {
        let close = after
            .find(')')
            .ok_or_else(|| err("unbalanced parenthesis"))?;
        let inner = after[..close].trim();
        if inner.contains('(') {
            return Err(err("nested parenthesis"));
        }
        if inner.is_empty() {
            return Err(err("empty version constraint"));
        }
        version = Some(inner.split_whitespace().collect::<Vec<_>>().join(" "));
        rest = after[close + 1..].trim_start();
    }
    if let Some(after) = rest.strip_prefix('[') {
        let close = after.find(']').ok_or_else(|| err("unbalanced bracket"))?;
        let archs: Vec<String> = after[..close]
            .split_whitespace()
            .map(str::to_string)
            .collect();
        if archs.is_empty() {
            return Err(err("empty architecture qualifier"));
        }
        arch = Some(archs);
        rest = after[close + 1..].trim_start();
    }
    // Build-profile restrictions never affect binary indices; accepted and dropped.
    while let Some(after) = rest.strip_prefix('<') {
        let close = after
            .find('>')
            .ok_or_else(|| err("unbalanced angle bracket"))?;
        rest = after[close + 1..].trim_start();
    }
    if !rest.is_empty() {
        let reason = if rest.starts_with(')') {
            "unbalanced parenthesis"
        } else if rest.starts_with(']') {
            "unbalanced bracket"
        } else {
            "unexpected trailing text"
        };
        return Err(err(reason));
    }
    Ok((
        Relation {
            name,
            version,
            arch,
        },
        stripped,
    ))
}

fn parse_clause(text: &str) -> Result<ParsedClause, RelationError> {
    if text.trim().is_empty() {
        return Err(RelationError {
            clause: text.to_string(),
            reason: "empty clause".to_string(),
        });
    }
    let mut alternatives = Vec::new();
    let mut stripped = Vec::new();
    for alt in split_top_level(text, '|') {
        let (relation, s) = parse_alternative(alt, text)?;
        alternatives.push(relation);
        stripped.extend(s);
    }
    Ok(ParsedClause {
        clause: RelationClause { alternatives },
        stripped,
    })
}

/// Parses a relation field value such as `libc6 (>= 2.7), bar | baz`.
///
/// Strict: any malformed clause fails the whole field. Architecture
/// suffixes (`foo:any`) are stripped silently here; [`parse_packages`]
/// reports them.
pub fn parse_relation_field(value: &str) -> Result<Vec<RelationClause>, RelationError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    split_top_level(value, ',')
        .into_iter()
        .map(|c| parse_clause(c).map(|p| p.clause))
        .collect()
}

#[derive(Default)]
struct StanzaBuilder {
    fields: Vec<(String, String)>,
}

struct Parser {
    out: ParseOutput,
    index_of: HashMap<String, usize>,
}

impl Parser {
    fn finish_stanza(&mut self, stanza: &mut StanzaBuilder) {
        if stanza.fields.is_empty() {
            return;
        }
        self.out.stanza_count += 1;
        let fields = std::mem::take(&mut stanza.fields);
        let Some(name) = fields
            .iter()
            .find(|(k, _)| k == "package")
            .map(|(_, v)| v.trim().to_ascii_lowercase())
            .filter(|n| !n.is_empty())
        else {
            self.out.warnings.push(ParseWarning::MissingPackage {
                stanza: self.out.stanza_count,
            });
            return;
        };

        let mut record = PackageRecord::new(&name);
        record.raw_field_count = fields.len();
        for (key, value) in &fields {
            if key == "provides" {
                self.parse_provides(&mut record, value);
            } else if let Some(kind) = RelationKind::from_field(key) {
                self.parse_relations(&mut record, kind, value);
            }
        }

        if let Some(&idx) = self.index_of.get(&name) {
            self.out
                .warnings
                .push(ParseWarning::DuplicatePackage { name: name.clone() });
            self.out.records[idx] = record;
        } else {
            self.index_of.insert(name, self.out.records.len());
            self.out.records.push(record);
        }
    }

    fn parse_relations(&mut self, record: &mut PackageRecord, kind: RelationKind, value: &str) {
        if value.trim().is_empty() {
            return;
        }
        for text in split_top_level(value, ',') {
            match parse_clause(text) {
                Ok(parsed) => {
                    for name in parsed.stripped {
                        self.out.warnings.push(ParseWarning::ArchSuffixStripped {
                            package: record.name.clone(),
                            name,
                        });
                    }
                    record.relations_mut(kind).push(parsed.clause);
                }
                Err(error) => self.out.warnings.push(ParseWarning::MalformedRelation {
                    package: record.name.clone(),
                    field: kind.field_name().to_string(),
                    error,
                }),
            }
        }
    }

    fn parse_provides(&mut self, record: &mut PackageRecord, value: &str) {
        for text in split_top_level(value, ',') {
            if text.trim().is_empty() {
                continue;
            }
            match parse_clause(text) {
                Ok(parsed) if parsed.clause.alternatives.len() == 1 => {
                    let name = parsed.clause.alternatives[0].name.clone();
                    if !record.provides.contains(&name) {
                        record.provides.push(name);
                    }
                }
                _ => self.out.warnings.push(ParseWarning::InvalidName {
                    package: record.name.clone(),
                    field: "Provides".to_string(),
                    name: text.trim().to_string(),
                }),
            }
        }
    }
}

/// Parses a Deb822 `Packages` stream, one stanza at a time.
///
/// Never fails on content: problems become [`ParseWarning`]s. Only I/O
/// errors from the underlying reader (including gzip decode errors from
/// [`crate::ingestion::IndexStream`]) are returned.
pub fn parse_packages<R: BufRead>(mut reader: R) -> io::Result<ParseOutput> {
    let mut parser = Parser {
        out: ParseOutput::default(),
        index_of: HashMap::new(),
    };
    let mut stanza = StanzaBuilder::default();
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let line = match std::str::from_utf8(&buf) {
            Ok(s) => std::borrow::Cow::Borrowed(s),
            Err(_) => {
                parser
                    .out
                    .warnings
                    .push(ParseWarning::InvalidUtf8 { line: line_no });
                String::from_utf8_lossy(&buf)
            }
        };
        let line = line.trim_end_matches(['\n', '\r']);

        if line.trim().is_empty() {
            parser.finish_stanza(&mut stanza);
            continue;
        }
        if line.starts_with([' ', '\t']) {
            match stanza.fields.last_mut() {
                Some((_, value)) => {
                    let cont = line.trim();
                    if !cont.is_empty() {
                        if !value.is_empty() {
                            value.push(' ');
                        }
                        value.push_str(cont);
                    }
                }
                None => parser
                    .out
                    .warnings
                    .push(ParseWarning::MalformedLine { line: line_no }),
            }
            continue;
        }
        match line.split_once(':') {
            Some((key, value)) if !key.trim().is_empty() => {
                stanza
                    .fields
                    .push((key.trim().to_ascii_lowercase(), value.trim().to_string()));
            }
            _ => parser
                .out
                .warnings
                .push(ParseWarning::MalformedLine { line: line_no }),
        }
    }
    parser.finish_stanza(&mut stanza);
    Ok(parser.out)
}

pub fn parse_packages_str(text: &str) -> ParseOutput {
    parse_packages(text.as_bytes()).expect("reading from memory cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(name: &str, version: Option<&str>) -> Relation {
        Relation {
            name: name.into(),
            version: version.map(Into::into),
            arch: None,
        }
    }

    #[test]
    fn depends_grammar() {
        let out = parse_packages_str("Package: foo\nDepends: libc6 (>= 2.7), bar | baz\n\n");
        assert!(out.warnings.is_empty());
        assert_eq!(out.records.len(), 1);
        let r = &out.records[0];
        assert_eq!(r.name, "foo");
        assert_eq!(
            r.depends,
            vec![
                RelationClause {
                    alternatives: vec![rel("libc6", Some(">= 2.7"))]
                },
                RelationClause {
                    alternatives: vec![rel("bar", None), rel("baz", None)]
                },
            ]
        );
        assert_eq!(r.raw_field_count, 2);
    }

    #[test]
    fn provides_passthrough() {
        let out = parse_packages_str(
            "Package: a\nProvides: mail-transport-agent\n\nPackage: b\nDepends: mail-transport-agent\n\n",
        );
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[0].provides, vec!["mail-transport-agent"]);
        assert_eq!(
            out.records[1].depends[0].alternatives[0].name,
            "mail-transport-agent"
        );
    }

    #[test]
    fn empty_input() {
        let out = parse_packages_str("");
        assert!(out.records.is_empty());
        assert!(out.warnings.is_empty());
        assert_eq!(out.stanza_count, 0);
    }

    #[test]
    fn relation_field_examples() {
        assert_eq!(
            parse_relation_field("libc6 (>= 2.7), bar | baz").unwrap(),
            vec![
                RelationClause {
                    alternatives: vec![rel("libc6", Some(">= 2.7"))]
                },
                RelationClause {
                    alternatives: vec![rel("bar", None), rel("baz", None)]
                },
            ]
        );
        assert_eq!(
            parse_relation_field("x [i386 amd64]").unwrap(),
            vec![RelationClause {
                alternatives: vec![Relation {
                    name: "x".into(),
                    version: None,
                    arch: Some(vec!["i386".into(), "amd64".into()]),
                }]
            }]
        );
        let err = parse_relation_field("a (").unwrap_err();
        assert_eq!(err.clause, "a (");
        assert!(err.reason.contains("parenthesis"));
    }

    #[test]
    fn relation_field_errors() {
        for bad in ["a )", "a [i386", "a ()", "(>= 1)", "a b", "a, , b", "A_b"] {
            assert!(parse_relation_field(bad).is_err(), "{bad:?} should fail");
        }
        assert_eq!(parse_relation_field("").unwrap(), vec![]);
        assert_eq!(
            parse_relation_field("Perl-Base").unwrap()[0].alternatives[0].name,
            "perl-base"
        );
    }

    #[test]
    fn continuation_and_case_insensitive_fields() {
        let text = "package: foo\nDEPENDS: a,\n b (>= 1),\n\tc\nX-Custom: 1\n\n";
        let out = parse_packages_str(text);
        let r = &out.records[0];
        assert_eq!(r.name, "foo");
        let names: Vec<_> = r
            .depends
            .iter()
            .map(|c| c.alternatives[0].name.as_str())
            .collect();
        assert_eq!(names, ["a", "b", "c"]);
        assert_eq!(r.raw_field_count, 3);
    }

    #[test]
    fn missing_package_is_skipped_with_warning() {
        let out = parse_packages_str("Version: 1\n\nPackage: b\n");
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.stanza_count, 2);
        assert_eq!(
            out.warnings,
            vec![ParseWarning::MissingPackage { stanza: 1 }]
        );
    }

    #[test]
    fn duplicate_keeps_last() {
        let out = parse_packages_str(
            "Package: a\nDepends: x\n\nPackage: b\n\nPackage: a\nDepends: y\n\n",
        );
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[0].depends[0].alternatives[0].name, "y");
        assert_eq!(
            out.warnings,
            vec![ParseWarning::DuplicatePackage { name: "a".into() }]
        );
    }

    #[test]
    fn malformed_clause_dropped_rest_kept() {
        let out = parse_packages_str("Package: a\nDepends: good, bad (, other\nConflicts: z\n");
        let r = &out.records[0];
        // "bad (, other" has no closing paren so it swallows the rest of the field.
        assert_eq!(r.depends.len(), 1);
        assert_eq!(r.conflicts.len(), 1);
        assert!(matches!(
            out.warnings[0],
            ParseWarning::MalformedRelation { .. }
        ));
    }

    #[test]
    fn arch_suffix_stripped() {
        let out = parse_packages_str("Package: a\nDepends: python:any (>= 2.5)\n");
        assert_eq!(out.records[0].depends[0].alternatives[0].name, "python");
        assert_eq!(
            out.warnings,
            vec![ParseWarning::ArchSuffixStripped {
                package: "a".into(),
                name: "python:any".into()
            }]
        );
    }

    #[test]
    fn multiple_blank_lines_and_crlf() {
        let out = parse_packages_str("Package: a\r\n\r\n\r\n\nPackage: b\r\nDepends: a\r\n");
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[1].depends[0].alternatives[0].name, "a");
    }

    fn name_strategy() -> impl Strategy<Value = String> {
        "[a-z0-9][a-z0-9+.-]{0,12}"
    }

    fn relation_strategy() -> impl Strategy<Value = Relation> {
        (
            name_strategy(),
            proptest::option::of(("(<<|<=|=|>=|>>)", "[0-9][0-9a-z.:~+-]{0,8}")),
            proptest::option::of(proptest::collection::vec("!?[a-z0-9-]{1,8}", 1..4)),
        )
            .prop_map(|(name, version, arch)| Relation {
                name,
                version: version.map(|(op, v)| format!("{op} {v}")),
                arch,
            })
    }

    proptest! {
        #[test]
        fn relation_field_round_trip(
            clauses in proptest::collection::vec(
                proptest::collection::vec(relation_strategy(), 1..4)
                    .prop_map(|alternatives| RelationClause { alternatives }),
                1..6,
            )
        ) {
            let text = format_relation_field(&clauses);
            let parsed = parse_relation_field(&text).unwrap();
            prop_assert_eq!(&parsed, &clauses);
            prop_assert_eq!(format_relation_field(&parsed), text);
        }
    }
}
