//! Text and HTML renderings of a [`QueryResult`].
//!
//! Structured form:
//!
//! ```text
//! dest 2 0.000013 4 false
//! a
//! b
//! ```
//!
//! The header is `kind count elapsed-seconds graph-version cached`, followed by
//! one answer per line. A capped answer ends with `# truncated <total>`.

use std::fmt::Write as _;

use super::QueryResult;

pub(super) fn structured(res: &QueryResult) -> String {
    let mut out = String::with_capacity(32 + res.answers.iter().map(|a| a.len() + 1).sum::<usize>());
    let _ = writeln!(
        out,
        "{} {} {:.6} {} {}",
        res.kind,
        res.count,
        res.elapsed.as_secs_f64(),
        res.graph_version,
        res.cached
    );
    for a in &res.answers {
        out.push_str(a);
        out.push('\n');
    }
    if let Some(total) = res.truncated_from {
        let _ = writeln!(out, "# truncated {total}");
    }
    out
}

pub(super) fn html(res: &QueryResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<h3>{}</h3>", escape(&res.request.describe()));
    out.push_str("<ul>\n");
    for a in &res.answers {
        let _ = writeln!(out, "<li>{}</li>", escape(a));
    }
    out.push_str("</ul>\n");
    if let Some(total) = res.truncated_from {
        let _ = writeln!(
            out,
            "<p class=\"truncated\">truncated: showing {} of {total}</p>",
            res.count
        );
    }
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '&' => out.push_str("&amp;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

/// A structured response read back from text.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredResponse {
    pub kind: String,
    pub count: usize,
    pub elapsed: f64,
    pub version: u64,
    pub cached: bool,
    pub answers: Vec<String>,
    pub truncated_from: Option<usize>,
}

pub fn parse_structured(text: &str) -> Option<StructuredResponse> {
    let mut lines = text.lines();
    let mut header = lines.next()?.split(' ');
    let kind = header.next()?.to_owned();
    let count = header.next()?.parse().ok()?;
    let elapsed = header.next()?.parse().ok()?;
    let version = header.next()?.parse().ok()?;
    let cached = header.next()?.parse().ok()?;
    if header.next().is_some() {
        return None;
    }
    let mut answers = Vec::with_capacity(count);
    let mut truncated_from = None;
    for line in lines {
        match line.strip_prefix("# truncated ") {
            Some(total) => truncated_from = Some(total.parse().ok()?),
            None => answers.push(line.to_owned()),
        }
    }
    (answers.len() == count).then_some(StructuredResponse {
        kind,
        count,
        elapsed,
        version,
        cached,
        answers,
        truncated_from,
    })
}

#[cfg(test)]
mod tests {
    use std::time::Duration;

    use super::*;
    use crate::query::{QueryKind, QueryRequest, Render};

    fn result(answers: &[&str]) -> QueryResult {
        QueryResult {
            kind: QueryKind::Dest,
            answers: answers.iter().map(|s| (*s).to_owned()).collect(),
            count: answers.len(),
            elapsed: Duration::from_micros(13),
            graph_version: 4,
            cached: false,
            truncated_from: None,
            request: QueryRequest::dest("c").with_render(Render::Html),
        }
    }

    #[test]
    fn structured_layout() {
        let text = structured(&result(&["a", "b"]));
        assert_eq!(text, "dest 2 0.000013 4 false\na\nb\n");
        let parsed = parse_structured(&text).unwrap();
        assert_eq!(parsed.answers, ["a", "b"]);
        assert_eq!(parsed.version, 4);
        assert!(!parsed.cached);
    }

    #[test]
    fn empty_answer() {
        let text = structured(&result(&[]));
        assert_eq!(parse_structured(&text).unwrap().count, 0);
    }

    #[test]
    fn truncation_marker() {
        let mut res = result(&["a"]);
        res.truncated_from = Some(9);
        let parsed = parse_structured(&structured(&res)).unwrap();
        assert_eq!(parsed.truncated_from, Some(9));
        assert_eq!(parsed.answers, ["a"]);
        assert!(html(&res).contains("showing 1 of 9"));
    }

    #[test]
    fn html_layout() {
        let text = html(&result(&["a", "b"]));
        assert_eq!(text, "<h3>dest c</h3>\n<ul>\n<li>a</li>\n<li>b</li>\n</ul>\n");
        assert_eq!(escape("<a&\">"), "&lt;a&amp;&quot;&gt;");
    }
}
