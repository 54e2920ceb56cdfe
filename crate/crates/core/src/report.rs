//! CSV and JSON report writers shared by the labs.
//!
//! Numbers are printed in shortest round-trip form and nothing time- or
//! host-dependent is ever written, so equal inputs give byte-identical files.

use serde::Serialize;

/// CSV with a header row, followed by optional `# key: json` footer lines.
pub fn csv_with_footer<R: Serialize, F: Serialize>(rows: &[R], footer: &[(&str, &F)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize to CSV");
    }
    let mut out = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV is UTF-8");
    for (key, value) in footer {
        out.push_str(&format!("# {key}: {}\n", serde_json::to_string(value).expect("footer serializes")));
    }
    out
}

pub fn csv<R: Serialize>(rows: &[R]) -> String {
    csv_with_footer::<R, ()>(rows, &[])
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
