//! Value grammars for command-line arguments.

use carnot::GradedAlgebra;

/// `lo:hi:n`: `n` geometrically spaced values from `lo` to `hi` inclusive.
/// `lo > hi` gives a decreasing grid. A single number is a one-point grid.
pub fn grid(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad number '{s}' in grid '{text}'"));
    match parts.as_slice() {
        [one] => {
            let v = num(one)?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("grid value must be positive, got {v}"));
            }
            Ok(vec![v])
        }
        [lo, hi, n] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let n: usize = n.trim().parse().map_err(|_| format!("bad count '{n}' in grid '{text}'"))?;
            if !(lo > 0.0 && hi > 0.0) || !lo.is_finite() || !hi.is_finite() {
                return Err(format!("grid bounds must be positive, got {lo}:{hi}"));
            }
            if n == 0 || (n == 1 && lo != hi) {
                return Err(format!("grid '{text}' needs at least 2 points"));
            }
            if n == 1 {
                return Ok(vec![lo]);
            }
            let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
            let mut out: Vec<f64> = (0..n).map(|k| lo * ratio.powi(k as i32)).collect();
            out[n - 1] = hi;
            Ok(out)
        }
        _ => Err(format!("grid '{text}' is not of the form lo:hi:n")),
    }
}

/// Comma-separated list of reals.
pub fn list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad number '{s}' in list '{text}'")))
        .collect()
}

/// An algebra vector: raw coefficients `1,0,-0.5` or a label expression such
/// as `X`, `-Y`, `2X+0.5Z`, `X - 3*Y`. Coefficients in label expressions
/// are plain decimals.
pub fn vector(text: &str, alg: &GradedAlgebra) -> Result<Vec<f64>, String> {
    let n = alg.dim();
    if let Ok(v) = list(text) {
        if v.len() != n {
            return Err(format!("vector '{text}' has {} entries, expected {n}", v.len()));
        }
        return Ok(v);
    }
    let mut out = vec![0.0; n];
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err("empty vector".into());
    }
    // Split into signed terms.
    let mut terms = Vec::new();
    let mut cur = String::new();
    for (k, ch) in compact.char_indices() {
        if (ch == '+' || ch == '-') && k > 0 {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    terms.push(cur);
    for term in terms {
        let (sign, body) = match term.strip_prefix('-') {
            Some(rest) => (-1.0, rest),
            None => (1.0, term.strip_prefix('+').unwrap_or(&term)),
        };
        let body = body.replace('*', "");
        let split = body.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(body.len());
        let (coef, label) = body.split_at(split);
        let coef = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().map_err(|_| format!("bad coefficient '{coef}' in '{text}'"))? };
        let idx = alg
            .label_index(label)
            .ok_or_else(|| format!("unknown basis label '{label}' (labels: {})", alg.labels().join(", ")))?;
        out[idx] += sign * coef;
    }
    Ok(out)
}
