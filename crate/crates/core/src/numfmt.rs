//! Decimal rendering for prompt text.
//!
//! Prompts render every number as the shortest decimal string that parses
//! back to the same 64-bit float, always keeping a fractional part (`73.0`,
//! never `73`). Long tails like `3.5700000000000003` survive untouched. The
//! golden prompt fixtures are pinned to this convention, so any change here
//! is a breaking change to prompt output.

/// Render a 64-bit float for prompt text.
///
/// Non-finite inputs cannot occur in stored feature values (missingness is a
/// dedicated variant), but the function stays total: NaN renders `nan`,
/// infinities render `inf`/`-inf`.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_owned();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".to_owned() } else { "-inf".to_owned() };
    }
    let mut s = format!("{v}");
    if !s.contains(['.', 'e', 'E']) {
        s.push_str(".0");
    }
    s
}
