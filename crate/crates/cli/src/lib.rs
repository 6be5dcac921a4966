//! Support code for the `fragkit` binary.

pub mod validate;

/// Version plus source revision, embedded in every JSON report.
pub const BUILD_ID: &str = env!("FRAGKIT_BUILD_ID");

/// Shortest decimal that round-trips after rounding to 15 significant
/// digits, so that 2.0000000000000004 prints as `2`.
pub fn tidy(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let r: f64 = format!("{x:.14e}").parse().unwrap_or(x);
    format!("{r}")
}
