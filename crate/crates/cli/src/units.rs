//! Number parsing for flags: plain SI values or lengths with a unit suffix.

/// Parses `3e-6`, `3um`, `3µm`, `300 nm`, `0.3mm` or `3m` into meters.
pub fn parse_length(s: &str) -> Result<f64, String> {
    let t = s.trim();
    // divide by an exact power of ten so 2.5um is the double nearest 2.5e-6
    let (num, per_meter) = [
        ("um", 1e6),
        ("µm", 1e6),
        ("nm", 1e9),
        ("mm", 1e3),
        ("m", 1.0),
    ]
    .iter()
    .find_map(|(suf, k)| t.strip_suffix(suf).map(|n| (n.trim_end(), *k)))
    .unwrap_or((t, 1.0));
    let v: f64 = num
        .parse()
        .map_err(|_| format!("`{s}` is not a length (try 3e-6 or 3um)"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v / per_meter)
}
