//! Hexadecimal float rendering (`0x1.8p+1`), used so that coefficient files
//! round-trip bit for bit.

use crate::error::{Error, Result};

pub fn to_hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 && frac == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let mut digits = format!("{frac:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    if digits.is_empty() {
        format!("{sign}0x{lead}p{e:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{e:+}")
    }
}

/// Parses hex floats written by [`to_hex`], and plain decimal literals.
pub fn parse_f64(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Parse {
        line: 0,
        msg: format!("bad number `{s}`"),
    };
    let (neg, body) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) else {
        return s.parse::<f64>().map_err(|_| bad());
    };
    let (mant, exp) = hex.split_once(['p', 'P']).ok_or_else(bad)?;
    let mut e: i64 = exp.parse().map_err(|_| bad())?;
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    let fp = fp.trim_end_matches('0');
    let ip = ip.trim_start_matches('0');
    if ip.len() + fp.len() > 15 {
        return Err(bad());
    }
    let mut m: u64 = 0;
    for c in ip.chars().chain(fp.chars()) {
        m = (m << 4) | c.to_digit(16).ok_or_else(bad)? as u64;
    }
    e -= 4 * fp.len() as i64;
    let mut v = m as f64;
    // scale in steps that stay exact
    while e > 0 {
        let k = e.min(1000);
        v *= 2f64.powi(k as i32);
        e -= k;
    }
    while e < 0 {
        let k = (-e).min(1000);
        v /= 2f64.powi(k as i32);
        e += k;
    }
    Ok(if neg { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.0, -0.0, 1.0, 1.6, -0.1, 5e-324, f64::MAX, 3.5e-310, 123456.789] {
            let h = to_hex(x);
            assert_eq!(parse_f64(&h).unwrap().to_bits(), x.to_bits(), "{h}");
        }
        assert_eq!(to_hex(3.0), "0x1.8p+1");
        assert_eq!(parse_f64("0.25").unwrap(), 0.25);
    }
}
