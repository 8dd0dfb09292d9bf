//! Fixed-precision number formatting for CLI and CSV output.

/// Formats `x` with `digits` significant digits in the style of C's `%g`:
/// fixed notation for exponents in `[-4, digits)`, scientific otherwise,
/// trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::format_sig;

    #[test]
    fn general_format() {
        assert_eq!(format_sig(2.0 / 3.0, 4), "0.6667");
        assert_eq!(format_sig(2.0 / 3.0, 12), "0.666666666667");
        assert_eq!(format_sig(0.25, 12), "0.25");
        assert_eq!(format_sig(7.0, 12), "7");
        assert_eq!(format_sig(3.0517578125e-5, 12), "3.0517578125e-5");
        assert_eq!(format_sig(9.99999999999999, 12), "10");
        assert_eq!(format_sig(-0.5, 3), "-0.5");
        assert_eq!(format_sig(0.0, 17), "0");
        assert_eq!(format_sig(1.5e20, 5), "1.5e20");
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 0.18181818181818182, 1e-300, 0.128 + 0.01] {
            let s = format_sig(x, 17);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }
}
