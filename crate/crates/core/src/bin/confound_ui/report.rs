//! Number formatting for the two output audiences: machine formats carry
//! 17 significant digits (lossless for f64), human tables four.

pub const SCHEMA_VERSION: &str = "1";

/// Full-precision decimal form for CSV cells.
pub fn machine(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn machine_opt(x: Option<f64>) -> String {
    x.map(machine).unwrap_or_default()
}

/// Four significant digits, plain notation near unit scale.
pub fn human(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-3..4).contains(&magnitude) {
        let decimals = (3 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.3e}")
    }
}

pub fn human_opt(x: Option<f64>) -> String {
    x.map(human).unwrap_or_else(|| "-".to_string())
}

pub fn human_interval(bounds: (f64, f64)) -> String {
    format!("[{}, {}]", human(bounds.0), human(bounds.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn machine_round_trips_exactly() {
        for &x in &[0.1, -3.0 / 7.0, 1e-300, 2.2785788653417582, f64::MAX] {
            assert_eq!(machine(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn human_keeps_four_significant_digits() {
        assert_eq!(human(2.2785788), "2.279");
        assert_eq!(human(0.012305), "0.01230");
        assert_eq!(human(-123.456), "-123.5");
        assert_eq!(human(12345.6), "1.235e4");
        assert_eq!(human(0.0), "0");
    }
}
