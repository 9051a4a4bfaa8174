//! Per-epoch CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Error;
use crate::sim::EpochReport;

pub const HEADER: &str = "epoch,zeta,cost_intra,cost_inter,cost_total,objective,traffic_generated_bits,\
traffic_served_bits,energy_consumed_j,mean_delay_s,wbans_alive,constraint_violations";

/// `printf("%.{sig}g")`: shortest of fixed or scientific notation with
/// `sig` significant digits and trailing zeros removed.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
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

pub fn write_csv<W: Write>(reports: &[EpochReport], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for r in reports {
        let reals = [
            r.zeta,
            r.cost_intra,
            r.cost_inter,
            r.cost_total,
            r.objective,
            r.traffic_generated,
            r.traffic_served,
            r.energy_consumed,
            r.mean_aggregation_delay,
        ];
        write!(w, "{}", r.epoch)?;
        for v in reals {
            write!(w, ",{}", format_sig(v, 9))?;
        }
        writeln!(w, ",{},{}", r.wbans_alive, r.constraint_violations)?;
    }
    w.flush()
}

pub fn emit_csv(reports: &[EpochReport], path: impl AsRef<Path>) -> Result<(), Error> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(reports, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (6e6, "6000000"),
            (123456789.0, "123456789"),
            (1234567891.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (1.0 / 3.0, "0.333333333"),
            (-2.5, "-2.5"),
            (999999999.6, "1e+09"),
            (0.006, "0.006"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig(x, 9), want, "{x}");
        }
    }

    #[test]
    fn header_only_and_one_row() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{HEADER}\n"));
        let mut buf = Vec::new();
        write_csv(&[EpochReport::default()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.ends_with("0,0,0,0,0,0,0,0,0,0,0,0\n"));
    }
}
