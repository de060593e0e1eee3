//! Validates the special functions against high-precision reference values
//! (60-digit evaluations, committed as a fixture) at 1e-10 relative error.

use despeck_core::special::{digamma, ln_gamma, reg_upper_gamma, trigamma};

const FIXTURE: &str = include_str!("fixtures/special_reference.csv");
const TOLERANCE: f64 = 1e-10;

fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

#[test]
fn special_functions_match_reference_table() {
    let mut checked = 0usize;
    for (lineno, line) in FIXTURE.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 4, "malformed fixture line {}: {line}", lineno + 1);
        let kind = fields[0];
        let arg: f64 = fields[1].parse().expect("fixture arg");
        let want: f64 = fields[3].parse().expect("fixture value");
        let got = match kind {
            "ln_gamma" => ln_gamma(arg),
            "digamma" => digamma(arg),
            "trigamma" => trigamma(arg),
            "reg_upper_gamma" => {
                let arg2: f64 = fields[2].parse().expect("fixture arg2");
                reg_upper_gamma(arg, arg2)
            }
            other => panic!("unknown fixture kind {other}"),
        };
        assert!(
            rel_err(got, want) <= TOLERANCE,
            "{kind}({}{}) = {got:e}, reference {want:e}, rel err {:e}",
            fields[1],
            if fields[2].is_empty() { String::new() } else { format!(", {}", fields[2]) },
            rel_err(got, want),
        );
        checked += 1;
    }
    assert!(checked >= 80, "fixture unexpectedly small: {checked} rows");
}
