use frontspeed::numerics::fmt12;
use proptest::prelude::*;

proptest! {
    #[test]
    fn fmt12_keeps_twelve_digits(m in 1.0f64..10.0, e in -30i32..30, neg in any::<bool>()) {
        let v = if neg { -m } else { m } * 10f64.powi(e);
        let s = fmt12(v);
        let back: f64 = s.parse().unwrap();
        prop_assert!(((back - v) / v).abs() <= 5e-12, "{} -> {}", v, s);
        let digits = s.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
        prop_assert!(digits.trim_start_matches('0').trim_end_matches('0').len() <= 12, "{}", s);
    }
}
