/// Change in `1 / (1 + d)` between the new and the old state, minus the
/// collision penalty when the run hit the corridor limit.
pub fn reward(d_new: f64, d_old: f64, collided: bool, penalty: f64) -> f64 {
    let r = 1.0 / (1.0 + d_new) - 1.0 / (1.0 + d_old);
    if collided {
        r - penalty
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_values() {
        assert_eq!(reward(2.0, 2.0, false, 1.0), 0.0);
        assert!((reward(0.0, 1.0, false, 1.0) - 0.5).abs() < 1e-12);
        assert!((reward(1.0, 0.0, true, 1.0) + 1.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn sign_and_bounds(a in 0.0..1e6f64, b in 0.0..1e6f64) {
            let r = reward(a, b, false, 1.0);
            prop_assert!(r > -1.0 && r < 1.0);
            prop_assert_eq!(r > 0.0, a < b);
            prop_assert_eq!(r < 0.0, a > b);
            prop_assert_eq!(reward(a, a, false, 1.0), 0.0);
        }
    }
}
