//! Unit conversions used by configuration.

pub const BITS_PER_MEGABIT: f64 = 1e6;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn megabits_to_bits(mb: f64) -> f64 {
    mb * BITS_PER_MEGABIT
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert!((dbm_to_watts(0.0) - 1e-3).abs() < 1e-18);
        assert!((dbm_to_watts(-100.0) - 1e-13).abs() < 1e-26);
        assert!((watts_to_dbm(dbm_to_watts(0.2)) - 0.2).abs() < 1e-12);
        assert!((linear_to_db(db_to_linear(-81.0)) + 81.0).abs() < 1e-12);
        assert_eq!(megabits_to_bits(1.0), 1e6);
    }
}
