//! Special functions.

/// Spherical Bessel function j₀(z) = sin z / z, with j₀(0) = 1.
pub fn j0(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        let z2 = z * z;
        1.0 - z2 / 6.0 * (1.0 - z2 / 20.0)
    } else {
        z.sin() / z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn values() {
        assert_eq!(j0(0.0), 1.0);
        assert!(j0(PI).abs() < 1e-16);
        assert!((j0(PI / 2.0) - 2.0 / PI).abs() < 1e-16);
        // Branches agree at the switch point.
        let z = 1e-4;
        assert!((j0(z * (1.0 - 1e-12)) - z.sin() / z).abs() < 1e-15);
        assert_eq!(j0(-2.0), j0(2.0));
    }
}
