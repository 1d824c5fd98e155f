//! Composition-only descriptors.

use super::DescriptorError;
use crate::molgraph::ElementCounts;

/// Oxygen balance per 100 atoms: `100 / n_atoms * (n_O - 2 n_C - n_H / 2)`.
/// Halogens only enter through `n_atoms`.
pub fn oxygen_balance(counts: &ElementCounts) -> f64 {
    if counts.n_atoms == 0 {
        return 0.0;
    }
    let (c, h, o) = (f64::from(counts.n_c), f64::from(counts.n_h), f64::from(counts.n_o));
    100.0 / f64::from(counts.n_atoms) * (o - 2.0 * c - h / 2.0)
}

/// Gas-product weight ratio under the H2O–CO2 decomposition assumption,
/// `(56c + 88d - 8b) / (48a + 4b + 56c + 64d)` for a C_aH_bN_cO_d molecule.
/// Negative values are returned as is.
pub fn gas_product_ratio(counts: &ElementCounts) -> Result<f64, DescriptorError> {
    let a = f64::from(counts.n_c);
    let b = f64::from(counts.n_h);
    let c = f64::from(counts.n_n);
    let d = f64::from(counts.n_o);
    let denominator = 48.0 * a + 4.0 * b + 56.0 * c + 64.0 * d;
    if denominator == 0.0 {
        return Err(DescriptorError::ZeroDenominator);
    }
    Ok((56.0 * c + 88.0 * d - 8.0 * b) / denominator)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomCountFeatures {
    pub nitrogen_carbon_ratio: f64,
    pub n_h: f64,
    pub n_f: f64,
}

/// `n_N / max(n_C, 1)` keeps carbon-free molecules finite.
pub fn atom_count_features(counts: &ElementCounts) -> AtomCountFeatures {
    AtomCountFeatures {
        nitrogen_carbon_ratio: f64::from(counts.n_n) / f64::from(counts.n_c.max(1)),
        n_h: f64::from(counts.n_h),
        n_f: f64::from(counts.n_f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(c: u32, h: u32, n: u32, o: u32) -> ElementCounts {
        ElementCounts {
            n_c: c,
            n_h: h,
            n_n: n,
            n_o: o,
            n_cl: 0,
            n_f: 0,
            n_atoms: c + h + n + o,
        }
    }

    #[test]
    fn oxygen_balance_values() {
        assert!((oxygen_balance(&counts(7, 5, 3, 6)) - -50.0).abs() < 1e-12);
        assert!((oxygen_balance(&counts(3, 5, 3, 9)) - 2.5).abs() < 1e-12);
        assert_eq!(oxygen_balance(&counts(0, 0, 2, 0)), 0.0);
    }

    #[test]
    fn gas_ratio_values() {
        let rdx = gas_product_ratio(&counts(3, 6, 6, 6)).unwrap();
        assert!((rdx - 816.0 / 888.0).abs() < 1e-15);
        let tnt = gas_product_ratio(&counts(7, 5, 3, 6)).unwrap();
        assert!((tnt - 656.0 / 908.0).abs() < 1e-15);
        let benzene = gas_product_ratio(&counts(6, 6, 0, 0)).unwrap();
        assert!((benzene - -48.0 / 312.0).abs() < 1e-15);
        let chlorine = ElementCounts {
            n_cl: 2,
            n_atoms: 2,
            ..Default::default()
        };
        assert_eq!(gas_product_ratio(&chlorine), Err(DescriptorError::ZeroDenominator));
    }

    #[test]
    fn ratio_uses_unit_floor_for_carbon() {
        let rdx = atom_count_features(&counts(3, 6, 6, 6));
        assert_eq!(rdx.nitrogen_carbon_ratio, 2.0);
        assert_eq!((rdx.n_h, rdx.n_f), (6.0, 0.0));
        let hydrazine = atom_count_features(&counts(0, 4, 2, 0));
        assert_eq!(hydrazine.nitrogen_carbon_ratio, 2.0);
        let methane = atom_count_features(&counts(1, 4, 0, 0));
        assert_eq!((methane.nitrogen_carbon_ratio, methane.n_h), (0.0, 4.0));
    }
}
