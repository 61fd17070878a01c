//! Link budget: free-space loss, S2S rate, Shannon rate for ground links,
//! and per-slot capacity. Rates are returned in Mbit/s.

use super::{GroundParams, LinkBudgetParams, S2sParams};
use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 2.998e8;
pub const BOLTZMANN: f64 = 1.38e-23;
pub const DEFAULT_EBN0: f64 = 10.0;
pub const DEFAULT_NOISE_TEMP_K: f64 = 1000.0;

const BITS_PER_MBIT: f64 = 1.0e6;

/// Direction of a user/satellite link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundDirection {
    U2s,
    S2u,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {value}")))
    }
}

/// `(c / (4 pi d nu))^2`, a gain factor below one for any realistic distance.
pub fn free_space_loss(distance_m: f64, frequency_hz: f64) -> Result<f64> {
    let d = positive("distance", distance_m)?;
    let nu = positive("frequency", frequency_hz)?;
    let ratio = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * d * nu);
    Ok(ratio * ratio)
}

fn received_power(power_w: f64, gain: f64, line_loss: f64, fsl: f64) -> Result<f64> {
    let p = positive("transmit power", power_w)?;
    let g = positive("antenna gain", gain)?;
    let ll = positive("line loss", line_loss)?;
    Ok(p * g * fsl * ll)
}

pub fn s2s_rate_with(p: &S2sParams, distance_m: f64) -> Result<f64> {
    let fsl = free_space_loss(distance_m, p.frequency_hz)?;
    let received = received_power(p.power_w, p.gain, p.line_loss, fsl)?;
    let noise = positive("boltzmann constant", p.boltzmann_j_per_k)?
        * positive("system noise temperature", p.noise_temp_k)?
        * positive("link margin", p.margin)?
        * positive("Eb/N0", p.ebn0.unwrap_or(DEFAULT_EBN0))?;
    Ok(received / noise / BITS_PER_MBIT)
}

/// Achievable S2S rate in Mbit/s.
pub fn s2s_rate(params: &LinkBudgetParams, distance_m: f64) -> Result<f64> {
    s2s_rate_with(&params.s2s, distance_m)
}

/// Noise power of a ground link; defaults to `k_B * T_s * B`.
pub fn ground_noise(p: &GroundParams) -> f64 {
    p.noise_w.unwrap_or(BOLTZMANN * DEFAULT_NOISE_TEMP_K * p.bandwidth_hz)
}

pub fn ground_snr_with(p: &GroundParams, distance_m: f64) -> Result<f64> {
    let fsl = free_space_loss(distance_m, p.frequency_hz)?;
    let received = received_power(p.power_w, p.gain, p.line_loss, fsl)?;
    Ok(received / positive("noise power", ground_noise(p))?)
}

pub fn ground_snr(params: &LinkBudgetParams, distance_m: f64, dir: GroundDirection) -> Result<f64> {
    ground_snr_with(params.ground(dir), distance_m)
}

pub fn ground_link_rate_with(p: &GroundParams, distance_m: f64) -> Result<f64> {
    let snr = ground_snr_with(p, distance_m)?;
    let b = positive("bandwidth", p.bandwidth_hz)?;
    Ok(b * (1.0 + snr).log2() / BITS_PER_MBIT)
}

/// Shannon rate of a U2S or S2U link in Mbit/s.
pub fn ground_link_rate(params: &LinkBudgetParams, distance_m: f64, dir: GroundDirection) -> Result<f64> {
    ground_link_rate_with(params.ground(dir), distance_m)
}

/// Data volume (Mbit) a link carries within one slot.
pub fn link_capacity(rate_mbps: f64, slot_duration_s: f64) -> f64 {
    rate_mbps * slot_duration_s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::paper_link_budget;
    use approx::assert_relative_eq;

    // Hand oracle: lambda = c / nu, loss = (lambda / (4 pi d))^2.
    fn fsl_oracle(d: f64, nu: f64) -> f64 {
        let lambda = 2.998e8 / nu;
        (lambda / (4.0 * std::f64::consts::PI * d)).powi(2)
    }

    #[test]
    fn free_space_loss_matches_wavelength_form() {
        let v = free_space_loss(1.0e6, 2.2e9).unwrap();
        assert_relative_eq!(v, fsl_oracle(1.0e6, 2.2e9), max_relative = 1e-12);
        assert_relative_eq!(v, 1.175975e-16, max_relative = 1e-6);
    }

    #[test]
    fn free_space_loss_inverse_square() {
        let a = free_space_loss(3.0e5, 1.0e9).unwrap();
        assert_relative_eq!(free_space_loss(6.0e5, 1.0e9).unwrap() / a, 0.25, max_relative = 1e-14);
        assert_relative_eq!(free_space_loss(3.0e5, 2.0e9).unwrap() / a, 0.25, max_relative = 1e-14);
    }

    #[test]
    fn free_space_loss_rejects_nonpositive() {
        assert!(free_space_loss(0.0, 1.0e9).is_err());
        assert!(free_space_loss(1.0, -1.0).is_err());
        assert!(free_space_loss(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn s2s_rate_table_parameters() {
        // 20 W, 52 dBi, -23 dB, 2.2 GHz, 1000 K, 5 dB margin, Eb/N0 10 dB, 1000 km.
        let lb = paper_link_budget();
        let expected = 20.0 * db_to_linear(52.0) * fsl_oracle(1.0e6, 2.2e9) * db_to_linear(-23.0)
            / (1.38e-23 * 1000.0 * db_to_linear(5.0) * db_to_linear(10.0))
            / 1e6;
        let r = s2s_rate(&lb, 1.0e6).unwrap();
        assert_relative_eq!(r, expected, max_relative = 1e-12);
        // frozen from the scalar oracle above
        assert_relative_eq!(r, 4.281038, max_relative = 1e-6);
        assert_relative_eq!(link_capacity(r, 10.0), 42.81038, max_relative = 1e-6);

        let mut doubled = lb.clone();
        doubled.s2s.power_w *= 2.0;
        assert_relative_eq!(s2s_rate(&doubled, 1.0e6).unwrap(), 2.0 * r, max_relative = 1e-14);
    }

    #[test]
    fn ground_rate_table_parameters() {
        let lb = paper_link_budget();
        let snr = 20.0 * db_to_linear(42.0) * fsl_oracle(781.0e3, 30.0e9) * db_to_linear(-23.0) / (1.38e-23 * 1000.0 * 30.0e6);
        let expected = 30.0e6 * (1.0 + snr).log2() / 1e6;
        let r = ground_link_rate(&lb, 781.0e3, GroundDirection::S2u).unwrap();
        assert_relative_eq!(r, expected, max_relative = 1e-12);
        assert_relative_eq!(r, 0.1718549, max_relative = 1e-6);
        // uplink at 1 W
        let up = ground_link_rate(&lb, 781.0e3, GroundDirection::U2s).unwrap();
        assert!(up < r && up > 0.0);
        assert_relative_eq!(up, 0.008608970328417618, max_relative = 1e-9);
    }

    #[test]
    fn ground_rate_limits() {
        let mut lb = paper_link_budget();
        // SNR -> 0 as distance grows without bound
        let far = ground_link_rate(&lb, 1.0e15, GroundDirection::U2s).unwrap();
        assert!(far < 1e-12);
        // doubling B at fixed SNR doubles the rate
        lb.u2s.noise_w = Some(1e-13);
        let r1 = ground_link_rate(&lb, 1.0e6, GroundDirection::U2s).unwrap();
        lb.u2s.bandwidth_hz *= 2.0;
        let r2 = ground_link_rate(&lb, 1.0e6, GroundDirection::U2s).unwrap();
        assert_relative_eq!(r2, 2.0 * r1, max_relative = 1e-14);
    }

    #[test]
    fn link_capacity_products() {
        assert_eq!(link_capacity(100.0, 10.0), 1000.0);
        assert_eq!(link_capacity(0.0, 10.0), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn fsl_decreasing(d in 1.0f64..1e8, nu in 1e6f64..1e11, k in 1.01f64..10.0) {
                let base = free_space_loss(d, nu).unwrap();
                prop_assert!(free_space_loss(d * k, nu).unwrap() < base);
                prop_assert!(free_space_loss(d, nu * k).unwrap() < base);
                prop_assert!(base > 0.0 && base < 1.0);
            }

            #[test]
            fn rates_increase_in_power(d in 1e5f64..1e8, p in 0.1f64..100.0) {
                let mut lb = paper_link_budget();
                lb.s2s.power_w = p;
                lb.u2s.power_w = p;
                let s = s2s_rate(&lb, d).unwrap();
                let g = ground_link_rate(&lb, d, GroundDirection::U2s).unwrap();
                lb.s2s.power_w = p * 1.5;
                lb.u2s.power_w = p * 1.5;
                prop_assert!(s >= 0.0 && g >= 0.0);
                prop_assert!(s2s_rate(&lb, d).unwrap() > s);
                prop_assert!(ground_link_rate(&lb, d, GroundDirection::U2s).unwrap() > g);
            }
        }
    }
}
