//! Optical readout: five-level rate model (two ground, two excited, one
//! singlet), PL and singlet absorption observables, and the on-resonance
//! transmission of the diamond cavity.
//!
//! Spin mixing enters as a routing fraction: a share `mixing` of the
//! excitations out of the m_s = 0-like ground state land in the m_s = ±1-like
//! excited state, and the same share of singlet decays return to the
//! m_s = ±1-like ground state.

use nalgebra::{Matrix5, Vector5};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateModel {
    /// Optical excitation rate per mW of pump power, s⁻¹/mW.
    pub pump_rate_per_mw: f64,
    pub radiative_rate: f64,
    pub isc_rate_ms0: f64,
    pub isc_rate_ms1: f64,
    pub singlet_decay_rate: f64,
    /// Longitudinal ground-state spin relaxation rate (drives the dark state to thermal populations).
    pub spin_relaxation_rate: f64,
    /// Single-pass absorbance per unit singlet population.
    pub absorption_scale: f64,
}

impl Default for RateModel {
    /// Order-of-magnitude placeholders; only ratios and trends are meaningful.
    fn default() -> Self {
        Self {
            pump_rate_per_mw: 1e4,
            radiative_rate: 6.5e7,
            isc_rate_ms0: 1.1e7,
            isc_rate_ms1: 8.0e7,
            singlet_decay_rate: 5.0e6,
            spin_relaxation_rate: 1.0e3,
            absorption_scale: 0.05,
        }
    }
}

impl RateModel {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            self.pump_rate_per_mw,
            self.radiative_rate,
            self.isc_rate_ms0,
            self.isc_rate_ms1,
            self.singlet_decay_rate,
            self.spin_relaxation_rate,
            self.absorption_scale,
        ];
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::invalid("rates must be finite and non-negative"));
        }
        if !(self.isc_rate_ms1 > self.isc_rate_ms0) {
            return Err(Error::invalid(
                "intersystem crossing must be spin selective (isc_rate_ms1 > isc_rate_ms0)",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Populations {
    pub ground_ms0: f64,
    pub ground_ms1: f64,
    pub excited_ms0: f64,
    pub excited_ms1: f64,
    pub singlet: f64,
}

impl Populations {
    pub fn total(&self) -> f64 {
        self.ground_ms0 + self.ground_ms1 + self.excited_ms0 + self.excited_ms1 + self.singlet
    }

    fn as_array(&self) -> [f64; 5] {
        [
            self.ground_ms0,
            self.ground_ms1,
            self.excited_ms0,
            self.excited_ms1,
            self.singlet,
        ]
    }

    /// Thermal distribution over the three ground sublevels, no excitation.
    pub fn dark() -> Self {
        Self {
            ground_ms0: 1.0 / 3.0,
            ground_ms1: 2.0 / 3.0,
            excited_ms0: 0.0,
            excited_ms1: 0.0,
            singlet: 0.0,
        }
    }
}

/// Solves the steady-state balance equations.
pub fn steady_state(model: &RateModel, pump_mw: f64, mixing: f64) -> Result<Populations> {
    let decay_free = model.radiative_rate == 0.0
        && model.isc_rate_ms0 == 0.0
        && model.isc_rate_ms1 == 0.0
        && model.singlet_decay_rate == 0.0;
    if decay_free {
        return Err(Error::SingularRates("all decay rates are zero".into()));
    }
    model.validate()?;
    if !(pump_mw >= 0.0 && pump_mw.is_finite()) {
        return Err(Error::invalid("pump power must be finite and non-negative"));
    }
    if !(0.0..=1.0).contains(&mixing) {
        return Err(Error::invalid("mixing fraction must lie in [0, 1]"));
    }
    if pump_mw == 0.0 {
        return Ok(Populations::dark());
    }

    let kp = model.pump_rate_per_mw * pump_mw;
    let kr = model.radiative_rate;
    let (k0, k1) = (model.isc_rate_ms0, model.isc_rate_ms1);
    let ks = model.singlet_decay_rate;
    // thermal detailed balance: 0 -> ±1 twice as likely as the reverse
    let w = model.spin_relaxation_rate;
    let m = mixing;

    // state order: g0, g1, e0, e1, s
    #[rustfmt::skip]
    let mut a = Matrix5::new(
        -kp - 2.0 * w, w,        kr,         0.0,        (1.0 - m) * ks,
        2.0 * w,       -kp - w,  0.0,        kr,         m * ks,
        (1.0 - m) * kp, 0.0,     -(kr + k0), 0.0,        0.0,
        m * kp,        kp,       0.0,        -(kr + k1), 0.0,
        0.0,           0.0,      k0,         k1,         -ks,
    );
    // replace the redundant first balance row by normalisation
    for j in 0..5 {
        a[(0, j)] = 1.0;
    }
    let rhs = Vector5::new(1.0, 0.0, 0.0, 0.0, 0.0);
    let x = a
        .lu()
        .solve(&rhs)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::SingularRates("rate matrix is singular".into()))?;

    let mut p = [0.0; 5];
    for (dst, v) in p.iter_mut().zip(x.iter()) {
        if *v < -1e-9 {
            return Err(Error::Numerical(format!("negative population {v}")));
        }
        *dst = v.max(0.0);
    }
    let total: f64 = p.iter().sum();
    let p = p.map(|v| v / total);
    Ok(Populations {
        ground_ms0: p[0],
        ground_ms1: p[1],
        excited_ms0: p[2],
        excited_ms1: p[3],
        singlet: p[4],
    })
}

/// Photon emission rate radiative·(e0 + e1). Callers normalise to a reference state.
pub fn pl_rate(pop: &Populations, model: &RateModel) -> f64 {
    model.radiative_rate * (pop.excited_ms0 + pop.excited_ms1)
}

pub fn singlet_absorbance(pop: &Populations, model: &RateModel) -> f64 {
    model.absorption_scale * pop.singlet
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySpec {
    /// Power reflectivity of the coated diamond face.
    pub r_back: f64,
    /// Power reflectivity of the spherical mirror.
    pub r_front: f64,
    /// Single-pass fractional loss excluding singlet absorption.
    pub passive_loss: f64,
}

impl Default for CavitySpec {
    fn default() -> Self {
        Self {
            r_back: 0.985,
            r_front: 0.985,
            passive_loss: 0.0,
        }
    }
}

impl CavitySpec {
    pub fn validate(&self) -> Result<()> {
        let in_open = |r: f64| r > 0.0 && r < 1.0;
        if !in_open(self.r_back) || !in_open(self.r_front) {
            return Err(Error::invalid("reflectivities must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.passive_loss) {
            return Err(Error::invalid("passive loss must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// On-resonance Airy transmission T₁T₂a / (1 − r₁r₂a)².
pub fn cavity_transmission(cavity: &CavitySpec, absorbance: f64) -> Result<f64> {
    cavity.validate()?;
    if !(absorbance >= 0.0) {
        return Err(Error::invalid("absorbance must be non-negative"));
    }
    let a = (1.0 - cavity.passive_loss) * (-absorbance).exp();
    let (r1, r2) = (cavity.r_back.sqrt(), cavity.r_front.sqrt());
    let (t1, t2) = (1.0 - cavity.r_back, 1.0 - cavity.r_front);
    let denom = 1.0 - r1 * r2 * a;
    Ok((t1 * t2 * a / (denom * denom)).clamp(0.0, 1.0))
}

/// C_max·P/(P + P_sat).
pub fn contrast_saturation(pump_mw: f64, c_max: f64, p_sat_mw: f64) -> Result<f64> {
    if !(pump_mw >= 0.0) {
        return Err(Error::invalid("pump power must be non-negative"));
    }
    if !(p_sat_mw > 0.0) {
        return Err(Error::invalid("saturation power must be positive"));
    }
    if pump_mw.is_infinite() {
        return Ok(c_max);
    }
    Ok(c_max * pump_mw / (pump_mw + p_sat_mw))
}

/// Pump-heating shift of a feature centre: B0 + coeff·P.
pub fn thermal_center_shift(pump_mw: f64, shift_coeff_t_per_mw: f64, b0: f64) -> f64 {
    b0 + shift_coeff_t_per_mw * pump_mw
}

/// PL normalised to the unmixed value at the same pump power.
pub fn relative_pl(model: &RateModel, pump_mw: f64, mixing: f64) -> Result<f64> {
    let reference = pl_rate(&steady_state(model, pump_mw, 0.0)?, model);
    if reference == 0.0 {
        return Ok(0.0);
    }
    Ok(pl_rate(&steady_state(model, pump_mw, mixing)?, model) / reference)
}

impl From<Populations> for [f64; 5] {
    fn from(p: Populations) -> Self {
        p.as_array()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: integrate the rate equations forward in time to steady state.
    fn relax(model: &RateModel, pump_mw: f64, mixing: f64) -> [f64; 5] {
        let kp = model.pump_rate_per_mw * pump_mw;
        let (kr, k0, k1, ks, w) = (
            model.radiative_rate,
            model.isc_rate_ms0,
            model.isc_rate_ms1,
            model.singlet_decay_rate,
            model.spin_relaxation_rate,
        );
        let m = mixing;
        let mut p = [1.0 / 3.0, 2.0 / 3.0, 0.0, 0.0, 0.0];
        let dt = 0.2 / (kp + kr + k1 + ks + w);
        for _ in 0..20_000_000 {
            let [g0, g1, e0, e1, s] = p;
            let d = [
                -kp * g0 - 2.0 * w * g0 + w * g1 + kr * e0 + (1.0 - m) * ks * s,
                -kp * g1 + 2.0 * w * g0 - w * g1 + kr * e1 + m * ks * s,
                (1.0 - m) * kp * g0 - (kr + k0) * e0,
                m * kp * g0 + kp * g1 - (kr + k1) * e1,
                k0 * e0 + k1 * e1 - ks * s,
            ];
            let mut change = 0.0f64;
            for i in 0..5 {
                p[i] += dt * d[i];
                change = change.max((dt * d[i]).abs());
            }
            if change < 1e-15 {
                break;
            }
        }
        p
    }

    #[test]
    fn dark_state_has_no_excitation() {
        let p = steady_state(&RateModel::default(), 0.0, 0.4).unwrap();
        assert_eq!(p.singlet, 0.0);
        assert_eq!(p.excited_ms0 + p.excited_ms1, 0.0);
        assert!((p.total() - 1.0).abs() < 1e-12);
        assert_eq!(pl_rate(&p, &RateModel::default()), 0.0);
    }

    #[test]
    fn linear_solve_matches_time_integration() {
        let model = RateModel::default();
        let solved: [f64; 5] = steady_state(&model, 100.0, 0.3).unwrap().into();
        let relaxed = relax(&model, 100.0, 0.3);
        for (a, b) in solved.iter().zip(relaxed) {
            assert!((a - b).abs() < 1e-6, "{solved:?} vs {relaxed:?}");
        }
    }

    #[test]
    fn mixing_raises_singlet_and_lowers_pl() {
        let model = RateModel::default();
        let p0 = steady_state(&model, 100.0, 0.0).unwrap();
        let p3 = steady_state(&model, 100.0, 0.3).unwrap();
        assert!(p3.singlet > p0.singlet);
        assert!(pl_rate(&p3, &model) < pl_rate(&p0, &model));
        let p1 = steady_state(&model, 100.0, 1.0).unwrap();
        assert!(pl_rate(&p0, &model) >= pl_rate(&p1, &model));
    }

    #[test]
    fn singlet_non_decreasing_in_mixing() {
        let model = RateModel::default();
        for pump in [1.0, 100.0, 1000.0] {
            let mut prev = 0.0;
            for i in 0..=50 {
                let s = steady_state(&model, pump, i as f64 / 50.0).unwrap().singlet;
                assert!(s >= prev - 1e-15, "pump {pump}, step {i}");
                prev = s;
            }
        }
    }

    #[test]
    fn pl_increases_with_pump() {
        let model = RateModel::default();
        let mut prev = -1.0;
        for i in 0..=100 {
            let pl = pl_rate(&steady_state(&model, 10.0 * i as f64, 0.1).unwrap(), &model);
            assert!(pl > prev);
            prev = pl;
        }
    }

    #[test]
    fn singular_rates_rejected() {
        let model = RateModel {
            radiative_rate: 0.0,
            isc_rate_ms0: 0.0,
            isc_rate_ms1: 0.0,
            singlet_decay_rate: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            steady_state(&model, 10.0, 0.0),
            Err(Error::SingularRates(_))
        ));
    }

    #[test]
    fn absorbance_is_linear() {
        let model = RateModel::default();
        let pop = steady_state(&model, 200.0, 0.2).unwrap();
        let a = singlet_absorbance(&pop, &model);
        let doubled = RateModel {
            absorption_scale: 2.0 * model.absorption_scale,
            ..model
        };
        assert!((singlet_absorbance(&pop, &doubled) - 2.0 * a).abs() < 1e-18);
        assert_eq!(singlet_absorbance(&Populations::dark(), &model), 0.0);
    }

    #[test]
    fn impedance_matched_cavity_transmits_fully() {
        let t = cavity_transmission(&CavitySpec::default(), 0.0).unwrap();
        assert!((t - 1.0).abs() < 1e-9);
    }

    #[test]
    fn opaque_cavity_blocks() {
        assert!(cavity_transmission(&CavitySpec::default(), 20.0).unwrap() < 1e-6);
    }

    #[test]
    fn transmission_decreases_with_absorbance() {
        let cav = CavitySpec {
            r_front: 0.95,
            passive_loss: 0.002,
            ..Default::default()
        };
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let t = cavity_transmission(&cav, i as f64 * 0.01).unwrap();
            assert!(t < prev);
            prev = t;
        }
    }

    #[test]
    fn invalid_cavity_rejected() {
        let cav = CavitySpec {
            r_back: 1.0,
            ..Default::default()
        };
        assert!(cavity_transmission(&cav, 0.0).is_err());
    }

    #[test]
    fn saturation_curve() {
        assert_eq!(contrast_saturation(0.0, 0.15, 150.0).unwrap(), 0.0);
        assert!((contrast_saturation(150.0, 0.15, 150.0).unwrap() - 0.075).abs() < 1e-15);
        assert_eq!(
            contrast_saturation(f64::INFINITY, 0.15, 150.0).unwrap(),
            0.15
        );
        assert!((contrast_saturation(1e12, 0.15, 150.0).unwrap() - 0.15).abs() < 1e-9);
    }

    #[test]
    fn thermal_shift_is_linear() {
        assert_eq!(thermal_center_shift(300.0, 0.0, 0.1024), 0.1024);
        let b0 = 0.1024;
        let k = -2e-8;
        let one = thermal_center_shift(250.0, k, b0) - b0;
        let two = thermal_center_shift(500.0, k, b0) - b0;
        assert!((two - 2.0 * one).abs() < 1e-9 * one.abs());
        assert!(one < 0.0);
    }
}
