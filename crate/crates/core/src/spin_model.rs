//! NV ground-state spin Hamiltonian.
//!
//! All energies are in frequency units (Hz), fields in tesla and angles in
//! degrees at the public surface. The electron basis is ordered
//! `m_s = +1, 0, -1`; with hyperfine coupling enabled the basis is the
//! Kronecker product electron ⊗ nitrogen (`m_I = +1, 0, -1`).

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex<f64>;

/// Nitrogen hyperfine and quadrupole constants. No defaults: the 9×9 model
/// only runs with explicit values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperfineParams {
    #[serde(rename = "A_parallel_Hz")]
    pub a_parallel_hz: f64,
    #[serde(rename = "A_perpendicular_Hz")]
    pub a_perpendicular_hz: f64,
    #[serde(rename = "quadrupole_Hz")]
    pub quadrupole_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpinSystemParams {
    /// Zero-field splitting D.
    #[serde(rename = "zero_field_splitting_Hz")]
    pub zero_field_splitting_hz: f64,
    /// Electron gyromagnetic ratio γ/2π.
    #[serde(rename = "gamma_over_2pi_Hz_per_T")]
    pub gamma_over_2pi_hz_per_t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperfine: Option<HyperfineParams>,
}

impl Default for SpinSystemParams {
    fn default() -> Self {
        Self {
            zero_field_splitting_hz: 2.87e9,
            gamma_over_2pi_hz_per_t: 28.024e9,
            hyperfine: None,
        }
    }
}

impl SpinSystemParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.zero_field_splitting_hz > 0.0 && self.zero_field_splitting_hz.is_finite()) {
            return Err(Error::invalid("zero-field splitting must be positive"));
        }
        if !(self.gamma_over_2pi_hz_per_t > 0.0 && self.gamma_over_2pi_hz_per_t.is_finite()) {
            return Err(Error::invalid("gyromagnetic ratio must be positive"));
        }
        if let Some(hf) = &self.hyperfine {
            let all_finite = [hf.a_parallel_hz, hf.a_perpendicular_hz, hf.quadrupole_hz]
                .iter()
                .all(|v| v.is_finite());
            if !all_finite {
                return Err(Error::invalid("hyperfine constants must be finite"));
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        if self.hyperfine.is_some() {
            9
        } else {
            3
        }
    }

    /// Field at which the m_s = 0 and m_s = -1 levels cross for an aligned field, D/(γ/2π).
    pub fn crossing_field(&self) -> f64 {
        self.zero_field_splitting_hz / self.gamma_over_2pi_hz_per_t
    }
}

/// Applied field in the NV frame (z along the NV axis).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldVector {
    magnitude: f64,
    theta_deg: f64,
    phi_deg: f64,
}

impl FieldVector {
    /// `theta_deg` in [0, 180), `phi_deg` is wrapped into [0, 360).
    pub fn new(magnitude: f64, theta_deg: f64, phi_deg: f64) -> Result<Self> {
        if !(magnitude >= 0.0 && magnitude.is_finite()) {
            return Err(Error::invalid(format!(
                "field magnitude must be finite and non-negative, got {magnitude}"
            )));
        }
        if !(0.0..180.0).contains(&theta_deg) {
            return Err(Error::invalid(format!(
                "polar angle must lie in [0, 180) degrees, got {theta_deg}"
            )));
        }
        if !phi_deg.is_finite() {
            return Err(Error::invalid("azimuth must be finite"));
        }
        let phi_deg = phi_deg.rem_euclid(360.0);
        // rem_euclid can round up to exactly 360 for tiny negative inputs
        let phi_deg = if phi_deg >= 360.0 { 0.0 } else { phi_deg };
        Ok(Self {
            magnitude,
            theta_deg,
            phi_deg,
        })
    }

    pub fn aligned(magnitude: f64) -> Result<Self> {
        Self::new(magnitude, 0.0, 0.0)
    }

    /// Field with a given component along the NV axis and perpendicular to it.
    pub fn from_components(parallel: f64, transverse: f64, phi_deg: f64) -> Result<Self> {
        if !(transverse >= 0.0) {
            return Err(Error::invalid("transverse component must be non-negative"));
        }
        let magnitude = parallel.hypot(transverse);
        let theta_deg = if magnitude == 0.0 {
            0.0
        } else {
            transverse.atan2(parallel).to_degrees()
        };
        Self::new(magnitude, theta_deg, phi_deg)
    }

    /// Field of given magnitude carrying a fixed transverse component.
    pub fn with_transverse(magnitude: f64, transverse: f64) -> Result<Self> {
        if transverse > magnitude {
            return Err(Error::invalid(format!(
                "transverse component {transverse} T exceeds magnitude {magnitude} T"
            )));
        }
        let parallel = (magnitude * magnitude - transverse * transverse)
            .max(0.0)
            .sqrt();
        Self::from_components(parallel, transverse, 0.0)
    }

    /// Field direction produced by the two alignment stages: a tilt by `beta`
    /// about the y axis followed by a rotation by `alpha` about the x axis,
    /// starting from a field along the NV axis.
    pub fn from_experiment_angles(magnitude: f64, alpha_deg: f64, beta_deg: f64) -> Result<Self> {
        let (sa, ca) = alpha_deg.to_radians().sin_cos();
        let (sb, cb) = beta_deg.to_radians().sin_cos();
        let (x, y, z) = (sb, -cb * sa, cb * ca);
        let theta = x.hypot(y).atan2(z).to_degrees();
        let phi = if x == 0.0 && y == 0.0 {
            0.0
        } else {
            y.atan2(x).to_degrees()
        };
        Self::new(magnitude, theta, phi)
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta_deg
    }

    pub fn phi_deg(&self) -> f64 {
        self.phi_deg
    }

    pub fn parallel(&self) -> f64 {
        self.magnitude * self.theta_deg.to_radians().cos()
    }

    pub fn transverse(&self) -> f64 {
        self.magnitude * self.theta_deg.to_radians().sin()
    }

    /// (Bx, By, Bz) in the NV frame.
    pub fn cartesian(&self) -> [f64; 3] {
        let (st, ct) = self.theta_deg.to_radians().sin_cos();
        let (sp, cp) = self.phi_deg.to_radians().sin_cos();
        [
            self.magnitude * st * cp,
            self.magnitude * st * sp,
            self.magnitude * ct,
        ]
    }
}

/// Square complex matrix checked to be Hermitian on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(DMatrix<C64>);

impl HermitianMatrix {
    /// Relative tolerance of the Hermiticity check.
    pub const TOLERANCE: f64 = 1e-9;

    pub fn try_new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::invalid(
                "Hermitian matrix must be square and non-empty",
            ));
        }
        let residual = hermiticity_residual(&m);
        let scale = max_abs(&m);
        if !(residual <= Self::TOLERANCE * scale) {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermiticity_residual(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Spin-1 operators (Sx, Sy, Sz) in the `+1, 0, -1` basis.
pub fn spin_one_operators() -> [DMatrix<C64>; 3] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0);
    let sx = DMatrix::from_row_slice(3, 3, &[z, c(s), z, c(s), z, c(s), z, c(s), z]);
    let i = C64::new(0.0, s);
    let sy = DMatrix::from_row_slice(3, 3, &[z, -i, z, i, z, -i, z, i, z]);
    let sz = DMatrix::from_row_slice(3, 3, &[c(1.0), z, z, z, z, z, z, z, c(-1.0)]);
    [sx, sy, sz]
}

/// Electron Sz on a Hilbert space of dimension `dim` (3 or 3·k).
fn electron_sz(dim: usize) -> Option<DMatrix<C64>> {
    if dim == 0 || !dim.is_multiple_of(3) {
        return None;
    }
    let [_, _, sz] = spin_one_operators();
    Some(sz.kronecker(&DMatrix::<C64>::identity(dim / 3, dim / 3)))
}

/// H/h = D·Sz² + (γ/2π)·B·S, plus A∥·SzIz + A⊥·(SxIx + SyIy) + P·Iz² when hyperfine is enabled.
pub fn build_hamiltonian(
    params: &SpinSystemParams,
    field: &FieldVector,
) -> Result<HermitianMatrix> {
    params.validate()?;
    let [sx, sy, sz] = spin_one_operators();
    let [bx, by, bz] = field.cartesian();
    let gamma = params.gamma_over_2pi_hz_per_t;
    let electron = &sz * &sz * c(params.zero_field_splitting_hz)
        + (&sx * c(bx) + &sy * c(by) + &sz * c(bz)) * c(gamma);

    let h = match &params.hyperfine {
        None => electron,
        Some(hf) => {
            let id = DMatrix::<C64>::identity(3, 3);
            let (ix, iy, iz) = (&sx, &sy, &sz);
            electron.kronecker(&id)
                + sz.kronecker(iz) * c(hf.a_parallel_hz)
                + (sx.kronecker(ix) + sy.kronecker(iy)) * c(hf.a_perpendicular_hz)
                + id.kronecker(&(iz * iz)) * c(hf.quadrupole_hz)
        }
    };
    // symmetrise away rounding so downstream checks see an exactly Hermitian matrix
    let h = (&h + h.adjoint()) * c(0.5);
    HermitianMatrix::try_new(h)
}

/// Sorted eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    /// Ascending eigenvalues.
    pub energies: Vec<f64>,
    /// Eigenvectors as columns, in the same order as `energies`.
    pub states: DMatrix<C64>,
}

impl Eigensystem {
    pub fn state(&self, k: usize) -> Vec<C64> {
        self.states.column(k).iter().copied().collect()
    }
}

/// Diagonalises `h`. Degenerate clusters are rotated onto eigenstates of the
/// electron Sz and ordered by ascending ⟨Sz⟩; each eigenvector's largest
/// component is made real and positive.
pub fn eigensystem(h: &HermitianMatrix) -> Eigensystem {
    let n = h.dim();
    let scale = h.max_abs();
    if scale == 0.0 {
        let states = DMatrix::<C64>::identity(n, n);
        let mut sys = Eigensystem {
            energies: vec![0.0; n],
            states,
        };
        order_degenerate(&mut sys, 0.0);
        return sys;
    }

    let scaled = h.as_matrix() / c(scale);
    let eig = SymmetricEigen::new(scaled);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k] * scale).collect();
    let mut states = DMatrix::<C64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        states.set_column(dst, &eig.eigenvectors.column(src));
    }
    let mut sys = Eigensystem { energies, states };
    order_degenerate(&mut sys, 1e-11 * scale);
    sys
}

fn order_degenerate(sys: &mut Eigensystem, tol: f64) {
    let n = sys.energies.len();
    let sz = electron_sz(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && sys.energies[end] - sys.energies[end - 1] <= tol {
            end += 1;
        }
        if end - start > 1 {
            if let Some(sz) = &sz {
                let block = sys.states.columns(start, end - start).into_owned();
                let projected = block.adjoint() * sz * &block;
                let projected = (&projected + projected.adjoint()) * c(0.5);
                let inner = SymmetricEigen::new(projected);
                let mut idx: Vec<usize> = (0..end - start).collect();
                idx.sort_by(|&a, &b| inner.eigenvalues[a].total_cmp(&inner.eigenvalues[b]));
                let rotated = &block * &inner.eigenvectors;
                for (k, &src) in idx.iter().enumerate() {
                    let col = rotated.column(src).normalize();
                    sys.states.set_column(start + k, &col);
                }
            }
        }
        start = end;
    }
    for k in 0..n {
        let mut col = sys.states.column(k).into_owned();
        let (mut best, mut best_norm) = (0, -1.0);
        for (i, z) in col.iter().enumerate() {
            if z.norm() > best_norm + 1e-12 {
                best = i;
                best_norm = z.norm();
            }
        }
        if best_norm > 0.0 {
            let phase = col[best].conj() / best_norm;
            col *= phase;
        }
        sys.states.set_column(k, &col);
    }
}

/// Eigenlevels at one field point.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    pub field: FieldVector,
    pub energies: Vec<f64>,
    pub states: DMatrix<C64>,
}

pub fn levels(params: &SpinSystemParams, field: &FieldVector) -> Result<LevelSet> {
    let h = build_hamiltonian(params, field)?;
    let Eigensystem { energies, states } = eigensystem(&h);
    Ok(LevelSet {
        field: *field,
        energies,
        states,
    })
}

/// Gap between the two levels that anti-cross at the GSLAC: the top of the
/// lowest electron manifold and the bottom of the next one.
pub fn anticrossing_gap(params: &SpinSystemParams, field: &FieldVector) -> Result<f64> {
    let set = levels(params, field)?;
    let per_manifold = set.energies.len() / 3;
    Ok(set.energies[per_manifold] - set.energies[per_manifold - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GslacLocation {
    #[serde(rename = "center_T")]
    pub center: f64,
    #[serde(rename = "min_gap_Hz")]
    pub min_gap_hz: f64,
}

/// Default absolute tolerance of the anti-crossing search, in tesla.
pub const GSLAC_FIELD_TOLERANCE: f64 = 1e-10;

/// Locates the field magnitude minimising the anti-crossing gap at a fixed
/// transverse component, by golden-section search over `range`.
pub fn find_gslac(
    params: &SpinSystemParams,
    transverse: f64,
    range: (f64, f64),
) -> Result<GslacLocation> {
    find_gslac_with_tolerance(params, transverse, range, GSLAC_FIELD_TOLERANCE)
}

pub fn find_gslac_with_tolerance(
    params: &SpinSystemParams,
    transverse: f64,
    range: (f64, f64),
    tolerance: f64,
) -> Result<GslacLocation> {
    params.validate()?;
    let (lo, hi) = range;
    if !(transverse >= 0.0 && transverse.is_finite()) {
        return Err(Error::invalid("transverse field must be non-negative"));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::invalid("field range must satisfy lo < hi"));
    }
    if lo < transverse {
        return Err(Error::invalid(
            "field range starts below the transverse component",
        ));
    }
    if !(tolerance > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }

    let gap = |b: f64| -> Result<f64> {
        anticrossing_gap(params, &FieldVector::with_transverse(b, transverse)?)
    };

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = gap(x1)?;
    let mut f2 = gap(x2)?;
    while b - a > tolerance {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = gap(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = gap(x2)?;
        }
    }
    let center = 0.5 * (a + b);
    let min_gap = gap(center)?;

    let margin = (10.0 * tolerance).max(1e-9 * (hi - lo));
    let at_edge = center - lo <= margin || hi - center <= margin;
    if at_edge || min_gap >= gap(lo)? || min_gap >= gap(hi)? {
        return Err(Error::NoCrossing { lo_t: lo, hi_t: hi });
    }
    Ok(GslacLocation {
        center,
        min_gap_hz: min_gap.max(0.0),
    })
}

/// 1 − max_k |⟨m_s = 0|ψ_k⟩|²: zero when some eigenstate is a pure m_s = 0 state.
pub fn spin_mixing(params: &SpinSystemParams, field: &FieldVector) -> Result<f64> {
    let set = levels(params, field)?;
    let per_manifold = set.energies.len() / 3;
    // m_s = 0 is the middle electron index
    let ms0 = per_manifold..2 * per_manifold;
    let best = (0..set.energies.len())
        .map(|k| {
            ms0.clone()
                .map(|i| set.states[(i, k)].norm_sqr())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    Ok((1.0 - best).clamp(0.0, 1.0))
}

/// Transverse field B·sin β produced by a tilt `beta_deg` between field and NV axis.
pub fn transverse_component(magnitude: f64, beta_deg: f64) -> f64 {
    magnitude * beta_deg.to_radians().sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn zero_field_levels_are_zero_and_d() {
        let p = SpinSystemParams::default();
        let set = levels(&p, &FieldVector::aligned(0.0).unwrap()).unwrap();
        assert_eq!(set.energies, vec![0.0, 2.87e9, 2.87e9]);
        // degenerate pair ordered by ascending Sz: m_s=-1 then m_s=+1
        assert!(close(set.states[(2, 1)].norm(), 1.0, 1e-12));
        assert!(close(set.states[(0, 2)].norm(), 1.0, 1e-12));
    }

    #[test]
    fn aligned_field_matches_analytic_levels() {
        let p = SpinSystemParams::default();
        let b = 0.05;
        let set = levels(&p, &FieldVector::aligned(b).unwrap()).unwrap();
        let expected = [0.0, 2.87e9 - 28.024e9 * b, 2.87e9 + 28.024e9 * b];
        for (e, x) in set.energies.iter().zip(expected) {
            assert!(close(*e, x, 1e-3), "{e} vs {x}");
        }
        assert!(close(expected[1], 1.4688e9, 1.0));
        assert!(close(expected[2], 4.2712e9, 1.0));
    }

    #[test]
    fn crossing_field_is_degenerate() {
        let p = SpinSystemParams::default();
        let set = levels(&p, &FieldVector::aligned(p.crossing_field()).unwrap()).unwrap();
        assert!(set.energies[1] - set.energies[0] < 1e3);
    }

    #[test]
    fn negative_magnitude_rejected() {
        assert!(FieldVector::new(-1e-3, 0.0, 0.0).is_err());
        assert!(FieldVector::new(1e-3, 180.0, 0.0).is_err());
    }

    #[test]
    fn azimuth_wraps() {
        let f = FieldVector::new(0.1, 10.0, -90.0).unwrap();
        assert!(close(f.phi_deg(), 270.0, 1e-12));
        let f = FieldVector::new(0.1, 10.0, 720.0).unwrap();
        assert_eq!(f.phi_deg(), 0.0);
    }

    #[test]
    fn experiment_angles_with_zero_alpha_tilt_in_xz_plane() {
        let f = FieldVector::from_experiment_angles(0.1024, 0.0, 0.054).unwrap();
        assert!(close(f.theta_deg(), 0.054, 1e-12));
        assert!(close(f.phi_deg(), 0.0, 1e-12));
        let g = FieldVector::from_experiment_angles(0.1024, 0.0, -0.054).unwrap();
        assert!(close(g.theta_deg(), 0.054, 1e-12));
        assert!(close(g.phi_deg(), 180.0, 1e-9));
        assert!(close(
            f.transverse(),
            transverse_component(0.1024, 0.054),
            1e-15
        ));
    }

    #[test]
    fn parallel_transverse_pythagoras() {
        let f = FieldVector::new(0.1, 37.0, 12.0).unwrap();
        let sum = f.parallel().powi(2) + f.transverse().powi(2);
        assert!(((sum - 0.01) / 0.01).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = DMatrix::<C64>::identity(3, 3);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            HermitianMatrix::try_new(m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn identity_eigensystem() {
        let h = HermitianMatrix::try_new(DMatrix::<C64>::identity(3, 3)).unwrap();
        let sys = eigensystem(&h);
        assert_eq!(sys.energies.len(), 3);
        for e in &sys.energies {
            assert!(close(*e, 1.0, 1e-14));
        }
        let gram = sys.states.adjoint() * &sys.states;
        assert!((gram - DMatrix::<C64>::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_eigensystem_returns_canonical_basis() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(4.2712e9),
            c(0.0),
            c(1.4688e9),
        ]));
        let sys = eigensystem(&HermitianMatrix::try_new(d).unwrap());
        assert_eq!(sys.energies, vec![0.0, 1.4688e9, 4.2712e9]);
        assert!(close(sys.states[(1, 0)].re, 1.0, 1e-12));
        assert!(close(sys.states[(2, 1)].re, 1.0, 1e-12));
        assert!(close(sys.states[(0, 2)].re, 1.0, 1e-12));
    }

    #[test]
    fn gslac_at_d_over_gamma() {
        let p = SpinSystemParams::default();
        let loc = find_gslac(&p, 0.0, (0.09, 0.115)).unwrap();
        assert!(close(loc.center, p.crossing_field(), 1e-8));
        assert!(loc.min_gap_hz < 1e3);
    }

    #[test]
    fn gslac_scales_with_d() {
        let p = SpinSystemParams::default();
        let p2 = SpinSystemParams {
            zero_field_splitting_hz: 2.0 * p.zero_field_splitting_hz,
            ..p
        };
        let a = find_gslac(&p, 0.0, (0.09, 0.115)).unwrap().center;
        let b = find_gslac(&p2, 0.0, (0.18, 0.23)).unwrap().center;
        assert!(((b / a) - 2.0).abs() < 2e-3);
    }

    #[test]
    fn range_without_crossing_is_an_error() {
        let p = SpinSystemParams::default();
        let err = find_gslac(&p, 0.0, (0.05, 0.08)).unwrap_err();
        assert!(matches!(err, Error::NoCrossing { .. }));
    }

    #[test]
    fn aligned_field_has_no_mixing() {
        let p = SpinSystemParams::default();
        for b in [0.0, 0.01, 0.05, 0.08, 0.12] {
            let m = spin_mixing(&p, &FieldVector::aligned(b).unwrap()).unwrap();
            assert!(m.abs() < 1e-12, "B={b}: {m}");
        }
    }

    #[test]
    fn perpendicular_field_mixes() {
        let p = SpinSystemParams::default();
        let m = spin_mixing(&p, &FieldVector::new(0.1024, 90.0, 0.0).unwrap()).unwrap();
        assert!(m > 0.0 && m <= 1.0);
    }

    #[test]
    fn transverse_component_values() {
        assert!(close(transverse_component(0.1024, 0.054), 96.5e-6, 0.05e-6));
        assert_eq!(transverse_component(0.3, 0.0), 0.0);
        assert!(close(transverse_component(0.1024, 90.0), 0.1024, 1e-15));
    }

    #[test]
    fn hyperfine_model_is_nine_dimensional() {
        let p = SpinSystemParams {
            hyperfine: Some(HyperfineParams {
                a_parallel_hz: -2.14e6,
                a_perpendicular_hz: -2.7e6,
                quadrupole_hz: -4.95e6,
            }),
            ..Default::default()
        };
        let h = build_hamiltonian(&p, &FieldVector::new(0.1024, 0.05, 0.0).unwrap()).unwrap();
        assert_eq!(h.dim(), 9);
        let sys = eigensystem(&h);
        let sum: f64 = sys.energies.iter().sum();
        assert!((sum - h.trace()).abs() < 1e-8 * h.max_abs() * 9.0);
    }
}
