//! Polynomial filter bases on [-1, 1] and the generalized Vandermonde
//! matrix built from them.
//!
//! Four families are supported:
//!
//! | family    | definition                                   | max of M_K on [-1,1] |
//! |-----------|----------------------------------------------|----------------------|
//! | Monomial  | `P_k(x) = x^k`                               | K+1 at x = ±1        |
//! | Chebyshev | `T_{k+1} = 2x T_k - T_{k-1}`                 | K+1 at x = ±1        |
//! | Legendre  | `(k+1)P_{k+1} = (2k+1)x P_k - k P_{k-1}`     | K+1 at x = ±1        |
//! | Bernstein | `C(K,k) t^k (1-t)^{K-k}`, `t = (x+1)/2`      | 1 at x = ±1          |
//!
//! `M_K(x) = Σ_k P_k(x)²` is the amplification profile: the basis's total
//! squared response at frequency x. Evaluated at the graph eigenvalues it
//! gives the squared row norms of the Vandermonde matrix, whose maximum is
//! the (2,∞)-norm appearing in every bound. The optional rescaling divides
//! each polynomial by `sqrt(max M_K)` so the worst-case amplification is 1
//! for every family, making parameter-norm constraints comparable across
//! bases.

use ndarray::{Array1, Array2};
use std::fmt;
use std::str::FromStr;

use crate::error::{CoreError, Result};

/// Largest supported polynomial order. Bernstein binomial coefficients are
/// exact in f64 through this order.
pub const MAX_ORDER: usize = 20;

const DOMAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisFamily {
    Monomial,
    Chebyshev,
    Legendre,
    Bernstein,
}

impl BasisFamily {
    pub const ALL: [BasisFamily; 4] = [
        BasisFamily::Monomial,
        BasisFamily::Chebyshev,
        BasisFamily::Legendre,
        BasisFamily::Bernstein,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BasisFamily::Monomial => "monomial",
            BasisFamily::Chebyshev => "chebyshev",
            BasisFamily::Legendre => "legendre",
            BasisFamily::Bernstein => "bernstein",
        }
    }
}

impl fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BasisFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "monomial" => Ok(BasisFamily::Monomial),
            "chebyshev" => Ok(BasisFamily::Chebyshev),
            "legendre" => Ok(BasisFamily::Legendre),
            "bernstein" => Ok(BasisFamily::Bernstein),
            other => Err(format!(
                "unknown basis '{other}' (expected monomial|chebyshev|legendre|bernstein)"
            )),
        }
    }
}

/// A basis family plus the rescaling flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisKind {
    pub family: BasisFamily,
    pub rescaled: bool,
}

impl BasisKind {
    pub fn new(family: BasisFamily) -> Self {
        Self {
            family,
            rescaled: false,
        }
    }

    pub fn rescaled(family: BasisFamily) -> Self {
        Self {
            family,
            rescaled: true,
        }
    }

    /// Analytic divisor `sqrt(max_x M_K(x))` used for rescaling: the
    /// endpoint values rather than a grid maximum, so the divisor is exact.
    pub fn rescale_divisor(&self, order: usize) -> f64 {
        if !self.rescaled {
            return 1.0;
        }
        match self.family {
            BasisFamily::Bernstein => 1.0,
            _ => ((order + 1) as f64).sqrt(),
        }
    }

    /// Analytic maximum of the amplification profile over [-1, 1].
    pub fn endpoint_amplification(&self, order: usize) -> f64 {
        let raw = match self.family {
            BasisFamily::Bernstein => 1.0,
            _ => (order + 1) as f64,
        };
        let d = self.rescale_divisor(order);
        raw / (d * d)
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rescaled {
            write!(f, "{}~", self.family)
        } else {
            self.family.fmt(f)
        }
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(CoreError::OrderTooLarge(order, MAX_ORDER));
    }
    Ok(())
}

fn clamp_argument(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + DOMAIN_TOL {
        return Err(CoreError::ArgumentOutOfDomain(x));
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// Binomial coefficients C(K, 0..=K) by the multiplicative recurrence.
/// Exact in f64 for K ≤ 20.
fn binomials(order: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(order + 1);
    c.push(1.0f64);
    for k in 1..=order {
        let prev = c[k - 1];
        c.push(prev * ((order - k + 1) as f64) / (k as f64));
    }
    c
}

/// Evaluate all basis polynomials `P_0..P_K` at a single point.
pub fn eval_basis(kind: BasisKind, order: usize, x: f64) -> Result<Vec<f64>> {
    check_order(order)?;
    let x = clamp_argument(x)?;
    let mut vals = vec![0.0f64; order + 1];
    match kind.family {
        BasisFamily::Monomial => {
            let mut p = 1.0;
            for v in vals.iter_mut() {
                *v = p;
                p *= x;
            }
        }
        BasisFamily::Chebyshev => {
            vals[0] = 1.0;
            if order >= 1 {
                vals[1] = x;
            }
            for k in 1..order {
                vals[k + 1] = 2.0 * x * vals[k] - vals[k - 1];
            }
        }
        BasisFamily::Legendre => {
            vals[0] = 1.0;
            if order >= 1 {
                vals[1] = x;
            }
            for k in 1..order {
                let kf = k as f64;
                vals[k + 1] = ((2.0 * kf + 1.0) * x * vals[k] - kf * vals[k - 1]) / (kf + 1.0);
            }
        }
        BasisFamily::Bernstein => {
            let t = (x + 1.0) / 2.0;
            let binom = binomials(order);
            // t^k and (1-t)^(K-k) by running products.
            let mut tk = 1.0;
            for (k, v) in vals.iter_mut().enumerate() {
                *v = binom[k] * tk * (1.0 - t).powi((order - k) as i32);
                tk *= t;
            }
        }
    }
    let d = kind.rescale_divisor(order);
    if d != 1.0 {
        for v in vals.iter_mut() {
            *v /= d;
        }
    }
    Ok(vals)
}

/// Amplification profile `M_K(x) = Σ_k P_k(x)²` over a grid of points.
///
/// With `normalized` the profile is divided by its maximum over the grid
/// (the plotting convention; the default grid contains ±1, where the
/// maximum is attained, so the divisor is the analytic endpoint value).
pub fn amplification_profile(
    kind: BasisKind,
    order: usize,
    xs: &[f64],
    normalized: bool,
) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(CoreError::EmptyGrid);
    }
    let mut profile = Vec::with_capacity(xs.len());
    for &x in xs {
        let vals = eval_basis(kind, order, x)?;
        profile.push(vals.iter().map(|v| v * v).sum::<f64>());
    }
    if normalized {
        let max = profile.iter().cloned().fold(f64::MIN, f64::max);
        if max > 0.0 {
            for v in profile.iter_mut() {
                *v /= max;
            }
        }
    }
    Ok(profile)
}

/// Uniform 2001-point grid on [-1, 1]; both endpoints are grid points.
pub fn default_grid() -> Vec<f64> {
    let m = 2000usize;
    (0..=m).map(|i| -1.0 + 2.0 * (i as f64) / (m as f64)).collect()
}

/// Filter coefficients reproducing the response `g(λ) = λ`, when the basis
/// admits one at this order (requires K ≥ 1).
///
/// For Monomial/Chebyshev/Legendre that is the coefficient vector selecting
/// `P_1`; for Bernstein, `θ_k = 2k/K - 1` (the degree-1 combination with
/// `Σ_k B_k(t)(2k/K - 1) = 2t - 1 = x`). Rescaled bases scale the
/// coefficients by the rescale divisor so the response is unchanged.
pub fn identity_filter_coeffs(kind: BasisKind, order: usize) -> Option<Vec<f64>> {
    if order < 1 {
        return None;
    }
    let mut theta = vec![0.0f64; order + 1];
    match kind.family {
        BasisFamily::Bernstein => {
            for (k, t) in theta.iter_mut().enumerate() {
                *t = 2.0 * (k as f64) / (order as f64) - 1.0;
            }
        }
        _ => theta[1] = 1.0,
    }
    let d = kind.rescale_divisor(order);
    if d != 1.0 {
        for t in theta.iter_mut() {
            *t *= d;
        }
    }
    Some(theta)
}

/// Generalized Vandermonde matrix: entry `(i, k)` is `P_k(λ_i)`.
///
/// Row norms `‖v_i‖_2` and the (2,∞)-norm (the maximum row norm) are
/// computed once at construction since every bound consumes them.
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    values: Array2<f64>,
    row_norms: Array1<f64>,
    two_inf_norm: f64,
    kind: BasisKind,
    order: usize,
}

impl BasisMatrix {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row_norms(&self) -> &Array1<f64> {
        &self.row_norms
    }

    /// `‖V_P‖_{2,∞} = max_i ‖v_i‖_2`.
    pub fn two_inf_norm(&self) -> f64 {
        self.two_inf_norm
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_rows(&self) -> usize {
        self.values.nrows()
    }

    /// Frequency response `V_P θ` for a coefficient vector.
    pub fn response(&self, theta: &Array1<f64>) -> Array1<f64> {
        self.values.dot(theta)
    }
}

/// Build the Vandermonde matrix of a basis over the graph eigenvalues.
pub fn vandermonde(kind: BasisKind, order: usize, eigenvalues: &Array1<f64>) -> Result<BasisMatrix> {
    check_order(order)?;
    let n = eigenvalues.len();
    if n == 0 {
        return Err(CoreError::EmptyGrid);
    }
    let mut values = Array2::<f64>::zeros((n, order + 1));
    let mut row_norms = Array1::<f64>::zeros(n);
    let mut two_inf = 0.0f64;
    for (i, &lambda) in eigenvalues.iter().enumerate() {
        let vals = eval_basis(kind, order, lambda)?;
        let norm = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (k, &v) in vals.iter().enumerate() {
            values[(i, k)] = v;
        }
        row_norms[i] = norm;
        two_inf = two_inf.max(norm);
    }
    Ok(BasisMatrix {
        values,
        row_norms,
        two_inf_norm: two_inf,
        kind,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn plain(family: BasisFamily) -> BasisKind {
        BasisKind::new(family)
    }

    #[test]
    fn chebyshev_known_values() {
        let v = eval_basis(plain(BasisFamily::Chebyshev), 3, 0.5).unwrap();
        assert_eq!(v, vec![1.0, 0.5, -0.5, -1.0]);
    }

    #[test]
    fn bernstein_known_values() {
        let v = eval_basis(plain(BasisFamily::Bernstein), 2, 0.0).unwrap();
        assert_eq!(v, vec![0.25, 0.5, 0.25]);
    }

    #[test]
    fn legendre_at_one_is_all_ones() {
        let v = eval_basis(plain(BasisFamily::Legendre), 2, 1.0).unwrap();
        assert_eq!(v, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn monomial_known_values() {
        let v = eval_basis(plain(BasisFamily::Monomial), 2, 0.5).unwrap();
        assert_eq!(v, vec![1.0, 0.5, 0.25]);
    }

    #[test]
    fn rejects_out_of_domain_and_large_order() {
        assert!(matches!(
            eval_basis(plain(BasisFamily::Monomial), 2, 1.1),
            Err(CoreError::ArgumentOutOfDomain(_))
        ));
        assert!(matches!(
            eval_basis(plain(BasisFamily::Monomial), 21, 0.0),
            Err(CoreError::OrderTooLarge(21, MAX_ORDER))
        ));
        // Small excursions are clamped.
        let v = eval_basis(plain(BasisFamily::Monomial), 1, 1.0 + 5e-10).unwrap();
        assert_eq!(v, vec![1.0, 1.0]);
    }

    #[test]
    fn vandermonde_monomial_example() {
        let vp = vandermonde(plain(BasisFamily::Monomial), 2, &array![1.0, 0.0]).unwrap();
        assert_eq!(vp.values().row(0).to_vec(), vec![1.0, 1.0, 1.0]);
        assert_eq!(vp.values().row(1).to_vec(), vec![1.0, 0.0, 0.0]);
        assert!((vp.two_inf_norm() - 3.0f64.sqrt()).abs() < 1e-15);
        assert!((vp.row_norms()[0] - 3.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_two_inf_at_endpoints() {
        let eig = array![-1.0, -0.3, 0.0, 0.7, 1.0];
        let vp = vandermonde(plain(BasisFamily::Chebyshev), 10, &eig).unwrap();
        assert!((vp.two_inf_norm() - 11.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bernstein_two_inf_at_most_one() {
        let eig = array![-1.0, -0.9, -0.2, 0.1, 0.4, 0.99, 1.0];
        for k in [1usize, 3, 10, 20] {
            let vp = vandermonde(plain(BasisFamily::Bernstein), k, &eig).unwrap();
            assert!(vp.two_inf_norm() <= 1.0 + 1e-12, "K={k}");
        }
    }

    #[test]
    fn chebyshev_profile_midpoint() {
        let p = amplification_profile(plain(BasisFamily::Chebyshev), 10, &[0.0], false).unwrap();
        assert_eq!(p[0], 6.0);
        let grid = default_grid();
        let norm = amplification_profile(plain(BasisFamily::Chebyshev), 10, &grid, true).unwrap();
        let mid = norm[grid.len() / 2];
        assert!((mid - 6.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn monomial_profile_value() {
        let p = amplification_profile(plain(BasisFamily::Monomial), 2, &[0.5], false).unwrap();
        assert_eq!(p[0], 1.3125);
    }

    #[test]
    fn bernstein_profile_endpoints() {
        let p =
            amplification_profile(plain(BasisFamily::Bernstein), 7, &[-1.0, 1.0], false).unwrap();
        assert_eq!(p, vec![1.0, 1.0]);
    }

    #[test]
    fn endpoint_maximality_all_bases() {
        let grid = default_grid();
        for family in BasisFamily::ALL {
            for k in [0usize, 1, 2, 5, 10, 20] {
                let kind = plain(family);
                let p = amplification_profile(kind, k, &grid, false).unwrap();
                let max = p.iter().cloned().fold(f64::MIN, f64::max);
                let endpoint = kind.endpoint_amplification(k);
                assert!(
                    (max - endpoint).abs() < 1e-10,
                    "{family} K={k}: grid max {max} vs endpoint {endpoint}"
                );
            }
        }
    }

    #[test]
    fn rescaled_profiles_peak_at_one() {
        let grid = default_grid();
        for family in BasisFamily::ALL {
            for k in [1usize, 4, 10, 20] {
                let kind = BasisKind::rescaled(family);
                let p = amplification_profile(kind, k, &grid, false).unwrap();
                let max = p.iter().cloned().fold(f64::MIN, f64::max);
                assert!((max - 1.0).abs() < 1e-10, "{family} K={k}: max {max}");
            }
        }
    }

    #[test]
    fn midspectrum_ordering_matches_uniformity_grouping() {
        let grid = default_grid();
        let mid = grid.len() / 2;
        let at_mid = |family| {
            amplification_profile(plain(family), 10, &grid, true).unwrap()[mid]
        };
        let mono = at_mid(BasisFamily::Monomial);
        let bern = at_mid(BasisFamily::Bernstein);
        let leg = at_mid(BasisFamily::Legendre);
        let cheb = at_mid(BasisFamily::Chebyshev);
        assert!(mono < bern);
        assert!(mono < leg && leg < cheb);
    }

    #[test]
    fn identity_coeffs_reproduce_lambda() {
        for family in BasisFamily::ALL {
            for rescaled in [false, true] {
                let kind = BasisKind { family, rescaled };
                let theta = identity_filter_coeffs(kind, 6).unwrap();
                for &x in &[-1.0, -0.31, 0.0, 0.44, 1.0] {
                    let vals = eval_basis(kind, 6, x).unwrap();
                    let resp: f64 = vals.iter().zip(&theta).map(|(v, t)| v * t).sum();
                    assert!(
                        (resp - x).abs() < 1e-12,
                        "{family} rescaled={rescaled} at x={x}: {resp}"
                    );
                }
            }
        }
        assert!(identity_filter_coeffs(plain(BasisFamily::Bernstein), 0).is_none());
    }

    #[test]
    fn basis_name_round_trip() {
        for family in BasisFamily::ALL {
            assert_eq!(family.name().parse::<BasisFamily>().unwrap(), family);
        }
        assert!("jacobi".parse::<BasisFamily>().is_err());
    }
}
