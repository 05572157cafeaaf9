//! Orlicz-space machinery: φ-function families, the modular `I^φ`, the
//! Luxemburg norm by bisection, membership probing, and the modular
//! continuity inequality audit.
//!
//! All registered families are convex, so the Luxemburg norm uses the
//! convex form `inf{λ > 0 : I^φ[g/λ] <= 1}`. An infinite modular is an
//! explicit flag, never a sentinel number: divergence means the scaled
//! function is outside the space.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::operator::{SteklovOperator, SteklovParams};
use crate::quad::{self, LineIntegral, QuadratureSpec};
use crate::signals::Signal;

/// Registered φ-function families. `Power` and `Zygmund` satisfy the
/// Δ2-condition; `Exponential` does not, which is what makes modular
/// convergence strictly weaker than norm convergence there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PhiFunction {
    /// `φ(u) = u^p`, `p >= 1` (the `L^p` scale).
    Power { p: f64 },
    /// `φ(u) = u^α log^β(e + u)`, `α >= 1`, `β > 0` (Zygmund spaces).
    Zygmund { alpha: f64, beta: f64 },
    /// `φ(u) = e^{u^α} - 1`, `α > 0` (exponential spaces).
    Exponential { alpha: f64 },
}

impl PhiFunction {
    /// Parses `"power:p=<real>"`, `"zygmund:alpha=<real>,beta=<real>"`, or
    /// `"exp:alpha=<real>"`.
    pub fn from_id(id: &str) -> Result<PhiFunction> {
        let (head, args) = match id.split_once(':') {
            Some((h, a)) => (h, a),
            None => (id, ""),
        };
        let mut params = std::collections::HashMap::new();
        for part in args.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got '{part}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid numeric value '{v}'")))?;
            params.insert(k.trim().to_string(), v);
        }
        let get = |key: &str| -> Result<f64> {
            params
                .get(key)
                .copied()
                .ok_or_else(|| Error::Config(format!("phi '{id}': missing parameter '{key}'")))
        };
        match head {
            "power" => {
                let p = get("p")?;
                if p < 1.0 {
                    return Err(Error::Config(format!("phi '{id}': need p >= 1")));
                }
                Ok(PhiFunction::Power { p })
            }
            "zygmund" => {
                let alpha = get("alpha")?;
                let beta = get("beta")?;
                if alpha < 1.0 || beta <= 0.0 {
                    return Err(Error::Config(format!("phi '{id}': need alpha >= 1 and beta > 0")));
                }
                Ok(PhiFunction::Zygmund { alpha, beta })
            }
            "exp" => {
                let alpha = get("alpha")?;
                if alpha <= 0.0 {
                    return Err(Error::Config(format!("phi '{id}': need alpha > 0")));
                }
                Ok(PhiFunction::Exponential { alpha })
            }
            other => Err(Error::Config(format!("unknown phi family '{other}'"))),
        }
    }

    pub fn id(&self) -> String {
        match self {
            PhiFunction::Power { p } => format!("power:p={p}"),
            PhiFunction::Zygmund { alpha, beta } => format!("zygmund:alpha={alpha},beta={beta}"),
            PhiFunction::Exponential { alpha } => format!("exp:alpha={alpha}"),
        }
    }

    /// `φ(u)` for `u >= 0`.
    pub fn eval(&self, u: f64) -> f64 {
        assert!(u >= 0.0, "φ-functions are defined on [0, ∞)");
        match self {
            PhiFunction::Power { p } => u.powf(*p),
            PhiFunction::Zygmund { alpha, beta } => {
                u.powf(*alpha) * (std::f64::consts::E + u).ln().powf(*beta)
            }
            PhiFunction::Exponential { alpha } => u.powf(*alpha).exp_m1(),
        }
    }

    /// All registered families are convex.
    pub fn is_convex(&self) -> bool {
        true
    }

    /// Whether `φ(2u) <= M φ(u)` for some constant.
    pub fn is_delta2(&self) -> bool {
        !matches!(self, PhiFunction::Exponential { .. })
    }
}

/// Value of the modular `I^φ[λ g]`, finite or flagged infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Modular {
    Finite(f64),
    Infinite,
}

impl Modular {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Modular::Finite(v) => Some(*v),
            Modular::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Modular::Infinite)
    }

    /// Collapse to `f64` with `+∞` for the flag (reporting only).
    pub fn as_f64(&self) -> f64 {
        match self {
            Modular::Finite(v) => *v,
            Modular::Infinite => f64::INFINITY,
        }
    }
}

/// `I^φ[λ g]` with the λ used and the achieved quadrature error.
#[derive(Clone, Copy, Debug)]
pub struct ModularValue {
    pub value: Modular,
    pub lambda: f64,
    pub achieved_error: f64,
}

/// The modular `I^φ[λ g] = ∫ φ(λ |g(x)|) dx`, integrated over the line
/// with breakpoint-aware panels. A divergent tail or a non-finite `φ(λ|g|)`
/// yields the infinite flag.
pub fn modular<G: Fn(f64) -> f64>(
    phi: &PhiFunction,
    g: G,
    lambda: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<ModularValue> {
    if !(lambda > 0.0) {
        return Err(Error::Config("modular scaling λ must be > 0".into()));
    }
    let integrand = |x: f64| phi.eval((lambda * g(x)).abs());
    match quad::integrate_line_with_breakpoints(integrand, breaks, spec) {
        Ok(LineIntegral::Converged { value, abs_error, .. }) => Ok(ModularValue {
            value: Modular::Finite(value.max(0.0)),
            lambda,
            achieved_error: abs_error,
        }),
        Ok(LineIntegral::Divergent { .. }) => Ok(ModularValue {
            value: Modular::Infinite,
            lambda,
            achieved_error: f64::INFINITY,
        }),
        // Overflow of φ(λ|g|) means the modular is infinite in practice.
        Err(Error::NonFiniteIntegrand { .. }) => Ok(ModularValue {
            value: Modular::Infinite,
            lambda,
            achieved_error: f64::INFINITY,
        }),
        Err(e) => Err(e),
    }
}

/// Luxemburg norm `inf{λ > 0 : I^φ[g/λ] <= 1}` by bisection, exploiting the
/// monotone non-increase of `λ ↦ I^φ[g/λ]`. The bracket is found by
/// doubling/halving from λ = 1 (cap 2^64 each way); the result is the
/// feasible endpoint, so `I^φ[g/λ*] <= 1` always holds.
pub fn luxemburg_norm<G: Fn(f64) -> f64>(
    phi: &PhiFunction,
    g: G,
    breaks: &[f64],
    rel_tol: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(rel_tol > 0.0) {
        return Err(Error::Config("luxemburg_norm tolerance must be > 0".into()));
    }
    let feasible = |lambda: f64| -> Result<bool> {
        let m = modular(phi, &g, 1.0 / lambda, breaks, spec)?;
        Ok(match m.value {
            Modular::Finite(v) => v <= 1.0,
            Modular::Infinite => false,
        })
    };

    const CAP: u32 = 64;
    let mut hi = 1.0f64;
    if !feasible(hi)? {
        let mut ok = false;
        for _ in 0..CAP {
            hi *= 2.0;
            if feasible(hi)? {
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::Membership(format!(
                "no λ up to 2^{CAP} gives I^φ[g/λ] <= 1 for {}; g is not in L^φ",
                phi.id()
            )));
        }
    }
    // Shrink the feasible endpoint to bracket the infimum.
    let mut lo = hi;
    let mut bracketed = false;
    for _ in 0..CAP {
        let cand = lo / 2.0;
        if feasible(cand)? {
            lo = cand;
            hi = lo;
        } else {
            bracketed = true;
            lo = cand;
            break;
        }
    }
    if !bracketed {
        // I^φ[g/λ] <= 1 all the way down to 2^-64: numerically the zero
        // function.
        return Ok(0.0);
    }
    while hi - lo > rel_tol * hi.max(1.0 * rel_tol) {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Probes the geometric ladder `2^0, 2^-1, …, 2^-budget` and returns the
/// largest λ with a finite modular `I^φ[λ g]`, or `None` when every probe
/// diverges. This instantiates the "for some λ > 0" quantifier of the
/// Orlicz membership definition.
pub fn find_modular_lambda<G: Fn(f64) -> f64>(
    phi: &PhiFunction,
    g: G,
    breaks: &[f64],
    budget: u32,
    spec: &QuadratureSpec,
) -> Result<Option<f64>> {
    assert!(budget >= 1);
    for i in 0..=budget {
        let lambda = 2f64.powi(-(i as i32));
        if modular(phi, &g, lambda, breaks, spec)?.value.finite().is_some() {
            return Ok(Some(lambda));
        }
    }
    Ok(None)
}

/// Outcome of one modular-inequality check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum InequalityVerdict {
    Pass,
    Fail,
    /// The right-hand modular is infinite: the theorem's precondition is
    /// unmet, so the check is neither pass nor fail.
    Inconclusive,
}

/// Both sides of the modular continuity inequality
/// `I^φ[λ S_w^r f] <= (‖χ‖₁ / M_0(χ)) · r · I^φ[λ (2^r - 1) M_0(χ) f]`.
#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub signal: String,
    pub kernel: String,
    pub phi: String,
    pub r: u32,
    pub w: f64,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub verdict: InequalityVerdict,
}

/// Computes both sides of the modular continuity inequality numerically.
/// Passes when `lhs <= rhs·(1 + 1e-6) + 1e-8`.
pub fn check_modular_inequality(
    phi: &PhiFunction,
    f: &Signal,
    kernel: &Kernel,
    params: SteklovParams,
    lambda: f64,
    spec: &QuadratureSpec,
) -> Result<InequalityReport> {
    let m0 = kernel.m0()?;
    let factor = lambda * (2f64.powi(params.r as i32) - 1.0) * m0;
    let rhs_modular = modular(phi, |x| f.eval(x), factor, &f.breakpoints, spec)?;

    let base = InequalityReport {
        signal: f.id().to_string(),
        kernel: kernel.id().to_string(),
        phi: phi.id(),
        r: params.r,
        w: params.w,
        lambda,
        lhs: f64::NAN,
        rhs: f64::NAN,
        slack: f64::NAN,
        verdict: InequalityVerdict::Inconclusive,
    };
    let rhs_value = match rhs_modular.value {
        Modular::Finite(v) => v,
        Modular::Infinite => return Ok(InequalityReport { rhs: f64::INFINITY, ..base }),
    };
    let rhs = kernel.l1_norm() / m0 * params.r as f64 * rhs_value;

    let op = SteklovOperator::new(f, params, kernel, spec)?;
    let lhs_modular = modular(phi, |x| op.eval(x), lambda, &f.breakpoints, spec)?;
    let lhs = match lhs_modular.value {
        Modular::Finite(v) => v,
        Modular::Infinite => f64::INFINITY,
    };

    let slack = rhs * (1.0 + 1e-6) + 1e-8 - lhs;
    let verdict = if slack >= 0.0 { InequalityVerdict::Pass } else { InequalityVerdict::Fail };
    Ok(InequalityReport { lhs, rhs, slack, verdict, ..base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn indicator01(x: f64) -> f64 {
        if (0.0..=1.0).contains(&x) {
            1.0
        } else {
            0.0
        }
    }

    #[test]
    fn phi_eval_examples() {
        assert_eq!(PhiFunction::Power { p: 2.0 }.eval(3.0), 9.0);
        assert_eq!(PhiFunction::Zygmund { alpha: 1.0, beta: 1.0 }.eval(0.0), 0.0);
        assert_abs_diff_eq!(
            PhiFunction::Exponential { alpha: 1.0 }.eval(1.0),
            std::f64::consts::E - 1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn phi_parsing_and_flags() {
        let p = PhiFunction::from_id("power:p=2").unwrap();
        assert!(p.is_delta2() && p.is_convex());
        let z = PhiFunction::from_id("zygmund:alpha=1,beta=1").unwrap();
        assert!(z.is_delta2());
        let e = PhiFunction::from_id("exp:alpha=1").unwrap();
        assert!(!e.is_delta2());
        assert!(PhiFunction::from_id("power:p=0.5").is_err());
        assert!(PhiFunction::from_id("gamma:a=1").is_err());
    }

    #[test]
    fn modular_closed_forms_on_unit_indicator() {
        let s = spec();
        let breaks = [0.0, 1.0];
        let m = modular(&PhiFunction::Power { p: 2.0 }, indicator01, 1.0, &breaks, &s).unwrap();
        assert_abs_diff_eq!(m.value.finite().unwrap(), 1.0, epsilon = 1e-9);

        let m = modular(&PhiFunction::Zygmund { alpha: 1.0, beta: 1.0 }, indicator01, 1.0, &breaks, &s).unwrap();
        assert_abs_diff_eq!(m.value.finite().unwrap(), (std::f64::consts::E + 1.0).ln(), epsilon = 1e-9);

        let m = modular(&PhiFunction::Exponential { alpha: 1.0 }, indicator01, 1.0, &breaks, &s).unwrap();
        assert_abs_diff_eq!(m.value.finite().unwrap(), std::f64::consts::E - 1.0, epsilon = 1e-9);
    }

    #[test]
    fn modular_divergence_is_flagged() {
        let s = spec();
        // φ(|g|) = 1/(1+|x|) is not integrable.
        let g = |x: f64| 1.0 / (1.0 + x.abs());
        let m = modular(&PhiFunction::Power { p: 1.0 }, g, 1.0, &[], &s).unwrap();
        assert!(m.value.is_infinite());
    }

    #[test]
    fn modular_zero_iff_zero() {
        let s = spec();
        let m = modular(&PhiFunction::Power { p: 2.0 }, |_| 0.0, 1.0, &[], &s).unwrap();
        assert_eq!(m.value.finite().unwrap(), 0.0);
        let m = modular(&PhiFunction::Power { p: 2.0 }, indicator01, 1.0, &[0.0, 1.0], &s).unwrap();
        assert!(m.value.finite().unwrap() > 1e-3);
    }

    #[test]
    fn modular_symmetry_and_convexity() {
        let s = spec();
        let phi = PhiFunction::Zygmund { alpha: 1.0, beta: 1.0 };
        let g = |x: f64| if x.abs() <= 1.0 { 1.0 - x.abs() } else { 0.0 };
        let h = |x: f64| if (0.0..=1.0).contains(&x) { 0.5 } else { 0.0 };
        let breaks = [-1.0, 0.0, 1.0];
        let ig = modular(&phi, g, 1.0, &breaks, &s).unwrap().value.finite().unwrap();
        let ig_neg = modular(&phi, |x| -g(x), 1.0, &breaks, &s).unwrap().value.finite().unwrap();
        assert_abs_diff_eq!(ig, ig_neg, epsilon = 1e-10);

        let ih = modular(&phi, h, 1.0, &breaks, &s).unwrap().value.finite().unwrap();
        for &(a, b) in &[(0.25, 0.75), (0.5, 0.5), (0.9, 0.1)] {
            let mix = modular(&phi, |x| a * g(x) + b * h(x), 1.0, &breaks, &s)
                .unwrap()
                .value
                .finite()
                .unwrap();
            assert!(mix <= a * ig + b * ih + 1e-9, "α = {a}");
        }
    }

    #[test]
    fn luxemburg_closed_forms() {
        let s = spec();
        // Power(p), g = c·1_{[0,L]} → c·L^{1/p}.
        let (c, l, p) = (3.0, 2.0, 2.0);
        let g = move |x: f64| if x >= 0.0 && x <= l { c } else { 0.0 };
        let norm = luxemburg_norm(&PhiFunction::Power { p }, g, &[0.0, l], 1e-8, &s).unwrap();
        assert_abs_diff_eq!(norm, c * l.powf(1.0 / p), epsilon = 1e-7);

        let norm = luxemburg_norm(&PhiFunction::Power { p: 2.0 }, |_| 0.0, &[], 1e-8, &s).unwrap();
        assert_eq!(norm, 0.0);

        // Exponential(1) on the unit indicator: solve e^{1/λ} - 1 = 1.
        let norm =
            luxemburg_norm(&PhiFunction::Exponential { alpha: 1.0 }, indicator01, &[0.0, 1.0], 1e-8, &s).unwrap();
        assert_abs_diff_eq!(norm, 1.0 / 2f64.ln(), epsilon = 1e-7);
    }

    #[test]
    fn luxemburg_consistency_at_the_returned_value() {
        let s = spec();
        let phi = PhiFunction::Zygmund { alpha: 1.0, beta: 1.0 };
        let g = |x: f64| if x.abs() <= 1.0 { 1.0 - x.abs() } else { 0.0 };
        let breaks = [-1.0, 0.0, 1.0];
        let tol = 1e-8;
        let norm = luxemburg_norm(&phi, g, &breaks, tol, &s).unwrap();
        assert!(norm > 0.0);
        let at = |lambda: f64| {
            modular(&phi, g, 1.0 / lambda, &breaks, &s).unwrap().value.finite().unwrap()
        };
        assert!(at(norm * (1.0 + 10.0 * tol)) <= 1.0);
        assert!(at(norm * (1.0 - 10.0 * tol)) > 1.0);
    }

    #[test]
    fn luxemburg_matches_lp_norm() {
        let s = spec();
        for p in [1.0, 2.0, 3.5] {
            let phi = PhiFunction::Power { p };
            let g = |x: f64| if x.abs() <= 1.0 { 1.0 - x.abs() } else { 0.0 };
            let breaks = [-1.0, 0.0, 1.0];
            let norm = luxemburg_norm(&phi, g, &breaks, 1e-8, &s).unwrap();
            let lp = quad::integrate_with_breakpoints(|x| g(x).abs().powf(p), -1.0, 1.0, &[0.0], &s)
                .unwrap()
                .value
                .powf(1.0 / p);
            assert!((norm - lp).abs() / lp < 1e-6, "p = {p}: {norm} vs {lp}");
        }
    }

    #[test]
    fn lambda_ladder_cases() {
        let s = spec();
        // Δ2 family: any λ works, so the ladder returns its top.
        let lam = find_modular_lambda(&PhiFunction::Power { p: 2.0 }, indicator01, &[0.0, 1.0], 10, &s).unwrap();
        assert_eq!(lam, Some(1.0));
        let lam =
            find_modular_lambda(&PhiFunction::Exponential { alpha: 1.0 }, indicator01, &[0.0, 1.0], 10, &s).unwrap();
        assert_eq!(lam, Some(1.0));
        // φ(λ|g|) non-integrable for every probed λ.
        let g = |x: f64| 1.0 / (1.0 + x.abs());
        let lam = find_modular_lambda(&PhiFunction::Power { p: 1.0 }, g, &[], 6, &s).unwrap();
        assert_eq!(lam, None);
    }

    #[test]
    fn membership_error_when_no_lambda_is_feasible() {
        let s = spec();
        // φ(|g|/λ) is non-integrable for every scaling, so g ∉ L^φ.
        let g = |x: f64| x.abs();
        let err = luxemburg_norm(&PhiFunction::Power { p: 1.0 }, g, &[], 1e-8, &s).unwrap_err();
        assert!(matches!(err, Error::Membership(_)));
    }

    #[test]
    fn inequality_examples() {
        let s = spec();
        // f ≡ 0: both sides vanish.
        let zero = Signal::from_spec("const:c=0,B=1").unwrap();
        let hat_kernel = Kernel::from_id("bspline:n=2").unwrap();
        let rep = check_modular_inequality(
            &PhiFunction::Power { p: 2.0 },
            &zero,
            &hat_kernel,
            SteklovParams::new(2, 4.0).unwrap(),
            0.1,
            &s,
        )
        .unwrap();
        assert_eq!(rep.verdict, InequalityVerdict::Pass);
        assert!(rep.lhs.abs() < 1e-8 && rep.rhs.abs() < 1e-8);

        let hat = Signal::from_spec("hat:B=1").unwrap();
        let fejer = Kernel::from_id("fejer").unwrap();
        let rep = check_modular_inequality(
            &PhiFunction::Power { p: 2.0 },
            &hat,
            &fejer,
            SteklovParams::new(2, 4.0).unwrap(),
            0.1,
            &s,
        )
        .unwrap();
        assert_eq!(rep.verdict, InequalityVerdict::Pass);

        let step = Signal::from_spec("step").unwrap();
        let rep = check_modular_inequality(
            &PhiFunction::Zygmund { alpha: 1.0, beta: 1.0 },
            &step,
            &hat_kernel,
            SteklovParams::new(3, 4.0).unwrap(),
            0.05,
            &s,
        )
        .unwrap();
        assert_eq!(rep.verdict, InequalityVerdict::Pass);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn luxemburg_homogeneity(c in prop::sample::select(vec![0.5f64, 2.0, 10.0])) {
            let s = spec();
            let phi = PhiFunction::Power { p: 2.0 };
            let g = |x: f64| if x.abs() <= 1.0 { 1.0 - x.abs() } else { 0.0 };
            let breaks = [-1.0, 0.0, 1.0];
            let base = luxemburg_norm(&phi, g, &breaks, 1e-9, &s).unwrap();
            let scaled = luxemburg_norm(&phi, move |x| c * g(x), &breaks, 1e-9, &s).unwrap();
            prop_assert!((scaled - c.abs() * base).abs() / (c.abs() * base) < 1e-6);
        }
    }
}
