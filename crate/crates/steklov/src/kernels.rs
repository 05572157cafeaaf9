//! Discrete kernels for the sampling series: evaluation, Fourier transforms,
//! discrete moments, and the partition-of-unity certificate.
//!
//! A discrete kernel must be continuous, its integer translates must sum to
//! one (the partition of unity), and some discrete absolute moment must be
//! finite. The certificate checks the partition of unity twice: directly in
//! the time domain, and through the equivalent Fourier condition
//! `χ̂(0) = 1`, `χ̂(2πk) = 0` for `k ≠ 0`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::quad::{self, QuadratureSpec};
use crate::special::{central_bspline, sinc};

/// Default number of scan points in `[0, 1]` for sup estimates over the
/// 1-periodic variable.
pub const DEFAULT_U_POINTS: usize = 257;

/// Registered kernel families.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelFamily {
    /// `F(x) = ½ sinc²(x/2)`, band-limited, decays like `x⁻²`.
    Fejer,
    /// `J_n(x) = c_n sinc^{2n}(x / (2nπα))`, band-limited in `[-1/α, 1/α]`,
    /// decays like `x^{-2n}`. The normalization `c_n` is computed
    /// numerically and cached per `(n, α)`.
    Jackson { n: u32, alpha: f64 },
    /// Central B-spline `M_n`, compactly supported in `[-n/2, n/2]`.
    BSpline { n: u32 },
    /// `2·M_2`: deliberately violates the partition of unity. Kept in the
    /// registry as a negative control for certification.
    ScaledHat,
}

/// Support metadata: compact interval or a polynomial decay exponent.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum Support {
    Compact { a: f64, b: f64 },
    /// `|χ(x)| = O(|x|^{-d})` with `d > 1`.
    Decay { exponent: f64 },
}

/// A registered kernel with evaluation, support/decay metadata, and its
/// closed-form Fourier transform.
#[derive(Clone, Debug)]
pub struct Kernel {
    id: String,
    family: KernelFamily,
    support: Support,
    l1_norm: f64,
    /// Numerical Jackson normalization, `None` for other families.
    jackson_norm: Option<f64>,
}

fn jackson_norm(n: u32, alpha: f64) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u64), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (n, alpha.to_bits());
    if let Some(&c) = cache.lock().unwrap().get(&key) {
        return Ok(c);
    }
    let scale = 2.0 * n as f64 * PI * alpha;
    let spec = QuadratureSpec::default();
    let mass = match quad::integrate_line(|u| sinc(u / scale).powi(2 * n as i32), &spec)? {
        quad::LineIntegral::Converged { value, .. } => value,
        quad::LineIntegral::Divergent { .. } => {
            return Err(Error::numerical(
                format!("normalization integral for jackson:n={n},alpha={alpha} diverged"),
                None,
            ))
        }
    };
    let c = 1.0 / mass;
    cache.lock().unwrap().insert(key, c);
    Ok(c)
}

impl Kernel {
    /// Builds a kernel from its registry id: `"fejer"`,
    /// `"jackson:n=<int>,alpha=<real>"`, `"bspline:n=<int>"`, or the broken
    /// control `"scaled-hat"`.
    pub fn from_id(id: &str) -> Result<Kernel> {
        let (head, args) = match id.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (id, None),
        };
        match head {
            "fejer" => Ok(Kernel {
                id: "fejer".into(),
                family: KernelFamily::Fejer,
                support: Support::Decay { exponent: 2.0 },
                l1_norm: 1.0,
                jackson_norm: None,
            }),
            "jackson" => {
                let kv = parse_kv(args.unwrap_or(""))?;
                let n = get_param(&kv, "n", id)?.round() as i64;
                let alpha = get_param(&kv, "alpha", id)?;
                if n < 1 || alpha < 1.0 {
                    return Err(Error::Config(format!("kernel '{id}': need n >= 1 and alpha >= 1")));
                }
                let n = n as u32;
                let c = jackson_norm(n, alpha)?;
                Ok(Kernel {
                    id: format!("jackson:n={n},alpha={alpha}"),
                    family: KernelFamily::Jackson { n, alpha },
                    support: Support::Decay { exponent: 2.0 * n as f64 },
                    // Nonnegative with a unit integral by construction of c_n.
                    l1_norm: 1.0,
                    jackson_norm: Some(c),
                })
            }
            "bspline" => {
                let kv = parse_kv(args.unwrap_or(""))?;
                let n = get_param(&kv, "n", id)?.round() as i64;
                if n < 1 {
                    return Err(Error::Config(format!("kernel '{id}': need n >= 1")));
                }
                let half = n as f64 / 2.0;
                Ok(Kernel {
                    id: format!("bspline:n={n}"),
                    family: KernelFamily::BSpline { n: n as u32 },
                    support: Support::Compact { a: -half, b: half },
                    l1_norm: 1.0,
                    jackson_norm: None,
                })
            }
            "scaled-hat" => Ok(Kernel {
                id: "scaled-hat".into(),
                family: KernelFamily::ScaledHat,
                support: Support::Compact { a: -1.0, b: 1.0 },
                l1_norm: 2.0,
                jackson_norm: None,
            }),
            other => Err(Error::Config(format!("unknown kernel '{other}'"))),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    /// `χ(x)`. Defined and finite for every real `x`; exactly zero outside a
    /// compact support interval.
    pub fn eval(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::Fejer => 0.5 * sinc(x / 2.0).powi(2),
            KernelFamily::Jackson { n, alpha } => {
                let scale = 2.0 * n as f64 * PI * alpha;
                self.jackson_norm.unwrap() * sinc(x / scale).powi(2 * n as i32)
            }
            KernelFamily::BSpline { n } => central_bspline(n, x),
            KernelFamily::ScaledHat => 2.0 * central_bspline(2, x),
        }
    }

    fn ft_closed_form(&self, v: f64) -> Option<f64> {
        match self.family {
            KernelFamily::Fejer => Some(if v.abs() <= PI { 1.0 - (v / PI).abs() } else { 0.0 }),
            KernelFamily::Jackson { n, alpha } => {
                // FT of sinc^{2n}(x/(2nπα)) is 2nπα·M_{2n}(nαv); scaling by
                // the cached numerical c_n keeps the transform consistent
                // with eval().
                let s = n as f64 * alpha;
                Some(self.jackson_norm.unwrap() * 2.0 * PI * s * central_bspline(2 * n, s * v))
            }
            KernelFamily::BSpline { n } => Some(sinc(v / (2.0 * PI)).powi(n as i32)),
            KernelFamily::ScaledHat => Some(2.0 * sinc(v / (2.0 * PI)).powi(2)),
        }
    }

    /// `χ̂(v)` via the closed form when available, otherwise numerically.
    /// All registered kernels are even and real, so a numerical result with
    /// `|imag| >= abs_tol` is a numerical error.
    pub fn fourier(&self, v: f64, spec: &QuadratureSpec) -> Result<f64> {
        if let Some(val) = self.ft_closed_form(v) {
            return Ok(val);
        }
        let z = self.fourier_numerical(v, spec)?;
        Ok(z.re)
    }

    /// Always-numerical Fourier transform, used to cross-check the closed
    /// forms and for the evenness property.
    pub fn fourier_numerical(&self, v: f64, spec: &QuadratureSpec) -> Result<Complex64> {
        let z = quad::fourier_transform(|x| self.eval(x), v, spec)?;
        if z.im.abs() >= spec.abs_tol {
            return Err(Error::numerical(
                format!("imaginary part {:e} of χ̂({v}) exceeds abs_tol for an even real kernel", z.im),
                Some(z.re),
            ));
        }
        Ok(z)
    }

    /// Leading decay coefficient `C ≈ sup |x|^d |χ(x)|`, probed on a grid.
    /// Returns 0 for compactly supported kernels.
    pub fn decay_coefficient(&self) -> f64 {
        match self.support {
            Support::Compact { .. } => 0.0,
            Support::Decay { exponent } => {
                let mut c = 0.0f64;
                let mut x = 1.0f64;
                while x <= 1000.0 {
                    c = c.max(x.powf(exponent) * self.eval(x).abs());
                    x += 0.25;
                }
                c
            }
        }
    }

    /// Truncation radius such that the integral tail bound
    /// `C ∫_radius^∞ t^{-d} dt` is below `tol`; for compact support, one past
    /// the support edge.
    pub fn truncation_radius(&self, tol: f64) -> i64 {
        match self.support {
            Support::Compact { a, b } => (a.abs().max(b.abs())).ceil() as i64 + 1,
            Support::Decay { exponent } => {
                let c = self.decay_coefficient();
                let r = (c / (tol * (exponent - 1.0))).powf(1.0 / (exponent - 1.0));
                (r.ceil() as i64).max(2)
            }
        }
    }

    /// Tail bound for `Σ_{|k| > radius} |u-k|^α |χ(u-k)|` from the decay
    /// exponent; `0` for compact support, `+∞` when the sum diverges.
    pub fn moment_tail_bound(&self, alpha: f64, radius: i64) -> f64 {
        match self.support {
            Support::Compact { .. } => 0.0,
            Support::Decay { exponent } => {
                if exponent - alpha <= 1.0 {
                    f64::INFINITY
                } else {
                    let c = self.decay_coefficient();
                    let p = exponent - alpha;
                    2.0 * c * (radius as f64).powf(1.0 - p) / (p - 1.0)
                }
            }
        }
    }

    /// Truncated discrete algebraic moment of order `j`:
    /// `Σ_{|k - round(u)| <= radius} (u-k)^j χ(u-k)`.
    pub fn discrete_algebraic_moment(&self, j: u32, u: f64, radius: i64) -> f64 {
        assert!(radius >= 1);
        let center = u.round() as i64;
        let mut sum = 0.0;
        for k in (center - radius)..=(center + radius) {
            let t = u - k as f64;
            let chi = self.eval(t);
            if chi != 0.0 {
                sum += t.powi(j as i32) * chi;
            }
        }
        sum
    }

    fn absolute_moment_at_radius(&self, alpha: f64, u_grid: &[f64], radius: i64) -> f64 {
        let sums = par_map(u_grid, |&u| {
            let center = u.round() as i64;
            let mut sum = 0.0;
            for k in (center - radius)..=(center + radius) {
                let t = u - k as f64;
                let chi = self.eval(t).abs();
                if chi != 0.0 {
                    sum += t.abs().powf(alpha) * chi;
                }
            }
            sum
        });
        sums.into_iter().fold(0.0f64, f64::max)
    }

    /// Lower estimate of the discrete absolute moment `M_α(χ)` as a max over
    /// the given `u` grid (the summand is 1-periodic in `u`, so `[0, 1]`
    /// suffices). Divergence is detected by radius doubling: when successive
    /// doublings stop shrinking the increment, the true moment is infinite
    /// (or convergent too slowly to certify) and a flag is returned instead
    /// of a number.
    pub fn discrete_absolute_moment(&self, alpha: f64, u_grid: &[f64], radius: i64) -> MomentEstimate {
        assert!(!u_grid.is_empty() && radius >= 1 && alpha >= 0.0);
        if let Support::Compact { a, b } = self.support {
            let r = (a.abs().max(b.abs())).ceil() as i64 + 1;
            let value = self.absolute_moment_at_radius(alpha, u_grid, r.max(radius));
            return MomentEstimate::Finite { value, tail_bound: 0.0 };
        }
        const DOUBLINGS: usize = 6;
        let mut prev = self.absolute_moment_at_radius(alpha, u_grid, radius);
        let mut prev_inc = f64::INFINITY;
        let mut r = radius;
        for i in 0..DOUBLINGS {
            r *= 2;
            let cur = self.absolute_moment_at_radius(alpha, u_grid, r);
            let inc = cur - prev;
            if i > 0 && inc > prev_inc * 0.8 && inc > 1e-12 {
                return MomentEstimate::Divergent;
            }
            prev = cur;
            prev_inc = inc;
        }
        let tail_bound = self.moment_tail_bound(alpha, r);
        if !tail_bound.is_finite() {
            return MomentEstimate::Divergent;
        }
        MomentEstimate::Finite { value: prev, tail_bound }
    }

    /// `M_0(χ)` as a plain number; every registered kernel has a finite
    /// zeroth absolute moment.
    pub fn m0(&self) -> Result<f64> {
        let grid = u_grid(DEFAULT_U_POINTS);
        match self.discrete_absolute_moment(0.0, &grid, 256) {
            MomentEstimate::Finite { value, tail_bound } => Ok(value + tail_bound),
            MomentEstimate::Divergent => Err(Error::numerical(
                format!("M_0 estimate for kernel '{}' diverged", self.id),
                None,
            )),
        }
    }

    /// Runs both partition-of-unity checks. The time-domain check scans the
    /// truncated moment `m_0(χ, u)` over a `u` grid; the Fourier check
    /// evaluates `|χ̂(0) - 1|` and `|χ̂(2πk)|` for `1 <= |k| <= k_ft`.
    pub fn certify(
        &self,
        tol_pou: f64,
        tol_ft: f64,
        k_ft: i64,
        spec: &QuadratureSpec,
    ) -> Result<KernelCertificate> {
        if !(tol_pou > 0.0) || !(tol_ft > 0.0) || k_ft < 1 {
            return Err(Error::Config("certification needs positive tolerances and k_ft >= 1".into()));
        }
        let grid = u_grid(DEFAULT_U_POINTS);
        // The truncation itself contributes up to the tail bound, so the
        // radius is chosen for a fraction of the tolerance.
        let radius = self.truncation_radius(tol_pou / 4.0);
        let deviations = par_map(&grid, |&u| (self.discrete_algebraic_moment(0, u, radius) - 1.0).abs());
        let max_pou_deviation = deviations.into_iter().fold(0.0f64, f64::max);
        let time_domain_ok = max_pou_deviation < tol_pou;

        let ft_at_zero = self.fourier(0.0, spec)?;
        let ks: Vec<i64> = (1..=k_ft).flat_map(|k| [-k, k]).collect();
        let ft_zero_residuals: Vec<(i64, f64)> = ks
            .iter()
            .map(|&k| Ok((k, self.fourier(2.0 * PI * k as f64, spec)?.abs())))
            .collect::<Result<_>>()?;
        let ft_ok = (ft_at_zero - 1.0).abs() < tol_ft
            && ft_zero_residuals.iter().all(|&(_, r)| r < tol_ft);

        let moment_alphas = [0.0, 1.0, 2.0];
        let moment_estimates = moment_alphas
            .iter()
            .map(|&alpha| {
                let est = self.discrete_absolute_moment(alpha, &grid, 256);
                MomentRecord::new(alpha, est)
            })
            .collect();

        Ok(KernelCertificate {
            kernel: self.id.clone(),
            partition_of_unity_ok: time_domain_ok && ft_ok,
            time_domain_ok,
            ft_ok,
            max_pou_deviation,
            ft_at_zero,
            ft_zero_residuals,
            moment_estimates,
            truncation_radius_used: radius,
            tolerances: CertificateTolerances {
                tol_pou,
                tol_ft,
                k_ft,
                u_points: DEFAULT_U_POINTS,
                quadrature: spec.clone(),
            },
        })
    }
}

/// Estimate of a discrete absolute moment, or a divergence flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MomentEstimate {
    Finite { value: f64, tail_bound: f64 },
    Divergent,
}

impl MomentEstimate {
    pub fn value(&self) -> Option<f64> {
        match self {
            MomentEstimate::Finite { value, .. } => Some(*value),
            MomentEstimate::Divergent => None,
        }
    }
}

/// One per-α row of the certificate's moment table.
#[derive(Clone, Debug, Serialize)]
pub struct MomentRecord {
    pub alpha: f64,
    pub estimate: Option<f64>,
    pub tail_bound: Option<f64>,
    pub divergent: bool,
}

impl MomentRecord {
    fn new(alpha: f64, est: MomentEstimate) -> Self {
        match est {
            MomentEstimate::Finite { value, tail_bound } => MomentRecord {
                alpha,
                estimate: Some(value),
                tail_bound: Some(tail_bound),
                divergent: false,
            },
            MomentEstimate::Divergent => MomentRecord {
                alpha,
                estimate: None,
                tail_bound: None,
                divergent: true,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateTolerances {
    pub tol_pou: f64,
    pub tol_ft: f64,
    pub k_ft: i64,
    pub u_points: usize,
    pub quadrature: QuadratureSpec,
}

/// Result of [`Kernel::certify`]: both partition-of-unity checks with all
/// tolerances embedded.
#[derive(Clone, Debug, Serialize)]
pub struct KernelCertificate {
    pub kernel: String,
    pub partition_of_unity_ok: bool,
    pub time_domain_ok: bool,
    pub ft_ok: bool,
    pub max_pou_deviation: f64,
    pub ft_at_zero: f64,
    pub ft_zero_residuals: Vec<(i64, f64)>,
    pub moment_estimates: Vec<MomentRecord>,
    pub truncation_radius_used: i64,
    pub tolerances: CertificateTolerances,
}

/// Equispaced scan grid in `[0, 1]`.
pub fn u_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

fn parse_kv(args: &str) -> Result<HashMap<String, f64>> {
    let mut out = HashMap::new();
    for part in args.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (key, val) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got '{part}'")))?;
        let v: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("invalid numeric value '{val}'")))?;
        out.insert(key.trim().to_string(), v);
    }
    Ok(out)
}

fn get_param(kv: &HashMap<String, f64>, key: &str, id: &str) -> Result<f64> {
    kv.get(key)
        .copied()
        .ok_or_else(|| Error::Config(format!("kernel '{id}': missing parameter '{key}'")))
}
