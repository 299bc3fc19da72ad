//! Ooura-Mori double-exponential quadrature for F_beta(omega).
//!
//! The substitution t = (pi/omega) phi(k) with phi(k) = k/(1 - exp(-chi(k)))
//! turns the one-sided Fourier integral into a sum over an integer or
//! half-integer grid whose weights decay double-exponentially on both
//! sides. Node scales a_k and real weights b_k depend only on the grid
//! parity and the step parameter h, so plans are precomputed once and
//! shared by every (beta, omega) evaluation.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::series::{TransformKind, DELTA_SINGLE, EPSILON_DOUBLE};

/// Inner transformation chi(k); both variants satisfy chi(0) = 0 and grow
/// exponentially on either side. Chi1 is the default; the result is
/// insensitive to the choice, which the test suite exploits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChiVariant {
    /// chi_1(k) = 6 sinh(h k)
    Chi1 { h: f64 },
    /// chi_2(k) = 8 h k + (1 - e^{-h k})/(4 gamma_h) + (e^{h k} - 1)/4
    Chi2 { h: f64 },
}

/// Cache index of the variant, ignoring h.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChiKind {
    Chi1,
    Chi2,
}

impl ChiKind {
    pub fn with_h(self, h: f64) -> ChiVariant {
        match self {
            ChiKind::Chi1 => ChiVariant::Chi1 { h },
            ChiKind::Chi2 => ChiVariant::Chi2 { h },
        }
    }
}

impl ChiVariant {
    pub fn h(&self) -> f64 {
        match *self {
            ChiVariant::Chi1 { h } | ChiVariant::Chi2 { h } => h,
        }
    }

    fn gamma_h(h: f64) -> f64 {
        (1.0 + (1.0 + PI / h).ln() / (4.0 * h)).sqrt()
    }

    pub fn chi(&self, k: f64) -> f64 {
        match *self {
            ChiVariant::Chi1 { h } => 6.0 * (h * k).sinh(),
            ChiVariant::Chi2 { h } => {
                let g = Self::gamma_h(h);
                8.0 * h * k + (-f64::exp_m1(-h * k)) / (4.0 * g) + f64::exp_m1(h * k) / 4.0
            }
        }
    }

    pub fn chi_prime(&self, k: f64) -> f64 {
        match *self {
            ChiVariant::Chi1 { h } => 6.0 * h * (h * k).cosh(),
            ChiVariant::Chi2 { h } => {
                let g = Self::gamma_h(h);
                8.0 * h + h * (-h * k).exp() / (4.0 * g) + h * (h * k).exp() / 4.0
            }
        }
    }

    /// chi''(0), needed for the removable singularity of phi'.
    fn chi_pp_zero(&self) -> f64 {
        match *self {
            ChiVariant::Chi1 { .. } => 0.0,
            ChiVariant::Chi2 { h } => {
                let g = Self::gamma_h(h);
                h * h * (0.25 - 0.25 / g)
            }
        }
    }
}

/// phi(k) = k / (1 - exp(-chi(k))), with phi(0) = 1/chi'(0).
///
/// Total on finite input: tends to 0 double-exponentially for k -> -inf
/// and to k for k -> +inf.
pub fn phi(k: f64, chi: &ChiVariant) -> f64 {
    if k == 0.0 {
        return 1.0 / chi.chi_prime(0.0);
    }
    let c = chi.chi(k);
    if c >= 0.0 {
        k / (-f64::exp_m1(-c))
    } else {
        // rewrite in terms of v = e^chi to avoid overflowing e^{-chi}
        let v = c.exp();
        -k * v / (-f64::exp_m1(c))
    }
}

/// phi'(k), with phi'(0) = 1/2 - chi''(0) / (2 chi'(0)^2).
pub fn phi_prime(k: f64, chi: &ChiVariant) -> f64 {
    if k == 0.0 {
        let c1 = chi.chi_prime(0.0);
        return 0.5 - chi.chi_pp_zero() / (2.0 * c1 * c1);
    }
    let c = chi.chi(k);
    let cp = chi.chi_prime(k);
    if c >= 0.0 {
        let u = (-c).exp();
        let d = -f64::exp_m1(-c);
        1.0 / d - k * cp * u / (d * d)
    } else {
        let v = c.exp();
        let e = -f64::exp_m1(c);
        -v / e - k * cp * v / (e * e)
    }
}

/// Argument of the stable sine form: theta(k) = pi k / (e^{chi(k)} - 1),
/// continued with theta(0) = pi/chi'(0).
fn theta(k: f64, chi: &ChiVariant) -> f64 {
    if k == 0.0 {
        return PI / chi.chi_prime(0.0);
    }
    let c = chi.chi(k);
    if c > 700.0 {
        return 0.0;
    }
    PI * k / f64::exp_m1(c)
}

/// The relevant part of the complex phase factor c_k = exp(i pi phi(k)):
/// Re c_k on the half-integer grid (cosine), Im c_k on the integer grid
/// (sine). Uses the rewrite c_k = exp(i pi k) exp(i theta(k)) so that no
/// large argument ever reaches the trigonometric functions:
///
///   Im c_k = (-1)^k sin(theta_k),   integer k,
///   Re c_k = (-1)^(floor(k)+1) sin(theta_k),   half-integer k.
///
/// (The published form of the second identity lacks the +1 in the sign;
/// exp(i pi (m + 1/2)) = (-1)^m i makes the real part -(-1)^m sin(theta),
/// which the beta = 1 Lorentzian anchor confirms.)
pub fn phase_part(kind: TransformKind, k: f64, chi: &ChiVariant) -> f64 {
    let th = theta(k, chi);
    match kind {
        TransformKind::Cosine => {
            let m = k.floor() as i64;
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            -sign * th.sin()
        }
        TransformKind::Sine => {
            let m = k.round() as i64;
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            sign * th.sin()
        }
    }
}

/// Precomputed nodes for one (kind, chi, h) combination: node scales
/// a_k = pi phi(k) and real weights b_k = phi'(k) * (relevant part of c_k),
/// for k on the parity grid from n_minus to n_plus.
#[derive(Debug, Clone)]
pub struct DEPlan {
    pub kind: TransformKind,
    pub chi: ChiVariant,
    pub n_minus: f64,
    pub n_plus: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanError {
    /// the weight envelope did not fall below delta within |k| <= 200/h
    NoConvergence,
}

/// Walks the grid outward from the center until the weight envelope falls
/// below `delta` on each side. The envelope phi'(k)*min(1, |theta(k)|)
/// dominates |b_k| and decreases monotonically in the tails, so the walk
/// cannot stop early at an accidental zero of the oscillating factor.
pub fn build_plan(kind: TransformKind, chi: ChiVariant, delta: f64) -> Result<DEPlan, PlanError> {
    let h = chi.h();
    let k0 = match kind {
        TransformKind::Cosine => 0.5,
        TransformKind::Sine => 0.0,
    };
    let cap = (200.0 / h).ceil();

    let envelope = |k: f64| phi_prime(k, &chi) * theta(k, &chi).abs().min(1.0);

    let mut upper = Vec::new();
    let mut i = 0i64;
    loop {
        let k = k0 + i as f64;
        upper.push(k);
        if envelope(k) < delta {
            break;
        }
        i += 1;
        if k0 + i as f64 > cap {
            return Err(PlanError::NoConvergence);
        }
    }
    let mut lower = Vec::new();
    let mut i = 1i64;
    loop {
        let k = k0 - i as f64;
        lower.push(k);
        if phi_prime(k, &chi) < delta {
            break;
        }
        i += 1;
        if k0 - i as f64 < -cap {
            return Err(PlanError::NoConvergence);
        }
    }
    lower.reverse();
    lower.extend(upper);

    let a: Vec<f64> = lower.iter().map(|&k| PI * phi(k, &chi)).collect();
    let b: Vec<f64> = lower
        .iter()
        .map(|&k| phi_prime(k, &chi) * phase_part(kind, k, &chi))
        .collect();
    Ok(DEPlan {
        kind,
        chi,
        n_minus: lower[0],
        n_plus: *lower.last().unwrap(),
        a,
        b,
    })
}

/// What the trapezoidal sum integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrand {
    /// f_beta(t) = exp(-t^beta)
    Plain,
    /// f_beta(t) - f_2(t); the analytic Gaussian transform is added back
    /// by the driver
    GaussSubtracted,
}

/// (pi/omega) * sum b_k g(a_k/omega), plus the largest single-term
/// magnitude for the cancellation guard. Underflowed integrand values
/// contribute exactly 0.
pub fn trapezoid_sum(plan: &DEPlan, beta: f64, omega: f64, integrand: Integrand) -> (f64, f64) {
    let mut sum = 0.0;
    let mut z = 0.0f64;
    for (&a, &b) in plan.a.iter().zip(&plan.b) {
        let t = a / omega;
        let g = match integrand {
            Integrand::Plain => (-t.powf(beta)).exp(),
            // powf for both exponents makes the difference vanish
            // identically at beta = 2
            Integrand::GaussSubtracted => (-t.powf(beta)).exp() - (-t.powf(2.0)).exp(),
        };
        let term = b * g;
        sum += term;
        z = z.max(term.abs());
    }
    let scale = PI / omega;
    (scale * sum, scale * z)
}

/// Analytic cosine transform at beta = 2: Q_2(w) = (sqrt(pi)/2) e^{-w^2/4}.
pub fn gaussian_q2(omega: f64) -> f64 {
    0.5 * PI.sqrt() * (-0.25 * omega * omega).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureFailure {
    CancellationLoss,
    NoConvergence,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: f64,
    pub h_final: f64,
    /// integrand evaluations across all step widths
    pub evaluations: u32,
    pub converged: bool,
    /// relative change between the final two h-levels (on success <= delta)
    pub bound: f64,
    pub failure: Option<QuadratureFailure>,
    /// true when the Gaussian-subtraction path produced the value
    pub subtracted: bool,
}

/// Step-width ladder: h_0 = 1/2, halved per level.
pub const H_LEVELS: usize = 6;
pub const H0: f64 = 0.5;

/// Above this beta the cosine transform always integrates f_beta - f_2;
/// below, subtraction is only the retry after a cancellation failure.
pub const BETA_SUB: f64 = 1.75;

/// Cached plans are cut off far below delta: the cutoff acts as an
/// absolute error on the sum, and quadrature is used exactly where
/// omega*Q/pi (the natural scale of the weighted sum) can be several
/// orders below its peak.
const PLAN_DELTA: f64 = 1e-16;

fn cached_plan(kind: TransformKind, chi_kind: ChiKind, level: usize) -> &'static DEPlan {
    static PLANS: [[[OnceLock<DEPlan>; H_LEVELS]; 2]; 2] =
        [[[const { OnceLock::new() }; H_LEVELS]; 2]; 2];
    let ki = match kind {
        TransformKind::Cosine => 0,
        TransformKind::Sine => 1,
    };
    let ci = match chi_kind {
        ChiKind::Chi1 => 0,
        ChiKind::Chi2 => 1,
    };
    PLANS[ki][ci][level].get_or_init(|| {
        let h = H0 / (1u32 << level) as f64;
        build_plan(kind, chi_kind.with_h(h), PLAN_DELTA)
            .expect("plan construction cannot fail for the built-in h ladder")
    })
}

/// Evaluates F_beta(omega) for one transform kind by trapezoidal sums at
/// decreasing step widths until two successive levels agree to `delta`
/// in relative terms and the cancellation guard passes.
pub fn de_transform(kind: TransformKind, beta: f64, omega: f64, delta: f64) -> QuadratureResult {
    de_transform_with(kind, beta, omega, delta, ChiKind::Chi1)
}

pub fn de_transform_with(
    kind: TransformKind,
    beta: f64,
    omega: f64,
    delta: f64,
    chi_kind: ChiKind,
) -> QuadratureResult {
    let always_subtract = kind == TransformKind::Cosine && beta >= BETA_SUB;
    let integrand = if always_subtract { Integrand::GaussSubtracted } else { Integrand::Plain };
    let first = ladder(kind, beta, omega, delta, chi_kind, integrand, 0);
    if first.failure == Some(QuadratureFailure::CancellationLoss)
        && kind == TransformKind::Cosine
        && beta > 1.0
        && integrand == Integrand::Plain
    {
        // cancellation near the Gaussian limit: retry on f_beta - f_2
        return ladder(kind, beta, omega, delta, chi_kind, Integrand::GaussSubtracted, first.evaluations);
    }
    first
}

fn ladder(
    kind: TransformKind,
    beta: f64,
    omega: f64,
    delta: f64,
    chi_kind: ChiKind,
    integrand: Integrand,
    evals_before: u32,
) -> QuadratureResult {
    let subtracted = integrand == Integrand::GaussSubtracted;
    let offset = if subtracted { gaussian_q2(omega) } else { 0.0 };
    let mut evaluations = evals_before;
    let mut prev: Option<f64> = None;
    let mut h = H0;
    let mut last_change = f64::INFINITY;
    let mut best = 0.0;

    for level in 0..H_LEVELS {
        h = H0 / (1u32 << level) as f64;
        let owned;
        let plan: &DEPlan = if delta >= DELTA_SINGLE {
            cached_plan(kind, chi_kind, level)
        } else {
            owned = build_plan(kind, chi_kind.with_h(h), (delta * 1e-9).min(PLAN_DELTA))
                .expect("plan construction cannot fail for the built-in h ladder");
            &owned
        };
        evaluations += plan.a.len() as u32;
        let (sum, z) = trapezoid_sum(plan, beta, omega, integrand);
        let total = sum + offset;
        best = total;
        if let Some(p) = prev {
            let change = if total == 0.0 && p == 0.0 {
                0.0
            } else {
                ((total - p) / total).abs()
            };
            last_change = change;
            if change <= delta {
                // guard against cancellation of huge alternating terms
                if EPSILON_DOUBLE * z < delta * total.abs() || z == 0.0 {
                    return QuadratureResult {
                        value: total,
                        h_final: h,
                        evaluations,
                        converged: true,
                        bound: change,
                        failure: None,
                        subtracted,
                    };
                }
                return QuadratureResult {
                    value: total,
                    h_final: h,
                    evaluations,
                    converged: false,
                    bound: change,
                    failure: Some(QuadratureFailure::CancellationLoss),
                    subtracted,
                };
            }
        }
        prev = Some(total);
    }
    QuadratureResult {
        value: best,
        h_final: h,
        evaluations,
        converged: false,
        bound: last_change,
        failure: Some(QuadratureFailure::NoConvergence),
        subtracted,
    }
}
