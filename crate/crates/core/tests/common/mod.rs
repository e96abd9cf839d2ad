#![allow(dead_code)]

//! Reference values that share no code with the adaptive quadrature.
//!
//! For a rectangular probe every window integrand is a sum of products of
//! two propagators whose arguments are linear in ω, so each ω-integral has a
//! closed form in complex logarithms. The outer Ω-integrals are then taken
//! with a composite trapezoid rule.

use std::io::Write;

use eosq::config::THZ;
use eosq::model::{superop_prefactor, Level, LevelScheme, PhysicalConstants, SuperopIndex, K_B};
use eosq::windows::{Context, Lin, WindowKind, WINDOW_TERMS};
use eosq::{ProbeSpectrum, Sideband, ThzState};
use num_complex::Complex64;

pub const TRAPEZOID_POINTS: usize = 1 << 20;

/// Writes straight to stdout so that the line appears even for passing tests.
pub fn report(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

pub fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Propagator 1/(α ω + β Ω − ω_ab + iγ_ab) as a function of ω.
#[derive(Clone, Copy, Debug)]
enum Prop {
    Const(Complex64),
    /// 1/(α (ω − z))
    Pole { alpha: f64, z: Complex64 },
}

fn prop(scheme: &LevelScheme, pair: (Level, Level), form: Lin, big: f64) -> Prop {
    let w_ab = scheme.omega(pair.0, pair.1);
    let g = scheme.gamma(pair.0, pair.1);
    let shift = Complex64::new(form.big * big - w_ab, g);
    if form.omega == 0.0 {
        Prop::Const(shift.inv())
    } else {
        Prop::Pole {
            alpha: form.omega,
            z: -shift / form.omega,
        }
    }
}

fn log_span(z: Complex64, lo: f64, hi: f64) -> Complex64 {
    // Im(ω − z) never changes sign for real ω, so the argument difference stays
    // inside (−π, π) and one logarithm of the ratio suffices
    let q = (Complex64::new(hi, 0.0) - z) / (Complex64::new(lo, 0.0) - z);
    Complex64::new(0.5 * q.norm_sqr().ln(), q.im.atan2(q.re))
}

/// ∫_lo^hi P₁(ω) P₂(ω) dω in closed form, given log(hi − z) − log(lo − z)
/// for each pole.
fn product_integral(a: (Prop, Complex64), b: (Prop, Complex64), lo: f64, hi: f64) -> Complex64 {
    match (a, b) {
        ((Prop::Const(x), _), (Prop::Const(y), _)) => x * y * (hi - lo),
        ((Prop::Const(x), _), (Prop::Pole { alpha, .. }, l))
        | ((Prop::Pole { alpha, .. }, l), (Prop::Const(x), _)) => x * l / alpha,
        ((Prop::Pole { alpha: a1, z: z1 }, l1), (Prop::Pole { alpha: a2, z: z2 }, l2)) => {
            let k = 1.0 / (a1 * a2);
            let d = z1 - z2;
            if d.norm() < 1e-9 * (z1.norm() + (hi - lo)) {
                let lo_c = Complex64::new(lo, 0.0);
                let hi_c = Complex64::new(hi, 0.0);
                k * ((lo_c - z1).inv() - (hi_c - z1).inv())
            } else {
                k * (l1 - l2) / d
            }
        }
    }
}

/// Nonzero pathways (a, b, μ_gb μ_ba μ_ag).
fn pathways(scheme: &LevelScheme) -> Vec<(Level, Level, f64)> {
    let g = Level::G;
    let mut out = Vec::new();
    for a in [Level::GPrime, Level::F] {
        for b in [Level::GPrime, Level::F] {
            let w = scheme.mu(g, b) * scheme.mu(b, a) * scheme.mu(a, g);
            if w != 0.0 {
                out.push((a, b, w));
            }
        }
    }
    out
}

/// χ⁽²⁾₊ᵣₛ written out from the four Liouville-space pathways per level pair.
pub fn chi_reference(
    scheme: &LevelScheme,
    r: SuperopIndex,
    s: SuperopIndex,
    w2: f64,
    w1: f64,
) -> Complex64 {
    chi_paths(scheme, &pathways(scheme), r, s, w2, w1)
}

fn chi_paths(
    scheme: &LevelScheme,
    paths: &[(Level, Level, f64)],
    r: SuperopIndex,
    s: SuperopIndex,
    w2: f64,
    w1: f64,
) -> Complex64 {
    let i = |a: Level, b: Level, w: f64| {
        Complex64::new(w - scheme.omega(a, b), scheme.gamma(a, b)).inv()
    };
    let (sr, ss) = (r.sgn(), s.sgn());
    let g = Level::G;
    let sum = w2 + w1;
    let mut acc = Complex64::new(0.0, 0.0);
    for &(a, b, w) in paths {
        acc += w
            * (i(b, g, sum) * i(a, g, w1)
                + ss * i(a, b, sum) * i(g, b, w1)
                + sr * ss * i(g, a, sum) * i(g, b, w1)
                + sr * i(a, b, sum) * i(a, g, w1));
    }
    acc * superop_prefactor(r, s)
}

fn slot(kind: WindowKind) -> usize {
    match kind {
        WindowKind::Classical => 0,
        WindowKind::Quantum => 1,
        WindowKind::Cascading => 2,
    }
}

fn domain(probe: &ProbeSpectrum, side: Sideband, big: f64) -> Option<(f64, f64)> {
    let (lo, hi) = probe.support();
    let (lo, hi) = match side {
        Sideband::Minus => (lo + big, hi),
        Sideband::Plus => (lo, hi - big),
    };
    (lo < hi).then_some((lo, hi))
}

/// The window terms flattened into products of distinct propagators, so that
/// each Ω needs one logarithm per distinct pole.
pub struct ClosedForm {
    scheme: LevelScheme,
    probe: ProbeSpectrum,
    chi_prefactor: f64,
    /// (side, level pair, argument)
    props: Vec<(Sideband, (Level, Level), Lin)>,
    /// (side, slot, weight, left, right)
    products: Vec<(Sideband, usize, f64, usize, usize)>,
}

impl ClosedForm {
    pub fn new(ctx: &Context) -> Self {
        let scheme = &ctx.scheme;
        let g = Level::G;
        let dw = ctx.probe.delta_omega();
        let mut props: Vec<(Sideband, (Level, Level), Lin)> = Vec::new();
        let mut index = |side: Sideband, pair: (Level, Level), f: Lin| {
            let key = (side, pair, f);
            if let Some(i) = props.iter().position(|&p| p == key) {
                return i;
            }
            props.push(key);
            props.len() - 1
        };
        let mut products = Vec::new();
        for t in WINDOW_TERMS.iter() {
            let (sr, ss) = (t.r.sgn(), t.s.sgn());
            let (sum, w1) = (t.total(), t.omega1);
            let k = t.coef * superop_prefactor(t.r, t.s) / dw;
            let sl = slot(t.kind);
            for (a, b, w) in pathways(scheme) {
                for (c, p1, p2) in [
                    (1.0, (b, g, sum), (a, g, w1)),
                    (ss, (a, b, sum), (g, b, w1)),
                    (sr * ss, (g, a, sum), (g, b, w1)),
                    (sr, (a, b, sum), (a, g, w1)),
                ] {
                    let i = index(t.side, (p1.0, p1.1), p1.2);
                    let j = index(t.side, (p2.0, p2.1), p2.2);
                    products.push((t.side, sl, k * (w * c), i, j));
                }
            }
        }
        Self {
            scheme: scheme.clone(),
            probe: ctx.probe.clone(),
            chi_prefactor: ctx.consts.chi_prefactor(),
            props,
            products,
        }
    }

    /// (m, p) for D, D_q, D_casc at Ω, rectangular probe only.
    pub fn eval(&self, big: f64) -> [(Complex64, Complex64); 3] {
        let zero = Complex64::new(0.0, 0.0);
        let minus = domain(&self.probe, Sideband::Minus, big);
        let plus = domain(&self.probe, Sideband::Plus, big);
        let bounds = |side: Sideband| if side == Sideband::Minus { minus } else { plus };
        let values: Vec<Option<(Prop, Complex64)>> = self
            .props
            .iter()
            .map(|&(side, pair, f)| {
                let (lo, hi) = bounds(side)?;
                let p = prop(&self.scheme, pair, f, big);
                let l = match p {
                    Prop::Pole { z, .. } => log_span(z, lo, hi),
                    Prop::Const(_) => zero,
                };
                Some((p, l))
            })
            .collect();
        let mut sides = [[zero; 3]; 2];
        for &(side, sl, w, i, j) in &self.products {
            let (Some(a), Some(b)) = (values[i], values[j]) else {
                continue;
            };
            let (lo, hi) = bounds(side).unwrap();
            sides[usize::from(side == Sideband::Plus)][sl] += w * product_integral(a, b, lo, hi);
        }
        let c = self.chi_prefactor;
        [0, 1, 2].map(|k| (sides[0][k] * c, sides[1][k].conj() * c))
    }
}

/// (m, p) for D, D_q, D_casc at Ω, rectangular probe only.
pub fn windows_closed_form(ctx: &Context, big: f64) -> [(Complex64, Complex64); 3] {
    ClosedForm::new(ctx).eval(big)
}

/// The same windows by a composite trapezoid rule in ω with `points`
/// nodes per sideband, for any envelope.
pub fn windows_trapezoid(ctx: &Context, big: f64, points: usize) -> [(Complex64, Complex64); 3] {
    let probe = &ctx.probe;
    let zero = Complex64::new(0.0, 0.0);
    let mut sides = [[zero; 3]; 2];
    let paths = pathways(&ctx.scheme);
    for side in [Sideband::Minus, Sideband::Plus] {
        let Some((lo, hi)) = domain(probe, side, big) else {
            continue;
        };
        let terms: Vec<_> = WINDOW_TERMS.iter().filter(|t| t.side == side).collect();
        let h = (hi - lo) / (points - 1) as f64;
        let norm = probe.energy();
        let s = usize::from(side == Sideband::Plus);
        for i in 0..points {
            let w = lo + h * i as f64;
            let weight = if i == 0 || i == points - 1 { 0.5 * h } else { h };
            // both frequencies lie in the support by construction; clamping keeps
            // rounding at the shifted endpoint from dropping it
            let (slo, shi) = probe.support();
            let partner = (w + side.sgn() * big).clamp(slo, shi);
            let e = probe.amplitude(w.clamp(slo, shi)) * probe.amplitude(partner) / norm;
            if e == 0.0 {
                continue;
            }
            for t in &terms {
                let chi = chi_paths(&ctx.scheme, &paths, t.r, t.s, t.omega2.at(w, big), t.omega1.at(w, big));
                sides[s][slot(t.kind)] += chi * (t.coef * e * weight);
            }
        }
    }
    let c = ctx.consts.chi_prefactor();
    [0, 1, 2].map(|k| (sides[0][k] * c, sides[1][k].conj() * c))
}

fn weighted_factor(thz: &ThzState, big: f64, consts: &PhysicalConstants) -> f64 {
    match thz {
        ThzState::Thermal { temperature } => {
            if big == 0.0 {
                2.0 * K_B * temperature / consts.hbar
            } else {
                big / (consts.hbar * big / (2.0 * K_B * temperature)).tanh()
            }
        }
        ThzState::Vacuum => big,
        ThzState::Occupancy(t) => big * (2.0 * t.at(big) + 1.0),
    }
}

/// The fourteen θ-independent Ω-integrals (classical 2, quantum Ω-weighted 3,
/// quantum (2c₀/L)-weighted 3, cascading 3 + 3) by a composite trapezoid
/// over [0, Ω_max] using the closed-form windows, one array per state.
pub fn moment_coefficients_trapezoid(
    ctx: &Context,
    states: &[ThzState],
    points: usize,
) -> Vec<[Complex64; 14]> {
    let top = ctx.probe.omega_max();
    let h = top / (points - 1) as f64;
    let w_im = 2.0 * ctx.consts.c0 / ctx.consts.length;
    let mut acc = vec![[Complex64::new(0.0, 0.0); 14]; states.len()];
    let plan = ClosedForm::new(ctx);
    for i in 0..points {
        let big = h * i as f64;
        let weight = if i == 0 || i == points - 1 { 0.5 * h } else { h };
        let [d, q, c] = plan.eval(big);
        let prods = |x: (Complex64, Complex64)| [d.0 * x.0, d.0 * x.1 + d.1 * x.0, d.1 * x.1];
        let (qp, cp) = (prods(q), prods(c));
        for (thz, acc) in states.iter().zip(acc.iter_mut()) {
            let t = weighted_factor(thz, big, &ctx.consts);
            acc[0] += Complex64::new(t * (d.0.norm_sqr() + d.1.norm_sqr()), 0.0) * weight;
            acc[1] += t * d.0 * d.1.conj() * weight;
            for k in 0..3 {
                acc[2 + k] += qp[k] * big * weight;
                acc[5 + k] += qp[k] * w_im * weight;
                acc[8 + k] += cp[k] * big * weight;
                acc[11 + k] += cp[k] * w_im * weight;
            }
        }
    }
    acc
}

pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    if b == Complex64::new(0.0, 0.0) {
        a.norm()
    } else {
        (a - b).norm() / b.norm()
    }
}

pub const fn thz(nu: f64) -> f64 {
    nu * THZ
}
