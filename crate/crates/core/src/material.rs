//! Material fields (Lamé coefficients, toughness) and time-sampled loading.

use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::expr::Expr;
use crate::geom::Pt;

/// A scalar field on the domain: a constant or an expression in `x, y`,
/// optionally with user-provided analytic gradient expressions.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ScalarField {
    Constant(f64),
    Expr {
        expr: Expr,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grad: Option<[Expr; 2]>,
    },
}

impl ScalarField {
    pub fn constant(v: f64) -> Self {
        ScalarField::Constant(v)
    }

    pub fn eval(&self, p: Pt) -> f64 {
        match self {
            ScalarField::Constant(v) => *v,
            ScalarField::Expr { expr, .. } => expr.eval(p[0], p[1]),
        }
    }

    /// Analytic gradient when available: exactly zero for constants, the
    /// user-provided expressions otherwise.
    pub fn grad_analytic(&self, p: Pt) -> Option<Pt> {
        match self {
            ScalarField::Constant(_) => Some([0.0, 0.0]),
            ScalarField::Expr { grad: Some(g), .. } => {
                Some([g[0].eval(p[0], p[1]), g[1].eval(p[0], p[1])])
            }
            ScalarField::Expr { grad: None, .. } => None,
        }
    }

    /// Gradient, falling back to central differences with the given step.
    pub fn grad(&self, p: Pt, fd_step: f64) -> Pt {
        if let Some(g) = self.grad_analytic(p) {
            return g;
        }
        let h = fd_step;
        [
            (self.eval([p[0] + h, p[1]]) - self.eval([p[0] - h, p[1]])) / (2.0 * h),
            (self.eval([p[0], p[1] + h]) - self.eval([p[0], p[1] - h])) / (2.0 * h),
        ]
    }
}

/// Isotropic plane-strain material with spatially varying Lamé fields and
/// toughness. The stress tensor acts as `C A = lambda tr(A) I + 2 mu A` on
/// symmetric matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaterialModel {
    pub lambda: ScalarField,
    pub mu: ScalarField,
    pub kappa: ScalarField,
    /// Declared toughness bounds `[kappa1, kappa2]` with
    /// `0 < kappa1 <= kappa(x) <= kappa2`.
    pub kappa_bounds: [f64; 2],
}

impl MaterialModel {
    pub fn constant(lambda: f64, mu: f64, kappa: f64) -> Self {
        MaterialModel {
            lambda: ScalarField::constant(lambda),
            mu: ScalarField::constant(mu),
            kappa: ScalarField::constant(kappa),
            kappa_bounds: [kappa, kappa],
        }
    }

    pub fn lame(&self, p: Pt) -> (f64, f64) {
        (self.lambda.eval(p), self.mu.eval(p))
    }

    pub fn kappa_at(&self, p: Pt) -> f64 {
        self.kappa.eval(p)
    }

    /// Validate the ellipticity and toughness hypotheses on a sample grid
    /// over the domain. Returns all violations.
    pub fn validate(&self, domain: &DomainSpec, samples_per_axis: usize) -> Vec<String> {
        let mut problems = Vec::new();
        let [k1, k2] = self.kappa_bounds;
        if !(k1 > 0.0) {
            problems.push(format!("(H4) kappa1 = {k1} must be positive"));
        }
        if k1 > k2 {
            problems.push(format!("(H4) kappa1 = {k1} exceeds kappa2 = {k2}"));
        }
        let (lo, hi) = domain.polygon().bbox();
        let n = samples_per_axis.max(2);
        let mut checked = false;
        for j in 0..n {
            for i in 0..n {
                let p = [
                    lo[0] + (hi[0] - lo[0]) * (i as f64 + 0.5) / n as f64,
                    lo[1] + (hi[1] - lo[1]) * (j as f64 + 0.5) / n as f64,
                ];
                if !domain.contains(p) {
                    continue;
                }
                checked = true;
                let (l, m) = self.lame(p);
                if !(m > 0.0) {
                    problems.push(format!(
                        "(H3) mu({:.4}, {:.4}) = {m} is not positive",
                        p[0], p[1]
                    ));
                }
                if !(l + m > 0.0) {
                    problems.push(format!(
                        "(H3) lambda + mu = {} at ({:.4}, {:.4}) is not positive",
                        l + m,
                        p[0],
                        p[1]
                    ));
                }
                let k = self.kappa_at(p);
                let slack = 1e-9 * k2.abs().max(1.0);
                if k < k1 - slack || k > k2 + slack {
                    problems.push(format!(
                        "(H4) kappa({:.4}, {:.4}) = {k} outside [{k1}, {k2}]",
                        p[0], p[1]
                    ));
                }
                if problems.len() > 8 {
                    problems.push("... further violations suppressed".into());
                    return problems;
                }
            }
        }
        if !checked {
            problems.push("validation grid found no interior sample points".into());
        }
        problems
    }
}

/// A vector field given componentwise by expressions.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VecField(pub ScalarField, pub ScalarField);

impl VecField {
    pub fn zero() -> Self {
        VecField(ScalarField::constant(0.0), ScalarField::constant(0.0))
    }

    pub fn eval(&self, p: Pt) -> Pt {
        [self.0.eval(p), self.1.eval(p)]
    }

    pub fn is_zero(&self) -> bool {
        matches!(
            (&self.0, &self.1),
            (ScalarField::Constant(a), ScalarField::Constant(b)) if *a == 0.0 && *b == 0.0
        )
    }
}

/// One time sample of the scalar load amplitudes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LoadSample {
    pub t: f64,
    /// Amplitude of the boundary displacement profile.
    #[serde(default)]
    pub w: f64,
    /// Amplitude of the body-force profile.
    #[serde(default)]
    pub f: f64,
    /// Amplitude of the surface-traction profile.
    #[serde(default)]
    pub g: f64,
}

/// Time-dependent loading: fixed spatial profiles scaled by piecewise-linear
/// amplitude samples covering `[0, T]`. Time derivatives are the difference
/// quotients of adjacent samples, matching the piecewise-linear rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadTrajectory {
    pub horizon: f64,
    /// Boundary displacement profile; must vanish at distance `> eta` from
    /// the boundary.
    pub w_profile: VecField,
    pub f_profile: VecField,
    pub g_profile: VecField,
    pub samples: Vec<LoadSample>,
}

impl LoadTrajectory {
    /// A pure boundary-displacement ramp `w(t) = t/T * profile`.
    pub fn ramp_w(horizon: f64, w_profile: VecField) -> Self {
        LoadTrajectory {
            horizon,
            w_profile,
            f_profile: VecField::zero(),
            g_profile: VecField::zero(),
            samples: vec![
                LoadSample {
                    t: 0.0,
                    w: 0.0,
                    f: 0.0,
                    g: 0.0,
                },
                LoadSample {
                    t: horizon,
                    w: 1.0,
                    f: 0.0,
                    g: 0.0,
                },
            ],
        }
    }

    pub fn validate(&self, domain: &DomainSpec, eta: f64) -> Vec<String> {
        let mut problems = Vec::new();
        if self.samples.len() < 2 {
            problems.push("loads need at least two time samples".into());
            return problems;
        }
        for w in self.samples.windows(2) {
            if w[1].t <= w[0].t {
                problems.push(format!(
                    "load sample times must increase strictly ({} then {})",
                    w[0].t, w[1].t
                ));
            }
        }
        let t0 = self.samples[0].t;
        let t1 = self.samples.last().unwrap().t;
        if t0 > 0.0 || t1 < self.horizon {
            problems.push(format!(
                "load samples cover [{t0}, {t1}] but the horizon is [0, {}]; gap at {}",
                self.horizon,
                if t0 > 0.0 { 0.0 } else { self.horizon }
            ));
        }
        // Support of w within eta of the boundary, checked on a grid.
        if !self.w_profile.is_zero() {
            let (lo, hi) = domain.polygon().bbox();
            let n = 24;
            let scale = self.w_scale(domain);
            for j in 0..n {
                for i in 0..n {
                    let p = [
                        lo[0] + (hi[0] - lo[0]) * (i as f64 + 0.5) / n as f64,
                        lo[1] + (hi[1] - lo[1]) * (j as f64 + 0.5) / n as f64,
                    ];
                    if !domain.contains(p) || domain.distance_to_boundary(p) <= eta {
                        continue;
                    }
                    let w = self.w_profile.eval(p);
                    if w[0].hypot(w[1]) > 1e-9 * scale {
                        problems.push(format!(
                            "w profile is nonzero at ({:.3}, {:.3}), distance {:.3} > eta from the boundary",
                            p[0], p[1], domain.distance_to_boundary(p)
                        ));
                    }
                }
            }
        }
        problems.truncate(9);
        problems
    }

    fn w_scale(&self, domain: &DomainSpec) -> f64 {
        let (lo, hi) = domain.polygon().bbox();
        let mut s = 0.0f64;
        for j in 0..16 {
            for i in 0..16 {
                let p = [
                    lo[0] + (hi[0] - lo[0]) * i as f64 / 15.0,
                    lo[1] + (hi[1] - lo[1]) * j as f64 / 15.0,
                ];
                let w = self.w_profile.eval(p);
                s = s.max(w[0].hypot(w[1]));
            }
        }
        s.max(1e-300)
    }

    /// Piecewise-linear amplitudes `(w, f, g)` at time `t`.
    pub fn amplitudes(&self, t: f64) -> (f64, f64, f64) {
        let s = &self.samples;
        if t <= s[0].t {
            return (s[0].w, s[0].f, s[0].g);
        }
        if t >= s[s.len() - 1].t {
            let l = &s[s.len() - 1];
            return (l.w, l.f, l.g);
        }
        let i = s.partition_point(|smp| smp.t <= t) - 1;
        let (a, b) = (&s[i], &s[i + 1]);
        let r = (t - a.t) / (b.t - a.t);
        (
            a.w + r * (b.w - a.w),
            a.f + r * (b.f - a.f),
            a.g + r * (b.g - a.g),
        )
    }

    /// Difference-quotient time derivatives of the amplitudes on the sample
    /// interval containing `t` (right-continuous at nodes).
    pub fn amplitude_rates(&self, t: f64) -> (f64, f64, f64) {
        let s = &self.samples;
        let i = s
            .partition_point(|smp| smp.t <= t)
            .clamp(1, s.len() - 1);
        let (a, b) = (&s[i - 1], &s[i]);
        let dt = b.t - a.t;
        ((b.w - a.w) / dt, (b.f - a.f) / dt, (b.g - a.g) / dt)
    }

    pub fn w_at(&self, t: f64, p: Pt) -> Pt {
        let (aw, _, _) = self.amplitudes(t);
        let w = self.w_profile.eval(p);
        [aw * w[0], aw * w[1]]
    }

    pub fn f_at(&self, t: f64, p: Pt) -> Pt {
        let (_, af, _) = self.amplitudes(t);
        let f = self.f_profile.eval(p);
        [af * f[0], af * f[1]]
    }

    pub fn g_at(&self, t: f64, p: Pt) -> Pt {
        let (_, _, ag) = self.amplitudes(t);
        let g = self.g_profile.eval(p);
        [ag * g[0], ag * g[1]]
    }

    pub fn w_dot_at(&self, t: f64, p: Pt) -> Pt {
        let (rw, _, _) = self.amplitude_rates(t);
        let w = self.w_profile.eval(p);
        [rw * w[0], rw * w[1]]
    }

    pub fn f_dot_at(&self, t: f64, p: Pt) -> Pt {
        let (_, rf, _) = self.amplitude_rates(t);
        let f = self.f_profile.eval(p);
        [rf * f[0], rf * f[1]]
    }

    pub fn g_dot_at(&self, t: f64, p: Pt) -> Pt {
        let (_, _, rg) = self.amplitude_rates(t);
        let g = self.g_profile.eval(p);
        [rg * g[0], rg * g[1]]
    }

    /// A copy with every amplitude scaled by `alpha`.
    pub fn scaled(&self, alpha: f64) -> LoadTrajectory {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.w *= alpha;
            s.f *= alpha;
            s.g *= alpha;
        }
        out
    }
}

/// Vertical tension profile on the unit square supported within `depth` of
/// the top and bottom edges: `+1` at the top edge, `-1` at the bottom,
/// linear decay into the bulk. Used by the edge-crack benchmarks.
pub fn unit_square_tension_profile(depth: f64) -> VecField {
    let up = format!("max(0, (y - (1 - {depth}))/{depth}) - max(0, ({depth} - y)/{depth})");
    VecField(
        ScalarField::constant(0.0),
        ScalarField::Expr {
            expr: Expr::parse(&up).expect("static expression"),
            grad: None,
        },
    )
}
