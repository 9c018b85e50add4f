//! Adaptive Simpson quadrature.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of the local error estimates of accepted panels.
    pub error_estimate: f64,
    pub evaluations: usize,
    /// False when some panel hit the depth limit before meeting tolerance.
    pub converged: bool,
}

const MAX_DEPTH: u32 = 48;
const INITIAL_PANELS: usize = 16;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrates `f` over `[a, b]` by bisecting panels until each one's
/// embedded error estimate (`|S_left + S_right - S| / 15`) is below its share
/// of `rel_tol * |integral|`. Accepted panels get the Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Quadrature {
    if a == b {
        return Quadrature {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    let mut evaluations = 0;
    let mut eval = |x: f64| {
        evaluations += 1;
        f(x)
    };

    // Coarse composite pass to scale the absolute tolerance.
    let width = (b - a) / INITIAL_PANELS as f64;
    let mut panels = Vec::with_capacity(INITIAL_PANELS);
    let mut fa = eval(a);
    let mut coarse = 0.0;
    for i in 0..INITIAL_PANELS {
        let pa = a + width * i as f64;
        let pb = if i + 1 == INITIAL_PANELS {
            b
        } else {
            pa + width
        };
        let fm = eval(0.5 * (pa + pb));
        let fb = eval(pb);
        let whole = simpson(pa, pb, fa, fm, fb);
        coarse += whole;
        panels.push((pa, pb, fa, fm, fb, whole));
        fa = fb;
    }
    let abs_tol = rel_tol * coarse.abs().max(f64::MIN_POSITIVE);
    let total_width = (b - a).abs();

    let mut stack: Vec<Panel> = panels
        .into_iter()
        .rev()
        .map(|(a, b, fa, fm, fb, whole)| Panel {
            a,
            b,
            fa,
            fm,
            fb,
            whole,
            tol: abs_tol * (b - a).abs() / total_width,
            depth: 0,
        })
        .collect();

    let mut value = 0.0;
    let mut error_estimate = 0.0;
    let mut converged = true;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = eval(lm);
        let frm = eval(rm);
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;
        if delta.abs() <= 15.0 * p.tol || p.depth >= MAX_DEPTH {
            if p.depth >= MAX_DEPTH && delta.abs() > 15.0 * p.tol {
                converged = false;
            }
            value += left + right + delta / 15.0;
            error_estimate += delta.abs() / 15.0;
        } else {
            let tol = 0.5 * p.tol;
            let depth = p.depth + 1;
            stack.push(Panel {
                a: m,
                b: p.b,
                fa: p.fm,
                fm: frm,
                fb: p.fb,
                whole: right,
                tol,
                depth,
            });
            stack.push(Panel {
                a: p.a,
                b: m,
                fa: p.fa,
                fm: flm,
                fb: p.fm,
                whole: left,
                tol,
                depth,
            });
        }
    }
    Quadrature {
        value,
        error_estimate,
        evaluations,
        converged,
    }
}
