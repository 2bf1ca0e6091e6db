//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use pullin_core::dynamic::{
    backward_second_derivative, simulate, stable_time_step, Drive, DynamicOptions,
};
use pullin_core::lumped::LumpedModel;
use pullin_core::modal::{assemble_modal_system, lowest_modes};
use pullin_core::model::{derived_properties, nondimensionalize, VACUUM_PERMITTIVITY};
use pullin_core::pullin::{find_pullin, lumped_estimate, PullInResult};
use pullin_core::static_solver::{build_grid, solve_static};
use pullin_core::{BeamParams, SolverOptions};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const P: BeamParams = BeamParams::reference();
const UM: f64 = 1e-6;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn tight() -> SolverOptions {
    SolverOptions {
        rel_tolerance: 1e-10,
        max_iterations: 20_000,
        ..Default::default()
    }
}

fn pullin(p: &BeamParams, nodes: usize, tol: f64, opts: &SolverOptions) -> Result<PullInResult, String> {
    let grid = build_grid(nodes, p).map_err(|e| e.to_string())?;
    let hint = 2.0 * lumped_estimate(p).map_err(|e| e.to_string())?;
    find_pullin(p, hint, tol, &grid, opts).map_err(|e| e.to_string())
}

fn tip(p: &BeamParams, v: f64, nodes: usize, opts: &SolverOptions) -> Result<f64, String> {
    let grid = build_grid(nodes, p).map_err(|e| e.to_string())?;
    let s = solve_static(p, v, &grid, opts).map_err(|e| e.to_string())?;
    if !s.converged {
        return Err(format!("no convergence at {v} V"));
    }
    Ok(s.tip())
}

fn strictly(xs: &[f64], increasing: bool) -> bool {
    xs.windows(2)
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

fn spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().cloned().fold(f64::MIN, f64::max);
    let lo = xs.iter().cloned().fold(f64::MAX, f64::min);
    hi / lo - 1.0
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn lambda_of(p: &BeamParams, v: f64) -> f64 {
    let inertia = p.width * p.thickness.powi(3) / 12.0;
    p.permittivity * p.width * p.length.powi(4) * v * v
        / (2.0 * p.youngs * inertia * p.gap.powi(3))
}

fn lumped_closed_forms() -> Outcome {
    let (km, g, a) = (1.0, 2.0 * UM, 1e-8);
    let m = LumpedModel::new(km, a, g, VACUUM_PERMITTIVITY).map_err(|e| e.to_string())?;
    let v = m.pullin_voltage_1d();
    let expected = (8.0 / 27.0 * g.powi(3) * km / (VACUUM_PERMITTIVITY * a)).sqrt();
    let rel = (v / expected - 1.0).abs();
    let y = m.pullin_position().map_err(|e| e.to_string())?;
    check(
        rel <= 1e-6 && format!("{v:.3}") == "5.174" && y == g / 3.0,
        format!("V_PI = {v:.6} V (rel err {rel:.1e}), y_PI = {y:e} m"),
    )
}

fn low_voltage_tip() -> Outcome {
    let s = derived_properties(&P).map_err(|e| e.to_string())?;
    let q = P.permittivity * P.width / (2.0 * P.gap * P.gap);
    let closed = q * P.length.powi(4) / (8.0 * s.bending_stiffness);
    let t = tip(&P, 1.0, 201, &SolverOptions::default())?;
    let rel = (t / closed - 1.0).abs();
    let rel_quoted = (t / 1.384e-9 - 1.0).abs();
    check(
        rel <= 0.02 && rel_quoted <= 0.02,
        format!("tip = {t:.4e} m, closed form {closed:.4e} m, rel {rel:.2e}"),
    )
}

fn width_independence() -> Outcome {
    let widths = [25.0 * UM, 50.0 * UM, 100.0 * UM];
    let grid = build_grid(201, &P).map_err(|e| e.to_string())?;
    let opts = SolverOptions::default();
    let mut worst = 0.0f64;
    for v in [1.0, 10.0, 20.0] {
        let sols: Vec<Vec<f64>> = widths
            .iter()
            .map(|b| solve_static(&P.with_width(*b), v, &grid, &opts).unwrap().deflection)
            .collect();
        for s in &sols[1..] {
            for (a, b) in s.iter().zip(&sols[0]) {
                if *b != 0.0 {
                    worst = worst.max((a / b - 1.0).abs());
                }
            }
        }
    }
    let tol = 1e-3;
    let vs: Vec<f64> = widths
        .iter()
        .map(|b| pullin(&P.with_width(*b), 201, tol, &opts).map(|r| r.v_lower))
        .collect::<Result<_, _>>()?;
    let v_spread = vs.iter().cloned().fold(f64::MIN, f64::max) - vs.iter().cloned().fold(f64::MAX, f64::min);
    check(
        worst <= 1e-10 && v_spread <= tol,
        format!("max rel profile diff {worst:.1e}, V_PI spread {v_spread:.1e} V over {vs:.4?}"),
    )
}

fn monotone_trends() -> Outcome {
    let opts = SolverOptions::default();
    let tol = 1e-3;
    let lengths = [200.0, 225.0, 250.0, 275.0, 300.0];
    let v_l: Vec<f64> = lengths
        .iter()
        .map(|l| pullin(&P.with_length(l * UM), 201, tol, &opts).map(|r| r.v_lower))
        .collect::<Result<_, _>>()?;
    let thick = [2.0, 2.5, 3.0, 3.5, 4.0];
    let v_h: Vec<f64> = thick
        .iter()
        .map(|h| pullin(&P.with_thickness(h * UM), 201, tol, &opts).map(|r| r.v_lower))
        .collect::<Result<_, _>>()?;
    let gaps = [2.0, 2.5, 3.0, 3.5, 4.0];
    let v_fixed = 8.0;
    let tips: Vec<f64> = gaps
        .iter()
        .map(|g| tip(&P.with_gap(g * UM), v_fixed, 201, &opts))
        .collect::<Result<_, _>>()?;
    check(
        strictly(&v_l, false) && strictly(&v_h, true) && strictly(&tips, false),
        format!("V_PI(L) {v_l:.3?}, V_PI(h) {v_h:.3?}, tip(G) at {v_fixed} V {}", sci(&tips)),
    )
}

fn sdof_limit_error() -> Outcome {
    let opts = tight();
    let ratios: Vec<f64> = [200.0, 225.0, 250.0, 275.0, 300.0]
        .iter()
        .map(|l| {
            let p = P.with_length(l * UM);
            let tol = 1e-5 * lumped_estimate(&p).unwrap();
            pullin(&p, 201, tol, &opts).map(|r| r.tip_at_lower / p.gap)
        })
        .collect::<Result<_, _>>()?;
    let s = spread(&ratios);
    check(
        ratios.iter().all(|r| *r > 1.0 / 3.0) && s <= 0.05,
        format!("tip/G at last stable point {ratios:.4?}, spread {s:.1e}"),
    )
}

fn grid_convergence() -> Outcome {
    let opts = tight();
    let t: Vec<f64> = [101, 201, 401]
        .iter()
        .map(|n| tip(&P, 10.0, *n, &opts))
        .collect::<Result<_, _>>()?;
    let order = ((t[0] - t[1]) / (t[1] - t[2])).log2();
    let tol = 1e-4;
    let v201 = pullin(&P, 201, tol, &opts)?.v_lower;
    let v401 = pullin(&P, 401, tol, &opts)?.v_lower;
    let rel = (v201 / v401 - 1.0).abs();
    check(
        order >= 1.8 && rel <= 0.01,
        format!("observed order {order:.3}, V_PI {v201:.4} vs {v401:.4} V (rel {rel:.1e})"),
    )
}

fn modal_anchor() -> Outcome {
    let s = derived_properties(&P).map_err(|e| e.to_string())?;
    let analytic = 1.875104f64.powi(2) * (s.bending_stiffness / (s.line_mass * P.length.powi(4))).sqrt();
    let grid = build_grid(201, &P).map_err(|e| e.to_string())?;
    let mut w1 = vec![];
    for v in [0.0, 5.0, 10.0, 15.0] {
        let sol = solve_static(&P, v, &grid, &tight()).map_err(|e| e.to_string())?;
        let sys = assemble_modal_system(&sol, &P, &grid).map_err(|e| e.to_string())?;
        w1.push(lowest_modes(&sys, 1).map_err(|e| e.to_string())?.fundamental());
    }
    let rel = (w1[0] / analytic - 1.0).abs();
    check(
        rel <= 0.01 && strictly(&w1, false),
        format!("omega1(0 V) = {:.5e} rad/s vs {analytic:.5e} (rel {rel:.1e}); omega1 {}", w1[0], sci(&w1)),
    )
}

fn dynamic_consistency() -> Outcome {
    let grid = build_grid(21, &P).map_err(|e| e.to_string())?;
    let t_star = nondimensionalize(&P, 0.0).map_err(|e| e.to_string())?.t_star;
    let dt = stable_time_step(&P, &grid).map_err(|e| e.to_string())?;
    let opts = DynamicOptions::default();
    let zero = simulate(&P, &Drive::dc(0.0), t_star, dt, &grid, &opts).map_err(|e| e.to_string())?;
    let all_zero = zero.tip_history.iter().all(|y| *y == 0.0);

    let run = simulate(&P, &Drive::dc(1.0), 4.0 * t_star, dt, &grid, &opts).map_err(|e| e.to_string())?;
    let tail = &run.tip_history[5..];
    let hi = tail.iter().cloned().fold(f64::MIN, f64::max);
    let lo = tail.iter().cloned().fold(f64::MAX, f64::min);
    let stat = tip(&P, 1.0, 21, &tight())?;
    let rel = (0.5 * (hi + lo) / stat - 1.0).abs();

    let d2 = backward_second_derivative([16.0, 9.0, 4.0, 1.0, 0.0], 1.0);
    check(
        all_zero && run.diverged_at.is_none() && rel <= 0.01 && d2 == 2.0,
        format!("zero run exact: {all_zero}, midline rel err {rel:.1e}, stencil on t^2 = {d2}"),
    )
}

/// Displacement-controlled reference solve: prescribe the tip deflection,
/// iterate for the voltage and field, and maximise voltage over the tip.
/// Plain five-point central differences with the classical second-order free
/// end (y'' = y''' = 0 by central ghosts) and a dense LU.
struct Oracle {
    p: BeamParams,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl Oracle {
    fn new(p: BeamParams, nodes: usize) -> Oracle {
        let n = nodes - 1;
        let h = p.length / n as f64;
        let ei = p.youngs * p.width * p.thickness.powi(3) / 12.0;
        let scale = ei / h.powi(4);
        let tip = n as isize;
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 1..=tip {
            for (off, c) in [(-2isize, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)] {
                let k = i + off;
                // ghost substitutions: y(-1) = y(1); y(T+1) = 2y(T) - y(T-1);
                // y(T+2) = 4y(T) - 4y(T-1) + y(T-2)
                let terms: Vec<(isize, f64)> = if k == -1 {
                    vec![(1, 1.0)]
                } else if k == tip + 1 {
                    vec![(tip, 2.0), (tip - 1, -1.0)]
                } else if k == tip + 2 {
                    vec![(tip, 4.0), (tip - 1, -4.0), (tip - 2, 1.0)]
                } else {
                    vec![(k, 1.0)]
                };
                for (kk, cc) in terms {
                    if kk > 0 {
                        a[((i - 1) as usize, (kk - 1) as usize)] += c * cc * scale;
                    }
                }
            }
        }
        Oracle { p, lu: a.lu(), n }
    }

    /// Squared voltage that holds the tip at `delta` (m).
    fn v_squared(&self, delta: f64) -> f64 {
        let p = &self.p;
        let per_v2 = p.permittivity * p.width / 2.0;
        let mut y = DVector::<f64>::zeros(self.n);
        let mut v2 = 0.0;
        for _ in 0..200 {
            let rhs = DVector::from_iterator(self.n, y.iter().map(|yi| per_v2 / (p.gap - yi).powi(2)));
            let u = self.lu.solve(&rhs).expect("nonsingular");
            let next = delta / u[self.n - 1];
            let y_new = &u * next;
            let change = (&y_new - &y).amax();
            y = y_new;
            // the dense solve at this size is noisy around 1e-11 relative
            let done = (next - v2).abs() <= 1e-9 * next && change <= 1e-9 * p.gap;
            v2 = next;
            if done {
                break;
            }
        }
        v2
    }

    fn pullin_voltage(&self) -> f64 {
        let g = self.p.gap;
        let (mut a, mut b) = (0.3 * g, 0.6 * g);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (self.v_squared(c), self.v_squared(d));
        while b - a > 1e-5 * g {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = self.v_squared(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = self.v_squared(d);
            }
        }
        fc.max(fd).sqrt()
    }
}

fn cross_solver() -> Outcome {
    let geometries = [
        P,
        P.with_length(200.0 * UM),
        P.with_thickness(2.0 * UM),
        P.with_gap(4.0 * UM),
    ];
    let opts = SolverOptions::default();
    let mut pipe = vec![];
    let mut oracle = vec![];
    for p in &geometries {
        let tol = 1e-4 * lumped_estimate(p).unwrap();
        pipe.push(pullin(p, 201, tol, &opts)?.v_lower);
        oracle.push(Oracle::new(*p, 801).pullin_voltage());
    }
    let rel = (pipe[0] / oracle[0] - 1.0).abs();
    let lam_pipe: Vec<f64> = geometries.iter().zip(&pipe).map(|(p, v)| lambda_of(p, *v)).collect();
    let lam_oracle: Vec<f64> = geometries.iter().zip(&oracle).map(|(p, v)| lambda_of(p, *v)).collect();
    let (sp, so) = (spread(&lam_pipe), spread(&lam_oracle));
    check(
        rel <= 0.02 && sp <= 0.01 && so <= 0.01,
        format!(
            "V_PI {:.4} V vs reference {:.4} V (rel {rel:.1e}); lambda_PI {:.4} (spread {sp:.1e}), reference {:.4} (spread {so:.1e})",
            pipe[0], oracle[0], lam_pipe[0], lam_oracle[0]
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 lumped closed forms", lumped_closed_forms),
        ("2 low-voltage tip", low_voltage_tip),
        ("3 width independence", width_independence),
        ("4 parameter trends", monotone_trends),
        ("5 single-DOF limit error", sdof_limit_error),
        ("6 grid convergence", grid_convergence),
        ("7 modal anchor", modal_anchor),
        ("8 dynamic consistency", dynamic_consistency),
        ("9 cross-solver pull-in", cross_solver),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS  criterion {name} ({secs:.2} s): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  criterion {name} ({secs:.2} s): {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
