//! Derivative-free constrained minimization and the joint render-and-match
//! scene refinement.
//!
//! The minimizer follows the COBYLA scheme: it maintains n+1 interpolation
//! points, builds linear models of the objective and constraints from them,
//! steps within a trust radius, and shrinks the radius when the model stops
//! predicting progress. Constraints are inequalities `c(x) >= 0`; an L-infinity
//! penalty with an adaptive multiplier merges them into the acceptance test.

use crate::cadlib::CadLibrary;
use crate::error::{Error, Result};
use crate::features::{self, ExtractConfig, FeatureStack};
use crate::geom::Camera;
use crate::img::GrayImage;
use crate::render;
use crate::scene::Scene;

pub type Constraint = Box<dyn Fn(&[f64]) -> f64>;

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    /// Initial trust-region radius.
    pub rho_beg: f64,
    /// Final trust-region radius.
    pub rho_end: f64,
    /// Maximum number of objective evaluations.
    pub max_evals: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            rho_beg: 0.5,
            rho_end: 1e-6,
            max_evals: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

const FEAS_TOL: f64 = 1e-6;

struct Sample {
    x: Vec<f64>,
    f: f64,
    viol: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve the square system `M g = rhs` by Gaussian elimination with partial
/// pivoting; `None` when effectively singular.
fn solve_linear(m: &[Vec<f64>], rhs: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let k = rhs.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut b: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..k).map(|j| rhs[j][i]).collect())
        .collect();
    let scale = a
        .iter()
        .flat_map(|r| r.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max)
        .max(1e-300);
    for col in 0..n {
        let (piv, pv) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if pv < 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= factor * a[col][c];
            }
            for j in 0..k {
                b[r][j] -= factor * b[col][j];
            }
        }
    }
    let mut x = vec![vec![0.0; n]; k];
    for j in 0..k {
        for row in (0..n).rev() {
            let mut acc = b[row][j];
            for c in row + 1..n {
                acc -= a[row][c] * x[j][c];
            }
            x[j][row] = acc / a[row][row];
        }
    }
    Some(x)
}

/// Linearized worst violation at displacement d: `max(0, -min_j(c0_j + a_j . d))`.
fn model_violation(c0: &[f64], a: &[Vec<f64>], d: &[f64]) -> f64 {
    let mut worst = f64::INFINITY;
    for (j, aj) in a.iter().enumerate() {
        worst = worst.min(c0[j] + dot(aj, d));
    }
    if worst.is_finite() {
        (-worst).max(0.0)
    } else {
        0.0
    }
}

/// Trust-region subproblem: minimize `g . d` subject to the linearized
/// constraints and `|d| <= rho`. Starts from the unconstrained ball optimum
/// and applies cyclic halfspace/ball projections, then projected descent.
fn solve_subproblem(g: &[f64], a: &[Vec<f64>], c0: &[f64], rho: f64) -> Vec<f64> {
    let n = g.len();
    let gn = norm(g);
    let mut d: Vec<f64> = if gn > 1e-300 {
        g.iter().map(|v| -v * rho / gn).collect()
    } else {
        vec![0.0; n]
    };
    if a.is_empty() {
        return d;
    }
    let project = |d: &mut Vec<f64>| {
        for _ in 0..60 {
            let mut worst = (f64::INFINITY, 0usize);
            for (j, aj) in a.iter().enumerate() {
                let v = c0[j] + dot(aj, d);
                if v < worst.0 {
                    worst = (v, j);
                }
            }
            if worst.0 >= -1e-12 {
                break;
            }
            let aj = &a[worst.1];
            let an2 = dot(aj, aj);
            if an2 < 1e-300 {
                break;
            }
            let step = -worst.0 / an2;
            for (di, aji) in d.iter_mut().zip(aj) {
                *di += step * aji;
            }
            let dn = norm(d);
            if dn > rho {
                for di in d.iter_mut() {
                    *di *= rho / dn;
                }
            }
        }
    };
    project(&mut d);
    // projected descent on the objective
    let mut step = 0.5 * rho;
    for _ in 0..40 {
        if gn < 1e-300 {
            break;
        }
        let mut cand: Vec<f64> = d.iter().zip(g).map(|(di, gi)| di - gi * step / gn).collect();
        let dn = norm(&cand);
        if dn > rho {
            for c in cand.iter_mut() {
                *c *= rho / dn;
            }
        }
        project(&mut cand);
        if dot(g, &cand) < dot(g, &d) - 1e-15 && model_violation(c0, a, &cand) <= 1e-9 {
            d = cand;
        } else {
            step *= 0.5;
            if step < 1e-4 * rho {
                break;
            }
        }
    }
    d
}

/// Minimize a black-box objective under inequality constraints (`c(x) >= 0`
/// is feasible) with a linear-interpolation trust-region scheme.
///
/// Deterministic for fixed inputs; never returns a point worse than `x0`.
pub fn minimize(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    constraints: &[Constraint],
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    let n = x0.len();
    let m = constraints.len();
    if opts.max_evals < n + 2 {
        return Err(Error::BudgetTooSmall {
            need: n + 2,
            got: opts.max_evals,
        });
    }
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize, obj: &mut dyn FnMut(&[f64]) -> f64| -> Sample {
        *evals += 1;
        let f = obj(x);
        let mut worst: f64 = 0.0;
        for c in constraints {
            worst = worst.max(-(c(x)));
        }
        Sample {
            x: x.to_vec(),
            f,
            viol: worst.max(0.0),
        }
    };

    // the start must satisfy the constraints
    {
        let mut worst: f64 = 0.0;
        for c in constraints {
            worst = worst.max(-(c(x0)));
        }
        if worst > FEAS_TOL {
            return Err(Error::InfeasibleStart);
        }
    }

    let mut rho = opts.rho_beg;
    let mut mu = 1.0f64;
    let mut points: Vec<Sample> = Vec::with_capacity(n + 1);
    points.push(eval(x0, &mut evals, objective));
    for i in 0..n {
        let mut xi = x0.to_vec();
        xi[i] += rho;
        points.push(eval(&xi, &mut evals, objective));
    }

    let mut best_sample = Sample {
        x: points[0].x.clone(),
        f: points[0].f,
        viol: points[0].viol,
    };
    let consider_best = |s: &Sample, best: &mut Sample| {
        let s_feas = s.viol <= FEAS_TOL;
        let b_feas = best.viol <= FEAS_TOL;
        let better = match (s_feas, b_feas) {
            (true, true) => s.f < best.f,
            (true, false) => true,
            (false, true) => false,
            (false, false) => s.viol < best.viol,
        };
        if better {
            best.x = s.x.clone();
            best.f = s.f;
            best.viol = s.viol;
        }
    };
    for p in &points {
        consider_best(p, &mut best_sample);
    }

    fn merit(s: &Sample, mu: f64) -> f64 {
        s.f + mu * s.viol
    }

    let mut fails = 0usize;
    while evals < opts.max_evals {
        // best vertex first
        let ib = (0..points.len())
            .min_by(|&i, &j| {
                merit(&points[i], mu)
                    .partial_cmp(&merit(&points[j], mu))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        points.swap(0, ib);

        // simplex geometry maintenance
        let dists: Vec<f64> = (1..=n)
            .map(|i| {
                let d: Vec<f64> = points[i]
                    .x
                    .iter()
                    .zip(&points[0].x)
                    .map(|(a, b)| a - b)
                    .collect();
                norm(&d)
            })
            .collect();
        let far = (0..n)
            .max_by(|&i, &j| dists[i].partial_cmp(&dists[j]).unwrap())
            .unwrap();
        if dists[far] > 2.1 * rho {
            // pull the farthest vertex to distance rho along its direction
            let dir: Vec<f64> = points[far + 1]
                .x
                .iter()
                .zip(&points[0].x)
                .map(|(a, b)| (a - b) / dists[far])
                .collect();
            let xg: Vec<f64> = points[0]
                .x
                .iter()
                .zip(&dir)
                .map(|(x, u)| x + u * rho)
                .collect();
            let s = eval(&xg, &mut evals, objective);
            consider_best(&s, &mut best_sample);
            points[far + 1] = s;
            continue;
        }

        // linear models from the simplex edges
        let e: Vec<Vec<f64>> = (1..=n)
            .map(|i| {
                points[i]
                    .x
                    .iter()
                    .zip(&points[0].x)
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect();
        let mut rhs: Vec<Vec<f64>> = Vec::with_capacity(1 + m);
        rhs.push((1..=n).map(|i| points[i].f - points[0].f).collect());
        let c0: Vec<f64> = constraints.iter().map(|c| c(&points[0].x)).collect();
        let mut cvals: Vec<Vec<f64>> = vec![Vec::with_capacity(n); m];
        for i in 1..=n {
            for (j, c) in constraints.iter().enumerate() {
                cvals[j].push(c(&points[i].x) - c0[j]);
            }
        }
        rhs.extend(cvals);
        let solved = solve_linear(&e, &rhs);
        let Some(models) = solved else {
            // degenerate simplex: move the farthest vertex onto a fresh
            // orthogonal direction
            let u = orthogonal_residual_direction(&e);
            let xg: Vec<f64> = points[0]
                .x
                .iter()
                .zip(&u)
                .map(|(x, ui)| x + ui * rho)
                .collect();
            let s = eval(&xg, &mut evals, objective);
            consider_best(&s, &mut best_sample);
            points[far + 1] = s;
            continue;
        };
        let g = &models[0];
        let a = &models[1..];

        let d = solve_subproblem(g, a, &c0, rho);
        let pred_f = -dot(g, &d);
        let viol0 = model_violation(&c0, a, &vec![0.0; n]);
        let viol_d = model_violation(&c0, a, &d);
        let pred_viol = viol0 - viol_d;
        if pred_viol > 1e-12 && pred_f + mu * pred_viol <= 1e-12 {
            mu = (mu * 2.0).max(2.0 * (-pred_f) / pred_viol).min(1e10);
        }
        let pred = pred_f + mu * pred_viol;

        if norm(&d) < 0.1 * rho || pred <= 1e-15 {
            // model sees no progress at this radius
            if rho <= opts.rho_end * (1.0 + 1e-12) {
                break;
            }
            rho = (0.5 * rho).max(opts.rho_end);
            continue;
        }

        let x_new: Vec<f64> = points[0].x.iter().zip(&d).map(|(x, di)| x + di).collect();
        let step_len = norm(&d);
        let s = eval(&x_new, &mut evals, objective);
        consider_best(&s, &mut best_sample);
        let actual = merit(&points[0], mu) - merit(&s, mu);
        let ratio = actual / pred;
        points[far + 1] = s;
        if ratio < 0.1 {
            fails += 1;
            if fails >= 2 {
                fails = 0;
                if rho <= opts.rho_end * (1.0 + 1e-12) {
                    break;
                }
                rho = (0.5 * rho).max(opts.rho_end);
            }
        } else {
            fails = 0;
            // a full, well-predicted step earns a larger radius
            if ratio > 0.7 && step_len > 0.9 * rho {
                rho = (2.0 * rho).min(opts.rho_beg);
            }
        }
    }

    Ok(MinimizeResult {
        x: best_sample.x,
        f: best_sample.f,
        evals,
    })
}

/// A unit direction with a significant component orthogonal to the spanned
/// edge directions (deterministic: first suitable canonical axis).
fn orthogonal_residual_direction(edges: &[Vec<f64>]) -> Vec<f64> {
    let n = edges[0].len();
    // orthonormalize the edges
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for e in edges {
        let mut v = e.clone();
        for b in &basis {
            let p = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= p * bi;
            }
        }
        let nn = norm(&v);
        if nn > 1e-10 {
            for vi in v.iter_mut() {
                *vi /= nn;
            }
            basis.push(v);
        }
    }
    for k in 0..n {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for b in &basis {
            let p = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= p * bi;
            }
        }
        let nn = norm(&v);
        if nn > 1e-6 {
            for vi in v.iter_mut() {
                *vi /= nn;
            }
            return v;
        }
    }
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    v
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    /// Objective evaluation budget (one render per evaluation).
    pub budget: usize,
    /// Trust radii in normalized parameter units.
    pub rho_beg: f64,
    pub rho_end: f64,
    /// Per-axis scale bounds, meters.
    pub scale_min: f64,
    pub scale_max: f64,
    /// Positions may leave the room box by this margin, meters.
    pub position_margin: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            budget: 250,
            rho_beg: 0.2,
            rho_end: 1e-3,
            scale_min: 0.05,
            scale_max: 5.0,
            position_margin: 0.5,
        }
    }
}

/// One objective evaluation on the convergence trace.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub eval: usize,
    pub cost: f64,
    pub per_layer: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub scene: Scene,
    pub trace: Vec<TraceRow>,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub evals: usize,
}

/// Serialize a trace as the comma-separated table written next to pipeline
/// outputs: `iteration,total_cost,layer_0,...`.
pub fn trace_to_csv(trace: &[TraceRow]) -> String {
    let mut out = String::new();
    let layers = trace.first().map_or(0, |r| r.per_layer.len());
    out.push_str("iteration,total_cost");
    for i in 0..layers {
        out.push_str(&format!(",layer_{i}"));
    }
    out.push('\n');
    for row in trace {
        out.push_str(&format!("{},{}", row.eval, row.cost));
        for v in &row.per_layer {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn trace_from_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(Error::Parse(format!("trace line {}: too few fields", i + 1)));
        }
        let eval = fields[0]
            .parse()
            .map_err(|e| Error::Parse(format!("trace line {}: {e}", i + 1)))?;
        let mut vals = Vec::with_capacity(fields.len() - 1);
        for f in &fields[1..] {
            vals.push(
                f.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("trace line {}: {e}", i + 1)))?,
            );
        }
        rows.push(TraceRow {
            eval,
            cost: vals[0],
            per_layer: vals[1..].to_vec(),
        });
    }
    Ok(rows)
}

fn encode(scene: &Scene, diag: f64) -> Vec<f64> {
    let mut x = Vec::with_capacity(scene.objects.len() * 7);
    for po in &scene.objects {
        let o = &po.object;
        x.extend([
            o.position.x / diag,
            o.position.y / diag,
            o.position.z / diag,
            o.scale.x,
            o.scale.y,
            o.scale.z,
            o.yaw / std::f64::consts::PI,
        ]);
    }
    x
}

fn decode(base: &Scene, x: &[f64], diag: f64) -> Scene {
    let mut scene = base.clone();
    for (i, po) in scene.objects.iter_mut().enumerate() {
        let v = &x[i * 7..i * 7 + 7];
        po.object.position.x = v[0] * diag;
        po.object.position.y = v[1] * diag;
        po.object.position.z = v[2] * diag;
        po.object.scale.x = v[3];
        po.object.scale.y = v[4];
        po.object.scale.z = v[5];
        po.object.yaw = (v[6] * std::f64::consts::PI).rem_euclid(std::f64::consts::TAU);
    }
    scene
}

/// Jointly refine all object placements by minimizing the mean per-layer
/// cosine distance between feature stacks of the rendered scene and the
/// input image. The input stack is extracted once; every optimizer
/// evaluation renders the candidate scene.
pub fn refine_scene(
    scene: &Scene,
    camera: &Camera,
    input: &GrayImage,
    library: &CadLibrary,
    extract_cfg: &ExtractConfig,
    cfg: &RefineConfig,
) -> Result<RefineOutcome> {
    if (input.width, input.height) != camera.image_size {
        return Err(Error::DimensionMismatch(format!(
            "input image {}x{} vs camera {}x{}",
            input.width, input.height, camera.image_size.0, camera.image_size.1
        )));
    }
    if scene.objects.is_empty() {
        return Ok(RefineOutcome {
            scene: scene.clone(),
            trace: Vec::new(),
            initial_cost: 0.0,
            final_cost: 0.0,
            evals: 0,
        });
    }
    // resolve models up front so the objective cannot fail
    for po in &scene.objects {
        if library.get(&po.object.model_id).is_none() {
            return Err(Error::UnknownModel(po.object.model_id.clone()));
        }
    }
    let input_stack: FeatureStack = features::extract(input, extract_cfg)?;
    let room = scene.room;
    let lo = room.min();
    let hi = room.max();
    let diag = (room.width().powi(2) + room.depth().powi(2) + room.height.powi(2)).sqrt();

    // start from a clamped copy so the initial point is feasible
    let mut base = scene.clone();
    for po in base.objects.iter_mut() {
        let o = &mut po.object;
        o.scale.x = o.scale.x.clamp(cfg.scale_min, cfg.scale_max);
        o.scale.y = o.scale.y.clamp(cfg.scale_min, cfg.scale_max);
        o.scale.z = o.scale.z.clamp(cfg.scale_min, cfg.scale_max);
        let m = cfg.position_margin;
        o.position.x = o.position.x.clamp(lo.x - m, hi.x + m);
        o.position.y = o.position.y.clamp(lo.y - m, hi.y + m);
        o.position.z = o.position.z.clamp(-m, room.height + m);
    }
    let x0 = encode(&base, diag);

    let mut constraints: Vec<Constraint> = Vec::new();
    for i in 0..base.objects.len() {
        let m = cfg.position_margin;
        let (smin, smax) = (cfg.scale_min, cfg.scale_max);
        for k in 0..3 {
            constraints.push(Box::new(move |x: &[f64]| x[i * 7 + 3 + k] - smin));
            constraints.push(Box::new(move |x: &[f64]| smax - x[i * 7 + 3 + k]));
        }
        let bounds = [
            (lo.x - m, hi.x + m),
            (lo.y - m, hi.y + m),
            (-m, room.height + m),
        ];
        for (k, (bl, bh)) in bounds.into_iter().enumerate() {
            constraints.push(Box::new(move |x: &[f64]| x[i * 7 + k] * diag - bl));
            constraints.push(Box::new(move |x: &[f64]| bh - x[i * 7 + k] * diag));
        }
    }

    let mut trace: Vec<TraceRow> = Vec::new();
    let base_for_obj = base.clone();
    let camera_obj = camera.clone();
    let mut objective = |x: &[f64]| -> f64 {
        let cand = decode(&base_for_obj, x, diag);
        let raster = render::rasterize(&cand, &camera_obj, library)
            .expect("models resolved before refinement");
        let stack = features::extract(&raster.to_color_image().to_gray(), extract_cfg)
            .expect("render matches input dimensions");
        let per_layer = features::cosine_cost_per_layer(&stack, &input_stack)
            .expect("stacks share the extraction config");
        let cost = per_layer.iter().sum::<f64>() / per_layer.len() as f64;
        trace.push(TraceRow {
            eval: trace.len(),
            cost,
            per_layer,
        });
        cost
    };

    let opts = MinimizeOptions {
        rho_beg: cfg.rho_beg,
        rho_end: cfg.rho_end,
        max_evals: cfg.budget,
    };
    let result = minimize(&mut objective, &x0, &constraints, &opts)?;
    let refined = decode(&base, &result.x, diag);
    let initial_cost = trace.first().map_or(0.0, |r| r.cost);
    Ok(RefineOutcome {
        scene: refined,
        trace,
        initial_cost,
        final_cost: result.f,
        evals: result.evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sphere_7d_within_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let c: Vec<f64> = (0..7).map(|_| rng.gen_range(-0.4..0.4)).collect();
        let x0: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cc = c.clone();
        let mut f = move |x: &[f64]| -> f64 {
            x.iter().zip(&cc).map(|(a, b)| (a - b) * (a - b)).sum()
        };
        let res = minimize(
            &mut f,
            &x0,
            &[],
            &MinimizeOptions {
                rho_beg: 0.5,
                rho_end: 1e-7,
                max_evals: 250,
            },
        )
        .unwrap();
        let dist = res
            .x
            .iter()
            .zip(&c)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(dist < 1e-3, "distance to center {dist} after {} evals", res.evals);
        assert!(res.evals <= 250);
    }

    #[test]
    fn rosenbrock_2d() {
        let mut f = |x: &[f64]| -> f64 {
            100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
        };
        let res = minimize(
            &mut f,
            &[-1.2, 1.0],
            &[],
            &MinimizeOptions {
                rho_beg: 0.5,
                rho_end: 1e-9,
                max_evals: 500,
            },
        )
        .unwrap();
        assert!(res.f < 1e-4, "rosenbrock f = {} after {} evals", res.f, res.evals);
    }

    #[test]
    fn constrained_circle_case() {
        let mut f = |x: &[f64]| -> f64 { x[0] + x[1] };
        let cons: Vec<Constraint> = vec![Box::new(|x: &[f64]| 1.0 - x[0] * x[0] - x[1] * x[1])];
        let res = minimize(
            &mut f,
            &[0.0, 0.0],
            &cons,
            &MinimizeOptions {
                rho_beg: 0.5,
                rho_end: 1e-8,
                max_evals: 500,
            },
        )
        .unwrap();
        let s = std::f64::consts::SQRT_2;
        assert!((res.f + s).abs() < 1e-3, "f = {}", res.f);
        assert!((res.x[0] + s / 2.0).abs() < 1e-3);
        assert!((res.x[1] + s / 2.0).abs() < 1e-3);
        // returned point satisfies the constraint
        assert!(1.0 - res.x[0] * res.x[0] - res.x[1] * res.x[1] >= -1e-6);
    }

    #[test]
    fn never_worse_than_start_and_deterministic() {
        let mut evals1 = Vec::new();
        let mut f1 = |x: &[f64]| -> f64 {
            let v = (x[0] - 0.3).powi(2) + (x[1] * x[1] - 0.5).powi(2) + x[2].sin().abs();
            evals1.push(v);
            v
        };
        let opts = MinimizeOptions {
            rho_beg: 0.3,
            rho_end: 1e-6,
            max_evals: 120,
        };
        let r1 = minimize(&mut f1, &[0.9, -0.7, 0.4], &[], &opts).unwrap();
        let f_start = (0.9f64 - 0.3).powi(2) + ((-0.7f64) * (-0.7) - 0.5).powi(2)
            + 0.4f64.sin().abs();
        assert!(r1.f <= f_start);
        let mut evals2 = Vec::new();
        let mut f2 = |x: &[f64]| -> f64 {
            let v = (x[0] - 0.3).powi(2) + (x[1] * x[1] - 0.5).powi(2) + x[2].sin().abs();
            evals2.push(v);
            v
        };
        let r2 = minimize(&mut f2, &[0.9, -0.7, 0.4], &[], &opts).unwrap();
        assert_eq!(r1.x, r2.x);
        assert_eq!(evals1, evals2);
    }

    #[test]
    fn input_validation() {
        let mut f = |x: &[f64]| -> f64 { x[0] };
        assert!(matches!(
            minimize(
                &mut f,
                &[0.0, 0.0, 0.0],
                &[],
                &MinimizeOptions {
                    max_evals: 4,
                    ..Default::default()
                }
            ),
            Err(Error::BudgetTooSmall { .. })
        ));
        let cons: Vec<Constraint> = vec![Box::new(|x: &[f64]| x[0] - 1.0)];
        assert!(matches!(
            minimize(&mut f, &[0.0], &cons, &MinimizeOptions::default()),
            Err(Error::InfeasibleStart)
        ));
    }

    #[test]
    fn trace_csv_round_trip() {
        let trace = vec![
            TraceRow {
                eval: 0,
                cost: 0.5,
                per_layer: vec![0.1, 0.9],
            },
            TraceRow {
                eval: 1,
                cost: 0.25,
                per_layer: vec![0.05, 0.45],
            },
        ];
        let csv = trace_to_csv(&trace);
        let back = trace_from_csv(&csv).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].per_layer, vec![0.05, 0.45]);
    }
}
