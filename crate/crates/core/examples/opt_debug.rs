// scratch diagnostics for the minimizer (not shipped; removed once tuned)
use roomcad_core::optimize::{minimize, MinimizeOptions};

fn main() {
    let mut best = f64::INFINITY;
    let mut n = 0usize;
    let mut f = |x: &[f64]| -> f64 {
        let v = 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        n += 1;
        if v < best {
            best = v;
            println!("eval {:4}  f {:12.6e}  x ({:+.5}, {:+.5})", n, v, x[0], x[1]);
        }
        v
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
    println!("final f {} at {:?} after {} evals", res.f, res.x, res.evals);
}
