use flowlab::*;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

fn main() {
    let tau = C64::new(0.0, 1.0);
    for d in [-2i64, -1, 1, 2, 3] {
        for n in [64usize, 128] {
            let b = FactorSystem::line(d, tau);
            let ctx = BundleContext::new(TorusDomain::new(tau, n).unwrap(), b).unwrap();
            let h = ctx.canonical_metric().unwrap();
            let dev = ctx.sup_deviation(&h, 2.0 * PI * d as f64).unwrap();
            let deg = ctx.degree(&h).unwrap().degree;
            println!("d={d:+} N={n:3}  sup|K-2pid|={dev:.3e}  deg err={:.3e}", (deg - d as f64).abs());
        }
    }
    // degree under perturbation
    let b = FactorSystem::line(3, tau);
    let ctx = BundleContext::new(TorusDomain::new(tau, 64).unwrap(), b).unwrap();
    let h = ctx.canonical_metric().unwrap();
    let hp = ctx.perturb(&h, 11, 0.4, false).unwrap();
    println!("deg canon={:.9}  pert={:.9}", ctx.degree(&h).unwrap().degree, ctx.degree(&hp).unwrap().degree);
}
