use flowlab::*;
use flowlab::field::{pad, curvature_stencils, FieldKind};
use num_complex::Complex64 as C64;
use std::time::Instant;

fn main() {
    let tau = C64::new(0.0, 1.0);
    let b = FactorSystem::atiyah_f2(tau);
    let ctx = BundleContext::new(TorusDomain::new(tau, 64).unwrap(), b).unwrap();
    let h = ctx.canonical_metric().unwrap();
    let reps = 300;

    let t0 = Instant::now();
    for _ in 0..reps {
        let p = pad(h.values(), FieldKind::Metric, ctx.seams()).unwrap();
        std::hint::black_box(&p);
    }
    println!("pad:       {:.3} ms", t0.elapsed().as_secs_f64() * 1000.0 / reps as f64);

    let p = pad(h.values(), FieldKind::Metric, ctx.seams()).unwrap();
    let t0 = Instant::now();
    for _ in 0..reps {
        let s = curvature_stencils(ctx.domain(), &p);
        std::hint::black_box(&s);
    }
    println!("stencils:  {:.3} ms", t0.elapsed().as_secs_f64() * 1000.0 / reps as f64);

    let t0 = Instant::now();
    for _ in 0..reps {
        let k = ctx.mean_curvature(&h).unwrap();
        std::hint::black_box(&k);
    }
    println!("mean_curv: {:.3} ms", t0.elapsed().as_secs_f64() * 1000.0 / reps as f64);

    let dt = flow::time_step(ctx.domain(), 0.35);
    let t0 = Instant::now();
    let _ = flow::run_steps(&ctx, &h, 0.0, dt, reps as u64, Scheme::EulerMult).unwrap();
    println!("full step: {:.3} ms", t0.elapsed().as_secs_f64() * 1000.0 / reps as f64);
}
