use num_complex::Complex64 as C64;
use std::time::Instant;

fn main() {
    // Straight-line per-cell product phase: 4096 cells x (inverse + 6 mul).
    let n_cells = 4096usize;
    let mut h: Vec<C64> = (0..n_cells * 4)
        .map(|i| C64::new(1.0 + (i as f64 * 0.1).sin() * 0.1, 0.0))
        .collect();
    for c in 0..n_cells {
        h[c * 4 + 0] += C64::new(2.0, 0.0);
        h[c * 4 + 3] += C64::new(2.0, 0.0);
        h[c * 4 + 1] = C64::new(0.1, 0.05);
        h[c * 4 + 2] = h[c * 4 + 1].conj();
    }
    let d1 = h.clone();
    let d2 = h.clone();
    let d3 = h.clone();
    let mut out = vec![C64::new(0.0, 0.0); n_cells * 4];
    let reps = 300;
    let t0 = Instant::now();
    for _ in 0..reps {
        for c in 0..n_cells {
            let hc = &h[c * 4..c * 4 + 4];
            let mut hinv = [C64::new(0.0, 0.0); 4];
            let det = hc[0] * hc[3] - hc[1] * hc[2];
            let inv = C64::new(1.0, 0.0) / det;
            hinv[0] = hc[3] * inv;
            hinv[1] = -hc[1] * inv;
            hinv[2] = -hc[2] * inv;
            hinv[3] = hc[0] * inv;
            let mul2 = |a: &[C64], b: &[C64], o: &mut [C64; 4]| {
                o[0] = a[0] * b[0] + a[1] * b[2];
                o[1] = a[0] * b[1] + a[1] * b[3];
                o[2] = a[2] * b[0] + a[3] * b[2];
                o[3] = a[2] * b[1] + a[3] * b[3];
            };
            let mut t1 = [C64::new(0.0, 0.0); 4];
            let mut t2 = [C64::new(0.0, 0.0); 4];
            let mut t3 = [C64::new(0.0, 0.0); 4];
            mul2(&hinv, &d2[c * 4..c * 4 + 4], &mut t1);
            mul2(&hinv, &d1[c * 4..c * 4 + 4], &mut t2);
            mul2(&t1, &t2, &mut t3);
            mul2(&hinv, &d3[c * 4..c * 4 + 4], &mut t1);
            let mut kraw = [C64::new(0.0, 0.0); 4];
            for i in 0..4 {
                kraw[i] = 2.0 * (t3[i] - t1[i]);
            }
            let conjt = [kraw[0].conj(), kraw[2].conj(), kraw[1].conj(), kraw[3].conj()];
            mul2(&hinv, &conjt, &mut t2);
            mul2(&t2, hc, &mut t1);
            let o = &mut out[c * 4..c * 4 + 4];
            for i in 0..4 {
                o[i] = 0.5 * (kraw[i] + t1[i]);
            }
        }
    }
    println!("straight-line products: {:.3} ms/pass", t0.elapsed().as_secs_f64() * 1000.0 / reps as f64);
}
