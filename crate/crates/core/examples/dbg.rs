use disclose_core::designer::*;
use disclose_core::measure::*;

fn main() {
    let uniform = MixedDistribution::new(0.0, 1.0, vec![Piece {
        a: 0.0, b: 1.0, form: PieceForm::Affine { start: 0.0, slope: 1.0 },
    }]).unwrap();
    for (starts, seed, iters) in [(24usize, 7u64, 400usize), (64, 1, 800), (64, 99, 800), (128, 2024, 1200)] {
        let cfg = OptimizeConfig { starts, seed, max_iter: iters, ..Default::default() };
        let sol = optimize(&uniform, &cfg).unwrap();
        println!("starts={starts:3} seed={seed:4} iters={iters}: relaxed={:.9} phi_t={:.6} phi_d={:.6} tau=({:.4},{:.4},{:.4},{:.4})",
            sol.relaxed_revenue, sol.structure.fees.phi_t, sol.structure.fees.phi_d,
            sol.params.tau0, sol.params.tau1, sol.params.tau2, sol.params.tau3);
    }
}
