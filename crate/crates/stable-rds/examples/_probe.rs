use stable_rds::maps::MapSpec;
use stable_rds::transfer::{linear_fit, stationary_density, ulam_matrix};

fn main() {
    for (gamma, k) in [(0.25f64, 8192usize), (0.25, 32768), (0.5, 8192)] {
        let m = ulam_matrix(&MapSpec::lsv(gamma).unwrap(), k);
        let sol = stationary_density(&m, 1e-13, 200_000).unwrap();
        let h = &sol.density;
        print!("gamma={gamma} k={k}: local slopes ");
        for (i, j) in [(2usize, 8usize), (8, 32), (32, 128), (128, 512), (512, 2048)] {
            let s = (h.cells()[j] / h.cells()[i]).ln() / (h.x_mid(j) / h.x_mid(i)).ln();
            print!("[{i},{j}]={s:.3} ");
        }
        println!();
        let pts: Vec<(f64, f64)> = (2..64).map(|i| (h.x_mid(i).ln(), h.cells()[i].ln())).collect();
        let (slope, r2) = linear_fit(&pts);
        println!("  fit cells2..64: slope={slope:.4} r2={r2:.4}");
    }
}
