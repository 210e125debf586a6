//! Assigning users to bands: uniform diversity, priority-weighted diversity,
//! and the Nyquist sampling rate each layout demands per user.

use mbsense::coop::{assign_priority, assign_uniform, sampling_cost};

fn main() -> mbsense::Result<()> {
    let bandwidth = 6_000_000;
    let a = assign_uniform(6, 12, 2)?;
    for u in 0..a.num_users() {
        let bands: Vec<usize> = (0..a.num_bands()).filter(|&m| a.cells[u][m]).collect();
        println!("user {u} senses {bands:?}");
    }
    println!("cost {} Hz per user", sampling_cost(&a, bandwidth)?.max);

    let priorities = [4.0, 1.0, 1.0, 2.0];
    let p = assign_priority(6, &priorities, 10)?;
    let div: Vec<usize> = (0..p.num_bands()).map(|m| p.diversity(m)).collect();
    println!("priority diversities {div:?}, cost {:?}", sampling_cost(&p, bandwidth)?.per_user);

    for d in [1, 2, 3, 6] {
        println!("M=12, K=6, d={d}: {} Hz", sampling_cost(&assign_uniform(6, 12, d)?, bandwidth)?.max);
    }
    Ok(())
}
