//! Evaluates the lobe grid and a randomly initialized specular head over a
//! sweep of view directions around a fixed normal.

use surfhead::appearance::{eval_asg, reflect, sample_lobes, SpecularHead};
use surfhead::mat3::{rotation_about, Vec3};

fn main() -> surfhead::Result<()> {
    let lobes = sample_lobes(4, 4);
    let head = SpecularHead::random(lobes.clone(), 4, 32, 5);
    let n = Vec3::z();
    println!("angle  lobe sum  head");
    for step in 0..=8 {
        let angle = step as f64 * 0.15;
        let d = rotation_about(&Vec3::x(), angle) * Vec3::z();
        let w = reflect(&d, &n);
        let lobe_sum: f64 = lobes.iter().map(|l| eval_asg(l, &w)).sum();
        println!("{angle:5.2} {lobe_sum:9.4} {:6.4}", head.eval(&w, &d, &n)?);
    }
    let (_, grad) = head.gradient(&Vec3::z(), &Vec3::z(), &n)?;
    println!("{} parameters, gradient norm {:.4}", head.param_count(), grad.flatten().iter().map(|g| g * g).sum::<f64>().sqrt());
    Ok(())
}
