//! Binds surfels to a two-triangle hinge, bends it and reports how well each
//! deformation path keeps the splats attached to the surface.

use surfhead::mat3::min_symmetric_eigenvalue;
use surfhead::rig::DeformMethod;
use surfhead::scenes;

fn main() -> surfhead::Result<()> {
    let rig = scenes::stretch_rig()?;
    let poses = [
        ("bent 30°", scenes::bent_hinge(30.0)),
        ("bent 90°", scenes::bent_hinge(90.0)),
        ("stretched 2×1", scenes::stretched_hinge(2.0, 1.0)),
        ("stretched 1×0.5", scenes::stretched_hinge(1.0, 0.5)),
    ];
    for (name, pose) in &poses {
        for method in [DeformMethod::Ga, DeformMethod::Jacobian, DeformMethod::Jbs] {
            let d = rig.deform(pose, method)?;
            let ortho = d.iter().map(|s| s.orthogonality_error()).fold(0.0, f64::max);
            let min_eig = d.iter().map(|s| min_symmetric_eigenvalue(&s.covariance())).fold(f64::INFINITY, f64::min);
            println!("{name:>15} {method:?}: {} surfels, max |n·h| {ortho:.1e}, min eig {min_eig:.2e}", d.len());
        }
    }
    Ok(())
}
