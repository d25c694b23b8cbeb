//! Blends the identity with a near half-turn two ways and prints the
//! determinant along the path. The linear blend collapses, the
//! rotation/stretch blend stays a rotation.

use std::f64::consts::PI;

use surfhead::commands::interp_table;
use surfhead::mat3::{polar_decompose, rotation_z, Mat3, DEFAULT_TOL};

fn main() -> surfhead::Result<()> {
    let m = Mat3::new(1.2, 0.3, 0.0, -0.1, 0.8, 0.2, 0.0, 0.4, 1.5);
    let p = polar_decompose(&m, DEFAULT_TOL)?;
    println!("rotation:{}stretch:{}", p.rotation, p.stretch);

    println!("   t   lerp det   jbs det");
    for r in interp_table(&Mat3::identity(), &rotation_z(PI - 0.01))? {
        println!("{:4.1} {:10.6} {:9.6}", r.t, r.lerp_det, r.jbs_det);
    }
    Ok(())
}
