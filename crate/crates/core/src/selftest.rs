//! Seeded property suites run by `surfhead selftest`.
//!
//! Every suite reports how many of its checks passed and the worst value it
//! saw. The report contains no timings, so two runs with the same seed print
//! the same text.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::appearance::{reflect, sample_lobes, AsgLobe, Rgb, ShBlock, SpecularHead};
use crate::commands::coverage_gap;
use crate::energy::{
    depth_distortion, eye_opacity_loss, fit, normal_consistency, photometric_loss, EnergyBreakdown, EnergyConfig,
    FitOptions, ParamGroup,
};
use crate::io::{buffers, format_obj, parse_obj, SurfelSetFile};
use crate::mat3::{
    inverse_transpose, min_symmetric_eigenvalue, orthogonality_residual, polar_decompose, rotation_about, rotation_exp, rotation_log,
    rotation_z, set_inverse_transpose_mutation, AxisAngle, Mat3, Vec3, DEFAULT_TOL,
};
use crate::mesh::{icosahedron, Point, TriMesh};
use crate::render::{composite_pixel, ray_splat_intersect, render, RenderOptions, SplatHit};
use crate::rig::{bind_surfels, deform_surfel, jbs, lerp_blend, DeformMethod, DeformedSurfel, Rig, Surfel};
use crate::scenes;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Negate one off-diagonal entry of every inverse transpose while the
    /// suites run.
    pub mutate_inverse_transpose: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    pub detail: String,
}

impl SuiteResult {
    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::ok)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn render(&self) -> String {
        let mut out = format!("selftest seed {}\n", self.seed);
        for s in &self.suites {
            let _ = writeln!(
                out,
                "{:<5} {:<20} {:>5}/{:<5} {}",
                if s.ok() { "ok" } else { "FAIL" },
                s.name,
                s.passed,
                s.total,
                s.detail
            );
        }
        let good = self.suites.iter().filter(|s| s.ok()).count();
        let _ = writeln!(
            out,
            "{} ({good}/{} suites)",
            if self.all_passed() { "PASS" } else { "FAIL" },
            self.suites.len()
        );
        out
    }
}

#[derive(Default)]
struct Tally {
    passed: usize,
    total: usize,
}

impl Tally {
    fn check(&mut self, ok: bool) {
        self.total += 1;
        if ok {
            self.passed += 1;
        }
    }

    fn finish(self, name: &'static str, detail: String) -> SuiteResult {
        SuiteResult {
            name,
            passed: self.passed,
            total: self.total,
            detail,
        }
    }
}

struct MutationGuard;

impl Drop for MutationGuard {
    fn drop(&mut self) {
        set_inverse_transpose_mutation(false);
    }
}

pub fn run(opts: &SelftestOptions) -> Report {
    let _guard = opts.mutate_inverse_transpose.then(|| {
        set_inverse_transpose_mutation(true);
        MutationGuard
    });
    let s = opts.seed;
    let suites = vec![
        polar_suite(s),
        rotation_suite(s.wrapping_add(1)),
        inverse_transpose_suite(s.wrapping_add(2)),
        psd_suite(s.wrapping_add(3)),
        orthogonality_suite(s.wrapping_add(4)),
        similarity_suite(s.wrapping_add(5)),
        geodesic_suite(s.wrapping_add(6)),
        coverage_suite(),
        raster_suite(s.wrapping_add(8)),
        specular_suite(s.wrapping_add(9)),
        energy_suite(),
        fit_suite(),
        io_suite(s.wrapping_add(12)),
    ];
    Report { seed: s, suites }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(r: &mut ChaCha8Rng) -> Mat3 {
    loop {
        let mut m = Mat3::from_fn(|_, _| r.random_range(-1.0..1.0));
        let det = m.determinant();
        if det.abs() < 0.05 {
            continue;
        }
        if det < 0.0 {
            m.column_mut(0).neg_mut();
        }
        return m;
    }
}

fn random_unit(r: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::from_fn(|_, _| r.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_rotation(r: &mut ChaCha8Rng) -> Mat3 {
    let q = Quaternion::new(
        r.random_range(-1.0..1.0),
        r.random_range(-1.0..1.0),
        r.random_range(-1.0..1.0),
        r.random_range(-1.0..1.0),
    );
    UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
}

fn random_surfel(r: &mut ChaCha8Rng) -> Surfel {
    scenes::surfel(
        0,
        Vec3::from_fn(|_, _| r.random_range(-0.5..0.5)),
        &random_rotation(r),
        [r.random_range(0.01..2.0), r.random_range(0.01..2.0)],
        r.random_range(0.1..1.0),
        [0.5; 3],
    )
}

fn polar_suite(seed: u64) -> SuiteResult {
    let mut r = rng(seed);
    let mut t = Tally::default();
    let (mut orth, mut recon, mut oracle) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let m = random_matrix(&mut r);
        let Ok(p) = polar_decompose(&m, DEFAULT_TOL) else {
            t.check(false);
            continue;
        };
        let svd = m.svd(true, true);
        let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
        let u_ref = u * vt;
        let p_ref = vt.transpose() * Mat3::from_diagonal(&svd.singular_values) * vt;
        let o = orthogonality_residual(&p.rotation);
        let rc = (p.compose() - m).norm() / m.norm();
        let og = (p.rotation - u_ref).amax().max((p.stretch - p_ref).amax() / m.amax());
        let sym = (p.stretch - p.stretch.transpose()).amax();
        orth = orth.max(o);
        recon = recon.max(rc);
        oracle = oracle.max(og);
        t.check(
            o < 1e-9
                && (p.rotation.determinant() - 1.0).abs() < 1e-9
                && sym < 1e-12
                && min_symmetric_eigenvalue(&p.stretch) >= -1e-12
                && rc < 1e-8
                && og < 1e-8,
        );
    }
    t.finish(
        "polar",
        format!("max UᵀU−I {orth:.2e}, max reconstruction {recon:.2e}, max SVD gap {oracle:.2e}"),
    )
}

fn rotation_suite(seed: u64) -> SuiteResult {
    let mut r = rng(seed);
    let mut t = Tally::default();
    let (mut round, mut inv) = (0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let angle = r.random_range(1e-6..PI - 0.01);
        let rot = rotation_exp(&AxisAngle(random_unit(&mut r) * angle));
        let res = rotation_log(&rot).map(|w| (rotation_exp(&w) - rot).amax()).unwrap_or(f64::INFINITY);
        let w = AxisAngle(Vec3::from_fn(|_, _| r.random_range(-3.0..3.0)));
        let i = (rotation_exp(&w) * rotation_exp(&AxisAngle(-w.0)) - Mat3::identity()).amax();
        round = round.max(res);
        inv = inv.max(i);
        t.check(res < 1e-10 && i < 1e-12);
    }
    t.check(rotation_log(&rotation_z(PI)).is_err());
    t.finish("rotation_log_exp", format!("max round trip {round:.2e}, max exp(ω)exp(−ω)−I {inv:.2e}"))
}

fn inverse_transpose_suite(seed: u64) -> SuiteResult {
    let mut r = rng(seed);
    let mut t = Tally::default();
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let m = random_matrix(&mut r);
        let e = inverse_transpose(&m, DEFAULT_TOL)
            .map(|it| (it.transpose() * m - Mat3::identity()).amax())
            .unwrap_or(f64::INFINITY);
        worst = worst.max(e);
        t.check(e < 1e-9);
    }
    t.check(inverse_transpose(&Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0)), DEFAULT_TOL).is_err());
    t.finish("inverse_transpose", format!("max (M⁻ᵀ)ᵀM−I {worst:.2e}"))
}

fn psd_suite(seed: u64) -> SuiteResult {
    let mut r = rng(seed);
    let mut t = Tally::default();
    let mut lowest = f64::INFINITY;
    for _ in 0..1000 {
        let s = random_surfel(&mut r);
        let j = random_matrix(&mut r);
        let ev = deform_surfel(&s, &j, &Point::origin())
            .map(|d| min_symmetric_eigenvalue(&d.covariance()))
            .unwrap_or(f64::NEG_INFINITY);
        lowest = lowest.min(ev);
        t.check(ev >= -1e-10);
    }
    t.finish("covariance_psd", format!("min eigenvalue {lowest:.2e}"))
}

fn orthogonality_suite(seed: u64) -> SuiteResult {
    let mut r = rng(seed);
    let mut t = Tally::default();
    let (mut dot, mut rot) = (0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let s = random_surfel(&mut r);
        let j = random_matrix(&mut r);
        let e = match deform_surfel(&s, &j, &Point::origin()) {
            Ok(d) => {
                let rc = s.rotation();
                (0..2).map(|k| d.normal.dot(&(j * rc.column(k))).abs()).fold(0.0, f64::max)
            }
            Err(_) => f64::INFINITY,
        };
        dot = dot.max(e);
        t.check(e < 1e-8);
    }
    for _ in 0..100 {
        let s = random_surfel(&mut r);
        let q = random_rotation(&mut r);
        let e = deform_surfel(&s, &q, &Point::origin())
            .map(|d| (d.normal - q * s.normal()).norm())
            .unwrap_or(f64::INFINITY);
        rot = rot.max(e);
        t.check(e < 1e-12);
    }
    t.finish("normal_orthogonality", format!("max |n·Jr| {dot:.2e}, max rotation error {rot:.2e}"))
}

fn similarity_suite(seed: u64) -> SuiteResult {
    let mut r = rng(seed);
    let mut t = Tally::default();
    let (mut dmu, mut dsig) = (0.0_f64, 0.0_f64);
    let mut n = 0;
    while n < 200 {
        let v: Vec<Point> = (0..3).map(|_| Point::from(Vec3::from_fn(|_, _| r.random_range(-1.0..1.0)))).collect();
        let Ok(mesh) = TriMesh::new(v, vec![[0, 1, 2]]) else {
            continue;
        };
        if mesh.area(0) < 0.05 {
            continue;
        }
        n += 1;
        let k = r.random_range(0.3..3.0);
        let q = random_rotation(&mut r);
        let shift = Vec3::from_fn(|_, _| r.random_range(-2.0..2.0));
        let pose = mesh.transformed(|p| Point::from(k * (q * p.coords) + shift));
        let surfels = bind_surfels(&mesh, 4, seed ^ n as u64).expect("valid mesh");
        let topo = crate::rig::BlendTopology::for_mesh(&mesh, Default::default());
        let pair = Rig::new(mesh, surfels, topo)
            .and_then(|rig| Ok((rig.deform(&pose, DeformMethod::Jacobian)?, rig.deform(&pose, DeformMethod::Ga)?)));
        let Ok((a, b)) = pair else {
            t.check(false);
            continue;
        };
        let (mut em, mut es) = (0.0_f64, 0.0_f64);
        for (x, y) in a.iter().zip(&b) {
            em = em.max((x.position - y.position).norm());
            es = es.max((x.covariance() - y.covariance()).norm() / y.covariance().norm());
        }
        dmu = dmu.max(em);
        dsig = dsig.max(es);
        t.check(em < 1e-8 && es < 1e-8);
    }
    t.finish("similarity_parity", format!("max |Δμ| {dmu:.2e}, max relative |ΔΣ| {dsig:.2e}"))
}

fn geodesic_suite(seed: u64) -> SuiteResult {
    let mut r = rng(seed);
    let mut t = Tally::default();
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let theta = r.random_range(0.0..PI - 0.05);
        let w = r.random_range(0.0..=1.0);
        let e = jbs(&[Mat3::identity(), rotation_z(theta)], &[1.0 - w, w], DEFAULT_TOL)
            .map(|b| (b.matrix() - rotation_z(w * theta)).amax())
            .unwrap_or(f64::INFINITY);
        worst = worst.max(e);
        t.check(e < 1e-8);
    }
    let pair = [Mat3::identity(), rotation_z(PI - 0.01)];
    let lerp_det = lerp_blend(&pair, &[0.5, 0.5]).determinant();
    let jbs_det = jbs(&pair, &[0.5, 0.5], DEFAULT_TOL).map(|b| b.matrix().determinant()).unwrap_or(f64::NAN);
    t.check(lerp_det < 0.02);
    t.check((0.999..=1.001).contains(&jbs_det));
    t.finish(
        "jbs_geodesic",
        format!("max |J_b − Rz(tθ)| {worst:.2e}, midpoint det lerp {lerp_det:.3e} jbs {jbs_det:.9}"),
    )
}

fn coverage_suite() -> SuiteResult {
    let mut t = Tally::default();
    let res = (|| -> crate::Result<_> {
        let rig = scenes::stretch_rig()?;
        let pose = scenes::stretched_hinge(2.0, 1.0);
        let cam = scenes::stretch_camera();
        let (ga, _) = coverage_gap(&rig, &pose, &cam, DeformMethod::Ga)?;
        let (jac, _) = coverage_gap(&rig, &pose, &cam, DeformMethod::Jacobian)?;
        Ok((ga, jac))
    })();
    let detail = match res {
        Ok((ga, jac)) => {
            t.check(jac.gap < ga.gap);
            format!("gap ga {} vs jacobian {} of {} pixels", ga.gap, jac.gap, ga.silhouette)
        }
        Err(e) => {
            t.check(false);
            e.to_string()
        }
    };
    t.finish("stretch_coverage", detail)
}

fn opaque(center: Vec3, scale: f64, alpha: f64, rgb: [f64; 3]) -> DeformedSurfel {
    DeformedSurfel {
        position: Point::from(center),
        half_covariance: Mat3::from_diagonal(&Vec3::new(scale, scale, 0.0)),
        normal: Vec3::z(),
        opacity: alpha,
        sh: ShBlock::constant(0, rgb),
        eye: false,
        blend_rotation: Mat3::identity(),
    }
}

fn raster_suite(seed: u64) -> SuiteResult {
    let mut r = rng(seed);
    let mut t = Tally::default();
    let cam = scenes::camera(Point::new(0.0, 0.0, 3.0), 33, 25, 45.0);
    let basis = cam.basis();

    let mut depth_err = 0.0_f64;
    for _ in 0..100 {
        let tilt_axis = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), 0.0).normalize();
        let rot = rotation_about(&tilt_axis, r.random_range(0.0..1.2)) * rotation_z(r.random_range(0.0..2.0 * PI));
        let mu = Point::from(Vec3::from_fn(|_, _| r.random_range(-0.3..0.3)));
        let h = rot * Mat3::from_diagonal(&Vec3::new(0.5, 0.3, 0.0));
        let ds = DeformedSurfel {
            position: mu,
            half_covariance: h,
            normal: rot.column(2).into_owned(),
            opacity: 0.8,
            sh: ShBlock::constant(0, [0.5; 3]),
            eye: false,
            blend_rotation: rot,
        };
        let (x, y) = (r.random_range(10..23) as f64, r.random_range(8..17) as f64);
        let d = cam.ray_dir(&basis, x, y);
        let n = ds.normal;
        let analytic = n.dot(&(mu - cam.position)) / n.dot(&d);
        let e = match ray_splat_intersect(&cam.position, &d, &ds, 1e9) {
            Some(hit) => (hit.t - analytic).abs(),
            None => f64::INFINITY,
        };
        depth_err = depth_err.max(e);
        t.check(e < 1e-6);
    }

    let scene: Vec<DeformedSurfel> = (0..40)
        .map(|_| {
            let rot = random_rotation(&mut r);
            DeformedSurfel {
                position: Point::from(Vec3::from_fn(|_, _| r.random_range(-0.8..0.8))),
                half_covariance: rot * Mat3::from_diagonal(&Vec3::new(r.random_range(0.1..0.4), r.random_range(0.1..0.4), 0.0)),
                normal: rot.column(2).into_owned(),
                opacity: r.random_range(0.2..1.0),
                sh: ShBlock::constant(0, [r.random(), r.random(), r.random()]),
                eye: false,
                blend_rotation: rot,
            }
        })
        .collect();
    let one = render(&scene, &cam, &RenderOptions { threads: Some(1), ..Default::default() });
    let many = render(&scene, &cam, &RenderOptions { threads: Some(4), ..Default::default() });
    let closure = match (&one, &many) {
        (Ok(a), Ok(b)) => {
            let bits = |x: &crate::render::RenderBuffers| {
                let mut v: Vec<u64> = x.color.iter().flat_map(|c| c.iter().map(|f| f.to_bits())).collect();
                v.extend(x.depth.iter().map(|f| f.to_bits()));
                v.extend(x.transmittance.iter().map(|f| f.to_bits()));
                v
            };
            t.check(bits(a) == bits(b));
            a.max_closure_residual()
        }
        _ => {
            t.check(false);
            f64::INFINITY
        }
    };
    t.check(closure < 1e-4);

    let alphas = [0.7, 0.5, 0.9];
    let colors = [Rgb::new(0.9, 0.2, 0.1), Rgb::new(0.1, 0.8, 0.3), Rgb::new(0.2, 0.3, 0.9)];
    let bg = Rgb::new(0.05, 0.1, 0.15);
    let mut hits: Vec<SplatHit> = [(2, 2.5), (0, 1.0), (1, 1.5)]
        .iter()
        .map(|&(index, t)| SplatHit {
            index,
            u: 0.0,
            v: 0.0,
            t,
            g: 1.0,
            alpha: alphas[index],
        })
        .collect();
    let px = composite_pixel(&mut hits, &colors, &[Vec3::z(); 3], &bg, 100.0);
    let (a0, a1, a2) = (alphas[0], alphas[1], alphas[2]);
    let closed = colors[0] * a0
        + colors[1] * (a1 * (1.0 - a0))
        + colors[2] * (a2 * (1.0 - a0) * (1.0 - a1))
        + bg * ((1.0 - a0) * (1.0 - a1) * (1.0 - a2));
    let comp = (px.color - closed).amax();
    t.check(comp < 1e-12);

    let empty = render(&[], &cam, &RenderOptions { background: bg, ..Default::default() });
    t.check(empty.map(|b| b.color.iter().all(|c| *c == bg)).unwrap_or(false));

    t.finish(
        "rasterizer",
        format!("max depth error {depth_err:.2e}, closure residual {closure:.2e}, 3-layer error {comp:.2e}"),
    )
}

fn specular_suite(seed: u64) -> SuiteResult {
    let mut r = rng(seed);
    let mut t = Tally::default();
    let lobes = sample_lobes(4, 4);
    let mut peak = 0.0_f64;
    for (k, base) in lobes.iter().enumerate() {
        let lobe = AsgLobe {
            amplitude: 0.5 + k as f64 * 0.1,
            ..*base
        };
        let e = (crate::appearance::eval_asg(&lobe, &lobe.axis) - lobe.amplitude).abs();
        peak = peak.max(e);
        t.check(e < 1e-15);
        let mut zero = true;
        for _ in 0..1000 {
            let mut nu = random_unit(&mut r);
            if nu.dot(&lobe.axis) > 0.0 {
                nu -= 2.0 * nu.dot(&lobe.axis) * lobe.axis;
            }
            zero &= crate::appearance::eval_asg(&lobe, &nu) == 0.0;
        }
        t.check(zero);
    }

    let mut worst = 0.0_f64;
    let mut draws = 0;
    while draws < 20 {
        let mut head = SpecularHead::random(lobes.clone(), 2, 8, r.random());
        head.b3 = 0.5;
        let d = random_unit(&mut r);
        let n = random_unit(&mut r);
        let omega = reflect(&d, &n);
        let Ok((value, grad)) = head.gradient(&omega, &d, &n) else {
            t.check(false);
            break;
        };
        if value < 1e-3 {
            continue;
        }
        draws += 1;
        let analytic = grad.flatten();
        let base = head.params();
        let h = 1e-5;
        let mut rel = 0.0_f64;
        for (k, a) in analytic.iter().enumerate() {
            let mut eval_at = |delta: f64| {
                let mut p = base.clone();
                p[k] += delta;
                head.set_params(&p).and_then(|_| head.eval(&omega, &d, &n)).unwrap_or(f64::NAN)
            };
            let fd = (eval_at(h) - eval_at(-h)) / (2.0 * h);
            rel = rel.max((fd - a).abs() / a.abs().max(fd.abs()).max(1e-6));
        }
        let _ = head.set_params(&base);
        worst = worst.max(rel);
        t.check(rel < 1e-4);
    }
    t.finish(
        "asg_specular",
        format!("max peak error {peak:.2e}, max gradient relative error {worst:.2e}"),
    )
}

fn energy_suite() -> SuiteResult {
    let mut t = Tally::default();
    let cam = scenes::camera(Point::new(0.0, 0.0, 3.0), 16, 16, 40.0);
    let opts = RenderOptions::default();
    let buffers = render(&[opaque(Vec3::zeros(), 3.0, 1.0, [0.3, 0.6, 0.9])], &cam, &opts);
    let (photo, depth, normal) = match &buffers {
        Ok(b) => {
            let img = b.color_image();
            (
                photometric_loss(&img, &img, 0.8).unwrap_or(f64::NAN),
                depth_distortion(b),
                normal_consistency(b, &cam),
            )
        }
        Err(_) => (f64::NAN, f64::NAN, f64::NAN),
    };
    t.check(photo == 0.0);
    t.check(depth == 0.0);
    t.check(normal.abs() < 1e-9);
    let mut eyes = vec![scenes::surfel(0, Vec3::zeros(), &Mat3::identity(), [0.1, 0.1], 1.0, [1.0; 3]); 3];
    eyes.iter_mut().for_each(|s| s.eye = true);
    t.check(eye_opacity_loss(&eyes) == 0.0);
    let total = EnergyBreakdown::from_terms([1.0, 1.0, 1.0, 1.0, 0.0, 0.0], &EnergyConfig::default()).total;
    t.check(total == 101.15);
    t.finish(
        "energy_terms",
        format!("photo {photo:e}, depth {depth:e}, normal {normal:.2e}, weighted unit total {total}"),
    )
}

fn fit_suite() -> SuiteResult {
    let mut t = Tally::default();
    let photo_only = EnergyConfig::photometric_only();
    let mut notes = Vec::new();

    let gray = scenes::gray_patch(0.8).and_then(|s| {
        let opts = FitOptions {
            iterations: 200,
            groups: vec![ParamGroup::Color],
            ..Default::default()
        };
        fit(s, &photo_only, &opts)
    });
    match gray {
        Ok(st) => {
            let c = st.scene.rig.surfels[0].sh.dc_color();
            let err = (c - Rgb::repeat(0.8)).amax();
            let reduction = 1.0 - st.breakdown.total / st.initial.total;
            t.check(err < 0.01 && reduction >= 0.99 && st.iteration <= 200);
            notes.push(format!("gray err {err:.1e} reduction {reduction:.6}"));
        }
        Err(e) => {
            t.check(false);
            notes.push(e.to_string());
        }
    }

    let hinge = scenes::hinge_logit_scene().and_then(|s| {
        let opts = FitOptions {
            iterations: 200,
            groups: vec![ParamGroup::BlendLogits],
            ..Default::default()
        };
        fit(s, &photo_only, &opts)
    });
    match hinge {
        Ok(st) => {
            let ratio = st.breakdown.photo / st.initial.photo;
            t.check(ratio < 0.1);
            notes.push(format!("hinge ratio {ratio:.2e}"));
        }
        Err(e) => {
            t.check(false);
            notes.push(e.to_string());
        }
    }

    let eye = scenes::eye_patch().and_then(|s| {
        let before = s.rig.surfels.clone();
        let opts = FitOptions {
            iterations: 20,
            groups: vec![ParamGroup::Position, ParamGroup::Rotation, ParamGroup::Opacity],
            ..Default::default()
        };
        let cfg = EnergyConfig {
            freeze_eyes: true,
            ..photo_only
        };
        Ok((before, fit(s, &cfg, &opts)?))
    });
    match eye {
        Ok((before, st)) => {
            let after = &st.scene.rig.surfels;
            let frozen = before.iter().zip(after).filter(|(b, _)| b.eye).all(|(b, a)| {
                b.offset.iter().zip(a.offset.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
                    && b.orientation.coords.iter().zip(a.orientation.coords.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
            });
            let moved = before.iter().zip(after).any(|(b, a)| !b.eye && b.offset != a.offset);
            t.check(frozen && moved);
            notes.push(format!("eye frozen {frozen}"));
        }
        Err(e) => {
            t.check(false);
            notes.push(e.to_string());
        }
    }
    t.finish("toy_fits", notes.join(", "))
}

fn io_suite(seed: u64) -> SuiteResult {
    let mut t = Tally::default();
    let m = icosahedron();
    let obj = parse_obj(&format_obj(&m)).map(|b| {
        b.faces == m.faces && b.vertices.iter().zip(&m.vertices).all(|(x, y)| (x - y).norm() < 1e-6)
    });
    t.check(obj.unwrap_or(false));
    t.check(buffers::normal_to_rgb8(&Vec3::z()) == [128, 128, 255]);
    t.check(buffers::depth_to_u16(1.0, 1.0, 5.0) == 0 && buffers::depth_to_u16(5.0, 1.0, 5.0) == 65535);
    let json = bind_surfels(&m, 3, seed).map(|s| {
        let f = SurfelSetFile::new(&s, None, None);
        let text = f.to_json();
        SurfelSetFile::from_json(&text, std::path::Path::new("selftest"))
            .and_then(|g| g.decode())
            .map(|set| SurfelSetFile::new(&set.surfels, None, None).to_json() == text)
            .unwrap_or(false)
    });
    t.check(json.unwrap_or(false));
    t.finish("io_formats", "obj, png mappings, surfel json".into())
}
