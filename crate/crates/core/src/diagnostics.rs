//! Sampled checks of the standing assumptions on a vector field over a cap,
//! the conditions on projection multifunctions, and convergence reports.
//!
//! Every check quantifies over a finite seeded sample of `D̂`, never over the
//! whole set; a pass means no counterexample was found among the samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Trajectory, VectorField};
use crate::error::{check_dim, Result};
use crate::geometry::{
    cap_membership, project_intersection, Cap, HalfSpace, Membership, DEFAULT_GEOM_TOL,
};
use crate::space::Vector;
use crate::splitting::HaugazeauField;

/// Outcome of one sampled check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub name: String,
    pub sample_count: usize,
    /// Largest signed violation over the samples.
    pub worst_violation: f64,
    pub tolerance: f64,
    pub witness: Option<Vector>,
    pub passed: bool,
    /// False for reports that are informational only.
    pub gating: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    /// Step fractions used by the invariance check.
    pub h_grid: Vec<f64>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            samples: 512,
            seed: 0,
            tol: 1e-9,
            h_grid: (1..=8).map(|k| k as f64 / 8.0).collect(),
        }
    }
}

/// Running maximum that keeps the first sample on ties.
struct Worst {
    value: f64,
    witness: Option<Vector>,
    note: String,
}

impl Worst {
    fn new() -> Self {
        Worst { value: f64::NEG_INFINITY, witness: None, note: String::new() }
    }

    fn offer(&mut self, value: f64, x: &Vector) {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        if value > self.value {
            self.value = value;
            self.witness = Some(x.clone());
        }
    }

    fn fail(&mut self, x: &Vector, note: String) {
        if self.value < f64::INFINITY {
            self.note = note;
        }
        self.offer(f64::INFINITY, x);
    }

    fn report(self, name: &str, count: usize, tol: f64, detail: String) -> AssumptionReport {
        let passed = self.value <= tol;
        let detail = if self.note.is_empty() { detail } else { format!("{detail}; {}", self.note) };
        AssumptionReport {
            name: name.to_string(),
            sample_count: count,
            worst_violation: self.value,
            tolerance: tol,
            witness: if passed { None } else { self.witness },
            passed,
            gating: true,
            detail,
        }
    }
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
/// Above this dimension the box-to-ball rejection rate makes Halton points wasteful.
const HALTON_MAX_DIM: usize = 8;

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let (mut f, mut out) = (inv, 0.0);
    while i > 0 {
        out += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    out
}

fn unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-12 {
            return g.into_iter().map(|v| v / n).collect();
        }
    }
}

/// Seeded sample of `D̂`: anchors first, then half interior points, a quarter
/// on the outer sphere of `D` and a quarter on the floor sphere around `w`.
///
/// Interior points are a randomly shifted Halton sequence in the bounding
/// cube of `D` (dimension at most 8), rejected outside `D̂`.
pub fn sample_cap(cap: &Cap, count: usize, seed: u64, anchors: &[Vector]) -> Result<Vec<Vector>> {
    let dim = cap.dim();
    let tol = DEFAULT_GEOM_TOL;
    let inside = |x: &Vector| -> Result<bool> {
        Ok(cap_membership(cap, x, tol)? == Membership::InsideDhat)
    };
    let mut out = Vec::with_capacity(count + anchors.len());
    for a in anchors {
        check_dim(dim, a.dim())?;
        if inside(a)? {
            out.push(a.clone());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = cap.ball_center();
    let radius = cap.ball_radius();
    let n_volume = count / 2;
    let n_outer = count / 4;
    let n_floor = count - n_volume - n_outer;
    let budget = 2000 * count.max(1);

    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let (mut got, mut tries, mut index) = (0, 0, 1u64);
    while got < n_volume && tries < budget {
        tries += 1;
        let x = if dim <= HALTON_MAX_DIM {
            let coords = (0..dim)
                .map(|j| {
                    let u = (radical_inverse(index, PRIMES[j]) + shift[j]).fract();
                    center[j] + radius * (2.0 * u - 1.0)
                })
                .collect();
            index += 1;
            Vector::from_raw(coords)
        } else {
            let dir = unit_direction(&mut rng, dim);
            let rad = radius * rng.random::<f64>().powf(1.0 / dim as f64);
            Vector::from_raw((0..dim).map(|j| center[j] + rad * dir[j]).collect())
        };
        if inside(&x)? {
            out.push(x);
            got += 1;
        }
    }

    let sphere = |rng: &mut ChaCha8Rng, c: &Vector, rad: f64, n: usize, out: &mut Vec<Vector>| -> Result<()> {
        let (mut got, mut tries) = (0, 0);
        while got < n && tries < budget {
            tries += 1;
            let dir = unit_direction(rng, dim);
            let x = Vector::from_raw((0..dim).map(|j| c[j] + rad * dir[j]).collect());
            if inside(&x)? {
                out.push(x);
                got += 1;
            }
        }
        Ok(())
    };
    sphere(&mut rng, &center, radius, n_outer, &mut out)?;
    sphere(&mut rng, cap.w_bar(), cap.r().sqrt(), n_floor, &mut out)?;
    Ok(out)
}

/// (A): `z` is the only zero of `F` on `D̂`.
///
/// Requires `|F(z)| <= tol` and `|F(x)| > tol` at samples with `|x - z| >= 10 tol`.
/// The signed violation is `|F(z)|` at `z` and `2 tol - |F(x)|` elsewhere.
pub fn check_a1(field: &dyn VectorField, cap: &Cap, samples: &[Vector], tol: f64) -> AssumptionReport {
    let mut worst = Worst::new();
    let z = cap.z_bar();
    match field.eval(z) {
        Ok(f) => worst.offer(f.norm(), z),
        Err(e) => worst.fail(z, format!("F(z) failed: {e}")),
    }
    let mut used = 1;
    for x in samples {
        if x.dist(z).map_or(true, |d| d < 10.0 * tol) {
            continue;
        }
        used += 1;
        match field.eval(x) {
            Ok(f) => worst.offer(2.0 * tol - f.norm(), x),
            Err(e) => worst.fail(x, format!("F failed: {e}")),
        }
    }
    worst.report("A", used, tol, "sampled: |F(z)| small, |F(x)| > tol away from z".into())
}

/// (B): `x + h F(x)` stays in `D̂` for `h` in the grid.
///
/// The signed violation is the larger of the region test (ball and box) and
/// the floor test at each displaced point.
pub fn check_a2(
    field: &dyn VectorField,
    cap: &Cap,
    samples: &[Vector],
    h_grid: &[f64],
    tol: f64,
) -> AssumptionReport {
    let mut worst = Worst::new();
    let (mut worst_region, mut worst_floor) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for x in samples {
        let f = match field.eval(x) {
            Ok(f) => f,
            Err(e) => {
                worst.fail(x, format!("F failed: {e}"));
                continue;
            }
        };
        let mut here = f64::NEG_INFINITY;
        for &h in h_grid {
            let y = match crate::space::axpy(h, &f, x) {
                Ok(y) => y,
                Err(_) => continue,
            };
            let region = cap.region_test(&y).unwrap_or(f64::INFINITY);
            let floor = cap.floor_test(&y).unwrap_or(f64::INFINITY);
            worst_region = worst_region.max(region);
            worst_floor = worst_floor.max(floor);
            here = here.max(region.max(floor));
        }
        worst.offer(here, x);
    }
    let detail = format!(
        "sampled over {} step fractions; worst region test {worst_region:.3e}, worst floor test {worst_floor:.3e}",
        h_grid.len()
    );
    worst.report("B", samples.len(), tol, detail)
}

/// (C): `<F(x), w - x> <= tol` on the samples.
pub fn check_a3(field: &dyn VectorField, cap: &Cap, samples: &[Vector], tol: f64) -> AssumptionReport {
    let mut worst = Worst::new();
    for x in samples {
        match field.eval(x).and_then(|f| f.inner(&cap.w_bar().sub(x)?)) {
            Ok(v) => worst.offer(v, x),
            Err(e) => worst.fail(x, format!("F failed: {e}")),
        }
    }
    worst.report("C", samples.len(), tol, "sampled: <F(x), w - x> <= tol".into())
}

/// (C*): `<F(x), w - x> < 0` strictly at every trajectory point away from `z`.
///
/// Informational: the report never gates an overall pass.
pub fn check_c_star(field: &dyn VectorField, cap: &Cap, points: &[Vector], tol: f64) -> AssumptionReport {
    let mut worst = Worst::new();
    let mut used = 0;
    for x in points {
        if x.dist(cap.z_bar()).map_or(true, |d| d <= tol) {
            continue;
        }
        used += 1;
        match field.eval(x).and_then(|f| f.inner(&cap.w_bar().sub(x)?)) {
            Ok(v) => worst.offer(v, x),
            Err(e) => worst.fail(x, format!("F failed: {e}")),
        }
    }
    let mut report = worst.report("C*", used, 0.0, "along the trajectory, strict".into());
    report.passed = used == 0 || report.worst_violation < 0.0;
    if report.passed {
        report.witness = None;
    }
    report.gating = false;
    report
}

/// A multifunction `x ↦ C(x)` given as an intersection of at most two halfspaces.
pub trait ConstraintMap {
    fn constraints(&self, x: &Vector) -> Result<Vec<HalfSpace>>;
}

impl ConstraintMap for HaugazeauField {
    fn constraints(&self, x: &Vector) -> Result<Vec<HalfSpace>> {
        Ok(self.halfspaces(x)?.to_vec())
    }
}

/// The constant multifunction `C(x) = H`.
#[derive(Debug, Clone)]
pub struct FixedConstraint(pub Vec<HalfSpace>);

impl ConstraintMap for FixedConstraint {
    fn constraints(&self, _x: &Vector) -> Result<Vec<HalfSpace>> {
        Ok(self.0.clone())
    }
}

/// Sampled (A')-(C') for `F(x) = P_{C(x)}(w) - x`; (D') holds for any
/// finite intersection of halfspaces and is reported as such.
pub fn check_pds_conditions(
    map: &dyn ConstraintMap,
    cap: &Cap,
    samples: &[Vector],
    tol: f64,
) -> Vec<AssumptionReport> {
    let w = cap.w_bar();
    let z = cap.z_bar();
    let (mut a, mut b, mut c) = (Worst::new(), Worst::new(), Worst::new());

    let project = |x: &Vector| -> Result<(Vec<HalfSpace>, Vector)> {
        let hs = map.constraints(x)?;
        let p = project_intersection(&hs, w, DEFAULT_GEOM_TOL)?;
        Ok((hs, p))
    };

    match project(z) {
        Ok((_, p)) => a.offer(p.dist(z).unwrap_or(f64::INFINITY), z),
        Err(e) => a.fail(z, format!("projection at z failed: {e}")),
    }
    for x in samples {
        let (hs, p) = match project(x) {
            Ok(v) => v,
            Err(e) => {
                a.fail(x, format!("projection failed: {e}"));
                continue;
            }
        };
        let z_out = hs
            .iter()
            .map(|h| h.violation(z).unwrap_or(f64::INFINITY))
            .fold(f64::NEG_INFINITY, f64::max);
        a.offer(z_out, x);
        if x.dist(z).map_or(false, |d| d >= 10.0 * tol) {
            a.offer(2.0 * tol - p.dist(x).unwrap_or(0.0), x);
        }
        b.offer(cap.region_test(&p).unwrap_or(f64::INFINITY), x);
        let inner = p.sub(x).and_then(|d| d.inner(&w.sub(x)?));
        c.offer(inner.unwrap_or(f64::INFINITY), x);
    }
    let n = samples.len();
    vec![
        a.report("A'", n + 1, tol, "sampled: z in C(x), P(w) = x only at z".into()),
        b.report("B'", n, tol, "sampled: P_C(x)(w) in D".into()),
        c.report("C'", n, tol, "sampled: <P_C(x)(w) - x, w - x> <= tol".into()),
        AssumptionReport {
            name: "D'".into(),
            sample_count: 0,
            worst_violation: 0.0,
            tolerance: tol,
            witness: None,
            passed: true,
            gating: true,
            detail: "closed and convex by construction (intersection of halfspaces)".into(),
        },
    ]
}

/// Runs (A), (B) and (C) on one shared sample.
pub fn check_field(
    field: &dyn VectorField,
    cap: &Cap,
    anchors: &[Vector],
    config: &CheckConfig,
) -> Result<Vec<AssumptionReport>> {
    let samples = sample_cap(cap, config.samples, config.seed, anchors)?;
    Ok(vec![
        check_a1(field, cap, &samples, config.tol),
        check_a2(field, cap, &samples, &config.h_grid, config.tol),
        check_a3(field, cap, &samples, config.tol),
    ])
}

/// True when every gating report passed.
pub fn all_passed(reports: &[AssumptionReport]) -> bool {
    reports.iter().filter(|r| r.gating).all(|r| r.passed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecadeCrossing {
    pub threshold: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub final_error: f64,
    /// First iteration at which `|x_n - z| <= 10^-k`, for each decade reached.
    pub decades: Vec<DecadeCrossing>,
    pub tail_epsilon: f64,
    /// First `n` with `|x_n - w|^2 >= |w - z|^2 - eps`.
    pub tail_start: Option<usize>,
    /// Largest `|x_m - z|^2 - eps` over `m >= tail_start`.
    pub tail_worst: f64,
    pub tail_holds: bool,
}

/// Error history against `z` and the tail implication
/// `|x_n - w|^2 >= |w - z|^2 - eps  ⟹  |x_m - z|^2 <= eps` for all `m >= n`.
pub fn convergence_report(
    traj: &Trajectory,
    w_bar: &Vector,
    z_bar: &Vector,
    eps: f64,
) -> Result<ConvergenceReport> {
    const SLACK: f64 = 1e-9;
    let d2 = w_bar.dist_sq(z_bar)?;
    let mut decades = Vec::new();
    let mut next = 1.0;
    let mut tail_start = None;
    let mut tail_worst = f64::NEG_INFINITY;
    for r in &traj.records {
        let err = r.x.dist(z_bar)?;
        while err <= next && next >= 1e-16 {
            decades.push(DecadeCrossing { threshold: next, iteration: r.iteration });
            next /= 10.0;
        }
        if tail_start.is_none() && r.x.dist_sq(w_bar)? >= d2 - eps {
            tail_start = Some(r.iteration);
        }
        if tail_start.is_some() {
            tail_worst = tail_worst.max(err * err - eps);
        }
    }
    let last = traj.last();
    Ok(ConvergenceReport {
        iterations: last.iteration,
        final_error: last.x.dist(z_bar)?,
        decades,
        tail_epsilon: eps,
        tail_start,
        tail_worst,
        tail_holds: tail_worst <= SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::FnField;

    fn v(c: &[f64]) -> Vector {
        Vector::from_slice(c).unwrap()
    }

    fn unit_cap() -> Cap {
        Cap::new(v(&[-1.0, 0.0]), v(&[1.0, 0.0]), 1.0).unwrap()
    }

    fn relax() -> impl VectorField {
        FnField::new(2, |x: &[f64]| vec![1.0 - x[0], 0.0])
    }

    #[test]
    fn samples_lie_in_cap_and_are_seeded() {
        let cap = unit_cap();
        let s = sample_cap(&cap, 200, 7, &[]).unwrap();
        assert_eq!(s.len(), 200);
        for x in &s {
            assert_eq!(cap_membership(&cap, x, 1e-10).unwrap(), Membership::InsideDhat);
        }
        assert_eq!(s, sample_cap(&cap, 200, 7, &[]).unwrap());
        assert_ne!(s, sample_cap(&cap, 200, 8, &[]).unwrap());
    }

    #[test]
    fn anchors_come_first() {
        let cap = unit_cap();
        let s = sample_cap(&cap, 10, 1, &[v(&[0.0, -1.0]), v(&[-1.0, 0.0])]).unwrap();
        assert_eq!(s[0], v(&[0.0, -1.0]));
        // w is below the floor and is dropped
        assert_ne!(s[1], v(&[-1.0, 0.0]));
    }

    #[test]
    fn high_dimensional_sampling() {
        let w = Vector::zeros(12);
        let mut z = vec![0.0; 12];
        z[0] = 2.0;
        let cap = Cap::with_fraction(w, v(&z), 0.05).unwrap();
        assert_eq!(sample_cap(&cap, 40, 3, &[]).unwrap().len(), 40);
    }

    #[test]
    fn radical_inverse_values() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn a1_examples() {
        let cap = unit_cap();
        let s = sample_cap(&cap, 256, 0, &[]).unwrap();
        assert!(check_a1(&relax(), &cap, &s, 1e-9).passed);
        let zero = FnField::new(2, |_: &[f64]| vec![0.0, 0.0]);
        let r = check_a1(&zero, &cap, &s, 1e-9);
        assert!(!r.passed && r.witness.is_some());
    }

    #[test]
    fn a2_fails_at_the_bottom_of_the_disk() {
        let cap = unit_cap();
        let s = sample_cap(&cap, 512, 0, &[v(&[0.0, -1.0])]).unwrap();
        let r = check_a2(&relax(), &cap, &s, &CheckConfig::default().h_grid, 1e-9);
        assert!(!r.passed);
        assert!((r.worst_violation - 1.0).abs() < 1e-12);
        assert_eq!(r.witness.unwrap(), v(&[0.0, -1.0]));
        let zero = FnField::new(2, |_: &[f64]| vec![0.0, 0.0]);
        assert!(check_a2(&zero, &cap, &s, &[0.5, 1.0], 1e-9).passed);
    }

    #[test]
    fn a3_examples() {
        let cap = unit_cap();
        let s = sample_cap(&cap, 256, 0, &[]).unwrap();
        assert!(check_a3(&relax(), &cap, &s, 1e-9).passed);
        let flipped = FnField::new(2, |x: &[f64]| vec![-1.0 - x[0], -x[1]]);
        let r = check_a3(&flipped, &cap, &s, 1e-9);
        let x = r.witness.clone().unwrap();
        assert!((r.worst_violation - x.dist_sq(&v(&[-1.0, 0.0])).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn fixed_halfspace_missing_z_fails_a_prime() {
        let cap = unit_cap();
        let s = sample_cap(&cap, 64, 0, &[]).unwrap();
        let h = HalfSpace::new(v(&[1.0, 0.0]), 0.0).unwrap();
        let reports = check_pds_conditions(&FixedConstraint(vec![h]), &cap, &s, 1e-9);
        assert!(!reports[0].passed);
        assert!(reports[3].passed);
    }

    #[test]
    fn convergence_report_of_stationary_run() {
        use crate::dynamics::{Mode, Record, Termination};
        let z = v(&[1.0, 0.0]);
        let rec = Record {
            iteration: 0,
            time: 0.0,
            x: z.clone(),
            norm_to_w: 2.0,
            fejer_slack: None,
            residual: 0.0,
            step_norm: 0.0,
        };
        let traj = Trajectory { mode: Mode::Discrete, records: vec![rec], termination: Termination::Residual };
        let r = convergence_report(&traj, &v(&[-1.0, 0.0]), &z, 1e-4).unwrap();
        assert_eq!(r.final_error, 0.0);
        assert_eq!(r.tail_start, Some(0));
        assert!(r.tail_holds);
        assert_eq!(r.decades.len(), 17);
    }
}
