//! Exact oracle for multinomial bounds: a linear program over structural
//! populations. A population is a distribution over compliance type (always
//! taker, complier, never taker) and the pair (Y(0), Y(1)) of categories,
//! with the target never abandoned under treatment. The ratio
//! (a - c) / (1 - b - c) is optimized with the Charnes-Cooper transform.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use persuasion::dist::{MultArm, MultJointDist};
use rand::Rng;

pub const TARGET: usize = 0;
pub const OUTSIDE: usize = 1;
pub const OTHER: usize = 2;

/// (Y(0), Y(1)) pairs allowed by monotonicity in the target.
pub fn pairs() -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for y0 in 0..3 {
        for y1 in 0..3 {
            if y0 == TARGET && y1 != TARGET {
                continue;
            }
            v.push((y0, y1));
        }
    }
    v
}

pub fn n_cells() -> usize {
    3 * pairs().len()
}

/// Region 0 always takes, 1 complies, 2 never takes.
fn treated(region: usize, z: usize) -> bool {
    region == 0 || (region == 1 && z == 1)
}

fn cells() -> Vec<(usize, usize, usize)> {
    let p = pairs();
    (0..3)
        .flat_map(|r| p.iter().map(move |&(y0, y1)| (r, y0, y1)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Population {
    pub mass: Vec<f64>,
}

/// Random population on at most `support` cells with some compliers.
/// Switching from the outside option to the target is excluded so the ratio
/// is a conditional probability.
pub fn random_population<R: Rng>(rng: &mut R, support: usize) -> Population {
    loop {
        let p = draw_population(rng, support);
        let obs = observables(&p);
        if obs.e1() - obs.e0() > 1e-6 {
            return p;
        }
    }
}

fn draw_population<R: Rng>(rng: &mut R, support: usize) -> Population {
    let cs = cells();
    let allowed: Vec<usize> = (0..cs.len())
        .filter(|&k| !(cs[k].1 == OUTSIDE && cs[k].2 == TARGET))
        .collect();
    let mut mass = vec![0.0; cs.len()];
    let k = rng.gen_range(1..=support);
    for _ in 0..k {
        let idx = allowed[rng.gen_range(0..allowed.len())];
        mass[idx] += -rng.gen_range(1e-12f64..1.0).ln();
    }
    let s: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= s);
    Population { mass }
}

/// P(category j, T = t | Z = z) as a linear functional over cells.
fn cell_row(z: usize, j: usize, t: Option<usize>) -> Vec<f64> {
    cells()
        .iter()
        .map(|&(r, y0, y1)| {
            let tr = treated(r, z);
            let y = if tr { y1 } else { y0 };
            let t_ok = t.map_or(true, |t| (t == 1) == tr);
            if y == j && t_ok {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

fn exposure_row(z: usize) -> Vec<f64> {
    cells()
        .iter()
        .map(|&(r, _, _)| if treated(r, z) { 1.0 } else { 0.0 })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn observables(p: &Population) -> MultJointDist {
    let arm = |z: usize| {
        let g = |j, t| dot(&cell_row(z, j, Some(t)), &p.mass).min(1.0);
        MultArm {
            target: [g(TARGET, 0), g(TARGET, 1)],
            outside: [g(OUTSIDE, 0), g(OUTSIDE, 1)],
            other: [g(OTHER, 0), g(OTHER, 1)],
        }
    };
    MultJointDist::new(arm(1), arm(0)).expect("population observables are valid")
}

fn num_den_ab() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let cs = cells();
    let num = cs
        .iter()
        .map(|&(_, y0, y1)| (y1 == TARGET) as i32 as f64 - (y0 == TARGET) as i32 as f64)
        .collect();
    let den = cs
        .iter()
        .map(|&(_, y0, _)| (y0 == OTHER) as i32 as f64)
        .collect();
    let ab = cs
        .iter()
        .map(|&(_, y0, y1)| (y1 == TARGET) as i32 as f64 + (y0 == OUTSIDE) as i32 as f64)
        .collect();
    (num, den, ab)
}

pub fn theta_mult(p: &Population) -> f64 {
    let (num, den, _) = num_den_ab();
    dot(&num, &p.mass) / dot(&den, &p.mass)
}

/// What the econometrician sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Info {
    /// Every p_j(y, t | z).
    Joint,
    /// Target share under z = 1, all shares under z = 0, and both exposure rates.
    MarginalsWithExposure,
    /// Target shares only.
    TargetOnly,
}

fn constraints(obs: &MultJointDist, info: Info) -> Vec<(Vec<f64>, f64)> {
    let mut out = Vec::new();
    let arm = |z: usize| if z == 1 { &obs.z1 } else { &obs.z0 };
    let share = |z: usize, j: usize, t: usize| {
        let a = arm(z);
        match j {
            TARGET => a.target[t],
            OUTSIDE => a.outside[t],
            _ => a.other[t],
        }
    };
    out.push((vec![1.0; n_cells()], 1.0));
    match info {
        Info::Joint => {
            for z in 0..2 {
                for j in 0..3 {
                    for t in 0..2 {
                        out.push((cell_row(z, j, Some(t)), share(z, j, t)));
                    }
                }
            }
        }
        Info::MarginalsWithExposure => {
            for j in 0..3 {
                out.push((cell_row(0, j, None), share(0, j, 0) + share(0, j, 1)));
            }
            out.push((
                cell_row(1, TARGET, None),
                share(1, TARGET, 0) + share(1, TARGET, 1),
            ));
            out.push((exposure_row(0), obs.e0()));
            out.push((exposure_row(1), obs.e1()));
        }
        Info::TargetOnly => {
            for z in 0..2 {
                out.push((
                    cell_row(z, TARGET, None),
                    share(z, TARGET, 0) + share(z, TARGET, 1),
                ));
            }
        }
    }
    out
}

fn expr(vars: &[minilp::Variable], coefs: &[f64]) -> LinearExpr {
    let mut e = LinearExpr::empty();
    for (v, c) in vars.iter().zip(coefs) {
        if *c != 0.0 {
            e.add(*v, *c);
        }
    }
    e
}

/// Range of the ratio over populations matching the observables, subject to
/// a + b <= 1. `None` when no population has a positive denominator.
pub fn lp_range(obs: &MultJointDist, info: Info) -> Option<(f64, f64)> {
    let (num, den, ab) = num_den_ab();
    let cons = constraints(obs, info);
    let solve = |dir| {
        let mut pb = Problem::new(dir);
        let y: Vec<_> = num
            .iter()
            .map(|&c| pb.add_var(c, (0.0, f64::INFINITY)))
            .collect();
        let s = pb.add_var(0.0, (0.0, f64::INFINITY));
        for (row, rhs) in &cons {
            let mut e = expr(&y, row);
            e.add(s, -rhs);
            pb.add_constraint(e, ComparisonOp::Eq, 0.0);
        }
        pb.add_constraint(expr(&y, &den), ComparisonOp::Eq, 1.0);
        let mut e = expr(&y, &ab);
        e.add(s, -1.0);
        pb.add_constraint(e, ComparisonOp::Le, 0.0);
        pb.solve().ok().map(|sol| sol.objective())
    };
    let lo = solve(OptimizationDirection::Minimize)?;
    let hi = solve(OptimizationDirection::Maximize)?;
    Some((lo, hi))
}

/// Whether some consistent population has ratio exactly `theta`.
pub fn attains(obs: &MultJointDist, info: Info, theta: f64) -> bool {
    let (num, den, ab) = num_den_ab();
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let x: Vec<_> = num
        .iter()
        .map(|_| pb.add_var(0.0, (0.0, f64::INFINITY)))
        .collect();
    for (row, rhs) in constraints(obs, info) {
        pb.add_constraint(expr(&x, &row), ComparisonOp::Eq, rhs);
    }
    let level: Vec<f64> = num.iter().zip(&den).map(|(n, d)| n - theta * d).collect();
    pb.add_constraint(expr(&x, &level), ComparisonOp::Eq, 0.0);
    pb.add_constraint(expr(&x, &den), ComparisonOp::Ge, 1e-9);
    pb.add_constraint(expr(&x, &ab), ComparisonOp::Le, 1.0);
    pb.solve().is_ok()
}
