//! Named set families used as base systems and as reference examples.

use crate::explicit_system::{SetFamily, SystemError};
use crate::finite_plane::{PlaneError, ProjectivePlane};

/// Lines of PG(2, q) as subsets of the point indices.
pub fn plane_lines(q: u64) -> Result<SetFamily, PlaneError> {
    let plane = ProjectivePlane::build(q)?;
    Ok(lines_of(&plane))
}

pub fn lines_of(plane: &ProjectivePlane) -> SetFamily {
    SetFamily::new(plane.size(), plane.incidence().to_vec())
        .expect("plane incidence is well formed")
}

/// All translates `{b + x mod n : b ∈ base}` for `x ∈ Z/n`, duplicates
/// removed, in order of first appearance.
pub fn translates(n: usize, base: &[usize]) -> Result<SetFamily, SystemError> {
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(n);
    for x in 0..n {
        let mut set: Vec<usize> = base.iter().map(|&b| (b + x) % n).collect();
        set.sort_unstable();
        set.dedup();
        if !sets.contains(&set) {
            sets.push(set);
        }
    }
    SetFamily::new(n, sets)
}

/// Cyclic intervals of length `t` on `Z/n`. Symmetric under rotation and
/// intersecting when `2t > n`.
pub fn cyclic_intervals(n: usize, t: usize) -> Result<SetFamily, SystemError> {
    let base: Vec<usize> = (0..t.min(n)).collect();
    translates(n, &base)
}

/// `{A ∪ B : A ∈ first, B ∈ second}` with `second`'s elements shifted past
/// `first`'s ground set.
pub fn join(first: &SetFamily, second: &SetFamily) -> SetFamily {
    let offset = first.n();
    let sets = first
        .sets()
        .iter()
        .flat_map(|a| {
            second.sets().iter().map(move |b| {
                a.iter()
                    .copied()
                    .chain(b.iter().map(|&e| e + offset))
                    .collect()
            })
        })
        .collect();
    SetFamily::new(offset + second.n(), sets).expect("joined sets stay in range")
}

/// Uniform and balanceable but not regular: on `Z/10`, the symmetric sets
/// `{x, x+1, x+2, x+5}` each gain `x+6` (even `x`) or `x+7` (odd `x`).
pub fn nonregular_balanceable() -> SetFamily {
    let sets = (0..10)
        .map(|x| {
            let extra = if x % 2 == 0 { 6 } else { 7 };
            [0, 1, 2, 5, extra].iter().map(|d| (x + d) % 10).collect()
        })
        .collect();
    SetFamily::new(10, sets).expect("elements are reduced mod 10")
}

/// Uniform, regular and intersecting but not balanceable: translates of
/// `{1, 2, 4}` in `Z/6` joined with the two halves of a 20-element set.
pub fn regular_unbalanceable() -> SetFamily {
    let first = translates(6, &[1, 2, 4]).expect("in range");
    let halves = SetFamily::new(20, vec![(0..10).collect(), (10..20).collect()]).expect("in range");
    join(&first, &halves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(translates(10, &[0, 1, 2, 5]).unwrap().len(), 10);
        assert_eq!(cyclic_intervals(2, 2).unwrap().sets(), &[vec![0, 1]]);
        assert_eq!(
            cyclic_intervals(3, 2).unwrap().sets(),
            &[vec![0, 1], vec![1, 2], vec![0, 2]]
        );
        let t72 = nonregular_balanceable();
        assert_eq!(t72.len(), 10);
        assert!(t72.sets().iter().all(|s| s.len() == 5));
        let t73 = regular_unbalanceable();
        assert_eq!(t73.n(), 26);
        assert_eq!(t73.len(), 12);
        assert!(t73.sets().iter().all(|s| s.len() == 13));
    }

    #[test]
    fn uneven_degrees() {
        let t72 = nonregular_balanceable();
        let degree = |e: usize| t72.sets().iter().filter(|s| s.contains(&e)).count();
        assert!((0..10).step_by(2).all(|e| degree(e) == 6));
        assert!((1..10).step_by(2).all(|e| degree(e) == 4));
    }
}
