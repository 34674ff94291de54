//! Prime fields and the projective plane PG(2, q).
//!
//! Points and lines are both stored as canonical nonzero triples over GF(q)
//! (first nonzero coordinate equal to 1) in lexicographic order, so a point
//! and the line with the same index share the same triple. Point `x` lies on
//! line `l` iff `x · l = 0 (mod q)`.

use thiserror::Error;

/// Largest plane order accepted by [`ProjectivePlane::build`].
pub const MAX_ORDER: u64 = 1 << 15;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlaneError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("plane order {0} exceeds the cap {MAX_ORDER}")]
    TooLarge(u64),
    #[error("line index {index} out of range (plane has {count} lines)")]
    IndexOutOfRange { index: usize, count: usize },
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p < 4 {
        return true;
    }
    if p.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// The field of integers modulo a prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, PlaneError> {
        if is_prime(p) {
            Ok(Self { p })
        } else {
            Err(PlaneError::NotPrime(p))
        }
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn reduce(&self, a: u64) -> u64 {
        a % self.p
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.p as u128) as u64
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.p - b % self.p)
    }

    pub fn neg(&self, a: u64) -> u64 {
        (self.p - a % self.p) % self.p
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by Fermat's little theorem. `a` must be nonzero.
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(!a.is_multiple_of(self.p), "zero has no inverse");
        self.pow(a, self.p - 2)
    }

    pub fn dot(&self, a: &Triple, b: &Triple) -> u64 {
        let s =
            a[0] as u128 * b[0] as u128 + a[1] as u128 * b[1] as u128 + a[2] as u128 * b[2] as u128;
        (s % self.p as u128) as u64
    }

    pub fn cross(&self, a: &Triple, b: &Triple) -> Triple {
        [
            self.sub(self.mul(a[1], b[2]), self.mul(a[2], b[1])),
            self.sub(self.mul(a[2], b[0]), self.mul(a[0], b[2])),
            self.sub(self.mul(a[0], b[1]), self.mul(a[1], b[0])),
        ]
    }

    /// Scales a nonzero triple so its first nonzero coordinate is 1.
    /// Returns `None` for the zero triple.
    pub fn canonical(&self, t: &Triple) -> Option<Triple> {
        let lead = t.iter().copied().map(|x| x % self.p).find(|&x| x != 0)?;
        let inv = self.inv(lead);
        Some([
            self.mul(t[0], inv),
            self.mul(t[1], inv),
            self.mul(t[2], inv),
        ])
    }
}

/// Homogeneous coordinates over GF(q).
pub type Triple = [u64; 3];

/// PG(2, q) for prime q with precomputed incidence.
#[derive(Debug, Clone)]
pub struct ProjectivePlane {
    field: PrimeField,
    points: Vec<Triple>,
    incidence: Vec<Vec<usize>>,
    inverses: Vec<u64>,
}

impl ProjectivePlane {
    pub fn build(q: u64) -> Result<Self, PlaneError> {
        let field = PrimeField::new(q)?;
        if q > MAX_ORDER {
            return Err(PlaneError::TooLarge(q));
        }
        let size = (q * q + q + 1) as usize;
        let mut points = Vec::with_capacity(size);
        points.push([0, 0, 1]);
        for c in 0..q {
            points.push([0, 1, c]);
        }
        for b in 0..q {
            for c in 0..q {
                points.push([1, b, c]);
            }
        }
        debug_assert_eq!(points.len(), size);

        let inverses = (0..q)
            .map(|a| if a == 0 { 0 } else { field.inv(a) })
            .collect();
        let mut plane = Self {
            field,
            points,
            incidence: Vec::new(),
            inverses,
        };
        plane.incidence = (0..size).map(|l| plane.enumerate_line(l)).collect();
        Ok(plane)
    }

    fn enumerate_line(&self, line: usize) -> Vec<usize> {
        let f = &self.field;
        let l = self.points[line];
        // Two distinct points on the line: cross products with unit vectors
        // are orthogonal to `l` and at least two of them are independent.
        let units: [Triple; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
        let mut basis: Vec<Triple> = Vec::with_capacity(2);
        for e in &units {
            if let Some(c) = f.canonical(&f.cross(&l, e)) {
                if !basis.contains(&c) {
                    basis.push(c);
                }
            }
            if basis.len() == 2 {
                break;
            }
        }
        let (a, b) = (basis[0], basis[1]);
        let q = f.modulus();
        let mut on_line = Vec::with_capacity(q as usize + 1);
        on_line.push(self.point_index(&b));
        for t in 0..q {
            let x = [
                f.add(a[0], f.mul(t, b[0])),
                f.add(a[1], f.mul(t, b[1])),
                f.add(a[2], f.mul(t, b[2])),
            ];
            let c = f
                .canonical(&x)
                .expect("a + t*b is nonzero for independent a, b");
            on_line.push(self.point_index(&c));
        }
        on_line.sort_unstable();
        on_line
    }

    pub fn order(&self) -> u64 {
        self.field.modulus()
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    /// Number of points, which equals the number of lines: q² + q + 1.
    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Triple] {
        &self.points
    }

    /// Lines share the point list's canonical triples.
    pub fn lines(&self) -> &[Triple] {
        &self.points
    }

    pub fn line_points(&self, line: usize) -> &[usize] {
        &self.incidence[line]
    }

    pub fn incidence(&self) -> &[Vec<usize>] {
        &self.incidence
    }

    pub fn is_incident(&self, point: usize, line: usize) -> bool {
        self.field.dot(&self.points[point], &self.points[line]) == 0
    }

    /// Index of a canonical triple in the lexicographic ordering.
    pub fn point_index(&self, t: &Triple) -> usize {
        let q = self.order() as usize;
        match (t[0], t[1]) {
            (0, 0) => 0,
            (0, _) => 1 + t[2] as usize,
            _ => 1 + q + t[1] as usize * q + t[2] as usize,
        }
    }

    /// The unique point shared by two distinct lines: their cross product.
    #[inline]
    pub fn meet(&self, a: usize, b: usize) -> usize {
        debug_assert_ne!(a, b);
        // q ≤ 2^15, so every product below fits comfortably in u64
        let q = self.order();
        let (x, y) = (&self.points[a], &self.points[b]);
        let c = [
            (x[1] * y[2] + q * q - x[2] * y[1]) % q,
            (x[2] * y[0] + q * q - x[0] * y[2]) % q,
            (x[0] * y[1] + q * q - x[1] * y[0]) % q,
        ];
        let lead = c
            .iter()
            .copied()
            .find(|&v| v != 0)
            .expect("distinct lines have a nonzero cross product");
        let inv = self.inverses[lead as usize];
        self.point_index(&[c[0] * inv % q, c[1] * inv % q, c[2] * inv % q])
    }

    /// Points common to lines `a` and `b`: a singleton for distinct lines,
    /// the whole line otherwise.
    pub fn intersect_lines(&self, a: usize, b: usize) -> Result<Vec<usize>, PlaneError> {
        let count = self.size();
        for index in [a, b] {
            if index >= count {
                return Err(PlaneError::IndexOutOfRange { index, count });
            }
        }
        if a == b {
            Ok(self.incidence[a].clone())
        } else {
            Ok(vec![self.meet(a, b)])
        }
    }

    /// Point permutation induced by an invertible 3×3 matrix acting on
    /// column vectors. Returns `None` if the matrix is singular.
    pub fn collineation(&self, m: [[u64; 3]; 3]) -> Option<Vec<usize>> {
        let f = &self.field;
        let mut image = Vec::with_capacity(self.size());
        for p in &self.points {
            let x = [f.dot(&m[0], p), f.dot(&m[1], p), f.dot(&m[2], p)];
            image.push(self.point_index(&f.canonical(&x)?));
        }
        Some(image)
    }
}
