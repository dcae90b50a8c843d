//! Small fixed-size 3D vector and rotation helpers shared across the crate.

use rand::Rng;
use rand_distr::StandardNormal;

/// 3D point or displacement, in Angstroms.
pub type Vec3 = [f64; 3];

/// Row-major 3x3 matrix.
pub type Mat3 = [[f64; 3]; 3];

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

pub fn unit(a: Vec3) -> Vec3 {
    let n = norm(a);
    scale(a, 1.0 / n)
}

pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

pub fn mat_det(m: &Mat3) -> f64 {
    dot(m[0], cross(m[1], m[2]))
}

/// Rotation matrix from a (not necessarily normalized) quaternion `[w, x, y, z]`.
pub fn rotation_from_quaternion(q: [f64; 4]) -> Mat3 {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// Haar-uniform proper rotation (det +1), via a normalized Gaussian quaternion.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Mat3 {
    let q = [
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    ];
    rotation_from_quaternion(q)
}

/// Applies `r -> rot * r + t` to every point.
pub fn apply_rigid(rot: &Mat3, t: Vec3, coords: &[Vec3]) -> Vec<Vec3> {
    coords.iter().map(|&r| add(mat_vec(rot, r), t)).collect()
}

/// ZYZ Euler angles to a rotation matrix; used by the grid-search RMSD oracle.
pub fn rotation_from_euler_zyz(alpha: f64, beta: f64, gamma: f64) -> Mat3 {
    let rz = |a: f64| -> Mat3 {
        [
            [a.cos(), -a.sin(), 0.0],
            [a.sin(), a.cos(), 0.0],
            [0.0, 0.0, 1.0],
        ]
    };
    let ry = |a: f64| -> Mat3 {
        [
            [a.cos(), 0.0, a.sin()],
            [0.0, 1.0, 0.0],
            [-a.sin(), 0.0, a.cos()],
        ]
    };
    mat_mul(&rz(alpha), &mat_mul(&ry(beta), &rz(gamma)))
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Signed dihedral angle (radians, in `(-pi, pi]`) of the chain `p0-p1-p2-p3`,
/// measured about the `p1-p2` axis.
pub fn dihedral(p0: Vec3, p1: Vec3, p2: Vec3, p3: Vec3) -> f64 {
    let b1 = sub(p1, p0);
    let b2 = sub(p2, p1);
    let b3 = sub(p3, p2);
    let n1 = cross(b1, b2);
    let n2 = cross(b2, b3);
    let m1 = cross(n1, unit(b2));
    let x = dot(n1, n2);
    let y = dot(m1, n2);
    y.atan2(x)
}

/// Angle (radians) at vertex `b` of the triangle `a-b-c`.
pub fn bond_angle(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let u = unit(sub(a, b));
    let v = unit(sub(c, b));
    dot(u, v).clamp(-1.0, 1.0).acos()
}

/// Places a fourth point `d` so that `|c-d| = bond`, the angle `b-c-d` equals
/// `angle`, and the dihedral `a-b-c-d` equals `dih` (both in radians).
/// `a`, `b`, `c` must not be collinear.
pub fn place_dihedral(a: Vec3, b: Vec3, c: Vec3, bond: f64, angle: f64, dih: f64) -> Vec3 {
    let bc = unit(sub(c, b));
    let n = unit(cross(sub(b, a), bc));
    let m = cross(n, bc);
    let d_local = [
        -bond * angle.cos(),
        bond * angle.sin() * dih.cos(),
        -bond * angle.sin() * dih.sin(),
    ];
    add(
        c,
        [
            d_local[0] * bc[0] + d_local[1] * m[0] + d_local[2] * n[0],
            d_local[0] * bc[1] + d_local[1] * m[1] + d_local[2] * n[1],
            d_local[0] * bc[2] + d_local[1] * m[2] + d_local[2] * n[2],
        ],
    )
}
