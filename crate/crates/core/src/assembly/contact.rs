//! Frictional contact as a nonlinear complementarity problem.
//!
//! Conventions: the displacement jump is opening positive (`jn >= 0`), the
//! contact traction `sn` is non-positive in compression, and friction opposes
//! the tangential slip increment, so `st * djt <= 0` while slipping. With the
//! normal trial `-sn - c_n jn` and the friction bound
//! `b = F max(0, -sn - c_n jn)`:
//!
//! * `C_n = sn + max(0, -sn - c_n jn)`
//! * `C_t = st - b t / max(b, |t|)` with trial `t = st - c_t djt`
//!
//! and both vanish exactly when the contact and Coulomb conditions hold.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContactMode {
    Open,
    Stick,
    Slip,
}

impl ContactMode {
    pub fn code(self) -> u8 {
        match self {
            ContactMode::Open => 0,
            ContactMode::Stick => 1,
            ContactMode::Slip => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ContactMode::Open => "open",
            ContactMode::Stick => "stick",
            ContactMode::Slip => "slip",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ContactParams {
    pub friction: f64,
    pub c_n: f64,
    pub c_t: f64,
}

/// Local contact variables of one fracture cell.
#[derive(Debug, Clone, Copy, Default)]
pub struct ContactPoint {
    pub sn: f64,
    pub st: f64,
    pub jn: f64,
    /// Tangential jump increment over the time step.
    pub djt: f64,
}

/// NCP value and its generalized derivative with respect to
/// `(sn, st, jn, djt)` in the given mode.
#[derive(Debug, Clone, Copy)]
pub struct NcpLinearization {
    pub mode: ContactMode,
    pub value: [f64; 2],
    pub deriv: [[f64; 4]; 2],
}

pub fn classify(x: &ContactPoint, p: &ContactParams) -> ContactMode {
    let normal_trial = -x.sn - p.c_n * x.jn;
    if normal_trial <= 0.0 {
        return ContactMode::Open;
    }
    let b = p.friction * normal_trial;
    let t = x.st - p.c_t * x.djt;
    if t.abs() <= b {
        ContactMode::Stick
    } else {
        ContactMode::Slip
    }
}

pub fn ncp(x: &ContactPoint, p: &ContactParams) -> NcpLinearization {
    let mode = classify(x, p);
    let normal_trial = -x.sn - p.c_n * x.jn;
    match mode {
        ContactMode::Open => NcpLinearization { mode, value: [x.sn, x.st], deriv: [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]] },
        ContactMode::Stick => {
            NcpLinearization { mode, value: [-p.c_n * x.jn, p.c_t * x.djt], deriv: [[0.0, 0.0, -p.c_n, 0.0], [0.0, 0.0, 0.0, p.c_t]] }
        }
        ContactMode::Slip => {
            let t = x.st - p.c_t * x.djt;
            let s = t.signum();
            let b = p.friction * normal_trial;
            NcpLinearization {
                mode,
                value: [-p.c_n * x.jn, x.st - b * s],
                deriv: [[0.0, 0.0, -p.c_n, 0.0], [p.friction * s, 1.0, p.friction * p.c_n * s, 0.0]],
            }
        }
    }
}

/// Direct check of the contact and Coulomb friction conditions.
pub fn conditions_hold(x: &ContactPoint, friction: f64, tol: f64) -> bool {
    let normal = x.jn >= -tol && x.sn <= tol && (x.jn * x.sn).abs() <= tol;
    if !normal {
        return false;
    }
    let b = -friction * x.sn;
    if x.st.abs() > b + tol {
        return false;
    }
    if x.st.abs() < b - tol {
        return x.djt.abs() <= tol;
    }
    // On the friction bound: slip opposite to the traction, or none.
    b <= tol || x.st * x.djt <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: ContactParams = ContactParams { friction: 0.5, c_n: 1.0, c_t: 1.0 };

    #[test]
    fn traction_free_is_open() {
        let x = ContactPoint { sn: 0.0, st: 0.0, jn: 0.1, djt: 0.3 };
        let l = ncp(&x, &P);
        assert_eq!(l.mode, ContactMode::Open);
        assert_eq!(l.value, [0.0, 0.0]);
    }

    #[test]
    fn compression_sticks() {
        let x = ContactPoint { sn: -2.0, st: 0.0, jn: 0.0, djt: 0.0 };
        let l = ncp(&x, &P);
        assert_eq!(l.mode, ContactMode::Stick);
        assert_eq!(l.value, [0.0, 0.0]);
        // The residual enforces jn = 0 and djt = 0.
        let y = ContactPoint { jn: 0.01, djt: 0.02, ..x };
        assert!(ncp(&y, &P).value.iter().all(|v| v.abs() > 0.0));
    }

    /// One-cell toy: a block held by a tangential spring `k` under shear load
    /// `q`, so the contact traction is st = k djt - q, with sn = -2.
    /// The brute-force solution scans djt for the Coulomb conditions.
    #[test]
    fn slip_under_excess_shear_matches_brute_force() {
        let (sn, q, k) = (-2.0, 1.6, 4.0);
        // Newton on the two unknowns (st, djt), normal held in contact.
        let (mut st, mut djt) = (0.0, 0.0);
        for _ in 0..20 {
            let x = ContactPoint { sn, st, jn: 0.0, djt };
            let l = ncp(&x, &P);
            let r = [st - k * djt + q, l.value[1]];
            let a = [[1.0, -k], [l.deriv[1][1], l.deriv[1][3]]];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            st -= (r[0] * a[1][1] - r[1] * a[0][1]) / det;
            djt -= (a[0][0] * r[1] - a[1][0] * r[0]) / det;
        }
        let x = ContactPoint { sn, st, jn: 0.0, djt };
        assert_eq!(classify(&x, &P), ContactMode::Slip);
        assert!((st.abs() - 0.5 * 2.0).abs() < 1e-12);
        assert!(st * djt < 0.0);
        // Brute force: the admissible djt satisfies the conditions.
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=200_000 {
            let d = -1.0 + i as f64 * 1e-5;
            let s = k * d - q;
            let c = ContactPoint { sn, st: s, jn: 0.0, djt: d };
            let viol = (s.abs() - 1.0).max(0.0) + if s * d > 0.0 { s * d } else { 0.0 };
            if conditions_hold(&c, 0.5, 1e-4) && viol < best.0 {
                best = (viol, d);
            }
        }
        assert!((best.1 - djt).abs() < 2e-5, "{best:?} vs {djt}");
    }

    #[test]
    fn linearization_matches_differences_away_from_kinks() {
        let pts = [
            ContactPoint { sn: 0.3, st: -0.2, jn: 0.1, djt: 0.4 },
            ContactPoint { sn: -2.0, st: 0.3, jn: 0.01, djt: 0.05 },
            ContactPoint { sn: -1.0, st: 2.0, jn: -0.1, djt: -0.3 },
        ];
        for x in pts {
            let l = ncp(&x, &P);
            for j in 0..4 {
                let h = 1e-7;
                let mut xp = x;
                let mut xm = x;
                let field = |y: &mut ContactPoint, d: f64| match j {
                    0 => y.sn += d,
                    1 => y.st += d,
                    2 => y.jn += d,
                    _ => y.djt += d,
                };
                field(&mut xp, h);
                field(&mut xm, -h);
                for i in 0..2 {
                    let fd = (ncp(&xp, &P).value[i] - ncp(&xm, &P).value[i]) / (2.0 * h);
                    assert!((fd - l.deriv[i][j]).abs() < 1e-6, "{x:?} {i} {j}");
                }
            }
        }
    }

    proptest::proptest! {
        /// Points satisfying the contact and friction conditions are roots
        /// of the NCP for any positive constants.
        #[test]
        fn solutions_are_roots(
            mode in 0usize..3,
            a in 0.0f64..2.0,
            b in -1.0f64..1.0,
            r in 0.0f64..1.0,
            friction in 0.1f64..1.0,
            c_n in 0.1f64..100.0,
            c_t in 0.1f64..100.0,
        ) {
            let p = ContactParams { friction, c_n, c_t };
            let x = match mode {
                0 => ContactPoint { sn: 0.0, st: 0.0, jn: a + 1e-3, djt: b },
                1 => ContactPoint { sn: -a - 1e-3, st: b * friction * (a + 1e-3), jn: 0.0, djt: 0.0 },
                _ => {
                    let st = b.signum() * friction * (a + 1e-3);
                    ContactPoint { sn: -a - 1e-3, st, jn: 0.0, djt: -b.signum() * r }
                }
            };
            proptest::prop_assert!(conditions_hold(&x, friction, 1e-12));
            let v = ncp(&x, &p).value;
            proptest::prop_assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12, "{:?} {:?}", x, v);
        }
    }
}
