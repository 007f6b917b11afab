//! Dormand-Prince 8(5,3) with Hairer's step-size control.
//!
//! The right-hand side may fail (singular phase, bad input); such errors are
//! propagated. Steps producing non-finite values are rejected and retried with
//! a smaller step.

use crate::error::{Error, Result};

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dop853 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dop853 {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 200_000,
        }
    }
}

/// Counters accumulated over one or more calls.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 0.526001519587677318785587544488e-01;
const C3: f64 = 0.789002279381515978178381316732e-01;
const C4: f64 = 0.118350341907227396726757197510e+00;
const C5: f64 = 0.281649658092772603273242802490e+00;
const C6: f64 = 0.333333333333333333333333333333e+00;
const C7: f64 = 0.25e+00;
const C8: f64 = 0.307692307692307692307692307692e+00;
const C9: f64 = 0.651282051282051282051282051282e+00;
const C10: f64 = 0.6e+00;
const C11: f64 = 0.857142857142857142857142857142e+00;

const A21: f64 = 5.26001519587677318785587544488e-2;
const A31: f64 = 1.97250569845378994544595329183e-2;
const A32: f64 = 5.91751709536136983633785987549e-2;
const A41: f64 = 2.95875854768068491816892993775e-2;
const A43: f64 = 8.87627564304205475450678981324e-2;
const A51: f64 = 2.41365134159266685502369798665e-1;
const A53: f64 = -8.84549479328286085344864962717e-1;
const A54: f64 = 9.24834003261792003115737966543e-1;
const A61: f64 = 3.7037037037037037037037037037e-2;
const A64: f64 = 1.70828608729473871279604482173e-1;
const A65: f64 = 1.25467687566822425016691814123e-1;
const A71: f64 = 3.7109375e-2;
const A74: f64 = 1.70252211019544039314978060272e-1;
const A75: f64 = 6.02165389804559606850219397283e-2;
const A76: f64 = -1.7578125e-2;
const A81: f64 = 3.70920001185047927108779319836e-2;
const A84: f64 = 1.70383925712239993810214054705e-1;
const A85: f64 = 1.07262030446373284651809199168e-1;
const A86: f64 = -1.53194377486244017527936158236e-2;
const A87: f64 = 8.27378916381402288758473766002e-3;
const A91: f64 = 6.24110958716075717114429577812e-1;
const A94: f64 = -3.36089262944694129406857109825e0;
const A95: f64 = -8.68219346841726006818189891453e-1;
const A96: f64 = 2.75920996994467083049415600797e1;
const A97: f64 = 2.01540675504778934086186788979e1;
const A98: f64 = -4.34898841810699588477366255144e1;
const A101: f64 = 4.77662536438264365890433908527e-1;
const A104: f64 = -2.48811461997166764192642586468e0;
const A105: f64 = -5.90290826836842996371446475743e-1;
const A106: f64 = 2.12300514481811942347288949897e1;
const A107: f64 = 1.52792336328824235832596922938e1;
const A108: f64 = -3.32882109689848629194453265587e1;
const A109: f64 = -2.03312017085086261358222928593e-2;
const A111: f64 = -9.3714243008598732571704021658e-1;
const A114: f64 = 5.18637242884406370830023853209e0;
const A115: f64 = 1.09143734899672957818500254654e0;
const A116: f64 = -8.14978701074692612513997267357e0;
const A117: f64 = -1.85200656599969598641566180701e1;
const A118: f64 = 2.27394870993505042818970056734e1;
const A119: f64 = 2.49360555267965238987089396762e0;
const A1110: f64 = -3.0467644718982195003823669022e0;
const A121: f64 = 2.27331014751653820792359768449e0;
const A124: f64 = -1.05344954667372501984066689879e1;
const A125: f64 = -2.00087205822486249909675718444e0;
const A126: f64 = -1.79589318631187989172765950534e1;
const A127: f64 = 2.79488845294199600508499808837e1;
const A128: f64 = -2.85899827713502369474065508674e0;
const A129: f64 = -8.87285693353062954433549289258e0;
const A1210: f64 = 1.23605671757943030647266201528e1;
const A1211: f64 = 6.43392746015763530355970484046e-1;

const B1: f64 = 5.42937341165687622380535766363e-2;
const B6: f64 = 4.45031289275240888144113950566e0;
const B7: f64 = 1.89151789931450038304281599044e0;
const B8: f64 = -5.8012039600105847814672114227e0;
const B9: f64 = 3.1116436695781989440891606237e-1;
const B10: f64 = -1.52160949662516078556178806805e-1;
const B11: f64 = 2.01365400804030348374776537501e-1;
const B12: f64 = 4.47106157277725905176885569043e-2;

const BHH1: f64 = 0.244094488188976377952755905512e+00;
const BHH2: f64 = 0.733846688281611857341361741547e+00;
const BHH3: f64 = 0.220588235294117647058823529412e-01;

const ER1: f64 = 0.1312004499419488073250102996e-01;
const ER6: f64 = -0.1225156446376204440720569753e+01;
const ER7: f64 = -0.4957589496572501915214079952e+00;
const ER8: f64 = 0.1664377182454986536961530415e+01;
const ER9: f64 = -0.3503288487499736816886487290e+00;
const ER10: f64 = 0.3341791187130174790297318841e+00;
const ER11: f64 = 0.8192320648511571246570742613e-01;
const ER12: f64 = -0.2235530786388629525884427845e-01;

const SAFE: f64 = 0.9;
const FACC1: f64 = 3.0;
const FACC2: f64 = 1.0 / 6.0;
const EXPO: f64 = 1.0 / 8.0;

/// Reusable integration state: step-size memory and scratch stages.
pub struct Solver {
    pub settings: Dop853,
    pub stats: Stats,
    h: f64,
    k: [Vec<f64>; 12],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
}

impl Solver {
    pub fn new(settings: Dop853, dim: usize) -> Self {
        Self {
            settings,
            stats: Stats::default(),
            h: 0.0,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            ytmp: vec![0.0; dim],
            ynew: vec![0.0; dim],
        }
    }

    /// Advance `y` from `t0` to exactly `t1`. The last accepted step size is
    /// kept for the next call.
    pub fn integrate<F>(&mut self, f: &mut F, t0: f64, t1: f64, y: &mut [f64]) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        if t1 == t0 {
            return Ok(());
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();
        let Dop853 {
            rtol,
            atol,
            max_steps,
        } = self.settings;

        let mut t = t0;
        f(t, y, &mut self.k[0])?;
        self.stats.evaluations += 1;
        check_finite(&self.k[0], t)?;

        let mut h = if self.h != 0.0 {
            self.h.abs().min(span) * dir
        } else {
            self.initial_step(f, t, y, dir, span)?
        };
        let mut last = false;
        let mut steps = 0usize;

        loop {
            if steps >= max_steps {
                return Err(Error::Integration {
                    at: t,
                    reason: format!("step limit {max_steps} exceeded"),
                });
            }
            if 0.1 * h.abs() <= t.abs() * f64::EPSILON {
                return Err(Error::Integration {
                    at: t,
                    reason: "step size underflow".into(),
                });
            }
            if (t + 1.01 * h - t1) * dir > 0.0 {
                h = t1 - t;
                last = true;
            }
            steps += 1;

            let ok = self.stages(f, t, y, h);
            let (err, ynew_ok) = match ok {
                Ok(()) => self.error_estimate(y, h, rtol, atol),
                Err(e) if matches!(e, Error::NonFinite(_)) => (f64::NAN, false),
                Err(e) => return Err(e),
            };

            if !ynew_ok || !err.is_finite() {
                self.stats.rejected += 1;
                h *= 0.25;
                last = false;
                continue;
            }

            let fac11 = err.powf(EXPO);
            let fac = (fac11 / SAFE).clamp(FACC2, FACC1);
            if err <= 1.0 {
                self.stats.accepted += 1;
                // FSAL: f at the new point becomes the next first stage.
                f(t + h, &self.ynew, &mut self.ytmp)?;
                self.stats.evaluations += 1;
                if self.ytmp.iter().any(|v| !v.is_finite()) {
                    self.stats.rejected += 1;
                    h *= 0.25;
                    last = false;
                    continue;
                }
                std::mem::swap(&mut self.k[0], &mut self.ytmp);
                y.copy_from_slice(&self.ynew[..n]);
                t += h;
                if last {
                    self.h = if self.h != 0.0 { self.h } else { h };
                    return Ok(());
                }
                let hnew = h / fac;
                self.h = hnew;
                h = hnew;
            } else {
                self.stats.rejected += 1;
                h /= (fac11 / SAFE).min(FACC1);
                last = false;
            }
        }
    }

    fn stages<F>(&mut self, f: &mut F, t: f64, y: &[f64], h: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        macro_rules! stage {
            ($out:expr, $c:expr, $( ($a:expr, $i:expr) ),+ ) => {{
                for m in 0..n {
                    let mut acc = 0.0;
                    $( acc += $a * self.k[$i][m]; )+
                    self.ytmp[m] = y[m] + h * acc;
                }
                let (before, after) = self.k.split_at_mut($out);
                let _ = before;
                f(t + $c * h, &self.ytmp, &mut after[0])?;
                self.stats.evaluations += 1;
                check_finite(&after[0], t)?;
            }};
        }
        stage!(1, C2, (A21, 0));
        stage!(2, C3, (A31, 0), (A32, 1));
        stage!(3, C4, (A41, 0), (A43, 2));
        stage!(4, C5, (A51, 0), (A53, 2), (A54, 3));
        stage!(5, C6, (A61, 0), (A64, 3), (A65, 4));
        stage!(6, C7, (A71, 0), (A74, 3), (A75, 4), (A76, 5));
        stage!(7, C8, (A81, 0), (A84, 3), (A85, 4), (A86, 5), (A87, 6));
        stage!(
            8,
            C9,
            (A91, 0),
            (A94, 3),
            (A95, 4),
            (A96, 5),
            (A97, 6),
            (A98, 7)
        );
        stage!(
            9,
            C10,
            (A101, 0),
            (A104, 3),
            (A105, 4),
            (A106, 5),
            (A107, 6),
            (A108, 7),
            (A109, 8)
        );
        stage!(
            10,
            C11,
            (A111, 0),
            (A114, 3),
            (A115, 4),
            (A116, 5),
            (A117, 6),
            (A118, 7),
            (A119, 8),
            (A1110, 9)
        );
        stage!(
            11,
            1.0,
            (A121, 0),
            (A124, 3),
            (A125, 4),
            (A126, 5),
            (A127, 6),
            (A128, 7),
            (A129, 8),
            (A1210, 9),
            (A1211, 10)
        );
        Ok(())
    }

    /// Fills `ynew` and returns the scaled error norm.
    fn error_estimate(&mut self, y: &[f64], h: f64, rtol: f64, atol: f64) -> (f64, bool) {
        let n = y.len();
        let k = &self.k;
        let mut err = 0.0;
        let mut err2 = 0.0;
        let mut finite = true;
        for m in 0..n {
            let incr = B1 * k[0][m]
                + B6 * k[5][m]
                + B7 * k[6][m]
                + B8 * k[7][m]
                + B9 * k[8][m]
                + B10 * k[9][m]
                + B11 * k[10][m]
                + B12 * k[11][m];
            let yn = y[m] + h * incr;
            finite &= yn.is_finite();
            self.ynew[m] = yn;
            let sk = atol + rtol * y[m].abs().max(yn.abs());
            let e3 = incr - BHH1 * k[0][m] - BHH2 * k[8][m] - BHH3 * k[11][m];
            let e5 = ER1 * k[0][m]
                + ER6 * k[5][m]
                + ER7 * k[6][m]
                + ER8 * k[7][m]
                + ER9 * k[8][m]
                + ER10 * k[9][m]
                + ER11 * k[10][m]
                + ER12 * k[11][m];
            err2 += (e3 / sk).powi(2);
            err += (e5 / sk).powi(2);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        (h.abs() * err * (1.0 / (n as f64 * deno)).sqrt(), finite)
    }

    fn initial_step<F>(&mut self, f: &mut F, t: f64, y: &[f64], dir: f64, span: f64) -> Result<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        let Dop853 { rtol, atol, .. } = self.settings;
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for m in 0..n {
            let sk = atol + rtol * y[m].abs();
            dnf += (self.k[0][m] / sk).powi(2);
            dny += (y[m] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(span) * dir;
        for m in 0..n {
            self.ytmp[m] = y[m] + h * self.k[0][m];
        }
        f(t + h, &self.ytmp, &mut self.k[1])?;
        self.stats.evaluations += 1;
        let mut der2 = 0.0;
        for m in 0..n {
            let sk = atol + rtol * y[m].abs();
            der2 += ((self.k[1][m] - self.k[0][m]) / sk).powi(2);
        }
        let der2 = der2.sqrt() / h.abs();
        let der12 = der2.max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 {
            (h.abs() * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(EXPO)
        };
        Ok((100.0 * h.abs()).min(h1).min(span) * dir)
    }
}

fn check_finite(v: &[f64], t: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("right-hand side at t = {t}")))
    }
}

impl Dop853 {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Result<Self> {
        if !(rtol > 0.0 && atol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be positive, got rtol={rtol}, atol={atol}"
            )));
        }
        Ok(Self {
            rtol,
            atol,
            ..Self::default()
        })
    }

    /// One-shot integration from `t0` to `t1`.
    pub fn solve<F>(&self, mut f: F, t0: f64, t1: f64, y: &mut [f64]) -> Result<Stats>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let mut s = Solver::new(*self, y.len());
        s.integrate(&mut f, t0, t1, y)?;
        Ok(s.stats)
    }
}
