//! Sweep axes: `AXIS=FROM:STEP:TO` or `AXIS=v1,v2,...`. Several axes joined
//! with `;` span their Cartesian product, the last axis varying fastest.

use std::fmt;
use std::str::FromStr;

use super::config::{AlphaSpec, Config, Grid};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    SnrDlDb,
    SnrUlDb,
    M,
    /// Both `k_u` and `k_d`.
    K,
    KU,
    KD,
    /// Both `n_u` and `n_d`.
    N,
    Tau2Ul,
    Tau2Dl,
    Tau2I,
    /// `tau2_ul`, `tau2_dl` and `tau2_i` together.
    Tau2,
    Alpha,
    CorrelationRho,
    CR,
}

const AXES: [(Axis, &str); 14] = [
    (Axis::SnrDlDb, "snr_dl_db"),
    (Axis::SnrUlDb, "snr_ul_db"),
    (Axis::M, "m"),
    (Axis::K, "k"),
    (Axis::KU, "k_u"),
    (Axis::KD, "k_d"),
    (Axis::N, "n"),
    (Axis::Tau2Ul, "tau2_ul"),
    (Axis::Tau2Dl, "tau2_dl"),
    (Axis::Tau2I, "tau2_i"),
    (Axis::Tau2, "tau2"),
    (Axis::Alpha, "alpha"),
    (Axis::CorrelationRho, "rho"),
    (Axis::CR, "c_r"),
];

impl Axis {
    pub fn name(self) -> &'static str {
        AXES.iter()
            .find(|(a, _)| *a == self)
            .map(|(_, n)| *n)
            .expect("every axis is named")
    }

    fn integral(self) -> bool {
        matches!(self, Axis::M | Axis::K | Axis::KU | Axis::KD | Axis::N)
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AXES.iter()
            .find(|(_, n)| *n == s)
            .map(|(a, _)| *a)
            .ok_or_else(|| {
                let names: Vec<&str> = AXES.iter().map(|(_, n)| *n).collect();
                Error::config(
                    "experiment.sweep",
                    format!("unknown axis `{s}`; expected one of {}", names.join(", ")),
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axes: Vec<SweepAxis>,
}

/// One coordinate per axis.
pub type Point = Vec<(Axis, f64)>;

fn number(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::config("experiment.sweep", format!("`{s}` is not a finite number")))
}

fn parse_axis(part: &str) -> Result<SweepAxis> {
    let (name, range) = part.split_once('=').ok_or_else(|| {
        Error::config(
            "experiment.sweep",
            format!("`{part}` is not of the form AXIS=FROM:STEP:TO"),
        )
    })?;
    let axis: Axis = name.trim().parse()?;
    let values = if range.contains(':') {
        let f: Vec<&str> = range.split(':').collect();
        let [from, step, to] = f[..] else {
            return Err(Error::config(
                "experiment.sweep",
                format!("`{range}` needs exactly FROM:STEP:TO"),
            ));
        };
        let (from, step, to) = (number(from)?, number(step)?, number(to)?);
        if from > to {
            return Err(Error::config(
                "experiment.sweep",
                format!("bounds out of order: {from} > {to}"),
            ));
        }
        if !(step > 0.0) {
            return Err(Error::config("experiment.sweep", "step must be positive"));
        }
        let count = ((to - from) / step + 1e-9).floor() as usize + 1;
        if count > 10_000 {
            return Err(Error::config(
                "experiment.sweep",
                format!("{count} points is too many"),
            ));
        }
        // Index-based to keep the grid free of accumulated round-off.
        (0..count).map(|i| from + i as f64 * step).collect()
    } else {
        range.split(',').map(number).collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        return Err(Error::config("experiment.sweep", "empty axis"));
    }
    if axis.integral() && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
        return Err(Error::config(
            "experiment.sweep",
            format!("`{}` takes positive integers", axis.name()),
        ));
    }
    Ok(SweepAxis { axis, values })
}

impl Sweep {
    pub fn parse(s: &str) -> Result<Self> {
        let axes = s
            .split(';')
            .filter(|p| !p.trim().is_empty())
            .map(parse_axis)
            .collect::<Result<Vec<_>>>()?;
        if axes.is_empty() {
            return Err(Error::config("experiment.sweep", "no axis given"));
        }
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].iter().any(|b| b.axis == a.axis) {
                return Err(Error::config(
                    "experiment.sweep",
                    format!("axis `{}` repeated", a.axis.name()),
                ));
            }
        }
        Ok(Self { axes })
    }

    /// Grid points in row-major order.
    pub fn points(&self) -> Vec<Point> {
        let mut out: Vec<Point> = vec![Vec::new()];
        for a in &self.axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    a.values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push((a.axis, v));
                        q
                    })
                })
                .collect();
        }
        out
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .axes
            .iter()
            .map(|a| {
                format!(
                    "{}={}",
                    a.axis.name(),
                    a.values
                        .iter()
                        .map(f64::to_string)
                        .collect::<Vec<_>>()
                        .join(",")
                )
            })
            .collect();
        f.write_str(&parts.join(";"))
    }
}

pub fn describe_point(p: &Point) -> String {
    p.iter()
        .map(|(a, v)| format!("{}={v}", a.name()))
        .collect::<Vec<_>>()
        .join(";")
}

/// Copy of `base` with the point's coordinates applied.
pub fn apply_point(base: &Config, point: &Point) -> Result<Config> {
    let mut c = base.clone();
    let s = &mut c.system;
    for &(axis, v) in point {
        let n = v as usize;
        match axis {
            Axis::SnrDlDb => s.snr_dl_db = Some(v),
            Axis::SnrUlDb => s.snr_ul_db = Some(v),
            Axis::M => s.m = n,
            Axis::K => (s.k_u, s.k_d) = (n, n),
            Axis::KU => s.k_u = n,
            Axis::KD => s.k_d = n,
            Axis::N => (s.n_u, s.n_d) = (n, n),
            Axis::Tau2Ul => s.tau2_ul = Grid::Scalar(v),
            Axis::Tau2Dl => s.tau2_dl = Grid::Scalar(v),
            Axis::Tau2I => s.tau2_i = Grid::Scalar(v),
            Axis::Tau2 => {
                (s.tau2_ul, s.tau2_dl, s.tau2_i) =
                    (Grid::Scalar(v), Grid::Scalar(v), Grid::Scalar(v))
            }
            Axis::Alpha => s.alpha = AlphaSpec::Value(v),
            Axis::CorrelationRho => c.correlation.rho = v,
            Axis::CR => match c.geometry.as_mut() {
                Some(g) => g.c_r = v,
                None => {
                    return Err(Error::config(
                        "experiment.sweep",
                        "`c_r` needs a [geometry] table",
                    ))
                }
            },
        }
    }
    c.experiment.sweep = None;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_and_list() {
        let s = Sweep::parse("snr_dl_db=-10:5:10").unwrap();
        assert_eq!(s.axes[0].values, vec![-10.0, -5.0, 0.0, 5.0, 10.0]);
        let s = Sweep::parse("m=2,4,8").unwrap();
        assert_eq!(s.axes[0].values, vec![2.0, 4.0, 8.0]);
        let s = Sweep::parse("tau2_dl=0:0.1:0.3").unwrap();
        assert_eq!(s.axes[0].values.len(), 4);
    }

    #[test]
    fn product_order() {
        let s = Sweep::parse("tau2_dl=0,0.1;snr_dl_db=0:5:5").unwrap();
        let names: Vec<String> = s.points().iter().map(describe_point).collect();
        assert_eq!(
            names,
            [
                "tau2_dl=0;snr_dl_db=0",
                "tau2_dl=0;snr_dl_db=5",
                "tau2_dl=0.1;snr_dl_db=0",
                "tau2_dl=0.1;snr_dl_db=5"
            ]
        );
        assert_eq!(Sweep::parse(&s.to_string()).unwrap().points(), s.points());
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "snr_dl_db=10:5:-10",
            "snr_dl_db=0:0:1",
            "bogus=1",
            "m=2.5",
            "snr_dl_db",
            "m=1;m=2",
            "k=0",
        ] {
            assert!(Sweep::parse(bad).is_err(), "{bad}");
        }
    }
}
