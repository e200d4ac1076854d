//! CSV writers. Floats are printed with 17 significant digits.

use std::io::{self, Write};

use crate::estimators::{BoundCheck, MomentEstimate};
use crate::hierarchy::CorrelationField;
use crate::kmc::Snapshot;
use crate::scheduler::ScaleLadder;

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_snapshots_csv<W: Write>(w: &mut W, dim: usize, snapshots: &[Snapshot]) -> io::Result<()> {
    let axes = ["x", "y", "z"];
    writeln!(w, "t,particle_id,{}", axes[..dim].join(","))?;
    for s in snapshots {
        for (id, p) in s.config.iter() {
            write!(w, "{},{id}", fmt_f64(s.time))?;
            for c in &p[..dim] {
                write!(w, ",{}", fmt_f64(*c))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn write_moments_csv<'a, W: Write>(
    w: &mut W,
    estimates: impl IntoIterator<Item = &'a MomentEstimate>,
) -> io::Result<()> {
    writeln!(w, "t,n,bin_lo,bin_hi,k_hat,stderr")?;
    for e in estimates {
        for i in 0..e.values.len() {
            let (lo, hi) = e.bin(i);
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_f64(e.time),
                e.order,
                fmt_f64(lo),
                fmt_f64(hi),
                fmt_f64(e.values[i]),
                fmt_f64(e.stderr[i])
            )?;
        }
    }
    Ok(())
}

pub fn write_bound_checks_csv<'a, W: Write>(
    w: &mut W,
    checks: impl IntoIterator<Item = &'a BoundCheck>,
) -> io::Result<()> {
    writeln!(w, "t,n,bound,worst_value,margin,pass")?;
    for c in checks {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(c.t),
            c.n,
            fmt_f64(c.bound),
            fmt_f64(c.worst_value),
            fmt_f64(c.margin),
            c.pass
        )?;
    }
    Ok(())
}

pub fn write_trajectory_header<W: Write>(w: &mut W) -> io::Result<()> {
    writeln!(w, "t,n,sep_index,value")
}

/// One row per stored entry, `k0` included as order 0.
pub fn write_trajectory_rows<W: Write>(w: &mut W, t: f64, field: &CorrelationField) -> io::Result<()> {
    let ts = fmt_f64(t);
    writeln!(w, "{ts},0,0,{}", fmt_f64(field.k0()))?;
    for n in 1..=field.n_max() {
        for (i, v) in field.order(n).iter().enumerate() {
            writeln!(w, "{ts},{n},{i},{}", fmt_f64(*v))?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    pub last_taylor_term: f64,
    pub closure_tail_bound: f64,
    pub norm_theta: f64,
}

pub fn write_diagnostics_csv<'a, W: Write>(
    w: &mut W,
    rows: impl IntoIterator<Item = &'a DiagnosticRow>,
) -> io::Result<()> {
    writeln!(w, "t,last_taylor_term,closure_tail_bound,norm_theta")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.last_taylor_term),
            fmt_f64(r.closure_tail_bound),
            fmt_f64(r.norm_theta)
        )?;
    }
    Ok(())
}

pub fn write_ladder_csv<W: Write>(w: &mut W, ladder: &ScaleLadder) -> io::Result<()> {
    writeln!(w, "n,theta_star,delta,tau,s_n,cumulative")?;
    for i in 0..ladder.len() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            i + 1,
            fmt_f64(ladder.theta_star[i + 1]),
            fmt_f64(ladder.deltas[i]),
            fmt_f64(ladder.taus[i]),
            fmt_f64(ladder.steps[i]),
            fmt_f64(ladder.cumulative[i])
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Configuration, TorusDomain};

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn snapshot_header_follows_dimension() {
        let dom = TorusDomain::new(2, 4.0).unwrap();
        let snap = Snapshot {
            time: 0.5,
            config: Configuration::from_points(dom, [[1.0, 2.0, 0.0]]),
        };
        let mut buf = Vec::new();
        write_snapshots_csv(&mut buf, 2, &[snap]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,particle_id,x,y"));
        assert_eq!(
            lines.next(),
            Some("5.0000000000000000e-1,0,1.0000000000000000e0,2.0000000000000000e0")
        );
    }
}
