use dormhgt::experiments::{StudySummary, TrialRecord};
use dormhgt::ode::{System, Trajectory};
use dormhgt::regime::RegimeCell;
use dormhgt::ssa::Path;
use std::fmt::Write;

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn ode_csv(tr: &Trajectory) -> String {
    let mut s = String::new();
    match tr.system {
        System::Reduced => s.push_str("t,n1a,n1d\n"),
        _ => s.push_str("t,n1a,n1d,n2\n"),
    }
    for (t, y) in tr.times.iter().zip(&tr.states) {
        let cols: Vec<String> = match tr.system {
            System::DormancyFree => vec![num(y[0]), num(0.0), num(y[1])],
            _ => y.iter().map(|v| num(*v)).collect(),
        };
        let _ = writeln!(s, "{},{}", num(*t), cols.join(","));
    }
    s
}

pub fn ssa_csv(path: &Path) -> String {
    let mut s = String::from("t,N1a,N1d,N2\n");
    for (t, c) in path.times.iter().zip(&path.states) {
        let _ = writeln!(s, "{},{},{},{}", num(*t), c.active, c.dormant, c.trait2);
    }
    s
}

pub fn map_csv(cells: &[RegimeCell]) -> String {
    let mut s = String::from("lambda1,lambda2,regime\n");
    for c in cells {
        let _ = writeln!(s, "{},{},{}", num(c.lambda1), num(c.lambda2), c.regime);
    }
    s
}

pub fn summary_csv(sum: &StudySummary) -> String {
    let mut s = String::from(
        "direction,K,trials,extinctions,fixations,coexistences,censored,success,wilson_low,wilson_high,\
         theory_success,success_time,success_time_se,success_time_median,theory_time,\
         extinction_time,extinction_time_se,extinction_time_median\n",
    );
    for r in &sum.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            sum.direction.as_str(),
            r.capacity,
            r.trials,
            r.extinctions,
            r.fixations,
            r.coexistences,
            r.censored,
            num(r.success),
            num(r.wilson_low),
            num(r.wilson_high),
            num(r.theory_success),
            opt(r.success_time.map(|m| m.mean)),
            opt(r.success_time.map(|m| m.se)),
            opt(r.success_time.map(|m| m.median)),
            opt(r.theory_time),
            opt(r.extinction_time.map(|m| m.mean)),
            opt(r.extinction_time.map(|m| m.se)),
            opt(r.extinction_time.map(|m| m.median)),
        );
    }
    s
}

pub fn trials_csv(sum: &StudySummary, records: &[Vec<TrialRecord>]) -> String {
    let mut s = String::from("K,trial,seed,kind,t,N1a,N1d,N2\n");
    for (row, recs) in sum.rows.iter().zip(records) {
        for r in recs {
            let kind = serde_json::to_value(r.kind).expect("serializable");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                row.capacity,
                r.trial,
                r.seed,
                kind.as_str().unwrap_or_default(),
                num(r.t),
                r.state.active,
                r.state.dormant,
                r.state.trait2
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
