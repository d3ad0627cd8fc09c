//! Monte Carlo tail estimates and the shared CSV schema.

use serde::{Deserialize, Serialize};

use crate::stats::{binomial_se, wilson, Z95};

/// Fixed column order of every tail CSV written by the crate.
pub const CSV_HEADER: &str =
    "experiment,d,lambda,L,n,delta,r,s,p,hits,n_rep,p_hat,ci_lo,ci_hi,bound,pass,censored";

/// Parameters of one grid point. Unused parameters stay `None` and are
/// written as empty CSV fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub d: Option<u32>,
    pub lambda: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub n: Option<u64>,
    pub delta: Option<f64>,
    pub r: Option<f64>,
    pub s: Option<f64>,
    pub p: Option<f64>,
}

/// Running tally for one grid point. Tallies merge by addition, so shards
/// can be combined in any order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub hits: u64,
    pub n: u64,
    pub censored: u64,
}

impl Tally {
    pub fn record(&mut self, hit: bool) {
        self.n += 1;
        if hit {
            self.hits += 1;
        }
    }

    pub fn merge(&mut self, other: &Tally) {
        self.hits += other.hits;
        self.n += other.n;
        self.censored += other.censored;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub experiment: String,
    pub params: Params,
    pub hits: u64,
    pub replicates: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Explicit bound the probability must not exceed, when one is known.
    pub bound: Option<f64>,
    pub pass: bool,
    pub censored: u64,
}

impl TailEstimate {
    pub fn from_tally(experiment: &str, params: Params, tally: Tally, bound: Option<f64>) -> Self {
        let p_hat = if tally.n == 0 { 0.0 } else { tally.hits as f64 / tally.n as f64 };
        let (ci_lo, ci_hi) = wilson(tally.hits, tally.n, Z95);
        let sigma = binomial_se(tally.hits, tally.n);
        let pass = match bound {
            Some(b) => p_hat - 3.0 * sigma <= b,
            None => true,
        };
        TailEstimate {
            experiment: experiment.to_string(),
            params,
            hits: tally.hits,
            replicates: tally.n,
            p_hat,
            ci_lo,
            ci_hi,
            bound,
            pass,
            censored: tally.censored,
        }
    }

    pub fn sigma(&self) -> f64 {
        binomial_se(self.hits, self.replicates)
    }

    pub fn tally(&self) -> Tally {
        Tally { hits: self.hits, n: self.replicates, censored: self.censored }
    }

    pub fn csv_row(&self) -> String {
        fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        let p = &self.params;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:e},{:e},{:e},{},{},{}",
            self.experiment,
            opt(&p.d),
            opt(&p.lambda),
            opt(&p.l),
            opt(&p.n),
            opt(&p.delta),
            opt(&p.r),
            opt(&p.s),
            opt(&p.p),
            self.hits,
            self.replicates,
            self.p_hat,
            self.ci_lo,
            self.ci_hi,
            self.bound.map(|b| format!("{b:e}")).unwrap_or_default(),
            self.pass,
            self.censored
        )
    }

    /// Parses a row produced by [`TailEstimate::csv_row`].
    pub fn from_csv_row(line: &str) -> crate::Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 17 {
            return Err(crate::Error::Parse(format!("expected 17 columns, found {}", f.len())));
        }
        fn num<T: std::str::FromStr>(s: &str) -> crate::Result<Option<T>> {
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<T>()
                .map(Some)
                .map_err(|_| crate::Error::Parse(format!("bad number {s:?}")))
        }
        fn req<T: std::str::FromStr>(s: &str) -> crate::Result<T> {
            num::<T>(s)?.ok_or_else(|| crate::Error::Parse("missing required column".into()))
        }
        Ok(TailEstimate {
            experiment: f[0].to_string(),
            params: Params {
                d: num(f[1])?,
                lambda: num(f[2])?,
                l: num(f[3])?,
                n: num(f[4])?,
                delta: num(f[5])?,
                r: num(f[6])?,
                s: num(f[7])?,
                p: num(f[8])?,
            },
            hits: req(f[9])?,
            replicates: req(f[10])?,
            p_hat: req(f[11])?,
            ci_lo: req(f[12])?,
            ci_hi: req(f[13])?,
            bound: num(f[14])?,
            pass: req(f[15])?,
            censored: req(f[16])?,
        })
    }
}
