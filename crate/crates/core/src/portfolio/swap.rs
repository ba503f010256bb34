use crate::error::{Result, XvaError};
use crate::rng::{keyed, Domain};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    PayFixed,
    ReceiveFixed,
}

impl Direction {
    /// +1 for receive-fixed, -1 for pay-fixed.
    pub fn sign(self) -> f64 {
        match self {
            Direction::ReceiveFixed => 1.0,
            Direction::PayFixed => -1.0,
        }
    }
    pub fn opposite(self) -> Self {
        match self {
            Direction::ReceiveFixed => Direction::PayFixed,
            Direction::PayFixed => Direction::ReceiveFixed,
        }
    }
}

/// Vanilla fixed-float swap with six-monthly coupons on both legs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Swap {
    pub id: usize,
    pub counterparty: usize,
    pub currency: usize,
    pub notional: f64,
    pub fixed_rate: f64,
    pub direction: Direction,
    pub resets: usize,
    /// Start time in years, a multiple of six months.
    pub start: f64,
}

pub const PERIOD: f64 = 0.5;

impl Swap {
    pub fn maturity(&self) -> f64 {
        self.start + PERIOD * self.resets as f64
    }

    /// Index of the start date on the six-monthly date grid.
    pub fn start_index(&self) -> usize {
        (self.start / PERIOD).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let start_ok = self.start >= 0.0 && ((self.start / PERIOD) - (self.start / PERIOD).round()).abs() < 1e-9;
        if !(self.notional > 0.0) || self.resets == 0 || !start_ok || !self.fixed_rate.is_finite() {
            return Err(XvaError::InvalidParams(format!(
                "swap {}: notional must be positive, resets at least 1 and start a multiple of six months",
                self.id
            )));
        }
        Ok(())
    }

    /// The same swap in the opposite direction.
    pub fn mirror(&self, id: usize) -> Swap {
        Swap { id, direction: self.direction.opposite(), ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSpec {
    pub n_trades: usize,
    pub n_counterparties: usize,
    pub n_currencies: usize,
    /// Notionals are drawn uniformly from `min, min + step, ..., max`.
    pub notional_min: f64,
    pub notional_max: f64,
    pub notional_step: f64,
    pub rate_min: f64,
    pub rate_max: f64,
    pub resets_min: usize,
    pub resets_max: usize,
    pub pay_fixed_prob: f64,
}

impl PortfolioSpec {
    pub fn desk() -> Self {
        Self {
            n_trades: 500,
            n_counterparties: 5,
            n_currencies: 2,
            notional_min: 10_000.0,
            notional_max: 100_000.0,
            notional_step: 10_000.0,
            rate_min: 0.005,
            rate_max: 0.05,
            resets_min: 1,
            resets_max: 20,
            pay_fixed_prob: 0.75,
        }
    }

    fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(XvaError::InvalidParams(format!("empty range: {what}")));
        if self.n_trades > 0 && (self.n_counterparties == 0 || self.n_currencies == 0) {
            return empty("counterparties or currencies");
        }
        if !(self.notional_min > 0.0 && self.notional_min <= self.notional_max && self.notional_step > 0.0) {
            return empty("notional");
        }
        if !(self.rate_min <= self.rate_max) {
            return empty("fixed rate");
        }
        if self.resets_min == 0 || self.resets_min > self.resets_max {
            return empty("resets");
        }
        if !(0.0..=1.0).contains(&self.pay_fixed_prob) {
            return Err(XvaError::InvalidParams("pay-fixed probability outside [0,1]".into()));
        }
        Ok(())
    }
}

/// Draws every attribute independently and uniformly; trade `i` uses its own
/// keyed stream, so prefixes of larger portfolios coincide.
pub fn generate_portfolio(spec: &PortfolioSpec, seed: u64) -> Result<Vec<Swap>> {
    spec.validate()?;
    let levels = ((spec.notional_max - spec.notional_min) / spec.notional_step + 1e-9).floor() as usize + 1;
    Ok((0..spec.n_trades)
        .map(|i| {
            let mut rng = keyed(seed, Domain::Portfolio, i as u64, 0);
            let counterparty = rng.random_range(0..spec.n_counterparties);
            let currency = rng.random_range(0..spec.n_currencies);
            let notional = spec.notional_min + spec.notional_step * rng.random_range(0..levels) as f64;
            let fixed_rate = spec.rate_min + (spec.rate_max - spec.rate_min) * rng.random::<f64>();
            let resets = rng.random_range(spec.resets_min..=spec.resets_max);
            let direction = if rng.random::<f64>() < spec.pay_fixed_prob { Direction::PayFixed } else { Direction::ReceiveFixed };
            Swap { id: i, counterparty, currency, notional, fixed_rate, direction, resets, start: 0.0 }
        })
        .collect())
}

#[derive(Serialize, Deserialize)]
struct Row {
    id: usize,
    counterparty: usize,
    currency: usize,
    notional: f64,
    rate: f64,
    direction: String,
    resets: usize,
    start: f64,
}

pub fn write_portfolio_csv<W: Write>(swaps: &[Swap], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for s in swaps {
        wr.serialize(Row {
            id: s.id,
            counterparty: s.counterparty,
            currency: s.currency,
            notional: s.notional,
            rate: s.fixed_rate,
            direction: match s.direction {
                Direction::PayFixed => "pay".into(),
                Direction::ReceiveFixed => "receive".into(),
            },
            resets: s.resets,
            start: s.start,
        })?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_portfolio_csv<R: Read>(r: R) -> Result<Vec<Swap>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rd.deserialize() {
        let row: Row = row?;
        let direction = match row.direction.as_str() {
            "pay" => Direction::PayFixed,
            "receive" => Direction::ReceiveFixed,
            other => return Err(XvaError::InvalidParams(format!("swap {}: unknown direction {other:?}", row.id))),
        };
        let s = Swap {
            id: row.id,
            counterparty: row.counterparty,
            currency: row.currency,
            notional: row.notional,
            fixed_rate: row.rate,
            direction,
            resets: row.resets,
            start: row.start,
        };
        s.validate()?;
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let swaps = generate_portfolio(&PortfolioSpec { n_trades: 25, ..PortfolioSpec::desk() }, 3).unwrap();
        let mut buf = Vec::new();
        write_portfolio_csv(&swaps, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("id,counterparty,currency,notional,rate,direction,resets,start\n"));
        assert_eq!(read_portfolio_csv(&buf[..]).unwrap(), swaps);
    }

    #[test]
    fn attributes_stay_in_range() {
        let spec = PortfolioSpec::desk();
        for s in generate_portfolio(&spec, 11).unwrap() {
            assert!(s.counterparty < 5 && s.currency < 2);
            assert!((1..=20).contains(&s.resets));
            assert!((0.005..=0.05).contains(&s.fixed_rate));
            assert_eq!(s.notional % 10_000.0, 0.0);
            assert!((10_000.0..=100_000.0).contains(&s.notional));
        }
    }

    #[test]
    fn empty_ranges_rejected() {
        let spec = PortfolioSpec { resets_min: 5, resets_max: 4, ..PortfolioSpec::desk() };
        assert!(generate_portfolio(&spec, 1).is_err());
        let spec = PortfolioSpec { n_trades: 0, ..PortfolioSpec::desk() };
        assert!(generate_portfolio(&spec, 1).unwrap().is_empty());
    }
}
