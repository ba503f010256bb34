use super::{Surface, XvaRunState};
use crate::stats::Band;

/// Mean and 5%/95% quantile bands of each metric over time.
#[derive(Debug, Clone)]
pub struct XvaProfiles {
    pub times: Vec<f64>,
    pub metrics: Vec<(String, Vec<Band>)>,
}

impl XvaProfiles {
    pub fn get(&self, name: &str) -> Option<&[Band]> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

fn flat(values: &[f64]) -> Vec<Band> {
    values.iter().map(|&v| Band { mean: v, p05: v, p95: v, stdev: 0.0, n: 1 }).collect()
}

pub fn xva_profiles(state: &XvaRunState) -> XvaProfiles {
    let surfaces: Vec<(&str, Surface)> = vec![
        ("mtm", state.mtm.clone()),
        ("cva", state.cva.total.clone()),
        ("mva", state.mva.total.clone()),
        ("fva", state.fva.clone()),
        ("ec", state.ec.clone()),
        ("kva", state.kva.clone()),
        ("cr", state.cr.clone()),
        ("loss", state.loss.clone()),
        ("vm", state.vm_total()),
        ("rim", state.rim_total()),
        ("pim", state.pim_total()),
        ("fva_no_offset", state.naive.fva_no_offset.clone()),
        ("fva_no_capital", state.naive.fva_no_capital.clone()),
        ("kva_naive", state.naive.kva.clone()),
    ];
    let mut metrics: Vec<(String, Vec<Band>)> = surfaces.into_iter().map(|(n, s)| (n.to_string(), s.profile())).collect();
    metrics.push(("ec_unconditional".into(), flat(&state.naive.ec_unconditional)));
    metrics.push(("pim_unconditional".into(), flat(&state.naive.pim_unconditional)));
    XvaProfiles { times: state.times.clone(), metrics }
}
