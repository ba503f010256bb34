use super::scenario::{StaticSample, StaticScenario};
use crate::error::{Result, XvaError};
use crate::stats::weighted_var_es;

#[derive(Debug, Clone, PartialEq, Default)]
pub enum VariationMargin {
    #[default]
    None,
    Constant(f64),
    /// One amount per scenario sample.
    Pathwise(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Margin {
    #[default]
    None,
    Fixed(f64),
    /// Survival-measure quantile at the given level (floored at zero).
    Quantile(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticParams {
    /// Bank default probability.
    pub gamma: f64,
    pub hurdle: f64,
    pub es_level: f64,
    pub vm: VariationMargin,
    /// Received initial margin, sized on `+(P - VM)`.
    pub rim: Margin,
    /// Posted initial margin, sized on `-(P - VM)`.
    pub pim: Margin,
    /// Use capital at risk as an additional funding source.
    pub capital_funding: bool,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for StaticParams {
    fn default() -> Self {
        StaticParams {
            gamma: 0.02,
            hurdle: 0.1,
            es_level: 0.975,
            vm: VariationMargin::None,
            rim: Margin::None,
            pim: Margin::None,
            capital_funding: false,
            tolerance: 1e-10,
            max_iterations: 200,
        }
    }
}

impl StaticParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(XvaError::InvalidParams(m));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1)", self.gamma));
        }
        if !(self.hurdle >= 0.0) {
            return bad(format!("hurdle {} must be non-negative", self.hurdle));
        }
        if !(self.es_level > 0.0 && self.es_level < 1.0) {
            return bad(format!("ES level {} outside (0, 1)", self.es_level));
        }
        for m in [self.rim, self.pim] {
            match m {
                Margin::Quantile(a) if !(a > 0.0 && a < 1.0) => return bad(format!("margin level {a} outside (0, 1)")),
                Margin::Fixed(v) if !(v >= 0.0) => return bad(format!("margin {v} must be non-negative")),
                _ => {}
            }
        }
        Ok(())
    }
}

/// Per-sample cash-flow components; `°` parts are paid while the bank
/// survives, `•` parts at its default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleFlows {
    pub credit_circ: f64,
    pub credit_bullet: f64,
    pub funding_circ: f64,
    /// Includes `im_bullet`.
    pub funding_bullet: f64,
    pub im_bullet: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticXvaReport {
    pub mtm: f64,
    pub cva: f64,
    pub dva: f64,
    pub fva: f64,
    pub fda: f64,
    pub mva: f64,
    pub mda: f64,
    pub fv: f64,
    pub ca: f64,
    pub cl: f64,
    pub ec: f64,
    pub cr: f64,
    pub scr: f64,
    pub kva: f64,
    pub ftp: f64,
    /// Survival-measure mean of the variation margin.
    pub vm: f64,
    pub rim: f64,
    pub pim: f64,
    pub iterations: usize,
    pub fva_history: Vec<f64>,
    pub kva_history: Vec<f64>,
    /// Shareholder loss `L° = J L` per sample.
    pub l_circ: Vec<f64>,
    pub flows: Vec<SampleFlows>,
}

impl StaticXvaReport {
    pub fn rm(&self) -> f64 {
        self.kva
    }

    /// Metric name and value pairs in a fixed order.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("MtM", self.mtm),
            ("CVA", self.cva),
            ("DVA", self.dva),
            ("FVA", self.fva),
            ("FDA", self.fda),
            ("MVA", self.mva),
            ("MDA", self.mda),
            ("FV", self.fv),
            ("CA", self.ca),
            ("CL", self.cl),
            ("EC", self.ec),
            ("CR", self.cr),
            ("SCR", self.scr),
            ("KVA", self.kva),
            ("RM", self.rm()),
            ("FTP", self.ftp),
            ("VM", self.vm),
            ("RIM", self.rim),
            ("PIM", self.pim),
        ]
    }
}

struct Setup<'a> {
    scen: &'a StaticScenario,
    par: &'a StaticParams,
    vm: Vec<f64>,
    vm_mean: f64,
    mtm: f64,
    rim: f64,
    pim: f64,
    cva: f64,
    mva: f64,
}

fn check_bank_default(scen: &StaticScenario, gamma: f64) -> Result<()> {
    let found = scen.bank_default_probability();
    if (found - gamma).abs() > 1e-12 {
        return Err(XvaError::InconsistentBankDefault { gamma, found });
    }
    Ok(())
}

fn setup<'a>(scen: &'a StaticScenario, par: &'a StaticParams) -> Result<Setup<'a>> {
    par.validate()?;
    check_bank_default(scen, par.gamma)?;
    let n = scen.len();
    let vm = match &par.vm {
        VariationMargin::None => vec![0.0; n],
        VariationMargin::Constant(v) => vec![*v; n],
        VariationMargin::Pathwise(v) if v.len() == n => v.clone(),
        VariationMargin::Pathwise(v) => return Err(XvaError::DimensionMismatch { expected: n, got: v.len() }),
    };
    let margin = |m: Margin, sign: f64| match m {
        Margin::None => 0.0,
        Margin::Fixed(v) => v,
        Margin::Quantile(a) => {
            let (xs, ws) = scen.survival_law(|i, s| sign * (s.cash_flow - vm[i]));
            weighted_var_es(&xs, &ws, a).0.max(0.0)
        }
    };
    let rim = margin(par.rim, 1.0);
    let pim = margin(par.pim, -1.0);
    let vm_mean = scen.survival_mean_at(|i, _| vm[i]);
    let mtm = scen.survival_mean(|s| s.cash_flow);
    let cva = scen.survival_mean_at(|i, s| if s.client_survives { 0.0 } else { (s.cash_flow - vm[i] - rim).max(0.0) });
    let mva = par.gamma * pim;
    Ok(Setup { scen, par, vm, vm_mean, mtm, rim, pim, cva, mva })
}

impl Setup<'_> {
    /// Funding base before the FVA itself: MtM - VM - CVA - MVA.
    fn funding_base(&self) -> f64 {
        self.mtm - self.vm_mean - self.cva - self.mva
    }

    fn fva(&self, cr: f64) -> f64 {
        let g = self.par.gamma;
        g / (1.0 + g) * (self.funding_base() - cr).max(0.0)
    }

    fn flows(&self, fva: f64, cr: f64) -> (Vec<SampleFlows>, Vec<f64>) {
        let g = self.par.gamma;
        let ca = self.cva + fva + self.mva;
        let borrowed = (self.mtm - self.vm_mean - ca - cr).max(0.0);
        let mut flows = Vec::with_capacity(self.scen.len());
        let mut l = Vec::with_capacity(self.scen.len());
        for (i, s) in self.scen.samples().iter().enumerate() {
            let e = s.cash_flow - self.vm[i] - self.rim;
            let lost = if s.client_survives { 0.0 } else { e.max(0.0) };
            let f = if s.bank_survives {
                SampleFlows {
                    credit_circ: lost,
                    credit_bullet: 0.0,
                    funding_circ: g * borrowed + g * self.pim,
                    funding_bullet: 0.0,
                    im_bullet: 0.0,
                }
            } else {
                let im_bullet = self.pim - g * self.pim;
                SampleFlows {
                    credit_circ: 0.0,
                    credit_bullet: (-e).max(0.0) - lost,
                    funding_circ: 0.0,
                    funding_bullet: borrowed - g * borrowed + im_bullet,
                    im_bullet,
                }
            };
            let j = if s.bank_survives { 1.0 } else { 0.0 };
            l.push(f.credit_circ + f.funding_circ - j * ca);
            flows.push(f);
        }
        (flows, l)
    }

    fn expected_shortfall(&self, l: &[f64]) -> f64 {
        let (xs, ws) = self.scen.survival_law(|i, _| l[i]);
        weighted_var_es(&xs, &ws, self.par.es_level).1
    }

    fn report(&self, fva: f64, ec: f64, kva: f64, cr_funding: f64, iterations: usize, hist: (Vec<f64>, Vec<f64>)) -> Result<StaticXvaReport> {
        let (flows, l_circ) = self.flows(fva, cr_funding);
        let scen = self.scen;
        let q = |f: &dyn Fn(usize, &StaticSample) -> f64| -> f64 {
            scen.samples().iter().enumerate().map(|(i, s)| s.weight * f(i, s)).sum()
        };
        let dead = |s: &StaticSample| if s.bank_survives { 0.0 } else { 1.0 };
        let dva = q(&|i, s| flows[i].credit_bullet + dead(s) * self.cva);
        let fda = q(&|i, s| flows[i].funding_bullet - flows[i].im_bullet + dead(s) * fva);
        let mda = q(&|i, s| flows[i].im_bullet + dead(s) * self.mva);
        let fv = q(&|i, _| {
            let f = &flows[i];
            (f.credit_circ - f.credit_bullet) + (f.funding_circ - f.funding_bullet)
        });
        let centred = q(&|i, _| l_circ[i]);
        let scale = 1.0 + scen.mean(|s| s.cash_flow.abs());
        if centred.abs() > 1e-9 * scale {
            return Err(XvaError::Invariants(vec![format!("shareholder loss mean {centred:e} is not zero")]));
        }
        let ca = self.cva + fva + self.mva;
        Ok(StaticXvaReport {
            mtm: self.mtm,
            cva: self.cva,
            dva,
            fva,
            fda,
            mva: self.mva,
            mda,
            fv,
            ca,
            cl: dva + fda + mda,
            ec,
            cr: ec.max(kva),
            scr: (ec - kva).max(0.0),
            kva,
            ftp: ca + kva,
            vm: self.vm_mean,
            rim: self.rim,
            pim: self.pim,
            iterations,
            fva_history: hist.0,
            kva_history: hist.1,
            l_circ,
            flows,
        })
    }
}

fn kva_of(ec: f64, h: f64) -> f64 {
    h / (1.0 + h) * ec
}

/// Explicit one-period XVAs without collateral and without capital used as
/// funding.
pub fn solve_static_baseline(scen: &StaticScenario, par: &StaticParams) -> Result<StaticXvaReport> {
    if par.vm != VariationMargin::None || par.rim != Margin::None || par.pim != Margin::None {
        return Err(XvaError::InvalidParams("baseline solver takes no collateral; use the refined solver".into()));
    }
    let st = setup(scen, par)?;
    let fva = st.fva(0.0);
    let (_, l) = st.flows(fva, 0.0);
    let ec = st.expected_shortfall(&l);
    let kva = kva_of(ec, par.hurdle);
    st.report(fva, ec, kva, 0.0, 1, (vec![fva], vec![kva]))
}

/// Collateralised one-period XVAs, optionally funding with capital at risk,
/// solved by Picard iteration on (L, FVA, KVA).
pub fn solve_static_refined(scen: &StaticScenario, par: &StaticParams) -> Result<StaticXvaReport> {
    let st = setup(scen, par)?;
    let cr_of = |ec: f64, kva: f64| if par.capital_funding { ec.max(kva) } else { 0.0 };
    let (mut fva, mut kva, mut ec) = (st.fva(0.0), 0.0, 0.0);
    let mut hist = (vec![fva], vec![kva]);
    let mut last_change = f64::INFINITY;
    for k in 1..=par.max_iterations {
        let (_, l) = st.flows(fva, cr_of(ec, kva));
        let ec_k = st.expected_shortfall(&l);
        let kva_k = kva_of(ec_k, par.hurdle);
        let fva_k = st.fva(cr_of(ec_k, kva_k));
        last_change = (fva_k - fva).abs().max((kva_k - kva).abs());
        (fva, kva, ec) = (fva_k, kva_k, ec_k);
        hist.0.push(fva);
        hist.1.push(kva);
        if last_change < par.tolerance {
            return st.report(fva, ec, kva, cr_of(ec, kva), k, hist);
        }
    }
    Err(XvaError::NonConvergence { iterations: par.max_iterations, last_change })
}
