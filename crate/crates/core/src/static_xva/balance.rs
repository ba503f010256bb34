use super::scenario::StaticScenario;
use super::solve::StaticXvaReport;
use crate::error::{Result, XvaError};

/// Largest per-sample violations of the end-of-period capital identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceResiduals {
    /// `CET1_1 - (CET1_0 - L)`.
    pub cet1: f64,
    /// `SHC_1 - (SHC_0 - (L + KVA_1 - KVA_0))`.
    pub shc: f64,
}

impl BalanceResiduals {
    pub fn max(&self) -> f64 {
        self.cet1.max(self.shc)
    }
}

/// Runs the bank's accounts through the period and checks the capital
/// identities sample by sample.
///
/// At time 0 the clean margin holds the MtM, reserve capital the CA, the
/// risk margin the KVA and shareholder capital at risk the SCR; uninvested
/// capital starts empty. The clean desk hedges perfectly (`H = P - MtM`).
/// At time 1 every marked-to-model account is released, so uninvested
/// capital absorbs the trading cash flows.
pub fn balance_sheet_check(report: &StaticXvaReport, scen: &StaticScenario) -> Result<BalanceResiduals> {
    if report.flows.len() != scen.len() {
        return Err(XvaError::DimensionMismatch { expected: scen.len(), got: report.flows.len() });
    }
    let (cm0, rc0, rm0, scr0, uc0) = (report.mtm, report.ca, report.kva, report.scr, 0.0);
    let cet1_0 = rm0 + scr0 + uc0;
    let shc_0 = scr0 + uc0;
    let mut worst = BalanceResiduals { cet1: 0.0, shc: 0.0 };
    for (s, f) in scen.samples().iter().zip(&report.flows) {
        let credit = f.credit_circ - f.credit_bullet;
        let funding = f.funding_circ - f.funding_bullet;
        let hedge = s.cash_flow - report.mtm;
        let uc1 = (rc0 + rm0 + scr0 + uc0 - cm0) + (s.cash_flow - credit - funding - hedge);
        let (cet1_1, shc_1, kva_1) = (uc1, uc1, 0.0);
        let j = if s.bank_survives { 1.0 } else { 0.0 };
        // L = L° - L•, with L• = C• + F• + (1 - J) CA
        let l_bullet = f.credit_bullet + f.funding_bullet + (1.0 - j) * report.ca;
        let l_circ = f.credit_circ + f.funding_circ - j * report.ca;
        let loss = l_circ - l_bullet;
        worst.cet1 = worst.cet1.max((cet1_1 - (cet1_0 - loss)).abs());
        worst.shc = worst.shc.max((shc_1 - (shc_0 - (loss + kva_1 - report.kva))).abs());
    }
    Ok(worst)
}
