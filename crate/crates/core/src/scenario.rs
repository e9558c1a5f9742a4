//! A complete link configuration evaluated at a given total SNR.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    decoding_profile, fso_log_moments, DecodingProfile, FsoLogMoments, HarqParams, Method,
};
use crate::channel::{FsoLinkParams, RfLinkParams, SystemPower};
use crate::error::Result;
use crate::mc::{simulate_harq, McConfig, McEstimate};

/// Link templates whose powers are filled in from the total SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub fso: FsoLinkParams,
    pub rf: RfLinkParams,
    pub harq: HarqParams,
    /// Fraction of the total power given to the FSO link.
    pub split: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.fso.validate()?;
        self.rf.validate()?;
        self.harq.validate()?;
        SystemPower::with_split(0.0, self.split).map(|_| ())
    }

    /// Both links with their powers set for total SNR `snr_db`.
    pub fn links_at(&self, snr_db: f64) -> Result<(FsoLinkParams, RfLinkParams)> {
        let p = SystemPower::with_split(snr_db, self.split)?;
        let fso = self.fso.with_power(p.p_fso());
        let rf = self.rf.with_consumed_power(p.p_cons());
        fso.validate()?;
        rf.validate()?;
        Ok((fso, rf))
    }

    pub fn moments_at(&self, snr_db: f64) -> Result<FsoLogMoments> {
        let (fso, _) = self.links_at(snr_db)?;
        fso_log_moments(&fso, self.harq.psi)
    }

    /// Analytic decoding profile; `moments` may be passed in to share them
    /// between methods.
    pub fn profile_at(
        &self,
        snr_db: f64,
        method: Method,
        moments: Option<FsoLogMoments>,
    ) -> Result<DecodingProfile> {
        let (_, rf) = self.links_at(snr_db)?;
        let moments = match moments {
            Some(m) => m,
            None => self.moments_at(snr_db)?,
        };
        decoding_profile(method, &self.harq, &moments, &rf)
    }

    pub fn simulate_at(&self, snr_db: f64, cfg: &McConfig) -> Result<McEstimate> {
        let (fso, rf) = self.links_at(snr_db)?;
        simulate_harq(&fso, &rf, &self.harq, cfg)
    }
}
