//! Run configuration shared by `synth` and `bench`.

use std::time::{Duration, Instant};

use certificate_engine::{SynthOptions, TemplateConfig};

use crate::error::{CliError, Result};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub template: TemplateConfig,
    pub handelman_degree: Option<u32>,
    pub timeout: Option<Duration>,
}

impl RunConfig {
    /// One of `A`, `B`, `C1`, `C2`, `C3`.
    pub fn preset(name: &str) -> Result<Self> {
        let template = TemplateConfig::preset(name)
            .ok_or_else(|| CliError::Input(format!("unknown configuration {name:?} (expected A, B, C1, C2 or C3)")))?;
        Ok(RunConfig {
            template,
            handelman_degree: None,
            timeout: None,
        })
    }

    /// Overrides template degrees; the configuration is then reported as `custom`.
    pub fn with_degrees(mut self, u: Option<u32>, r: Option<u32>, eta: Option<u32>) -> Self {
        if u.is_none() && r.is_none() && eta.is_none() {
            return self;
        }
        let t = &mut self.template;
        t.deg_u = u.unwrap_or(t.deg_u);
        t.deg_r = r.unwrap_or(t.deg_r);
        t.deg_eta = eta.unwrap_or(t.deg_eta);
        t.name = "custom".into();
        self
    }

    pub fn synth_options(&self, start: Instant) -> SynthOptions {
        SynthOptions {
            handelman_degree: self.handelman_degree,
            deadline: self.timeout.map(|t| start + t),
            ..Default::default()
        }
    }
}
