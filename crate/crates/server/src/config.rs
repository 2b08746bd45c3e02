use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::ValueEnum;
use zkadvice_core::attestation::{AttestationBackend, ExternalBackend, ExternalConfig, MockBackend};
use zkadvice_core::inference::QuestionnaireSpec;
use zkadvice_core::llm::{LlmClient, ProviderConfig, RemoteConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Mock,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderKind {
    Stub,
    Remote,
}

pub fn build_backend(kind: BackendKind, external_config: Option<&Path>) -> Result<Arc<dyn AttestationBackend>, String> {
    match kind {
        BackendKind::Mock => Ok(Arc::new(MockBackend::default())),
        BackendKind::External => {
            let path = external_config.ok_or("the external backend needs --external-config")?;
            let raw = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut config = ExternalConfig::from_json(&raw).map_err(|e| format!("{}: {e}", path.display()))?;
            if config.program_image.is_relative() {
                if let Some(dir) = path.parent() {
                    config.program_image = dir.join(&config.program_image);
                }
            }
            Ok(Arc::new(ExternalBackend::new(config)))
        }
    }
}

pub fn build_provider(kind: ProviderKind, remote_config: Option<&Path>) -> Result<Arc<dyn LlmClient>, String> {
    let config = match kind {
        ProviderKind::Stub => ProviderConfig::Stub,
        ProviderKind::Remote => {
            let path = remote_config.ok_or("the remote provider needs --remote-config")?;
            let raw = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let cfg: RemoteConfig = serde_json::from_slice(&raw).map_err(|e| format!("{}: {e}", path.display()))?;
            ProviderConfig::Remote(cfg)
        }
    };
    Ok(config.build())
}

pub fn load_spec(path: Option<&PathBuf>) -> Result<QuestionnaireSpec, String> {
    match path {
        None => Ok(QuestionnaireSpec::default_spec()),
        Some(p) => {
            let raw = std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()))?;
            QuestionnaireSpec::from_json(&raw).map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}
