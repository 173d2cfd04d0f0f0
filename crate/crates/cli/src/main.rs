mod backend;
mod commands;
mod error;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mediaseal::fingerprint::Algorithm;
use mediaseal::registry::FaultMode;
use mediaseal::trust::SecurityLevel;
use mediaseal::validation::ValidationMode;
use mediaseal::watermark::WatermarkMode;

#[derive(Parser, Debug)]
#[command(name = "mediaseal", version, about = "Sign, watermark, fingerprint, verify and attack MIAC media assets")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    /// Base URL of a running registry server.
    #[arg(long, global = true, conflicts_with = "data_dir")]
    pub registry: Option<String>,
    /// Local registry log, default trust list and watermark key location.
    #[arg(long, global = true, env = "MEDIASEAL_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub trust_list: Option<PathBuf>,
    /// 17-byte watermark key file.
    #[arg(long, global = true)]
    pub watermark_key: Option<PathBuf>,
    /// Seed for key generation, fixtures and attacks.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, env = "MEDIASEAL_AUTH_TOKEN", hide_env_values = true)]
    pub auth_token: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Human,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sign an asset: hash, sign and embed a manifest.
    Sign(SignArgs),
    /// Validate an asset and print the report. Exits 0 whatever the result.
    Verify(VerifyArgs),
    /// Embed or detect the robust imperceptible watermark.
    #[command(subcommand)]
    Watermark(WatermarkCmd),
    /// Compute or match perceptual fingerprints.
    #[command(subcommand)]
    Fingerprint(FingerprintCmd),
    /// Run an attack on an asset, a scenario, or the oracle simulation.
    Attack(AttackArgs),
    /// Serve, fill or fault-inject the manifest registry.
    #[command(subcommand)]
    Registry(RegistryCmd),
    /// Show or edit the trust list of signer certificates.
    #[command(subcommand)]
    Trust(TrustCmd),
    /// Generate a signing or watermark key.
    #[command(subcommand)]
    Keygen(KeygenCmd),
    /// Write a synthetic test image as a MIAC asset.
    Fixture(FixtureArgs),
}

#[derive(Args, Debug)]
pub struct SignArgs {
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub cert_id: String,
    /// Signing key file (64 hex digits).
    #[arg(long)]
    pub key: PathBuf,
    /// Defaults to the certificate owner.
    #[arg(long)]
    pub signer: Option<String>,
    #[arg(long = "assertion")]
    pub assertions: Vec<String>,
    /// `kind` or `kind@left,top,right,bottom`, e.g. `ai_inpainted@0,0,32,32`.
    #[arg(long = "action")]
    pub actions: Vec<String>,
    /// `description` or `description=<sha256 hex of the ingredient pixels>`.
    #[arg(long = "ingredient")]
    pub ingredients: Vec<String>,
    /// Defaults to the certificate's level.
    #[arg(long)]
    pub security_level: Option<SecurityLevel>,
    /// Embed a robust watermark before signing.
    #[arg(long)]
    pub watermark: bool,
    /// Defaults to a value derived from the pixels.
    #[arg(long, requires = "watermark")]
    pub watermark_id: Option<u64>,
    /// Store the signed manifest in the registry.
    #[arg(long)]
    pub register: bool,
    /// Unix seconds; defaults to now.
    #[arg(long)]
    pub timestamp: Option<u64>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub input: PathBuf,
    #[arg(long, default_value = "short_circuit")]
    pub mode: ValidationMode,
    #[arg(long, default_value_t = mediaseal::fingerprint::DEFAULT_THRESHOLD)]
    pub tau: u32,
    #[arg(long, default_value = "dct_wave")]
    pub algorithm: Algorithm,
}

#[derive(Subcommand, Debug)]
pub enum WatermarkCmd {
    Embed {
        input: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        id: u64,
    },
    Detect {
        input: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum FingerprintCmd {
    /// Print the asset's fingerprints (both algorithms unless one is named).
    Compute {
        input: PathBuf,
        #[arg(long)]
        algorithm: Option<Algorithm>,
    },
    /// Compare with another asset, or search the registry.
    Match {
        input: PathBuf,
        #[arg(long)]
        against: Option<PathBuf>,
        #[arg(long, default_value_t = mediaseal::fingerprint::DEFAULT_THRESHOLD)]
        tau: u32,
        #[arg(long, default_value = "dct_wave")]
        algorithm: Algorithm,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttackName {
    StripManifest,
    ResignWithCert,
    ForgePerceptibleMark,
    CopyPasteRegion,
    RetroactiveFalseAssertion,
    TamperInsecureMetadata,
    RemoveWatermark,
    ForgeWatermark,
    PerturbFingerprint,
    CraftHashCollision,
    RegistryDos,
    #[value(name = "scenario-1")]
    Scenario1,
    #[value(name = "scenario-2")]
    Scenario2,
    #[value(name = "scenario-3")]
    Scenario3,
    OracleSim,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViewerArg {
    High,
    Low,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Revocation {
    Pre,
    Post,
    Both,
}

#[derive(Args, Debug)]
pub struct AttackArgs {
    pub name: AttackName,
    /// Asset to attack (not used by scenarios, oracle-sim or registry-dos).
    pub input: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Attack parameters as a JSON object, e.g. `{"text":"AI"}`.
    #[arg(long, default_value = "{}")]
    pub params: String,
    #[arg(long)]
    pub donor: Option<PathBuf>,
    /// Signing key the attacker holds.
    #[arg(long)]
    pub key: Option<PathBuf>,
    #[arg(long)]
    pub cert_id: Option<String>,
    #[arg(long)]
    pub timestamp: Option<u64>,
    #[arg(long, value_enum, default_value_t = ViewerArg::High)]
    pub viewer: ViewerArg,
    /// scenario-1 edit region `left,top,right,bottom`.
    #[arg(long, default_value = "40,40,72,72")]
    pub region: String,
    /// scenario-2 variants to run.
    #[arg(long, value_enum, default_value_t = Revocation::Both)]
    pub revocation: Revocation,
    /// scenario-3 metadata field to tamper with.
    #[arg(long, default_value = "capture_time")]
    pub tamper_key: String,
    /// oracle-sim query budget.
    #[arg(long, default_value_t = 5000)]
    pub budget: u32,
}

#[derive(Subcommand, Debug)]
pub enum RegistryCmd {
    /// Run the registry HTTP server on 127.0.0.1.
    Serve {
        #[arg(long, default_value_t = 8700)]
        port: u16,
        #[arg(long, default_value_t = 10)]
        rate_limit: u32,
        /// Seconds.
        #[arg(long, default_value_t = 60)]
        rate_window: u64,
    },
    /// Register the manifest embedded in an asset.
    Store { input: PathBuf },
    /// Put a running registry's lookups into failure modes.
    Fault {
        #[arg(long, value_parser = parse_fault, default_value = "normal")]
        manifest_lookup: FaultMode,
        #[arg(long, value_parser = parse_fault, default_value = "normal")]
        watermark_lookup: FaultMode,
        #[arg(long, value_parser = parse_fault, default_value = "normal")]
        fingerprint_lookup: FaultMode,
    },
}

fn parse_fault(s: &str) -> Result<FaultMode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned()))
        .map_err(|_| format!("expected normal, no_access or missing_manifest, got {s:?}"))
}

#[derive(Subcommand, Debug)]
pub enum TrustCmd {
    Show,
    Add {
        #[arg(long)]
        cert_id: String,
        /// Signing key file whose public half is listed.
        #[arg(long, required_unless_present = "public_key", conflicts_with = "public_key")]
        key: Option<PathBuf>,
        /// 64 hex digits.
        #[arg(long)]
        public_key: Option<String>,
        #[arg(long)]
        owner: String,
        #[arg(long)]
        security_level: SecurityLevel,
    },
    Revoke {
        cert_id: String,
        /// Unix seconds; defaults to now.
        #[arg(long)]
        at: Option<u64>,
    },
}

#[derive(Subcommand, Debug)]
pub enum KeygenCmd {
    Signing {
        #[arg(long, short)]
        out: PathBuf,
    },
    Watermark {
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, value_parser = parse_mode, default_value = "robust")]
        mode: WatermarkMode,
    },
}

fn parse_mode(s: &str) -> Result<WatermarkMode, String> {
    match s {
        "robust" => Ok(WatermarkMode::Robust),
        "fragile" => Ok(WatermarkMode::Fragile),
        other => Err(format!("expected robust or fragile, got {other:?}")),
    }
}

#[derive(Args, Debug)]
pub struct FixtureArgs {
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub width: u32,
    #[arg(long, default_value_t = 128)]
    pub height: u32,
    #[arg(long, default_value_t = 3)]
    pub channels: u8,
    /// Insecure metadata `key=value`.
    #[arg(long = "meta")]
    pub meta: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
