use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use ed25519_dalek::SigningKey;
use rand::rngs::OsRng;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use serde_json::{json, Value};

use mediaseal::attack::{
    manifest_hash_matches, oracle_attack_simulation, run_attack, scenario_ai_faked_as_authentic,
    scenario_authentic_faked_as_ai, scenario_manipulated_metadata, AttackContext, AttackKind, AttackSpec, Endpoint,
    OracleAttackConfig, ScenarioResult, Viewer,
};
use mediaseal::canonical;
use mediaseal::fingerprint::{compute_fingerprint, hamming_distance, thumbnail, Algorithm};
use mediaseal::fixtures;
use mediaseal::manifest::{
    embed_manifest, hard_hash, sign_manifest, Action, ActionKind, EditRegion, Ingredient, Manifest, SignedManifest,
};
use mediaseal::media::{InsecureMetadata, MediaAsset, PixelImage};
use mediaseal::registry::{FaultInjection, Registry, RegistryConfig, RegistryEntry, RegistryLookup};
use mediaseal::trust::{CertificateRecord, TrustList};
use mediaseal::validation::{validate, ValidationContext};
use mediaseal::watermark::{decode_watermark, embed_watermark, WatermarkKey, WatermarkPayload};
use mediaseal_server::ServerConfig;

use crate::backend::{Backend, RemoteRegistry};
use crate::error::CliError;
use crate::render;
use crate::*;

pub fn run(cli: Cli) -> Result<(), CliError> {
    let env = Env { g: cli.global };
    match cli.command {
        Command::Sign(a) => sign(&env, a),
        Command::Verify(a) => verify(&env, a),
        Command::Watermark(c) => watermark(&env, c),
        Command::Fingerprint(c) => fingerprint(&env, c),
        Command::Attack(a) => attack(&env, a),
        Command::Registry(c) => registry(&env, c),
        Command::Trust(c) => trust(&env, c),
        Command::Keygen(c) => keygen(&env, c),
        Command::Fixture(a) => fixture(&env, a),
    }
}

struct Env {
    g: Global,
}

impl Env {
    fn data_dir(&self) -> PathBuf {
        self.g.data_dir.clone().unwrap_or_else(|| PathBuf::from("mediaseal-data"))
    }

    fn remote(&self) -> Option<RemoteRegistry> {
        self.g.registry.as_deref().map(|url| RemoteRegistry::new(url, self.g.auth_token.clone()))
    }

    fn backend(&self) -> Result<Backend, CliError> {
        if let Some(remote) = self.remote() {
            return Ok(Backend::Remote(remote));
        }
        let dir = self.data_dir();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(dir.display(), e))?;
        Ok(Backend::Local(Registry::open(&dir, RegistryConfig::default())?))
    }

    /// Explicit `--trust-list`, else the data directory's copy unless a
    /// remote registry is in use.
    fn trust_path(&self) -> Option<PathBuf> {
        match (&self.g.trust_list, &self.g.registry) {
            (Some(p), _) => Some(p.clone()),
            (None, None) => Some(self.data_dir().join("trustlist.json")),
            (None, Some(_)) => None,
        }
    }

    fn load_trust(&self) -> Result<TrustList, CliError> {
        match self.trust_path() {
            Some(path) if path.exists() => {
                let bytes = std::fs::read(&path).map_err(|e| CliError::io(path.display(), e))?;
                Ok(TrustList::from_bytes(&bytes)?)
            }
            Some(_) => Ok(TrustList::new()),
            None => self.remote().expect("remote registry configured").trust_list(),
        }
    }

    fn save_trust(&self, list: &TrustList) -> Result<PathBuf, CliError> {
        let path = self
            .trust_path()
            .ok_or_else(|| CliError::Usage("the server's trust list is read-only here; pass --trust-list".into()))?;
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent.display(), e))?;
        }
        std::fs::write(&path, list.to_bytes()).map_err(|e| CliError::io(path.display(), e))?;
        Ok(path)
    }

    fn watermark_key(&self) -> Result<Option<WatermarkKey>, CliError> {
        let path = match (&self.g.watermark_key, &self.g.registry) {
            (Some(p), _) => p.clone(),
            (None, None) => {
                let p = self.data_dir().join("watermark.key");
                if !p.exists() {
                    return Ok(None);
                }
                p
            }
            (None, Some(_)) => return Ok(None),
        };
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(path.display(), e))?;
        Ok(Some(WatermarkKey::from_bytes(&bytes)?))
    }

    fn require_watermark_key(&self) -> Result<WatermarkKey, CliError> {
        self.watermark_key()?.ok_or_else(|| {
            CliError::Usage("no watermark key: pass --watermark-key or run `mediaseal keygen watermark`".into())
        })
    }

    fn seed(&self) -> u64 {
        self.g.seed.unwrap_or(0)
    }

    fn emit<T: Serialize + ?Sized>(&self, value: &T, human: impl FnOnce() -> String) {
        match self.g.format {
            Format::Json => println!("{}", canonical::to_string(value)),
            Format::Human => {
                let text = human();
                println!("{}", text.trim_end());
            }
        }
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(1)
}

fn read_asset(path: &Path) -> Result<MediaAsset, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path.display(), e))?;
    MediaAsset::from_bytes(&bytes).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn write_asset(path: &Path, asset: &MediaAsset) -> Result<(), CliError> {
    std::fs::write(path, asset.to_bytes()).map_err(|e| CliError::io(path.display(), e))
}

fn write_new(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if path.exists() {
        return Err(CliError::Usage(format!("{} already exists; refusing to overwrite a key", path.display())));
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path.display(), e))
}

fn read_signing_key(path: &Path) -> Result<SigningKey, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    let bytes: [u8; 32] = hex::decode(text.trim())
        .ok()
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| CliError::Validation(format!("{}: signing key must be 64 hex digits", path.display())))?;
    Ok(SigningKey::from_bytes(&bytes))
}

fn rng(seed: Option<u64>) -> Box<dyn RngCore> {
    match seed {
        Some(s) => Box::new(ChaCha20Rng::seed_from_u64(s)),
        None => Box::new(OsRng),
    }
}

/// Watermark id taken from the first eight bytes of the pixel hash.
fn derived_watermark_id(image: &PixelImage) -> u64 {
    u64::from_be_bytes(hard_hash(image).as_bytes()[..8].try_into().unwrap())
}

fn parse_action(spec: &str, timestamp: u64) -> Result<Action, CliError> {
    let (kind, region) = match spec.split_once('@') {
        Some((k, r)) => (k, Some(r)),
        None => (spec, None),
    };
    let kind: ActionKind = serde_json::from_value(Value::String(kind.to_owned()))
        .map_err(|_| CliError::Usage(format!("unknown action kind {kind:?}")))?;
    let mut action = Action::new(kind, "mediaseal-cli", timestamp);
    if let Some(r) = region {
        let (l, t, rr, b) = parse_box(r)?;
        action = action.in_region(EditRegion::new(l, t, rr, b)?);
    }
    Ok(action)
}

fn parse_box(text: &str) -> Result<(u32, u32, u32, u32), CliError> {
    let parts: Vec<u32> = text.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>().map_err(|_| {
        CliError::Usage(format!("region {text:?} must be four comma-separated integers left,top,right,bottom"))
    })?;
    match parts[..] {
        [l, t, r, b] => Ok((l, t, r, b)),
        _ => Err(CliError::Usage(format!("region {text:?} must have four values"))),
    }
}

fn parse_ingredient(spec: &str) -> Result<Ingredient, CliError> {
    let (description, hash) = match spec.rsplit_once('=') {
        Some((d, h)) => (d, Some(h.parse().map_err(|e| CliError::Usage(format!("ingredient hash: {e}")))?)),
        None => (spec, None),
    };
    Ok(Ingredient { description: description.to_owned(), thumbnail_hash: hash })
}

/// Registry entry for a signed asset: both fingerprints and the thumbnail.
fn registry_entry(asset: &MediaAsset, signed: SignedManifest, stored_at: u64) -> RegistryEntry {
    let fingerprints = [Algorithm::BlockMean, Algorithm::DctWave]
        .into_iter()
        .filter_map(|a| compute_fingerprint(&asset.image, a).ok());
    RegistryEntry::new(signed, stored_at).with_fingerprints(fingerprints).with_thumbnail(thumbnail(&asset.image).ok())
}

#[derive(Serialize)]
struct Signed {
    output: String,
    content_hash: String,
    certificate_id: String,
    watermark_id: Option<u64>,
    registered: bool,
}

fn sign(env: &Env, a: SignArgs) -> Result<(), CliError> {
    let mut asset = read_asset(&a.input)?;
    let trust = env.load_trust()?;
    let key = read_signing_key(&a.key)?;
    let record = trust
        .get(&a.cert_id)
        .ok_or_else(|| CliError::Validation(format!("unknown certificate {:?}", a.cert_id)))?
        .clone();
    let issued_at = a.timestamp.unwrap_or_else(now);

    let mut watermark_id = None;
    if a.watermark {
        let wk = env.require_watermark_key()?;
        let id = a.watermark_id.unwrap_or_else(|| derived_watermark_id(&asset.image));
        asset.image = embed_watermark(&asset.image, WatermarkPayload::new(id), &wk)?;
        watermark_id = Some(id);
    }

    let mut m = Manifest::for_image(
        &asset.image,
        a.signer.unwrap_or(record.owner_name),
        a.security_level.unwrap_or(record.security_level),
        issued_at,
    );
    m.assertions = a.assertions;
    m.actions = a.actions.iter().map(|s| parse_action(s, issued_at)).collect::<Result<_, _>>()?;
    m.ingredients = a.ingredients.iter().map(|s| parse_ingredient(s)).collect::<Result<_, _>>()?;
    m.watermark_id = watermark_id;
    let signed = sign_manifest(m, &key, &a.cert_id, &trust)?;
    let out = embed_manifest(&asset, &signed)?;
    write_asset(&a.out, &out)?;
    if a.register {
        env.backend()?.store(registry_entry(&out, signed.clone(), now()))?;
    }

    let summary = Signed {
        output: a.out.display().to_string(),
        content_hash: signed.manifest.content_hash.to_hex(),
        certificate_id: a.cert_id,
        watermark_id,
        registered: a.register,
    };
    env.emit(&summary, || {
        let mut s =
            format!("signed {} ({})\ncontent hash {}\n", summary.output, summary.certificate_id, summary.content_hash);
        if let Some(id) = watermark_id {
            s += &format!("watermark id {id}\n");
        }
        if a.register {
            s += "registered\n";
        }
        s
    });
    Ok(())
}

fn verify(env: &Env, a: VerifyArgs) -> Result<(), CliError> {
    let asset = read_asset(&a.input)?;
    let trust = env.load_trust()?;
    let key = env.require_watermark_key()?;
    let backend = env.backend()?;
    let ctx = ValidationContext::new(&trust, &key, &backend).with_fingerprint(a.algorithm, a.tau);
    let report = validate(&asset, &ctx, a.mode);
    env.emit(&report, || render::report(&report, &asset));
    Ok(())
}

fn watermark(env: &Env, cmd: WatermarkCmd) -> Result<(), CliError> {
    let key = env.require_watermark_key()?;
    match cmd {
        WatermarkCmd::Embed { input, out, id } => {
            let mut asset = read_asset(&input)?;
            asset.image = embed_watermark(&asset.image, WatermarkPayload::new(id), &key)?;
            write_asset(&out, &asset)?;
            let value = json!({ "output": out.display().to_string(), "watermark_id": id });
            env.emit(&value, || format!("embedded watermark {id} into {}", out.display()));
        }
        WatermarkCmd::Detect { input } => {
            let asset = read_asset(&input)?;
            let result = decode_watermark(&asset.image, &key);
            env.emit(&result, || match result.payload() {
                Some(p) => format!("detected: id {} (bit agreement {:.3})", p.id(), result.raw_bit_agreement),
                None => format!("undetectable (bit agreement {:.3})", result.raw_bit_agreement),
            });
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Comparison {
    fingerprint: String,
    other: String,
    distance: u32,
    tau: u32,
    matched: bool,
}

fn fingerprint(env: &Env, cmd: FingerprintCmd) -> Result<(), CliError> {
    match cmd {
        FingerprintCmd::Compute { input, algorithm } => {
            let asset = read_asset(&input)?;
            let algorithms = match algorithm {
                Some(a) => vec![a],
                None => vec![Algorithm::BlockMean, Algorithm::DctWave],
            };
            let fps =
                algorithms.into_iter().map(|a| compute_fingerprint(&asset.image, a)).collect::<Result<Vec<_>, _>>()?;
            env.emit(&fps, || fps.iter().map(|f| format!("{f}\n")).collect());
        }
        FingerprintCmd::Match { input, against: Some(other), tau, algorithm } => {
            let a = compute_fingerprint(&read_asset(&input)?.image, algorithm)?;
            let b = compute_fingerprint(&read_asset(&other)?.image, algorithm)?;
            let distance = hamming_distance(a, b)?;
            let c = Comparison {
                fingerprint: a.to_string(),
                other: b.to_string(),
                distance,
                tau,
                matched: distance <= tau,
            };
            env.emit(&c, || {
                let verdict = if c.matched { "match" } else { "no match" };
                format!("{verdict}: distance {distance} (tau {tau})")
            });
        }
        FingerprintCmd::Match { input, against: None, tau, algorithm } => {
            let fp = compute_fingerprint(&read_asset(&input)?.image, algorithm)?;
            let lookup = env.backend()?.lookup_by_fingerprint(fp, tau);
            env.emit(&lookup, || render::candidates(fp, &lookup));
        }
    }
    Ok(())
}

fn attack_name(name: AttackName) -> String {
    name.to_possible_value().expect("no skipped variants").get_name().replace('-', "_")
}

fn attack(env: &Env, a: AttackArgs) -> Result<(), CliError> {
    let seed = env.seed();
    let viewer = match a.viewer {
        ViewerArg::High => Viewer::HighConfidence,
        ViewerArg::Low => Viewer::LowConfidenceStub,
    };
    let scenarios: Vec<ScenarioResult> = match a.name {
        AttackName::Scenario1 => vec![scenario_authentic_faked_as_ai(seed, viewer, parse_box(&a.region)?)?],
        AttackName::Scenario2 => {
            let variants: &[bool] = match a.revocation {
                Revocation::Pre => &[false],
                Revocation::Post => &[true],
                Revocation::Both => &[false, true],
            };
            variants
                .iter()
                .map(|&revoke| scenario_ai_faked_as_authentic(seed, viewer, revoke, true))
                .collect::<Result<_, _>>()?
        }
        AttackName::Scenario3 => vec![scenario_manipulated_metadata(seed, viewer, &a.tamper_key)?],
        AttackName::OracleSim => {
            let config = OracleAttackConfig { seed, budget: a.budget, ..Default::default() };
            let outcomes: Vec<_> = [Endpoint::InternalConfidence, Endpoint::PublicRateLimited]
                .into_iter()
                .map(|e| oracle_attack_simulation(e, &config))
                .collect();
            env.emit(&outcomes, || render::oracle(&outcomes));
            return Ok(());
        }
        _ => return asset_attack(env, a, seed),
    };
    env.emit(&scenarios, || render::scenarios(&scenarios));
    Ok(())
}

fn asset_attack(env: &Env, a: AttackArgs, seed: u64) -> Result<(), CliError> {
    let name = attack_name(a.name);
    let mut params: Value =
        serde_json::from_str(&a.params).map_err(|e| CliError::Usage(format!("--params is not JSON: {e}")))?;
    let obj = params.as_object_mut().ok_or_else(|| CliError::Usage("--params must be a JSON object".into()))?;
    obj.insert("attack".into(), Value::String(name.clone()));
    let kind: AttackKind =
        serde_json::from_value(params).map_err(|e| CliError::Usage(format!("bad parameters for {name}: {e}")))?;

    if let AttackKind::RegistryDos { faults } = kind {
        let remote = env
            .remote()
            .ok_or_else(|| CliError::Usage("registry-dos needs a running registry (--registry URL)".into()))?;
        remote.set_faults(faults)?;
        let value = json!({ "attack": name, "faults": faults });
        env.emit(&value, || format!("registry faults set: {}", canonical::to_string(&faults)));
        return Ok(());
    }

    let input = a.input.as_deref().ok_or_else(|| CliError::Usage(format!("{name} needs an input asset")))?;
    let out = a.out.as_deref().ok_or_else(|| CliError::Usage(format!("{name} needs --out")))?;
    let asset = read_asset(input)?;
    let signing = match (&a.key, &a.cert_id) {
        (Some(k), Some(c)) => Some((read_signing_key(k)?, c.clone())),
        (None, None) => None,
        _ => return Err(CliError::Usage("--key and --cert-id go together".into())),
    };
    let donor = a.donor.as_deref().map(read_asset).transpose()?;
    let wm_key = env.watermark_key()?;
    let ctx = AttackContext {
        signing: signing.as_ref().map(|(k, c)| (k, c.as_str())),
        watermark_key: wm_key.as_ref(),
        donor: donor.as_ref(),
        registry: None,
        now: a.timestamp.unwrap_or_else(now),
    };
    let spec = AttackSpec::new(kind, seed);
    let attacked = run_attack(&asset, &spec, &ctx)?;
    write_asset(out, &attacked)?;
    let value = json!({
        "attack": spec,
        "output": out.display().to_string(),
        "content_hash": hard_hash(&attacked.image).to_hex(),
        "manifest_present": attacked.manifest_segment.is_some(),
        "manifest_hash_matches": manifest_hash_matches(&attacked),
    });
    env.emit(&value, || {
        format!(
            "{name} -> {}\nmanifest present: {}, hash matches pixels: {}",
            out.display(),
            attacked.manifest_segment.is_some(),
            manifest_hash_matches(&attacked)
        )
    });
    Ok(())
}

fn registry(env: &Env, cmd: RegistryCmd) -> Result<(), CliError> {
    match cmd {
        RegistryCmd::Serve { port, rate_limit, rate_window } => {
            if env.g.registry.is_some() {
                return Err(CliError::Usage("serve runs a local registry; use --data-dir, not --registry".into()));
            }
            let config = ServerConfig {
                port,
                data_dir: env.data_dir(),
                trust_list: env.trust_path().filter(|p| p.exists()),
                rate_limit,
                rate_window_secs: rate_window,
                auth_token: env.g.auth_token.clone(),
                watermark_key: env.watermark_key()?,
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io("tokio runtime", e))?;
            runtime.block_on(mediaseal_server::serve(config)).map_err(|e| CliError::Io(e.to_string()))
        }
        RegistryCmd::Store { input } => {
            let asset = read_asset(&input)?;
            let segment = asset
                .manifest_segment
                .as_deref()
                .ok_or_else(|| CliError::Validation(format!("{} carries no manifest", input.display())))?;
            let signed = SignedManifest::from_segment(segment)?;
            if signed.manifest.content_hash != hard_hash(&asset.image) {
                return Err(CliError::Validation("manifest hash does not match the asset pixels".into()));
            }
            let entry = registry_entry(&asset, signed, now());
            let value = json!({ "content_hash": entry.content_hash, "watermark_id": entry.watermark_id });
            env.backend()?.store(entry)?;
            env.emit(&value, || format!("stored {}", value["content_hash"].as_str().unwrap_or_default()));
            Ok(())
        }
        RegistryCmd::Fault { manifest_lookup, watermark_lookup, fingerprint_lookup } => {
            let remote = env
                .remote()
                .ok_or_else(|| CliError::Usage("fault injection needs a running registry (--registry URL)".into()))?;
            let faults = FaultInjection { manifest_lookup, watermark_lookup, fingerprint_lookup };
            remote.set_faults(faults)?;
            env.emit(&faults, || format!("faults set: {}", canonical::to_string(&faults)));
            Ok(())
        }
    }
}

fn trust(env: &Env, cmd: TrustCmd) -> Result<(), CliError> {
    let list = env.load_trust()?;
    let updated = match cmd {
        TrustCmd::Show => {
            let value: Value = serde_json::from_slice(&list.to_bytes()).expect("trust list serializes to JSON");
            env.emit(&value, || render::trust_list(&list));
            return Ok(());
        }
        TrustCmd::Add { cert_id, key, public_key, owner, security_level } => {
            let public_key = match (key, public_key) {
                (Some(path), _) => read_signing_key(&path)?.verifying_key().to_bytes(),
                (None, Some(text)) => hex::decode(text.trim())
                    .ok()
                    .and_then(|b| b.try_into().ok())
                    .ok_or_else(|| CliError::Usage("--public-key must be 64 hex digits".into()))?,
                (None, None) => unreachable!("clap requires one of --key and --public-key"),
            };
            list.add(CertificateRecord::new(cert_id, public_key, owner, security_level))?
        }
        TrustCmd::Revoke { cert_id, at } => list.revoke(&cert_id, at.unwrap_or_else(now))?,
    };
    let path = env.save_trust(&updated)?;
    let value = json!({ "trust_list": path.display().to_string(), "version": updated.version() });
    env.emit(&value, || format!("trust list {} now at version {}", path.display(), updated.version()));
    Ok(())
}

fn keygen(env: &Env, cmd: KeygenCmd) -> Result<(), CliError> {
    let mut rng = rng(env.g.seed);
    match cmd {
        KeygenCmd::Signing { out } => {
            let mut secret = [0u8; 32];
            rng.fill_bytes(&mut secret);
            write_new(&out, format!("{}\n", hex::encode(secret)).as_bytes())?;
            let public_key = hex::encode(SigningKey::from_bytes(&secret).verifying_key().to_bytes());
            let value = json!({ "key": out.display().to_string(), "public_key": public_key });
            env.emit(&value, || format!("wrote {}\npublic key {public_key}", out.display()));
        }
        KeygenCmd::Watermark { out, mode } => {
            let mut secret = [0u8; 16];
            while secret == [0; 16] {
                rng.fill_bytes(&mut secret);
            }
            write_new(&out, &WatermarkKey::new(secret, mode).to_bytes())?;
            let value = json!({ "key": out.display().to_string(), "mode": mode });
            env.emit(&value, || format!("wrote {} ({mode:?})", out.display()));
        }
    }
    Ok(())
}

fn fixture(env: &Env, a: FixtureArgs) -> Result<(), CliError> {
    if a.channels != 1 && a.channels != 3 {
        return Err(CliError::Usage("--channels must be 1 or 3".into()));
    }
    if a.width == 0 || a.height == 0 || a.width > 4096 || a.height > 4096 {
        return Err(CliError::Usage("width and height must be between 1 and 4096".into()));
    }
    let mut meta = InsecureMetadata::new();
    for kv in &a.meta {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--meta {kv:?} is not key=value")))?;
        meta.insert(k, v);
    }
    let asset = MediaAsset::new(fixtures::natural_image(a.width, a.height, a.channels, env.seed())).with_metadata(meta);
    write_asset(&a.out, &asset)?;
    let value = json!({ "output": a.out.display().to_string(), "content_hash": hard_hash(&asset.image) });
    env.emit(&value, || format!("wrote {} ({}x{})", a.out.display(), a.width, a.height));
    Ok(())
}
