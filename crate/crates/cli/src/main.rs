use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cbdc_pki::{
    baseline_minimums, codec, materialize_seeded, plan_schedule, render_svg, render_text, run,
    validate_schedule, Bound, Certificate, EventCounts, Requirement, Role, RolloverProfile,
    Scenario, Schedule, SimError, Tick,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Wrong flags, unreadable files, infeasible planning inputs.
const USAGE: u8 = 2;
/// The input was understood and judged bad: violations, failed
/// requirements, malformed certificate bytes.
const FAILED: u8 = 1;

#[derive(Parser)]
#[command(
    name = "cbdcpki",
    version,
    about = "Certificate rollover planning and ecosystem simulation for an offline-capable digital currency"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive a rollover schedule from per-role phase minimums
    Plan(PlanArgs),
    /// Check a schedule file against the structural constraints
    Validate(ValidateArgs),
    /// Run an ecosystem scenario and report requirement verdicts
    Simulate(SimulateArgs),
    /// Render a schedule as per-generation phase bars
    Timeline(TimelineArgs),
    /// Decode one binary certificate and dump its fields
    Inspect(InspectArgs),
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Plan(a) => cmd_plan(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Timeline(a) => cmd_timeline(a),
        Command::Inspect(a) => cmd_inspect(a),
    }
}

#[derive(Clone, Debug)]
struct OverrideSpec {
    role: Role,
    phase: PhasePart,
    ticks: u64,
}

#[derive(Clone, Copy, Debug)]
enum PhasePart {
    RampUp,
    Active,
    Passive,
}

fn parse_override(s: &str) -> Result<OverrideSpec, String> {
    let (target, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected ROLE.PHASE=TICKS, got {s:?}"))?;
    let (role_name, phase_name) = target
        .split_once('.')
        .ok_or_else(|| format!("expected ROLE.PHASE before '=', got {target:?}"))?;
    let role = Role::from_name(role_name.trim())
        .ok_or_else(|| format!("unknown role {:?}", role_name.trim()))?;
    let phase = match phase_name.trim() {
        "ramp-up" | "ramp_up" | "ramp" => PhasePart::RampUp,
        "active" => PhasePart::Active,
        "passive" => PhasePart::Passive,
        other => return Err(format!("unknown phase {other:?} (ramp-up, active or passive)")),
    };
    let ticks = value
        .trim()
        .parse::<u64>()
        .map_err(|e| format!("bad tick count {:?}: {e}", value.trim()))?;
    Ok(OverrideSpec { role, phase, ticks })
}

fn apply_overrides(profile: &mut RolloverProfile, overrides: &[OverrideSpec]) {
    for o in overrides {
        let bound = Bound::Exactly(o.ticks);
        match o.phase {
            PhasePart::RampUp => profile.set_ramp_up(o.role, bound),
            PhasePart::Active => profile.set_active(o.role, bound),
            PhasePart::Passive => profile.set_passive(o.role, bound),
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    /// Base rollover unit in ticks
    #[arg(long)]
    u: u64,
    /// Modeled horizon in ticks
    #[arg(long)]
    horizon: u64,
    /// First root active phase, in multiples of u
    #[arg(long, default_value_t = 3)]
    first_root_active: u64,
    /// Pin one phase length, e.g. central-register.ramp-up=6 (repeatable)
    #[arg(long = "override", value_name = "ROLE.PHASE=TICKS", value_parser = parse_override)]
    overrides: Vec<OverrideSpec>,
    /// Write the schedule here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also materialize the authority and write one binary certificate per generation
    #[arg(long, value_name = "DIR")]
    certs_dir: Option<PathBuf>,
    /// Key derivation seed used by --certs-dir
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn cmd_plan(args: PlanArgs) -> ExitCode {
    if args.u == 0 {
        eprintln!("--u must be at least 1");
        return ExitCode::from(USAGE);
    }
    let mut profile = baseline_minimums(args.u);
    apply_overrides(&mut profile, &args.overrides);
    let Some(first_root_active) = args.first_root_active.checked_mul(args.u) else {
        eprintln!(
            "--first-root-active {} overflows at u = {}",
            args.first_root_active, args.u
        );
        return ExitCode::from(USAGE);
    };
    let schedule = match plan_schedule(args.u, Tick(args.horizon), &profile, first_root_active) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("cannot plan: {e}");
            return ExitCode::from(USAGE);
        }
    };
    let violations = validate_schedule(&schedule, &profile);
    if !violations.is_empty() {
        eprintln!("the requested overrides leave no valid schedule:");
        for v in &violations {
            eprintln!("  {v}");
        }
        return ExitCode::from(USAGE);
    }
    if let Some(dir) = &args.certs_dir {
        match dump_certificates(&schedule, args.seed, dir) {
            Ok(n) => eprintln!("wrote {n} certificates to {}", dir.display()),
            Err(msg) => {
                eprintln!("{msg}");
                return ExitCode::from(USAGE);
            }
        }
    }
    emit(args.out.as_deref(), &schedule.to_toml())
}

fn dump_certificates(schedule: &Schedule, seed: u64, dir: &Path) -> Result<usize, String> {
    let authority = materialize_seeded(schedule, seed)
        .map_err(|e| format!("cannot materialize the schedule: {e}"))?;
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let mut written = 0;
    for role in Role::ALL {
        for g in schedule.generations(role) {
            let cert = authority
                .generation_certificate(role, g.index)
                .expect("materialization covers every scheduled generation");
            let bytes = codec::encode(cert).map_err(|e| e.to_string())?;
            let path = dir.join(format!("{}.cert", cert.holder_ref));
            fs::write(&path, &bytes)
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            written += 1;
        }
    }
    Ok(written)
}

#[derive(Args)]
struct ValidateArgs {
    /// Schedule file (TOML)
    schedule: PathBuf,
    /// Adjust one phase minimum before checking (repeatable)
    #[arg(long = "override", value_name = "ROLE.PHASE=TICKS", value_parser = parse_override)]
    overrides: Vec<OverrideSpec>,
}

fn cmd_validate(args: ValidateArgs) -> ExitCode {
    let schedule = match load_schedule(&args.schedule) {
        Ok(s) => s,
        Err(code) => return code,
    };
    // A zero unit is itself a violation the validator reports, so fall
    // back to u = 1 for the profile instead of refusing up front.
    let mut profile = baseline_minimums(schedule.u.max(1));
    apply_overrides(&mut profile, &args.overrides);
    let violations = validate_schedule(&schedule, &profile);
    if violations.is_empty() {
        println!(
            "ok: {} generations across {} roles, no violations",
            schedule.generation_count(),
            Role::ALL.iter().filter(|r| !schedule.generations(**r).is_empty()).count()
        );
        ExitCode::SUCCESS
    } else {
        for v in &violations {
            println!("{v}");
        }
        eprintln!("{} violation(s)", violations.len());
        ExitCode::from(FAILED)
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file (TOML); or use --schedule to run a bare schedule
    #[arg(required_unless_present = "schedule", conflicts_with = "schedule")]
    scenario: Option<PathBuf>,
    /// Run this schedule file under the default scenario
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Ticks between live payment sweeps
    #[arg(long, conflicts_with = "exhaustive")]
    stride: Option<u64>,
    /// Check every tick (same as --stride 1)
    #[arg(long)]
    exhaustive: bool,
    /// Override the key derivation seed
    #[arg(long)]
    seed: Option<u64>,
    /// Run even when the schedule fails validation
    #[arg(long)]
    force: bool,
    /// Write the full report here (TOML)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the stored counterexample for one requirement (R1..R5)
    #[arg(long, value_name = "REQUIREMENT")]
    replay: Option<String>,
}

fn cmd_simulate(args: SimulateArgs) -> ExitCode {
    let mut scenario = match (&args.scenario, &args.schedule) {
        (Some(path), None) => {
            let text = match fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", path.display());
                    return ExitCode::from(USAGE);
                }
            };
            match Scenario::from_toml(&text) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("cannot parse {}: {e}", path.display());
                    return ExitCode::from(USAGE);
                }
            }
        }
        (None, Some(path)) => match load_schedule(path) {
            Ok(schedule) => Scenario::for_schedule(schedule),
            Err(code) => return code,
        },
        _ => unreachable!("clap enforces exactly one input"),
    };
    if args.exhaustive {
        scenario.payments.stride = 1;
    }
    if let Some(stride) = args.stride {
        scenario.payments.stride = stride;
    }
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if args.force {
        scenario.allow_invalid_schedule = true;
    }

    let report = match run(&scenario) {
        Ok(r) => r,
        Err(SimError::InvalidSchedule { violations }) => {
            eprintln!("the schedule fails validation; use --force to watch it break in the field:");
            for v in &violations {
                eprintln!("  {v}");
            }
            return ExitCode::from(FAILED);
        }
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(USAGE);
        }
    };

    if let Some(id) = &args.replay {
        let Some(requirement) = Requirement::from_id(id) else {
            eprintln!("unknown requirement {id:?} (expected R1..R5)");
            return ExitCode::from(USAGE);
        };
        match report.replay_counterexample(requirement) {
            Ok(ce) => {
                println!("{requirement} fails at tick {}: {}", ce.tick, ce.reason);
                if !ce.subjects.is_empty() {
                    println!("subjects: {}", ce.subjects.join(", "));
                }
                for step in &ce.trace {
                    println!("  {step}");
                }
            }
            Err(e) => println!("{e}"),
        }
    } else {
        if !report.schedule_violations.is_empty() {
            println!(
                "running a schedule with {} known violation(s) under --force",
                report.schedule_violations.len()
            );
        }
        for line in report.summary_lines() {
            println!("{line}");
        }
        for line in event_lines(&report.events) {
            println!("{line}");
        }
    }

    if let Some(path) = &args.out {
        if let Err(e) = fs::write(path, report.to_toml()) {
            eprintln!("cannot write {}: {e}", path.display());
            return ExitCode::from(USAGE);
        }
    }
    if report.all_hold {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(FAILED)
    }
}

fn event_lines(e: &EventCounts) -> Vec<String> {
    vec![
        format!(
            "cards: {} manufactured, {} manufacture failures",
            e.cards_manufactured, e.manufacture_failures
        ),
        format!(
            "payments: {} mutual authentications, {} refused",
            e.auth_checks, e.auth_failures
        ),
        format!(
            "services: {} register attestations, {} timestamp advances",
            e.register_attestations, e.timestamp_advances
        ),
        format!(
            "fsp: {} onboarded ({} failures), {} verifications ({} rejections)",
            e.fsps_onboarded, e.fsp_onboard_failures, e.fsp_verifications, e.fsp_rejections
        ),
        format!(
            "registry: {} revocations applied, {} party syncs",
            e.revocations_applied, e.party_syncs
        ),
    ]
}

#[derive(Args)]
struct TimelineArgs {
    /// Schedule file (TOML)
    schedule: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Ticks per text column
    #[arg(long, default_value_t = 1)]
    bucket: u64,
    /// Write the rendering here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Vector,
}

fn cmd_timeline(args: TimelineArgs) -> ExitCode {
    let schedule = match load_schedule(&args.schedule) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if args.bucket == 0 {
        eprintln!("--bucket must be at least 1");
        return ExitCode::from(USAGE);
    }
    let rendering = match args.format {
        Format::Text => render_text(&schedule, args.bucket),
        Format::Vector => render_svg(&schedule),
    };
    emit(args.out.as_deref(), &rendering)
}

#[derive(Args)]
struct InspectArgs {
    /// Binary certificate file
    certificate: PathBuf,
}

fn cmd_inspect(args: InspectArgs) -> ExitCode {
    let bytes = match fs::read(&args.certificate) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.certificate.display());
            return ExitCode::from(USAGE);
        }
    };
    let cert = match codec::decode(&bytes) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(FAILED);
        }
    };
    print_certificate(&cert);
    println!();
    print_hex(&bytes);

    // The encoding is canonical: decoding and re-encoding must give the
    // input back byte for byte, otherwise the file is not trustworthy.
    match codec::encode(&cert) {
        Ok(reencoded) if reencoded == bytes => {
            println!();
            println!("canonical: re-encoding reproduces the input ({} octets)", bytes.len());
            ExitCode::SUCCESS
        }
        Ok(reencoded) => {
            eprintln!(
                "re-encoding differs from the input ({} octets in, {} out)",
                bytes.len(),
                reencoded.len()
            );
            ExitCode::from(FAILED)
        }
        Err(e) => {
            eprintln!("decoded certificate does not re-encode: {e}");
            ExitCode::from(FAILED)
        }
    }
}

fn print_certificate(cert: &Certificate) {
    println!("holder        {}", cert.holder_ref);
    println!("issuer        {}", cert.issuer_ref);
    println!("role          {}", cert.role);
    println!("serial        {}", cert.serial);
    println!("verify from   {}", cert.verify_from);
    println!("issue from    {}", cert.issue_from);
    println!("issue until   {}", cert.issue_until);
    println!("verify until  {}", cert.verify_until);
    println!(
        "public key    alg {:#04x}, {} octets: {}",
        cert.public_key.algorithm,
        cert.public_key.bytes.len(),
        hex_string(&cert.public_key.bytes)
    );
    println!(
        "signature     alg {:#04x}, {} octets: {}",
        cert.signature.algorithm,
        cert.signature.bytes.len(),
        hex_string(&cert.signature.bytes)
    );
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn print_hex(bytes: &[u8]) {
    for (row, chunk) in bytes.chunks(16).enumerate() {
        let hexes: Vec<String> = chunk.iter().map(|b| format!("{b:02x}")).collect();
        println!("{:08x}  {}", row * 16, hexes.join(" "));
    }
}

fn load_schedule(path: &Path) -> Result<Schedule, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("cannot read {}: {e}", path.display());
        ExitCode::from(USAGE)
    })?;
    Schedule::from_toml(&text).map_err(|e| {
        eprintln!("cannot parse {}: {e}", path.display());
        ExitCode::from(USAGE)
    })
}

fn emit(out: Option<&Path>, text: &str) -> ExitCode {
    match out {
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Some(path) => match fs::write(path, text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("cannot write {}: {e}", path.display());
                ExitCode::from(USAGE)
            }
        },
    }
}
