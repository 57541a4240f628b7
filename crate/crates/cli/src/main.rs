use std::path::PathBuf;
use std::process::ExitCode;

use spinmotion_cli::commands::{
    cmd_compare, cmd_fit, cmd_scan, cmd_spectrum, cmd_tuneout, CmdError, RunOptions,
};
use spinmotion_cli::config::RunConfig;

const USAGE: &str = "\
spinmotion — spin-motion coupling simulator and calibration pipeline

USAGE:
    spinmotion <COMMAND> [FLAGS]

COMMANDS:
    spectrum            render one fluorescence spectrum (spectrum.csv)
    scan                sweep the Zeeman splitting (scan.csv, peaks.csv)
    fit <scan.csv>      run the calibration pipeline on a scan (calibration.json)
    compare             simplified vs full model (compare.csv, compare_summary.json)
    tuneout             tuning-slope line fit (tuneout.json[, tuneout_points.csv])

FLAGS:
    --config <path>     flat key-value config file (defaults are built in)
    --out <dir>         output directory (default .)
    --seed <u64>        noise seed, overrides noise.seed
    --threads <n>       worker threads for scan points (default 1)
    --no-carrier        drop the elastic carrier line from rendered spectra
    --points <path>     tuneout: read measured points instead of synthesizing

EXIT CODES:
    0 success, 2 validation error, 3 fit non-convergence, 4 i/o error
";

struct Cli {
    command: String,
    positional: Vec<PathBuf>,
    config: Option<PathBuf>,
    points: Option<PathBuf>,
    opts: RunOptions,
}

fn parse_args(args: &[String]) -> Result<Cli, String> {
    if args.is_empty() {
        return Err("missing command".into());
    }
    let command = args[0].clone();
    let mut cli = Cli {
        command,
        positional: Vec::new(),
        config: None,
        points: None,
        opts: RunOptions::default(),
    };
    let mut it = args[1..].iter();
    while let Some(arg) = it.next() {
        let mut take = |name: &str| -> Result<String, String> {
            it.next().map(|s| s.to_string()).ok_or_else(|| format!("{name} needs a value"))
        };
        match arg.as_str() {
            "--config" => cli.config = Some(PathBuf::from(take("--config")?)),
            "--out" => cli.opts.out_dir = PathBuf::from(take("--out")?),
            "--seed" => {
                let v = take("--seed")?;
                cli.opts.seed =
                    Some(v.parse().map_err(|_| format!("--seed: `{v}` is not a u64"))?);
            }
            "--threads" => {
                let v = take("--threads")?;
                let n: usize = v.parse().map_err(|_| format!("--threads: `{v}` is invalid"))?;
                if n == 0 {
                    return Err("--threads must be at least 1".into());
                }
                cli.opts.threads = n;
            }
            "--no-carrier" => cli.opts.no_carrier = true,
            "--points" => cli.points = Some(PathBuf::from(take("--points")?)),
            other if other.starts_with("--") => return Err(format!("unknown flag `{other}`")),
            other => cli.positional.push(PathBuf::from(other)),
        }
    }
    Ok(cli)
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, CmdError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CmdError::Io(format!("{}: {e}", p.display())))?;
            RunConfig::parse(&text).map_err(|e| CmdError::Validation(e.to_string()))
        }
    }
}

fn run(cli: &Cli) -> Result<(), CmdError> {
    let cfg = load_config(&cli.config)?;
    match cli.command.as_str() {
        "spectrum" => cmd_spectrum(&cfg, &cli.opts),
        "scan" => cmd_scan(&cfg, &cli.opts),
        "fit" => {
            let scan_path = cli
                .positional
                .first()
                .ok_or_else(|| CmdError::Validation("fit requires a scan file path".into()))?;
            cmd_fit(&cfg, scan_path, &cli.opts)
        }
        "compare" => cmd_compare(&cfg, &cli.opts),
        "tuneout" => cmd_tuneout(&cfg, cli.points.as_deref(), &cli.opts),
        other => Err(CmdError::Validation(format!("unknown command `{other}`"))),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") || args.is_empty() {
        print!("{USAGE}");
        return ExitCode::from(if args.is_empty() { 2 } else { 0 });
    }
    let cli = match parse_args(&args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            eprint!("{USAGE}");
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
