//! Experiment runner CLI.
//!
//! Usage:
//!   cfm-maxwell run --config <path>     single simulation (first h), snapshots
//!   cfm-maxwell sweep --config <path>   convergence sweep, CSV report
//!   cfm-maxwell check                   spectral / basis self-tests
//!
//! The output directory can be overridden with the CFM_OUT_DIR environment
//! variable. Exit codes: 0 success, 2 configuration error, 3 solver failure.

use cfm_maxwell::cli;
use cfm_maxwell::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Io(_) | Error::UnknownProblem(_) => 2,
        _ => 3,
    }
}

fn config_arg(args: &[String]) -> Result<PathBuf, Error> {
    match args {
        [flag, path] if flag == "--config" => Ok(PathBuf::from(path)),
        _ => Err(Error::Config("expected `--config <path>`".into())),
    }
}

fn dispatch(args: &[String]) -> Result<(), Error> {
    match args.first().map(String::as_str) {
        Some("run") => {
            let cfg = cli::load_config(&config_arg(&args[1..])?)?;
            let (row, files) = cli::run_single(&cfg)?;
            println!(
                "h={:.6} dt={:.6}  L1(Hx,Hy,Ez)=({:.3e}, {:.3e}, {:.3e})  Linf=({:.3e}, {:.3e}, {:.3e})  divH(Linf,L1)=({:.3e}, {:.3e})",
                row.h,
                row.dt,
                row.l1[0],
                row.l1[1],
                row.l1[2],
                row.linf[0],
                row.linf[1],
                row.linf[2],
                row.div_linf,
                row.div_l1
            );
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Some("sweep") => {
            let cfg = cli::load_config(&config_arg(&args[1..])?)?;
            let (report, path) = cli::run_convergence(&cfg)?;
            println!("h,          L1_Ez,        Linf_Ez,      L1_divH");
            for r in &report.rows {
                println!(
                    "{:<10.6}  {:.5e}  {:.5e}  {:.5e}",
                    r.h, r.l1[2], r.linf[2], r.div_l1
                );
            }
            let f = &report.fitted;
            println!(
                "fitted orders: L1(Hx,Hy,Ez)=({:.2}, {:.2}, {:.2})  Linf=({:.2}, {:.2}, {:.2})  divH(Linf,L1)=({:.2}, {:.2})",
                f.l1[0], f.l1[1], f.l1[2], f.linf[0], f.linf[1], f.linf[2], f.div_linf, f.div_l1
            );
            println!("wrote {}", path.display());
            Ok(())
        }
        Some("check") => {
            let log = cli::self_check()?;
            print!("{log}");
            println!("check: all self-tests passed");
            Ok(())
        }
        _ => Err(Error::Config(
            "usage: cfm-maxwell <run|sweep> --config <path> | cfm-maxwell check".into(),
        )),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
