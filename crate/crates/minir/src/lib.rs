//! A small interpreter for a subset of R.
//!
//! It covers the language and library surface that the bundled fixture
//! projects use, and reproduces the shape of `Rscript` diagnostics
//! (`Error in <call> : <msg>`, `Execution halted`, exit status 1) so that
//! repair logs read the same as those of a real R installation.

pub mod builtins;
pub mod format;
pub mod interp;
pub mod lexer;
pub mod ops;
pub mod parser;
pub mod print;
pub mod rio;
pub mod stats;
pub mod strings;
pub mod value;

use std::io::Write;
use std::path::{Path, PathBuf};

use interp::{Flow, Interp};
use parser::parse_program;

/// Runs R source text with `wd` as the working directory. Returns the exit status.
pub fn run_source(src: &str, wd: &Path, out: Box<dyn Write>, err: Box<dyn Write>) -> i32 {
    let mut it = Interp::new(wd.to_path_buf(), out, err);
    let prog = parse_program(src);
    let global = it.global.clone();
    for stmt in &prog.statements {
        match it.eval(&stmt.expr, &global) {
            Ok(v) => {
                if it.visible {
                    let text = print::print_value(&v);
                    let _ = it.out.write_all(text.as_bytes());
                }
                let w = it.take_warnings();
                let _ = it.err.write_all(w.as_bytes());
            }
            Err(Flow::Quit(code)) => {
                let _ = it.out.flush();
                return code;
            }
            Err(Flow::Error(e)) | Err(Flow::Warning(e)) => {
                let _ = it.out.flush();
                let mut text = format!("{}\n", e.render());
                let w = it.take_warnings();
                if !w.is_empty() {
                    text.push_str("In addition: ");
                    text.push_str(&w);
                }
                text.push_str("Execution halted\n");
                let _ = it.err.write_all(text.as_bytes());
                return 1;
            }
            Err(Flow::Return(v)) => {
                let _ = v;
            }
            Err(Flow::Break) | Err(Flow::Next) => {
                let _ = it.err.write_all(b"Error: no loop for break/next, jumping to top level\nExecution halted\n");
                return 1;
            }
        }
    }
    let _ = it.out.flush();
    if let Some(e) = prog.error {
        let context = e.context.clone();
        let text = format!("Error: unexpected {} in \"{}\"\nExecution halted\n", e.found, context);
        let _ = it.err.write_all(text.as_bytes());
        return 1;
    }
    0
}

/// Runs a script file from the current working directory.
pub fn run_file(path: &Path) -> i32 {
    let wd = std::env::current_dir().unwrap_or_else(|_| PathBuf::from("."));
    let src = match std::fs::read(path) {
        Ok(b) => String::from_utf8_lossy(&b).into_owned(),
        Err(_) => {
            eprintln!("Fatal error: cannot open file '{}': No such file or directory", path.display());
            return 2;
        }
    };
    run_source(&src, &wd, Box::new(std::io::stdout()), Box::new(std::io::stderr()))
}

/// Entry point for an `Rscript`-compatible command line:
/// `minir [--vanilla] [-e EXPR | FILE] [args...]`.
pub fn run_cli(args: &[String]) -> i32 {
    let mut it = args.iter().skip(1).filter(|a| !matches!(a.as_str(), "--vanilla" | "--no-save" | "--quiet"));
    match it.next().map(String::as_str) {
        Some("-e") => {
            let expr = it.next().cloned().unwrap_or_default();
            let wd = std::env::current_dir().unwrap_or_else(|_| PathBuf::from("."));
            run_source(&expr, &wd, Box::new(std::io::stdout()), Box::new(std::io::stderr()))
        }
        Some("--version") => {
            println!("minir {}", env!("CARGO_PKG_VERSION"));
            0
        }
        Some(file) => run_file(Path::new(file)),
        None => {
            eprintln!("Usage: minir [--vanilla] [-e EXPR | FILE]");
            2
        }
    }
}
