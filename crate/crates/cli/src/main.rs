use aqpu_cli::{run_cli, thread_count, Cli};
use clap::Parser;

fn main() {
    let cli = Cli::parse();
    let threads = match thread_count(std::env::var("AQPU_THREADS").ok().as_deref()) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("aqpu: {e}");
            std::process::exit(e.exit_code());
        }
    };
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("aqpu: cannot start {n} worker threads: {e}");
            std::process::exit(1);
        }
    }
    match run_cli(&cli) {
        Ok(report) => println!("{}", serde_json::to_string_pretty(&report.summary()).expect("summary is valid JSON")),
        Err(e) => {
            eprintln!("aqpu: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
