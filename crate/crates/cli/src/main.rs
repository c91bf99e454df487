use std::fs;
use std::io::{self, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use loomxai_core::acceptance::{self, AcceptError, DEFAULT_SEED};
use loomxai_core::dataset::{ingest, DatasetError, Source, TextDataset};
use loomxai_core::demo::{demo_data, demo_jsonl, DemoConfig, DemoError};
use loomxai_core::model::{PcaProjector, ToyClassifier};
use loomxai_core::sync::StateConfig;
use loomxai_core::widgets::{
    serve_connection, DataExplorerWidget, DataSelectorWidget, InferenceExplorerWidget, InferenceOptions, Widget,
    WidgetError, WidgetKind,
};
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error(transparent)]
    UnknownSuite(#[from] AcceptError),
    #[error(transparent)]
    Demo(#[from] DemoError),
    #[error("{path}: {source}")]
    Dataset { path: PathBuf, source: DatasetError },
    #[error(transparent)]
    Widget(#[from] WidgetError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Parser)]
#[command(name = "loomxai", version, about = "Notebook explainability widgets, headless")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the seeded demo corpus as JSON lines.
    Data {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        n: usize,
        /// Comma-separated class names.
        #[arg(long, value_delimiter = ',', default_value = "pos,neg")]
        classes: Vec<String>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Host a widget backend for one view at a time over TCP.
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value = "inference_explorer")]
        widget: WidgetKind,
        #[arg(long)]
        page_size: Option<usize>,
        /// Overrides LOOMXAI_PAYLOAD_CAP.
        #[arg(long)]
        payload_cap: Option<usize>,
        /// JSONL or CSV corpus; the demo corpus when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Exit after the first view disconnects.
        #[arg(long)]
        once: bool,
    },
    /// Run acceptance criteria: `all`, a criterion id or its alias.
    Accept {
        #[arg(default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Also write the report lines to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Data { seed, n, classes, out } => {
            let jsonl = demo_jsonl(&DemoConfig {
                n_records: n,
                classes,
                seed,
                ..DemoConfig::default()
            })?;
            match out {
                Some(path) => fs::write(path, jsonl)?,
                None => io::stdout().write_all(jsonl.as_bytes())?,
            }
            Ok(true)
        }
        Command::Serve {
            port,
            widget,
            page_size,
            payload_cap,
            data,
            seed,
            once,
        } => {
            let mut config = StateConfig::seeded(seed).with_env_overrides();
            if let Some(cap) = payload_cap {
                config.payload_cap = cap;
            }
            if let Some(size) = page_size {
                config.page_size = size;
            }
            let ds = match &data {
                Some(path) => load(path)?,
                None => demo_data(&DemoConfig {
                    seed,
                    ..DemoConfig::default()
                })?,
            };
            let mut widget = build_widget(widget, &ds, config)?;
            serve(widget.as_mut(), port, once)?;
            Ok(true)
        }
        Command::Accept { suite, seed, report } => {
            let reports = acceptance::run_suite(&suite, seed)?;
            let mut text = String::new();
            for r in &reports {
                text.push_str(&r.to_line());
                text.push('\n');
            }
            print!("{text}");
            if let Some(path) = report {
                fs::write(path, &text)?;
            }
            Ok(reports.iter().all(|r| r.pass))
        }
    }
}

fn load(path: &Path) -> Result<TextDataset, CliError> {
    let text = fs::read_to_string(path)?;
    let source = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => Source::Csv(&text),
        _ => Source::Jsonl(&text),
    };
    ingest(source).map_err(|source| CliError::Dataset {
        path: path.to_owned(),
        source,
    })
}

fn build_widget(kind: WidgetKind, ds: &TextDataset, config: StateConfig) -> Result<Box<dyn Widget>, WidgetError> {
    let id = format!("loomxai-{}", kind.as_str());
    Ok(match kind {
        WidgetKind::DataExplorer => Box::new(DataExplorerWidget::new(&id, ds, config)?),
        WidgetKind::DataSelector => Box::new(DataSelectorWidget::new(&id, ds, config)?),
        WidgetKind::InferenceExplorer => {
            let adapter = ToyClassifier::<f64>::fit(ds)?;
            let options = InferenceOptions {
                config,
                ..InferenceOptions::default()
            };
            Box::new(InferenceExplorerWidget::new(&id, ds, adapter, PcaProjector::new(), options)?)
        }
    })
}

fn serve(widget: &mut dyn Widget, port: u16, once: bool) -> Result<(), CliError> {
    let listener = TcpListener::bind(("127.0.0.1", port)).map_err(|e| match e.kind() {
        io::ErrorKind::AddrInUse => CliError::PortInUse(port),
        _ => CliError::Io(e),
    })?;
    // Tests bind port 0 and read the chosen port from this line.
    println!("listening on {} widget_id={}", listener.local_addr()?, widget.state().widget_id());
    io::stdout().flush()?;
    for stream in listener.incoming() {
        let stats = serve_connection(widget, stream?)?;
        eprintln!("view detached: received {} sent {}", stats.received, stats.sent);
        if once {
            break;
        }
    }
    Ok(())
}
