use std::io;
use std::process::ExitCode;

use clap::Parser;
use gam_edit_cli::{commands, server, Cli, Command, ServeArgs};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let result = match &cli.command {
        Command::Serve(args) => serve(args),
        Command::Apply(args) => commands::apply(args, &mut out, &mut err),
        Command::Metrics(args) => commands::metrics(args, &mut out, &mut err),
        Command::Validate(args) => commands::validate(args, &mut out, &mut err),
        Command::Export(args) => commands::export(args, &mut err),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn serve(args: &ServeArgs) -> anyhow::Result<()> {
    let (session, data) = commands::open_session(&args.data)?;
    if !data.skipped.is_empty() {
        eprintln!("skipped {} malformed rows", data.skipped.len());
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = server::bind(args.port).await?;
        eprintln!(
            "serving {} on http://{}",
            args.data.model.display(),
            listener.local_addr()?
        );
        let app = server::router(server::AppState::new(session, args.out.clone()), args.ui_dir.as_deref());
        server::serve(listener, app).await
    })
}
