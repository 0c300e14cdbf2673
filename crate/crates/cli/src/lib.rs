//! Command-line front end. The binary is a thin wrapper over [`run_args`].

mod args;
mod commands;
mod manifest;

pub use args::Cli;
pub use commands::run;

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, T>(args: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    run(Cli::try_parse_from(args)?)
}
