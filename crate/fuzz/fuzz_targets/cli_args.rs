#![no_main]

use clap::Parser;
use flipkljn_cli::args::Cli;
use flipkljn_cli::settings::Settings;
use libfuzzer_sys::fuzz_target;

// Arguments are NUL-separated. Only parsing and settings resolution run;
// no simulation is started.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let argv = std::iter::once("flipkljn").chain(text.split('\0'));
    let Ok(cli) = Cli::try_parse_from(argv) else {
        return;
    };
    let _ = Settings::resolve(&Default::default(), &cli.command.args().overrides(), None);
});
