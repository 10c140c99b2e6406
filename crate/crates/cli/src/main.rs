use std::io::Write;

fn main() {
    let outcome = stablematch_cli::run(std::env::args_os());
    print!("{}", outcome.stdout);
    std::io::stdout().flush().ok();
    eprint!("{}", outcome.stderr);
    std::process::exit(outcome.code);
}
