use std::process::ExitCode;

fn main() -> ExitCode {
    // Die quietly when a pipe closes early (dbchan catalog | head) instead
    // of panicking on the failed write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    ExitCode::from(dbchan::pipeline::cli_dispatch(std::env::args_os()) as u8)
}
