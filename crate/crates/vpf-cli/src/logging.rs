//! Tiny stderr logger gated by the VPF_LOG environment variable
//! (quiet | info | debug; default info).

#[derive(PartialEq, PartialOrd, Clone, Copy)]
pub enum Level {
    Quiet,
    Info,
    Debug,
}

pub fn level() -> Level {
    match std::env::var("VPF_LOG").as_deref() {
        Ok("quiet") => Level::Quiet,
        Ok("debug") => Level::Debug,
        _ => Level::Info,
    }
}

pub fn info(message: impl AsRef<str>) {
    if level() >= Level::Info {
        eprintln!("vpf: {}", message.as_ref());
    }
}

pub fn debug(message: impl AsRef<str>) {
    if level() >= Level::Debug {
        eprintln!("vpf[debug]: {}", message.as_ref());
    }
}
