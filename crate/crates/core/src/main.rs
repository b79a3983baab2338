use clap::Parser;

use rso_splat::bench::TrackingAllocator;
use rso_splat::cli::{run, Cli};

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

fn main() {
    std::process::exit(run(Cli::parse()));
}
