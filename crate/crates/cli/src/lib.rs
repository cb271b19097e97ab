//! Library surface of the CLI: the command implementations, run manifests
//! and the selftest suite, callable from the binary and from integration
//! tests.

pub mod commands;
pub mod manifest;
pub mod selftest;

/// Runs `f` inside a rayon pool of the given width; `None` keeps the
/// ambient pool. Results are thread-count independent by construction, so
/// this only controls resource usage.
pub fn with_thread_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        None => f(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .expect("thread pool")
            .install(f),
    }
}
