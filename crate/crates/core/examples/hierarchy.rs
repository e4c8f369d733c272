//! The first members of the vector mKdV hierarchy, generated by repeatedly
//! applying the recursion operator to `u₁`.
//!
//!     cargo run --example hierarchy -- 3 2

use vmkdv::diffpoly::print;
use vmkdv::operators::{hierarchy, tangential_speed};

fn main() -> vmkdv::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let n = args.next().unwrap_or(3);
    let steps = args.next().unwrap_or(2);

    for (k, s) in hierarchy(n, steps)?.iter().enumerate() {
        println!("S{k}  ({} terms)", s.0.iter().map(|e| e.len()).sum::<usize>());
        for (c, e) in s.0.iter().enumerate() {
            println!("  [{}] {}", c + 1, print(e));
        }
        // the tangential speed that keeps the flow arc-length preserving
        println!("  h1 = {}", print(&tangential_speed(s)?));
    }
    Ok(())
}
