//! Run the command-line front end in-process on a shipped recipe.

fn main() {
    let recipe = concat!(env!("CARGO_MANIFEST_DIR"), "/recipes/ml_orbit.json");
    let code = phaseiso::cli::run(["phaseiso", "recipe", recipe], &mut std::io::stdout(), &mut std::io::stderr());
    println!("exit code {code}");
}
