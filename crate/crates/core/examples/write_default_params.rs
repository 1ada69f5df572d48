//! Prints the built-in parameter file, ready to be edited and passed back with `--params`.

fn main() {
    print!("{}", streamgwp::params::to_toml_string(&streamgwp::params::default_params()));
}
