//! Drive the command-line front end from code.
//!
//! Each call mirrors an `nlspec` invocation and prints its exit code; results go
//! to files in a temporary directory.
//!
//! ```bash
//! cargo run --release --example cli_session
//! ```

use nonlocal_spectrum::cli;
use nonlocal_spectrum::io::write_problem_file;
use nonlocal_spectrum::oracles::DexinSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("nlspec-cli-session");
    std::fs::create_dir_all(&dir)?;
    let problem = dir.join("dexin_half.json");
    write_problem_file(&DexinSpec::new(0.5)?.problem(), &problem)?;
    let p = problem.to_str().ok_or("non-UTF-8 temp path")?;
    let out = |name: &str| dir.join(name).to_string_lossy().into_owned();

    let sessions: Vec<Vec<String>> = vec![
        vec!["validate".into(), p.into()],
        vec![
            "eigs".into(),
            p.into(),
            "--region".into(),
            "1".into(),
            "400".into(),
            "-1".into(),
            "1".into(),
            "--out".into(),
            out("eigs.json"),
        ],
        vec![
            "eigs".into(),
            p.into(),
            "--region".into(),
            "1".into(),
            "400".into(),
            "-1".into(),
            "1".into(),
            "--oracle".into(),
            "dexin".into(),
            "--format".into(),
            "csv".into(),
            "--out".into(),
            out("oracle.csv"),
        ],
        vec![
            "mult".into(),
            p.into(),
            "--lambda".into(),
            "157.9".into(),
            "0".into(),
            "--out".into(),
            out("mult.json"),
        ],
        vec!["mult".into(), p.into(), "--lambda".into(), "50".into(), "0".into()],
        vec!["gap".into(), p.into(), "--out".into(), out("gap.json")],
        vec![
            "grid".into(),
            p.into(),
            "--region".into(),
            "0".into(),
            "1".into(),
            "0".into(),
            "1".into(),
            "--nx".into(),
            "2".into(),
            "--ny".into(),
            "2".into(),
            "--out".into(),
            out("grid.csv"),
        ],
    ];
    for args in sessions {
        let code = cli::run(std::iter::once("nlspec".to_string()).chain(args.iter().cloned()));
        println!("nlspec {}  ->  exit {code}", args.join(" "));
    }
    println!("\n{}", std::fs::read_to_string(dir.join("oracle.csv"))?);
    Ok(())
}
