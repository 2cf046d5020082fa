// Drive the command-line front end in-process: generate, rewrite, read,
// pack and unpack.

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let (raw, rac, packed, restored) = (path("raw.rcf"), path("rac.rcf"), path("rac.bpk"), path("restored.rcf"));

    let steps: Vec<Vec<&str>> = vec![
        vec!["gen", "--kind", "tsmall", "--count", "500", "--seed", "3", "--out", &raw],
        vec!["write", "--in", &raw, "--out", &rac, "--codec", "lzma", "--level", "5", "--rac"],
        vec!["read", "--file", &rac, "--branch", "tsmall", "--stride", "100"],
        vec!["pack", "--in", &rac, "--out", &packed, "--block-size", "4096", "--codec", "lz4"],
        vec!["unpack", "--in", &packed, "--out", &restored],
    ];
    for args in steps {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = basketio::cli::run(args.iter().copied(), &mut out, &mut err);
        print!("$ basketio {}\n{}", args[0], String::from_utf8_lossy(&out));
        if code != 0 {
            return Err(String::from_utf8_lossy(&err).into_owned().into());
        }
    }
    assert_eq!(std::fs::read(&rac)?, std::fs::read(&restored)?);

    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = basketio::cli::run(["read", "--file", &rac, "--branch", "tsmall", "--index", "500"], &mut out, &mut err);
    assert_eq!(code, 1);
    assert!(String::from_utf8_lossy(&err).starts_with("E_RANGE"));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
