//! `--config <file>` support: `key = value` lines become `--key=value`
//! flags placed right after the subcommand, so flags given on the command
//! line still win.

use std::fs;

pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let (path, consumed) = match args[pos].strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => {
            let p = args.get(pos + 1).ok_or("--config needs a file path")?;
            (p.clone(), 2)
        }
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let injected = parse_config(&text)?;

    let mut rest: Vec<String> = args[..pos].to_vec();
    rest.extend_from_slice(&args[pos + consumed..]);
    // subcommand is the first non-flag after the program name
    let sub = rest.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1);
    let Some(sub) = sub else {
        return Err("--config given without a subcommand".into());
    };
    let mut out = rest[..=sub].to_vec();
    out.extend(injected);
    out.extend_from_slice(&rest[sub + 1..]);
    Ok(out)
}

fn parse_config(text: &str) -> Result<Vec<String>, String> {
    let mut flags = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", n + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(format!("config line {}: empty key", n + 1));
        }
        match value {
            "true" => flags.push(format!("--{key}")),
            "false" => {}
            _ => flags.push(format!("--{key}={value}")),
        }
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &[&str]) -> Vec<String> {
        s.iter().map(|a| a.to_string()).collect()
    }

    #[test]
    fn passthrough_without_config() {
        let a = args(&["prog", "train", "--eq", "heat"]);
        assert_eq!(expand_config(a.clone()).unwrap(), a);
    }

    #[test]
    fn parses_lines() {
        let flags = parse_config("# comment\neq = ac\nmax_iters=10\npgm-fixed = true\nquiet=false\n").unwrap();
        assert_eq!(flags, vec!["--eq=ac", "--max-iters=10", "--pgm-fixed"]);
        assert!(parse_config("novalue\n").is_err());
    }

    #[test]
    fn injects_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "eq=fisher\nseed=4\n").unwrap();
        let a = args(&["prog", "train", "--config", path.to_str().unwrap(), "--seed", "9"]);
        let out = expand_config(a).unwrap();
        assert_eq!(out, args(&["prog", "train", "--eq=fisher", "--seed=4", "--seed", "9"]));
    }
}
