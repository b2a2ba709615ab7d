//! `--config <file>` support: `key = value` lines become `--key value`
//! flags placed before the command-line ones, so explicit flags win.

use anyhow::{bail, Context, Result};

const COMMANDS: [&str; 7] = [
    "analyze",
    "exponent",
    "md-constant",
    "gain-region",
    "schedule",
    "simulate",
    "bound",
];

/// Parses config text into `(key, value)` pairs.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`", i + 1);
        };
        let k = k.trim().replace('_', "-");
        if k.is_empty() {
            bail!("config line {}: empty key", i + 1);
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

/// Rewrites argv, splicing in the flags of any `--config` file.
pub fn expand(argv: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    let prog = it.next().unwrap_or_else(|| "swstream".into());
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().context("--config needs a path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        let mut v = vec![prog];
        v.extend(rest);
        return Ok(v);
    };
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("cannot read config {path}"))?;
    let pairs = parse(&text)?;
    let file_cmd = pairs
        .iter()
        .find(|(k, _)| k == "command")
        .map(|(_, v)| v.clone());
    let user_cmd = rest.iter().position(|a| COMMANDS.contains(&a.as_str()));
    let cmd = match (user_cmd, file_cmd) {
        (Some(i), _) => rest.remove(i),
        (None, Some(c)) => c,
        (None, None) => bail!("no subcommand on the command line or in {path}"),
    };
    let mut v = vec![prog, cmd];
    for (k, val) in pairs.into_iter().filter(|(k, _)| k != "command") {
        match val.as_str() {
            "true" => v.push(format!("--{k}")),
            "false" => {}
            _ => {
                v.push(format!("--{k}"));
                v.push(val);
            }
        }
    }
    v.extend(rest);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let p = parse("# recipe\ncommand = gain-region\nsource = zchannel  # family\nxi_t = 0.3\n")
            .unwrap();
        assert_eq!(
            p,
            vec![
                ("command".into(), "gain-region".into()),
                ("source".into(), "zchannel".into()),
                ("xi-t".into(), "0.3".into()),
            ]
        );
        assert!(parse("novalue\n").is_err());
    }

    #[test]
    fn user_flags_come_last() {
        let dir = std::env::temp_dir().join(format!("swstream-cfg-{}", std::process::id()));
        std::fs::write(&dir, "command = schedule\npsi = 8\nomega = 3\n").unwrap();
        let argv = ["swstream", "--config", dir.to_str().unwrap(), "--psi", "9"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let v = expand(argv).unwrap();
        assert_eq!(
            v,
            ["swstream", "schedule", "--psi", "8", "--omega", "3", "--psi", "9"]
        );
        std::fs::remove_file(&dir).unwrap();
    }
}
