//! Run configuration: flags override the JSON config file, which overrides
//! the defaults.

use std::path::Path;

use clap::{Args, ValueEnum};
use cwspin_core::{ModelParams, SpinQuantum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand. All optional so that unset flags fall
/// through to the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Twice the magnet spin, 1..=20 (2 is spin 1).
    #[arg(long = "l", value_name = "TWICE_L")]
    pub twice_l: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub j2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j4: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j6: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j8: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub temp: Option<f64>,
    /// System–apparatus coupling; needs --sector.
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<f64>,
    /// Tested eigenvalue s, e.g. 0, 1, -1/2 or 1.5.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_half_integer)]
    pub sector: Option<f64>,
    /// Penalty on the σ = 0 state (spin 1 only).
    #[arg(long, allow_hyphen_values = true)]
    pub h0: Option<f64>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid points per axis.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Random points for symcheck.
    #[arg(long)]
    pub samples: Option<usize>,
    /// JSON file with any of the fields of the echoed config.
    #[arg(long, value_name = "PATH")]
    pub config: Option<String>,
}

/// Everything a run depends on; echoed into every output header. The output
/// path is left out so the same run written to two places stays identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub twice_l: u32,
    pub j2: f64,
    pub j4: f64,
    pub j6: f64,
    pub j8: f64,
    pub temp: f64,
    pub g: f64,
    pub sector: Option<f64>,
    pub h0: f64,
    pub seed: u64,
    pub resolution: usize,
    pub samples: usize,
    pub format: Format,
    /// Sizes used by `oracle`.
    pub n_list: Vec<u32>,
    /// Moment indices spanned by a `landscape` grid (1-based).
    pub axes: [usize; 2],
    /// `landscape`: single line at m₁ = 0 instead of a grid.
    pub profile: bool,
}

/// Config-file form: every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    twice_l: Option<u32>,
    j2: Option<f64>,
    j4: Option<f64>,
    j6: Option<f64>,
    j8: Option<f64>,
    temp: Option<f64>,
    g: Option<f64>,
    sector: Option<f64>,
    h0: Option<f64>,
    seed: Option<u64>,
    resolution: Option<usize>,
    samples: Option<usize>,
    format: Option<Format>,
    n_list: Option<Vec<u32>>,
    axes: Option<[usize; 2]>,
    profile: Option<bool>,
}

impl RunConfig {
    pub fn defaults(format: Format) -> Self {
        Self {
            twice_l: 2,
            j2: 0.0,
            j4: 1.0,
            j6: 0.0,
            j8: 0.0,
            temp: 0.2,
            g: 0.0,
            sector: None,
            h0: 0.0,
            seed: 0,
            resolution: 201,
            samples: 1000,
            format,
            n_list: vec![50, 100, 200, 400],
            axes: [1, 2],
            profile: false,
        }
    }

    /// Layers the config file and then the flags over the defaults.
    pub fn resolve(
        args: &CommonArgs,
        default_format: Format,
        extra: impl FnOnce(&mut RunConfig),
    ) -> Result<(Self, Option<String>), CliError> {
        let mut cfg = Self::defaults(default_format);
        if let Some(path) = &args.config {
            cfg.apply_file(&read_file_config(Path::new(path))?);
        }
        macro_rules! take {
            ($($field:ident <- $flag:ident),*) => {
                $(if let Some(v) = args.$flag { cfg.$field = v; })*
            };
        }
        take!(twice_l <- twice_l, j2 <- j2, j4 <- j4, j6 <- j6, j8 <- j8, temp <- temp,
              g <- g, h0 <- h0, seed <- seed, resolution <- resolution, samples <- samples,
              format <- format);
        if args.sector.is_some() {
            cfg.sector = args.sector;
        }
        extra(&mut cfg);
        cfg.validate()?;
        Ok((cfg, args.out.clone()))
    }

    fn apply_file(&mut self, f: &FileConfig) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = f.$field.clone() { self.$field = v; })*
            };
        }
        take!(
            twice_l,
            j2,
            j4,
            j6,
            j8,
            temp,
            g,
            h0,
            seed,
            resolution,
            samples,
            format,
            n_list,
            axes,
            profile
        );
        if f.sector.is_some() {
            self.sector = f.sector;
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        self.spin()?;
        if self.g != 0.0 && self.sector.is_none() {
            return Err(CliError::Usage(
                "--g needs a tested eigenvalue --sector".into(),
            ));
        }
        if self.resolution < 2 {
            return Err(CliError::Usage("--resolution must be at least 2".into()));
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(CliError::Usage("n_list needs positive sizes".into()));
        }
        self.params()?.validate().map_err(CliError::from)
    }

    pub fn spin(&self) -> Result<SpinQuantum, CliError> {
        SpinQuantum::new(self.twice_l).map_err(CliError::from)
    }

    /// `2s` of the tested eigenvalue.
    pub fn twice_sector(&self) -> Option<i32> {
        self.sector.map(|s| (2.0 * s).round() as i32)
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let mut p = ModelParams::new(self.spin()?, self.j2, self.j4, self.temp)
            .with_multispin(self.j6, self.j8)
            .with_field(self.h0);
        if let Some(twice_s) = self.twice_sector() {
            p = p.with_coupling(self.g, twice_s);
        }
        Ok(p)
    }
}

fn read_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let file: FileConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
    if let Some(s) = file.sector {
        parse_half_integer(&s.to_string()).map_err(CliError::Usage)?;
    }
    Ok(file)
}

/// Accepts `1`, `-0.5` or `3/2`; rejects anything that is not a half-integer.
pub fn parse_half_integer(text: &str) -> Result<f64, String> {
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in {text}"))?;
            let den: f64 = den
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in {text}"))?;
            num / den
        }
        None => text
            .trim()
            .parse()
            .map_err(|_| format!("not a number: {text}"))?,
    };
    if !value.is_finite() || (2.0 * value - (2.0 * value).round()).abs() > 1e-9 {
        return Err(format!("{text} is not an integer or half-integer"));
    }
    Ok((2.0 * value).round() / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_integers() {
        assert_eq!(parse_half_integer("-1/2"), Ok(-0.5));
        assert_eq!(parse_half_integer("1.5"), Ok(1.5));
        assert_eq!(parse_half_integer("2"), Ok(2.0));
        assert!(parse_half_integer("0.3").is_err());
        assert!(parse_half_integer("x").is_err());
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = std::env::temp_dir().join(format!("cwspin-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.json");
        std::fs::write(&path, r#"{"j2": 0.5, "temp": 0.3, "n_list": [10, 20]}"#).unwrap();
        let args = CommonArgs {
            temp: Some(0.25),
            config: Some(path.to_string_lossy().into_owned()),
            ..Default::default()
        };
        let (cfg, _) = RunConfig::resolve(&args, Format::Json, |_| {}).unwrap();
        assert_eq!(cfg.temp, 0.25);
        assert_eq!(cfg.j2, 0.5);
        assert_eq!(cfg.n_list, vec![10, 20]);
        assert_eq!(cfg.j4, 1.0);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let dir = std::env::temp_dir().join(format!("cwspin-bad-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.json");
        std::fs::write(&path, r#"{"jj": 1}"#).unwrap();
        let args = CommonArgs {
            config: Some(path.to_string_lossy().into_owned()),
            ..Default::default()
        };
        assert!(matches!(
            RunConfig::resolve(&args, Format::Json, |_| {}),
            Err(CliError::Usage(_))
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn coupling_without_sector_is_a_usage_error() {
        let args = CommonArgs {
            g: Some(0.1),
            ..Default::default()
        };
        assert!(matches!(
            RunConfig::resolve(&args, Format::Json, |_| {}),
            Err(CliError::Usage(_))
        ));
    }
}
