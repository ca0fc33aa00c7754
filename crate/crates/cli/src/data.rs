//! Input discovery and loading. Everything a command will touch is located
//! up front so that a bad run fails before any computation.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use trendcheck::{
    keyword_slug, load_keyword_set, parse_svi_csv, read_price_csv, stitch_windows, weekly_return,
    KeywordSet, StitchedSvi, WeeklySeries,
};

use crate::config::RunConfig;
use crate::error::CliError;

/// Where a search-volume series lives: one export, or a directory of
/// overlapping exports to stitch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SviSource {
    File(PathBuf),
    Windows(Vec<PathBuf>),
}

impl SviSource {
    pub fn locate(svi_dir: &Path, name: &str) -> Option<Self> {
        let slug = keyword_slug(name);
        let dir = svi_dir.join(&slug);
        if dir.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
                .ok()?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            files.sort();
            return (!files.is_empty()).then_some(Self::Windows(files));
        }
        let file = svi_dir.join(format!("{slug}.csv"));
        file.is_file().then_some(Self::File(file))
    }

    fn expected(svi_dir: &Path, name: &str) -> PathBuf {
        svi_dir.join(format!("{}.csv", keyword_slug(name)))
    }

    pub fn load(&self, name: &str, min_overlap: usize) -> Result<StitchedSvi, CliError> {
        let paths = match self {
            Self::File(p) => std::slice::from_ref(p),
            Self::Windows(ps) => ps.as_slice(),
        };
        let windows = paths
            .iter()
            .map(|p| {
                let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
                parse_svi_csv(name, &bytes).map_err(CliError::core(p.display().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        stitch_windows(&windows, min_overlap).map_err(CliError::core(format!("stitching {name:?}")))
    }
}

/// What a command needs from disk.
#[derive(Debug, Clone, Copy, Default)]
pub struct Needs {
    pub prices: bool,
    pub keywords: bool,
    pub asset_svi: bool,
}

/// Every input of a run, resolved and checked for existence.
#[derive(Debug, Clone)]
pub struct Plan {
    pub assets: Vec<(String, PathBuf)>,
    pub sets: Vec<KeywordSet>,
    pub keyword_svi: BTreeMap<String, SviSource>,
    pub asset_svi: BTreeMap<String, SviSource>,
}

/// Resolves all inputs, collecting every problem instead of stopping at
/// the first.
pub fn preflight(cfg: &RunConfig, needs: Needs) -> Result<Plan, Vec<CliError>> {
    let mut problems = cfg.validate();
    let mut plan = Plan {
        assets: Vec::new(),
        sets: Vec::new(),
        keyword_svi: BTreeMap::new(),
        asset_svi: BTreeMap::new(),
    };

    if needs.prices || needs.asset_svi {
        if cfg.universe.is_empty() {
            problems.push(CliError::Config("universe is empty".into()));
        }
        for asset in &cfg.universe {
            let path = cfg.price_dir.join(format!("{asset}.csv"));
            if !path.is_file() {
                problems.push(CliError::UnknownAsset {
                    asset: asset.clone(),
                    path,
                });
                continue;
            }
            if needs.asset_svi {
                match SviSource::locate(&cfg.svi_dir, asset) {
                    Some(src) => {
                        plan.asset_svi.insert(asset.clone(), src);
                    }
                    None => problems.push(CliError::Missing {
                        what: "search-volume data for asset",
                        path: SviSource::expected(&cfg.svi_dir, asset),
                    }),
                }
            }
            plan.assets.push((asset.clone(), path));
        }
    }

    if needs.keywords {
        if cfg.keyword_sets.is_empty() {
            problems.push(CliError::Config("no keyword sets configured".into()));
        }
        for name in &cfg.keyword_sets {
            match load_keyword_set(name) {
                Ok(set) => plan.sets.push(set),
                Err(e) => problems.push(CliError::core(format!("keyword set {name:?}"))(e)),
            }
        }
        for keyword in plan.sets.iter().flat_map(|s| &s.keywords) {
            if plan.keyword_svi.contains_key(keyword) {
                continue;
            }
            match SviSource::locate(&cfg.svi_dir, keyword) {
                Some(src) => {
                    plan.keyword_svi.insert(keyword.clone(), src);
                }
                None => problems.push(CliError::Missing {
                    what: "search-volume data for keyword",
                    path: SviSource::expected(&cfg.svi_dir, keyword),
                }),
            }
        }
    }

    if problems.is_empty() {
        Ok(plan)
    } else {
        Err(problems)
    }
}

/// Weekly holding-window returns of one asset, labelled by the asset name.
pub fn load_returns(cfg: &RunConfig, asset: &str, path: &Path) -> Result<WeeklySeries, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let prices = read_price_csv(asset, file).map_err(CliError::core(path.display().to_string()))?;
    let weekly = weekly_return(&prices, cfg.entry_day, cfg.exit_day)
        .map_err(CliError::core(format!("returns of {asset}")))?;
    Ok(weekly.series.with_id(asset))
}

pub fn load_all_returns(cfg: &RunConfig, plan: &Plan) -> Result<Vec<WeeklySeries>, CliError> {
    plan.assets
        .par_iter()
        .map(|(asset, path)| load_returns(cfg, asset, path))
        .collect()
}

/// Search-volume series of every keyword in `set`, in list order.
pub fn load_set(
    cfg: &RunConfig,
    plan: &Plan,
    set: &KeywordSet,
) -> Result<Vec<WeeklySeries>, CliError> {
    set.keywords
        .par_iter()
        .map(|k| {
            Ok(plan.keyword_svi[k]
                .load(k, cfg.min_overlap)?
                .series
                .with_id(k.as_str()))
        })
        .collect()
}
