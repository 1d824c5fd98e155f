//! Subcommand bodies. Each returns a [`Failure`] on the first error.

use std::path::Path;

use emtask_core::dataset::{pearson_matrix, Dataset, DedupePolicy, FeatureRow, FeatureTable, PropertyRegistry};
use emtask_core::descriptors::{featurize as featurize_graph, DescriptorError, FeatureSchema};
use emtask_core::eval::{prepare, run_protocol_on_table, write_reports, ModelFamily, ProtocolConfig};
use emtask_core::forest::{fit_rows, forest_grid_search, ForestGrid};
use emtask_core::molgraph::parse_smiles;
use emtask_core::mtnn::{fit_mtnn, grid_search, ChannelPrediction, NnGrid};
use emtask_core::persist::{load_model, save_forest, save_mtnn, ForestBundle, MtnnBundle, SavedModel};
use emtask_core::rng::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Failure;
use crate::manifest::{digest_file, Clock, InputFile, RunManifest};
use crate::{DataArgs, Dedupe, Family, FitArgs};

/// Grid file: `{"nn": {...}, "forest": {...}}`, either key optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    #[serde(default)]
    pub nn: NnGrid,
    #[serde(default)]
    pub forest: ForestGrid,
}

fn load_grid(path: Option<&Path>) -> Result<GridFile, Failure> {
    let Some(path) = path else {
        return Ok(GridFile::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::new("InvalidGrid", format!("{}: {e}", path.display())))
}

fn load_registry(args: &DataArgs) -> Result<(PropertyRegistry, Option<InputFile>), Failure> {
    match &args.registry {
        None => Ok((PropertyRegistry::default_registry(), None)),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            Ok((PropertyRegistry::from_json(&text)?, Some(digest_file(path)?)))
        }
    }
}

struct Loaded {
    /// Full dataset, before any subset.
    dataset: Dataset,
    data_file: InputFile,
    registry_file: Option<InputFile>,
}

fn load(args: &DataArgs) -> Result<Loaded, Failure> {
    let (registry, registry_file) = load_registry(args)?;
    let dedupe = match args.dedupe {
        Dedupe::Error => DedupePolicy::Reject,
        Dedupe::Mean => DedupePolicy::Mean,
    };
    let dataset = Dataset::load_records(&args.data, &registry, dedupe)?;
    Ok(Loaded {
        dataset,
        data_file: digest_file(&args.data)?,
        registry_file,
    })
}

fn restricted(loaded: &Loaded, args: &DataArgs) -> Result<Dataset, Failure> {
    match args.subset.0 {
        Some(id) => Ok(loaded.dataset.subset(id)?),
        None => Ok(loaded.dataset.clone()),
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}

fn write_file(path: &Path, body: &str) -> Result<(), Failure> {
    std::fs::write(path, body).map_err(|e| Failure::io(path, e))
}

fn schema_value(schema: &FeatureSchema) -> serde_json::Value {
    serde_json::from_str(&schema.to_manifest_json()).expect("schema manifest is JSON")
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn featurize(args: &DataArgs, density: bool, schema_path: Option<&Path>, out: &Path) -> Result<(), Failure> {
    let loaded = load(args)?;
    let data = restricted(&loaded, args)?;
    let schema = match schema_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            let schema = FeatureSchema::from_manifest_json(&text)?;
            if schema.include_density != density {
                return Err(Failure::new(
                    "DensityModeMismatch",
                    format!(
                        "schema {} density but --{}density was requested",
                        if schema.include_density { "includes" } else { "excludes" },
                        if density { "" } else { "no-" }
                    ),
                ));
            }
            schema
        }
        None => FeatureSchema::from_graphs(data.materials().iter().map(|m| &m.graph), density),
    };
    let table = FeatureTable::build(&data, &schema)?;
    let mut seen = std::collections::BTreeSet::new();
    let rows = table
        .rows
        .iter()
        .filter(|r| seen.insert(r.material.as_str()))
        .map(|r| {
            std::iter::once(r.material.clone())
                .chain(r.features.iter().map(|v| v.to_string()))
                .collect::<Vec<_>>()
        });
    let mut header = vec!["material_id"];
    header.extend(schema.names.iter().map(String::as_str));
    create_dir(out)?;
    write_file(&out.join("features.csv"), &csv_text(&header, rows))?;
    write_file(&out.join("schema.json"), &(schema.to_manifest_json() + "\n"))
}

pub fn correlate(args: &DataArgs, out: &Path) -> Result<(), Failure> {
    let loaded = load(args)?;
    let data = restricted(&loaded, args)?;
    let m = pearson_matrix(&data);
    create_dir(out)?;
    write_file(&out.join("correlation_r.csv"), &m.r_csv())?;
    write_file(&out.join("correlation_overlap.csv"), &m.overlap_csv())
}

/// Featurized training rows for one fit command.
struct FitData {
    loaded: Loaded,
    registry: PropertyRegistry,
    schema: FeatureSchema,
    table: FeatureTable,
    /// Registry index for single-task families.
    channel: Option<usize>,
}

impl FitData {
    fn rows(&self) -> Vec<&FeatureRow> {
        self.table
            .rows
            .iter()
            .filter(|r| self.channel.is_none_or(|c| r.channel == c))
            .collect()
    }
}

fn fit_data(args: &FitArgs) -> Result<FitData, Failure> {
    let loaded = load(&args.data)?;
    let data = restricted(&loaded, &args.data)?;
    let schema = FeatureSchema::from_graphs(data.materials().iter().map(|m| &m.graph), args.density.density);
    let table = FeatureTable::build(&data, &schema)?;
    let channel = match (args.family, &args.channel) {
        (Family::MtNn, None) => None,
        (Family::MtNn, Some(_)) => {
            return Err(Failure::new("InvalidArgument", "--channel applies to single-task families only"))
        }
        (_, Some(key)) => Some(
            data.registry()
                .index_of_key(key)
                .ok_or_else(|| Failure::new("UnknownChannel", format!("channel {key} is not in the selected subset")))?,
        ),
        (_, None) => return Err(Failure::new("InvalidArgument", "single-task families need --channel")),
    };
    let fd = FitData {
        registry: data.registry().clone(),
        loaded,
        schema,
        table,
        channel,
    };
    if fd.rows().is_empty() {
        return Err(Failure::new("EmptyData", "no records to fit"));
    }
    Ok(fd)
}

#[derive(Serialize)]
struct Winner<C: Serialize> {
    best_index: usize,
    score: Option<f64>,
    cell: C,
}

/// Grid search result for either family: CSV, winner JSON, best cell.
enum Search {
    Nn(emtask_core::mtnn::GridResult),
    Forest(emtask_core::forest::ForestGridResult),
}

impl Search {
    fn csv(&self) -> String {
        match self {
            Search::Nn(r) => r.to_csv(),
            Search::Forest(r) => r.to_csv(),
        }
    }

    fn winner_json(&self) -> String {
        let text = match self {
            Search::Nn(r) => serde_json::to_string_pretty(&Winner {
                best_index: r.best_index,
                score: r.scores[r.best_index],
                cell: r.best(),
            }),
            Search::Forest(r) => serde_json::to_string_pretty(&Winner {
                best_index: r.best_index,
                score: r.scores[r.best_index],
                cell: r.best(),
            }),
        };
        text.expect("winner serializes") + "\n"
    }
}

fn search(args: &FitArgs, fd: &FitData, grid: &GridFile) -> Result<Search, Failure> {
    let rows = fd.rows();
    Ok(match args.family {
        Family::StRf => Search::Forest(forest_grid_search(&grid.forest, &rows, args.folds, args.seed)?),
        family => Search::Nn(grid_search(
            &grid.nn,
            &rows,
            &fd.table.channels,
            family == Family::MtNn,
            args.folds,
            args.seed,
        )?),
    })
}

fn fit_manifest(command: &str, args: &FitArgs, fd: &FitData, grid: &GridFile, clock: &Clock) -> RunManifest {
    RunManifest {
        command: command.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: serde_json::json!({
            "family": format!("{:?}", args.family),
            "channel": args.channel,
            "subset": args.data.subset.0,
            "include_density": args.density.density,
            "dedupe": format!("{:?}", args.data.dedupe),
            "inner_folds": args.folds,
            "grid": grid,
        }),
        seeds: vec![args.seed],
        dataset: InputFile {
            path: fd.loaded.data_file.path.clone(),
            sha256: fd.loaded.data_file.sha256.clone(),
        },
        registry: fd.loaded.registry_file.as_ref().map(|f| InputFile {
            path: f.path.clone(),
            sha256: f.sha256.clone(),
        }),
        schemas: vec![schema_value(&fd.schema)],
        started_unix_seconds: clock.unix(),
        wall_clock_seconds: clock.elapsed(),
    }
}

pub fn tune(args: &FitArgs) -> Result<(), Failure> {
    let clock = Clock::start();
    let grid = load_grid(args.grid.as_deref())?;
    let fd = fit_data(args)?;
    let result = search(args, &fd, &grid)?;
    create_dir(&args.out)?;
    write_file(&args.out.join("grid.csv"), &result.csv())?;
    write_file(&args.out.join("winner.json"), &result.winner_json())?;
    fit_manifest("tune", args, &fd, &grid, &clock).write(&args.out)
}

pub fn train(args: &FitArgs) -> Result<(), Failure> {
    let clock = Clock::start();
    let grid = load_grid(args.grid.as_deref())?;
    let fd = fit_data(args)?;
    let result = search(args, &fd, &grid)?;
    let rows = fd.rows();
    let refit = derive_seed(args.seed, u64::MAX);
    create_dir(&args.out)?;
    match &result {
        Search::Nn(r) => {
            let model = fit_mtnn(
                &rows,
                &fd.table.channels,
                args.family == Family::MtNn,
                r.best(),
                r.max_epochs,
                r.patience,
                refit,
            )?;
            let bundle = MtnnBundle {
                model,
                schema: fd.schema.clone(),
                registry: fd.registry.clone(),
            };
            save_mtnn(&args.out.join("model.emmt"), &bundle)?;
        }
        Search::Forest(r) => {
            let bundle = ForestBundle {
                forest: fit_rows(&rows, r.best(), refit)?,
                channel: fd.channel.expect("forest is single-task"),
                schema: fd.schema.clone(),
                registry: fd.registry.clone(),
            };
            save_forest(&args.out.join("model.emrf"), &bundle)?;
        }
    }
    write_file(&args.out.join("grid.csv"), &result.csv())?;
    fit_manifest("train", args, &fd, &grid, &clock).write(&args.out)
}

pub struct EvaluateArgs<'a> {
    pub data: &'a DataArgs,
    /// Density modes in run order.
    pub modes: Vec<bool>,
    pub models: Vec<Family>,
    pub seeds: Vec<u64>,
    pub folds: usize,
    pub inner_folds: usize,
    pub grid: Option<&'a Path>,
    pub out: &'a Path,
}

fn model_family(f: Family) -> ModelFamily {
    match f {
        Family::StRf => ModelFamily::StRf,
        Family::StNn => ModelFamily::StNn,
        Family::MtNn => ModelFamily::MtNn,
    }
}

/// Runs every (density mode, family) pair. Reports are ordered by mode as
/// given, then family as given with repeats removed.
pub fn evaluate(args: &EvaluateArgs) -> Result<(), Failure> {
    let clock = Clock::start();
    let grid = load_grid(args.grid)?;
    let loaded = load(args.data)?;
    let mut families: Vec<Family> = Vec::new();
    for f in &args.models {
        if !families.contains(f) {
            families.push(*f);
        }
    }
    let mut configs = Vec::new();
    let mut reports = Vec::new();
    let mut schemas = Vec::new();
    for &density in &args.modes {
        let base = ProtocolConfig {
            seeds: args.seeds.clone(),
            k: args.folds,
            inner_k: args.inner_folds,
            nn_grid: grid.nn.clone(),
            forest_grid: grid.forest.clone(),
            ..ProtocolConfig::new(ModelFamily::MtNn, args.data.subset.0, density)
        };
        let (_, schema, table) = prepare(&loaded.dataset, &base)?;
        schemas.push(schema_value(&schema));
        for &f in &families {
            let cfg = ProtocolConfig {
                family: model_family(f),
                ..base.clone()
            };
            reports.push(run_protocol_on_table(&table, &cfg)?);
            configs.push(cfg);
        }
    }
    write_reports(&reports, args.out)?;
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    write_file(&args.out.join("reports.json"), &(json + "\n"))?;
    let mut seeds = args.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    RunManifest {
        command: "evaluate".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: serde_json::json!({
            "dedupe": format!("{:?}", args.data.dedupe),
            "protocols": configs,
        }),
        seeds,
        dataset: loaded.data_file,
        registry: loaded.registry_file,
        schemas,
        started_unix_seconds: clock.unix(),
        wall_clock_seconds: clock.elapsed(),
    }
    .write(args.out)
}

/// Predictions for one molecule in raw channel units.
fn predict_one(model: &SavedModel, smiles: &str, density: Option<f64>) -> Result<Vec<ChannelPrediction>, Failure> {
    let graph = parse_smiles(smiles)?;
    let schema = model.schema();
    if schema.include_density && density.is_none() {
        return Err(DescriptorError::MissingDensity.into());
    }
    let x = featurize_graph(&graph, schema, density)?.values;
    match model {
        SavedModel::Mtnn(b) => Ok(b.model.predict_matrix(&x)?),
        SavedModel::Forest(b) => {
            let def = &b.registry.channels()[b.channel];
            let t = b.forest.predict(&x)?;
            Ok(vec![ChannelPrediction {
                channel: def.key(),
                label: def.label(),
                unit: def.unit.clone(),
                value: def.inverse(t),
            }])
        }
    }
}

fn emit(out: Option<&Path>, body: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_file(path, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

pub fn predict(model_path: &Path, smiles: &[String], density: &[f64], out: Option<&Path>) -> Result<(), Failure> {
    let model = load_model(model_path)?;
    if density.len() > 1 && density.len() != smiles.len() {
        return Err(Failure::new(
            "InvalidArgument",
            format!("{} densities for {} molecules", density.len(), smiles.len()),
        ));
    }
    let mut rows = Vec::new();
    for (i, s) in smiles.iter().enumerate() {
        let d = density.get(i).or(density.first()).copied();
        let preds = predict_one(&model, s, d).map_err(|f| Failure::new(&f.code, format!("{s}: {}", f.message)))?;
        for p in preds {
            rows.push(vec![s.clone(), p.channel, p.label, p.unit, p.value.to_string()]);
        }
    }
    emit(out, &csv_text(&["smiles", "channel", "label", "unit", "value"], rows))
}

#[derive(Debug, Deserialize)]
struct Candidate {
    material_id: String,
    smiles: String,
    #[serde(default)]
    density: Option<f64>,
}

pub fn screen(model_path: &Path, candidates: &Path, by: &str, out: Option<&Path>) -> Result<(), Failure> {
    let model = load_model(model_path)?;
    let offered: Vec<String> = match &model {
        SavedModel::Mtnn(b) => b.model.output_channels().iter().map(|&c| b.registry.channels()[c].key()).collect(),
        SavedModel::Forest(b) => vec![b.registry.channels()[b.channel].key()],
    };
    if !offered.iter().any(|k| k == by) {
        return Err(Failure::new(
            "UnknownChannel",
            format!("model does not predict {by}; available: {}", offered.join(", ")),
        ));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(candidates)
        .map_err(|e| Failure::new("IoError", format!("{}: {e}", candidates.display())))?;
    let list = reader
        .deserialize::<Candidate>()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Failure::new("ParseFailure", format!("row {}: {e}", i + 2)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let scored = list
        .par_iter()
        .map(|c| {
            let preds = predict_one(&model, &c.smiles, c.density)
                .map_err(|f| Failure::new(&f.code, format!("{}: {}", c.material_id, f.message)))?;
            let p = preds.into_iter().find(|p| p.channel == by).expect("offered channel");
            Ok((c, p))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let mut ranked = scored;
    ranked.sort_by(|a, b| a.0.material_id.cmp(&b.0.material_id));
    ranked.sort_by(|a, b| b.1.value.total_cmp(&a.1.value));
    let rows = ranked.iter().enumerate().map(|(i, (c, p))| {
        vec![
            (i + 1).to_string(),
            c.material_id.clone(),
            c.smiles.clone(),
            p.value.to_string(),
            p.unit.clone(),
        ]
    });
    emit(out, &csv_text(&["rank", "material_id", "smiles", by, "unit"], rows))
}
